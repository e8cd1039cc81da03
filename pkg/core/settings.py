"""
Simulation Settings - Tolerances, caps and worker configuration
"""

import json
import logging

import psutil


def _default_jobs():
    return min(4, psutil.cpu_count() or 1)


DEFAULTS = {
    # Consistency checks
    'consistency_tol': 1e-10,
    'hermiticity_tol': 1e-12,

    # Spectrum analysis
    'degeneracy_rel_tol': 1e-9,
    'gap_threshold': 1e-6,

    # Adiabatic runs
    'max_leakage': 1e-2,
    'wilson_points': 2000,

    # Dense-matrix caps
    'max_chain_sites': 14,
    'max_dense_states': 4096,

    # Performance
    'jobs': _default_jobs(),

    # Advanced
    'verbose_logging': False,
}

FLOAT_KEYS = ['consistency_tol', 'hermiticity_tol', 'degeneracy_rel_tol',
              'gap_threshold', 'max_leakage']
INT_KEYS = ['wilson_points', 'max_chain_sites', 'max_dense_states', 'jobs']
BOOL_KEYS = ['verbose_logging']


class SimulationSettings:
    """Simulation settings manager."""

    def __init__(self, overrides=None):
        self.logger = logging.getLogger(__name__)
        self.defaults = dict(DEFAULTS)
        self.values = {}
        for key, value in (overrides or {}).items():
            self.set(key, value)

    def get(self, key, default=None):
        """Get a setting value."""
        if default is None:
            default = self.defaults.get(key)

        value = self.values.get(key, default)

        # Convert loosely typed values (JSON, env) to proper types
        if key in FLOAT_KEYS:
            try:
                return float(value)
            except (ValueError, TypeError):
                return self.defaults.get(key, 0.0)

        elif key in INT_KEYS:
            try:
                return int(value)
            except (ValueError, TypeError):
                return self.defaults.get(key, 0)

        elif key in BOOL_KEYS:
            if isinstance(value, str):
                return value.lower() in ('true', '1', 'yes')
            return bool(value)

        return value

    def set(self, key, value):
        """Set a setting value."""
        if key not in self.defaults:
            self.logger.warning(f"Ignoring unknown setting {key}")
            return
        self.values[key] = value
        self.logger.debug(f"Setting {key} = {value}")

    def clear(self):
        """Clear all overrides."""
        self.values.clear()
        self.logger.info("All settings reset to defaults")

    def as_dict(self):
        """Resolved settings, overrides applied."""
        return {key: self.get(key) for key in self.defaults}

    def export_settings(self, filename):
        """Export settings to JSON file."""
        try:
            with open(filename, 'w', encoding='utf-8') as f:
                json.dump(self.as_dict(), f, indent=2, sort_keys=True)

            self.logger.info(f"Settings exported to {filename}")
            return True

        except OSError as e:
            self.logger.error(f"Failed to export settings: {e}")
            return False

    def import_settings(self, filename):
        """Import settings from JSON file."""
        try:
            with open(filename, 'r', encoding='utf-8') as f:
                settings_dict = json.load(f)

            for key, value in settings_dict.items():
                if key in self.defaults:
                    self.set(key, value)

            self.logger.info(f"Settings imported from {filename}")
            return True

        except (OSError, ValueError) as e:
            self.logger.error(f"Failed to import settings: {e}")
            return False
