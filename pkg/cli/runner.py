"""
Command Runner - Dispatches run configs to the simulation library and writes results
"""

import logging
import os
import time
from dataclasses import dataclass

from core import __version__
from core.adiabatic import (default_braid_schedule, diabatic_error_scan, evolution_holonomy,
                            spectrum_series, tjunction_path, wilson_line_holonomy)
from core.anyon_algebra import (ModelName, builtin_model, is_abelian, load_model, regauge_model,
                                verify_model)
from core.chains import build_layout, domain_wall_braid, expected_slope, splitting_scan
from core.errors import ConfigError, ConsistencyFailure
from core.fusion_space import Chirality, Pair, braid_generator, enumerate_basis
from core.settings import SimulationSettings
from core.tjunction import CouplingConfig, build_hamiltonian, degeneracy_profile, ground_space

from .config import DEFAULT_OUTPUT
from .utils import ensure_directory_exists, fit_slope, write_csv, write_json

RESULT_FILE = 'result.json'


@dataclass
class RunResult:
    """Everything written to result.json plus the console summary."""

    command: str
    config: dict
    result: dict
    wall_time_s: float
    version: str
    summary: str = ''

    def to_dict(self):
        return {
            'command': self.command,
            'config': self.config,
            'result': self.result,
            'wall_time_s': round(self.wall_time_s, 6),
            'version': self.version,
        }


class BraidRunner:
    """Executes one RunConfig."""

    def __init__(self, config, output_dir=None):
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.output_dir = output_dir or config.output or DEFAULT_OUTPUT
        self.settings = SimulationSettings(config.settings)
        self.csv_files = []

    def run(self):
        """Run the command, write result.json and return the RunResult."""
        handlers = {
            'verify-model': self.run_verify_model,
            'spectrum': self.run_spectrum,
            'braid': self.run_braid,
            'sweep-time': self.run_sweep_time,
            'chain-scaling': self.run_chain_scaling,
            'chain-braid': self.run_chain_braid,
        }
        ensure_directory_exists(self.output_dir)
        self.logger.info(f"Running {self.config.command} on model {self.config.model}")

        start = time.perf_counter()
        payload, summary, failure = handlers[self.config.command]()
        if self.csv_files:
            payload['csv_files'] = sorted(self.csv_files)
        result = RunResult(
            command=self.config.command,
            config=self.config.to_dict(),
            result=payload,
            wall_time_s=time.perf_counter() - start,
            version=__version__,
            summary=summary,
        )
        path = os.path.join(self.output_dir, RESULT_FILE)
        write_json(path, result.to_dict())
        self.logger.info(f"Result written to {path}")

        if failure is not None:
            raise failure
        return result

    # Shared parameter handling

    def resolve_model(self):
        source = self.config.model
        exchange = self.config.param('z2_exchange', -1)
        try:
            member = ModelName.parse(source)
        except ValueError:
            member = None
        if exchange != -1 and member is not ModelName.AbelianZ2:
            raise ConfigError("parameters.z2_exchange: only valid for the AbelianZ2 model")
        model = load_model(source) if member is None else builtin_model(member, exchange)
        if self.config.param('regauge', False):
            model = regauge_model(model, self.config.seed)
        return model

    def label(self, model, key, default):
        name = self.config.param(key, default)
        try:
            return model.label_index(name)
        except ValueError as e:
            raise ConfigError(f"parameters.{key}: {e}") from None

    def default_charge(self, model):
        for index in range(1, model.size):
            if not is_abelian(model, index):
                return model.label_name(index)
        return model.label_name(model.size - 1)

    def charges(self, model):
        t = self.label(model, 't', self.default_charge(model))
        channel = self.label(model, 'channel', model.label_name(0))
        return t, channel

    def chirality(self):
        return Chirality.parse(self.config.param('chirality', 'Plus'))

    def save_table(self, name, table):
        path = os.path.join(self.output_dir, name)
        write_csv(path, table)
        self.csv_files.append(name)
        return path

    # Commands

    def run_verify_model(self):
        model = self.resolve_model()
        tol = self.config.param('tol', self.settings.get('consistency_tol'))
        report = verify_model(model, tol)
        payload = {'model': model.name, 'labels': list(model.labels), **report.to_dict()}
        residuals = ' '.join(f"{k}={v:.2e}" for k, v in report.residuals.items())
        summary = f"verify-model passed={report.passed} {residuals}"
        failure = None
        if not report.passed:
            worst = {k: report.residuals[k] for k in report.failed_checks()}
            failure = ConsistencyFailure(f"model {model.name} failed checks {worst}")
        return payload, summary, failure

    def run_spectrum(self):
        model = self.resolve_model()
        t, a = self.charges(model)
        chirality = self.chirality()
        basis = enumerate_basis(model, t)
        coupling = CouplingConfig.favored_only(
            model, a,
            eps_L=self.config.param('eps_L', 0.0),
            eps_R=self.config.param('eps_R', 0.0),
            eps_B=self.config.param('eps_B', 1.0),
        )
        for extra in self.config.param('extra_couplings', []):
            channel = self._label_name(model, extra['channel'])
            coupling.eps[(Pair.parse(extra['pair']), channel)] = float(extra['eps'])

        rel_tol = self.config.param('rel_tol', self.settings.get('degeneracy_rel_tol'))
        H = build_hamiltonian(basis, coupling, chirality)
        report = ground_space(H, rel_tol, self.settings.get('hermiticity_tol'))
        payload = {
            'model': model.name,
            'states': [basis.describe(s) for s in basis.states],
            'max_offblock': H.max_offblock(),
            **report.to_dict(),
        }

        grid = self.config.param('grid')
        if grid:
            table = degeneracy_profile(basis, coupling, grid, chirality, rel_tol,
                                       jobs=self.settings.get('jobs'))
            self.save_table('degeneracy_profile.csv', table)

        summary = (f"spectrum degeneracy={report.ground_degeneracy} "
                   f"ground={report.ground_energy:.6g} gap={report.gap:.6g}")
        return payload, summary, None

    def _label_name(self, model, name):
        try:
            return model.label_index(name)
        except ValueError as e:
            raise ConfigError(f"parameters.extra_couplings: {e}") from None

    def run_braid(self):
        model = self.resolve_model()
        t, a = self.charges(model)
        chirality = self.chirality()
        basis = enumerate_basis(model, t)

        T = self.config.param('T', 200.0)
        schedule = default_braid_schedule(
            self.config.param('eps_max', 1.0), T,
            floor=self.config.param('floor', 0.0),
            ramp=self.config.param('ramp', 'Cosine'),
            channel=a,
        )
        reverse = self.config.param('reverse', False)
        if reverse:
            schedule = schedule.reversed()
        target = braid_generator(basis, chirality.flipped if reverse else chirality)

        method = self.config.param('method', 'wilson')
        if method == 'wilson':
            holonomy = wilson_line_holonomy(
                basis, schedule, self.config.param('points', self.settings.get('wilson_points')),
                chirality, target,
                rel_tol=self.settings.get('degeneracy_rel_tol'),
                gap_threshold=self.settings.get('gap_threshold'),
            )
        else:
            path = tjunction_path(basis, schedule, chirality)
            holonomy = evolution_holonomy(path, self.config.param('dt', T / 1000.0), target,
                                          max_leakage=self.settings.get('max_leakage'))

        series = self.config.param('series')
        if series:
            self.save_table('spectrum_series.csv',
                            spectrum_series(tjunction_path(basis, schedule, chirality), series))

        payload = {'model': model.name, 'schedule': schedule.to_dict(), **holonomy.to_dict()}
        summary = (f"braid fidelity={holonomy.fidelity:.6f} phase={holonomy.global_phase:.4f} "
                   f"min_gap={holonomy.min_gap:.2f}")
        return payload, summary, None

    def run_sweep_time(self):
        model = self.resolve_model()
        t, a = self.charges(model)
        basis = enumerate_basis(model, t)
        table = diabatic_error_scan(
            basis, self.config.param('T_values'),
            self.config.param('dt_ratio', 1e-3),
            chirality=self.chirality(),
            eps_max=self.config.param('eps_max', 1.0),
            floor=self.config.param('floor', 0.0),
            ramp=self.config.param('ramp', 'Cosine'),
            channel=a,
            jobs=self.settings.get('jobs'),
        )
        self.save_table('sweep_time.csv', table)
        last = table.iloc[-1]
        summary = f"sweep-time points={len(table)} infidelity(T={last['T']:g})={last['infidelity']:.3e}"
        return {'model': model.name, 'rows': table}, summary, None

    def run_chain_scaling(self):
        model = self.resolve_model()
        t, a = self.charges(model)
        eps_min = self.config.param('eps_min', 0.1)
        eps_max = self.config.param('eps_max', 1.0)
        table = splitting_scan(model, t, a, eps_min, eps_max, self.config.param('N_values'),
                               chirality=self.chirality(), jobs=self.settings.get('jobs'),
                               max_sites=self.settings.get('max_chain_sites'),
                               max_states=self.settings.get('max_dense_states'))
        path = self.save_table('chain_scaling.csv', table)

        payload = {'model': model.name, 'rows': table}
        summary = f"chain-scaling points={len(table)}"
        if len(table) >= 2:
            slope, intercept, r2 = fit_slope(path, 'N', 'ln_splitting')
            payload.update({'slope': slope, 'intercept': intercept, 'r2': r2})
            summary = f"chain-scaling slope={slope:.4f} r2={r2:.4f}"
            try:
                expected = expected_slope(model, eps_min / eps_max)
                payload['expected_slope'] = expected
                summary += f" expected={expected:.4f}"
            except ConfigError:
                pass
        return payload, summary, None

    def run_chain_braid(self):
        model = self.resolve_model()
        t, a = self.charges(model)
        layout = build_layout(model, t, self.config.param('arm_lengths', [1, 1, 1]), a,
                              max_sites=self.settings.get('max_chain_sites'),
                              max_states=self.settings.get('max_dense_states'))
        T = self.config.param('T', 200.0)
        holonomy = domain_wall_braid(
            layout, T, self.config.param('dt', min(0.1, T / 100.0)),
            chirality=self.chirality(),
            eps_max=self.config.param('eps_max', 1.0),
            floor=self.config.param('floor', 0.0),
            ramp=self.config.param('ramp', 'Cosine'),
            method=self.config.param('method', 'evolution'),
            points=self.config.param('points', self.settings.get('wilson_points')),
            max_leakage=self.settings.get('max_leakage'),
        )
        payload = {'model': model.name, 'layout': layout.to_dict(), **holonomy.to_dict()}
        summary = (f"chain-braid fidelity={holonomy.fidelity:.6f} "
                   f"phase={holonomy.global_phase:.4f} splitting={holonomy.max_splitting:.2e}")
        return payload, summary, None


def run(config, output_dir=None):
    """Execute a RunConfig; raises library errors after result.json is written where possible."""
    return BraidRunner(config, output_dir).run()
