"""
T-Junction - Coupling Hamiltonian and ground-space analysis
"""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import linalg

from .anyon_algebra import fusion_channels, is_abelian
from .errors import ConfigError, InvalidChannel
from .fusion_space import Chirality, Pair, pair_projector
from .settings import DEFAULTS
from .sweep_worker import SweepWorker

logger = logging.getLogger(__name__)


@dataclass
class CouplingConfig:
    """Pair couplings eps[(pair, channel)] and the favored Abelian channel."""

    model: object
    favored: int
    eps: dict = field(default_factory=dict)

    def __post_init__(self):
        self.favored = self.model.label_index(self.favored)
        if not is_abelian(self.model, self.favored):
            raise ConfigError(
                f"favored channel {self.model.label_name(self.favored)} is not Abelian")
        normalized = {}
        for (pair, channel), value in self.eps.items():
            value = float(value)
            if not math.isfinite(value):
                raise ConfigError(f"coupling for pair {pair} is not finite")
            normalized[(Pair.parse(pair), self.model.label_index(channel))] = value
        self.eps = normalized

    @classmethod
    def favored_only(cls, model, a, eps_L=0.0, eps_R=0.0, eps_B=0.0):
        a = model.label_index(a)
        return cls(model, a, {(Pair.L, a): eps_L, (Pair.R, a): eps_R, (Pair.B, a): eps_B})

    def coupling(self, pair, channel=None):
        channel = self.favored if channel is None else channel
        return self.eps.get((Pair.parse(pair), channel), 0.0)

    def scaled(self, s_L, s_R, s_B):
        """Copy with every coupling of pair K multiplied by s_K."""
        factors = {Pair.L: s_L, Pair.R: s_R, Pair.B: s_B}
        eps = {(pair, ch): factors[pair] * value for (pair, ch), value in self.eps.items()}
        return CouplingConfig(self.model, self.favored, eps)


@dataclass
class SpectrumReport:
    """Eigen-decomposition of a Hamiltonian with its ground-space structure."""

    eigenvalues: np.ndarray
    ground_energy: float
    ground_degeneracy: int
    ground_basis: np.ndarray
    gap: float

    def to_dict(self):
        return {
            'eigenvalues': [float(x) for x in self.eigenvalues],
            'ground_energy': float(self.ground_energy),
            'ground_degeneracy': int(self.ground_degeneracy),
            'gap': float(self.gap),
        }


def build_hamiltonian(b, c, chirality=Chirality.Plus):
    """H = - sum over pairs and channels of eps * projector."""
    H = b.zeros()
    allowed = fusion_channels(b.model, b.t, b.t)
    for (pair, channel), value in sorted(c.eps.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
        if channel not in allowed:
            raise InvalidChannel(
                f"{b.model.label_name(channel)} is not a channel of the pair {pair.name}")
        if value == 0.0:
            continue
        H = H - value * pair_projector(b, pair, channel, chirality)
    return H


def cluster_ground(eigenvalues, rel_tol):
    """Size of the eigenvalue cluster at the minimum and the gap above it."""
    span = eigenvalues[-1] - eigenvalues[0]
    tol = max(rel_tol * span, 1e-13)
    degeneracy = int(np.count_nonzero(eigenvalues - eigenvalues[0] <= tol))
    gap = eigenvalues[degeneracy] - eigenvalues[0] if degeneracy < len(eigenvalues) else 0.0
    return degeneracy, float(gap)


def ground_space(H, rel_tol=None, hermiticity_tol=None):
    """Dense diagonalization with degeneracy detection at rel_tol of the spectral span."""
    rel_tol = DEFAULTS['degeneracy_rel_tol'] if rel_tol is None else rel_tol
    hermiticity_tol = DEFAULTS['hermiticity_tol'] if hermiticity_tol is None else hermiticity_tol
    H.require_hermitian(hermiticity_tol)

    eigenvalues, vectors = linalg.eigh(H.entries)
    degeneracy, gap = cluster_ground(eigenvalues, rel_tol)
    return SpectrumReport(
        eigenvalues=eigenvalues,
        ground_energy=float(eigenvalues[0]),
        ground_degeneracy=degeneracy,
        ground_basis=vectors[:, :degeneracy],
        gap=gap,
    )


def degeneracy_profile(b, base_config, grid, chirality=Chirality.Plus, rel_tol=None, jobs=None):
    """Ground degeneracy over the (s_L, s_R, s_B) scaling grid on [0, 1]^3."""
    if grid < 2:
        raise ConfigError(f"grid must be at least 2, got {grid}")
    values = np.linspace(0.0, 1.0, grid)
    points = list(itertools.product(values, repeat=3))

    def evaluate(point):
        s_L, s_R, s_B = point
        H = build_hamiltonian(b, base_config.scaled(s_L, s_R, s_B), chirality)
        report = ground_space(H, rel_tol)
        return {
            's_L': float(s_L), 's_R': float(s_R), 's_B': float(s_B),
            'ground_degeneracy': report.ground_degeneracy,
            'ground_energy': report.ground_energy,
            'gap': report.gap,
        }

    rows = SweepWorker(points, evaluate, jobs=jobs).run()
    logger.info(f"Degeneracy profile finished on a {grid}^3 grid")
    return pd.DataFrame(rows)
