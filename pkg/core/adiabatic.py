"""
Adiabatic Engine - Coupling schedules, ground-space transport and real-time evolution

A schedule hands the dominant coupling from one key to the next in equal
steps. The T-junction braid uses keys (L, R, B); the chain module reuses the
same machinery with bonds as keys.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg

from .errors import (ConfigError, DegeneracyChange, ExcessLeakage, GapCollapse,
                     InvalidSchedule, StepTooLarge)
from .fusion_space import Chirality, OperatorMatrix, Pair, braid_generator, channel_vector, \
    pair_projector
from .settings import DEFAULTS
from .sweep_worker import SweepWorker
from .tjunction import cluster_ground

logger = logging.getLogger(__name__)

BRAID_SEGMENTS = ((Pair.B, Pair.L), (Pair.L, Pair.R), (Pair.R, Pair.B))
CHECKPOINT_TAGS = ('t0', 't1T', 't2T', 't3T')


class Ramp:
    """Ramp profiles p(s) on [0, 1] with p(0) = 0 and p(1) = 1."""

    Cosine = 'Cosine'
    Linear = 'Linear'

    @staticmethod
    def parse(value):
        for name in (Ramp.Cosine, Ramp.Linear):
            if str(value).lower() == name.lower():
                return name
        raise ConfigError(f"Unknown ramp '{value}'")

    @staticmethod
    def profile(ramp, s):
        if ramp == Ramp.Cosine:
            return 0.5 * (1.0 - math.cos(math.pi * s))
        return s


@dataclass(frozen=True)
class CouplingSchedule:
    """Piecewise coupling handoffs over equal steps of duration step_time.

    Each segment (off, on) ramps ``off`` from amplitude to floor while ``on``
    ramps from floor to amplitude. Keys outside the moving pair sit at the
    amplitude when on, at the floor otherwise. A segment with off == on keeps
    that key constant.
    """

    amplitude: float
    step_time: float
    floor: float = 0.0
    ramp: str = Ramp.Cosine
    keys: tuple = (Pair.L, Pair.R, Pair.B)
    initial_on: frozenset = frozenset({Pair.B})
    segments: tuple = BRAID_SEGMENTS
    channel: int = 0

    def __post_init__(self):
        if not (self.amplitude > 0 and math.isfinite(self.amplitude)):
            raise InvalidSchedule(f"amplitude must be positive, got {self.amplitude}")
        if not (self.step_time > 0 and math.isfinite(self.step_time)):
            raise InvalidSchedule(f"step time must be positive, got {self.step_time}")
        if self.floor < 0 or self.floor >= self.amplitude:
            raise InvalidSchedule(
                f"floor must satisfy 0 <= floor < amplitude, got {self.floor}")
        if not self.segments:
            raise InvalidSchedule("schedule needs at least one segment")
        on = set(self.initial_on)
        if not on:
            raise InvalidSchedule("at least one coupling must be on initially")
        for off, nxt in self.segments:
            if off not in self.keys or nxt not in self.keys:
                raise InvalidSchedule(f"segment ({off}, {nxt}) uses an unknown key")
            if off not in on:
                raise InvalidSchedule(f"segment ({off}, {nxt}) switches off a coupling that is off")
            on = (on - {off}) | {nxt}

    @property
    def total_time(self):
        return self.step_time * len(self.segments)

    def on_sets(self):
        """On-sets before each segment, followed by the final on-set."""
        sets = [frozenset(self.initial_on)]
        for off, nxt in self.segments:
            sets.append((sets[-1] - {off}) | {nxt})
        return sets

    def is_closed(self):
        return self.on_sets()[-1] == frozenset(self.initial_on)

    def couplings(self, t):
        """Coupling strength of every key at time t."""
        t = min(max(t, 0.0), self.total_time)
        j = min(int(t // self.step_time), len(self.segments) - 1)
        s = (t - j * self.step_time) / self.step_time
        p = Ramp.profile(self.ramp, s)
        on = self.on_sets()[j]
        off, nxt = self.segments[j]
        span = self.amplitude - self.floor

        values = {}
        for key in self.keys:
            if off != nxt and key == off:
                values[key] = self.amplitude - span * p
            elif off != nxt and key == nxt:
                values[key] = self.floor + span * p
            elif key in on:
                values[key] = self.amplitude
            else:
                values[key] = self.floor
        return values

    def reversed(self):
        """The same loop traversed backwards."""
        segments = tuple((nxt, off) for off, nxt in reversed(self.segments))
        return replace(self, initial_on=self.on_sets()[-1], segments=segments)

    def with_floor(self, floor):
        return replace(self, floor=floor)

    def braid_direction(self):
        """+1 for the default braid loop, -1 for its reverse, 0 otherwise."""
        if frozenset(self.initial_on) != frozenset({Pair.B}):
            return 0
        if tuple(self.segments) == BRAID_SEGMENTS:
            return 1
        if tuple(self.segments) == tuple((b, a) for a, b in reversed(BRAID_SEGMENTS)):
            return -1
        return 0

    def to_dict(self):
        return {
            'amplitude': self.amplitude,
            'step_time': self.step_time,
            'total_time': self.total_time,
            'floor': self.floor,
            'ramp': self.ramp,
            'channel': self.channel,
            'segments': [[_key_name(a), _key_name(b)] for a, b in self.segments],
        }


def _key_name(key):
    if isinstance(key, Pair):
        return key.name
    return '-'.join(str(x) for x in key) if isinstance(key, tuple) else str(key)


def default_braid_schedule(eps_max, T, floor=0.0, ramp=Ramp.Cosine, channel=0):
    """B -> L -> R -> B handoff on the favored channel."""
    return CouplingSchedule(amplitude=float(eps_max), step_time=float(T), floor=float(floor),
                            ramp=Ramp.parse(ramp), channel=channel)


def constant_schedule(eps_max, T, key=Pair.B, steps=3, channel=0):
    """Closed schedule that never moves: ``key`` stays on at eps_max."""
    return CouplingSchedule(amplitude=float(eps_max), step_time=float(T), floor=0.0,
                            initial_on=frozenset({key}), segments=((key, key),) * steps,
                            channel=channel)


@dataclass
class HolonomyResult:
    """Ground-space unitary of a closed path compared with a target braid."""

    unitary: np.ndarray
    per_step_phase_spread: Optional[float]
    min_gap: float
    discretization: int
    fidelity: float
    global_phase: float
    sector_phases: dict = field(default_factory=dict)
    max_splitting: float = 0.0
    leakage: Optional[float] = None
    method: str = 'wilson'

    def to_dict(self):
        return {
            'method': self.method,
            'fidelity': float(self.fidelity),
            'infidelity': float(1.0 - self.fidelity),
            'global_phase': float(self.global_phase),
            'min_gap': float(self.min_gap) if math.isfinite(self.min_gap) else None,
            'discretization': int(self.discretization),
            'per_step_phase_spread': (None if self.per_step_phase_spread is None
                                      else float(self.per_step_phase_spread)),
            'sector_phases': {k: float(v) for k, v in self.sector_phases.items()},
            'max_splitting': float(self.max_splitting),
            'leakage': None if self.leakage is None else float(self.leakage),
            'unitary': [[[float(z.real), float(z.imag)] for z in row] for row in self.unitary],
        }


def unitary_part(M):
    """Closest unitary to M (polar factor)."""
    u, _ = linalg.polar(M)
    return u


def _as_array(op):
    return op.entries if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)


def manifold_leakage(overlap):
    """1 - ||overlap||_F^2 / n for the (ground x states) overlap of n unit states."""
    overlap = np.asarray(overlap, dtype=complex)
    n = overlap.shape[1]
    return float(max(0.0, 1.0 - np.sum(np.abs(overlap) ** 2) / n))


def compare_to_target(U, basis_vectors, target):
    """Fidelity |tr(U^dag R)|/n and phase theta with U ~ e^{i theta} R on the given basis."""
    R = basis_vectors.conj().T @ _as_array(target) @ basis_vectors
    n = U.shape[0]
    overlap = np.trace(R.conj().T @ U)
    fidelity = min(abs(overlap) / n, 1.0)
    return float(fidelity), float(np.angle(overlap))


class HamiltonianPath:
    """H(t) = - sum_k eps_k(t) P_k, diagonalized sector by sector."""

    def __init__(self, basis, projectors, schedule):
        self.basis = basis
        self.projectors = {key: _as_array(P) for key, P in projectors.items()}
        self.schedule = schedule
        missing = set(schedule.keys) - set(self.projectors)
        if missing:
            raise InvalidSchedule(f"no projector for schedule keys {sorted(map(str, missing))}")
        self.sectors = list(basis.sector_slices().values())

    @property
    def dim(self):
        return self.basis.size

    def hamiltonian(self, t):
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for key, value in self.schedule.couplings(t).items():
            if value != 0.0:
                H -= value * self.projectors[key]
        return H

    def spectrum(self, t):
        """Ascending eigenvalues and eigenvectors, each eigenvector confined to one sector."""
        H = self.hamiltonian(t)
        values = np.empty(self.dim)
        vectors = np.zeros((self.dim, self.dim), dtype=complex)
        for sl in self.sectors:
            w, v = linalg.eigh(H[sl, sl])
            values[sl] = w
            vectors[sl, sl] = v
        order = np.argsort(values, kind='stable')
        return values[order], vectors[:, order]

    def manifold_size(self, rel_tol=None):
        """Ground multiplicity at t = 0 with the floor switched off."""
        rel_tol = DEFAULTS['degeneracy_rel_tol'] if rel_tol is None else rel_tol
        ideal = HamiltonianPath(self.basis, self.projectors, self.schedule.with_floor(0.0))
        values, _ = ideal.spectrum(0.0)
        return cluster_ground(values, rel_tol)[0]

    def step(self, states, t_mid, dt):
        """Apply exp(-i H(t_mid) dt); returns new states and dt * ||H||."""
        H = self.hamiltonian(t_mid)
        out = np.empty_like(states)
        norm = 0.0
        for sl in self.sectors:
            block = H[sl, sl]
            norm = max(norm, float(linalg.norm(block, 2)))
            out[sl] = linalg.expm(-1j * dt * block) @ states[sl]
        return out, dt * norm


def tjunction_path(b, schedule, chirality=Chirality.Plus):
    """Schedule over the three T-junction pairs on the schedule's channel."""
    projectors = {pair: pair_projector(b, pair, schedule.channel, chirality)
                  for pair in schedule.keys}
    return HamiltonianPath(b, projectors, schedule)


def _sector_labels(basis, vectors):
    charges = basis.total_charges()
    return [int(charges[np.argmax(np.abs(vectors[:, i]))]) for i in range(vectors.shape[1])]


def _sector_phases(basis, V0, U):
    labels = _sector_labels(basis, V0)
    phases = {}
    reference = None
    for charge in sorted(set(labels)):
        idx = [i for i, c in enumerate(labels) if c == charge]
        phase = np.angle(np.trace(U[np.ix_(idx, idx)]))
        if reference is None:
            reference = phase
        phases[basis.model.label_name(charge)] = float(np.angle(np.exp(1j * (phase - reference))))
    return phases


def _phase_spread(frames, checkpoints):
    """Largest deviation from a pure phase of the step maps in checkpoint bases."""
    spread = 0.0
    for j in range(len(checkpoints) - 1):
        before = checkpoints[j].conj().T @ frames[j]
        after = checkpoints[j + 1].conj().T @ frames[j + 1]
        M = unitary_part(after @ before.conj().T)
        trace = np.trace(M)
        phase = trace / abs(trace) if abs(trace) > 0 else 1.0
        spread = max(spread, float(np.abs(M - phase * np.eye(M.shape[0])).max()))
    return spread


def parallel_transport(path, points, rel_tol=None, gap_threshold=None):
    """Discrete parallel transport of the ground space along a closed path.

    Returns the initial ground basis, the transported frame at each segment
    boundary, the loop unitary in the initial basis, the minimum gap and the
    largest in-manifold splitting seen.
    """
    rel_tol = DEFAULTS['degeneracy_rel_tol'] if rel_tol is None else rel_tol
    gap_threshold = DEFAULTS['gap_threshold'] if gap_threshold is None else gap_threshold
    if points < 4:
        raise ConfigError(f"points must be at least 4, got {points}")

    segments = len(path.schedule.segments)
    per_segment = max(1, math.ceil((points - 1) / segments))
    times = np.linspace(0.0, path.schedule.total_time, segments * per_segment + 1)

    n = None
    V0 = frame = None
    frames = []
    min_gap = math.inf
    max_splitting = 0.0
    for k, t in enumerate(times):
        values, vectors = path.spectrum(t)
        degeneracy, _ = cluster_ground(values, rel_tol)
        if n is None:
            n = degeneracy
            V0 = frame = vectors[:, :n]
        elif degeneracy != n:
            raise DegeneracyChange(
                f"ground multiplicity changed from {n} to {degeneracy} at t={t:.6g}")
        else:
            Vk = vectors[:, :n]
            frame = Vk @ unitary_part(Vk.conj().T @ frame)

        if n < len(values):
            min_gap = min(min_gap, float(values[n] - values[0]))
        max_splitting = max(max_splitting, float(values[n - 1] - values[0]))
        if k % per_segment == 0:
            frames.append(frame)

    if min_gap < gap_threshold:
        raise GapCollapse(f"minimum gap {min_gap:.3e} below threshold {gap_threshold:.1e}")

    U = unitary_part(V0.conj().T @ frame)
    logger.debug(f"Transported {n}-dim ground space over {len(times)} samples, "
                 f"min gap {min_gap:.4g}")
    return {
        'initial_basis': V0,
        'frames': frames,
        'unitary': U,
        'min_gap': min_gap,
        'max_splitting': max_splitting,
        'samples': len(times),
    }


def holonomy_from_path(path, points, target, checkpoints=None, rel_tol=None, gap_threshold=None):
    """Wilson-line holonomy of any HamiltonianPath compared with ``target``."""
    transport = parallel_transport(path, points, rel_tol, gap_threshold)
    V0, U = transport['initial_basis'], transport['unitary']
    fidelity, phase = compare_to_target(U, V0, target)

    spread = None
    if checkpoints is not None:
        spread = _phase_spread(transport['frames'], checkpoints)

    return HolonomyResult(
        unitary=U,
        per_step_phase_spread=spread,
        min_gap=transport['min_gap'],
        discretization=transport['samples'],
        fidelity=fidelity,
        global_phase=phase,
        sector_phases=_sector_phases(path.basis, V0, U),
        max_splitting=transport['max_splitting'],
    )


def _checkpoint_matrices(b, schedule, chirality):
    direction = schedule.braid_direction()
    if direction == 0:
        return None
    states = [analytic_checkpoint_states(b, tag, chirality, schedule.channel)
              for tag in CHECKPOINT_TAGS]
    if direction < 0:
        states.reverse()
    return [np.column_stack([vecs[x] for x in sorted(vecs)]) for vecs in states]


def wilson_line_holonomy(b, s, points, chirality=Chirality.Plus, target=None,
                         rel_tol=None, gap_threshold=None):
    """Holonomy of the T-junction ground space along schedule s."""
    chirality = Chirality.parse(chirality)
    if target is None:
        target = braid_generator(b, chirality if s.braid_direction() >= 0 else chirality.flipped)
    path = tjunction_path(b, s, chirality)
    result = holonomy_from_path(path, points, target, _checkpoint_matrices(b, s, chirality),
                                rel_tol, gap_threshold)
    logger.info(f"Wilson line: fidelity={result.fidelity:.10f} phase={result.global_phase:.4f} "
                f"min_gap={result.min_gap:.4g}")
    return result


def _normalized_columns(initial, dim):
    states = np.array(initial, dtype=complex)
    if states.ndim == 1:
        states = states[:, None]
    elif states.shape[0] != dim:
        states = states.T
    if states.shape[0] != dim:
        raise ConfigError(f"initial states must have dimension {dim}")
    norms = np.linalg.norm(states, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ConfigError("initial states must be normalized")
    return states


def evolve_states(path, dt, initial):
    """Midpoint piecewise-constant propagation over the full schedule.

    Returns (final states as columns, leakage). Leakage is the aggregate weight
    outside the lowest-n manifold of H(end), 1 - ||P F||_F^2 / n.
    """
    schedule = path.schedule
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if dt > schedule.step_time / 100 * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt:.4g} exceeds step_time/100={schedule.step_time / 100:.4g}")

    states = _normalized_columns(initial, path.dim)
    steps = max(1, math.ceil(schedule.total_time / dt - 1e-9))
    dt_eff = schedule.total_time / steps
    for k in range(steps):
        states, size = path.step(states, (k + 0.5) * dt_eff, dt_eff)
        if size > 0.5:
            raise StepTooLarge(f"dt*||H|| = {size:.3f} > 0.5 at t={(k + 0.5) * dt_eff:.4g}")

    n = states.shape[1]
    _, vectors = path.spectrum(schedule.total_time)
    leakage = manifold_leakage(vectors[:, :n].conj().T @ states)
    logger.debug(f"Evolved {n} states over {steps} steps, leakage {leakage:.3e}")
    return states, leakage


def time_evolution(b, s, dt, initial, chirality=Chirality.Plus):
    """Real-time evolution of the T-junction along schedule s."""
    return evolve_states(tjunction_path(b, s, chirality), dt, initial)


def extract_braid_from_evolution(final_states, initial_ground_basis, target, max_leakage=None):
    """Effective ground-space unitary of an evolution, compared with ``target``."""
    max_leakage = DEFAULTS['max_leakage'] if max_leakage is None else max_leakage
    V0 = np.asarray(initial_ground_basis, dtype=complex)
    final = np.asarray(final_states, dtype=complex)
    U = V0.conj().T @ final
    leakage = manifold_leakage(U)
    if leakage > max_leakage:
        raise ExcessLeakage(f"leakage {leakage:.3e} exceeds {max_leakage:.1e}")
    return compare_to_target(unitary_part(U), V0, target)


def check_manifold(path, n, rel_tol=None):
    """The floor-free ground multiplicity must stay n at every segment boundary."""
    rel_tol = DEFAULTS['degeneracy_rel_tol'] if rel_tol is None else rel_tol
    schedule = path.schedule
    ideal = HamiltonianPath(path.basis, path.projectors, schedule.with_floor(0.0))
    for j in range(len(schedule.segments) + 1):
        t = j * schedule.step_time
        values, _ = ideal.spectrum(t)
        degeneracy, _ = cluster_ground(values, rel_tol)
        if degeneracy != n:
            raise DegeneracyChange(
                f"ground multiplicity changed from {n} to {degeneracy} at t={t:.6g}")


def evolution_holonomy(path, dt, target, max_leakage=None, rel_tol=None):
    """Braid of a real-time run starting from the lowest-n states of H(0)."""
    n = path.manifold_size(rel_tol)
    check_manifold(path, n, rel_tol)
    values, vectors = path.spectrum(0.0)
    V0 = vectors[:, :n]
    final, leakage = evolve_states(path, dt, V0)
    fidelity, phase = extract_braid_from_evolution(final, V0, target, max_leakage)
    U = unitary_part(V0.conj().T @ final)
    return HolonomyResult(
        unitary=U,
        per_step_phase_spread=None,
        min_gap=float(values[n] - values[0]) if n < len(values) else math.inf,
        discretization=max(1, math.ceil(path.schedule.total_time / dt - 1e-9)),
        fidelity=fidelity,
        global_phase=phase,
        sector_phases=_sector_phases(path.basis, V0, U),
        max_splitting=float(values[n - 1] - values[0]),
        leakage=leakage,
        method='evolution',
    )


def analytic_checkpoint_states(b, time_tag, chirality=Chirality.Plus, a=0):
    """Closed-form ground states at t = 0, T, 2T, 3T of the braid loop, keyed by x_tot.

    At 2T the pair (R, C) is in channel a with x2 = t x a; T follows by undoing
    the L-R exchange; 3T is the (C, B) state phased continuously from 2T; and
    0 differs from 3T by the inverse exchange phase of its x1.
    """
    if time_tag not in CHECKPOINT_TAGS:
        raise ConfigError(f"Unknown checkpoint '{time_tag}'")
    chirality = Chirality.parse(chirality)
    m, t = b.model, b.t
    a = m.label_index(a)
    (s,) = m.channels(t, a)
    G = np.diag(braid_generator(b, chirality).entries)

    psi_2T = {}
    es, v = channel_vector(m, t, t, t, s, a)
    for x in m.channels(s, t):
        psi = np.zeros(b.size, dtype=complex)
        for e, coeff in zip(es, v):
            psi[b.index[(e, s, x)]] = coeff
        psi_2T[x] = psi
    if time_tag == 't2T':
        return psi_2T
    if time_tag == 't1T':
        return {x: G.conj() * psi for x, psi in psi_2T.items()}

    psi_3T = {}
    x1_of = {}
    for x, psi in psi_2T.items():
        (x1,) = [c for c in m.channels(t, t) if m.admissible(c, a, x)]
        es, w = channel_vector(m, x1, t, t, x, a)
        vec = np.zeros(b.size, dtype=complex)
        for e, coeff in zip(es, w):
            vec[b.index[(x1, e, x)]] = coeff
        overlap = np.vdot(vec, psi)
        psi_3T[x] = vec * (overlap / abs(overlap))
        x1_of[x] = x1
    if time_tag == 't3T':
        return psi_3T

    psi_0 = {}
    for x, vec in psi_3T.items():
        exchange = m.R(t, t, x1_of[x])
        if chirality is Chirality.Minus:
            exchange = np.conj(exchange)
        psi_0[x] = np.conj(exchange) * vec
    return psi_0


def spectrum_series(path, points):
    """Instantaneous spectrum along the path as a table {t, eigenvalue_i, gap}."""
    n = path.manifold_size()
    rows = []
    for t in np.linspace(0.0, path.schedule.total_time, points):
        values, _ = path.spectrum(t)
        row = {'t': float(t)}
        row.update({f'eigenvalue_{i}': float(e) for i, e in enumerate(values)})
        row['gap'] = float(values[n] - values[0]) if n < len(values) else float('nan')
        rows.append(row)
    return pd.DataFrame(rows)


def diabatic_error_scan(b, T_values, dt_ratio, chirality=Chirality.Plus, target=None,
                        eps_max=1.0, floor=0.0, ramp=Ramp.Cosine, channel=0, jobs=None):
    """Infidelity and leakage of real-time braids for each step time T."""
    T_values = [float(T) for T in T_values]
    if not T_values or any(T <= 0 for T in T_values):
        raise ConfigError("T values must be positive")
    if any(later <= earlier for earlier, later in zip(T_values, T_values[1:])):
        raise ConfigError("T values must be ascending")
    chirality = Chirality.parse(chirality)
    if target is None:
        target = braid_generator(b, chirality)

    def run_one(T):
        schedule = default_braid_schedule(eps_max, T, floor, ramp, channel)
        result = evolution_holonomy(tjunction_path(b, schedule, chirality), T * dt_ratio,
                                    target, max_leakage=1.0)
        logger.info(f"T={T:g}: infidelity={1.0 - result.fidelity:.3e} "
                    f"leakage={result.leakage:.3e}")
        return {
            'T': T,
            'dt': T * dt_ratio,
            'floor': floor,
            'fidelity': result.fidelity,
            'infidelity': 1.0 - result.fidelity,
            'leakage': result.leakage,
            'global_phase': result.global_phase,
        }

    rows = SweepWorker(T_values, run_one, jobs=jobs, label='diabatic scan').run()
    return pd.DataFrame(rows)
