"""
Staggered Chains - Linear fusion paths, elementary braids and domain-wall braiding

A T-junction of three staggered arms is linearized as

    l_{2N_L+1} .. l_1, r_{2N_R+1} .. r_1, c, b_1 .. b_{2N_B+1}

so that the layout with empty arms is exactly the (L, R, C, B) order of the
four-anyon junction. The bond (l_1, c) is the only non-adjacent bond; its
projector is transported past the right arm.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .adiabatic import (CouplingSchedule, HamiltonianPath, Ramp,
                        evolution_holonomy, holonomy_from_path)
from .anyon_algebra import fusion_channels, is_abelian
from .errors import ConfigError, DimensionCap, IndexOutOfRange, InvalidChannel
from .fusion_space import Chirality, FusionBasis, channel_vector
from .settings import DEFAULTS
from .sweep_worker import SweepWorker
from .tjunction import cluster_ground

logger = logging.getLogger(__name__)

# Fibonacci: 2/phi^2, Ising: 1
KAPPA = {'Fibonacci': 2.0 / ((1.0 + math.sqrt(5.0)) / 2.0) ** 2, 'Ising': 1.0}


class LinearFusionBasis(FusionBasis):
    """States (c_2, .., c_m): c_j is the total charge of the first j anyons."""

    def __init__(self, model, t, count, states):
        super().__init__(model, t, states)
        self.count = count
        self.cache = {}

    def charge(self, state, j):
        """Charge of the first j anyons (j >= 1)."""
        return self.t if j == 1 else state[j - 2]


def _count_paths(m, t, count):
    weights = np.zeros(m.size)
    weights[t] = 1.0
    for _ in range(count - 1):
        weights = weights @ m.fusion[:, t, :]
    return int(round(weights.sum()))


def enumerate_linear_basis(m, t, count, max_sites=None, max_states=None):
    """All admissible left-to-right fusion paths of ``count`` anyons of charge t."""
    max_sites = DEFAULTS['max_chain_sites'] if max_sites is None else max_sites
    max_states = DEFAULTS['max_dense_states'] if max_states is None else max_states
    t = m.label_index(t)
    if count < 2:
        raise ConfigError(f"a chain needs at least 2 anyons, got {count}")
    if count > max_sites:
        raise DimensionCap(f"{count} anyons exceed the chain cap of {max_sites}")
    total = _count_paths(m, t, count)
    if total > max_states:
        raise DimensionCap(f"{total} fusion paths exceed the dense cap of {max_states}")

    paths = [(t,)]
    for _ in range(count - 1):
        paths = [p + (c,) for p in paths for c in m.channels(p[-1], t)]
    states = sorted((p[1:] for p in paths), key=lambda s: s[::-1])
    logger.debug(f"Linear basis {m.name}/{m.label_name(t)} x{count}: {len(states)} states")
    return LinearFusionBasis(m, t, count, states)


def _local_operator(b, k, block):
    """Operator acting on c_k only; block(prev, nxt) gives (labels, matrix) for c_k."""
    P = np.zeros((b.size, b.size), dtype=complex)
    done = set()
    for state in b.states:
        context = state[:k - 2] + state[k - 1:]
        if context in done:
            continue
        done.add(context)
        prev, nxt = b.charge(state, k - 1), b.charge(state, k + 1)
        labels, M = block(prev, nxt)
        if M is None:
            continue
        rows = [b.index[state[:k - 2] + (e,) + state[k - 1:]] for e in labels]
        P[np.ix_(rows, rows)] = M
    return P


def elementary_braid(b, k, chirality=Chirality.Plus):
    """Exchange of anyons k and k+1 (1-based)."""
    chirality = Chirality.parse(chirality)
    if not 1 <= k < b.count:
        raise IndexOutOfRange(f"braid position {k} outside 1..{b.count - 1}")
    key = ('braid', k, chirality)
    if key in b.cache:
        return b.operator(b.cache[key])

    m, t = b.model, b.t
    sign = 1 if chirality is Chirality.Plus else -1

    def phase(c):
        r = m.R(t, t, c)
        return r if sign > 0 else np.conj(r)

    if k == 1:
        B = np.diag([phase(state[0]) for state in b.states])
    else:
        def block(prev, nxt):
            es, fs, F = m.f_matrix(prev, t, t, nxt)
            D = np.diag([phase(f) for f in fs])
            return es, F.conj() @ D @ F.T

        B = _local_operator(b, k, block)
    b.cache[key] = B
    return b.operator(B)


def _adjacent_projector(b, k, channel):
    """Projector on anyons k, k+1 fusing to channel."""
    m, t = b.model, b.t
    if k == 1:
        return np.diag([1.0 + 0j if state[0] == channel else 0j for state in b.states])

    def block(prev, nxt):
        es, v = channel_vector(m, prev, t, t, nxt, channel)
        return es, (None if v is None else np.outer(v, v.conj()))

    return _local_operator(b, k, block)


def pair_projector_general(b, i, j, channel, chirality=Chirality.Plus, transport='right'):
    """Projector on anyons i < j fusing to channel.

    ``right`` moves anyon i rightwards next to j; ``left`` moves anyon j
    leftwards next to i with the opposite exchange sense.
    """
    chirality = Chirality.parse(chirality)
    if not 1 <= i < j <= b.count:
        raise IndexOutOfRange(f"pair ({i}, {j}) outside 1..{b.count}")
    channel = b.model.label_index(channel)
    if channel not in fusion_channels(b.model, b.t, b.t):
        raise InvalidChannel(f"{b.model.label_name(channel)} is not a two-anyon channel")

    key = ('pair', i, j, channel, chirality, transport)
    if key in b.cache:
        return b.operator(b.cache[key])

    W = np.eye(b.size, dtype=complex)
    if transport == 'right':
        for k in range(i, j - 1):
            W = elementary_braid(b, k, chirality).entries @ W
        P = _adjacent_projector(b, j - 1, channel)
    elif transport == 'left':
        for k in range(j - 1, i, -1):
            W = elementary_braid(b, k, chirality.flipped).entries @ W
        P = _adjacent_projector(b, i, channel)
    else:
        raise ConfigError(f"Unknown transport '{transport}'")

    P = W.conj().T @ P @ W
    b.cache[key] = P
    return b.operator(P)


def chain_hamiltonian(b, bond_eps, channel, chirality=Chirality.Plus):
    """H = - sum eps * projector over bonds given as {(i, j): eps} on positions."""
    H = np.zeros((b.size, b.size), dtype=complex)
    for (i, j), eps in sorted(bond_eps.items()):
        if eps != 0.0:
            H -= eps * pair_projector_general(b, i, j, channel, chirality).entries
    return b.operator(H)


@dataclass(frozen=True, eq=False)
class JunctionChainLayout:
    """Three staggered arms meeting at the central anyon c."""

    model: object
    t: int
    channel: int
    arm_lengths: tuple
    site_order: tuple
    bonds: tuple
    basis: LinearFusionBasis

    def position(self, site):
        return self.site_order.index(site) + 1

    def bond_positions(self, bond):
        i, j = sorted((self.position(bond[0]), self.position(bond[1])))
        return i, j

    @property
    def bond_keys(self):
        return tuple((u, v) for u, v, _ in self.bonds)

    def initial_on(self):
        return frozenset((u, v) for u, v, cls in self.bonds if cls == 'strong') \
            | {('c', 'b1')}

    def end_positions(self):
        n_left = self.arm_lengths[0]
        return 1, 2 * n_left + 2

    def moves(self):
        """(off, on) bond handoffs of the three braid steps."""
        n_l, n_r, n_b = self.arm_lengths

        def inward(arm, n):
            # pairs (2k-1, 2k) -> (2k, 2k+1), outermost first
            return [((f'{arm}{2 * k - 1}', f'{arm}{2 * k}'), (f'{arm}{2 * k}', f'{arm}{2 * k + 1}'))
                    for k in range(n, 0, -1)]

        def outward(arm, n):
            return [((f'{arm}{2 * k}', f'{arm}{2 * k + 1}'), (f'{arm}{2 * k - 1}', f'{arm}{2 * k}'))
                    for k in range(1, n + 1)]

        return [
            inward('l', n_l) + [(('c', 'b1'), ('l1', 'c'))] + outward('b', n_b),
            inward('r', n_r) + [(('l1', 'c'), ('r1', 'c'))] + outward('l', n_l),
            inward('b', n_b) + [(('r1', 'c'), ('c', 'b1'))] + outward('r', n_r),
        ]

    def to_dict(self):
        return {
            'arm_lengths': list(self.arm_lengths),
            'site_order': list(self.site_order),
            'bonds': [[u, v, cls] for u, v, cls in self.bonds],
            'states': self.basis.size,
        }


def build_layout(model, t, arm_lengths, channel=0, max_sites=None, max_states=None):
    """Junction layout with arms of N_L, N_R, N_B anyon pairs."""
    t = model.label_index(t)
    channel = model.label_index(channel)
    if len(arm_lengths) != 3 or any(int(n) < 0 for n in arm_lengths):
        raise ConfigError(f"arm lengths must be three non-negative integers, got {arm_lengths}")
    n_l, n_r, n_b = (int(n) for n in arm_lengths)
    if not is_abelian(model, channel):
        raise ConfigError(f"bond channel {model.label_name(channel)} is not Abelian")

    sites = ([f'l{k}' for k in range(2 * n_l + 1, 0, -1)]
             + [f'r{k}' for k in range(2 * n_r + 1, 0, -1)]
             + ['c']
             + [f'b{k}' for k in range(1, 2 * n_b + 2)])

    bonds = []
    for arm, n in (('l', n_l), ('r', n_r)):
        for k in range(1, 2 * n + 1):
            bonds.append((f'{arm}{k}', f'{arm}{k + 1}', 'strong' if k % 2 == 1 else 'weak'))
    for k in range(1, 2 * n_b + 1):
        bonds.append((f'b{k}', f'b{k + 1}', 'strong' if k % 2 == 0 else 'weak'))
    bonds += [('l1', 'c', 'junction'), ('r1', 'c', 'junction'), ('c', 'b1', 'junction')]

    basis = enumerate_linear_basis(model, t, len(sites), max_sites, max_states)
    return JunctionChainLayout(model, t, channel, (n_l, n_r, n_b), tuple(sites), tuple(bonds),
                               basis)


def build_chain_hamiltonian(layout, eps_per_bond, channel=None, chirality=Chirality.Plus):
    """H = - sum over bonds of eps_bond * projector on the bond channel."""
    channel = layout.channel if channel is None else layout.model.label_index(channel)
    if not is_abelian(layout.model, channel):
        raise ConfigError(f"bond channel {layout.model.label_name(channel)} is not Abelian")
    known = set(layout.bond_keys)
    positions = {}
    for bond, eps in eps_per_bond.items():
        bond = tuple(bond)
        if bond not in known:
            raise ConfigError(f"{bond} is not a bond of the layout")
        positions[layout.bond_positions(bond)] = float(eps)
    return chain_hamiltonian(layout.basis, positions, channel, chirality)


def end_charge_braid(layout, chirality=Chirality.Plus):
    """Exchange of the two arm-end charges, routed like the (l_1, c) bond."""
    chirality = Chirality.parse(chirality)
    b = layout.basis
    _, p = layout.end_positions()
    W = np.eye(b.size, dtype=complex)
    for k in range(1, p - 1):
        W = elementary_braid(b, k, chirality).entries @ W
    B = elementary_braid(b, p - 1, chirality).entries
    return b.operator(W.conj().T @ B @ W)


def domain_wall_schedule(layout, T_per_move, eps_max=1.0, floor=0.0, ramp=Ramp.Cosine):
    """One segment per three-anyon move."""
    segments = tuple(move for step in layout.moves() for move in step)
    return CouplingSchedule(amplitude=float(eps_max), step_time=float(T_per_move),
                            floor=float(floor), ramp=Ramp.parse(ramp), keys=layout.bond_keys,
                            initial_on=layout.initial_on(), segments=segments,
                            channel=layout.channel)


def chain_path(layout, schedule, chirality=Chirality.Plus):
    projectors = {bond: pair_projector_general(layout.basis, *layout.bond_positions(bond),
                                               layout.channel, chirality)
                  for bond in layout.bond_keys}
    return HamiltonianPath(layout.basis, projectors, schedule)


def path_splitting(layout, floor, points=200, eps_max=1.0, chirality=Chirality.Plus,
                   ramp=Ramp.Cosine):
    """Largest spread of the protected manifold along the domain-wall path."""
    schedule = domain_wall_schedule(layout, 1.0, eps_max, floor, ramp)
    path = chain_path(layout, schedule, chirality)
    n = path.manifold_size()
    worst = 0.0
    for t in np.linspace(0.0, schedule.total_time, points):
        values, _ = path.spectrum(t)
        worst = max(worst, float(values[n - 1] - values[0]))
    return worst


def domain_wall_braid(layout, T_per_move, dt, chirality=Chirality.Plus, target=None,
                      eps_max=1.0, floor=0.0, ramp=Ramp.Cosine, method='evolution',
                      points=None, max_leakage=None):
    """Braid the two end charges by moving domain walls through the junction."""
    chirality = Chirality.parse(chirality)
    if target is None:
        target = end_charge_braid(layout, chirality)
    schedule = domain_wall_schedule(layout, T_per_move, eps_max, floor, ramp)
    path = chain_path(layout, schedule, chirality)
    logger.info(f"Domain-wall braid on arms {layout.arm_lengths}: {len(schedule.segments)} moves, "
                f"{layout.basis.size} states, method {method}")

    if method == 'evolution':
        result = evolution_holonomy(path, dt, target, max_leakage)
        result.max_splitting = max(result.max_splitting,
                                   path_splitting(layout, floor, 20 * len(schedule.segments) + 1,
                                                  eps_max, chirality, ramp))
    elif method == 'wilson':
        points = points or DEFAULTS['wilson_points']
        result = holonomy_from_path(path, points, target)
    else:
        raise ConfigError(f"Unknown method '{method}'")
    return result


def splitting_scan(model, t, a, eps_min, eps_max, N_values, chirality=Chirality.Plus, jobs=None,
                   max_sites=None, max_states=None):
    """Ground-manifold splitting of an open staggered chain with two weakly bound end charges.

    For each N the chain has 2N + 2 anyons: weak end bonds, N strong bonds in
    between, alternating with weak ones.
    """
    t = model.label_index(t)
    a = model.label_index(a)
    if not 0 < eps_min < eps_max:
        raise ConfigError("need 0 < eps_min < eps_max")
    if not is_abelian(model, a):
        raise ConfigError(f"channel {model.label_name(a)} is not Abelian")
    N_values = [int(N) for N in N_values]
    for N in N_values:
        if N < 1:
            raise ConfigError(f"N must be at least 1, got {N}")
        enumerate_linear_basis(model, t, 2 * N + 2, max_sites, max_states)

    def run_one(N):
        b = enumerate_linear_basis(model, t, 2 * N + 2, max_sites, max_states)
        bonds = {(k, k + 1): (eps_max if k % 2 == 0 else eps_min) for k in range(1, 2 * N + 2)}
        H = chain_hamiltonian(b, bonds, a, chirality)
        values = np.linalg.eigvalsh(H.entries)
        n = len(fusion_channels(model, t, t))
        splitting = float(values[n - 1] - values[0])
        logger.info(f"N={N}: splitting {splitting:.6e}")
        return {
            'model': model.name,
            'N': N,
            'eps_min': float(eps_min),
            'eps_max': float(eps_max),
            'splitting': splitting,
            'ln_splitting': math.log(splitting) if splitting > 0 else float('-inf'),
        }

    rows = SweepWorker(N_values, run_one, jobs=jobs, label='splitting scan').run()
    return pd.DataFrame(rows)


def expected_slope(model, ratio):
    """ln(kappa * eps_min / eps_max) for the built-in non-Abelian models."""
    try:
        return math.log(KAPPA[model.name] * ratio)
    except KeyError:
        raise ConfigError(f"no suppression factor known for model {model.name}") from None


def dimerized_report(b, eps_max, channel=0, chirality=Chirality.Plus, rel_tol=None):
    """Spectrum summary of the fully dimerized chain (1,2), (3,4), ..."""
    rel_tol = DEFAULTS['degeneracy_rel_tol'] if rel_tol is None else rel_tol
    bonds = {(k, k + 1): eps_max for k in range(1, b.count, 2)}
    values = np.linalg.eigvalsh(chain_hamiltonian(b, bonds, channel, chirality).entries)
    return cluster_ground(values, rel_tol)
