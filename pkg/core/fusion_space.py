"""
Fusion Space - Fusion-tree basis of the four-anyon T-junction and its operators

States are labelled |x1, x2, x_tot> along the path ((L x R -> x1) x C -> x2) x B -> x_tot.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .anyon_algebra import fusion_channels
from .errors import EmptyBasis, InvalidChannel, NonHermitian

logger = logging.getLogger(__name__)


class _ParsableEnum(Enum):

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.name.lower() == str(value).lower():
                return member
        raise ValueError(f"Unknown {cls.__name__} '{value}'")


class Chirality(_ParsableEnum):
    """Exchange handedness: Plus uses R, Minus uses R^-1."""

    Plus = 1
    Minus = -1

    @property
    def flipped(self):
        return Chirality.Minus if self is Chirality.Plus else Chirality.Plus


class Pair(_ParsableEnum):
    """Coupled pairs of the T-junction: outer anyon K with the central anyon C."""

    L = 'L'
    R = 'R'
    B = 'B'


class FusionBasis:
    """Ordered list of fusion-path states with an index map.

    Subclasses fix the state layout; the last entry of every state is its total charge.
    """

    def __init__(self, model, t, states):
        self.model = model
        self.t = t
        self.states = list(states)
        self.index = {state: i for i, state in enumerate(self.states)}

    def __len__(self):
        return len(self.states)

    @property
    def size(self):
        return len(self.states)

    def total_charges(self):
        return np.array([state[-1] for state in self.states])

    def sector_slices(self):
        """Contiguous index range per total charge."""
        slices = {}
        for i, state in enumerate(self.states):
            start, _ = slices.get(state[-1], (i, i))
            slices[state[-1]] = (start, i + 1)
        return {charge: slice(lo, hi) for charge, (lo, hi) in slices.items()}

    def describe(self, state):
        return '(' + ','.join(self.model.label_name(x) for x in state) + ')'

    def operator(self, entries):
        return OperatorMatrix(self, np.asarray(entries, dtype=complex))

    def zeros(self):
        return self.operator(np.zeros((self.size, self.size)))

    def identity(self):
        return self.operator(np.eye(self.size))


class FusionTreeBasis(FusionBasis):
    """Four external charges t (L, R, C, B); states (x1, x2, x_tot)."""

    @property
    def external(self):
        return (self.t,) * 4


@dataclass(eq=False)
class OperatorMatrix:
    """Dense complex matrix tied to a fusion basis."""

    basis: FusionBasis
    entries: np.ndarray

    def __post_init__(self):
        n = self.basis.size
        if self.entries.shape != (n, n):
            raise ValueError(f"Operator shape {self.entries.shape} does not match basis size {n}")

    @property
    def dim(self):
        return self.entries.shape[0]

    def dagger(self):
        return OperatorMatrix(self.basis, self.entries.conj().T)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.basis, self.entries @ other.entries)
        return self.entries @ other

    def __add__(self, other):
        return OperatorMatrix(self.basis, self.entries + other.entries)

    def __sub__(self, other):
        return OperatorMatrix(self.basis, self.entries - other.entries)

    def __mul__(self, scalar):
        return OperatorMatrix(self.basis, scalar * self.entries)

    __rmul__ = __mul__

    def __neg__(self):
        return OperatorMatrix(self.basis, -self.entries)

    def restrict(self, vectors):
        """Matrix of the operator on the span of the given orthonormal columns."""
        return vectors.conj().T @ self.entries @ vectors

    def hermiticity_error(self):
        return float(np.abs(self.entries - self.entries.conj().T).max(initial=0.0))

    def is_hermitian(self, tol=1e-12):
        return self.hermiticity_error() < tol

    def require_hermitian(self, tol=1e-12):
        error = self.hermiticity_error()
        if error >= tol:
            raise NonHermitian(f"Operator deviates from Hermitian by {error:.3e}")

    def is_projector(self, tol=1e-12):
        square = np.abs(self.entries @ self.entries - self.entries).max(initial=0.0)
        return square < tol and self.is_hermitian(tol)

    def is_unitary(self, tol=1e-12):
        product = self.entries.conj().T @ self.entries
        return np.abs(product - np.eye(self.dim)).max(initial=0.0) < tol

    def max_offblock(self):
        """Largest entry coupling different total charges."""
        charges = self.basis.total_charges()
        mask = charges[:, None] != charges[None, :]
        return float(np.abs(self.entries[mask]).max(initial=0.0))

    def to_dict(self):
        return {
            'states': [self.basis.describe(s) for s in self.basis.states],
            'entries': [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
        }


def channel_vector(model, a, b, c, d, channel):
    """Left-tree components of the state in which (b c) fuse to ``channel``.

    Returns the admissible (a b) labels e and the vector conj(F^{abc}_d[:, channel]),
    or None when the channel is not reachable for total charge d.
    """
    es, fs, mat = model.f_matrix(a, b, c, d)
    if channel not in fs:
        return es, None
    return es, mat[:, fs.index(channel)].conj()


def enumerate_basis(m, t):
    """All admissible (x1, x2, x_tot) in order (x_tot, x2, x1)."""
    t = m.label_index(t)
    if not m.channels(t, t):
        raise EmptyBasis(f"{m.label_name(t)} x {m.label_name(t)} has no fusion channels")

    states = []
    for x1 in m.channels(t, t):
        for x2 in m.channels(x1, t):
            for x_tot in m.channels(x2, t):
                states.append((x1, x2, x_tot))
    states.sort(key=lambda s: s[::-1])

    basis = FusionTreeBasis(m, t, states)
    logger.debug(f"T-junction basis for {m.name}/{m.label_name(t)}: {len(states)} states")
    return basis


def _check_channel(b, channel):
    channel = b.model.label_index(channel)
    if channel not in fusion_channels(b.model, b.t, b.t):
        raise InvalidChannel(
            f"{b.model.label_name(channel)} is not a channel of "
            f"{b.model.label_name(b.t)} x {b.model.label_name(b.t)}")
    return channel


def _rc_projector(b, channel):
    """Projector on C, R fusing to channel; acts on x1 with (x2, x_tot) fixed."""
    m, t = b.model, b.t
    P = np.zeros((b.size, b.size), dtype=complex)
    for x2, x_tot in sorted({(s[1], s[2]) for s in b.states}):
        es, v = channel_vector(m, t, t, t, x2, channel)
        if v is None:
            continue
        rows = [b.index[(e, x2, x_tot)] for e in es]
        P[np.ix_(rows, rows)] = np.outer(v, v.conj())
    return P


def _cb_projector(b, channel):
    """Projector on C, B fusing to channel; acts on x2 with (x1, x_tot) fixed."""
    m, t = b.model, b.t
    P = np.zeros((b.size, b.size), dtype=complex)
    for x1, x_tot in sorted({(s[0], s[2]) for s in b.states}):
        es, v = channel_vector(m, x1, t, t, x_tot, channel)
        if v is None:
            continue
        rows = [b.index[(x1, e, x_tot)] for e in es]
        P[np.ix_(rows, rows)] = np.outer(v, v.conj())
    return P


def braid_generator(b, chirality=Chirality.Plus):
    """Diagonal exchange of L and R: (R^{tt})_{x1}, conjugated for Minus."""
    chirality = Chirality.parse(chirality)
    phases = np.array([b.model.R(b.t, b.t, s[0]) for s in b.states], dtype=complex)
    if chirality is Chirality.Minus:
        phases = phases.conj()
    return b.operator(np.diag(phases))


def pair_projector(b, pair, channel, chirality=Chirality.Plus):
    """Projector onto the outer anyon of ``pair`` fusing with C to ``channel``."""
    pair = Pair.parse(pair)
    channel = _check_channel(b, channel)

    if pair is Pair.B:
        return b.operator(_cb_projector(b, channel))
    if pair is Pair.R:
        return b.operator(_rc_projector(b, channel))

    # L is reached from R by exchanging L and R
    G = braid_generator(b, chirality).entries
    return b.operator(G.conj().T @ _rc_projector(b, channel) @ G)
