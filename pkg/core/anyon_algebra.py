"""
Anyon Algebra - Fusion rules, F-symbols and R-symbols of multiplicity-free models

Models are loaded from JSON documents (see ``core/models``) and checked
against the pentagon and both hexagon identities before use.
"""

import json
import logging
import os
import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from types import MappingProxyType

import numpy as np

from .errors import ConsistencyFailure, MissingSymbol, ModelFormatError
from .settings import DEFAULTS

logger = logging.getLogger(__name__)

MODELS_DIR = os.path.join(os.path.dirname(__file__), 'models')


class ModelName(Enum):
    """Built-in anyon models."""

    Ising = 'ising.json'
    Fibonacci = 'fibonacci.json'
    AbelianZ2 = 'abelian_z2.json'
    SU2_3 = 'su2_3.json'

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        for member in cls:
            if member.name.lower() == str(name).lower():
                return member
        raise ValueError(f"Unknown built-in model '{name}'")


@dataclass(frozen=True, eq=False)
class AnyonModel:
    """Immutable algebraic data of a multiplicity-free anyon model."""

    name: str
    labels: tuple
    fusion: np.ndarray
    f_symbols: MappingProxyType
    r_symbols: MappingProxyType
    qdims: np.ndarray

    def __post_init__(self):
        self.fusion.setflags(write=False)
        self.qdims.setflags(write=False)

    @property
    def size(self):
        return len(self.labels)

    @property
    def vacuum(self):
        return 0

    def label_index(self, name):
        """Index of a charge given by name or index."""
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.size:
                raise ValueError(f"Label index {name} out of range for {self.name}")
            return int(name)
        try:
            return self.labels.index(name)
        except ValueError:
            raise ValueError(f"Unknown label '{name}' in model {self.name}") from None

    def label_name(self, index):
        return self.labels[index]

    def admissible(self, a, b, c):
        return bool(self.fusion[a, b, c])

    def channels(self, a, b):
        return [c for c in range(self.size) if self.fusion[a, b, c]]

    def f_admissible(self, a, b, c, d, e, f):
        N = self.fusion
        return bool(N[a, b, e] and N[e, c, d] and N[b, c, f] and N[a, f, d])

    def F(self, a, b, c, d, e, f):
        """(F^{abc}_d)_{e,f}, zero for inadmissible tuples."""
        if not self.f_admissible(a, b, c, d, e, f):
            return 0.0
        try:
            return self.f_symbols[(a, b, c, d, e, f)]
        except KeyError:
            raise MissingSymbol(
                f"{self.name}: no F-symbol for {self._names(a, b, c, d, e, f)}") from None

    def R(self, a, b, c):
        """(R^{ab})_c, zero for inadmissible triples."""
        if not self.fusion[a, b, c]:
            return 0.0
        try:
            return self.r_symbols[(a, b, c)]
        except KeyError:
            raise MissingSymbol(
                f"{self.name}: no R-symbol for {self._names(a, b, c)}") from None

    def f_matrix(self, a, b, c, d):
        """F^{abc}_d as a matrix with its row (e) and column (f) labels."""
        es = [e for e in range(self.size) if self.fusion[a, b, e] and self.fusion[e, c, d]]
        fs = [f for f in range(self.size) if self.fusion[b, c, f] and self.fusion[a, f, d]]
        mat = np.zeros((len(es), len(fs)), dtype=complex)
        for i, e in enumerate(es):
            for j, f in enumerate(fs):
                mat[i, j] = self.F(a, b, c, d, e, f)
        return es, fs, mat

    def _names(self, *indices):
        return '(' + ', '.join(self.labels[i] for i in indices) + ')'


@dataclass
class ConsistencyReport:
    """Per-family residuals of the model consistency checks."""

    tol: float
    residuals: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(value < self.tol for value in self.residuals.values())

    def failed_checks(self):
        return [name for name, value in self.residuals.items() if value >= self.tol]

    def to_dict(self):
        return {
            'passed': self.passed,
            'tol': self.tol,
            'residuals': dict(self.residuals),
            'failed': self.failed_checks(),
        }


def fusion_channels(m, a, b):
    """Ordered list of channels c with N[a][b][c] = 1."""
    return m.channels(m.label_index(a), m.label_index(b))


def is_abelian(m, a):
    """True iff a fuses with every charge into exactly one channel."""
    a = m.label_index(a)
    return all(len(m.channels(a, b)) == 1 for b in range(m.size))


def check_complete(m):
    """Raise MissingSymbol if an admissible tuple has no F or R entry."""
    n = range(m.size)
    for a, b, c, d, e, f in itertools.product(n, repeat=6):
        if m.f_admissible(a, b, c, d, e, f) and (a, b, c, d, e, f) not in m.f_symbols:
            raise MissingSymbol(f"{m.name}: no F-symbol for {m._names(a, b, c, d, e, f)}")
    for a, b, c in itertools.product(n, repeat=3):
        if m.fusion[a, b, c] and (a, b, c) not in m.r_symbols:
            raise MissingSymbol(f"{m.name}: no R-symbol for {m._names(a, b, c)}")


def _pentagon_residual(m):
    labels = range(m.size)
    N = m.fusion
    worst = 0.0
    for a, b, c, d in itertools.product(labels, repeat=4):
        for f, k, l, g, e in itertools.product(labels, repeat=5):
            if not (N[a, b, f] and N[c, d, l] and N[f, c, g] and N[g, d, e]
                    and N[a, k, e] and N[b, l, k]):
                continue
            lhs = m.F(f, c, d, e, g, l) * m.F(a, b, l, e, f, k)
            rhs = sum(m.F(a, b, c, g, f, h) * m.F(a, h, d, e, g, k) * m.F(b, c, d, k, h, l)
                      for h in labels)
            worst = max(worst, abs(lhs - rhs))
    return worst


def _hexagon_residuals(m):
    labels = range(m.size)
    N = m.fusion
    worst_plus = 0.0
    worst_minus = 0.0
    for a, b, c, d, e, g in itertools.product(labels, repeat=6):
        if not (N[a, c, e] and N[e, b, d] and N[c, b, g] and N[a, g, d]):
            continue
        f_acb = m.F(a, c, b, d, e, g)
        lhs = m.R(c, a, e) * f_acb * m.R(c, b, g)
        rhs = sum(m.F(c, a, b, d, e, f) * m.R(c, f, d) * m.F(a, b, c, d, f, g)
                  for f in labels if N[a, b, f])
        worst_plus = max(worst_plus, abs(lhs - rhs))

        lhs = np.conj(m.R(a, c, e)) * f_acb * np.conj(m.R(b, c, g))
        rhs = sum(m.F(c, a, b, d, e, f) * np.conj(m.R(f, c, d)) * m.F(a, b, c, d, f, g)
                  for f in labels if N[a, b, f])
        worst_minus = max(worst_minus, abs(lhs - rhs))
    return worst_plus, worst_minus


def _unitarity_residual(m):
    worst = 0.0
    for a, b, c, d in itertools.product(range(m.size), repeat=4):
        es, fs, mat = m.f_matrix(a, b, c, d)
        if not es and not fs:
            continue
        if len(es) != len(fs):
            return 1.0
        worst = max(worst, np.abs(mat.conj().T @ mat - np.eye(len(es))).max())
    return worst


def _r_modulus_residual(m):
    if not m.r_symbols:
        return 0.0
    return max(abs(abs(value) - 1.0) for value in m.r_symbols.values())


def _qdim_residual(m):
    d = m.qdims
    worst = abs(d[0] - 1.0)
    for a, b in itertools.product(range(m.size), repeat=2):
        worst = max(worst, abs(d[a] * d[b] - m.fusion[a, b] @ d))
    return worst


def verify_model(m, tol=None):
    """Evaluate all consistency identities and report max residual per family."""
    tol = DEFAULTS['consistency_tol'] if tol is None else tol
    check_complete(m)

    report = ConsistencyReport(tol=tol)
    report.residuals['pentagon'] = float(_pentagon_residual(m))
    hex_plus, hex_minus = _hexagon_residuals(m)
    report.residuals['hexagon'] = float(hex_plus)
    report.residuals['hexagon_inverse'] = float(hex_minus)
    report.residuals['f_unitarity'] = float(_unitarity_residual(m))
    report.residuals['r_modulus'] = float(_r_modulus_residual(m))
    report.residuals['quantum_dimensions'] = float(_qdim_residual(m))

    if report.passed:
        logger.info(f"Model {m.name} passed all consistency checks")
    else:
        logger.warning(f"Model {m.name} failed: {', '.join(report.failed_checks())}")
    return report


def require_consistent(m, tol=None):
    """verify_model that raises ConsistencyFailure instead of returning a failed report."""
    report = verify_model(m, tol)
    if not report.passed:
        worst = {name: report.residuals[name] for name in report.failed_checks()}
        raise ConsistencyFailure(f"Model {m.name} is inconsistent: {worst}")
    return report


# Loading

def _element_lines(text, key):
    """Line numbers on which each element of the top-level array ``key`` starts."""
    marker = f'"{key}"'
    pos = text.find(marker)
    if pos < 0:
        return []
    pos = text.find('[', pos + len(marker))
    if pos < 0:
        return []

    lines = []
    depth = 0
    in_string = False
    escaped = False
    expecting = True
    for i in range(pos, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == '\\':
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch in ' \t\r\n':
            continue
        if depth == 1 and expecting and ch != ']':
            lines.append(text.count('\n', 0, i) + 1)
            expecting = False
        if ch == '"':
            in_string = True
        elif ch in '[{':
            depth += 1
        elif ch in ']}':
            depth -= 1
            if depth == 0:
                break
        elif ch == ',' and depth == 1:
            expecting = True
    return lines


def _key_line(text, key):
    pos = text.find(f'"{key}"')
    return text.count('\n', 0, pos) + 1 if pos >= 0 else None


def _complex_pair(value, line, what):
    try:
        re, im = value
        return complex(float(re), float(im))
    except (TypeError, ValueError):
        raise ModelFormatError(f"{what} must be a [re, im] pair", line) from None


def parse_model(text, source='<string>'):
    """Build an AnyonModel from the JSON model format."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"invalid JSON: {e.msg}", e.lineno) from None
    if not isinstance(doc, dict):
        raise ModelFormatError("top level must be an object", 1)

    for key in ('labels', 'fusion', 'f_symbols', 'r_symbols', 'qdims'):
        if key not in doc:
            raise ModelFormatError(f"missing field '{key}'", 1)
        if not isinstance(doc[key], list):
            raise ModelFormatError(f"field '{key}' must be an array", _key_line(text, key))

    labels = doc['labels']
    labels_line = _key_line(text, 'labels')
    if not labels or not all(isinstance(x, str) for x in labels):
        raise ModelFormatError("labels must be a non-empty array of strings", labels_line)
    if labels[0] != '1':
        raise ModelFormatError("labels[0] must be the vacuum '1'", labels_line)
    if len(set(labels)) != len(labels):
        raise ModelFormatError("labels must be unique", labels_line)
    index = {name: i for i, name in enumerate(labels)}
    n = len(labels)

    def lookup(name, line):
        try:
            return index[name]
        except (KeyError, TypeError):
            raise ModelFormatError(f"unknown label {name!r}", line) from None

    fusion = np.zeros((n, n, n), dtype=int)
    fusion_lines = _element_lines(text, 'fusion')
    for i, triple in enumerate(doc['fusion']):
        line = fusion_lines[i] if i < len(fusion_lines) else None
        if not isinstance(triple, list) or len(triple) != 3:
            raise ModelFormatError("fusion entries must be [a, b, c] triples", line)
        a, b, c = (lookup(x, line) for x in triple)
        if fusion[a, b, c]:
            raise ModelFormatError(f"duplicate fusion triple {triple}", line)
        fusion[a, b, c] = 1

    eye = np.eye(n, dtype=int)
    if not (np.array_equal(fusion[0], eye) and np.array_equal(fusion[:, 0, :], eye)):
        raise ModelFormatError("fusion rules violate vacuum neutrality",
                               _key_line(text, 'fusion'))

    qdims = doc['qdims']
    qdims_line = _key_line(text, 'qdims')
    if len(qdims) != n:
        raise ModelFormatError(f"expected {n} quantum dimensions, found {len(qdims)}", qdims_line)
    try:
        qdims = np.array([float(x) for x in qdims])
    except (TypeError, ValueError):
        raise ModelFormatError("quantum dimensions must be numbers", qdims_line) from None
    if np.any(qdims <= 0):
        raise ModelFormatError("quantum dimensions must be positive", qdims_line)

    defaults = doc.get('defaults', {})
    default_f = default_r = None
    if defaults:
        line = _key_line(text, 'defaults')
        if 'f' in defaults:
            default_f = _complex_pair(defaults['f'], line, 'defaults.f')
        if 'r' in defaults:
            default_r = _complex_pair(defaults['r'], line, 'defaults.r')

    f_symbols = {}
    f_lines = _element_lines(text, 'f_symbols')
    for i, entry in enumerate(doc['f_symbols']):
        line = f_lines[i] if i < len(f_lines) else None
        try:
            a, b, c, d = (lookup(x, line) for x in entry['abcd'])
            e = lookup(entry['e'], line)
            f = lookup(entry['f'], line)
            value = complex(float(entry['re']), float(entry['im']))
        except (KeyError, TypeError, ValueError):
            raise ModelFormatError("f_symbols entries need abcd, e, f, re, im", line) from None
        key = (a, b, c, d, e, f)
        if not (fusion[a, b, e] and fusion[e, c, d] and fusion[b, c, f] and fusion[a, f, d]):
            raise ModelFormatError(f"F-symbol for inadmissible tuple {entry['abcd']}", line)
        if key in f_symbols:
            raise ModelFormatError("duplicate F-symbol entry", line)
        f_symbols[key] = value

    r_symbols = {}
    r_lines = _element_lines(text, 'r_symbols')
    for i, entry in enumerate(doc['r_symbols']):
        line = r_lines[i] if i < len(r_lines) else None
        try:
            a, b, c = (lookup(entry[k], line) for k in ('a', 'b', 'c'))
            value = complex(float(entry['re']), float(entry['im']))
        except (KeyError, TypeError, ValueError):
            raise ModelFormatError("r_symbols entries need a, b, c, re, im", line) from None
        if not fusion[a, b, c]:
            triple = [entry[k] for k in ('a', 'b', 'c')]
            raise ModelFormatError(f"R-symbol for inadmissible triple {triple}", line)
        if (a, b, c) in r_symbols:
            raise ModelFormatError("duplicate R-symbol entry", line)
        r_symbols[(a, b, c)] = value

    rng = range(n)
    for key in itertools.product(rng, repeat=6):
        a, b, c, d, e, f = key
        if key not in f_symbols and fusion[a, b, e] and fusion[e, c, d] \
                and fusion[b, c, f] and fusion[a, f, d]:
            if default_f is None:
                names = tuple(labels[x] for x in key)
                raise MissingSymbol(f"{source}: no F-symbol for {names}")
            f_symbols[key] = default_f
    for key in itertools.product(rng, repeat=3):
        if key not in r_symbols and fusion[key]:
            if default_r is None:
                names = tuple(labels[x] for x in key)
                raise MissingSymbol(f"{source}: no R-symbol for {names}")
            r_symbols[key] = default_r

    name = doc.get('name') or os.path.splitext(os.path.basename(source))[0]
    return AnyonModel(
        name=str(name),
        labels=tuple(labels),
        fusion=fusion,
        f_symbols=MappingProxyType(f_symbols),
        r_symbols=MappingProxyType(r_symbols),
        qdims=qdims,
    )


def load_model(path):
    """Load a model file; raises ModelFormatError with the offending line."""
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    model = parse_model(text, source=path)
    logger.info(f"Loaded model {model.name} from {path} ({model.size} labels)")
    return model


@lru_cache(maxsize=None)
def _load_builtin(member):
    return load_model(os.path.join(MODELS_DIR, member.value))


def builtin_model(name, z2_exchange=-1):
    """One of the shipped models; AbelianZ2 takes the exchange sign (−1 fermion, +1 boson)."""
    member = ModelName.parse(name)
    model = _load_builtin(member)
    if member is ModelName.AbelianZ2 and z2_exchange != -1:
        if z2_exchange not in (1, -1):
            raise ValueError("z2_exchange must be +1 or -1")
        psi = model.label_index('psi')
        model = with_r_symbol(model, (psi, psi, 0), complex(z2_exchange))
    return model


# Derived models

def with_f_symbol(m, key, value):
    """Copy of m with one F-symbol replaced."""
    if key not in m.f_symbols:
        raise MissingSymbol(f"{m.name}: no F-symbol to replace at {key}")
    symbols = dict(m.f_symbols)
    symbols[key] = complex(value)
    return replace(m, fusion=m.fusion.copy(), qdims=m.qdims.copy(),
                   f_symbols=MappingProxyType(symbols))


def with_r_symbol(m, key, value):
    """Copy of m with one R-symbol replaced."""
    if key not in m.r_symbols:
        raise MissingSymbol(f"{m.name}: no R-symbol to replace at {key}")
    symbols = dict(m.r_symbols)
    symbols[key] = complex(value)
    return replace(m, fusion=m.fusion.copy(), qdims=m.qdims.copy(),
                   r_symbols=MappingProxyType(symbols))


def regauge_model(m, seed):
    """Apply a random symmetric vertex-phase gauge transformation.

    Vertex phases u^{ab}_c = u^{ba}_c are drawn uniformly; vertices with a
    vacuum leg keep u = 1. R-symbols are invariant under symmetric phases.
    """
    rng = np.random.default_rng(seed)
    u = {}
    for a, b, c in itertools.product(range(m.size), repeat=3):
        if not m.fusion[a, b, c] or (a, b, c) in u:
            continue
        if a == 0 or b == 0:
            phase = 1.0
        else:
            phase = np.exp(2j * np.pi * rng.random())
        u[(a, b, c)] = phase
        u[(b, a, c)] = phase

    symbols = {}
    for (a, b, c, d, e, f), value in m.f_symbols.items():
        factor = u[(a, b, e)] * u[(e, c, d)] / (u[(b, c, f)] * u[(a, f, d)])
        symbols[(a, b, c, d, e, f)] = complex(factor * value)

    logger.debug(f"Regauged model {m.name} with seed {seed}")
    return replace(m, name=f"{m.name}[gauge {seed}]", fusion=m.fusion.copy(),
                   qdims=m.qdims.copy(), f_symbols=MappingProxyType(symbols))


def model_to_json(m):
    """Model document with every symbol listed explicitly."""
    names = m.labels
    fusion = [[names[a], names[b], names[c]]
              for a, b, c in itertools.product(range(m.size), repeat=3) if m.fusion[a, b, c]]
    f_symbols = [
        {'abcd': [names[a], names[b], names[c], names[d]], 'e': names[e], 'f': names[f],
         're': value.real, 'im': value.imag}
        for (a, b, c, d, e, f), value in sorted(m.f_symbols.items())
    ]
    r_symbols = [
        {'a': names[a], 'b': names[b], 'c': names[c], 're': value.real, 'im': value.imag}
        for (a, b, c), value in sorted(m.r_symbols.items())
    ]
    return {
        'name': m.name,
        'labels': list(names),
        'fusion': fusion,
        'f_symbols': f_symbols,
        'r_symbols': r_symbols,
        'qdims': [float(x) for x in m.qdims],
    }
