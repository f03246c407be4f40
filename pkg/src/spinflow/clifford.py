"""Real Clifford algebra Cl(3) and the even-spinor module.

Multivector coefficients are stored in the blade order::

    1, E1, E2, E3, E12, E13, E23, E123

Even spinors keep only ``(s, b12, b13, b23)``.  Every product is driven by a
single 8x8 structure table built from bitmask blade arithmetic, so the
array-level helpers (``gp``, ``rev``) work on any ``(..., 8)`` batch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BLADES = ("1", "E1", "E2", "E3", "E12", "E13", "E23", "E123")
_MASKS = (0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111)
_INDEX_OF_MASK = {m: i for i, m in enumerate(_MASKS)}
GRADES = np.array([bin(m).count("1") for m in _MASKS])

# even spinor slot -> multivector slot
EVEN_SLOTS = (0, 4, 5, 6)

ROTOR_TOL = 1e-12


class NodalPointError(ValueError):
    """Raised where an operation needs a nonzero amplitude and finds zero."""


def _reorder_sign(a: int, b: int) -> int:
    # number of transpositions needed to sort the concatenated generator word
    a >>= 1
    swaps = 0
    while a:
        swaps += bin(a & b).count("1")
        a >>= 1
    return -1 if swaps & 1 else 1


def _build_table() -> tuple[np.ndarray, np.ndarray]:
    index = np.zeros((8, 8), dtype=np.intp)
    sign = np.zeros((8, 8))
    for i, ma in enumerate(_MASKS):
        for j, mb in enumerate(_MASKS):
            index[i, j] = _INDEX_OF_MASK[ma ^ mb]
            sign[i, j] = _reorder_sign(ma, mb)
    return index, sign


# Module-level so a test can corrupt it and watch the verification suite fail.
TABLE_INDEX, TABLE_SIGN = _build_table()


def structure_table() -> tuple[np.ndarray, np.ndarray]:
    """Return copies of ``(index, sign)`` with ``E_i E_j = sign[i, j] * E_index[i, j]``."""
    return TABLE_INDEX.copy(), TABLE_SIGN.copy()


def gp(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Geometric product of broadcastable ``(..., 8)`` coefficient arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape)
    for i in range(8):
        ai = a[..., i]
        for j in range(8):
            out[..., TABLE_INDEX[i, j]] += TABLE_SIGN[i, j] * ai * b[..., j]
    return out


_REVERSE_SIGN = np.where((GRADES == 2) | (GRADES == 3), -1.0, 1.0)


def rev(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float) * _REVERSE_SIGN


@dataclass(frozen=True)
class Multivector:
    """A general element of Cl(3)."""

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c12: float = 0.0
    c13: float = 0.0
    c23: float = 0.0
    c123: float = 0.0

    @classmethod
    def from_array(cls, arr) -> "Multivector":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (8,):
            raise ValueError(f"expected 8 coefficients, got shape {arr.shape}")
        return cls(*(float(x) for x in arr))

    @classmethod
    def blade(cls, name: str, coef: float = 1.0) -> "Multivector":
        arr = np.zeros(8)
        arr[BLADES.index(name)] = coef
        return cls.from_array(arr)

    @classmethod
    def vector(cls, v) -> "Multivector":
        v = tuple(float(x) for x in v)
        v = v + (0.0,) * (3 - len(v))
        return cls(c1=v[0], c2=v[1], c3=v[2])

    def to_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.c2, self.c3,
                         self.c12, self.c13, self.c23, self.c123])

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Multivector(c0=float(other))
        if not isinstance(other, Multivector):
            return NotImplemented
        return Multivector.from_array(self.to_array() + other.to_array())

    __radd__ = __add__

    def __neg__(self):
        return Multivector.from_array(-self.to_array())

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Multivector(c0=float(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Multivector.from_array(self.to_array() * other)
        if isinstance(other, EvenSpinor):
            other = other.to_multivector()
        if not isinstance(other, Multivector):
            return NotImplemented
        return geometric_product(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return Multivector.from_array(self.to_array() * other)
        return NotImplemented

    def __truediv__(self, other: float):
        return Multivector.from_array(self.to_array() / other)

    def reverse(self) -> "Multivector":
        return reverse(self)

    def grade(self, k: int) -> "Multivector":
        return grade(self, k)

    def allclose(self, other: "Multivector", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_array(), other.to_array(), rtol=0, atol=atol))

    def is_even(self, atol: float = 0.0) -> bool:
        odd = self.to_array()[GRADES % 2 == 1]
        return bool(np.all(np.abs(odd) <= atol))

    def to_even(self, atol: float = 1e-12) -> "EvenSpinor":
        if not self.is_even(atol):
            raise ValueError(f"{self} has odd-grade components")
        arr = self.to_array()
        return EvenSpinor(*(float(arr[i]) for i in EVEN_SLOTS))


E1 = Multivector(c1=1.0)
E2 = Multivector(c2=1.0)
E3 = Multivector(c3=1.0)
E12 = Multivector(c12=1.0)
E13 = Multivector(c13=1.0)
E23 = Multivector(c23=1.0)
E123 = Multivector(c123=1.0)
BASIS_VECTORS = (E1, E2, E3)


@dataclass(frozen=True)
class EvenSpinor:
    """Element of the even subalgebra: scalar plus bivector."""

    s: float = 0.0
    b12: float = 0.0
    b13: float = 0.0
    b23: float = 0.0

    @classmethod
    def from_array(cls, arr) -> "EvenSpinor":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {arr.shape}")
        return cls(*(float(x) for x in arr))

    def to_array(self) -> np.ndarray:
        return np.array([self.s, self.b12, self.b13, self.b23])

    def to_multivector(self) -> Multivector:
        arr = np.zeros(8)
        arr[list(EVEN_SLOTS)] = self.to_array()
        return Multivector.from_array(arr)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return EvenSpinor.from_array(self.to_array() * other)
        if isinstance(other, EvenSpinor):
            return geometric_product(self.to_multivector(), other.to_multivector()).to_even()
        if isinstance(other, Multivector):
            return geometric_product(self.to_multivector(), other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return EvenSpinor.from_array(self.to_array() * other)
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, EvenSpinor):
            return NotImplemented
        return EvenSpinor.from_array(self.to_array() + other.to_array())

    def __sub__(self, other):
        if not isinstance(other, EvenSpinor):
            return NotImplemented
        return EvenSpinor.from_array(self.to_array() - other.to_array())

    def __truediv__(self, other: float):
        return EvenSpinor.from_array(self.to_array() / other)

    def reverse(self) -> "EvenSpinor":
        return EvenSpinor(self.s, -self.b12, -self.b13, -self.b23)

    def allclose(self, other: "EvenSpinor", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_array(), other.to_array(), rtol=0, atol=atol))


@dataclass(frozen=True)
class Rotor(EvenSpinor):
    """Unit-amplitude even spinor, ``R R~ = 1``."""

    def __post_init__(self):
        if abs(amplitude(self) - 1.0) > ROTOR_TOL:
            raise ValueError(f"rotor amplitude {amplitude(self)!r} is not 1")

    @classmethod
    def from_angle(cls, angle: float, plane: str = "E12") -> "Rotor":
        """Rotor ``exp(-B angle/2)`` turning vectors by ``angle`` inside ``plane``."""
        c, s = np.cos(angle / 2), np.sin(angle / 2)
        comps = {"E12": (c, -s, 0.0, 0.0), "E13": (c, 0.0, -s, 0.0), "E23": (c, 0.0, 0.0, -s)}
        return cls(*comps[plane])


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    return Multivector.from_array(gp(a.to_array(), b.to_array()))


def reverse(a):
    if isinstance(a, EvenSpinor):
        return a.reverse()
    return Multivector.from_array(rev(a.to_array()))


def grade(a: Multivector, k: int) -> Multivector:
    if k not in (0, 1, 2, 3):
        raise ValueError(f"grade must be 0..3, got {k}")
    return Multivector.from_array(np.where(GRADES == k, a.to_array(), 0.0))


def amplitude(psi: EvenSpinor) -> float:
    return float(np.sqrt(psi.s**2 + psi.b12**2 + psi.b13**2 + psi.b23**2))


def polar_decompose(psi: EvenSpinor) -> tuple[float, Rotor]:
    """Split ``psi = rho * R`` with ``rho = amplitude(psi)`` and ``R`` a unit rotor.

    Raises
    ------
    NodalPointError
        If ``psi`` vanishes, where the rotor is undefined.
    """
    rho = amplitude(psi)
    if rho == 0.0:
        raise NodalPointError("polar decomposition undefined at a nodal point (psi = 0)")
    return rho, Rotor.from_array(psi.to_array() / rho)


def _as_vector(v) -> Multivector:
    if isinstance(v, Multivector):
        if np.any(grade(v, 1).to_array() != v.to_array()):
            raise ValueError("expected a grade-1 multivector")
        return v
    return Multivector.vector(v)


def sandwich(psi: EvenSpinor, v) -> Multivector:
    """``psi v psi~``; grade 1 for even ``psi`` with norm ``amplitude(psi)**2 |v|``."""
    m = psi.to_multivector()
    return m * _as_vector(v) * reverse(m)


def clifford_action(v, psi: EvenSpinor) -> EvenSpinor:
    """Left multiplication by the dual bivector ``E123 v``; squares to ``-|v|^2``."""
    return (E123 * _as_vector(v) * psi.to_multivector()).to_even()


def action_permutation(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Signed permutation realizing ``clifford_action(E_k, .)`` on ``(s, b12, b13, b23)``.

    ``out[..., i] = sign[i] * phi[..., perm[i]]``.  Derived from the current
    structure table, never hard-coded.
    """
    mat = np.zeros((4, 4))
    for j in range(4):
        basis = np.zeros(4)
        basis[j] = 1.0
        mat[:, j] = clifford_action(BASIS_VECTORS[k], EvenSpinor.from_array(basis)).to_array()
    perm = np.argmax(np.abs(mat), axis=1)
    sign = mat[np.arange(4), perm]
    if not np.allclose(np.abs(mat).sum(axis=1), 1.0):
        raise RuntimeError("Clifford action is not a signed permutation")
    return perm, sign


_action_cache: dict = {}


def act(k: int, phi: np.ndarray) -> np.ndarray:
    """Apply ``c(E_k)`` to a ``(..., 4)`` spinor array."""
    key = (k, TABLE_INDEX.tobytes(), TABLE_SIGN.tobytes())
    if key not in _action_cache:
        _action_cache[key] = action_permutation(k)
    perm, sign = _action_cache[key]
    return phi[..., perm] * sign


def act_vector(v: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Pointwise ``c(v) phi`` for a ``(..., dim)`` vector field ``v``."""
    out = np.zeros_like(phi)
    for k in range(v.shape[-1]):
        out += v[..., k, None] * act(k, phi)
    return out


def even_to_mv(phi: np.ndarray) -> np.ndarray:
    out = np.zeros(phi.shape[:-1] + (8,))
    out[..., list(EVEN_SLOTS)] = phi
    return out


def vec_to_mv(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.shape[:-1] + (8,))
    out[..., 1:1 + v.shape[-1]] = v
    return out
