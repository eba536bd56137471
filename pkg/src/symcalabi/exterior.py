"""Pointwise exterior algebra on a 6-dimensional real vector space.

Forms of degree ``k`` are stored as coefficient arrays of shape
``(C(6, k), *batch)`` over the sorted multi-index basis, enumerated in
colexicographic order.  The leading axis is the component axis; any trailing
axes are batch axes (grid points, random samples), so every routine here works
unchanged on a single form, a stack of forms, or a whole field.

Coefficient arrays may be float arrays or object arrays holding exact scalars
(``sympy.Rational`` or sympy expressions).  Exact arrays are paired with the
exact star tables of a :class:`SymplecticFrame` built with ``exact=True``.

Axis labels in the public API (``MultiIndex``, :func:`basis_form`) are 1-based
to match the usual ``e^{12}`` notation; internal tables are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np
import sympy

DIM = 6


def _colex_key(idx: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(reversed(idx))


@lru_cache(maxsize=None)
def basis(k: int) -> tuple[tuple[int, ...], ...]:
    """0-based sorted index tuples of degree ``k`` in colexicographic order."""
    if not 0 <= k <= DIM:
        raise ValueError(f"degree {k} outside 0..{DIM}")
    return tuple(sorted(combinations(range(DIM), k), key=_colex_key))


def rank(idx: tuple[int, ...]) -> int:
    """Colex rank of a strictly increasing 0-based index tuple."""
    return sum(comb(i, j + 1) for j, i in enumerate(idx))


def ncomp(k: int) -> int:
    return comb(DIM, k)


@dataclass(frozen=True)
class MultiIndex:
    """Strictly increasing tuple of 1-based axis labels."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(self.indices)
        if any(not 1 <= i <= DIM for i in idx):
            raise ValueError(f"axis labels must lie in 1..{DIM}: {idx}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        object.__setattr__(self, "indices", idx)

    @property
    def degree(self) -> int:
        return len(self.indices)

    @property
    def rank(self) -> int:
        return rank(tuple(i - 1 for i in self.indices))

    @classmethod
    def from_rank(cls, k: int, r: int) -> "MultiIndex":
        return cls(tuple(i + 1 for i in basis(k)[r]))


def _perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (0 if it has repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


# Sign tables. Built lazily once per degree pair and shared read-only.


@lru_cache(maxsize=None)
def wedge_table(k: int, l: int) -> tuple[tuple[int, int, int, int], ...]:
    """Nonzero entries ``(i, j, out, sign)`` of e^I ∧ e^J = sign e^K."""
    if k + l > DIM:
        raise ValueError(f"wedge degree overflow: {k} + {l} > {DIM}")
    out = []
    for i, I in enumerate(basis(k)):
        for j, J in enumerate(basis(l)):
            s = _perm_sign(I + J)
            if s:
                out.append((i, j, rank(tuple(sorted(I + J))), s))
    return tuple(out)


@lru_cache(maxsize=None)
def interior_table(k: int) -> tuple[tuple[int, int, int, int], ...]:
    """Nonzero entries ``(axis, i, out, sign)`` of ι_{e_axis} e^I."""
    if k < 1:
        raise ValueError("interior product needs degree >= 1")
    out = []
    for i, I in enumerate(basis(k)):
        for pos, m in enumerate(I):
            rest = I[:pos] + I[pos + 1:]
            out.append((m, i, rank(rest), -1 if pos % 2 else 1))
    return tuple(out)


def _zeros_like_result(n: int, *arrays) -> np.ndarray:
    batch = np.broadcast_shapes(*(np.shape(a)[1:] for a in arrays))
    if any(np.asarray(a).dtype == object for a in arrays):
        out = np.empty((n,) + batch, dtype=object)
        out[...] = sympy.Integer(0)
        return out
    dtype = np.result_type(*arrays)
    return np.zeros((n,) + batch, dtype=dtype)


def wedge_arrays(k: int, a, l: int, b) -> np.ndarray:
    """Wedge of coefficient arrays of degrees ``k`` and ``l``."""
    a = np.asarray(a)
    b = np.asarray(b)
    out = _zeros_like_result(ncomp(k + l), a, b)
    for i, j, o, s in wedge_table(k, l):
        if s > 0:
            out[o] = out[o] + a[i] * b[j]
        else:
            out[o] = out[o] - a[i] * b[j]
    return out


def interior_arrays(v, k: int, a) -> np.ndarray:
    """ι_v a for a vector ``v`` of shape ``(6, *batch)`` and a degree-``k`` array."""
    v = np.asarray(v)
    a = np.asarray(a)
    out = _zeros_like_result(ncomp(k - 1), v, a)
    for m, i, o, s in interior_table(k):
        out[o] = out[o] + s * v[m] * a[i]
    return out


@dataclass(frozen=True, eq=False)
class KForm:
    """A k-form on R^6 (optionally batched along trailing axes).

    Parameters
    ----------
    degree : int
        Form degree, 0..6.
    coeffs : array_like
        Shape ``(C(6, degree), *batch)``.
    """

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.degree <= DIM:
            raise ValueError(f"degree {self.degree} outside 0..{DIM}")
        c = np.asarray(self.coeffs)
        if c.ndim == 0 or c.shape[0] != ncomp(self.degree):
            raise ValueError(
                f"degree-{self.degree} form needs {ncomp(self.degree)} coefficients, "
                f"got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, degree: int) -> "KForm":
        return cls(degree, np.zeros(ncomp(degree)))

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    def __add__(self, other: "KForm") -> "KForm":
        _check_same_degree(self, other)
        return KForm(self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other: "KForm") -> "KForm":
        _check_same_degree(self, other)
        return KForm(self.degree, self.coeffs - other.coeffs)

    def __neg__(self) -> "KForm":
        return KForm(self.degree, -self.coeffs)

    def __mul__(self, scalar) -> "KForm":
        return KForm(self.degree, self.coeffs * scalar)

    __rmul__ = __mul__

    def __xor__(self, other: "KForm") -> "KForm":
        return wedge(self, other)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.coeffs.astype(float)), initial=0.0))

    def __repr__(self) -> str:
        if self.coeffs.ndim > 1:
            return f"KForm(degree={self.degree}, batch={self.batch_shape})"
        terms = []
        for r, c in enumerate(self.coeffs):
            if c != 0:
                label = "".join(str(i + 1) for i in basis(self.degree)[r]) or "1"
                terms.append(f"{c}*e{label}")
        return f"KForm({self.degree}: {' + '.join(terms) or '0'})"


def _check_same_degree(a: KForm, b: KForm):
    if a.degree != b.degree:
        raise ValueError(f"degree mismatch: {a.degree} vs {b.degree}")


def basis_form(*labels: int, coeff=1.0) -> KForm:
    """Form ``coeff * e^{labels}`` with 1-based labels, sign-corrected if unsorted."""
    idx = tuple(i - 1 for i in labels)
    s = _perm_sign(idx)
    k = len(idx)
    c = np.zeros(ncomp(k), dtype=object if isinstance(coeff, sympy.Basic) else float)
    if s:
        c[rank(tuple(sorted(idx)))] = s * coeff
    return KForm(k, c)


def wedge(a: KForm, b: KForm) -> KForm:
    if a.degree + b.degree > DIM:
        raise ValueError(f"wedge degree overflow: {a.degree} + {b.degree} > {DIM}")
    return KForm(a.degree + b.degree, wedge_arrays(a.degree, a.coeffs, b.degree, b.coeffs))


def interior(v, a: KForm) -> KForm:
    if a.degree < 1:
        raise ValueError("interior product of a 0-form is undefined")
    return KForm(a.degree - 1, interior_arrays(v, a.degree, a.coeffs))


# Symplectic frame and star


def _det(m):
    if m.shape[0] == 0:
        return 1
    if m.dtype == object:
        return sympy.Matrix(m).det()
    return float(np.linalg.det(m))


@dataclass(eq=False)
class SymplecticFrame:
    """A constant symplectic form on R^6 with its star operator.

    ``omega_matrix[i, j] = ω(e_i, e_j)``.  The inverse bivector satisfies
    ``omega_inv @ omega_matrix = Id`` and pairs 1-forms as
    ``G(e^i, e^j) = omega_inv[j, i]``; ``G_k`` on k-forms is the determinant
    extension.  ``vol = ω³/3!``.

    The index order in ``G`` only flips the sign of d^s; this order gives
    dd^s(φ Im Ω) a positive multiple of Re Ω for φ = Σ|zⁱ|².
    """

    omega_matrix: np.ndarray
    exact: bool = False
    omega: KForm = field(init=False)
    omega_inv: np.ndarray = field(init=False)
    vol: KForm = field(init=False)
    orientation: int = field(init=False)
    _star: dict = field(init=False, default_factory=dict, repr=False)

    def __post_init__(self):
        m = np.array(self.omega_matrix, dtype=object if self.exact else float)
        if m.shape != (DIM, DIM):
            raise ValueError("omega must be a 6x6 matrix")
        if self.exact:
            m = np.vectorize(sympy.nsimplify, otypes=[object])(m)
            if any(m[i, j] + m[j, i] != 0 for i in range(DIM) for j in range(DIM)):
                raise ValueError("omega must be antisymmetric")
            inv = np.array(sympy.Matrix(m).inv(), dtype=object)
        else:
            if not np.allclose(m, -m.T, atol=0.0):
                raise ValueError("omega must be antisymmetric")
            inv = np.linalg.inv(m)
        self.omega_matrix = m
        c2 = np.array([m[i, j] for i, j in basis(2)], dtype=m.dtype)
        self.omega = KForm(2, c2)
        w3 = wedge(wedge(self.omega, self.omega), self.omega)
        vol = w3.coeffs / 6
        if vol[0] == 0:
            raise ValueError("omega is degenerate (ω³ = 0)")
        self.vol = KForm(DIM, vol)
        self.orientation = 1 if vol[0] > 0 else -1
        self.omega_inv = inv

    @classmethod
    def standard(cls, exact: bool = False) -> "SymplecticFrame":
        """ω = e^{12} + e^{34} + e^{56}."""
        m = np.zeros((DIM, DIM), dtype=int)
        for a in (0, 2, 4):
            m[a, a + 1] = 1
            m[a + 1, a] = -1
        return cls(m, exact=exact)

    def exact_twin(self) -> "SymplecticFrame":
        """The same frame with exact (sympy) star tables."""
        if self.exact:
            return self
        if "exact" not in self._star:
            self._star["exact"] = SymplecticFrame(self.omega_matrix, exact=True)
        return self._star["exact"]

    def float_twin(self) -> "SymplecticFrame":
        if not self.exact:
            return self
        if "float" not in self._star:
            self._star["float"] = SymplecticFrame(self.omega_matrix.astype(float))
        return self._star["float"]

    @property
    def vol_coeff(self):
        return self.vol.coeffs[0]

    def pairing(self, k: int, L: tuple[int, ...], I: tuple[int, ...]):
        """G_k(e^L, e^I) for 0-based sorted index tuples."""
        return _det(self.omega_inv.T[np.ix_(L, I)])

    def star_matrix(self, k: int) -> np.ndarray:
        """Matrix of ∗_s from degree ``k`` to degree ``6 - k``."""
        if k not in self._star:
            full = tuple(range(DIM))
            dtype = object if self.exact else float
            S = np.zeros((ncomp(DIM - k), ncomp(k)), dtype=dtype)
            if self.exact:
                S[...] = sympy.Integer(0)
            for i, I in enumerate(basis(k)):
                for L in basis(k):
                    comp = tuple(x for x in full if x not in L)
                    s = _perm_sign(L + comp)
                    S[rank(comp), i] = s * self.pairing(k, L, I) * self.vol_coeff
            self._star[k] = S
        return self._star[k]

    def star_arrays(self, k: int, a) -> np.ndarray:
        a = np.asarray(a)
        S = self.star_matrix(k)
        if a.dtype != object and S.dtype == object:
            S = S.astype(float)
        return np.tensordot(S, a, axes=(1, 0))


def star_s(frame: SymplecticFrame, a: KForm) -> KForm:
    """Symplectic Hodge star: b ∧ ∗_s a = G_k(b, a) vol for every k-form b."""
    return KForm(DIM - a.degree, frame.star_arrays(a.degree, a.coeffs))


def pairing_ratio(top: KForm | np.ndarray, frame: SymplecticFrame):
    """The scalar ``c`` with ``top = c * vol``."""
    coeffs = top.coeffs if isinstance(top, KForm) else np.asarray(top)
    if isinstance(top, KForm) and top.degree != DIM:
        raise ValueError("pairing_ratio needs a 6-form")
    return coeffs[0] / frame.vol_coeff


def holomorphic_volume(exact: bool = False) -> tuple[KForm, KForm]:
    """Real and imaginary parts of dz¹∧dz²∧dz³ with z^j = x^{2j-1} + i x^{2j}."""
    one = sympy.Integer(1) if exact else 1.0
    # dz^j = e^{2j-1} + i e^{2j}; expand the product over the 8 choices.
    re = np.zeros(ncomp(3), dtype=object if exact else float)
    im = np.zeros(ncomp(3), dtype=object if exact else float)
    if exact:
        re[...] = sympy.Integer(0)
        im[...] = sympy.Integer(0)
    for choice in range(8):
        idx = []
        phase = 0
        for j in range(3):
            bit = (choice >> j) & 1
            idx.append(2 * j + bit)
            phase += bit
        c = (1j) ** phase
        r = rank(tuple(idx))
        re[r] += int(round(c.real)) * one
        im[r] += int(round(c.imag)) * one
    return KForm(3, re), KForm(3, im)


def lefschetz(frame: SymplecticFrame, a: KForm) -> KForm:
    """ω ∧ a."""
    return wedge(frame.omega, a)
