"""Form-valued fields on the flat torus T⁶ = [0, 2π)⁶.

Two backends share one set of operators:

``spectral``
    ``values`` has shape ``(C(6, k), n1, ..., n6)``; derivatives are taken
    with FFTs along active axes (inert axes have size 1 and zero derivative).
``analytic``
    ``values`` is an object array of sympy expressions in ``x1..x6``;
    derivatives are exact.  Used for non-periodic polynomial data such as
    φ = Σ|zⁱ|² and as the oracle for the spectral path.

The pointwise algebra (wedge, star, scalar products) is the same code for both
because :mod:`symcalabi.exterior` works on float and object arrays alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from pathlib import Path

import numpy as np
import scipy.fft as sfft
import sympy

from .exterior import DIM, KForm, SymplecticFrame, ncomp, wedge_arrays

X = sympy.symbols("x1:7", real=True)

SPECTRAL = "spectral"
ANALYTIC = "analytic"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid; axes of size 1 are inert."""

    sizes: tuple[int, ...]
    active_mask: tuple[bool, ...] | None = None

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        if len(sizes) != DIM or any(n < 1 for n in sizes):
            raise ValueError(f"need 6 positive sizes, got {sizes}")
        mask = self.active_mask
        if mask is None:
            mask = tuple(n > 1 for n in sizes)
        mask = tuple(bool(m) for m in mask)
        for n, m in zip(sizes, mask):
            if not m and n != 1:
                raise ValueError("inert axes must have size 1")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "active_mask", mask)

    @classmethod
    def with_active(cls, n: int, active=(1, 2, 3, 4)) -> "Grid":
        """``n`` points on each of the 1-based ``active`` axes."""
        return cls(tuple(n if a + 1 in active else 1 for a in range(DIM)))

    @property
    def npoints(self) -> int:
        return prod(self.sizes)

    @property
    def active_axes(self) -> tuple[int, ...]:
        return tuple(a for a in range(DIM) if self.active_mask[a])

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2 * np.pi / n for n in self.sizes)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for a, n in enumerate(self.sizes):
            shape = [1] * DIM
            shape[a] = n
            out.append((2 * np.pi * np.arange(n) / n).reshape(shape))
        return out

    def wavenumbers(self) -> list[np.ndarray]:
        """Integer wavenumbers (full FFT layout), broadcastable."""
        out = []
        for a, n in enumerate(self.sizes):
            shape = [1] * DIM
            shape[a] = n
            out.append(np.fft.fftfreq(n, 1.0 / n).reshape(shape))
        return out

    def padded(self) -> "Grid":
        return Grid(tuple((3 * n + 1) // 2 if n > 1 else 1 for n in self.sizes), self.active_mask)


@dataclass(frozen=True, eq=False)
class FormField:
    degree: int
    values: np.ndarray
    grid: Grid | None = None
    backend: str = SPECTRAL

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[0] != ncomp(self.degree):
            raise ValueError(f"degree-{self.degree} field needs {ncomp(self.degree)} components")
        if self.backend == SPECTRAL:
            if self.grid is None or v.shape[1:] != self.grid.sizes:
                raise ValueError("spectral field values must match the grid shape")
        elif self.backend != ANALYTIC:
            raise ValueError(f"unknown backend {self.backend!r}")
        object.__setattr__(self, "values", v)

    # construction

    @classmethod
    def scalar(cls, grid: Grid, values) -> "FormField":
        v = np.broadcast_to(np.asarray(values, dtype=float), grid.sizes)
        return cls(0, np.array(v)[None], grid)

    @classmethod
    def zeros(cls, grid: Grid, degree: int = 0) -> "FormField":
        return cls(degree, np.zeros((ncomp(degree),) + grid.sizes), grid)

    @classmethod
    def constant(cls, grid: Grid, form: KForm) -> "FormField":
        c = np.asarray(form.coeffs, dtype=float).reshape((-1,) + (1,) * DIM)
        return cls(form.degree, np.broadcast_to(c, (c.shape[0],) + grid.sizes).copy(), grid)

    @classmethod
    def analytic(cls, degree: int, exprs, grid: Grid | None = None) -> "FormField":
        arr = np.empty(ncomp(degree), dtype=object)
        for i, e in enumerate(exprs):
            arr[i] = sympy.sympify(e)
        return cls(degree, arr, grid, ANALYTIC)

    @classmethod
    def analytic_constant(cls, form: KForm, grid: Grid | None = None) -> "FormField":
        return cls.analytic(form.degree, [sympy.nsimplify(c) for c in form.coeffs], grid)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "FormField":
        """Scalar field sampled from ``fn(x1, ..., x6)``."""
        return cls.scalar(grid, fn(*grid.coords()))

    # conversions

    def evaluate(self, grid: Grid | None = None) -> "FormField":
        """Sample an analytic field on ``grid`` (returns a spectral field)."""
        if self.backend == SPECTRAL:
            return self
        grid = grid or self.grid
        if grid is None:
            raise ValueError("no grid to evaluate on")
        coords = grid.coords()
        out = np.empty((ncomp(self.degree),) + grid.sizes)
        for i, e in enumerate(self.values):
            f = sympy.lambdify(X, e, "numpy")
            out[i] = np.broadcast_to(f(*coords), grid.sizes)
        return FormField(self.degree, out, grid)

    def at(self, point) -> KForm:
        """Pointwise value; ``point`` is a grid index tuple or (analytic) coordinates."""
        if self.backend == ANALYTIC:
            subs = dict(zip(X, point))
            return KForm(self.degree, np.array([sympy.sympify(e).subs(subs) for e in self.values], dtype=object))
        return KForm(self.degree, self.values[(slice(None),) + tuple(point)])

    def simplify(self) -> "FormField":
        if self.backend != ANALYTIC:
            return self
        return FormField(self.degree, np.array([sympy.expand(e) for e in self.values], dtype=object), self.grid, ANALYTIC)

    # arithmetic

    def _like(self, values, degree=None) -> "FormField":
        return FormField(self.degree if degree is None else degree, values, self.grid, self.backend)

    def __add__(self, other: "FormField") -> "FormField":
        _check_compatible(self, other)
        return self._like(self.values + other.values)

    def __sub__(self, other: "FormField") -> "FormField":
        _check_compatible(self, other)
        return self._like(self.values - other.values)

    def __neg__(self) -> "FormField":
        return self._like(-self.values)

    def __mul__(self, scalar) -> "FormField":
        if isinstance(scalar, FormField):
            if self.degree == 0:
                return mul_scalar_field(self, scalar)
            return mul_scalar_field(scalar, self)
        return self._like(self.values * scalar)

    __rmul__ = __mul__

    def max_norm(self) -> float:
        if self.backend == ANALYTIC:
            raise TypeError("max_norm needs a spectral field")
        return float(np.max(np.abs(self.values), initial=0.0))

    def mean(self) -> np.ndarray:
        return self.values.reshape(self.values.shape[0], -1).mean(axis=1)


def _check_compatible(a: FormField, b: FormField):
    if a.degree != b.degree:
        raise ValueError(f"degree mismatch {a.degree} vs {b.degree}")
    if a.backend != b.backend:
        raise ValueError("backend mismatch")
    if a.backend == SPECTRAL and a.grid != b.grid:
        raise ValueError("grid mismatch")


def mul_scalar_field(phi: FormField, f: FormField) -> FormField:
    """Pointwise product φ·f of a 0-form field with a k-form field."""
    if phi.degree != 0:
        raise ValueError("first factor must be a 0-form field")
    if phi.backend != f.backend:
        if f.backend == ANALYTIC and phi.backend == SPECTRAL:
            f = f.evaluate(phi.grid)
        elif phi.backend == ANALYTIC:
            phi = phi.evaluate(f.grid)
    return f._like(phi.values[0] * f.values)


# derivatives


def spectral_gradient(values: np.ndarray, grid: Grid) -> list[np.ndarray | None]:
    """∂_a of an array whose trailing axes are the grid; ``None`` on inert axes."""
    lead = values.ndim - DIM
    active = grid.active_axes
    out: list[np.ndarray | None] = [None] * DIM
    if not active:
        return out
    axes = tuple(lead + a for a in active)
    shape = tuple(grid.sizes[a] for a in active)
    fh = sfft.rfftn(values, axes=axes)
    last = active[-1]
    for a in active:
        n = grid.sizes[a]
        k = np.fft.rfftfreq(n, 1.0 / n) if a == last else np.fft.fftfreq(n, 1.0 / n)
        if n % 2 == 0:
            k[np.abs(k) == n // 2] = 0.0  # Nyquist mode of an odd derivative
        bshape = [1] * DIM
        bshape[a] = k.size
        out[a] = sfft.irfftn(fh * (1j * k.reshape(bshape)), s=shape, axes=axes)
    return out


def gradient_arrays(f: FormField) -> list[np.ndarray | None]:
    """∂_a of every component; exact for the analytic backend."""
    if f.backend == ANALYTIC:
        return [np.array([sympy.diff(e, X[a]) for e in f.values], dtype=object) for a in range(DIM)]
    return spectral_gradient(f.values, f.grid)


def ext_d(f: FormField) -> FormField:
    """Exterior derivative, dα = Σ_a e^a ∧ ∂_a α."""
    if f.degree >= DIM:
        raise ValueError("d of a 6-form is undefined here")
    grads = gradient_arrays(f)
    if f.backend == ANALYTIC:
        out = np.empty(ncomp(f.degree + 1), dtype=object)
        out[...] = sympy.Integer(0)
    else:
        out = np.zeros((ncomp(f.degree + 1),) + f.grid.sizes)
    eye = np.eye(DIM, dtype=int)
    for a, g in enumerate(grads):
        if g is None:
            continue
        e = eye[a].reshape((DIM,) + (1,) * (g.ndim - 1))
        out = out + wedge_arrays(1, e, f.degree, g)
    return f._like(out, f.degree + 1)


def _frame_for(f: FormField, frame: SymplecticFrame) -> SymplecticFrame:
    return frame.exact_twin() if f.backend == ANALYTIC else frame.float_twin()


def star(f: FormField, frame: SymplecticFrame) -> FormField:
    fr = _frame_for(f, frame)
    return f._like(fr.star_arrays(f.degree, f.values), DIM - f.degree)


def d_s(f: FormField, frame: SymplecticFrame) -> FormField:
    """Symplectic codifferential d^s α = (−1)^{k+1} ∗_s d ∗_s α."""
    k = f.degree
    if k == 0:
        return _zero_like(f, 0)
    out = star(ext_d(star(f, frame)), frame)
    return out if (k + 1) % 2 == 0 else -out


def _zero_like(f: FormField, degree: int) -> FormField:
    if f.backend == ANALYTIC:
        return FormField.analytic(degree, [0] * ncomp(degree), f.grid)
    return FormField.zeros(f.grid, degree)


def dd_s(f: FormField, frame: SymplecticFrame) -> FormField:
    return ext_d(d_s(f, frame))


def deform(phi: FormField, Omega: tuple[FormField, FormField], frame: SymplecticFrame, sign: int = 1):
    """(ρ̃, σ̃) = (ρ + s·dd^s(φσ), σ − s·dd^s(φρ))."""
    if sign not in (1, -1):
        raise ValueError("sign must be ±1")
    rho, sigma = Omega
    a = dd_s(mul_scalar_field(phi, sigma), frame)
    b = dd_s(mul_scalar_field(phi, rho), frame)
    rho, sigma = _match_backend(rho, a), _match_backend(sigma, b)
    if sign > 0:
        return rho + a, sigma - b
    return rho - a, sigma + b


def _match_backend(base: FormField, like: FormField) -> FormField:
    if base.backend == like.backend:
        return base
    return base.evaluate(like.grid)


def d_c(phi: FormField, J) -> FormField:
    """(d^cφ)(X) = −dφ(JX); ``J[:, b]`` is the image of e_b."""
    if phi.degree != 0:
        raise ValueError("d_c acts on functions")
    J = np.asarray(J)
    dphi = ext_d(phi).values
    if phi.backend == ANALYTIC:
        Jx = np.vectorize(sympy.nsimplify, otypes=[object])(J)
        out = np.array([-sum(dphi[a] * Jx[a, b] for a in range(DIM)) for b in range(DIM)], dtype=object)
    else:
        out = -np.einsum("ab,a...->b...", J, dphi)
    return phi._like(out, 1)


# dealiased products


def _pad_spectrum(fh: np.ndarray, grid: Grid, big: Grid) -> np.ndarray:
    out = np.zeros(fh.shape[:1] + big.sizes, dtype=complex)
    slices_src = []
    slices_dst = []
    for a in range(DIM):
        n, m = grid.sizes[a], big.sizes[a]
        if n == 1:
            slices_src.append([slice(0, 1)])
            slices_dst.append([slice(0, 1)])
            continue
        h = (n - 1) // 2  # modes 0..h and -h..-1 kept; Nyquist dropped
        slices_src.append([slice(0, h + 1), slice(n - h, n)])
        slices_dst.append([slice(0, h + 1), slice(m - h, m)])
    for combo in np.ndindex(*[len(s) for s in slices_src]):
        src = tuple(slices_src[a][c] for a, c in enumerate(combo))
        dst = tuple(slices_dst[a][c] for a, c in enumerate(combo))
        out[(slice(None),) + dst] = fh[(slice(None),) + src]
    return out


def _truncate_spectrum(fh: np.ndarray, big: Grid, grid: Grid) -> np.ndarray:
    out = np.zeros(fh.shape[:1] + grid.sizes, dtype=complex)
    slices_src = []
    slices_dst = []
    for a in range(DIM):
        n, m = grid.sizes[a], big.sizes[a]
        if n == 1:
            slices_src.append([slice(0, 1)])
            slices_dst.append([slice(0, 1)])
            continue
        h = (n - 1) // 2
        slices_dst.append([slice(0, h + 1), slice(n - h, n)])
        slices_src.append([slice(0, h + 1), slice(m - h, m)])
    for combo in np.ndindex(*[len(s) for s in slices_src]):
        src = tuple(slices_src[a][c] for a, c in enumerate(combo))
        dst = tuple(slices_dst[a][c] for a, c in enumerate(combo))
        out[(slice(None),) + dst] = fh[(slice(None),) + src]
    return out


def to_padded(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Interpolate component arrays onto the 3/2-padded grid."""
    big = grid.padded()
    axes = tuple(1 + a for a in grid.active_axes)
    if not axes:
        return values
    fh = np.fft.fftn(values, axes=axes)
    scale = big.npoints / grid.npoints
    return np.fft.ifftn(_pad_spectrum(fh, grid, big) * scale, axes=axes).real


def from_padded(values: np.ndarray, grid: Grid) -> np.ndarray:
    big = grid.padded()
    axes = tuple(1 + a for a in grid.active_axes)
    if not axes:
        return values
    fh = np.fft.fftn(values, axes=axes)
    scale = grid.npoints / big.npoints
    return np.fft.ifftn(_truncate_spectrum(fh, big, grid) * scale, axes=axes).real


def wedge_fields(a: FormField, b: FormField, dealias: bool = True) -> FormField:
    """a ∧ b; spectral products are formed on the 3/2-padded grid when ``dealias``."""
    if a.backend == ANALYTIC and b.backend == ANALYTIC:
        return a._like(wedge_arrays(a.degree, a.values, b.degree, b.values), a.degree + b.degree)
    a = _match_backend(a, b)
    b = _match_backend(b, a)
    if not dealias:
        return a._like(wedge_arrays(a.degree, a.values, b.degree, b.values), a.degree + b.degree)
    g = a.grid
    prod_big = wedge_arrays(a.degree, to_padded(a.values, g), b.degree, to_padded(b.values, g))
    return a._like(from_padded(prod_big, g), a.degree + b.degree)


# random band-limited data


def random_field(grid: Grid, degree: int, rng: np.random.Generator, kmax: int | None = None,
                 amplitude: float = 1.0) -> FormField:
    """Real band-limited field with modes |k_a| ≤ kmax on active axes."""
    if kmax is None:
        kmax = max(1, min(grid.sizes[a] for a in grid.active_axes) // 4) if grid.active_axes else 0
    shape = (ncomp(degree),) + grid.sizes
    fh = np.zeros(shape, dtype=complex)
    ks = grid.wavenumbers()
    mask = np.ones(grid.sizes, dtype=bool)
    for a in grid.active_axes:
        mask &= np.abs(ks[a]) <= kmax
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    fh[:, mask] = noise[:, mask]
    axes = tuple(1 + a for a in range(DIM))
    vals = np.fft.ifftn(fh, axes=axes).real
    vals *= amplitude / max(np.max(np.abs(vals)), 1e-300)
    return FormField(degree, vals, grid)


# HXF1 field dumps


def write_hxf(path, f: FormField) -> None:
    """Write ``HXF1 k n1..n6`` then float64 LE values, grid-major, component-minor."""
    if f.backend != SPECTRAL:
        f = f.evaluate()
    header = "HXF1 " + " ".join(str(x) for x in (f.degree,) + f.grid.sizes) + "\n"
    data = np.moveaxis(f.values, 0, -1).astype("<f8", copy=False)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(data).tobytes())


class HXFError(ValueError):
    pass


def read_hxf(path) -> FormField:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise HXFError("missing header line")
    parts = raw[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 8 or parts[0] != "HXF1":
        raise HXFError(f"bad header: {raw[:nl]!r}")
    try:
        k, *sizes = (int(p) for p in parts[1:])
    except ValueError as exc:
        raise HXFError(f"bad header: {raw[:nl]!r}") from exc
    grid = Grid(tuple(sizes))
    count = ncomp(k) * grid.npoints
    body = raw[nl + 1:]
    if len(body) != 8 * count:
        raise HXFError(f"expected {8 * count} data bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f8").reshape(grid.sizes + (ncomp(k),))
    return FormField(k, np.moveaxis(data, -1, 0).astype(float), grid)

