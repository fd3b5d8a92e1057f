"""Dirichlet sine eigenbasis on an interval or rectangle.

Eigenpairs are closed form, so no numerical eigensolver is involved; the
variational-triple constants and the three norms (pivot space, form domain,
dual) are computed directly from the coefficients.  Coefficient vectors are
stored as (phase, log-magnitude) pairs with a linear mirror kept whenever it
is representable, which lets downstream code carry factors like e^{T*lambda}
without overflowing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .logspace import LOG_MAX, kahan_sum, log_sum_exp, logspace_add, merge_phase, split_phase

MIRROR_RTOL = 1e-12


class InvalidSpecError(ValueError):
    """Domain or basis description violates a documented precondition."""


class GridMismatchError(ValueError):
    """Sample array does not live on the expected quadrature grid."""


@dataclass(frozen=True)
class DomainSpec:
    """Interval (0, L) or rectangle (0, L1) x (0, L2) with homogeneous
    Dirichlet spectrum, plus the per-axis mode count."""

    kind: str
    lengths: tuple
    modes: int

    def __post_init__(self):
        if self.kind not in ("interval", "rectangle"):
            raise InvalidSpecError(f"unknown domain kind {self.kind!r}")
        lengths = tuple(float(x) for x in np.atleast_1d(np.asarray(self.lengths, dtype=float)))
        object.__setattr__(self, "lengths", lengths)
        want = 1 if self.kind == "interval" else 2
        if len(lengths) != want:
            raise InvalidSpecError(f"{self.kind} needs {want} length(s), got {len(lengths)}")
        if any(L <= 0.0 for L in lengths):
            raise InvalidSpecError("side lengths must be positive")
        if not (isinstance(self.modes, (int, np.integer)) and self.modes >= 1):
            raise InvalidSpecError("modes must be an integer >= 1")


def _simpson_weights(length: float, panels: int) -> np.ndarray:
    # composite Simpson; panels must be even
    if panels % 2 or panels < 2:
        raise InvalidSpecError("Simpson rule needs an even panel count >= 2")
    h = length / panels
    w = np.full(panels + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Sorted Dirichlet eigenpairs with their Simpson quadrature grid.

    Attributes:
        spec: the generating DomainSpec.
        lambdas: eigenvalues sorted ascending, shape (n_modes,).
        index_map: per-axis sine indices for each sorted position.
        axes: per-axis quadrature nodes (8*modes panels per axis).
        C1, C2, C3, C4: constants of the norm chain and of the Dirichlet
            form, valid for the spectral representation: ||v||_* <= C1 |v|
            <= C2 ||v||, |a(u,v)| <= C3 ||u|| ||v||, Re a(v,v) >= C4 ||v||^2.
    """

    spec: DomainSpec
    lambdas: np.ndarray
    index_map: tuple
    axes: tuple
    weights: tuple = field(repr=False)
    sines: tuple = field(repr=False)
    C1: float = 0.0
    C2: float = 0.0
    C3: float = 1.0
    C4: float = 1.0

    @property
    def n_modes(self) -> int:
        return int(self.lambdas.size)

    @property
    def ndim(self) -> int:
        return len(self.spec.lengths)

    def same_as(self, other: "EigenBasis") -> bool:
        return self.spec == other.spec

    def lift_coefficients(self, g_left: complex, g_right: complex) -> np.ndarray:
        """Sine coefficients of the affine function matching the endpoint
        values, i.e. g_left + (g_right - g_left) x / L.  Interval only."""
        if self.spec.kind != "interval":
            raise InvalidSpecError("affine lift coefficients are interval-only")
        (L,) = self.spec.lengths
        j = np.arange(1, self.spec.modes + 1, dtype=float)
        cosjpi = np.cos(j * np.pi)  # (-1)^j without accumulating phase error
        root = np.sqrt(2.0 / L)
        coeff_one = root * L * (1.0 - cosjpi) / (j * np.pi)
        coeff_x = root * (-(L ** 2) * cosjpi) / (j * np.pi)
        return g_left * coeff_one + ((g_right - g_left) / L) * coeff_x

    def mode_values(self, points) -> np.ndarray:
        """Eigenfunction values on arbitrary points, rows indexed by mode.
        Interval only; the tensor basis keeps its per-axis tables."""
        if self.spec.kind != "interval":
            raise InvalidSpecError("pointwise mode tables are interval-only")
        (L,) = self.spec.lengths
        x = np.asarray(points, dtype=float)
        jj = np.arange(1, self.spec.modes + 1, dtype=float)
        return np.sqrt(2.0 / L) * np.sin(np.outer(jj, x) * (np.pi / L))


def build_basis(spec: DomainSpec) -> EigenBasis:
    """Assemble the sorted eigenbasis and its quadrature tables."""
    N = spec.modes
    panels = 8 * N
    axes = []
    weights = []
    sines = []
    for L in spec.lengths:
        x = np.linspace(0.0, L, panels + 1)
        axes.append(x)
        weights.append(_simpson_weights(L, panels))
        jj = np.arange(1, N + 1, dtype=float)
        sines.append(np.sqrt(2.0 / L) * np.sin(np.outer(jj, x) * (np.pi / L)))
    if spec.kind == "interval":
        (L,) = spec.lengths
        j = np.arange(1, N + 1, dtype=float)
        lambdas = (j * np.pi / L) ** 2
        index_map = tuple((int(i),) for i in range(1, N + 1))
    else:
        L1, L2 = spec.lengths
        j = np.arange(1, N + 1, dtype=float)
        lam1 = (j * np.pi / L1) ** 2
        lam2 = (j * np.pi / L2) ** 2
        pairs = [(lam1[a] + lam2[b], a + 1, b + 1) for a in range(N) for b in range(N)]
        pairs.sort(key=lambda p: (p[0], p[1], p[2]))  # deterministic tie-break
        lambdas = np.array([p[0] for p in pairs])
        index_map = tuple((p[1], p[2]) for p in pairs)
    lam1 = float(lambdas[0])
    return EigenBasis(
        spec=spec,
        lambdas=lambdas,
        index_map=index_map,
        axes=tuple(axes),
        weights=tuple(weights),
        sines=tuple(sines),
        C1=lam1 ** -0.5,
        C2=1.0 / lam1,
        C3=1.0,
        C4=1.0,
    )


@dataclass(eq=False)
class SpectralVec:
    """Coefficient vector against an EigenBasis.

    Magnitudes live in log space (`logmag`, natural log) with unit complex
    `phase`; `coefficients` rebuilds the linear mirror, which is inf where
    the stored magnitude exceeds float64 range.
    """

    basis: EigenBasis
    phase: np.ndarray
    logmag: np.ndarray

    def __post_init__(self):
        self.phase = np.asarray(self.phase, dtype=np.complex128)
        self.logmag = np.asarray(self.logmag, dtype=np.float64)
        if self.phase.shape != (self.basis.n_modes,) or self.logmag.shape != (self.basis.n_modes,):
            raise InvalidSpecError("coefficient count does not match the basis")

    # -- constructors -------------------------------------------------
    @classmethod
    def from_coefficients(cls, basis: EigenBasis, coeffs) -> "SpectralVec":
        c = np.asarray(coeffs, dtype=np.complex128)
        if c.shape != (basis.n_modes,):
            raise InvalidSpecError("coefficient count does not match the basis")
        phase, logmag = split_phase(c)
        return cls(basis, phase, logmag)

    @classmethod
    def zero(cls, basis: EigenBasis) -> "SpectralVec":
        n = basis.n_modes
        return cls(basis, np.zeros(n, dtype=np.complex128), np.full(n, -np.inf))

    @classmethod
    def unit(cls, basis: EigenBasis, mode: int) -> "SpectralVec":
        """Basis vector for the given 1-based sorted mode index."""
        if not 1 <= mode <= basis.n_modes:
            raise InvalidSpecError(f"mode {mode} outside 1..{basis.n_modes}")
        v = cls.zero(basis)
        v.phase[mode - 1] = 1.0
        v.logmag[mode - 1] = 0.0
        return v

    # -- views ---------------------------------------------------------
    @property
    def coefficients(self) -> np.ndarray:
        return merge_phase(self.phase, self.logmag)

    @property
    def overflowed(self) -> bool:
        return bool(np.any(self.logmag > LOG_MAX))

    def copy(self) -> "SpectralVec":
        return SpectralVec(self.basis, self.phase.copy(), self.logmag.copy())

    def validate(self) -> None:
        """Check the representation invariant: unit phases and an agreeing
        linear mirror wherever the mirror is finite."""
        mag = np.abs(self.phase)
        live = self.logmag > -np.inf
        if not np.allclose(mag[live], 1.0, rtol=1e-12, atol=1e-12):
            raise AssertionError("phase entries must be unit modulus")
        if np.any(mag[~live] != 0.0):
            raise AssertionError("zero modes must carry phase 0")
        mirror = self.coefficients
        finite = np.isfinite(mirror.real) & np.isfinite(mirror.imag)
        back_p, back_l = split_phase(mirror[finite])
        ref_l = self.logmag[finite]
        both = np.isfinite(back_l) & np.isfinite(ref_l)
        if not np.allclose(back_l[both], ref_l[both], rtol=MIRROR_RTOL, atol=1e-300):
            raise AssertionError("linear mirror disagrees with the log representation")

    # -- arithmetic ----------------------------------------------------
    def scale_log(self, delta) -> "SpectralVec":
        """Multiply each mode by e^{delta_j}; exact in log space."""
        return SpectralVec(self.basis, self.phase.copy(), self.logmag + np.asarray(delta, dtype=float))

    def scaled(self, factor: complex) -> "SpectralVec":
        if factor == 0:
            return SpectralVec.zero(self.basis)
        fp, fl = split_phase(np.array([factor]))
        return SpectralVec(self.basis, self.phase * fp[0], self.logmag + fl[0])

    def __add__(self, other: "SpectralVec") -> "SpectralVec":
        if not self.basis.same_as(other.basis):
            raise InvalidSpecError("basis mismatch in addition")
        p, l = logspace_add(self.phase, self.logmag, other.phase, other.logmag)
        return SpectralVec(self.basis, p, l)

    def __sub__(self, other: "SpectralVec") -> "SpectralVec":
        if not self.basis.same_as(other.basis):
            raise InvalidSpecError("basis mismatch in subtraction")
        p, l = logspace_add(self.phase, self.logmag, -other.phase, other.logmag)
        return SpectralVec(self.basis, p, l)


@dataclass(frozen=True)
class TripleNorms:
    """The three squared-sum norms of one coefficient vector.

    normVstar <= C1 * normH <= C2 * normV always holds for a Dirichlet
    basis.  When the linear mirror overflows, the linear fields are inf and
    `overflowed` is set; the log fields stay exact either way.
    """

    normH: float
    normV: float
    normVstar: float
    log_normH: float
    log_normV: float
    log_normVstar: float
    overflowed: bool


def _weighted_norm(vec: SpectralVec, log_weight: np.ndarray):
    # 0.5 * log(sum(w_j |c_j|^2)); terms stay in ascending-eigenvalue order
    return 0.5 * log_sum_exp(2.0 * vec.logmag + log_weight)


def triple_norms(vec: SpectralVec) -> TripleNorms:
    """Pivot, form-domain and dual norms of a coefficient vector.

    Linear-scale sums use compensated summation in ascending mode order;
    when any term would overflow, the values are computed in log space and
    flagged.
    """
    lam = vec.basis.lambdas
    log_lam = np.log(lam)
    zero = np.zeros_like(lam)
    log_h = _weighted_norm(vec, zero)
    log_v = _weighted_norm(vec, log_lam)
    log_vstar = _weighted_norm(vec, -log_lam)
    # linear path is valid while the largest weighted term stays in range
    top = 2.0 * np.max(vec.logmag, initial=-np.inf) + float(np.max(log_lam)) + np.log(max(vec.basis.n_modes, 1))
    overflowed = bool(np.isfinite(top) and top > LOG_MAX - 2.0)
    if not overflowed:
        c2 = np.abs(vec.coefficients) ** 2
        h = float(np.sqrt(kahan_sum(c2)))
        v = float(np.sqrt(kahan_sum(lam * c2)))
        vstar = float(np.sqrt(kahan_sum(c2 / lam)))
    else:
        with np.errstate(over="ignore"):
            h, v, vstar = (float(np.exp(x)) for x in (log_h, log_v, log_vstar))
    return TripleNorms(h, v, vstar, float(log_h), float(log_v), float(log_vstar), overflowed)


def norm_h(vec: SpectralVec) -> float:
    return triple_norms(vec).normH


def rel_distance(a: SpectralVec, b: SpectralVec) -> float:
    """|a - b|_H / |b|_H, computed in log space so huge vectors compare."""
    diff = a - b
    num = _weighted_norm(diff, np.zeros_like(a.basis.lambdas))
    den = _weighted_norm(b, np.zeros_like(a.basis.lambdas))
    if den == -np.inf:
        return 0.0 if num == -np.inf else np.inf
    return float(np.exp(num - den))


# -- transforms ---------------------------------------------------------

def _check_grid(samples: np.ndarray, basis: EigenBasis) -> np.ndarray:
    want = tuple(ax.size for ax in basis.axes)
    got = np.asarray(samples)
    if got.shape != want:
        raise GridMismatchError(f"samples have shape {got.shape}, quadrature grid is {want}")
    return got


def analyze(samples, basis: EigenBasis) -> SpectralVec:
    """Project samples on the basis quadrature grid onto the eigenmodes.

    Composite Simpson with 8*modes panels per axis integrates products of
    basis modes exactly (discrete orthogonality), so analyze/synthesize
    round-trip on the span at machine precision.
    """
    f = _check_grid(samples, basis)
    if basis.ndim == 1:
        coeffs = (basis.sines[0] * basis.weights[0]) @ f.astype(np.complex128)
    else:
        Sx = basis.sines[0] * basis.weights[0]
        Sy = basis.sines[1] * basis.weights[1]
        grid = Sx @ f.astype(np.complex128) @ Sy.T
        coeffs = np.array([grid[a - 1, b - 1] for a, b in basis.index_map])
    return SpectralVec.from_coefficients(basis, coeffs)


def project_samples(samples, grid, basis: EigenBasis) -> SpectralVec:
    """Like analyze, but on a caller-supplied uniform 1-d grid covering
    [0, L] with an even panel count (used to project oracle output)."""
    if basis.ndim != 1:
        raise InvalidSpecError("sample projection on custom grids is 1-d only")
    x = np.asarray(grid, dtype=float)
    f = np.asarray(samples)
    if x.ndim != 1 or f.shape != x.shape:
        raise GridMismatchError("grid and samples must be matching 1-d arrays")
    (L,) = basis.spec.lengths
    if abs(x[0]) > 1e-12 or abs(x[-1] - L) > 1e-12 * max(1.0, L):
        raise GridMismatchError("grid must span [0, L]")
    steps = np.diff(x)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-10):
        raise GridMismatchError("grid must be uniform and increasing")
    if (x.size - 1) % 2 != 0:
        raise GridMismatchError("grid needs an even panel count")
    w = _simpson_weights(L, x.size - 1)
    j = np.arange(1, basis.spec.modes + 1, dtype=float)
    sines = np.sqrt(2.0 / L) * np.sin(np.outer(j, x) * (np.pi / L))
    coeffs = (sines * w) @ f.astype(np.complex128)
    return SpectralVec.from_coefficients(basis, coeffs)


def synthesize(vec: SpectralVec, points=None) -> np.ndarray:
    """Evaluate the mode sum pointwise.

    Defaults to the quadrature grid; pass per-axis points for custom grids.
    Raises if any coefficient exceeds linear float range.
    """
    if vec.overflowed:
        raise OverflowError("coefficients exceed linear floating-point range")
    basis = vec.basis
    c = vec.coefficients
    if basis.ndim == 1:
        if points is None:
            table = basis.sines[0]
        else:
            x = np.asarray(points, dtype=float)
            (L,) = basis.spec.lengths
            j = np.arange(1, basis.spec.modes + 1, dtype=float)
            table = np.sqrt(2.0 / L) * np.sin(np.outer(j, x) * (np.pi / L))
        out = c @ table
    else:
        N = basis.spec.modes
        C = np.zeros((N, N), dtype=np.complex128)
        for pos, (a, b) in enumerate(basis.index_map):
            C[a - 1, b - 1] = c[pos]
        if points is None:
            Sx, Sy = basis.sines
        else:
            xs, ys = points
            L1, L2 = basis.spec.lengths
            j = np.arange(1, N + 1, dtype=float)
            Sx = np.sqrt(2.0 / L1) * np.sin(np.outer(j, np.asarray(xs, dtype=float)) * (np.pi / L1))
            Sy = np.sqrt(2.0 / L2) * np.sin(np.outer(j, np.asarray(ys, dtype=float)) * (np.pi / L2))
        out = Sx.T @ C @ Sy
    if np.max(np.abs(out.imag), initial=0.0) == 0.0:
        return out.real
    return out


# -- serialization ------------------------------------------------------

def vec_to_json(vec: SpectralVec) -> str:
    """JSON with the basis descriptor and (re, im) coefficient pairs."""
    c = vec.coefficients
    if not np.all(np.isfinite(c.real) & np.isfinite(c.imag)):
        raise OverflowError("cannot serialize coefficients beyond linear range")
    payload = {
        "basis": {
            "kind": vec.basis.spec.kind,
            "lengths": list(vec.basis.spec.lengths),
            "modes": vec.basis.spec.modes,
        },
        "coefficients": [[float(z.real), float(z.imag)] for z in c],
    }
    return json.dumps(payload, sort_keys=True)


def vec_from_json(text: str, basis: EigenBasis | None = None) -> SpectralVec:
    payload = json.loads(text)
    spec = DomainSpec(
        kind=payload["basis"]["kind"],
        lengths=tuple(payload["basis"]["lengths"]),
        modes=int(payload["basis"]["modes"]),
    )
    if basis is None:
        basis = build_basis(spec)
    elif basis.spec != spec:
        raise InvalidSpecError("stored basis descriptor does not match the supplied basis")
    coeffs = np.array([complex(re, im) for re, im in payload["coefficients"]])
    return SpectralVec.from_coefficients(basis, coeffs)
