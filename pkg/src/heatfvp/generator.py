"""Finite-dimensional laboratory for decay semigroups e^{-tA}.

Everything here treats a square complex matrix A with positive-definite
Hermitian part as the generator of decay: the semigroup is e^{-tA}, its
resolvent is (lambda I + A)^{-1}, and the checks probe the properties the
spectral solver relies on in infinite dimensions: sectorial resolvent
bounds, exponential decay, injectivity of the flow, and log-convexity of
trajectories, which is what makes backward continuation meaningful.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .spectral import InvalidSpecError

MAX_DIM = 64
SPECTRUM_SKIP_RTOL = 1e-8
INJECTIVITY_SLACK = 1e2
LOGCONVEXITY_TOL = 1e-10


def parse_matrix(text: str) -> np.ndarray:
    """Read the plain-text matrix format: a line with the dimension d, then
    d rows of 2d reals (re im re im ...)."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise InvalidSpecError("empty matrix text")
    try:
        d = int(lines[0].split()[0])
    except ValueError as exc:
        raise InvalidSpecError("first line must hold the dimension") from exc
    if d < 1 or len(lines) != d + 1:
        raise InvalidSpecError(f"expected {d} rows after the dimension line")
    rows = []
    for ln in lines[1:]:
        vals = [float(x) for x in ln.split()]
        if len(vals) != 2 * d:
            raise InvalidSpecError(f"each row needs {2 * d} reals (re im pairs)")
        rows.append([complex(vals[2 * j], vals[2 * j + 1]) for j in range(d)])
    return np.array(rows, dtype=complex)


def format_matrix(a: np.ndarray) -> str:
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    lines = [str(d)]
    for row in a:
        lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GeneratorReport:
    dim: int
    selfadjoint: bool
    normal: bool
    hyponormal: bool
    elliptic: bool
    decay_rate: float      # exact min of Re<Av,v>/|v|^2: smallest Hermitian-part eigenvalue
    norm2: float
    spectral_abscissa: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "selfadjoint": self.selfadjoint,
                "normal": self.normal,
                "hyponormal": self.hyponormal,
                "elliptic": self.elliptic,
                "decay_rate": self.decay_rate,
                "norm2": self.norm2,
                "spectral_abscissa": self.spectral_abscissa,
            },
            sort_keys=True,
        )


class MatrixGenerator:
    """Square complex matrix (dimension <= 64) wrapped with the derived
    quantities the semigroup checks need."""

    def __init__(self, a):
        a = np.asarray(a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidSpecError("generator must be a square matrix")
        if a.shape[0] > MAX_DIM:
            raise InvalidSpecError(f"generator dimension capped at {MAX_DIM}")
        if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
            raise InvalidSpecError("generator entries must be finite")
        self.a = a

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.a + self.a.conj().T)

    @property
    def skew_part(self) -> np.ndarray:
        return 0.5 * (self.a - self.a.conj().T)

    @property
    def _scale(self) -> float:
        return max(self.norm2, 1.0)

    @property
    def is_selfadjoint(self) -> bool:
        return bool(np.linalg.norm(self.skew_part, 2) <= 1e-12 * self._scale)

    @property
    def is_normal(self) -> bool:
        comm = self.a @ self.a.conj().T - self.a.conj().T @ self.a
        return bool(np.linalg.norm(comm, 2) <= 1e-12 * self._scale ** 2)

    @property
    def is_hyponormal(self) -> bool:
        # |A* x| <= |A x| for all x is positivity of the commutator A*A - AA*
        comm = self.a.conj().T @ self.a - self.a @ self.a.conj().T
        return bool(np.linalg.eigvalsh(comm)[0] >= -1e-12 * self._scale ** 2)

    @property
    def decay_rate(self) -> float:
        """Exact minimum of Re<Av,v>/|v|^2 over v != 0; positive means the
        semigroup e^{-tA} contracts at least like e^{-(this) t}."""
        return float(np.linalg.eigvalsh(self.hermitian_part)[0])

    @property
    def is_elliptic(self) -> bool:
        return self.decay_rate > 0.0

    @property
    def norm2(self) -> float:
        return float(np.linalg.norm(self.a, 2))

    def classify(self) -> GeneratorReport:
        eigs = np.linalg.eigvals(self.a)
        return GeneratorReport(
            dim=self.dim,
            selfadjoint=self.is_selfadjoint,
            normal=self.is_normal,
            hyponormal=self.is_hyponormal,
            elliptic=self.is_elliptic,
            decay_rate=self.decay_rate,
            norm2=self.norm2,
            spectral_abscissa=float(np.max(eigs.real)),
        )


def exp_semigroup(gen: MatrixGenerator, t: float) -> np.ndarray:
    """Semigroup value e^{-tA}; negative t evaluates the (finite-dim)
    backward extension e^{|t| A}."""
    return expm(-float(t) * gen.a)


# -- sectoriality ----------------------------------------------------------

@dataclass(frozen=True)
class SectorSpec:
    """Probed region omega + {r e^{i phi} : |phi| < pi/2 + theta}, with the
    acceptance bound for the scaled resolvent sup."""

    omega: float = 0.0
    theta: float = 0.3
    bound: float = 10.0

    def __post_init__(self):
        if self.omega < 0.0:
            raise InvalidSpecError("sector vertex must be nonnegative")
        if not 0.0 < self.theta < np.pi / 2:
            raise InvalidSpecError("sector angle must lie in (0, pi/2)")
        if self.bound < 1.0:
            raise InvalidSpecError("sector bound must be at least 1")


@dataclass(frozen=True)
class SectorReport:
    sup_value: float
    argmax_lambda: complex
    passed: bool
    n_sampled: int
    n_skipped: int
    theta_recommended: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "sup_value": self.sup_value,
                "argmax_re": self.argmax_lambda.real,
                "argmax_im": self.argmax_lambda.imag,
                "passed": self.passed,
                "n_sampled": self.n_sampled,
                "n_skipped": self.n_skipped,
                "theta_recommended": self.theta_recommended,
            },
            sort_keys=True,
        )


def check_sectoriality(
    gen: MatrixGenerator,
    sector: SectorSpec | None = None,
    n_angles: int = 64,
    n_radii: int = 32,
) -> SectorReport:
    """Sample sup |lambda - omega| ||(lambda I + A)^{-1}|| over the sector.

    The resolvent is the one of the decay generator -A.  Sample points that
    fall numerically on the spectrum of -A are skipped and counted; radii
    span six decades around ||A||.  Passing means the sup is finite and at
    most the configured bound.  The recommended angle is the heuristic
    arctan(decay_rate / ||A||): within that opening the numerical range of
    -A stays clear of the probed rays.
    """
    sector = sector or SectorSpec()
    if n_angles < 64:
        raise InvalidSpecError("sector sampling uses at least 64 rays")
    a = gen.a
    scale = max(gen.norm2, 1.0)
    spectrum = -np.linalg.eigvals(a)
    phis = np.linspace(-(np.pi / 2 + sector.theta), np.pi / 2 + sector.theta, n_angles + 2)[1:-1]
    radii = gen.norm2 * np.logspace(-3.0, 3.0, n_radii)
    eye = np.eye(gen.dim)
    best = -np.inf
    best_lam = complex(sector.omega)
    skipped = 0
    sampled = 0
    for phi in phis:
        for r in radii:
            lam = sector.omega + r * np.exp(1j * phi)
            if np.min(np.abs(lam - spectrum)) <= SPECTRUM_SKIP_RTOL * scale:
                skipped += 1
                continue
            sampled += 1
            smin = np.linalg.svd(lam * eye + a, compute_uv=False)[-1]
            val = abs(lam - sector.omega) / smin
            if val > best:
                best = val
                best_lam = complex(lam)
    passed = bool(np.isfinite(best) and best <= sector.bound)
    theta_rec = float(np.arctan2(max(gen.decay_rate, 0.0), gen.norm2))
    return SectorReport(float(best), best_lam, passed, sampled, skipped, theta_rec)


# -- decay, injectivity, convexity ----------------------------------------

@dataclass(frozen=True)
class DecayReport:
    times: np.ndarray
    norms: np.ndarray
    bound: np.ndarray
    ok: bool
    fitted_rate: float


def check_decay(gen: MatrixGenerator, times) -> DecayReport:
    """||e^{-tA}|| against the bound e^{-decay_rate * t}.

    The bound holds with constant 1 in the 2-norm for every A, elliptic or
    not, because d/dt |u|^2 = -2 Re<Au, u> <= -2 decay_rate |u|^2.
    """
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size < 2 or np.any(ts < 0) or np.any(np.diff(ts) <= 0):
        raise InvalidSpecError("need an increasing grid of nonnegative times")
    norms = np.array([np.linalg.norm(exp_semigroup(gen, t), 2) for t in ts])
    bound = np.exp(-gen.decay_rate * ts)
    ok = bool(np.all(norms <= bound * (1.0 + 1e-10)))
    pos = (ts > 0) & (norms > 0)
    rate = float(-np.polyfit(ts[pos], np.log(norms[pos]), 1)[0]) if np.count_nonzero(pos) >= 2 else np.nan
    return DecayReport(ts, norms, bound, ok, rate)


@dataclass(frozen=True)
class InjectivityReport:
    times: np.ndarray
    sigma_min: np.ndarray
    heuristic_floor: np.ndarray
    all_positive: bool
    floor_respected: bool


def check_injectivity(gen: MatrixGenerator, times) -> InjectivityReport:
    """Smallest singular value of e^{-tA} at positive times.

    Injectivity of the flow is sigma_min > 0 for every t.  The heuristic
    floor e^{-t sigma_max(A)} / cond(V) (V the eigenvector matrix) is only
    indicative; it counts as respected if sigma_min never drops more than a
    factor 1e2 below it.
    """
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if ts.size < 1 or np.any(ts <= 0):
        raise InvalidSpecError("need strictly positive times")
    _, vecs = np.linalg.eig(gen.a)
    cond_v = float(np.linalg.cond(vecs))
    smax = float(np.linalg.svd(gen.a, compute_uv=False)[0])
    smins = np.array([np.linalg.svd(exp_semigroup(gen, t), compute_uv=False)[-1] for t in ts])
    floor = np.exp(-smax * ts) / cond_v
    return InjectivityReport(
        ts,
        smins,
        floor,
        bool(np.all(smins > 0.0)),
        bool(np.all(smins >= floor / INJECTIVITY_SLACK)),
    )


@dataclass(frozen=True)
class ConvexityReport:
    n_trials: int
    criterion_fraction: float
    logconvex_fraction: float
    min_margin: float
    min_second_divdiff: float
    forward_implication_observed: bool
    selfadjoint: bool
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_trials": self.n_trials,
                "criterion_fraction": self.criterion_fraction,
                "logconvex_fraction": self.logconvex_fraction,
                "min_margin": self.min_margin,
                "min_second_divdiff": self.min_second_divdiff,
                "forward_implication_observed": self.forward_implication_observed,
                "selfadjoint": self.selfadjoint,
                "seed": self.seed,
            },
            sort_keys=True,
        )


def _criterion_margin(a: np.ndarray, x: np.ndarray, scale: float) -> float:
    """Normalized slack of 2 (Re<Ax,x>)^2 <= (Re<A^2 x,x> + |Ax|^2) |x|^2
    for a unit vector x."""
    ax = a @ x
    aax = a @ ax
    lhs = 2.0 * float(np.real(np.vdot(x, ax))) ** 2
    rhs = float(np.real(np.vdot(x, aax))) + float(np.real(np.vdot(ax, ax)))
    return (rhs - lhs) / scale


def check_logconvexity_criterion(
    gen: MatrixGenerator,
    trials: int = 256,
    seed: int = 0,
    times=None,
) -> ConvexityReport:
    """Differential criterion for convexity of t -> log |e^{-tA} x|, plus a
    direct discrete check of the profiles themselves.

    Per unit sample x the criterion is
    2 (Re<Ax,x>)^2 <= (Re<A^2 x,x> + |Ax|^2) |x|^2, the second-derivative
    condition at t = 0; for selfadjoint A it reduces to Cauchy-Schwarz with
    equality exactly on eigenvectors.  Separately each sample seeds a
    trajectory h(t) = |e^{-tA} x| on a log time grid whose second divided
    differences of log h are tested.  Both pass fractions are reported; the
    forward-implication flag records whether "criterion for all sampled x"
    was accompanied by "log-convex for all sampled trajectories".
    """
    if trials < 1:
        raise InvalidSpecError("need at least one trial vector")
    rng = np.random.default_rng(seed)
    a = gen.a
    d = gen.dim
    ts = np.geomspace(1e-3, 10.0, 25) if times is None else np.asarray(times, dtype=float)
    xs = rng.standard_normal((trials, d)) + 1j * rng.standard_normal((trials, d))
    xs /= np.linalg.norm(xs, axis=1)[:, None]
    # eigenvectors realize equality in the selfadjoint case; include them
    _, vecs = np.linalg.eig(a)
    vecs = vecs / np.linalg.norm(vecs, axis=0)[None, :]
    xs = np.vstack([xs, vecs.T])
    scale = max(gen.norm2, 1.0) ** 2
    margins = np.array([_criterion_margin(a, x, scale) for x in xs])
    semis = [exp_semigroup(gen, t) for t in ts]
    divdiffs = np.empty(len(xs))
    for i, x in enumerate(xs):
        vals = np.array([np.linalg.norm(s @ x) for s in semis])
        lh = np.log(vals)
        d1 = np.diff(lh) / np.diff(ts)
        divdiffs[i] = float(np.min(2.0 * np.diff(d1) / (ts[2:] - ts[:-2])))
    crit_frac = float(np.mean(margins >= -LOGCONVEXITY_TOL))
    conv_frac = float(np.mean(divdiffs >= -LOGCONVEXITY_TOL))
    return ConvexityReport(
        n_trials=len(xs),
        criterion_fraction=crit_frac,
        logconvex_fraction=conv_frac,
        min_margin=float(np.min(margins)),
        min_second_divdiff=float(np.min(divdiffs)),
        forward_implication_observed=bool(crit_frac == 1.0 and conv_frac == 1.0),
        selfadjoint=gen.is_selfadjoint,
        seed=seed,
    )


@dataclass(frozen=True)
class ConvexityProfile:
    times: np.ndarray
    log_h: np.ndarray
    min_second_divdiff: float


def logconvexity_profile(gen: MatrixGenerator, x, times) -> ConvexityProfile:
    """h(t) = |e^{-tA} x| along a grid, with the smallest second divided
    difference of log h.  Nonnegative values certify discrete convexity."""
    ts = np.asarray(times, dtype=float)
    if ts.size < 3 or np.any(np.diff(ts) <= 0):
        raise InvalidSpecError("need at least three increasing times")
    x = np.asarray(x, dtype=complex)
    vals = np.array([np.linalg.norm(exp_semigroup(gen, t) @ x) for t in ts])
    if np.any(vals == 0.0):
        raise InvalidSpecError("trajectory hit zero; log-profile undefined")
    lh = np.log(vals)
    d1 = np.diff(lh) / np.diff(ts)
    dd = 2.0 * np.diff(d1) / (ts[2:] - ts[:-2])
    return ConvexityProfile(ts, lh, float(np.min(dd)))


@dataclass(frozen=True)
class ChainReport:
    t: float
    t_prime: float
    ratios: np.ndarray
    max_ratio: float
    selfadjoint: bool


def inverse_chain_demo(gen: MatrixGenerator, t: float, t_prime: float, n_samples: int = 64, seed: int = 0) -> ChainReport:
    """Graph-norm ordering behind the descending chain of backward domains.

    For 0 < t < t_prime and sampled v the ratio
    |e^{tA} v| / (|v| + |e^{t_prime A} v|) is reported; selfadjoint A keeps
    it <= 1 because log |e^{tA} v| is convex in t, so the middle value
    interpolates between the endpoints.  Values above 1 expose
    non-selfadjoint transient growth.
    """
    if not 0.0 < t < t_prime:
        raise InvalidSpecError("need 0 < t < t_prime")
    rng = np.random.default_rng(seed)
    d = gen.dim
    vs = rng.standard_normal((n_samples, d)) + 1j * rng.standard_normal((n_samples, d))
    vs = np.vstack([vs, np.eye(d)])
    mid = exp_semigroup(gen, -t)
    far = exp_semigroup(gen, -t_prime)
    ratios = np.array([
        np.linalg.norm(mid @ v) / (np.linalg.norm(v) + np.linalg.norm(far @ v))
        for v in vs
    ])
    return ChainReport(float(t), float(t_prime), ratios, float(np.max(ratios)), gen.is_selfadjoint)


# -- sample generators -----------------------------------------------------

def random_elliptic(dim: int, seed: int = 0, skew_scale: float = 1.0) -> MatrixGenerator:
    """Random generator with Hermitian part spectrally inside [0.5, 3]."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, _ = np.linalg.qr(z)
    h = (q * rng.uniform(0.5, 3.0, dim)) @ q.conj().T
    h = 0.5 * (h + h.conj().T)
    s = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    s = 0.5 * (s - s.conj().T) * skew_scale
    return MatrixGenerator(h + s)


def random_selfadjoint(dim: int, seed: int = 0) -> MatrixGenerator:
    return random_elliptic(dim, seed=seed, skew_scale=0.0)
