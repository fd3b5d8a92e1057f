"""Compensated sums and phase/log-magnitude arithmetic.

Backward evolution multiplies coefficients by factors like e^{t*lambda} that
leave float64 range long before the math degenerates, so magnitudes are kept
as natural logs and recombined only when representable.
"""

from __future__ import annotations

import numpy as np

# largest x with exp(x) finite in float64, ~709.78
LOG_MAX = float(np.log(np.finfo(np.float64).max))


def kahan_sum(values) -> float:
    """Compensated sum in the given (fixed) order."""
    s = 0.0
    c = 0.0
    for x in np.asarray(values, dtype=np.float64):
        y = float(x) - c
        t = s + y
        c = (t - s) - y
        s = t
    return s


def log_sum_exp(terms) -> float:
    """log(sum(exp(terms))); -inf entries contribute zero.

    The shifted exponentials are accumulated with compensated summation in
    the order given, so results are bit-reproducible.
    """
    a = np.asarray(terms, dtype=np.float64)
    if a.size == 0:
        return float("-inf")
    m = float(np.max(a))
    if m == float("-inf") or np.isnan(m):
        return m
    with np.errstate(under="ignore"):
        shifted = np.exp(a - m)
    return m + float(np.log(kahan_sum(shifted)))


# exact power-of-two rescaling keeps phase division away from the subnormal
# range, where the quotient overflows and loses accuracy
_SCALE = 2.0 ** 600
_LOG_SCALE = 600.0 * float(np.log(2.0))


def split_phase(z):
    """Decompose complex values into (unit phase, log magnitude).

    Zeros map to phase 0 and log magnitude -inf.
    """
    z = np.asarray(z, dtype=np.complex128)
    mag = np.abs(z)
    nz = mag > 0.0
    small = nz & (mag < 1e-280)
    big = mag > 1e280
    zs = np.where(small, z * _SCALE, np.where(big, z / _SCALE, z))
    mags = np.abs(zs)
    safe = np.where(nz, mags, 1.0)
    phase = np.where(nz, zs / safe, 0.0 + 0.0j)
    shift = np.where(small, -_LOG_SCALE, np.where(big, _LOG_SCALE, 0.0))
    with np.errstate(divide="ignore"):
        logmag = np.where(nz, np.log(safe) + shift, -np.inf)
    return phase, logmag


def merge_phase(phase, logmag):
    """Linear-scale mirror; magnitudes beyond float64 range become inf."""
    # invalid: complex phase times real inf multiplies 0*inf in one component
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        return np.asarray(phase) * np.exp(np.asarray(logmag))


def logspace_add(p1, l1, p2, l2):
    """Elementwise p1*e^{l1} + p2*e^{l2} in phase/log-magnitude form.

    The larger exponent is factored out, so the inner sum never overflows;
    exact cancellation yields phase 0 / logmag -inf.
    """
    l1 = np.asarray(l1, dtype=np.float64)
    l2 = np.asarray(l2, dtype=np.float64)
    m = np.maximum(l1, l2)
    # both -inf: pin the shift at 0 so the exps evaluate to 0, not nan
    safe_m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(under="ignore"):
        s = np.asarray(p1) * np.exp(l1 - safe_m) + np.asarray(p2) * np.exp(l2 - safe_m)
    phase, lg = split_phase(s)
    out_l = np.where(lg == -np.inf, -np.inf, safe_m + lg)
    return phase, out_l
