"""Direct phase sums and the fourth-derivative exponential-sum bounds.

Implements direct evaluation of sum_{n<=N} e(f(n)) for log phases
f(x) = t*log(x)/(2*pi) and polynomial phases, plus evaluators for the three
upper-bound formulas that control such sums when f^(k) is pinned between
lambda_k and A*lambda_k:

* classical_bound:  A^{2^{2-k}} N lam^{1/(2^k-2)} + N^{1-2^{2-k}} lam^{-1/(2^k-2)}
* bdg_bound:        N^{1+eps} (lam^{1/k(k-1)} + N^{-1/k(k-1)}
                               + N^{-2/k(k-1)} lam^{-2/(k^2 (k-1))})
* new_fourth_bound: N^{1-w/(4w+8)+eps} + N^{8/9+eps}   with lam_4 = N^-w,
                    valid for N^-2 <~ lam_4 <~ N^-1.

Sign convention: lambda_k bounds |f^(k)| (log phases have negative even
derivatives; conjugating the sum flips the sign, so only |f^(k)| matters).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import gmpy2
import numpy as np

TWO_PI = 2.0 * math.pi
_LOG_PHASE_T_CAP = 1.0e15
_DOUBLE_SAFE_PRODUCT = 1.0e8  # above this, t*log(n) loses too many bits in doubles


class PhaseKind(enum.Enum):
    LOG = "log"
    POLYNOMIAL = "polynomial"


class RegimeError(ValueError):
    """The bound was evaluated outside its validity regime."""


@dataclass(frozen=True)
class PhaseSpec:
    """A phase function on [0, N] with k-th derivative control.

    For LOG phases, f(x) = t*log(x)/(2*pi); lambda_k defaults to the minimum
    of |f^(k)| on (N, 2N] and A to 16, which covers the ratio across a dyadic
    block.  The two-sided bound lambda_k <= |f^(k)| <= A*lambda_k is
    certified numerically at 1000 sample points.
    """

    kind: PhaseKind
    N: int
    k: int = 4
    t: float = 0.0  # log phases
    poly_coeffs: tuple = ()  # polynomial phases: f(x) = sum c_i x^i
    lambda_k: float = 0.0
    A: float = 16.0
    range_start: int = 0  # sum runs over (range_start, range_start + N]

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.k < 2:
            raise ValueError("derivative order k must be >= 2")
        if self.A < 1:
            raise ValueError("A must be >= 1")
        if self.kind is PhaseKind.LOG:
            if self.t < 0:
                raise ValueError("t must be nonnegative")
            if self.t > _LOG_PHASE_T_CAP:
                raise ValueError(
                    f"t = {self.t:g} beyond extended-precision safety cap 1e15"
                )
            if self.lambda_k == 0.0:
                object.__setattr__(self, "lambda_k", self._log_lambda_min())
            # two-sided derivative control is certifiable only on ranges
            # bounded away from 0 (|f^(k)| blows up at the origin)
            if self.range_start >= 1:
                self._certify_log_derivative()
        else:
            if not self.poly_coeffs:
                raise ValueError("polynomial phase needs coefficients")

    def _log_deriv_abs(self, x: np.ndarray) -> np.ndarray:
        # |d^k/dx^k log(x)| = (k-1)! / x^k
        return self.t * math.factorial(self.k - 1) / (TWO_PI * x**self.k)

    def _log_lambda_min(self) -> float:
        lo = self.range_start if self.range_start > 0 else 1
        return float(self._log_deriv_abs(np.array([float(lo + self.N)]))[0])

    def _certify_log_derivative(self) -> None:
        if self.t == 0.0:
            return
        xs = np.linspace(self.range_start + 0.5, self.range_start + self.N, 1000)
        vals = self._log_deriv_abs(xs)
        if np.any(vals < self.lambda_k * (1 - 1e-12)):
            raise RegimeError("lambda_k exceeds |f^(k)| somewhere on the range")
        if np.any(vals > self.A * self.lambda_k * (1 + 1e-12)):
            raise RegimeError("A*lambda_k is below |f^(k)| somewhere on the range")

    @property
    def varpi(self) -> float:
        """Exponent with lambda_k = N^-varpi."""
        if self.lambda_k <= 0:
            raise ValueError("lambda_k must be positive")
        return -math.log(self.lambda_k) / math.log(self.N)


# ---------------------------------------------------------------------------
# direct summation
# ---------------------------------------------------------------------------


def _log_phase_fractions(t: float, n_lo: int, n_hi: int) -> np.ndarray:
    """frac(t*log(n)/(2*pi)) for n in (n_lo, n_hi], in exact-enough arithmetic.

    Doubles keep absolute phase error below ~1e-8 turns while
    t*log(n) < 1e8; beyond that each phase is reduced with 40-digit MPFR.
    """
    ns = np.arange(n_lo + 1, n_hi + 1, dtype=np.int64)
    if t * math.log(max(n_hi, 2)) < _DOUBLE_SAFE_PRODUCT:
        return (t / TWO_PI * np.log(ns)) % 1.0
    ctx = gmpy2.context(precision=140)
    out = np.empty(ns.size, dtype=float)
    with gmpy2.local_context(ctx):
        tt = gmpy2.mpfr(t)
        two_pi = 2 * gmpy2.const_pi()
        for i, n in enumerate(ns.tolist()):
            phase = tt * gmpy2.log(n) / two_pi
            out[i] = float(phase - gmpy2.floor(phase))
    return out


def phase_sum(spec: PhaseSpec) -> complex:
    """sum e(f(n)) over n in (range_start, range_start + N], compensated."""
    lo = spec.range_start
    hi = spec.range_start + spec.N
    if spec.kind is PhaseKind.LOG:
        fracs = _log_phase_fractions(spec.t, lo, hi)
    else:
        ns = np.arange(lo + 1, hi + 1, dtype=float)
        vals = np.polynomial.polynomial.polyval(ns, np.asarray(spec.poly_coeffs))
        fracs = vals % 1.0
    re = math.fsum(np.cos(TWO_PI * fracs).tolist())
    im = math.fsum(np.sin(TWO_PI * fracs).tolist())
    return complex(re, im)


def zeta_block_sum(t: float, N: int) -> complex:
    """sum_{N < n <= 2N} n^{it} = sum e(t*log(n)/(2*pi)) by direct summation."""
    if not 1 <= N:
        raise ValueError("N must be >= 1")
    if t > 0 and N > math.sqrt(t):
        raise ValueError(f"requires N <= t^(1/2); got N={N}, t^(1/2)={math.sqrt(t):g}")
    if t > 1.0e12:
        raise ValueError("t beyond the 1e12 cap for block sums")
    spec = PhaseSpec(kind=PhaseKind.LOG, N=N, t=t, range_start=N)
    return phase_sum(spec)


# ---------------------------------------------------------------------------
# bound formulas
# ---------------------------------------------------------------------------


def classical_bound(spec: PhaseSpec) -> float:
    """van der Corput k-th derivative bound."""
    k, N, lam, A = spec.k, float(spec.N), spec.lambda_k, spec.A
    e1 = 2.0 ** (2 - k)
    e2 = 1.0 / (2.0**k - 2.0)
    return A**e1 * N * lam**e2 + N ** (1.0 - e1) * lam ** (-e2)


def bdg_bound(spec: PhaseSpec, epsilon: float = 0.0) -> float:
    """Mean-value-theorem bound with N^(1+eps) prefactor."""
    k, N, lam = spec.k, float(spec.N), spec.lambda_k
    kk = k * (k - 1)
    core = lam ** (1.0 / kk) + N ** (-1.0 / kk) + N ** (-2.0 / kk) * lam ** (
        -2.0 / (k * kk)
    )
    return N ** (1.0 + epsilon) * core


def new_fourth_bound(spec: PhaseSpec, epsilon: float = 0.0, slack: float = 8.0) -> float:
    """Improved fourth-derivative bound N^{1-w/(4w+8)+eps} + N^{8/9+eps}.

    Requires k = 4 and N^-2 <~ lambda_4 <~ N^-1 (checked with factor `slack`).
    """
    if spec.k != 4:
        raise RegimeError("the improved bound is specific to k = 4")
    N = float(spec.N)
    lam = spec.lambda_k
    if lam > slack * N**-1.0:
        raise RegimeError(
            f"lambda_4 = {lam:g} exceeds the upper regime edge ~ N^-1 = {N**-1:g}"
        )
    if lam < N**-2.0 / slack:
        raise RegimeError(
            f"lambda_4 = {lam:g} is below the lower regime edge ~ N^-2 = {N**-2:g}"
        )
    w = spec.varpi
    return N ** (1.0 - w / (4.0 * w + 8.0) + epsilon) + N ** (8.0 / 9.0 + epsilon)


def log_phase_block_spec(t: float, N: int) -> PhaseSpec:
    """PhaseSpec for sum over (N, 2N] of e(t*log(n)/(2*pi)), with lambda_4 the
    minimum of |f''''| on the block and A = 16."""
    return PhaseSpec(kind=PhaseKind.LOG, N=N, k=4, t=t, range_start=N)
