"""Curves, frequency sets, coefficient vectors, and exponential-sum evaluation.

Conventions fixed once for the whole package:

* ``e(t) = exp(2*pi*i*t)`` (the standard analytic-number-theory character).
* Moment-curve frequencies use ``j in {1, ..., N}``; in normalized mode the
  j-th frequency vector is ``(j/R^a, j^2/R^{2a}, ..., j^n/R^{na})``.
* All domain objects are immutable after construction and safe to share
  across workers.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


class CurveKind(enum.Enum):
    PARABOLA_2D = "parabola2d"
    MOMENT_CURVE = "moment_curve"
    PERTURBED_CONE = "perturbed_cone"
    CUSTOM_POLYNOMIAL_PHASE = "custom_polynomial_phase"


class ScalingMode(enum.Enum):
    INTEGER = "integer"
    NORMALIZED = "normalized"


class SpecError(ValueError):
    """Invalid domain-object construction."""


@dataclass(frozen=True)
class CurveSpec:
    """Which curve the frequency points sit on.

    kind=MOMENT_CURVE uses dimension ``n`` (2 <= n <= 6); PARABOLA_2D is the
    n=2 moment curve with its own tag.  PERTURBED_CONE enumerates index pairs
    (k, l) with k ~ K, l ~ L and frequency (l, k*l, w(k, l)) where
    ``w(k, l) = ((k+l)^{3/2} - (k-l)^{3/2}) / 3``; it requires k > l >= 1.
    CUSTOM_POLYNOMIAL_PHASE keeps (j, j^2) and replaces the cubic component
    with a polynomial phase ``phi(j) = sum_i phi_coeffs[i] * j^i``.
    """

    kind: CurveKind
    n: int = 3
    cone_k_range: tuple[int, int] = (0, 0)  # inclusive k-range for the cone
    cone_l_range: tuple[int, int] = (0, 0)  # inclusive l-range for the cone
    phi_coeffs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is CurveKind.PARABOLA_2D:
            object.__setattr__(self, "n", 2)
        elif self.kind is CurveKind.MOMENT_CURVE:
            if not 2 <= self.n <= 6:
                raise SpecError(f"moment curve dimension must be in [2, 6], got {self.n}")
        elif self.kind is CurveKind.PERTURBED_CONE:
            object.__setattr__(self, "n", 3)
            k0, k1 = self.cone_k_range
            l0, l1 = self.cone_l_range
            if not (1 <= l0 <= l1 and k0 <= k1):
                raise SpecError("cone index ranges must satisfy 1 <= l0 <= l1, k0 <= k1")
            if k0 <= l1:
                raise SpecError(
                    f"perturbed cone requires k > l for every pair; got k0={k0} <= l1={l1}"
                )
        elif self.kind is CurveKind.CUSTOM_POLYNOMIAL_PHASE:
            object.__setattr__(self, "n", 3)
            if len(self.phi_coeffs) == 0:
                raise SpecError("custom polynomial phase needs at least one coefficient")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "cone_k_range": list(self.cone_k_range),
            "cone_l_range": list(self.cone_l_range),
            "phi_coeffs": list(self.phi_coeffs),
        }

    @staticmethod
    def from_dict(d: dict) -> "CurveSpec":
        return CurveSpec(
            kind=CurveKind(d["kind"]),
            n=int(d.get("n", 3)),
            cone_k_range=tuple(d.get("cone_k_range", (0, 0))),
            cone_l_range=tuple(d.get("cone_l_range", (0, 0))),
            phi_coeffs=tuple(d.get("phi_coeffs", ())),
        )


def parabola(n_terms_hint: int = 0) -> CurveSpec:
    return CurveSpec(kind=CurveKind.PARABOLA_2D)


def moment_curve(n: int = 3) -> CurveSpec:
    return CurveSpec(kind=CurveKind.MOMENT_CURVE, n=n)


def perturbed_cone(k_range: tuple[int, int], l_range: tuple[int, int]) -> CurveSpec:
    return CurveSpec(
        kind=CurveKind.PERTURBED_CONE, cone_k_range=tuple(k_range), cone_l_range=tuple(l_range)
    )


def cone_omega(k: np.ndarray, l: np.ndarray) -> np.ndarray:
    """Third frequency component on the perturbed cone: ((k+l)^1.5 - (k-l)^1.5)/3."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    if np.any(k - l < 1.0) or np.any(l < 1.0):
        raise SpecError("cone pairs must satisfy k > l >= 1")
    return ((k + l) ** 1.5 - (k - l) ** 1.5) / 3.0


@dataclass(frozen=True)
class ExpSumSpec:
    """A finite frequency set plus unimodular coefficients a_j.

    ``S(x) = sum_j a_j e(xi_j . x)`` where the xi_j are determined by the
    curve, N, alpha and the scaling mode.  Immutable; `frequencies` is
    computed once and cached.
    """

    curve: CurveSpec
    N: int
    coefficients: tuple[complex, ...]
    alpha: float = 1.0
    scaling: ScalingMode = ScalingMode.INTEGER
    R: float = 0.0  # only meaningful for ScalingMode.NORMALIZED
    _freqs: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        if self.N < 1:
            raise SpecError(f"N must be positive, got {self.N}")
        if len(self.coefficients) != self.N:
            raise SpecError(
                f"coefficient list length {len(self.coefficients)} != N = {self.N}"
            )
        mags = np.abs(np.asarray(self.coefficients, dtype=complex))
        if np.any(np.abs(mags - 1.0) > 1e-9):
            raise SpecError("coefficients must be unimodular (|a_j| = 1)")
        if not (1.0 / 3.0 - 1e-12 <= self.alpha <= 1.0 + 1e-12):
            raise SpecError(f"alpha must lie in [1/3, 1], got {self.alpha}")
        if self.scaling is ScalingMode.NORMALIZED and self.R <= 0:
            raise SpecError("normalized scaling requires R > 0")
        if self.curve.kind is CurveKind.PERTURBED_CONE:
            k0, k1 = self.curve.cone_k_range
            l0, l1 = self.curve.cone_l_range
            count = (k1 - k0 + 1) * (l1 - l0 + 1)
            if count != self.N:
                raise SpecError(f"cone index ranges give {count} terms but N = {self.N}")
        object.__setattr__(self, "_freqs", self._build_frequencies())

    def _build_frequencies(self) -> np.ndarray:
        j = np.arange(1, self.N + 1, dtype=float)
        kind = self.curve.kind
        if kind in (CurveKind.PARABOLA_2D, CurveKind.MOMENT_CURVE):
            n = self.curve.n
            cols = [j**i for i in range(1, n + 1)]
        elif kind is CurveKind.CUSTOM_POLYNOMIAL_PHASE:
            phi = np.polynomial.polynomial.polyval(j, np.asarray(self.curve.phi_coeffs))
            cols = [j, j**2, phi]
        else:  # perturbed cone
            k0, k1 = self.curve.cone_k_range
            l0, l1 = self.curve.cone_l_range
            kk, ll = np.meshgrid(
                np.arange(k0, k1 + 1, dtype=float),
                np.arange(l0, l1 + 1, dtype=float),
                indexing="ij",
            )
            kk = kk.ravel()
            ll = ll.ravel()
            cols = [ll, kk * ll, cone_omega(kk, ll)]
        freqs = np.column_stack(cols)
        if self.scaling is ScalingMode.NORMALIZED:
            n = freqs.shape[1]
            scale = self.R ** (self.alpha * np.arange(1, n + 1))
            freqs = freqs / scale
        freqs.setflags(write=False)
        return freqs

    @property
    def n(self) -> int:
        return self.curve.n

    @property
    def frequencies(self) -> np.ndarray:
        """(N, n) read-only array of frequency vectors xi_j."""
        return self._freqs

    @property
    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=complex)

    def integer_frequency_matrix(self) -> np.ndarray:
        """(N, n) int64 frequency matrix; only valid in integer scaling."""
        if self.scaling is not ScalingMode.INTEGER:
            raise SpecError("integer frequency lattice undefined in normalized scaling")
        if self.curve.kind not in (CurveKind.PARABOLA_2D, CurveKind.MOMENT_CURVE):
            raise SpecError("integer frequency lattice only for polynomial curves")
        j = np.arange(1, self.N + 1, dtype=np.int64)
        return np.column_stack([j**i for i in range(1, self.curve.n + 1)])

    # -- JSON round trip ----------------------------------------------------
    def to_json(self) -> str:
        phases = np.angle(np.asarray(self.coefficients, dtype=complex)) / TWO_PI
        return json.dumps(
            {
                "curve": self.curve.to_dict(),
                "N": self.N,
                "alpha": self.alpha,
                "scaling": self.scaling.value,
                "R": self.R,
                "phases_turns": phases.tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "ExpSumSpec":
        d = json.loads(text)
        phases = np.asarray(d["phases_turns"], dtype=float)
        coeffs = tuple(np.exp(2j * math.pi * phases))
        return ExpSumSpec(
            curve=CurveSpec.from_dict(d["curve"]),
            N=int(d["N"]),
            coefficients=coeffs,
            alpha=float(d["alpha"]),
            scaling=ScalingMode(d["scaling"]),
            R=float(d.get("R", 0.0)),
        )


def ones_spec(curve: CurveSpec, N: int, **kw) -> ExpSumSpec:
    """ExpSumSpec with all coefficients equal to 1."""
    return ExpSumSpec(curve=curve, N=N, coefficients=(1.0 + 0.0j,) * N, **kw)


def random_unimodular(N: int, rng: np.random.Generator) -> tuple[complex, ...]:
    return tuple(np.exp(2j * math.pi * rng.random(N)))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_sum(spec: ExpSumSpec, x) -> complex:
    """Evaluate S(x) = sum_j a_j e(xi_j . x) by compensated direct summation.

    Deterministic: ascending j with Kahan accumulation on both real and
    imaginary parts (N can reach 1e5 elsewhere in the package).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise SpecError(f"x must be a point in R^{spec.n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise SpecError("x must be finite")
    phases = spec._freqs @ x
    terms = spec.coeff_array * np.exp(2j * math.pi * phases)
    re = _kahan(terms.real)
    im = _kahan(terms.imag)
    return complex(re, im)


def eval_sum_many(spec: ExpSumSpec, xs: np.ndarray) -> np.ndarray:
    """Vectorized S at many points; xs has shape (m, n).

    Summation over j uses numpy's pairwise reduction in a fixed order, so the
    result is independent of any outer blocking.
    """
    xs = np.asarray(xs, dtype=float)
    phases = xs @ spec._freqs.T  # (m, N)
    return (np.exp(2j * math.pi * phases) * spec.coeff_array).sum(axis=1)


def _kahan(values: np.ndarray) -> float:
    total = 0.0
    comp = 0.0
    for v in values.tolist():
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


# ---------------------------------------------------------------------------
# Frenet frame of the moment curve (t, t^2, t^3)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrenetFrame:
    """Orthonormal (tangent, normal, binormal) at parameter t, det = +1."""

    t: float
    t_vec: np.ndarray
    n_vec: np.ndarray
    b_vec: np.ndarray

    def matrix(self) -> np.ndarray:
        """Rows are (t_vec, n_vec, b_vec)."""
        return np.vstack([self.t_vec, self.n_vec, self.b_vec])


def frenet_frame(t: float) -> FrenetFrame:
    """Frame of the twisted cubic: t_vec ~ (1, 2t, 3t^2), b_vec ~ (3t^2, -3t, 1),
    n_vec = b_vec x t_vec, all normalized."""
    if not 0.0 <= t <= 1.0:
        raise SpecError(f"t must lie in [0, 1], got {t}")
    tv = np.array([1.0, 2.0 * t, 3.0 * t * t])
    bv = np.array([3.0 * t * t, -3.0 * t, 1.0])
    tv /= np.linalg.norm(tv)
    bv /= np.linalg.norm(bv)
    nv = np.cross(bv, tv)
    nv /= np.linalg.norm(nv)
    for v in (tv, nv, bv):
        v.setflags(write=False)
    return FrenetFrame(t=t, t_vec=tv, n_vec=nv, b_vec=bv)


# ---------------------------------------------------------------------------
# delta-separated point sets on the truncated cone
# ---------------------------------------------------------------------------


def cone_points(delta: float) -> np.ndarray:
    """Polar-grid delta-separated points on the cone 1 <= xi1^2+xi2^2 <= 2.

    Radial step delta over r in [1, sqrt(2)], angular step delta over the full
    circle; each point is (r cos(theta), r sin(theta), r), so the third
    coordinate is exactly the hypot of the first two as stored.  The count
    grows like delta^-2.
    """
    if not 0.0 < delta <= 0.5:
        raise SpecError(f"delta must lie in (0, 1/2], got {delta}")
    n_rad = int(math.floor((math.sqrt(2.0) - 1.0) / delta)) + 1
    n_ang = int(math.floor(TWO_PI / delta))
    radii = 1.0 + delta * np.arange(n_rad)
    angles = delta * np.arange(n_ang)
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    x = rr * np.cos(aa)
    y = rr * np.sin(aa)
    z = np.hypot(x, y)
    pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    pts.setflags(write=False)
    return pts
