"""Normalized L^p moments of exponential sums over slab domains.

Even p on the torus is computed exactly: |S|^{2s} is a trigonometric
polynomial, so full-period axes reduce to Parseval sums and a single
truncated axis has a closed-form character integral (see _sparsepoly).
A node-based strategy (composite Gauss-Legendre in the truncated axis,
zero-padded-FFT torus means at each node) is kept as an independent route
for convergence certificates.  Everything else is seeded Monte Carlo on
counter-based streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _sparsepoly as sp
from . import rng as rngmod
from .expsum import ExpSumSpec, ScalingMode, SpecError

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


class MomentModeError(ValueError):
    """Query method incompatible with the query (e.g. odd p in exact mode)."""


MomentSizeError = sp.MomentSizeError


# ---------------------------------------------------------------------------
# domains and queries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlabDomain:
    """Product of per-axis intervals: None = full period [0,1), else (tau, L).

    Truncated lengths must lie in (0, 1].
    """

    axes: tuple

    def __post_init__(self) -> None:
        for ax in self.axes:
            if ax is None:
                continue
            tau, length = ax
            if not 0.0 < length <= 1.0:
                raise SpecError(f"truncated length must be in (0, 1], got {length}")

    @staticmethod
    def full(n: int) -> "SlabDomain":
        return SlabDomain(axes=(None,) * n)

    @staticmethod
    def truncated_last(n: int, tau: float, length: float) -> "SlabDomain":
        return SlabDomain(axes=(None,) * (n - 1) + ((float(tau), float(length)),))

    @property
    def n(self) -> int:
        return len(self.axes)

    def truncated_axes(self) -> list[int]:
        return [i for i, ax in enumerate(self.axes) if ax is not None]

    def volume(self) -> float:
        v = 1.0
        for ax in self.axes:
            if ax is not None:
                v *= ax[1]
        return v

    def sample(self, gen: np.random.Generator, m: int) -> np.ndarray:
        pts = gen.random((m, self.n))
        for i, ax in enumerate(self.axes):
            if ax is not None:
                tau, length = ax
                pts[:, i] = tau + length * pts[:, i]
        return pts

    def to_dict(self) -> dict:
        return {"axes": [list(ax) if ax is not None else None for ax in self.axes]}

    @staticmethod
    def from_dict(d: dict) -> "SlabDomain":
        return SlabDomain(axes=tuple(tuple(ax) if ax is not None else None for ax in d["axes"]))


@dataclass(frozen=True)
class ExactFFT:
    """Exact even-p moment.  strategy: 'auto' (closed form), 'sparse', or
    'nodes' (Gauss-Legendre panels in the truncated axis)."""

    strategy: str = "auto"
    panel_cap: int = 1 << 14
    rel_tol: float = 1e-8
    mem_cap_bytes: int = 8 << 30

    def tag(self) -> str:
        return f"exact[{self.strategy}]"


@dataclass(frozen=True)
class MonteCarlo:
    samples: int
    seed: int

    def tag(self) -> str:
        return f"mc[n={self.samples},seed={self.seed}]"


@dataclass(frozen=True)
class MomentQuery:
    spec: ExpSumSpec
    p: float
    domain: SlabDomain
    normalized: bool = True
    method: object = field(default_factory=lambda: ExactFFT())

    def __post_init__(self) -> None:
        if self.p < 2:
            raise SpecError(f"p must be >= 2, got {self.p}")
        if self.domain.n != self.spec.n:
            raise SpecError("domain dimension does not match the sum's dimension")
        if isinstance(self.method, ExactFFT):
            if abs(self.p - round(self.p)) > 1e-12 or int(round(self.p)) % 2 != 0:
                raise MomentModeError(
                    f"exact mode requires an even integer p, got {self.p}"
                )


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    method: str
    error_bound: float
    evaluations: int

    def __post_init__(self) -> None:
        if self.value < 0:
            raise SpecError("moment value must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "error_bound": self.error_bound,
            "evaluations": self.evaluations,
        }


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    points: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "points": [list(pt) for pt in self.points],
        }


# ---------------------------------------------------------------------------
# exact even-p moments
# ---------------------------------------------------------------------------


def exact_torus_moment(q: MomentQuery) -> MomentEstimate:
    """Exact L^p(_sharp) moment for even p over a slab with at most one
    truncated axis; periodic axes must carry integer frequencies."""
    if not isinstance(q.method, ExactFFT):
        raise MomentModeError("exact_torus_moment requires an ExactFFT method")
    s = int(round(q.p)) // 2
    cut = q.domain.truncated_axes()
    if len(cut) > 1:
        raise MomentModeError("exact mode supports at most one truncated axis")
    freqs = q.spec.integer_frequency_matrix()
    coeffs = q.spec.coeff_array

    if q.method.strategy in ("auto", "sparse"):
        keys, cs, bits = sp.power_monomials(freqs, coeffs, s)
        if not cut:
            integral = sp.full_torus_power_integral(cs)
        else:
            tau, length = q.domain.axes[cut[0]]
            integral = sp.truncated_axis_power_integral(
                keys, cs, bits, cut[0], tau, length
            )
        value = _finalize(integral, q)
        return MomentEstimate(
            value=value, method=q.method.tag(), error_bound=0.0, evaluations=keys.size
        )

    if q.method.strategy == "nodes":
        return _exact_moment_nodes(q, s, freqs, coeffs)
    raise MomentModeError(f"unknown exact strategy {q.method.strategy!r}")


def _finalize(integral: float, q: MomentQuery) -> float:
    integral = max(integral, 0.0)
    if q.normalized:
        integral /= q.domain.volume()
    return integral ** (1.0 / q.p)


def _torus_mean_at_node(freqs_per, node_coeffs, s, mem_cap) -> float:
    if freqs_per.shape[1] == 2:
        return sp.torus_mean_abs_power_fft_2d(
            freqs_per, node_coeffs, s, mem_cap_bytes=mem_cap
        )
    # 1-D periodic part
    from scipy.fft import next_fast_len

    fmax = int(freqs_per.max())
    g = next_fast_len(2 * s * fmax + 2)
    if g * 16 * 2 > mem_cap:
        raise MomentSizeError(f"1-D FFT grid of {g} points exceeds memory cap")
    grid = np.zeros(g, dtype=complex)
    np.add.at(grid, freqs_per[:, 0], node_coeffs)
    vals = np.fft.ifft(grid) * g
    return float(np.mean((vals.real**2 + vals.imag**2) ** s))


_GL4_NODES = np.array(
    [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526]
)
_GL4_WEIGHTS = np.array(
    [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538]
)


def _exact_moment_nodes(q: MomentQuery, s, freqs, coeffs) -> MomentEstimate:
    """Gauss-Legendre panels in the truncated axis; exact FFT means on the
    periodic axes at every node.  Panels double until the relative change
    drops below rel_tol or the panel cap is hit; the achieved change is
    reported as the error bound."""
    cut = q.domain.truncated_axes()
    if not cut:
        # no truncated axis: single "node" with the plain periodic mean
        mean = _torus_mean_at_node(freqs, coeffs, s, q.method.mem_cap_bytes)
        value = _finalize(mean, q)  # volume 1, integral = mean
        return MomentEstimate(value, q.method.tag(), 0.0, 1)
    axis = cut[0]
    tau, length = q.domain.axes[axis]
    per_axes = [i for i in range(q.spec.n) if i != axis]
    freqs_per = freqs[:, per_axes]
    f_cut = freqs[:, axis].astype(float)

    def integrate(panels: int) -> tuple[float, int]:
        edges = tau + length * np.arange(panels + 1) / panels
        total = 0.0
        count = 0
        for k in range(panels):
            a, b = edges[k], edges[k + 1]
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            for xn, wn in zip(_GL4_NODES, _GL4_WEIGHTS):
                x = mid + half * xn
                node_coeffs = coeffs * np.exp(2j * math.pi * f_cut * x)
                g = _torus_mean_at_node(
                    freqs_per, node_coeffs, s, q.method.mem_cap_bytes
                )
                total += wn * half * g
                count += 1
        return total, count

    panels = 1
    prev, evals = integrate(panels)
    rel = math.inf
    while panels < q.method.panel_cap:
        panels *= 2
        cur, n_new = integrate(panels)
        evals += n_new
        rel = abs(cur - prev) / max(abs(cur), 1e-300)
        prev = cur
        if rel < q.method.rel_tol:
            break
    value = _finalize(prev, q)
    return MomentEstimate(value, q.method.tag(), rel if math.isfinite(rel) else 0.0, evals)


# ---------------------------------------------------------------------------
# Monte Carlo moments
# ---------------------------------------------------------------------------


def monte_carlo_moment(q: MomentQuery) -> MomentEstimate:
    """Seeded uniform sampling of the slab; returns mean(|S|^p)^(1/p) with a
    99% CI half-width propagated through the 1/p power (delta method)."""
    if not isinstance(q.method, MonteCarlo):
        raise MomentModeError("monte_carlo_moment requires a MonteCarlo method")
    if q.method.samples < 100:
        raise SpecError("Monte Carlo needs at least 100 samples for a usable CI")
    spec = q.spec
    total = 0.0
    total_sq = 0.0
    n_done = 0
    block_idx = 0
    while n_done < q.method.samples:
        m = min(rngmod.BLOCK, q.method.samples - n_done)
        gen = rngmod.block_stream(q.method.seed, 0, block_idx)
        pts = q.domain.sample(gen, m)
        vals = _abs_sum_pow(spec, pts, q.p)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        n_done += m
        block_idx += 1
    n = float(n_done)
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1.0, 1.0)
    sigma_mean = math.sqrt(var / n)
    integral_scale = 1.0 if q.normalized else q.domain.volume()
    base = mean * integral_scale
    value = base ** (1.0 / q.p)
    if base > 0:
        half = Z99 * sigma_mean * integral_scale / (q.p * base ** (1.0 - 1.0 / q.p))
    else:
        half = 0.0
    return MomentEstimate(value, q.method.tag(), half, n_done)


def _abs_sum_pow(spec: ExpSumSpec, pts: np.ndarray, p: float) -> np.ndarray:
    phases = pts @ spec.frequencies.T
    s = (np.exp(2j * math.pi * phases) * spec.coeff_array).sum(axis=1)
    mag2 = s.real**2 + s.imag**2
    return mag2 ** (p / 2.0)


def compute_moment(q: MomentQuery) -> MomentEstimate:
    if isinstance(q.method, ExactFFT):
        return exact_torus_moment(q)
    return monte_carlo_moment(q)


# ---------------------------------------------------------------------------
# cube moments for normalized frequency sets
# ---------------------------------------------------------------------------


def cube_moment(
    spec: ExpSumSpec,
    corner,
    side: float,
    p: float,
    method: MonteCarlo,
    nodes_per_axis: int = 0,
) -> MomentEstimate:
    """Normalized L^p_sharp average over the cube corner + [0, side]^n.

    Monte Carlo by default; set nodes_per_axis > 0 for a midpoint tensor
    quadrature instead (deterministic, for cross-checks on small configs).
    """
    corner = np.asarray(corner, dtype=float)
    if corner.shape != (spec.n,):
        raise SpecError(f"corner must be a point in R^{spec.n}")
    if side <= 0:
        raise SpecError("cube side must be positive")
    if nodes_per_axis > 0:
        if nodes_per_axis**spec.n > 50_000_000:
            raise MomentSizeError("tensor quadrature grid too large")
        axes = [corner[i] + side * (np.arange(nodes_per_axis) + 0.5) / nodes_per_axis
                for i in range(spec.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        vals = _abs_sum_pow(spec, pts, p)
        value = float(np.mean(vals)) ** (1.0 / p)
        return MomentEstimate(value, f"grid[{nodes_per_axis}^n]", 0.0, pts.shape[0])
    if method.samples < 100:
        raise SpecError("Monte Carlo needs at least 100 samples for a usable CI")
    total = 0.0
    total_sq = 0.0
    n_done = 0
    block_idx = 0
    while n_done < method.samples:
        m = min(rngmod.BLOCK, method.samples - n_done)
        gen = rngmod.block_stream(method.seed, 1, block_idx)
        pts = corner + side * gen.random((m, spec.n))
        vals = _abs_sum_pow(spec, pts, p)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        n_done += m
        block_idx += 1
    n = float(n_done)
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1.0, 1.0)
    sigma_mean = math.sqrt(var / n)
    value = mean ** (1.0 / p)
    half = Z99 * sigma_mean / (p * mean ** (1.0 - 1.0 / p)) if mean > 0 else 0.0
    return MomentEstimate(value, method.tag(), half, n_done)


# ---------------------------------------------------------------------------
# shared-sample L^p averages over boxes (used by the decoupling bench)
# ---------------------------------------------------------------------------


def box_lp_averages_shared(
    freq_groups: list,
    amp_groups: list,
    corner,
    sides,
    p: float,
    samples: int,
    seed: int,
) -> tuple[float, np.ndarray]:
    """L^p_sharp averages, over one box, of the full sum and of each group's
    partial sum, all from the same sample set (common random numbers keep
    ratios stable).  Returns (total_norm, per-group norms)."""
    corner = np.asarray(corner, dtype=float)
    sides = np.asarray(sides, dtype=float)
    n_groups = len(freq_groups)
    acc_total = 0.0
    acc_groups = np.zeros(n_groups)
    n_done = 0
    block_idx = 0
    while n_done < samples:
        m = min(rngmod.BLOCK, samples - n_done)
        gen = rngmod.block_stream(seed, 2, block_idx)
        pts = corner + sides * gen.random((m, corner.size))
        svals = np.zeros(m, dtype=complex)
        gvals = np.empty((n_groups, m), dtype=complex)
        for gi, (fr, am) in enumerate(zip(freq_groups, amp_groups)):
            phases = pts @ np.asarray(fr, dtype=float).T
            gv = (np.exp(2j * math.pi * phases) * np.asarray(am, dtype=complex)).sum(axis=1)
            gvals[gi] = gv
            svals += gv
        acc_total += float(((svals.real**2 + svals.imag**2) ** (p / 2.0)).sum())
        acc_groups += ((gvals.real**2 + gvals.imag**2) ** (p / 2.0)).sum(axis=1)
        n_done += m
        block_idx += 1
    total_norm = (acc_total / n_done) ** (1.0 / p)
    group_norms = (acc_groups / n_done) ** (1.0 / p)
    return total_norm, group_norms


# ---------------------------------------------------------------------------
# growth-exponent fits
# ---------------------------------------------------------------------------


def fit_growth_exponent(scan) -> ExponentFit:
    """OLS of log2(moment) against log2(N) over a dyadic scan.

    `scan` is a sequence of (N, MomentEstimate) or (N, value) pairs; needs at
    least three points with positive moments.
    """
    xs, ys = [], []
    for n_val, est in scan:
        value = est.value if isinstance(est, MomentEstimate) else float(est)
        if value <= 0:
            raise SpecError(f"non-positive moment {value} at N={n_val}")
        if n_val <= 0:
            raise SpecError(f"invalid N={n_val}")
        xs.append(math.log2(n_val))
        ys.append(math.log2(value))
    if len(xs) < 3:
        raise SpecError("need at least 3 scan points to fit an exponent")
    x = np.asarray(xs)
    y = np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_sq = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=min(r_sq, 1.0),
        points=tuple(zip(xs, ys)),
    )
