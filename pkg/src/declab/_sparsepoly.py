"""Sparse machinery for exact even-power moments of exponential sums.

For p = 2s with integer s, |S|^{2s} = S^s * conj(S^s) and S^s is a
trigonometric polynomial whose (integer) frequency vectors are s-fold sums
of the frequency set.  We keep S^s as a sparse map {packed key -> complex
coefficient}; packing puts each axis in its own bit field of one int64.

Exactness facts used downstream:

* full torus:      integral of |S|^{2s} = sum |c_K|^2          (Parseval)
* one cut axis k:  integral = sum over classes (all axes but k equal) of
                   sum_{u,v} c_u conj(c_v) * I(m_u - m_v), with
                   I(d) = integral of e(d x) over [tau, tau+L]  (closed form)

Both reductions are exact up to rounding; no quadrature is involved.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


class MomentSizeError(RuntimeError):
    """Raised when an exact computation would exceed its memory/size budget."""


def axis_bits(max_sums: np.ndarray) -> np.ndarray:
    """Bits needed per axis to hold values in [0, max_sums[i]]."""
    return np.array([int(m).bit_length() for m in max_sums], dtype=np.int64)


def pack_keys(mat: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Pack the rows of a nonnegative int64 matrix into single int64 keys."""
    if bits.sum() > 62:
        raise MomentSizeError(
            f"key packing needs {int(bits.sum())} bits > 62; "
            f"per-axis bits {bits.tolist()}"
        )
    shifts = np.concatenate([np.cumsum(bits[::-1])[::-1][1:], [0]])
    keys = np.zeros(mat.shape[0], dtype=np.int64)
    for col in range(mat.shape[1]):
        keys |= mat[:, col] << int(shifts[col])
    return keys


def unpack_axis(keys: np.ndarray, bits: np.ndarray, axis: int) -> np.ndarray:
    shifts = np.concatenate([np.cumsum(bits[::-1])[::-1][1:], [0]])
    return (keys >> int(shifts[axis])) & ((1 << int(bits[axis])) - 1)


def clear_axis(keys: np.ndarray, bits: np.ndarray, axis: int) -> np.ndarray:
    shifts = np.concatenate([np.cumsum(bits[::-1])[::-1][1:], [0]])
    mask = ((1 << int(bits[axis])) - 1) << int(shifts[axis])
    return keys & ~mask


def _collapse(keys: np.ndarray, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum coefficients of equal keys; returns sorted unique keys."""
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    coeffs = coeffs[order]
    boundary = np.empty(keys.size, dtype=bool)
    boundary[0] = True
    np.not_equal(keys[1:], keys[:-1], out=boundary[1:])
    starts = np.flatnonzero(boundary)
    summed = np.add.reduceat(coeffs, starts)
    return keys[starts], summed


def power_monomials(
    freqs: np.ndarray,
    coeffs: np.ndarray,
    s: int,
    *,
    monomial_cap: int = 30_000_000,
    product_cap: int = 80_000_000,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sparse monomials of S^s.

    Parameters
    ----------
    freqs : (N, n) nonnegative int64 frequency rows.
    coeffs : (N,) complex coefficients a_j.
    s : positive integer power.

    Returns
    -------
    keys, cs, bits : packed keys of S^s, their complex coefficients, and the
    per-axis bit layout (sized for s-fold sums, so the same layout is valid
    for every intermediate power).
    """
    freqs = np.asarray(freqs, dtype=np.int64)
    if np.any(freqs < 0):
        raise ValueError("exact mode requires nonnegative integer frequencies")
    n_terms = freqs.shape[0]
    max_sums = s * freqs.max(axis=0)
    bits = axis_bits(max_sums)
    # multiset count C(N+s-1, s) is the exact size of S^s's support upper bound
    est = math.comb(n_terms + s - 1, s)
    if est > monomial_cap:
        raise MomentSizeError(
            f"S^{s} with N={n_terms} has up to {est} monomials "
            f"(cap {monomial_cap}); refusing"
        )
    base_keys = pack_keys(freqs, bits)
    base_cs = np.asarray(coeffs, dtype=complex)
    keys, cs = base_keys.copy(), base_cs.copy()
    for _ in range(s - 1):
        if keys.size * n_terms > product_cap:
            raise MomentSizeError(
                f"convolution step of {keys.size} x {n_terms} products exceeds "
                f"cap {product_cap}; refusing"
            )
        prod_keys = (keys[:, None] + base_keys[None, :]).ravel()
        prod_cs = (cs[:, None] * base_cs[None, :]).ravel()
        keys, cs = _collapse(prod_keys, prod_cs)
    return keys, cs, bits


def full_torus_power_integral(cs: np.ndarray) -> float:
    """Integral of |S|^{2s} over the full torus: sum of squared magnitudes."""
    return float(np.sum(cs.real**2 + cs.imag**2))


def _interval_character_integral(d: np.ndarray, tau: float, length: float) -> np.ndarray:
    """I(d) = integral of e(d x) dx over [tau, tau+length] for integer d != 0."""
    d = d.astype(float)
    a = np.exp(1j * TWO_PI * d * (tau + length))
    b = np.exp(1j * TWO_PI * d * tau)
    return (a - b) / (1j * TWO_PI * d)


def truncated_axis_power_integral(
    keys: np.ndarray,
    cs: np.ndarray,
    bits: np.ndarray,
    axis: int,
    tau: float,
    length: float,
    *,
    pair_cap: int = 400_000_000,
) -> float:
    """Integral of |S|^{2s} over full periods in all axes but `axis`,
    and over [tau, tau+length] in `axis`.  Exact (closed-form in-axis)."""
    m_axis = unpack_axis(keys, bits, axis)
    cls = clear_axis(keys, bits, axis)
    order = np.lexsort((m_axis, cls))
    cls = cls[order]
    m_axis = m_axis[order]
    cs_s = cs[order]

    boundary = np.empty(cls.size, dtype=bool)
    boundary[0] = True
    np.not_equal(cls[1:], cls[:-1], out=boundary[1:])
    starts = np.flatnonzero(boundary)
    lengths = np.diff(np.append(starts, cls.size))

    total = float(np.sum(cs_s.real**2 + cs_s.imag**2)) * length  # diagonal terms

    n_pairs = int(np.sum(lengths * (lengths - 1) // 2))
    if n_pairs > pair_cap:
        raise MomentSizeError(
            f"{n_pairs} within-class pairs exceed cap {pair_cap}; refusing"
        )
    if n_pairs == 0:
        return total

    # enumerate all (u < v) pairs inside classes, grouped by class length
    cross = 0.0
    for ell in np.unique(lengths):
        if ell < 2:
            continue
        blk = starts[lengths == ell]
        iu, iv = np.triu_indices(int(ell), k=1)
        u = (blk[:, None] + iu[None, :]).ravel()
        v = (blk[:, None] + iv[None, :]).ravel()
        d = m_axis[v] - m_axis[u]  # > 0 since keys are unique and sorted
        ih = _interval_character_integral(d, tau, length)
        cross += 2.0 * float(np.sum((cs_s[v] * np.conj(cs_s[u]) * ih).real))
    return total + cross


# ---------------------------------------------------------------------------
# dense FFT route: exact 2-D torus average of |S|^{2s} by gridding
# ---------------------------------------------------------------------------


def torus_mean_abs_power_fft_2d(
    freqs: np.ndarray,
    coeffs: np.ndarray,
    s: int,
    *,
    mem_cap_bytes: int = 8 << 30,
) -> float:
    """Mean of |S|^{2s} over the 2-torus via a zero-padded FFT grid.

    |S|^{2s} is a trigonometric polynomial of degree s*F_i per axis, so the
    equispaced mean on a grid with g_i >= 2 s F_i + 1 points per axis is the
    exact integral.
    """
    from scipy.fft import next_fast_len

    freqs = np.asarray(freqs, dtype=np.int64)
    if freqs.shape[1] != 2:
        raise ValueError("FFT route is 2-D")
    fmax = freqs.max(axis=0)
    g1 = next_fast_len(int(2 * s * fmax[0] + 2))
    g2 = next_fast_len(int(2 * s * fmax[1] + 2))
    need = g1 * g2 * 16 * 2  # coefficient grid + FFT output
    if need > mem_cap_bytes:
        raise MomentSizeError(
            f"FFT grid {g1} x {g2} needs about {need / 2**30:.2f} GiB "
            f"(cap {mem_cap_bytes / 2**30:.2f} GiB); refusing"
        )
    grid = np.zeros((g1, g2), dtype=complex)
    np.add.at(grid, (freqs[:, 0], freqs[:, 1]), np.asarray(coeffs, dtype=complex))
    vals = np.fft.ifft2(grid)
    vals *= g1 * g2
    mag2 = vals.real**2 + vals.imag**2
    return float(np.mean(mag2**s))
