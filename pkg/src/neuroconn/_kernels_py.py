"""Pure-numpy implementations of the hot kernels.

Import-time fallback for environments where the compiled extension is not
built; see neuroconn.backend. Function signatures and semantics match
neuroconn._kernels_c exactly. Pair sums are computed per pair with no shared
accumulators, so results do not depend on evaluation order.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_phase(d):
    """Wrap phase differences to (-pi, pi]."""
    d = np.remainder(d, TWO_PI)  # [0, 2*pi)
    return np.where(d > np.pi, d - TWO_PI, d)


def plv_matrix(phases):
    """Phase-locking values for all channel pairs.

    phases: float64 [n_channels, n_samples] instantaneous phase in radians.
    Returns a symmetric [n_channels, n_channels] matrix with unit diagonal.
    """
    phases = np.ascontiguousarray(phases, dtype=np.float64)
    n = phases.shape[0]
    m = phases.shape[1]
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            d = phases[i] - phases[j]
            s = complex(np.cos(d).sum(), np.sin(d).sum())
            v = abs(s) / m
            out[i, j] = v
            out[j, i] = v
    return out


def pli_matrix(phases, signed=False):
    """Phase-lag indices for all channel pairs.

    Differences are wrapped to (-pi, pi] before the sign; diagonal is 0.
    With signed=True the modulus is skipped (debug mode, values in [-1, 1]).
    """
    phases = np.ascontiguousarray(phases, dtype=np.float64)
    n = phases.shape[0]
    m = phases.shape[1]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = wrap_phase(phases[i] - phases[j])
            v = np.sign(d).sum() / m
            if not signed:
                v = abs(v)
            out[i, j] = v
            out[j, i] = v
    return out


def _out_size(n, k, stride, pad):
    return (n + 2 * pad - k) // stride + 1


def conv2d_forward(x, w, stride_h, stride_w, pad_h, pad_w, groups):
    """Grouped 2-D cross-correlation.

    x: [N, C, H, W], w: [F, C//groups, KH, KW] -> [N, F, OH, OW].
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    n, c, h, wid = x.shape
    f, cg, kh, kw = w.shape
    oh = _out_size(h, kh, stride_h, pad_h)
    ow = _out_size(wid, kw, stride_w, pad_w)
    fg = f // groups
    xp = np.pad(x, ((0, 0), (0, 0), (pad_h, pad_h), (pad_w, pad_w)))
    out = np.zeros((n, f, oh, ow))
    for g in range(groups):
        xg = xp[:, g * cg : (g + 1) * cg]
        wg = w[g * fg : (g + 1) * fg]
        acc = out[:, g * fg : (g + 1) * fg]
        for i in range(kh):
            for j in range(kw):
                patch = xg[:, :, i : i + stride_h * oh : stride_h, j : j + stride_w * ow : stride_w]
                acc += np.einsum("nchw,fc->nfhw", patch, wg[:, :, i, j])
    return out


def conv2d_backward_input(dy, w, h, wid, stride_h, stride_w, pad_h, pad_w, groups):
    """Gradient of conv2d_forward w.r.t. the input; returns [N, C, H, W]."""
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    n, f, oh, ow = dy.shape
    _, cg, kh, kw = w.shape
    fg = f // groups
    dxp = np.zeros((n, cg * groups, h + 2 * pad_h, wid + 2 * pad_w))
    for g in range(groups):
        dyg = dy[:, g * fg : (g + 1) * fg]
        wg = w[g * fg : (g + 1) * fg]
        acc = dxp[:, g * cg : (g + 1) * cg]
        for i in range(kh):
            for j in range(kw):
                acc[:, :, i : i + stride_h * oh : stride_h, j : j + stride_w * ow : stride_w] += np.einsum(
                    "nfhw,fc->nchw", dyg, wg[:, :, i, j]
                )
    return dxp[:, :, pad_h : pad_h + h, pad_w : pad_w + wid]


def conv2d_backward_kernel(dy, x, kh, kw, stride_h, stride_w, pad_h, pad_w, groups):
    """Gradient of conv2d_forward w.r.t. the kernel; returns [F, C//groups, KH, KW]."""
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    n, f, oh, ow = dy.shape
    c = x.shape[1]
    cg = c // groups
    fg = f // groups
    xp = np.pad(x, ((0, 0), (0, 0), (pad_h, pad_h), (pad_w, pad_w)))
    dw = np.zeros((f, cg, kh, kw))
    for g in range(groups):
        dyg = dy[:, g * fg : (g + 1) * fg]
        xg = xp[:, g * cg : (g + 1) * cg]
        for i in range(kh):
            for j in range(kw):
                patch = xg[:, :, i : i + stride_h * oh : stride_h, j : j + stride_w * ow : stride_w]
                dw[g * fg : (g + 1) * fg, :, i, j] = np.einsum("nfhw,nchw->fc", dyg, patch)
    return dw
