# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: PLV/PLI pair grids and grouped 2-D convolution.

Same signatures and semantics as neuroconn._kernels_py. Each pair/output
element is accumulated independently, so results do not depend on loop
scheduling.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, fmod, sin, sqrt

cnp.import_array()

cdef double TWO_PI = 6.283185307179586476925287
cdef double PI = 3.141592653589793238462643


cdef inline double _wrap(double d) nogil:
    # wrap to (-pi, pi]
    d = fmod(d, TWO_PI)
    if d > PI:
        d -= TWO_PI
    elif d <= -PI:
        d += TWO_PI
    return d


def plv_matrix(object phases_in):
    """Phase-locking values for all channel pairs; unit diagonal."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] phases = np.ascontiguousarray(
        phases_in, dtype=np.float64)
    cdef Py_ssize_t n = phases.shape[0], m = phases.shape[1]
    cdef cnp.ndarray[double, ndim=2, mode="c"] out = np.eye(n)
    cdef double[:, ::1] ph = phases
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double sr, si, d, v
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                sr = 0.0
                si = 0.0
                for k in range(m):
                    d = ph[i, k] - ph[j, k]
                    sr += cos(d)
                    si += sin(d)
                v = sqrt(sr * sr + si * si) / m
                o[i, j] = v
                o[j, i] = v
    return out


def pli_matrix(object phases_in, bint signed=False):
    """Phase-lag indices for all channel pairs; zero diagonal.

    Differences are wrapped to (-pi, pi] before the sign function.
    """
    cdef cnp.ndarray[double, ndim=2, mode="c"] phases = np.ascontiguousarray(
        phases_in, dtype=np.float64)
    cdef Py_ssize_t n = phases.shape[0], m = phases.shape[1]
    cdef cnp.ndarray[double, ndim=2, mode="c"] out = np.zeros((n, n))
    cdef double[:, ::1] ph = phases
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef long acc
    cdef double d, v
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0
                for k in range(m):
                    d = _wrap(ph[i, k] - ph[j, k])
                    if d > 0:
                        acc += 1
                    elif d < 0:
                        acc -= 1
                v = (<double> acc) / m
                if not signed:
                    v = fabs(v)
                o[i, j] = v
                o[j, i] = v
    return out


def conv2d_forward(object x_in, object w_in,
                   Py_ssize_t stride_h, Py_ssize_t stride_w,
                   Py_ssize_t pad_h, Py_ssize_t pad_w, Py_ssize_t groups):
    """Grouped 2-D cross-correlation: [N,C,H,W] x [F,C//g,KH,KW] -> [N,F,OH,OW]."""
    cdef cnp.ndarray[double, ndim=4, mode="c"] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=4, mode="c"] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t f = w.shape[0], cg = w.shape[1], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad_h - kh) // stride_h + 1
    cdef Py_ssize_t ow = (wd + 2 * pad_w - kw) // stride_w + 1
    cdef Py_ssize_t fg = f // groups
    cdef cnp.ndarray[double, ndim=4, mode="c"] out = np.zeros((n, f, oh, ow))
    cdef double[:, :, :, ::1] xv = x, wv = w, ov = out
    cdef Py_ssize_t b, fi, g, ci, i, j, r, s, hh, ww
    cdef double acc
    with nogil:
        for b in range(n):
            for fi in range(f):
                g = fi // fg
                for r in range(oh):
                    for s in range(ow):
                        acc = 0.0
                        for ci in range(cg):
                            for i in range(kh):
                                hh = r * stride_h + i - pad_h
                                if hh < 0 or hh >= h:
                                    continue
                                for j in range(kw):
                                    ww = s * stride_w + j - pad_w
                                    if ww < 0 or ww >= wd:
                                        continue
                                    acc += xv[b, g * cg + ci, hh, ww] * wv[fi, ci, i, j]
                        ov[b, fi, r, s] = acc
    return out


def conv2d_backward_input(object dy_in, object w_in, Py_ssize_t h, Py_ssize_t wd,
                          Py_ssize_t stride_h, Py_ssize_t stride_w,
                          Py_ssize_t pad_h, Py_ssize_t pad_w, Py_ssize_t groups):
    """Gradient of conv2d_forward w.r.t. the input; returns [N, C, H, W]."""
    cdef cnp.ndarray[double, ndim=4, mode="c"] dy = np.ascontiguousarray(dy_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=4, mode="c"] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t n = dy.shape[0], f = dy.shape[1], oh = dy.shape[2], ow = dy.shape[3]
    cdef Py_ssize_t cg = w.shape[1], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t fg = f // groups
    cdef cnp.ndarray[double, ndim=4, mode="c"] dx = np.zeros((n, cg * groups, h, wd))
    cdef double[:, :, :, ::1] dyv = dy, wv = w, dxv = dx
    cdef Py_ssize_t b, fi, g, ci, i, j, r, s, hh, ww
    cdef double dval
    with nogil:
        for b in range(n):
            for fi in range(f):
                g = fi // fg
                for r in range(oh):
                    for s in range(ow):
                        dval = dyv[b, fi, r, s]
                        if dval == 0.0:
                            continue
                        for ci in range(cg):
                            for i in range(kh):
                                hh = r * stride_h + i - pad_h
                                if hh < 0 or hh >= h:
                                    continue
                                for j in range(kw):
                                    ww = s * stride_w + j - pad_w
                                    if ww < 0 or ww >= wd:
                                        continue
                                    dxv[b, g * cg + ci, hh, ww] += dval * wv[fi, ci, i, j]
    return dx


def conv2d_backward_kernel(object dy_in, object x_in, Py_ssize_t kh, Py_ssize_t kw,
                           Py_ssize_t stride_h, Py_ssize_t stride_w,
                           Py_ssize_t pad_h, Py_ssize_t pad_w, Py_ssize_t groups):
    """Gradient of conv2d_forward w.r.t. the kernel; returns [F, C//g, KH, KW]."""
    cdef cnp.ndarray[double, ndim=4, mode="c"] dy = np.ascontiguousarray(dy_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=4, mode="c"] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t n = dy.shape[0], f = dy.shape[1], oh = dy.shape[2], ow = dy.shape[3]
    cdef Py_ssize_t c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t cg = c // groups
    cdef Py_ssize_t fg = f // groups
    cdef cnp.ndarray[double, ndim=4, mode="c"] dw = np.zeros((f, cg, kh, kw))
    cdef double[:, :, :, ::1] dyv = dy, xv = x, dwv = dw
    cdef Py_ssize_t b, fi, g, ci, i, j, r, s, hh, ww
    cdef double dval
    with nogil:
        for b in range(n):
            for fi in range(f):
                g = fi // fg
                for r in range(oh):
                    for s in range(ow):
                        dval = dyv[b, fi, r, s]
                        if dval == 0.0:
                            continue
                        for ci in range(cg):
                            for i in range(kh):
                                hh = r * stride_h + i - pad_h
                                if hh < 0 or hh >= h:
                                    continue
                                for j in range(kw):
                                    ww = s * stride_w + j - pad_w
                                    if ww < 0 or ww >= wd:
                                        continue
                                    dwv[fi, ci, i, j] += dval * xv[b, g * cg + ci, hh, ww]
    return dw
