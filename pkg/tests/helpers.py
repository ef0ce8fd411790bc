"""Shared test oracles, kept independent of the code paths they check."""

import cmath
import math

import numpy as np


def central_diff_grad(f, x, step=1e-5):
    """Finite-difference gradient of scalar f at x (central differences).

    f must treat x as read-only between calls; x is perturbed in place and
    restored.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f()
        flat[i] = orig - step
        fm = f()
        flat[i] = orig
        out[i] = (fp - fm) / (2.0 * step)
    return grad


def max_rel_err(a, b, floor=1e-6):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def plv_bruteforce(phase_a, phase_b) -> float:
    """Direct complex-average PLV, plain Python."""
    total = 0j
    for x, y in zip(phase_a.tolist(), phase_b.tolist()):
        total += cmath.exp(1j * (x - y))
    return abs(total) / len(phase_a)


def pli_bruteforce(phase_a, phase_b, signed=False) -> float:
    """Direct sign-average PLI with (-pi, pi] wrapping, plain Python."""
    total = 0
    for x, y in zip(phase_a.tolist(), phase_b.tolist()):
        d = math.fmod(x - y, 2.0 * math.pi)
        if d > math.pi:
            d -= 2.0 * math.pi
        elif d <= -math.pi:
            d += 2.0 * math.pi
        total += (d > 0) - (d < 0)
    value = total / len(phase_a)
    return value if signed else abs(value)
