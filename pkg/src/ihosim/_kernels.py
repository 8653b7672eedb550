"""Hot loops with a numba implementation and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``IHOSIM_DISABLE_NUMBA`` is unset (or set to ``0``/``false``).
Both paths are always importable so they can be compared directly.
"""
import math
import os

import numpy as np

_PI_M4 = math.pi ** -0.25
_BIG = 1e150
_LOG_BIG = math.log(_BIG)
_CHUNK = 256


def _env_disabled():
    return os.environ.get("IHOSIM_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")


try:
    if _env_disabled():
        raise ImportError("disabled by IHOSIM_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# --- numpy reference implementations -------------------------------------

def hermite_functions_numpy(n_levels, xi):
    """Normalised Hermite functions h_n(xi), shape (n_levels, len(xi)).

    Uses the three-term recurrence on a rescaled mantissa so that large n and
    large |xi| neither overflow nor lose the Gaussian factor to underflow.
    """
    xi = np.ascontiguousarray(xi, dtype=float)
    out = np.empty((n_levels, xi.size))
    log_scale = -0.5 * xi * xi
    h_prev = np.zeros_like(xi)
    h = np.full_like(xi, _PI_M4)
    out[0] = h * np.exp(log_scale)
    if n_levels > 1:
        h_prev, h = h, math.sqrt(2.0) * xi * h
        out[1] = h * np.exp(log_scale)
    for n in range(1, n_levels - 1):
        h_next = math.sqrt(2.0 / (n + 1)) * xi * h - math.sqrt(n / (n + 1)) * h_prev
        big = np.abs(h_next) > _BIG
        if big.any():
            h_next[big] /= _BIG
            h[big] /= _BIG
            log_scale[big] += _LOG_BIG
        h_prev, h = h, h_next
        out[n + 1] = h * np.exp(log_scale)
    return out


def hermite_project_numpy(n_levels, xi, f):
    """Coefficients sum_j h_n(xi_j) f_j for n < n_levels, streaming over n.

    ``f`` may be complex; memory stays O(len(xi)).
    """
    xi = np.ascontiguousarray(xi, dtype=float)
    f = np.asarray(f)
    out = np.empty(n_levels, dtype=np.result_type(f.dtype, float))
    log_scale = -0.5 * xi * xi
    h_prev = np.zeros_like(xi)
    h = np.full_like(xi, _PI_M4)
    out[0] = (h * np.exp(log_scale)) @ f
    if n_levels > 1:
        h_prev, h = h, math.sqrt(2.0) * xi * h
        out[1] = (h * np.exp(log_scale)) @ f
    for n in range(1, n_levels - 1):
        h_next = math.sqrt(2.0 / (n + 1)) * xi * h - math.sqrt(n / (n + 1)) * h_prev
        big = np.abs(h_next) > _BIG
        if big.any():
            h_next[big] /= _BIG
            h[big] /= _BIG
            log_scale[big] += _LOG_BIG
        h_prev, h = h, h_next
        out[n + 1] = (h * np.exp(log_scale)) @ f
    return out


def hermite_synthesize_numpy(c, xi):
    """sum_n c_n h_n(xi), streaming over n."""
    xi = np.ascontiguousarray(xi, dtype=float)
    c = np.asarray(c)
    out = np.zeros(xi.size, dtype=np.result_type(c.dtype, float))
    log_scale = -0.5 * xi * xi
    h_prev = np.zeros_like(xi)
    h = np.full_like(xi, _PI_M4)
    out += c[0] * h * np.exp(log_scale)
    if c.size > 1:
        h_prev, h = h, math.sqrt(2.0) * xi * h
        out += c[1] * h * np.exp(log_scale)
    for n in range(1, c.size - 1):
        h_next = math.sqrt(2.0 / (n + 1)) * xi * h - math.sqrt(n / (n + 1)) * h_prev
        big = np.abs(h_next) > _BIG
        if big.any():
            h_next[big] /= _BIG
            h[big] /= _BIG
            log_scale[big] += _LOG_BIG
        h_prev, h = h, h_next
        out += c[n + 1] * h * np.exp(log_scale)
    return out


def trig_moments_numpy(k, x, w):
    """Return (sum_j w_j sin(k x_j), sum_j w_j cos(k x_j)) for every k."""
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    s = np.empty(k.size)
    c = np.empty(k.size)
    for i0 in range(0, k.size, _CHUNK):
        ph = np.outer(k[i0:i0 + _CHUNK], x)
        s[i0:i0 + _CHUNK] = np.sin(ph) @ w
        c[i0:i0 + _CHUNK] = np.cos(ph) @ w
    return s, c


def cosine_transform_numpy(x, k, a, b):
    """sum_i [a_i cos(k_i x) + b_i sin(k_i x)] evaluated at every x."""
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    out = np.empty(x.size)
    for j0 in range(0, x.size, _CHUNK):
        ph = np.outer(x[j0:j0 + _CHUNK], k)
        out[j0:j0 + _CHUNK] = np.cos(ph) @ a + np.sin(ph) @ b
    return out


# --- numba implementations -----------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _hermite_functions_jit(n_levels, xi):
        out = np.empty((n_levels, xi.size))
        r2 = math.sqrt(2.0)
        for j in range(xi.size):
            x = xi[j]
            ls = -0.5 * x * x
            hp = 0.0
            h = _PI_M4
            out[0, j] = h * math.exp(ls)
            if n_levels > 1:
                hp = h
                h = r2 * x * h
                out[1, j] = h * math.exp(ls)
            for n in range(1, n_levels - 1):
                hn = math.sqrt(2.0 / (n + 1)) * x * h - math.sqrt(n / (n + 1.0)) * hp
                if abs(hn) > _BIG:
                    hn /= _BIG
                    h /= _BIG
                    ls += _LOG_BIG
                hp = h
                h = hn
                out[n + 1, j] = h * math.exp(ls)
        return out

    @njit(cache=True)
    def _trig_moments_jit(k, x, w):
        s = np.zeros(k.size)
        c = np.zeros(k.size)
        for i in range(k.size):
            ki = k[i]
            ss = 0.0
            cc = 0.0
            for j in range(x.size):
                ph = ki * x[j]
                ss += w[j] * math.sin(ph)
                cc += w[j] * math.cos(ph)
            s[i] = ss
            c[i] = cc
        return s, c

    @njit(cache=True)
    def _cosine_transform_jit(x, k, a, b):
        out = np.zeros(x.size)
        for j in range(x.size):
            xj = x[j]
            acc = 0.0
            for i in range(k.size):
                ph = k[i] * xj
                acc += a[i] * math.cos(ph) + b[i] * math.sin(ph)
            out[j] = acc
        return out


    @njit(cache=True)
    def _hermite_project_jit(n_levels, xi, fr, fi):
        outr = np.zeros(n_levels)
        outi = np.zeros(n_levels)
        r2 = math.sqrt(2.0)
        for j in range(xi.size):
            x = xi[j]
            ls = -0.5 * x * x
            hp = 0.0
            h = _PI_M4
            g = h * math.exp(ls)
            outr[0] += g * fr[j]
            outi[0] += g * fi[j]
            if n_levels > 1:
                hp = h
                h = r2 * x * h
                g = h * math.exp(ls)
                outr[1] += g * fr[j]
                outi[1] += g * fi[j]
            for n in range(1, n_levels - 1):
                hn = math.sqrt(2.0 / (n + 1)) * x * h - math.sqrt(n / (n + 1.0)) * hp
                if abs(hn) > _BIG:
                    hn /= _BIG
                    h /= _BIG
                    ls += _LOG_BIG
                hp = h
                h = hn
                g = h * math.exp(ls)
                outr[n + 1] += g * fr[j]
                outi[n + 1] += g * fi[j]
        return outr, outi

    @njit(cache=True)
    def _hermite_synthesize_jit(cr, ci, xi):
        outr = np.zeros(xi.size)
        outi = np.zeros(xi.size)
        r2 = math.sqrt(2.0)
        nl = cr.size
        for j in range(xi.size):
            x = xi[j]
            ls = -0.5 * x * x
            hp = 0.0
            h = _PI_M4
            g = h * math.exp(ls)
            ar = cr[0] * g
            ai = ci[0] * g
            if nl > 1:
                hp = h
                h = r2 * x * h
                g = h * math.exp(ls)
                ar += cr[1] * g
                ai += ci[1] * g
            for n in range(1, nl - 1):
                hn = math.sqrt(2.0 / (n + 1)) * x * h - math.sqrt(n / (n + 1.0)) * hp
                if abs(hn) > _BIG:
                    hn /= _BIG
                    h /= _BIG
                    ls += _LOG_BIG
                hp = h
                h = hn
                g = h * math.exp(ls)
                ar += cr[n + 1] * g
                ai += ci[n + 1] * g
            outr[j] = ar
            outi[j] = ai
        return outr, outi

    def hermite_project_numba(n_levels, xi, f):
        f = np.asarray(f)
        xi = np.ascontiguousarray(xi, dtype=np.float64)
        re, im = _hermite_project_jit(int(n_levels), xi,
                                      np.ascontiguousarray(f.real, dtype=np.float64),
                                      np.ascontiguousarray(np.imag(f), dtype=np.float64))
        return re + 1j * im if np.iscomplexobj(f) else re

    def hermite_synthesize_numba(c, xi):
        c = np.asarray(c)
        re, im = _hermite_synthesize_jit(np.ascontiguousarray(c.real, dtype=np.float64),
                                         np.ascontiguousarray(np.imag(c), dtype=np.float64),
                                         np.ascontiguousarray(xi, dtype=np.float64))
        return re + 1j * im if np.iscomplexobj(c) else re

    def hermite_functions_numba(n_levels, xi):
        return _hermite_functions_jit(int(n_levels), np.ascontiguousarray(xi, dtype=np.float64))

    def trig_moments_numba(k, x, w):
        f = lambda v: np.ascontiguousarray(v, dtype=np.float64)
        return _trig_moments_jit(f(k), f(x), f(w))

    def cosine_transform_numba(x, k, a, b):
        f = lambda v: np.ascontiguousarray(v, dtype=np.float64)
        return _cosine_transform_jit(f(x), f(k), f(a), f(b))

    hermite_functions = hermite_functions_numba
    hermite_project = hermite_project_numba
    hermite_synthesize = hermite_synthesize_numba
    trig_moments = trig_moments_numba
    cosine_transform = cosine_transform_numba
else:
    hermite_functions = hermite_functions_numpy
    hermite_project = hermite_project_numpy
    hermite_synthesize = hermite_synthesize_numpy
    trig_moments = trig_moments_numpy
    cosine_transform = cosine_transform_numpy


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
