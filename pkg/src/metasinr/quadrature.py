"""Numerical integration backbone.

All integrators take *vectorized* integrands: ``f(x)`` receives a 1-D array of
nodes and returns an array whose last axis runs over those nodes.  Any leading
axes are treated as independent components that share one adaptive mesh, with
convergence required for every component.  Complex-valued integrands are
supported throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadSpec:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    max_depth: int = 30

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


DEFAULT_SPEC = QuadSpec()


class QuadratureError(ArithmeticError):
    """Adaptive refinement gave up; carries the best estimate and its error bound."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DivergenceError(QuadratureError):
    pass


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[[1, 3, 5]] = _WG[:3]
_GAUSS[7] = _WG[3]
_GAUSS[[9, 11, 13]] = _WG[2::-1]


def _gk15(f, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = (center[:, None] + half[:, None] * _NODES).ravel()
    y = np.asarray(f(x))
    if y.shape[-1:] != x.shape:
        y = np.broadcast_to(y, y.shape[:-1] + x.shape) if y.ndim else np.broadcast_to(y, x.shape)
    y = y.reshape(y.shape[:-1] + (lo.size, 15))
    kron = (y @ _KRONROD) * half
    gauss = (y @ _GAUSS) * half
    return kron, np.abs(kron - gauss)


def _finish(value):
    value = np.asarray(value)
    if value.ndim == 0:
        return complex(value) if np.iscomplexobj(value) else float(value)
    return value


def integrate(f, a, b, spec: QuadSpec = DEFAULT_SPEC, points=()):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    ``points`` are interior breakpoints (kinks, discontinuities) that seed the
    initial partition.  Raises ``QuadratureError`` when intervals at
    ``spec.max_depth`` still carry too much error.
    """
    a = float(a)
    b = float(b)
    if a == b:
        y = np.asarray(f(np.array([a])))
        return _finish(np.zeros(y.shape[:-1], dtype=y.dtype))
    if b < a:
        return _finish(-np.asarray(integrate(f, b, a, spec, points)))
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integrate needs finite limits; use integrate_semi_infinite")

    edges = np.unique(np.concatenate([[a, b], [p for p in points if a < p < b]]))
    lo, hi = edges[:-1], edges[1:]
    depth = np.zeros(lo.size, dtype=int)
    est, err = _gk15(f, lo, hi)
    frozen_est = np.zeros(est.shape[:-1], dtype=est.dtype)
    frozen_err = np.zeros(err.shape[:-1])

    while True:
        total = est.sum(axis=-1) + frozen_est
        total_err = err.sum(axis=-1) + frozen_err
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            return _finish(total)

        n = lo.size
        score = (err / tol[..., None]).reshape(-1, n).max(axis=0)
        split = score * n > 1.0
        split[np.argmax(score)] = True
        deep = depth >= spec.max_depth
        if np.any(split & deep):
            # intervals that cannot be refined further are retired
            frozen_est = frozen_est + est[..., split & deep].sum(axis=-1)
            frozen_err = frozen_err + err[..., split & deep].sum(axis=-1)
            if np.all(frozen_err > tol) or not np.any(split & ~deep):
                if np.all(frozen_err + err[..., ~deep].sum(axis=-1) <= tol):
                    keep = ~deep | ~split
                    lo, hi, depth = lo[keep], hi[keep], depth[keep]
                    est, err = est[..., keep], err[..., keep]
                    continue
                raise QuadratureError(
                    f"maximum subdivision depth {spec.max_depth} reached",
                    _finish(total),
                    _finish(total_err),
                )
            keep = ~(split & deep)
            lo, hi, depth, split = lo[keep], hi[keep], depth[keep], split[keep]
            est, err = est[..., keep], err[..., keep]
        if lo.size > 200_000:
            raise QuadratureError("too many subintervals", _finish(total), _finish(total_err))

        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_est, new_err = _gk15(f, new_lo, new_hi)
        new_depth = np.concatenate([depth[split], depth[split]]) + 1
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        depth = np.concatenate([depth[keep], new_depth])
        est = np.concatenate([est[..., keep], new_est], axis=-1)
        err = np.concatenate([err[..., keep], new_err], axis=-1)


_TAIL_SPAN = 1e10


def integrate_semi_infinite(f, a, spec: QuadSpec = DEFAULT_SPEC, *, scale=None, decay=None, points=()):
    """Integral of ``f`` over ``[a, inf)``.

    Without ``decay`` the interval is mapped onto ``(0, 1]`` through
    ``u = 1 / (1 + (z - a) / scale)``.  With ``decay=p`` the integrand is
    declared to fall off as ``z**-p`` (``p > 1``): the range
    ``[a, a + scale * 1e10]`` is integrated on a logarithmic map and the
    remainder is added in closed form, which copes with tails far too slow
    for the rational map (e.g. ``z**-1.1``).

    ``a`` may be a 1-D array of lower limits; ``f`` then receives nodes of
    shape ``(len(a), n)`` and must return ``(..., len(a), n)``.  Breakpoints
    are only accepted for scalar ``a``.
    """
    lower = np.asarray(a, dtype=float)
    vector = lower.ndim == 1
    if lower.ndim > 1:
        raise ValueError("lower limit must be a scalar or a 1-D array")
    if scale is None:
        c = np.maximum(np.abs(lower), 1.0)
    else:
        c = np.maximum(np.broadcast_to(np.asarray(scale, dtype=float), lower.shape), np.abs(lower))
        c = np.where(c > 0, c, 1.0)
    if vector and len(points):
        raise ValueError("breakpoints need a scalar lower limit")
    lo_ = lower[:, None] if vector else lower
    c_ = c[:, None] if vector else c

    if decay is None:
        probe = np.array([1e6, 1e12])
        zp = lo_ + c_ * probe
        fz = np.abs(np.asarray(f(zp)) * zp)
        fz = np.broadcast_to(fz, np.broadcast_shapes(fz.shape, zp.shape))
        near, far = fz[..., 0], fz[..., 1]
        if np.any((near > 0) & (far >= 0.999 * near)) or not np.all(np.isfinite(far)):
            raise DivergenceError("integrand does not decay faster than 1/z")

        def mapped(u):
            z = lo_ + c_ * (1.0 / u - 1.0)
            return np.asarray(f(z)) * (c_ / (u * u))

        u_points = sorted(1.0 / (1.0 + (p - float(lower)) / float(c)) for p in points if p > lower)
        return integrate(mapped, 0.0, 1.0, spec, u_points)

    if decay <= 1.0:
        raise DivergenceError(f"tail exponent {decay} <= 1 is not integrable")
    span = np.log1p(_TAIL_SPAN)
    top = lo_ + c_ * _TAIL_SPAN

    def mapped(t):
        g = np.exp(t * span)
        z = lo_ + c_ * (g - 1.0)
        return np.asarray(f(z)) * (c_ * span * g)

    t_points = sorted(np.log1p((p - float(lower)) / float(c)) / span for p in points if p > lower)
    body = np.asarray(integrate(mapped, 0.0, 1.0, spec, t_points))
    tip = np.asarray(f(np.asarray(top)[..., None] if not vector else top))
    tip = tip[..., 0] if vector else (tip[..., 0] if tip.ndim else tip)
    tail = tip * (np.asarray(top).reshape(-1) if vector else float(top)) / (decay - 1.0)
    return _finish(body + tail)


def gil_pelaez_integral(
    g,
    gamma,
    spec: QuadSpec = QuadSpec(abs_tol=1e-7, rel_tol=1e-6),
    *,
    panel_width: float = 1.0,
    growth: float = 1.25,
    rel_stop: float = 1e-4,
    max_panels: int = 400,
    full_output: bool = False,
):
    """CCDF ``P(X > gamma)`` of a variable on ``(0, 1]`` from its moments.

    ``g(t)`` must return the complex moment ``E[X**(1j*t)]`` for a 1-D array of
    ``t``.  The oscillatory integral is accumulated panel by panel (linear
    panels first, then geometrically growing ones) until two consecutive
    panels each change the running value by less than ``rel_stop`` of it.
    Values are clamped to ``[0, 1]``; ``full_output`` also returns the raw
    values and the truncation point.
    """
    gam = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any((gam <= 0) | (gam >= 1)):
        raise ValueError("gamma must lie strictly inside (0, 1)")
    log_gamma = np.log(gam)

    def integrand(t):
        phase = np.exp(-1j * np.outer(log_gamma, t))
        return np.imag(phase * np.asarray(g(t))[None, :]) / t

    acc = np.zeros(gam.size)
    quiet = np.zeros(gam.size, dtype=int)
    t0, width = 0.0, float(panel_width)
    for panel in range(max_panels):
        t1 = t0 + width
        piece = np.asarray(integrate(integrand, t0, t1, spec))
        acc += piece
        value = 0.5 + acc / math.pi
        small = np.abs(piece) / math.pi < rel_stop * np.maximum(np.abs(value), 1e-2)
        quiet = np.where(small, quiet + 1, 0)
        t0 = t1
        if panel >= 8:
            width *= growth
        if np.all(quiet >= 2):
            break
    else:
        raise QuadratureError(
            f"Gil-Pelaez integral not settled after {max_panels} panels (t = {t0:.3g})",
            0.5 + acc / math.pi,
            None,
        )
    raw = 0.5 + acc / math.pi
    out = np.clip(raw, 0.0, 1.0)
    if np.ndim(gamma) == 0:
        out, raw = float(out[0]), float(raw[0])
    if full_output:
        excess = np.maximum(np.maximum(-np.asarray(raw), np.asarray(raw) - 1.0), 0.0)
        return out, {"raw": raw, "excess": excess, "t_max": t0, "panels": panel + 1}
    return out


def _beta_continued_fraction(x: float, a: float, b: float, max_iter: int = 100_000) -> float:
    # modified Lentz evaluation
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise QuadratureError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def _reg_incomplete_beta_scalar(x: float, a: float, b: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_continued_fraction(x, a, b) / a
    return 1.0 - math.exp(log_front) * _beta_continued_fraction(1.0 - x, b, a) / b


def reg_incomplete_beta(x, a: float, b: float):
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if not (a > 0 and b > 0):
        raise ValueError("beta shape parameters must be positive")
    if np.ndim(x) == 0:
        return _reg_incomplete_beta_scalar(float(x), float(a), float(b))
    xs = np.asarray(x, dtype=float)
    out = np.array([_reg_incomplete_beta_scalar(v, float(a), float(b)) for v in xs.ravel()])
    return out.reshape(xs.shape)
