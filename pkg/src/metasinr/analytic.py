"""Moments of the conditional success probability and the meta distribution.

Every b-th moment is split by association class.  UAV-served links use the
gamma upper bound ``P(G > y) <= 1 - (1 - exp(-beta m y))**m`` expanded
binomially, so integer orders turn into a finite alternating sum of
exponential terms; TBS-served links are exact under Rayleigh fading.  The
interference products become PGFL exponents evaluated by nested quadrature.

Internally all orders of one call are evaluated in a single pass: the
moment orders form the leading axis of every integrand.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import LinkClass, RadioParams, los_probability
from .geometry import (
    ExclusionKind,
    McpClusters,
    PppUavs,
    TbsOnly,
    exclusion_coefficients,
    exclusion_kind,
    exclusion_radius,
    inverse_exclusion_radius,
    nearest_uav_law,
)
from .quadrature import QuadSpec, gil_pelaez_integral, integrate, integrate_semi_infinite, reg_incomplete_beta
from .scenario import Scenario

TYPO_FORMS = ("repaired", "printed")
MAX_ORDER = 12
DEFAULT_SPEC = QuadSpec(abs_tol=1e-9, rel_tol=1e-7)

UAV_CLASSES = (LinkClass.LOS_UAV, LinkClass.NLOS_UAV)
_OTHER = {LinkClass.LOS_UAV: LinkClass.NLOS_UAV, LinkClass.NLOS_UAV: LinkClass.LOS_UAV}
_TAG = {LinkClass.LOS_UAV: "los", LinkClass.NLOS_UAV: "nlos"}


class UnsupportedOrderError(ValueError):
    pass


class UnsupportedModelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# gains and kernels


def beta2(m: int) -> float:
    return math.factorial(m) ** (-1.0 / m) if m > 1 else 1.0


@dataclass(frozen=True)
class AuxGains:
    """Threshold-scaled inverse gains used by the success-probability bounds."""

    theta: float
    radio: RadioParams

    def g(self, cls: LinkClass, x):
        r = self.radio
        return self.theta * np.asarray(x, dtype=float) ** r.alpha(cls) / (r.eta(cls) * r.rho_u)

    def s_t(self, x):
        r = self.radio
        return self.theta * np.asarray(x, dtype=float) ** r.alpha_t / r.rho_t

    def beta2(self, cls: LinkClass) -> float:
        return beta2(self.radio.fading_order(cls))

    def s_2(self, cls: LinkClass, k: int, x):
        m = self.radio.fading_order(cls)
        return k * beta2(m) * m * self.g(cls, x)


def kernel_f1(s, d, alpha, rho_t):
    """Rayleigh interferer factor ``1 / (1 + s rho_t d^-alpha)``."""
    return 1.0 / (1.0 + np.asarray(s) * rho_t * np.asarray(d, dtype=float) ** (-alpha))


def kernel_f2(m, s, eta, d, alpha, rho_u):
    """Nakagami interferer factor ``(m / (m + s eta rho_u d^-alpha))**m``."""
    return (m / (m + np.asarray(s) * eta * rho_u * np.asarray(d, dtype=float) ** (-alpha))) ** m


def _expm1(x):
    if not np.iscomplexobj(x):
        return np.expm1(x)
    a, b = x.real, x.imag
    return np.expm1(a) * np.cos(b) - 2.0 * np.sin(0.5 * b) ** 2 + 1j * np.exp(a) * np.sin(b)


# ---------------------------------------------------------------------------
# binomial expansion of the gamma bound


@dataclass(frozen=True)
class _Expansion:
    """``P^b`` written as ``coef @ exp(weights @ (per-k log terms))``.

    ``ks`` are the multipliers of the base gain (``k`` in ``s_2(j, k, x)``),
    ``weights[K, i]`` is how often multiplier ``ks[i]`` occurs in the K-th
    distinct multiset, and ``coef[b, K]`` collects multinomial counts,
    binomial weights and signs.
    """

    coef: np.ndarray
    weights: np.ndarray
    ks: np.ndarray

    @property
    def load(self) -> np.ndarray:
        # sum of multipliers per multiset, used by the noise factor
        return self.weights @ self.ks


def _as_orders(orders) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(orders))
    if arr.ndim != 1:
        raise ValueError("orders must be a scalar or a 1-D sequence")
    if np.iscomplexobj(arr):
        if np.any(arr.real < 0):
            raise ValueError("complex orders need a nonnegative real part")
        return arr.astype(complex)
    if np.any(arr < 0):
        raise ValueError("moment orders must be nonnegative")
    return arr.astype(float)


def _integer_orders(orders: np.ndarray, m: int) -> list[int]:
    if np.iscomplexobj(orders) or np.any(orders != np.round(orders)):
        raise UnsupportedOrderError(
            f"non-integer moment orders need m = 1 fading on UAV links (got m = {m}); "
            "use the beta approximation"
        )
    out = [int(b) for b in orders]
    if max(out) > MAX_ORDER:
        raise UnsupportedOrderError(f"orders above {MAX_ORDER} are refused for m = {m} (sum grows as m^b)")
    return out


def _expansion(orders: np.ndarray, m: int) -> _Expansion:
    if m == 1:
        return _Expansion(np.eye(orders.size), orders[:, None], np.ones(1))
    rows: dict[tuple, int] = {}
    entries = []
    for i, b in enumerate(_integer_orders(orders, m)):
        for combo in itertools.combinations_with_replacement(range(1, m + 1), b):
            counts = tuple(combo.count(k) for k in range(1, m + 1))
            c = math.factorial(b)
            for k, n in enumerate(counts, start=1):
                c = c // math.factorial(n) * math.comb(m, k) ** n
            sign = -1.0 if (sum(combo) + b) % 2 else 1.0
            entries.append((i, rows.setdefault(counts, len(rows)), sign * c))
    coef = np.zeros((orders.size, len(rows)))
    for i, k, c in entries:
        coef[i, k] += c
    weights = np.array(list(rows), dtype=float).reshape(len(rows), m)
    return _Expansion(coef, weights, np.arange(1, m + 1, dtype=float))


def _log_gamma_bound(m: int, y):
    """``log(1 - (1 - exp(-beta m y))**m)``: the bound with its noise argument."""
    if m == 1:
        return -y
    with np.errstate(divide="ignore"):  # log(0) = -inf is the right limit
        return np.log1p(-(-np.expm1(-beta2(m) * m * y)) ** m)


# ---------------------------------------------------------------------------
# PGFL exponents


def _tbs_shape(weights, ks, a: float, alpha_t: float, spec: QuadSpec) -> np.ndarray:
    """``int_1^inf [1 - prod_i (1 + ks_i a v^-alpha)^-w_i] 2 v dv`` per row of ``weights``.

    A TBS field seen from a distance ``d`` with base gain ``s`` has exponent
    ``pi lambda_t d^2`` times this shape evaluated at ``a = s rho_t d^-alpha``.
    """
    weights = np.asarray(weights)

    def f(v):
        logs = -np.log1p(np.multiply.outer(ks * a, v ** (-alpha_t)))
        return -_expm1(weights @ logs) * (2.0 * v)

    return np.atleast_1d(integrate_semi_infinite(f, 1.0, spec, scale=1.0, decay=alpha_t - 1.0))


def _uav_field(lower, s, weights, ks, classes, density, h, env, radio: RadioParams,
               mode: str, spec: QuadSpec, serving=None):
    """PGFL exponent of UAV interferers, shape ``(rows, len(lower))``.

    ``lower`` and ``s`` are per-component lower limits and base gains.  The
    ``mode`` picks the integration variable:

    * ``"repaired"``: 3-D distance ``v``, kernel at ``v``, LoS weight at the
      ground distance ``sqrt(v^2 - h^2)``, area element ``v dv``;
    * ``"ground"``: ground distance ``z``, kernel at ``z``, element
      ``sqrt(z^2 + h^2) dz`` with LoS weight at ``z``;
    * ``"fixed_p"``: 3-D distance with the LoS weight frozen at the serving
      link's ground distance (``serving`` holds the 3-D serving distances).
    """
    lower = np.asarray(lower, dtype=float)
    s = np.asarray(s, dtype=float)
    weights = np.asarray(weights)
    if lower.size == 0:
        return np.zeros((weights.shape[0], 0), dtype=weights.dtype)
    if density == 0:
        return np.zeros((weights.shape[0], lower.size), dtype=weights.dtype)
    if mode == "fixed_p":
        fixed_ground = np.sqrt(np.maximum(np.asarray(serving, dtype=float) ** 2 - h**2, 0.0))
    scaled = np.multiply.outer(ks, s)[:, :, None]

    def f(z):
        total = 0.0
        for cls in classes:
            m, eta, alpha = radio.fading_order(cls), radio.eta(cls), radio.alpha(cls)
            if mode == "repaired":
                p = los_probability(np.sqrt(np.maximum(z * z - h * h, 0.0)), h, env)
                w = z
            elif mode == "ground":
                p = los_probability(z, h, env)
                w = np.sqrt(z * z + h * h)
            else:
                p = los_probability(fixed_ground, h, env)[:, None]
                w = z
            if cls is LinkClass.NLOS_UAV:
                p = 1.0 - np.asarray(p)
            logs = -m * np.log1p(scaled * (eta * radio.rho_u / m) * z ** (-alpha))
            total = total + (-_expm1(np.tensordot(weights, logs, axes=(1, 0)))) * (w * p)
        return (2.0 * math.pi * density) * total

    decay = min(radio.alpha(c) for c in classes) - 1.0
    out = integrate_semi_infinite(f, lower, spec, scale=np.maximum(lower, max(h, 1.0)), decay=decay)
    return np.asarray(out).reshape(weights.shape[0], lower.size)


def _field_mode(typo_form: str, functional: str) -> str:
    if typo_form not in TYPO_FORMS:
        raise ValueError(f"typo_form must be one of {TYPO_FORMS}")
    if typo_form == "repaired":
        return "repaired"
    return "ground" if functional == "all" else "fixed_p"


def _masked(pref, n_rows, dtype, compute):
    """Evaluate ``compute(mask)`` only where the prefactor is nonzero."""
    out = np.zeros((n_rows, pref.size), dtype=dtype)
    live = pref != 0
    if np.any(live):
        out[:, live] = compute(live) * pref[live]
    return out


# ---------------------------------------------------------------------------
# network models


@dataclass
class _Ctx:
    sc: Scenario
    theta: float
    orders: np.ndarray
    noise_limited: bool
    typo_form: str
    spec: QuadSpec

    @property
    def radio(self) -> RadioParams:
        return self.sc.radio

    @property
    def gains(self) -> AuxGains:
        return AuxGains(self.theta, self.sc.radio)

    @property
    def dtype(self):
        return complex if np.iscomplexobj(self.orders) else float

    def tbs_rho(self) -> np.ndarray:
        return _tbs_shape(self.orders[:, None], np.ones(1), self.theta, self.radio.alpha_t, self.spec)

    def uav_served(self, cls: LinkClass):
        """Expansion, constant TBS shape and noise helpers for a UAV-served link."""
        m = self.radio.fading_order(cls)
        if self.noise_limited:
            return None, None
        exp = _expansion(self.orders, m)
        # the TBS gain ratio at the exclusion radius is beta * m * theta for every x
        a = beta2(m) * m * self.theta
        return exp, _tbs_shape(exp.weights, exp.ks, a, self.radio.alpha_t, self.spec)

    def noise_only_uav(self, cls: LinkClass, x):
        g = self.gains.g(cls, x)
        log_base = _log_gamma_bound(self.radio.fading_order(cls), g * self.radio.sigma2)
        with np.errstate(invalid="ignore"):
            expo = np.multiply.outer(self.orders, log_base)
        expo[self.orders == 0] = 0.0  # P^0 = 1 even where P = 0
        return np.exp(expo)


def _mcp_terms(ctx: _Ctx) -> dict:
    sc, radio = ctx.sc, ctx.radio
    var: McpClusters = sc.deployment.variant
    h, r_c, lam_u, lam_t = var.h, var.r_c, var.density, sc.deployment.tbs_density
    x_max = math.hypot(r_c, h)
    n_out = ctx.orders.size
    mode = _field_mode(ctx.typo_form, "all")
    field_lower = 0.0 if mode == "ground" else h
    terms = {}

    for cls in UAV_CLASSES:
        kind = exclusion_kind(cls, LinkClass.TBS)
        exp, tbs_shape = ctx.uav_served(cls)
        m = radio.fading_order(cls)

        def uav_integrand(x, cls=cls, kind=kind, exp=exp, tbs_shape=tbs_shape, m=m):
            p = np.asarray(los_probability(np.sqrt(np.maximum(x * x - h * h, 0.0)), h, sc.env))
            if cls is LinkClass.NLOS_UAV:
                p = 1.0 - p
            d = exclusion_radius(kind, x, radio)
            pref = p * np.exp(-math.pi * lam_t * d * d) * 2.0 * x / r_c**2
            if ctx.noise_limited:
                return ctx.noise_only_uav(cls, x) * pref

            def body(live):
                xs = x[live]
                s0 = beta2(m) * m * ctx.gains.g(cls, xs)
                e_t = math.pi * lam_t * np.multiply.outer(tbs_shape, d[live] ** 2)
                e_u = _uav_field(np.full(xs.size, field_lower), s0, exp.weights, exp.ks, UAV_CLASSES,
                                 lam_u, h, sc.env, radio, mode, ctx.spec)
                noise = np.multiply.outer(exp.load, s0 * radio.sigma2)
                return exp.coef @ np.exp(-(e_t + e_u + noise))

            return _masked(pref, n_out, ctx.dtype, body)

        terms[_TAG[cls]] = integrate(uav_integrand, h, x_max, ctx.spec)

        # TBS-served while the cluster UAV is of class cls: outer variable is
        # the nearest TBS distance r, inner the cluster UAV distance y
        rho_b = None if ctx.noise_limited else ctx.tbs_rho()
        m_j, eta_j, alpha_j = m, radio.eta(cls), radio.alpha(cls)

        def tbs_integrand(r, cls=cls, kind=kind, rho_b=rho_b, m_j=m_j, eta_j=eta_j, alpha_j=alpha_j):
            s = ctx.gains.s_t(r)
            pref = 2.0 * math.pi * lam_t * r * np.exp(-math.pi * lam_t * r * r)
            y_lo = np.maximum(h, inverse_exclusion_radius(kind, r, radio))

            def inner(live):
                lo, ss = y_lo[live], s[live]

                def f(u):
                    y = lo[:, None] + (x_max - lo)[:, None] * u
                    p = np.asarray(los_probability(np.sqrt(np.maximum(y * y - h * h, 0.0)), h, sc.env))
                    if cls is LinkClass.NLOS_UAV:
                        p = 1.0 - p
                    w = p * 2.0 * y / r_c**2 * (x_max - lo)[:, None]
                    if ctx.noise_limited:
                        return w
                    log_f2 = -m_j * np.log1p(ss[:, None] * (eta_j * radio.rho_u / m_j) * y ** (-alpha_j))
                    return np.exp(np.multiply.outer(ctx.orders, log_f2)) * w

                val = np.asarray(integrate(f, 0.0, 1.0, ctx.spec))
                return np.broadcast_to(val, (n_out, lo.size))

            def body(live):
                rr, ss = r[live], s[live]
                noise = np.multiply.outer(ctx.orders, ss * radio.sigma2)
                if ctx.noise_limited:
                    return np.exp(-noise) * inner(live)
                e_t = math.pi * lam_t * np.multiply.outer(rho_b, rr * rr)
                e_u = _uav_field(np.full(rr.size, field_lower), ss, ctx.orders[:, None], np.ones(1),
                                 UAV_CLASSES, lam_u, h, sc.env, radio, mode, ctx.spec)
                return np.exp(-(e_t + e_u + noise)) * inner(live)

            pref = np.where(y_lo < x_max, pref, 0.0)
            return _masked(pref, n_out, ctx.dtype, body)

        r_top = exclusion_radius(kind, x_max, radio)
        r_kink = exclusion_radius(kind, h, radio)
        points = [r_kink] if 0 < r_kink < r_top else []
        terms["tbs_" + _TAG[cls]] = integrate(tbs_integrand, 0.0, r_top, ctx.spec, points)
    return terms


def _floor_kink(kind: ExclusionKind, radio: RadioParams, h: float) -> float | None:
    """Serving distance at which a floored radius leaves the altitude floor."""
    if h <= 0:
        return None
    return float(inverse_exclusion_radius(kind, h, radio))


def _ppp_terms(ctx: _Ctx) -> dict:
    sc, radio = ctx.sc, ctx.radio
    var: PppUavs = sc.deployment.variant
    h, lam_u, lam_t, env = var.h, var.density, sc.deployment.tbs_density, sc.env
    n_out = ctx.orders.size
    mode = _field_mode(ctx.typo_form, "per_class")
    all_mode = _field_mode(ctx.typo_form, "all")
    terms = {}
    scale_u = 1.0 / math.sqrt(max(lam_u, 1e-12))
    scale_t = 1.0 / math.sqrt(max(lam_t, 1e-12))

    for cls in UAV_CLASSES:
        other = _OTHER[cls]
        k_t, k_o = exclusion_kind(cls, LinkClass.TBS), exclusion_kind(cls, other)
        exp, tbs_shape = ctx.uav_served(cls)
        m = radio.fading_order(cls)

        def integrand(x, cls=cls, other=other, k_t=k_t, k_o=k_o, exp=exp, tbs_shape=tbs_shape, m=m):
            pdf, _ = nearest_uav_law(x, lam_u, h, env, cls)
            d_t = exclusion_radius(k_t, x, radio)
            d_o = exclusion_radius(k_o, x, radio, h)
            _, cdf_o = nearest_uav_law(d_o, lam_u, h, env, other)
            pref = pdf * np.exp(-math.pi * lam_t * d_t * d_t) * (1.0 - cdf_o)
            if ctx.noise_limited:
                return ctx.noise_only_uav(cls, x) * pref

            def body(live):
                xs = x[live]
                s0 = beta2(m) * m * ctx.gains.g(cls, xs)
                e_t = math.pi * lam_t * np.multiply.outer(tbs_shape, d_t[live] ** 2)
                e_own = _uav_field(xs, s0, exp.weights, exp.ks, (cls,), lam_u, h, env, radio,
                                   mode, ctx.spec, serving=xs)
                e_oth = _uav_field(d_o[live], s0, exp.weights, exp.ks, (other,), lam_u, h, env, radio,
                                   mode, ctx.spec, serving=xs)
                noise = np.multiply.outer(exp.load, s0 * radio.sigma2)
                return exp.coef @ np.exp(-(e_t + e_own + e_oth + noise))

            return _masked(pref, n_out, ctx.dtype, body)

        kink = _floor_kink(k_o, radio, h)
        points = [kink] if kink is not None and kink > h else []
        if lam_u == 0:
            terms[_TAG[cls]] = np.zeros(n_out, dtype=ctx.dtype)
        else:
            terms[_TAG[cls]] = integrate_semi_infinite(integrand, h, ctx.spec, scale=scale_u, points=points)

    rho_b = None if ctx.noise_limited else ctx.tbs_rho()
    k_l = exclusion_kind(LinkClass.TBS, LinkClass.LOS_UAV)
    k_n = exclusion_kind(LinkClass.TBS, LinkClass.NLOS_UAV)

    def tbs_integrand(r):
        d_l = exclusion_radius(k_l, r, radio, h)
        d_n = exclusion_radius(k_n, r, radio, h)
        _, cdf_l = nearest_uav_law(d_l, lam_u, h, env, LinkClass.LOS_UAV)
        _, cdf_n = nearest_uav_law(d_n, lam_u, h, env, LinkClass.NLOS_UAV)
        pref = 2.0 * math.pi * lam_t * r * np.exp(-math.pi * lam_t * r * r) * (1.0 - cdf_l) * (1.0 - cdf_n)

        def body(live):
            rr = r[live]
            s = ctx.gains.s_t(rr)
            noise = np.multiply.outer(ctx.orders, s * radio.sigma2)
            if ctx.noise_limited:
                return np.exp(-noise)
            e_t = math.pi * lam_t * np.multiply.outer(rho_b, rr * rr)
            ones = np.ones(1)
            e_n = _uav_field(d_n[live], s, ctx.orders[:, None], ones, (LinkClass.NLOS_UAV,), lam_u, h, env,
                             radio, all_mode, ctx.spec)
            e_l = _uav_field(d_l[live], s, ctx.orders[:, None], ones, (LinkClass.LOS_UAV,), lam_u, h, env,
                             radio, all_mode, ctx.spec)
            return np.exp(-(e_t + e_n + e_l + noise))

        return _masked(pref, n_out, ctx.dtype, body)

    points = [k for k in (_floor_kink(k_l, radio, h), _floor_kink(k_n, radio, h)) if k is not None and k > 0]
    terms["tbs"] = integrate_semi_infinite(tbs_integrand, 0.0, ctx.spec, scale=scale_t, points=sorted(points))
    return terms


def _tbs_only_terms(ctx: _Ctx) -> dict:
    radio, lam_t = ctx.radio, ctx.sc.deployment.tbs_density
    if lam_t <= 0:
        raise ValueError("a TBS-only network needs a positive TBS density")
    rho_b = None if ctx.noise_limited else ctx.tbs_rho()

    def integrand(r):
        s = ctx.gains.s_t(r)
        expo = np.multiply.outer(ctx.orders, s * radio.sigma2)
        if not ctx.noise_limited:
            expo = expo + math.pi * lam_t * np.multiply.outer(rho_b, r * r)
        return np.exp(-expo) * (2.0 * math.pi * lam_t * r * np.exp(-math.pi * lam_t * r * r))

    scale = 1.0 / math.sqrt(lam_t)
    return {"tbs": integrate_semi_infinite(integrand, 0.0, ctx.spec, scale=scale)}


_DISPATCH = {McpClusters: _mcp_terms, PppUavs: _ppp_terms, TbsOnly: _tbs_only_terms}


def moment_terms(scenario: Scenario, theta: float, orders, *, noise_limited: bool = False,
                 typo_form: str = "repaired", spec: QuadSpec = DEFAULT_SPEC) -> dict:
    """Per-class contributions to ``M_b(theta)`` for every order in ``orders``.

    Returns a dict mapping class tags to arrays aligned with ``orders``.
    """
    if not theta > 0:
        raise ValueError("theta must be positive (linear)")
    if typo_form not in TYPO_FORMS:
        raise ValueError(f"typo_form must be one of {TYPO_FORMS}")
    ctx = _Ctx(scenario, float(theta), _as_orders(orders), noise_limited, typo_form, spec)
    if not np.iscomplexobj(ctx.orders) or noise_limited:
        pass
    elif not isinstance(scenario.deployment.variant, TbsOnly):
        if max(scenario.radio.m_l, scenario.radio.m_n) > 1:
            raise UnsupportedOrderError(
                "complex orders of the full UAV model need m_l = m_n = 1; use the beta approximation"
            )
    raw = _DISPATCH[type(scenario.deployment.variant)](ctx)
    return {k: np.asarray(v).reshape(-1) for k, v in raw.items()}


# ---------------------------------------------------------------------------
# public moment API


@dataclass(frozen=True)
class MomentResult:
    b: float | complex
    theta: float
    total: float | complex
    terms: dict = field(default_factory=dict)
    model: str = ""
    noise_limited: bool = False


def moments(scenario: Scenario, theta: float, orders=(1, 2), **kwargs) -> list[MomentResult]:
    """All requested orders in one pass, as ``MomentResult`` objects."""
    ords = _as_orders(orders)
    terms = moment_terms(scenario, theta, ords, **kwargs)
    out = []
    for i, b in enumerate(ords):
        parts = {k: (v[i].item()) for k, v in terms.items()}
        total = sum(parts.values())
        b_val = complex(b) if np.iscomplexobj(ords) else (int(b) if float(b).is_integer() else float(b))
        out.append(MomentResult(b_val, float(theta), total, parts, scenario.model,
                                kwargs.get("noise_limited", False)))
    return out


def _single(scenario, b, theta, expected, **kwargs) -> MomentResult:
    if scenario.model != expected:
        raise ValueError(f"scenario is a {scenario.model} deployment, expected {expected}")
    return moments(scenario, theta, [b], **kwargs)[0]


def moment_mcp(b: int, theta: float, scenario: Scenario, **kwargs) -> MomentResult:
    return _single(scenario, b, theta, "mcp", **kwargs)


def moment_ppp(b: int, theta: float, scenario: Scenario, **kwargs) -> MomentResult:
    return _single(scenario, b, theta, "ppp", **kwargs)


def moment_tbs_only(b, theta: float, tbs_density: float, radio: RadioParams, **kwargs) -> MomentResult:
    from .geometry import Deployment

    sc = Scenario(Deployment(TbsOnly(), tbs_density), radio=radio)
    return moments(sc, theta, [b], **kwargs)[0]


def moment_noise_limited(model: str, b, theta: float, scenario: Scenario, **kwargs) -> MomentResult:
    sc = scenario.tbs_only() if model == "tbs_only" else scenario
    if sc.model != model:
        raise ValueError(f"scenario is a {scenario.model} deployment, expected {model}")
    return moments(sc, theta, [b], noise_limited=True, **kwargs)[0]


# ---------------------------------------------------------------------------
# meta distribution


@dataclass(frozen=True)
class MetaCurve:
    theta: float
    gamma: np.ndarray
    ccdf: np.ndarray
    method: str
    info: dict = field(default_factory=dict)


class MomentRegionError(ValueError):
    pass


def beta_parameters(m1: float, m2: float) -> tuple[float, float] | None:
    """Moment-matched Beta shapes, or ``None`` when the law is degenerate."""
    if not (0.0 <= m1 <= 1.0):
        raise MomentRegionError(f"M1 = {m1} is outside [0, 1]")
    if m2 > m1 + 1e-12:
        raise MomentRegionError(f"M2 = {m2} exceeds M1 = {m1}")
    var = m2 - m1 * m1
    if var < -1e-12:
        raise MomentRegionError(f"M2 = {m2} is below M1^2 = {m1 * m1}")
    if var < 1e-12 or m1 - m2 < 1e-12 or m1 <= 0.0 or m1 >= 1.0:
        return None
    return m1 * (m1 - m2) / var, (m1 - m2) * (1.0 - m1) / var


def beta_approx_ccdf(m1: float, m2: float, gamma_grid, theta: float = float("nan")) -> MetaCurve:
    """Beta approximation of the meta distribution from the first two moments."""
    gam = np.asarray(gamma_grid, dtype=float)
    shape = beta_parameters(m1, m2)
    if shape is None:
        if m2 - m1 * m1 < 1e-12:
            ccdf = (gam < m1).astype(float)
        else:
            # all mass on {0, 1}
            ccdf = np.where(gam < 1.0, m1, 0.0) * (gam > 0) + (gam <= 0)
        return MetaCurve(theta, gam, ccdf, "beta", {"a": None, "b": None, "m1": m1, "m2": m2})
    a, b = shape
    ccdf = 1.0 - np.asarray(reg_incomplete_beta(np.clip(gam, 0.0, 1.0), a, b))
    return MetaCurve(theta, gam, ccdf, "beta", {"a": a, "b": b, "m1": m1, "m2": m2})


def exact_supported(scenario: Scenario, noise_limited: bool = False) -> bool:
    if scenario.model == "tbs_only" or noise_limited:
        return True
    return scenario.radio.m_l == 1 and scenario.radio.m_n == 1


def exact_meta_ccdf(scenario: Scenario, theta: float, gamma_grid, *, model: str | None = None,
                    noise_limited: bool = False, typo_form: str = "repaired",
                    spec: QuadSpec = QuadSpec(abs_tol=1e-8, rel_tol=1e-6), chunk: int = 64,
                    growth: float = 1.25) -> MetaCurve:
    """Gil-Pelaez inversion of the complex-order moments."""
    sc = scenario.tbs_only() if model == "tbs_only" else scenario
    if model is not None and sc.model != model:
        raise ValueError(f"scenario is a {scenario.model} deployment, expected {model}")
    if not exact_supported(sc, noise_limited):
        raise UnsupportedModelError(
            "exact inversion needs complex-order moments, available only for TBS-only networks, "
            "noise-limited models or m_l = m_n = 1; use the beta approximation"
        )

    def g(t):
        shape = np.shape(t)
        t = np.ravel(np.asarray(t, dtype=float))
        out = np.empty(t.size, dtype=complex)
        # bounded batches keep the nested quadrature's working arrays small
        for lo in range(0, t.size, chunk):
            terms = moment_terms(sc, theta, 1j * t[lo:lo + chunk], noise_limited=noise_limited,
                                 typo_form=typo_form, spec=spec)
            out[lo:lo + chunk] = sum(terms.values())
        return out.reshape(shape)

    gam = np.asarray(gamma_grid, dtype=float)
    ccdf, diag = gil_pelaez_integral(g, gam, growth=growth, full_output=True)
    return MetaCurve(theta, gam, np.atleast_1d(ccdf), "gil_pelaez", diag)
