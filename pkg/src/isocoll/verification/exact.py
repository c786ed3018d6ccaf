"""Closed-form and semi-analytic reference solutions.

Every reference is wrapped in :class:`ExactSolution`, whose evaluator takes a
sequence of (broadcastable) coordinate arrays and a time, and returns the
state: shape ``broadcast(coords)`` for scalar laws, with a trailing axis of
conserved variables for Euler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ..laws import Euler, ScalarLaw


class CharacteristicCrossingError(ArithmeticError):
    """Characteristics have crossed; the smooth solution no longer exists."""


class VacuumError(ValueError):
    """Riemann data generate vacuum."""


@dataclass
class ExactSolution:
    evaluate: Callable[[Sequence[np.ndarray], float], np.ndarray]
    validity: tuple[float, float] = (0.0, np.inf)
    provenance: str = ""
    info: dict = field(default_factory=dict)

    def __call__(self, coords, t: float) -> np.ndarray:
        lo, hi = self.validity
        if not lo <= t <= hi:
            raise ValueError(f"{self.provenance}: t={t} outside validity window {self.validity}")
        if isinstance(coords, np.ndarray) and coords.ndim <= 1:
            coords = [coords]
        return self.evaluate(list(coords), t)


# ---------------------------------------------------------------------------
# scalar Riemann problems
# ---------------------------------------------------------------------------

def _hull(u, f, upper: bool):
    """Indices of the upper (concave) or lower (convex) hull, u increasing."""
    sign = -1.0 if upper else 1.0
    out: list[int] = []
    for i in range(len(u)):
        while len(out) >= 2:
            i0, i1 = out[-2], out[-1]
            cross = (u[i1] - u[i0]) * (f[i] - f[i0]) - (f[i1] - f[i0]) * (u[i] - u[i0])
            if sign * cross <= 0.0:
                out.pop()
            else:
                break
        out.append(i)
    return out


@dataclass
class _Wave:
    kind: str          # "shock" or "rarefaction"
    u_from: float
    u_to: float
    speed_from: float
    speed_to: float


def _tangent_point(fun, dfun, anchor, guess, lo, hi, step):
    """Point ``u`` near ``guess`` whose tangent passes through ``(anchor, f(anchor))``."""
    fa = fun(anchor)

    def g(u):
        return dfun(u) * (u - anchor) - (fun(u) - fa)

    a, b = max(lo, guess - step), min(hi, guess + step)
    ga, gb = g(a), g(b)
    grow = 0
    while ga * gb > 0 and grow < 40:
        step *= 2.0
        a, b = max(lo, guess - step), min(hi, guess + step)
        ga, gb = g(a), g(b)
        grow += 1
    if ga * gb > 0:
        return guess
    return brentq(g, a, b, xtol=1e-15, maxiter=200)


def scalar_riemann_waves(law: ScalarLaw, left: float, right: float, axis: int = 0,
                         samples: int = 20001) -> list[_Wave]:
    """Wave fan of a scalar Riemann problem from the convex-hull construction.

    Decreasing data (``left > right``) follow the upper concave envelope of
    ``f`` over ``[right, left]``; increasing data the lower convex envelope.
    Hull segments that skip over samples are shocks, the rest rarefactions.
    """
    def fun(u):
        return float(law.flux(np.array(u))[axis])

    def dfun(u):
        return float(law.flux_derivative(np.array(u))[axis])

    if left == right:
        return []
    lo, hi = min(left, right), max(left, right)
    u = np.linspace(lo, hi, samples)
    f = law.flux(u)[axis]
    upper = left > right
    idx = _hull(u, f, upper)
    if upper:
        # walk from left (= hi) down to right (= lo)
        idx = idx[::-1]
    step = (hi - lo) / (samples - 1)

    waves: list[_Wave] = []
    pos = 0
    while pos < len(idx) - 1:
        i0, i1 = idx[pos], idx[pos + 1]
        if abs(i1 - i0) == 1:
            end = pos + 1
            while end < len(idx) - 1 and abs(idx[end + 1] - idx[end]) == 1:
                end += 1
            ua, ub = u[idx[pos]], u[idx[end]]
            waves.append(_Wave("rarefaction", ua, ub, dfun(ua), dfun(ub)))
            pos = end
        else:
            waves.append(_Wave("shock", u[i0], u[i1], 0.0, 0.0))
            pos += 1

    # polish shock endpoints against the sampled estimate
    for w_i, w in enumerate(waves):
        if w.kind != "shock":
            continue
        ua, ub = w.u_from, w.u_to
        for _ in range(50):
            na, nb = ua, ub
            if lo < ua < hi:
                na = _tangent_point(fun, dfun, ub, ua, lo, hi, 4 * step)
            if lo < ub < hi:
                nb = _tangent_point(fun, dfun, na, ub, lo, hi, 4 * step)
            done = abs(na - ua) < 1e-15 and abs(nb - ub) < 1e-15
            ua, ub = na, nb
            if done:
                break
        s = (fun(ub) - fun(ua)) / (ub - ua)
        waves[w_i] = _Wave("shock", ua, ub, s, s)
        if w_i > 0 and waves[w_i - 1].kind == "rarefaction":
            r = waves[w_i - 1]
            waves[w_i - 1] = _Wave("rarefaction", r.u_from, ua, r.speed_from, dfun(ua))
        if w_i + 1 < len(waves) and waves[w_i + 1].kind == "rarefaction":
            r = waves[w_i + 1]
            waves[w_i + 1] = _Wave("rarefaction", ub, r.u_to, dfun(ub), r.speed_to)
    return waves


def _invert_speed(law, axis, xi, ua, ub):
    """Vectorised bisection for ``f'(u) = xi`` on a monotone branch ``[ua, ub]``."""
    a, b = min(ua, ub), max(ua, ub)
    lo = np.full(xi.shape, a)
    hi = np.full(xi.shape, b)
    speeds = law.flux_derivative(np.array([a, b]))[axis]
    increasing = speeds[1] >= speeds[0]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = law.flux_derivative(mid)[axis]
        go_right = (fm < xi) if increasing else (fm > xi)
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def exact_scalar_riemann(law: ScalarLaw, left: float, right: float, x0: float = 0.0,
                         axis: int = 0) -> ExactSolution:
    """Entropy solution of a 1D scalar Riemann problem.

    >>> from isocoll.laws import Burgers
    >>> sol = exact_scalar_riemann(Burgers([1.0]), 1.0, 0.0, x0=1/3)
    >>> sol.info["waves"][0].speed_from
    0.5
    """
    waves = scalar_riemann_waves(law, left, right, axis)

    def evaluate(coords, t):
        x = np.asarray(coords[axis], dtype=float)
        if t == 0:
            return np.where(x < x0, left, right).astype(float)
        xi = (x - x0) / t
        out = np.full(xi.shape, float(left))
        for w in waves:
            if w.kind == "shock":
                out = np.where(xi > w.speed_from, w.u_to, out)
            else:
                lo_s, hi_s = sorted((w.speed_from, w.speed_to))
                inside = (xi > lo_s) & (xi < hi_s)
                if np.any(inside):
                    out[inside] = _invert_speed(law, axis, xi[inside], w.u_from, w.u_to)
                out = np.where(xi >= hi_s, w.u_to, out)
        return out

    return ExactSolution(evaluate, provenance=f"riemann[{law.name}]({left}->{right})",
                         info={"waves": waves})


# ---------------------------------------------------------------------------
# Euler Riemann problem (exact, ideal gas)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EulerStar:
    p: float
    u: float
    rho_left: float
    rho_right: float


def _pressure_function(p, rho, pk, ck, gamma):
    if p > pk:
        ak = 2.0 / ((gamma + 1.0) * rho)
        bk = (gamma - 1.0) / (gamma + 1.0) * pk
        sq = np.sqrt(ak / (p + bk))
        return (p - pk) * sq, sq * (1.0 - 0.5 * (p - pk) / (bk + p))
    ratio = p / pk
    f = 2.0 * ck / (gamma - 1.0) * (ratio ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    df = 1.0 / (rho * ck) * ratio ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def euler_star_state(left, right, gamma: float, tol: float = 1e-12) -> EulerStar:
    """Star-region pressure and velocity by Newton iteration on the pressure function."""
    rl, ul, pl = map(float, left)
    rr, ur, pr = map(float, right)
    if min(rl, rr, pl, pr) <= 0:
        raise ValueError("Riemann data must have positive density and pressure")
    cl, cr = np.sqrt(gamma * pl / rl), np.sqrt(gamma * pr / rr)
    if 2.0 / (gamma - 1.0) * (cl + cr) <= ur - ul:
        raise VacuumError("initial data generate vacuum")
    # two-rarefaction guess
    z = (gamma - 1.0) / (2.0 * gamma)
    p = ((cl + cr - 0.5 * (gamma - 1.0) * (ur - ul)) / (cl / pl ** z + cr / pr ** z)) ** (1.0 / z)
    p = max(p, 1e-14)
    for _ in range(200):
        fl, dfl = _pressure_function(p, rl, pl, cl, gamma)
        fr, dfr = _pressure_function(p, rr, pr, cr, gamma)
        p_new = p - (fl + fr + ur - ul) / (dfl + dfr)
        p_new = max(p_new, 1e-14)
        change = 2.0 * abs(p_new - p) / (p_new + p)
        p = p_new
        if change < tol:
            break
    fl, _ = _pressure_function(p, rl, pl, cl, gamma)
    fr, _ = _pressure_function(p, rr, pr, cr, gamma)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    g1 = (gamma - 1.0) / (gamma + 1.0)
    if p > pl:
        rho_l = rl * (p / pl + g1) / (g1 * p / pl + 1.0)
    else:
        rho_l = rl * (p / pl) ** (1.0 / gamma)
    if p > pr:
        rho_r = rr * (p / pr + g1) / (g1 * p / pr + 1.0)
    else:
        rho_r = rr * (p / pr) ** (1.0 / gamma)
    return EulerStar(p, u, rho_l, rho_r)


def sample_euler_riemann(xi, left, right, gamma: float, star: EulerStar | None = None):
    """Primitive state ``(rho, u, p)`` at similarity coordinates ``xi = x/t``."""
    xi = np.asarray(xi, dtype=float)
    rl, ul, pl = map(float, left)
    rr, ur, pr = map(float, right)
    star = star or euler_star_state(left, right, gamma)
    ps, us = star.p, star.u
    cl, cr = np.sqrt(gamma * pl / rl), np.sqrt(gamma * pr / rr)
    g = gamma
    rho = np.empty_like(xi)
    vel = np.empty_like(xi)
    pre = np.empty_like(xi)

    # left of the contact
    lm = xi <= us
    if ps > pl:
        sl = ul - cl * np.sqrt((g + 1) / (2 * g) * ps / pl + (g - 1) / (2 * g))
        pre_shock = lm & (xi <= sl)
        post = lm & (xi > sl)
        rho[pre_shock], vel[pre_shock], pre[pre_shock] = rl, ul, pl
        rho[post], vel[post], pre[post] = star.rho_left, us, ps
    else:
        cls = cl * (ps / pl) ** ((g - 1) / (2 * g))
        head, tail = ul - cl, us - cls
        a = lm & (xi <= head)
        fan = lm & (xi > head) & (xi < tail)
        b = lm & (xi >= tail)
        rho[a], vel[a], pre[a] = rl, ul, pl
        c = 2 / (g + 1) + (g - 1) / ((g + 1) * cl) * (ul - xi[fan])
        rho[fan] = rl * c ** (2 / (g - 1))
        vel[fan] = 2 / (g + 1) * (cl + (g - 1) / 2 * ul + xi[fan])
        pre[fan] = pl * c ** (2 * g / (g - 1))
        rho[b], vel[b], pre[b] = star.rho_left, us, ps

    rm = ~lm
    if ps > pr:
        sr = ur + cr * np.sqrt((g + 1) / (2 * g) * ps / pr + (g - 1) / (2 * g))
        post = rm & (xi < sr)
        pre_shock = rm & (xi >= sr)
        rho[post], vel[post], pre[post] = star.rho_right, us, ps
        rho[pre_shock], vel[pre_shock], pre[pre_shock] = rr, ur, pr
    else:
        crs = cr * (ps / pr) ** ((g - 1) / (2 * g))
        head, tail = ur + cr, us + crs
        a = rm & (xi >= head)
        fan = rm & (xi < head) & (xi > tail)
        b = rm & (xi <= tail)
        rho[a], vel[a], pre[a] = rr, ur, pr
        c = 2 / (g + 1) - (g - 1) / ((g + 1) * cr) * (ur - xi[fan])
        rho[fan] = rr * c ** (2 / (g - 1))
        vel[fan] = 2 / (g + 1) * (-cr + (g - 1) / 2 * ur + xi[fan])
        pre[fan] = pr * c ** (2 * g / (g - 1))
        rho[b], vel[b], pre[b] = star.rho_right, us, ps
    return rho, vel, pre


def exact_euler_riemann(left, right, gamma: float, x0: float = 0.0) -> ExactSolution:
    """Exact 1D Euler Riemann solution in conserved variables.

    ``left`` and ``right`` are primitive triples ``(rho, u, p)``.
    """
    star = euler_star_state(left, right, gamma)
    law = Euler(gamma, 1)

    def evaluate(coords, t):
        x = np.asarray(coords[0], dtype=float)
        if t == 0:
            lm = x < x0
            rho = np.where(lm, left[0], right[0])
            vel = np.where(lm, left[1], right[1])
            pre = np.where(lm, left[2], right[2])
        else:
            rho, vel, pre = sample_euler_riemann((x - x0) / t, left, right, gamma, star)
        return law.conserved(rho, vel[..., None], pre)

    return ExactSolution(evaluate, provenance=f"euler_riemann(gamma={gamma})",
                         info={"star": star})


# ---------------------------------------------------------------------------
# smooth solutions by characteristics
# ---------------------------------------------------------------------------

def translated(initial, velocity, domain, periodic=True) -> ExactSolution:
    """Linear advection: the initial data shifted by ``a t`` (wrapped if periodic)."""
    velocity = np.atleast_1d(np.asarray(velocity, dtype=float))

    def evaluate(coords, t):
        shifted = []
        for i, x in enumerate(coords):
            y = np.asarray(x, dtype=float) - velocity[i] * t
            if periodic:
                a, b = domain[i]
                y = a + np.mod(y - a, b - a)
            shifted.append(y)
        return initial(*shifted)

    return ExactSolution(evaluate, provenance="translated initial data")


def burgers_characteristics(phi0, dphi0, speed: float = 1.0, tol: float = 1e-13,
                            max_iter: int = 100) -> ExactSolution:
    """Smooth 1D Burgers solution from ``phi = phi0(x - speed*phi*t)``."""

    def evaluate(coords, t):
        x = np.asarray(coords[0], dtype=float)
        if t == 0:
            return phi0(x)
        phi = phi0(x)
        for _ in range(max_iter):
            foot = x - speed * phi * t
            jac = 1.0 + speed * t * dphi0(foot)
            if np.any(jac <= 0):
                raise CharacteristicCrossingError(f"characteristics cross before t={t}")
            step = (phi - phi0(foot)) / jac
            phi = phi - step
            if np.max(np.abs(step), initial=0.0) < tol:
                break
        return phi

    return ExactSolution(evaluate, provenance="burgers characteristics")


def isentropic_gamma3(rho0, drho0, period: float, x_left: float) -> ExactSolution:
    """Isentropic Euler flow with ``gamma = 3``, ``p = rho^3`` and zero initial velocity.

    With ``gamma = 3`` the Riemann invariants ``u +- c`` are carried at their
    own speed, so each one solves an inviscid Burgers equation.
    """
    gamma = 3.0
    law = Euler(gamma, 1)
    s3 = np.sqrt(3.0)

    def invariant(x, t, sign):
        w0 = lambda y: sign * s3 * rho0(x_left + np.mod(y - x_left, period))
        dw0 = lambda y: sign * s3 * drho0(x_left + np.mod(y - x_left, period))
        w = w0(x)
        for _ in range(100):
            foot = x - w * t
            jac = 1.0 + t * dw0(foot)
            if np.any(jac <= 0):
                raise CharacteristicCrossingError(f"characteristics cross before t={t}")
            step = (w - w0(foot)) / jac
            w = w - step
            if np.max(np.abs(step), initial=0.0) < 1e-14:
                break
        return w

    def evaluate(coords, t):
        x = np.asarray(coords[0], dtype=float)
        wp = invariant(x, t, 1.0)
        wm = invariant(x, t, -1.0)
        u = 0.5 * (wp + wm)
        c = 0.5 * (wp - wm)
        rho = c / s3
        return law.conserved(rho, u[..., None], rho ** 3)

    # characteristics of w+ cross at t = 1 / max|w0'|
    return ExactSolution(evaluate, provenance="isentropic gamma=3 characteristics")
