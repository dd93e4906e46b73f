"""Horizontal curves: lifts of planar arclength curves and the generator catalog.

A horizontal curve (x, y, t) satisfies t' = x'y - xy'; the lift of a planar
arclength curve is unique up to a vertical translation.  The planar geodesic
curvature h = x'y'' - x''y' (normal convention (-y', x')) drives the cut
function of the orthogonal-geodesic surface builders.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import DegenerateCurve, NotArclength
from .geodesics import GeodesicSpec, geodesic_point
from .hgroup import FrameVector, Point, group_mul

TOL_ARCLENGTH = 1e-6
VALIDATION_GRID = 1024


@dataclass(frozen=True)
class PlanarCurve:
    """A planar curve with two derivatives, as vectorized callables."""

    xy: Callable        # eps -> (x, y) arrays
    d1: Callable        # eps -> (x', y')
    d2: Callable        # eps -> (x'', y'')
    eps_min: float
    eps_max: float

    def speed(self, eps):
        xd, yd = self.d1(eps)
        return np.hypot(xd, yd)


def _simpson_adaptive(f, a: float, b: float, tol: float) -> float:
    """Adaptive Simpson integration of a smooth scalar callable."""
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, m, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a0, m0, b0, fa0, fm0, fb0, whole0, tol0, depth = stack.pop()
        lm, rm = 0.5 * (a0 + m0), 0.5 * (m0 + b0)
        flm, frm = f(lm), f(rm)
        left = (m0 - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        right = (b0 - m0) / 6.0 * (fm0 + 4.0 * frm + fb0)
        if depth >= 50 or abs(left + right - whole0) <= 15.0 * tol0:
            total += left + right + (left + right - whole0) / 15.0
        else:
            stack.append((a0, lm, m0, fa0, flm, fm0, left, tol0 / 2.0, depth + 1))
            stack.append((m0, rm, b0, fm0, frm, fb0, right, tol0 / 2.0, depth + 1))
    return total


class _LiftIntegral:
    """Cumulative integral of x'y - xy' with adaptive Simpson and caching."""

    def __init__(self, planar: PlanarCurve, t0: float, tol: float = 1e-10):
        self._planar = planar
        self._t0 = float(t0)
        self._tol = tol
        self._known_eps = [planar.eps_min]
        self._known_val = [float(t0)]

    def _integrand(self, eps):
        x, y = self._planar.xy(eps)
        xd, yd = self._planar.d1(eps)
        return xd * y - x * yd

    def __call__(self, eps):
        eps_in = np.asarray(eps, float)
        eps = np.atleast_1d(eps_in).ravel()
        order = np.argsort(eps)
        out = np.empty_like(eps)
        cur_eps = self._known_eps[-1]
        cur_val = self._known_val[-1]
        for idx in order:
            e = eps[idx]
            if e >= cur_eps:
                if e > cur_eps:
                    cur_val += _simpson_adaptive(self._integrand, cur_eps, e, self._tol)
                    cur_eps = e
                    self._known_eps.append(cur_eps)
                    self._known_val.append(cur_val)
                out[idx] = cur_val
            else:
                # query left of the cache frontier: integrate from the start
                base = np.searchsorted(self._known_eps, e) - 1
                base = max(base, 0)
                val = self._known_val[base] + _simpson_adaptive(
                    self._integrand, self._known_eps[base], e, self._tol)
                out[idx] = val
        if eps_in.ndim == 0:
            return float(out[0])
        return out.reshape(eps_in.shape)


@dataclass(frozen=True)
class HorizontalCurve:
    """Arclength horizontal curve: planar data plus the vertical coordinate."""

    planar: PlanarCurve
    t_of: Callable                       # eps -> t
    label: str = "curve"

    @property
    def eps_min(self):
        return self.planar.eps_min

    @property
    def eps_max(self):
        return self.planar.eps_max

    def position(self, eps) -> Point:
        x, y = self.planar.xy(eps)
        return Point(x, y, self.t_of(eps))

    def velocity(self, eps) -> FrameVector:
        """Unit horizontal velocity; the T-coefficient is zero by lifting."""
        xd, yd = self.planar.d1(eps)
        return FrameVector(self.position(eps), xd, yd, np.zeros_like(np.asarray(xd, float)))

    def planar_curvature(self, eps):
        xd, yd = self.planar.d1(eps)
        xdd, ydd = self.planar.d2(eps)
        return xd * ydd - xdd * yd

    def curvature_rate(self, eps, h_fd: float = 1e-5):
        """dh/deps by central differences (zero for the constant-h catalog)."""
        return (self.planar_curvature(eps + h_fd) - self.planar_curvature(eps - h_fd)) / (2 * h_fd)

    def validate(self, tol: float = TOL_ARCLENGTH, n: int = VALIDATION_GRID) -> None:
        eps = np.linspace(self.eps_min, self.eps_max, n)
        speed = self.planar.speed(eps)
        err = np.max(np.abs(speed - 1.0))
        if err > tol:
            raise NotArclength(f"speed deviates from 1 by {err:.3e} (tol {tol:.1e})")


def _planar_from_callables(fx, fy, dfx, dfy, ddfx, ddfy, eps_min, eps_max) -> PlanarCurve:
    def xy(e):
        e = np.asarray(e, float)
        return fx(e), fy(e)

    def d1(e):
        e = np.asarray(e, float)
        return dfx(e), dfy(e)

    def d2(e):
        e = np.asarray(e, float)
        return ddfx(e), ddfy(e)

    return PlanarCurve(xy, d1, d2, float(eps_min), float(eps_max))


def horizontal_lift(planar: PlanarCurve, t0: float = 0.0, label: str = "lift",
                    tol: float = TOL_ARCLENGTH, validate: bool = True) -> HorizontalCurve:
    """Lift a planar arclength curve: t(eps) = t0 + integral of (x'y - xy').

    Raises NotArclength when the planar speed is off unit; callers may
    reparameterize first with :func:`reparameterize_arclength`.
    """
    eps = np.linspace(planar.eps_min, planar.eps_max, VALIDATION_GRID)
    speed = planar.speed(eps)
    if np.any(speed < 1e-12):
        raise DegenerateCurve("planar speed vanishes on the validation grid")
    if validate:
        err = np.max(np.abs(speed - 1.0))
        if err > tol:
            raise NotArclength(f"speed deviates from 1 by {err:.3e} (tol {tol:.1e})")
    return HorizontalCurve(planar, _LiftIntegral(planar, t0), label=label)


def reparameterize_arclength(planar: PlanarCurve, n: int = 4096) -> PlanarCurve:
    """Arclength reparameterization by cumulative-length inversion.

    The length function is sampled on a fine grid, inverted with monotone
    PCHIP interpolation, and derivatives are chained analytically through
    the inverse.
    """
    u = np.linspace(planar.eps_min, planar.eps_max, n)
    speed = planar.speed(u)
    if np.any(speed < 1e-12):
        raise DegenerateCurve("planar speed vanishes on the grid")
    # composite Simpson cumulative length on the refined grid
    mid = 0.5 * (u[:-1] + u[1:])
    smid = planar.speed(mid)
    seg = (u[1:] - u[:-1]) / 6.0 * (speed[:-1] + 4.0 * smid + speed[1:])
    length = np.concatenate([[0.0], np.cumsum(seg)])
    u_of_eps = PchipInterpolator(length, u)
    total = length[-1]

    def xy(e):
        return planar.xy(u_of_eps(np.asarray(e, float)))

    def d1(e):
        uu = u_of_eps(np.asarray(e, float))
        xd, yd = planar.d1(uu)
        sp = np.hypot(xd, yd)
        return xd / sp, yd / sp

    def d2(e):
        uu = u_of_eps(np.asarray(e, float))
        xd, yd = planar.d1(uu)
        xdd, ydd = planar.d2(uu)
        sp2 = xd * xd + yd * yd
        sp = np.sqrt(sp2)
        dot = xd * xdd + yd * ydd
        return (xdd * sp2 - xd * dot) / (sp2 * sp2), (ydd * sp2 - yd * dot) / (sp2 * sp2)

    return PlanarCurve(xy, d1, d2, 0.0, float(total))


def line_curve(theta: float = 0.0, base: Point = Point(0.0, 0.0, 0.0),
               eps_min: float = -5.0, eps_max: float = 5.0) -> HorizontalCurve:
    """Horizontal straight line through `base`; theta = 0 gives the x-axis."""
    g = GeodesicSpec(base, theta, 0.0)

    def t_of(e):
        return np.asarray(geodesic_point(g, e).t, float)

    ct, st = np.cos(theta), np.sin(theta)
    x0, y0 = float(base.x), float(base.y)
    planar = _planar_from_callables(
        lambda e: x0 + ct * e, lambda e: y0 + st * e,
        lambda e: ct * np.ones_like(e), lambda e: st * np.ones_like(e),
        lambda e: np.zeros_like(e), lambda e: np.zeros_like(e),
        eps_min, eps_max)
    return HorizontalCurve(planar, t_of, label="line")


def helix_curve(r: float, eps_shift: float = 0.0, t_shift: float = 0.0,
                eps_min: float | None = None, eps_max: float | None = None) -> HorizontalCurve:
    """The horizontal helix of radius r, planar curvature -2r, pitch pi/(2 r^2).

    With shift parameters the curve is Gamma(eps + eps_shift) raised by
    t_shift; these arise as the singular curves of the helicoidal surfaces.
    """
    if eps_min is None:
        eps_min = -np.pi / r
    if eps_max is None:
        eps_max = np.pi / r

    def xy(e):
        u = np.asarray(e, float) + eps_shift
        return np.sin(2 * r * u) / (2 * r), (np.cos(2 * r * u) - 1.0) / (2 * r)

    def d1(e):
        u = np.asarray(e, float) + eps_shift
        return np.cos(2 * r * u), -np.sin(2 * r * u)

    def d2(e):
        u = np.asarray(e, float) + eps_shift
        return -2 * r * np.sin(2 * r * u), -2 * r * np.cos(2 * r * u)

    def t_of(e):
        u = np.asarray(e, float) + eps_shift
        return (u - np.sin(2 * r * u) / (2 * r)) / (2 * r) + t_shift

    planar = PlanarCurve(xy, d1, d2, float(eps_min), float(eps_max))
    return HorizontalCurve(planar, t_of, label="helix")


def geodesic_as_curve(g: GeodesicSpec, eps_min: float, eps_max: float) -> HorizontalCurve:
    """A geodesic wrapped as a HorizontalCurve; |h| = 2|lambda| (observed h = -2 lambda)."""
    th = float(np.asarray(g.theta, float))
    lam = float(np.asarray(g.lam, float))

    def xy(e):
        p = geodesic_point(g, e)
        return np.asarray(p.x, float), np.asarray(p.y, float)

    def d1(e):
        phase = th - 2.0 * lam * np.asarray(e, float)
        return np.cos(phase), np.sin(phase)

    def d2(e):
        phase = th - 2.0 * lam * np.asarray(e, float)
        return 2.0 * lam * np.sin(phase), -2.0 * lam * np.cos(phase)

    def t_of(e):
        return np.asarray(geodesic_point(g, e).t, float)

    planar = PlanarCurve(xy, d1, d2, float(eps_min), float(eps_max))
    return HorizontalCurve(planar, t_of, label="geodesic")


def left_translate_curve(p: Point, curve: HorizontalCurve) -> HorizontalCurve:
    """Left-translate a horizontal curve; horizontality is preserved.

    The planar projection picks up the constant offset (p.x, p.y) and the
    vertical part the group cocycle, so derivatives are unchanged.
    """
    px, py = float(p.x), float(p.y)

    def xy(e):
        x, y = curve.planar.xy(e)
        return px + x, py + y

    def t_of(e):
        q = curve.position(e)
        return np.asarray(group_mul(p, q).t, float)

    planar = PlanarCurve(xy, curve.planar.d1, curve.planar.d2,
                         curve.eps_min, curve.eps_max)
    return HorizontalCurve(planar, t_of, label=curve.label + "+translated")


def curve_from_samples(eps: np.ndarray, x: np.ndarray, y: np.ndarray,
                       t0: float = 0.0, label: str = "csv") -> HorizontalCurve:
    """Build a lifted curve from planar samples via cubic splines.

    Samples need not be arclength; the spline curve is reparameterized
    first.  `eps` must be strictly increasing.
    """
    eps = np.asarray(eps, float)
    if eps.ndim != 1 or eps.size < 4:
        raise DegenerateCurve("need at least 4 samples")
    if np.any(np.diff(eps) <= 0):
        raise DegenerateCurve("eps column must be strictly increasing")
    sx = CubicSpline(eps, np.asarray(x, float))
    sy = CubicSpline(eps, np.asarray(y, float))
    planar = PlanarCurve(
        lambda e: (sx(e), sy(e)),
        lambda e: (sx(e, 1), sy(e, 1)),
        lambda e: (sx(e, 2), sy(e, 2)),
        float(eps[0]), float(eps[-1]))
    arc = reparameterize_arclength(planar)
    return horizontal_lift(arc, t0=t0, label=label)


def load_curve_csv(path, t0: float = 0.0) -> HorizontalCurve:
    """Read the curve CSV format: header `eps,x,y`, strictly increasing eps."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:3]] != ["eps", "x", "y"]:
            raise DegenerateCurve(f"curve CSV must start with header eps,x,y (got {header})")
        rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader if r]
    data = np.asarray(rows, float)
    return curve_from_samples(data[:, 0], data[:, 1], data[:, 2], t0=t0, label="csv")
