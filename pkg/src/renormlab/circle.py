"""Circle dynamics for lifts near rotations: orbits, rotation numbers, families."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import cfrac
from .annulus import DEFAULT_EPS, DEFAULT_M, TWO_PI, AnnulusLift, StripError, derivative, grid

ESCAPE_MARGIN = 0.95


class RotationError(RuntimeError):
    pass


class NotHomeomorphism(ValueError):
    pass


@dataclass
class OrbitSample:
    points: np.ndarray
    wraps: np.ndarray
    height_bound: float
    escaped_at: int | None = None

    @property
    def escaped(self):
        return self.escaped_at is not None


@dataclass(frozen=True)
class RotationEstimate:
    value: float
    error_bound: float
    method: str
    iterates_used: int
    converged: bool = True

    def to_json(self):
        return {"value": self.value, "error_bound": self.error_bound, "method": self.method,
                "iterates_used": self.iterates_used, "converged": self.converged}


@dataclass
class CircleCurve:
    samples: np.ndarray
    angles: np.ndarray
    order: np.ndarray  # orbit index j of each sample, in angular order

    def max_gap(self):
        x = np.sort(self.samples.real)
        return float(np.max(np.diff(np.concatenate([x, [x[0] + 1.0]]))))


def active_modes(f: AnnulusLift):
    """(mean, k, c_k) over nonzero modes k != 0."""
    k = np.arange(-f.M, f.M + 1)
    mask = (f.coef != 0) & (k != 0)
    return complex(f.mean), k[mask].astype(np.int64), f.coef[mask].astype(np.complex128)


@njit(cache=True)
def _disp_real(x, mean_re, ks, cs):
    s = mean_re
    for i in range(ks.shape[0]):
        a = TWO_PI * ks[i] * x
        s += cs[i].real * math.cos(a) - cs[i].imag * math.sin(a)
    return s


@njit(cache=True)
def _real_displacements(x0, n, mean_re, ks, cs):
    """Displacements f(x_j) - x_j along the orbit, with x_j kept in [0,1)."""
    d = np.empty(n)
    x = x0 - math.floor(x0)
    for j in range(n):
        dj = _disp_real(x, mean_re, ks, cs)
        d[j] = dj
        x = x + dj
        x -= math.floor(x)
    return d, x


@njit(cache=True)
def _complex_orbit(z0, n, mean, ks, cs, limit):
    """Lift orbit z_0..z_{n-1}; returns (points, escape index or -1)."""
    out = np.empty(n, dtype=np.complex128)
    z = z0
    for j in range(n):
        out[j] = z
        if abs(z.imag) > limit:
            return out[: j + 1], j
        w = mean
        for i in range(ks.shape[0]):
            w += cs[i] * np.exp(1j * TWO_PI * ks[i] * z)
        z = z + w
    return out, -1


def orbit(f: AnnulusLift, z0=0.0, N=1000, margin=ESCAPE_MARGIN) -> OrbitSample:
    z0 = complex(z0)
    if abs(z0.imag) > f.eps:
        raise StripError("start point outside strip")
    mean, ks, cs = active_modes(f)
    pts, esc = _complex_orbit(z0, int(N), mean, ks, cs, margin * f.eps)
    return OrbitSample(pts, np.floor(pts.real).astype(np.int64),
                       float(np.abs(pts.imag).max()), None if esc < 0 else int(esc))


def real_displacements(f: AnnulusLift, n, x0=0.0):
    mean, ks, cs = active_modes(f)
    return _real_displacements(float(x0), int(n), mean.real, ks, cs)[0]


def _weights(N):
    t = np.arange(1, N) / N
    w = np.zeros(N)
    w[1:] = np.exp(-1.0 / (t * (1.0 - t)))
    return w / w.sum()


def check_homeomorphism(f: AnnulusLift):
    if not f.is_real(1e-12):
        raise NotHomeomorphism("rotation numbers need a real-symmetric lift")
    x = grid(max(8 * f.M + 1, 257))
    if derivative(f)(x).real.min() <= 0.0:
        raise NotHomeomorphism("lift is not monotone on the real line")


def rotation_number(f: AnnulusLift, target_accuracy=1e-12, max_iterates=2**21,
                    start=2**10, x0=0.0) -> RotationEstimate:
    """Weighted Birkhoff average of the lift displacement along the orbit of x0.

    The smooth bump weight exp(-1/(t(1-t))) makes the average converge faster
    than any power of N for orbits on an analytic invariant circle.  The
    error bound is the change between N/2 and N iterates, floored at the
    rounding level of the sum.
    """
    check_homeomorphism(f)
    mean, ks, cs = active_modes(f)
    N = start
    d, x = _real_displacements(float(x0), N, mean.real, ks, cs)
    prev = float(_weights(N) @ d)
    best = prev
    err = math.inf
    while 2 * N <= max_iterates:
        more, x = _real_displacements(x, N, mean.real, ks, cs)
        d = np.concatenate([d, more])
        N *= 2
        cur = float(_weights(N) @ d[:N])
        err = max(abs(cur - prev), 2e-16 * math.sqrt(N))
        best, prev = cur, cur
        if err <= target_accuracy:
            return RotationEstimate(best - math.floor(best), err, "weighted-birkhoff", N)
    return RotationEstimate(best - math.floor(best), err, "weighted-birkhoff", N, converged=False)


def birkhoff_bounds(f: AnnulusLift, n, x0=0.0):
    """Bounds min_j (x_{j+n}-x_j)/n <= rho <= max_j (x_{j+n}-x_j)/n over a 2n orbit."""
    d = real_displacements(f, 2 * n, x0)
    x = np.concatenate([[0.0], np.cumsum(d)])
    steps = x[n:] - x[:-n]
    return float(steps.min() / n), float(steps.max() / n)


def arnold(t: float, a: float, M=DEFAULT_M, eps=DEFAULT_EPS) -> AnnulusLift:
    """z -> z + t + (a / 2 pi) sin(2 pi z)."""
    if not 0.0 <= a < 1.0:
        raise ValueError("Arnold family needs 0 <= a < 1")
    c = a / (4j * math.pi)
    return AnnulusLift.from_modes(t, {1: c, -1: -c}, M, eps)


def translated(f: AnnulusLift, w: complex) -> AnnulusLift:
    """f_w(z) = f(z - w) + w."""
    if abs(np.imag(w)) >= f.eps:
        raise StripError("translation leaves no strip")
    k = np.arange(-f.M, f.M + 1)
    coef = f.coef * np.exp(-TWO_PI * 1j * k * w)
    coef[f.M] = f.mean
    return AnnulusLift(coef, f.eps - abs(np.imag(w)), f.tail)


def rotated(f: AnnulusLift, zeta: complex) -> AnnulusLift:
    """R_zeta o f."""
    coef = f.coef.copy()
    coef[f.M] += zeta
    return AnnulusLift(coef, f.eps, f.tail)


def invariant_circle(f: AnnulusLift, alpha: float, N=233) -> CircleCurve:
    """Orbit closure of 0 ordered by the angles {j alpha} of the rotation."""
    orb = orbit(f, 0.0, N)
    if orb.escaped:
        raise StripError(f"orbit of 0 escaped at iterate {orb.escaped_at}")
    j = np.arange(N)
    lifted = j * alpha
    angles = lifted - np.floor(lifted)
    samples = orb.points - np.floor(lifted)
    order = np.argsort(angles, kind="stable")
    curve = CircleCurve(samples[order], angles[order], order)
    x = curve.samples.real
    gaps = np.diff(np.concatenate([x, [x[0] + 1.0]]))
    if np.any(gaps <= 1e-12):
        raise RotationError("orbit points collide or lose circular order (rational rotation?)")
    return curve


def compare_to(rho: RotationEstimate, alpha: float) -> int:
    """Sign of rho - alpha decided on continued-fraction prefixes.

    The prefix depth n is the largest with q_n^2 <= 1/error_bound; when the
    prefixes agree the raw difference decides if it exceeds the error bound,
    otherwise 0 is returned.
    """
    v = rho.value
    if v <= 0.0 or v >= 1.0:
        return -1 if v <= 0.0 else 1
    depth = cfrac.depth_for_error(alpha, rho.error_bound)
    s = cfrac.cf_compare(v, alpha, depth)
    if s:
        return s
    diff = v - alpha
    return 0 if abs(diff) <= rho.error_bound else (1 if diff > 0 else -1)


def write_orbit_csv(path, orb: OrbitSample):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "re", "im", "wrap"])
        for j, (z, n) in enumerate(zip(orb.points, orb.wraps)):
            w.writerow([j, repr(float(z.real)), repr(float(z.imag)), int(n)])


def write_curve_csv(path, curve: CircleCurve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["angle", "re", "im"])
        for a, z in zip(curve.angles, curve.samples):
            w.writerow([repr(float(a)), repr(float(z.real)), repr(float(z.imag))])
