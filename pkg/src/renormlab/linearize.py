"""Cohomological equation, Newton/KAM linearization and shooting onto W_alpha."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import cfrac
from .annulus import (TWO_PI, AnnulusLift, InversionError, StripFunction,
                      coefficients_from, grid, inverse)
from .circle import (arnold, compare_to, orbit, rotated, rotation_number)

log = logging.getLogger(__name__)

DIVISOR_FLOOR = 1e-13
SHOOT_ACCURACY = 1e-14
MEAN_TOL = 1e-9  # a limit mean above this means rho(f) != alpha
RESIDUAL_SEED = 20240611


class ObstructionError(ValueError):
    """Nonzero mean: the field is not a coboundary over the rotation."""


class ResonanceError(ValueError):
    def __init__(self, modes):
        super().__init__(f"small divisors below {DIVISOR_FLOOR:g} at modes {list(modes)}")
        self.modes = list(modes)


class DivergenceError(RuntimeError):
    pass


class NoCrossing(ValueError):
    pass


class PlateauError(ValueError):
    pass


@dataclass
class ConjugacyChart:
    phi: AnnulusLift
    residual: float
    height: float
    iterations: int
    errors: list = field(default_factory=list)
    means: list = field(default_factory=list)

    def to_json(self):
        return {"phi": self.phi.to_json(), "residual": self.residual, "height": self.height,
                "iterations": self.iterations, "errors": list(self.errors)}


@dataclass
class ShootingResult:
    t_star: float
    bracket_width: float
    rho_certificate: tuple
    f_star: AnnulusLift
    rho: object = None

    @property
    def depth(self):
        return len(self.rho_certificate)

    def to_json(self):
        return {"t_star": self.t_star, "bracket_width": self.bracket_width,
                "certificate": list(self.rho_certificate), "depth": self.depth,
                "rho": self.rho.to_json() if self.rho else None}


@dataclass
class OrbitFit:
    psi: AnnulusLift
    residual: float
    decay_rate: float


def divisors(alpha, M):
    k = np.arange(-M, M + 1)
    return np.exp(TWO_PI * 1j * k * alpha) - 1.0


def solve_cohomological(v: StripFunction, alpha: float, mean_tol=1e-12) -> StripFunction:
    """h with h(z + alpha) - h(z) = v(z) and zero mean."""
    if abs(v.mean) > mean_tol:
        raise ObstructionError(f"mean {abs(v.mean):.3e} is not zero")
    M = v.M
    d = divisors(alpha, M)
    k = np.arange(-M, M + 1)
    active = (v.coef != 0) & (k != 0)
    bad = active & (np.abs(d) < DIVISOR_FLOOR)
    if bad.any():
        raise ResonanceError(k[bad])
    h = np.zeros_like(v.coef)
    h[active] = v.coef[active] / d[active]
    return StripFunction(h, v.eps)


def cohomological_residual(h, v, alpha, N=513):
    x = grid(N)
    pts = np.concatenate([x, x + 0.5j * v.eps, x - 0.5j * v.eps])
    return float(np.abs(h(pts + alpha) - h(pts) - v(pts)).max())


def _newton_inverse(fn, dfn, w, steps=50):
    y = np.array(w, dtype=complex)
    for _ in range(steps):
        r = fn(y) - w
        y = y - r / dfn(y)
        if np.abs(r).max() <= 1e-15:
            return y
    if np.abs(fn(y) - w).max() > 1e-12:
        raise InversionError("Newton inversion did not converge")
    return y


def _near_identity(h: StripFunction):
    """Id + h and its derivative, as callables."""
    dh = h.derivative()
    return (lambda z: z + h(z)), (lambda z: 1.0 + dh(z))


def deformation_check(h: StripFunction, alpha, zeta, N=257):
    """Sup of (Id+zeta h) R_alpha (Id+zeta h)^{-1} - R_alpha - zeta (h(.+alpha) - h)."""
    psi, dpsi = _near_identity(h * zeta)
    x = grid(N)
    z = np.concatenate([x, x + 0.25j * h.eps, x - 0.25j * h.eps])
    y = _newton_inverse(psi, dpsi, z)
    conj = psi(y + alpha)
    lin = z + alpha + zeta * (h(z + alpha) - h(z))
    return float(np.abs(conj - lin).max())


def fresh_points(height, n=256, seed=RESIDUAL_SEED):
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    y = rng.uniform(-height, height, n)
    y[:4] = [height, -height, 0.0, 0.5 * height]
    return x + 1j * y


def chart_residual(phi, f, alpha, height, seed=RESIDUAL_SEED):
    z = fresh_points(height, seed=seed)
    return float(np.abs(phi.raw(f.raw(z)) - phi.raw(z) - alpha).max())


def kam_linearize(f: AnnulusLift, alpha: float, eps_target=None, tol=1e-14,
                  max_iter=30, M=None) -> ConjugacyChart:
    """Newton iteration f_{j+1} = (Id+h_j)^{-1} f_j (Id+h_j) towards R_alpha.

    Each step solves h_j(z+alpha) - h_j(z) = v_j for the zero-mean part v_j
    of f_j - R_alpha.  The mean of f_j - R_alpha cannot be conjugated away;
    it is tracked and must shrink, which happens iff rho(f) = alpha.  Strip
    heights follow eps_{j+1} = eps_j - (eps/4) 2^{-j}.
    """
    eps0 = f.eps
    eps_target = eps0 / 2 if eps_target is None else eps_target
    M = M or f.M
    fj = f.resized(M)
    height = eps0
    psis = []
    errors, means = [], []
    dist0 = max(abs(f.mean - alpha), f.disp.without_mean().norm(0.0), 1e-300)
    drift = 0.0
    for j in range(max_iter):
        v_full = fj.disp - StripFunction.from_modes({0: alpha}, M, fj.eps)
        m = complex(v_full.mean)
        v = v_full.without_mean()
        err = v.norm(0.5 * height)
        errors.append(err)
        means.append(abs(m))
        drift += abs(m)
        log.debug("kam step %d: |v|=%.3e mean=%.3e height=%.4f", j, err, abs(m), height)
        if drift > 10 * dist0 + MEAN_TOL and j > 0:
            raise DivergenceError("mean correction keeps growing: off the stable manifold")
        if j > 2 and err > errors[-2]:
            raise DivergenceError("Newton errors stopped contracting (rotation number mismatch?)")
        if err <= tol:
            if abs(m) > MEAN_TOL:
                raise DivergenceError(f"converged to a rotation offset by {abs(m):.3e}: "
                                      "rotation number differs from alpha")
            break
        h = solve_cohomological(v, alpha, mean_tol=math.inf)
        psi, dpsi = _near_identity(h)
        new_height = max(height - 0.25 * eps0 * 2.0 ** -j, eps_target)
        fprev = fj

        def conj(z, psi=psi, dpsi=dpsi, fprev=fprev):
            return _newton_inverse(psi, dpsi, fprev.raw(psi(z)))

        fj = AnnulusLift(coefficients_from(lambda z: conj(z) - z, M, new_height,
                                           real=f.is_real()), new_height)
        psis.append(psi)
        height = new_height
    else:
        raise DivergenceError(f"no convergence in {max_iter} steps")

    def big_psi(z):
        z = np.asarray(z, dtype=complex)
        for p in reversed(psis):
            z = p(z)
        return z

    # the corrections are trigonometric polynomials, so Psi can be sampled above
    # the final height; that leaves room for the strip lost when inverting it
    psi_height = 0.5 * (height + eps0)
    Psi = AnnulusLift(coefficients_from(lambda z: big_psi(z) - z, M, psi_height,
                                        real=f.is_real()), psi_height)
    phi = inverse(Psi) if psis else AnnulusLift.identity(M, height)
    c = phi.coef.copy()
    c[M] -= phi.raw(0.0) - 0.0
    phi = AnnulusLift(c, phi.eps)
    res = chart_residual(phi, f, alpha, eps_target)
    return ConjugacyChart(phi, res, min(height, phi.eps), len(psis), errors, means)


def convergence_exponent(errors, floor=1e-13):
    """Least-squares slope p of log e_{j+1} against log e_j over errors above floor."""
    e = [x for x in errors if x > floor]
    if len(e) < 3:
        return math.nan
    a = np.log(e[:-1])
    b = np.log(e[1:])
    return float(np.polyfit(a, b, 1)[0])


def _certificate(value, alpha, err):
    depth = cfrac.depth_for_error(alpha, err)
    ea, ev = cfrac.expand(alpha, depth).terms, cfrac.expand(value, depth).terms
    n = 0
    while n < min(len(ea), len(ev)) and ea[n] == ev[n]:
        n += 1
    return ea[:n]


def shoot(f: AnnulusLift, alpha: float, bracket=(0.0, 1.0), tol=1e-12,
          accuracy=SHOOT_ACCURACY, max_iterates=2**20) -> ShootingResult:
    """Find the mean shift t* with rho(R_t o f) = alpha by bisection.

    The bracket is in terms of the shift t added to the mean of f.
    """
    if cfrac.expand(alpha).exact:
        raise ValueError("target rotation number must be irrational")

    def rho(t):
        return rotation_number(rotated(f, t), accuracy, max_iterates)

    lo, hi = map(float, bracket)
    r_lo, r_hi = rho(lo), rho(hi)
    s_lo, s_hi = compare_to(r_lo, alpha), compare_to(r_hi, alpha)
    if s_lo == 0:
        hi, r_hi = lo, r_lo
    elif s_hi == 0:
        lo, r_lo = hi, r_hi
    elif not (s_lo < 0 < s_hi):
        if abs(r_lo.value - r_hi.value) <= r_lo.error_bound + r_hi.error_bound:
            raise PlateauError(f"rotation number locked at {r_lo.value:.12g} across bracket")
        raise NoCrossing(f"no sign change for target {alpha!r} in {bracket}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        r = rho(mid)
        s = compare_to(r, alpha)
        if s == 0:
            lo = hi = mid
            r_lo = r_hi = r
            break
        if s < 0:
            lo, r_lo = mid, r
        else:
            hi, r_hi = mid, r
    width = hi - lo
    g_lo, g_hi = r_lo.value - alpha, r_hi.value - alpha
    if width > 0 and g_hi != g_lo:
        t = lo - g_lo * width / (g_hi - g_lo)
        t = min(max(t, lo), hi)
    else:
        t = 0.5 * (lo + hi)
    fs = rotated(f, t)
    r = rotation_number(fs, accuracy, max_iterates)
    return ShootingResult(t, width, _certificate(r.value, alpha, max(r.error_bound, 1e-15)), fs, r)


def shoot_arnold(a: float, alpha: float, bracket=(0.55, 0.70), eps=0.2, M=None, **kw):
    f = arnold(0.0, a, M or 64, eps)
    return shoot(f, alpha, bracket, **kw)


def stable_manifold_chart(directions, amp: float, alpha: float, f0=None,
                          halfwidth=0.05) -> list:
    """Graph samples (index, amp, t*) of W_alpha over zero-mean directions.

    For each direction g the map f0 + amp*g is shot in its mean; with
    f0 = R_alpha the returned t* is the mean of the map that lands on W_alpha.
    """
    if abs(amp) > 0.05:
        raise ValueError("amp must be <= 0.05")
    out = []
    for i, g in enumerate(directions):
        if not g.is_zero_mean():
            raise ObstructionError(f"direction {i} has nonzero mean")
        base = (f0 or AnnulusLift.identity(g.M, g.eps))
        if f0 is not None:
            base = rotated(base, -base.mean)
        fmap = base.plus(g * amp)
        res = shoot(fmap, alpha, (alpha - halfwidth, alpha + halfwidth))
        out.append((i, amp, res.t_star))
    return out


def write_chart_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["direction", "amp", "t_star"])
        for i, a, t in rows:
            w.writerow([i, repr(float(a)), repr(float(t))])


def decay_rate(coef, floor=1e-13):
    """Geometric ratio r of max(|c_k|, |c_-k|) against |k| >= 1, above floor.

    Returns 0.0 when no mode is above the floor (nothing to decay).
    """
    coef = np.asarray(coef)
    M = (len(coef) - 1) // 2
    k = np.arange(1, M + 1)
    mag = np.maximum(np.abs(coef[M + k]), np.abs(coef[M - k]))
    keep = mag > floor
    if keep.sum() == 0:
        return 0.0
    if keep.sum() == 1:
        kk = k[keep][0]
        return float(mag[keep][0] ** (1.0 / kk))
    slope = np.polyfit(k[keep], np.log(mag[keep]), 1)[0]
    return float(np.exp(slope))


def fourier_fit(theta, values, modes):
    """Least-squares coefficients c_k, |k| <= modes, of values ~ sum c_k e^{2 pi i k theta}."""
    k = np.arange(-modes, modes + 1)
    A = np.exp(TWO_PI * 1j * np.multiply.outer(theta, k))
    c, *_ = np.linalg.lstsq(A, values, rcond=None)
    fit = A @ c
    return c, float(np.abs(fit - values).max())


def conjugacy_from_orbit(f: AnnulusLift, alpha: float, N=1000, modes=None) -> OrbitFit:
    """Fit psi(theta) = theta + sum c_k e^{2 pi i k theta} with f^j(0) = psi(j alpha)."""
    modes = modes or min(f.M, 32)
    if N < 5 * (2 * modes + 1):
        raise ValueError(f"N={N} too small for {modes} modes")
    orb = orbit(f, 0.0, N)
    if orb.escaped:
        raise ValueError(f"orbit escaped at {orb.escaped_at}")
    theta = np.arange(N) * alpha
    c, res = fourier_fit(theta, orb.points - theta, modes)
    if f.is_real():
        c = 0.5 * (c + np.conj(c[::-1]))
        c[modes] = c[modes].real
    coef = np.zeros(2 * f.M + 1, dtype=complex)
    coef[f.M - modes:f.M + modes + 1] = c
    psi = AnnulusLift(coef, f.eps)
    return OrbitFit(psi, res, decay_rate(c))
