"""Renormalization of commuting pairs, with the finite-difference spectrum of
the normalized-pair operator at rotations."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from . import cfrac
from .annulus import (TWO_PI, AnnulusLift, StripFunction, coefficients_from, inverse, iterate)
from .circle import rotation_number
from .linearize import kam_linearize

WINDOW = (-1.0, 1.0)


class RenormalizationError(RuntimeError):
    pass


@dataclass
class CommutingPair:
    eta: AnnulusLift
    xi: AnnulusLift
    level: int
    source_rotation: float
    q: tuple  # (q_n, q_{n+1})
    p: tuple  # integer frames (p_n, p_{n+1})

    def to_json(self):
        return {"eta": self.eta.to_json(), "xi": self.xi.to_json(), "level": self.level,
                "source_rotation": self.source_rotation, "q": list(self.q), "p": list(self.p)}


@dataclass
class RescaledPair:
    window: np.ndarray
    eta_samples: np.ndarray
    xi_samples: np.ndarray
    scale: float
    eta_fit: Chebyshev
    xi_fit: Chebyshev

    def eta_r(self, z):
        return self.eta_fit(z)

    def xi_r(self, z):
        return self.xi_fit(z)


@dataclass
class NormalizedPair:
    """(alpha, beta) near (T_1, lift).

    The commuting part is the lift `beta` with alpha = T_1.  Optional
    corrections (polynomials or callables, added to beta and to T_1) make
    the pair only almost commuting; they are carried through renormalization
    by exact composition.
    """

    beta: AnnulusLift
    correction: Callable | None = None
    alpha_correction: Callable | None = None

    def beta_full(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.beta.raw(z)
        if self.correction is not None:
            out = out + self.correction(z)
        return out

    def alpha_full(self, z):
        z = np.asarray(z, dtype=complex)
        out = z + 1.0
        if self.alpha_correction is not None:
            out = out + self.alpha_correction(z)
        return out

    def alpha_inverse(self, w, tol=1e-14, max_iter=200):
        """Solve alpha(u) = w by fixed-point iteration (corrections are small)."""
        w = np.asarray(w, dtype=complex)
        if self.alpha_correction is None:
            return w - 1.0
        u = w - 1.0
        for _ in range(max_iter):
            nxt = w - 1.0 - self.alpha_correction(u)
            if np.max(np.abs(nxt - u)) <= tol * max(1.0, float(np.max(np.abs(u)))):
                return nxt
            u = nxt
        raise RenormalizationError("alpha inverse did not converge")

    @property
    def defect(self):
        return commutation_defect(self.alpha_full, self.beta_full)

    def to_json(self):
        def coefs(c):
            if c is None:
                return None
            a = c.coef if isinstance(c, Polynomial) else taylor(c, 0.0, 0.1, 32)[:17]
            return [[float(v.real), float(v.imag)] for v in a]
        return {"beta": self.beta.to_json(), "correction": coefs(self.correction),
                "alpha_correction": coefs(self.alpha_correction),
                "defect": list(self.defect)}


@dataclass
class AbelChart:
    """Psi(z) = h^{-1}(rho z), with h o beta o h^{-1} = T_rho."""

    h: AnnulusLift
    h_inv: AnnulusLift
    rho: float
    residual: float

    def psi(self, z):
        return self.h_inv.raw(self.rho * np.asarray(z, dtype=complex))

    def psi_inv(self, w):
        return self.h.raw(w) / self.rho


@dataclass
class GalerkinMatrix:
    entries: np.ndarray
    base_alpha: float
    steps: int
    fd_step: float
    eps: float = 0.2

    @property
    def M(self):
        return (self.entries.shape[0] - 1) // 2


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    dominant_vector: np.ndarray
    unstable_count: int
    second_modulus: float
    angle_to_rotation: float

    def to_json(self):
        return {"eigenvalues": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
                "moduli": [float(abs(e)) for e in self.eigenvalues],
                "unstable_count": self.unstable_count,
                "second_modulus": self.second_modulus,
                "angle_to_rotation": self.angle_to_rotation}


def _frames(alpha, n):
    terms = cfrac.expand(alpha, n + 2).terms
    conv = [(0, 1)] + cfrac.convergents(terms)
    return conv[n], conv[n + 1]


def build_pair(f: AnnulusLift, n: int, alpha=None) -> CommutingPair:
    """(f^{q_n}, f^{q_{n+1}}) with q from the expansion of rho(f)."""
    if alpha is None:
        alpha = rotation_number(f).value
    (p0, q0), (p1, q1) = _frames(alpha, n)
    eta = iterate(f, q0)
    xi = iterate(f, q1)
    return CommutingPair(eta, xi, n, alpha, (q0, q1), (p0, p1))


def _power(f, n, z):
    z = np.asarray(z, dtype=complex)
    for _ in range(n):
        z = f.raw(z)
    return z


def rescale_pair(p: CommutingPair, f: AnnulusLift, n_samples=201, degree=12) -> RescaledPair:
    """l^{-1} o f^{q} o l with l(z) = scale*z, scale = f^{q_n}(0) - p_n.

    Iterates are taken directly from f, pointwise on the scaled window.
    """
    q0, q1 = p.q
    p0, p1 = p.p
    scale = float((_power(f, q0, 0.0) - p0).real)
    if abs(scale) < 1e-14:
        raise RenormalizationError("degenerate rescaling")
    x = np.linspace(*WINDOW, n_samples)
    eta = ((_power(f, q0, scale * x) - p0) / scale).real
    xi = ((_power(f, q1, scale * x) - p1) / scale).real
    return RescaledPair(x, eta, xi, scale, Chebyshev.fit(x, eta, degree),
                        Chebyshev.fit(x, xi, degree))


def affinity_defect(rp: RescaledPair) -> float:
    """Max distance of eta_r and xi_r from their least-squares affine fits."""
    out = 0.0
    for y in (rp.eta_samples, rp.xi_samples):
        coef = np.polyfit(rp.window, y, 1)
        out = max(out, float(np.abs(np.polyval(coef, rp.window) - y).max()))
    return out


def nonlinearity(rp: RescaledPair) -> float:
    """max |g''/g'| over the window for g in the rescaled pair."""
    out = 0.0
    x = rp.window
    for g in (rp.eta_fit, rp.xi_fit):
        d1, d2 = g.deriv(1)(x), g.deriv(2)(x)
        out = max(out, float(np.abs(d2 / d1).max()))
    return out


def pair_sequence(f: AnnulusLift, alpha: float, levels):
    """[(k, scale, affinity_defect, nonlinearity)] for the rescaled pairs of f."""
    rows = []
    for k in levels:
        (p0, q0), (p1, q1) = _frames(alpha, k)
        pair = CommutingPair(None, None, k, alpha, (q0, q1), (p0, p1))
        rp = rescale_pair(pair, f)
        rows.append((k, rp.scale, affinity_defect(rp), nonlinearity(rp)))
    return rows


def fit_rate(values):
    """(lambda, C, R^2) of the log-linear fit values_k ~ C lambda^k, k = 1.."""
    k = np.arange(1, len(values) + 1)
    y = np.log(values)
    slope, icpt = np.polyfit(k, y, 1)
    pred = icpt + slope * k
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return float(np.exp(slope)), float(np.exp(icpt)), 1.0 - ss_res / ss_tot if ss_tot else 1.0


def taylor(func, center=0.0, radius=0.1, N=64):
    """Taylor coefficients a_0..a_{N-1} of func at center from a circle."""
    th = 2 * np.pi * np.arange(N) / N
    vals = func(center + radius * np.exp(1j * th))
    return np.fft.fft(vals) / N / radius ** np.arange(N)


def commutation_defect(eta, xi, radius=0.1, N=64):
    """(|c(0)|, |c'(0)|, |c''(0)|) for c = eta o xi - xi o eta, spectrally."""
    a = taylor(lambda z: eta(xi(z)) - xi(eta(z)), 0.0, radius, N)
    return (float(abs(a[0])), float(abs(a[1])), float(abs(2.0 * a[2])))


def solve_abel(beta: AnnulusLift, rho=None, accuracy=1e-14) -> AbelChart:
    if rho is None:
        rho = rotation_number(beta, accuracy).value
    if beta.disp.without_mean().norm(0.0) == 0.0 and abs(beta.mean - rho) < 1e-15:
        h = AnnulusLift.identity(beta.M, beta.eps)
        h_inv = h
    else:
        chart = kam_linearize(beta, rho)
        h = chart.phi
        h_inv = inverse(h)
    ab = AbelChart(h, h_inv, rho, 0.0)
    x = np.linspace(0.0, 1.0, 64) + 0.25j * min(h.eps, h_inv.eps) * np.cos(np.arange(64))
    ab.residual = float(np.abs(ab.psi_inv(beta.raw(ab.psi(x))) - x - 1.0).max())
    if ab.residual > 1e-8:
        raise RenormalizationError(f"Abel residual {ab.residual:.2e}")
    return ab


def _rotation_of(p: NormalizedPair, accuracy):
    rho = rotation_number(p.beta, accuracy)
    v = rho.value
    if v < 1e-12 or cfrac.expand(v).exact:
        raise RenormalizationError(f"rotation number {v!r} is zero or rational at resolution")
    return v


def renorm_step(p: NormalizedPair, accuracy=1e-14) -> NormalizedPair:
    """(alpha, beta) -> (Psi^{-1} o beta o Psi, alpha'^{-n} o Psi^{-1} o beta^kappa o alpha o Psi).

    kappa = [1/rho], Psi is the Abel chart of the lift part of beta, so the new
    alpha is T_1 for true pairs, and n is the integer bringing the new mean
    into [0, 1).  Corrections are carried by exact composition; reducing with
    the new alpha (rather than subtracting n) keeps the commutator a pullback
    of the old one.
    """
    rho = _rotation_of(p, accuracy)
    kappa = int(math.floor(1.0 / rho))
    ab = solve_abel(p.beta, rho, accuracy)
    M, eps = p.beta.M, p.beta.eps

    def step_lift(z):
        w = ab.psi(z) + 1.0
        for _ in range(kappa):
            w = p.beta.raw(w)
        return ab.psi_inv(w)

    coef = coefficients_from(lambda z: step_lift(z) - z, M, eps, real=p.beta.is_real())
    n = math.floor(coef[M].real)
    coef[M] -= n
    new = AnnulusLift(coef, eps)
    if p.correction is None and p.alpha_correction is None:
        return NormalizedPair(new)

    def alpha_corr(z):
        z = np.asarray(z, dtype=complex)
        return ab.psi_inv(p.beta_full(ab.psi(z))) - z - 1.0

    out = NormalizedPair(new, None, alpha_corr)

    def beta_corr(z):
        z = np.asarray(z, dtype=complex)
        w = p.alpha_full(ab.psi(z))
        for _ in range(kappa):
            w = p.beta_full(w)
        w = ab.psi_inv(w)
        for _ in range(n):
            w = out.alpha_inverse(w)
        return w - new.raw(z)

    out.correction = beta_corr
    return out


def renorm_steps(p: NormalizedPair, steps: int, accuracy=1e-14) -> NormalizedPair:
    for _ in range(steps):
        p = renorm_step(p, accuracy)
    return p


def _image_coef(beta, steps, M):
    return renorm_steps(NormalizedPair(beta), steps).beta.resized(M).coef


def galerkin_differential(alpha: float, M=16, fd_step=1e-5, steps=2, eps=0.2) -> GalerkinMatrix:
    """Central differences of `steps` renormalizations at T_alpha along e^{2 pi i k z}.

    Basis fields are scaled to unit sup norm on the strip, s_k e^{2 pi i k z}
    with s_k = e^{-2 pi |k| eps}, and the matrix is expressed in that basis.
    The operator is real-analytic, so the differential is complex linear;
    columns for e_k and e_{-k} are assembled from the real-symmetric fields
    e_k + e_{-k} and i(e_k - e_{-k}).
    """
    base = AnnulusLift.rotation(alpha, M, eps)
    k_all = np.arange(-M, M + 1)
    scales = np.exp(-TWO_PI * np.abs(k_all) * eps)
    D = np.zeros((2 * M + 1, 2 * M + 1), dtype=complex)

    def dir_derivative(field):
        plus = _image_coef(base.plus(field * fd_step), steps, M)
        minus = _image_coef(base.plus(field * -fd_step), steps, M)
        return (plus - minus) / (2 * fd_step) / scales

    D[:, M] = dir_derivative(StripFunction.from_modes({0: 1.0}, M, eps))
    for k in range(1, M + 1):
        s = scales[M + k]
        du = dir_derivative(StripFunction.from_modes({k: s, -k: s}, M, eps))
        dv = dir_derivative(StripFunction.from_modes({k: 1j * s, -k: -1j * s}, M, eps))
        D[:, M + k] = 0.5 * (du - 1j * dv)
        D[:, M - k] = 0.5 * (du + 1j * dv)
    return GalerkinMatrix(D, alpha, steps, fd_step, eps)


def spectrum(m: GalerkinMatrix) -> Spectrum:
    w, V = np.linalg.eig(m.entries)
    order = np.argsort(-np.abs(w), kind="stable")
    w, V = w[order], V[:, order]
    v = V[:, 0]
    M = m.M
    cosang = min(1.0, abs(v[M]) / np.linalg.norm(v))
    return Spectrum(w, v, int(np.sum(np.abs(w) > 1.0)),
                    float(abs(w[1])) if len(w) > 1 else 0.0, float(math.acos(cosang)))


def write_spectrum_csv(path, sp: Spectrum):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "modulus"])
        for e in sp.eigenvalues:
            w.writerow([repr(float(e.real)), repr(float(e.imag)), repr(float(abs(e)))])


def write_defects_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "scale", "affinity_defect", "nonlinearity"])
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
