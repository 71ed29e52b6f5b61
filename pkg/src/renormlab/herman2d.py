"""Dissipative maps of the cylinder times a disk and invariant-circle certificates.

A Map2D is F(z, w) = (z + P(z, w), s*z + Q(z, w)) with P, Q finite sums of
c_{k,m} e^{2 pi i k z} w^m.  s = 0 for genuine cylinder maps; the diagonal
embedding of a circle lift uses s = 1.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import cfrac
from .annulus import TWO_PI, AnnulusLift
from .circle import RotationEstimate, _weights, compare_to
from .linearize import NoCrossing, PlateauError, decay_rate, fourier_fit

ESCAPE_MARGIN = 0.95
BURN_IN = 10_000
DEFAULTS = {"a": 0.1, "c": 0.5, "d": 0.2, "e": 0.1}
RESIDUAL_SEED = 7


@dataclass(frozen=True, eq=False)
class Map2D:
    P: np.ndarray  # shape (2K+1, D+1): mode k at row k+K, power w^m at column m
    Q: np.ndarray
    eps: float = 0.2
    q_slope: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def K(self):
        return (self.P.shape[0] - 1) // 2

    def _terms(self, A):
        K = self.K
        rows, cols = np.nonzero(A)
        return (rows - K).astype(np.int64), cols.astype(np.int64), A[rows, cols].astype(np.complex128)

    def kernel_args(self):
        return self._terms(self.P) + self._terms(self.Q)

    @staticmethod
    def _sum(A, z, w):
        K = (A.shape[0] - 1) // 2
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        out = np.zeros(np.broadcast(z, w).shape, dtype=complex)
        for r, m in zip(*np.nonzero(A)):
            out = out + A[r, m] * np.exp(TWO_PI * 1j * (r - K) * z) * w ** m
        return out

    def __call__(self, z, w):
        z = np.asarray(z, dtype=complex)
        return z + self._sum(self.P, z, w), self.q_slope * z + self._sum(self.Q, z, w)

    def dQ_dw(self, z, w):
        K = self.K
        out = np.zeros(np.broadcast(np.asarray(z), np.asarray(w)).shape, dtype=complex)
        for r, m in zip(*np.nonzero(self.Q)):
            if m:
                out = out + m * self.Q[r, m] * np.exp(TWO_PI * 1j * (r - K) * z) * w ** (m - 1)
        return out

    def dissipation(self, n=64):
        """max |dQ/dw| over a grid of the closed polydisk Delta_eps."""
        x = np.arange(n) / n
        y = np.linspace(-self.eps, self.eps, 5)
        r = np.linspace(0.0, self.eps, 4)
        th = np.arange(16) * TWO_PI / 16
        z = (x[:, None] + 1j * y[None, :]).ravel()
        w = (r[:, None] * np.exp(1j * th[None, :])).ravel()
        return float(np.abs(self.dQ_dw(z[:, None], w[None, :])).max())

    def to_json(self):
        def enc(A):
            K = self.K
            return [[int(r - K), int(m), float(A[r, m].real), float(A[r, m].imag)]
                    for r, m in zip(*np.nonzero(A))]
        return {"P": enc(self.P), "Q": enc(self.Q), "K": self.K, "D": self.P.shape[1] - 1,
                "eps": self.eps, "q_slope": self.q_slope, "params": self.params}


@dataclass
class Orbit2D:
    z: np.ndarray
    w: np.ndarray
    escaped_at: int | None
    classification: str
    w_amplitude: float


@dataclass
class HermanCertificate:
    Z: np.ndarray  # coefficients of Z(theta) - theta, k = -m..m
    W: np.ndarray  # coefficients of W(theta) - s*theta
    residual: float
    decay_rate: float
    rho: RotationEstimate
    prefix: tuple
    q_slope: float = 0.0

    @property
    def passes(self):
        return self.residual <= 1e-6 and self.decay_rate <= 0.9

    def psi(self, theta):
        m = (len(self.Z) - 1) // 2
        k = np.arange(-m, m + 1)
        E = np.exp(TWO_PI * 1j * np.multiply.outer(np.asarray(theta, dtype=float), k))
        return theta + E @ self.Z, self.q_slope * theta + E @ self.W

    def to_json(self):
        m = (len(self.Z) - 1) // 2
        enc = lambda C: [[int(k), float(c.real), float(c.imag)] for k, c in zip(range(-m, m + 1), C)]
        return {"Z": enc(self.Z), "W": enc(self.W), "residual": self.residual,
                "decay_rate": self.decay_rate, "rho": self.rho.to_json(),
                "prefix_depth": len(self.prefix), "passes": self.passes}


def _grid(K, D):
    return np.zeros((2 * K + 1, D + 1), dtype=complex)


def example_family(t, a=DEFAULTS["a"], c=DEFAULTS["c"], d=DEFAULTS["d"], e=DEFAULTS["e"],
                   eps=0.2) -> Map2D:
    """F(z,w) = (z + t + a/(2pi) sin 2pi z + c w,  d w + e/(2pi) sin 2pi z)."""
    if abs(d) >= 1:
        raise ValueError("need |d| < 1 for dissipation")
    if not 0.0 <= a < 1.0:
        raise ValueError("need 0 <= a < 1")
    P, Q = _grid(1, 1), _grid(1, 1)
    s = 1.0 / (4j * math.pi)
    P[1, 0] = t
    P[2, 0], P[0, 0] = a * s, -a * s
    P[1, 1] = c
    Q[1, 1] = d
    Q[2, 0], Q[0, 0] = e * s, -e * s
    return Map2D(P, Q, eps, 0.0, {"t": t, "a": a, "c": c, "d": d, "e": e})


def embed(h: AnnulusLift) -> Map2D:
    """(z, w) -> (h(z), h(z))."""
    P = h.coef.reshape(-1, 1).copy()
    return Map2D(P, P.copy(), h.eps, 1.0, {"embedded": True})


@njit(cache=True)
def _series2(z, w, ks, ms, cs):
    s = 0j
    for i in range(ks.shape[0]):
        s += cs[i] * np.exp(1j * TWO_PI * ks[i] * z) * w ** ms[i]
    return s


@njit(cache=True)
def _orbit2d(z0, w0, n, pk, pm, pc, qk, qm, qc, slope, limit):
    """Orbit with z kept near [0,1).

    Returns (z reduced, wraps, w, disp, wdev, escape index) where disp[j] is
    the step z_{j+1} - z_j and wdev[j] = w_j - slope * (lift of z_j), both
    accumulated from small quantities so no precision is lost to the lift.
    """
    zr = np.empty(n, dtype=np.complex128)
    wr = np.empty(n, dtype=np.complex128)
    wdev = np.empty(n, dtype=np.complex128)
    wraps = np.empty(n, dtype=np.int64)
    disp = np.empty(n, dtype=np.complex128)
    nw = int(math.floor(z0.real))
    z = z0 - nw
    w = w0
    wd = w0 - slope * z0
    for j in range(n):
        zr[j] = z
        wr[j] = w
        wdev[j] = wd
        wraps[j] = nw
        wsize = abs(w.imag) if slope != 0.0 else abs(w)
        if abs(z.imag) > limit or wsize > limit:
            return zr[: j + 1], wraps[: j + 1], wr[: j + 1], disp[: j + 1], wdev[: j + 1], j
        dz = _series2(z, w, pk, pm, pc)
        qv = _series2(z, w, qk, qm, qc)
        w = slope * (z + nw) + qv
        wd = qv - slope * dz
        disp[j] = dz
        z = z + dz
        m = int(math.floor(z.real))
        z -= m
        nw += m
    return zr, wraps, wr, disp, wdev, -1


def _run(F: Map2D, start, n):
    pk, pm, pc, qk, qm, qc = F.kernel_args()
    z0, w0 = complex(start[0]), complex(start[1])
    return _orbit2d(z0, w0, int(n), pk, pm, pc, qk, qm, qc, float(F.q_slope),
                    ESCAPE_MARGIN * F.eps)


def _classify(z, w, tol=1e-9, max_period=50):
    if len(z) < 2 * max_period:
        return "quasi-periodic"
    for p in range(1, max_period + 1):
        dz = z[-1] - z[-1 - p]
        if abs(dz - round(dz.real)) < tol and abs(w[-1] - w[-1 - p]) < tol:
            return "fixed-point" if p == 1 else f"periodic-{p}"
    return "quasi-periodic"


def attractor_orbit(F: Map2D, start=(0.0, 0.0), burn_in=BURN_IN, N=4096) -> Orbit2D:
    if abs(np.imag(start[0])) > F.eps or abs(start[1]) > F.eps:
        raise ValueError("start outside Delta_eps")
    zr, wraps, wr, _, _, esc = _run(F, start, burn_in + N)
    z = zr + wraps
    w = wr
    if esc >= 0:
        return Orbit2D(z, w, int(esc), "escaped", math.inf)
    z, w = z[burn_in:], w[burn_in:]
    return Orbit2D(z, w, None, _classify(z, w), float(np.abs(w).max()))


def rotation_number_2d(F: Map2D, accuracy=1e-13, burn_in=BURN_IN, max_iterates=2**20,
                       start=(0.0, 0.0)) -> RotationEstimate:
    """Weighted Birkhoff average of the z-displacement along the attractor."""
    zr, wraps, wr, disp, _, esc = _run(F, start, burn_in + max_iterates)
    if esc >= 0:
        raise ValueError(f"orbit escaped at iterate {esc}")
    d = disp[burn_in:].real
    N = 1024
    prev = float(_weights(N) @ d[:N])
    err = math.inf
    while 2 * N <= max_iterates:
        N *= 2
        cur = float(_weights(N) @ d[:N])
        err = max(abs(cur - prev), 2e-16 * math.sqrt(N))
        prev = cur
        if err <= accuracy:
            return RotationEstimate(cur - math.floor(cur), err, "weighted-birkhoff", N)
    return RotationEstimate(prev - math.floor(prev), err, "weighted-birkhoff", N, converged=False)


@dataclass
class Shoot2DResult:
    s_star: float
    bracket_width: float
    F: Map2D
    rho: RotationEstimate

    def to_json(self):
        return {"s_star": self.s_star, "bracket_width": self.bracket_width,
                "rho": self.rho.to_json(), "params": self.F.params}


def shoot2d(family, alpha, bracket, tol=1e-10, accuracy=1e-13, **kw) -> Shoot2DResult:
    """Bisection in s for rho(F_s) = alpha along a one-parameter slice."""
    if cfrac.expand(alpha).exact:
        raise ValueError("target rotation number must be irrational")

    def rho(s):
        return rotation_number_2d(family(s), accuracy, **kw)

    lo, hi = map(float, bracket)
    r_lo, r_hi = rho(lo), rho(hi)
    s_lo, s_hi = compare_to(r_lo, alpha), compare_to(r_hi, alpha)
    sign = 1
    if s_lo > 0 > s_hi:
        sign = -1
    elif s_lo == 0:
        hi = lo
    elif s_hi == 0:
        lo = hi
    elif not (s_lo < 0 < s_hi):
        if abs(r_lo.value - r_hi.value) <= r_lo.error_bound + r_hi.error_bound:
            raise PlateauError("rotation number locked across the bracket")
        raise NoCrossing(f"no crossing of {alpha!r} in {bracket}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        s = sign * compare_to(rho(mid), alpha)
        if s == 0:
            lo = hi = mid
            break
        if s < 0:
            lo = mid
        else:
            hi = mid
    s_star = 0.5 * (lo + hi)
    F = family(s_star)
    return Shoot2DResult(s_star, hi - lo, F, rotation_number_2d(F, accuracy, **kw))


def canonicalize(Z, W, q_slope=0.0):
    """Reparametrize theta -> theta + c so that Z(theta) - theta has real mean 0."""
    m = (len(Z) - 1) // 2
    k = np.arange(-m, m + 1)
    c = Z[m].real
    rot = np.exp(-TWO_PI * 1j * k * c)
    Z2, W2 = Z * rot, W * rot
    Z2[m] -= c
    W2[m] -= q_slope * c
    return Z2, W2


def certify_herman(F: Map2D, alpha, N=4096, modes=24, burn_in=BURN_IN, start=(0.0, 0.0),
                   rho=None, n_check=512) -> HermanCertificate:
    """Fit the attractor orbit as (Z, W)(j alpha) and test invariance of the fit."""
    if N < 5 * (2 * modes + 1):
        raise ValueError(f"N={N} too small for {modes} modes")
    if abs(np.imag(start[0])) > F.eps or abs(start[1]) > F.eps:
        raise ValueError("start outside Delta_eps")
    zr, _, _, disp, wdev, esc = _run(F, start, burn_in + N)
    if esc >= 0:
        raise ValueError("orbit escaped")
    theta = np.arange(N) * alpha
    # z_j - j alpha and w_j - s j alpha, up to the integer lift of the first point
    dev = zr[burn_in] + np.concatenate(([0.0], np.cumsum(disp[burn_in:burn_in + N - 1] - alpha)))
    Z, rz = fourier_fit(theta, dev, modes)
    W, rw = fourier_fit(theta, wdev[burn_in:] + F.q_slope * dev, modes)
    Z, W = canonicalize(Z, W, F.q_slope)
    if rho is None:
        rho = rotation_number_2d(F, burn_in=burn_in, start=start)
    cert = HermanCertificate(Z, W, 0.0, 0.0, rho, (), F.q_slope)
    th = np.random.default_rng(RESIDUAL_SEED).random(n_check)
    z, w = cert.psi(th)
    fz, fw = F(z, w)
    z2, w2 = cert.psi(th + alpha)
    cert.residual = float(max(np.abs(fz - z2).max(), np.abs(fw - w2).max()))
    both = np.maximum(np.abs(Z), np.abs(W))
    both[modes] = 0.0
    # coefficients at the level of the fit residual are rounding noise, not signal
    cert.decay_rate = decay_rate(both, floor=max(1e-13, 10.0 * max(rz, rw)))
    depth = cfrac.depth_for_error(alpha, max(rho.error_bound, 1e-15))
    ea, er = cfrac.expand(alpha, depth).terms, cfrac.expand(rho.value, depth).terms
    n = 0
    while n < min(len(ea), len(er)) and ea[n] == er[n]:
        n += 1
    cert.prefix = ea[:n]
    return cert


def load_family_config(path):
    """{"family": "example", "params": {...}, "slice": {"param": "t", "bracket": [lo, hi]},
    "alpha": "golden"} -> (family callable in s, bracket, alpha token)."""
    with open(path) as fh:
        cfg = json.load(fh)
    return family_from_config(cfg)


def family_from_config(cfg):
    if cfg.get("family", "example") != "example":
        raise ValueError(f"unknown family {cfg.get('family')!r}")
    params = {"t": cfrac.GOLDEN, **DEFAULTS, **cfg.get("params", {})}
    sl = cfg.get("slice", {"param": "t", "bracket": [0.55, 0.70]})
    name = sl["param"]
    if name not in params:
        raise ValueError(f"unknown slice parameter {name!r}")

    def family(s):
        return example_family(**{**params, name: s})

    return family, tuple(sl["bracket"]), cfg.get("alpha", "golden")


def write_attractor_csv(path, orb: Orbit2D):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["j", "re_z", "im_z", "re_w", "im_w"])
        for j, (z, w) in enumerate(zip(orb.z, orb.w)):
            wr.writerow([j, repr(float(z.real)), repr(float(z.imag)), repr(float(w.real)), repr(float(w.imag))])
