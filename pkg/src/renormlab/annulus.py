"""Analytic lifts f(z) = z + sum_k c_k e^{2 pi i k z} on the strip |Im z| < eps.

Coefficients live in a dense complex array of length 2M+1 with mode k at
index k + M.  Every operation that builds a new series returns it with the
height on which it was sampled, which is the height it is certified on.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
DEFAULT_M = 64
DEFAULT_EPS = 0.2
# relative FFT noise floor on the sampling circle
NOISE = 1e-15
STRIP_TOL = 1e-12
RESOLVE_TOL = 1e-12


class StripError(ValueError):
    """Point or image outside the strip of definition."""


class InversionError(ArithmeticError):
    pass


def _modes(M):
    return np.arange(-M, M + 1)


def _pad(coef, M):
    m = (len(coef) - 1) // 2
    if m == M:
        return coef
    if m > M:
        return coef[m - M:m + M + 1].copy()
    out = np.zeros(2 * M + 1, dtype=complex)
    out[M - m:M + m + 1] = coef
    return out


def series(coef, z):
    """Sum of c_k e^{2 pi i k z}, skipping zero modes."""
    z = np.asarray(z, dtype=complex)
    M = (len(coef) - 1) // 2
    idx = np.flatnonzero(coef)
    if len(idx) == 0:
        return np.zeros_like(z)
    k = idx - M
    if len(idx) == 1 and k[0] == 0:
        return np.full_like(z, coef[idx[0]])
    E = np.exp(TWO_PI * 1j * np.multiply.outer(z, k))
    return E @ coef[idx]


def grid(N):
    return np.arange(N) / N


def coefficients_from(func, M, height, N=None, real=False):
    """Recover modes |k| <= M of a 1-periodic function by sampling.

    Positive modes are read on the circle Im z = -height and negative modes
    on Im z = +height, where each is largest relative to rounding noise.
    Modes below the noise floor on their sampling circle are set to zero.
    """
    N = N or 4 * M + 1
    x = grid(N)
    k = _modes(M)
    lo = np.asarray(func(x - 1j * height))
    Flo = np.fft.fft(lo) / N
    if real:
        Fhi = None
        scale = max(1.0, np.abs(lo).max())
    else:
        hi = np.asarray(func(x + 1j * height))
        Fhi = np.fft.fft(hi) / N
        scale = max(1.0, np.abs(lo).max(), np.abs(hi).max())
    coef = np.zeros(2 * M + 1, dtype=complex)
    pos = k > 0
    coef[pos] = Flo[k[pos]] * np.exp(-TWO_PI * k[pos] * height)
    if real:
        coef[k < 0] = np.conj(coef[pos][::-1])
        coef[M] = Flo[0].real
    else:
        neg = k < 0
        coef[neg] = Fhi[k[neg] % N] * np.exp(TWO_PI * k[neg] * height)
        coef[M] = 0.5 * (Flo[0] + Fhi[0])
    damp = np.abs(coef) * np.exp(TWO_PI * np.abs(k) * height)
    coef[(damp < NOISE * scale) & (k != 0)] = 0.0
    return coef


@dataclass(frozen=True, eq=False)
class StripFunction:
    """1-periodic analytic g(z) = sum_k g_k e^{2 pi i k z}."""

    coef: np.ndarray
    eps: float = DEFAULT_EPS
    tail: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=complex))

    @classmethod
    def from_modes(cls, modes: dict, M=DEFAULT_M, eps=DEFAULT_EPS):
        coef = np.zeros(2 * M + 1, dtype=complex)
        for k, c in modes.items():
            coef[k + M] = c
        return cls(coef, eps)

    @classmethod
    def zero(cls, M=DEFAULT_M, eps=DEFAULT_EPS):
        return cls(np.zeros(2 * M + 1, dtype=complex), eps)

    @property
    def M(self):
        return (len(self.coef) - 1) // 2

    @property
    def mean(self):
        return self.coef[self.M]

    def mode(self, k):
        return self.coef[k + self.M] if abs(k) <= self.M else 0.0

    def is_zero_mean(self, tol=1e-12):
        return abs(self.mean) <= tol

    def is_real(self, tol=1e-12):
        return _is_real(self.coef, tol)

    def __call__(self, z):
        return series(self.coef, z)

    def _combine(self, other, sign):
        M = max(self.M, other.M)
        return StripFunction(_pad(self.coef, M) + sign * _pad(other.coef, M),
                             min(self.eps, other.eps), self.tail + other.tail)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, s):
        return StripFunction(self.coef * s, self.eps, abs(s) * self.tail)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def shift(self, a):
        """z -> g(z + a)."""
        return StripFunction(self.coef * np.exp(TWO_PI * 1j * _modes(self.M) * a),
                             self.eps - abs(np.imag(a)), self.tail)

    def without_mean(self):
        c = self.coef.copy()
        c[self.M] = 0.0
        return StripFunction(c, self.eps, self.tail)

    def derivative(self):
        return StripFunction(TWO_PI * 1j * _modes(self.M) * self.coef, self.eps)

    def with_eps(self, eps):
        return StripFunction(self.coef, eps, self.tail)

    def norm(self, height=None):
        return _sup(self, self.eps if height is None else height)

    def as_lift(self):
        return AnnulusLift(self.coef, self.eps, self.tail)


def _is_real(coef, tol):
    M = (len(coef) - 1) // 2
    return (abs(coef[M].imag) <= tol
            and np.allclose(coef[M + 1:], np.conj(coef[:M][::-1]), rtol=0, atol=tol))


def _sup(g, height, N=None):
    M = (len(g.coef) - 1) // 2
    N = N or max(8 * M + 1, 257)
    x = grid(N)
    return float(max(np.abs(g(x + 1j * height)).max(), np.abs(g(x - 1j * height)).max()))


@dataclass(frozen=True, eq=False)
class AnnulusLift:
    """Lift of a degree-one circle map: f(z) = z + c_0 + sum_{k != 0} c_k e^{2 pi i k z}."""

    coef: np.ndarray
    eps: float = DEFAULT_EPS
    tail: float = 0.0
    _disp: StripFunction = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=complex))
        object.__setattr__(self, "_disp", StripFunction(self.coef, self.eps, self.tail))

    @classmethod
    def rotation(cls, alpha, M=DEFAULT_M, eps=DEFAULT_EPS):
        coef = np.zeros(2 * M + 1, dtype=complex)
        coef[M] = alpha
        return cls(coef, eps)

    @classmethod
    def identity(cls, M=DEFAULT_M, eps=DEFAULT_EPS):
        return cls.rotation(0.0, M, eps)

    @classmethod
    def from_modes(cls, mean, modes: dict, M=DEFAULT_M, eps=DEFAULT_EPS):
        coef = np.zeros(2 * M + 1, dtype=complex)
        coef[M] = mean
        for k, c in modes.items():
            if k == 0:
                raise ValueError("mode 0 is the mean")
            coef[k + M] = c
        return cls(coef, eps)

    @property
    def M(self):
        return (len(self.coef) - 1) // 2

    @property
    def mean(self):
        return self.coef[self.M]

    @property
    def disp(self) -> StripFunction:
        """Displacement f(z) - z as a periodic function."""
        return self._disp

    def mode(self, k):
        return self.coef[k + self.M] if abs(k) <= self.M else 0.0

    def is_real(self, tol=1e-12):
        return _is_real(self.coef, tol)

    def __call__(self, z):
        return eval_lift(self, z)

    def raw(self, z):
        """Evaluate without the strip check."""
        z = np.asarray(z, dtype=complex)
        return z + series(self.coef, z)

    def with_eps(self, eps):
        return AnnulusLift(self.coef, eps, self.tail)

    def resized(self, M):
        return AnnulusLift(_pad(self.coef, M), self.eps, self.tail)

    def plus(self, g: StripFunction):
        """f + g, the lift with displacement shifted by a periodic function."""
        M = max(self.M, g.M)
        return AnnulusLift(_pad(self.coef, M) + _pad(g.coef, M),
                           min(self.eps, g.eps), self.tail + g.tail)

    def min_derivative(self, height=0.0, N=None):
        N = N or max(8 * self.M + 1, 257)
        x = grid(N)
        d = derivative(self)
        vals = [np.abs(d(x + 1j * height))]
        if height:
            vals.append(np.abs(d(x - 1j * height)))
        return float(min(v.min() for v in vals))

    def to_json(self) -> dict:
        M = self.M
        coeffs = [[int(k), float(c.real), float(c.imag)]
                  for k, c in zip(_modes(M), self.coef) if k != 0 and c != 0]
        return {"eps": float(self.eps), "mean": [float(self.mean.real), float(self.mean.imag)],
                "coeffs": coeffs, "M": M, "tail": float(self.tail)}

    @classmethod
    def from_json(cls, d: dict):
        ks = [int(c[0]) for c in d["coeffs"]]
        M = int(d.get("M", max([1] + [abs(k) for k in ks])))
        coef = np.zeros(2 * M + 1, dtype=complex)
        coef[M] = complex(d["mean"][0], d["mean"][1])
        for k, re, im in d["coeffs"]:
            coef[int(k) + M] = complex(re, im)
        return cls(coef, float(d["eps"]), float(d.get("tail", 0.0)))

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, s: str):
        return cls.from_json(json.loads(s))


def eval_lift(f: AnnulusLift, z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z.imag) > f.eps + STRIP_TOL):
        raise StripError(f"point outside strip |Im z| <= {f.eps}")
    return f.raw(z)


def _unresolved(coef, height):
    """Largest top-quarter mode weighted to `height`, relative to the largest mode."""
    M = (len(coef) - 1) // 2
    k = _modes(M)
    w = np.abs(coef) * np.exp(TWO_PI * np.abs(k) * height)
    w[M] = 0.0
    band = np.abs(k) > (3 * M) // 4
    return float(w[band].max() / max(1.0, w.max())) if band.any() else 0.0


def _lift_of(func, M, height, real, shrink=0.8, tries=6):
    """Displacement func(z) - z recovered on circles at a height where M modes resolve it.

    The height is lowered while the top quarter of the modes is above
    RESOLVE_TOL on the sampling circle (a singularity close to the circle
    makes the coefficients alias).  Returns (coef, height, unresolved tail).
    """
    s = height
    for _ in range(tries):
        coef = coefficients_from(lambda z: func(z) - z, M, s, real=real)
        tail = _unresolved(coef, s)
        if tail <= RESOLVE_TOL:
            return coef, s, 0.0
        s *= shrink
    return coef, s, tail


def _fit_height(image, s, limit, shrink=0.999):
    """Largest height <= s whose circles `image` maps into |Im| <= limit."""
    for _ in range(8):
        x = grid(257)
        im = max(np.abs(image(x + 1j * s).imag).max(), np.abs(image(x - 1j * s).imag).max())
        if im <= limit:
            return s
        s = shrink * (s - (im - limit))
        if s <= 0:
            break
    raise StripError("image leaves the strip at every sampling height")


def compose(f: AnnulusLift, g: AnnulusLift, M=None) -> AnnulusLift:
    """f o g, sampled on the largest common height g maps into f's strip."""
    M = M or max(f.M, g.M)
    s = _fit_height(g.raw, min(f.eps, g.eps), f.eps)
    real = f.is_real() and g.is_real()
    coef, s, tail = _lift_of(lambda z: f.raw(g.raw(z)), M, s, real)
    return AnnulusLift(coef, s, f.tail + g.tail + tail)


def _newton_inverse(f: AnnulusLift, w, steps=50, tol=1e-15):
    d = derivative(f)
    y = w - f.mean
    for _ in range(steps):
        r = f.raw(y) - w
        y = y - r / d(y)
        if np.abs(r).max() <= tol * max(1.0, np.abs(w).max()):
            return y
    r = f.raw(y) - w
    if np.abs(r).max() > 1e-12:
        raise InversionError("Newton inversion did not converge")
    return y


def inverse(f: AnnulusLift, M=None) -> AnnulusLift:
    M = M or f.M
    if f.min_derivative(0.0) <= 0.1:
        raise InversionError("map too close to critical for inversion")
    s = _fit_height(lambda w: _newton_inverse(f, w), f.eps, f.eps)
    coef, s, tail = _lift_of(lambda w: _newton_inverse(f, w), M, s, f.is_real())
    return AnnulusLift(coef, s, f.tail + tail)


def norm(f, height=None) -> float:
    """Sup of |f(z) - z| (lifts) or |g(z)| (periodic functions) on |Im z| = height."""
    h = f.eps if height is None else height
    g = f.disp if isinstance(f, AnnulusLift) else f
    return _sup(g, h)


def distance(f, g, height=None) -> float:
    a = f.disp if isinstance(f, AnnulusLift) else f
    b = g.disp if isinstance(g, AnnulusLift) else g
    return norm(a - b, min(f.eps, g.eps) if height is None else height)


def derivative(f: AnnulusLift) -> StripFunction:
    """f' as a periodic function (its mean is 1)."""
    d = f.disp.derivative()
    d.coef[f.M] = 1.0
    return d


def truncate(f, M_new):
    """Drop modes |k| > M_new, adding their sup bound on the strip to `tail`."""
    if M_new < 1:
        raise ValueError("degree must be >= 1")
    M = f.M
    k = _modes(M)
    drop = np.abs(k) > M_new
    tail = float(np.sum(np.abs(f.coef[drop]) * np.exp(TWO_PI * np.abs(k[drop]) * f.eps)))
    coef = _pad(f.coef, M_new) if M_new < M else f.coef.copy()
    return type(f)(coef, f.eps, f.tail + tail)


def iterate(f: AnnulusLift, n: int, height=None, M=None, margin=0.95):
    """f^n as a lift, obtained by iterating the sampling circles pointwise.

    The sampling height starts at `height` (default eps/2) and is lowered
    until every iterate stays within margin*eps.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    M = M or f.M
    if n == 0:
        return AnnulusLift.identity(M, f.eps)
    s = 0.5 * f.eps if height is None else height
    limit = margin * f.eps

    def power(z):
        for _ in range(n):
            z = f.raw(z)
            if np.abs(z.imag).max() > limit:
                raise StripError("orbit escaped the strip")
        return z

    for _ in range(12):
        try:
            power(np.asarray(grid(65) + 1j * s))
            power(np.asarray(grid(65) - 1j * s))
            break
        except StripError:
            s *= 0.7
    else:
        raise StripError(f"f^{n} leaves the strip at all tried heights")
    coef, s, tail = _lift_of(power, M, s, f.is_real())
    return AnnulusLift(coef, s, f.tail * n + tail)
