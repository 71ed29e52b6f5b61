"""Reproducible experiment runners with dataclass configurations.

Each runner returns a JSON-ready dict of measurements and makes no pass/fail
decision; thresholds live with the callers (the acceptance tests and the
scripts).  Runners are deterministic: random inputs come from fixed seeds.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import cfrac, herman2d, linearize, renorm
from .annulus import TWO_PI, AnnulusLift, StripFunction, compose, grid, inverse

GAMMA = cfrac.GOLDEN


def canonical_json(obj) -> str:
    """Stable text form used for hashing results."""
    return json.dumps(obj, sort_keys=True, allow_nan=True)


@dataclass
class CFConfig:
    depth: int = 30


def run_cfrac(cfg: CFConfig = CFConfig()):
    e = cfrac.expand(GAMMA, cfg.depth)
    conv = cfrac.convergents(e)
    g = Fraction(GAMMA)
    gaps = [float(abs(g - Fraction(p, q)) * q * q) for p, q in conv]
    return {"terms": list(e.terms), "q": [q for _, q in conv], "scaled_gaps": gaps}


@dataclass
class CohomologicalConfig:
    samples: int = 50
    K: int = 32
    M: int = 32
    eps: float = 0.2
    seed: int = 2024


def random_zero_mean_field(rng, K, M, eps):
    """Real band-limited zero-mean field with strip norm drawn from [0.1, 1]."""
    modes = {}
    for k in range(1, K + 1):
        c = complex(*rng.normal(size=2)) * math.exp(-TWO_PI * k * eps)
        modes[k], modes[-k] = c, c.conjugate()
    v = StripFunction.from_modes(modes, M, eps)
    return v * (rng.uniform(0.1, 1.0) / v.norm())


def run_cohomological(cfg: CohomologicalConfig = CohomologicalConfig()):
    rng = np.random.default_rng(cfg.seed)
    residuals, norms = [], []
    for _ in range(cfg.samples):
        v = random_zero_mean_field(rng, cfg.K, cfg.M, cfg.eps)
        h = linearize.solve_cohomological(v, GAMMA)
        residuals.append(linearize.cohomological_residual(h, v, GAMMA))
        norms.append(v.norm())
    try:
        linearize.solve_cohomological(StripFunction.from_modes({0: 0.1, 1: 0.1}, cfg.M, cfg.eps), GAMMA)
        rejected = None
    except linearize.ObstructionError as exc:
        rejected = type(exc).__name__
    return {"residuals": residuals, "norms": norms, "nonzero_mean_error": rejected}


@dataclass
class RoundTripConfig:
    mode: int = 1
    sup: float = 0.01  # sup of h0 on the real circle
    M: int = 32
    eps: float = 0.2


def conjugated_rotation_map(cfg: RoundTripConfig, alpha=GAMMA):
    """(phi o R_alpha o phi^{-1}, phi) with phi = Id + (sup) cos(2 pi mode z)."""
    h0 = StripFunction.from_modes({cfg.mode: cfg.sup / 2, -cfg.mode: cfg.sup / 2}, cfg.M, cfg.eps)
    phi = AnnulusLift.identity(cfg.M, cfg.eps).plus(h0)
    return compose(compose(phi, AnnulusLift.rotation(alpha, cfg.M, cfg.eps)), inverse(phi)), phi


def run_round_trip(cfg: RoundTripConfig = RoundTripConfig()):
    f, phi = conjugated_rotation_map(cfg)
    ch = linearize.kam_linearize(f, GAMMA)
    # the chart is R_c o phi^{-1}; the rotation c is fixed by chart(0) = 0
    ref = inverse(phi)
    c = -ref.raw(0.0)
    x = grid(64) + 0.3j * ch.height
    err = float(np.abs(ch.phi.raw(x) - ref.raw(x) - c).max())
    return {"residual_half_height": linearize.chart_residual(ch.phi, f, GAMMA, f.eps / 2),
            "conjugacy_error": err, "height": ch.height, "iterations": ch.iterations}


@dataclass
class ArnoldConfig:
    a: float = 0.05
    eps: float = 0.2
    check_height: float = 0.1
    bracket: tuple = (0.55, 0.70)
    window: int = 3
    floor: float = 1e-13


def run_arnold(cfg: ArnoldConfig = ArnoldConfig()):
    sh = linearize.shoot_arnold(cfg.a, GAMMA, cfg.bracket, cfg.eps)
    ch = linearize.kam_linearize(sh.f_star, GAMMA)
    errs = [e for e in ch.errors if e > cfg.floor]
    tail = errs[-cfg.window:]
    return {"t_star": sh.t_star, "bracket_width": sh.bracket_width, "depth": sh.depth,
            "residual": linearize.chart_residual(ch.phi, sh.f_star, GAMMA, cfg.check_height),
            "errors": list(ch.errors), "exponent_window": tail,
            "exponent": linearize.convergence_exponent(tail, cfg.floor)}


@dataclass
class PairsConfig:
    levels: int = 6
    map: RoundTripConfig = field(default_factory=RoundTripConfig)


def run_pairs(cfg: PairsConfig = PairsConfig()):
    f, _ = conjugated_rotation_map(cfg.map)
    rows = renorm.pair_sequence(f, GAMMA, range(1, cfg.levels + 1))
    defects = [r[2] for r in rows]
    lam, C, r2 = renorm.fit_rate(defects)
    return {"defects": defects, "nonlinearity": [r[3] for r in rows],
            "scales": [r[1] for r in rows], "rate": lam, "constant": C, "r_squared": r2}


@dataclass
class SpectrumConfig:
    M: int = 16
    steps: int = 2
    fd_step: float = 1e-5
    M_check: int = 24
    eps: float = 0.2


def _mean_row(m: renorm.GalerkinMatrix):
    D, M = m.entries, m.M
    cols = [j for j in range(D.shape[1]) if j != M]
    return ([float(abs(D[M, j])) for j in cols],
            [float(np.linalg.norm(D[:, j])) for j in cols])


def run_spectrum(cfg: SpectrumConfig = SpectrumConfig()):
    m = renorm.galerkin_differential(GAMMA, cfg.M, cfg.fd_step, cfg.steps, cfg.eps)
    sp = renorm.spectrum(m)
    chk = renorm.spectrum(renorm.galerkin_differential(GAMMA, cfg.M_check, cfg.fd_step,
                                                      cfg.steps, cfg.eps))
    means, norms = _mean_row(m)
    return {"moduli": [float(abs(e)) for e in sp.eigenvalues],
            "unstable_count": sp.unstable_count, "angle": sp.angle_to_rotation,
            "second_modulus": sp.second_modulus,
            "check_moduli": [float(abs(e)) for e in chk.eigenvalues],
            "target": GAMMA ** -4, "mean_components": means, "column_norms": norms}


@dataclass
class ChartConfig:
    amp: float = 0.02
    single_modes: tuple = (1, 2, 3, 4)
    mixed: dict = field(default_factory=lambda: {1: 0.5, -1: 0.5, 2: 0.25j, -2: -0.25j})
    M: int = 64
    eps: float = 0.2


def run_chart(cfg: ChartConfig = ChartConfig()):
    dirs = [StripFunction.from_modes({k: 0.5, -k: 0.5}, cfg.M, cfg.eps) for k in cfg.single_modes]
    dirs.append(StripFunction.from_modes(cfg.mixed, cfg.M, cfg.eps))
    plus = linearize.stable_manifold_chart(dirs, cfg.amp, GAMMA)
    minus = linearize.stable_manifold_chart(dirs, -cfg.amp, GAMMA)
    return {"t_plus": [r[2] for r in plus], "t_minus": [r[2] for r in minus],
            "symmetric": [True] * len(cfg.single_modes) + [False], "amp": cfg.amp}


@dataclass
class HermanConfig:
    params: dict = field(default_factory=lambda: dict(herman2d.DEFAULTS))
    bracket: tuple = (0.55, 0.70)
    N: int = 4096
    modes: int = 24


def run_herman(cfg: HermanConfig = HermanConfig()):
    sh = herman2d.shoot2d(lambda t: herman2d.example_family(t, **cfg.params), GAMMA, cfg.bracket)
    cert = herman2d.certify_herman(sh.F, GAMMA, cfg.N, cfg.modes, rho=sh.rho)
    base = herman2d.certify_herman(herman2d.example_family(GAMMA, 0.0, 0.0, 0.0, 0.0), GAMMA,
                                   cfg.N, cfg.modes)
    return {"s_star": sh.s_star, "bracket_width": sh.bracket_width, "rho": sh.rho.value,
            "residual": cert.residual, "decay_rate": cert.decay_rate, "passes": cert.passes,
            "prefix": list(cert.prefix),
            "base_residual": base.residual, "base_decay": base.decay_rate,
            "base_Z_max": float(np.abs(base.Z).max()), "base_W_max": float(np.abs(base.W).max())}


RUNNERS = {1: run_cfrac, 2: run_cohomological, 3: run_round_trip, 4: run_arnold, 5: run_pairs,
           6: run_spectrum, 8: run_chart, 9: run_herman}
