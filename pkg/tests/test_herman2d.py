import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from oracles import conjugated_rotation
from renormlab import herman2d, linearize
from renormlab.annulus import AnnulusLift, StripFunction
from renormlab.circle import orbit, rotation_number
from renormlab.herman2d import (attractor_orbit, canonicalize, certify_herman, embed,
                                example_family, rotation_number_2d, shoot2d)
from renormlab.linearize import NoCrossing, fourier_fit

GAMMA = (math.sqrt(5) - 1) / 2


def base_family(t):
    return example_family(t, a=0.0, c=0.0, d=0.0, e=0.0)


@pytest.fixture(scope="module")
def default_shot():
    return shoot2d(example_family, GAMMA, (0.55, 0.70))


@pytest.fixture(scope="module")
def default_cert(default_shot):
    return certify_herman(default_shot.F, GAMMA, rho=default_shot.rho)


@pytest.fixture(scope="module")
def arnold_star():
    return linearize.shoot_arnold(0.05, GAMMA).f_star


# ------------------------------------------------------------------ maps

def test_base_family_is_rotation_times_zero():
    F = base_family(GAMMA)
    z = np.array([0.1, 0.37 + 0.05j])
    w = np.array([0.02, -0.1j])
    fz, fw = F(z, w)
    assert fz == pytest.approx(z + GAMMA, abs=1e-16)
    assert np.all(fw == 0)
    assert F.dissipation() == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(-0.19, 0.19), st.floats(-0.13, 0.13), st.floats(-0.13, 0.13),
       st.integers(-3, 3))
def test_cylinder_equivariance(x, y, u, v, n):
    F = example_family(0.6)
    z, w = complex(x, y), complex(u, v)
    fz, fw = F(z, w)
    gz, gw = F(z + n, w)
    assert gz == pytest.approx(fz + n, abs=1e-12)
    assert gw == pytest.approx(fw, abs=1e-12)


def test_default_family_is_dissipative():
    F = example_family(GAMMA)
    assert F.dissipation() == pytest.approx(0.2)
    assert F.dissipation() < 1.0


@pytest.mark.parametrize("kw", [{"d": 1.0}, {"d": -1.2}, {"a": 1.0}, {"a": -0.1}])
def test_family_parameter_bounds(kw):
    with pytest.raises(ValueError):
        example_family(0.6, **kw)


def test_embed_rotation():
    F = embed(AnnulusLift.rotation(GAMMA, 8))
    z, w = np.array([0.1 + 0.02j, 0.9]), np.array([0.05, -0.1j])
    fz, fw = F(z, w)
    assert fz == pytest.approx(z + GAMMA, abs=1e-15)
    assert fw == pytest.approx(z + GAMMA, abs=1e-15)


def test_embed_orbit_projects_to_circle_orbit(arnold_star):
    F = embed(arnold_star)
    orb = attractor_orbit(F, burn_in=0, N=200)
    one = orbit(arnold_star, 0.0, 200)
    assert orb.escaped_at is None
    assert np.abs(orb.z - one.points[:200]).max() <= 1e-12
    assert np.abs(orb.w[1:] - orb.z[1:]).max() <= 1e-12


def test_embed_preserves_rotation_number(arnold_star):
    r2 = rotation_number_2d(embed(arnold_star), burn_in=0)
    r1 = rotation_number(arnold_star)
    assert abs(r2.value - r1.value) <= 1e-12


def test_map_json():
    d = json.loads(json.dumps(example_family(0.6).to_json()))
    assert d["q_slope"] == 0.0
    assert d["params"]["t"] == 0.6
    assert [1, 0, 0.0, -0.1 / (4 * math.pi)] in d["Q"]


# ---------------------------------------------------------------- orbits

def test_base_family_attractor_is_circle():
    F = example_family(GAMMA, a=0.0, c=0.0, d=0.5, e=0.0)
    orb = attractor_orbit(F, (0.0, 0.1), burn_in=0, N=8)
    assert orb.w == pytest.approx(0.1 * 0.5 ** np.arange(8))
    orb = attractor_orbit(F, (0.0, 0.1))
    assert orb.w_amplitude < 1e-300
    assert orb.classification == "quasi-periodic"


def test_default_attractor_bounded():
    orb = attractor_orbit(example_family(0.618))
    scale = 0.1 / (2 * math.pi) / (1 - 0.2)
    assert orb.escaped_at is None
    assert 0.25 * scale <= orb.w_amplitude <= 4 * scale
    assert orb.classification == "quasi-periodic"


def test_resonance_is_classified_not_raised():
    orb = attractor_orbit(example_family(0.005))
    assert orb.classification == "fixed-point"
    assert orb.escaped_at is None


def test_escape_is_reported():
    orb = attractor_orbit(example_family(0.618, e=3.0))
    assert orb.classification == "escaped"
    assert orb.escaped_at is not None
    with pytest.raises(ValueError):
        rotation_number_2d(example_family(0.618, e=3.0))


def test_start_outside_domain():
    with pytest.raises(ValueError):
        attractor_orbit(example_family(0.6), start=(0.0, 0.5))


def test_w_amplitude_stable_under_doubling(default_shot):
    a = attractor_orbit(default_shot.F, N=4096).w_amplitude
    b = attractor_orbit(default_shot.F, N=8192).w_amplitude
    assert abs(a - b) <= 1e-5 * b


# ------------------------------------------------------------- rotation

def test_rotation_base_family():
    r = rotation_number_2d(base_family(GAMMA))
    assert abs(r.value - GAMMA) <= 1e-13


def test_shoot_base_slice():
    sh = shoot2d(base_family, GAMMA, (0.55, 0.70))
    assert abs(sh.s_star - GAMMA) <= 1e-10
    assert sh.bracket_width <= 1e-10


def test_shoot_default_matches_grid_oracle(default_shot):
    adv = oracles.family2d_advance()
    cell = oracles.coarse_grid_crossing(adv, (0.55, 0.70))
    lo, hi = oracles.shoot_oracle(adv, cell, q_min=30_000)
    assert hi - lo <= 1e-8
    assert lo - 1e-8 <= default_shot.s_star <= hi + 1e-8
    assert default_shot.bracket_width <= 1e-10
    assert abs(default_shot.rho.value - GAMMA) <= 1e-10


def test_shoot_a_slice_has_no_crossing():
    with pytest.raises(NoCrossing):
        shoot2d(lambda s: example_family(0.3, a=s), GAMMA, (0.0, 0.5))


def test_shoot_rejects_rational_target():
    with pytest.raises(ValueError):
        shoot2d(example_family, 0.5, (0.55, 0.70))


# ---------------------------------------------------------- certificates

def test_certificate_base_family():
    cert = certify_herman(base_family(GAMMA), GAMMA)
    assert cert.residual <= 1e-14
    assert np.abs(cert.Z).max() <= 1e-14
    assert np.abs(cert.W).max() == 0.0
    assert cert.decay_rate == 0.0
    assert cert.passes


def test_certificate_default_family(default_cert):
    assert default_cert.residual <= 1e-6
    assert default_cert.decay_rate < 0.9
    assert default_cert.passes
    assert len(default_cert.prefix) >= 20
    assert set(default_cert.prefix) == {1}


def test_certificate_rejects_wrong_rotation(default_shot):
    cert = certify_herman(default_shot.F, GAMMA + 1e-3, rho=default_shot.rho)
    assert not cert.passes
    assert cert.residual > 1e-6


def test_certificate_embedded_constructed_conjugacy():
    h0 = StripFunction.from_modes({1: 0.004, -1: 0.004, 2: 0.001j, -2: -0.001j}, 16)
    f, _ = conjugated_rotation(h0)
    cert = certify_herman(embed(f), GAMMA, modes=16)
    # canonical Z - theta is the zero-mean conjugacy displacement itself
    assert np.abs(cert.Z - h0.coef).max() <= 1e-7
    assert np.abs(cert.W - cert.Z).max() <= 1e-12
    assert cert.passes


def test_certificate_diagonal_reduction(arnold_star):
    cert = certify_herman(embed(arnold_star), GAMMA, N=1000, modes=16, burn_in=0)
    fit = linearize.conjugacy_from_orbit(arnold_star, GAMMA, 1000, 16)
    Z, _ = canonicalize(fit.psi.resized(16).coef, fit.psi.resized(16).coef, 1.0)
    assert np.abs(cert.Z - Z).max() <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(-2.0, 2.0))
def test_canonicalization_removes_reparametrization(c):
    rng = np.random.default_rng(3)
    m = 6
    k = np.arange(-m, m + 1)
    Z = (rng.normal(size=2 * m + 1) + 1j * rng.normal(size=2 * m + 1)) * 0.5 ** np.abs(k)
    W = (rng.normal(size=2 * m + 1) + 1j * rng.normal(size=2 * m + 1)) * 0.5 ** np.abs(k)
    Z0, W0 = canonicalize(Z, W, 0.3)
    # theta -> theta + c: coefficients pick up e^{2 pi i k c}, the linear parts shift the means
    rot = np.exp(2j * np.pi * k * c)
    Zc, Wc = Z0 * rot, W0 * rot
    Zc[m] += c
    Wc[m] += 0.3 * c
    Z1, W1 = canonicalize(Zc, Wc, 0.3)
    assert np.abs(Z1 - Z0).max() <= 1e-12
    assert np.abs(W1 - W0).max() <= 1e-12


def test_certificate_unique_after_canonicalization(default_shot, default_cert):
    orb = attractor_orbit(default_shot.F, N=777)
    other = certify_herman(default_shot.F, GAMMA, start=(orb.z[-1].real % 1.0, orb.w[-1]),
                           rho=default_shot.rho)
    assert np.abs(other.Z - default_cert.Z).max() <= 1e-8
    assert np.abs(other.W - default_cert.W).max() <= 1e-8


def test_certificate_curve_is_invariant(default_shot, default_cert):
    F, cert = default_shot.F, default_cert
    theta = np.arange(2048) * GAMMA
    fz, fw = F(*cert.psi(theta))
    m = (len(cert.Z) - 1) // 2
    Z, _ = fourier_fit(theta + GAMMA, fz - (theta + GAMMA), m)
    W, _ = fourier_fit(theta + GAMMA, fw, m)
    Z, W = canonicalize(Z, W)
    assert np.abs(Z - cert.Z).max() <= 10 * cert.residual
    assert np.abs(W - cert.W).max() <= 10 * cert.residual


def test_certificate_json(default_cert):
    d = json.loads(json.dumps(default_cert.to_json()))
    assert d["passes"] is True
    assert len(d["Z"]) == len(default_cert.Z)
    assert d["prefix_depth"] == len(default_cert.prefix)


# ------------------------------------------------------------- interfaces

def test_family_config(tmp_path):
    path = tmp_path / "family.json"
    path.write_text(json.dumps({"family": "example", "params": {"c": 0.4},
                                "slice": {"param": "t", "bracket": [0.5, 0.7]},
                                "alpha": "silver"}))
    family, bracket, token = herman2d.load_family_config(path)
    assert bracket == (0.5, 0.7)
    assert token == "silver"
    F = family(0.61)
    assert F.params["c"] == 0.4 and F.params["t"] == 0.61


@pytest.mark.parametrize("cfg", [{"family": "henon"}, {"slice": {"param": "zz", "bracket": [0, 1]}}])
def test_family_config_errors(cfg):
    with pytest.raises(ValueError):
        herman2d.family_from_config(cfg)


def test_attractor_csv(tmp_path):
    orb = attractor_orbit(example_family(0.618), N=16)
    path = tmp_path / "orbit.csv"
    herman2d.write_attractor_csv(path, orb)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 16
    assert float(rows[3]["re_w"]) == orb.w[3].real
