import itertools

import numpy as np
import pytest

from helpers import (
    Z,
    computational_propagator,
    exchange_model,
    random_conserving_model,
    strong_coupling_model,
    xy3_model,
)
from qpump import linalg
from qpump.errors import InvalidModelError
from qpump.model import PumpModel, embedded_hamiltonians, gibbs_initial_state, product_eigenbasis
from qpump.otm import (
    conditional_energies,
    conditional_partition,
    conditional_thermal_state,
    otm_heat_distribution,
    otm_report,
)
from qpump.ttm import ttm_report

# exchange model omega=1, g=0.5, tau=1, beta=(1, 2), 30-digit analytic values
EXCHANGE_TILDE_Q1 = 1.4161468365471423869975682295  # level (E1, E2) = (-omega, +omega)
EXCHANGE_FT = 0.960791940123247507588265800909
EXCHANGE_REL_ENTROPY = 0.0399973969659039447829293509876


def brute_force_conditional(model):
    """tilde_E_j per computational level via scipy expm (diagonal local H only)."""
    u = computational_propagator(model)
    hs = embedded_hamiltonians(model)
    out = []
    for a in range(model.total_dim):
        psi = u[:, a]
        out.append([np.vdot(psi, h @ psi).real for h in hs])
    return np.array(out)


def test_zero_interaction_no_conditional_heat():
    m = PumpModel.create([2, 2], [Z, 0.3 * Z], [1.0, 2.0], None, 1.5)
    assert np.all(np.abs(conditional_energies(m).tilde_q) <= 1e-15)


def test_tau_zero_no_conditional_heat():
    assert np.all(conditional_energies(exchange_model(tau=0.0)).tilde_q == 0)


def test_exchange_conditional_heat_oracle():
    cond = conditional_energies(exchange_model())
    basis = product_eigenbasis(exchange_model())
    level = [tuple(e) for e in basis.energies].index((-1.0, 1.0))
    assert cond.tilde_q[level, 0] == pytest.approx(EXCHANGE_TILDE_Q1, abs=1e-13)
    assert cond.tilde_q[level, 1] == pytest.approx(-EXCHANGE_TILDE_Q1, abs=1e-13)


def test_xy3_conditional_energies_against_expm():
    m = xy3_model(0.9)
    cond = conditional_energies(m)
    # computational index c has qubit j in |bit_j>, energy +omega for bit 0;
    # product levels run over ascending energies, i.e. the bit-flipped order
    expected = brute_force_conditional(m)
    for k, bits in enumerate(itertools.product((1, 0), repeat=3)):
        c = int("".join(map(str, bits)), 2)
        assert cond.tilde_e[k] == pytest.approx(expected[c], abs=1e-12)


def test_otm_distribution_zero_interaction():
    m = PumpModel.create([2, 2], [Z, Z], [1.0, 2.0], None, 1.0)
    dist = otm_heat_distribution(m)
    assert len(dist) == 1 and dist.p[0] == pytest.approx(1.0, abs=1e-15)


def test_otm_probabilities_are_gibbs_weights():
    # without merging every atom is one level, weighted by its Gibbs weight alone
    m = xy3_model(1.1)
    dist = otm_heat_distribution(m, merge_tol=-1.0)
    basis = product_eigenbasis(m)
    g = gibbs_initial_state(m)
    w = np.exp(-(basis.energies @ np.array(m.beta))) / g.z_total
    assert len(dist) == 8
    assert sorted(dist.p) == pytest.approx(sorted(w), abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_otm_average_matches_trace_formula(seed):
    m = random_conserving_model(np.random.default_rng(seed))
    dist = otm_heat_distribution(m)
    r = ttm_report(m)
    assert np.max(np.abs(dist.mean() - r.avg_heat_trace)) <= 1e-9


def test_conditional_partition_zero_interaction():
    m = PumpModel.create([2, 2], [Z, 0.5 * Z], [1.0, 2.0], None, 1.0)
    assert conditional_partition(m) == pytest.approx(gibbs_initial_state(m).z_total, rel=1e-14)


def test_exchange_partition_and_relative_entropy_oracle():
    m = exchange_model()
    r = otm_report(m)
    assert conditional_partition(m) / gibbs_initial_state(m).z_total == pytest.approx(EXCHANGE_FT, abs=1e-14)
    assert r.ft_value == pytest.approx(EXCHANGE_FT, abs=1e-14)
    assert r.rel_entropy == pytest.approx(EXCHANGE_REL_ENTROPY, abs=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_ft_two_paths(seed):
    m = random_conserving_model(np.random.default_rng(seed))
    dist = otm_heat_distribution(m)
    ratio = conditional_partition(m) / gibbs_initial_state(m).z_total
    assert dist.exp_average(m.beta) == pytest.approx(ratio, abs=1e-10)


def test_xy3_partition_matches_relative_entropy():
    m = xy3_model(1.0)
    r = otm_report(m)
    z = gibbs_initial_state(m).z_total
    assert conditional_partition(m) == pytest.approx(np.exp(-r.rel_entropy) * z, rel=1e-9)


def test_conditional_thermal_state_zero_interaction():
    m = PumpModel.create([2, 2], [Z, Z], [1.0, 2.0], None, 1.0)
    assert np.max(np.abs(conditional_thermal_state(m) - gibbs_initial_state(m).rho)) <= 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_conditional_thermal_state_spectrum(seed):
    m = random_conserving_model(np.random.default_rng(seed))
    rho = conditional_thermal_state(m)
    cond = conditional_energies(m)
    w = np.exp(-(cond.tilde_e @ np.array(m.beta)))
    w /= w.sum()
    assert abs(np.trace(rho) - 1) <= 1e-12
    assert np.sort(np.linalg.eigvalsh(rho)) == pytest.approx(np.sort(w), abs=1e-13)


@pytest.mark.parametrize("seed", range(4))
def test_conditional_thermal_state_entropy_identity(seed):
    m = random_conserving_model(np.random.default_rng(seed))
    rho = conditional_thermal_state(m)
    hs = embedded_hamiltonians(m)
    rhs = sum(b * np.trace(rho @ h).real for b, h in zip(m.beta, hs)) + np.log(conditional_partition(m))
    assert linalg.von_neumann_entropy(rho) == pytest.approx(rhs, abs=1e-9)


def test_otm_report_zero_interaction():
    m = PumpModel.create([2, 2, 2], [Z] * 3, [1.0, 2.0, 3.0], None, 1.0)
    r = otm_report(m)
    assert r.ft_value == pytest.approx(1.0, abs=1e-15)
    assert r.rel_entropy == pytest.approx(0.0, abs=1e-14)
    assert r.mutual_info == pytest.approx(0.0, abs=1e-14)
    assert r.delta == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_otm_report_invariants(seed):
    m = random_conserving_model(np.random.default_rng(seed))
    r = otm_report(m)
    failed = [c.name for c in r.checks() if not c.passed]
    assert not failed
    assert 0 < r.ft_value <= 1 + 1e-12
    assert r.ft_value == pytest.approx(np.exp(-r.rel_entropy), abs=1e-9)
    assert abs(r.rel_entropy - r.mutual_info - r.gamma_rel_entropy) <= 1e-9
    assert r.entropy_production >= r.rel_entropy - 1e-9 >= r.mutual_info - 2e-9


@pytest.mark.parametrize("seed", range(6))
def test_ttm_otm_first_moments_agree(seed):
    m = random_conserving_model(np.random.default_rng(seed))
    assert np.max(np.abs(ttm_report(m).avg_heat - otm_report(m).avg_heat)) <= 1e-9


def test_jensen_direction():
    r = otm_report(xy3_model(2.0))
    assert r.ft_value >= np.exp(-r.entropy_production) * (1 - 1e-12)


def test_strong_coupling_level_conservation():
    m = strong_coupling_model(np.random.default_rng(11))
    v = np.linalg.norm(m.segments[0].matrix)
    h = np.linalg.norm(sum(embedded_hamiltonians(m)))
    assert v >= 10 * h
    assert conditional_energies(m).conservation_defect() <= 1e-9


def test_otm_rejects_nonconserving_even_in_warn_mode():
    from helpers import random_nonconserving_model

    with pytest.raises(InvalidModelError):
        otm_report(random_nonconserving_model(np.random.default_rng(0)))


@pytest.mark.parametrize("omega", [0.0, 0.5, 3.0, 8.0, 12.0])
def test_xy3_sweep_points_delta_nonnegative(omega):
    r = otm_report(xy3_model(omega))
    assert r.delta >= -1e-9
    assert r.rel_entropy >= -1e-12
