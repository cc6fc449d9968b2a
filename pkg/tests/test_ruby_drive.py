"""Variational drive construction and counterdiabatic detuning sweeps."""

import numpy as np
import pytest

from lakes.errors import TooDeep
from lakes.ruby import (AlphaTable, DriveOperator, agp_terms, build_alpha_table,
                        cd_sweep, lambda_f_tune, optimize_alphas, sweep_library)

# trace-action optimum of the one-term full-family ansatz at detuning 1.3,
# frozen from an independent dense eigenbasis evaluation
ALPHA_1_AT_1P3 = 0.18179865891091124


def test_agp_terms_validation(ruby22):
    ops = ruby22[3]
    with pytest.raises(ValueError):
        agp_terms(ops, 0, "full", delta=0.0)
    with pytest.raises(TooDeep):
        agp_terms(ops, 7, "full", delta=0.0)
    with pytest.raises(ValueError):
        agp_terms(ops, 1, "full")            # full family needs the detuning
    with pytest.raises(ValueError):
        agp_terms(ops, 1, "diagonal")


def test_terms_are_hermitian_and_detuning_sensitive(ruby22):
    ops = ruby22[3]
    full = agp_terms(ops, 2, "full", delta=1.0)
    restricted = agp_terms(ops, 2, "restricted")
    for t in full + restricted:
        assert abs(t.matrix - t.matrix.conj().T).max() < 1e-12
    assert abs(full[1].matrix - restricted[1].matrix).max() > 1e-3


def test_frozen_first_order_optimum(ruby22):
    ops = ruby22[3]
    terms = agp_terms(ops, 1, "full", delta=1.3)
    alphas, info = optimize_alphas(terms, ops.hamiltonian(1.3), ops.d_delta())
    assert alphas[0] == pytest.approx(ALPHA_1_AT_1P3, rel=1e-10)
    assert info["rank"] == 1


def test_families_agree_at_zero_detuning(ruby22):
    # at zero detuning H is proportional to PXP, so both nesting families
    # span the same operators and the optimized drives coincide
    ops = ruby22[3]
    H, dH = ops.hamiltonian(0.0), ops.d_delta()
    drives = []
    for family in ("full", "restricted"):
        kw = {"delta": 0.0} if family == "full" else {}
        terms = agp_terms(ops, 2, family, **kw)
        alphas, _ = optimize_alphas(terms, H, dH)
        drives.append(sum(a * t.matrix for a, t in zip(alphas, terms)))
    assert abs((drives[0] - drives[1]).toarray()).max() < 1e-12


def test_alpha_table_interpolates_its_grid(ruby22):
    ops = ruby22[3]
    table = build_alpha_table(1, "full", delta_span=(1.0, 2.0), n_points=5)
    assert isinstance(table, AlphaTable)
    d = table.delta_grid[2]
    terms = agp_terms(ops, 1, "full", delta=d)
    alphas, _ = optimize_alphas(terms, ops.hamiltonian(d), ops.d_delta())
    assert table(d)[0] == pytest.approx(alphas[0], rel=1e-12)
    # linear interpolation between neighbouring grid points
    mid = 0.5 * (table.delta_grid[1] + table.delta_grid[2])
    expect = 0.5 * (table.values[1, 0] + table.values[2, 0])
    assert table(mid)[0] == pytest.approx(expect, rel=1e-12)


def test_drive_operator_polynomial_fit_is_exact(ruby22):
    # full-family term k is a polynomial of degree 2k-2 in the detuning, so
    # the Chebyshev-node fit must reproduce it exactly at any detuning
    ops = ruby22[3]
    table = build_alpha_table(2, "full", delta_span=(-5.0, 5.0), n_points=3)
    drive = DriveOperator(ops, table, lambda_f=1.0)
    for d in (0.0, 0.7, -3.2):
        direct = agp_terms(ops, 2, "full", delta=d)
        for k in range(2):
            diff = abs((drive.term_matrix(k, d) - direct[k].matrix)).max()
            assert diff < 1e-9


def test_counterdiabatic_sweep_beats_plain_sweep():
    plain = cd_sweep((2, 2), ell=0, total_time=2.0)
    driven = cd_sweep((2, 2), ell=1, total_time=2.0, lambda_f=1.348)
    assert driven["rvb_overlap"] > plain["rvb_overlap"] + 0.05
    for key in ("rvb_overlap", "ground_overlap", "g_avg", "w_avg",
                "w_tilde", "n_density", "E_final_gs", "E_start_gs"):
        assert key in plain
    assert 0.0 <= plain["rvb_overlap"] <= 1.0


def test_sweep_starts_from_the_detuned_ground_state():
    res = cd_sweep((2, 2), ell=0, total_time=0.5)
    # at delta = -5 omega the ground state is the near-empty vacuum
    psi0 = res["initial_state"]
    assert abs(psi0.amplitudes[0]) ** 2 > 0.8


def test_lambda_f_tuning_brackets_an_interior_optimum():
    table = build_alpha_table(1, "full", n_points=11)
    lam = lambda_f_tune((2, 2), ell=1, total_time=0.5, bounds=(0.5, 3.0),
                        tol=0.5, alpha_table=table)
    assert 0.5 < lam < 3.0


def test_sweep_library_grid():
    lib = sweep_library((2, 2), [0.5, 1.0])
    assert [T for T, _ in lib] == [0.5, 1.0]
    assert all(abs(np.linalg.norm(s.amplitudes) - 1.0) < 1e-9 for _, s in lib)
