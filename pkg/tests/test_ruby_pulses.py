"""Pulse-cycle drives, their effective Hamiltonian, and sweep matching."""

import numpy as np
import pytest
import scipy.linalg

import lakes.ruby.pulses as pulses
from lakes.errors import EmptyLibrary, OptimizerStall
from lakes.linalg import StateVector, ground_state, overlap_per_site
from lakes.ruby import (PulseSequence, apply_sequence, best_matching_sweep,
                        effective_hamiltonian, heuristic_xy, lake_metrics,
                        optimize_pulse_sequence, pulse_cycle, pulse_run,
                        rvb_state)


def random_state(ops, rng):
    amps = rng.standard_normal(ops.tag.dim) + 1j * rng.standard_normal(ops.tag.dim)
    return StateVector(amps / np.linalg.norm(amps), ops.tag)


def test_cycle_wall_clock_time():
    seq = PulseSequence(cycles=((0.2, -0.02), (0.1, 0.05)))
    # each exponent costs 2|angle|/omega and a cycle spends (x, y, 2x, y, x)
    assert seq.total_time(omega=1.0) == pytest.approx(
        (4 * 0.2 + 2 * 0.02) * 2 + (4 * 0.1 + 2 * 0.05) * 2)
    assert seq.total_time(omega=2.0) == pytest.approx(seq.total_time() / 2.0)


def test_cycle_with_zero_y_is_the_identity(ruby22, rng):
    ops = ruby22[3]
    psi = random_state(ops, rng)
    out = pulse_cycle(ops, 0.37, 0.0)(psi.amplitudes)
    assert np.linalg.norm(out - psi.amplitudes) < 1e-10


def test_sequence_application_is_unitary(ruby22, rng):
    ops = ruby22[3]
    psi = random_state(ops, rng)
    seq = PulseSequence(cycles=((0.2, -0.02), (0.15, 0.03)))
    out = apply_sequence(ops, seq, psi)
    assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-10


def test_effective_hamiltonian_residual_is_second_order_in_y(ruby22, rng):
    ops = ruby22[3]
    psi = random_state(ops, rng).amplitudes
    x = 0.21
    errs = []
    for y in (2e-2, 1e-2):
        exact = pulse_cycle(ops, x, y)(psi)
        approx = scipy.linalg.expm(-1j * effective_hamiltonian(ops, x, y)) @ psi
        errs.append(np.linalg.norm(exact - approx))
    exponent = np.log2(errs[0] / errs[1])
    assert exponent == pytest.approx(2.0, abs=0.2)


def test_heuristic_angles_are_frozen():
    x0, y0 = heuristic_xy()
    assert x0 == pytest.approx(0.2097154058526755, rel=1e-9)
    assert y0 == -2e-2


def test_zero_cycle_optimization_returns_the_baseline():
    seq, info = optimize_pulse_sequence((2, 2), 0)
    assert seq.n_c == 0
    assert info["objective"] == pytest.approx(info.get("baseline", info["objective"]))


def test_single_cycle_optimization_improves_dimer_density():
    seq, info = optimize_pulse_sequence((2, 2), 1, restarts=1, maxiter=80)
    assert seq.n_c == 1
    assert info["objective"] > info["baseline"]


def test_optimizer_stall_carries_the_best_sequence(monkeypatch):
    monkeypatch.setattr(pulses, "_dimer_density", lambda ops, psi: 0.5)
    with pytest.raises(OptimizerStall) as err:
        optimize_pulse_sequence((2, 2), 1, restarts=1, maxiter=5)
    seq, info = err.value.best
    assert seq.n_c == 1 and info["objective"] == 0.5


def test_pulse_run_reports_wall_clock_time():
    seq = PulseSequence(cycles=((0.21, -0.02),))
    out = pulse_run((2, 2), seq)
    assert out["total_time"] == pytest.approx(seq.total_time())
    assert 0.0 <= out["rvb_overlap"] <= 1.0


def test_best_matching_sweep_prefers_the_shortest_tie(ruby22, rng):
    ops = ruby22[3]
    phi = random_state(ops, rng)
    with pytest.raises(EmptyLibrary):
        best_matching_sweep(phi, [])
    T, ov = best_matching_sweep(phi, [(2.0, phi), (1.0, phi)])
    assert T == 1.0 and ov == pytest.approx(1.0)
    other = random_state(ops, rng)
    T, ov = best_matching_sweep(phi, [(1.0, other), (3.0, phi)])
    assert T == 3.0


def test_lake_metrics_fixed_points(ruby22):
    lat, _, _, ops = ruby22
    amps = np.zeros(ops.tag.dim, complex)
    amps[0] = 1.0                        # the empty configuration
    empty = lake_metrics(StateVector(amps, ops.tag), ops, lat)
    # every vertex hosts an e defect, so defects sit one lattice constant apart
    assert empty["n_e"] == pytest.approx(1.0)
    assert empty["l_e"] == pytest.approx(2.0 * lat.a)
    rvb = lake_metrics(rvb_state(ops), ops, lat)
    assert rvb["epsilon"] == pytest.approx(0.0, abs=1e-12)
    assert rvb["d_min"] == pytest.approx(np.sqrt(lat.n_sites))


def test_lake_size_shrinks_with_defect_density(ruby22):
    lat, _, _, ops = ruby22
    _, psi0 = ground_state(ops.hamiltonian(-5.0))
    _, psi1 = ground_state(ops.hamiltonian(5.0))
    m0 = lake_metrics(psi0, ops, lat)
    m1 = lake_metrics(psi1, ops, lat)
    assert m1["epsilon"] < m0["epsilon"]
    assert m1["l_lake"] > m0["l_lake"]
