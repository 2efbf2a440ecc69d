import numpy as np
import pytest
from scipy.linalg import expm

from adiabatic_pdm import (
    HamiltonianSchedule,
    Hold,
    LinearSweepLZ,
    MatrixSweep,
    ParameterPath,
    Ramp,
    StepPolicy,
    StepTooLargeError,
    build_lz_schedule,
    decompose,
    eigensystem,
    evolve,
    step_unitary,
)
from adiabatic_pdm.core import SIGMA_X, SIGMA_Z, AngleSweep, family_matrices
from adiabatic_pdm.propagator import step_edges
from adiabatic_pdm.scenarios import KET_1, bloch_vectors
from adiabatic_pdm.transition import eq1_residual


def test_step_unitary_zero():
    assert np.allclose(step_unitary(np.zeros((2, 2)), 0.3), np.eye(2))


def test_step_unitary_sigma_z_pi():
    assert np.allclose(step_unitary(SIGMA_Z, np.pi), -np.eye(2), atol=1e-15)


def test_step_unitary_x_rotation():
    H = family_matrices(LinearSweepLZ(0.5), 0.0)
    U = step_unitary(H, 1.0)
    assert np.allclose(U, expm(-1j * H), atol=1e-14)
    # rotation by 2 V dt = 1 rad about x: north pole goes to (0, -sin 1, cos 1)
    xyz = bloch_vectors(U @ np.array([1, 0]))[0]
    assert np.allclose(xyz, [0, -np.sin(1), np.cos(1)], atol=1e-14)


def test_step_unitary_dense_oracle():
    rng = np.random.default_rng(5)
    for n in (2, 3, 5):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        H = a + a.conj().T
        assert np.allclose(step_unitary(H, 0.37), expm(-0.37j * H), atol=1e-12)


def test_step_edges():
    e = step_edges(1.0, 0.3)
    assert np.allclose(e, [0, 0.3, 0.6, 0.9, 1.0])
    assert step_edges(0.9, 0.3)[-1] == 0.9
    assert np.allclose(step_edges(0.1, 0.3), [0, 0.1])


def test_hold_only_stationary():
    fam = LinearSweepLZ(0.5)
    sched = HamiltonianSchedule(ParameterPath((Hold(5.0),), 0.3), fam)
    frame = eigensystem(family_matrices(fam, 0.3))
    tr = evolve(sched, frame.vectors[:, 1], StepPolicy(dt=0.01))
    assert np.allclose(tr.populations[:, 1], 1.0, atol=1e-14)
    assert np.all(tr.P == 0)


def test_lz_adiabatic_following():
    tr = evolve(build_lz_schedule(0.5, -1.5, 1.5, 0.2), KET_1, StepPolicy(dt=1e-3))
    assert tr.final_band == 1
    assert tr.final_populations[1] == pytest.approx(0.95884, abs=1e-4)


def test_lz_fast_sweep_diabatic():
    speed = 10.0
    tr = evolve(build_lz_schedule(0.5, -1.5, 1.5, speed), KET_1, StepPolicy(dt=1e-4))
    p_up = tr.final_populations[1]
    # Landau-Zener: diabatic jump probability exp(-pi V^2 / speed) for an infinite sweep
    lz = 1 - np.exp(-np.pi * 0.25 / speed)
    assert p_up < 0.2
    assert p_up == pytest.approx(lz, abs=0.05)


def test_decompose_examples():
    f = eigensystem(family_matrices(LinearSweepLZ(1.0), 0.0))
    assert np.allclose(np.abs(decompose(f.vectors[:, 1], f)), [0, 1], atol=1e-15)
    assert np.allclose(np.abs(decompose([0, 1], f)) ** 2, [0.5, 0.5])
    g = eigensystem(family_matrices(AngleSweep(0.0, 0.0713), 0.0))
    assert np.allclose(np.abs(decompose([0, 1], g)), [0, 1])


def test_norm_and_population_conservation():
    tr = evolve(build_lz_schedule(0.5, -1.5, 1.5, 0.5), KET_1, StepPolicy(dt=2e-3))
    assert np.max(np.abs(np.linalg.norm(tr.states, axis=1) - 1)) <= 1e-9
    assert np.max(np.abs(tr.populations.sum(axis=1) - 1)) <= 1e-9


def test_second_order_convergence():
    sched = build_lz_schedule(0.5, -1.5, 1.5, 0.5)
    ref = evolve(sched, KET_1, StepPolicy(dt=2.5e-4)).states[-1]
    err = [np.linalg.norm(evolve(sched, KET_1, StepPolicy(dt=dt)).states[-1] - ref) for dt in (4e-2, 2e-2)]
    assert 3.5 <= err[0] / err[1] <= 4.5


def test_join_samples_duplicated():
    sched = HamiltonianSchedule(ParameterPath((Ramp(0.2, 1.0), Hold(0.5), Ramp(0.2, 1.0)), -0.1), LinearSweepLZ(0.5))
    tr = evolve(sched, KET_1, StepPolicy(dt=0.1))
    for t in (1.0, 1.5):
        assert np.count_nonzero(np.isclose(tr.times, t, rtol=0, atol=1e-12)) == 2
    assert np.all(tr.speeds[tr.segments == 1] == 0)
    assert np.all(np.diff(tr.times) >= 0)


def test_hold_exact():
    fam = LinearSweepLZ(0.5)
    sched = HamiltonianSchedule(ParameterPath((Hold(3.0),), 0.2), fam)
    psi0 = np.array([0.6, 0.8j])
    tr = evolve(sched, psi0, StepPolicy(dt=0.7))
    assert np.allclose(tr.states[-1], expm(-3j * family_matrices(fam, 0.2)) @ psi0, atol=1e-14)


def test_sampling_stride():
    sched = build_lz_schedule(0.5, -1.5, 1.5, 0.2)
    full = evolve(sched, KET_1, StepPolicy(dt=1e-3))
    thin = evolve(sched, KET_1, StepPolicy(dt=1e-3, samples_per_unit=10))
    assert len(thin) < len(full) / 50
    assert thin.times[-1] == full.times[-1]
    assert np.allclose(thin.states[-1], full.states[-1], atol=1e-14)


def test_multilevel_matrix_sweep():
    h0 = np.diag([-1.0, 0.0, 1.0])
    h1 = 0.3 * (np.eye(3, k=1) + np.eye(3, k=-1))
    sched = HamiltonianSchedule(ParameterPath((Ramp(0.5, 2.0),), 0.0), MatrixSweep(h0, h1))
    tr = evolve(sched, [0, 1, 0], StepPolicy(dt=1e-3))
    assert tr.dim == 3
    assert np.max(np.abs(tr.populations.sum(axis=1) - 1)) <= 1e-9
    assert np.max(np.abs(tr.P.real.sum(axis=1))) <= 1e-10
    assert eq1_residual(tr) <= 1e-5


def test_refinement_on_large_step():
    sched = build_lz_schedule(0.5, -1.5, 1.5, 0.2)
    with pytest.raises(StepTooLargeError):
        evolve(sched, KET_1, StepPolicy(dt=15.0, refine_on_error=False))
    tr = evolve(sched, KET_1, StepPolicy(dt=15.0))
    assert tr.dt == 7.5


def test_policy_validation():
    with pytest.raises(ValueError):
        StepPolicy(dt=0)
    with pytest.raises(ValueError):
        StepPolicy(tol=0.5)


def test_state_dimension_mismatch():
    with pytest.raises(ValueError):
        evolve(build_lz_schedule(0.5, -1, 1, 1), [1, 0, 0])


def test_sigma_x_exponential():
    assert np.allclose(step_unitary(SIGMA_X, np.pi / 2), -1j * SIGMA_X, atol=1e-15)
