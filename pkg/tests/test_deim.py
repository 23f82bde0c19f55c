import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swrom import kernels
from swrom.deim import (
    DeimRom,
    build_deim_operator,
    collect_nonlinearity_snapshots,
    deim_select_points,
    make_deim_operator,
    reduced_rhs_deim,
    stencil_table,
)
from swrom.integrator import AvfConfig, integrate
from swrom.pod import PodBasis, PodRom, assemble_snapshots, build_reduced_operators, compute_pod_basis

from conftest import random_state


@pytest.fixture
def run(small_model, rng):
    z0 = random_state(rng, small_model.grid.N, amp=0.2)
    return integrate(small_model, z0, 40, AvfConfig(dt=0.02))


def test_greedy_points_hand_example():
    # p1 = argmax |(1, 2, 0)| = 1; residual of column 2 is (-0.5, 0, 3)
    U = np.array([[1.0, 0.0], [2.0, 1.0], [0.0, 3.0]])
    assert list(deim_select_points(U)) == [1, 2]


def test_ties_go_to_smallest_index():
    U = np.array([[0.5], [-0.5], [0.5]])
    assert list(deim_select_points(U)) == [0]
    assert list(deim_select_points(np.eye(4))) == [0, 1, 2, 3]


def test_rank_deficient_basis_raises():
    U = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(np.linalg.LinAlgError):
        deim_select_points(U)


@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_interpolation_exact_at_points(seed, m):
    rng = np.random.default_rng(seed)
    U = np.linalg.qr(rng.standard_normal((30, m)))[0]
    P = deim_select_points(U)
    assert len(set(P)) == m
    g = rng.standard_normal(30)
    approx = U @ np.linalg.solve(U[P], g[P])
    assert np.abs(approx[P] - g[P]).max() <= 1e-12 * max(1.0, np.abs(g).max())
    # anything in the span is reproduced everywhere
    f = U @ rng.standard_normal(m)
    assert np.allclose(U @ np.linalg.solve(U[P], f[P]), f, atol=1e-12)


def test_stencil_table_wraps():
    t = stencil_table(np.array([0, 11]), 3, 4)
    assert t[0].tolist() == [0, 4, 8, 1, 3]
    assert t[1].tolist() == [11, 3, 7, 8, 10]


def test_sampled_entries_match_full_rhs(run, small_model):
    b = compute_pod_basis(assemble_snapshots(run), n=6)
    G = collect_nonlinearity_snapshots(run, small_model)
    op = build_deim_operator(b, G, small_model, m=8)
    rom = DeimRom(op)
    zr = b.project(run.states[12])
    samples = rom.samples(rom.lift_gathered(zr))
    full = small_model.rhs(b.lift_vector(zr))
    N = b.N
    for i in range(3):
        assert np.allclose(samples[i], full[i * N : (i + 1) * N][op.points[i]], atol=1e-13)


def test_full_sampling_equals_pod_rhs(run, small_model):
    S = assemble_snapshots(run)
    b = compute_pod_basis(S, n=S.N)
    G = collect_nonlinearity_snapshots(run, small_model)
    op = build_deim_operator(b, G, small_model, m=b.N)
    pod = PodRom(build_reduced_operators(b, small_model))
    for k in (1, 20, 40):
        zr = b.project(run.states[k])
        assert np.abs(reduced_rhs_deim(op, b, zr) - pod.rhs(zr)).max() <= 1e-10


def test_projector_definition(run, small_model):
    b = compute_pod_basis(assemble_snapshots(run), n=4)
    G = collect_nonlinearity_snapshots(run, small_model)
    op = build_deim_operator(b, G, small_model, m=6)
    for W, U, P, V in zip(op.projectors, op.bases, op.points, b.modes):
        assert np.allclose(W, V.T @ U @ np.linalg.inv(U[P]), atol=1e-10)
    assert all(c >= 1.0 for c in op.conds)
    assert np.all(np.diff(op.gather) > 0)


def test_kappa_selection_and_errors(run, small_model):
    b = compute_pod_basis(assemble_snapshots(run), n=4)
    G = collect_nonlinearity_snapshots(run, small_model)
    op = build_deim_operator(b, G, small_model, kappa=1e-5)
    assert len(set(op.m)) == 1
    with pytest.raises(ValueError):
        build_deim_operator(b, G, small_model)
    with pytest.raises(ValueError):
        build_deim_operator(b, G, small_model, m=b.N + 1)
    with pytest.raises(ValueError):
        make_deim_operator(b, op.bases, small_model, points=[op.points[0][[0, 0]]] * 3)


def test_deim_run_tracks_galerkin(run, small_model):
    S = assemble_snapshots(run)
    b = compute_pod_basis(S, n=8)
    G = collect_nonlinearity_snapshots(run, small_model)
    op = build_deim_operator(b, G, small_model, m=20)
    rom = DeimRom(op)
    tr = integrate(rom, b.project(run.states[0]), 20, AvfConfig(dt=0.02))
    lifted = b.lift_many(tr.states)
    err = np.linalg.norm(lifted - run.states[:21]) / np.linalg.norm(run.states[:21])
    assert err < 1e-2


def test_deim_backends_agree(run, small_model):
    b = compute_pod_basis(assemble_snapshots(run), n=5)
    op = build_deim_operator(b, collect_nonlinearity_snapshots(run, small_model), small_model, m=9)
    rom = DeimRom(op)
    zg = rom.lift_gathered(b.project(run.states[3]))
    p, g = small_model.params, small_model.grid
    outs = []
    for table in (kernels.NUMPY_KERNELS, kernels.NUMBA_KERNELS):
        out = np.empty((3, 9))
        table["deim_samples"](zg, op.hb_g, rom._nbr, p.sx, p.sy, p.g_nd, p.oz, g.dx, g.dy, out, np.empty_like(zg))
        outs.append(out)
    assert np.allclose(outs[0], outs[1], rtol=1e-13, atol=1e-13)
