import itertools

import numpy as np
import pytest
from scipy import sparse

from app.devices import make_device
from app.devices.params import GeneratorParams
from app.kernel.projections import LineHull, project_box_halfspace, project_convex_region_2d, project_ellipse
from app.kernel.qp import QpProblem, solve_qp
from app.utils.exceptions import InvalidParametersError, KktBreakdownError, QpError, QpNotConvergedError
from config.constants import QpStatus


def box_qp_by_active_sets(Q, q, lo, hi):
    """
    Minimize 1/2 x'Qx + q'x on a box by enumerating which bound (if any)
    each coordinate sits on.
    """
    n = q.size
    best_x, best_f = None, np.inf
    for states in itertools.product((-1, 0, 1), repeat=n):
        states = np.array(states)
        fixed = states != 0
        x = np.where(states < 0, lo, hi).astype(float)
        free = ~fixed
        if free.any():
            rhs = -(q[free] + Q[np.ix_(free, fixed)] @ x[fixed])
            x[free] = np.linalg.solve(Q[np.ix_(free, free)], rhs)
        if np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12):
            f = 0.5 * x @ Q @ x + q @ x
            if f < best_f:
                best_x, best_f = x, f
    return best_x


# solve_qp


def test_unconstrained_quadratic(rng):
    v = rng.normal(size=4)
    result = solve_qp(QpProblem(Q=np.eye(4), q=-v))
    assert result.converged
    assert np.allclose(result.x, v, atol=1e-8)


def test_active_box():
    n = 3
    result = solve_qp(QpProblem(Q=np.eye(n), q=-2.0 * np.ones(n), A=np.eye(n), lo=np.zeros(n), hi=np.ones(n)))
    assert result.converged
    assert np.allclose(result.x, 1.0, atol=1e-7)
    # duals satisfy Qx + q + A'duals = 0, positive on the active upper bounds
    assert np.allclose(result.duals, 1.0, atol=1e-6)


def test_diagonal_box_qp_is_clipping(rng):
    d = rng.uniform(0.5, 3.0, size=6)
    q = rng.normal(size=6) * 3
    lo, hi = -np.ones(6), np.ones(6)
    result = solve_qp(QpProblem(Q=np.diag(d), q=q, A=np.eye(6), lo=lo, hi=hi))
    assert np.allclose(result.x, np.clip(-q / d, lo, hi), atol=1e-7)


def test_random_box_qp_matches_active_set_enumeration(rng):
    for _ in range(3):
        M = rng.normal(size=(5, 5))
        Q = M @ M.T + 0.1 * np.eye(5)
        q = rng.normal(size=5) * 4
        lo, hi = -np.ones(5), np.ones(5)
        expected = box_qp_by_active_sets(Q, q, lo, hi)
        result = solve_qp(QpProblem(Q=Q, q=q, A=np.eye(5), lo=lo, hi=hi))
        assert np.allclose(result.x, expected, atol=1e-6)


def test_equality_constraint_and_duals():
    n = 4
    result = solve_qp(QpProblem(Q=np.eye(n), q=np.zeros(n), A=np.ones((1, n)), lo=[1.0], hi=[1.0]))
    assert np.allclose(result.x, 1.0 / n, atol=1e-8)
    assert result.duals[0] == pytest.approx(-1.0 / n, abs=1e-7)


def test_row_permutation_invariance(rng):
    n = 5
    M = rng.normal(size=(n, n))
    Q = M @ M.T + np.eye(n)
    q = rng.normal(size=n) * 5
    A = np.vstack([np.eye(n), np.ones((1, n)), rng.normal(size=(2, n))])
    lo = np.concatenate([-np.ones(n), [0.5], [-1.0, -1.0]])
    hi = np.concatenate([np.ones(n), [np.inf], [1.0, 1.0]])
    perm = rng.permutation(A.shape[0])
    first = solve_qp(QpProblem(Q=Q, q=q, A=A, lo=lo, hi=hi))
    second = solve_qp(QpProblem(Q=Q, q=q, A=A[perm], lo=lo[perm], hi=hi[perm]))
    assert np.allclose(first.x, second.x, atol=1e-7)


def test_sparse_and_dense_agree(rng):
    n = 6
    d = rng.uniform(1.0, 2.0, size=n)
    q = rng.normal(size=n)
    A = np.vstack([np.eye(n), np.ones((1, n))])
    lo = np.concatenate([np.zeros(n), [2.0]])
    hi = np.concatenate([np.ones(n), [2.0]])
    dense = solve_qp(QpProblem(Q=np.diag(d), q=q, A=A, lo=lo, hi=hi))
    sparse_result = solve_qp(QpProblem(Q=sparse.diags(d), q=q, A=sparse.csr_matrix(A), lo=lo, hi=hi))
    assert np.allclose(dense.x, sparse_result.x, atol=1e-7)


def test_infeasible_qp_is_reported():
    n = 2
    A = np.vstack([np.eye(n), np.ones((1, n))])
    result = solve_qp(QpProblem(
        Q=np.eye(n), q=np.zeros(n), A=A,
        lo=np.array([0.0, 0.0, 5.0]), hi=np.array([1.0, 1.0, np.inf]),
    ))
    assert result.status == QpStatus.PRIMAL_INFEASIBLE


def test_non_psd_q_is_rejected():
    with pytest.raises(QpError):
        solve_qp(QpProblem(Q=np.diag([1.0, -1.0]), q=np.zeros(2)))
    with pytest.raises(QpError):
        QpProblem(Q=np.eye(2), q=np.zeros(3))


@pytest.mark.parametrize("as_sparse", [False, True], ids=["dense", "sparse"])
def test_duplicate_equality_rows_without_curvature(as_sparse):
    """Repeated rows make the equality block rank deficient and Q = 0 gives no diagonal to lean on."""
    Q = np.zeros((2, 2))
    A = np.vstack([[1.0, 1.0], [1.0, 1.0], np.eye(2)])
    if as_sparse:
        Q, A = sparse.csr_matrix(Q), sparse.csr_matrix(A)
    result = solve_qp(QpProblem(Q=Q, q=[1.0, 2.0], A=A, lo=[1.0, 1.0, 0.0, 0.0], hi=[1.0, 1.0, 5.0, 5.0]))
    assert result.converged
    assert np.allclose(result.x, [1.0, 0.0], atol=1e-6)
    assert result.duals[0] + result.duals[1] == pytest.approx(-1.0, abs=1e-6)


class _BrokenKkt:
    def __init__(self, *args):
        pass

    def __call__(self, rhs):
        raise KktBreakdownError("singular at every level")


def test_kkt_breakdown_returns_the_best_iterate(monkeypatch):
    monkeypatch.setattr("app.kernel.qp.KktSolver", _BrokenKkt)
    result = solve_qp(QpProblem(Q=np.eye(2), q=[1.0, -1.0], A=np.eye(2), lo=[-1.0, -1.0], hi=[1.0, 1.0]))
    assert result.status == QpStatus.MAX_ITER
    assert result.iterations == 0
    assert np.all(np.isfinite(result.x))


def test_kkt_breakdown_surfaces_as_device_error(monkeypatch):
    """Alternating targets break the ramps, so the prox goes through the QP kernel."""
    monkeypatch.setattr("app.kernel.qp.KktSolver", _BrokenKkt)
    device = make_device(GeneratorParams(P_min=1.0, P_max=20.0, R_max=3.0, alpha=0.005, beta=0.2), 4)
    with pytest.raises(QpNotConvergedError):
        device.prox(np.array([[-20.0, 0.0, -20.0, 0.0]]), 1.0)


# project_box_halfspace


def test_box_halfspace_inactive():
    v = np.array([0.5, 0.9, 0.2])
    assert np.allclose(project_box_halfspace(v, 0.0, 1.0, 1.0), v)


def test_box_halfspace_symmetric_case():
    x = project_box_halfspace(np.zeros(4), np.zeros(4), np.ones(4), 2.0)
    assert np.allclose(x, 0.5, atol=1e-9)
    assert x.sum() >= 2.0


def test_box_halfspace_full_capacity():
    hi = np.array([1.0, 2.0, 0.5])
    assert np.allclose(project_box_halfspace(np.zeros(3), np.zeros(3), hi, hi.sum()), hi)


def test_box_halfspace_infeasible():
    with pytest.raises(InvalidParametersError):
        project_box_halfspace(np.zeros(3), np.zeros(3), np.ones(3), 4.0)


# Line hull projection


def test_segment_projection():
    hull = LineHull(cap=2.0)
    assert np.allclose(project_convex_region_2d(np.array([3.0, -1.0]), hull), [1.0, -1.0])


def test_ellipse_projection_lands_on_boundary(rng):
    axes = np.array([2.0, 5.0])
    w = rng.normal(size=(2, 20)) * 10
    x = project_ellipse(w, axes)
    level = np.sum(x ** 2 / axes[:, None] ** 2, axis=0)
    outside = np.sum(w ** 2 / axes[:, None] ** 2, axis=0) > 1
    assert np.allclose(level[outside], 1.0, atol=1e-8)
    assert np.allclose(x[:, ~outside], w[:, ~outside])


def test_hull_projection_is_idempotent_and_nonexpansive(rng):
    hull = LineHull(cap=20.0, g=2.5, b=12.5)
    v = rng.normal(size=(2, 50)) * 15
    w = rng.normal(size=(2, 50)) * 15
    pv = project_convex_region_2d(v, hull)
    pw = project_convex_region_2d(w, hull)
    assert np.allclose(project_convex_region_2d(pv, hull), pv, atol=1e-8)
    assert np.all(np.linalg.norm(pv - pw, axis=0) <= np.linalg.norm(v - w, axis=0) + 1e-8)


def test_hull_projection_vertex():
    """A point far beyond capacity along the chord maps to the hull vertex."""
    hull = LineHull(cap=20.0, g=2.5, b=12.5)
    p = project_convex_region_2d(np.array([31.0, -9.0]), hull)
    assert np.allclose(p, [11.0, -9.0], atol=1e-8)
