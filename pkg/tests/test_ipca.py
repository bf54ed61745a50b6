import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from latentdd.errors import DegenerateRank, DimMismatch
from latentdd.ipca import (IpcaConfig, IterativePCA, complement_reconstruct,
                           evr_report, fit_ipca, load_projector,
                           pinv_reconstruct, project, save_projector, total_evr)


def standardized(rng, n, p, scales=None):
    X = rng.normal(size=(n, p)) * (scales if scales is not None else np.linspace(3, 0.5, p))
    X -= X.mean(axis=0)
    return X / X.std(axis=0, ddof=1)


@pytest.fixture
def X20():
    return standardized(np.random.default_rng(0), 20, 6, np.array([5, 3, 2, 1, .5, .2]))


def test_config_validation():
    with pytest.raises(ValueError):
        IpcaConfig(target_dim=0)
    with pytest.raises(ValueError):
        IpcaConfig(evr_floor=0.0)
    with pytest.raises(ValueError):
        IpcaConfig(fallback_drop=0)


def test_identity_when_target_equals_p(X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=6))
    assert proj.steps_ == []
    assert np.array_equal(project(proj, X20), X20)
    assert np.array_equal(pinv_reconstruct(proj, X20), X20)
    assert np.array_equal(complement_reconstruct(proj, X20, 3), X20)
    assert evr_report(proj) == []


def test_reaches_target_dimension(X20):
    for target in (1, 2, 4):
        proj = fit_ipca(X20, IpcaConfig(target_dim=target, evr_floor=0.8))
        assert proj.n_components_ == target
        assert project(proj, X20).shape == (20, target)
        dims = [X20.shape[1]] + [s.out_dim for s in proj.steps_]
        assert all(a > b for a, b in zip(dims, dims[1:]))


def test_rank_one_data():
    rng = np.random.default_rng(3)
    X = np.outer(rng.normal(size=15), rng.normal(size=4))
    X -= X.mean(axis=0)
    proj = fit_ipca(X, IpcaConfig(target_dim=1, evr_floor=0.95))
    assert len(proj.steps_) == 1
    assert proj.steps_[0].evr_kept == pytest.approx(1.0, abs=1e-10)
    back = pinv_reconstruct(proj, project(proj, X))
    assert np.linalg.norm(back - X) / np.linalg.norm(X) < 1e-10
    assert all(evr == pytest.approx(1.0) for _, _, evr in evr_report(proj))


def test_degenerate_rank_warns():
    X = np.zeros((5, 3))
    X[:, 0] = np.arange(5) - 2.0
    with pytest.warns(DegenerateRank):
        fit_ipca(X, IpcaConfig(target_dim=2))


def test_orthonormal_bases(X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=1, evr_floor=0.7))
    for s in proj.steps_:
        V = np.hstack([s.V_kept, s.V_comp])
        assert np.max(np.abs(V.T @ V - np.eye(V.shape[1]))) < 1e-10
    P = proj.components_
    assert np.max(np.abs(P.T @ P - np.eye(P.shape[1]))) < 1e-10


def test_project_linearity_and_stored_coordinates(X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=2, evr_floor=0.7))
    Z = project(proj, X20)
    assert np.allclose(Z, proj.steps_[-1].X_kept, atol=1e-12)
    assert np.allclose(project(proj, X20[4:5]), Z[4:5], atol=1e-12)
    with pytest.raises(DimMismatch):
        project(proj, X20[:, :5])
    with pytest.raises(DimMismatch):
        pinv_reconstruct(proj, Z[:, :1])


def test_pinv_energy_identity(X20):
    # oracle: sum of squared singular values discarded at each SVD step
    proj = fit_ipca(X20, IpcaConfig(target_dim=1, evr_floor=0.8))
    discarded = sum(np.sum(s.singular_values[s.out_dim:] ** 2) for s in proj.steps_)
    resid = X20 - pinv_reconstruct(proj, project(proj, X20))
    assert np.sum(resid ** 2) == pytest.approx(discarded, rel=1e-6)


def test_pinv_matches_moore_penrose_formula(X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=2, evr_floor=0.8))
    Z = project(proj, X20)
    X = Z
    for s in reversed(proj.steps_):
        V = s.V_kept
        F = V.T @ np.linalg.pinv(V @ V.T)
        X = X @ F
    assert np.allclose(X, pinv_reconstruct(proj, Z), atol=1e-10)


def test_pinv_residual_orthogonal_to_kept_subspace(X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=2, evr_floor=0.8))
    resid = X20 - pinv_reconstruct(proj, project(proj, X20))
    assert np.max(np.abs(resid @ proj.components_)) < 1e-8


def test_complement_round_trip_on_training(X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=1, evr_floor=0.6))
    for k in (1, 3):
        back = complement_reconstruct(proj, project(proj, X20), k_nn=k)
        assert np.max(np.abs(back - X20)) / np.max(np.abs(X20)) < 1e-8


def test_complement_chain_reproduces_intermediates(X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=1, evr_floor=0.6))
    X = proj.steps_[-1].X_kept
    for s in reversed(proj.steps_):
        X = X @ s.V_kept.T + s.X_comp @ s.V_comp.T
        expected = s.X_kept @ s.V_kept.T + s.X_comp @ s.V_comp.T
        assert np.allclose(X, expected, atol=1e-12)
    assert np.allclose(X, X20, atol=1e-12)


def test_complement_three_point_hand_oracle():
    # V = I by construction; reduced coords [-2, 0, 2], complements [.1, -.2, .1]
    X = np.array([[-2.0, 0.1], [0.0, -0.2], [2.0, 0.1]])
    proj = fit_ipca(X, IpcaConfig(target_dim=1))
    assert np.allclose(np.abs(proj.steps_[0].V_kept[:, 0]), [1, 0])
    sign = proj.steps_[0].V_kept[0, 0]
    out = complement_reconstruct(proj, np.array([[1.0 * sign]]), k_nn=2)
    assert np.allclose(out, [[1.0, -0.05]])
    out = complement_reconstruct(proj, np.array([[0.5 * sign]]), k_nn=2)
    assert np.allclose(out, [[0.5, -0.125]])
    out = complement_reconstruct(proj, np.array([[2.0 * sign]]), k_nn=2)
    assert np.allclose(out, [[2.0, 0.1]])


def test_evr_report_matches_covariance_eigenvalues(X20):
    cov_eig = np.sort(np.linalg.eigvalsh(np.cov(X20.T)))[::-1]
    proj = fit_ipca(X20, IpcaConfig(target_dim=1, evr_floor=0.6))
    report = evr_report(proj)
    kept = report[0][1]
    assert report[0][2] == pytest.approx(cov_eig[:kept].sum() / cov_eig.sum(), rel=1e-10)
    assert total_evr(report) == pytest.approx(cov_eig[0] / cov_eig.sum(), rel=1e-10)


def test_greedy_prefix_selection(X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=1, evr_floor=0.75))
    for s in proj.steps_:
        sv = s.singular_values
        assert np.all(np.diff(sv) <= 1e-12)
        energy = sv ** 2 / np.sum(sv ** 2)
        keep = s.out_dim
        if keep > 1 and keep < s.in_dim:
            assert energy[:keep - 1].sum() < 0.75 or keep == s.in_dim - 1


def test_single_step_is_one_svd(X20):
    proj = IterativePCA(n_components=1, single_step=True).fit(X20)
    assert len(proj.steps_) == 1


def test_sklearn_surface(X20):
    est = IterativePCA(n_components=2, evr_floor=0.8, inverse_method="complement", k_nn=2)
    assert clone(est).get_params() == est.get_params()
    Z = est.fit_transform(X20)
    assert np.allclose(est.inverse_transform(Z), X20, atol=1e-10)
    assert not np.allclose(est.inverse_transform(Z, method="pinv"), X20, atol=1e-3)


def test_serialization_round_trip(tmp_path, X20):
    proj = fit_ipca(X20, IpcaConfig(target_dim=1, evr_floor=0.7))
    save_projector(proj, tmp_path / "a.proj")
    back = load_projector(tmp_path / "a.proj")
    Z = project(proj, X20)
    assert np.array_equal(project(back, X20), Z)
    assert np.array_equal(complement_reconstruct(back, Z), complement_reconstruct(proj, Z))
    save_projector(fit_ipca(X20, IpcaConfig(target_dim=1, evr_floor=0.7)), tmp_path / "b.proj")
    assert (tmp_path / "a.proj").read_bytes() == (tmp_path / "b.proj").read_bytes()


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 25), p=st.integers(2, 7), seed=st.integers(0, 10_000),
       r=st.floats(0.3, 1.0))
def test_properties_random(n, p, seed, r):
    X = standardized(np.random.default_rng(seed), n, p)
    proj = fit_ipca(X, IpcaConfig(target_dim=1, evr_floor=r))
    assert proj.n_components_ == 1
    for s in proj.steps_:
        V = np.hstack([s.V_kept, s.V_comp])
        assert np.max(np.abs(V.T @ V - np.eye(V.shape[1]))) < 1e-10
    back = complement_reconstruct(proj, project(proj, X))
    assert np.max(np.abs(back - X)) <= 1e-8 * max(1.0, np.max(np.abs(X)))
