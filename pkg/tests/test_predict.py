import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latentdd.dataset import sample_case1, sample_case2
from latentdd.errors import DimMismatch
from latentdd.predict import (LatentManifoldRegressor, dedupe_knots, error_report,
                              evaluate, fit_predictor, format_table,
                              load_predictor, nearest_rows,
                              nearest_rows_bruteforce, per_domain_to_csv,
                              reports_to_csv, sample_errors, save_predictor,
                              weighted_error)


@pytest.fixture(scope="module")
def case1_small():
    train = sample_case1(200, seed=0, M=128)
    return train, fit_predictor(train, min_points_per_domain=20)


def knot_rows(pred):
    """Training rows whose stretched abscissa is not shared with another row."""
    sm = pred.manifold_
    xbar = sm.x
    _, first, counts = np.unique(xbar, return_index=True, return_counts=True)
    ranks = first[counts == 1]
    # skip turning points, which sit at two branches' shared boundary
    tp = {t.index for t in sm.turning_points}
    return sm.source.order[[r for r in ranks if r not in tp]]


def test_dedupe_knots_averages_repeats():
    xs, ys = dedupe_knots([2.0, 1.0, 2.0, 3.0], np.array([4.0, 1.0, 6.0, 0.0]))
    assert xs.tolist() == [1.0, 2.0, 3.0] and ys.tolist() == [1.0, 5.0, 0.0]


def test_three_point_manifold_hand_interpolant():
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([0.0, 2.0, 3.0])
    pred = LatentManifoldRegressor(standardize=False, min_points_per_domain=2,
                                   radius=0.75).fit(X, y)
    assert len(pred.manifold_.branches) == 1
    # nearest training point routes both queries to the single branch
    assert pred.predict([[0.5], [1.5]]).tolist() == pytest.approx([1.0, 2.5])
    assert pred.predict(X).tolist() == pytest.approx(y.tolist())


def test_q1_output_is_not_reduced(case1_small):
    train, pred = case1_small
    assert pred.proj_y_ is None
    ys = (train.raw()[1][:, 0] - pred.y_mean_[0]) / pred.y_std_[0]
    assert np.allclose(np.sort(pred.manifold_.y), np.sort(ys), rtol=0, atol=1e-12)


def test_training_knots_are_reproduced(case1_small):
    train, pred = case1_small
    X, Y = train.raw()
    rows = knot_rows(pred)
    assert len(rows) > 0.5 * len(X)
    yhat = pred.predict(X[rows])
    assert np.max(np.abs(yhat - Y[rows, 0]) / np.abs(Y[rows, 0])) < 1e-8


@pytest.mark.filterwarnings("ignore::latentdd.errors.ZeroVarianceColumn")
def test_case2_complement_reproduces_training():
    train = sample_case2(40, M=32, k=30, seed=0)
    X, Y = train.raw()
    pred = LatentManifoldRegressor(inverse_mode="complement",
                                   min_points_per_domain=5).fit(X, Y)
    rows = knot_rows(pred)
    Yhat = pred.predict(X[rows])
    rel = np.linalg.norm(Yhat - Y[rows], axis=1) / np.linalg.norm(Y[rows], axis=1)
    assert rel.max() < 1e-6


def test_inverse_mode_none_needs_scalar_output():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        LatentManifoldRegressor(inverse_mode="none").fit(rng.normal(size=(10, 2)),
                                                         rng.normal(size=(10, 2)))
    with pytest.raises(ValueError):
        LatentManifoldRegressor(reducer="umap").fit(rng.normal(size=(10, 2)),
                                                    rng.normal(size=10))


def test_dim_mismatch(case1_small):
    _, pred = case1_small
    with pytest.raises(DimMismatch):
        pred.predict(np.zeros((2, 5)))


def test_classify_training_point_gets_its_branch(case1_small):
    train, pred = case1_small
    X, _ = train.raw()
    ids = pred.manifold_.branch_ids()
    got = [b.id for b in pred.classify_bpd(X[:30])]
    assert got == ids[pred.curve_rank_[:30]].tolist()


def test_nearest_tie_goes_to_lower_curve_rank():
    train = np.array([[0.0, 1.0], [0.0, -1.0], [5.0, 5.0]])
    q = np.array([[0.0, 0.0]])
    assert nearest_rows(q, train, np.array([2, 0, 1])).tolist() == [1]
    assert nearest_rows(q, train, np.array([0, 2, 1])).tolist() == [0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_accelerated_search_matches_linear_scan(seed):
    rng = np.random.default_rng(seed)
    # integer grid makes exact ties common
    train = rng.integers(-3, 4, size=(40, 3)).astype(float)
    queries = rng.integers(-3, 4, size=(25, 3)).astype(float) + rng.choice([0, 0.5], size=(25, 3))
    rank = rng.permutation(40)
    assert np.array_equal(nearest_rows(queries, train, rank),
                          nearest_rows_bruteforce(queries, train, rank))


def test_weighted_error_examples():
    assert weighted_error([(0, 2, 1.0), (1, 3, 2.0)]) == pytest.approx(1.6)
    rep = error_report("x", np.ones((5, 2)), np.ones((5, 2)), domains=[0, 0, 1, 1, 1])
    assert rep.mean_relative_error == 0 and rep.weighted_error == 0
    Y = np.arange(1.0, 6.0)
    rep = error_report("x", Y, 1.1 * Y, domains=np.zeros(5))
    assert rep.weighted_error == rep.mean_relative_error


@given(st.lists(st.tuples(st.integers(1, 50), st.floats(0, 10)), min_size=1, max_size=8))
def test_weighted_error_collapses_to_overall_mean(groups):
    errs = np.concatenate([np.full(n, r) for n, r in groups])
    per = [(i, n, r) for i, (n, r) in enumerate(groups)]
    assert weighted_error(per) == pytest.approx(errs.mean(), rel=1e-12, abs=1e-12)


def test_sample_error_metrics():
    Y = np.array([[3.0, 4.0], [1.0, -2.0]])
    Yhat = np.array([[3.0, 4.0], [1.0, 0.0]])
    assert sample_errors(Y, Yhat).tolist() == pytest.approx([0.0, 2 / np.sqrt(5)])
    assert sample_errors(Y, Yhat, "linf").tolist() == pytest.approx([0.0, 1.0])
    assert sample_errors([[0.0]], [[0.0]]).tolist() == [0.0]
    with pytest.raises(ValueError):
        sample_errors(Y, Yhat, "l7")


def test_affine_rescaling_invariance():
    train = sample_case1(150, seed=2, M=64)
    X, Y = train.raw()
    test = sample_case1(20, seed=3, M=64)
    Xt, _ = test.raw()
    kw = dict(min_points_per_domain=10)
    base = LatentManifoldRegressor(**kw).fit(X, Y)
    a, b = np.linspace(2, 7, X.shape[1]), np.linspace(-3, 3, X.shape[1])
    c, d = 4.0, -1.5
    scaled = LatentManifoldRegressor(**kw).fit(a * X + b, c * Y + d)
    assert np.allclose(c * base.predict(Xt) + d, scaled.predict(a * Xt + b),
                       rtol=1e-7, atol=1e-9)


def test_evaluate_and_reports(case1_small, tmp_path):
    train, pred = case1_small
    test = sample_case1(30, seed=5, M=128, reference=train)
    rep = evaluate(pred, test)
    assert np.isfinite(rep.mean_relative_error) and rep.inference_time_seconds >= 0
    assert sum(n for _, n, _ in rep.per_domain) == 30
    assert rep.weighted_error == pytest.approx(rep.mean_relative_error)
    table = format_table([rep])
    assert table.splitlines()[0].split()[1:] == ["error", "Mean", "Variance", "t(s)"]
    reports_to_csv([rep], tmp_path / "r.csv")
    per_domain_to_csv([rep], tmp_path / "d.csv")
    assert (tmp_path / "r.csv").read_text().startswith("method,mean,variance,weighted_error,n_test\n")
    assert "np." not in (tmp_path / "d.csv").read_text()


def test_save_load_round_trip(case1_small, tmp_path):
    train, pred = case1_small
    X, _ = train.raw()
    save_predictor(pred, tmp_path / "p.bin")
    back = load_predictor(tmp_path / "p.bin")
    assert np.array_equal(back.predict(X[:50]), pred.predict(X[:50]))
    assert np.array_equal(back.domain_of(X[:50]), pred.domain_of(X[:50]))
    save_predictor(back, tmp_path / "q.bin")
    assert (tmp_path / "p.bin").read_bytes() == (tmp_path / "q.bin").read_bytes()
