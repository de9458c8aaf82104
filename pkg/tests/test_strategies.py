"""Strategy dispatch, VOpt/SOpt, sessions, and the one-vs-rest wrapper."""
import numpy as np
import pytest

from graphal.errors import UsageError
from graphal.graph_core import build_laplacian, graph_from_edges, init_label_state
from graphal.inference import lp_harmonic, tsa_marginals
from graphal.eem import tsa_risk_table
from graphal.strategies import (
    MulticlassState,
    StrategyKind,
    init_multiclass,
    multiclass_decisions,
    multiclass_harmonics,
    multiclass_marginals,
    multiclass_risk_table,
    multiclass_update,
    multiclass_zero_one_risk,
    next_query,
    next_query_multiclass,
    predict_binary,
    predict_multiclass,
    sopt_scores,
    start_binary,
    start_multiclass,
    update,
    update_multiclass,
    vopt_scores,
)
from graphal.selftest import random_connected_graph, random_labeled_state
from graphal.graph_core import inverse_residual


def chain_state(n, labeled, labels):
    g = graph_from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)])
    return init_label_state(build_laplacian(g), labeled, labels)


# --- kind parsing -------------------------------------------------------------


def test_kind_parsing_is_case_insensitive():
    assert StrategyKind.from_string("TSA") is StrategyKind.TSA
    assert StrategyKind.from_string(" Random ") is StrategyKind.RANDOM
    with pytest.raises(UsageError, match="unknown strategy"):
        StrategyKind.from_string("bestfirst")


def test_random_is_flagged_as_reference_baseline():
    assert StrategyKind.RANDOM.is_reference_baseline
    assert not StrategyKind.TSA.is_reference_baseline


# --- geometry-only scores -----------------------------------------------------


def test_vopt_against_bruteforce_objective_on_5_chain():
    state = chain_state(5, [0], [1.0])
    g = state.inverse
    scores = vopt_scores(state)
    for qi in range(len(state.unlabeled)):
        manual = sum(g[k, qi] ** 2 for k in range(g.shape[0])) / g[qi, qi]
        assert scores[qi] == pytest.approx(manual, rel=1e-12)


def test_sopt_against_bruteforce_objective():
    rng = np.random.default_rng(3)
    state = random_labeled_state(rng, random_connected_graph(rng, n_max=12))
    g = state.inverse
    scores = sopt_scores(state)
    for qi in range(len(state.unlabeled)):
        manual = float(g[:, qi].sum()) ** 2 / g[qi, qi]
        assert scores[qi] == pytest.approx(manual, rel=1e-12)


def test_vopt_sopt_ignore_observed_labels():
    rng = np.random.default_rng(7)
    for _ in range(10):
        graph = random_connected_graph(rng, n_max=25)
        state = random_labeled_state(rng, graph)
        flipped = init_label_state(
            state.lap, state.labeled, state.labels * rng.choice([-1.0, 1.0], len(state.labels))
        )
        assert np.array_equal(vopt_scores(state), vopt_scores(flipped))
        assert np.array_equal(sopt_scores(state), sopt_scores(flipped))


# --- binary sessions ----------------------------------------------------------


@pytest.mark.parametrize("kind", list(StrategyKind))
def test_session_determinism(kind):
    def run():
        state = chain_state(12, [3], [1.0])
        session = start_binary(state, kind)
        rng = np.random.default_rng(99)
        picks = []
        for _ in range(5):
            q = next_query(session, rng)
            picks.append(q)
            session = update(session, q, 1.0 if q < 6 else -1.0)
        return picks

    assert run() == run()


@pytest.mark.parametrize("kind", [StrategyKind.TSA, StrategyKind.ZLG])
def test_session_vectors_stay_in_sync_with_state(kind):
    rng = np.random.default_rng(31)
    state = random_labeled_state(rng, random_connected_graph(rng, n_max=25), min_unlabeled=8)
    session = start_binary(state, kind)
    for _ in range(5):
        q = next_query(session, rng)
        session = update(session, q, float(rng.choice([-1.0, 1.0])))
    assert np.max(np.abs(session.harmonic - lp_harmonic(session.state))) <= 1e-9
    if kind is StrategyKind.TSA:
        fresh = tsa_marginals(session.state).values
        assert np.max(np.abs(session.decisions - fresh)) <= 1e-9
    assert inverse_residual(session.state) <= 1e-8


def test_update_rejects_double_labeling():
    session = start_binary(chain_state(6, [0], [1.0]), StrategyKind.TSA)
    session = update(session, 3, -1.0)
    with pytest.raises(UsageError):
        update(session, 3, -1.0)


def test_random_strategy_is_seed_reproducible():
    session = start_binary(chain_state(30, [0], [1.0]), StrategyKind.RANDOM)
    a = next_query(session, np.random.default_rng(5))
    b = next_query(session, np.random.default_rng(5))
    assert a == b


def test_predict_binary_sign_rule():
    # balanced midpoint gets harmonic value 0 and resolves to +1
    session = start_binary(chain_state(3, [0, 2], [1.0, -1.0]), StrategyKind.ZLG)
    preds = predict_binary(session)
    assert preds[0] == 1.0 and preds[2] == -1.0
    assert preds[1] == 1.0


def test_exhausted_session_refuses_queries():
    session = start_binary(chain_state(2, [0], [1.0]), StrategyKind.TSA)
    session = update(session, 1, 1.0)
    with pytest.raises(UsageError):
        next_query(session)


# --- one-vs-rest multiclass -----------------------------------------------------


def triangle_mstate():
    g = graph_from_edges(6, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0),
                             (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)])
    lap = build_laplacian(g)
    return init_multiclass(lap, [0, 1, 4], [0, 1, 2], 3)


def test_multiclass_init_shares_partition_and_inverse():
    m = triangle_mstate()
    assert m.labeled == (0, 1, 4)
    assert m.unlabeled == (2, 3, 5)
    for st in m.states[1:]:
        assert st.inverse is m.states[0].inverse
        assert st.labeled == m.states[0].labeled
    assert np.array_equal(m.states[0].labels, [1.0, -1.0, -1.0])
    assert np.array_equal(m.states[1].labels, [-1.0, 1.0, -1.0])
    assert np.array_equal(m.states[2].labels, [-1.0, -1.0, 1.0])


def test_multiclass_rejects_degenerate_setups():
    lap = build_laplacian(graph_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]))
    with pytest.raises(UsageError):
        init_multiclass(lap, [0], [5], 3)  # class id out of range
    with pytest.raises(UsageError):
        MulticlassState(class_count=1, states=())


def test_multiclass_update_moves_node_and_matches_fresh_inverse():
    m = triangle_mstate()
    m2 = multiclass_update(m, 3, 2)
    assert m2.labeled == (0, 1, 3, 4)
    assert m2.unlabeled == (2, 5)
    assert np.array_equal(m2.states[2].labels, [-1.0, -1.0, 1.0, 1.0])
    assert np.array_equal(m2.states[0].labels, [1.0, -1.0, -1.0, -1.0])
    fresh = init_label_state(m.states[0].lap, m2.labeled, m2.states[0].labels)
    assert np.max(np.abs(m2.states[0].inverse - fresh.inverse)) <= 1e-9
    with pytest.raises(UsageError):
        multiclass_update(m2, 3, 0)


def test_multiclass_marginals_match_hand_normalization():
    m = triangle_mstate()
    marg = multiclass_marginals(m)
    assert np.allclose(marg.table.sum(axis=1), 1.0, atol=1e-9)
    assert marg.fallback_rows == 0
    # independent arithmetic: per-class sigmoids normalized by hand
    decisions = multiclass_decisions(m)
    from scipy.special import expit

    sig = expit(decisions)
    assert np.allclose(marg.table, sig / sig.sum(axis=1, keepdims=True))


def test_multiclass_marginals_fallback_row_counts():
    m = triangle_mstate()
    forced = np.full((3, 3), -100.0)  # every binary marginal saturates at 0
    marg = multiclass_marginals(m, decisions=forced)
    assert marg.fallback_rows == 3
    assert np.allclose(marg.table, 1.0 / 3.0)


def test_multiclass_zero_one_risk_values():
    one_hot = np.eye(4)
    assert multiclass_zero_one_risk(one_hot, 4) == 0.0
    uniform = np.full((6, 4), 0.25)
    assert multiclass_zero_one_risk(uniform, 6) == pytest.approx(0.75)
    with pytest.raises(UsageError):
        multiclass_zero_one_risk(uniform, 0)


def test_multiclass_two_class_reduction_matches_binary():
    rng = np.random.default_rng(13)
    graph = random_connected_graph(rng, n_max=16, n_min=8)
    lap = build_laplacian(graph)
    nodes, classes = [0, 2, 5], [1, 0, 1]
    binary = init_label_state(lap, nodes, [1.0 if c == 1 else -1.0 for c in classes])
    mstate = init_multiclass(lap, nodes, classes, 2)

    bmarg = tsa_marginals(binary)
    table = multiclass_marginals(mstate).table
    assert np.max(np.abs(table[:, 1] - bmarg.prob_plus)) <= 1e-12
    assert multiclass_zero_one_risk(table, lap.n) == pytest.approx(
        float(np.minimum(bmarg.prob_plus, 1 - bmarg.prob_plus).sum() / lap.n), abs=1e-12
    )
    assert (
        np.max(np.abs(multiclass_risk_table(mstate, StrategyKind.TSA) - tsa_risk_table(binary)))
        <= 1e-9
    )


@pytest.mark.parametrize("kind", [StrategyKind.TSA, StrategyKind.ZLG])
def test_multiclass_risk_table_against_fresh_recompute(kind):
    # oracle: rebuild the conditioned multiclass state per (q, outcome) and
    # recompute marginals from scratch
    m = triangle_mstate()
    n = m.n
    table = multiclass_marginals(m).table if kind is StrategyKind.TSA else None
    if kind is StrategyKind.ZLG:
        h = multiclass_harmonics(m)
        from graphal.strategies import _normalize_rows

        table = _normalize_rows((np.clip(h, -1.0, 1.0) + 1.0) / 2.0)[0]
    fast = multiclass_risk_table(m, kind)
    for qi, q in enumerate(m.unlabeled):
        expected = 0.0
        for b in range(m.class_count):
            conditioned = multiclass_update(m, q, b)
            if kind is StrategyKind.TSA:
                after = multiclass_marginals(conditioned).table
            else:
                hh = multiclass_harmonics(conditioned)
                after = _normalize_rows((np.clip(hh, -1.0, 1.0) + 1.0) / 2.0)[0]
            expected += table[qi, b] * multiclass_zero_one_risk(after, n)
        assert fast[qi] == pytest.approx(expected, abs=1e-10)


def test_multiclass_session_loop_and_prediction():
    m = triangle_mstate()
    truth = np.array([0, 1, 1, 2, 2, 2])
    session = start_multiclass(m, StrategyKind.TSA)
    rng = np.random.default_rng(2)
    seen = []
    for _ in range(3):
        q = next_query_multiclass(session, rng)
        seen.append(q)
        session = update_multiclass(session, q, int(truth[q]))
    assert sorted(seen) == [2, 3, 5]  # everything got queried
    preds = predict_multiclass(session)
    assert np.array_equal(preds, truth)  # all nodes observed by now
    with pytest.raises(UsageError):
        next_query_multiclass(session, rng)


def test_multiclass_session_vectors_stay_in_sync():
    m = triangle_mstate()
    session = start_multiclass(m, StrategyKind.TSA)
    session = update_multiclass(session, 3, 1)
    assert np.max(np.abs(session.harmonics - multiclass_harmonics(session.mstate))) <= 1e-9
    assert np.max(np.abs(session.decisions - multiclass_decisions(session.mstate))) <= 1e-9


@pytest.mark.parametrize("kind", [StrategyKind.VOPT, StrategyKind.SOPT, StrategyKind.RANDOM])
def test_multiclass_geometry_strategies_run(kind):
    session = start_multiclass(triangle_mstate(), kind)
    q = next_query_multiclass(session, np.random.default_rng(0))
    assert q in session.mstate.unlabeled
