"""Randomized cross-checks of the fast paths against independent oracles.

Each check pits an incremental/closed-form route against a from-scratch
computation that shares no code with it:

* downdate        -- rank-one inverse update vs. fresh factorization
* lookahead       -- closed-form lookahead vectors vs. recomputing
                     marginals on a state that actually absorbed (q, y)
* one-unlabeled   -- logistic decision-value marginal vs. exact
                     enumeration (the approximation is exact when only
                     one node is free)
* eem-bruteforce  -- expected post-query risk vs. literal expectation
                     over the query outcome and every completion,
                     counting indicator errors

``perturb`` injects a bias into the fast route's output so the harness
itself can be shown to fail loudly; it exists for sanity-testing the
checks, not for use.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.special

from .config import DEFAULT_TOLERANCES
from .graph_core import (
    Graph,
    LabelState,
    build_laplacian,
    downdate_inverse,
    graph_from_edges,
    init_label_state,
)
from .inference import MarginalKind, exact_bmrf_marginals, tsa_marginals
from .eem import lookahead_risk, tsa_lookahead_decisions, zlg_lookahead_harmonic
from .inference import lp_harmonic


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one oracle comparison over a graph corpus."""

    name: str
    cases: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def random_connected_graph(rng: np.random.Generator, n_max: int = 40, n_min: int = 4) -> Graph:
    """Random spanning tree plus extra edges; weights uniform in (0, 2].

    Connectivity by construction, so a single labeled node anchors every
    component and all the positive-definite machinery applies.
    """
    n = int(rng.integers(n_min, n_max + 1))
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(v))
        edges[(u, v)] = 2.0 * (1.0 - rng.random())  # in (0, 2]
    extra = int(rng.integers(0, n))
    for _ in range(extra):
        a, b = rng.integers(n), rng.integers(n)
        a, b = int(min(a, b)), int(max(a, b))
        if a != b and (a, b) not in edges:
            edges[(a, b)] = 2.0 * (1.0 - rng.random())
    return graph_from_edges(n, [(i, j, w) for (i, j), w in edges.items()])


def random_labeled_state(
    rng: np.random.Generator, graph: Graph, min_unlabeled: int = 2
) -> LabelState:
    """Random labeled subset (uniform size) with random +/-1 labels."""
    n = graph.n
    n_labeled = int(rng.integers(1, n - min_unlabeled + 1))
    nodes = rng.permutation(n)[:n_labeled]
    labels = rng.choice([-1.0, 1.0], size=n_labeled)
    lap = build_laplacian(graph)
    return init_label_state(lap, sorted(int(v) for v in nodes), labels[np.argsort(nodes)])


def check_downdate(rng: np.random.Generator, graphs: int, perturb: float = 0.0) -> CheckResult:
    """Inverse after a downdate vs. fresh inversion of the reduced block."""
    worst = 0.0
    cases = 0
    for _ in range(graphs):
        graph = random_connected_graph(rng)
        state = random_labeled_state(rng, graph)
        k = state.unlabeled[int(rng.integers(len(state.unlabeled)))]
        y = float(rng.choice([-1.0, 1.0]))
        fast = downdate_inverse(state, k, y)
        fresh = init_label_state(state.lap, fast.labeled, fast.labels)
        dev = float(np.max(np.abs(fast.inverse + perturb - fresh.inverse)))
        worst = max(worst, dev)
        cases += 1
    return CheckResult("downdate-equivalence", cases, worst, DEFAULT_TOLERANCES.equivalence)


def check_lookahead(rng: np.random.Generator, graphs: int, perturb: float = 0.0) -> CheckResult:
    """Closed-form lookahead vectors vs. recompute-from-scratch, all (q, y)."""
    worst = 0.0
    cases = 0
    for _ in range(graphs):
        graph = random_connected_graph(rng)
        state = random_labeled_state(rng, graph)
        f = tsa_marginals(state).values
        h = lp_harmonic(state)
        for q in state.unlabeled:
            qi = state.u_index(q)
            keep = np.arange(len(state.unlabeled)) != qi
            for y in (1.0, -1.0):
                fast_f = tsa_lookahead_decisions(state, f, q, y)[keep]
                fast_h = zlg_lookahead_harmonic(state, h, q, y)[keep]
                absorbed = downdate_inverse(state, q, y)
                fresh_f = tsa_marginals(absorbed).values
                fresh_h = lp_harmonic(absorbed)
                dev = max(
                    float(np.max(np.abs(fast_f + perturb - fresh_f), initial=0.0)),
                    float(np.max(np.abs(fast_h + perturb - fresh_h), initial=0.0)),
                )
                worst = max(worst, dev)
                cases += 1
    return CheckResult("lookahead-equivalence", cases, worst, DEFAULT_TOLERANCES.equivalence)


def check_single_unlabeled(
    rng: np.random.Generator, graphs: int, perturb: float = 0.0
) -> CheckResult:
    """With one free node the logistic marginal must equal enumeration."""
    worst = 0.0
    cases = 0
    for _ in range(graphs):
        graph = random_connected_graph(rng, n_max=20)
        n = graph.n
        free = int(rng.integers(n))
        labeled = [v for v in range(n) if v != free]
        labels = rng.choice([-1.0, 1.0], size=n - 1)
        lap = build_laplacian(graph)
        state = init_label_state(lap, labeled, labels)
        approx = float(tsa_marginals(state).prob_plus[0])
        exact = float(exact_bmrf_marginals(lap, labeled, labels).prob_plus[0])
        worst = max(worst, abs(approx + perturb - exact))
        cases += 1
    return CheckResult("one-unlabeled-exactness", cases, worst, 1e-12)


def brute_force_lookahead_risk(state: LabelState, q: int) -> float:
    """Literal expected post-query risk: outcome- and completion-expectation.

    For each possible observed label y of q, enumerate every completion of
    the remaining unlabeled nodes under the conditioned model, take the
    per-node majority-vote prediction, and average the *counted* errors.
    No risk shortcut, no shared code with the incremental engine.
    """
    lap = state.lap
    base = exact_bmrf_marginals(lap, state.labeled, state.labels)
    w_plus = float(base.prob_plus[base.nodes.index(q)])

    total = 0.0
    for y, w in ((1.0, w_plus), (-1.0, 1.0 - w_plus)):
        if w == 0.0:
            continue
        labeled = tuple(sorted(state.labeled + (q,)))
        labels = []
        it = iter(state.labels)
        for v in labeled:
            labels.append(y if v == q else next(it))
        labels = np.asarray(labels)
        rest = [v for v in range(lap.n) if v not in set(labeled)]
        m = len(rest)
        if m == 0:
            continue
        iu = np.asarray(rest, dtype=int)
        il = np.asarray(labeled, dtype=int)
        a = lap.matrix[np.ix_(iu, iu)]
        b = lap.matrix[np.ix_(iu, il)] @ labels
        idx = np.arange(1 << m, dtype=np.int64)
        signs = (((idx[:, None] >> np.arange(m)) & 1) * 2 - 1).astype(float)
        logw = -(0.5 * np.einsum("ij,ij->i", signs @ a, signs) + signs @ b)
        probs = np.exp(logw - scipy.special.logsumexp(logw))
        marg_plus = probs @ (signs > 0)
        pred = np.where(marg_plus >= 0.5, 1.0, -1.0)
        errors_per_completion = (signs != pred[None, :]).sum(axis=1)
        total += w * float(probs @ errors_per_completion) / lap.n
    return total


def check_eem_bruteforce(
    rng: np.random.Generator, graphs: int, perturb: float = 0.0
) -> CheckResult:
    """Fast exact-posterior lookahead risk vs. the literal expectation."""
    worst = 0.0
    cases = 0
    for _ in range(graphs):
        graph = random_connected_graph(rng, n_max=12)
        state = random_labeled_state(rng, graph)
        for q in state.unlabeled:
            fast = lookahead_risk(state, MarginalKind.EXACT, q)
            literal = brute_force_lookahead_risk(state, q)
            worst = max(worst, abs(fast + perturb - literal))
            cases += 1
    return CheckResult("eem-bruteforce-equivalence", cases, worst, 1e-10)


def run_selftest(seed: int = 0, graphs: int = 50, perturb: float = 0.0) -> list[CheckResult]:
    """All four oracle checks on independent seed streams."""
    streams = np.random.SeedSequence(seed).spawn(4)
    return [
        check_downdate(np.random.default_rng(streams[0]), graphs, perturb),
        check_lookahead(np.random.default_rng(streams[1]), graphs, perturb),
        check_single_unlabeled(np.random.default_rng(streams[2]), graphs, perturb),
        check_eem_bruteforce(np.random.default_rng(streams[3]), min(graphs, 20), perturb),
    ]


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        verdict = "pass" if r.passed else "FAIL"
        lines.append(
            f"{r.name:28s} cases={r.cases:<5d} max-dev={r.max_deviation:.3e} "
            f"tol={r.tolerance:.0e}  {verdict}"
        )
    return "\n".join(lines)
