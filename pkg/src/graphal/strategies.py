"""Query strategies behind one interface, binary and one-vs-rest multiclass.

Five selection rules:

* ``tsa``  -- expected-error minimization with logistic decision-value
  marginals (the engine this package is built around).
* ``zlg``  -- expected-error minimization with harmonic-value marginals.
* ``vopt`` -- variance minimization: argmax_q (1/G_qq) sum_k G_kq^2.
* ``sopt`` -- survey-style objective: argmax_q (sum_k G_kq)^2 / G_qq.
* ``random`` -- uniform over the unlabeled set (reference baseline only;
  not one of the compared literature methods).

VOpt and SOpt read only the maintained inverse ``G``, never the observed
labels, so their choices are invariant under any relabeling — they spend
queries on graph geometry alone.  All five share the same per-query
budget: one O(|u|^2) selection sweep plus one O(|u|^2) downdate.

A session bundles the evolving :class:`~graphal.graph_core.LabelState`
with the incrementally maintained harmonic vector (all kinds; it is the
prediction surface) and decision vector (tsa only).  Commits never
re-invert: the closed-form lookahead update with the realized label *is*
the maintenance step.
"""
from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, replace

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import UsageError
from .graph_core import LabelState, Laplacian, downdate_inverse, init_label_state
from .eem import (
    Workspace,
    argmax_ties,
    argmin_ties,
    tsa_risk_table,
    zlg_risk_table,
    tsa_lookahead_decisions,
    zlg_lookahead_harmonic,
)
from .inference import lp_harmonic, sigmoid, tsa_marginals


class StrategyKind(enum.Enum):
    """Selection rule identifiers, matching their CLI spellings."""

    TSA = "tsa"
    ZLG = "zlg"
    VOPT = "vopt"
    SOPT = "sopt"
    RANDOM = "random"

    @classmethod
    def from_string(cls, name: str) -> "StrategyKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            options = ", ".join(k.value for k in cls)
            raise UsageError(f"unknown strategy {name!r}; expected one of: {options}") from None

    @property
    def is_reference_baseline(self) -> bool:
        """True for strategies we add for scale, not drawn from the literature."""
        return self is StrategyKind.RANDOM


@dataclass(frozen=True)
class QueryStrategy:
    """A strategy kind plus the knobs that make runs reproducible."""

    kind: StrategyKind
    seed: int = 0
    beta: float = 1.0


def vopt_scores(state: LabelState) -> np.ndarray:
    """Posterior-variance reduction of each candidate: (1/G_qq) sum_k G_kq^2."""
    g = state.inverse
    d = np.diag(g)
    return np.einsum("kq,kq->q", g, g) / d


def sopt_scores(state: LabelState) -> np.ndarray:
    """Aggregate-prediction objective of each candidate: (sum_k G_kq)^2 / G_qq."""
    g = state.inverse
    col_sums = g.sum(axis=0)
    return col_sums * col_sums / np.diag(g)


# ---------------------------------------------------------------------------
# binary sessions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinarySession:
    """Evolving binary run: state + incrementally maintained vectors.

    ``harmonic`` is kept for every kind (it is the prediction surface);
    ``decisions`` only for tsa.  ``workspace`` is shared scratch reused
    across steps; sessions are value objects apart from it.
    """

    kind: StrategyKind
    state: LabelState
    harmonic: np.ndarray
    decisions: np.ndarray | None
    workspace: Workspace


def start_binary(state: LabelState, kind: StrategyKind) -> BinarySession:
    """Open a session: one harmonic solve, plus decision values for tsa."""
    h = lp_harmonic(state)
    f = tsa_marginals(state).values if kind is StrategyKind.TSA else None
    return BinarySession(
        kind=kind,
        state=state,
        harmonic=h,
        decisions=f,
        workspace=Workspace(max(1, len(state.unlabeled))),
    )


def next_query(session: BinarySession, rng: np.random.Generator | None = None) -> int:
    """Choose the next node to query; near-ties break uniformly via ``rng``."""
    state = session.state
    if not state.unlabeled:
        raise UsageError("no unlabeled nodes left to query")
    kind = session.kind
    if kind is StrategyKind.TSA:
        scores = tsa_risk_table(state, f=session.decisions, workspace=session.workspace)
        return state.unlabeled[argmin_ties(scores, rng)]
    if kind is StrategyKind.ZLG:
        scores = zlg_risk_table(state, h=session.harmonic, workspace=session.workspace)
        return state.unlabeled[argmin_ties(scores, rng)]
    if kind is StrategyKind.VOPT:
        return state.unlabeled[argmax_ties(vopt_scores(state), rng)]
    if kind is StrategyKind.SOPT:
        return state.unlabeled[argmax_ties(sopt_scores(state), rng)]
    if kind is StrategyKind.RANDOM:
        i = 0 if rng is None else int(rng.integers(len(state.unlabeled)))
        return state.unlabeled[i]
    raise UsageError(f"unsupported strategy kind {kind}")


def update(session: BinarySession, node: int, label: float) -> BinarySession:
    """Absorb an observed label: downdate the inverse, roll the vectors.

    The maintained vectors are advanced by the same closed-form lookahead
    updates used during selection, evaluated at the realized label, then
    restricted to the surviving unlabeled nodes — no re-inversion.
    """
    state = session.state
    qi = state.u_index(node)
    h_next = np.delete(zlg_lookahead_harmonic(state, session.harmonic, node, label), qi)
    f_next = None
    if session.decisions is not None:
        f_next = np.delete(tsa_lookahead_decisions(state, session.decisions, node, label), qi)
    return replace(
        session,
        state=downdate_inverse(state, node, label),
        harmonic=h_next,
        decisions=f_next,
    )


def predict_binary(session: BinarySession) -> np.ndarray:
    """+/-1 prediction for every node: observed labels, else harmonic sign.

    The sign threshold sends h = 0 to +1; tsa and zlg agree here because
    the decision value 2h/G_kk shares h's sign (G_kk > 0).
    """
    state = session.state
    out = np.empty(state.n)
    out[list(state.labeled)] = state.labels
    out[list(state.unlabeled)] = np.where(session.harmonic >= 0.0, 1.0, -1.0)
    return out


# ---------------------------------------------------------------------------
# one-vs-rest multiclass
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MulticlassState:
    """C binary one-vs-rest states over one shared graph partition.

    All per-class states carry the same labeled/unlabeled sets and the
    same inverse object (labels are the only difference), so the C runs
    cost one inversion and one downdate per step, not C.
    """

    class_count: int
    states: tuple[LabelState, ...]

    def __post_init__(self):
        if self.class_count < 2:
            raise UsageError(f"need at least 2 classes, got {self.class_count}")
        if len(self.states) != self.class_count:
            raise UsageError("one binary state per class required")

    @property
    def unlabeled(self) -> tuple[int, ...]:
        return self.states[0].unlabeled

    @property
    def labeled(self) -> tuple[int, ...]:
        return self.states[0].labeled

    @property
    def n(self) -> int:
        return self.states[0].n


def init_multiclass(lap: Laplacian, nodes, classes, class_count: int) -> MulticlassState:
    """One-vs-rest setup: class c's run labels node v +1 iff class(v) == c."""
    nodes = [int(v) for v in nodes]
    classes = [int(c) for c in classes]
    if len(nodes) != len(classes):
        raise UsageError("nodes and classes must align")
    if any(c < 0 or c >= class_count for c in classes):
        raise UsageError(f"class ids must lie in 0..{class_count - 1}")
    order = np.argsort(nodes)
    nodes = [nodes[i] for i in order]
    classes = [classes[i] for i in order]
    first = init_label_state(
        lap, nodes, [1.0 if c == 0 else -1.0 for c in classes]
    )
    states = [first]
    for cls in range(1, class_count):
        y = np.array([1.0 if c == cls else -1.0 for c in classes])
        y.setflags(write=False)
        states.append(
            LabelState(
                lap=lap,
                labeled=first.labeled,
                labels=y,
                unlabeled=first.unlabeled,
                inverse=first.inverse,
            )
        )
    return MulticlassState(class_count=class_count, states=tuple(states))


def multiclass_update(mstate: MulticlassState, node: int, observed_class: int) -> MulticlassState:
    """Absorb one observed class across all one-vs-rest runs.

    The inverse downdate is identical for every run (labels do not enter
    it), so it is computed once and shared.
    """
    if not 0 <= observed_class < mstate.class_count:
        raise UsageError(f"class id {observed_class} out of range")
    old = mstate.states[0]
    pos = bisect.bisect_left(old.labeled, node)
    base = downdate_inverse(old, node, 1.0 if observed_class == 0 else -1.0)
    states = [base]
    for cls in range(1, mstate.class_count):
        y = np.insert(mstate.states[cls].labels, pos, 1.0 if observed_class == cls else -1.0)
        y.setflags(write=False)
        states.append(
            LabelState(
                lap=base.lap,
                labeled=base.labeled,
                labels=y,
                unlabeled=base.unlabeled,
                inverse=base.inverse,
            )
        )
    return MulticlassState(class_count=mstate.class_count, states=tuple(states))


@dataclass(frozen=True)
class MulticlassMarginals:
    """Normalized class-probability table plus the uniform-fallback count."""

    nodes: tuple[int, ...]
    table: np.ndarray  # (|u|, C), rows sum to 1
    fallback_rows: int


def _normalize_rows(scores: np.ndarray) -> tuple[np.ndarray, int]:
    """Row-normalize nonnegative scores; all-zero rows become uniform."""
    sums = scores.sum(axis=1)
    dead = sums <= 0.0
    fallback = int(np.count_nonzero(dead))
    if fallback:
        scores = scores.copy()
        scores[dead] = 1.0
        sums = scores.sum(axis=1)
    return scores / sums[:, None], fallback


def _class_label_matrix(mstate: MulticlassState) -> np.ndarray:
    return np.column_stack([s.labels for s in mstate.states])


def multiclass_harmonics(mstate: MulticlassState) -> np.ndarray:
    """Per-class harmonic values, (|u|, C), one shared solve."""
    base = mstate.states[0]
    m = len(base.unlabeled)
    if m == 0:
        return np.zeros((0, mstate.class_count))
    iu = np.asarray(base.unlabeled, dtype=int)
    il = np.asarray(base.labeled, dtype=int)
    cross = base.lap.matrix[np.ix_(iu, il)] @ _class_label_matrix(mstate)
    return -(base.inverse @ cross)


def multiclass_decisions(mstate: MulticlassState) -> np.ndarray:
    """Per-class decision values 2 h^c / G_kk, (|u|, C)."""
    h = multiclass_harmonics(mstate)
    if h.shape[0] == 0:
        return h
    return 2.0 * h / np.diag(mstate.states[0].inverse)[:, None]


def multiclass_marginals(
    mstate: MulticlassState, decisions: np.ndarray | None = None
) -> MulticlassMarginals:
    """Class-probability table: normalized per-class logistic marginals.

    ``table[k][c] = sigmoid(f_k^c) / sum_c' sigmoid(f_k^c')``.  A row whose
    every binary marginal saturates to zero carries no signal; it falls
    back to uniform 1/C and is counted in ``fallback_rows``.
    """
    if decisions is None:
        decisions = multiclass_decisions(mstate)
    table, fallback = _normalize_rows(sigmoid(decisions))
    return MulticlassMarginals(mstate.unlabeled, table, fallback)


def multiclass_zero_one_risk(table: np.ndarray, n: int) -> float:
    """Expected misclassifications over the whole graph, divided by n.

    Each unlabeled row contributes ``1 - max_c table[k][c]``; with C=2 this
    is exactly the binary ``min(p, 1-p)`` risk.
    """
    if n < 1:
        raise UsageError(f"need n >= 1, got {n}")
    if table.shape[0] == 0:
        return 0.0
    return float((1.0 - table.max(axis=1)).sum() / n)


def _risk_given_outcomes(
    scores_minus: np.ndarray, new_plus: np.ndarray, qi: int, n: int, weights: np.ndarray
) -> float:
    """Outcome-weighted risk from per-class scores under the one-hot trick.

    ``scores_minus[k, c]`` is node k's class-c score when the candidate's
    observed class is anything *other than* c; ``new_plus[k, c]`` is the
    score when it *is* c.  For outcome b only column b changes, so the row
    sum and row max are patched from precomputed top-2 statistics instead
    of rebuilt per outcome.
    """
    base_sum = scores_minus.sum(axis=1)
    order_top2 = np.partition(scores_minus, scores_minus.shape[1] - 2, axis=1)
    top1 = order_top2[:, -1]
    top2 = order_top2[:, -2]
    arg1 = np.argmax(scores_minus, axis=1)

    risk = 0.0
    for b, w in enumerate(weights):
        if w == 0.0:
            continue
        nv = new_plus[:, b]
        sums = base_sum - scores_minus[:, b] + nv
        rest = np.where(arg1 == b, top2, top1)
        maxes = np.maximum(rest, nv)
        contrib = np.empty_like(sums)
        ok = sums > 0.0
        contrib[ok] = 1.0 - maxes[ok] / sums[ok]
        contrib[~ok] = 1.0 - 1.0 / scores_minus.shape[1]  # no signal: uniform row
        contrib[qi] = 0.0  # the queried node is observed under every outcome
        risk += w * float(contrib.sum())
    return risk / n


def multiclass_risk_table(
    mstate: MulticlassState,
    kind: StrategyKind,
    decisions: np.ndarray | None = None,
    harmonics: np.ndarray | None = None,
) -> np.ndarray:
    """Expected post-query multiclass risk of every candidate.

    The lookahead enumerates the candidate's possible observed classes b,
    weighted by its current class probabilities; outcome b hands +1 to the
    class-b run and -1 to every other run.  Because each run's one-step
    update is affine in its hypothetical label, the C outcome branches
    share one A +/- B decomposition per candidate:

        updated_value[k, c] = A[k, c] + B[k] if c == b else A[k, c] - B[k]

    giving O(|u| C) per candidate, O(|u|^2 C) per sweep.
    """
    base = mstate.states[0]
    m = len(base.unlabeled)
    if m == 0:
        raise UsageError("no unlabeled nodes left to query")
    g = base.inverse
    d = np.diag(g)
    tol = DEFAULT_TOLERANCES.singularity
    if d.min() <= tol:
        raise UsageError("inverse diagonal vanished; state is degenerate")
    n = mstate.n

    if kind is StrategyKind.TSA:
        if decisions is None:
            decisions = multiclass_decisions(mstate)
        weights_table = _normalize_rows(sigmoid(decisions))[0]
    elif kind is StrategyKind.ZLG:
        if harmonics is None:
            harmonics = multiclass_harmonics(mstate)
        weights_table = _normalize_rows((np.clip(harmonics, -1.0, 1.0) + 1.0) / 2.0)[0]
    else:
        raise UsageError(f"{kind} has no expected-risk table")

    out = np.empty(m)
    for qi in range(m):
        col = g[:, qi]
        if kind is StrategyKind.TSA:
            denom = d - col * col / d[qi]
            denom[qi] = 1.0
            inv_denom = 1.0 / denom
            a = (d[:, None] * decisions - np.outer(col, decisions[qi])) * inv_denom[:, None]
            b = (2.0 * col / d[qi]) * inv_denom
            s_minus = sigmoid(a - b[:, None])
            s_plus_diag = sigmoid(a + b[:, None])
        else:
            r = col / d[qi]
            a = harmonics - np.outer(r, harmonics[qi])
            s_minus = (np.clip(a - r[:, None], -1.0, 1.0) + 1.0) / 2.0
            s_plus_diag = (np.clip(a + r[:, None], -1.0, 1.0) + 1.0) / 2.0
        out[qi] = _risk_given_outcomes(s_minus, s_plus_diag, qi, n, weights_table[qi])
    return out


@dataclass(frozen=True)
class MulticlassSession:
    """Evolving one-vs-rest run mirroring :class:`BinarySession`."""

    kind: StrategyKind
    mstate: MulticlassState
    harmonics: np.ndarray
    decisions: np.ndarray | None


def start_multiclass(mstate: MulticlassState, kind: StrategyKind) -> MulticlassSession:
    h = multiclass_harmonics(mstate)
    f = None
    if kind is StrategyKind.TSA:
        f = 2.0 * h / np.diag(mstate.states[0].inverse)[:, None] if h.shape[0] else h
    return MulticlassSession(kind=kind, mstate=mstate, harmonics=h, decisions=f)


def next_query_multiclass(
    session: MulticlassSession, rng: np.random.Generator | None = None
) -> int:
    kind = session.kind
    mstate = session.mstate
    if not mstate.unlabeled:
        raise UsageError("no unlabeled nodes left to query")
    if kind in (StrategyKind.TSA, StrategyKind.ZLG):
        scores = multiclass_risk_table(
            mstate, kind, decisions=session.decisions, harmonics=session.harmonics
        )
        return mstate.unlabeled[argmin_ties(scores, rng)]
    if kind is StrategyKind.VOPT:
        return mstate.unlabeled[argmax_ties(vopt_scores(mstate.states[0]), rng)]
    if kind is StrategyKind.SOPT:
        return mstate.unlabeled[argmax_ties(sopt_scores(mstate.states[0]), rng)]
    if kind is StrategyKind.RANDOM:
        i = 0 if rng is None else int(rng.integers(len(mstate.unlabeled)))
        return mstate.unlabeled[i]
    raise UsageError(f"unsupported strategy kind {kind}")


def update_multiclass(
    session: MulticlassSession, node: int, observed_class: int
) -> MulticlassSession:
    """Absorb an observed class; per-class vectors roll by the same
    closed-form updates as selection, at the realized outcome."""
    mstate = session.mstate
    qi = mstate.states[0].u_index(node)
    keep = np.arange(len(mstate.unlabeled)) != qi
    h_rows = []
    f_rows = []
    for c, st in enumerate(mstate.states):
        y = 1.0 if c == observed_class else -1.0
        h_rows.append(zlg_lookahead_harmonic(st, session.harmonics[:, c], node, y)[keep])
        if session.decisions is not None:
            f_rows.append(tsa_lookahead_decisions(st, session.decisions[:, c], node, y)[keep])
    return MulticlassSession(
        kind=session.kind,
        mstate=multiclass_update(mstate, node, observed_class),
        harmonics=np.column_stack(h_rows) if h_rows else session.harmonics[keep],
        decisions=np.column_stack(f_rows) if f_rows else None,
    )


def predict_multiclass(session: MulticlassSession) -> np.ndarray:
    """Class prediction per node: observed class, else argmax harmonic.

    Ties in the harmonic argmax resolve to the lowest class id.
    """
    mstate = session.mstate
    out = np.empty(mstate.n, dtype=int)
    label_mat = _class_label_matrix(mstate)
    out[list(mstate.labeled)] = np.argmax(label_mat, axis=1)
    if mstate.unlabeled:
        out[list(mstate.unlabeled)] = np.argmax(session.harmonics, axis=1)
    return out
