"""Expected-error query selection.

The selector scores every unlabeled candidate ``q`` by the posterior-weighted
zero-one risk that would remain after querying it:

    score(q) = sum_y P(Y_q = y) * risk(marginals after observing Y_q = y)

and queries the minimizer.  The expensive part is the "after observing"
marginals for every (q, y) pair.  Both fast posteriors admit a closed-form
one-step update from the maintained inverse ``G`` (no refactorization):

* harmonic values:   h+_k = h_k + (y - h_q) G_kq / G_qq
* decision values:   f+_k = (G_kk f_k + (2y/G_qq - f_q) G_kq)
                            / (G_kk - G_kq^2 / G_qq)

so one selection sweep costs O(|u|^2).  ``tsa_risk_table`` and
``zlg_risk_table`` evaluate all candidates at once in cache-friendly row
blocks, reusing preallocated scratch (:class:`Workspace`) so steady-state
selection does no large allocations.

``lookahead_risk`` is the plain per-candidate form of the same quantity,
kept around as the readable reference the tables are tested against; with
``MarginalKind.EXACT`` it re-enumerates the posterior and serves as the
oracle for the fast routes.
"""
from __future__ import annotations

import numpy as np
import scipy.special

from .config import DEFAULT_ENUM_CAP, DEFAULT_TOLERANCES
from .errors import DegeneracyError, UsageError
from .graph_core import LabelState, downdate_inverse
from .inference import (
    MarginalKind,
    Marginals,
    exact_bmrf_marginals,
    lp_harmonic,
    sigmoid,
    tsa_marginals,
)

BLOCK = 192


def zero_one_risk(marginals: Marginals, n: int) -> float:
    """Expected number of sign errors over the whole graph, divided by n.

    Each unlabeled node contributes ``min(p, 1-p)``; labeled nodes
    contribute zero but still count in the denominator.
    """
    if n < 1:
        raise UsageError(f"need n >= 1, got {n}")
    p = marginals.prob_plus
    if p.size == 0:
        return 0.0
    return float(np.minimum(p, 1.0 - p).sum() / n)


def tsa_lookahead_decisions(state: LabelState, f: np.ndarray, q: int, y: float) -> np.ndarray:
    """Decision values after hypothetically observing ``Y_q = y``.

    Entry ``q`` is set to +/-inf (a just-observed node is certain).  Aligned
    with ``state.unlabeled``; the state itself is untouched.
    """
    qi = state.u_index(q)
    g = state.inverse
    d = np.diag(g)
    tol = DEFAULT_TOLERANCES.singularity
    if d[qi] <= tol:
        raise DegeneracyError(f"inverse diagonal at node {q} is {d[qi]:.3e}")
    col = g[:, qi]
    denom = d - col * col / d[qi]
    denom[qi] = 1.0
    if denom.min() <= tol:
        bad = state.unlabeled[int(np.argmin(denom))]
        raise DegeneracyError(f"lookahead denominator vanished at node {bad}")
    fp = (d * f + (2.0 * y / d[qi] - f[qi]) * col) / denom
    fp[qi] = np.inf if y > 0 else -np.inf
    return fp


def zlg_lookahead_harmonic(state: LabelState, h: np.ndarray, q: int, y: float) -> np.ndarray:
    """Harmonic values after hypothetically pinning node ``q`` to ``y``.

    One rank-one correction of the interpolation; entry ``q`` becomes ``y``
    exactly.
    """
    qi = state.u_index(q)
    g = state.inverse
    if g[qi, qi] <= DEFAULT_TOLERANCES.singularity:
        raise DegeneracyError(f"inverse diagonal at node {q} is {g[qi, qi]:.3e}")
    hp = h + (y - h[qi]) * (g[:, qi] / g[qi, qi])
    hp[qi] = y
    return hp


def _branch_weights(kind: MarginalKind, value_q: float) -> tuple[float, float]:
    """(P(Y_q=+1), P(Y_q=-1)) implied by the route's own marginal at q."""
    if kind is MarginalKind.TSA:
        wp = float(sigmoid(value_q))
    else:  # harmonic mean value
        wp = (min(max(value_q, -1.0), 1.0) + 1.0) / 2.0
    return wp, 1.0 - wp


def lookahead_risk(
    state: LabelState,
    kind: MarginalKind,
    q: int,
    cap: int = DEFAULT_ENUM_CAP,
) -> float:
    """Expected post-query risk for a single candidate, straight-line form.

    The TSA/ZLG branches use the closed-form updates above; the EXACT
    branch rebuilds the conditioned posterior by enumeration (slow, used
    as ground truth in tests and the self-check suite).
    """
    n = state.n
    if kind is MarginalKind.EXACT:
        base = exact_bmrf_marginals(state.lap, state.labeled, state.labels, cap=cap)
        qi = base.nodes.index(q)
        wp = float(base.prob_plus[qi])
        risk = 0.0
        for y, w in ((1.0, wp), (-1.0, 1.0 - wp)):
            if w == 0.0:
                continue
            cond = downdate_inverse(state, q, y)
            after = exact_bmrf_marginals(cond.lap, cond.labeled, cond.labels, cap=cap)
            risk += w * float(np.minimum(after.prob_plus, 1.0 - after.prob_plus).sum() / n)
        return risk

    if kind is MarginalKind.TSA:
        f = tsa_marginals(state).values
        wp, wm = _branch_weights(kind, f[state.u_index(q)])
        risk = 0.0
        for y, w in ((1.0, wp), (-1.0, wm)):
            fp = tsa_lookahead_decisions(state, f, q, y)
            risk += w * float(scipy.special.expit(-np.abs(fp)).sum() / n)
        return risk

    if kind is MarginalKind.ZLG:
        h = lp_harmonic(state)
        wp, wm = _branch_weights(kind, h[state.u_index(q)])
        risk = 0.0
        for y, w in ((1.0, wp), (-1.0, wm)):
            hp = np.clip(zlg_lookahead_harmonic(state, h, q, y), -1.0, 1.0)
            risk += w * float(((1.0 - np.abs(hp)) / 2.0).sum() / n)
        return risk

    raise UsageError(f"unsupported marginal kind {kind}")


class Workspace:
    """Preallocated scratch for the blocked risk tables.

    Two flat buffers sized ``BLOCK * capacity`` are reshaped into row-block
    views on demand.  Reusing them keeps the per-query hot loop free of
    multi-megabyte allocations, which matters for stable per-query timing
    as the graph grows.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise UsageError(f"capacity must be positive, got {capacity}")
        self._cap = int(capacity)
        self._b1 = np.empty(BLOCK * self._cap)
        self._b2 = np.empty(BLOCK * self._cap)

    def _grow(self, m: int) -> None:
        if m > self._cap:
            self._cap = m
            self._b1 = np.empty(BLOCK * self._cap)
            self._b2 = np.empty(BLOCK * self._cap)

    def pair(self, rows: int, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Two (rows, m) scratch views; contents are garbage."""
        self._grow(m)
        k = rows * m
        return self._b1[:k].reshape(rows, m), self._b2[:k].reshape(rows, m)


def tsa_risk_table(
    state: LabelState,
    f: np.ndarray | None = None,
    workspace: Workspace | None = None,
) -> np.ndarray:
    """Expected post-query risk of every unlabeled candidate (TSA route).

    Vectorizes the closed-form decision-value update over all (q, k) pairs:
    the denominator ``G_kk - G_qk^2/G_qq`` is shared by both label branches,
    and the numerator is ``G_kk f_k + b_y(q) G_qk`` with a per-candidate
    coefficient ``b_y(q) = 2y/G_qq - f_q``.  Candidate rows are processed in
    blocks of ``BLOCK`` for cache locality.
    """
    m = len(state.unlabeled)
    if m == 0:
        return np.zeros(0)
    g = state.inverse
    d = np.diag(g).copy()
    tol = DEFAULT_TOLERANCES.singularity
    if d.min() <= tol:
        bad = state.unlabeled[int(np.argmin(d))]
        raise DegeneracyError(f"inverse diagonal vanished at node {bad}")
    if f is None:
        f = tsa_marginals(state).values
    if workspace is None:
        workspace = Workspace(m)

    a = d * f  # = 2 h, the diagonal-free part of the numerator
    b_plus = 2.0 / d - f
    b_minus = -2.0 / d - f
    inv_n = 1.0 / state.n
    risk_plus = np.empty(m)
    risk_minus = np.empty(m)

    for q0 in range(0, m, BLOCK):
        q1 = min(q0 + BLOCK, m)
        rows = q1 - q0
        gb = g[q0:q1]
        denom, num = workspace.pair(rows, m)
        diag_r = np.arange(rows)
        diag_c = np.arange(q0, q1)

        np.multiply(gb, gb, out=denom)
        denom /= d[q0:q1, None]
        np.subtract(d[None, :], denom, out=denom)
        denom[diag_r, diag_c] = 1.0  # the q == k slot is handled separately
        if denom.min() <= tol:
            qi, ki = np.unravel_index(int(np.argmin(denom)), denom.shape)
            raise DegeneracyError(
                f"lookahead denominator vanished for candidate "
                f"{state.unlabeled[q0 + qi]} at node {state.unlabeled[ki]}"
            )

        for coeff, out_vec in ((b_plus, risk_plus), (b_minus, risk_minus)):
            np.multiply(gb, coeff[q0:q1, None], out=num)
            num += a[None, :]
            num /= denom
            np.abs(num, out=num)
            np.negative(num, out=num)
            scipy.special.expit(num, out=num)
            num[diag_r, diag_c] = 0.0  # just-queried node is certain
            np.sum(num, axis=1, out=out_vec[q0:q1])

    w_plus = sigmoid(f)
    return (w_plus * risk_plus + (1.0 - w_plus) * risk_minus) * inv_n


def zlg_risk_table(
    state: LabelState,
    h: np.ndarray | None = None,
    workspace: Workspace | None = None,
) -> np.ndarray:
    """Expected post-query risk of every candidate under harmonic marginals.

    Same blocked layout as :func:`tsa_risk_table`; here the updated value is
    ``h_k + (y - h_q) G_qk / G_qq`` and per-node risk is ``(1 - |h+|)/2``
    after clamping.
    """
    m = len(state.unlabeled)
    if m == 0:
        return np.zeros(0)
    g = state.inverse
    d = np.diag(g).copy()
    tol = DEFAULT_TOLERANCES.singularity
    if d.min() <= tol:
        bad = state.unlabeled[int(np.argmin(d))]
        raise DegeneracyError(f"inverse diagonal vanished at node {bad}")
    if h is None:
        h = lp_harmonic(state)
    if workspace is None:
        workspace = Workspace(m)

    inv_n = 1.0 / state.n
    risk_plus = np.empty(m)
    risk_minus = np.empty(m)

    for q0 in range(0, m, BLOCK):
        q1 = min(q0 + BLOCK, m)
        rows = q1 - q0
        gb = g[q0:q1]
        ratio, hp = workspace.pair(rows, m)
        diag_r = np.arange(rows)
        diag_c = np.arange(q0, q1)

        np.divide(gb, d[q0:q1, None], out=ratio)
        for y, out_vec in ((1.0, risk_plus), (-1.0, risk_minus)):
            np.multiply(ratio, (y - h[q0:q1])[:, None], out=hp)
            hp += h[None, :]
            np.abs(hp, out=hp)
            np.minimum(hp, 1.0, out=hp)
            np.subtract(1.0, hp, out=hp)
            hp *= 0.5
            hp[diag_r, diag_c] = 0.0
            np.sum(hp, axis=1, out=out_vec[q0:q1])

    w_plus = (np.clip(h, -1.0, 1.0) + 1.0) / 2.0
    return (w_plus * risk_plus + (1.0 - w_plus) * risk_minus) * inv_n


def argmin_ties(values: np.ndarray, rng: np.random.Generator | None = None) -> int:
    """Index of the minimum, breaking near-ties uniformly at random.

    Anything within ``tie_relative * max(1, |min|)`` of the minimum counts
    as tied; without an rng the first tied index wins.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise UsageError("empty score vector")
    best = float(v.min())
    tol = DEFAULT_TOLERANCES.tie_relative * max(1.0, abs(best))
    ties = np.flatnonzero(v <= best + tol)
    if ties.size == 1 or rng is None:
        return int(ties[0])
    return int(ties[rng.integers(ties.size)])


def argmax_ties(values: np.ndarray, rng: np.random.Generator | None = None) -> int:
    """Index of the maximum with the same randomized near-tie rule."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise UsageError("empty score vector")
    best = float(v.max())
    tol = DEFAULT_TOLERANCES.tie_relative * max(1.0, abs(best))
    ties = np.flatnonzero(v >= best - tol)
    if ties.size == 1 or rng is None:
        return int(ties[0])
    return int(ties[rng.integers(ties.size)])


def select_query_eem(
    state: LabelState,
    kind: MarginalKind,
    rng: np.random.Generator | None = None,
    *,
    decisions: np.ndarray | None = None,
    harmonic: np.ndarray | None = None,
    workspace: Workspace | None = None,
    cap: int = DEFAULT_ENUM_CAP,
) -> tuple[int, np.ndarray]:
    """Pick the unlabeled node whose query minimizes expected risk.

    Returns ``(node, scores)`` with ``scores`` aligned to
    ``state.unlabeled``.  Callers that maintain ``decisions`` (TSA) or
    ``harmonic`` (ZLG) incrementally pass them in to skip recomputation.
    """
    if not state.unlabeled:
        raise UsageError("no unlabeled nodes left to query")
    if kind is MarginalKind.TSA:
        scores = tsa_risk_table(state, f=decisions, workspace=workspace)
    elif kind is MarginalKind.ZLG:
        scores = zlg_risk_table(state, h=harmonic, workspace=workspace)
    elif kind is MarginalKind.EXACT:
        scores = np.array(
            [lookahead_risk(state, MarginalKind.EXACT, q, cap=cap) for q in state.unlabeled]
        )
    else:
        raise UsageError(f"unsupported marginal kind {kind}")
    return state.unlabeled[argmin_ties(scores, rng)], scores
