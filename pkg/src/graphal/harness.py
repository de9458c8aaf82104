"""Benchmark harness: toy generators, dataset files, trials, aggregation.

A trial starts from one uniformly random labeled node and alternates
predict / query / reveal for a fixed budget.  Accuracy after t queries is
measured over *all* n nodes (observed nodes count as correct, everything
else by the harmonic prediction), so curves from different strategies are
directly comparable.

Randomness is organized for paired comparison: one base seed spawns an
independent stream triple (labeling, initial node, tie-breaking) per
trial, and every strategy replays the same triple.  Differences between
strategies at a given trial are therefore differences in selection rule,
not in luck; re-runs are bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError, ParseError, UsageError
from .graph_core import Graph, graph_from_edges, build_laplacian, init_label_state, read_edge_list
from .strategies import (
    BinarySession,
    MulticlassSession,
    StrategyKind,
    init_multiclass,
    next_query,
    next_query_multiclass,
    predict_binary,
    predict_multiclass,
    start_binary,
    start_multiclass,
    update,
    update_multiclass,
)

GRID_SIDE = 10
_BOX = 3  # side of each seeded positive block in the grid toy


@dataclass(frozen=True)
class Dataset:
    """A graph with one ground-truth class per node, ids dense 0..C-1."""

    name: str
    graph: Graph
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        if len(self.labels) != self.graph.n:
            raise InputError("one ground-truth class per node required")
        if self.class_count < 2:
            raise InputError(f"need at least 2 classes, got {self.class_count}")
        present = set(int(c) for c in self.labels)
        if not present.issubset(range(self.class_count)):
            raise InputError("class ids must lie in 0..C-1")


@dataclass(frozen=True)
class TrialRecord:
    """One strategy's run on one trial: accuracy curve and query order.

    ``curve[t]`` is the accuracy after t queries (t=0 is the initial
    labeled node only), length budget+1.  Curves may dip; no monotonicity
    is promised.
    """

    kind: StrategyKind
    seed: object
    curve: np.ndarray
    queries: tuple[int, ...]


def gen_chain(n: int, seed) -> Dataset:
    """Unit-weight path graph split at a uniformly random edge.

    Nodes up to and including the cut get class 1 (the + side), the rest
    class 0.
    """
    if n < 2:
        raise InputError(f"chain needs n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    cut = int(rng.integers(n - 1))  # edge (cut, cut+1) separates the classes
    labels = np.where(np.arange(n) <= cut, 1, 0)
    graph = graph_from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)])
    return Dataset(name=f"chain{n}", graph=graph, labels=labels, class_count=2)


def _grid_edges() -> list[tuple[int, int, float]]:
    edges = []
    for r in range(GRID_SIDE):
        for c in range(GRID_SIDE):
            v = r * GRID_SIDE + c
            if c + 1 < GRID_SIDE:
                edges.append((v, v + 1, 1.0))
            if r + 1 < GRID_SIDE:
                edges.append((v, v + GRID_SIDE, 1.0))
    return edges


def gen_jittered_grid(seed) -> Dataset:
    """10x10 4-neighbor grid with two positive corner blocks, then jitter.

    Two 3x3 blocks (bottom-left and top-right corners) start as class 1.
    Each class-0 node adjacent to a *pre-jitter* class-1 node then flips
    to class 1 independently with probability 1/2.  Flips are drawn in
    ascending node order against the frozen pre-jitter field, so the
    outcome is order-independent and fully determined by the seed.
    """
    rng = np.random.default_rng(seed)
    base = np.zeros(GRID_SIDE * GRID_SIDE, dtype=int)
    for r in range(_BOX):
        for c in range(_BOX):
            base[r * GRID_SIDE + c] = 1
            base[(GRID_SIDE - 1 - r) * GRID_SIDE + (GRID_SIDE - 1 - c)] = 1
    labels = base.copy()
    for v in range(base.size):
        if base[v] == 1:
            continue
        r, c = divmod(v, GRID_SIDE)
        neighbors = []
        if r > 0:
            neighbors.append(v - GRID_SIDE)
        if r + 1 < GRID_SIDE:
            neighbors.append(v + GRID_SIDE)
        if c > 0:
            neighbors.append(v - 1)
        if c + 1 < GRID_SIDE:
            neighbors.append(v + 1)
        if any(base[w] == 1 for w in neighbors) and rng.random() < 0.5:
            labels[v] = 1
    graph = graph_from_edges(GRID_SIDE * GRID_SIDE, _grid_edges())
    return Dataset(name="grid", graph=graph, labels=labels, class_count=2)


TOY_GENERATORS: dict[str, Callable] = {
    "chain15": lambda seed: gen_chain(15, seed),
    "grid": gen_jittered_grid,
}


def load_dataset(edge_path, label_path, name: str | None = None) -> Dataset:
    """Read a dataset from an edge-list file and a `node_id class_id` file.

    Node ids are 1-based in both files.  Every graph node must receive
    exactly one class; class ids must be dense 0..C-1 with C >= 2.
    """
    graph = read_edge_list(edge_path)
    label_path = str(label_path)
    classes = np.full(graph.n, -1, dtype=int)
    last_line = 0
    with open(label_path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            last_line = line_no
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(label_path, line_no, f"expected 'node_id class_id', got {line!r}")
            try:
                node, cls = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(label_path, line_no, f"malformed numbers in {line!r}") from None
            if not 1 <= node <= graph.n:
                raise ParseError(label_path, line_no, f"unknown node id {node} (graph has {graph.n})")
            if cls < 0:
                raise ParseError(label_path, line_no, f"negative class id {cls}")
            if classes[node - 1] != -1:
                raise ParseError(label_path, line_no, f"node {node} labeled twice")
            classes[node - 1] = cls
    missing = np.flatnonzero(classes == -1)
    if missing.size:
        raise ParseError(label_path, last_line, f"node {missing[0] + 1} has no label")
    class_count = int(classes.max()) + 1
    absent = sorted(set(range(class_count)) - set(int(c) for c in classes))
    if absent:
        raise ParseError(label_path, last_line, f"class ids not contiguous: {absent[0]} missing")
    if class_count < 2:
        raise InputError("dataset needs at least 2 classes")
    if name is None:
        name = str(edge_path)
    return Dataset(name=name, graph=graph, labels=classes, class_count=class_count)


def _binary_truth(dataset: Dataset) -> np.ndarray:
    return np.where(dataset.labels == 1, 1.0, -1.0)


def _run_with_streams(
    dataset: Dataset,
    kind: StrategyKind,
    budget: int,
    init_ss,
    tie_ss,
    seed_tag,
    beta: float,
    ridge: float,
) -> TrialRecord:
    n = dataset.graph.n
    if not 0 <= budget <= n - 1:
        raise UsageError(f"budget must lie in 0..{n - 1}, got {budget}")
    lap = build_laplacian(dataset.graph, beta=beta, ridge=ridge)
    initial = int(np.random.default_rng(init_ss).integers(n))
    rng_tie = np.random.default_rng(tie_ss)
    curve = np.empty(budget + 1)
    queries: list[int] = []

    if dataset.class_count == 2:
        truth = _binary_truth(dataset)
        session = start_binary(
            init_label_state(lap, [initial], [truth[initial]]), kind
        )
        curve[0] = float(np.mean(predict_binary(session) == truth))
        for t in range(1, budget + 1):
            q = next_query(session, rng_tie)
            queries.append(q)
            session = update(session, q, truth[q])
            curve[t] = float(np.mean(predict_binary(session) == truth))
    else:
        truth = dataset.labels
        msession = start_multiclass(
            init_multiclass(lap, [initial], [int(truth[initial])], dataset.class_count),
            kind,
        )
        curve[0] = float(np.mean(predict_multiclass(msession) == truth))
        for t in range(1, budget + 1):
            q = next_query_multiclass(msession, rng_tie)
            queries.append(q)
            msession = update_multiclass(msession, q, int(truth[q]))
            curve[t] = float(np.mean(predict_multiclass(msession) == truth))

    return TrialRecord(kind=kind, seed=seed_tag, curve=curve, queries=tuple(queries))


def run_trial(
    dataset: Dataset,
    kind: StrategyKind,
    budget: int,
    seed,
    beta: float = 1.0,
    ridge: float = 0.0,
) -> TrialRecord:
    """One full predict/query loop for one strategy under one seed.

    The seed is split into independent (initial node, tie-break) streams;
    the initial labeled node is uniform over all nodes.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    init_ss, tie_ss = ss.spawn(2)
    return _run_with_streams(dataset, kind, budget, init_ss, tie_ss, seed, beta, ridge)


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregated paired-trial curves for a set of strategies."""

    name: str
    kinds: tuple[StrategyKind, ...]
    budget: int
    trials: int
    base_seed: int
    curves: dict  # kind -> (trials, budget+1) accuracy array
    records: tuple[TrialRecord, ...]

    def mean(self, kind: StrategyKind) -> np.ndarray:
        return self.curves[kind].mean(axis=0)

    def stderr(self, kind: StrategyKind) -> np.ndarray:
        c = self.curves[kind]
        if c.shape[0] < 2:
            return np.zeros(c.shape[1])
        return c.std(axis=0, ddof=1) / np.sqrt(c.shape[0])


def run_experiment(
    source,
    kinds,
    budget: int,
    trials: int,
    base_seed: int,
    beta: float = 1.0,
    ridge: float = 0.0,
) -> ExperimentResult:
    """Paired trials of several strategies on one dataset or generator.

    ``source`` is either a fixed :class:`Dataset` or a callable mapping a
    seed to one (toy generators — fresh ground truth every trial).  Every
    strategy sees identical per-trial conditions: same generated dataset,
    same initial node, same tie-break stream.
    """
    if trials < 1:
        raise UsageError(f"trials must be >= 1, got {trials}")
    kinds = tuple(kinds)
    if not kinds:
        raise UsageError("need at least one strategy")
    if len(set(kinds)) != len(kinds):
        raise UsageError("duplicate strategy in list")

    trial_streams = np.random.SeedSequence(base_seed).spawn(trials)
    curves = {kind: np.empty((trials, budget + 1)) for kind in kinds}
    records: list[TrialRecord] = []
    name = None
    for i, trial_ss in enumerate(trial_streams):
        lab_ss, init_ss, tie_ss = trial_ss.spawn(3)
        dataset = source(lab_ss) if callable(source) else source
        if name is None:
            name = dataset.name
        for kind in kinds:
            rec = _run_with_streams(dataset, kind, budget, init_ss, tie_ss, i, beta, ridge)
            curves[kind][i] = rec.curve
            records.append(rec)
    return ExperimentResult(
        name=name,
        kinds=kinds,
        budget=budget,
        trials=trials,
        base_seed=base_seed,
        curves=curves,
        records=tuple(records),
    )


def write_csv(result: ExperimentResult, path) -> None:
    """Emit the aggregate table: one row per (strategy, t).

    Header ``strategy,t,mean_accuracy,stderr,trials``; UTF-8, LF endings,
    17 significant digits so re-runs are byte-comparable.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("strategy,t,mean_accuracy,stderr,trials\n")
        for kind in result.kinds:
            mean = result.mean(kind)
            err = result.stderr(kind)
            for t in range(result.budget + 1):
                fh.write(
                    f"{kind.value},{t},{mean[t]:.17g},{err[t]:.17g},{result.trials}\n"
                )
