"""Directed social networks with two edge-probability maps, and node benefit profiles."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

PROB_RULES = ("indegree", "explicit")


@dataclass(frozen=True, eq=False)
class SocialNetwork:
    """Directed graph on nodes 0..n-1 with a positive (pp) and rival (pr) probability per edge.

    Edges are stored sorted by (src, dst). ``labels[i]`` is the original id of node ``i``.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    pp: np.ndarray
    pr: np.ndarray
    labels: np.ndarray
    dropped_self_loops: int = 0
    _in_lists: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("network needs at least one node")
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        pp = np.asarray(self.pp, dtype=float)
        pr = np.asarray(self.pr, dtype=float)
        if not (len(src) == len(dst) == len(pp) == len(pr)):
            raise ValidationError("edge arrays have mismatched lengths")
        if len(src) and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= self.n):
            raise ValidationError("edge endpoint outside 0..n-1")
        if np.any(src == dst):
            raise ValidationError("self-loops are not allowed")
        for name, probs in (("pp", pp), ("pr", pr)):
            if np.any(~((probs > 0) & (probs <= 1))):
                raise ValidationError(f"{name} probabilities must lie in (0, 1]")
        order = np.lexsort((dst, src))
        src, dst, pp, pr = src[order], dst[order], pp[order], pr[order]
        if len(src) > 1:
            same = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if same.any():
                i = int(np.flatnonzero(same)[0])
                raise ValidationError(f"duplicate directed edge ({src[i]}, {dst[i]})")
        for arr in (src, dst, pp, pr):
            arr.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "pp", pp)
        object.__setattr__(self, "pr", pr)
        labels = np.arange(self.n) if self.labels is None else np.asarray(self.labels, dtype=np.int64)
        if len(labels) != self.n:
            raise ValidationError("labels must have one entry per node")
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return len(self.src)

    def probs(self, cascade: str) -> np.ndarray:
        if cascade == "positive":
            return self.pp
        if cascade == "rival":
            return self.pr
        raise ValueError(f"unknown cascade {cascade!r}")

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n)

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n)

    def out_neighbors(self, v: int) -> list[int]:
        return self.dst[self.src == v].tolist()

    def in_neighbors(self, v: int) -> list[int]:
        return self.src[self.dst == v].tolist()

    def in_lists(self, cascade: str) -> tuple[list[list[int]], list[list[float]]]:
        """Per-node incoming (sources, probabilities) as plain lists, for tight sampling loops."""
        if cascade not in self._in_lists:
            probs = self.probs(cascade)
            sources: list[list[int]] = [[] for _ in range(self.n)]
            weights: list[list[float]] = [[] for _ in range(self.n)]
            for u, v, p in zip(self.src.tolist(), self.dst.tolist(), probs.tolist()):
                sources[v].append(u)
                weights[v].append(p)
            self._in_lists[cascade] = (sources, weights)
        return self._in_lists[cascade]

    def out_lists(self) -> list[list[tuple[int, int]]]:
        """Per-node outgoing (edge index, target) pairs."""
        key = "__out__"
        if key not in self._in_lists:
            out: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
            for e, (u, v) in enumerate(zip(self.src.tolist(), self.dst.tolist())):
                out[u].append((e, v))
            self._in_lists[key] = out
        return self._in_lists[key]

    def index_of(self, label: int) -> int:
        hits = np.flatnonzero(self.labels == label)
        if len(hits) == 0:
            raise ValidationError(f"unknown node id {label}")
        return int(hits[0])

    def to_dense_ids(self, labels) -> frozenset[int]:
        return frozenset(self.index_of(int(x)) for x in labels)

    def to_labels(self, nodes) -> list[int]:
        return sorted(int(self.labels[v]) for v in nodes)


@dataclass(frozen=True, eq=False)
class BenefitProfile:
    """Benefit p(u) >= 0 and disturbed benefit q(u) <= p(u) for every node."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).copy()
        q = np.asarray(self.q, dtype=float).copy()
        if p.shape != q.shape or p.ndim != 1:
            raise ValidationError("p and q must be 1-d arrays of equal length")
        if np.any(p < 0):
            raise ValidationError("benefit weights p(u) must be nonnegative")
        if np.any(q > p):
            raise ValidationError("disturbed weights must satisfy q(u) <= p(u)")
        p.setflags(write=False)
        q.setflags(write=False)
        l = p - q
        l.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "p_total", float(p.sum()))
        object.__setattr__(self, "l_total", float(l.sum()))
        assert self.l_total >= 0

    @property
    def n(self) -> int:
        return len(self.p)

    @classmethod
    def uniform(cls, n: int, p: float = 1.0, q: float = 0.0) -> "BenefitProfile":
        return cls(np.full(n, p), np.full(n, q))


def generate_benefit_profile(network: SocialNetwork, rng_seed) -> BenefitProfile:
    """p(u) ~ U[0, 1] and q(u) ~ U[-1, p(u)], deterministic in ``rng_seed``."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    p = rng.uniform(0.0, 1.0, size=network.n)
    q = rng.uniform(-1.0, p)
    # uniform() is half-open; guard the q <= p invariant against rounding
    q = np.minimum(q, p)
    return BenefitProfile(p, q)


def load_edge_list(path, directed: bool = True, probability_rule="indegree") -> SocialNetwork:
    """Read a whitespace-separated ``src dst [pp [pr]]`` file.

    ``probability_rule`` is ``"indegree"`` (pp = pr = 1/in-degree of the target),
    ``"explicit"`` (probabilities from the columns; pr defaults to pp), or a float
    constant applied to every edge of both cascades.
    """
    rule, const = _parse_rule(probability_rule)
    raw: list[tuple[int, int, float | None, float | None]] = []
    loops = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2 or len(parts) > 4:
                raise ParseError(f"{path}:{lineno}: expected 'src dst [pp [pr]]', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
                extra = [float(x) for x in parts[2:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if u < 0 or v < 0:
                raise ParseError(f"{path}:{lineno}: node ids must be nonnegative")
            if rule == "explicit" and not extra:
                raise ParseError(f"{path}:{lineno}: explicit probability rule needs a pp column")
            for x in extra:
                if not 0 < x <= 1:
                    raise ValidationError(f"{path}:{lineno}: probability {x} outside (0, 1]")
            if u == v:
                loops += 1
                continue
            pp = extra[0] if extra else None
            pr = extra[1] if len(extra) > 1 else pp
            raw.append((u, v, pp, pr))
    if loops:
        logger.warning("dropped %d self-loop(s) from %s", loops, path)

    if not directed:
        seen = set()
        for u, v, _, _ in raw:
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValidationError(f"duplicate undirected edge {key}")
            seen.add(key)
        raw = raw + [(v, u, pp, pr) for u, v, pp, pr in raw]

    labels = sorted({x for u, v, _, _ in raw for x in (u, v)})
    if not labels:
        raise ParseError(f"{path}: no edges")
    index = {x: i for i, x in enumerate(labels)}
    src = np.array([index[u] for u, _, _, _ in raw], dtype=np.int64)
    dst = np.array([index[v] for _, v, _, _ in raw], dtype=np.int64)
    if rule == "explicit":
        pp = np.array([r[2] for r in raw], dtype=float)
        pr = np.array([r[3] for r in raw], dtype=float)
    elif rule == "constant":
        pp = np.full(len(raw), const)
        pr = pp.copy()
    else:
        indeg = np.bincount(dst, minlength=len(labels))
        pp = 1.0 / indeg[dst]
        pr = pp.copy()
    return SocialNetwork(len(labels), src, dst, pp, pr, np.array(labels), dropped_self_loops=loops)


def _parse_rule(rule):
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        c = float(rule)
    elif isinstance(rule, str) and rule in PROB_RULES:
        return rule, None
    elif isinstance(rule, str) and rule.startswith("constant:"):
        try:
            c = float(rule.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad probability rule {rule!r}") from None
    else:
        raise ValidationError(f"unknown probability rule {rule!r}")
    if not 0 < c <= 1:
        raise ValidationError(f"constant probability {c} outside (0, 1]")
    return "constant", c


def load_weights(path, network: SocialNetwork) -> BenefitProfile:
    """Read ``node p q`` lines keyed by original node ids; every node must appear."""
    p = np.full(network.n, np.nan)
    q = np.full(network.n, np.nan)
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 'node p q'")
            try:
                v = network.index_of(int(parts[0]))
                p[v], q[v] = float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    missing = np.flatnonzero(np.isnan(p))
    if len(missing):
        raise ValidationError(f"{path}: no weights for node(s) {network.to_labels(missing[:5])}")
    return BenefitProfile(p, q)


def snapshot(network: SocialNetwork, profile: BenefitProfile | None = None) -> dict:
    doc = {
        "nodes": network.labels.tolist(),
        "edges": [[int(s), int(t), float(a), float(b)]
                  for s, t, a, b in zip(network.src, network.dst, network.pp, network.pr)],
    }
    if profile is not None:
        doc["weights"] = [[u, float(a), float(b)] for u, (a, b) in enumerate(zip(profile.p, profile.q))]
    return doc


def from_snapshot(doc: dict) -> tuple[SocialNetwork, BenefitProfile | None]:
    labels = np.array(doc["nodes"], dtype=np.int64)
    edges = doc["edges"]
    cols = list(zip(*edges)) if edges else [[], [], [], []]
    net = SocialNetwork(len(labels), np.array(cols[0], dtype=np.int64), np.array(cols[1], dtype=np.int64),
                        np.array(cols[2], dtype=float), np.array(cols[3], dtype=float), labels)
    profile = None
    if doc.get("weights") is not None:
        w = sorted(doc["weights"])
        if [int(r[0]) for r in w] != list(range(net.n)):
            raise ValidationError("weights must list every node exactly once")
        profile = BenefitProfile(np.array([r[1] for r in w]), np.array([r[2] for r in w]))
    return net, profile


def save_snapshot(path, network: SocialNetwork, profile: BenefitProfile | None = None) -> None:
    Path(path).write_text(json.dumps(snapshot(network, profile)))


def load_snapshot(path) -> tuple[SocialNetwork, BenefitProfile | None]:
    return from_snapshot(json.loads(Path(path).read_text()))


def random_network(n: int, m: int, rng, prob=(0.1, 1.0), rival_prob=None) -> SocialNetwork:
    """Uniformly random simple digraph with ``m`` edges and probabilities drawn from ``prob``.

    ``prob`` is a (low, high) range or a float; ``rival_prob`` likewise, defaulting to the
    positive-cascade values.
    """
    rng = np.random.default_rng(rng)
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    if m > len(pairs):
        raise ValidationError(f"cannot place {m} edges on {n} nodes")
    pick = rng.choice(len(pairs), size=m, replace=False)
    src = np.array([pairs[i][0] for i in pick], dtype=np.int64)
    dst = np.array([pairs[i][1] for i in pick], dtype=np.int64)

    def draw(spec):
        if isinstance(spec, (int, float)):
            return np.full(m, float(spec))
        lo, hi = spec
        return 1.0 - rng.uniform(1.0 - hi, 1.0 - lo, size=m)  # lands in (lo, hi]

    pp = draw(prob)
    pr = pp.copy() if rival_prob is None else draw(rival_prob)
    return SocialNetwork(n, src, dst, pp, pr, None)


def preferential_network(n: int, attach: int, seed) -> SocialNetwork:
    """Barabasi-Albert graph with each undirected edge doubled, weighted by 1/in-degree."""
    import networkx as nx

    g = nx.barabasi_albert_graph(n, attach, seed=seed)
    und = np.array(sorted(g.edges()), dtype=np.int64)
    src = np.concatenate([und[:, 0], und[:, 1]])
    dst = np.concatenate([und[:, 1], und[:, 0]])
    indeg = np.bincount(dst, minlength=n)
    pp = 1.0 / indeg[dst]
    return SocialNetwork(n, src, dst, pp, pp.copy(), None)
