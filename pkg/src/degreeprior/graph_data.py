"""Graph and observation containers, edge-list I/O, synthetic graphs and
edge-sampling protocols."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

SAMPLING_MODES = ("uniform", "over", "under")


class EdgeListError(ValueError):
    """Malformed edge-list file or edge set."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _canonical_edges(p: int, edges: Iterable[tuple[int, int]]) -> frozenset:
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise EdgeListError(f"self-loop on node {u}")
        if not (0 <= u < p and 0 <= v < p):
            raise EdgeListError(f"edge ({u}, {v}) has an endpoint outside [0, {p})")
        out.add((u, v) if u < v else (v, u))
    return frozenset(out)


@dataclass(frozen=True)
class Network:
    """Undirected simple graph on nodes ``0..p-1``.

    Edges are stored as ``(i, j)`` pairs with ``i < j``.
    """

    p: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("node count must be positive")
        object.__setattr__(self, "edges", _canonical_edges(self.p, self.edges))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def adjacency(self) -> np.ndarray:
        E = np.zeros((self.p, self.p))
        if self.edges:
            idx = np.array(self.sorted_edges())
            E[idx[:, 0], idx[:, 1]] = 1.0
            E[idx[:, 1], idx[:, 0]] = 1.0
        return E

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.p, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


@dataclass(frozen=True)
class ObservationMask:
    """The observed subset of a network's edges (the indicator matrix Omega)."""

    p: int
    observed: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("node count must be positive")
        object.__setattr__(self, "observed", _canonical_edges(self.p, self.observed))

    @classmethod
    def from_network(cls, net: Network) -> "ObservationMask":
        return cls(net.p, net.edges)

    def as_network(self) -> Network:
        return Network(self.p, self.observed)

    @property
    def n_observed(self) -> int:
        return len(self.observed)

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.observed)

    def matrix(self) -> np.ndarray:
        return self.as_network().adjacency()


@dataclass(frozen=True)
class SamplingSpec:
    """Edge-sampling protocol.

    ``rate_hub`` applies to edges with at least one hub endpoint, ``rate_nonhub``
    to all others. Hubs are the top ``hub_fraction`` of nodes by degree.
    """

    mode: str = "uniform"
    rate_hub: float = 0.9
    rate_nonhub: float = 0.9
    hub_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.mode not in SAMPLING_MODES:
            raise ValueError(f"mode must be one of {SAMPLING_MODES}, got {self.mode!r}")
        for name in ("rate_hub", "rate_nonhub"):
            rate = getattr(self, name)
            if not 0.0 < rate <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {rate}")
        if not 0.0 < self.hub_fraction < 1.0:
            raise ValueError("hub_fraction must lie in (0, 1)")
        if self.mode == "uniform" and self.rate_hub != self.rate_nonhub:
            raise ValueError("uniform sampling requires rate_hub == rate_nonhub")


_HEADER = re.compile(r"^#\s*p\s*=\s*(-?\d+)\s*$")


def _parse_header(line: str, lineno: int) -> int | None:
    match = _HEADER.match(line)
    if match is None:
        return None
    p = int(match.group(1))
    if p < 1:
        raise EdgeListError("declared node count must be positive", lineno)
    return p


def load_edge_list(path) -> Network:
    """Read an edge list of ``u<TAB>v`` lines into a :class:`Network`.

    Lines starting with ``#`` are comments, except a ``#p=<int>`` header which
    fixes the node count. Without the header, ``p`` is one more than the
    largest id seen.
    """
    declared = None
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                header = _parse_header(line, lineno)
                if header is not None:
                    if declared is not None and header != declared:
                        raise EdgeListError("conflicting node-count headers", lineno)
                    declared = header
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise EdgeListError(f"expected two node ids, got {line!r}", lineno)
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise EdgeListError(f"non-integer node id in {line!r}", lineno) from None
            if u < 0 or v < 0:
                raise EdgeListError("node ids must be non-negative", lineno)
            if u == v:
                raise EdgeListError(f"self-loop on node {u}", lineno)
            if declared is not None and max(u, v) >= declared:
                raise EdgeListError(f"node id {max(u, v)} >= declared p={declared}", lineno)
            pairs.append((u, v, lineno))
    if declared is None:
        p = 1 + max((max(u, v) for u, v, _ in pairs), default=-1)
        if p == 0:
            raise EdgeListError("empty edge list without a #p= header")
    else:
        p = declared
        for u, v, lineno in pairs:
            if max(u, v) >= p:
                raise EdgeListError(f"node id {max(u, v)} >= declared p={p}", lineno)
    return Network(p, [(u, v) for u, v, _ in pairs])


def load_labeled_edge_list(path, labels: list[str] | None = None) -> tuple[Network, list[str]]:
    """Read an edge list whose node ids are arbitrary string labels.

    Labels are numbered densely in order of first appearance, continuing
    after ``labels`` when given so that two files share ids. Returns the
    network and the label of each node id.
    """
    index: dict[str, int] = {label: i for i, label in enumerate(labels or [])}
    if len(index) != len(labels or []):
        raise ValueError("duplicate entries in the label list")
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise EdgeListError(f"expected two node labels, got {line!r}", lineno)
            if tokens[0] == tokens[1]:
                raise EdgeListError(f"self-loop on node {tokens[0]}", lineno)
            ids = [index.setdefault(t, len(index)) for t in tokens]
            pairs.append(tuple(ids))
    if not pairs:
        raise EdgeListError("edge list contains no edges")
    labels = [None] * len(index)
    for label, i in index.items():
        labels[i] = label
    return Network(len(labels), pairs), labels


def write_id_map(path, labels: list[str]) -> None:
    with open(path, "w") as fh:
        fh.write("# id\tlabel\n")
        for i, label in enumerate(labels):
            fh.write(f"{i}\t{label}\n")


def save_edge_list(path, net: Network | ObservationMask, header: Iterable[str] = ()) -> None:
    """Write ``net`` as a ``#p=`` headed edge list. ``header`` lines are
    emitted first as ``#`` comments."""
    pairs = net.sorted_edges() if isinstance(net, Network) else net.sorted_pairs()
    with open(path, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(f"#p={net.p}\n")
        for u, v in pairs:
            fh.write(f"{u}\t{v}\n")


def load_mask(path) -> ObservationMask:
    net = load_edge_list(path)
    return ObservationMask(net.p, net.edges)


def generate_power_law(p: int, m: int, seed: int | None = None) -> Network:
    """Preferential-attachment graph grown from an ``m``-clique.

    Each new node links to ``m`` distinct existing nodes chosen with
    probability proportional to degree, giving ``m*(p-m) + m*(m-1)/2`` edges.
    """
    if m < 1 or p < m + 1:
        raise ValueError(f"need m >= 1 and p >= m + 1, got p={p}, m={m}")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(m) for j in range(i + 1, m)]
    deg = np.zeros(p)
    deg[:m] = m - 1
    for new in range(m, p):
        weights = deg[:new]
        if np.count_nonzero(weights) < m:
            # only reachable for m=1 with an edgeless seed graph
            targets = rng.choice(new, size=m, replace=False)
        else:
            targets = rng.choice(new, size=m, replace=False, p=weights / weights.sum())
        for t in targets:
            edges.append((int(t), new))
            deg[t] += 1
        deg[new] = m
    return Network(p, edges)


def ceil_fraction(fraction: float, n: int) -> int:
    """``ceil(fraction * n)``, ignoring round-off such as ``0.1 * 30 = 3.0000000000000004``."""
    return math.ceil(round(fraction * n, 9))


def hubs_from_degrees(degrees, hub_fraction: float = 0.2) -> frozenset:
    """The ``ceil(hub_fraction * p)`` highest-degree nodes, lower id first on ties."""
    if not 0.0 < hub_fraction < 1.0:
        raise ValueError("hub_fraction must lie in (0, 1)")
    deg = np.asarray(degrees)
    n_hubs = ceil_fraction(hub_fraction, deg.size)
    order = np.lexsort((np.arange(deg.size), -deg))
    return frozenset(int(i) for i in order[:n_hubs])


def hub_set(net: Network, hub_fraction: float = 0.2) -> frozenset:
    return hubs_from_degrees(net.degrees(), hub_fraction)


def sample_observations(net: Network, spec: SamplingSpec) -> ObservationMask:
    """Keep each edge independently; hub-adjacent edges at ``spec.rate_hub``,
    the rest at ``spec.rate_nonhub``."""
    hubs = hub_set(net, spec.hub_fraction)
    rng = np.random.default_rng(spec.seed)
    pairs = net.sorted_edges()
    draws = rng.random(len(pairs))
    kept = []
    for (u, v), r in zip(pairs, draws):
        rate = spec.rate_hub if (u in hubs or v in hubs) else spec.rate_nonhub
        if r < rate:
            kept.append((u, v))
    return ObservationMask(net.p, kept)


def sampling_report(net: Network, mask: ObservationMask, hub_fraction: float = 0.2) -> dict:
    """Per-class kept/total edge counts for a mask drawn from ``net``."""
    hubs = hub_set(net, hub_fraction)
    counts = {"hub_total": 0, "hub_kept": 0, "nonhub_total": 0, "nonhub_kept": 0}
    for u, v in net.edges:
        cls = "hub" if (u in hubs or v in hubs) else "nonhub"
        counts[f"{cls}_total"] += 1
        if (u, v) in mask.observed:
            counts[f"{cls}_kept"] += 1
    counts["n_hubs"] = len(hubs)
    return counts


def observed_degrees(mask: ObservationMask) -> np.ndarray:
    o = np.zeros(mask.p, dtype=np.int64)
    for u, v in mask.observed:
        o[u] += 1
        o[v] += 1
    return o
