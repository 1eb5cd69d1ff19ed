"""Meta-graph feature vectors.

A graph's feature vector concatenates the 58-statistic summary of each of the
7 structural distributions with 3 global statistics, then appends a
sign-preserving log transform of every entry, doubling the length:

    d = 2 * (7 * 58 + 3) = 818

The schema is versioned; any change to extractors, summary functions, or
ordering must bump SCHEMA_VERSION so stale feature files and model bundles
are rejected instead of silently misread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extractors import EXTRACTOR_IDS, adjacency_matrix, extract_structural
from .graphs import Graph
from .summaries import SUMMARY_NAMES, summarize

SCHEMA_VERSION = 1
GLOBAL_STAT_NAMES = ("global_density", "global_wedge_density", "global_assortativity")
FEATURE_DIM = 2 * (len(EXTRACTOR_IDS) * len(SUMMARY_NAMES) + len(GLOBAL_STAT_NAMES))


@dataclass(frozen=True)
class MetaFeatureVector:
    values: np.ndarray
    schema_version: int = SCHEMA_VERSION


def feature_names() -> list[str]:
    base = [f"{ex}_{st}" for ex in EXTRACTOR_IDS for st in SUMMARY_NAMES]
    base += list(GLOBAL_STAT_NAMES)
    return base + [f"log_{name}" for name in base]


def global_stats(graph: Graph) -> np.ndarray:
    """[edge density, two-hop (wedge) density, degree assortativity].

    Wedge density is the fraction of ordered distinct node pairs at distance
    <= 2 through at least one common neighbor, i.e. the off-diagonal fill of
    A @ A computed sparsely. Assortativity is the Pearson correlation of
    endpoint degrees over both orientations of each edge; 0 when undefined.
    """
    n = graph.node_count
    e = graph.edge_count
    density = 2.0 * e / (n * (n - 1)) if n > 1 else 0.0

    if n > 1 and e > 0:
        a = adjacency_matrix(graph)
        two_hop = (a @ a).tocsr()
        two_hop.eliminate_zeros()
        two_hop = two_hop.tocoo()
        off_diag = int(np.count_nonzero(two_hop.row != two_hop.col))
        wedge_density = off_diag / (n * (n - 1))
    else:
        wedge_density = 0.0

    if e > 0:
        deg = graph.degrees().astype(np.float64)
        du = deg[graph.edge_array[:, 0]]
        dv = deg[graph.edge_array[:, 1]]
        x = np.concatenate([du, dv])
        y = np.concatenate([dv, du])
        sx = x.std()
        if sx > 0:
            r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * y.std()))
        else:
            r = 0.0
        if not np.isfinite(r):
            r = 0.0
    else:
        r = 0.0

    return np.array([density, wedge_density, r], dtype=np.float64)


def signed_log1p(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.log1p(np.abs(x))


def meta_graph_features(graph: Graph) -> MetaFeatureVector:
    parts = [summarize(d.values) for d in extract_structural(graph)]
    parts.append(global_stats(graph))
    base = np.concatenate(parts)
    vec = np.concatenate([base, signed_log1p(base)])
    if vec.shape[0] != FEATURE_DIM:
        raise AssertionError(f"feature schema violation: {vec.shape[0]} != {FEATURE_DIM}")
    return MetaFeatureVector(vec)
