"""
Random geometric net graphs.

Nets are scattered uniformly on a square of side sqrt(N) and each pair is
linked with probability alpha * min(1, d^2 / dist^2). Isolated nets are then
tied to their nearest neighbour and the remaining components are merged at
random until the graph is connected.
"""
import math
from typing import List

import networkx as nx
import numpy as np
from loguru import logger
from scipy.spatial import cKDTree

from app.netgen.gen_config import GenConfig
from app.utils.helpers import substream
from config.constants import RngStream, Topology


def _sample_edges(graph: nx.Graph, pos: np.ndarray, cfg: GenConfig, rng: np.random.Generator):
    n = len(pos)
    d2 = cfg.distance ** 2
    for i in range(n - 1):
        delta = pos[i + 1:] - pos[i]
        dist2 = np.einsum("ij,ij->i", delta, delta)
        prob = cfg.alpha_conn * np.minimum(1.0, d2 / np.maximum(dist2, np.finfo(float).tiny))
        hits = np.flatnonzero(rng.random(n - i - 1) < prob)
        graph.add_edges_from((i, i + 1 + int(j)) for j in hits)


def _link_isolated(graph: nx.Graph, pos: np.ndarray):
    tree = cKDTree(pos)
    for node in sorted(nx.isolates(graph)):
        _, idx = tree.query(pos[node], k=2)
        neighbour = next(int(j) for j in idx if j != node)
        graph.add_edge(node, neighbour)


def _merge_components(graph: nx.Graph, rng: np.random.Generator) -> int:
    """Join components pairwise, uniform over components and over nets in each."""
    components: List[List[int]] = sorted(
        (sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0]
    )
    merges = 0
    while len(components) > 1:
        i, j = sorted(rng.choice(len(components), size=2, replace=False))
        a = components[i][rng.integers(len(components[i]))]
        b = components[j][rng.integers(len(components[j]))]
        graph.add_edge(a, b)
        merged = components[i] + components[j]
        del components[j], components[i]
        components.append(merged)
        merges += 1
    return merges


def gen_topology(cfg: GenConfig, rng: np.random.Generator = None) -> nx.Graph:
    """
    Generate a connected net graph.

    Args:
        cfg (GenConfig): Generator settings (n_nets, distance, alpha_conn, topology)
        rng (np.random.Generator, optional): Topology stream. Defaults to the
            seed's topology substream.

    Returns:
        nx.Graph: Nodes 0..N-1 with a "pos" attribute, edges with a "length" attribute
    """
    rng = rng if rng is not None else substream(cfg.seed, RngStream.TOPOLOGY)
    n = cfg.n_nets
    pos = rng.uniform(0.0, math.sqrt(n), size=(n, 2))

    graph = nx.Graph()
    graph.add_nodes_from((i, {"pos": (float(pos[i, 0]), float(pos[i, 1]))}) for i in range(n))
    _sample_edges(graph, pos, cfg, rng)
    _link_isolated(graph, pos)
    merges = _merge_components(graph, rng)

    for a, b in graph.edges():
        graph[a][b]["length"] = float(np.linalg.norm(pos[a] - pos[b]))

    if cfg.topology == Topology.TREE:
        graph = nx.minimum_spanning_tree(graph, weight="length", algorithm="kruskal")

    logger.info(
        f"Generated {cfg.topology} topology: {n} nets, {graph.number_of_edges()} edges, "
        f"average degree {average_degree(graph):.2f} ({merges} component merges)"
    )
    return graph


def average_degree(graph: nx.Graph) -> float:
    return 2.0 * graph.number_of_edges() / max(graph.number_of_nodes(), 1)
