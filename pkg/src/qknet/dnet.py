"""Network topology, mixing weights, robust aggregation, message attacks.

A communication round is a barrier-synchronized superstep: every node computes
a half-step parameter vector, messages cross the edges, and each node mixes
what it received with doubly stochastic weights. Attackers replace their
half-step with a vector crafted from the messages they collected; the robust
rule bounds how far any single message can drag the receiver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NetError(ValueError):
    pass


HONEST = "honest"
GAUSSIAN_ATTACKER = "gaussian_attacker"
SIGNFLIP_ATTACKER = "signflip_attacker"
ROLES = (HONEST, GAUSSIAN_ATTACKER, SIGNFLIP_ATTACKER)


@dataclass(frozen=True)
class Topology:
    """Undirected connected graph without self-loops."""

    n_nodes: int
    edges: frozenset
    kind: str = "custom"

    def __post_init__(self):
        if self.n_nodes < 1:
            raise NetError("need at least one node")
        edges = set()
        for e in self.edges:
            a, b = e
            if a == b:
                raise NetError("self-loops are not stored")
            if not (0 <= a < self.n_nodes and 0 <= b < self.n_nodes):
                raise NetError(f"edge {e} out of range")
            edges.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(edges))
        if not self._connected():
            raise NetError("topology must be connected")

    def _connected(self) -> bool:
        if self.n_nodes == 1:
            return True
        seen = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for j in self.neighbors(i):
                if j not in seen:
                    seen.add(j)
                    frontier.append(j)
        return len(seen) == self.n_nodes

    def neighbors(self, i: int) -> list:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))


def ring(n_nodes: int) -> Topology:
    if n_nodes < 3:
        raise NetError("a ring needs at least 3 nodes")
    edges = frozenset((i, (i + 1) % n_nodes) for i in range(n_nodes))
    return Topology(n_nodes, edges, kind="ring")


def complete(n_nodes: int) -> Topology:
    # n_nodes = 1 is the degenerate single-vertex graph (no edges)
    if n_nodes < 1:
        raise NetError("a complete graph needs at least 1 node")
    edges = frozenset((i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes))
    return Topology(n_nodes, edges, kind="complete")


def metropolis_weights(top: Topology) -> np.ndarray:
    """Symmetric doubly stochastic W from node degrees."""
    n = top.n_nodes
    w = np.zeros((n, n))
    for a, b in top.edges:
        w[a, b] = w[b, a] = 1.0 / (1.0 + max(top.degree(a), top.degree(b)))
    for i in range(n):
        w[i, i] = 1.0 - w[i].sum()
    return w


def check_weight_matrix(w: np.ndarray, atol: float = 1e-12) -> None:
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise NetError("weight matrix must be square")
    if np.any(w < -atol):
        raise NetError("weights must be nonnegative")
    n = len(w)
    if not np.allclose(w.sum(axis=1), 1.0, atol=atol):
        raise NetError("rows must sum to 1")
    if not np.allclose(w.sum(axis=0), 1.0, atol=atol):
        raise NetError("columns must sum to 1")
    if spectral_gap(w) >= 1.0 - 1e-12:
        raise NetError("deflated spectral radius must be below 1")


def spectral_gap(w: np.ndarray) -> float:
    """Largest |eigenvalue| of W deflated by the consensus projector."""
    n = len(w)
    deflated = w - np.full((n, n), 1.0 / n)
    return float(np.max(np.abs(np.linalg.eigvals(deflated))))


def aggregate_plain(messages: dict, weights_row: np.ndarray) -> np.ndarray:
    """Weighted average over the closed neighborhood (self included)."""
    out = None
    total = 0.0
    for j, w in enumerate(weights_row):
        if w == 0.0:
            continue
        if j not in messages:
            raise NetError(f"missing message from node {j}")
        total += w
        term = w * np.asarray(messages[j], dtype=float)
        out = term if out is None else out + term
    if out is None or abs(total - 1.0) > 1e-9:
        raise NetError("weights over the neighborhood must sum to 1")
    return out


def clip(v: np.ndarray, tau: float) -> np.ndarray:
    if not tau > 0:
        raise NetError("tau must be positive")
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm <= tau:
        return v.copy()
    return (tau / norm) * v


SELF_CENTERED = "self_centered"
LITERAL = "literal"


def aggregate_robust(self_theta: np.ndarray, messages: dict,
                     weights_row: np.ndarray, tau: float,
                     reference: str = SELF_CENTERED) -> np.ndarray:
    """Clipping aggregation: bound each message's pull before averaging.

    self_centered clips the displacement from the local half-step and adds it
    back, so the result stays within tau of self_theta. literal clips the raw
    vectors, which pins the whole iterate into a tau-ball; kept for comparison.
    """
    self_theta = np.asarray(self_theta, dtype=float)
    if reference == SELF_CENTERED:
        shifted = {j: self_theta + clip(np.asarray(m, float) - self_theta, tau)
                   for j, m in messages.items()}
        return aggregate_plain(shifted, weights_row)
    if reference == LITERAL:
        clipped = {j: clip(np.asarray(m, float), tau) for j, m in messages.items()}
        return aggregate_plain(clipped, weights_row)
    raise NetError(f"unknown clipping reference {reference!r}")


def attack_gaussian(neighbor_messages, rng: np.random.Generator) -> np.ndarray:
    """Draw from a Normal fitted elementwise to the received messages.

    Mean and population variance are taken per coordinate across the
    neighbors, so when every neighbor sends the same vector the attacker
    echoes it exactly.
    """
    msgs = [np.asarray(m, dtype=float) for m in neighbor_messages]
    if not msgs:
        raise NetError("attacker needs at least one received message")
    stack = np.stack(msgs)
    # coordinates on which every neighbor agrees echo bit-exactly; the
    # float mean of identical values can drift by an ulp otherwise
    same = np.all(stack == stack[0], axis=0)
    mean = np.where(same, stack[0], stack.mean(axis=0))
    std = np.where(same, 0.0, stack.std(axis=0))
    return rng.normal(mean, std)


def attack_signflip(neighbor_messages) -> np.ndarray:
    msgs = [np.asarray(m, dtype=float) for m in neighbor_messages]
    if not msgs:
        raise NetError("attacker needs at least one received message")
    return -np.stack(msgs).mean(axis=0)


def consensus_distance(thetas) -> float:
    """Largest node deviation from the network mean, in the 2-norm."""
    stack = np.stack([np.asarray(t, dtype=float) for t in thetas])
    if len(stack) < 2:
        raise NetError("consensus distance needs at least two nodes")
    mean = stack.mean(axis=0)
    return float(np.max(np.linalg.norm(stack - mean, axis=1)))
