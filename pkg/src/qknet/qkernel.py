"""Variational quantum kernel built from a layered re-uploading feature map.

One layer applies Hadamards to every qubit, encodes data through RZ rotations,
applies trainable RY rotations, then entangles with a CNOT ring. The kernel of
two points is the all-zeros outcome probability of the compute-uncompute
interference circuit: run the map for x, then the adjoint of the map for x'.

Noise is modeled three ways: exact (none), per-gate local depolarizing at rate
p_tilde after every executed gate, or a global analytic map that mixes the
exact kernel value toward 1/D at an effective rate p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qsim
from .qsim import Gate

NOISE_MODES = ("exact", "per_gate", "global")
ADJOINT_NOISE_PLACEMENTS = ("mirror", "after")


@dataclass(frozen=True)
class FeatureMapSpec:
    """Circuit shape: ``n_qubits`` wires, ``layers`` re-uploading layers.

    ``embedding`` maps qubit index to feature index. The default alternates
    features across the wires (qubit q reads feature q mod d).
    """

    n_qubits: int = 5
    layers: int = 8
    embedding: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 1 <= self.n_qubits <= qsim.MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {qsim.MAX_QUBITS}]")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.embedding is not None and len(self.embedding) != self.n_qubits:
            raise ValueError("embedding must list one feature index per qubit")

    @property
    def n_params(self) -> int:
        return self.n_qubits * self.layers

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def feature_assignment(self, data_dim: int) -> tuple[int, ...]:
        """Feature index read by each qubit, validated against ``data_dim``."""
        if self.embedding is None:
            assign = tuple(q % data_dim for q in range(self.n_qubits))
        else:
            assign = self.embedding
        if any(not 0 <= f < data_dim for f in assign):
            raise ValueError(
                f"embedding {assign} references features outside dimension {data_dim}"
            )
        return assign


@dataclass(frozen=True)
class NoiseModel:
    """Noise configuration for kernel evaluation.

    ``mode`` is one of exact / per_gate / global. ``p`` is the per-gate rate
    p_tilde in per_gate mode and the effective global rate in global mode.
    ``shots`` switches the returned kernel to a sampled estimate. In noisy
    modes ``adjoint_noise`` places the channels of the uncompute half either
    mirrored (before each adjoint gate, making the half the exact channel
    adjoint of the compute half) or after each gate like the forward half.
    Mirrored placement is the default; it keeps the kernel exactly symmetric.
    """

    mode: str = "exact"
    p: float = 0.0
    shots: int | None = None
    adjoint_noise: str = "mirror"

    def __post_init__(self):
        if self.mode not in NOISE_MODES:
            raise ValueError(f"mode must be one of {NOISE_MODES}, got {self.mode!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise rate must be in [0, 1], got {self.p}")
        if self.mode == "exact" and self.p != 0.0:
            raise ValueError("exact mode carries no noise rate")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be a positive count")
        if self.adjoint_noise not in ADJOINT_NOISE_PLACEMENTS:
            raise ValueError(
                f"adjoint_noise must be one of {ADJOINT_NOISE_PLACEMENTS}"
            )


def effective_rate(p_tilde: float, layers: int) -> float:
    """Global rate matching 2L layers of per-gate noise: 1 - (1 - p_tilde)^(2L)."""
    if not 0.0 <= p_tilde <= 1.0:
        raise ValueError(f"p_tilde must be in [0, 1], got {p_tilde}")
    if layers < 1:
        raise ValueError("layers must be >= 1")
    return 1.0 - (1.0 - p_tilde) ** (2 * layers)


def analytic_noisy_kernel(k_exact: float, p: float, dim: int) -> float:
    """Mix an exact kernel value toward the flat baseline: (1-p) K + p / D."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if dim < 2:
        raise ValueError("dim must be at least 2")
    return (1.0 - p) * k_exact + p / dim


def shot_sample(k_value, shots: int, rng: np.random.Generator):
    """Mean of ``shots`` Bernoulli(k_value) draws; elementwise on arrays."""
    if shots < 1:
        raise ValueError("shots must be a positive count")
    k = np.asarray(k_value, dtype=float)
    if np.any(k < 0.0) or np.any(k > 1.0):
        raise ValueError("kernel values must be in [0, 1]")
    sampled = rng.binomial(shots, k) / float(shots)
    return float(sampled) if np.isscalar(k_value) else sampled


def build_layer_gates(spec: FeatureMapSpec, theta_layer, x) -> list[Gate]:
    """Gate sequence of one layer: H wall, RZ data wall, RY wall, CNOT ring.

    ``theta_layer`` holds one trainable angle per qubit, ``x`` the data point.
    """
    theta_layer = np.asarray(theta_layer, dtype=float)
    x = np.asarray(x, dtype=float)
    if theta_layer.shape != (spec.n_qubits,):
        raise ValueError(
            f"theta_layer must have shape ({spec.n_qubits},), got {theta_layer.shape}"
        )
    assign = spec.feature_assignment(x.shape[0])
    gates = [qsim.hadamard(q) for q in range(spec.n_qubits)]
    gates += [qsim.rot_z(q, x[assign[q]]) for q in range(spec.n_qubits)]
    gates += [qsim.rot_y(q, theta_layer[q]) for q in range(spec.n_qubits)]
    if spec.n_qubits > 1:
        gates += [
            qsim.cnot(q, (q + 1) % spec.n_qubits) for q in range(spec.n_qubits)
        ]
    return gates


def build_circuit_gates(spec: FeatureMapSpec, theta, x) -> list[Gate]:
    """All gates of the feature map U(theta, x), layer by layer."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_params,):
        raise ValueError(
            f"theta must have shape ({spec.n_params},), got {theta.shape}"
        )
    gates: list[Gate] = []
    for layer in range(spec.layers):
        block = theta[layer * spec.n_qubits : (layer + 1) * spec.n_qubits]
        gates += build_layer_gates(spec, block, x)
    return gates


def adjoint_gates(gates) -> list[Gate]:
    """Reverse the gate order and invert each gate (rotation angles negate)."""
    return [g.adjoint() for g in reversed(gates)]


def _run_noisy(rho, gates, p_tilde: float, noise_before: bool):
    for g in gates:
        if noise_before:
            for q in g.qubits:
                rho = qsim.apply_depolarizing_local(rho, q, p_tilde)
        rho = qsim.apply_gate(rho, g)
        if not noise_before:
            for q in g.qubits:
                rho = qsim.apply_depolarizing_local(rho, q, p_tilde)
    return rho


def _interference_value(
    spec: FeatureMapSpec,
    theta_fwd,
    theta_adj,
    x1,
    x2,
    noise: NoiseModel,
) -> float:
    """All-zeros probability of [forward map for x1][adjoint map for x2].

    ``theta_fwd`` and ``theta_adj`` parameterize the two halves separately so
    the parameter-shift rule can displace a single occurrence.
    """
    rho = qsim.zero_state(spec.n_qubits)
    fwd = build_circuit_gates(spec, theta_fwd, x1)
    adj = adjoint_gates(build_circuit_gates(spec, theta_adj, x2))
    if noise.mode == "per_gate" and noise.p > 0.0:
        rho = _run_noisy(rho, fwd, noise.p, noise_before=False)
        mirror = noise.adjoint_noise == "mirror"
        rho = _run_noisy(rho, adj, noise.p, noise_before=mirror)
    else:
        rho = qsim.apply_circuit(rho, fwd)
        rho = qsim.apply_circuit(rho, adj)
    value = qsim.projector_probability(rho)
    if noise.mode == "global":
        value = analytic_noisy_kernel(value, noise.p, spec.dim)
    return value


def kernel_eval(
    spec: FeatureMapSpec,
    theta,
    x1,
    x2,
    noise: NoiseModel = NoiseModel(),
    rng: np.random.Generator | None = None,
) -> float:
    """Kernel value K(x1, x2) under the configured noise model.

    With ``noise.shots`` set, returns a sampled estimate and requires ``rng``.
    """
    value = _interference_value(spec, theta, theta, x1, x2, noise)
    if noise.shots is not None:
        if rng is None:
            raise ValueError("sampled kernel evaluation needs an rng")
        value = shot_sample(value, noise.shots, rng)
    return value


def kernel_grad(
    spec: FeatureMapSpec,
    theta,
    x1,
    x2,
    noise: NoiseModel,
    t: int,
) -> float:
    """Exact derivative dK/d theta_t by the parameter-shift rule.

    theta_t enters twice, once in each half of the interference circuit, so
    the derivative sums a two-point shift over both occurrences (four kernel
    evaluations). Shift gradients are defined on expectations, not samples.
    """
    if noise.shots is not None:
        raise ValueError("parameter-shift gradients require expectation values")
    theta = np.asarray(theta, dtype=float)
    if not 0 <= t < spec.n_params:
        raise ValueError(f"parameter index {t} out of range")
    half = 0.5 * np.pi
    grad = 0.0
    for slot in ("fwd", "adj"):
        for sign in (1.0, -1.0):
            shifted = theta.copy()
            shifted[t] += sign * half
            if slot == "fwd":
                val = _interference_value(spec, shifted, theta, x1, x2, noise)
            else:
                val = _interference_value(spec, theta, shifted, x1, x2, noise)
            grad += 0.5 * sign * val
    return grad


def parameter_shift_gradient(
    spec: FeatureMapSpec, theta, x1, x2, noise: NoiseModel
) -> np.ndarray:
    """Full gradient of one kernel entry, one shifted pair per occurrence."""
    return np.array(
        [kernel_grad(spec, theta, x1, x2, noise, t) for t in range(spec.n_params)]
    )
