"""Batched density-matrix evaluation of feature-map states and gradients.

`qkernel.kernel_eval` walks the interference circuit one gate at a time, which
is the readable reference path. Training loops need thousands of kernel
entries per round, so this module simulates the forward feature map for a
whole batch of data points at once and derives kernel matrices from the
Hilbert-Schmidt inner products K(x, x') = Tr[rho(x) rho(x')]. With mirrored
adjoint-noise placement (the default `NoiseModel`) that identity is exact:
the uncompute half is the channel adjoint of the compute half, so its
adjoint-propagated projector equals the forward state of the other point.

Gradients come from one reverse sweep per batch (adjoint-state method) instead
of per-parameter shifted evaluations. Both routes are cross-checked in the
test suite; the parameter-shift rule stays the reference.

Within each layer the three single-qubit walls (H, RZ, RY) commute with
single-qubit depolarizing on the same wire, so the wall is applied as one
dense per-element unitary followed by depolarizing at the composed rate
1 - (1 - p)^3. That rewrite is exact. CNOT does not commute with local
depolarizing, so ring noise stays interleaved with the ring.

``theta`` may be a single parameter vector shared by the batch or one vector
per row, which lets several nodes' evaluations share one call chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qkernel import FeatureMapSpec, NoiseModel

_SQRT_HALF = 1.0 / np.sqrt(2.0)
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


def _cnot_perm(control: int, target: int, n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    cbit = (idx >> (n - 1 - control)) & 1
    return np.where(cbit == 1, idx ^ (1 << (n - 1 - target)), idx)


def _apply_perm(rho: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return rho[:, perm[:, None], perm[None, :]]


def _depolarize_inplace(rho: np.ndarray, q: int, p: float, n: int) -> None:
    """Local depolarizing on wire q, (1-p) rho + p Tr_q rho (x) I/2, in place."""
    b, d = rho.shape[0], rho.shape[1]
    left = 1 << q
    right = d >> (q + 1)
    r = rho.reshape(b, left, 2, right, left, 2, right)
    tr = r[:, :, 0, :, :, 0, :] + r[:, :, 1, :, :, 1, :]
    rho *= 1.0 - p
    tr *= 0.5 * p
    r[:, :, 0, :, :, 0, :] += tr
    r[:, :, 1, :, :, 1, :] += tr


def _wall_unitary(
    spec: FeatureMapSpec, theta_layer: np.ndarray, x: np.ndarray, assign
) -> np.ndarray:
    """Dense (B, D, D) unitary of one RY(theta) RZ(x_f) H wall.

    ``theta_layer`` is (n,) shared or (B, n) per element.
    """
    b = x.shape[0]
    n = spec.n_qubits
    z = x[:, list(assign)]
    ez = np.exp(-0.5j * z)
    rzh = np.empty((b, n, 2, 2), dtype=complex)
    rzh[..., 0, 0] = ez * _SQRT_HALF
    rzh[..., 0, 1] = ez * _SQRT_HALF
    rzh[..., 1, 0] = np.conj(ez) * _SQRT_HALF
    rzh[..., 1, 1] = -np.conj(ez) * _SQRT_HALF
    c = np.cos(0.5 * theta_layer)
    s = np.sin(0.5 * theta_layer)
    if theta_layer.ndim == 1:
        ry = np.zeros((n, 2, 2), dtype=complex)
    else:
        ry = np.zeros((b, n, 2, 2), dtype=complex)
    ry[..., 0, 0] = c
    ry[..., 0, 1] = -s
    ry[..., 1, 0] = s
    ry[..., 1, 1] = c
    if theta_layer.ndim == 1:
        mats = np.einsum("qij,bqjk->bqik", ry, rzh)
    else:
        mats = np.einsum("bqij,bqjk->bqik", ry, rzh)
    u = mats[:, 0]
    for q in range(1, n):
        m = mats[:, q]
        u = np.einsum("bij,bkl->bikjl", u, m).reshape(b, u.shape[1] * 2, -1)
    return u


@dataclass
class LayerTape:
    sigma: np.ndarray  # batch state right after the single-qubit wall
    unitary: np.ndarray  # dense wall unitary used by the pullback


def _noise_rates(noise: NoiseModel) -> tuple[float, float]:
    """(per-gate rate, fused wall rate) for the active noise model."""
    if noise.mode == "per_gate" and noise.p > 0.0:
        p = noise.p
        return p, 1.0 - (1.0 - p) ** 3
    return 0.0, 0.0


def _theta_layer(theta: np.ndarray, layer: int, n: int) -> np.ndarray:
    if theta.ndim == 1:
        return theta[layer * n : (layer + 1) * n]
    return theta[:, layer * n : (layer + 1) * n]


def _check_theta(spec: FeatureMapSpec, theta: np.ndarray, b: int) -> None:
    if theta.shape != (spec.n_params,) and theta.shape != (b, spec.n_params):
        raise ValueError(
            f"theta must have shape ({spec.n_params},) or ({b}, {spec.n_params}),"
            f" got {theta.shape}"
        )


def feature_states(
    spec: FeatureMapSpec,
    theta,
    x,
    noise: NoiseModel = NoiseModel(),
    noise_before: bool = False,
    record_tape: bool = False,
):
    """Simulate the noisy feature map for every row of ``x``.

    Returns ``(states, tapes)``; ``tapes`` is None unless ``record_tape``.
    ``noise_before`` switches per-gate channels to precede their gates, the
    placement that shows up when the trailing-noise adjoint half of an
    interference circuit is pulled back onto the projector (only used by the
    "after" adjoint placement).
    """
    theta = np.asarray(theta, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    b = x.shape[0]
    _check_theta(spec, theta, b)
    n = spec.n_qubits
    d = spec.dim
    assign = spec.feature_assignment(x.shape[1])
    p_gate, p_wall = _noise_rates(noise)

    rho = np.zeros((b, d, d), dtype=complex)
    rho[:, 0, 0] = 1.0
    perms = [_cnot_perm(k, (k + 1) % n, n) for k in range(n)] if n > 1 else []
    tapes: list[LayerTape] | None = [] if record_tape else None

    for layer in range(spec.layers):
        u = _wall_unitary(spec, _theta_layer(theta, layer, n), x, assign)
        if noise_before and p_wall > 0.0:
            for q in range(n):
                _depolarize_inplace(rho, q, p_wall, n)
        rho = np.matmul(np.matmul(u, rho), u.conj().swapaxes(1, 2))
        if tapes is not None:
            tapes.append(LayerTape(sigma=rho.copy(), unitary=u))
        if not noise_before and p_wall > 0.0:
            for q in range(n):
                _depolarize_inplace(rho, q, p_wall, n)
        for k in range(len(perms)):
            qa, qb = k, (k + 1) % n
            if noise_before and p_gate > 0.0:
                _depolarize_inplace(rho, qa, p_gate, n)
                _depolarize_inplace(rho, qb, p_gate, n)
            rho = _apply_perm(rho, perms[k])
            if not noise_before and p_gate > 0.0:
                _depolarize_inplace(rho, qa, p_gate, n)
                _depolarize_inplace(rho, qb, p_gate, n)
    return rho, tapes


def gram_from_states(states_a: np.ndarray, states_b: np.ndarray | None = None):
    """Kernel block K[i, j] = Tr[rho_a(i) rho_b(j)], clipped to [0, 1]."""
    a = states_a.reshape(states_a.shape[0], -1)
    bm = a if states_b is None else states_b.reshape(states_b.shape[0], -1)
    k = (a @ bm.conj().T).real
    return np.clip(k, 0.0, 1.0)


def backward(
    spec: FeatureMapSpec,
    noise: NoiseModel,
    tapes: list[LayerTape],
    cost_ops: np.ndarray,
    per_element: bool = False,
) -> np.ndarray:
    """Gradient of sum_b Tr[W_b rho_b(theta)] for Hermitian cost ops W.

    ``tapes`` must come from a ``noise_before=False`` forward pass with the
    same noise model. The costate starts at the cost operators and is pulled
    back through the channel adjoints (depolarizing and CNOT conjugation are
    self-adjoint); every RY angle contributes (-i/2) Tr(Y_q [sigma, costate])
    at its wall. The global analytic map is an affine rescale the caller
    applies to the cost weights. With ``per_element`` the per-row terms
    d Tr[W_b rho_b] / d theta come back as (B, T) instead of summed rows,
    which is the full gradient split when each row carries its own theta.
    """
    n = spec.n_qubits
    if len(tapes) != spec.layers:
        raise ValueError("tape does not match the circuit depth")
    p_gate, p_wall = _noise_rates(noise)
    perms = [_cnot_perm(k, (k + 1) % n, n) for k in range(n)] if n > 1 else []
    lam = np.array(cost_ops, dtype=complex, copy=True)
    b = lam.shape[0]
    grad = np.zeros((b, spec.n_params))
    for layer in range(spec.layers - 1, -1, -1):
        for k in range(len(perms) - 1, -1, -1):
            qa, qb = k, (k + 1) % n
            if p_gate > 0.0:
                _depolarize_inplace(lam, qb, p_gate, n)
                _depolarize_inplace(lam, qa, p_gate, n)
            lam = _apply_perm(lam, perms[k])
        if p_wall > 0.0:
            for q in range(n):
                _depolarize_inplace(lam, q, p_wall, n)
        tape = tapes[layer]
        comm = tape.sigma @ lam - lam @ tape.sigma
        for q in range(n):
            left = 1 << q
            right = spec.dim >> (q + 1)
            cv = comm.reshape(b, left, 2, right, left, 2, right)
            cq = np.einsum("blarlcr->bac", cv)
            grad[:, layer * n + q] = ((-0.5j) * np.einsum("ac,bca->b", _Y, cq)).real
        u = tape.unitary
        lam = np.matmul(np.matmul(u.conj().swapaxes(1, 2), lam), u)
    return grad if per_element else grad.sum(axis=0)


def pair_kernel_grad(
    spec: FeatureMapSpec, theta, x1, x2, noise: NoiseModel
) -> tuple[float, np.ndarray]:
    """(K(x1, x2), dK/dtheta) through the state-overlap route (mirror only)."""
    if noise.adjoint_noise != "mirror":
        raise ValueError("state-overlap gradients need mirrored adjoint noise")
    if noise.shots is not None:
        raise ValueError("gradients require expectation values")
    x = np.vstack([np.asarray(x1, float), np.asarray(x2, float)])
    states, tapes = feature_states(spec, theta, x, noise, record_tape=True)
    k = float(gram_from_states(states[:1], states[1:2])[0, 0])
    cost = states[::-1].copy()
    grad = backward(spec, noise, tapes, cost)
    if noise.mode == "global":
        k = (1.0 - noise.p) * k + noise.p / spec.dim
        grad = (1.0 - noise.p) * grad
    return k, grad


def _affine_global(k: np.ndarray, noise: NoiseModel, dim: int) -> np.ndarray:
    if noise.mode == "global":
        return (1.0 - noise.p) * k + noise.p / dim
    return k


def _reference_gram(spec, theta, xa, xb, noise) -> np.ndarray:
    from . import qkernel

    out = np.empty((xa.shape[0], xb.shape[0]))
    for i in range(xa.shape[0]):
        for j in range(xb.shape[0]):
            out[i, j] = qkernel.kernel_eval(spec, theta, xa[i], xb[j], noise)
    return out


def gram_matrix(spec: FeatureMapSpec, theta, x, noise: NoiseModel) -> np.ndarray:
    """Full Gram matrix, diagonal included, as exact expectation values.

    The state-overlap route covers exact, global, and mirrored per-gate
    noise; the "after" adjoint placement breaks the overlap identity, so it
    falls back to the gate-by-gate reference evaluator.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if noise.mode == "per_gate" and noise.adjoint_noise != "mirror":
        k = _reference_gram(spec, theta, x, x, noise)
        return 0.5 * (k + k.T)
    states, _ = feature_states(spec, theta, x, noise)
    return _affine_global(gram_from_states(states), noise, spec.dim)


def train_test_grams(
    spec: FeatureMapSpec, theta, x_train, x_test, noise: NoiseModel
) -> tuple[np.ndarray, np.ndarray]:
    """(train Gram, test-against-train block) in one forward simulation."""
    x_train = np.atleast_2d(np.asarray(x_train, dtype=float))
    x_test = np.atleast_2d(np.asarray(x_test, dtype=float))
    if noise.mode == "per_gate" and noise.adjoint_noise != "mirror":
        k_train = _reference_gram(spec, theta, x_train, x_train, noise)
        k_cross = _reference_gram(spec, theta, x_test, x_train, noise)
        return 0.5 * (k_train + k_train.T), k_cross
    states, _ = feature_states(spec, theta, np.vstack([x_train, x_test]), noise)
    n = x_train.shape[0]
    k_train = gram_from_states(states[:n])
    k_cross = gram_from_states(states[n:], states[:n])
    d = spec.dim
    return _affine_global(k_train, noise, d), _affine_global(k_cross, noise, d)


def _alignment_weights(k: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Alignment of K with y yT and dA/dK, by the quotient rule."""
    n = len(y)
    frob = float(np.sum(k * k))
    if frob < 1e-24:
        raise ValueError("degenerate kernel: zero Frobenius norm")
    num = float(y @ k @ y)
    a = num / (n * np.sqrt(frob))
    w = np.outer(y, y) / (n * np.sqrt(frob)) - (num / (n * frob ** 1.5)) * k
    return a, w


def alignment_and_grad(
    spec: FeatureMapSpec, theta, x, y, noise: NoiseModel
) -> tuple[float, np.ndarray]:
    """Alignment of the dataset's Gram with y yT and its theta gradient.

    One forward pass with tape, one reverse sweep: the dA/dK weights become
    the Hermitian cost operators C_b = 2 sum_j W_bj rho_j, since each state
    enters the Gram bilinearly.
    """
    if noise.mode == "per_gate" and noise.adjoint_noise != "mirror":
        raise ValueError("state-overlap gradients need mirrored adjoint noise")
    if noise.shots is not None:
        raise ValueError("gradients require expectation values")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    states, tapes = feature_states(spec, theta, x, noise, record_tape=True)
    k = _affine_global(gram_from_states(states), noise, spec.dim)
    a, w = _alignment_weights(k, y)
    scale = (1.0 - noise.p) if noise.mode == "global" else 1.0
    cost = 2.0 * scale * np.einsum("bj,jkl->bkl", w, states)
    grad = backward(spec, noise, tapes, cost)
    return a, grad


def multi_alignment_grads(
    spec: FeatureMapSpec, thetas, xs, ys, noise: NoiseModel
) -> tuple[list[float], np.ndarray]:
    """Per-node alignments and gradients in one batched simulation.

    ``thetas`` is (N, T); ``xs``/``ys`` list one data block per node. All
    nodes' rows share a single forward/backward pass, with each row carrying
    its node's parameters; per-node gradients are the row-sums of the
    per-element sweep over that node's block.
    """
    if noise.mode == "per_gate" and noise.adjoint_noise != "mirror":
        raise ValueError("state-overlap gradients need mirrored adjoint noise")
    if noise.shots is not None:
        raise ValueError("gradients require expectation values")
    thetas = np.asarray(thetas, dtype=float)
    counts = [np.atleast_2d(np.asarray(x, float)).shape[0] for x in xs]
    x_all = np.vstack([np.atleast_2d(np.asarray(x, float)) for x in xs])
    theta_rows = np.repeat(thetas, counts, axis=0)
    states, tapes = feature_states(spec, theta_rows, x_all, noise, record_tape=True)
    scale = (1.0 - noise.p) if noise.mode == "global" else 1.0
    cost = np.zeros_like(states)
    values = []
    offset = 0
    for c, y in zip(counts, ys):
        block = states[offset : offset + c]
        k = _affine_global(gram_from_states(block), noise, spec.dim)
        a, w = _alignment_weights(k, np.asarray(y, dtype=float))
        values.append(a)
        cost[offset : offset + c] = 2.0 * scale * np.einsum(
            "bj,jkl->bkl", w, block
        )
        offset += c
    per_row = backward(spec, noise, tapes, cost, per_element=True)
    grads = np.zeros_like(thetas)
    offset = 0
    for i, c in enumerate(counts):
        grads[i] = per_row[offset : offset + c].sum(axis=0)
        offset += c
    return values, grads
