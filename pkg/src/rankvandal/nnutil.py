"""Shared plumbing for the small torch models.

Everything runs on CPU in float64. The models are tiny, so precision is
cheap, and the finite-difference gradient tests demand it.
"""

import math

import torch

DTYPE = torch.float64


def pin_threads() -> None:
    # single-threaded matmul keeps reduction order, and therefore results,
    # stable across machines
    torch.set_num_threads(1)


def generator(seed: int) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen


def linear(gen: torch.Generator, n_in: int, n_out: int) -> torch.nn.Linear:
    """Seeded uniform Kaiming-style init with zero bias."""
    layer = torch.nn.Linear(n_in, n_out, dtype=DTYPE)
    bound = 1.0 / math.sqrt(n_in)
    with torch.no_grad():
        layer.weight.uniform_(-bound, bound, generator=gen)
        layer.bias.zero_()
    return layer


def seed_lstm(lstm: torch.nn.LSTM, gen: torch.Generator) -> None:
    """Reseed every LSTM parameter uniformly in +-1/sqrt(hidden)."""
    bound = 1.0 / math.sqrt(lstm.hidden_size)
    with torch.no_grad():
        for p in lstm.parameters():
            p.uniform_(-bound, bound, generator=gen)


def identity_linear(n: int) -> torch.nn.Linear:
    """Linear layer starting as the exact identity map."""
    layer = torch.nn.Linear(n, n, dtype=DTYPE)
    with torch.no_grad():
        layer.weight.copy_(torch.eye(n, dtype=DTYPE))
        layer.bias.zero_()
    return layer


def mlp(gen: torch.Generator, n_in: int, n_hidden: int, n_out: int) -> torch.nn.Sequential:
    return torch.nn.Sequential(
        linear(gen, n_in, n_hidden),
        torch.nn.Tanh(),
        linear(gen, n_hidden, n_out),
    )


def cos_t(u: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    """Cosine along the last axis; 0 where either vector is zero.

    The double-where keeps gradients NaN-free on the zero branch.
    """
    dot = (u * v).sum(-1)
    denom = torch.linalg.vector_norm(u, dim=-1) * torch.linalg.vector_norm(v, dim=-1)
    safe = denom > 0
    denom_safe = torch.where(safe, denom, torch.ones_like(denom))
    return torch.where(safe, dot / denom_safe, torch.zeros_like(dot))


def kmax_mean(x: torch.Tensor, k: int, dim: int = -1) -> torch.Tensor:
    """Mean of the k largest entries along dim (all entries if fewer than k)."""
    k = min(k, x.shape[dim])
    vals, _ = torch.topk(x, k, dim=dim)
    return vals.mean(dim=dim)


def as_tensor(arr) -> torch.Tensor:
    return torch.as_tensor(arr, dtype=DTYPE)


def finite_difference_grads(
    params: list[torch.nn.Parameter], loss_fn, h: float = 1e-6
) -> list[torch.Tensor]:
    """Central-difference gradient of loss_fn() w.r.t. each parameter."""
    grads = []
    with torch.no_grad():
        for p in params:
            g = torch.zeros_like(p)
            flat = p.view(-1)
            gflat = g.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + h
                hi = float(loss_fn())
                flat[i] = orig - h
                lo = float(loss_fn())
                flat[i] = orig
                gflat[i] = (hi - lo) / (2 * h)
            grads.append(g)
    return grads


def max_relative_grad_error(
    params: list[torch.nn.Parameter], loss_fn, h: float = 1e-6
) -> float:
    """Worst relative mismatch between autograd and finite differences.

    Relative to the larger of the two magnitudes, floored at 1e-4 so that
    near-zero entries compare absolutely.
    """
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = [p.grad.clone() if p.grad is not None else torch.zeros_like(p) for p in params]
    numeric = finite_difference_grads(params, loss_fn, h=h)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = torch.maximum(torch.maximum(a.abs(), n.abs()), torch.full_like(a, 1e-4))
        worst = max(worst, float(((a - n).abs() / denom).max()))
    return worst
