"""Shared test utilities: probe configs and the finite-difference oracle."""

import numpy as np
import torch


def finite_difference_check(loss_fn, params, n_probe=32, seed=0, rel_tol=1e-3):
    """Compare autograd against central differences on a random parameter subset.

    ``loss_fn`` must be a pure function of ``params`` (re-run per call).
    Returns the relative error ||fd - autograd|| / ||autograd|| over the
    probed coordinates and asserts it is below ``rel_tol``.
    """
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)

    flat_grads = []
    coords = []  # (param_idx, flat_offset)
    for pi, (p, g) in enumerate(zip(params, grads)):
        g = torch.zeros_like(p) if g is None else g
        flat_grads.append(g.reshape(-1))
        coords.extend((pi, off) for off in range(p.numel()))

    rng = np.random.default_rng(seed)
    pick = rng.choice(len(coords), size=min(n_probe, len(coords)), replace=False)

    autodiff = np.empty(len(pick))
    numeric = np.empty(len(pick))
    for j, ci in enumerate(pick):
        pi, off = coords[ci]
        autodiff[j] = flat_grads[pi][off].item()
        flat = params[pi].data.reshape(-1)
        orig = flat[off].item()
        # Small enough (in float64) to stay on one side of ReLU kinks.
        h = 1e-6 * max(1.0, abs(orig))
        with torch.no_grad():
            flat[off] = orig + h
            up = loss_fn().item()
            flat[off] = orig - h
            down = loss_fn().item()
            flat[off] = orig
        numeric[j] = (up - down) / (2 * h)

    denom = max(np.linalg.norm(autodiff), 1e-12)
    rel_err = np.linalg.norm(numeric - autodiff) / denom
    assert rel_err < rel_tol, f"finite-difference mismatch: rel err {rel_err:.3e}"
    return rel_err


def image_to_tensor(image: np.ndarray) -> torch.Tensor:
    """uint8 grayscale (H, W) -> float tensor (1, H, W) in [-1, 1]."""
    return torch.from_numpy(image.astype(np.float32) / 127.5 - 1.0).unsqueeze(0)
