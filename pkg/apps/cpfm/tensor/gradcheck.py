"""Central finite-difference gradient checks."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from apps.cpfm.seeding import make_rng
from apps.cpfm.tensor.tensor import Tensor, backward, no_grad

DEFAULT_STEP = 1e-5


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))))


def grad_check(f: Callable[[Tensor], Tensor], x, step: float = DEFAULT_STEP) -> float:
    """Max relative error between ``backward`` and central differences of ``f`` at ``x``."""
    leaf = Tensor(x.values if isinstance(x, Tensor) else x, requires_grad=True)
    return grad_check_tensors(lambda: f(leaf), [leaf], step)


def grad_check_tensors(
    f: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    step: float = DEFAULT_STEP,
    max_coords: int | None = None,
    seed: int = 0,
) -> float:
    """Like ``grad_check`` but over several leaf tensors read by the closure ``f``.

    ``max_coords`` limits the number of checked coordinates per tensor (chosen
    with a seeded generator) to keep checks on larger models fast.
    """
    for t in tensors:
        t.grad = None
    backward(f())
    analytic = [np.zeros_like(t.values) if t.grad is None else t.grad.copy() for t in tensors]

    worst = 0.0
    rng = make_rng(seed)
    for t, a in zip(tensors, analytic):
        t.values = np.ascontiguousarray(t.values)
        flat = t.values.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        numeric = np.empty(len(coords))
        with no_grad():
            for j, c in enumerate(coords):
                original = flat[c]
                flat[c] = original + step
                plus = f().item()
                flat[c] = original - step
                minus = f().item()
                flat[c] = original
                numeric[j] = (plus - minus) / (2.0 * step)
        worst = max(worst, _relative_error(a.reshape(-1)[coords], numeric))
    for t in tensors:
        t.grad = None
    return worst
