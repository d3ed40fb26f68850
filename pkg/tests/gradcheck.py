"""Central finite-difference oracle for the autodiff engine (f64 only)."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from vatlab.autodiff import Tape, Tensor, backward

H = 1e-5
# Denominator floor. Central differences with H = 1e-5 carry ~1e-11 absolute round-off
# (machine eps * |f| / H), so entries smaller than this are compared absolutely.
ATOL = 1e-6


def rel_error(a: np.ndarray, n: np.ndarray) -> float:
    a, n = np.asarray(a, dtype=np.float64), np.asarray(n, dtype=np.float64)
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), ATOL)
    return float(np.max(np.abs(a - n) / denom))


def check(fn: Callable[[Mapping[str, Tensor]], Tensor], arrays: Mapping[str, np.ndarray],
          rng: np.random.Generator | None = None, max_coords: int | None = None,
          h: float = H) -> dict[str, float]:
    """Compare reverse-mode gradients of scalar ``fn`` with central differences.

    ``fn`` receives leaf tensors and returns a scalar tensor. With ``max_coords`` only a
    random subset of coordinates per array is probed. ``h`` is the step. Returns the max relative error per input.
    """
    arrays = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}
    leaves = {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays.items()}
    with Tape() as tape:
        loss = fn(leaves)
    analytic = backward(tape, loss, leaves)

    def value() -> float:
        return float(fn({k: Tensor(v) for k, v in arrays.items()}).data)

    errors = {}
    for name, arr in arrays.items():
        flat = arr.reshape(-1)
        idx = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            idx = (rng or np.random.default_rng(0)).choice(flat.size, max_coords, replace=False)
        num = np.empty(idx.size)
        for j, i in enumerate(idx):
            old = flat[i]
            flat[i] = old + h
            up = value()
            flat[i] = old - h
            down = value()
            flat[i] = old
            num[j] = (up - down) / (2 * h)
        errors[name] = rel_error(analytic[name].reshape(-1)[idx], num)
    return errors
