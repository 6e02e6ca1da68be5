"""AdamW with decoupled weight decay, written against plain array dicts."""

from __future__ import annotations

import numpy as np


class AdamW:
    """Moment estimates are kept per parameter name in float32.

    The decay term multiplies the parameter directly (decoupled from
    the adaptive step), and bias correction follows the step counter,
    so the first step with unit gradient moves by almost exactly lr.
    """

    def __init__(
        self,
        lr: float,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 1e-2,
    ):
        if lr <= 0:
            raise ValueError(f"adamw: lr must be positive, got {lr}")
        if not (0 <= betas[0] < 1 and 0 <= betas[1] < 1):
            raise ValueError(f"adamw: betas out of range {betas}")
        if eps <= 0:
            raise ValueError(f"adamw: eps must be positive, got {eps}")
        if weight_decay < 0:
            raise ValueError(f"adamw: negative weight decay {weight_decay}")
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """One in-place update of every parameter present in `grads`."""
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise ValueError(f"adamw: non-finite gradient for {name}")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, g in grads.items():
            p = params[name]
            g = np.asarray(g, dtype=p.dtype)
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            denom = np.sqrt(v / bc2) + self.eps
            p -= self.lr * ((m / bc1) / denom)
            if self.weight_decay:
                p -= self.lr * self.weight_decay * p

    def state_tensors(self, prefix: str = "opt") -> dict[str, np.ndarray]:
        out = {f"{prefix}.step": np.array([self.step_count], dtype=np.float32)}
        for name, arr in self.m.items():
            out[f"{prefix}.m.{name}"] = arr
        for name, arr in self.v.items():
            out[f"{prefix}.v.{name}"] = arr
        return out

    def load_state_tensors(self, tensors: dict[str, np.ndarray], prefix: str = "opt") -> None:
        step_key = f"{prefix}.step"
        if step_key in tensors:
            self.step_count = int(tensors[step_key][0])
        for key, arr in tensors.items():
            if key.startswith(f"{prefix}.m."):
                self.m[key[len(prefix) + 3 :]] = arr.copy()
            elif key.startswith(f"{prefix}.v."):
                self.v[key[len(prefix) + 3 :]] = arr.copy()
