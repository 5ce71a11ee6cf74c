"""Smooth test functions with analytic gradients and Hessians."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Polynomial", "GaussianSum", "franke", "random_cubic", "builtin", "BUILTINS"]


@dataclass(frozen=True)
class Polynomial:
    """``sum c[(i, j)] x^i y^j``."""

    coeffs: dict = field(default_factory=dict)

    def value(self, p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        out = np.zeros(np.shape(x))
        for (i, j), c in self.coeffs.items():
            out = out + c * x ** i * y ** j
        return out

    def _partial(self, di: int, dj: int, p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        out = np.zeros(np.shape(x))
        for (i, j), c in self.coeffs.items():
            if i < di or j < dj:
                continue
            f = c
            for k in range(di):
                f *= i - k
            for k in range(dj):
                f *= j - k
            out = out + f * x ** (i - di) * y ** (j - dj)
        return out

    def grad(self, p):
        return np.stack([self._partial(1, 0, p), self._partial(0, 1, p)], axis=-1)

    def hess(self, p):
        xx, xy, yy = self._partial(2, 0, p), self._partial(1, 1, p), self._partial(0, 2, p)
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)


@dataclass(frozen=True)
class GaussianSum:
    """``sum a_k exp(-((x - x_k)^2 / sx_k + (y - y_k)^2 / sy_k))``; ``terms`` rows are (a, xk, yk, sx, sy)."""

    terms: tuple

    def _parts(self, p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0, None], p[..., 1, None]
        t = np.asarray(self.terms, dtype=float)
        a, xk, yk, sx, sy = t.T
        e = a * np.exp(-((x - xk) ** 2 / sx + (y - yk) ** 2 / sy))
        ux = -2 * (x - xk) / sx
        uy = -2 * (y - yk) / sy
        return e, ux, uy, sx, sy

    def value(self, p):
        e, *_ = self._parts(p)
        return e.sum(-1)

    def grad(self, p):
        e, ux, uy, _, _ = self._parts(p)
        return np.stack([(e * ux).sum(-1), (e * uy).sum(-1)], axis=-1)

    def hess(self, p):
        e, ux, uy, sx, sy = self._parts(p)
        xx = (e * (ux * ux - 2 / sx)).sum(-1)
        xy = (e * ux * uy).sum(-1)
        yy = (e * (uy * uy - 2 / sy)).sum(-1)
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)


def franke() -> GaussianSum:
    """Franke's bump on the unit square, written as four Gaussians."""
    return GaussianSum((
        (0.75, 2 / 9, 2 / 9, 4 / 81, 4 / 81),
        (0.75, -1 / 9, -1 / 9, 49 / 81, 10 / 81),
        (0.5, 7 / 9, 3 / 9, 4 / 81, 4 / 81),
        (-0.2, 4 / 9, 7 / 9, 1 / 81, 1 / 81),
    ))


def random_cubic(rng: np.random.Generator, scale: float = 1.0) -> Polynomial:
    return Polynomial({(i, j): float(rng.normal()) * scale
                       for i in range(4) for j in range(4 - i)})


BUILTINS = {
    "zero": lambda rng: Polynomial({}),
    "one": lambda rng: Polynomial({(0, 0): 1.0}),
    "x": lambda rng: Polynomial({(1, 0): 1.0}),
    "y": lambda rng: Polynomial({(0, 1): 1.0}),
    "x3": lambda rng: Polynomial({(3, 0): 1.0}),
    "cubic": random_cubic,
    "franke": lambda rng: franke(),
}


def builtin(name: str, seed: int = 0):
    try:
        make = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown builtin function {name!r}; choose from {sorted(BUILTINS)}") from None
    return make(np.random.default_rng(seed))
