"""Named test functions shared by the CLI, the comparison basis, and tests.

All functions vanish at infinity and at the cemetery.  Two-half variants
may take different values at 0+ and 0-; both sides are smooth up to their
origin, which keeps the PDE oracle at full order.
"""

from __future__ import annotations

import numpy as np

from .domain import DomainFunction, from_half_callables, from_line_callable
from .states import LINE


def _gauss(x):
    return np.exp(-np.square(x))


def _gauss_d2(x):
    return (4.0 * np.square(x) - 2.0) * np.exp(-np.square(x))


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _odd_gauss(x):
    return x * np.exp(-np.square(x))


def _odd_gauss_d2(x):
    x = np.asarray(x, dtype=float)
    return (4.0 * x**3 - 6.0 * x) * np.exp(-np.square(x))


def _shift_gauss(x):
    return np.exp(-np.square(x - 0.5))


def _shift_gauss_d2(x):
    return (4.0 * np.square(x - 0.5) - 2.0) * np.exp(-np.square(x - 0.5))


def _exp_abs(x):
    return np.exp(-np.abs(x))


def _cosine_gauss(x):
    return np.cos(2.0 * x) * np.exp(-np.square(x) / 2.0)


def line_function(name: str) -> DomainFunction:
    """A named function on the line."""
    try:
        f, d2, bps = _LINE_FUNCS[name]
    except KeyError:
        raise KeyError(f"unknown line function {name!r}; have {sorted(_LINE_FUNCS)}")
    return from_line_callable(f, d2=d2, breakpoints=bps)


def two_half_function(name: str) -> DomainFunction:
    """A named function on the two half-lines."""
    try:
        fp, fn, d2p, d2n = _TWOHALF_FUNCS[name]
    except KeyError:
        raise KeyError(f"unknown two-half function {name!r}; have {sorted(_TWOHALF_FUNCS)}")
    return from_half_callables(fp, fn, d2_pos=d2p, d2_neg=d2n)


def named_function(name: str, topology: str) -> DomainFunction:
    return line_function(name) if topology == LINE else two_half_function(name)


_LINE_FUNCS = {
    "gauss": (_gauss, _gauss_d2, (0.0,)),
    "odd_gauss": (_odd_gauss, _odd_gauss_d2, (0.0,)),
    "shift_gauss": (_shift_gauss, _shift_gauss_d2, (0.0,)),
    "exp_abs": (_exp_abs, None, (0.0,)),
    "cos_gauss": (_cosine_gauss, None, (0.0,)),
}

_TWOHALF_FUNCS = {
    "gauss": (_gauss, _gauss, _gauss_d2, _gauss_d2),
    "gauss_pos": (_gauss, _zero, _gauss_d2, _zero),
    "gauss_neg": (_zero, _gauss, _zero, _gauss_d2),
    "odd_gauss": (_odd_gauss, _odd_gauss, _odd_gauss_d2, _odd_gauss_d2),
    "shift_gauss": (_shift_gauss, _shift_gauss, _shift_gauss_d2, _shift_gauss_d2),
    "exp_abs": (_exp_abs, _exp_abs, None, None),
}

# Fixed five-function basis for walk-vs-oracle comparisons on two half-lines.
COMPARISON_BASIS = ("gauss", "gauss_pos", "gauss_neg", "odd_gauss", "shift_gauss")


def basis_functions(topology: str, names=COMPARISON_BASIS) -> dict[str, DomainFunction]:
    return {name: named_function(name, topology) for name in names}


# ---------------------------------------------------------------------------
# Randomized inputs for the property suites.
# ---------------------------------------------------------------------------


def random_smooth_callable(rng: np.random.Generator):
    """Random decaying smooth function (Gaussian-bump mixture) with exact d2."""
    k = int(rng.integers(1, 4))
    amps = rng.uniform(-1.5, 1.5, size=k)
    centers = rng.uniform(-2.0, 2.0, size=k)
    widths = rng.uniform(0.4, 1.6, size=k)

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, c, w in zip(amps, centers, widths):
            out += a * np.exp(-np.square((x - c) / w))
        return out

    def d2(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, c, w in zip(amps, centers, widths):
            z = (x - c) / w
            out += a * (4.0 * z * z - 2.0) / (w * w) * np.exp(-np.square(z))
        return out

    return f, d2


def random_line_coeffs(rng: np.random.Generator):
    from .coeffs import normalized_line

    while True:
        w = rng.uniform(0.0, 1.0, size=4)
        w[rng.integers(1, 4)] += 0.2  # keep away from pure killing
        if w[1] + w[2] + w[3] > 1e-3:
            return normalized_line(*w)


def random_two_half_coeffs(rng: np.random.Generator):
    from .coeffs import GeneratorCoeffsTwoHalf

    w = rng.uniform(0.0, 1.0, size=8)
    w[4] += 0.2  # c2_plus
    w[5] += 0.2  # c2_minus
    return GeneratorCoeffsTwoHalf(*w).canonical()
