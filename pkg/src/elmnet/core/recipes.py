"""Single-knob scaling recipe: derive all neuron dimensions from layer width.

Two variants of the width-to-memory rule are provided; both chain the
remaining dimensions as d_mlp = 2*d_m, d_tree = 2*d_mlp, d_branch = d_tree,
so d_m <= d_mlp <= d_tree <= d_branch always holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidConfigError


@dataclass(frozen=True)
class RecipeDims:
    d_m: int
    d_mlp: int
    d_tree: int
    d_branch: int
    rho_rec: float

    @property
    def d_s(self) -> int:
        return self.d_tree * self.d_branch


def pareto_candidate(n_rec: int, d_inp: int, variant: str = "ceil") -> RecipeDims:
    """Derive neuron dimensions from (n_rec, d_inp).

    variant 'ceil': d_m = ceil(0.5 * sqrt(d_inp + n_rec)), recurrence
    fraction n_rec / (n_rec + d_inp). variant 'floor': d_m =
    floor(0.5 * sqrt(d_inp / 15 + n_rec)), recurrence fraction
    sqrt(n_rec / (n_rec + d_inp)) (suits sparse-input tasks).
    """
    if n_rec < 1:
        raise InvalidConfigError(f"n_rec must be >= 1, got {n_rec}")
    if d_inp < 1:
        raise InvalidConfigError(f"d_inp must be >= 1, got {d_inp}")
    if variant == "ceil":
        d_m = math.ceil(0.5 * math.sqrt(d_inp + n_rec))
        rho = n_rec / (n_rec + d_inp)
    elif variant == "floor":
        d_m = math.floor(0.5 * math.sqrt(d_inp / 15.0 + n_rec))
        rho = math.sqrt(n_rec / (n_rec + d_inp))
    else:
        raise InvalidConfigError(f"variant must be 'ceil' or 'floor', got {variant!r}")
    d_m = max(d_m, 1)
    d_mlp = 2 * d_m
    d_tree = 2 * d_mlp
    d_branch = d_tree
    return RecipeDims(d_m=d_m, d_mlp=d_mlp, d_tree=d_tree, d_branch=d_branch,
                      rho_rec=rho)
