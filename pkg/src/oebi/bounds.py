"""Modular upper and lower bounds of submodular coverage functions, tight at a chosen set X."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ris import CoverageOracle

STRATEGIES = ("alpha1", "alpha2", "alpha3", "alpha4")


@dataclass(frozen=True, eq=False)
class ModularBound:
    """bound(Y) = base_value + sum of unit_value over Y."""

    base_value: float
    unit_value: np.ndarray

    def __call__(self, nodes) -> float:
        nodes = list(nodes)
        return float(self.base_value + (self.unit_value[nodes].sum() if nodes else 0.0))


@dataclass(frozen=True, eq=False)
class PermutationOrder:
    order: np.ndarray
    prefix_size: int

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        if not np.array_equal(np.sort(order), np.arange(len(order))):
            raise ValidationError("order must be a permutation of 0..n-1")
        object.__setattr__(self, "order", order)

    @property
    def prefix_of(self) -> frozenset:
        return frozenset(self.order[: self.prefix_size].tolist())


def _mask(n: int, x) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    x = list(x)
    if x:
        m[x] = True
    return m


def modular_upper_1(oracle: CoverageOracle, x) -> ModularBound:
    """b(X) - sum_{X\\Y} b(j|X-j) + sum_{Y\\X} b(j|{})."""
    in_x = _mask(oracle.n, x)
    drop = oracle.loss_from(x)
    unit = np.where(in_x, drop, oracle.gain_empty())
    return ModularBound(oracle(x) - drop[in_x].sum(), unit)


def modular_upper_2(oracle: CoverageOracle, x) -> ModularBound:
    """b(X) - sum_{X\\Y} b(j|V-j) + sum_{Y\\X} b(j|X)."""
    in_x = _mask(oracle.n, x)
    drop = oracle.loss_from_all()
    unit = np.where(in_x, drop, oracle.gain_given(x))
    return ModularBound(oracle(x) - drop[in_x].sum(), unit)


def modular_upper(oracle: CoverageOracle, x, variant: int) -> ModularBound:
    if variant == 1:
        return modular_upper_1(oracle, x)
    if variant == 2:
        return modular_upper_2(oracle, x)
    raise ValueError(f"unknown upper bound variant {variant}")


def modular_lower(oracle: CoverageOracle, x, alpha: PermutationOrder) -> ModularBound:
    """Prefix marginals along ``alpha``; requires X to occupy the first |X| positions."""
    if alpha.prefix_of != frozenset(x):
        raise ValidationError("permutation prefix does not match X")
    return ModularBound(0.0, oracle.prefix_gains(alpha.order))


def modular_lower_naive(fn, n: int, alpha: PermutationOrder) -> ModularBound:
    """Reference prefix marginals from n + 1 calls to an arbitrary set function."""
    unit = np.zeros(n)
    prev = fn(())
    for i in range(n):
        cur = fn(alpha.order[: i + 1].tolist())
        unit[alpha.order[i]] = cur - prev
        prev = cur
    return ModularBound(0.0, unit)


def _sorted_part(nodes: np.ndarray, scores: np.ndarray, descending: bool) -> np.ndarray:
    key = -scores[nodes] if descending else scores[nodes]
    return nodes[np.lexsort((nodes, key))]


def build_permutation(strategy: str, x, n: int, node_scores: dict | None = None, rng=None) -> PermutationOrder:
    """Order X first, then V\\X, each part arranged by the strategy.

    alpha1 shuffles each part; alpha2/alpha3 sort descending by singleton f-hat / w-hat;
    alpha4 sorts ascending by singleton z-hat. ``node_scores`` maps "f", "w", "z" to
    per-node arrays. Ties go to the smaller node id.
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown permutation strategy {strategy!r}")
    in_x = _mask(n, x)
    head, tail = np.flatnonzero(in_x), np.flatnonzero(~in_x)
    if strategy == "alpha1":
        if rng is None:
            raise ValidationError("alpha1 needs an rng")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        head, tail = rng.permutation(head), rng.permutation(tail)
    else:
        key, descending = {"alpha2": ("f", True), "alpha3": ("w", True), "alpha4": ("z", False)}[strategy]
        scores = np.asarray(node_scores[key], dtype=float)
        head, tail = _sorted_part(head, scores, descending), _sorted_part(tail, scores, descending)
    return PermutationOrder(np.concatenate([head, tail]), len(head))
