"""Empirical probabilities, the nu-hat estimator, and sample-size formulas.

nu-hat measures, from samples, how far the joint conditional law of
(X_u, X_I) given X_S sits from the product of its conditional marginals:

    nu_hat = mean over states (R, G) of the empirically weighted sum over
    observed x_S of |Phat(u=R, I=G | x_S) - Phat(u=R | x_S) Phat(I=G | x_S)|

Counts stay exact integers; each term is divided once at the end.
Conditioning configurations never observed contribute zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sampling import ERASED, SampleSet, spawn_rng


class InsufficientCoverageError(RuntimeError):
    """No sample reveals all the nodes an estimate needs."""


class QueryCapacityError(ValueError):
    """A bounded query asked for more nodes than the oracle allows."""


@dataclass
class EmpiricalDistribution:
    """Read-only view of a sample set with exact event counting.

    Columns are cached contiguously so that repeated nu-hat evaluations
    cost the same regardless of how many nodes the sample matrix has.
    """

    samples: SampleSet
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._columns = np.ascontiguousarray(self.samples.data.T)

    def column(self, v: int) -> np.ndarray:
        return self._columns[v]

    @property
    def m(self) -> int:
        return self.samples.m

    @property
    def arities(self) -> tuple[int, ...]:
        return self.samples.arities


def empirical_prob(
    emp: EmpiricalDistribution, nodes: tuple[int, ...], states: tuple[int, ...]
) -> float:
    """Fraction of samples whose restriction to `nodes` equals `states`.

    Erased cells never match, so with missing data the probabilities of
    disjoint events sum to at most one.
    """
    if len(nodes) == 0:
        raise ValueError("need at least one node")
    key = (tuple(nodes), tuple(states))
    if key not in emp._cache:
        block = emp.samples.data[:, list(nodes)]
        emp._cache[key] = int(np.all(block == np.asarray(states), axis=1).sum())
    return emp._cache[key] / emp.m


def _nu_hat_from_columns(
    columns: list[np.ndarray], k_u: int, k_group: tuple[int, ...], k_cond: tuple[int, ...]
) -> float:
    """nu-hat over complete-case columns ordered (u, I..., S...)."""
    m = columns[0].size
    if m == 0:
        raise InsufficientCoverageError("no complete samples for this node set")
    block_size = k_u * math.prod(k_group)
    if block_size * math.prod(k_cond) > 1 << 62:
        raise ValueError("joint state space too large to code in 64 bits")
    # mixed-radix code with the conditioning columns most significant, the
    # target node least significant: dividing by the block size then groups
    # rows by conditioning configuration
    codes = np.zeros(m, dtype=np.int64)
    n_group = len(k_group)
    for j, k in enumerate(k_cond):
        codes = codes * k + columns[1 + n_group + j]
    for j, k in enumerate(k_group):
        codes = codes * k + columns[1 + j]
    codes = codes * k_u + columns[0]
    ucodes, counts = np.unique(codes, return_counts=True)
    cond_codes = ucodes // block_size
    boundaries = np.concatenate(
        ([0], np.nonzero(np.diff(cond_codes))[0] + 1, [ucodes.size])
    )
    total = 0.0
    group_axes = tuple(range(n_group))
    for start, stop in zip(boundaries[:-1], boundaries[1:]):
        dense = np.zeros(block_size)
        dense[ucodes[start:stop] % block_size] = counts[start:stop]
        block = dense.reshape(k_group + (k_u,))
        c_s = block.sum()
        c_is = block.sum(axis=-1, keepdims=True)
        c_us = block.sum(axis=group_axes, keepdims=True)
        dev = np.abs(block / c_s - (c_is / c_s) * (c_us / c_s))
        total += (c_s / m) * float(dev.mean())
    return total


def _check_disjoint(u: int, group: tuple[int, ...], cond: tuple[int, ...]):
    group = tuple(int(v) for v in group)
    cond = tuple(int(v) for v in cond)
    if not group:
        raise ValueError("the probed set I must be nonempty")
    if u in group or u in cond or set(group) & set(cond):
        raise ValueError(f"u={u}, I={group}, S={cond} must be disjoint")
    if len(set(group)) != len(group) or len(set(cond)) != len(cond):
        raise ValueError("repeated nodes in I or S")
    return group, cond


def nu_hat(
    emp: EmpiricalDistribution, u: int, group: tuple[int, ...], cond: tuple[int, ...] = ()
) -> float:
    """Estimate nu for (u, I=group | S=cond) from complete samples."""
    group, cond = _check_disjoint(u, group, cond)
    columns = [emp.column(v) for v in (u,) + group + cond]
    if any((c == ERASED).any() for c in columns):
        raise ValueError("samples contain erasures; use nu_hat_erased")
    k = emp.arities
    return _nu_hat_from_columns(
        columns, k[u], tuple(k[v] for v in group), tuple(k[v] for v in cond)
    )


def nu_hat_erased(
    emp: EmpiricalDistribution, u: int, group: tuple[int, ...], cond: tuple[int, ...] = ()
) -> tuple[float, int]:
    """Complete-case nu-hat: use only samples revealing every needed node.

    Returns the estimate together with the number of usable samples.
    """
    group, cond = _check_disjoint(u, group, cond)
    columns = [emp.column(v) for v in (u,) + group + cond]
    erased = np.zeros(emp.m, dtype=bool)
    for c in columns:
        erased |= c == ERASED
    if erased.all():
        raise InsufficientCoverageError(
            f"no sample reveals all of nodes {sorted((u,) + group + cond)}"
        )
    keep = ~erased
    columns = [c[keep] for c in columns]
    k = emp.arities
    value = _nu_hat_from_columns(
        columns, k[u], tuple(k[v] for v in group), tuple(k[v] for v in cond)
    )
    return value, int(columns[0].size)


def nu_from_marginals(
    p_uis: np.ndarray, p_us: np.ndarray, p_is: np.ndarray, p_s: np.ndarray
) -> float:
    """Evaluate the nu functional from explicit (possibly perturbed)
    marginal tables.

    Axis convention: ``p_uis`` has axes (u, I..., S...); ``p_us`` has axes
    (u, S...), ``p_is`` axes (I..., S...), ``p_s`` axes (S...).  The tables
    need not be mutually consistent, which is exactly what the estimator
    perturbation analysis requires.
    """
    p_uis = np.asarray(p_uis, dtype=float)
    n_group = p_uis.ndim - np.asarray(p_s).ndim - 1
    k_u = p_uis.shape[0]
    a_us = np.asarray(p_us, dtype=float).reshape(
        (k_u,) + (1,) * n_group + p_uis.shape[1 + n_group :]
    )
    a_is = np.asarray(p_is, dtype=float).reshape((1,) + p_uis.shape[1:])
    a_s = np.asarray(p_s, dtype=float).reshape(
        (1,) * (1 + n_group) + p_uis.shape[1 + n_group :]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_u = np.where(a_s > 0.0, a_us / a_s, 0.0)
        dev = np.abs(np.where(a_s > 0.0, p_uis, 0.0) - cond_u * a_is)
    n_outer = k_u * math.prod(p_uis.shape[1 : 1 + n_group])
    return float(dev.sum()) / n_outer


@dataclass
class QueryOracle:
    """Serves bounded queries: per fresh sample, observe at most
    `capacity` nodes of your choosing.  Stateful; one consumer at a time."""

    source: Callable[[int], np.ndarray]
    capacity: int
    consumed: int = 0
    queries_issued: int = 0
    max_query_size: int = 0

    @classmethod
    def from_joint(cls, joint, capacity: int, seed: int) -> "QueryOracle":
        """Back the oracle by fresh exact draws from a joint table."""
        rng = spawn_rng(seed, "oracle")
        flat = joint.probs.ravel()
        cdf = np.cumsum(flat)
        cdf[-1] = 1.0
        shape = joint.probs.shape

        def draw(m: int) -> np.ndarray:
            idx = np.minimum(
                np.searchsorted(cdf, rng.random(m), side="right"), flat.size - 1
            )
            return np.stack(np.unravel_index(idx, shape), axis=1)

        return cls(source=draw, capacity=capacity)

    @classmethod
    def from_samples(cls, samples: SampleSet, capacity: int) -> "QueryOracle":
        """Back the oracle by a finite pre-drawn stream; raises when spent."""
        cursor = {"pos": 0}
        data = samples.data

        def draw(m: int) -> np.ndarray:
            if cursor["pos"] + m > data.shape[0]:
                raise RuntimeError("sample stream exhausted")
            out = data[cursor["pos"] : cursor["pos"] + m]
            cursor["pos"] += m
            return out

        return cls(source=draw, capacity=capacity)

    def query(self, nodes: tuple[int, ...], m_batch: int) -> np.ndarray:
        """Observe the given nodes on m_batch fresh samples."""
        nodes = tuple(sorted(int(v) for v in nodes))
        if len(nodes) > self.capacity:
            raise QueryCapacityError(
                f"query of size {len(nodes)} exceeds capacity {self.capacity}"
            )
        if m_batch < 1:
            raise ValueError("batch size must be >= 1")
        full = self.source(m_batch)
        self.consumed += m_batch
        self.queries_issued += 1
        self.max_query_size = max(self.max_query_size, len(nodes))
        return full[:, list(nodes)]


def nu_hat_queried(
    oracle: QueryOracle,
    u: int,
    group: tuple[int, ...],
    cond: tuple[int, ...],
    m_batch: int,
    arities: tuple[int, ...],
) -> float:
    """nu-hat over one fresh batch obtained through a bounded query."""
    group, cond = _check_disjoint(u, group, cond)
    nodes = tuple(sorted((u,) + group + cond))
    block = oracle.query(nodes, m_batch)
    pos = {v: j for j, v in enumerate(nodes)}
    columns = [
        np.ascontiguousarray(block[:, pos[v]]) for v in (u,) + group + cond
    ]
    return _nu_hat_from_columns(
        columns,
        arities[u],
        tuple(arities[v] for v in group),
        tuple(arities[v] for v in cond),
    )


def _log_bracket(ell: float, omega: float, n: int, k_max: int, r: int) -> float:
    return (
        math.log(1.0 / omega)
        + math.log(ell + r)
        + (ell + r) * math.log(n * k_max)
        + math.log(2.0)
    )


def log10_required_samples_full(
    ell: float, eps: float, omega: float, n: int, k_max: int, r: int, delta: float
) -> float:
    """log10 of the full-observation sample bound; finite even when the
    bound itself overflows floats."""
    if min(ell, eps, omega, n, k_max, r, delta) <= 0:
        raise ValueError("all parameters must be positive")
    log_m = (
        math.log(15.0)
        + 2 * ell * math.log(k_max)
        - 2 * math.log(eps)
        - 2 * ell * math.log(delta)
        + math.log(_log_bracket(ell, omega, n, k_max, r))
    )
    return log_m / math.log(10.0)


def required_samples_full(
    ell: float, eps: float, omega: float, n: int, k_max: int, r: int, delta: float
) -> int:
    """Samples guaranteeing every nu-hat with |S| <= ell is eps-accurate
    with probability 1 - omega.  Raises OverflowError when the value
    exceeds float range; use the log10 variant for reporting then."""
    if min(ell, eps, omega, n, k_max, r, delta) <= 0:
        raise ValueError("all parameters must be positive")
    try:
        value = (
            15.0
            * k_max ** (2.0 * ell)
            / (eps**2 * delta ** (2.0 * ell))
            * _log_bracket(ell, omega, n, k_max, r)
        )
    except OverflowError:
        value = math.inf
    if not math.isfinite(value):
        log10_m = log10_required_samples_full(ell, eps, omega, n, k_max, r, delta)
        raise OverflowError(f"sample bound exceeds float range; log10(m) = {log10_m:.6g}")
    return math.ceil(value)


def _erased_inner_bound(
    budget: float, tau: float, omega: float, n: int, k_max: int, r: int, delta: float
) -> float:
    try:
        return (
            60.0
            * k_max ** (2.0 * budget)
            / (tau**2 * delta ** (2.0 * budget))
            * _log_bracket(budget, omega / 2.0, n, k_max, r)
        )
    except OverflowError:
        return math.inf


def log10_required_samples_erased(
    budget: float,
    tau: float,
    omega: float,
    n: int,
    k_max: int,
    r: int,
    delta: float,
    reveal_prob: float,
) -> float:
    """log10 of the erasure-mode sample bound."""
    if min(budget, tau, omega, n, k_max, r, delta, reveal_prob) <= 0:
        raise ValueError("all parameters must be positive")
    log_inner = (
        math.log(60.0)
        + 2 * budget * math.log(k_max)
        - 2 * math.log(tau)
        - 2 * budget * math.log(delta)
        + math.log(_log_bracket(budget, omega / 2.0, n, k_max, r))
    )
    log_outer = math.log(
        budget * math.log(n) + math.log(budget) + math.log(2.0 / omega) + log_inner
    )
    return (log_inner + log_outer - 2 * math.log(reveal_prob)) / math.log(10.0)


def required_samples_erased(
    budget: float,
    tau: float,
    omega: float,
    n: int,
    k_max: int,
    r: int,
    delta: float,
    reveal_prob: float,
) -> int:
    """Erasure-mode analogue of required_samples_full; reveal_prob is the
    probability a cell survives the channel."""
    if min(budget, tau, omega, n, k_max, r, delta, reveal_prob) <= 0:
        raise ValueError("all parameters must be positive")
    inner = _erased_inner_bound(budget, tau, omega, n, k_max, r, delta)
    if math.isfinite(inner):
        value = (
            inner
            * (budget * math.log(n) + math.log(budget) + math.log(2.0 * inner / omega))
            / reveal_prob**2
        )
        if math.isfinite(value):
            return math.ceil(value)
    log10_m = log10_required_samples_erased(
        budget, tau, omega, n, k_max, r, delta, reveal_prob
    )
    raise OverflowError(f"sample bound exceeds float range; log10(m) = {log10_m:.6g}")
