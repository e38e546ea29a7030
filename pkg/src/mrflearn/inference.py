"""Exact brute-force inference over small models.

Everything here enumerates the full configuration space, so it is only
meant for desk-scale verification: joint tables, exact conditional
mutual information, and the exact coupling statistic nu that the
learner estimates from samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import MarkovRandomField

#: refuse to enumerate joint tables beyond this many configurations
MAX_CONFIGURATIONS = 1 << 24


class CapacityError(RuntimeError):
    """Raised when a model is too large for exact enumeration."""


@dataclass(frozen=True)
class JointTable:
    """Exact probabilities of every configuration of a model.

    ``probs`` has shape ``model.arities``; flattening it in C order gives
    the mixed-radix configuration indexing with node 0 as the most
    significant digit.
    """

    model: MarkovRandomField
    probs: np.ndarray
    log_partition: float

    @property
    def arities(self) -> tuple[int, ...]:
        return self.model.arities


def exact_joint(model: MarkovRandomField) -> JointTable:
    """Enumerate the normalized joint distribution of a small model."""
    total = model.configuration_count()
    if total > MAX_CONFIGURATIONS:
        raise CapacityError(
            f"{total} configurations exceed the exact-inference cap of {MAX_CONFIGURATIONS}"
        )
    logw = np.zeros(model.arities)
    for verts, tensor in model.potentials.items():
        shape = tuple(
            model.arities[v] if v in verts else 1 for v in range(model.n)
        )
        logw = logw + tensor.values.reshape(shape)
    peak = float(logw.max())
    z = float(np.exp(logw - peak).sum())
    log_partition = peak + math.log(z)
    probs = np.exp(logw - log_partition)
    probs.flags.writeable = False
    return JointTable(model=model, probs=probs, log_partition=log_partition)


def marginal(joint: JointTable, nodes: tuple[int, ...]) -> np.ndarray:
    """Marginal table over the given nodes, axes in the order requested."""
    if len(set(nodes)) != len(nodes):
        raise ValueError(f"duplicate nodes in {nodes}")
    others = tuple(v for v in range(joint.model.n) if v not in nodes)
    summed = joint.probs.sum(axis=others) if others else joint.probs
    order = sorted(nodes)
    perm = tuple(order.index(v) for v in nodes)
    return summed.transpose(perm)


def _split_uis(
    joint: JointTable, u: int, group: tuple[int, ...], cond: tuple[int, ...]
):
    """Shared setup: the (u, I..., S...) marginal and its sub-marginals."""
    group = tuple(int(v) for v in group)
    cond = tuple(int(v) for v in cond)
    pool = (u,) + group + cond
    if u in group or u in cond or set(group) & set(cond):
        raise ValueError(f"u={u}, I={group}, S={cond} must be disjoint")
    table = marginal(joint, pool)
    i_axes = tuple(range(1, 1 + len(group)))
    s_axes = tuple(range(1 + len(group), table.ndim))
    p_s = table.sum(axis=(0,) + i_axes, keepdims=True)
    p_us = table.sum(axis=i_axes, keepdims=True)
    p_is = table.sum(axis=(0,), keepdims=True)
    return table, p_s, p_us, p_is, i_axes


def exact_conditional_mi(
    joint: JointTable, u: int, group: tuple[int, ...], cond: tuple[int, ...] = ()
) -> float:
    """I(X_u ; X_group | X_cond) in nats, by direct summation."""
    table, p_s, p_us, p_is, _ = _split_uis(joint, u, group, cond)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = table * p_s / (p_us * p_is)
        terms = np.where(table > 0.0, table * np.log(np.where(table > 0.0, ratio, 1.0)), 0.0)
    mi = float(terms.sum())
    return max(mi, 0.0)


def exact_nu(
    joint: JointTable, u: int, group: tuple[int, ...], cond: tuple[int, ...] = ()
) -> float:
    """Mean absolute deviation between joint and product conditionals.

    The outer average is uniform over the states of u and of the group;
    the conditioning configurations are weighted by their probability.
    Always in [0, 1] and dominated by sqrt(MI/2).
    """
    table, p_s, p_us, p_is, i_axes = _split_uis(joint, u, group, cond)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.abs(table / p_s - (p_us / p_s) * (p_is / p_s))
        weighted = np.where(p_s > 0.0, p_s * dev, 0.0)
    n_outer = weighted.shape[0] * math.prod(weighted.shape[1 : 1 + len(i_axes)])
    return float(weighted.sum()) / n_outer
