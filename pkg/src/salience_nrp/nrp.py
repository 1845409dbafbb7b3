"""Bi-objective requirement selection: maximise satisfaction, minimise effort, B1 <= effort <= B2.

Satisfaction of a requirement is the salience-weighted sum of the points the
chosen stakeholders gave it. Fronts are built by a greedy fill-and-swap
heuristic over a grid of effort targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from salience_nrp._io import fmt_num, write_csv
from salience_nrp.model import ProjectDataset
from salience_nrp.salience import SalienceTable

DEFAULT_B1_FRAC = 0.20
DEFAULT_B2_FRAC = 0.25
DEFAULT_STEPS = 100
DEFAULT_ATTEMPTS = 50


class InfeasibleError(RuntimeError):
    """No requirement subset with effort inside [B1, B2] was found."""


@dataclass(frozen=True)
class NrpInstance:
    requirement_ids: tuple[str, ...]
    sat: np.ndarray
    effort: np.ndarray
    b1: float
    b2: float
    stakeholder_subset: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        sat = np.asarray(self.sat, dtype=float)
        effort = np.asarray(self.effort, dtype=float)
        if sat.shape != (len(self.requirement_ids),) or effort.shape != sat.shape:
            raise ValueError("sat and effort need one entry per requirement")
        if (sat < 0).any():
            raise ValueError("satisfaction values must be >= 0")
        if (effort <= 0).any():
            raise ValueError("efforts must be > 0")
        if not 0 < self.b1 <= self.b2:
            raise ValueError(f"need 0 < b1 <= b2, got b1={self.b1}, b2={self.b2}")
        object.__setattr__(self, "sat", sat)
        object.__setattr__(self, "effort", effort)

    def __len__(self) -> int:
        return len(self.requirement_ids)

    @property
    def total_effort(self) -> float:
        return math.fsum(self.effort)

    def solution(self, indices: Iterable[int]) -> "Solution":
        idx = sorted(set(indices))
        return Solution(
            frozenset(self.requirement_ids[i] for i in idx),
            math.fsum(self.sat[i] for i in idx),
            math.fsum(self.effort[i] for i in idx),
        )


@dataclass(frozen=True)
class Solution:
    selected: frozenset[str]
    total_sat: float
    total_effort: float

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.total_sat, self.total_effort)


def dominates(a: Solution, b: Solution) -> bool:
    """True iff ``a`` is at least as good in both objectives and strictly better in one."""
    return (
        a.total_sat >= b.total_sat
        and a.total_effort <= b.total_effort
        and (a.total_sat > b.total_sat or a.total_effort < b.total_effort)
    )


@dataclass(frozen=True)
class ParetoFront:
    solutions: tuple[Solution, ...]
    infeasible: bool = False
    settings: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def summary(self) -> dict:
        if not self.solutions:
            return {"n_solutions": 0, "infeasible": self.infeasible}
        sats = [s.total_sat for s in self.solutions]
        effs = [s.total_effort for s in self.solutions]
        return {
            "n_solutions": len(self.solutions),
            "infeasible": self.infeasible,
            "sat_min": min(sats),
            "sat_max": max(sats),
            "effort_min": min(effs),
            "effort_max": max(effs),
        }

    def write_csv(self, path) -> None:
        write_csv(
            path,
            ("solution_id", "total_sat", "total_effort", "requirement_ids"),
            (
                (i + 1, fmt_num(s.total_sat), fmt_num(s.total_effort), ";".join(sorted(s.selected)))
                for i, s in enumerate(self.solutions)
            ),
        )


class Archive:
    """Keeps mutually nondominated solutions; one representative per objective vector."""

    def __init__(self) -> None:
        self._items: list[Solution] = []

    def add(self, cand: Solution) -> bool:
        for s in self._items:
            if dominates(s, cand) or s.objectives == cand.objectives:
                return False
        self._items = [s for s in self._items if not dominates(cand, s)]
        self._items.append(cand)
        return True

    def solutions(self) -> tuple[Solution, ...]:
        return tuple(sorted(self._items, key=lambda s: (s.total_effort, -s.total_sat, sorted(s.selected))))


def satisfaction(dataset: ProjectDataset, salience: SalienceTable, subset: Iterable[str]) -> dict[str, float]:
    """sat_j = sum over the subset of salience_i * points_ij."""
    subset = set(subset)
    terms: dict[str, list[float]] = {r.id: [] for r in dataset.requirements}
    for (sid, rid), pts in dataset.votes.items():
        if sid in subset and rid in terms:
            terms[rid].append(salience.salience(sid) * pts)
    return {rid: math.fsum(t) for rid, t in terms.items()}


def build_instance(
    dataset: ProjectDataset,
    salience: SalienceTable,
    subset: Iterable[str],
    b1_frac: float = DEFAULT_B1_FRAC,
    b2_frac: float = DEFAULT_B2_FRAC,
    b1_abs: float | None = None,
    b2_abs: float | None = None,
) -> NrpInstance:
    """Instance over all dataset requirements with satisfaction from ``subset`` only.

    Bounds are fractions of the total effort unless absolute values are given,
    which then take precedence.
    """
    subset = frozenset(subset)
    if not subset:
        raise ValueError("stakeholder subset is empty")
    unknown = subset - set(dataset.stakeholder_ids)
    if unknown:
        raise ValueError(f"unknown stakeholders in subset: {sorted(unknown)[:5]}")
    total = dataset.total_effort()
    if (b1_abs is None) != (b2_abs is None):
        raise ValueError("b1_abs and b2_abs must be given together")
    if b1_abs is not None:
        b1, b2 = float(b1_abs), float(b2_abs)
        if not 0 < b1 <= b2:
            raise ValueError(f"need 0 < b1_abs <= b2_abs, got {b1}, {b2}")
    else:
        if not 0 < b1_frac <= b2_frac <= 1:
            raise ValueError(f"need 0 < b1_frac <= b2_frac <= 1, got {b1_frac}, {b2_frac}")
        b1, b2 = b1_frac * total, b2_frac * total
    if b2 > total:
        raise ValueError(f"b2 = {b2} exceeds the total effort {total}")
    sat = satisfaction(dataset, salience, subset)
    ids = tuple(r.id for r in dataset.requirements)
    return NrpInstance(
        ids,
        np.array([sat[r] for r in ids]),
        np.array([dataset.requirement(r).effort for r in ids]),
        b1,
        b2,
        subset,
    )


def effort_targets(b1: float, b2: float, steps: int) -> np.ndarray:
    if steps == 1:
        return np.array([b2])
    return np.linspace(b1, b2, steps)


def _ratio_order(inst: NrpInstance) -> list[int]:
    """Indices with sat > 0 by decreasing sat/effort, then higher sat, then lower id."""
    ratio = inst.sat / inst.effort
    cand = [i for i in range(len(inst)) if inst.sat[i] > 0]
    return sorted(cand, key=lambda i: (-ratio[i], -inst.sat[i], inst.requirement_ids[i]))


def _fill(order: Sequence[int], effort: np.ndarray, target: float, chosen: set[int], used: float) -> float:
    for i in order:
        if i not in chosen and used + effort[i] <= target:
            chosen.add(i)
            used += effort[i]
    return used


def _explore_target(inst: NrpInstance, order: list[int], target: float, attempts: int, rng: np.random.Generator):
    """Greedy fill up to ``target`` followed by remove-and-replace attempts.

    Each attempt drops one randomly chosen selected requirement and tries two
    replacements under the same target: refilling the remaining selection by
    ratio, and a fresh ratio fill with the dropped requirement banned. The
    working solution moves only to a candidate that dominates it or has higher
    satisfaction. Yields the initial fill and every accepted move.
    """
    chosen: set[int] = set()
    _fill(order, inst.effort, target, chosen, 0.0)
    current = inst.solution(chosen)
    yield current
    for _ in range(attempts):
        if not chosen:
            break
        pool = sorted(chosen, key=lambda i: inst.requirement_ids[i])
        out = pool[int(rng.integers(len(pool)))]
        rest = [i for i in order if i != out]
        kept = chosen - {out}
        _fill(rest, inst.effort, target, kept, math.fsum(inst.effort[i] for i in kept))
        fresh: set[int] = set()
        _fill(rest, inst.effort, target, fresh, 0.0)
        for trial in (kept, fresh):
            cand = inst.solution(trial)
            if dominates(cand, current) or cand.total_sat > current.total_sat:
                chosen, current = trial, cand
                yield current


def greedy_front(
    instance: NrpInstance,
    steps: int = DEFAULT_STEPS,
    attempts: int = DEFAULT_ATTEMPTS,
    seed: int = 0,
) -> ParetoFront:
    """Pareto front from the greedy fill-and-swap heuristic.

    For each of ``steps`` effort targets evenly spaced over [b1, b2] the
    solution is filled by decreasing satisfaction/effort ratio, then
    ``attempts`` times a randomly chosen requirement is dropped and the
    selection refilled (see ``_explore_target``). Every visited solution with
    effort in [b1, b2] goes through a nondominance archive.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if attempts < 0:
        raise ValueError("attempts must be >= 0")
    order = _ratio_order(instance)
    archive = Archive()
    seeds = np.random.SeedSequence(seed).spawn(steps)
    for target, ss in zip(effort_targets(instance.b1, instance.b2, steps), seeds):
        rng = np.random.default_rng(ss)
        for sol in _explore_target(instance, order, float(target), attempts, rng):
            if instance.b1 <= sol.total_effort <= instance.b2:
                archive.add(sol)
    sols = archive.solutions()
    settings = {"steps": steps, "attempts": attempts, "seed": seed, "b1": instance.b1, "b2": instance.b2}
    return ParetoFront(sols, infeasible=not sols, settings=settings)
