"""Budgeted image selection per section, and allocation to subsections.

Three modes:

* local: each subsection independently takes its quota of top images by
  phrase-similarity sum. The same image may serve several subsections;
  nothing discourages redundancy.
* global: one greedy pass per section maximizes coverage minus redundancy
  over the whole section, then selected images are dealt out to
  subsections.
* joint: as global, but the greedy objective adds the similarity sum
  weighted against the coverage term by ``beta``.

Greedy adds the image with the best marginal gain until the budget is
spent or the best gain drops to zero or below (the global score can go
negative on redundant adds, and a zero-gain add cannot help a submodular
objective later). Ties prefer the smallest image id. The optional lazy
variant (stale upper bounds in a heap) is bit-identical to the naive
loop; submodularity makes stale bounds valid and the heap orders equal
gains by image rank, matching the naive tie-break.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import Section, Subsection, WindowConfig
from .errors import IntegrityError, SchemaError
from .objectives import (
    AllocScore,
    Mode,
    ObjectiveConfig,
    SectionContext,
    build_section_context,
    coverage_value,
    local_value,
    marginal_gains,
    objective_weights,
)
from .simstore import SimMatrix


class BudgetKind(Enum):
    GOLD = "gold"
    FIXED = "fixed"
    PREDICTED = "predicted"


@dataclass(frozen=True)
class BudgetPolicy:
    """Per-subsection image quota rule.

    gold mirrors the reference placement counts; fixed(n) gives every
    subsection the same quota; predicted rounds a regression estimate to
    the nearest non-negative integer (half up).
    """

    kind: BudgetKind = BudgetKind.GOLD
    n: int | None = None
    predictor: Callable[[Section, Subsection], float] | None = None

    def __post_init__(self) -> None:
        if self.kind is BudgetKind.FIXED:
            if self.n is None or self.n < 0:
                raise SchemaError(f"fixed budget needs n >= 0, got {self.n}")
        if self.kind is BudgetKind.PREDICTED and self.predictor is None:
            raise SchemaError("predicted budget needs a predictor")

    def quota(self, section: Section, sub: Subsection) -> int:
        if self.kind is BudgetKind.GOLD:
            return len(sub.gold_images)
        if self.kind is BudgetKind.FIXED:
            assert self.n is not None
            return self.n
        assert self.predictor is not None
        raw = float(self.predictor(section, sub))
        return max(0, int(np.floor(raw + 0.5)))

    def describe(self) -> str:
        if self.kind is BudgetKind.FIXED:
            return f"fixed:{self.n}"
        return self.kind.value


@dataclass(frozen=True)
class ImageDiagnostic:
    """Why one image landed where it did."""

    image_id: str
    subsection_id: str
    marginal_gain: float | None
    sim_single: float
    coverage_single: int


@dataclass(frozen=True)
class Assignment:
    section_id: str
    mode: Mode
    selected: tuple[str, ...]
    allocation: Mapping[str, tuple[str, ...]]
    budget: int
    tau: float
    beta: float
    alloc_score: AllocScore
    policy: str
    diagnostics: tuple[ImageDiagnostic, ...]


# ---------------------------------------------------------------------------
# Greedy core (index space)
# ---------------------------------------------------------------------------


def _single_gain(
    cov: np.ndarray,
    s_by_image: np.ndarray,
    covered: np.ndarray,
    j: int,
    sim_weight: float,
    new_weight: float,
    dup_weight: float,
) -> float:
    # Must mirror marginal_gains element-for-element so lazy and naive
    # greedy agree bitwise.
    gain = sim_weight * s_by_image[j] if sim_weight else 0.0
    if (new_weight or dup_weight) and cov.shape[0] > 0:
        col = cov[:, j]
        fresh = (col & ~covered).sum()
        dup = (col & covered).sum()
        gain = gain + new_weight * fresh + dup_weight * dup
    return float(gain)


def greedy_select_trace(
    cov: np.ndarray,
    s_by_image: np.ndarray,
    budget: int,
    objective: str = "joint",
    beta: float = 1.0,
    lazy: bool = False,
) -> tuple[list[int], list[float]]:
    """Greedy pick order and the marginal gain at each pick.

    Works in column-index space; ties go to the smallest index. A budget
    beyond the bank size selects at most the whole bank.
    """
    if budget < 0:
        raise SchemaError(f"budget must be >= 0, got {budget}")
    sim_weight, new_weight, dup_weight = objective_weights(objective, beta)
    n_images = s_by_image.shape[0]
    limit = min(budget, n_images)
    if limit == 0:
        return [], []
    if lazy:
        return _greedy_lazy(
            cov, s_by_image, limit, sim_weight, new_weight, dup_weight
        )
    covered = np.zeros(cov.shape[0], dtype=bool)
    available = np.ones(n_images, dtype=bool)
    picks: list[int] = []
    gains_out: list[float] = []
    for _ in range(limit):
        gains = marginal_gains(
            cov,
            s_by_image,
            covered,
            sim_weight=sim_weight,
            new_weight=new_weight,
            dup_weight=dup_weight,
        )
        gains[~available] = -np.inf
        best = int(np.argmax(gains))
        best_gain = float(gains[best])
        if best_gain <= 0.0:
            break
        picks.append(best)
        gains_out.append(best_gain)
        covered |= cov[:, best]
        available[best] = False
    return picks, gains_out


def _greedy_lazy(
    cov: np.ndarray,
    s_by_image: np.ndarray,
    limit: int,
    sim_weight: float,
    new_weight: float,
    dup_weight: float,
) -> tuple[list[int], list[float]]:
    covered = np.zeros(cov.shape[0], dtype=bool)
    initial = marginal_gains(
        cov,
        s_by_image,
        covered,
        sim_weight=sim_weight,
        new_weight=new_weight,
        dup_weight=dup_weight,
    )
    heap = [(-float(g), j) for j, g in enumerate(initial)]
    heapq.heapify(heap)
    picks: list[int] = []
    gains_out: list[float] = []
    while heap and len(picks) < limit:
        neg_gain, j = heapq.heappop(heap)
        fresh = _single_gain(
            cov, s_by_image, covered, j, sim_weight, new_weight, dup_weight
        )
        # Accept only when the recomputed gain still beats (or ties, with
        # a smaller index) everything else's stale upper bound.
        if heap and (-fresh, j) > heap[0]:
            heapq.heappush(heap, (-fresh, j))
            continue
        if fresh <= 0.0:
            break
        picks.append(j)
        gains_out.append(fresh)
        covered |= cov[:, j]
    return picks, gains_out


def greedy_select_indices(
    cov: np.ndarray,
    s_by_image: np.ndarray,
    budget: int,
    objective: str = "joint",
    beta: float = 1.0,
    lazy: bool = False,
) -> list[int]:
    picks, _ = greedy_select_trace(
        cov, s_by_image, budget, objective, beta=beta, lazy=lazy
    )
    return picks


def greedy_select(
    ctx: SectionContext,
    budget: int,
    objective: str,
    lazy: bool = False,
) -> tuple[list[str], list[float]]:
    """Section-level greedy returning image ids in pick order plus gains.

    Ties break on the lexicographically smallest image id, so columns are
    permuted into id order before the index-space greedy runs.
    """
    ids = np.array(ctx.image_ids)
    perm = np.argsort(ids, kind="stable")
    picks, gains = greedy_select_trace(
        ctx.cov_section[:, perm],
        ctx.s_section[perm],
        budget,
        objective,
        beta=ctx.beta,
        lazy=lazy,
    )
    return [str(ids[perm[p]]) for p in picks], gains


# ---------------------------------------------------------------------------
# Allocation
# ---------------------------------------------------------------------------


def _rank_images(ids: Sequence[str], scores: np.ndarray) -> np.ndarray:
    """Indices sorted by score descending, then id ascending."""
    return np.lexsort((np.array(ids), -scores))


def allocate(
    selected: Sequence[str],
    ctx: SectionContext,
    mode: Mode,
    quotas: Mapping[str, int],
    gains: Sequence[float] | None = None,
) -> tuple[dict[str, tuple[str, ...]], tuple[ImageDiagnostic, ...]]:
    """Deal selected images out to subsections, one subsection each.

    Images are processed in greedy-pick order. Each goes to the
    quota-available subsection with the best allocation score for the
    mode; ties go to the earliest subsection in document order. Fewer
    selected images than total quota is fine (greedy may stop early);
    more is not.
    """
    total_quota = sum(quotas.values())
    if len(selected) > total_quota:
        raise IntegrityError(
            f"{len(selected)} selected images exceed total quota {total_quota}"
        )
    if len(set(selected)) != len(selected):
        raise IntegrityError("selected image list contains duplicates")
    subs = ctx.section.subsections
    remaining = {sub.id: int(quotas.get(sub.id, 0)) for sub in subs}

    full_set_score: dict[str, float] | None = None
    if mode is Mode.JOINT and ctx.alloc_score is AllocScore.FULL_SET:
        full_set_score = {}
        for ui, sub in enumerate(subs):
            idx = ctx.image_indices(selected)
            s_all = local_value(ctx.s_subsection[ui], idx)
            c_all = coverage_value(ctx.cov_subsection[ui], idx)
            full_set_score[sub.id] = s_all + ctx.beta * c_all

    allocation: dict[str, list[str]] = {sub.id: [] for sub in subs}
    diagnostics: list[ImageDiagnostic] = []
    for pick_pos, image_id in enumerate(selected):
        j = ctx.image_indices([image_id])[0]
        best_sub: Subsection | None = None
        best_score = -np.inf
        for ui, sub in enumerate(subs):
            if remaining[sub.id] <= 0:
                continue
            c_single = int(ctx.cov_subsection[ui][:, j].sum())
            s_single = float(ctx.s_subsection[ui, j])
            if mode is Mode.GLOBAL:
                score = float(c_single)
            elif full_set_score is not None:
                score = full_set_score[sub.id]
            else:
                score = s_single + ctx.beta * c_single
            if score > best_score:
                best_score = score
                best_sub = sub
        if best_sub is None:
            raise IntegrityError(
                f"no quota left for image {image_id!r} in section "
                f"{ctx.section.id!r}"
            )
        remaining[best_sub.id] -= 1
        allocation[best_sub.id].append(image_id)
        ui = ctx.subsection_index(best_sub.id)
        diagnostics.append(
            ImageDiagnostic(
                image_id=image_id,
                subsection_id=best_sub.id,
                marginal_gain=float(gains[pick_pos]) if gains is not None else None,
                sim_single=float(ctx.s_subsection[ui, j]),
                coverage_single=int(ctx.cov_subsection[ui][:, j].sum()),
            )
        )
    return {k: tuple(v) for k, v in allocation.items()}, tuple(diagnostics)


# ---------------------------------------------------------------------------
# Mode drivers
# ---------------------------------------------------------------------------


def assign_local(
    ctx: SectionContext,
    quotas: Mapping[str, int],
) -> tuple[tuple[str, ...], dict[str, tuple[str, ...]], tuple[ImageDiagnostic, ...]]:
    """Independent per-subsection top-quota picks by similarity sum.

    The same image may appear under several subsections; that redundancy
    is exactly what the section-level modes exist to avoid.
    """
    subs = ctx.section.subsections
    n_images = ctx.n_images
    selected: list[str] = []
    seen: set[str] = set()
    allocation: dict[str, tuple[str, ...]] = {}
    diagnostics: list[ImageDiagnostic] = []
    for ui, sub in enumerate(subs):
        quota = int(quotas.get(sub.id, 0))
        if quota > n_images:
            raise IntegrityError(
                f"quota {quota} for subsection {sub.id!r} exceeds bank size "
                f"{n_images}"
            )
        order = _rank_images(ctx.image_ids, ctx.s_subsection[ui])
        picks = [str(ctx.image_ids[k]) for k in order[:quota]]
        allocation[sub.id] = tuple(picks)
        for image_id in picks:
            j = ctx.image_indices([image_id])[0]
            diagnostics.append(
                ImageDiagnostic(
                    image_id=image_id,
                    subsection_id=sub.id,
                    marginal_gain=None,
                    sim_single=float(ctx.s_subsection[ui, j]),
                    coverage_single=int(ctx.cov_subsection[ui][:, j].sum()),
                )
            )
            if image_id not in seen:
                seen.add(image_id)
                selected.append(image_id)
    return tuple(selected), allocation, tuple(diagnostics)


def assign_section(
    section: Section,
    matrix: SimMatrix,
    objective_cfg: ObjectiveConfig = ObjectiveConfig(),
    policy: BudgetPolicy = BudgetPolicy(),
    window_cfg: WindowConfig = WindowConfig(),
    lazy: bool = False,
) -> Assignment:
    """Full pipeline for one section: context, quotas, greedy, allocation."""
    ctx = build_section_context(section, matrix, window_cfg, objective_cfg)
    quotas = {sub.id: policy.quota(section, sub) for sub in section.subsections}
    budget = sum(quotas.values())
    mode = objective_cfg.mode

    if mode is Mode.LOCAL:
        selected, allocation, diagnostics = assign_local(ctx, quotas)
    else:
        objective = "global" if mode is Mode.GLOBAL else "joint"
        picks, gains = greedy_select(ctx, budget, objective, lazy=lazy)
        allocation, diagnostics = allocate(picks, ctx, mode, quotas, gains)
        selected = tuple(picks)

    return Assignment(
        section_id=section.id,
        mode=mode,
        selected=tuple(selected),
        allocation=allocation,
        budget=budget,
        tau=ctx.tau,
        beta=ctx.beta,
        alloc_score=ctx.alloc_score,
        policy=policy.describe(),
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

DOCUMENT_VERSION = 1


def assignment_to_dict(assignment: Assignment) -> dict:
    return {
        "section_id": assignment.section_id,
        "mode": assignment.mode.value,
        "config": {
            "budget": assignment.budget,
            "tau": assignment.tau,
            "beta": assignment.beta,
            "alloc_score": assignment.alloc_score.value,
            "policy": assignment.policy,
        },
        "selected": list(assignment.selected),
        "allocation": {k: list(v) for k, v in assignment.allocation.items()},
        "diagnostics": [
            {
                "image_id": d.image_id,
                "subsection_id": d.subsection_id,
                "marginal_gain": d.marginal_gain,
                "sim_single": d.sim_single,
                "coverage_single": d.coverage_single,
            }
            for d in assignment.diagnostics
        ],
    }


def assignments_to_document(assignments: Sequence[Assignment]) -> dict:
    ordered = sorted(assignments, key=lambda a: a.section_id)
    return {
        "version": DOCUMENT_VERSION,
        "assignments": [assignment_to_dict(a) for a in ordered],
    }
