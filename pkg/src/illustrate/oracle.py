"""Brute-force references and property checkers for the selection objectives.

Everything here is deliberately independent of the production scoring code:
set functions are evaluated through plain callables, exhaustive search
enumerates subsets directly, and redundancy is recomputed from per-concept
covering counts rather than through the ``total - coverage`` shortcut the
library uses. Tests lean on that independence; do not "optimize" these
routines by delegating to :mod:`illustrate.objectives`.

Instances are small abstract problems: a boolean concept-by-image coverage
table plus a per-image similarity score. Images are referred to by column
index. Bitmask evaluation keeps exhaustive checks fast enough to fuzz
heavily (a selection's coverage is one OR-reduction and a popcount).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np

from .errors import IntegrityError, SchemaError

SetFunction = Callable[[tuple[int, ...]], float]

#: Enumeration guard for exhaustive searches.
ENUMERATION_LIMIT = 1_000_000

#: Greedy approximation guarantee for monotone submodular maximization.
APPROX_GUARANTEE = 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class Violation:
    """Witness of a failed submodularity or monotonicity check."""

    kind: str
    small: tuple[int, ...]
    large: tuple[int, ...]
    item: int
    gain_small: float
    gain_large: float


@dataclass(frozen=True, eq=False)
class Instance:
    """Abstract selection problem: coverage table + modular scores."""

    cov: np.ndarray
    s_by_image: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.cov.ndim != 2 or self.cov.dtype != bool:
            raise SchemaError("cov must be a 2-d boolean array")
        if self.s_by_image.shape != (self.cov.shape[1],):
            raise SchemaError(
                f"s_by_image has shape {self.s_by_image.shape}, "
                f"expected ({self.cov.shape[1]},)"
            )

    @property
    def n_images(self) -> int:
        return self.cov.shape[1]

    @property
    def n_concepts(self) -> int:
        return self.cov.shape[0]

    @classmethod
    def random(
        cls,
        seed: int,
        n_images: int = 10,
        n_concepts: int = 8,
        density: float = 0.35,
        sim_scale: float = 1.0,
    ) -> "Instance":
        rng = random.Random(seed)
        cov = np.array(
            [
                [rng.random() < density for _ in range(n_images)]
                for _ in range(n_concepts)
            ],
            dtype=bool,
        ).reshape(n_concepts, n_images)
        s = np.array([rng.random() * sim_scale for _ in range(n_images)])
        return cls(cov=cov, s_by_image=s, seed=seed)

    def concept_bits(self) -> tuple[int, ...]:
        """Per image, a bitmask over concepts it covers."""
        bits = []
        for j in range(self.n_images):
            mask = 0
            for c in range(self.n_concepts):
                if self.cov[c, j]:
                    mask |= 1 << c
            bits.append(mask)
        return tuple(bits)

    def objective(self, kind: str, beta: float = 1.0) -> SetFunction:
        """A plain set-function callable for one named objective.

        Known kinds: local, coverage, redundancy, neg_redundancy, global,
        joint. Integer-valued objectives return exact floats.
        """
        bits = self.concept_bits()
        s = self.s_by_image

        def union_and_total(sel: tuple[int, ...]) -> tuple[int, int]:
            union = 0
            total = 0
            for j in sel:
                union |= bits[j]
                total += bits[j].bit_count()
            return union, total

        if kind == "local":
            return lambda sel: float(sum(s[j] for j in sel))
        if kind == "coverage":

            def coverage(sel: tuple[int, ...]) -> float:
                union, _ = union_and_total(sel)
                return float(union.bit_count())

            return coverage
        if kind in ("redundancy", "neg_redundancy"):
            sign = 1.0 if kind == "redundancy" else -1.0

            def redundancy(sel: tuple[int, ...]) -> float:
                union, total = union_and_total(sel)
                return sign * float(total - union.bit_count())

            return redundancy
        if kind == "global":

            def global_score(sel: tuple[int, ...]) -> float:
                union, total = union_and_total(sel)
                c = union.bit_count()
                return float(c - (total - c))

            return global_score
        if kind == "joint":

            def joint(sel: tuple[int, ...]) -> float:
                union, total = union_and_total(sel)
                c = union.bit_count()
                return sum(s[j] for j in sel) + beta * (c - (total - c))

            return joint
        raise SchemaError(f"unknown objective {kind!r}")


def covering_counts(cov: np.ndarray, selection: Sequence[int]) -> list[int]:
    """Per-concept count of selected images covering it (explicit loop)."""
    counts = [0] * cov.shape[0]
    for c in range(cov.shape[0]):
        for j in selection:
            if cov[c, j]:
                counts[c] += 1
    return counts


def independent_redundancy(cov: np.ndarray, selection: Sequence[int]) -> int:
    """Redundancy from first principles: excess coverings per concept."""
    return sum(max(n - 1, 0) for n in covering_counts(cov, selection))


def independent_coverage(cov: np.ndarray, selection: Sequence[int]) -> int:
    return sum(1 for n in covering_counts(cov, selection) if n > 0)


# ---------------------------------------------------------------------------
# Exhaustive search
# ---------------------------------------------------------------------------


def enumeration_size(n_items: int, budget: int) -> int:
    return sum(comb(n_items, k) for k in range(min(budget, n_items) + 1))


def brute_force_best(
    fn: SetFunction,
    items: Sequence,
    budget: int,
    limit: int = ENUMERATION_LIMIT,
) -> tuple[tuple, float]:
    """Best subset of size <= budget by exhaustive enumeration.

    Items are tried in sorted order; between equal-valued subsets the
    lexicographically smallest sorted tuple wins. Raises when the subset
    count would exceed ``limit``.
    """
    if budget < 0:
        raise SchemaError(f"budget must be >= 0, got {budget}")
    ordered = sorted(items)
    n = len(ordered)
    total = enumeration_size(n, budget)
    if total > limit:
        raise IntegrityError(
            f"enumeration of {total} subsets exceeds limit {limit}"
        )
    best_sel: tuple = ()
    best_val = fn(())
    for size in range(1, min(budget, n) + 1):
        for combo in itertools.combinations(ordered, size):
            val = fn(combo)
            if val > best_val or (val == best_val and combo < best_sel):
                best_val = val
                best_sel = combo
    return best_sel, float(best_val)


# ---------------------------------------------------------------------------
# Property checkers
# ---------------------------------------------------------------------------


def _sample_nested_pair(
    rng: random.Random, n_items: int
) -> tuple[list[int], list[int], int]:
    """A <= B subsets of range(n_items) plus an item outside B."""
    b_size = rng.randint(0, n_items - 1)
    b = sorted(rng.sample(range(n_items), b_size))
    a = sorted(rng.sample(b, rng.randint(0, b_size)))
    outside = [j for j in range(n_items) if j not in set(b)]
    x = rng.choice(outside)
    return a, b, x


def check_submodular(
    fn: SetFunction,
    n_items: int,
    rng: random.Random,
    trials: int = 1000,
    tol: float = 0.0,
) -> list[Violation]:
    """Sampled diminishing-returns check: gain at A >= gain at B for A <= B.

    tol=0 demands exact inequality (use for integer-valued objectives);
    pass a small tolerance for float-valued ones.
    """
    if n_items < 2:
        raise SchemaError("need at least 2 items to test submodularity")
    violations = []
    for _ in range(trials):
        a, b, x = _sample_nested_pair(rng, n_items)
        gain_a = fn(tuple(a + [x])) - fn(tuple(a))
        gain_b = fn(tuple(b + [x])) - fn(tuple(b))
        if gain_a < gain_b - tol:
            violations.append(
                Violation("submodularity", tuple(a), tuple(b), x, gain_a, gain_b)
            )
    return violations


def check_monotone(
    fn: SetFunction,
    n_items: int,
    rng: random.Random,
    trials: int = 1000,
    tol: float = 0.0,
) -> list[Violation]:
    """Sampled check that growing a set never decreases the value.

    Samples nested pairs A <= B and counts f(A) > f(B) events.
    """
    if n_items < 1:
        raise SchemaError("need at least 1 item to test monotonicity")
    violations = []
    for _ in range(trials):
        b_size = rng.randint(0, n_items)
        b = sorted(rng.sample(range(n_items), b_size))
        a = sorted(rng.sample(b, rng.randint(0, b_size)))
        small = fn(tuple(a))
        large = fn(tuple(b))
        if small > large + tol:
            violations.append(
                Violation("monotonicity", tuple(a), tuple(b), -1, small, large)
            )
    return violations


def check_monotone_all(
    fn: SetFunction,
    n_items: int,
    tol: float = 0.0,
    limit: int = ENUMERATION_LIMIT,
) -> list[Violation]:
    """Exhaustive monotonicity check over every (subset, added item) pair."""
    total = (2**n_items) * n_items
    if total > limit:
        raise IntegrityError(
            f"exhaustive monotonicity over {total} pairs exceeds limit {limit}"
        )
    violations = []
    universe = range(n_items)
    for size in range(n_items):
        for subset in itertools.combinations(universe, size):
            base = fn(subset)
            present = set(subset)
            for x in universe:
                if x in present:
                    continue
                grown = fn(tuple(sorted(subset + (x,))))
                if grown < base - tol:
                    violations.append(
                        Violation("monotonicity", subset, subset, x, grown - base, 0.0)
                    )
    return violations


def overlap_heavy_instance(n_images: int = 6, n_concepts: int = 3) -> Instance:
    """Every image covers every concept; adding past the first only hurts
    the global score. Used to demonstrate its non-monotonicity."""
    cov = np.ones((n_concepts, n_images), dtype=bool)
    return Instance(cov=cov, s_by_image=np.zeros(n_images))


# ---------------------------------------------------------------------------
# Greedy-vs-oracle report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceReport:
    """One instance's greedy-vs-optimal comparison."""

    seed: int | None
    n_images: int
    budget: int
    objective: str
    opt_value: float
    opt_selection: tuple[int, ...]
    greedy_value: float
    greedy_selection: tuple[int, ...]
    ratio: float
    monotone: bool
    submodular_violations: int


def greedy_ratio_report(
    instances: Sequence[Instance],
    objective: str,
    budget: int,
    beta: float = 1.0,
    trials: int = 1000,
    tol: float = 1e-9,
    check_seed: int = 0,
) -> list[InstanceReport]:
    """Run production greedy against the brute-force optimum per instance.

    When an instance's objective is verified monotone (exhaustively, when
    small enough; sampled otherwise) the 1 - 1/e bound is enforced here,
    not left to the caller. Non-monotone instances get their ratio
    recorded without assertion. Greedy beating the oracle always raises:
    that can only mean a broken oracle or a broken objective.
    """
    from .assign import greedy_select_indices

    reports = []
    for instance in instances:
        fn = instance.objective(objective, beta=beta)
        opt_sel, opt_val = brute_force_best(fn, range(instance.n_images), budget)
        picks = greedy_select_indices(
            instance.cov, instance.s_by_image, budget, objective, beta=beta
        )
        greedy_val = fn(tuple(sorted(picks)))
        if greedy_val > opt_val + tol:
            raise IntegrityError(
                f"greedy value {greedy_val} exceeds oracle optimum {opt_val} "
                f"(seed {instance.seed})"
            )
        exhaustive_budget = (2**instance.n_images) * instance.n_images
        if exhaustive_budget <= ENUMERATION_LIMIT:
            monotone = not check_monotone_all(fn, instance.n_images, tol=tol)
        else:
            rng = random.Random(check_seed)
            monotone = not check_monotone(fn, instance.n_images, rng, trials, tol)
        rng = random.Random(check_seed)
        sub_violations = len(
            check_submodular(fn, instance.n_images, rng, trials, tol)
        )
        if opt_val > 0:
            ratio = greedy_val / opt_val
        else:
            ratio = 1.0
        # The bound needs both halves of the theorem. Asserting on
        # monotonicity alone would false-alarm on the supermodular
        # positive-redundancy objective, which is monotone too.
        if monotone and not sub_violations and ratio < APPROX_GUARANTEE - tol:
            raise IntegrityError(
                f"monotone instance (seed {instance.seed}) broke the greedy "
                f"guarantee: ratio {ratio:.6f} < {APPROX_GUARANTEE:.6f}"
            )
        reports.append(
            InstanceReport(
                seed=instance.seed,
                n_images=instance.n_images,
                budget=budget,
                objective=objective,
                opt_value=opt_val,
                opt_selection=tuple(opt_sel),
                greedy_value=float(greedy_val),
                greedy_selection=tuple(picks),
                ratio=ratio,
                monotone=monotone,
                submodular_violations=sub_violations,
            )
        )
    return reports
