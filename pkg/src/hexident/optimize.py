"""Exact minimum-size search over periodic codes with a fixed period.

One fundamental domain is a bit vector, and the identifying conditions
of the infinite lift are positive clauses over those bits (each clause:
at least one of these orbits is in the code).  Minimizing the code is
then a minimum hitting set, solved here by branch and bound with unit
propagation, a disjoint-clause lower bound, and translation symmetry
breaking.  Domains of at most 16 vertices can also be enumerated
outright, which doubles as an independent check on the search.

The module also carries two code generators used for corpus building:
a seeded random minimal identifying code, and a deliberately broken
code built around an adjacent pair isolated within distance two (such
a pair shares its identifier, so verification must always reject it).
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Tuple

from hexident.code import PeriodicCode, full_code, identifying_constraints
from hexident.hexgrid import PeriodLattice, Vertex, ball

# Proved bracket on the minimum density of an identifying code of the
# grid: no code is sparser than 12/29, and explicit periodic codes
# reach 3/7.  Scan rows below the floor indicate a bug somewhere.
DENSITY_FLOOR = Fraction(12, 29)
DENSITY_CEILING = Fraction(3, 7)

DOMAIN_CAP = 32
BRUTE_FORCE_CAP = 16
INFEASIBLE = "INFEASIBLE"


class DomainTooLarge(ValueError):
    """Fundamental domain exceeds the cap for exhaustive work."""


@dataclass(frozen=True)
class SearchSpec:
    """What to search: the period, an optional size budget, and knobs."""

    lattice: PeriodLattice
    budget: int | None = None
    symmetry_reduction: bool = True
    cap: int = DOMAIN_CAP


@dataclass
class SearchResult:
    """Outcome of one search.

    min_size is an integer, or INFEASIBLE when a budget rules every
    code out.  The witness always passes verify() when present.
    proof_of_optimality is False only when a node cap stopped the
    search early; the witness is then just the best one found.
    """

    min_size: int | str
    witness: PeriodicCode | None
    nodes_explored: int
    proof_of_optimality: bool


# ---------------------------------------------------------------------------
# clause plumbing


def _masks(lattice: PeriodLattice) -> tuple[int, ...]:
    return tuple(c.mask for c in identifying_constraints(lattice))


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class _Stop(Exception):
    pass


class _Search:
    """Branch and bound over one clause system.

    bound is one more than the largest size still worth recording, so
    any completion of size < bound improves the incumbent.
    """

    def __init__(self, masks, limit: int, node_cap: int | None):
        self.masks = masks
        self.bound = limit + 1
        self.node_cap = node_cap
        self.best: int | None = None
        self.nodes = 0

    def seed(self, bits: int) -> None:
        size = bits.bit_count()
        if size < self.bound:
            self.bound = size
            self.best = bits

    def run(self, in_bits: int, out_bits: int) -> None:
        state = self._propagate(in_bits, out_bits)
        if state is not None:
            self._node(*state)

    def _propagate(self, in_bits: int, out_bits: int):
        # unit propagation: a clause with one live orbit forces it in
        changed = True
        while changed:
            changed = False
            for m in self.masks:
                if m & in_bits:
                    continue
                avail = m & ~out_bits
                if not avail:
                    return None
                if avail & (avail - 1) == 0:
                    in_bits |= avail
                    changed = True
        return in_bits, out_bits

    def _node(self, in_bits: int, out_bits: int) -> None:
        self.nodes += 1
        if self.node_cap is not None and self.nodes > self.node_cap:
            raise _Stop
        unsat = [m & ~out_bits for m in self.masks if not m & in_bits]
        size = in_bits.bit_count()
        if not unsat:
            if size < self.bound:
                self.bound = size
                self.best = in_bits
            return
        if size + self._lower(unsat) >= self.bound:
            return
        # branch inside the tightest clause, on its busiest orbit,
        # membership before exclusion
        clause = min(unsat, key=lambda a: (a.bit_count(), a))
        pick, pick_cover = -1, -1
        for i in _bits(clause):
            cover = sum(1 for a in unsat if a >> i & 1)
            if cover > pick_cover:
                pick, pick_cover = i, cover
        bit = 1 << pick
        state = self._propagate(in_bits | bit, out_bits)
        if state is not None:
            self._node(*state)
        state = self._propagate(in_bits, out_bits | bit)
        if state is not None:
            self._node(*state)

    def _lower(self, unsat) -> int:
        # pairwise disjoint clauses each need their own new member
        taken = 0
        disjoint = 0
        for a in sorted(unsat, key=int.bit_count):
            if not a & taken:
                disjoint += 1
                taken |= a
        cover: dict[int, int] = {}
        for a in unsat:
            for i in _bits(a):
                cover[i] = cover.get(i, 0) + 1
        widest = max(cover.values())
        return max(disjoint, -(-len(unsat) // widest))


def _sublattice_mask(lattice: PeriodLattice, s: int) -> int:
    out = 0
    for v in lattice.domain():
        if v.s == s:
            out |= 1 << lattice.index(v)
    return out


def minimum_code(spec: SearchSpec, node_cap: int | None = None) -> SearchResult:
    """Smallest identifying code with exactly the period of spec.lattice.

    Exhaustive and provably optimal when it runs to completion; a node
    cap turns the result into a best-known incumbent instead.
    """
    lattice = spec.lattice
    n = lattice.domain_size
    if n > spec.cap:
        raise DomainTooLarge(f"domain size {n} exceeds cap {spec.cap}")
    masks = _masks(lattice)
    limit = spec.budget if spec.budget is not None else n
    search = _Search(masks, limit, node_cap)
    for seed in (0, 1, 2):
        search.seed(_random_bits(lattice, masks, random.Random(seed)))
    complete = True
    try:
        if spec.symmetry_reduction:
            # every nonempty code translates onto one that contains the
            # origin of whichever sublattice it meets
            search.run(1 << lattice.index(Vertex(0, 0, 0)), 0)
            search.run(1 << lattice.index(Vertex(0, 0, 1)), _sublattice_mask(lattice, 0))
        else:
            search.run(0, 0)
    except _Stop:
        complete = False
    if search.best is None:
        return SearchResult(INFEASIBLE, None, search.nodes, complete)
    witness = PeriodicCode.from_bits(lattice, search.best)
    return SearchResult(search.best.bit_count(), witness, search.nodes, complete)


# ---------------------------------------------------------------------------
# brute force and enumeration


def enumerate_codes(lattice: PeriodLattice) -> Iterator[PeriodicCode]:
    """Every identifying code with this period, by pure exhaustion."""
    n = lattice.domain_size
    if n > BRUTE_FORCE_CAP:
        raise DomainTooLarge(f"domain size {n} exceeds cap {BRUTE_FORCE_CAP}")
    masks = _masks(lattice)
    for bits in range(1 << n):
        if all(bits & m for m in masks):
            yield PeriodicCode.from_bits(lattice, bits)


def brute_force_minimum(lattice: PeriodLattice) -> Tuple[int, PeriodicCode]:
    """Independent minimum for small domains, no pruning cleverness."""
    n = lattice.domain_size
    if n > BRUTE_FORCE_CAP:
        raise DomainTooLarge(f"domain size {n} exceeds cap {BRUTE_FORCE_CAP}")
    masks = _masks(lattice)
    best_bits = full_code(lattice).bits
    best_size = n
    for bits in range(1 << n):
        if bits.bit_count() >= best_size:
            continue
        if all(bits & m for m in masks):
            best_bits = bits
            best_size = bits.bit_count()
    return best_size, PeriodicCode.from_bits(lattice, best_bits)


# ---------------------------------------------------------------------------
# code generators


def _random_bits(lattice: PeriodLattice, masks, rng: random.Random) -> int:
    n = lattice.domain_size
    by_vertex: list[list[int]] = [[] for _ in range(n)]
    for m in masks:
        for i in _bits(m):
            by_vertex[i].append(m)
    bits = (1 << n) - 1
    order = list(range(n))
    rng.shuffle(order)
    for i in order:
        thinned = bits & ~(1 << i)
        if all(m & thinned for m in by_vertex[i]):
            bits = thinned
    return bits


def random_code(lattice: PeriodLattice, seed=None) -> PeriodicCode:
    """Random minimal identifying code of the given period.

    Starts from the full code and drops vertices in shuffled order
    whenever the result stays identifying, so every kept vertex is
    necessary.  Deterministic for a fixed seed.
    """
    bits = _random_bits(lattice, _masks(lattice), random.Random(seed))
    return PeriodicCode.from_bits(lattice, bits)


def plant_isolated_pair(lattice: PeriodLattice, seed=None):
    """A code built around an adjacent pair with nothing else within
    distance two of it.

    The two planted vertices then share {both} as identifier, so the
    result can never verify.  Returns (code, u, v).  Raises ValueError
    when the period is too small to keep the pair's surroundings clear
    of its own translates.
    """
    u = Vertex(0, 0, 0)
    v = Vertex(0, 0, 1)
    zone = ball(u, 2) | ball(v, 2)
    orbit_ids = {lattice.index(w) for w in zone}
    if len(orbit_ids) != len(zone):
        raise ValueError("period too small to isolate an adjacent pair")
    rng = random.Random(seed)
    bits = 1 << lattice.index(u) | 1 << lattice.index(v)
    for i in range(lattice.domain_size):
        if i not in orbit_ids and rng.random() < 0.5:
            bits |= 1 << i
    return PeriodicCode.from_bits(lattice, bits), u, v


# ---------------------------------------------------------------------------
# density scans


@dataclass(frozen=True)
class ScanRow:
    lattice: PeriodLattice
    min_size: int | str
    density: Optional[Fraction]
    nodes_explored: int
    optimal: bool

    @property
    def critical(self) -> bool:
        """True when the row contradicts the proved density floor."""
        return self.density is not None and self.density < DENSITY_FLOOR


def density_scan(family: Iterable[PeriodLattice], node_cap: int | None = None) -> List[ScanRow]:
    """Minimum size and density per lattice, sorted sparsest first."""
    rows = []
    for lattice in family:
        result = minimum_code(SearchSpec(lattice), node_cap=node_cap)
        density = None if result.witness is None else result.witness.density()
        rows.append(
            ScanRow(lattice, result.min_size, density, result.nodes_explored, result.proof_of_optimality)
        )
    rows.sort(
        key=lambda r: (
            r.density is None,
            r.density if r.density is not None else Fraction(0),
            r.lattice.domain_size,
            r.lattice.p,
            r.lattice.q,
            r.lattice.shear,
        )
    )
    return rows


def scan_csv(rows: Iterable[ScanRow]) -> str:
    """Scan table as CSV with exact num/den densities."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["p", "q", "shear", "minSize", "density", "nodesExplored", "optimal"])
    for r in rows:
        density = "" if r.density is None else f"{r.density.numerator}/{r.density.denominator}"
        writer.writerow([r.lattice.p, r.lattice.q, r.lattice.shear, r.min_size, density, r.nodes_explored, r.optimal])
    return buf.getvalue()
