"""Executable Katai / Bourgain-Sarnak-Ziegler sieve machinery.

Given a bounded multiplicative function nu and a bounded periodic function F,
the criterion controls sum nu(n)F(n) through prime blocks P_j (primes in
[R_j, R_{j+1}) with R_j = (1+alpha)^j), sieve sets Q_j (integers up to
M_j = N/R_{j+1} with no prime factor in the blocks so far), and the block
sums W_j = sum_{m in Q_j} |sum_{r in P_j} nu(r) F(m r)|.

The block index j runs over the integers in [j0, j1] with
j0 = (log(1/alpha))^3/alpha and j1 = j0^2 (natural logs, endpoints compared
as reals, never rounded when forming R_j).  Blocks with M_j < 1 have empty
Q_j and contribute nothing to any sum or cardinality count, so block
materialisation stops at the last j with R_{j+1} <= N; for realistic alpha
the nominal upper end j1 sits astronomically beyond that point.

Inequalities with unspecified constants are evaluated with the constant set
to 1 and reported as two-sided numbers, never hard-asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .arith_fn import LimitOverflow, primes_in
from .char_sums import SumAccumulator


class CollisionFound(AssertionError):
    """Two block products m*r coincide; indicates an implementation bug."""


class MemoryGuard(ValueError):
    """Sieve-set range exceeds the desk-scale memory budget."""


_SIEVE_LIMIT = 10**8
_PRIME_LIMIT = 10**9


@dataclass(frozen=True)
class BszParams:
    """Parameter schedule: alpha, the sum length n, and the block range [j0, j1]."""

    alpha: float
    n: int
    j0: float
    j1: float

    def r(self, j: int) -> float:
        return (1.0 + self.alpha) ** j

    def m(self, j: int) -> float:
        return self.n / self.r(j + 1)

    @property
    def j_range(self) -> range:
        """Integers j with j0 <= j <= j1 (real comparison of the endpoints)."""
        lo = math.ceil(self.j0)
        hi = math.floor(self.j1)
        return range(lo, hi + 1)


def make_params(alpha: float, n: int) -> BszParams:
    """j0 = (log(1/alpha))^3/alpha, j1 = j0^2, natural logs."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    if n < 1:
        raise ValueError("n must be positive")
    j0 = math.log(1.0 / alpha) ** 3 / alpha
    return BszParams(alpha, n, j0, j0 * j0)


@dataclass(frozen=True)
class PrimeBlock:
    """Ascending primes in [R_j, R_{j+1})."""

    j: int
    primes: tuple[int, ...]


@dataclass(frozen=True)
class SieveSet:
    """Ascending m <= M_j with no prime factor in the union of blocks up to j."""

    j: int
    members: tuple[int, ...]


def prime_blocks(params: BszParams, max_r: float | None = None) -> list[PrimeBlock]:
    """Materialise the blocks whose sieve sets can be nonempty.

    Blocks with R_{j+1} > N have M_j < 1, hence empty Q_j and zero
    contribution everywhere, so enumeration stops there (or at an explicit
    max_r).  Raises LimitOverflow if a needed block would require primes
    beyond 10^9.
    """
    cap = params.n if max_r is None else max_r
    blocks: list[PrimeBlock] = []
    for j in params.j_range:
        hi = params.r(j + 1)
        if hi > cap:
            break
        if hi > _PRIME_LIMIT:
            raise LimitOverflow(f"block {j} needs primes beyond {_PRIME_LIMIT}")
        blocks.append(PrimeBlock(j, tuple(primes_in(params.r(j), hi))))
    return blocks


def sieve_sets(params: BszParams, blocks: Sequence[PrimeBlock]) -> list[SieveSet]:
    """Q_j for each block, excluding multiples of every prime seen in blocks <= j.

    One boolean exclusion array up to the largest M_j, marked cumulatively
    block by block and snapshotted after each block's primes are added.
    """
    if not blocks:
        return []
    m_max = math.floor(params.m(blocks[0].j))
    if m_max > _SIEVE_LIMIT:
        raise MemoryGuard(f"sieve range {m_max} exceeds {_SIEVE_LIMIT}")
    excluded = np.zeros(m_max + 1, dtype=bool)
    out: list[SieveSet] = []
    for block in blocks:
        for r in block.primes:
            if r <= m_max:
                excluded[r::r] = True
        m_j = math.floor(params.m(block.j))
        members = (np.flatnonzero(~excluded[1 : m_j + 1]) + 1).tolist() if m_j >= 1 else []
        out.append(SieveSet(block.j, tuple(members)))
    return out


@dataclass(frozen=True)
class DistinctProductsReport:
    """Exact-integer audit of the products m*r across the whole schedule."""

    total_products: int
    n: int
    collisions: int

    @property
    def within_budget(self) -> bool:
        return self.total_products <= self.n


def distinct_products_check(
    blocks: Sequence[PrimeBlock], sets: Sequence[SieveSet], n: int
) -> DistinctProductsReport:
    """Verify the products m*r are pairwise distinct, all <= n, and count them."""
    seen: set[int] = set()
    total = 0
    for block, qset in zip(blocks, sets):
        for r in block.primes:
            for m in qset.members:
                prod = m * r
                if prod > n:
                    raise AssertionError(f"product {m}*{r} exceeds N = {n}")
                if prod in seen:
                    raise CollisionFound(f"product {prod} produced twice")
                seen.add(prod)
                total += 1
    report = DistinctProductsReport(total, n, 0)
    if not report.within_budget:
        raise AssertionError(f"sum #P_j #Q_j = {total} exceeds N = {n}")
    return report


def wj_sums(
    nu: Callable[[int], complex],
    f: Callable[[int], complex],
    blocks: Sequence[PrimeBlock],
    sets: Sequence[SieveSet],
) -> list[float]:
    """W_j = sum_{m in Q_j} |sum_{r in P_j} nu(r) F(m r)| for each block.

    Both handles must be bounded by 1 in absolute value; this is spot-checked
    on the first few evaluations, matching the hypothesis of the criterion.
    """
    out: list[float] = []
    checked = 0
    for block, qset in zip(blocks, sets):
        nu_r = [complex(nu(r)) for r in block.primes]
        for val, r in zip(nu_r, block.primes):
            if checked < 64:
                if abs(val) > 1.0 + 1e-9:
                    raise ValueError(f"|nu({r})| = {abs(val)} exceeds 1")
                checked += 1
        outer = SumAccumulator()
        for m in qset.members:
            inner = SumAccumulator()
            for val, r in zip(nu_r, block.primes):
                fv = complex(f(m * r))
                if checked < 64:
                    if abs(fv) > 1.0 + 1e-9:
                        raise ValueError(f"|F({m * r})| = {abs(fv)} exceeds 1")
                    checked += 1
                if val != 0:
                    inner.add(val * fv)
            outer.add(complex(abs(inner.value), 0.0))
        out.append(outer.value.real)
    return out


@dataclass(frozen=True)
class CardinalityRow:
    j: int
    block_size: int
    r_over_j: float
    ratio: float


def pj_cardinality_check(params: BszParams, blocks: Sequence[PrimeBlock]) -> list[CardinalityRow]:
    """Empirical #P_j * j / R_j per block; O(1) is expected, nothing is asserted."""
    rows = []
    for block in blocks:
        r_j = params.r(block.j)
        rows.append(
            CardinalityRow(
                block.j,
                len(block.primes),
                r_j / block.j,
                len(block.primes) * block.j / r_j,
            )
        )
    return rows


@dataclass
class BszDecomposition:
    """Full ledger for one (nu, F, N, alpha) instance."""

    params: BszParams
    period: int
    blocks: list[PrimeBlock]
    sets: list[SieveSet]
    w_values: list[float]
    lhs: complex
    products: DistinctProductsReport
    sum_block_sizes: int
    quotient: float
    rows: list[dict] = field(default_factory=list)

    @property
    def sum_w(self) -> float:
        return math.fsum(self.w_values)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "params": {
                "alpha": self.params.alpha,
                "n": self.params.n,
                "j0": self.params.j0,
                "j1": self.params.j1,
                "period": self.period,
            },
            "rows": self.rows,
            "aggregates": {
                "lhs_re": self.lhs.real,
                "lhs_im": self.lhs.imag,
                "lhs_abs": abs(self.lhs),
                "sum_w": self.sum_w,
                "alpha_n": self.params.alpha * self.params.n,
                "quotient": self.quotient,
                "sum_pq": self.products.total_products,
                "sum_p": self.sum_block_sizes,
                "collisions": self.products.collisions,
                "materialised_blocks": len(self.blocks),
            },
        }


def decomposition_report(
    nu: Callable[[int], complex],
    f: Callable[[int], complex],
    n: int,
    alpha: float,
    period: int,
) -> BszDecomposition:
    """Compute the left side, every W_j, and the empirical decomposition quotient.

    quotient = |sum_{n' <= N} nu(n')F(n')| / (sum_j W_j + alpha*N); it is
    reported as data, not compared against any constant.
    """
    params = make_params(alpha, n)
    blocks = prime_blocks(params)
    sets = sieve_sets(params, blocks)
    w_values = wj_sums(nu, f, blocks, sets)
    products = distinct_products_check(blocks, sets, n)
    acc = SumAccumulator()
    for i in range(1, n + 1):
        nv = complex(nu(i))
        if nv != 0:
            acc.add(nv * complex(f(i)))
    lhs = acc.value
    denom = math.fsum(w_values) + alpha * n
    quotient = abs(lhs) / denom if denom > 0 else math.inf
    rows = [
        {
            "j": block.j,
            "r_j": params.r(block.j),
            "m_j": params.m(block.j),
            "p_count": len(block.primes),
            "q_count": len(qset.members),
            "w": w,
        }
        for block, qset, w in zip(blocks, sets, w_values)
    ]
    return BszDecomposition(
        params=params,
        period=period,
        blocks=blocks,
        sets=sets,
        w_values=w_values,
        lhs=lhs,
        products=products,
        sum_block_sizes=sum(len(b.primes) for b in blocks),
        quotient=quotient,
        rows=rows,
    )


@dataclass(frozen=True)
class ConditionRow:
    """One inequality with both sides evaluated (implied constant 1)."""

    name: str
    lhs: float
    rhs: float
    holds: bool
    log_scale: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "log_scale": self.log_scale,
        }


@dataclass(frozen=True)
class ConditionReport:
    """All hypothesis inequalities for one (alpha, N, p, t, epsilon) instance.

    rho is instantiated as sqrt(p)*log(p)/t, the concrete admissible choice.
    Conditions whose right side overflows a double are compared in log scale.
    alpha_range_empty records that no alpha <= 1 satisfies the lower bound at
    this p, which is the normal situation at desk scale.
    """

    alpha: float
    n: int
    p: int
    t: int
    epsilon: float
    rho: float
    conditions: tuple[ConditionRow, ...]
    alpha_range_empty: bool

    def condition(self, name: str) -> ConditionRow:
        for row in self.conditions:
            if row.name == name:
                return row
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "n": self.n,
            "p": self.p,
            "t": self.t,
            "epsilon": self.epsilon,
            "rho": self.rho,
            "alpha_range_empty": self.alpha_range_empty,
            "conditions": [row.to_dict() for row in self.conditions],
        }


def theorem_conditions(alpha: float, n: int, p: int, t: int, epsilon: float) -> ConditionReport:
    """Evaluate the admissibility inequalities numerically, constants set to 1."""
    if min(alpha, epsilon) <= 0 or min(n, t) <= 0 or p < 3:
        raise ValueError("need alpha, epsilon, n, t positive and p >= 3")
    log_p = math.log(p)
    loglog_p = math.log(log_p)
    inv_alpha = 1.0 / alpha
    log_inv_alpha6 = math.log(inv_alpha) ** 6  # even power: fine on either side of 1
    rho = math.sqrt(p) * log_p / t

    rows = [
        ConditionRow("t_large", float(t), p ** (0.5 + epsilon), t >= p ** (0.5 + epsilon)),
    ]
    # alpha >= 3 * (log log p)^6 / (epsilon * log p)
    alpha_floor = 3.0 * loglog_p**6 / (epsilon * log_p)
    rows.append(ConditionRow("alpha_floor", alpha, alpha_floor, alpha >= alpha_floor))
    # N >= sqrt(p) * exp(5/alpha * log(1/alpha)^6) * log(p), compared in logs
    log_n_floor = 0.5 * log_p + 5.0 * inv_alpha * log_inv_alpha6 + loglog_p
    rows.append(ConditionRow("n_floor", math.log(n), log_n_floor, math.log(n) >= log_n_floor, log_scale=True))
    # alpha^-2 * exp(2/alpha * log(1/alpha)^6) <= 1/rho, in logs
    log_lhs = 2.0 * math.log(inv_alpha) + 2.0 * inv_alpha * log_inv_alpha6
    rows.append(ConditionRow("rho_capacity", log_lhs, -math.log(rho), log_lhs <= -math.log(rho), log_scale=True))
    # N >= t * rho * exp(4/alpha * log(1/alpha)^6), in logs
    log_rhs = math.log(t * rho) + 4.0 * inv_alpha * log_inv_alpha6
    rows.append(ConditionRow("length_capacity", math.log(n), log_rhs, math.log(n) >= log_rhs, log_scale=True))

    return ConditionReport(
        alpha=alpha,
        n=n,
        p=p,
        t=t,
        epsilon=epsilon,
        rho=rho,
        conditions=tuple(rows),
        alpha_range_empty=alpha_floor > 1.0,
    )
