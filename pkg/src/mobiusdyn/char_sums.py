"""Exponential sums along the map's trajectories, paired with reference bounds.

Every public entry point returns a SumReport carrying the complex value, the
bound it is measured against (square-root-of-p type, with the implied
constant set to 1 and natural log), and the empirical ratio.  Bounds are
recorded, never asserted here; the safety envelopes live in the test suite.

Summation is compensated (Kahan) with a fixed chunk size and in-order chunk
reduction, so results are bit-identical across runs and thread counts.

Decimated trajectories xi_{kn} always refer to the extended scalar map.  For
seeds whose orbit avoids the pole this equals stepping with the k-th matrix
power (the fast path); orbits through the pole fall back to direct stepping
so that the scalar sequence stays the single source of truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .arith_fn import AdditiveCharacter, MobiusTable, MultiplicativeCharacter, TableTooSmall, unit_circle
from .field_arith import (
    Fp2Elem,
    FpElem,
    QuadExtension,
    ReducibleExtension,
    discrete_index,
    norm_group_generator,
)
from .mobius_dynamics import (
    MobiusMatrix,
    Trajectory,
    _orbit_values,
    matrix_power_entries,
    period,
)


class BothFrequenciesZero(ValueError):
    """(u, v) = (0, 0) makes the two-term sum trivial."""


class BadIndices(ValueError):
    """Decimation indices must satisfy 0 <= k < m."""


class ZeroFrequency(ValueError):
    """The single-term sum needs u != 0."""


class RangeGuard(ValueError):
    """Requested modulus exceeds the brute-force enumeration caps."""


CHUNK_SIZE = 1 << 16


class SumAccumulator:
    """Compensated complex summation with deterministic chunked reduction.

    Terms go into a Kahan accumulator per chunk of CHUNK_SIZE terms; chunk
    totals are folded in ascending order by a second Kahan stage.  The
    per-component rounding error stays within a few epsilons per term.
    """

    __slots__ = ("chunk_size", "count", "_n", "_sr", "_cr", "_si", "_ci", "_tr", "_tcr", "_ti", "_tci")

    def __init__(self, chunk_size: int = CHUNK_SIZE):
        self.chunk_size = chunk_size
        self.count = 0
        self._n = 0
        self._sr = self._cr = self._si = self._ci = 0.0
        self._tr = self._tcr = self._ti = self._tci = 0.0

    def add(self, z: complex) -> None:
        y = z.real - self._cr
        t = self._sr + y
        self._cr = (t - self._sr) - y
        self._sr = t
        y = z.imag - self._ci
        t = self._si + y
        self._ci = (t - self._si) - y
        self._si = t
        self.count += 1
        self._n += 1
        if self._n == self.chunk_size:
            self._fold()

    def _fold(self) -> None:
        y = self._sr - self._tcr
        t = self._tr + y
        self._tcr = (t - self._tr) - y
        self._tr = t
        y = self._si - self._tci
        t = self._ti + y
        self._tci = (t - self._ti) - y
        self._ti = t
        self._n = 0
        self._sr = self._cr = self._si = self._ci = 0.0

    @property
    def value(self) -> complex:
        re = self._tr + (self._sr - self._tcr)
        im = self._ti + (self._si - self._tci)
        return complex(re, im)


_CSV_FIELDS = ("sum_kind", "p", "a", "b", "c", "d", "xi0", "u", "v", "k", "m", "h", "N", "re", "im", "abs", "bound", "ratio")

CSV_HEADER = ",".join(_CSV_FIELDS)


def _fmt_float(x: float) -> str:
    return format(x, ".17g")


@dataclass
class SumReport:
    """One computed sum, the bound it is measured against, and their ratio.

    reference_bound is the right-hand side of the matching estimate with the
    implied constant taken as 1; when no finite-N bound applies (the twisted
    sum), it is None and ratio falls back to |value|/N, the normalised mean.
    """

    kind: str
    value: complex
    term_count: int
    modulus: int
    reference_bound: float | None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.value) > self.term_count + 1e-6:
            raise AssertionError(
                f"|{self.kind} sum| = {abs(self.value)} exceeds the term count {self.term_count}"
            )

    @property
    def abs_value(self) -> float:
        return abs(self.value)

    @property
    def ratio(self) -> float:
        if self.reference_bound is None:
            return self.abs_value / self.term_count if self.term_count else 0.0
        if self.reference_bound == 0.0:
            return math.inf if self.abs_value else 0.0
        return self.abs_value / self.reference_bound

    def csv_row(self) -> str:
        cells = {
            "sum_kind": self.kind,
            "p": str(self.modulus),
            "N": str(self.term_count),
            "re": _fmt_float(self.value.real),
            "im": _fmt_float(self.value.imag),
            "abs": _fmt_float(self.abs_value),
            "bound": "" if self.reference_bound is None else _fmt_float(self.reference_bound),
            "ratio": _fmt_float(self.ratio),
        }
        for key in ("a", "b", "c", "d", "xi0", "u", "v", "k", "m", "h"):
            cells[key] = str(self.params[key]) if key in self.params else ""
        return ",".join(cells[f] for f in _CSV_FIELDS)


def _matrix_params(matrix: MobiusMatrix, xi0: FpElem) -> dict:
    a, b, c, d = matrix.entries()
    return {"a": a, "b": b, "c": c, "d": d, "xi0": xi0.value}


def _psi_lookup(psi: AdditiveCharacter):
    if psi.p <= 1 << 21:
        return psi.phase_table.__getitem__
    return psi.value_at


def twisted_sum(
    matrix: MobiusMatrix,
    xi0: FpElem,
    psi: AdditiveCharacter,
    n_terms: int,
    mu_table: MobiusTable,
) -> SumReport:
    """sum_{n <= N} mu(n) psi(xi_n) over the extended-map trajectory."""
    return twisted_sum_schedule(matrix, xi0, psi, [n_terms], mu_table)[0]


def twisted_sum_schedule(
    matrix: MobiusMatrix,
    xi0: FpElem,
    psi: AdditiveCharacter,
    n_schedule: Sequence[int],
    mu_table: MobiusTable,
) -> list[SumReport]:
    """One streaming pass reporting the twisted sum at each checkpoint N.

    Checkpoints must be given ascending; every prefix report is identical to
    what a standalone run at that N would produce (the accumulator state at
    term N does not depend on later terms).
    """
    if not psi.is_nontrivial:
        raise ValueError("psi must be a nontrivial additive character")
    if any(n < 1 for n in n_schedule):
        raise ValueError("every checkpoint must be >= 1")
    if list(n_schedule) != sorted(n_schedule):
        raise ValueError("n_schedule must be ascending")
    n_max = max(n_schedule, default=0)
    if n_max > mu_table.limit:
        raise TableTooSmall(f"need mu up to {n_max}, table holds {mu_table.limit}")
    mu = mu_table.values[: n_max + 1].tolist()
    look = _psi_lookup(psi)
    params = _matrix_params(matrix, xi0)
    params["u"] = psi.u.value
    acc = SumAccumulator()
    reports: list[SumReport] = []
    targets = iter(n_schedule)
    target = next(targets, None)
    orbit = _orbit_values(matrix, xi0)
    for n in range(1, n_max + 1):
        x = next(orbit)
        mu_n = mu[n]
        if mu_n > 0:
            acc.add(look(x))
        elif mu_n < 0:
            acc.add(-look(x))
        while target == n:
            reports.append(SumReport("twisted", acc.value, n, matrix.p, None, dict(params)))
            target = next(targets, None)
    return reports


def _sampled_orbit(matrix: MobiusMatrix, xi0: FpElem, step: int, pole_free: bool) -> Iterator[int]:
    """Raw values xi_{step*n} for n = 1, 2, ... of the extended trajectory.

    The pole-free fast path steps with the matrix power; orbits through the
    pole pay O(step) per term so the sampled sequence still matches the
    extended scalar map.
    """
    p = matrix.p
    if step == 0:
        x0 = xi0.value
        while True:
            yield x0
    if pole_free:
        e0, e1, e2, e3 = matrix_power_entries(matrix, step)
        x = xi0.value
        while True:
            den = (e2 * x + e3) % p
            if den == 0:
                raise AssertionError("pole reached on a pole-free orbit; invalid fast path")
            x = (e0 * x + e1) * pow(den, p - 2, p) % p
            yield x
    else:
        orbit = _orbit_values(matrix, xi0)
        while True:
            for _ in range(step - 1):
                next(orbit)
            yield next(orbit)


def _resolve_trajectory(matrix: MobiusMatrix, xi0: FpElem, traj: Trajectory | None) -> Trajectory:
    if traj is None:
        return period(matrix, xi0)
    if traj.matrix != matrix or traj.seed != xi0:
        raise ValueError("supplied trajectory belongs to a different instance")
    return traj


def correlation_sum(
    matrix: MobiusMatrix,
    xi0: FpElem,
    psi: AdditiveCharacter,
    u: FpElem,
    v: FpElem,
    k: int,
    m: int,
    n_terms: int,
    traj: Trajectory | None = None,
) -> SumReport:
    """sum_{n <= N} psi(u*xi_{kn} + v*xi_{mn}) with reference bound m*sqrt(p)*log(p)."""
    if not (u or v):
        raise BothFrequenciesZero("need (u, v) != (0, 0)")
    if not (0 <= k < m):
        raise BadIndices(f"need 0 <= k < m, got k={k}, m={m}")
    if not psi.is_nontrivial:
        raise ValueError("psi must be a nontrivial additive character")
    traj = _resolve_trajectory(matrix, xi0, traj)
    if n_terms > traj.period:
        raise ValueError(f"N = {n_terms} exceeds the period t = {traj.period}")
    p = matrix.p
    look = _psi_lookup(psi)
    zk = _sampled_orbit(matrix, xi0, k, traj.pole_free)
    zm = _sampled_orbit(matrix, xi0, m, traj.pole_free)
    uv, vv = u.value, v.value
    acc = SumAccumulator()
    for _ in range(n_terms):
        acc.add(look((uv * next(zk) + vv * next(zm)) % p))
    bound = m * math.sqrt(p) * math.log(p)
    params = _matrix_params(matrix, xi0)
    params.update(u=uv, v=vv, k=k, m=m)
    return SumReport("correlation", acc.value, n_terms, p, bound, params)


def single_sum(
    matrix: MobiusMatrix,
    xi0: FpElem,
    psi: AdditiveCharacter,
    u: FpElem,
    m: int,
    n_terms: int,
    traj: Trajectory | None = None,
) -> SumReport:
    """sum_{n <= N} psi(u*xi_{mn}) with reference bound gcd(m, t)*sqrt(p)*log(p)."""
    if not u:
        raise ZeroFrequency("u must be nonzero")
    if m < 1:
        raise BadIndices("m must be >= 1")
    if not psi.is_nontrivial:
        raise ValueError("psi must be a nontrivial additive character")
    traj = _resolve_trajectory(matrix, xi0, traj)
    if n_terms > traj.period:
        raise ValueError(f"N = {n_terms} exceeds the period t = {traj.period}")
    p = matrix.p
    look = _psi_lookup(psi)
    zm = _sampled_orbit(matrix, xi0, m, traj.pole_free)
    uv = u.value
    acc = SumAccumulator()
    for _ in range(n_terms):
        acc.add(look(uv * next(zm) % p))
    bound = math.gcd(m, traj.period) * math.sqrt(p) * math.log(p)
    params = _matrix_params(matrix, xi0)
    params.update(u=uv, m=m)
    return SumReport("single", acc.value, n_terms, p, bound, params)


def complete_twisted_sum(
    matrix: MobiusMatrix,
    xi0: FpElem,
    psi: AdditiveCharacter,
    u: FpElem,
    v: FpElem,
    k: int,
    m: int,
    h: int,
    traj: Trajectory | None = None,
) -> SumReport:
    """Complete sum over one period with an e(h*n/t) twist.

    sum_{n=1}^{t} psi(u*xi_{kn} + v*xi_{mn}) e(h*n/t); at h = 0 this is the
    full-period two-term correlation sum.  The family over h = 0..t-1 is the
    discrete Fourier transform of the term sequence, which is what the
    complete-to-incomplete reduction in the tests inverts.
    """
    if not (u or v):
        raise BothFrequenciesZero("need (u, v) != (0, 0)")
    if not (0 <= k < m):
        raise BadIndices(f"need 0 <= k < m, got k={k}, m={m}")
    if not psi.is_nontrivial:
        raise ValueError("psi must be a nontrivial additive character")
    traj = _resolve_trajectory(matrix, xi0, traj)
    t = traj.period
    if not 0 <= h < t:
        raise ValueError(f"need 0 <= h < t = {t}")
    p = matrix.p
    look = _psi_lookup(psi)
    zk = _sampled_orbit(matrix, xi0, k, traj.pole_free)
    zm = _sampled_orbit(matrix, xi0, m, traj.pole_free)
    uv, vv = u.value, v.value
    acc = SumAccumulator()
    for n in range(1, t + 1):
        term = look((uv * next(zk) + vv * next(zm)) % p)
        acc.add(term * unit_circle(h * n, t))
    bound = m * math.sqrt(p) * math.log(p)
    params = _matrix_params(matrix, xi0)
    params.update(u=uv, v=vv, k=k, m=m, h=h)
    return SumReport("complete", acc.value, t, p, bound, params)


@dataclass(frozen=True)
class RationalFunction:
    """h(X)/g(X) with coefficients low-to-high over F_p or its quadratic extension.

    Trailing zero coefficients are trimmed so leading coefficients are
    nonzero; the zero numerator is allowed and has degree 0 by convention.
    """

    numerator: tuple
    denominator: tuple

    def __post_init__(self):
        num = _trim(self.numerator)
        den = _trim(self.denominator)
        if not den:
            raise ValueError("denominator is identically zero")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @property
    def deg_num(self) -> int:
        return max(len(self.numerator) - 1, 0)

    @property
    def deg_den(self) -> int:
        return len(self.denominator) - 1

    @property
    def max_degree(self) -> int:
        return max(self.deg_num, self.deg_den)

    def value_at(self, x):
        """h(x)/g(x), or None at poles (g(x) = 0)."""
        den = _horner(self.denominator, x)
        if not den:
            return None
        if not self.numerator:
            return den - den  # zero of the matching field
        return _horner(self.numerator, x) * den.inv()


def _trim(coeffs) -> tuple:
    coeffs = tuple(coeffs)
    n = len(coeffs)
    while n and not coeffs[n - 1]:
        n -= 1
    return coeffs[:n]


def _horner(coeffs, x):
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


_WEIL_FP_LIMIT = 10**5
_WEIL_FP2_LIMIT = 3000


def weil_sum_fp(
    rf: RationalFunction,
    psi: AdditiveCharacter,
    chi: MultiplicativeCharacter | None = None,
) -> SumReport:
    """Exhaustive hybrid sum over F_p: psi(h(x)/g(x)) chi(x) where g(x) != 0.

    chi = None means no multiplicative twist (the x = 0 term is included);
    a given chi must be a character of the full group F_p^* and contributes
    nothing at x = 0.  Reference bound: max(deg g, deg h) * sqrt(p).
    """
    if not psi.is_nontrivial:
        raise ValueError("psi must be a nontrivial additive character")
    p = psi.p
    if p > _WEIL_FP_LIMIT:
        raise RangeGuard(f"exhaustive sum capped at p <= {_WEIL_FP_LIMIT}")
    look = _psi_lookup(psi)
    chi_table = None
    if chi is not None:
        if chi.order != p - 1:
            raise ValueError("chi must be a character of the full group F_p^*")
        chi_table = [complex(0.0, 0.0)] * p
        g = int(chi.generator)
        if g <= 1:
            raise ValueError("chi generator must generate F_p^*")
        x = 1
        for i in range(p - 1):
            chi_table[x] = unit_circle(chi.multiplier * i, p - 1)
            x = x * g % p
        if x != 1:
            raise ValueError("chi generator does not have order p - 1")
    num = tuple(c.value for c in rf.numerator)
    den = tuple(c.value for c in rf.denominator)
    acc = SumAccumulator()
    terms = 0
    for x in range(p):
        d = _horner_int(den, x, p)
        if d == 0:
            continue
        val = _horner_int(num, x, p) * pow(d, p - 2, p) % p if num else 0
        term = look(val)
        if chi_table is not None:
            cx = chi_table[x]
            if cx == 0:
                continue
            term *= cx
        acc.add(term)
        terms += 1
    bound = rf.max_degree * math.sqrt(p)
    params = {"u": psi.u.value}
    if chi is not None:
        params["h"] = chi.multiplier
    return SumReport("weil_fp", acc.value, terms, p, bound, params)


def _horner_int(coeffs: tuple[int, ...], x: int, p: int) -> int:
    if not coeffs:
        return 0
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = (acc * x + c) % p
    return acc


def weil_sum_fp2_norm_one(
    rf: RationalFunction,
    psi: AdditiveCharacter,
    chi: MultiplicativeCharacter | None = None,
    generator: Fp2Elem | None = None,
) -> SumReport:
    """Hybrid sum over the norm-one subgroup of an irreducible quadratic extension.

    sum over {z : Nm(z) = 1, g(z) != 0} of psi(Tr(h(z)/g(z))) chi(z); the
    group has p + 1 elements and is enumerated as powers of its canonical
    generator, ascending in the exponent.  Bound: max(deg g, deg h)*sqrt(p).
    """
    if not psi.is_nontrivial:
        raise ValueError("psi must be a nontrivial additive character")
    ext: QuadExtension = rf.denominator[0].ext
    p = ext.p
    if p > _WEIL_FP2_LIMIT:
        raise RangeGuard(f"norm-one enumeration capped at p <= {_WEIL_FP2_LIMIT}")
    if not ext.is_irreducible:
        raise ReducibleExtension("norm-one sums need an irreducible extension")
    gen = generator if generator is not None else norm_group_generator(ext)
    t = p + 1
    chi_shift = 0
    if chi is not None:
        if chi.order != t:
            raise ValueError("chi must be a character of the norm-one group (order p + 1)")
        chi_shift = chi.multiplier * (
            1 if chi.generator == gen else discrete_index(gen, chi.generator, t)
        )
    look = _psi_lookup(psi)
    acc = SumAccumulator()
    z = ext.one
    terms = 0
    for i in range(t):
        val = rf.value_at(z)
        if val is not None:
            term = look(val.trace().value)
            if chi is not None:
                term *= unit_circle(chi_shift * i, t)
            acc.add(term)
            terms += 1
        z = z * gen
    if z != ext.one:
        raise AssertionError("generator does not have order p + 1")
    bound = rf.max_degree * math.sqrt(p)
    params = {"u": psi.u.value}
    if chi is not None:
        params["h"] = chi.multiplier
    return SumReport("weil_fp2_norm1", acc.value, terms, p, bound, params)


@dataclass(frozen=True)
class ScanPoint:
    """One trajectory instance of a ratio scan (all entries plain ints)."""

    p: int
    a: int
    b: int
    c: int
    d: int
    xi0: int


@dataclass
class ScanConfig:
    """Deterministic grid for bound_ratio_scan.

    kind: 'correlation' or 'single'.  Correlation runs each (u, v) frequency
    pair at indices (k, m); single sums use u only.  n_terms = None means
    the full period of each instance.
    """

    kind: str
    instances: list[ScanPoint]
    frequencies: list[tuple[int, int]]
    k: int = 0
    m: int = 1
    psi_u: int = 1
    n_terms: int | None = None


def bound_ratio_scan(config: ScanConfig) -> tuple[list[SumReport], dict]:
    """Run the grid in deterministic order and summarise the observed ratios.

    Degenerate grid points whose reference bound vanishes are recorded with
    ratio = inf but excluded from the quantile summary.
    """
    from .field_arith import PrimeModulus

    reports: list[SumReport] = []
    for inst in config.instances:
        modulus = PrimeModulus(inst.p)
        matrix = MobiusMatrix(
            modulus.elem(inst.a), modulus.elem(inst.b), modulus.elem(inst.c), modulus.elem(inst.d)
        )
        xi0 = modulus.elem(inst.xi0)
        psi = AdditiveCharacter(modulus.elem(config.psi_u))
        traj = period(matrix, xi0)
        n = config.n_terms if config.n_terms is not None else traj.period
        n = min(n, traj.period)
        for u, v in config.frequencies:
            if config.kind == "correlation":
                reports.append(
                    correlation_sum(
                        matrix, xi0, psi, modulus.elem(u), modulus.elem(v), config.k, config.m, n, traj
                    )
                )
            elif config.kind == "single":
                reports.append(single_sum(matrix, xi0, psi, modulus.elem(u), config.m, n, traj))
            else:
                raise ValueError(f"unknown scan kind {config.kind!r}")
    return reports, ratio_summary(reports)


def ratio_summary(reports: Sequence[SumReport]) -> dict:
    ratios = sorted(r.ratio for r in reports if math.isfinite(r.ratio))
    if not ratios:
        return {"count": 0}

    def q(frac: float) -> float:
        if len(ratios) == 1:
            return ratios[0]
        pos = frac * (len(ratios) - 1)
        lo = int(pos)
        hi = min(lo + 1, len(ratios) - 1)
        return ratios[lo] + (pos - lo) * (ratios[hi] - ratios[lo])

    return {
        "count": len(ratios),
        "min": ratios[0],
        "q25": q(0.25),
        "median": q(0.5),
        "q75": q(0.75),
        "max": ratios[-1],
    }
