"""Sum kernels vs independent oracles: re-summation, DFT completion, exhaustion."""

import math
import random

import pytest

from mobiusdyn.arith_fn import (
    AdditiveCharacter,
    MultiplicativeCharacter,
    mobius_sieve,
    unit_circle,
)
from mobiusdyn.char_sums import (
    CSV_HEADER,
    BadIndices,
    BothFrequenciesZero,
    RationalFunction,
    ScanConfig,
    ScanPoint,
    SumAccumulator,
    SumReport,
    ZeroFrequency,
    bound_ratio_scan,
    complete_twisted_sum,
    correlation_sum,
    single_sum,
    twisted_sum,
    twisted_sum_schedule,
    weil_sum_fp,
    weil_sum_fp2_norm_one,
)
from mobiusdyn.field_arith import (
    PrimeModulus,
    QuadExtension,
    norm_group_generator,
    primitive_root,
)
from mobiusdyn.mobius_dynamics import MobiusMatrix, apply, period

M101 = PrimeModulus(101)
A101 = MobiusMatrix(M101.elem(27), M101.elem(39), M101.elem(5), M101.elem(11))
XI101 = M101.elem(55)  # period 51, pole-free
PSI101 = AdditiveCharacter(M101.elem(1))


@pytest.fixture(scope="module")
def traj101():
    return period(A101, XI101)


@pytest.fixture(scope="module")
def mu_table():
    return mobius_sieve(20000)


# --- accumulator ------------------------------------------------------------------


def test_accumulator_matches_fsum():
    # error contract: within 8*eps*count of the exact sum, per component
    rng = random.Random(1)
    acc = SumAccumulator(chunk_size=64)
    terms = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(10_000)]
    for z in terms:
        acc.add(z)
    assert acc.count == len(terms)
    budget = 8 * 2.22e-16 * len(terms)
    assert abs(acc.value.real - math.fsum(t.real for t in terms)) <= budget
    assert abs(acc.value.imag - math.fsum(t.imag for t in terms)) <= budget


def test_accumulator_chunking_is_transparent():
    terms = [complex((-1) ** n / (n + 1), n % 3 - 1) for n in range(5000)]
    values = []
    for chunk in (7, 64, 1 << 16):
        acc = SumAccumulator(chunk_size=chunk)
        for z in terms:
            acc.add(z)
        values.append(acc.value)
    assert max(abs(v - values[0]) for v in values) < 1e-13


# --- reports -----------------------------------------------------------------------


def test_report_triangle_inequality_enforced():
    with pytest.raises(AssertionError):
        SumReport("twisted", complex(5.0, 0.0), 4, 101, None)


def test_report_csv_row_layout():
    r = SumReport("twisted", complex(1.0, -2.0), 10, 101, None, {"a": 1, "b": 2, "c": 3, "d": 4, "xi0": 5, "u": 6})
    row = r.csv_row()
    assert CSV_HEADER.count(",") == row.count(",")
    cells = row.split(",")
    assert cells[0] == "twisted"
    assert cells[1] == "101"
    assert cells[7] == "6"       # u
    assert cells[8] == ""        # v unused
    assert cells[12] == "10"     # N
    assert cells[16] == ""       # bound unset
    assert float(cells[17]) == abs(complex(1.0, -2.0)) / 10


# --- twisted sums -------------------------------------------------------------------


def test_twisted_single_term(mu_table):
    r = twisted_sum(A101, XI101, PSI101, 1, mu_table)
    assert abs(r.abs_value - 1.0) < 1e-15
    assert abs(r.value - PSI101(apply(A101, XI101))) < 1e-15


def test_twisted_skips_square_factors(mu_table):
    # mu(4) = 0, so N = 4 equals the N = 3 partial sum
    r3 = twisted_sum(A101, XI101, PSI101, 3, mu_table)
    r4 = twisted_sum(A101, XI101, PSI101, 4, mu_table)
    assert r3.value == r4.value


def test_twisted_against_direct_resummation(mu_table):
    # independent oracle: recompute the trajectory by repeated map application
    # and add plain complex terms in order
    m = PrimeModulus(10007)
    A = MobiusMatrix(m.elem(614), m.elem(6938), m.elem(1409), m.elem(7104))
    xi0 = m.elem(6851)
    psi = AdditiveCharacter(m.one)
    n_terms = 10**4
    r = twisted_sum(A, xi0, psi, n_terms, mu_table)
    expected = 0.0 + 0.0j
    x = xi0
    for n in range(1, n_terms + 1):
        x = apply(A, x)
        mu_n = mu_table.mu(n)
        if mu_n:
            expected += mu_n * unit_circle(x.value, m.p)
    assert abs(r.value - expected) <= 1e-9
    assert r.reference_bound is None
    assert abs(r.ratio - abs(expected) / n_terms) < 1e-12


def test_twisted_schedule_matches_standalone(mu_table):
    reports = twisted_sum_schedule(A101, XI101, PSI101, [10, 100, 1000], mu_table)
    for r in reports:
        solo = twisted_sum(A101, XI101, PSI101, r.term_count, mu_table)
        assert r.value == solo.value


def test_twisted_validation(mu_table):
    with pytest.raises(ValueError):
        twisted_sum(A101, XI101, AdditiveCharacter(M101.elem(0)), 5, mu_table)
    from mobiusdyn.arith_fn import TableTooSmall

    with pytest.raises(TableTooSmall):
        twisted_sum(A101, XI101, PSI101, mu_table.limit + 1, mu_table)


# --- correlation and single sums ------------------------------------------------------


def test_correlation_single_term(traj101):
    r = correlation_sum(A101, XI101, PSI101, M101.elem(1), M101.elem(2), 0, 1, 1, traj101)
    assert abs(r.abs_value - 1.0) < 1e-15


def test_correlation_validation(traj101):
    with pytest.raises(BothFrequenciesZero):
        correlation_sum(A101, XI101, PSI101, M101.elem(0), M101.elem(0), 0, 1, 5, traj101)
    with pytest.raises(BadIndices):
        correlation_sum(A101, XI101, PSI101, M101.elem(1), M101.elem(1), 2, 1, 5, traj101)
    with pytest.raises(ValueError):
        correlation_sum(A101, XI101, PSI101, M101.elem(1), M101.elem(1), 0, 1, traj101.period + 1, traj101)


def test_correlation_u_zero_collapses_to_single(traj101):
    v = M101.elem(3)
    q = correlation_sum(A101, XI101, PSI101, M101.elem(0), v, 0, 2, 40, traj101)
    r = single_sum(A101, XI101, PSI101, v, 2, 40, traj101)
    assert abs(q.value - r.value) < 1e-12


def test_correlation_reference_bound(traj101):
    r = correlation_sum(A101, XI101, PSI101, M101.elem(1), M101.elem(2), 1, 4, 30, traj101)
    assert r.reference_bound == pytest.approx(4 * math.sqrt(101) * math.log(101))


def test_correlation_periodicity_offset(traj101):
    # the full-period sum over [1, t] equals the directly computed sum over
    # [t+1, 2t]: shifting the window by the period changes nothing
    t = traj101.period
    u, v = M101.elem(2), M101.elem(7)
    full = correlation_sum(A101, XI101, PSI101, u, v, 1, 3, t, traj101)
    vals = [XI101]
    x = XI101
    for _ in range(2 * 3 * t):
        x = apply(A101, x)
        vals.append(x)
    shifted = sum(
        PSI101(u * vals[1 * n] + v * vals[3 * n]) for n in range(t + 1, 2 * t + 1)
    )
    assert abs(full.value - shifted) < 1e-9


def test_conjugate_frequency_conjugates_value(traj101):
    u, v = M101.elem(4), M101.elem(9)
    plus = correlation_sum(A101, XI101, PSI101, u, v, 0, 1, 51, traj101)
    psi_minus = AdditiveCharacter(M101.elem(-1))
    minus = correlation_sum(A101, XI101, psi_minus, u, v, 0, 1, 51, traj101)
    assert abs(plus.value - minus.value.conjugate()) < 1e-12


def test_single_sum_constant_when_m_equals_period(traj101):
    t = traj101.period
    r = single_sum(A101, XI101, PSI101, M101.elem(7), t, t, traj101)
    expected = t * PSI101(M101.elem(7 * XI101.value))
    assert abs(r.value - expected) < 1e-9
    assert abs(r.abs_value - t) < 1e-9
    assert r.reference_bound >= t  # gcd(t, t) = t makes the bound >= N


def test_single_sum_shift_by_period_invariant(traj101):
    # m and m + t sample identical trajectory values
    t = traj101.period
    for m_step in (1, 2, 5):
        a = single_sum(A101, XI101, PSI101, M101.elem(3), m_step, 40, traj101)
        b = single_sum(A101, XI101, PSI101, M101.elem(3), m_step + t, 40, traj101)
        assert abs(a.value - b.value) < 1e-9
        # the bounds differ (gcd changes); only the values coincide
        assert a.term_count == b.term_count


def test_single_sum_validation(traj101):
    with pytest.raises(ZeroFrequency):
        single_sum(A101, XI101, PSI101, M101.elem(0), 1, 5, traj101)
    with pytest.raises(BadIndices):
        single_sum(A101, XI101, PSI101, M101.elem(1), 0, 5, traj101)


def test_decimation_through_pole_matches_direct_stepping():
    # an orbit through the pole must still sample the extended scalar sequence
    rng = random.Random(3)
    m = PrimeModulus(101)
    from mobiusdyn.sampling import random_sl2

    while True:
        A = random_sl2(rng, m)
        traj = period(A, A.pole)
        if traj.period >= 12:
            break
    xi0 = A.pole
    psi = AdditiveCharacter(m.one)
    got = single_sum(A, xi0, psi, m.one, 3, 10, traj)
    vals = []
    x = xi0
    for _ in range(30):
        x = apply(A, x)
        vals.append(x)
    expected = sum(psi(vals[3 * n - 1]) for n in range(1, 11))
    assert abs(got.value - expected) < 1e-12


# --- complete sums and the completion identity -------------------------------------


def test_complete_h_zero_equals_full_period_correlation(traj101):
    u, v = M101.elem(1), M101.elem(2)
    c = complete_twisted_sum(A101, XI101, PSI101, u, v, 0, 1, 0, traj101)
    q = correlation_sum(A101, XI101, PSI101, u, v, 0, 1, traj101.period, traj101)
    assert abs(c.value - q.value) < 1e-12


def test_complete_validation(traj101):
    with pytest.raises(ValueError):
        complete_twisted_sum(A101, XI101, PSI101, M101.elem(1), M101.elem(2), 0, 1, traj101.period, traj101)


def test_completion_identity_reconstructs_incomplete(traj101):
    # Q(N) = (1/t) sum_h Q_h * sum_{n<=N} e(-h n / t): the finite Fourier kernel
    t = traj101.period
    u, v = M101.elem(1), M101.elem(2)
    completes = [
        complete_twisted_sum(A101, XI101, PSI101, u, v, 0, 1, h, traj101).value for h in range(t)
    ]
    for n_terms in (1, 17, 34, t):
        kernel = [sum(unit_circle(-h * n, t) for n in range(1, n_terms + 1)) for h in range(t)]
        recon = sum(completes[h] * kernel[h] for h in range(t)) / t
        direct = correlation_sum(A101, XI101, PSI101, u, v, 0, 1, n_terms, traj101).value
        assert abs(recon - direct) < 1e-8


# --- exhaustive hybrid sums ----------------------------------------------------------


def test_weil_fp_poles_are_skipped():
    # h = 0 with no twist counts the non-poles of g
    m = PrimeModulus(101)
    g = (m.elem(0), m.elem(1))  # g(X) = X, one root
    rf = RationalFunction((), g)
    r = weil_sum_fp(rf, PSI101)
    assert r.value == pytest.approx(100)
    assert r.term_count == 100


def test_weil_fp_gauss_sum_is_exactly_sqrt_p():
    for p in (101, 199, 293):
        m = PrimeModulus(p)
        psi = AdditiveCharacter(m.one)
        rf = RationalFunction((m.elem(0), m.elem(0), m.elem(1)), (m.one,))  # X^2
        r = weil_sum_fp(rf, psi)
        assert r.abs_value == pytest.approx(math.sqrt(p), rel=1e-12)


def test_weil_fp_with_character_gauss_sum():
    m = PrimeModulus(101)
    chi = MultiplicativeCharacter(primitive_root(m), 100, 1)
    rf = RationalFunction((m.elem(0), m.elem(1)), (m.one,))  # X
    r = weil_sum_fp(rf, PSI101, chi)
    assert r.abs_value == pytest.approx(math.sqrt(101), rel=1e-12)
    assert r.ratio == pytest.approx(1.0, rel=1e-12)


def test_weil_fp_kloosterman_under_classical_bound():
    # h/g = X + 1/X has |sum| <= 2 sqrt(p) (poles removed)
    m = PrimeModulus(293)
    psi = AdditiveCharacter(m.one)
    rf = RationalFunction((m.one, m.elem(0), m.one), (m.elem(0), m.one))  # (1 + X^2)/X
    r = weil_sum_fp(rf, psi)
    assert r.abs_value <= 2 * math.sqrt(293) + 1e-9
    assert r.ratio <= 1.0 + 1e-12  # bound uses max degree 2


def test_weil_fp_random_grid_ratios():
    from mobiusdyn.sampling import random_rational_function_fp

    rng = random.Random(5)
    m = PrimeModulus(293)
    psi = AdditiveCharacter(m.one)
    chi = MultiplicativeCharacter(primitive_root(m), 292, 1)
    worst = 0.0
    for _ in range(40):
        rf = random_rational_function_fp(rng, m, 3)
        for c in (None, chi):
            r = weil_sum_fp(rf, psi, c)
            worst = max(worst, r.ratio)
    assert worst <= 10.0


def test_weil_norm_one_group_size_exhaustive():
    # p = 13: enumeration hits exactly p + 1 = 14 elements, all of norm one
    m = PrimeModulus(13)
    ext = QuadExtension(m, m.elem(5))
    gen = norm_group_generator(ext)
    psi = AdditiveCharacter(m.one)
    rf = RationalFunction((), (ext.one,))  # h = 0: counts the group
    r = weil_sum_fp2_norm_one(rf, psi, None, gen)
    assert r.term_count == 14
    assert r.value == pytest.approx(14)
    brute = {
        (a, b)
        for a in range(13)
        for b in range(13)
        if ext.elem(a, b).norm().value == 1
    }
    assert len(brute) == 14
    powers = {((z := gen**k).c0.value, z.c1.value) for k in range(14)}
    assert powers == brute


def test_weil_norm_one_trace_twist_ratios():
    m = PrimeModulus(101)
    ext = QuadExtension(m, m.elem(1))
    assert ext.is_irreducible
    gen = norm_group_generator(ext)
    psi = AdditiveCharacter(m.one)
    chi = MultiplicativeCharacter(gen, 102, 1)
    rf = RationalFunction((ext.zero, ext.one), (ext.one,))  # X
    for c in (None, chi):
        r = weil_sum_fp2_norm_one(rf, psi, c, gen)
        assert r.ratio <= 10.0


# --- scans ---------------------------------------------------------------------------


def test_scan_empty_grid():
    reports, summary = bound_ratio_scan(ScanConfig("correlation", [], [(1, 2)], 0, 1))
    assert reports == []
    assert summary == {"count": 0}


def test_scan_singleton_matches_direct_call(traj101):
    point = ScanPoint(101, *A101.entries(), XI101.value)
    reports, summary = bound_ratio_scan(ScanConfig("correlation", [point], [(1, 2)], 0, 1))
    assert len(reports) == 1
    direct = correlation_sum(
        A101, XI101, PSI101, M101.elem(1), M101.elem(2), 0, 1, traj101.period, traj101
    )
    assert reports[0].value == direct.value
    assert summary["count"] == 1
    assert summary["max"] == pytest.approx(direct.ratio)


def test_default_scan_grid_produces_sixty_reports():
    from mobiusdyn.sampling import default_scan_config

    reports, summary = bound_ratio_scan(default_scan_config())
    assert len(reports) == 60
    assert summary["count"] == 60
    assert math.isfinite(summary["max"])
    assert summary["max"] <= 10.0  # safety envelope, not a structural constant
