"""Deterministic instance generation."""

import random

from mobiusdyn.field_arith import PrimeModulus
from mobiusdyn.sampling import (
    random_admissible_instance,
    random_rational_function_fp,
    random_rational_function_fp2,
    random_sl2,
)


def test_random_sl2_contract():
    rng = random.Random(1)
    m = PrimeModulus(101)
    for _ in range(30):
        A = random_sl2(rng, m)
        a, b, c, d = A.entries()
        assert (a * d - b * c) % 101 == 1
        assert c != 0
        assert (a + d) % 101 not in (2, 99)


def test_admissible_instance_is_pole_free_and_nondegenerate():
    rng = random.Random(2)
    m = PrimeModulus(1009)
    for _ in range(5):
        A, xi0, traj, form = random_admissible_instance(rng, m)
        assert traj.pole_free
        assert traj.period > 1
        assert form.beta


def test_sampling_is_deterministic():
    m = PrimeModulus(101)
    one = random_admissible_instance(random.Random(99), m)
    two = random_admissible_instance(random.Random(99), m)
    assert one[0] == two[0]
    assert one[1] == two[1]


def test_random_rational_function_shape():
    rng = random.Random(3)
    m = PrimeModulus(101)
    for _ in range(50):
        rf = random_rational_function_fp(rng, m, 3)
        assert rf.max_degree >= 1
        assert rf.max_degree <= 3
        assert rf.denominator[-1]


def test_random_fp2_rational_function_trace_varies():
    rng = random.Random(4)
    m = PrimeModulus(101)
    from mobiusdyn.field_arith import QuadExtension, norm_group_generator

    ext = QuadExtension(m, m.elem(1))
    gen = norm_group_generator(ext)
    for _ in range(10):
        rf = random_rational_function_fp2(rng, ext, gen, 3)
        traces = set()
        z = ext.one
        for _ in range(20):
            val = rf.value_at(z)
            if val is not None:
                traces.add(val.trace().value)
            z = z * gen
        assert len(traces) >= 2
