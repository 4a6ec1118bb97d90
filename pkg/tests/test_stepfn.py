import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from dynration.stepfn import (
    DomainError,
    Jump,
    Partition,
    PiecewiseLinear,
    StepFunction,
    lebesgue_integral_product,
    mixture,
    pointwise,
    segment_refinement,
)

from gen import random_step


def test_closed_jump_includes_endpoint():
    f = StepFunction.step(1, closed=True)
    assert f.eval(1) == 1
    assert f.eval(F(99, 100)) == 0


def test_open_jump_excludes_endpoint():
    f = StepFunction([0, 1], [Jump(F(1, 2), False)])
    assert f.eval(F(1, 2)) == 0
    assert f.eval(F(51, 100)) == 1
    # open at 1 is the zero function and canonicalizes away
    assert StepFunction.step(1, closed=False).is_zero()


def test_lottery_level_at_atom():
    f = StepFunction.step(F(2, 3), closed=True, high=F(1, 2))
    assert f.eval(F(2, 3)) == F(1, 2)
    assert f.eval(F(2, 3) - F(1, 100)) == 0


def test_eval_outside_domain():
    f = StepFunction.one()
    with pytest.raises(DomainError):
        f.eval(F(3, 2))
    with pytest.raises(DomainError):
        f.eval(-1)


def test_canonicalization_drops_zero_height_jumps():
    f = StepFunction([0, 0, 1], [Jump(F(1, 4), True), Jump(F(1, 2), True)])
    assert f.num_steps == 1
    assert f.jumps[0].at == F(1, 2)


def test_levels_must_be_monotone():
    with pytest.raises(ValueError):
        StepFunction([1, 0], [Jump(F(1, 2), True)])
    with pytest.raises(ValueError):
        StepFunction([0, F(3, 2)], [Jump(F(1, 2), True)])


def test_same_location_pair():
    f = StepFunction([0, F(1, 2), 1], [Jump(F(1, 3), True), Jump(F(1, 3), False)])
    assert f.eval(F(1, 4)) == 0
    assert f.eval(F(1, 3)) == F(1, 2)
    assert f.eval(F(1, 2)) == 1
    with pytest.raises(ValueError):
        StepFunction([0, F(1, 2), 1], [Jump(F(1, 3), False), Jump(F(1, 3), True)])


def test_integral_examples():
    assert StepFunction.zero().integral() == 0
    assert StepFunction.step(F(2, 3), high=F(1, 2)).integral() == F(1, 6)


def test_integral_flag_invariance_and_additivity():
    rng = random.Random(5)
    atoms = [F(1, 6), F(1, 2), F(11, 12)]
    for _ in range(50):
        f = random_step(rng, atoms)
        flipped = StepFunction(f.levels, [Jump(j.at, not j.closed) for j in f.jumps]) \
            if len({j.at for j in f.jumps}) == len(f.jumps) else f
        assert f.integral() == flipped.integral()
        mid = rng.choice(atoms)
        assert f.integral(0, mid) + f.integral(mid, 1) == f.integral()


def test_segment_refinement_examples():
    part = segment_refinement([StepFunction.step(F(1, 2))])
    assert part.points == (0, F(1, 2), 1)
    part3 = segment_refinement([StepFunction.step(F(1, 3)), StepFunction.step(F(2, 3))])
    assert len(part3.gap_lengths()) == 3
    # EX-RATION profile splits at 2/3 and 1
    prof = [StepFunction.step(1), StepFunction.step(F(2, 3), high=F(1, 2))]
    assert segment_refinement(prof).points == (0, F(2, 3), 1)


def test_refinement_inputs_constant_on_open_segments():
    rng = random.Random(11)
    atoms = [F(k, 12) for k in (2, 5, 7, 11)]
    fs = [random_step(rng, atoms) for _ in range(4)]
    part = segment_refinement(fs)
    for f in fs:
        for a, b in zip(part.points, part.points[1:]):
            samples = [a + F(k, 7) * (b - a) for k in (1, 3, 6)]
            assert len({f.eval(s) for s in samples}) == 1


def test_lebesgue_integral_product_expression():
    r1 = StepFunction.step(1)
    r2 = StepFunction.step(F(2, 3), high=F(1, 2))
    got = lebesgue_integral_product([r1, r2], combine=lambda a, b: a + (1 - a) * b)
    assert got == F(1, 6)
    assert lebesgue_integral_product([r1, r2], weights=[1, 0]) == 0
    assert lebesgue_integral_product([r2], upper=F(2, 3)) == 0


def test_from_values_round_trip():
    rng = random.Random(3)
    atoms = [F(1, 4), F(2, 3), F(9, 10)]
    for _ in range(60):
        f = random_step(rng, atoms)
        part = Partition(atoms)
        assert StepFunction.from_values(part, part.values(f)) == f


def test_mixture_is_pointwise():
    f0 = StepFunction.step(F(1, 3), high=F(1, 2))
    f1 = StepFunction.step(F(2, 3))
    mix = mixture(f0, f1, F(1, 4))
    for v in (0, F(1, 3), F(1, 2), F(2, 3), F(5, 6), 1):
        assert mix.eval(v) == F(1, 4) * f1.eval(v) + F(3, 4) * f0.eval(v)


def test_pointwise_max_handles_tail_override():
    r = StepFunction.step(F(1, 2), high=F(1, 2))
    tail = StepFunction.step(F(3, 4), closed=False)
    top = pointwise(max, r, tail)
    assert top.eval(F(3, 4)) == F(1, 2)
    assert top.eval(F(4, 5)) == 1


@given(st.integers(0, 2**32 - 1))
def test_eval_monotone_in_v(seed):
    rng = random.Random(seed)
    atoms = sorted(rng.sample([F(k, 12) for k in range(1, 13)], 3))
    f = random_step(rng, atoms)
    grid = sorted(atoms + [0, 1, F(1, 24), F(23, 24)])
    values = [f.eval(v) for v in grid]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_partition_integrate_partial_gap():
    part = Partition([F(1, 2)])
    vals = part.values(StepFunction.step(F(1, 2)))
    assert part.integrate(vals, F(3, 4)) == F(1, 4)
    assert part.prefix_integrals(vals) == [0, 0, F(1, 2)]


def test_piecewise_linear_eval_and_convexity():
    pl = PiecewiseLinear((0, F(2, 3), 1), (0, 0, F(1, 6)))
    assert pl.eval(F(5, 6)) == F(1, 12)
    assert pl.value_at_point(F(2, 3)) == 0
    assert pl.is_convex()
    assert pl.max_slope() == F(1, 2)
    diff = pl - PiecewiseLinear((0, F(2, 3), 1), (0, 0, 0))
    assert diff.eval(1) == F(1, 6)
    concave = PiecewiseLinear((0, F(1, 2), 1), (0, F(1, 2), F(3, 4)))
    assert not concave.is_convex()
