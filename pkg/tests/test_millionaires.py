"""Comparison protocols against the integer oracle, plus leakage audits."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decoysim import (
    DomainError,
    Ordering,
    Protocol,
    VesselEmpty,
    VesselOverflow,
    audit_comparison,
    compare_digitwise,
    compare_elevator,
    compare_race,
    compare_race_bitstring,
    compare_vessels,
    decompose_base,
)
from decoysim.millionaires import (
    bitstring_sub,
    digits_base,
    elevator_sub,
    race_sub,
    vessels_sub,
)


def sign_oracle(a: int, b: int) -> Ordering:
    if a < b:
        return Ordering.A_LESS
    if a > b:
        return Ordering.A_GREATER
    return Ordering.EQUAL


def elevator_oracle(a: int, b: int) -> Ordering:
    # documented tie convention: equality collapses onto the a >= b branch
    return Ordering.A_LESS if a < b else Ordering.A_GREATER


class TestElevator:
    def test_smaller_a_sees_doors(self):
        outcome = compare_elevator(3, 7, n_floors=10)
        assert outcome.ordering is Ordering.A_LESS

    def test_larger_a_never_sees_doors(self):
        outcome = compare_elevator(7, 3, n_floors=10)
        assert outcome.ordering is Ordering.A_GREATER

    def test_tie_collapses_with_annotation(self):
        outcome = compare_elevator(5, 5, n_floors=10)
        assert outcome.ordering is Ordering.A_GREATER
        assert any("not-larger branch" in note for note in outcome.notes)

    def test_door_events_are_every_floor_below_b(self):
        outcome = compare_elevator(2, 6, n_floors=10)
        floors = [event.value for event in outcome.public_observables]
        assert floors == [5, 4, 3, 2, 1]

    def test_out_of_range_floors(self):
        with pytest.raises(DomainError):
            compare_elevator(0, 3, n_floors=10)
        with pytest.raises(DomainError):
            compare_elevator(3, 11, n_floors=10)

    def test_exhaustive_grid_matches_oracle(self):
        for a in range(1, 21):
            for b in range(1, 21):
                outcome = compare_elevator(a, b, n_floors=20)
                assert outcome.ordering is elevator_oracle(a, b), (a, b)


class TestRace:
    def test_faster_is_greater(self):
        assert compare_race(4, 2, 100).ordering is Ordering.A_GREATER

    def test_equal_speeds_tie(self):
        assert compare_race(5, 5, 100).ordering is Ordering.EQUAL

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            compare_race(0, 1, 10)
        with pytest.raises(DomainError):
            compare_race(1, 1, 9)  # odd track

    def test_random_pairs_match_oracle(self):
        rng = random.Random(5)
        for _ in range(10_000):
            a, b = rng.randint(1, 500), rng.randint(1, 500)
            assert compare_race(a, b, 1000).ordering is sign_oracle(a, b)

    @pytest.mark.parametrize("dt", [1.0, 0.5, 0.1])
    def test_mark_tick_formula(self, dt):
        # the mark's timing pins down the larger speed
        rng = random.Random(9)
        for _ in range(300):
            a, b = rng.randint(1, 60), rng.randint(1, 60)
            n = 120
            outcome = compare_race(a, b, n, dt=dt)
            mark = [e for e in outcome.public_observables if e.label == "mark"][0]
            assert mark.tick == math.ceil((n / 2) / max(a, b) / dt)


class TestRaceBitstring:
    def test_example_two_versus_three(self):
        outcome = compare_race_bitstring(2, 3, 10)
        assert outcome.ordering is Ordering.A_LESS  # alice stops first -> smaller
        final = [e for e in outcome.public_observables if e.label == "final_string"][0]
        assert final.value == "0000X11000"
        assert final.tick == 10  # 5 symbols x 2 ticks each

    def test_tie_places_two_x_at_the_center(self):
        outcome = compare_race_bitstring(2, 2, 6)
        assert outcome.ordering is Ordering.EQUAL
        final = [e for e in outcome.public_observables if e.label == "final_string"][0]
        assert final.value == "00XX00"

    def test_inversion_against_plain_race(self):
        # bigger number means slower writes: the orderings invert
        assert compare_race_bitstring(4, 2, 12).ordering is Ordering.A_GREATER
        assert compare_race(4, 2, 12).ordering is Ordering.A_GREATER

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            compare_race_bitstring(1, 1, 7)
        with pytest.raises(DomainError):
            compare_race_bitstring(0, 1, 8)

    def test_exhaustive_small_grid(self):
        for a in range(1, 13):
            for b in range(1, 13):
                assert compare_race_bitstring(a, b, 24).ordering is sign_oracle(a, b)


class TestVessels:
    def test_outflow_dominates(self):
        assert compare_vessels(5, 3, 10).ordering is Ordering.A_GREATER

    def test_equal_rates_flat_with_note(self):
        outcome = compare_vessels(4, 4, 10)
        assert outcome.ordering is Ordering.EQUAL
        assert any("flat level" in note for note in outcome.notes)

    def test_empty_and_overflow_aborts(self):
        with pytest.raises(VesselEmpty):
            compare_vessels(7, 1, 5, initial_level=5.0, capacity=100.0)
        with pytest.raises(VesselOverflow):
            compare_vessels(1, 7, 5, initial_level=95.0, capacity=100.0)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            compare_vessels(0, 1, 5)
        with pytest.raises(DomainError):
            compare_vessels(1, 1, 0)

    def test_level_series_is_linear_in_the_difference(self):
        outcome = compare_vessels(5, 3, 8)
        levels = [event.value for event in outcome.public_observables]
        assert len(levels) == 9
        diffs = {levels[i + 1] - levels[i] for i in range(8)}
        assert diffs == {-2.0}


class TestVesselsLeakage:
    def test_auditor_slope_equals_difference_exactly(self):
        for a, b in [(5, 3), (3, 5), (1, 50), (20, 19)]:
            outcome = compare_vessels(a, b, 10)
            findings = audit_comparison(outcome, Protocol.VESSELS)
            assert len(findings) == 1
            assert findings[0].quantity == "b-a"
            assert findings[0].value == float(b - a)
            assert findings[0].exceeds_comparison_bit

    def test_linear_fit_oracle_agrees(self):
        # independent oracle: least-squares slope of the emitted series
        outcome = compare_vessels(7, 2, 12)
        levels = [event.value for event in outcome.public_observables]
        slope = np.polyfit(np.arange(len(levels)), np.array(levels), 1)[0]
        assert abs(slope - (2 - 7)) < 1e-9
        finding = audit_comparison(outcome, Protocol.VESSELS)[0]
        assert abs(finding.value - slope) < 1e-9


class TestDecomposeBase:
    def test_examples(self):
        assert decompose_base(1234, 100) == decompose_base(1234, 100)
        d = decompose_base(1234, 100)
        assert (d.high, d.low) == (12, 34)
        d = decompose_base(99, 100)
        assert (d.high, d.low) == (0, 99)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            decompose_base(5, 1)
        with pytest.raises(DomainError):
            decompose_base(-1, 10)

    def test_reconstruction_oracle_bulk(self):
        rng = random.Random(11)
        for _ in range(100_000):
            x = rng.randrange(0, 10**9)
            m = rng.randrange(2, 10**6)
            d = decompose_base(x, m)
            assert d.reconstruct() == x
            assert 0 <= d.low < m

    @given(st.integers(min_value=0, max_value=10**12), st.integers(min_value=2, max_value=10**6))
    @settings(max_examples=300)
    def test_reconstruction_property(self, x, m):
        d = decompose_base(x, m)
        assert d.high * m + d.low == x
        assert 0 <= d.low < m


class TestDigitwise:
    def test_worked_example(self):
        outcome = compare_digitwise(412, 409, 10, race_sub(10))
        assert outcome.ordering is Ordering.A_GREATER
        count = [
            e for e in outcome.public_observables
            if e.label == "subprotocol_invocations"
        ][0]
        assert count.value == 4  # two rounds, two invocations each

    def test_equal_numbers_compare_equal_after_all_rounds(self):
        outcome = compare_digitwise(777, 777, 10, vessels_sub())
        assert outcome.ordering is Ordering.EQUAL
        count = [
            e for e in outcome.public_observables
            if e.label == "subprotocol_invocations"
        ][0]
        assert count.value == 6

    def test_elevator_sub_handles_digit_ties(self):
        # the one-sided elevator needs the swapped invocation to detect ties
        assert compare_digitwise(409, 412, 10, elevator_sub(10)).ordering is Ordering.A_LESS
        assert compare_digitwise(412, 409, 10, elevator_sub(10)).ordering is Ordering.A_GREATER
        assert compare_digitwise(44, 44, 10, elevator_sub(10)).ordering is Ordering.EQUAL

    def test_zero_digits_are_shifted_into_range(self):
        assert compare_digitwise(0, 5, 10, elevator_sub(10)).ordering is Ordering.A_LESS
        assert compare_digitwise(100, 1, 10, race_sub(10)).ordering is Ordering.A_GREATER

    @pytest.mark.parametrize(
        "sub", [elevator_sub(7), race_sub(7), bitstring_sub(7), vessels_sub()]
    )
    def test_small_grid_each_sub_comparator(self, sub):
        for a in range(0, 50):
            for b in range(0, 50):
                assert compare_digitwise(a, b, 7, sub).ordering is sign_oracle(a, b), (a, b)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            compare_digitwise(-1, 2, 10, race_sub(10))
        with pytest.raises(DomainError):
            compare_digitwise(1, 2, 1, race_sub(10))

    def test_sub_errors_propagate(self):
        def broken(x, y):
            raise DomainError("boom")

        with pytest.raises(DomainError, match="boom"):
            compare_digitwise(5, 6, 10, broken)

    def test_digits_base_padding(self):
        assert digits_base(7, 10, 3) == [0, 0, 7]
        with pytest.raises(DomainError):
            digits_base(1000, 10, 3)


def test_ordering_invariant_full_100_grid():
    """Every comparator agrees with sign(a-b) over [1,100]^2, tie rules applied."""
    for a in range(1, 101):
        for b in range(1, 101):
            sign = sign_oracle(a, b)
            assert compare_elevator(a, b, n_floors=100).ordering is elevator_oracle(a, b)
            assert compare_race(a, b, 200).ordering is sign
            assert compare_race_bitstring(a, b, 200).ordering is sign
            assert compare_vessels(a, b, 5).ordering is sign


class TestSecrecyShape:
    """Party-visible outcome fields carry the ordering bit and nothing else."""

    @pytest.mark.parametrize(
        "comparator",
        [
            lambda a, b: compare_elevator(a, b, n_floors=10),
            lambda a, b: compare_race(a, b, 20),
            lambda a, b: compare_race_bitstring(a, b, 20),
            lambda a, b: compare_vessels(a, b, 10),
        ],
    )
    def test_same_ordering_means_same_party_view(self, comparator):
        first = comparator(3, 7)
        second = comparator(5, 7)
        assert first.party_view() == second.party_view()

    def test_knowledge_fields_never_contain_the_numbers(self):
        outcome = compare_race(17, 23, 60)
        assert "17" not in outcome.alice_knows + outcome.bob_knows
        assert "23" not in outcome.alice_knows + outcome.bob_knows


class TestAuditFindings:
    def test_elevator_leaks_b_exactly(self):
        outcome = compare_elevator(2, 6, n_floors=10)
        finding = audit_comparison(outcome, Protocol.ELEVATOR)[0]
        assert finding.quantity == "b"
        assert finding.value == 6

    def test_race_mark_tick_bounds_the_max(self):
        for a, b in [(3, 9), (9, 3), (7, 7), (1, 60)]:
            outcome = compare_race(a, b, 120)
            finding = audit_comparison(outcome, Protocol.RACE)[0]
            value = finding.value
            if isinstance(value, int):
                assert value == max(a, b)
            else:
                low, high = value
                assert low <= max(a, b)
                assert high is None or max(a, b) <= high

    def test_bitstring_progress_brackets_the_ratio(self):
        outcome = compare_race_bitstring(2, 5, 20)
        finding = audit_comparison(outcome, Protocol.RACE_BITSTRING)[0]
        left, right = finding.value
        assert left == 10  # alice finished
        # bob wrote floor(2*10/5) = 4 symbols before the freeze
        assert right == 4

    def test_digitwise_prefix_leak(self):
        outcome = compare_digitwise(412, 409, 10, race_sub(10))
        finding = audit_comparison(outcome, "digitwise")[0]
        assert finding.quantity == "common_prefix_rounds"
        assert finding.value == 2
