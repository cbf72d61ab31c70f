import numpy as np
import pytest

from planaid.model import (
    Capacity2Additive,
    CapacityError,
    ContributionVector,
    FacilitySpec,
    InstanceError,
    LocationOption,
    Plan,
    PlanError,
    PlanningInstance,
    SynergySpec,
    capacity_is_monotone,
    capacity_is_monotone_exhaustive,
    choquet_value,
    choquet_value_sorted,
    contribution,
    mobius_measure,
)

from oracles import dyadic_capacity


def single_facility_instance(discount):
    return PlanningInstance(
        facilities=(FacilitySpec("F", (LocationOption("l1", 100, (10.0,)),)),),
        criteria=("c",),
        periods=len(discount),
        budgets=(1000,) * len(discount),
        discount=tuple(discount),
    )


def test_contribution_discounted_single_facility():
    inst = single_facility_instance([1.1**-t for t in range(3)])
    g = contribution(inst, Plan.of([("F", "l1", 0)]))
    assert g.values[0] == pytest.approx(10 / 1.1 + 10 / 1.21, abs=1e-10)


def test_contribution_empty_plan():
    inst = single_facility_instance([1.1**-t for t in range(3)])
    g = contribution(inst, Plan.of([]))
    assert g.values == (0.0,)
    assert g.syn == 0


def test_contribution_undiscounted_counts_periods():
    inst = single_facility_instance([1.0, 1.0, 1.0])
    g = contribution(inst, Plan.of([("F", "l1", 0)]))
    assert g.values[0] == pytest.approx(20.0)


def test_contribution_rejects_bad_references():
    inst = single_facility_instance([1.0, 1.0, 1.0])
    with pytest.raises(PlanError, match="G"):
        contribution(inst, Plan.of([("G", "l1", 0)]))
    with pytest.raises(PlanError, match="l9"):
        contribution(inst, Plan.of([("F", "l9", 0)]))
    with pytest.raises(PlanError, match="period"):
        contribution(inst, Plan.of([("F", "l1", 7)]))
    with pytest.raises(PlanError, match="more than once"):
        contribution(inst, Plan.of([("F", "l1", 0), ("F", "l1", 1)]))


def two_facility_synergy_instance():
    opts = lambda y: (LocationOption("l1", 100, (float(y),)),)
    return PlanningInstance(
        facilities=(FacilitySpec("A", opts(10)), FacilitySpec("B", opts(20))),
        criteria=("c",),
        periods=4,
        budgets=(1000,) * 4,
        discount=(1.0, 0.5, 0.25, 0.125),
        synergies=(SynergySpec(("A", "l1"), ("B", "l1"), 0.5),),
    )


def test_synergy_accrues_from_later_anchor():
    inst = two_facility_synergy_instance()
    # A at 0, B at 2: synergy realized for t in {2, 3}
    g = contribution(inst, Plan.of([("A", "l1", 0), ("B", "l1", 2)]))
    base = 10 * (0.5 + 0.25 + 0.125) + 20 * 0.125
    bonus = 0.5 * (10 + 20) * (0.25 + 0.125)
    assert g.values[0] == pytest.approx(base + bonus, abs=1e-12)
    assert g.syn == 1 and g.synergy_flags == (1,)


def test_synergy_both_at_zero_pays_from_period_one():
    inst = two_facility_synergy_instance()
    g = contribution(inst, Plan.of([("A", "l1", 0), ("B", "l1", 0)]))
    bonus = 0.5 * 30 * (0.5 + 0.25 + 0.125)
    assert g.values[0] == pytest.approx(30 * (0.5 + 0.25 + 0.125) + bonus, abs=1e-12)


def test_synergy_disabled_flag():
    inst = two_facility_synergy_instance()
    g = contribution(inst, Plan.of([("A", "l1", 0), ("B", "l1", 2)]), include_synergies=False)
    assert g.syn == 0
    assert g.values[0] == pytest.approx(10 * 0.875 + 20 * 0.125, abs=1e-12)


def test_contribution_additive_over_disjoint_parts():
    inst = two_facility_synergy_instance()
    whole = contribution(inst, Plan.of([("A", "l1", 0), ("B", "l1", 1)]), include_synergies=False)
    a = contribution(inst, Plan.of([("A", "l1", 0)]), include_synergies=False)
    b = contribution(inst, Plan.of([("B", "l1", 1)]), include_synergies=False)
    assert whole.values[0] == pytest.approx(a.values[0] + b.values[0], abs=1e-9)


# -- instance validation -------------------------------------------------------


def test_instance_validation_errors():
    opt = LocationOption("l1", 100, (1.0,))
    fac = FacilitySpec("F", (opt,))
    with pytest.raises(InstanceError, match="discount"):
        PlanningInstance((fac,), ("c",), 2, (0, 0), (0.5, 0.9))
    with pytest.raises(InstanceError, match="budget"):
        PlanningInstance((fac,), ("c",), 2, (0, -1), (1.0, 0.9))
    with pytest.raises(InstanceError, match="no candidate location"):
        PlanningInstance((FacilitySpec("F", ()),), ("c",), 1, (0,), (1.0,))
    with pytest.raises(PlanError):
        PlanningInstance((fac,), ("c",), 1, (0,), (1.0,), exclusions=(("F", "l1", "G", "l1"),))


# -- capacities and the two Choquet forms ---------------------------------------


def test_choquet_additive_reduces_to_weighted_sum():
    cap = Capacity2Additive((0.25, 0.25, 0.5))
    g = (80.0, 50.0, 75.0)
    assert choquet_value(g, cap) == pytest.approx(0.25 * 80 + 0.25 * 50 + 0.5 * 75)
    assert choquet_value_sorted(g, cap) == pytest.approx(choquet_value(g, cap), abs=1e-9)


def test_choquet_pure_min_capacity():
    cap = Capacity2Additive((0.0, 0.0), {(0, 1): 1.0})
    assert choquet_value((30.0, 50.0), cap) == pytest.approx(30.0)


def test_choquet_idempotent_on_constant_vectors():
    cap = Capacity2Additive((0.3, 0.3, 0.1), {(0, 1): 0.2, (1, 2): 0.1})
    cap.validate()
    for c in (0.0, 1.0, 7.5):
        assert choquet_value((c, c, c), cap) == pytest.approx(c, abs=1e-12)
        assert choquet_value_sorted((c, c, c), cap) == pytest.approx(c, abs=1e-12)


def test_choquet_bonus_term():
    cap = Capacity2Additive((0.4, 0.4), bonus_weights=(0.2,))
    g1 = ContributionVector((10.0, 10.0), synergy_flags=(1,))
    g0 = ContributionVector((10.0, 10.0), synergy_flags=(0,))
    assert choquet_value(g1, cap) - choquet_value(g0, cap) == pytest.approx(0.2)
    with pytest.raises(CapacityError):
        choquet_value_sorted(g1, cap)


def test_choquet_dimension_mismatch():
    cap = Capacity2Additive((0.5, 0.5))
    with pytest.raises(CapacityError):
        choquet_value((1.0, 2.0, 3.0), cap)


def test_capacity_validation():
    with pytest.raises(CapacityError):
        Capacity2Additive((0.6, 0.6)).validate()  # sums to 1.2
    with pytest.raises(CapacityError):
        Capacity2Additive((-0.1, 1.1)).validate()
    # monotonicity: w1 + w12 = 0.1 - 0.4 < 0
    with pytest.raises(CapacityError):
        Capacity2Additive((0.1, 0.9, 0.4), {(0, 1): -0.4}).validate()


def _random_vector(rng, m):
    return tuple(float(x) for x in np.round(rng.uniform(0, 50, m), 6))


def test_cross_form_agreement_fuzz():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        m = int(rng.integers(2, 6))
        w, pairs, _bonus = dyadic_capacity(rng, m, with_bonus=False)
        cap = Capacity2Additive(
            tuple(float(x) for x in w), {k: float(v) for k, v in pairs.items()}
        )
        cap.validate(1e-9)
        g = _random_vector(rng, m)
        assert abs(choquet_value(g, cap) - choquet_value_sorted(g, cap)) < 1e-9


def test_choquet_monotone_in_contributions():
    rng = np.random.default_rng(7)
    for _ in range(300):
        m = int(rng.integers(2, 5))
        w, pairs, _ = dyadic_capacity(rng, m, with_bonus=False)
        cap = Capacity2Additive(
            tuple(float(x) for x in w), {k: float(v) for k, v in pairs.items()}
        )
        g = np.array(_random_vector(rng, m))
        bump = rng.uniform(0, 5, m) * (rng.random(m) < 0.5)
        assert choquet_value(tuple(g + bump), cap) >= choquet_value(tuple(g), cap) - 1e-9


def test_monotonicity_reduction_equals_exhaustive():
    rng = np.random.default_rng(99)
    agree = 0
    for _ in range(400):
        m = int(rng.integers(2, 7))
        w = tuple(float(x) for x in rng.uniform(0, 0.5, m))
        pairs = {}
        for j in range(m):
            for jp in range(j + 1, m):
                if rng.random() < 0.5:
                    pairs[(j, jp)] = float(rng.uniform(-0.3, 0.3))
        cap = Capacity2Additive(w, pairs)
        assert capacity_is_monotone(cap, 0.0) == capacity_is_monotone_exhaustive(cap, 0.0)
        agree += 1
    assert agree == 400


def test_mobius_measure_normalization():
    cap = Capacity2Additive((0.3, 0.3, 0.1), {(0, 1): 0.2, (1, 2): 0.1})
    assert mobius_measure(cap, ()) == 0.0
    assert mobius_measure(cap, (0, 1, 2)) == pytest.approx(1.0)
