import math
from fractions import Fraction

import numpy as np
import pytest

from planaid.fitting import (
    FitError,
    FitItem,
    FitRequest,
    RegressionResult,
    fit,
    fit_choquet,
    fit_piecewise,
    fit_weighted_sum,
    result_table_csv,
)
from planaid.model import capacity_is_monotone_exhaustive, choquet_value

from conftest import DIDACTIC_EVALS, DIDACTIC_SCORES


def didactic_items(syn=None):
    return tuple(
        FitItem(p, DIDACTIC_EVALS[p], syn=None if syn is None else syn[p])
        for p in sorted(DIDACTIC_EVALS)
    )


def didactic_request(**kw):
    return FitRequest(items=didactic_items(), scores=DIDACTIC_SCORES, **kw)


def test_two_point_closed_form():
    # g=(1,0) scored 2 and g=(0,1) scored 1: zero error at w=(2/3,1/3), k=1/3
    req = FitRequest(
        items=(FitItem("a", (1.0, 0.0)), FitItem("b", (0.0, 1.0))),
        scores={"a": 2, "b": 1},
        family="weighted-sum",
    )
    res = fit(req)
    assert res.total_error == 0.0
    assert res.weights == pytest.approx((2 / 3, 1 / 3))
    assert res.scale == pytest.approx(1 / 3)


def test_single_item_zero_error():
    req = FitRequest(items=(FitItem("a", (5.0, 3.0)),), scores={"a": 4}, family="weighted-sum")
    assert fit(req).total_error == 0.0


def test_deviation_identity_and_reconstruction():
    for family in ("weighted-sum", "choquet-2additive"):
        res = fit(didactic_request(family=family))
        for p, evals in DIDACTIC_EVALS.items():
            u = res.fitted[p]
            sp, sn = res.deviations[p]
            assert u - sp + sn == pytest.approx(res.scale * DIDACTIC_SCORES[p], abs=1e-7)
            if family == "choquet-2additive":
                assert choquet_value(evals, res.capacity) == pytest.approx(u, abs=1e-9)
            else:
                assert sum(w * v for w, v in zip(res.weights, evals)) == pytest.approx(
                    u, abs=1e-9
                )


def test_choquet_capacity_is_monotone_and_normalized():
    res = fit_choquet(didactic_request(family="choquet-2additive"))
    cap = res.capacity
    cap.validate(1e-9)
    assert capacity_is_monotone_exhaustive(cap, 1e-9)
    total = sum(cap.weights) + sum(cap.pair_weights.values()) + sum(cap.bonus_weights)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_choquet_beats_weighted_sum():
    ws = fit_weighted_sum(didactic_request(family="weighted-sum"))
    ch = fit_choquet(didactic_request(family="choquet-2additive"))
    assert ch.total_error <= ws.total_error + 1e-12  # strictly more expressive family


def test_permuted_resolve_bit_for_bit():
    req = didactic_request(family="choquet-2additive")
    base = fit(req)
    for seed in (1, 7, 1234):
        other = fit(req, permute_seed=seed)
        assert other.total_error == base.total_error  # exact arithmetic: no drift at all


def test_scale_invariance():
    for family, kw in (
        ("weighted-sum", {}),
        ("choquet-2additive", {}),
        ("piecewise-linear", {"breakpoints": ((0, 50, 75, 100),) * 3, "total_value": 100.0}),
    ):
        base = fit(didactic_request(family=family, **kw))
        for c in (0.1, 10.0):
            scaled = FitRequest(
                items=didactic_items(),
                scores={k: v * c for k, v in DIDACTIC_SCORES.items()},
                family=family,
                **kw,
            )
            res = fit(scaled)
            assert res.total_error == pytest.approx(base.total_error, abs=1e-7)
            for p in DIDACTIC_SCORES:
                assert res.fitted[p] == pytest.approx(base.fitted[p], abs=1e-7)
            assert res.scale == pytest.approx(base.scale / c, rel=1e-9)


def test_zero_anchored_item_contributes_no_error():
    items = didactic_items() + (FitItem("Z", (0.0, 0.0, 0.0)),)
    scores = dict(DIDACTIC_SCORES, Z=0)
    res = fit(FitRequest(items=items, scores=scores, family="choquet-2additive"))
    assert res.deviations["Z"] == (0.0, 0.0)
    base = fit(didactic_request(family="choquet-2additive"))
    assert res.total_error == base.total_error


def test_piecewise_didactic_zero_error():
    res = fit_piecewise(
        didactic_request(
            family="piecewise-linear",
            breakpoints=((0, 50, 75, 100),) * 3,
            total_value=100.0,
        )
    )
    assert res.total_error <= 1e-6
    assert res.total_error == 0.0  # exact arithmetic finds the exact optimum
    for j in range(3):
        row = res.marginals[j]
        assert row[0] == 0.0
        assert all(b >= a - 1e-12 for a, b in zip(row, row[1:]))
    assert sum(res.marginals[j][-1] for j in range(3)) == pytest.approx(100.0, abs=1e-9)


def test_piecewise_identical_items_zero_error():
    items = tuple(FitItem(f"i{k}", (60.0, 60.0)) for k in range(3))
    res = fit(
        FitRequest(
            items=items,
            scores={f"i{k}": 5 for k in range(3)},
            family="piecewise-linear",
            breakpoints=((0, 100), (0, 100)),
            total_value=1.0,
        )
    )
    assert res.total_error == 0.0


def test_piecewise_out_of_range_rejected():
    with pytest.raises(FitError, match="outside breakpoint range"):
        fit(
            FitRequest(
                items=(FitItem("a", (120.0,)),),
                scores={"a": 1},
                family="piecewise-linear",
                breakpoints=((0, 100),),
            )
        )


def test_piecewise_rejects_syn_column():
    with pytest.raises(FitError, match="syn"):
        FitRequest(
            items=(FitItem("a", (1.0,), syn=1),),
            scores={"a": 1},
            family="piecewise-linear",
            breakpoints=((0, 10),),
        )


def test_all_zero_syn_column_is_inert():
    with_syn = fit(
        FitRequest(
            items=didactic_items(syn={p: 0 for p in DIDACTIC_EVALS}),
            scores=DIDACTIC_SCORES,
            family="choquet-2additive",
        )
    )
    without = fit(didactic_request(family="choquet-2additive"))
    assert with_syn.total_error == without.total_error
    assert with_syn.capacity.bonus_weights == (0.0,)
    for p in DIDACTIC_SCORES:
        assert with_syn.fitted[p] == pytest.approx(without.fitted[p], abs=1e-12)


def test_syn_column_used_when_informative():
    syn = {"P1": 1, "P2": 0, "P3": 0, "P4": 1, "P5": 0, "P6": 1}
    res = fit(
        FitRequest(
            items=didactic_items(syn=syn),
            scores=DIDACTIC_SCORES,
            family="choquet-2additive",
        )
    )
    base = fit(didactic_request(family="choquet-2additive"))
    assert res.total_error <= base.total_error + 1e-12


def test_normalize_min_max():
    res = fit(didactic_request(family="choquet-2additive", normalize="min-max"))
    assert res.normalization == ((50.0, 90.0), (50.0, 80.0), (40.0, 75.0))
    # reconstruction must use normalized contributions
    for p, evals in DIDACTIC_EVALS.items():
        scaled = tuple(
            (v - lo) / (hi - lo) for v, (lo, hi) in zip(evals, res.normalization)
        )
        assert choquet_value(scaled, res.capacity) == pytest.approx(res.fitted[p], abs=1e-9)


def test_affine_mode_never_worse():
    for family in ("weighted-sum", "choquet-2additive"):
        mult = fit(didactic_request(family=family))
        aff = fit(didactic_request(family=family, scaling="affine"))
        assert aff.total_error <= mult.total_error + 1e-12
        for p in DIDACTIC_SCORES:
            u = aff.fitted[p]
            sp, sn = aff.deviations[p]
            assert u - sp + sn == pytest.approx(
                aff.scale * DIDACTIC_SCORES[p] + aff.offset, abs=1e-7
            )


def test_affine_ws_matches_line_fit_oracle():
    """For fixed weights the best affine scaling is an L1 line fit; the LP must
    do at least as well as the oracle line through every pair of points."""
    res = fit(didactic_request(family="weighted-sum", scaling="affine"))
    names = sorted(DIDACTIC_EVALS)
    nu = np.array([DIDACTIC_SCORES[p] for p in names], float)
    U = np.array(
        [sum(w * v for w, v in zip(res.weights, DIDACTIC_EVALS[p])) for p in names]
    )
    best = math.inf
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            if nu[i] == nu[j]:
                continue
            k = (U[i] - U[j]) / (nu[i] - nu[j])
            if k < 0:
                continue
            k0 = U[i] - k * nu[i]
            best = min(best, float(np.abs(U - k * nu - k0).sum()))
    for k in np.abs(U) / np.maximum(nu, 1e-9):  # flat-ish candidates with k0 from median
        k0s = U - k * nu
        for k0 in k0s:
            best = min(best, float(np.abs(U - k * nu - k0).sum()))
    assert res.total_error <= best + 1e-9


def test_request_json_round_trip():
    req = FitRequest(
        items=didactic_items(syn={p: 1 for p in DIDACTIC_EVALS}),
        scores=DIDACTIC_SCORES,
        family="choquet-2additive",
        bounds=((0.0, 100.0),) * 3,
    )
    back = FitRequest.from_json(req.to_json())
    assert back == req


def test_result_json_round_trip():
    res = fit_choquet(didactic_request(family="choquet-2additive"))
    doc = res.to_json()
    back = RegressionResult.from_json(doc)
    assert back.total_error == res.total_error
    assert back.capacity.weights == res.capacity.weights
    assert back.capacity.pair_weights == res.capacity.pair_weights
    assert back.fitted == res.fitted


def test_result_table_csv():
    req = didactic_request(family="weighted-sum")
    res = fit(req)
    table = result_table_csv(res, req)
    lines = table.strip().splitlines()
    assert lines[0] == "item,U,score,scaled_score,sigma_plus,sigma_minus"
    assert len(lines) == 2 + len(DIDACTIC_EVALS)
    assert lines[-1].startswith("total_error,")


def test_request_validation():
    with pytest.raises(FitError, match="no score"):
        FitRequest(items=(FitItem("a", (1.0,)),), scores={}, family="weighted-sum")
    with pytest.raises(FitError, match="duplicate"):
        FitRequest(
            items=(FitItem("a", (1.0,)), FitItem("a", (2.0,))),
            scores={"a": 1},
            family="weighted-sum",
        )
    with pytest.raises(FitError, match="family"):
        FitRequest(items=(FitItem("a", (1.0,)),), scores={"a": 1}, family="nope")
    with pytest.raises(FitError, match="every item"):
        FitRequest(
            items=(FitItem("a", (1.0,), syn=1), FitItem("b", (1.0,))),
            scores={"a": 1, "b": 2},
            family="weighted-sum",
        )
