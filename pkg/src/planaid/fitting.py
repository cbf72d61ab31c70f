"""Ordinal-regression fits: card scores -> value-function parameters.

Given items with per-criterion contributions and integer card scores, fit one
of three families by minimizing the sum of positive and negative deviations
between the family value U(item) and k * score(item) (optionally plus a free
offset in affine mode):

* weighted-sum: U = sum w_j g_j (+ w_syn * syn), weights on the simplex;
* piecewise-linear: U = sum u_j(g_j) with marginals linear between fixed
  breakpoints, u_j(lowest) = 0, sum of top values pinned to a total;
* choquet-2additive: U adds pairwise min terms; the capacity must satisfy
  normalization and monotonicity (one reduced row per criterion).

All regression LPs are solved in exact rational arithmetic, so optimal total
errors are reproducible bit-for-bit under any variable-order permutation and
invariant under positive rescaling of the scores.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .lp import LinearProgram, SolveOptions, solve_lp
from .model import Capacity2Additive

__all__ = [
    "FitError",
    "FitItem",
    "FitRequest",
    "RegressionResult",
    "fit",
    "fit_weighted_sum",
    "fit_piecewise",
    "fit_choquet",
    "result_table_csv",
]

FAMILIES = ("weighted-sum", "piecewise-linear", "choquet-2additive")


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FitItem:
    item: str
    contributions: tuple[float, ...]
    syn: int | None = None


@dataclass(frozen=True)
class FitRequest:
    items: tuple[FitItem, ...]
    scores: Mapping[str, float]
    family: str = "weighted-sum"
    breakpoints: tuple[tuple[float, ...], ...] | None = None
    total_value: float = 1.0
    scaling: str = "multiplicative"  # | "affine"
    normalize: str = "none"  # | "min-max"
    bounds: tuple[tuple[float, float], ...] | None = None  # explicit min-max bounds

    def __post_init__(self):
        object.__setattr__(self, "scores", dict(self.scores))
        if self.family not in FAMILIES:
            raise FitError(f"unknown family {self.family!r}")
        if self.scaling not in ("multiplicative", "affine"):
            raise FitError(f"unknown scaling mode {self.scaling!r}")
        if self.normalize not in ("none", "min-max"):
            raise FitError(f"unknown normalization {self.normalize!r}")
        if not self.items:
            raise FitError("no items to fit")
        m = len(self.items[0].contributions)
        seen = set()
        for it in self.items:
            if it.item in seen:
                raise FitError(f"duplicate item {it.item!r}")
            seen.add(it.item)
            if len(it.contributions) != m:
                raise FitError(f"item {it.item!r} has inconsistent criterion count")
            if it.item not in self.scores:
                raise FitError(f"item {it.item!r} has no score")
        syn_given = [it.syn is not None for it in self.items]
        if any(syn_given) and not all(syn_given):
            raise FitError("either every item carries a syn flag or none does")
        if any(syn_given) and self.family == "piecewise-linear":
            raise FitError("piecewise-linear family does not support a syn column")

    @property
    def n_criteria(self) -> int:
        return len(self.items[0].contributions)

    @property
    def has_syn(self) -> bool:
        return self.items[0].syn is not None

    def to_json(self) -> dict:
        doc: dict = {
            "items": [
                {
                    "id": it.item,
                    "contributions": list(it.contributions),
                    **({"syn": it.syn} if it.syn is not None else {}),
                }
                for it in self.items
            ],
            "scores": dict(self.scores),
            "family": self.family,
            "total_value": self.total_value,
            "scaling": self.scaling,
            "normalize": self.normalize,
        }
        if self.breakpoints is not None:
            doc["breakpoints"] = [list(bp) for bp in self.breakpoints]
        if self.bounds is not None:
            doc["bounds"] = [list(b) for b in self.bounds]
        return doc

    @staticmethod
    def from_json(doc: Mapping, **overrides) -> "FitRequest":
        try:
            items = tuple(
                FitItem(
                    item=str(entry["id"]),
                    contributions=tuple(float(v) for v in entry["contributions"]),
                    syn=None if entry.get("syn") is None else int(entry["syn"]),
                )
                for entry in doc["items"]
            )
            kwargs = dict(
                items=items,
                scores={str(k): float(v) for k, v in doc["scores"].items()},
                family=doc.get("family", "weighted-sum"),
                total_value=float(doc.get("total_value", 1.0)),
                scaling=doc.get("scaling", "multiplicative"),
                normalize=doc.get("normalize", "none"),
            )
            if doc.get("breakpoints") is not None:
                kwargs["breakpoints"] = tuple(
                    tuple(float(v) for v in bps) for bps in doc["breakpoints"]
                )
            if doc.get("bounds") is not None:
                kwargs["bounds"] = tuple(
                    (float(lo), float(hi)) for lo, hi in doc["bounds"]
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise FitError(f"malformed fit document: {exc}") from exc
        kwargs.update(overrides)
        return FitRequest(**kwargs)


@dataclass(frozen=True)
class RegressionResult:
    family: str
    scaling: str
    scale: float  # k
    offset: float  # k0, 0.0 in multiplicative mode
    total_error: float
    fitted: Mapping[str, float]  # item -> U
    deviations: Mapping[str, tuple[float, float]]  # item -> (sigma+, sigma-)
    weights: tuple[float, ...] | None = None  # weighted-sum
    bonus: float | None = None  # weighted-sum syn weight, if a syn column was fit
    capacity: Capacity2Additive | None = None  # choquet
    marginals: tuple[tuple[float, ...], ...] | None = None  # piecewise, per breakpoint
    breakpoints: tuple[tuple[float, ...], ...] | None = None
    normalization: tuple[tuple[float, float], ...] | None = None

    def to_json(self) -> dict:
        doc = {
            "family": self.family,
            "scaling": self.scaling,
            "scale": self.scale,
            "offset": self.offset,
            "total_error": self.total_error,
            "fitted": dict(self.fitted),
            "deviations": {k: list(v) for k, v in self.deviations.items()},
        }
        if self.weights is not None:
            doc["weights"] = list(self.weights)
        if self.bonus is not None:
            doc["bonus"] = self.bonus
        if self.capacity is not None:
            doc["capacity"] = {
                "weights": list(self.capacity.weights),
                "pairs": [[j, jp, w] for (j, jp), w in sorted(self.capacity.pair_weights.items())],
                "bonus": list(self.capacity.bonus_weights),
            }
        if self.marginals is not None:
            doc["marginals"] = [list(row) for row in self.marginals]
            doc["breakpoints"] = [list(row) for row in self.breakpoints]
        if self.normalization is not None:
            doc["normalization"] = [list(b) for b in self.normalization]
        return doc

    @staticmethod
    def from_json(doc: Mapping) -> "RegressionResult":
        capacity = None
        if "capacity" in doc:
            cdoc = doc["capacity"]
            capacity = Capacity2Additive(
                weights=tuple(float(w) for w in cdoc["weights"]),
                pair_weights={(int(j), int(jp)): float(w) for j, jp, w in cdoc.get("pairs", [])},
                bonus_weights=tuple(float(w) for w in cdoc.get("bonus", [])),
            )
        return RegressionResult(
            family=doc["family"],
            scaling=doc["scaling"],
            scale=float(doc["scale"]),
            offset=float(doc["offset"]),
            total_error=float(doc["total_error"]),
            fitted={str(k): float(v) for k, v in doc["fitted"].items()},
            deviations={
                str(k): (float(v[0]), float(v[1])) for k, v in doc["deviations"].items()
            },
            weights=tuple(float(w) for w in doc["weights"]) if "weights" in doc else None,
            bonus=float(doc["bonus"]) if "bonus" in doc else None,
            capacity=capacity,
            marginals=(
                tuple(tuple(float(v) for v in row) for row in doc["marginals"])
                if "marginals" in doc
                else None
            ),
            breakpoints=(
                tuple(tuple(float(v) for v in row) for row in doc["breakpoints"])
                if "breakpoints" in doc
                else None
            ),
            normalization=(
                tuple((float(lo), float(hi)) for lo, hi in doc["normalization"])
                if doc.get("normalization") is not None
                else None
            ),
        )


# ---------------------------------------------------------------------------


def _prepared(req: FitRequest):
    """Per-item contribution data in exact form, min-max rescaled when asked.

    Rescaling happens in float arithmetic (the same expression the optimizer
    uses when baking bounds into an objective) and the result is then lifted
    to Fractions, so the LP, the reported fit and any later re-evaluation all
    see identical numbers.
    """
    m = req.n_criteria
    raw = [it.contributions for it in req.items]
    if req.normalize == "none" and req.bounds is None:
        return [[Fraction(v) for v in r] for r in raw], None
    if req.bounds is not None:
        if len(req.bounds) != m:
            raise FitError("explicit bounds must cover every criterion")
        bounds = [(float(lo), float(hi)) for lo, hi in req.bounds]
    else:
        bounds = [
            (min(r[j] for r in raw), max(r[j] for r in raw)) for j in range(m)
        ]
    out = []
    for r in raw:
        row = []
        for j in range(m):
            lo, hi = bounds[j]
            row.append(Fraction((r[j] - lo) / (hi - lo)) if hi > lo else Fraction(0))
        out.append(row)
    return out, tuple(bounds)


class _Builder:
    """Collects variable specs first so the add order can be permuted."""

    def __init__(self):
        self.specs: list[tuple[str, float, float]] = []  # (name, lo, hi)

    def var(self, name: str, lo: float = 0.0, hi: float = float("inf")) -> str:
        self.specs.append((name, lo, hi))
        return name

    def build(self, permute: random.Random | None) -> tuple[LinearProgram, dict[str, int]]:
        order = list(range(len(self.specs)))
        if permute is not None:
            permute.shuffle(order)
        lp = LinearProgram("min")
        index: dict[str, int] = {}
        for k in order:
            name, lo, hi = self.specs[k]
            index[name] = lp.add_var(name, lo=lo, hi=hi)
        return lp, index


def fit(req: FitRequest, *, permute_seed: int | None = None) -> RegressionResult:
    """Solve the family's regression LP; exact arithmetic throughout."""
    g, bounds = _prepared(req)
    if req.family == "piecewise-linear":
        return _fit_piecewise(req, g, bounds, permute_seed)
    return _fit_linearlike(req, g, bounds, permute_seed)


def fit_weighted_sum(req: FitRequest, **kw) -> RegressionResult:
    return fit(_with_family(req, "weighted-sum"), **kw)


def fit_piecewise(req: FitRequest, **kw) -> RegressionResult:
    return fit(_with_family(req, "piecewise-linear"), **kw)


def fit_choquet(req: FitRequest, **kw) -> RegressionResult:
    return fit(_with_family(req, "choquet-2additive"), **kw)


def _with_family(req: FitRequest, family: str) -> FitRequest:
    if req.family == family:
        return req
    return FitRequest(
        items=req.items,
        scores=req.scores,
        family=family,
        breakpoints=req.breakpoints,
        total_value=req.total_value,
        scaling=req.scaling,
        normalize=req.normalize,
        bounds=req.bounds,
    )


def _fit_linearlike(req, g, bounds, permute_seed) -> RegressionResult:
    """Weighted-sum and choquet share everything but the pair terms."""
    m = req.n_criteria
    n = len(req.items)
    choquet = req.family == "choquet-2additive"
    pairs = [(j, jp) for j in range(m) for jp in range(j + 1, m)] if choquet else []
    # an all-zero syn column is inert in every value row but would still relax
    # the normalization through w_syn; drop it so the bonus weight stays 0
    use_syn = req.has_syn and any(it.syn for it in req.items)
    b = _Builder()
    w_names = [b.var(f"w{j}") for j in range(m)]
    wp_names = {pr: b.var(f"wp{pr[0]}_{pr[1]}") for pr in pairs}
    wn_names = {pr: b.var(f"wn{pr[0]}_{pr[1]}") for pr in pairs}
    syn_name = b.var("wsyn") if use_syn else None
    k_name = b.var("k")
    k0_name = b.var("k0", lo=-float("inf")) if req.scaling == "affine" else None
    sp_names = [b.var(f"sp{i}") for i in range(n)]
    sn_names = [b.var(f"sn{i}") for i in range(n)]
    rng = random.Random(permute_seed) if permute_seed is not None else None
    lp, ix = b.build(rng)

    for i, it in enumerate(req.items):
        row = {ix[w_names[j]]: float(g[i][j]) for j in range(m)}
        for pr in pairs:
            mn = float(min(g[i][pr[0]], g[i][pr[1]]))
            if mn:
                row[ix[wp_names[pr]]] = mn
                row[ix[wn_names[pr]]] = -mn
        if syn_name is not None and it.syn:
            row[ix[syn_name]] = 1.0
        row[ix[sp_names[i]]] = -1.0
        row[ix[sn_names[i]]] = 1.0
        row[ix[k_name]] = -float(req.scores[it.item])
        if k0_name is not None:
            row[ix[k0_name]] = -1.0
        lp.add_constraint(row, "=", 0.0)

    norm_row = {ix[nm]: 1.0 for nm in w_names}
    for pr in pairs:
        norm_row[ix[wp_names[pr]]] = 1.0
        norm_row[ix[wn_names[pr]]] = -1.0
    if syn_name is not None:
        norm_row[ix[syn_name]] = 1.0
    lp.add_constraint(norm_row, "=", 1.0)

    if choquet:
        for j in range(m):
            row = {ix[w_names[j]]: 1.0}
            for pr in pairs:
                if j in pr:
                    row[ix[wn_names[pr]]] = -1.0
            lp.add_constraint(row, ">=", 0.0)

    lp.set_objective({ix[nm]: 1.0 for nm in sp_names + sn_names})
    rep = solve_lp(lp, SolveOptions(exact=True))
    if rep.status != "optimal":
        raise FitError(f"regression LP came back {rep.status}")

    val = lambda name: rep.values[ix[name]]
    weights = tuple(val(nm) for nm in w_names)
    if syn_name is not None:
        syn_w = val(syn_name)
    elif req.has_syn:
        syn_w = Fraction(0)  # column was all-zero and dropped
    else:
        syn_w = None
    k = val(k_name)
    k0 = val(k0_name) if k0_name is not None else Fraction(0)
    fitted_exact = {}
    for i, it in enumerate(req.items):
        u = sum((weights[j] * g[i][j] for j in range(m)), Fraction(0))
        for pr in pairs:
            u += (val(wp_names[pr]) - val(wn_names[pr])) * min(g[i][pr[0]], g[i][pr[1]])
        if syn_name is not None and it.syn:
            u += syn_w
        fitted_exact[it.item] = u
    deviations = {
        it.item: (float(val(sp_names[i])), float(val(sn_names[i])))
        for i, it in enumerate(req.items)
    }
    total = float(sum((val(nm) for nm in sp_names + sn_names), Fraction(0)))

    capacity = None
    out_weights = None
    if choquet:
        pair_weights = {
            pr: float(val(wp_names[pr]) - val(wn_names[pr])) for pr in pairs
        }
        capacity = Capacity2Additive(
            weights=tuple(float(w) for w in weights),
            pair_weights={pr: w for pr, w in pair_weights.items() if w},
            bonus_weights=(float(syn_w),) if syn_w is not None else (),
        )
        capacity.validate(1e-9)
    else:
        out_weights = tuple(float(w) for w in weights)
    return RegressionResult(
        family=req.family,
        scaling=req.scaling,
        scale=float(k),
        offset=float(k0),
        total_error=total,
        fitted={k2: float(v) for k2, v in fitted_exact.items()},
        deviations=deviations,
        weights=out_weights,
        bonus=float(syn_w) if (syn_w is not None and not choquet) else None,
        capacity=capacity,
        normalization=bounds,
    )


def _fit_piecewise(req, g, bounds, permute_seed) -> RegressionResult:
    m = req.n_criteria
    n = len(req.items)
    if req.breakpoints is None:
        raise FitError("piecewise-linear family needs breakpoints")
    if len(req.breakpoints) != m:
        raise FitError("need one breakpoint grid per criterion")
    grids = [tuple(Fraction(v) for v in bps) for bps in req.breakpoints]
    for j, grid in enumerate(grids):
        if len(grid) < 2 or any(grid[r] >= grid[r + 1] for r in range(len(grid) - 1)):
            raise FitError(f"breakpoints for criterion {j} must strictly increase")
        for i in range(n):
            if not (grid[0] <= g[i][j] <= grid[-1]):
                raise FitError(
                    f"item {req.items[i].item!r}: contribution {float(g[i][j])} outside "
                    f"breakpoint range [{float(grid[0])}, {float(grid[-1])}] on criterion {j}"
                )

    b = _Builder()
    # u_{j,0} is pinned to 0 and omitted; u_{j,r} for r >= 1 are variables
    u_names = [[b.var(f"u{j}_{r}") for r in range(1, len(grids[j]))] for j in range(m)]
    k_name = b.var("k")
    k0_name = b.var("k0", lo=-float("inf")) if req.scaling == "affine" else None
    sp_names = [b.var(f"sp{i}") for i in range(n)]
    sn_names = [b.var(f"sn{i}") for i in range(n)]
    rng = random.Random(permute_seed) if permute_seed is not None else None
    lp, ix = b.build(rng)

    def interp_coeffs(j: int, value: Fraction) -> dict[str, Fraction]:
        grid = grids[j]
        for r in range(len(grid) - 1):
            if grid[r] <= value <= grid[r + 1]:
                span = grid[r + 1] - grid[r]
                beta = (value - grid[r]) / span
                alpha = 1 - beta
                out = {}
                if r >= 1 and alpha:
                    out[u_names[j][r - 1]] = alpha
                if beta:
                    out[u_names[j][r]] = beta
                return out
        raise FitError("interpolation fell outside the grid")  # guarded above

    for i, it in enumerate(req.items):
        row: dict[int, float] = {}
        for j in range(m):
            for name, coef in interp_coeffs(j, g[i][j]).items():
                row[ix[name]] = row.get(ix[name], 0.0) + float(coef)
        row[ix[sp_names[i]]] = -1.0
        row[ix[sn_names[i]]] = 1.0
        row[ix[k_name]] = -float(req.scores[it.item])
        if k0_name is not None:
            row[ix[k0_name]] = -1.0
        lp.add_constraint(row, "=", 0.0)

    for j in range(m):
        names = u_names[j]
        for r in range(len(names) - 1):
            lp.add_constraint({ix[names[r + 1]]: 1.0, ix[names[r]]: -1.0}, ">=", 0.0)
    lp.add_constraint({ix[u_names[j][-1]]: 1.0 for j in range(m)}, "=", float(req.total_value))

    lp.set_objective({ix[nm]: 1.0 for nm in sp_names + sn_names})
    rep = solve_lp(lp, SolveOptions(exact=True))
    if rep.status != "optimal":
        raise FitError(f"regression LP came back {rep.status}")

    val = lambda name: rep.values[ix[name]]
    marginals = tuple(
        (0.0,) + tuple(float(val(nm)) for nm in u_names[j]) for j in range(m)
    )
    fitted = {}
    for i, it in enumerate(req.items):
        u = Fraction(0)
        for j in range(m):
            for name, coef in interp_coeffs(j, g[i][j]).items():
                u += coef * val(name)
        fitted[it.item] = float(u)
    deviations = {
        it.item: (float(val(sp_names[i])), float(val(sn_names[i])))
        for i, it in enumerate(req.items)
    }
    total = float(sum((val(nm) for nm in sp_names + sn_names), Fraction(0)))
    return RegressionResult(
        family=req.family,
        scaling=req.scaling,
        scale=float(val(k_name)),
        offset=float(val(k0_name)) if k0_name is not None else 0.0,
        total_error=total,
        fitted=fitted,
        deviations=deviations,
        marginals=marginals,
        breakpoints=tuple(tuple(float(v) for v in grid) for grid in grids),
        normalization=bounds,
    )


def result_table_csv(result: RegressionResult, req: FitRequest) -> str:
    """Per-item table (item, U, score, k*score+offset, sigma+, sigma-) as CSV."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["item", "U", "score", "scaled_score", "sigma_plus", "sigma_minus"])
    for it in req.items:
        nu = req.scores[it.item]
        sp, sn = result.deviations[it.item]
        writer.writerow(
            [
                it.item,
                f"{result.fitted[it.item]:.6g}",
                f"{nu:g}",
                f"{result.scale * nu + result.offset:.6g}",
                f"{sp:.6g}",
                f"{sn:.6g}",
            ]
        )
    writer.writerow(["total_error", f"{result.total_error:.6g}", "", "", "", ""])
    return buf.getvalue()
