"""Experiment drivers behind the command-line subcommands.

Every driver returns plain data (dicts and row lists); writing files and
choosing exit codes is left to :mod:`seprange.cli`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .analytic import (ProductAngles, all_volume_product_2q, min_ratio_product_2q,
                       named_instances, product_observables, ratio_product_2q,
                       sep_volume_product_2q, separable_ball_bound)
from .confidence import confidence_rect, find_certificate
from .errors import DegenerateBody, UnsupportedDimension
from .qlinalg import ObservableSet, make_rng, sample_goe, split_seeds
from .rangegeom import (build_body, hull_2d, hull_volume, ratio_bracket, reduce_observables,
                        support_all_batch, volume_bracket)
from .septools import SeesawConfig, SeparableOracle, abs_sep_extremum, goe_ratio_statistic


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    directions: int = 720
    mc_samples: int = 100_000
    cert_grid: int = 64
    restarts: int = 64

    def oracle(self, seed=None) -> SeparableOracle:
        cfg = SeesawConfig(restarts=self.restarts, seed=self.seed if seed is None else seed)
        return SeparableOracle(cfg, self.cert_grid)

    def meta(self, **extra) -> dict:
        return {"version": __version__, **asdict(self), **extra}


def _bracket_dict(b) -> dict:
    return {"lower": b.lower, "upper": b.upper, "estimate": b.estimate}


def bodies(obs: ObservableSet, cfg: RunConfig):
    """Separable and full polytope sandwiches of ``obs`` and their volume brackets."""
    sep = build_body(obs, cfg.oracle(), cfg.directions)
    full = build_body(obs, support_all_batch, cfg.directions)
    vs = volume_bracket(sep, cfg.mc_samples, seed=cfg.seed)
    va = volume_bracket(full, cfg.mc_samples, seed=cfg.seed + 1)
    return sep, full, vs, va


def ratio_report(obs: ObservableSet, cfg: RunConfig) -> tuple[dict, dict]:
    """Volume-ratio bracket of the separable range against the full range.

    Returns the report and the inner polygons (for plotting when k = 2).
    """
    reduced, report = reduce_observables(obs)
    if reduced.k > 3:
        raise UnsupportedDimension(f"{reduced.k} independent observables; volumes need k <= 3")
    if reduced.k == 0:
        raise DegenerateBody("all observables are multiples of the identity")
    sep, full, vs, va = bodies(reduced, cfg)
    rb = ratio_bracket(vs, va)
    polys = {}
    if reduced.k == 2:
        polys = {"all states": hull_2d(full.inner_vertices), "separable": hull_2d(sep.inner_vertices)}
    out = {
        "k_input": obs.k,
        "k": reduced.k,
        "kept": list(report.kept),
        "dropped": {str(i): list(c) for i, c in report.dropped.items()},
        "reduction": str(report),
        "ratio": rb._asdict(),
        "sep_volume": _bracket_dict(vs),
        "all_volume": _bracket_dict(va),
        "directions": int(len(sep.directions)),
        "all_certified": sep.fully_certified,
        "certified": [bool(c) for c in sep.certified],
    }
    return out, polys


# ---------------------------------------------------------------------------
# GOE
# ---------------------------------------------------------------------------

def goe_tau_samples(d: int, k: int, samples: int, cfg: RunConfig) -> np.ndarray:
    """Per-sample volume ratios for ``k`` GOE matrices on a ``d x d`` system.

    The estimate of each volume is the inner hull; for ``k = 1`` this is the
    ratio of interval lengths.
    """
    if d not in (2, 3) or k not in (1, 2, 3):
        raise UnsupportedDimension("GOE volume ratios need d in {2, 3} and k in {1, 2, 3}")
    out = np.empty(samples)
    for i, ss in enumerate(split_seeds(cfg.seed, samples)):
        rng = make_rng(ss)
        obs = ObservableSet.of(*sample_goe(d * d, rng, size=k), dims=(d, d))
        oracle = SeparableOracle(SeesawConfig(restarts=cfg.restarts, seed=int(rng.integers(2**62))),
                                 cfg.cert_grid)
        sep = build_body(obs, oracle, cfg.directions)
        full = build_body(obs, support_all_batch, cfg.directions)
        out[i] = hull_volume(sep.inner_vertices) / hull_volume(full.inner_vertices)
    return out


# the exp(-Tr A^2 / 2) samples must be multiplied by sqrt(2 / D) to match the
# absolute eigenvalue columns of the published GOE statistics
def goe_calibration(D: int) -> float:
    return math.sqrt(2.0 / D)


def goe_rows(d: int, k_list, samples: int, cfg: RunConfig, stat_samples: int | None = None):
    """Rows of tau estimates and of the minimal-eigenvalue statistics."""
    stat = goe_ratio_statistic(d, stat_samples or samples,
                               SeesawConfig(restarts=cfg.restarts, seed=cfg.seed), seed=cfg.seed)
    cal = goe_calibration(d * d)
    stats = {"d": d, "D": d * d, "samples": stat.samples,
             "mean_ratio": stat.mean_ratio, "stderr": stat.stderr,
             "mean_abs_lmin": stat.mean_abs_lmin, "mean_abs_lsep_min": stat.mean_abs_lsep_min,
             "calibration": cal, "mean_abs_lmin_calibrated": cal * stat.mean_abs_lmin,
             "mean_abs_lsep_min_calibrated": cal * stat.mean_abs_lsep_min}
    rows = []
    for k in k_list:
        r = goe_tau_samples(d, k, samples, RunConfig(cfg.seed + 1000 * k, cfg.directions,
                                                     cfg.mc_samples, cfg.cert_grid, cfg.restarts))
        se = float(np.std(r, ddof=1) / math.sqrt(len(r))) if len(r) > 1 else float("nan")
        rows.append({"d": d, "k": k, "samples": samples, "tau_estimate": float(np.mean(r)),
                     "stderr": se, "ratio_power_k": stat.mean_ratio ** k})
    return rows, stats


# ---------------------------------------------------------------------------
# locally traceless product pair
# ---------------------------------------------------------------------------

def sweep_angles(grid: int) -> np.ndarray:
    """Cell-centred angles in ``(0, pi)``, avoiding the degenerate edges."""
    return (np.arange(grid) + 0.5) * math.pi / grid


def product_row(a: float, b: float, cfg: RunConfig, kind: str = "grid") -> dict:
    ang = ProductAngles(a, b)
    sep_v, all_v = sep_volume_product_2q(ang), all_volume_product_2q(ang)
    ratio = ratio_product_2q(ang)
    _, _, vs, va = bodies(product_observables(ang), cfg)
    rb = ratio_bracket(vs, va)
    return {"kind": kind, "theta_A": a, "theta_B": b, "sep_vol": sep_v, "all_vol": all_v,
            "ratio_analytic": ratio, "ratio_numeric": rb.estimate,
            "ratio_lower": rb.lower, "ratio_upper": rb.upper, "abs_diff": abs(ratio - rb.estimate)}


def product_sweep(grid: int, cfg: RunConfig, numeric: bool = True):
    if grid < 8:
        raise UnsupportedDimension("product sweep grid must be >= 8")
    ts = sweep_angles(grid)
    rows = []
    for a in ts:
        for b in ts:
            if numeric:
                rows.append(product_row(float(a), float(b), cfg))
            else:
                ang = ProductAngles(float(a), float(b))
                rows.append({"kind": "grid", "theta_A": float(a), "theta_B": float(b),
                             "sep_vol": sep_volume_product_2q(ang),
                             "all_vol": all_volume_product_2q(ang),
                             "ratio_analytic": ratio_product_2q(ang)})
    if numeric:
        rows.append(product_row(math.pi / 2, math.pi / 2, cfg, kind="reference"))
    vmin, amin = min_ratio_product_2q()
    summary = {"min_ratio": vmin, "argmin_theta_A": amin.theta_A, "argmin_theta_B": amin.theta_B,
               "max_abs_diff": max((r.get("abs_diff", 0.0) for r in rows), default=0.0),
               "bracket_contains_analytic": all(
                   r["ratio_lower"] - 1e-9 <= r["ratio_analytic"] <= r["ratio_upper"] + 1e-9
                   for r in rows) if numeric else None}
    return rows, summary


# ---------------------------------------------------------------------------
# certification, bounds, instances
# ---------------------------------------------------------------------------

def confidence_report(obs: ObservableSet, shots: np.ndarray, alpha: float, cfg: RunConfig,
                      half_widths=None) -> dict:
    if tuple(obs.dims) != (2, 2):
        raise UnsupportedDimension("certification is only available for two-qubit observables")
    rect = confidence_rect(shots, obs, alpha, half_widths)
    cert = find_certificate(obs, rect, grid_per_axis=cfg.cert_grid)
    return {"rect": {"center": rect.center, "half_widths": rect.half_widths,
                     "alpha": rect.alpha, "shots_per_observable": rect.shots},
            "certificate": cert.as_dict() if cert else None}


ABS_SEP_SPECTRUM = (1.0, 0.5, 0.5, 0.0)


def abs_sep_width() -> float:
    return abs_sep_extremum(ABS_SEP_SPECTRUM, "max") - abs_sep_extremum(ABS_SEP_SPECTRUM, "min")


def bounds_table(dims=(2, 2), kmax: int = 4) -> tuple[list[dict], list[str]]:
    """Lower bounds per k next to the instance ratios they must not exceed."""
    insts = [(i.name, i.observables.k, i.expected_ratio) for i in named_instances()]
    rows, violations = [], []
    for k in range(1, kmax + 1):
        rep = separable_ball_bound(dims, k)
        matching = [(n, r) for n, kk, r in insts if kk == k] if tuple(dims) == (2, 2) else []
        for name, r in matching:
            if rep.value > r + 1e-12:
                violations.append(f"k={k}: bound {rep.value:.6g} exceeds {name} ratio {r:.6g}")
        rows.append({"k": k, "bound": rep.value, "formula": rep.formula_id,
                     "instances": "; ".join(f"{n}={r:.6g}" for n, r in matching)})
    if tuple(dims) == (2, 2):
        w = abs_sep_width()
        rows.append({"k": 1, "bound": w, "formula": "absolutely_separable_width", "instances": ""})
        if w > 0.5 + 1e-12:
            violations.append(f"absolute-separability bound {w:.6g} exceeds bell-projector ratio")
    return rows, violations


def instances_table(cfg: RunConfig) -> list[dict]:
    rows = []
    for inst in named_instances():
        row = {"name": inst.name, "k": inst.observables.k, "expected": inst.expected_ratio,
               "estimate": None, "lower": None, "upper": None}
        if not inst.analytic_only:
            rep, _ = ratio_report(inst.observables, cfg)
            row.update(rep["ratio"])
        rows.append(row)
    return rows
