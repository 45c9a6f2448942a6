"""Batch experiment driver: config in, seeded Monte Carlo campaigns out.

Per-step and per-trial CSVs carry a config-hash header comment; a summary
block reports coverage, scaling slope with a bootstrap interval, and total
resources.  Trial-level parallelism never changes the output bytes because
all randomness is keyed, not sequential.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import bayes, blackbox, frames, measurement, multiparam, search
from .config import ExperimentConfig, load_config
from .errors import ConfigError, PreconditionError
from .pauli import PauliSum, find_su2_partner
from .records import RunRecord
from .streams import substream

STEP_COLUMNS = (
    "trial", "nu", "step", "t", "p", "a", "x", "theta_hat", "delta",
    "interval_lo", "interval_hi", "q", "phi", "n_calls", "q_slices",
    "delta_gamma", "gamma", "outlier",
)
TRIAL_COLUMNS = (
    "trial", "nu", "target_precision", "theta_true", "theta_hat",
    "interval_lo", "interval_hi", "covered", "converged", "total_time",
    "n_calls", "exchanges_used", "total_slices", "outliers",
)
SEARCH_COLUMNS = ("n", "Q", "theta", "separation", "bound", "J_needed", "N_total")
TRACE_COLUMNS = ("t", "cos_true", "sin_true", "cos_sample", "sin_sample",
                 "effective_delta")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence],
               config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_sha256={config_hash}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def scaling_report(records: Sequence[RunRecord], seed: int = 0,
                   resamples: int = 1000) -> tuple:
    """OLS slope of log(resource) vs log(1/target precision) with a seeded
    bootstrap 95% interval.  Needs at least three distinct targets."""
    pts = [(math.log(1 / r.target_precision), math.log(r.resource))
           for r in records if r.converged and r.resource > 0]
    targets = {r.target_precision for r in records if r.converged}
    if len(targets) < 3:
        raise PreconditionError(
            f"scaling report needs >= 3 distinct precisions, got {len(targets)}"
        )
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])

    def slope(x, y) -> float:
        xc = x - x.mean()
        return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))

    point = slope(xs, ys)
    rng = substream(seed, 45054)
    boots = []
    size = len(xs)
    while len(boots) < resamples:
        idx = rng.integers(0, size, size=size)
        x = xs[idx]
        if np.ptp(x) == 0:
            continue
        boots.append(slope(x, ys[idx]))
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return point, (float(lo), float(hi))


@dataclass
class CampaignSummary:
    mode: str
    config_hash: str
    trials: int
    converged: int
    nonconverged_fraction: float
    coverage: Optional[float]
    slope: Optional[float]
    slope_ci: Optional[tuple]
    total_resource: float

    def lines(self) -> list:
        out = [
            f"mode = {self.mode}",
            f"config_sha256 = {self.config_hash}",
            f"trials = {self.trials}",
            f"converged = {self.converged}",
            f"nonconverged_fraction = {self.nonconverged_fraction!r}",
        ]
        if self.coverage is not None:
            out.append(f"coverage = {self.coverage!r}")
        if self.slope is not None:
            lo, hi = self.slope_ci
            out.append(f"scaling_slope = {self.slope!r}")
            out.append(f"scaling_slope_ci95 = ({lo!r}, {hi!r})")
        out.append(f"total_resource = {self.total_resource!r}")
        return out


def _map_trials(thunks: Sequence, threads: int) -> list:
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers == 1 or len(thunks) <= 1:
        return [t() for t in thunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: t(), thunks))


def _estimator_records(cfg: ExperimentConfig) -> list:
    records: list = []
    thunks = []
    if cfg.mode == "estimate-continuous":
        mu, sigma2 = find_su2_partner(cfg.h0, cfg.sigma1)
        h1 = PauliSum.from_product(cfg.sigma1)
        h2 = PauliSum.from_product(sigma2)
        for ti, target in enumerate(cfg.targets):
            policy = replace(cfg.zoom_policy, target_precision=target)
            for k in range(cfg.trials):
                trial = ti * cfg.trials + k
                thunks.append((lambda pol=policy, tr=trial: bayes.run_estimation(
                    cfg.h0, h1, h2, cfg.theta_true, pol, cfg.noise,
                    trial_index=tr), trial, target))
    elif cfg.mode == "estimate-discrete":
        for ti, target in enumerate(cfg.targets):
            policy = replace(cfg.blackbox_policy, target_precision=target)
            for k in range(cfg.trials):
                trial = ti * cfg.trials + k
                thunks.append((lambda pol=policy, tr=trial: blackbox.run_discrete(
                    cfg.h0, cfg.sigma1, cfg.theta_true, pol, cfg.noise,
                    trial_index=tr), trial, target))
    elif cfg.mode == "frame-align":
        for ti, target in enumerate(cfg.targets):
            policy = replace(cfg.blackbox_policy, target_precision=target)
            for k in range(cfg.trials):
                trial = ti * cfg.trials + k
                thunks.append((lambda pol=policy, tr=trial: frames.align(
                    cfg.frame, pol, cfg.noise, trial_index=tr), trial, target))
    elif cfg.mode == "multiparam":
        for ti, target in enumerate(cfg.targets):
            policy = replace(cfg.zoom_policy, target_precision=target)
            for k in range(cfg.trials):
                trial = ti * cfg.trials + k
                thunks.append((lambda pol=policy, tr=trial: multiparam.estimate_all(
                    cfg.multi, cfg.plan, pol, cfg.noise, trial_index=tr),
                    trial, target))
    nan = float("nan")

    def guarded(thunk, trial, target):
        # a failed trial is recorded as non-converged; the campaign continues
        def run():
            try:
                return thunk()
            except Exception:
                return RunRecord(
                    mode=cfg.mode, trial=trial, theta_true=nan, theta_hat=nan,
                    converged=False, interval_lo=nan, interval_hi=nan,
                    total_time=0.0, target_precision=target)
        return run

    guarded_thunks = [guarded(t, tr, tg) for t, tr, tg in thunks]
    for result in _map_trials(guarded_thunks, cfg.threads):
        if isinstance(result, list):
            records.extend(result)
        else:
            records.append(result)
    records.sort(key=lambda r: (r.target_precision, r.trial, r.nu or 0))
    return records


def _records_to_rows(records: Sequence[RunRecord]) -> tuple:
    step_rows = []
    trial_rows = []
    for r in records:
        for s in r.steps:
            step_rows.append((
                r.trial, r.nu, s.step, s.t, s.p, s.a, s.x, s.theta_hat,
                s.delta, s.interval_lo, s.interval_hi, s.q, s.phi, s.n_calls,
                s.q_slices, s.delta_gamma, s.gamma, s.outlier,
            ))
        trial_rows.append((
            r.trial, r.nu, r.target_precision, r.theta_true, r.theta_hat,
            r.interval_lo, r.interval_hi, r.covered, r.converged,
            r.total_time, r.n_calls, r.exchanges_used, r.total_slices,
            r.outliers,
        ))
    return step_rows, trial_rows


def _run_search(cfg: ExperimentConfig) -> list:
    rows = []
    q_values = cfg.search_q_values or tuple(cfg.search_q for _ in cfg.search_n_values)
    for n, q in zip(cfg.search_n_values, q_values):
        for inst_idx in range(cfg.search_instances):
            if cfg.search_interleave == "identity":
                inst = search.SearchInstance.identity_chain(
                    n, cfg.search_s_index, cfg.search_theta, q)
            elif cfg.search_interleave == "saturating":
                inst = search.SearchInstance.saturating_chain(
                    n, cfg.search_s_index, cfg.search_theta, q)
            else:
                inst = search.SearchInstance.random_chain(
                    n, cfg.search_s_index, cfg.search_theta, q,
                    seed=cfg.noise.seed + inst_idx)
            sep = search.signal_separation(inst)
            bound = search.separation_bound(inst)
            try:
                j, total = search.detection_resources(inst, cfg.noise)
            except PreconditionError:
                j, total = None, None
            rows.append((n, q, cfg.search_theta, sep, bound, j, total))
    return rows


def _run_trace(cfg: ExperimentConfig) -> list:
    mu, sigma2 = find_su2_partner(cfg.h0, cfg.sigma1)
    h1 = PauliSum.from_product(cfg.sigma1)
    h2 = PauliSum.from_product(sigma2)
    e_mu = cfg.h0.terms[mu][0]
    rows = []
    for i, t in enumerate(cfg.trace_times):
        est = measurement.estimate_cos_sin(
            cfg.h0, h1, h2, cfg.theta_true, t, cfg.noise,
            want_sin=cfg.trace_want_sin, key=(i,))
        angle = 2 * e_mu * cfg.theta_true * t
        rows.append((t, math.cos(angle), math.sin(angle), est.cos_hat,
                     est.sin_hat, est.effective_delta))
    return rows


def run_campaign(cfg: ExperimentConfig) -> CampaignSummary:
    """Execute a campaign and write steps.csv, trials.csv and summary.txt."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    chash = cfg.config_hash
    coverage = slope = slope_ci = None
    converged = 0
    total_resource = 0.0
    trials_done = 0

    if cfg.mode == "search-bound":
        rows = _run_search(cfg)
        _write_csv(os.path.join(cfg.out_dir, "trials.csv"), SEARCH_COLUMNS,
                   rows, chash)
        _write_csv(os.path.join(cfg.out_dir, "steps.csv"), STEP_COLUMNS, [], chash)
        trials_done = len(rows)
        converged = sum(1 for r in rows if r[5] is not None)
        total_resource = float(sum(r[6] or 0 for r in rows))
    elif cfg.mode == "trace":
        rows = _run_trace(cfg)
        _write_csv(os.path.join(cfg.out_dir, "trials.csv"), TRACE_COLUMNS,
                   rows, chash)
        _write_csv(os.path.join(cfg.out_dir, "steps.csv"), STEP_COLUMNS, [], chash)
        trials_done = len(rows)
        converged = trials_done
        total_resource = float(sum(r[0] for r in rows))
    else:
        records = _estimator_records(cfg)
        step_rows, trial_rows = _records_to_rows(records)
        _write_csv(os.path.join(cfg.out_dir, "steps.csv"), STEP_COLUMNS,
                   step_rows, chash)
        _write_csv(os.path.join(cfg.out_dir, "trials.csv"), TRIAL_COLUMNS,
                   trial_rows, chash)
        trials_done = len(records)
        converged = sum(1 for r in records if r.converged)
        total_resource = float(sum(r.resource for r in records))
        done = [r for r in records if r.converged]
        if done:
            coverage = sum(1 for r in done if r.covered) / len(done)
        if len({r.target_precision for r in done}) >= 3:
            slope, slope_ci = scaling_report(records, seed=cfg.noise.seed)
            if cfg.svg:
                try:
                    _svg_scaling_plot(
                        os.path.join(cfg.out_dir, "scaling.svg"), done, slope)
                except Exception:
                    pass  # plotting must never fail a campaign

    frac = 0.0 if trials_done == 0 else 1 - converged / trials_done
    summary = CampaignSummary(
        mode=cfg.mode, config_hash=chash, trials=trials_done,
        converged=converged, nonconverged_fraction=frac, coverage=coverage,
        slope=slope, slope_ci=slope_ci, total_resource=total_resource,
    )
    with open(os.path.join(cfg.out_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(summary.lines()) + "\n")
    return summary


def _svg_scaling_plot(path: str, records: Sequence[RunRecord],
                      slope: float) -> None:
    pts = [(math.log10(1 / r.target_precision), math.log10(r.resource))
           for r in records if r.resource > 0]
    if not pts:
        return
    xs, ys = zip(*pts)
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    pad_x = 0.05 * (x1 - x0 or 1)
    pad_y = 0.05 * (y1 - y0 or 1)
    x0, x1, y0, y1 = x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y
    w, h = 480, 360

    def sx(x):
        return 50 + (x - x0) / (x1 - x0) * (w - 70)

    def sy(y):
        return h - 40 - (y - y0) / (y1 - y0) * (h - 70)

    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    line = [(x0, ybar + slope * (x0 - xbar)), (x1, ybar + slope * (x1 - xbar))]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<line x1="50" y1="{h - 40}" x2="{w - 20}" y2="{h - 40}" stroke="black"/>',
        f'<line x1="50" y1="30" x2="50" y2="{h - 40}" stroke="black"/>',
        f'<text x="{w // 2}" y="{h - 10}" font-size="12" text-anchor="middle">'
        "log10(1/target precision)</text>",
        f'<text x="15" y="{h // 2}" font-size="12" transform="rotate(-90 15 {h // 2})" '
        'text-anchor="middle">log10(resource)</text>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="'
        + " ".join(f"{sx(px):.1f},{sy(py):.1f}" for px, py in line) + '"/>',
    ]
    for px, py in pts:
        parts.append(f'<circle cx="{sx(px):.1f}" cy="{sy(py):.1f}" r="2.5" '
                     'fill="darkorange" fill-opacity="0.6"/>')
    parts.append(f'<text x="60" y="40" font-size="12">slope = {slope:.3f}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dqc1m",
        description="DQC1 parameter-estimation experiment driver",
    )
    parser.add_argument("mode", help="campaign mode (must match the config)")
    parser.add_argument("--config", required=True, help="TOML config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--svg", action="store_true")
    args = parser.parse_args(argv)

    overrides = {
        "mode": args.mode,
        "noise.seed": args.seed,
        "run.trials": args.trials,
        "run.threads": args.threads,
        "run.out": args.out,
        "run.svg": True if args.svg else None,
    }
    try:
        cfg = load_config(args.config, overrides=overrides)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for problem in exc.violations:
            print(f"  - {problem}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    summary = run_campaign(cfg)
    for line in summary.lines():
        print(line)
    if summary.nonconverged_fraction > cfg.max_nonconverged_fraction:
        print(
            f"nonconverged fraction {summary.nonconverged_fraction:.3f} exceeds "
            f"allowed {cfg.max_nonconverged_fraction:.3f}",
            file=sys.stderr,
        )
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
