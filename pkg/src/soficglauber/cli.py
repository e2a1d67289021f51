"""Seeded experiment driver.

    soficglauber delta --n 1000 10000 --r 2 --trials 20 --seed 1
    soficglauber metastability --n 2000 --eps 0.45 --radius 2 --time 1 --snapshots 10
    soficglauber drift --n 500 4000 --eps 0.45 --time 0.5 --trials 20
    soficglauber mcut --n 300 --trials 50 --restarts 20
    soficglauber finv --ranks 2 5 10 50 100 200

Records are JSON Lines (default) or a flat CSV projection.  Every record
carries the full configuration.  Exit codes: 0 ok, 1 invalid config,
2 resource limit.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import partial
from pathlib import Path

import numpy as np

from . import analysis, dynamics, empirical, sofic, spin
from .errors import InvalidInputError, ResourceLimitError

log = logging.getLogger(__name__)

SUBCOMMANDS = ("delta", "metastability", "drift", "mcut", "finv")


@dataclass
class ExperimentConfig:
    command: str = "delta"
    n: list = field(default_factory=lambda: [1000])
    r: int = 2
    eps: float = 0.45
    radius: int = 2
    time: float = 1.0
    snapshots: int = 10
    trials: int = 20
    burn_in: float = 50.0
    eta: float = 0.05
    restarts: int = 20
    seed: int = 0
    out: str | None = None
    format: str = "json"
    window_threshold: float = 0.1
    defect_factor: float = 2.0
    burn_in_rounds: int = 4
    r_max: int | None = None
    workers: int = 1
    brute_max: int = 12
    good_model: bool = False
    cut_margin: float = 0.05
    ranks: list = field(default_factory=lambda: [2, 3, 4, 5, 10, 20, 50, 100, 200])

    def validate(self) -> None:
        if self.command not in SUBCOMMANDS:
            raise InvalidInputError(f"unknown subcommand {self.command!r}")
        if not self.n or any(int(v) < 1 for v in self.n):
            raise InvalidInputError("--n values must be >= 1")
        self.n = [int(v) for v in self.n]
        if self.r < 1:
            raise InvalidInputError("--r must be >= 1")
        if self.command in ("metastability", "drift") or (self.command == "mcut" and self.good_model):
            spin.check_epsilon(self.eps)
        if self.radius < 0 or self.time < 0 or self.snapshots < 1 or self.trials < 1:
            raise InvalidInputError("radius, time must be >= 0; snapshots, trials >= 1")
        if self.burn_in <= 0 or self.burn_in_rounds < 1:
            raise InvalidInputError("--burn-in must be > 0 and --burn-in-rounds >= 1")
        if self.restarts < 1 or self.workers < 1:
            raise InvalidInputError("--restarts and --workers must be >= 1")
        if self.format not in ("json", "csv"):
            raise InvalidInputError("--format must be json or csv")
        if self.command == "metastability" and self.radius < 1:
            raise InvalidInputError("metastability needs --radius >= 1 for the Gibbs defect")
        if self.command == "finv" and any(int(k) < 2 for k in self.ranks):
            raise InvalidInputError("--ranks must all be >= 2")

    def provenance(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return d


# -- trial functions (top level so process pools can pickle them) -----------------


def _tv(x, sigma, R, eps) -> float:
    return empirical.tv_to_markov_tree(empirical.empirical_marginal(x, sigma, R, q=2), eps)


def _defect(x, sigma, R, phi) -> float:
    return empirical.gibbs_defect(empirical.empirical_marginal(x, sigma, R, q=2), phi)


def _burn_in(sigma, phi, cfg: ExperimentConfig, rng) -> tuple[np.ndarray, int, float]:
    """Burn in by rounds until TV_R <= eta or the round budget is spent."""
    x = rng.integers(0, 2, size=sigma.n, dtype=np.int64)
    tv = math.inf
    rounds = 0
    while rounds < cfg.burn_in_rounds:
        x = dynamics.simulate(x, sigma, phi, cfg.burn_in, seed=_sub(rng)).final
        rounds += 1
        tv = _tv(x, sigma, cfg.radius, cfg.eps)
        if tv <= cfg.eta:
            break
    return x, rounds, tv


def _sub(rng) -> int:
    return int(rng.integers(0, 2**63 - 1))


def delta_trial(cfg: ExperimentConfig, n: int, i: int) -> dict:
    sigma = sofic.uniform_random(n, cfg.r, cfg.seed + i)
    rep = sofic.delta_estimate(sigma, cfg.r_max)
    return {"record": "trial", "trial": i, "n": n, "trial_seed": cfg.seed + i, **rep.to_dict()}


def metastability_trial(cfg: ExperimentConfig, n: int, i: int) -> dict:
    rng = np.random.default_rng(cfg.seed + i)
    sigma = sofic.uniform_random(n, cfg.r, rng)
    phi = spin.ising_from_epsilon(cfg.eps)
    x, rounds, tv0 = _burn_in(sigma, phi, cfg, rng)
    defect0 = _defect(x, sigma, cfg.radius, phi)
    noise = _tv(rng.integers(0, 2, size=n), sigma, cfg.radius, 0.5)
    times = [cfg.time * k / cfg.snapshots for k in range(1, cfg.snapshots + 1)]
    traj = dynamics.simulate(x, sigma, phi, cfg.time, times, seed=_sub(rng))
    tvs = [_tv(s, sigma, cfg.radius, cfg.eps) for s in traj.snapshots]
    defects = [_defect(s, sigma, cfg.radius, phi) for s in traj.snapshots]
    reached = tv0 <= cfg.eta
    keeps_tv = max(tvs) <= cfg.window_threshold
    keeps_defect = max(defects) <= cfg.defect_factor * defect0
    return {
        "record": "trial",
        "trial": i,
        "n": n,
        "trial_seed": cfg.seed + i,
        "burn_in_reached": bool(reached),
        "burn_in_flagged": not reached,
        "burn_in_rounds_used": rounds,
        "tv_burn_in": tv0,
        "defect_burn_in": defect0,
        "uniform_noise_floor": noise,
        "times": times,
        "tv": tvs,
        "gibbs_defect": defects,
        "max_tv": max(tvs),
        "max_defect": max(defects),
        "keeps_tv": bool(keeps_tv),
        "keeps_defect": bool(keeps_defect),
        "events": traj.total_events,
    }


def drift_point(cfg: ExperimentConfig, n: int, idx: int) -> dict:
    rng = np.random.default_rng(cfg.seed + idx)
    sigma = sofic.uniform_random(n, cfg.r, rng)
    phi = spin.ising_from_epsilon(cfg.eps)
    x0, _, tv0 = _burn_in(sigma, phi, cfg, rng)
    tvs = []
    for j in range(cfg.trials):
        xt = dynamics.simulate(x0, sigma, phi, cfg.time, seed=cfg.seed + j).final
        tvs.append(_tv(xt, sigma, cfg.radius, cfg.eps))
    return {
        "record": "point",
        "n": n,
        "trial_seed": cfg.seed + idx,
        "tv_initial": tv0,
        "tv_at_t": tvs,
        "mean_tv": float(np.mean(tvs)),
        "std_tv": float(np.std(tvs, ddof=1)) if len(tvs) > 1 else 0.0,
    }


def mcut_trial(cfg: ExperimentConfig, n: int, i: int) -> dict:
    rng = np.random.default_rng(cfg.seed + i)
    sigma = sofic.uniform_random(n, cfg.r, rng)
    cut, _ = analysis.local_search_mcut(sigma, cfg.restarts, _sub(rng))
    rec = {
        "record": "trial",
        "trial": i,
        "n": n,
        "trial_seed": cfg.seed + i,
        "local_search_mcut": cut,
        "normalized_mcut": cut / (cfg.r * n),
    }
    if n <= cfg.brute_max:
        brute = analysis.brute_force_mcut(sigma)
        rec["brute_force_mcut"] = brute
        rec["matches_brute_force"] = brute == cut
    if cfg.good_model:
        phi = spin.ising_from_epsilon(cfg.eps)
        x = dynamics.burn_in_sample(sigma, phi, cfg.burn_in, seed=_sub(rng))
        b = analysis.bisect_from_microstate(x)
        good_cut = analysis.cut_size(sigma, b)
        rec["good_model_tv1"] = _tv(x, sigma, 1, cfg.eps)
        rec["good_model_flips"] = analysis.balancing_flips(int(x.sum()), n)
        rec["good_model_cut"] = good_cut
        rec["good_model_normalized_cut"] = good_cut / (cfg.r * n)
        rec["good_model_within_margin"] = good_cut / (cfg.r * n) <= cfg.eps + cfg.cut_margin
    return rec


# -- commands -----------------------------------------------------------------


def _run_trials(cfg: ExperimentConfig, fn, jobs) -> list[dict]:
    call = partial(_star, fn, cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            return list(pool.map(call, jobs))
    return [call(j) for j in jobs]


def _star(fn, cfg, job):
    return fn(cfg, *job)


def cmd_delta(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(n, i) for n in cfg.n for i in range(cfg.trials)]
    recs = _run_trials(cfg, delta_trial, jobs)
    for n in cfg.n:
        vals = [r["delta_estimate"] for r in recs if r["n"] == n]
        recs.append({"record": "summary", "n": n, "mean_delta_estimate": float(np.mean(vals)), "trials": len(vals)})
    return recs


def cmd_metastability(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(n, i) for n in cfg.n for i in range(cfg.trials)]
    recs = _run_trials(cfg, metastability_trial, jobs)
    for n in cfg.n:
        rows = [r for r in recs if r.get("n") == n and r["record"] == "trial"]
        qual = [r for r in rows if r["burn_in_reached"]]
        ok = [r for r in qual if r["keeps_tv"] and r["keeps_defect"]]
        recs.append(
            {
                "record": "summary",
                "n": n,
                "trials": len(rows),
                "qualifying_trials": len(qual),
                "fraction_stable": (len(ok) / len(qual)) if qual else None,
                "fraction_keeps_tv_all": sum(r["keeps_tv"] for r in rows) / len(rows),
                "certifies": "pattern-witness TV surrogate on radius-R marginals only",
            }
        )
    return recs


def cmd_drift(cfg: ExperimentConfig) -> list[dict]:
    recs = _run_trials(cfg, drift_point, [(n, k) for k, n in enumerate(cfg.n)])
    means = [r["mean_tv"] for r in recs]
    recs.append(
        {
            "record": "summary",
            "n_values": list(cfg.n),
            "mean_tv": means,
            "monotone_decreasing": all(b < a for a, b in zip(means, means[1:])),
        }
    )
    return recs


def cmd_mcut(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(n, i) for n in cfg.n for i in range(cfg.trials)]
    recs = _run_trials(cfg, mcut_trial, jobs)
    for n in cfg.n:
        rows = [r for r in recs if r["n"] == n]
        vals = np.array([r["normalized_mcut"] for r in rows])
        summ = {
            "record": "summary",
            "n": n,
            "mean_normalized_mcut": float(vals.mean()),
            "std_normalized_mcut": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
            "eps_c_asymptote": analysis.eps_c_asymptotic(cfg.r),
        }
        if n <= cfg.brute_max:
            summ["all_match_brute_force"] = all(r["matches_brute_force"] for r in rows)
        if cfg.good_model:
            summ["fraction_good_model_within_margin"] = sum(r["good_model_within_margin"] for r in rows) / len(rows)
        recs.append(summ)
    return recs


def cmd_finv(cfg: ExperimentConfig) -> list[dict]:
    recs = []
    grid = [round(0.05 * k, 2) for k in range(1, 11)]
    for r in cfg.ranks:
        rep = analysis.threshold_report(int(r))
        rec = {"record": "threshold", **rep.to_dict()}
        rec["f_at_eps_f"] = analysis.f_ising(rep.eps_f, rep.r)
        rec["f_grid"] = {str(e): analysis.f_ising(e, rep.r) for e in grid}
        recs.append(rec)
    large = [r for r in recs if r["r"] >= 50]
    recs.append(
        {
            "record": "comparison",
            "schema_version": analysis.SCHEMA_VERSION,
            "sqrt_log2": round(math.sqrt(math.log(2.0)), 4),
            "p_star": analysis.P_STAR,
            "sqrt_log2_exceeds_p_star": math.sqrt(math.log(2.0)) > analysis.P_STAR,
            "eps_f_below_eps_c_for_ranks_ge_50": all(r["eps_f"] < r["eps_c_asymptote"] for r in large),
        }
    )
    return recs


COMMANDS = {
    "delta": cmd_delta,
    "metastability": cmd_metastability,
    "drift": cmd_drift,
    "mcut": cmd_mcut,
    "finv": cmd_finv,
}


# -- output -------------------------------------------------------------------


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    flat = [_flatten(r) for r in records]
    header: list[str] = []
    for r in flat:
        header.extend(k for k in r if k not in header)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    w.writerows(flat)
    return buf.getvalue()


def run(cfg: ExperimentConfig) -> list[dict]:
    cfg.validate()
    records = COMMANDS[cfg.command](cfg)
    prov = cfg.provenance()
    return [{**r, "config": prov, "seed": cfg.seed} for r in records]


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soficglauber", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--r", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--radius", type=int)
    p.add_argument("--time", type=float)
    p.add_argument("--snapshots", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--burn-in", type=float, dest="burn_in")
    p.add_argument("--eta", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--window-threshold", type=float, dest="window_threshold")
    p.add_argument("--defect-factor", type=float, dest="defect_factor")
    p.add_argument("--burn-in-rounds", type=int, dest="burn_in_rounds")
    p.add_argument("--r-max", type=int, dest="r_max")
    p.add_argument("--workers", type=int)
    p.add_argument("--brute-max", type=int, dest="brute_max")
    p.add_argument("--good-model", action="store_true", default=None, dest="good_model")
    p.add_argument("--cut-margin", type=float, dest="cut_margin")
    p.add_argument("--ranks", type=int, nargs="+")
    return p


class _ParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ParseError(message)


def config_from_args(argv) -> ExperimentConfig:
    parser = build_parser()
    parser.__class__ = _Parser
    ns = vars(parser.parse_args(argv))
    values: dict = {}
    if ns.get("config"):
        try:
            values.update(json.loads(Path(ns["config"]).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config file: {exc}") from exc
    values.update({k: v for k, v in ns.items() if v is not None and k != "config"})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    if isinstance(values.get("n"), int):
        values["n"] = [values["n"]]
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        records = run(cfg)
    except (_ParseError, InvalidInputError, TypeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 2
    text = render(records, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
