"""Command-line front end: scenario configs in, JSON/CSV tables out.

Subcommands
    analyze    stationary profile, utilities, slacks, verdict for one protocol
    check      just the incentive slacks and the equilibrium verdict
    solve      one of the four design problems
    sweep      Cartesian parameter grid of analyze or solve rows (CSV)
    simulate   one seeded agent-based run, trace JSON plus summary CSV row
    compare    protocol shoot-out (social norm vs tit-for-tat) along a sweep

Scenarios are JSON objects with sections env / params / design / sweep / sim /
output; every field can also be set or overridden by a flag named after the
parameter (--eps, --delta, --h-o, ...).  Exit codes: 0 success, 2 config
error (a machine-readable error object is printed), 3 infeasible design,
4 non-convergence diagnostics.  NORMFORGE_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .designer import DesignResult, DesignSpec, collapsed_social_utility, solve
from .incentives import check_equilibrium, overall_utilities, social_utility
from .model import NetworkEnv, PeerKind, ProtocolParams
from .sim import SOCIAL_NORM, TFT, SimConfig, run_sim, run_tft, tft_sustainable
from .stationary import NonConvergenceError, stationary_for_regime

ENV_FIELDS = ("r", "c", "eps", "lambda", "delta", "p_c", "p_d")
PARAM_FIELDS = ("L", "h_o", "b", "beta", "m_o")
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NONCONVERGENCE = 4


class CliError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field
        self.message = message


def _threads() -> int:
    raw = os.environ.get("NORMFORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise CliError("NORMFORGE_THREADS", f"not an integer: {raw!r}")


def _parallel_map(fn, items):
    n = _threads()
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- scenario IO

def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise CliError("config", f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise CliError("config", f"malformed JSON in {path}: {exc}")
    if not isinstance(raw, dict):
        raise CliError("config", "top-level config must be a JSON object")
    known = {"env", "params", "design", "sweep", "sim", "output"}
    for key in raw:
        if key not in known:
            raise CliError(key, f"unknown config section {key!r} (expected one of {sorted(known)})")
    return raw


def _scenario(args) -> dict:
    cfg = _load_config_file(args.config) if args.config else {}
    env = dict(cfg.get("env", {}))
    params = dict(cfg.get("params", {}))
    design = dict(cfg.get("design", {}))
    sim = dict(cfg.get("sim", {}))

    def override(section, name, value):
        if value is not None:
            section[name] = value

    for name in ENV_FIELDS:
        override(env, name, getattr(args, _attr(name), None))
    for name in ("L", "h_o", "b", "beta"):
        override(params, name, getattr(args, _attr(name), None))
    if getattr(args, "m_o", None) is not None:
        params["m_o"] = [int(v) for v in args.m_o.split(",")]
    for name in ("problem", "b_cap", "beta_grid", "p_c_grid"):
        override(design, name, getattr(args, _attr(name), None))
    if "L" in params and "L" not in design:
        design.setdefault("L", params["L"])
    for name in ("n_peers", "n_periods", "seed", "strategic"):
        override(sim, name, getattr(args, _attr(name), None))
    if getattr(args, "flavor", None) is not None:
        sim["protocol_flavor"] = args.flavor
    if getattr(args, "mix", None) is not None:
        mix = {}
        for part in args.mix.split(","):
            kind, _, frac = part.partition("=")
            if not frac:
                raise CliError("sim.population_mix", f"expected kind=fraction, got {part!r}")
            mix[kind.strip()] = float(frac)
        sim["population_mix"] = mix
    sweep = list(cfg.get("sweep", []))
    for spec in getattr(args, "sweep", None) or []:
        bits = spec.split(":")
        if len(bits) != 4:
            raise CliError("sweep", f"expected param:min:max:step, got {spec!r}")
        sweep.append({"param": bits[0], "min": float(bits[1]),
                      "max": float(bits[2]), "step": float(bits[3])})
    return {"env": env, "params": params, "design": design, "sweep": sweep,
            "sim": sim, "output": dict(cfg.get("output", {}))}


def _attr(flag_name: str) -> str:
    return {"lambda": "lam"}.get(flag_name, flag_name)


def _build_env(section: dict) -> NetworkEnv:
    required = ("r", "c", "eps", "lambda", "delta")
    for name in required:
        if name not in section:
            raise CliError(f"env.{name}", "required environment field is missing")
    known = set(ENV_FIELDS)
    for key in section:
        if key not in known:
            raise CliError(f"env.{key}", f"unknown environment field {key!r}")
    try:
        return NetworkEnv(r=float(section["r"]), c=float(section["c"]),
                          eps=float(section["eps"]), lam=float(section["lambda"]),
                          delta=float(section["delta"]),
                          p_c=float(section.get("p_c", 0.0)),
                          p_d=float(section.get("p_d", 0.0)))
    except (TypeError, ValueError) as exc:
        raise CliError("env", str(exc))


def _build_params(section: dict) -> ProtocolParams:
    for name in ("L", "h_o", "b"):
        if name not in section:
            raise CliError(f"params.{name}", "required protocol field is missing")
    known = set(PARAM_FIELDS)
    for key in section:
        if key not in known:
            raise CliError(f"params.{key}", f"unknown protocol field {key!r}")
    try:
        return ProtocolParams(L=int(section["L"]), h_o=int(section["h_o"]),
                              b=int(section["b"]), beta=float(section.get("beta", 0.0)),
                              m_o=section.get("m_o"))
    except (TypeError, ValueError) as exc:
        raise CliError("params", str(exc))


def _build_design(section: dict, env: NetworkEnv) -> DesignSpec:
    for name in ("problem", "L", "b_cap"):
        if name not in section:
            raise CliError(f"design.{name}", "required design field is missing")
    known = {"problem", "L", "b_cap", "beta_grid", "p_c_grid"}
    for key in section:
        if key not in known:
            raise CliError(f"design.{key}", f"unknown design field {key!r}")
    try:
        return DesignSpec(problem=str(section["problem"]), L=int(section["L"]),
                          b_cap=int(section["b_cap"]), env=env,
                          beta_grid=float(section.get("beta_grid", 0.01)),
                          pC_grid=float(section.get("p_c_grid", 0.01)))
    except (TypeError, ValueError) as exc:
        raise CliError("design", str(exc))


def _build_sim(section: dict, params: ProtocolParams, env: NetworkEnv) -> SimConfig:
    for name in ("n_peers", "n_periods", "seed"):
        if name not in section:
            raise CliError(f"sim.{name}", "required simulation field is missing")
    known = {"n_peers", "n_periods", "seed", "population_mix", "protocol_flavor", "strategic"}
    for key in section:
        if key not in known:
            raise CliError(f"sim.{key}", f"unknown simulation field {key!r}")
    try:
        return SimConfig(n_peers=int(section["n_peers"]), n_periods=int(section["n_periods"]),
                         seed=int(section["seed"]), params=params, env=env,
                         population_mix=section.get("population_mix"),
                         protocol_flavor=section.get("protocol_flavor", SOCIAL_NORM),
                         strategic=bool(section.get("strategic", False)))
    except (TypeError, ValueError) as exc:
        raise CliError("sim", str(exc))


# ------------------------------------------------------------------- outputs

def _emit_text(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _join(vec) -> str:
    return ";".join(repr(float(v)) for v in vec)


# ------------------------------------------------------------------ commands

def _analyze_payload(params: ProtocolParams, env: NetworkEnv) -> dict:
    dist = stationary_for_regime(params, env)
    profile = overall_utilities(params, env, dist)
    report = check_equilibrium(params, env)
    u = social_utility(params, env, dist)
    if report.is_equilibrium:
        u_eff = u
        recip_eff = _recip_average_utility(params, env, dist)
    else:
        u_eff = collapsed_social_utility(env, params.b, env.p_c)
        recip_eff = _collapsed_recip_utility(params, env)
    return {
        "env": {"r": env.r, "c": env.c, "eps": env.eps, "lambda": env.lam,
                "delta": env.delta, "p_c": env.p_c, "p_d": env.p_d},
        "params": {"L": params.L, "h_o": params.h_o, "b": params.b,
                   "beta": params.beta, "m_o": list(params.m_o)},
        "alpha": dist.alpha,
        "mu": dist.mu,
        "eta": dist.eta.tolist(),
        "v_one": profile.v_one.tolist(),
        "v_inf": profile.v_inf.tolist(),
        "social_utility": u,
        "social_utility_effective": u_eff,
        "recip_utility_effective": recip_eff,
        "serve_slack": report.serve_slack,
        "refuse_slack": report.refuse_slack,
        "per_theta_slacks": report.per_theta_slacks.tolist(),
        "is_equilibrium": report.is_equilibrium,
    }


def _recip_average_utility(params, env, dist) -> float:
    """Mean one-period utility of reciprocative peers under compliance."""
    from .incentives import one_period_utilities
    v = one_period_utilities(params, env, dist)
    if env.p_c > 0.0:
        recip_eta = dist.eta.copy()
        recip_eta[params.L] -= env.p_c  # altruists sit at the top rung
        return float(recip_eta @ v) / (1.0 - env.p_c)
    return float(dist.eta @ v)


def _collapsed_recip_utility(params, env) -> float:
    """Reciprocative mean utility once compliance fails: altruists are the
    only servers, so service is rationed by their supply."""
    if env.p_c <= 0.0:
        return 0.0
    fed = min(1.0, env.p_c / (1.0 - env.p_c)) if env.p_c < 1.0 else 1.0
    return env.lam * params.b * (1.0 - env.eps) * env.r * fed


ANALYZE_COLUMNS = [
    "r", "c", "eps", "lambda", "delta", "p_c", "p_d",
    "L", "h_o", "b", "beta", "m_o",
    "alpha", "mu", "eta", "v_one", "v_inf",
    "social_utility", "social_utility_effective", "recip_utility_effective",
    "serve_slack", "refuse_slack", "is_equilibrium",
]


def _analyze_csv_row(payload: dict) -> list:
    e, p = payload["env"], payload["params"]
    return [e["r"], e["c"], e["eps"], e["lambda"], e["delta"], e["p_c"], e["p_d"],
            p["L"], p["h_o"], p["b"], p["beta"], ";".join(str(v) for v in p["m_o"]),
            payload["alpha"], payload["mu"], _join(payload["eta"]),
            _join(payload["v_one"]), _join(payload["v_inf"]),
            payload["social_utility"], payload["social_utility_effective"],
            payload["recip_utility_effective"],
            payload["serve_slack"], payload["refuse_slack"], payload["is_equilibrium"]]


def cmd_analyze(args) -> int:
    sc = _scenario(args)
    env = _build_env(sc["env"])
    params = _build_params(sc["params"])
    payload = _analyze_payload(params, env)
    _emit_text(json.dumps(payload, sort_keys=True, indent=1),
               args.out or sc["output"].get("path"))
    if args.csv_out:
        _emit_text(_csv_text(ANALYZE_COLUMNS, [_analyze_csv_row(payload)]), args.csv_out)
    return 0


def cmd_check(args) -> int:
    sc = _scenario(args)
    env = _build_env(sc["env"])
    params = _build_params(sc["params"])
    report = check_equilibrium(params, env)
    payload = {
        "serve_slack": report.serve_slack,
        "refuse_slack": report.refuse_slack,
        "per_theta_slacks": report.per_theta_slacks.tolist(),
        "is_equilibrium": report.is_equilibrium,
    }
    _emit_text(json.dumps(payload, sort_keys=True, indent=1),
               args.out or sc["output"].get("path"))
    return 0


SOLVE_COLUMNS = ["problem", "r", "c", "eps", "lambda", "delta",
                 "L", "b_cap", "feasible", "h_o_star", "b_star", "beta_star",
                 "m_o_star", "p_c_star", "utility"]


def _solve_payload(spec: DesignSpec, result: DesignResult) -> dict:
    p = result.params
    return {
        "problem": spec.problem,
        "feasible": result.feasible,
        "h_o_star": None if p is None else p.h_o,
        "b_star": None if p is None else p.b,
        "beta_star": None if p is None else p.beta,
        "m_o_star": None if p is None else list(p.m_o),
        "p_c_star": result.pC_star,
        "utility": result.utility,
        "search_log": [
            {"candidate": list(cand) if isinstance(cand, tuple) else cand,
             "slack": slack, "utility": util}
            for cand, slack, util in result.search_log
        ],
    }


def cmd_solve(args) -> int:
    sc = _scenario(args)
    env = _build_env(sc["env"])
    spec = _build_design(sc["design"], env)
    result = solve(spec)
    payload = _solve_payload(spec, result)
    _emit_text(json.dumps(payload, sort_keys=True, indent=1),
               args.out or sc["output"].get("path"))
    if args.csv_out:
        row = [spec.problem, env.r, env.c, env.eps, env.lam, env.delta,
               spec.L, spec.b_cap, result.feasible,
               payload["h_o_star"], payload["b_star"], payload["beta_star"],
               None if payload["m_o_star"] is None else ";".join(str(v) for v in payload["m_o_star"]),
               payload["p_c_star"], payload["utility"]]
        _emit_text(_csv_text(SOLVE_COLUMNS, [row]), args.csv_out)
    return 0 if result.feasible else EXIT_INFEASIBLE


def _axis_values(axis: dict) -> list:
    for name in ("param", "min", "max", "step"):
        if name not in axis:
            raise CliError(f"sweep.{name}", "sweep axis field is missing")
    if axis["param"] not in ENV_FIELDS + ("L", "h_o", "b", "beta"):
        raise CliError("sweep.param", f"unknown sweep parameter {axis['param']!r}")
    step = float(axis["step"])
    if step <= 0:
        raise CliError("sweep.step", "step must be > 0")
    lo, hi = float(axis["min"]), float(axis["max"])
    values, v, i = [], lo, 0
    while v <= hi + 1e-12:
        values.append(round(v, 12))
        i += 1
        v = lo + i * step
    return values


def _apply_point(env_sec: dict, par_sec: dict, names, values):
    env_sec, par_sec = dict(env_sec), dict(par_sec)
    for name, value in zip(names, values):
        if name in ENV_FIELDS:
            env_sec[name] = value
        else:
            par_sec[name] = int(value) if name in ("L", "h_o", "b") else value
    return env_sec, par_sec


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    axes = sc["sweep"]
    if not axes:
        raise CliError("sweep", "sweep requires at least one axis")
    names = [ax["param"] for ax in axes]
    grids = [_axis_values(ax) for ax in axes]
    points = list(itertools.product(*grids))
    mode = "solve" if sc["design"].get("problem") else "analyze"

    if mode == "analyze":
        if not sc["params"]:
            raise CliError("params", "sweep in analyze mode needs a params section")

        def eval_point(values):
            env_sec, par_sec = _apply_point(sc["env"], sc["params"], names, values)
            payload = _analyze_payload(_build_params(par_sec), _build_env(env_sec))
            return list(values) + _analyze_csv_row(payload)

        header = [f"axis_{n}" for n in names] + ANALYZE_COLUMNS
    else:
        def eval_point(values):
            env_sec, par_sec = _apply_point(sc["env"], dict(), names, values)
            design_sec = dict(sc["design"])
            for name, value in zip(names, values):
                if name == "L":
                    design_sec["L"] = int(value)
            env = _build_env(env_sec)
            spec = _build_design(design_sec, env)
            result = solve(spec)
            p = result.params
            return list(values) + [
                spec.problem, env.r, env.c, env.eps, env.lam, env.delta,
                spec.L, spec.b_cap, result.feasible,
                None if p is None else p.h_o, None if p is None else p.b,
                None if p is None else p.beta,
                None if p is None else ";".join(str(v) for v in p.m_o),
                result.pC_star, result.utility]

        header = [f"axis_{n}" for n in names] + SOLVE_COLUMNS

    rows = _parallel_map(eval_point, points)
    _emit_text(_csv_text(header, rows), args.out or sc["output"].get("path"))
    return 0


SIM_SUMMARY_COLUMNS = [
    "flavor", "n_peers", "n_periods", "seed", "strategic",
    "r", "c", "eps", "lambda", "delta", "L", "h_o", "b", "beta",
    "p_reciprocative", "p_altruistic", "p_malicious",
    "mu_hat", "eta_hat", "delivery_rate", "recip_delivery_rate",
    "recip_mean_utility", "truncation_bound",
]


def _sim_summary_row(config: SimConfig, trace) -> list:
    s = trace.summary()
    mix = {k.value: v for k, v in config.population_mix.items()}
    return [config.protocol_flavor, config.n_peers, config.n_periods, config.seed,
            config.strategic, config.env.r, config.env.c, config.env.eps,
            config.env.lam, config.env.delta, config.params.L, config.params.h_o,
            config.params.b, config.params.beta,
            mix.get("reciprocative", 0.0), mix.get("altruistic", 0.0), mix.get("malicious", 0.0),
            s["final_window_mu"], _join(s["final_window_eta"]),
            s["delivery_rate"], s["recip_delivery_rate"],
            s["final_window_mean_utility"].get(trace.strategic_kind()),
            s["truncation_bound"]]


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    env = _build_env(sc["env"])
    params = _build_params(sc["params"])
    config = _build_sim(sc["sim"], params, env)
    trace = run_tft(config) if config.protocol_flavor == TFT else run_sim(config)
    payload = trace.to_json_dict()
    header = list(SIM_SUMMARY_COLUMNS)
    row = _sim_summary_row(config, trace)
    if args.compare_analytic:
        if config.protocol_flavor == TFT:
            raise CliError("sim.protocol_flavor", "analytic comparison covers the social-norm flavor")
        dist = stationary_for_regime(params, env)
        linf = float(max(abs(trace.window_eta() - dist.eta)))
        payload["analytic_comparison"] = {
            "eta_analytic": dist.eta.tolist(),
            "mu_analytic": dist.mu,
            "eta_linf": linf,
        }
        header += ["eta_linf", "mu_analytic"]
        row += [linf, dist.mu]
    if config.protocol_flavor == TFT:
        header += ["tft_sustainable"]
        row += [tft_sustainable(env, params.b,
                                config.population_mix.get(PeerKind.ALTRUISTIC, 0.0))]
    _emit_text(json.dumps(payload, sort_keys=True, indent=1),
               args.out or sc["output"].get("path"))
    if args.csv_out:
        _emit_text(_csv_text(header, [row]), args.csv_out)
    return 0


COMPARE_COLUMNS = ["axis_param", "axis_value", "flavor", "sustained",
                   "delivery_rate", "recip_delivery_rate", "recip_mean_utility",
                   "mean_social_utility"]


def _best_social_params(params: ProtocolParams, env: NetworkEnv, sim_sec: dict) -> ProtocolParams:
    """Re-optimize (h_o, b) at this grid point, keeping b within the
    configured cap and accounting for the population mix; falls back to the
    configured protocol when nothing is sustainable (it then runs collapsed)."""
    mix = sim_sec.get("population_mix") or {}
    p_c = float(mix.get("altruistic", 0.0))
    p_d = float(mix.get("malicious", 0.0))
    env_eff = env.replace(p_c=p_c, p_d=p_d)
    best = None
    for h_o in range(1, params.L + 1):
        for b in range(1, params.b + 1):
            cand = ProtocolParams(L=params.L, h_o=h_o, b=b)
            if not check_equilibrium(cand, env_eff).is_equilibrium:
                continue
            u = social_utility(cand, env_eff, stationary_for_regime(cand, env_eff))
            if best is None or u > best[0]:
                best = (u, cand)
    return params if best is None else best[1]


def cmd_compare(args) -> int:
    sc = _scenario(args)
    axes = sc["sweep"]
    if len(axes) != 1:
        raise CliError("sweep", "compare expects exactly one sweep axis")
    axis = axes[0]
    values = _axis_values(axis)
    flavors = [f.strip() for f in (args.flavors or f"{SOCIAL_NORM},{TFT}").split(",")]
    for fl in flavors:
        if fl not in (SOCIAL_NORM, TFT):
            raise CliError("flavors", f"unknown protocol flavor {fl!r}")
    if not sc["params"]:
        raise CliError("params", "compare needs a params section")
    if not sc["sim"]:
        raise CliError("sim", "compare needs a sim section")

    def eval_cell(cell):
        value, flavor = cell
        env_sec, par_sec = _apply_point(sc["env"], sc["params"], [axis["param"]], [value])
        env = _build_env(env_sec)
        params = _build_params(par_sec)
        if flavor == SOCIAL_NORM and args.optimize_social:
            params = _best_social_params(params, env, sc["sim"])
        sim_sec = dict(sc["sim"])
        sim_sec["protocol_flavor"] = flavor
        sim_sec.setdefault("strategic", True)
        config = _build_sim(sim_sec, params, env)
        trace = run_tft(config) if flavor == TFT else run_sim(config)
        s = trace.summary()
        per_kind = s["final_window_mean_utility"]
        strategic = trace.strategic_kind()
        weights = config.kind_counts()
        total = sum(weights.values())
        label = {PeerKind.RECIPROCATIVE: strategic, PeerKind.ALTRUISTIC: "altruistic",
                 PeerKind.MALICIOUS: "malicious"}
        social = sum(per_kind.get(label[k], 0.0) * weights[k] for k in weights) / total
        sustained = (tft_sustainable(env, params.b, weights[PeerKind.ALTRUISTIC] / total)
                     if flavor == TFT else
                     check_equilibrium(params, env.replace(
                         p_c=weights[PeerKind.ALTRUISTIC] / total,
                         p_d=weights[PeerKind.MALICIOUS] / total)).is_equilibrium)
        return [axis["param"], value, flavor, sustained,
                s["delivery_rate"], s["recip_delivery_rate"],
                per_kind.get(strategic), social]

    cells = [(v, fl) for v in values for fl in flavors]
    rows = _parallel_map(eval_cell, cells)
    _emit_text(_csv_text(COMPARE_COLUMNS, rows), args.out or sc["output"].get("path"))
    return 0


# --------------------------------------------------------------------- entry

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="scenario JSON file")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--csv-out", help="also write a flat CSV to this path")
    for name in ENV_FIELDS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=_attr(name), type=float)
    p.add_argument("--L", dest="L", type=int)
    p.add_argument("--h-o", dest="h_o", type=int)
    p.add_argument("--b", dest="b", type=int)
    p.add_argument("--beta", dest="beta", type=float)
    p.add_argument("--m-o", dest="m_o", help="comma-separated client thresholds for h_o..L")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="normforge",
        description="reputation-protocol design and simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="stationary profile, utilities, and verdict")
    _add_common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("check", help="incentive slacks and equilibrium verdict")
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("solve", help="solve a protocol design problem")
    _add_common(p)
    p.add_argument("--problem", choices=("OSNE", "OSNE_VP", "OSNE_VPS", "OSNE_AH"))
    p.add_argument("--b-cap", dest="b_cap", type=int)
    p.add_argument("--beta-grid", dest="beta_grid", type=float)
    p.add_argument("--p-c-grid", dest="p_c_grid", type=float)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="grid of analyze or solve rows as CSV")
    _add_common(p)
    p.add_argument("--problem", choices=("OSNE", "OSNE_VP", "OSNE_VPS", "OSNE_AH"))
    p.add_argument("--b-cap", dest="b_cap", type=int)
    p.add_argument("--beta-grid", dest="beta_grid", type=float)
    p.add_argument("--p-c-grid", dest="p_c_grid", type=float)
    p.add_argument("--sweep", action="append", help="axis as param:min:max:step")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("simulate", help="run one seeded agent-based simulation")
    _add_common(p)
    p.add_argument("--n-peers", dest="n_peers", type=int)
    p.add_argument("--n-periods", dest="n_periods", type=int)
    p.add_argument("--seed", dest="seed", type=int)
    p.add_argument("--flavor", choices=(SOCIAL_NORM, TFT))
    p.add_argument("--mix", help="population mix, e.g. reciprocative=0.9,altruistic=0.1")
    p.add_argument("--strategic", dest="strategic", action="store_true", default=None)
    p.add_argument("--compare-analytic", action="store_true",
                   help="append the sup-norm gap to the analytic stationary profile")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="social norm vs tit-for-tat along one axis")
    _add_common(p)
    p.add_argument("--n-peers", dest="n_peers", type=int)
    p.add_argument("--n-periods", dest="n_periods", type=int)
    p.add_argument("--seed", dest="seed", type=int)
    p.add_argument("--mix", help="population mix, e.g. reciprocative=0.7,altruistic=0.3")
    p.add_argument("--strategic", dest="strategic", action="store_true", default=None)
    p.add_argument("--flavors", help="comma-separated flavors (default both)")
    p.add_argument("--sweep", action="append", help="axis as param:min:max:step")
    p.add_argument("--optimize-social", action="store_true",
                   help="re-pick (h_o, b) per grid point for the social norm")
    p.set_defaults(fn=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(json.dumps({"error": {"field": exc.field, "message": exc.message}},
                         sort_keys=True))
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(json.dumps({"error": {"field": "convergence", "message": str(exc),
                                    "residual": exc.residual}}, sort_keys=True))
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
