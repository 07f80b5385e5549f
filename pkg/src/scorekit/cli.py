"""Command-line entry point: ``scorekit <command> [--spec run.json] [--key value ...]``.

Each command has a table of defaults. A JSON spec file may override any of
them, and every key can also be overridden by a flag of the same name (dashes
instead of underscores, values parsed as JSON with a plain-string fallback).
Every run writes ``manifest.json`` with the resolved configuration, the
library version and the module-level defaults it relied on.

Exit codes: 0 success, 1 I/O or unreadable spec, 2 domain precondition,
3 solver failure. On failure an error JSON is printed to stderr and, when the
output directory is writable, saved as ``error.json``.

Set SCOREKIT_THREADS to cap BLAS/OpenMP threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")

DATA_KEYS = {"data": None, "recipe": "gaussian", "n": 500}

DEFAULTS = {
    "fit-sm": {
        **DATA_KEYS,
        "seed": 0,
        "activation": "relu",
        "skip": False,
        "beta": None,
        "beta_offset": 1.0,
        "t": 0.0,
        "grid_points": 101,
        "grid_margin": 0.1,
        "save_program": False,
        "tol": 1e-8,
        "max_iters": 200_000,
    },
    "fit-dsm": {
        **DATA_KEYS,
        "seed": 0,
        "epsilon": 1.0,
        "label_sign": -1,
        "activation": "relu",
        "beta": 0.5,
        "grid_points": 101,
        "grid_margin": 0.1,
        "tol": 1e-8,
        "max_iters": 200_000,
    },
    "sample": {
        **DATA_KEYS,
        "seed": 0,
        "model": "zero",
        "params_path": None,
        "mean": 0.0,
        "var": 1.0,
        "activation": "relu",
        "beta": None,
        "beta_offset": 1.0,
        "t": 0.0,
        "eta": None,
        "steps": 500,
        "chains": 1000,
        "init": {"kind": "uniform", "lo": -10.0, "hi": 10.0},
        "record": "final",
        "hist_bins": 50,
    },
    "baseline": {
        **DATA_KEYS,
        "seed": 0,
        "objective": "dsm",
        "epsilon": 1.0,
        "label_sign": -1,
        "activation": "relu",
        "skip": False,
        "beta": 0.5,
        "epochs": 200,
        "learning_rates": [1.0, 1e-2, 1e-6],
        "runs": 1,
        "m": None,
        "blowup_factor": 100.0,
        "undertrained_margin": 0.1,
    },
    "spiral": {
        "seed": 0,
        "n_points": 100,
        "sigmas": [0.5, 0.1, 0.05, 0.03, 0.01],
        "steps": [5, 5, 5, 5, 15],
        "num_samples": 500,
        "copies": 5,
        "anchors": 100,
        "lambda_fraction": 1e-3,
        "step_constant": 1.0,
        "max_iters": 2000,
        "init_lo": -10.0,
        "init_hi": 10.0,
    },
}

HELP = {
    "fit-sm": "Solve the univariate score-matching program and reconstruct the network.",
    "fit-dsm": "Solve the univariate denoising score-matching lasso.",
    "sample": "Run Langevin Monte Carlo with a chosen score model.",
    "baseline": "Train two-layer networks with Adam over a learning-rate sweep.",
    "spiral": "Fit per-level wedge predictors on a 2-D spiral and run annealed Langevin.",
}

EPILOG = {
    "fit-sm": "outputs: data.csv (x); y_star.csv (index,y); score_grid.csv (x,score,closed_form); "
              "params.json; fit.json; program_A.csv and program_b.csv with save_program. "
              "beta=null means beta = ||b||_inf - beta_offset. recipes: gaussian (n standard normal "
              "draws), mixture (n/2 draws around -10 and +10).",
    "fit-dsm": "outputs: noisy.csv (x,label); y_star.csv (index,y); score_grid.csv (x,score); params.json; "
               "fit.json. labels are label_sign * delta / epsilon; -1 gives the score of the noise kernel.",
    "sample": "outputs: trace.csv (chain,step,x); histogram.csv (bin_left,count); summary.json. "
              "model: zero | linear (score -(x-mean)/var) | closed_form | fit_sm | params (params_path). "
              "eta=null uses 1e-3 * n v / (n - beta) for data models and 0.01 otherwise.",
    "baseline": "outputs: loss_curves.csv (lr,run,epoch,loss); runs.csv "
                "(lr,run,final_loss,peak_loss,diverged,blow_up); summary.json.",
    "spiral": "outputs: clean.csv (x,y); snapshots.csv (level,sigma,sample,x,y); "
              "distances.csv (level,sigma,mean_nn_distance); spiral.json.",
}


TRICHOTOMY = ["converged", "diverged", "undertrained"]


class ConfigError(ValueError):
    pass


def _apply_thread_cap():
    cap = os.environ.get("SCOREKIT_THREADS")
    if cap:
        for var in THREAD_VARS:
            os.environ[var] = cap


def _flag_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scorekit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"scorekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name], description=HELP[name], epilog=EPILOG[name])
        p.add_argument("--spec", type=Path, help="JSON file with configuration overrides")
        p.add_argument("--out", type=Path, default=Path("scorekit_out"), help="output directory")
        for key, val in defaults.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, type=_flag_value, default=None,
                           metavar="VALUE", help=f"default: {json.dumps(val)}")
    return parser


def resolve_config(command, args) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS[command]))
    if args.spec is not None:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        if not isinstance(spec, dict):
            raise ConfigError("spec file must hold a JSON object")
        unknown = sorted(set(spec) - set(cfg))
        if unknown:
            raise ConfigError(f"unknown keys for {command}: {unknown}")
        cfg.update(spec)
    for key in DEFAULTS[command]:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def module_defaults() -> dict:
    from . import baseline, core, dsmnd, prox, samplers, sm1d, smnd

    return {
        "core": {"duplicate_tol": core.DUPLICATE_TOL, "rank_rtol": core.RANK_RTOL},
        "prox": {"tol": prox.DEFAULT_TOL, "max_iters": prox.DEFAULT_MAX_ITERS, "method": "monotone FISTA with restart",
                 "power_iters": prox.POWER_ITERS, "working_set_min": prox.WORKING_SET_MIN},
        "sm1d": {"relu_bias_shift": f"{sm1d.RELU_EPS} * max(1, max|x|)", "min_beta": sm1d.MIN_BETA, "t": 0.0},
        "smnd": {"mask_tol": smnd.MASK_TOL, "dykstra_sweeps": smnd.DYKSTRA_SWEEPS},
        "dsmnd": {"lambda_rule": f"{dsmnd.DEFAULT_LAMBDA_FRACTION} * max_j ||K_j^T L||_2"},
        "samplers": {"eta_scale": samplers.ETA_SCALE, "eta_rule": "eta_scale * n v / (n - beta)",
                     "annealed_eta_rule": "eta_k = eta * (sigma_k / sigma_last)^2",
                     "rng": "Philox keyed by (seed, chain)", "chunk": samplers.CHUNK},
        "baseline": {"adam_beta1": baseline.ADAM_BETA1, "adam_beta2": baseline.ADAM_BETA2,
                     "adam_eps": baseline.ADAM_EPS, "init": "normal(0, 1/sqrt(m))", "m": "4n"},
    }


# ---------------------------------------------------------------- data


def _rng(seed, stream):
    import numpy as np

    return np.random.default_rng([int(seed), stream])


def load_points_1d(cfg):
    import numpy as np

    from .core import load_dataset_1d, make_dataset_1d

    if cfg.get("data"):
        return load_dataset_1d(cfg["data"])
    n = int(cfg["n"])
    rng = _rng(cfg["seed"], 0)
    if cfg["recipe"] == "gaussian":
        return make_dataset_1d(rng.standard_normal(n))
    if cfg["recipe"] == "mixture":
        half = n // 2
        return make_dataset_1d(np.concatenate([rng.normal(-10.0, 1.0, half), rng.normal(10.0, 1.0, n - half)]))
    raise ConfigError(f"unknown recipe {cfg['recipe']!r}")


def noisy_pairs(data, cfg):
    """Perturbed points x + eps * delta and labels label_sign * delta / eps."""
    eps = float(cfg["epsilon"])
    if not eps > 0:
        from .errors import BadEpsilon

        raise BadEpsilon(f"epsilon must be positive, got {eps}")
    delta = _rng(cfg["seed"], 1).standard_normal(data.n)
    return data.points + eps * delta, float(cfg["label_sign"]) * delta / eps


def _grid(points, cfg):
    import numpy as np

    lo, hi = float(points.min()), float(points.max())
    pad = float(cfg["grid_margin"]) * (hi - lo)
    return np.linspace(lo - pad, hi + pad, int(cfg["grid_points"]))


def _require_converged(sol, what):
    from .errors import NotConverged, UnboundedObjective
    from .prox import Status

    if sol.status is Status.UNBOUNDED:
        raise UnboundedObjective(f"{what}: objective is unbounded below")
    if sol.status is not Status.CONVERGED:
        raise NotConverged(f"{what}: stopped after {sol.iterations} iterations, KKT residual {sol.kkt_residual:.3e}")


def _sm_beta(data, arch_kw, cfg):
    """Resolve beta, defaulting to ||b||_inf - beta_offset."""
    import numpy as np

    from .core import ArchitectureConfig
    from .sm1d import build_sm_program

    if cfg["beta"] is not None:
        return float(cfg["beta"]), None
    probe = build_sm_program(data, ArchitectureConfig(beta=0.0, **arch_kw), enforce_beta=False)
    b_inf = float(np.abs(probe.b_lin).max())
    return b_inf - float(cfg["beta_offset"]), b_inf


# ---------------------------------------------------------------- commands


def cmd_fit_sm(cfg, out):
    import numpy as np

    from .artifacts import write_csv, write_json
    from .core import ArchitectureConfig
    from .errors import DomainError
    from .sm1d import closed_form_score, compute_beta_thresholds, fit_sm, fitted_t

    data = load_points_1d(cfg)
    arch_kw = {"activation": cfg["activation"], "skip": bool(cfg["skip"])}
    beta, _ = _sm_beta(data, arch_kw, cfg)
    arch = ArchitectureConfig(beta=beta, **arch_kw)
    fit = fit_sm(data, arch, tol=float(cfg["tol"]), max_iters=int(cfg["max_iters"]))
    _require_converged(fit.solution, "fit-sm")
    files = []
    files.append(write_csv(out / "data.csv", ["x"], ((x,) for x in data.points)))
    files.append(write_csv(out / "y_star.csv", ["index", "y"], enumerate(fit.y_star)))
    grid = _grid(data.points, cfg)
    score = fit.score(grid)
    try:
        closed = closed_form_score(data, arch, float(cfg["t"]))(grid)
    except DomainError:
        closed = np.full(grid.shape, np.nan)
    files.append(write_csv(out / "score_grid.csv", ["x", "score", "closed_form"], zip(grid, score, closed)))
    files.append(write_json(out / "params.json", fit.params.to_dict()))
    info = {"variant": arch.variant, "beta": beta, "n": data.n, "mu": data.mu, "v": data.v,
            "objective": fit.objective, "kkt_residual": fit.solution.kkt_residual,
            "iterations": fit.solution.iterations, "status": fit.solution.status.value,
            "nonzero": int(np.count_nonzero(fit.y_star))}
    if not arch.skip:
        th = fit.thresholds or compute_beta_thresholds(data, arch)
        info.update(b_inf=th.b_inf, beta_low=th.beta_low, interior_slope=(beta - data.n) / (data.n * data.v))
        if th.beta_low < beta <= th.b_inf:
            info["fitted_t"] = fitted_t(fit.y_star, data, arch)
    files.append(write_json(out / "fit.json", info))
    if cfg["save_program"]:
        files.append(write_csv(out / "program_A.csv", [f"c{j}" for j in range(fit.program.k)], fit.program.A))
        files.append(write_csv(out / "program_b.csv", ["index", "b"], enumerate(fit.program.b_lin)))
    return files, info


def cmd_fit_dsm(cfg, out):
    import numpy as np

    from .artifacts import write_csv, write_json
    from .dsm1d import dsm_intercept, fit_dsm

    data = load_points_1d(cfg)
    x, labels = noisy_pairs(data, cfg)
    fit = fit_dsm(x, labels, float(cfg["epsilon"]), cfg["activation"], float(cfg["beta"]),
                  tol=float(cfg["tol"]), max_iters=int(cfg["max_iters"]))
    _require_converged(fit.solution, "fit-dsm")
    files = [write_csv(out / "noisy.csv", ["x", "label"], zip(x, labels)),
             write_csv(out / "y_star.csv", ["index", "y"], enumerate(fit.y_star))]
    grid = _grid(x, cfg)
    files.append(write_csv(out / "score_grid.csv", ["x", "score"], zip(grid, fit.score(grid))))
    files.append(write_json(out / "params.json", fit.params.to_dict()))
    info = {"variant": cfg["activation"], "beta": float(cfg["beta"]), "epsilon": float(cfg["epsilon"]),
            "n": int(x.size), "objective": fit.objective, "kkt_residual": fit.solution.kkt_residual,
            "iterations": fit.solution.iterations, "status": fit.solution.status.value,
            "intercept": dsm_intercept(fit.y_star, fit.program), "nonzero": int(np.count_nonzero(fit.y_star))}
    files.append(write_json(out / "fit.json", info))
    return files, info


def _init_from(spec):
    from .samplers import FromPoints, Gaussian, Uniform

    spec = dict(spec)
    kind = spec.pop("kind", "uniform")
    if kind == "uniform":
        return Uniform(float(spec.get("lo", -1.0)), float(spec.get("hi", 1.0)))
    if kind == "gaussian":
        return Gaussian(float(spec.get("mean", 0.0)), float(spec.get("sd", 1.0)))
    if kind == "points":
        return FromPoints(tuple(map(float, spec["points"])))
    raise ConfigError(f"unknown init kind {kind!r}")


def _score_model(cfg):
    """Return (score callable on (B, 1) arrays, default eta, extra summary fields)."""
    import numpy as np

    from .core import ArchitectureConfig, TwoLayerParams, evaluate_network
    from .samplers import default_eta, make_target_density
    from .sm1d import fit_sm

    model = cfg["model"]
    if model == "zero":
        return (lambda X: np.zeros_like(X)), 0.01, {}
    if model == "linear":
        mean, var = float(cfg["mean"]), float(cfg["var"])
        if not var > 0:
            raise ConfigError("var must be positive")
        return (lambda X: -(X - mean) / var), 0.01, {"target_mean": mean, "target_var": var}
    if model == "params":
        if not cfg["params_path"]:
            raise ConfigError("model 'params' needs params_path")
        params = TwoLayerParams.from_dict(json.loads(Path(cfg["params_path"]).read_text(encoding="utf-8"))).pruned()
        return (lambda X: evaluate_network(params, X[:, 0])[:, None]), 0.01, {}
    if model in ("closed_form", "fit_sm"):
        data = load_points_1d(cfg)
        arch_kw = {"activation": cfg["activation"], "skip": False}
        beta, _ = _sm_beta(data, arch_kw, cfg)
        extra = {"beta": beta, "mu": data.mu, "v": data.v, "n": data.n}
        if model == "closed_form":
            target = make_target_density(data, beta, float(cfg["t"]), cfg["activation"])
            fn = target.score
            extra["interior_variance"] = target.interior_variance
        else:
            fit = fit_sm(data, ArchitectureConfig(beta=beta, **arch_kw))
            _require_converged(fit.solution, "sample/fit_sm")
            params = fit.params.pruned()
            fn = lambda x: evaluate_network(params, x)  # noqa: E731
            extra["interior_variance"] = data.n * data.v / (data.n - beta)
        return (lambda X: fn(X[:, 0])[:, None]), default_eta(data.n, data.v, beta), extra
    raise ConfigError(f"unknown model {model!r}")


def cmd_sample(cfg, out):
    import numpy as np

    from .artifacts import write_csv, write_json
    from .samplers import ChainConfig, run_lmc

    score, eta0, extra = _score_model(cfg)
    eta = float(cfg["eta"]) if cfg["eta"] is not None else eta0
    chain_cfg = ChainConfig(eta, int(cfg["steps"]), int(cfg["chains"]), _init_from(cfg["init"]),
                            int(cfg["seed"]), 1, cfg["record"])
    trace = run_lmc(score, chain_cfg)
    C, T, _ = trace.shape
    first_step = 1 if cfg["record"] == "all" else chain_cfg.steps_T
    rows = ((c, first_step + s, trace[c, s, 0]) for c in range(C) for s in range(T))
    files = [write_csv(out / "trace.csv", ["chain", "step", "x"], rows)]
    final = trace[:, -1, 0]
    counts, edges = np.histogram(final, bins=int(cfg["hist_bins"]))
    files.append(write_csv(out / "histogram.csv", ["bin_left", "count"], zip(edges[:-1], counts)))
    info = {"eta": eta, "chains": C, "steps": chain_cfg.steps_T, "final_mean": float(final.mean()),
            "final_var": float(final.var()), **extra}
    files.append(write_json(out / "summary.json", info))
    return files, info


def classify_sweep(finals, margin):
    """Label each learning rate diverged / converged / undertrained.

    finals maps lr -> best final loss over runs. Non-finite means diverged; the
    reference is the lowest finite final loss, and a finite run more than
    ``margin`` (relative) above it is undertrained.
    """
    import math

    finite = [v for v in finals.values() if math.isfinite(v)]
    ref = min(finite) if finite else math.nan
    labels = {}
    for lr, v in finals.items():
        if not math.isfinite(v):
            labels[lr] = "diverged"
        elif v > ref + margin * abs(ref):
            labels[lr] = "undertrained"
        else:
            labels[lr] = "converged"
    return labels


def cmd_baseline(cfg, out):
    import numpy as np

    from .artifacts import write_csv, write_json
    from .baseline import TrainConfig, adam_train
    from .core import ArchitectureConfig
    from .dsm1d import fit_dsm
    from .sm1d import fit_sm

    data = load_points_1d(cfg)
    objective = cfg["objective"]
    arch = ArchitectureConfig(cfg["activation"], bool(cfg["skip"]), float(cfg["beta"]))
    if objective == "dsm":
        x, labels = noisy_pairs(data, cfg)
        convex = fit_dsm(x, labels, float(cfg["epsilon"]), arch.activation, arch.beta)
        train_data = x
    elif objective == "sm":
        labels = None
        convex = fit_sm(data, arch)
        train_data = data
    else:
        raise ConfigError(f"unknown objective {objective!r}")
    _require_converged(convex.solution, "baseline convex reference")
    curves, run_rows, best = [], [], {}
    factor = float(cfg["blowup_factor"])
    for lr in cfg["learning_rates"]:
        lr = float(lr)
        best[lr] = np.inf
        for r in range(int(cfg["runs"])):
            tc = TrainConfig(lr, int(cfg["epochs"]), cfg["m"], int(cfg["seed"]) + r, objective, arch)
            res = adam_train(tc, train_data, labels)
            curves.extend((lr, r, e, v) for e, v in enumerate(res.loss_curve))
            finite = res.loss_curve[np.isfinite(res.loss_curve)]
            peak = float(finite.max()) if finite.size else np.inf
            blow_up = bool(res.diverged or peak > factor * max(abs(res.loss_curve[0]), 1e-300))
            run_rows.append((lr, r, res.final_loss, peak, res.diverged, blow_up))
            if np.isfinite(res.final_loss):
                best[lr] = min(best[lr], res.final_loss)
            elif best[lr] == np.inf:
                best[lr] = np.nan
    for lr in best:
        if best[lr] == np.inf:
            best[lr] = np.nan
    labels_by_lr = classify_sweep(best, float(cfg["undertrained_margin"]))
    # diagnostic only: treat a run whose loss blew up as diverged
    blown = {lr: (np.nan if any(row[5] for row in run_rows if row[0] == lr) else v) for lr, v in best.items()}
    with_blowup = classify_sweep(blown, float(cfg["undertrained_margin"]))
    files = [write_csv(out / "loss_curves.csv", ["lr", "run", "epoch", "loss"], curves),
             write_csv(out / "runs.csv", ["lr", "run", "final_loss", "peak_loss", "diverged", "blow_up"], run_rows)]
    finals = [row[2] for row in run_rows if np.isfinite(row[2])]
    info = {
        "objective": objective,
        "convex_optimum": convex.objective,
        "best_final_by_lr": {repr(lr): v for lr, v in best.items()},
        "classification": {repr(lr): lab for lr, lab in labels_by_lr.items()},
        "blow_up_by_lr": {repr(lr): any(row[5] for row in run_rows if row[0] == lr) for lr in best},
        "trichotomy": sorted(set(labels_by_lr.values())) == TRICHOTOMY,
        "classification_counting_blow_up": {repr(lr): lab for lr, lab in with_blowup.items()},
        "lower_bound_holds": bool(not finals or convex.objective <= min(finals) + 1e-6),
        "optimizer": TrainConfig().metadata(),
    }
    files.append(write_json(out / "summary.json", info))
    return files, info


def cmd_spiral(cfg, out):
    from .artifacts import write_csv, write_json
    from .spiral import SpiralConfig, run_spiral

    scfg = SpiralConfig(**{k: v for k, v in cfg.items()})
    res = run_spiral(scfg)
    files = [write_csv(out / "clean.csv", ["x", "y"], res.clean)]
    rows = ((lvl + 1, scfg.sigmas[lvl], i, p[0], p[1]) for lvl, S in enumerate(res.snapshots) for i, p in enumerate(S))
    files.append(write_csv(out / "snapshots.csv", ["level", "sigma", "sample", "x", "y"], rows))
    files.append(write_csv(out / "distances.csv", ["level", "sigma", "mean_nn_distance"],
                           ((k + 1, s, d) for k, (s, d) in enumerate(zip(scfg.sigmas, res.distances)))))
    info = {"initial_distance": res.initial_distance, "distances": res.distances, "final_distance": res.final_distance,
            "decreasing_transitions": res.decreasing_transitions, "step_sizes": res.step_sizes,
            "levels": [m.summary() for m in res.models]}
    files.append(write_json(out / "spiral.json", info))
    return files, {**info, "fit_seconds": res.fit_seconds, "sample_seconds": res.sample_seconds}


COMMANDS = {"fit-sm": cmd_fit_sm, "fit-dsm": cmd_fit_dsm, "sample": cmd_sample,
            "baseline": cmd_baseline, "spiral": cmd_spiral}


def _error_payload(exc, code) -> dict:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("step", "chain"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    return payload


def _exit_code(exc) -> int:
    from .errors import SolverError

    if isinstance(exc, SolverError):
        return 3
    if isinstance(exc, (OSError, json.JSONDecodeError)):
        return 1
    if isinstance(exc, (ValueError, TypeError, KeyError)):
        return 2
    raise exc


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        cfg = resolve_config(args.command, args)
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        files, info = COMMANDS[args.command](cfg, out)
        from .artifacts import to_jsonable, write_json

        manifest = {"command": args.command, "version": __version__, "config": cfg,
                    "defaults": module_defaults(), "outputs": sorted(Path(f).name for f in files)}
        write_json(out / "manifest.json", manifest)
        info = {**info, "seconds": time.perf_counter() - start, "out": str(out)}
        print(json.dumps(to_jsonable(info), sort_keys=True))
        return 0
    except Exception as exc:  # noqa: BLE001 - mapped to documented exit codes
        code = _exit_code(exc)
        payload = _error_payload(exc, code)
        text = json.dumps(payload, sort_keys=True)
        print(text, file=sys.stderr)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
        return code


if __name__ == "__main__":
    sys.exit(main())
