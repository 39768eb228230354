"""Command-line interface: ``binspike <subcommand> ...``.

Exit status is 0 on success, 2 for bad input or configuration and 3 for
numerical failures (no codebook match, solver did not converge, ...).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import analysis, baselines, io
from .codebook import build_codebook, cluster_stats, in_F_D, load_codebook, save_codebook
from .decoder import EXACT, NEAREST, decode_train, estimate_amplitude, preprocess
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateCodebookError,
    EstimationError,
    FormatError,
    InfeasibleError,
    ModelMismatchError,
    NotApplicableError,
    NotInCodebookError,
    ParameterError,
    ShapeError,
    SizeError,
)
from .fusion import denoise_low_rate, from_external, fused_decode
from .metrics import match_spikes
from .model import ArModel, Trace, n_blocks, simulate
from .sweep import FIGURES, SweepConfig, emit_figure_data, run_sweep, write_rows

log = logging.getLogger("binspike")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
CONFIG_ERRORS = (ConfigError, ParameterError, ShapeError, SizeError, FormatError, ModelMismatchError, NotApplicableError, OSError)
NUMERIC_ERRORS = (ConvergenceError, NotInCodebookError, InfeasibleError, EstimationError, DegenerateCodebookError)


def _emit_json(obj, out=None):
    text = json.dumps(obj, indent=2, default=_json_default) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _model_args(p, required=True):
    p.add_argument("--alpha", type=float, required=required, help="AR(1) pole in (0, 1)")
    p.add_argument("--D", "--decim", dest="decimation", type=int, required=required, help="decimation factor")
    p.add_argument("--amplitude", "--amp", "-A", type=float, default=None, help="spike amplitude (default 1)")


def _model(ns, fallback: ArModel | None = None) -> ArModel:
    if ns.alpha is None or ns.decimation is None:
        if fallback is None:
            raise ConfigError("--alpha and --D are required (no sidecar found)")
        return fallback if ns.amplitude is None else ArModel(fallback.alpha, ns.amplitude, fallback.decimation)
    return ArModel(ns.alpha, 1.0 if ns.amplitude is None else ns.amplitude, ns.decimation)


def _load_trace(ns) -> Trace:
    meta = io.read_sidecar(ns.trace)
    fallback = ArModel(meta["alpha"], meta["amplitude"], meta["decimation"]) if meta else None
    return io.read_trace(ns.trace, _model(ns, fallback))


def _codebook_for(ns, model):
    if getattr(ns, "codebook", None):
        return load_codebook(ns.codebook, expect=model)
    return build_codebook(model)


# subcommands ---------------------------------------------------------------


def cmd_codebook(ns):
    model = _model(ns)
    cb = build_codebook(model)
    if ns.out:
        save_codebook(cb, ns.out)
    info = {**model.to_dict(), "size": cb.size, "collision_free": cb.collision_free, "min_gap": cb.min_gap}
    if cb.collision_free:
        st = cluster_stats(cb)
        info.update(clustered=st.clustered, cluster_min_gap=st.cluster_min_gap, in_F_D=in_F_D(model.alpha, model.decimation))
    if ns.values:
        info["thetas"] = cb.thetas
        info["patterns"] = [int(v) for v in cb.perm]
    _emit_json(info)


def cmd_simulate(ns):
    model = _model(ns)
    if (ns.M is None) == (ns.L is None):
        raise ConfigError("give exactly one of --M and --L")
    m = ns.M if ns.M is not None else n_blocks(ns.L, model.decimation)
    x, trace = simulate(model, m, ns.p, ns.sigma, ns.seed)
    io.write_trace(ns.out_trace, trace, seed=ns.seed)
    if ns.out_train:
        io.write_vector(ns.out_train, x.values)
    log.info("wrote M=%d samples, %d spikes", m, x.spike_indices.size)


def cmd_decode(ns):
    trace = _load_trace(ns)
    model = trace.model
    if ns.estimate_amplitude:
        amp, cands = estimate_amplitude(preprocess(trace), model.alpha, model.decimation, tol=ns.tol)
        log.info("estimated amplitude %.6g from %d candidates", amp, len(cands))
        model = ArModel(model.alpha, amp, model.decimation)
        trace = Trace(trace.values, model, trace.noisy, trace.noise_sigma, trace.meta)
    cb = _codebook_for(ns, model)
    rep = decode_train(trace, cb, ns.mode, ns.workers)
    io.write_vector(ns.out, rep.train.values)
    if ns.report:
        _emit_json(rep.to_dict(), ns.report)


def cmd_baseline(ns):
    if ns.method == "fir-collide":
        if ns.taps is None or ns.decimation is None or ns.L is None:
            raise ConfigError("fir-collide needs --taps, --D and --L")
        taps = [float(t) for t in ns.taps.split(",")]
        u = baselines.FirFilter(taps)
        amp = 1.0 if ns.amplitude is None else ns.amplitude
        x0, x1 = baselines.fir_collision_pair(u, ns.decimation, ns.L, amp)
        io.write_columns(ns.out, {"x0": x0.values, "x1": x1.values})
        _emit_json({"max_output_difference": float(np.max(np.abs(u.decimated_output(x0, ns.decimation) - u.decimated_output(x1, ns.decimation))))})
        return
    if ns.method == "sparse-alt":
        if ns.train is None:
            raise ConfigError("sparse-alt needs --train")
        model = _model(ns)
        x = io.read_train(ns.train, model.amplitude, model.decimation)
        io.write_vector(ns.out, baselines.sparse_alternative(x, model))
        return
    if ns.trace is None:
        raise ConfigError(f"{ns.method} needs --trace")
    trace = _load_trace(ns)
    if ns.method == "l1box-exact":
        x = baselines.box_l1_noiseless(preprocess(trace), trace.model)
    else:
        eps = ns.epsilon if ns.epsilon is not None else math.sqrt(len(trace)) * trace.noise_sigma
        x = baselines.box_l1_noisy(trace, trace.model, eps, max_iter=ns.max_iter)
    if ns.binarize:
        idx = baselines.binarize(x, trace.model.amplitude)
        x = np.zeros_like(x)
        x[idx] = trace.model.amplitude
    io.write_vector(ns.out, x)


def cmd_bounds(ns):
    model = _model(ns)
    cb = build_codebook(model)
    budget = analysis.noise_budget(cb, ns.sigma)
    out = {**model.to_dict(), "sigma": ns.sigma, "M": ns.M, "min_gap": cb.min_gap, **budget.to_dict()}
    if ns.sigma > 0:
        out["error_bound"] = analysis.error_bound(cb, ns.sigma, ns.M)
        out["error_bound_strict"] = analysis.error_bound(cb, ns.sigma, ns.M, strict=True)
        if ns.p is not None:
            out["block_error_prob"] = analysis.block_error_prob(cb, ns.sigma, ns.p)
            out["train_error_prob"] = analysis.train_error_prob(cb, ns.sigma, ns.p, ns.M)
        if ns.delta is not None:
            out["snr_condition"] = analysis.snr_condition(cb, ns.sigma, ns.M, ns.delta)
            out["snr_condition_strict"] = analysis.snr_condition(cb, ns.sigma, ns.M, ns.delta, strict=True)
    _emit_json(out)


def cmd_eval(ns):
    truth = io.spike_indices(ns.truth)
    est = io.spike_indices(ns.est)
    if ns.seconds is not None:
        if ns.rate is None:
            raise ConfigError("--seconds needs --rate")
        t0 = int(round(ns.seconds * ns.rate))
    else:
        t0 = ns.t0
    res = match_spikes(truth, est, t0)
    out = {"t0": t0, **res.to_dict()}
    if not ns.pairs:
        out.pop("pairs")
    _emit_json(out)


def cmd_fuse(ns):
    trace = _load_trace(ns)
    cb = _codebook_for(ns, trace.model)
    if ns.ext_denoised:
        den = from_external(io.read_vector(ns.ext_denoised), trace.model)
        if den.x_l1.size != len(trace):
            raise ShapeError("external estimate and trace differ in length")
    else:
        lam = ns.lam if ns.lam == "auto" else float(ns.lam)
        den = denoise_low_rate(trace, lam)
        log.info("denoised with lambda=%.4g in %d iterations", den.lam, den.iterations)
    rep = fused_decode(den, cb, ns.workers)
    io.write_vector(ns.out, rep.train.values)


def _parse_grid(text, cast=float):
    if text is None:
        return None
    return [cast(v) for v in text.split(",") if v.strip()]


def cmd_sweep(ns):
    data = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
    flags = {
        "alphas": _parse_grid(ns.alphas),
        "decimations": _parse_grid(ns.decimations, int),
        "sigmas": _parse_grid(ns.sigmas),
        "ps": _parse_grid(ns.ps),
        "methods": _parse_grid(ns.methods, str),
        "length": ns.L,
        "trials": ns.trials,
        "t0": ns.t0,
        "seed": ns.seed,
        "workers": ns.workers,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    cfg = SweepConfig.from_dict(data)
    cfg.out = None
    rows = run_sweep(cfg)
    write_rows(ns.out or sys.stdout, rows)


def cmd_figure(ns):
    overrides = {"trials": ns.trials, "seed": ns.seed}
    if ns.name != "fig7":
        overrides["workers"] = ns.workers
    else:
        overrides["target_bound"] = ns.target_bound
    rows = emit_figure_data(ns.name, **overrides)
    write_rows(ns.out or sys.stdout, rows)


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="binspike", description="Binary spike recovery from decimated AR(1) traces.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codebook", help="build a codebook and report its gaps")
    _model_args(p)
    p.add_argument("--out", help="write the binary codebook here")
    p.add_argument("--values", action="store_true", help="include sorted values and patterns")
    p.add_argument("--seed", type=int, default=None, help="unused; accepted for uniformity")
    p.set_defaults(func=cmd_codebook)

    p = sub.add_parser("simulate", help="draw a spike train and its low-rate trace")
    _model_args(p)
    p.add_argument("--M", type=int, help="number of low-rate samples")
    p.add_argument("--L", type=int, help="high-rate length, (M-1)*D+1")
    p.add_argument("--p", type=float, default=0.35, help="spiking probability")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-trace", required=True)
    p.add_argument("--out-train")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decode", help="decode a trace into a binary spike train")
    p.add_argument("--trace", required=True)
    _model_args(p, required=False)
    p.add_argument("--mode", choices=[NEAREST, EXACT], default=NEAREST)
    p.add_argument("--codebook", help="prebuilt codebook file")
    p.add_argument("--estimate-amplitude", action="store_true")
    p.add_argument("--tol", type=float, default=0.5, help="amplitude-estimation tolerance")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="JSON file with counts and residuals")
    p.add_argument("--seed", type=int, default=None, help="unused; accepted for uniformity")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("baseline", help="comparison methods")
    p.add_argument("--method", required=True, choices=["l1box", "l1box-exact", "sparse-alt", "fir-collide"])
    p.add_argument("--trace")
    p.add_argument("--train")
    _model_args(p, required=False)
    p.add_argument("--epsilon", type=float, help="noise radius (default sqrt(M)*sigma)")
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--binarize", action="store_true", help="threshold at A/2")
    p.add_argument("--taps", help="comma-separated FIR taps")
    p.add_argument("--L", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="unused; accepted for uniformity")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("bounds", help="noise budgets and error probabilities as JSON")
    _model_args(p)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--M", "--m", dest="M", type=int, default=100, help="number of low-rate samples")
    p.add_argument("--p", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int, default=None, help="unused; accepted for uniformity")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("eval", help="F-score of an estimate against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--est", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t0", type=int, default=0, help="tolerance in samples")
    g.add_argument("--seconds", type=float, help="tolerance in seconds (needs --rate)")
    p.add_argument("--rate", type=float, help="high-rate sampling rate in Hz")
    p.add_argument("--pairs", action="store_true", help="list matched pairs")
    p.add_argument("--seed", type=int, default=None, help="unused; accepted for uniformity")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fuse", help="denoise the low-rate trace, then decode")
    p.add_argument("--trace", required=True)
    _model_args(p, required=False)
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--ext-denoised", help="externally denoised low-rate activity (n,value CSV)")
    p.add_argument("--codebook")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="unused; accepted for uniformity")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("sweep", help="Monte Carlo sweep to CSV")
    p.add_argument("--config", help="JSON file with SweepConfig fields; flags override it")
    p.add_argument("--alphas")
    p.add_argument("--decimations")
    p.add_argument("--sigmas")
    p.add_argument("--ps")
    p.add_argument("--methods")
    p.add_argument("--L", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--t0", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="data behind a figure, as CSV")
    p.add_argument("name", help=f"one of {', '.join([*FIGURES, 'fig7'])}")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--target-bound", type=float, help="fig7: bound value that fixes sigma")
    p.add_argument("--out")
    p.set_defaults(func=cmd_figure)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        ns.func(ns)
    except NUMERIC_ERRORS as exc:
        print(f"binspike: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CONFIG_ERRORS as exc:
        print(f"binspike: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
