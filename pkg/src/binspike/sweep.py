"""Seeded Monte Carlo sweeps and figure data.

Every trial draws its data from a generator seeded by a hash of the master
seed, the cell coordinates and the trial number, so results do not depend on
how the grid is split across workers or on the order cells finish in.  All
methods in a cell see the same trials.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import analysis
from ._backend import kernels
from .baselines import binarize, box_l1_noisy
from .codebook import build_codebook, cluster_stats
from .decoder import decode_train, estimate_counts
from .errors import ConfigError, DegenerateCodebookError
from .fusion import denoise_low_rate, fused_decode
from .metrics import count_error, match_spikes
from .model import ArModel, SpikeTrain, Trace, ar_filter, decimate

METHODS = ("nearest", "l1box", "fused")


@dataclass
class SweepConfig:
    alphas: list = field(default_factory=lambda: [0.5, 0.9])
    decimations: list = field(default_factory=lambda: list(range(2, 11)))
    sigmas: list = field(default_factory=lambda: [0.01])
    ps: list = field(default_factory=lambda: [0.35])
    length: int = 1000
    trials: int = 1000
    t0: int = 2
    seed: int = 0
    methods: list = field(default_factory=lambda: ["nearest"])
    amplitude: float = 1.0
    eps_rule: str = "oracle"
    threshold: float | None = None
    workers: int = 1
    out: str | None = None

    def validate(self):
        for name in ("alphas", "decimations", "sigmas", "ps", "methods"):
            if not getattr(self, name):
                raise ConfigError(f"grid '{name}' is empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.t0 < 0:
            raise ConfigError("t0 must be >= 0")
        if any(not 0 < a < 1 for a in self.alphas):
            raise ConfigError("alphas must lie in (0, 1)")
        if any(int(d) != d or d < 1 for d in self.decimations):
            raise ConfigError("decimations must be integers >= 1")
        if any(s < 0 for s in self.sigmas):
            raise ConfigError("sigmas must be >= 0")
        if any(not 0 <= p <= 1 for p in self.ps):
            raise ConfigError("ps must lie in [0, 1]")
        if self.length < 1:
            raise ConfigError("length must be >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}")
        if self.eps_rule not in ("oracle", "sigma-sqrt-m"):
            raise ConfigError(f"unknown eps rule {self.eps_rule!r}")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc


def trial_rng(seed: int, coords: tuple, trial: int) -> np.random.Generator:
    """Generator keyed by ``sha256(seed, coords, trial)``."""
    key = json.dumps([seed, [repr(c) for c in coords], trial]).encode()
    digest = hashlib.sha256(key).digest()
    return np.random.default_rng(np.random.SeedSequence(int.from_bytes(digest[:16], "little")))


def blocks_for_length(length: int, decimation: int) -> int:
    """Largest ``M`` with ``(M - 1) D + 1 <= length``."""
    return (length - 1) // decimation + 1


def draw(model: ArModel, m: int, p: float, sigma: float, rng):
    """Spike train, clean low-rate samples and noise for one trial."""
    length = model.high_rate_length(m)
    bits = rng.random(length) < p
    x = SpikeTrain.from_bits(bits, model)
    y = decimate(ar_filter(x, model.alpha), model.decimation)
    w = rng.normal(0.0, sigma, m) if sigma > 0 else np.zeros(m)
    return x, y, w


def _score(x: SpikeTrain, est_idx, est_counts, t0):
    mr = match_spikes(x.spike_indices, est_idx, t0)
    return {
        "f": mr.f_score,
        "precision": mr.precision,
        "recall": mr.recall,
        "count_err": count_error(estimate_counts(x), est_counts),
        "wrong": int(not np.array_equal(np.sort(est_idx), x.spike_indices)),
    }


def _block_counts(idx, length, d):
    v = np.zeros(length, dtype=bool)
    v[idx] = True
    return np.concatenate(([int(v[0])], v[1:].reshape(-1, d).sum(axis=1)))


def run_trial(model, cb, m, p, sigma, cfg: SweepConfig, rng) -> dict:
    x, y, w = draw(model, m, p, sigma, rng)
    trace = Trace(y + w, model, noisy=sigma > 0, noise_sigma=sigma)
    out = {}
    for method in cfg.methods:
        if method == "nearest":
            rep = decode_train(trace, cb)
            out[method] = _score(x, rep.train.spike_indices, rep.counts, cfg.t0)
        elif method == "fused":
            rep = fused_decode(denoise_low_rate(trace, 0.0 if sigma == 0 else "auto"), cb)
            out[method] = _score(x, rep.train.spike_indices, rep.counts, cfg.t0)
        elif method == "l1box":
            eps = float(np.linalg.norm(w)) if cfg.eps_rule == "oracle" else math.sqrt(m) * sigma
            xr = box_l1_noisy(trace, model, eps)
            idx = binarize(xr, model.amplitude, cfg.threshold)
            out[method] = _score(x, idx, _block_counts(idx, len(x), model.decimation), cfg.t0)
    return out


def theory_columns(cb, sigma, m) -> dict:
    if not cb.collision_free:
        return {"delta_theta_min": math.nan, "delta_c_min": math.nan, "error_bound": math.nan}
    stats = cluster_stats(cb)
    return {
        "delta_theta_min": cb.min_gap,
        "delta_c_min": stats.cluster_min_gap if stats.clustered else math.nan,
        "error_bound": analysis.error_bound(cb, sigma, m) if sigma > 0 else 0.0,
    }


def run_cell(cfg: SweepConfig, alpha, d, sigma, p) -> list[dict]:
    model = ArModel(alpha, cfg.amplitude, d)
    cb = build_codebook(model)
    if not cb.collision_free:
        raise DegenerateCodebookError(f"alpha={alpha}, D={d} has codebook collisions")
    m = blocks_for_length(cfg.length, d)
    coords = (alpha, d, sigma, p, cfg.length)
    per = {meth: [] for meth in cfg.methods}
    for t in range(cfg.trials):
        res = run_trial(model, cb, m, p, sigma, cfg, trial_rng(cfg.seed, coords, t))
        for meth, r in res.items():
            per[meth].append(r)
    theory = theory_columns(cb, sigma, m)
    rows = []
    for meth in cfg.methods:
        rs = per[meth]
        f = np.array([r["f"] for r in rs])
        rows.append(
            {
                "alpha": alpha,
                "D": d,
                "sigma": sigma,
                "p": p,
                "L": model.high_rate_length(m),
                "M": m,
                "trials": cfg.trials,
                "method": meth,
                "f_mean": float(f.mean()),
                "f_std": float(f.std()),
                "precision_mean": float(np.mean([r["precision"] for r in rs])),
                "recall_mean": float(np.mean([r["recall"] for r in rs])),
                "count_err_mean": float(np.mean([r["count_err"] for r in rs])),
                "train_error_rate": float(np.mean([r["wrong"] for r in rs])),
                **theory,
            }
        )
    return rows


def _cell_job(args):
    cfg, cell = args
    return run_cell(cfg, *cell)


def run_sweep(cfg: SweepConfig) -> list[dict]:
    """One row per (cell, method), ordered by cell coordinates then method."""
    cfg.validate()
    cells = sorted(itertools.product(cfg.alphas, cfg.decimations, cfg.sigmas, cfg.ps))
    jobs = [(cfg, c) for c in cells]
    if cfg.workers and cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(j) for j in jobs]
    rows = [r for rs in results for r in rs]
    if cfg.out:
        write_rows(cfg.out, rows)
    return rows


def write_rows(path_or_file, rows: list[dict]) -> None:
    if not rows:
        return
    names = list(rows[0])
    for r in rows[1:]:
        names += [k for k in r if k not in names]

    def emit(fh):
        w = csv.DictWriter(fh, names, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in names})

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


FIGURES = {
    # noiseless comparison, exact matching
    "fig2": dict(alphas=[0.5, 0.9], decimations=list(range(2, 11)), sigmas=[0.0], ps=[0.35], t0=0, methods=["nearest", "l1box"]),
    # F-score vs D at sigma = 0.01
    "fig4": dict(alphas=[0.5, 0.9], decimations=list(range(2, 11)), sigmas=[0.01], ps=[0.35], t0=2, methods=["nearest", "l1box"]),
    # F-score vs spiking probability, alpha = 0.9, D = 5
    "fig5": dict(alphas=[0.9], decimations=[5], sigmas=[0.01, 0.05, 0.1], ps=[0.1, 0.2, 0.3, 0.35, 0.4, 0.5, 0.6], t0=2, methods=["nearest", "l1box"]),
    # F-score and count error vs sigma, D = 5, p = 0.35
    "fig6": dict(alphas=[0.5, 0.9], decimations=[5], sigmas=[0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5], ps=[0.35], t0=2, methods=["nearest", "l1box"]),
}
FIG7_DEFAULTS = dict(alphas=[0.5, 0.9], decimations=list(range(2, 9)), length=100, trials=10_000, p=0.35, target_bound=0.1, sigma=None, seed=0)


def sigma_for_bound(cb, m: int, target: float) -> float:
    """Noise level at which the union bound equals ``target``."""
    s1_factor = math.sqrt(1.0 + cb.model.alpha ** (2 * cb.decimation))
    return cb.min_gap / (2.0 * s1_factor * math.sqrt(math.log(2.0 * m / target)))


def whole_train_errors(model, cb, m, p, sigma, trials, rng) -> np.ndarray:
    """Per-trial 0/1 flags: did nearest decoding get any spike wrong?"""
    bits = rng.random((trials, model.high_rate_length(m))) < p
    w = rng.normal(0.0, sigma, (trials, m))
    return batch_errors(model, cb, bits, w)


def batch_errors(model, cb, bits, w) -> np.ndarray:
    """Decode many trains at once and flag those with any wrong spike.

    ``bits`` is ``(trials, L)`` and ``w`` the ``(trials, M)`` noise.  Block
    measurements are formed directly from the spike blocks and the
    differenced noise, which equals differencing the noisy trace.
    """
    d, amp = model.decimation, model.amplitude
    trials, m = w.shape
    c_e = np.empty((trials, m))
    c_e[:, 0] = amp * bits[:, 0] + w[:, 0]
    blocks = bits[:, 1:].reshape(trials, m - 1, d)
    c_e[:, 1:] = amp * (blocks @ model.h) + w[:, 1:] - model.alpha_d * w[:, :-1]
    pos = kernels.nn_search(cb.thetas, np.ascontiguousarray(c_e[:, 1:].ravel())).reshape(trials, m - 1)
    # compare packed patterns: MSB is the earliest slot
    weights = 1 << np.arange(d - 1, -1, -1)
    true_code = blocks.astype(np.int64) @ weights
    dec_code = cb.perm[pos].astype(np.int64)
    x0_hat = np.abs(c_e[:, 0] - amp) < np.abs(c_e[:, 0])
    wrong = np.any(dec_code != true_code, axis=1) | (x0_hat != bits[:, 0].astype(bool))
    return wrong.astype(np.int8)


def fig7_rows(alphas=None, decimations=None, length=100, trials=10_000, p=0.35, target_bound=0.1, sigma=None, seed=0):
    """Empirical whole-train error of nearest decoding against the union bounds."""
    alphas = alphas or FIG7_DEFAULTS["alphas"]
    decimations = decimations or FIG7_DEFAULTS["decimations"]
    rows = []
    for alpha in alphas:
        for d in decimations:
            model = ArModel(alpha, 1.0, d)
            cb = build_codebook(model)
            m = blocks_for_length(length, d)
            s = sigma if sigma is not None else sigma_for_bound(cb, m, target_bound)
            rng = trial_rng(seed, ("fig7", alpha, d, s, p, length), 0)
            wrong = whole_train_errors(model, cb, m, p, s, trials, rng)
            emp = float(wrong.mean())
            rows.append(
                {
                    "alpha": alpha,
                    "D": d,
                    "sigma": s,
                    "p": p,
                    "L": model.high_rate_length(m),
                    "M": m,
                    "trials": trials,
                    "empirical": emp,
                    "stderr": math.sqrt(emp * (1 - emp) / trials),
                    "bound": analysis.error_bound(cb, s, m),
                    "bound_strict": analysis.error_bound(cb, s, m, strict=True),
                    "predicted": analysis.train_error_prob(cb, s, p, m),
                }
            )
    return rows


def emit_figure_data(name: str, out=None, **overrides) -> list[dict]:
    """Rows behind one of the synthetic figures; written as CSV to ``out``."""
    if name == "fig7":
        params = {k: v for k, v in FIG7_DEFAULTS.items()}
        for k, v in overrides.items():
            if v is not None:
                if k not in params:
                    raise ConfigError(f"fig7 does not take '{k}'")
                params[k] = v
        rows = fig7_rows(**params)
    elif name in FIGURES:
        base = dict(FIGURES[name])
        base.update({k: v for k, v in overrides.items() if v is not None})
        try:
            cfg = SweepConfig.from_dict(base)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.out = None
        rows = run_sweep(cfg)
    else:
        raise ConfigError(f"unknown figure {name!r}; choose from {sorted([*FIGURES, 'fig7'])}")
    if out is not None:
        write_rows(out, rows)
    return rows
