"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are collected in a
summary section) or ``python3 tests/test_acceptance.py`` for the lines alone.
"""
import math
import os
import sys
import time

import numpy as np
import pytest

from binspike.analysis import block_error_prob, error_bound, noise_budget
from binspike.baselines import FirFilter, box_l1_noiseless, box_l1_noisy, fir_collision_pair, sparse_alternative
from binspike.codebook import build_codebook, cluster_stats, in_F_D
from binspike.decoder import decode_block_nn, decode_c, decode_train, estimate_amplitude, estimate_counts, preprocess
from binspike.metrics import count_error, match_spikes
from binspike.model import ArModel, SpikeTrain, Trace, build_system_matrices, measure, simulate
from binspike.sweep import SweepConfig, batch_errors, blocks_for_length, run_sweep, sigma_for_bound, trial_rng

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

pytestmark = pytest.mark.acceptance
WORKERS = min(4, os.cpu_count() or 1)


def report(num, title, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] C{num}: {title}" + (f" ({detail})" if detail else "")
    key = tuple(int(p) if p.isdigit() else p for p in str(num).replace("b", ".b").split("."))
    ACCEPTANCE_LINES.append((key, line))
    print(line)
    return passed


# 1 -------------------------------------------------------------------------


def test_c1_noiseless_exactness():
    start = time.perf_counter()
    worst = 1.0
    for alpha in (0.5, 0.9):
        for d in range(2, 11):
            model = ArModel(alpha, 1.0, d)
            cb = build_codebook(model)
            m = blocks_for_length(1000, d)
            for t in range(200):
                x, z = simulate(model, m, 0.35, 0.0, trial_rng(1, (alpha, d), t))
                est = decode_train(z, cb).train.spike_indices
                worst = min(worst, match_spikes(x.spike_indices, est, 0).f_score)
    elapsed = time.perf_counter() - start
    ok = worst == 1.0 and elapsed <= 60
    report(1, "noiseless nearest decode has F = 1 in every trial", ok, f"min F={worst}, 3600 trials, {elapsed:.1f}s")
    assert ok


# 2 -------------------------------------------------------------------------


def _exhaustive_nn(q, model):
    d = model.decimation
    k = np.arange(2**d)
    bits = (k[:, None] >> np.arange(d - 1, -1, -1)) & 1
    vals = model.amplitude * bits @ model.h
    return bits[np.argmin(np.abs(q[:, None] - vals), axis=1)] * model.amplitude


def test_c2_brute_force_oracle():
    mismatches = 0
    cells = 0
    rng = np.random.default_rng(2)
    for alpha in (0.5, 0.7, 0.9):
        for d in range(1, 11):
            model = ArModel(alpha, 1.0, d)
            cb = build_codebook(model)
            q = rng.uniform(-0.1 * cb.theta_max, 1.1 * cb.theta_max, 1000)
            want = _exhaustive_nn(q, model)
            got = np.array([decode_block_nn(v, cb)[0] for v in q])
            mismatches += int(np.any(got != want, axis=1).sum())
            cells += 1
    ok = mismatches == 0
    report(2, "decode_block_nn equals exhaustive argmin", ok, f"{mismatches} mismatches over {cells} x 1000 inputs")
    assert ok


# 3 -------------------------------------------------------------------------


def test_c3_min_gap_closed_form():
    worst = 0.0
    for alpha in np.round(np.arange(1, 11) * 0.05, 2):
        for d in range(1, 13):
            cb = build_codebook(ArModel(float(alpha), 1.0, d))
            worst = max(worst, abs(cb.min_gap - alpha ** (d - 1)))
    ok = worst <= 1e-12
    report(3, "enumerated min gap equals alpha**(D-1)", ok, f"max deviation {worst:.2e}")
    assert ok


# 4 -------------------------------------------------------------------------


def test_c4_bounded_noise_recovery():
    failures = 0
    for alpha in (0.5, 0.9):
        for d in range(2, 9):
            model = ArModel(alpha, 1.0, d)
            cb = build_codebook(model)
            r = cb.min_gap / 4 - 1e-9
            for t in range(500):
                rng = trial_rng(4, (alpha, d), t)
                x, y = simulate(model, 50, 0.35, 0.0, rng)
                if t % 2:
                    # alternating signs maximise |w[n] - alpha**D w[n-1]|
                    w = r * np.where(np.arange(len(y)) % 2, 1.0, -1.0) * rng.choice([-1.0, 1.0])
                else:
                    w = r * rng.choice([-1.0, 1.0], len(y))
                rep = decode_train(Trace(y.values + w, model), cb)
                failures += not np.array_equal(rep.train.values, x.values)
    ok = failures == 0
    report(4, "exact recovery under |w| = gap/4 - 1e-9", ok, f"{failures} failures in 7000 trials")
    assert ok


def _boundary_instance(alpha, d, s):
    """Block whose true value is a codebook entry and whose lower neighbour wins.

    Noise ``+s`` on the previous sample and ``-s`` on the current one moves
    the block measurement down by ``(1 + alpha**D) s``.
    """
    model = ArModel(alpha, 1.0, d)
    cb = build_codebook(model)
    j = int(np.argmin(np.diff(cb.thetas))) + 1
    truth = np.concatenate(([0.0], cb.pattern(j)))
    x = SpikeTrain(truth, 1.0, d)
    y = measure(x, model).values
    w = np.array([s, -s])
    rep = decode_train(Trace(y + w, model), cb)
    return not np.array_equal(rep.train.values, x.values), cb


def test_c4b_boundary_failure():
    # failure needs (1 + alpha**D) * |w| >= gap / 2, so noise of 1.01 gap/4
    # can only break decoding when alpha**D >= 2 / 1.01 - 1 ~ 0.980
    alpha, d = 0.995, 2
    cb = build_codebook(ArModel(alpha, 1.0, d))
    failed, _ = _boundary_instance(alpha, d, 1.01 * cb.min_gap / 4)
    # on the robustness grid, show failure just above the reachable threshold
    grid_fail = all(
        _boundary_instance(a, dd, 1.01 * build_codebook(ArModel(a, 1.0, dd)).min_gap / (2 * (1 + a**dd)))[0]
        for a in (0.5, 0.9)
        for dd in range(2, 9)
    )
    ok = failed and grid_fail
    report(
        "4b",
        "constructed failure at |w| = 1.01 gap/4",
        ok,
        f"alpha={alpha}, D={d} fails: {failed}; grid fails at 1.01 gap/(2(1+alpha^D)): {grid_fail}",
    )
    assert ok


# 5 -------------------------------------------------------------------------


def test_c5_count_recovery():
    model = ArModel(0.9, 1.0, 5)
    cb = build_codebook(model)
    stats = cluster_stats(cb)
    r = stats.cluster_min_gap / 4 - 1e-9
    count_errors = 0
    pattern_misses = 0
    for t in range(500):
        rng = trial_rng(5, (0.9, 5), t)
        x, y = simulate(model, 100, 0.35, 0.0, rng)
        w = r * rng.choice([-1.0, 1.0], len(y))
        rep = decode_train(Trace(y.values + w, model), cb)
        count_errors += count_error(estimate_counts(x), rep.counts)
        pattern_misses += match_spikes(x.spike_indices, rep.train.spike_indices, 0).f_score < 1
    # alpha = 0.5, D = 5: counts are not clustered; same-size noise changes counts
    half = build_codebook(ArModel(0.5, 1.0, 5))
    k = half.counts()
    adj = np.flatnonzero(np.diff(k) != 0)
    j = int(adj[np.argmin(np.diff(half.thetas)[adj])]) + 1
    x = SpikeTrain(np.concatenate(([0.0], half.pattern(j))), 1.0, 5)
    s = 1.01 * (half.thetas[j] - half.thetas[j - 1]) / (2 * (1 + 0.5**5))
    rep = decode_train(Trace(measure(x, half.model).values + [s, -s], half.model), half)
    counter = count_error(estimate_counts(x), rep.counts) > 0
    ok = (
        in_F_D(0.9, 5)
        and count_errors == 0
        and pattern_misses > 0
        and not in_F_D(0.5, 5)
        and noise_budget(half).count_recovery_bound is None
        and counter
        and s < r
    )
    report(
        5,
        "count recovery for alpha=0.9, D=5; counterexample for alpha=0.5",
        ok,
        f"count errors {count_errors}, trials with F<1: {pattern_misses}/500; alpha=0.5 count error at |w|={s:.4f} < {r:.4f}",
    )
    assert ok


# 6 -------------------------------------------------------------------------

C6_TARGETS = (1e-3, 1e-2, 1e-1, 0.5)


@pytest.mark.xfail(
    strict=True,
    reason="the union bound with exponent gap**2/(4 sigma1**2) does not dominate the error rate; "
    "a valid bound needs /8 (Q(x) <= exp(-x**2/2)). See README, 'Known deviations'.",
)
def test_c6_bound_dominance():
    start = time.perf_counter()
    trials = 10_000
    violations = []
    strict_violations = 0
    cells = 0
    for alpha in (0.5, 0.9):
        for d in range(2, 9):
            model = ArModel(alpha, 1.0, d)
            cb = build_codebook(model)
            m = blocks_for_length(100, d)
            for target in C6_TARGETS:
                sigma = sigma_for_bound(cb, m, target)
                rng = trial_rng(6, (alpha, d, target), 0)
                bits = rng.random((trials, model.high_rate_length(m))) < 0.35
                w = rng.normal(0.0, sigma, (trials, m))
                emp = batch_errors(model, cb, bits, w).mean()
                se = math.sqrt(emp * (1 - emp) / trials)
                bound = error_bound(cb, sigma, m)
                cells += 1
                if emp > bound + 3 * se:
                    violations.append((alpha, d, target, round(float(emp), 4)))
                if emp > error_bound(cb, sigma, m, strict=True) + 3 * se:
                    strict_violations += 1
    elapsed = time.perf_counter() - start
    ok = not violations and elapsed <= 300
    report(
        6,
        "empirical whole-train error <= error_bound + 3 SE",
        ok,
        f"{len(violations)}/{cells} cells violate, e.g. {violations[:3]}; "
        f"strict /8 bound violated in {strict_violations}/{cells}; {elapsed:.1f}s",
    )
    assert ok


# 7 -------------------------------------------------------------------------


def test_c7_exact_block_error():
    alpha, d, sigma, p = 0.9, 3, 0.02, 0.35
    model = ArModel(alpha, 1.0, d)
    cb = build_codebook(model)
    n = 100_000
    rng = np.random.default_rng(7)
    bits = (rng.random((n, d)) < p).astype(float)
    w = rng.normal(0.0, sigma, (n, 2))
    c = bits @ model.h + w[:, 1] - model.alpha_d * w[:, 0]
    rep = decode_c(np.concatenate(([0.0], c)), cb)
    wrong = np.any(rep.train.blocks != bits, axis=1)
    freq = wrong.mean()
    se = math.sqrt(freq * (1 - freq) / n)
    pe = block_error_prob(cb, sigma, p)
    ok = abs(freq - pe) <= 3 * se
    report(7, "block_error_prob matches Monte Carlo", ok, f"p_e={pe:.5f}, MC={freq:.5f} +- {se:.5f}")
    assert ok


# 8 -------------------------------------------------------------------------


def test_c8_sparse_alternative():
    rng = np.random.default_rng(8)
    worst = 0.0
    denser = 0
    not_sparser = 0
    same = 0
    done = 0
    while done < 500:
        alpha = float(rng.uniform(0.1, 0.95))
        d = int(rng.integers(2, 9))
        model = ArModel(alpha, float(rng.uniform(0.5, 3)), d)
        m = int(rng.integers(2, 20))
        x, _ = simulate(model, m, float(rng.uniform(0.1, 0.7)), 0.0, rng)
        if not x.values[1:].any():
            continue  # only A*e_1 or the empty train; no alternative exists
        v = sparse_alternative(x, model)
        _, _, h = build_system_matrices(model, m)
        worst = max(worst, float(np.max(np.abs(h @ v - h @ x.values))))
        nv, nx = np.count_nonzero(v), np.count_nonzero(x.values)
        denser += nv > nx
        same += np.array_equal(v, x.values)
        if np.any(np.count_nonzero(x.blocks, axis=1) >= 2):
            not_sparser += nv >= nx
        done += 1
    ok = worst <= 1e-9 and denser == 0 and not_sparser == 0 and same == 0
    report(8, "sparse alternative fits, never denser, strictly sparser with a multi-spike block", ok, f"max residual {worst:.1e}, 500 trains")
    assert ok


# 9 -------------------------------------------------------------------------


def test_c9_box_l1_closed_form():
    rng = np.random.default_rng(9)
    worst = 0.0
    non_suffix = 0
    for _ in range(100):
        alpha = float(rng.choice([0.5, 0.7, 0.9]))
        d = int(rng.integers(2, 9))
        m = int(rng.integers(2, (200 - 1) // d + 2))
        model = ArModel(alpha, 1.0, d)
        x, y = simulate(model, m, 0.35, 0.0, rng)
        closed = box_l1_noiseless(preprocess(y), model)
        iterative = box_l1_noisy(y, model, 0.0)
        worst = max(worst, float(np.max(np.abs(closed - iterative))))
        for blk in closed[1:].reshape(-1, d):
            nz = np.flatnonzero(blk > 1e-12)
            if nz.size and not np.array_equal(nz, np.arange(d - nz.size, d)):
                non_suffix += 1
    ok = worst <= 1e-5 and non_suffix == 0
    report(9, "closed-form box-l1 equals iterative solver; suffix supports", ok, f"max |diff| {worst:.1e}, non-suffix blocks {non_suffix}")
    assert ok


# 10 ------------------------------------------------------------------------


def test_c10_fir_collision():
    rng = np.random.default_rng(10)
    worst = 0.0
    identical = 0
    for r in range(1, 6):
        for d in range(r + 1, r + 5):
            u = FirFilter(rng.uniform(-1, 2, r))
            x0, x1 = fir_collision_pair(u, d, 6 * d + 1)
            identical += np.array_equal(x0.values, x1.values)
            worst = max(worst, float(np.max(np.abs(u.decimated_output(x0, d) - u.decimated_output(x1, d)))))
    ok = worst <= 1e-12 and identical == 0
    report(10, "FIR collision pairs give equal decimated outputs", ok, f"max |diff| {worst:.1e}")
    assert ok


# 11 ------------------------------------------------------------------------


def test_c11_trends():
    # (a) nearest beats box-l1 on average over D at sigma = 0.01
    rows = run_sweep(
        SweepConfig(alphas=[0.5, 0.9], decimations=list(range(2, 11)), sigmas=[0.01], ps=[0.35], length=1000, trials=50, t0=2, seed=11, methods=["nearest", "l1box"], workers=WORKERS)
    )
    dominance = {}
    for a in (0.5, 0.9):
        nn = np.mean([r["f_mean"] for r in rows if r["alpha"] == a and r["method"] == "nearest"])
        l1 = np.mean([r["f_mean"] for r in rows if r["alpha"] == a and r["method"] == "l1box"])
        dominance[a] = (round(float(nn), 4), round(float(l1), 4))
    ok_a = all(nn > l1 for nn, l1 in dominance.values())

    # (b) F-score flat in p for nearest mode, at each fixed sigma
    rows = run_sweep(
        SweepConfig(alphas=[0.9], decimations=[5], sigmas=[0.01, 0.05, 0.1], ps=[0.1, 0.2, 0.3, 0.35, 0.4, 0.5, 0.6], length=1000, trials=200, t0=2, seed=12, workers=WORKERS)
    )
    spread = {}
    for s in (0.01, 0.05, 0.1):
        f = np.array([r["f_mean"] for r in rows if r["sigma"] == s])
        spread[s] = round(float(np.max(np.abs(f - f.mean()))), 4)
    ok_b = all(v <= 0.05 for v in spread.values())

    # (c) count error: alpha=0.9 stays 0 where alpha=0.5 already errs
    sigmas = [0.005, 0.01, 0.015, 0.02, 0.03]
    rows = run_sweep(SweepConfig(alphas=[0.5, 0.9], decimations=[5], sigmas=sigmas, ps=[0.35], length=1000, trials=200, t0=2, seed=13, workers=WORKERS))
    ce = {(r["alpha"], r["sigma"]): r["count_err_mean"] for r in rows}
    erring = [s for s in sigmas if ce[(0.5, s)] > 0]
    ok_c = bool(erring) and all(ce[(0.9, s)] == 0 for s in erring)

    ok = ok_a and ok_b and ok_c
    report(
        11,
        "trend reproduction",
        ok,
        f"(a) mean F nearest vs l1box {dominance}; (b) max deviation in p per sigma {spread}; "
        f"(c) alpha=0.5 errs at sigma {erring}, alpha=0.9 count error there {[ce[(0.9, s)] for s in erring]}",
    )
    assert ok


# 12 ------------------------------------------------------------------------


def test_c12_amplitude_estimation():
    exact = {}
    close = {}
    for amp in (0.5, 2.0, 3.0):
        model = ArModel(0.9, amp, 5)
        hits_exact = hits_close = 0
        for t in range(100):
            _, z = simulate(model, 200, 0.35, 0.0, trial_rng(12, (amp, 0.0), t))
            a, _ = estimate_amplitude(preprocess(z), 0.9, 5, tol=0.5)
            hits_exact += abs(a - amp) <= 1e-9
            _, z = simulate(model, 200, 0.35, 0.01, trial_rng(12, (amp, 0.01), t))
            try:
                a, _ = estimate_amplitude(preprocess(z), 0.9, 5, tol=0.5)
                hits_close += abs(a - amp) <= 0.05 * amp
            except ValueError:
                pass
        exact[amp] = hits_exact
        close[amp] = hits_close
    ok = all(v == 100 for v in exact.values()) and all(v >= 95 for v in close.values())
    report(12, "amplitude estimation", ok, f"sigma=0 exact hits {exact}; sigma=0.01 within 5% {close}")
    assert ok


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
