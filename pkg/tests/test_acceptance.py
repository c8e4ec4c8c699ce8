"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (also collected into the
terminal summary) before asserting, so a failing criterion still reports
the numbers it measured.
"""
import math
import random
import time
from functools import reduce

import numpy as np
import pytest
from scipy.linalg import expm

from bentchain.chain import ChainSpec, bent_chain, build_hamiltonian
from bentchain.engine import (build_schedule, final_state, first_site_excited, run_ensemble,
                              run_protocol, spectral_decompose, transfer_phase)
from bentchain.errors import ErrorModel
from bentchain.experiments import min_pulse_search, peak_value
from bentchain.pauli import PauliString, conjugate, multiply
from bentchain.schemes import (complete_scheme, partial_scheme, practical_scheme, repeat_pdd,
                               scheme_by_name, to_pulses, verify_selective)

from conftest import ACCEPTANCE_LINES

PI = math.pi
pytestmark = pytest.mark.slow


def report(crit, ok, detail, elapsed, budget):
    within = elapsed <= budget
    line = (f"[{'PASS' if ok and within else 'FAIL'}] criterion {crit}: {detail} "
            f"({elapsed:.1f}s, budget {budget:.0f}s)")
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line
    assert within, line


@pytest.fixture(scope="module")
def bent10():
    return spectral_decompose(build_hamiltonian(bent_chain(10, 5)))


def protected_peak(prop, name, reps, total=2.6 * PI, samples=2000):
    seq = to_pulses(repeat_pdd(scheme_by_name(name, 10, 5), reps))
    tr = run_protocol(prop, seq, total, samples_per_period=samples)
    return peak_value(tr, 2 * PI), seq


def test_c1_perfect_transfer():
    t0 = time.perf_counter()
    worst_f, worst_phase = 0.0, 0.0
    for n in range(2, 11):
        prop = spectral_decompose(build_hamiltonian(ChainSpec(n)))
        amp = prop.evolve(first_site_excited(n), PI)[1]
        worst_f = max(worst_f, 1 - abs(amp) ** 2)
        ph = transfer_phase(prop, None, PI)
        worst_phase = max(worst_phase, abs(ph - (-1j) ** (n - 1)))
    ok = worst_f <= 1e-8 and worst_phase <= 1e-6
    report(1, ok, f"max 1-F(pi) = {worst_f:.1e} (<= 1e-8), max phase error "
           f"{worst_phase:.1e} (<= 1e-6)", time.perf_counter() - t0, 5)


def test_c2_unprotected_bent_chain(bent10):
    t0 = time.perf_counter()
    tr = run_protocol(bent10, None, 3 * PI)
    t, f = tr.first_peak(PI)
    ok = abs(f - 0.83) <= 0.01 and abs(t - PI) <= 0.3 * PI
    report(2, ok, f"F* = {f:.4f} at t = {t / PI:.3f} pi (want 0.83 +- 0.01 near pi)",
           time.perf_counter() - t0, 10)


def test_c3_complete_scheme(bent10):
    t0 = time.perf_counter()
    (t12, f12), s12 = protected_peak(bent10, "complete", 12)
    (t60, f60), s60 = protected_peak(bent10, "complete", 60)
    assert s12.nominal_count() == 48
    time_ok = all(abs(t - 2 * PI) <= 0.02 * 2 * PI for t in (t12, t60))
    ok = abs(f12 - 0.947) <= 0.005 and abs(f60 - 0.998) <= 0.003 and time_ok
    report(3, ok, f"r12: F* = {f12:.4f} at {t12 / PI:.3f} pi (want 0.947 +- 0.005); "
           f"r60: F* = {f60:.4f} at {t60 / PI:.3f} pi (want 0.998 +- 0.003); "
           f"peaks within 2% of 2 pi: {time_ok}", time.perf_counter() - t0, 60)


def test_c4_symmetrized_complete(bent10):
    t0 = time.perf_counter()
    (t, f), seq = protected_peak(bent10, "complete+sdd", 6)
    (_, fp), plain = protected_peak(bent10, "complete", 12)
    assert seq.nominal_count() == plain.nominal_count() == 48
    ok = abs(f - 0.997) <= 0.003 and f >= fp
    report(4, ok, f"sdd r6: F* = {f:.4f} (want 0.997 +- 0.003), plain r12 at 48 pulses "
           f"{fp:.4f}", time.perf_counter() - t0, 60)


def test_c5_partial_scheme(bent10):
    t0 = time.perf_counter()
    (t, f), seq = protected_peak(bent10, "partial", 5)
    assert seq.nominal_count() == 20
    ok = abs(f - 0.992) <= 0.004
    report(5, ok, f"partial r5 (20 pulses): F* = {f:.4f} (want 0.992 +- 0.004)",
           time.perf_counter() - t0, 60)


def test_c6_practical_scheme(bent10):
    t0 = time.perf_counter()
    (_, f), seq = protected_peak(bent10, "practical", 8)
    assert seq.nominal_count() == 32
    _, base = run_protocol(bent10, None, 3 * PI).first_peak(PI)
    ok = 0.95 <= f <= 1.0 and f - base >= 0.1
    # disorder: search repetitions until F* >= 0.95 for several disorder draws
    reached = []
    for beta, seed in [(0.1, 1), (0.2, 2), (0.3, 3), (0.3, 4), (0.3, 5)]:
        rng = np.random.default_rng(seed)
        chain = bent_chain(10, 5, eigenenergies=tuple(rng.uniform(-beta, beta, 10)))
        prop = spectral_decompose(build_hamiltonian(chain))
        hit = None
        for r in (8, 12, 16, 24, 32, 48):
            (_, fd), _ = protected_peak(prop, "practical", r, samples=500)
            if fd >= 0.95:
                hit = (r, fd)
                break
        reached.append((beta, seed, hit))
    ok = ok and all(h is not None for *_, h in reached)
    dis = ", ".join(f"beta={b} seed={s}: " + ("unreached" if h is None else f"r={h[0]} F*={h[1]:.3f}")
                    for b, s, h in reached)
    report(6, ok, f"practical r8: F* = {f:.4f} in [0.95, 1], gain over unprotected "
           f"{f - base:.3f} (>= 0.1); disorder {dis}", time.perf_counter() - t0, 120)


def test_c7_symbolic_verification():
    t0 = time.perf_counter()
    rnd = random.Random(7)
    failures = []
    cases = 0
    for n in range(4, 13):
        couplings = build_hamiltonian(ChainSpec(n))
        for a in range(2, n):
            g = rnd.uniform(-3, 3)
            b = rnd.uniform(-1, 1)
            full = build_hamiltonian(ChainSpec(n, 1.0, (b,) * n, a, g))
            ideal = build_hamiltonian(ChainSpec(n, 1.0, (b,) * n))
            bare = build_hamiltonian(ChainSpec(n, 1.0, None, a, g))
            noisy = build_hamiltonian(ChainSpec(n, 1.0, tuple(rnd.uniform(-1, 1) for _ in range(n)), a, g))
            for label, s, h, target in [("complete", complete_scheme(n, a), full, ideal),
                                        ("partial", partial_scheme(n, a), bare, couplings),
                                        ("practical", practical_scheme(n, a), noisy, couplings)]:
                r = verify_selective(s, h, target)
                cases += 1
                if not (r.matches_target and r.scale == 2 and not r.residual.terms):
                    failures.append((label, n, a))
    report(7, not failures, f"{cases} (scheme, N, alpha) cases with D=2 and empty residual, "
           f"failures: {failures or 'none'}", time.perf_counter() - t0, 5)


def _non_decreasing(xs):
    return all(a <= b for a, b in zip(xs, xs[1:]))


def test_c8_min_pulse_scaling():
    t0 = time.perf_counter()
    rows = min_pulse_search(range(3, 12), 0.95)
    table = {(r["scheme"], r["N"]): r["pulses_per_period"] for r in rows}
    partial = [table["partial", n] for n in range(7, 12)]
    sdd = [table["complete+sdd", n] for n in range(6, 12)]
    prac = [table["practical", n] for n in range(6, 12)]
    ok = (all(p is not None and abs(p - 12) <= 2 for p in partial)
          and None not in sdd + prac and _non_decreasing(sdd) and _non_decreasing(prac))
    report(8, ok, f"partial N=7..11 {partial} (12 +- 2); complete+sdd N=6..11 {sdd} and "
           f"practical N=6..11 {prac} (non-decreasing)", time.perf_counter() - t0, 600)


def test_c9_error_models(bent10):
    t0 = time.perf_counter()
    seq = to_pulses(repeat_pdd(practical_scheme(10, 5), 8))
    total = 2.6 * PI
    jitter = {}
    for q in (0.0, 0.1, 0.3, 0.5):
        model = ErrorModel(timing_q=q, trajectories=200, seed=2024)
        traces = run_ensemble(bent10, seq, total, model, samples_per_period=500)
        jitter[q] = float(np.mean([peak_value(t, 2 * PI)[1] for t in traces]))
        n_traj = len(traces)
    jitter_ok = (jitter[0.0] >= jitter[0.1] - 0.02
                 and jitter[0.1] > jitter[0.3] > jitter[0.5])
    theta = {}
    for c in (0.0, 0.01, 0.05, 0.2):
        tr = run_protocol(bent10, seq, total, error_model=ErrorModel(theta_coeff=c),
                          samples_per_period=2000)
        theta[c] = peak_value(tr, 2 * PI)[1]
    strong_ok = theta[0.2] <= 0.5
    weak_ok = all(theta[0.0] - theta[c] <= 0.03 for c in (0.01, 0.05))
    ok = jitter_ok and strong_ok and weak_ok
    jt = ", ".join(f"q={q}: {f:.4f}" for q, f in jitter.items())
    th = ", ".join(f"theta={c}: {f:.4f}" for c, f in theta.items())
    report(9, ok, f"jitter ({n_traj} trajectories) {jt} -> ordering {jitter_ok}; "
           f"rotation {th} -> theta=0.2 <= 0.5 {strong_ok}, theta<=0.05 within 0.03 of "
           f"theta=0 {weak_ok}", time.perf_counter() - t0, 600)


MATS = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1.0, -1.0])}


def _dense(p):
    return (1j ** p.phase) * reduce(np.kron, [MATS[f] for f in p.factors])


def test_c10_oracle_suites():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    letters = "IXYZ"
    pauli_bad = 0
    for _ in range(2000):
        n = int(rng.integers(1, 5))
        a, b = (PauliString.from_factors("".join(rng.choice(list(letters), n)),
                                         int(rng.integers(4))) for _ in range(2))
        if not np.array_equal(_dense(multiply(a, b)), _dense(a) @ _dense(b)):
            pauli_bad += 1
        if not np.array_equal(_dense(conjugate(a, b)), _dense(a).conj().T @ _dense(b) @ _dense(a)):
            pauli_bad += 1

    worst_state = 0.0
    worst_norm = 0.0
    worst_leak = 0.0
    for trial in range(30):
        n = int(rng.integers(3, 5))
        alpha = int(rng.integers(2, n))
        spec = ChainSpec(n, 1.0, tuple(rng.uniform(-1, 1, n)), alpha, float(rng.uniform(-2, 2)))
        h = build_hamiltonian(spec)
        name = ["complete", "partial", "practical", "complete+sdd"][trial % 4]
        seq = to_pulses(repeat_pdd(scheme_by_name(name, n, alpha), int(rng.integers(1, 4))))
        total = float(rng.uniform(0.5, 2 * PI))
        psi, _ = final_state(h, seq, total)
        m = h.to_dense()
        ref = first_site_excited(n)
        events = build_schedule(seq, total, PI)
        for k, (ta, p) in enumerate(events):
            tb = events[k + 1][0] if k + 1 < len(events) else total
            ref = expm(-1j * m * (tb - ta)) @ (_dense(p) @ ref)
        worst_state = max(worst_state, np.abs(psi - ref).max())
        model = ErrorModel(float(rng.uniform(0, 0.5)), float(rng.uniform(0, 0.3)))
        noisy, _ = final_state(h, seq, total, error_model=model, rng_seed=trial)
        worst_norm = max(worst_norm, abs(np.linalg.norm(noisy) - 1))
        free, _ = final_state(h, None, total)
        weight = np.array([bin(i).count("1") for i in range(1 << n)])
        worst_leak = max(worst_leak, np.abs(free[weight != 1]).max())
    ok = pauli_bad == 0 and worst_state <= 1e-8 and worst_norm <= 1e-9 and worst_leak <= 1e-12
    report(10, ok, f"Pauli vs dense mismatches {pauli_bad} (exact); protocol vs dense "
           f"expm {worst_state:.1e} (<= 1e-8); norm drift {worst_norm:.1e}; sector leak "
           f"{worst_leak:.1e}", time.perf_counter() - t0, 60)
