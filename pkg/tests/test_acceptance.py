"""End-to-end acceptance checks, one test per criterion."""

import json
import math
import subprocess
import sys
import time
from itertools import pairwise

import numpy as np
import pytest
from corpus import corpus, haar_unitary, planted_H, robust_sample, symmetry_sample

from robustsym.algebra import bicommutant, commutant, is_subalgebra, sample_hermitian
from robustsym.dynamics import (
    eternal_gap,
    exponent_fit,
    finite_dim_bound,
    wandering_range,
)
from robustsym.io import write_matrix
from robustsym.kato import (
    adiabatic_invariant,
    kato_unitary,
    match_families,
    subprojections_numerical,
)
from robustsym.robustness import (
    ROBUST,
    classify,
    classify_commuting,
    completely_robust_test,
    robust_algebra,
    robust_algebra_restricted,
)
from robustsym.scenarios import (
    oscillator_alpha_exponent,
    oscillator_alpha_integral,
    oscillator_norm_ratio,
    oscillator_shift_check,
    parity_check,
    truncated_oscillator,
)
from robustsym.spectral import decompose

SWEEP = (1e-1, 1e-2, 1e-3)
S_PER_INSTANCE = 2


@pytest.fixture(scope="module")
def instances():
    return corpus(50, base_seed=1000, n_max=8)


def unit(seed, n):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def test_criterion_01_robust_wandering_vanishes_linearly(instances, acceptance):
    start = time.perf_counter()
    worst, count = np.inf, 0
    for inst in instances:
        for j in range(S_PER_INSTANCE):
            S = robust_sample(inst, 10 * inst.seed + j)
            psi = unit(inst.seed + j, len(inst.H))
            lows = [wandering_range(S, inst.H, inst.V, e, psi).lower for e in SWEEP]
            if max(lows) <= 1e-12:
                continue  # S happens to commute with H(eps): nothing wanders
            worst = min(worst, exponent_fit(SWEEP, lows)[0])
            count += 1
    elapsed = time.perf_counter() - start
    ok = worst >= 0.9 and elapsed <= 60 and count >= len(instances)
    acceptance(1, ok, f"{count} robust S, min fitted exponent {worst:.4f} (>= 0.9), {elapsed:.1f} s (<= 60 s)")


def test_criterion_02_fragile_wandering_stays_above_witness(instances, acceptance):
    worst, count = np.inf, 0
    for inst in instances:
        for j in range(S_PER_INSTANCE):
            S = symmetry_sample(inst, 10 * inst.seed + j)
            if inst.family.commutator_norms(S).max() <= 1e-3:
                continue
            v = classify(S, inst.H, inst.V, family=inst.family)
            assert v.witness is not None
            for e in (1e-2, 1e-3):
                est = wandering_range(S, inst.H, inst.V, e, v.witness.psi_n)
                worst = min(worst, est.lower / v.witness.lower_bound)
                count += 1
    ok = worst >= 0.95 and count > 0
    acceptance(2, ok, f"{count} (S, eps) points, min lower / witness bound {worst:.4f} (>= 0.95)")


def commuting_pair(rng):
    """H with planted degeneracy and Hermitian V in {H}', sometimes degenerate inside a block."""
    H, _ = planted_H(rng, n_max=6)
    dec = decompose(H)
    V = np.zeros_like(H)
    for B in dec.bases:
        r = B.shape[1]
        vals = rng.normal(size=r)
        if r > 1 and rng.random() < 0.4:
            vals[1] = vals[0]
        W = haar_unitary(rng, r)
        V += B @ W @ np.diag(vals) @ W.conj().T @ B.conj().T
    return H, (V + V.conj().T) / 2


def test_criterion_03_commuting_perturbations(acceptance):
    rng = np.random.default_rng(303)
    disagreements, robust_count = 0, 0
    for i in range(100):
        H, V = commuting_pair(rng)
        pool = commutant([H, V]) if i % 2 else commutant([H])
        S = sample_hermitian(pool, 3000 + i)
        a = classify(S, H, V).status
        b = classify_commuting(S, H, V).status
        disagreements += a != b
        robust_count += b == ROBUST
    ok = disagreements == 0
    acceptance(3, ok, f"100 draws ({robust_count} robust), {disagreements} disagreements (== 0)")


def test_criterion_04_algebra_sandwich(instances, acceptance):
    worst = 0.0
    for inst in instances:
        R = robust_algebra(inst.H, inst.V, inst.family)
        ok_low, r1 = is_subalgebra(bicommutant([inst.H]), R, 1e-7)
        ok_high, r2 = is_subalgebra(R, commutant([inst.H]), 1e-7)
        worst = max(worst, r1, r2)
        if not (ok_low and ok_high):
            worst = max(worst, 1.0)
    acceptance(4, worst <= 1e-7, f"{len(instances)} instances, worst containment residual {worst:.2e} (<= 1e-7)")


def protected_pair(rng):
    """H with planted degeneracy and J in {H}' with its own planted degeneracies."""
    H, _ = planted_H(rng, n_max=6)
    dec = decompose(H)
    cols, jvals = [], []
    for B in dec.bases:
        r = B.shape[1]
        cols.append(B @ haar_unitary(rng, r))
        jvals += list(rng.choice([-1.0, 0.0, 1.0], size=r))
    W = np.hstack(cols)
    J = W @ np.diag(jvals) @ W.conj().T
    return H, (J + J.conj().T) / 2


def restricted_run(H, Js, seed):
    res = robust_algebra_restricted(H, Js, num_samples=25, seed=seed)
    if res.matches:
        return True, 0
    return robust_algebra_restricted(H, Js, num_samples=25, seed=seed + 10_000).matches, 1


def test_criterion_05_restricted_robust_algebra(acceptance):
    rng = np.random.default_rng(505)
    hits, reseeds = 0, 0
    for i in range(20):
        H, J = protected_pair(rng)
        ok, r = restricted_run(H, [J], 5000 + i)
        hits += ok
        reseeds += r
    acceptance(5, hits == 20, f"{hits}/20 intersections equal ({{H}} u J)'' ({reseeds} reseeds)")


def test_criterion_06_completely_robust_algebra(acceptance):
    rng = np.random.default_rng(606)
    hits, reseeds = 0, 0
    for i in range(20):
        H, _ = planted_H(rng, n_max=6)
        ok, r = restricted_run(H, [np.eye(len(H))], 6000 + i)
        hits += ok
        reseeds += r
    acceptance(6, hits >= 19, f"{hits}/20 intersections equal {{H}}'' (>= 19, {reseeds} reseeds)")


def test_criterion_07_kato_machinery(instances, acceptance):
    worst_res, worst_match = 0.0, 0.0
    for inst in instances:
        for e in (0.5 * inst.eps_safe, 0.1 * inst.eps_safe, 1e-3):
            k = kato_unitary(inst.H, inst.V, e, inst.family)
            worst_res = max(worst_res, k.unitarity_residual, k.intertwining_residual)
        _, gap = match_families(inst.family, subprojections_numerical(inst.H, inst.V))
        worst_match = max(worst_match, gap)
    ok = worst_res <= 1e-8 and worst_match <= 1e-6
    acceptance(7, ok, f"U(eps) residual {worst_res:.2e} (<= 1e-8), oracle gap {worst_match:.2e} (<= 1e-6)")


def test_criterion_08_eternal_gap(instances, acceptance):
    eps = (1e-1, 3e-2, 1e-2, 3e-3)
    monotone, worst_final = True, 0.0
    for inst in instances:
        psi = unit(inst.seed, len(inst.H))
        gaps = [eternal_gap(inst.H, inst.V, e, psi, inst.family) for e in eps]
        monotone &= all(b <= 1.1 * a for a, b in pairwise(gaps))
        worst_final = max(worst_final, gaps[-1])
    ok = monotone and worst_final < 1e-2
    acceptance(8, ok, f"monotone={monotone}, worst gap at eps=3e-3 {worst_final:.2e} (< 1e-2)")


def test_criterion_09_adiabatic_invariants(instances, acceptance):
    eps = (1e-1, 1e-2, 1e-3, 1e-4)
    worst_comm, converges = 0.0, True
    for inst in instances:
        S = robust_sample(inst, inst.seed)
        dist = []
        for e in eps:
            Se = adiabatic_invariant(S, kato_unitary(inst.H, inst.V, e, inst.family))
            Heps = inst.H + e * inst.V
            worst_comm = max(worst_comm, float(np.linalg.norm(Se @ Heps - Heps @ Se)))
            dist.append(float(np.linalg.norm(Se - S)))
        converges &= all(b < a for a, b in pairwise(dist)) and dist[-1] <= 1e-2 * dist[0] + 1e-12
    ok = worst_comm <= 1e-7 and converges
    acceptance(9, ok, f"worst [S_eps, H(eps)] {worst_comm:.2e} (<= 1e-7), ||S_eps - S|| -> 0: {converges}")


def test_criterion_10_finite_dimensional_bound(instances, acceptance):
    tested, violations, outside = 0, 0, []
    for inst in instances:
        dec = decompose(inst.H)
        S = robust_sample(inst, inst.seed + 1)
        psi = unit(inst.seed + 2, len(inst.H))
        for e in SWEEP:
            lower = wandering_range(S, inst.H, inst.V, e, psi).lower
            bound = finite_dim_bound(S, inst.H, inst.V, e, dec)
            if e <= inst.eps_safe:
                tested += 1
                violations += lower > bound
            elif lower > bound:
                outside.append((inst.seed, e, lower, bound))
    for seed, e, lower, bound in outside:
        print(f"outside eps_safe: instance {seed}, eps={e:g}, lower {lower:.3e} > bound {bound:.3e}")
    acceptance(10, violations == 0,
               f"{tested} points inside eps_safe, {violations} violations, {len(outside)} logged outside")


def test_criterion_11_oscillator_alpha_family(acceptance):
    start = time.perf_counter()
    exact = 0.5 * math.pi * (1 - math.exp(-4))
    c2 = oscillator_alpha_integral(2.0, 0.1).c_alpha
    c2_err = abs(c2**2 - exact)
    exps = {a: oscillator_alpha_exponent(a, [1e-5, 1e-6, 1e-7])[1] for a in (1.5, 2.0, 2.5, 3.0)}
    exp_err = max(abs(g - (a - 1) / 2) for a, g in exps.items())
    _, _, ratio = oscillator_norm_ratio(1.05, 1e6)
    elapsed = time.perf_counter() - start
    ok = c2_err <= 1e-8 and exp_err <= 0.05 and abs(ratio - 1 / math.sqrt(2)) <= 0.1 and elapsed <= 30
    fitted = ", ".join(f"{a}:{g:.4f}" for a, g in exps.items())
    acceptance(11, ok, f"c_2 = {c2:.10f} (|c_2^2 - closed form| {c2_err:.1e}), exponents {fitted}, "
                       f"ratio {ratio:.5f}, {elapsed:.1f} s (<= 30 s)")


def test_criterion_12_oscillator_truncation(acceptance):
    shift = oscillator_shift_check(60, 0.2)["max_deviation"]
    parity = parity_check(60)
    m = truncated_oscillator(60)
    complete = completely_robust_test(m.symmetries["parity"], m.H)
    ok = shift <= 1e-6 and parity <= 1e-12 and complete
    acceptance(12, ok, f"shift deviation {shift:.1e} (<= 1e-6), parity residual {parity:.1e} (<= 1e-12), "
                       f"completely robust {complete}")


def test_criterion_13_cli_determinism(tmp_path, acceptance):
    rng = np.random.default_rng(1313)
    H, V = commuting_pair(rng)
    A = rng.normal(size=H.shape)
    V = V + 0.15 * (A + A.T)
    S = sample_hermitian(commutant([H]), 5)
    paths = {}
    for name, M in (("H", H), ("V", V), ("S", S), ("J", np.eye(len(H)))):
        paths[name] = str(tmp_path / f"{name}.json")
        write_matrix(paths[name], M)
    runs = [
        ["classify", paths["H"], paths["V"], paths["S"], "--eps-sweep", "1e-1,1e-2,1e-3"],
        ["wander", paths["H"], paths["V"], paths["S"], "--eps", "1e-2,1e-3,1e-4"],
        ["restricted", paths["H"], paths["J"], "--samples", "10"],
        ["scenario", "degenerate-diag"],
    ]
    identical = 0
    for argv in runs:
        procs = [subprocess.run([sys.executable, "-m", "robustsym.cli", "--json", "--seed", "42", *argv],
                                capture_output=True, check=False) for _ in range(2)]
        json.loads(procs[0].stdout)
        identical += (procs[0].stdout, procs[0].returncode) == (procs[1].stdout, procs[1].returncode)
    acceptance(13, identical == len(runs), f"{identical}/{len(runs)} commands byte-identical across two runs")
