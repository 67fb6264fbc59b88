"""Acceptance gate: one test per release criterion.

Each test prints a single [PASS]/[FAIL] line with the measured margin
before asserting, so a verbose run gives one verdict per criterion.
"""

import json
import math
import time

import numpy as np
import pytest

from cycshift.analysis import SEPARABLE_BOUND, detect, gisin_bmax, ppt_test
from cycshift.bloch import BipartiteState, decompose
from cycshift.chsh import (
    MeasurementSettings,
    chsh_expectation,
    chsh_from_bloch,
    measurement_matrix,
    run_protocol,
)
from cycshift.cli import main
from cycshift.cyclic import (
    apply_cyclic,
    commutant_basis,
    d_max,
    make_cyclic,
    phase_cyclic,
    shift_correlation,
    shift_direct,
)
from cycshift.operators import partial_trace, tensor
from cycshift.states import (
    bell_state,
    cc5050,
    haar_state_vector,
    haar_unitary,
    sample_random_state,
    sample_separable,
    schmidt_state,
    werner_state,
)

SEPARABLE_SAMPLE_SEED = 20260819
SEPARABLE_SAMPLE_SIZE = 10_000


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def separable_sample():
    return [
        state
        for state, _ in sample_separable(
            SEPARABLE_SAMPLE_SEED, count=SEPARABLE_SAMPLE_SIZE
        )
    ]


def random_density(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = g @ g.conj().T
    return rho / rho.trace().real


def random_cyclic(state, rng):
    structure = commutant_basis(state)
    blocks = [haar_unitary(size, rng) for size in structure.block_sizes]
    return make_cyclic(state, blocks, structure=structure)


def bell_diagonal_state(rng):
    """Random mixture of the four maximally entangled basis states."""
    s = 1.0 / math.sqrt(2.0)
    vecs = np.array([
        [s, 0.0, 0.0, s],
        [s, 0.0, 0.0, -s],
        [0.0, s, s, 0.0],
        [0.0, s, -s, 0.0],
    ], dtype=complex)
    weights = rng.dirichlet(np.ones(4))
    rho = sum(w * np.outer(v, v.conj()) for w, v in zip(weights, vecs))
    return BipartiteState(rho, (2, 2))


def block_structured_23_state(rng):
    """A (2, 3) state whose B marginal has one doubly degenerate level."""
    q1 = rng.uniform(0.2, 0.45)
    weights = (q1, q1, 1.0 - 2.0 * q1)
    basis = haar_unitary(3, rng)
    rho = np.zeros((6, 6), dtype=complex)
    for i, w in enumerate(weights):
        proj = np.outer(basis[:, i], basis[:, i].conj())
        rho += w * tensor(random_density(2, rng), proj)
    return BipartiteState(rho, (2, 3))


def test_criterion_01_pure_state_shift_law():
    t0 = time.perf_counter()
    worst_law = 0.0
    worst_max = 0.0
    for k1 in np.linspace(0.0, 1.0, 101):
        k1 = float(k1)
        k2 = math.sqrt(max(0.0, 1.0 - k1 * k1))
        state = schmidt_state(k1, k2)
        for phi in np.linspace(0.0, 2.0 * math.pi, 50):
            unit = phase_cyclic(state, float(phi))
            want = 2.0 * abs(k1 * k2 * math.sin(phi / 2.0))
            worst_law = max(worst_law, abs(shift_direct(state, unit) - want))
        worst_max = max(worst_max, abs(d_max(state).d - 2.0 * k1 * k2))
    elapsed = time.perf_counter() - t0
    ok = worst_law <= 1e-9 and worst_max <= 1e-6 and elapsed < 10.0
    report(
        "criterion 1 (pure-state shift law on 101x50 grid)",
        ok,
        f"law residual {worst_law:.3e} (<=1e-9), "
        f"max-shift residual {worst_max:.3e} (<=1e-6), {elapsed:.1f}s (<10s)",
    )


def test_criterion_02_maximal_shift_reference_values():
    bell_err = abs(d_max(bell_state()).d - 1.0)
    worst_werner = 0.0
    for p in np.linspace(0.0, 1.0, 11):
        worst_werner = max(
            worst_werner, abs(d_max(werner_state(float(p))).d - float(p))
        )
    ok = bell_err <= 1e-8 and worst_werner <= 1e-6
    report(
        "criterion 2 (reference maximal shifts)",
        ok,
        f"bell residual {bell_err:.3e} (<=1e-8), "
        f"werner grid residual {worst_werner:.3e} (<=1e-6)",
    )


def test_criterion_03_uncorrelated_states_cannot_move():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(500):
        vec_a = haar_state_vector(2, rng)
        vec_b = haar_state_vector(2, rng)
        joint = np.kron(vec_a, vec_b)
        state = BipartiteState(np.outer(joint, joint.conj()), (2, 2))
        worst = max(worst, d_max(state).d)
    for _ in range(200):
        state = BipartiteState(
            tensor(random_density(2, rng), random_density(2, rng)), (2, 2)
        )
        worst = max(worst, d_max(state).d)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 60.0
    report(
        "criterion 3 (700 uncorrelated states)",
        ok,
        f"largest maximal shift {worst:.3e} (<1e-8), {elapsed:.1f}s (<60s)",
    )


def test_criterion_04_separable_bound(separable_sample):
    t0 = time.perf_counter()
    worst = 0.0
    for state in separable_sample:
        worst = max(worst, d_max(state).d)
    cc_gap = abs(d_max(cc5050()).d - SEPARABLE_BOUND)
    elapsed = time.perf_counter() - t0
    ok = (
        worst <= SEPARABLE_BOUND + 1e-6
        and cc_gap <= 1e-8
        and elapsed < 600.0
    )
    report(
        "criterion 4 (separable bound on 10^4 samples)",
        ok,
        f"largest shift {worst:.9f} (<= {SEPARABLE_BOUND + 1e-6:.9f}), "
        f"bound attained within {cc_gap:.3e} (<=1e-8), {elapsed:.0f}s (<600s)",
    )


def _formula_pairs():
    rng = np.random.default_rng(211)
    for state in sample_random_state(307, dims=(2, 2), count=600):
        yield state, random_cyclic(state, rng)
    for _ in range(400):
        state = bell_diagonal_state(rng)
        yield state, random_cyclic(state, rng)
    for state in sample_random_state(311, dims=(2, 3), count=300):
        yield state, random_cyclic(state, rng)
    for _ in range(200):
        state = block_structured_23_state(rng)
        yield state, random_cyclic(state, rng)


def test_criterion_05_shift_formula_equivalence():
    worst = 0.0
    count = 0
    for state, unit in _formula_pairs():
        form = decompose(state)
        gap = abs(shift_direct(state, unit) - shift_correlation(form, unit))
        worst = max(worst, gap)
        count += 1
    ok = worst <= 1e-9 and count == 1500
    report(
        "criterion 5 (two shift formulas on 1000+500 pairs)",
        ok,
        f"largest disagreement {worst:.3e} (<=1e-9) over {count} pairs",
    )


def test_criterion_06_invariants_of_cyclic_operations():
    worst_marginal = 0.0
    worst_norm = 0.0
    checked = 0
    for state, unit in _formula_pairs():
        if checked >= 300:
            break
        checked += 1
        final = apply_cyclic(state, unit)
        for side in ("A", "B"):
            before = partial_trace(state.rho, state.dims, side)
            after = partial_trace(final.rho, state.dims, side)
            worst_marginal = max(worst_marginal, np.max(np.abs(after - before)))
        form = decompose(state)
        form_f = decompose(final)
        worst_norm = max(
            worst_norm, abs(form_f.beta_norm - form.beta_norm)
        )
    ok = worst_marginal <= 1e-10 and worst_norm <= 1e-10
    report(
        "criterion 6 (marginals and correlation norm preserved)",
        ok,
        f"marginal drift {worst_marginal:.3e} (<=1e-10), "
        f"norm drift {worst_norm:.3e} (<=1e-10) over {checked} pairs",
    )


def test_criterion_07_pure_state_chsh_ceiling():
    rng = np.random.default_rng(401)
    worst = 0.0
    for _ in range(200):
        vec = haar_state_vector(4, rng)
        state = BipartiteState(np.outer(vec, vec.conj()), (2, 2))
        via_shift = gisin_bmax(state)
        evals = np.linalg.eigvalsh(decompose(state).beta.T @ decompose(state).beta)
        via_correlations = 2.0 * math.sqrt(evals[1] + evals[2])
        worst = max(worst, abs(via_shift - via_correlations))
    bell_err = abs(gisin_bmax(bell_state()) - 2.0 * math.sqrt(2.0))
    ok = worst <= 1e-9 and bell_err <= 1e-9
    report(
        "criterion 7 (CHSH ceiling from the maximal shift)",
        ok,
        f"form disagreement {worst:.3e} (<=1e-9) on 200 pure states, "
        f"bell residual {bell_err:.3e}",
    )


def _random_unit(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def test_criterion_08_chsh_identities_and_protocol():
    rng = np.random.default_rng(503)
    worst_identity = 0.0
    states = list(sample_random_state(509, dims=(2, 2), count=50))
    for _ in range(1000):
        state = states[int(rng.integers(0, len(states)))]
        settings = MeasurementSettings(
            alice_1=_random_unit(rng), alice_2=_random_unit(rng),
            bob_1=_random_unit(rng), bob_2=_random_unit(rng),
        )
        f_meas = chsh_expectation(state, settings)
        f_bloch = chsh_from_bloch(
            decompose(state).beta, measurement_matrix(settings)
        )
        worst_identity = max(worst_identity, abs(f_meas - f_bloch))

    worst_protocol = 0.0
    for case in range(100):
        kind = case % 5
        if kind in (0, 1):
            k1 = float(rng.uniform(0.2, 0.93))
            state = schmidt_state(k1, math.sqrt(1.0 - k1 * k1))
            unit = phase_cyclic(state, float(rng.uniform(0.4, 5.9)))
        elif kind in (2, 3):
            state = werner_state(float(rng.uniform(0.25, 1.0)))
            unit = phase_cyclic(
                state, float(rng.uniform(0.4, 5.9)), axis=_random_unit(rng)
            )
        else:
            state = bell_state()
            unit = haar_unitary(2, rng)
        transcript = run_protocol(state, unit, restarts=2, rng=rng)
        gap = abs(transcript.estimated_d - shift_direct(state, unit))
        worst_protocol = max(worst_protocol, gap)
    ok = worst_identity <= 1e-10 and worst_protocol <= 1e-6
    report(
        "criterion 8 (CHSH contraction identity and reconstruction)",
        ok,
        f"identity residual {worst_identity:.3e} (<=1e-10) on 1000 draws, "
        f"protocol residual {worst_protocol:.3e} (<=1e-6) on 100 runs",
    )


def test_criterion_09_detector_soundness(separable_sample):
    false_alarms = 0
    for state in separable_sample:
        rep = detect(state)
        if (
            rep.classification == "entangled-certified"
            or rep.bound_violated
            or rep.ppt_negative
        ):
            false_alarms += 1

    werner_rep = detect(werner_state(0.5))
    werner_ok = werner_rep.ppt_negative and not werner_rep.bound_violated

    violators = 0
    missed = 0
    mixed_ranks = (
        list(sample_random_state(601, dims=(2, 2), count=400))
        + list(sample_random_state(607, dims=(2, 2), rank=2, count=300))
        + list(sample_random_state(613, dims=(2, 2), rank=1, count=300))
    )
    for state in mixed_ranks:
        d_value = d_max(state).d
        if d_value > SEPARABLE_BOUND + 1e-6:
            violators += 1
            _, entangled = ppt_test(state)
            if not entangled:
                missed += 1
    ok = false_alarms == 0 and werner_ok and missed == 0 and violators > 0
    report(
        "criterion 9 (detector soundness)",
        ok,
        f"{false_alarms} false alarms on 10^4 separable states, "
        f"werner:0.5 flagged by PPT without a bound violation: {werner_ok}, "
        f"{violators} bound violators in 1000 random states, {missed} missed by PPT",
    )


def test_criterion_10_scan_is_reproducible(tmp_path):
    args = ["scan", "--family", "separable", "--count", "1000", "--seed", "42"]
    path_1 = tmp_path / "run1.csv"
    path_2 = tmp_path / "run2.csv"
    code_1 = main(args + ["--out", str(path_1)])
    code_2 = main(args + ["--out", str(path_2)])
    identical = path_1.read_bytes() == path_2.read_bytes()
    ok = code_1 == 0 and code_2 == 0 and identical
    report(
        "criterion 10 (scan reproducibility)",
        ok,
        f"exit codes {code_1}/{code_2}, byte-identical: {identical}",
    )
