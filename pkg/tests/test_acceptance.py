"""Acceptance criteria, one test each. Every test prints a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (or ``python tests/test_acceptance.py``).
Reference setting: m = omega = hbar = 1 on [-12, 12]^2 with 512 samples per axis.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from phasewig import exprlang as el
from phasewig.cli import main
from phasewig.numgrid import square_grid
from phasewig.schrod import (
    PolynomialPotential,
    cross_pairing_residuals,
    equivalence_sweep,
    solve_config,
)
from phasewig.states import (
    OscillatorParams,
    gaussian_packet,
    oscillator_eigenstate,
    oscillator_factor_state,
)
from phasewig.symcalc import (
    CANONICAL,
    NotClosedError,
    OneForm,
    PathPolyline,
    broken_connection,
    canonical_connection,
    canonical_omega_coefficient,
    canonical_theta,
    commutator_residual,
    connection_from_generating,
    d_of_oneform,
    exterior_d,
    gauge_shift_connection,
    gauge_shift_theta,
    integrability_residual,
    line_integral,
    random_band_limited_field,
    random_polylines,
    random_smooth_expr,
)
from phasewig.wigner import (
    covariant_wigner,
    marginals,
    negativity_report,
    wigner_direct,
    wigner_tegmen,
)

SEED = 20240601
N = 512
UNIT = OscillatorParams(1.0, 1.0)
V = PolynomialPotential.harmonic()


def report(capsys, label: str, items: list[tuple[str, float, str, float]]) -> bool:
    """Print one line for the criterion; items are (name, value, op, threshold)."""
    ok = all(np.isfinite(v) and (v < t if op == "<" else v >= t) for _, v, op, t in items)
    detail = "; ".join(f"{n}={v:.3e} {op} {t:g}" for n, v, op, t in items)
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return ok


@pytest.fixture(scope="module")
def grid():
    return square_grid(12.0, N)


@pytest.fixture(scope="module")
def oscillators(grid):
    return [oscillator_eigenstate(n, UNIT, grid) for n in range(5)]


@pytest.fixture(scope="module")
def directs(oscillators):
    return [wigner_direct(psi) for psi in oscillators]


@pytest.fixture(scope="module")
def random_f():
    rng = np.random.default_rng(SEED)
    return [random_smooth_expr(rng) for _ in range(5)]


@pytest.fixture(scope="module")
def pairs(grid):
    return solve_config(V, 1.0, grid, 6)


def test_c01_heisenberg_algebra(grid, random_f, capsys):
    rng = np.random.default_rng(SEED + 1)
    fields = [random_band_limited_field(rng, grid) for _ in range(20)]
    conns = [canonical_connection(grid)] + [connection_from_generating(f, grid) for f in random_f]
    worst = max(commutator_residual(A, t) / np.max(np.abs(t.envelope)) for A in conns for t in fields)
    bad = broken_connection(grid)
    mask = grid.interior_mask(0.1)
    broken = min(commutator_residual(bad, t) / (grid.hbar * np.max(np.abs(t.envelope)[mask])) for t in fields)
    assert report(
        capsys,
        "C1 Heisenberg algebra",
        [("generated", worst, "<", 1e-7), ("broken/(hbar*scale)", broken, ">=", 0.5)],
    )


def test_c02_direct_vs_integral_free(grid, directs, capsys):
    err = max(
        float(np.max(np.abs(wigner_tegmen(oscillator_factor_state(n, UNIT, 1.0), grid).values - directs[n].values))) for n in range(5)
    )
    assert report(
        capsys,
        "C2 direct vs integral-free Wigner, n=0..4",
        [("max_abs_diff", err, "<", 1e-7)],
    )


def test_c03_direct_vs_covariant(oscillators, directs, capsys):
    err = max(float(np.max(np.abs(covariant_wigner(psi, "p*q").values - W.values))) for psi, W in zip(oscillators, directs))
    assert report(
        capsys,
        "C3 direct vs covariant Wigner (f = pq), n=0..4",
        [("max_abs_diff", err, "<", 1e-7)],
    )


def test_c04_analytic_oracles(grid, directs, capsys):
    q, p = grid.mesh()
    ground = float(np.max(np.abs(directs[0].values - np.exp(-(q**2) - p**2) / np.pi)))
    rep = negativity_report(directs[1])
    n1_val = abs(rep.min_value + 1 / np.pi)
    n1_loc = float(np.hypot(*rep.min_location))
    assert report(
        capsys,
        "C4 analytic Wigner oracles",
        [
            ("ground_max_abs", ground, "<", 1e-8),
            ("n1_min_value_err", n1_val, "<", 1e-6),
            ("n1_min_location", n1_loc, "<", 1e-6),
        ],
    )


def test_c05_wigner_properties(grid, oscillators, directs, capsys):
    packet = gaussian_packet(1.5, -1.0, 0.9, grid)
    norm = marg = imag = 0.0
    for psi, W in zip(oscillators + [packet], directs + [wigner_direct(packet)]):
        norm = max(norm, abs(W.total() - 1.0))
        mq, mp = marginals(W)
        marg = max(
            marg,
            float(np.max(np.abs(mq - np.abs(psi.samples) ** 2))),
            float(np.max(np.abs(mp - np.abs(psi.momentum_amplitude()) ** 2))),
        )
        imag = max(imag, W.imag_discarded)
    assert report(
        capsys,
        "C5 Wigner normalization, marginals, realness",
        [
            ("normalization", norm, "<", 1e-6),
            ("marginals", marg, "<", 1e-6),
            ("imag_discarded", imag, "<", 1e-8),
        ],
    )


def test_c06_harmonic_spectrum(pairs, capsys):
    err = max(abs(pr.energy - (n + 0.5)) / (n + 0.5) for n, pr in enumerate(pairs))
    assert report(capsys, "C6 harmonic spectrum n<=5", [("max_rel_err", err, "<", 1e-8)])


def test_c07_phase_space_equivalence(grid, random_f, capsys):
    canon = max(r.phase_residual for r in equivalence_sweep(V, 1.0, grid, [CANONICAL], 5))
    rows = equivalence_sweep(V, 1.0, grid, random_f, 3)
    rand = max(np.inf if r.error else r.phase_residual for r in rows)
    R = cross_pairing_residuals(V, 1.0, grid, [CANONICAL, "0", random_f[0]], 2)
    cross = float(np.max(R[~np.eye(3, dtype=bool)]))
    assert report(
        capsys,
        "C7 phase-space Schrodinger equivalence",
        [
            ("f=pq/2, n<=4", canon, "<", 1e-6),
            ("5 random f", rand, "<", 1e-5),
            ("cross-paired max", cross, ">=", 1e-2),
        ],
    )


def test_c08_integrability(grid, random_f, capsys):
    rng = np.random.default_rng(SEED + 8)
    generated = [connection_from_generating(f, grid) for f in [el.parse(CANONICAL), el.ZERO] + random_f]
    integ = max(float(np.max(np.abs(integrability_residual(A)))) for A in generated)
    preserved = 0.0
    for A in generated:
        before = integrability_residual(A)
        for _ in range(2):
            after = integrability_residual(gauge_shift_connection(A, random_smooth_expr(rng, canonical=False)))
            preserved = max(preserved, float(np.max(np.abs(after - before))))
    wrong = gauge_shift_connection(generated[0], CANONICAL, use_exterior_d=True)
    broken = float(np.max(np.abs(integrability_residual(wrong))))
    assert report(
        capsys,
        "C8 integrability",
        [
            ("generated", integ, "<", 1e-8),
            ("d'-shift change", preserved, "<", 1e-10),
            ("d-shift violation", broken, ">=", 0.5),
        ],
    )


def test_c09_gauge_algebra(grid, capsys):
    rng = np.random.default_rng(SEED + 9)
    err = 0.0
    for _ in range(10):
        f0 = random_smooth_expr(rng)
        f = random_smooth_expr(rng, canonical=False)
        lhs = gauge_shift_connection(connection_from_generating(f0, grid), f)
        rhs = connection_from_generating(el.sub(f0, f), grid)
        err = max(
            err,
            float(np.max(np.abs(lhs.a_q - rhs.a_q))),
            float(np.max(np.abs(lhs.a_p - rhs.a_p))),
        )
    assert report(capsys, "C9 gauge algebra, 10 pairs", [("max_component_diff", err, "<", 1e-10)])


def test_c10_symplectic_geometry(grid, random_f, capsys):
    rng = np.random.default_rng(SEED + 10)
    theta = canonical_theta(grid)
    omega = canonical_omega_coefficient(grid)
    sampled = OneForm(theta.alpha_q, theta.alpha_p, grid)
    dtheta = max(
        float(np.max(np.abs(d_of_oneform(theta, "symbolic") - omega))),
        float(np.max(np.abs(d_of_oneform(sampled, "fd") - omega))),
    )
    stokes = 0.0
    for _ in range(5):
        q1, q2 = np.sort(rng.uniform(-8, 8, 2))
        p1, p2 = np.sort(rng.uniform(-8, 8, 2))
        stokes = max(
            stokes,
            abs(line_integral(theta, PathPolyline.rectangle(q1, q2, p1, p2)) - (q2 - q1) * (p2 - p1)),
        )
    spread = 0.0
    for f in random_f:
        start, end = rng.uniform(-6, 6, 2), rng.uniform(-6, 6, 2)
        exact = float(el.evaluate(f, *end) - el.evaluate(f, *start))
        for path in random_polylines(rng, start, end, 4, 3, (-8, 8, -8, 8)):
            spread = max(spread, abs(line_integral(exterior_d(f, grid), path) - exact))
    try:
        gauge_shift_theta(theta, OneForm.from_exprs("p", "0", grid))
        rejected = 0.0
    except NotClosedError:
        rejected = 1.0
    assert report(
        capsys,
        "C10 symplectic geometry",
        [
            ("dtheta-omega", dtheta, "<", 1e-12),
            ("stokes", stokes, "<", 1e-6),
            ("path_spread", spread, "<", 1e-6),
            ("pdq_rejected", rejected, ">=", 1),
        ],
    )


def _verify_process(out):
    cmd = [
        sys.executable,
        "-m",
        "phasewig.cli",
        "verify",
        "--grid",
        "256",
        "--output-dir",
        str(out),
    ]
    return subprocess.Popen(cmd, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)


def test_c11_determinism_and_exit_codes(tmp_path, capsys):
    t0 = time.perf_counter()
    procs = [_verify_process(tmp_path / name) for name in ("a", "b")]
    codes = [p.wait() for p in procs]
    runs = []
    for name in ("a", "b"):
        s = json.loads((tmp_path / name / "summary.json").read_text())
        s.pop("wall_time")
        runs.append((s, (tmp_path / name / "checks.csv").read_bytes()))
    identical = float(runs[0] == runs[1])

    grid = "[grid]\nq_min = -10.0\nq_max = 10.0\nn_q = 64\np_min = -10.0\np_max = 10.0\nn_p = 64\n\n"
    cases = {
        0: '[state]\nkind = "oscillator"\nn = 0\n\n[task]\nname = "wigner-direct"\n',
        1: '[state]\nkind = "oscillator"\nn = 0\n\n[task]\nname = "wigner-direct"\nunknown_key = 1\n',
        2: '[state]\nkind = "gaussian"\nq0 = 9.5\np0 = 0.0\nsigma = 1.0\n\n[task]\nname = "wigner-direct"\n',
    }
    contract = 1.0
    for expected, body in cases.items():
        path = tmp_path / f"case{expected}.cfg"
        path.write_text(grid + body)
        got = main(["run", str(path), "--output-dir", str(tmp_path / f"out{expected}")])
        contract = min(contract, float(got == expected))
    verify_ok = float(codes == [0, 0])
    assert report(
        capsys,
        f"C11 determinism and exit codes ({time.perf_counter() - t0:.1f}s)",
        [
            ("verify_exit_0", verify_ok, ">=", 1),
            ("bitwise_identical", identical, ">=", 1),
            ("exit_contract", contract, ">=", 1),
        ],
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
