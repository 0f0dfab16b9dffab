"""The invariant suite run by ``phasewig verify``: a fixed, ordered list of named checks."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np

from . import exprlang as el
from .numgrid import spectral_derivative, spectral_shift, square_grid
from .schrod import (
    PolynomialPotential,
    apply_phase_hamiltonian,
    cross_pairing_residuals,
    equivalence_sweep,
    solve_config,
)
from .states import (
    GaussianFactorState,
    OscillatorParams,
    born_residual,
    from_samples,
    gaussian_packet,
    lift_state,
    oscillator_eigenstate,
    oscillator_factor_state,
)
from .symcalc import (
    CANONICAL,
    NotClosedError,
    OneForm,
    PathPolyline,
    broken_connection,
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
from .wigner import (
    covariant_wigner,
    marginals,
    negativity_report,
    wigner_direct,
    wigner_tegmen,
)

DEFAULT_SEED = 20240601
DEFAULT_GRID_N = 512
HALF_WIDTH = 12.0
N_RANDOM_F = 5
N_TEST_FIELDS = 20


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    comparison: str  # "<" or ">="
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _check(name: str, value: float, threshold: float, comparison: str = "<") -> Check:
    value = float(value)
    ok = value < threshold if comparison == "<" else value >= threshold
    return Check(name, value, threshold, comparison, bool(ok and np.isfinite(value)))


def random_expr(rng: np.random.Generator, depth: int = 3) -> el.Expr:
    """Random tree over the grammar (no division by non-constants, so no poles)."""
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.4:
            return el.Var("q")
        if r < 0.8:
            return el.Var("p")
        return el.Num(float(np.round(rng.uniform(-2, 2), 3)))
    kind = rng.integers(0, 6)
    if kind == 0:
        return el.BinOp("+", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 1:
        return el.BinOp("-", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 2:
        return el.BinOp("*", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 3:
        return el.BinOp("/", random_expr(rng, depth - 1), el.Num(float(rng.integers(2, 5))))
    if kind == 4:
        return el.Pow(random_expr(rng, depth - 1), int(rng.integers(0, 4)))
    return el.Call(str(rng.choice(el.FUNCTIONS)), random_expr(rng, depth - 1))


class Context:
    """Shared, lazily built inputs for the checks."""

    def __init__(self, seed: int, grid_n: int, connection: str):
        self.seed = seed
        self.grid_n = grid_n
        self.connection = connection
        self.grid = square_grid(HALF_WIDTH, grid_n)
        self.params = OscillatorParams(1.0, 1.0)
        self.V = PolynomialPotential.harmonic()

    def rng(self, stream: int) -> np.random.Generator:
        # one independent stream per check keeps checks order-independent
        return np.random.default_rng([self.seed, stream])

    @cached_property
    def random_f(self) -> list[el.Expr]:
        rng = self.rng(0)
        return [random_smooth_expr(rng) for _ in range(N_RANDOM_F)]

    @cached_property
    def f_corpus(self) -> list[el.Expr]:
        return [el.parse(CANONICAL), el.ZERO] + self.random_f

    @cached_property
    def connections(self):
        if self.connection == "broken":
            return [broken_connection(self.grid)]
        return [connection_from_generating(f, self.grid) for f in self.f_corpus]

    @cached_property
    def oscillators(self):
        return [oscillator_eigenstate(n, self.params, self.grid) for n in range(5)]

    @cached_property
    def poly_states(self) -> list[GaussianFactorState]:
        rng = self.rng(1)
        out = []
        for deg in (2, 4, 6):
            a = float(rng.uniform(0.4, 0.9))
            phi = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
            phi = phi / (1.0 + np.arange(deg + 1)) ** 2
            st = GaussianFactorState(a, tuple(phi))
            norm = st.wavefunction(self.grid).norm
            out.append(GaussianFactorState(a, tuple(phi / norm)))
        return out

    @cached_property
    def direct(self):
        return [wigner_direct(psi) for psi in self.oscillators]

    @cached_property
    def eigenpairs(self):
        return solve_config(self.V, 1.0, self.grid, 6)


def _band_limited_1d(rng, n: int, h: float) -> np.ndarray:
    x = (np.arange(n) - n / 2) * h
    L = n * h / 2
    out = np.zeros(n, dtype=complex)
    for _ in range(3):
        x0 = rng.uniform(-0.3, 0.3) * L
        w = rng.uniform(0.04, 0.07) * L
        k = rng.uniform(-1, 1)
        out += (rng.normal() + 1j * rng.normal()) * np.exp(-((x - x0) ** 2) / (2 * w**2) + 1j * k * x)
    return out


# ---------------------------------------------------------------- numgrid


def check_numgrid(ctx: Context) -> list[Check]:
    rng = ctx.rng(10)
    h = ctx.grid.q_axis.h
    n = ctx.grid.q_axis.n
    d2_err = shift_err = comm_err = 0.0
    for _ in range(5):
        f = _band_limited_1d(rng, n, h)
        once = spectral_derivative(spectral_derivative(f, h), h)
        twice = spectral_derivative(f, h, order=2)
        d2_err = max(d2_err, np.max(np.abs(once - twice)) / np.max(np.abs(twice)))
        a = rng.uniform(-3, 3)
        back = spectral_shift(spectral_shift(f, h, a), h, -a)
        shift_err = max(shift_err, np.max(np.abs(back - f)))
        ds = spectral_derivative(spectral_shift(f, h, a), h)
        sd = spectral_shift(spectral_derivative(f, h), h, a)
        comm_err = max(comm_err, np.max(np.abs(ds - sd)) / np.max(np.abs(sd)))
    x = ctx.grid.q
    quad = 0.0
    for m in (1, 3, 7):
        e = np.exp(2j * np.pi * m * (x - x[0]) / ctx.grid.q_axis.length)
        quad = max(quad, abs(e.sum() * h))
    return [
        _check("numgrid.second_derivative", d2_err, 1e-9),
        _check("numgrid.shift_roundtrip", shift_err, 1e-10),
        _check("numgrid.derivative_shift_commute", comm_err, 1e-9),
        _check("numgrid.resonant_quadrature", quad, 1e-12),
    ]


# ---------------------------------------------------------------- states


def check_states(ctx: Context) -> list[Check]:
    g = ctx.grid
    osc = [oscillator_eigenstate(n, ctx.params, g) for n in range(11)]
    packets = [gaussian_packet(1.3, -0.7, 0.8, g), gaussian_packet(-2.0, 1.5, 0.9, g)]
    norm_err = max(abs(s.norm - 1.0) for s in osc + packets)
    gram = np.array([[a.inner(b) for b in osc] for a in osc])
    ortho = float(np.max(np.abs(gram - np.eye(len(osc)))))
    born = 0.0
    vol = 0.0
    for f in ctx.f_corpus:
        for psi in (osc[0], osc[3], packets[0]):
            Psi = lift_state(psi, f)
            born = max(born, born_residual(Psi, psi))
            total = float(np.sum(np.abs(Psi.samples) ** 2) * g.q_axis.h * g.p_axis.h)
            expected = g.p_axis.length * psi.norm**2
            vol = max(vol, abs(total - expected) / expected)
    return [
        _check("states.unit_norm", norm_err, 1e-8),
        _check("states.born_property", born, 1e-12),
        _check("states.orthonormal", ortho, 1e-8),
        _check("states.momentum_volume_normalization", vol, 1e-8),
    ]


# ---------------------------------------------------------------- exprlang


def check_exprlang(ctx: Context) -> list[Check]:
    rng = ctx.rng(20)
    q = rng.uniform(-2, 2, 100)
    p = rng.uniform(-2, 2, 100)
    roundtrip = 0.0
    fd = 0.0
    mixed = 0.0
    exprs = [random_expr(rng) for _ in range(20)]
    eps = 1e-5
    for e in exprs:
        a = el.evaluate(e, q, p)
        b = el.evaluate(el.parse(el.to_text(e)), q, p)
        roundtrip = max(
            roundtrip,
            float(np.max(np.abs(np.broadcast_to(a, q.shape) - np.broadcast_to(b, q.shape)))),
        )
        for var in ("q", "p"):
            d = np.broadcast_to(el.evaluate(el.diff(e, var), q, p), q.shape)
            dq, dp = (eps, 0.0) if var == "q" else (0.0, eps)
            num = (el.evaluate(e, q + dq, p + dp) - el.evaluate(e, q - dq, p - dp)) / (2 * eps)
            fd = max(fd, float(np.max(np.abs(d - num) / np.maximum(1.0, np.abs(d)))))
        qp = el.evaluate(el.diff(el.diff(e, "q"), "p"), q, p)
        pq = el.evaluate(el.diff(el.diff(e, "p"), "q"), q, p)
        mixed = max(
            mixed,
            float(np.max(np.abs(np.broadcast_to(qp - pq, q.shape)) / np.maximum(1.0, np.abs(qp)))),
        )
    return [
        _check("exprlang.print_parse_roundtrip", roundtrip, 1e-300),
        _check("exprlang.diff_vs_finite_difference", fd, 1e-6),
        _check("exprlang.mixed_partials_commute", mixed, 1e-10),
    ]


# ---------------------------------------------------------------- symcalc


def check_symcalc(ctx: Context) -> list[Check]:
    g = ctx.grid
    rng = ctx.rng(30)
    checks = []

    dd = max(float(np.max(np.abs(d_of_oneform(exterior_d(f, g))))) for f in ctx.f_corpus)
    checks.append(_check("symcalc.dd_zero", dd, 1e-8))

    theta = canonical_theta(g)
    omega = canonical_omega_coefficient(g)
    sampled = OneForm(theta.alpha_q, theta.alpha_p, g)
    dtheta = max(
        float(np.max(np.abs(d_of_oneform(theta, "symbolic") - omega))),
        float(np.max(np.abs(d_of_oneform(sampled, "fd") - omega))),
    )
    checks.append(_check("symcalc.dtheta_equals_omega", dtheta, 1e-12))

    stokes = 0.0
    for _ in range(5):
        q1, q2 = np.sort(rng.uniform(-8, 8, 2))
        p1, p2 = np.sort(rng.uniform(-8, 8, 2))
        loop = line_integral(theta, PathPolyline.rectangle(q1, q2, p1, p2))
        stokes = max(stokes, abs(loop - (q2 - q1) * (p2 - p1)))
    checks.append(_check("symcalc.stokes_rectangle", stokes, 1e-6))

    spread = 0.0
    for f in ctx.random_f:
        df = exterior_d(f, g)
        start, end = rng.uniform(-6, 6, 2), rng.uniform(-6, 6, 2)
        paths = random_polylines(rng, start, end, 4, 3, (-8, 8, -8, 8))
        vals = [line_integral(df, path) for path in paths]
        exact = float(el.evaluate(f, end[0], end[1]) - el.evaluate(f, start[0], start[1]))
        spread = max(spread, max(abs(v - exact) for v in vals))
    checks.append(_check("symcalc.path_independence", spread, 1e-6))

    pdq = OneForm.from_exprs("p", "0", g)
    try:
        gauge_shift_theta(theta, pdq)
        rejected = 0.0
    except NotClosedError:
        rejected = 1.0
    checks.append(_check("symcalc.closedness_gate_rejects_pdq", rejected, 1.0, ">="))

    integ = max(float(np.max(np.abs(integrability_residual(A)))) for A in ctx.connections)
    checks.append(_check("symcalc.integrability", integ, 1e-8))

    generated = [connection_from_generating(f, g) for f in ctx.f_corpus]
    preserved = 0.0
    for A in generated:
        before = integrability_residual(A)
        for _ in range(2):
            shift = random_smooth_expr(rng, canonical=False)
            after = integrability_residual(gauge_shift_connection(A, shift))
            preserved = max(preserved, float(np.max(np.abs(after - before))))
    checks.append(_check("symcalc.integrability_under_dprime_shift", preserved, 1e-10))

    broken_shift = gauge_shift_connection(generated[0], CANONICAL, use_exterior_d=True)
    checks.append(
        _check(
            "symcalc.d_shift_breaks_integrability",
            np.max(np.abs(integrability_residual(broken_shift))),
            0.5,
            ">=",
        )
    )

    algebra = 0.0
    for _ in range(10):
        f0 = random_smooth_expr(rng)
        f = random_smooth_expr(rng, canonical=False)
        lhs = gauge_shift_connection(connection_from_generating(f0, g), f)
        rhs = connection_from_generating(el.sub(f0, f), g)
        algebra = max(
            algebra,
            float(np.max(np.abs(lhs.a_q - rhs.a_q))),
            float(np.max(np.abs(lhs.a_p - rhs.a_p))),
        )
    checks.append(_check("symcalc.gauge_algebra", algebra, 1e-10))

    frng = ctx.rng(31)
    fields = [random_band_limited_field(frng, g) for _ in range(N_TEST_FIELDS)]
    comm = 0.0
    for A in ctx.connections:
        for t in fields:
            comm = max(comm, commutator_residual(A, t) / np.max(np.abs(t.envelope)))
    checks.append(_check("symcalc.commutator", comm, 1e-7))

    bad = broken_connection(g)
    worst = min(commutator_residual(bad, t) / (g.hbar * np.max(np.abs(t.envelope)[g.interior_mask(0.1)])) for t in fields[:5])
    checks.append(_check("symcalc.commutator_broken_counterexample", worst, 0.5, ">="))
    return checks


# ---------------------------------------------------------------- wigner


def check_wigner(ctx: Context) -> list[Check]:
    g = ctx.grid
    checks = []
    factor = [oscillator_factor_state(n, ctx.params, g.hbar) for n in range(5)] + ctx.poly_states
    wavefns = ctx.oscillators + [s.wavefunction(g) for s in ctx.poly_states]
    directs = ctx.direct + [wigner_direct(w) for w in wavefns[5:]]

    teg = max(float(np.max(np.abs(wigner_tegmen(s, g).values - W.values))) for s, W in zip(factor, directs))
    checks.append(_check("wigner.direct_vs_integral_free", teg, 1e-7))

    cov_states = list(range(5)) + [len(wavefns) - 1]
    try:
        cov = max(float(np.max(np.abs(covariant_wigner(wavefns[i], "p*q").values - directs[i].values))) for i in cov_states)
    except ValueError:  # e.g. a grid too coarse for the doubled y spacing
        cov = np.inf
    checks.append(_check("wigner.direct_vs_covariant", cov, 1e-7))

    q, p = g.mesh()
    ground = float(np.max(np.abs(ctx.direct[0].values - np.exp(-(q**2) - p**2) / (np.pi * g.hbar))))
    checks.append(_check("wigner.ground_state_analytic", ground, 1e-8))

    rep = negativity_report(ctx.direct[1])
    n1 = abs(rep.min_value + 1.0 / (np.pi * g.hbar)) + float(np.hypot(*rep.min_location))
    checks.append(_check("wigner.n1_minimum_at_origin", n1, 1e-6))
    checks.append(
        _check(
            "wigner.ground_state_nonnegative",
            -negativity_report(ctx.direct[0]).min_value,
            1e-8,
        )
    )

    packet = gaussian_packet(1.5, -1.0, 0.9, g)
    corpus_w = wavefns + [packet]
    corpus_W = directs + [wigner_direct(packet)]
    norm = marg = imag = 0.0
    for psi, W in zip(corpus_w, corpus_W):
        scale = psi.norm**2
        norm = max(norm, abs(W.total() - scale) / scale)
        mq, mp = marginals(W)
        marg = max(
            marg,
            float(np.max(np.abs(mq - np.abs(psi.samples) ** 2))) / scale,
            float(np.max(np.abs(mp - np.abs(psi.momentum_amplitude()) ** 2))) / scale,
        )
        imag = max(imag, W.imag_discarded)
    checks.append(_check("wigner.normalization", norm, 1e-6))
    checks.append(_check("wigner.marginals", marg, 1e-6))
    checks.append(_check("wigner.realness", imag, 1e-8))

    mixed = (packet.samples + oscillator_eigenstate(1, ctx.params, g).samples) / np.sqrt(2)
    psi = from_samples(mixed, g)
    flipped = from_samples(np.roll(psi.samples[::-1], 1), g)
    W = wigner_direct(psi).values
    Wf = wigner_direct(flipped).values
    parity = float(np.max(np.abs(Wf - np.roll(np.roll(W[::-1, ::-1], 1, axis=0), 1, axis=1))))
    checks.append(_check("wigner.parity_covariance", parity, 1e-9))
    return checks


# ---------------------------------------------------------------- schrod


def check_schrod(ctx: Context) -> list[Check]:
    g = ctx.grid
    pairs = ctx.eigenpairs
    checks = []
    spec = max(abs(pr.energy - (n + 0.5)) / (n + 0.5) for n, pr in enumerate(pairs))
    checks.append(_check("schrod.harmonic_spectrum", spec, 1e-8))
    checks.append(_check("schrod.eigen_residual", max(pr.residual for pr in pairs), 1e-8))
    overlap = abs(pairs[0].state.inner(ctx.oscillators[0]))
    checks.append(_check("schrod.ground_state_overlap_defect", 1.0 - overlap, 1e-10))

    canon = equivalence_sweep(ctx.V, 1.0, g, [CANONICAL], 5)
    checks.append(_check("schrod.equivalence_canonical", max(r.phase_residual for r in canon), 1e-6))
    zero = equivalence_sweep(ctx.V, 1.0, g, ["0"], 2)
    checks.append(_check("schrod.equivalence_standard", max(r.phase_residual for r in zero), 1e-8))
    rand = equivalence_sweep(ctx.V, 1.0, g, ctx.random_f, 3)
    worst = max((r.phase_residual if not r.error else np.inf) for r in rand)
    checks.append(_check("schrod.equivalence_random_f", worst, 1e-5))

    cross = cross_pairing_residuals(ctx.V, 1.0, g, [CANONICAL, "0", ctx.random_f[0]], 2)
    off = ~np.eye(cross.shape[0], dtype=bool)
    checks.append(
        _check(
            "schrod.cross_pairing_detects_mismatch",
            float(np.max(cross[off])),
            1e-2,
            ">=",
        )
    )

    rng = ctx.rng(40)
    herm = 0.0
    quartic = PolynomialPotential((0.0, 0.2, 0.5, 0.0, 0.05))
    for f in ctx.f_corpus[:3]:
        A = connection_from_generating(f, g)
        for V in (ctx.V, quartic):
            a = random_band_limited_field(rng, g)
            b = random_band_limited_field(rng, g)
            lhs = a.inner(apply_phase_hamiltonian(A, V, 1.0, b))
            rhs = apply_phase_hamiltonian(A, V, 1.0, a).inner(b)
            herm = max(herm, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    checks.append(_check("schrod.hermiticity", herm, 1e-8))

    inv = max(abs(r.rayleigh_energy - r.energy) for r in canon + zero + rand if not r.error)
    checks.append(_check("schrod.eigenvalue_invariance", inv, 1e-6))
    return checks


SECTIONS = (
    check_numgrid,
    check_states,
    check_exprlang,
    check_symcalc,
    check_wigner,
    check_schrod,
)


def verify_suite(
    seed: int = DEFAULT_SEED,
    grid_n: int = DEFAULT_GRID_N,
    connection: str = "generated",
) -> dict:
    """Run every check in a fixed order. ``connection='broken'`` swaps in A_q = p, A_p = q."""
    if connection not in ("generated", "broken"):
        raise ValueError(f"unknown connection preset {connection!r}")
    ctx = Context(seed, grid_n, connection)
    t0 = time.perf_counter()
    checks: list[Check] = []
    for section in SECTIONS:
        try:
            checks.extend(section(ctx))
        except Exception as exc:  # noqa: BLE001 a crashed section is a failed entry, never an abort
            name = section.__name__.removeprefix("check_")
            checks.append(
                Check(
                    f"{name}.error: {type(exc).__name__}: {exc}",
                    float("nan"),
                    0.0,
                    "<",
                    False,
                )
            )
    failed = [c.name for c in checks if not c.passed]
    return {
        "seed": seed,
        "grid_n": grid_n,
        "connection": connection,
        "checks": [c.as_dict() for c in checks],
        "n_checks": len(checks),
        "n_failed": len(failed),
        "failed": failed,
        "all_passed": not failed,
        "wall_time": time.perf_counter() - t0,
    }
