"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here, not calibrated elsewhere.  Two criteria (2 and
10b) demand agreement between the infinite-chain engine and exact
diagonalization on a 14-site open chain at times where the impurity
amplitude has already reflected off the chain ends; the measured
finite-size gap (orders of magnitude above the stated tolerances, see
scripts/oracle_gap_study.py) makes them fail honestly.  The same
comparisons pass at reflection-free times in tests/test_oracle.py.
"""

import math
import time

import numpy as np

from foldedxxz.asymptotics import (
    asym_sigma_z_profile,
    fit_lqjs_envelope,
)
from foldedxxz.bessel import bessel_weights, position_cdf
from foldedxxz.engine import (
    DiagonalObservable,
    _cone_window,
    current_profile,
    expect_diagonal,
    guarded_background,
    p_down_down_values,
    position_statistics,
    schmidt_count,
    bipartite_entropy,
    sigma_z_values,
)
from foldedxxz.lattice import (
    UP,
    neel_flip_background,
    period3_flip_background,
    weak_flip_background,
)
from foldedxxz.oracle import (
    HamiltonianSpec,
    build_hamiltonian,
    duality_compare,
    entanglement_entropy,
    evolve,
    product_state,
    sz_profile,
)
from foldedxxz.weak import (
    WeakConfig,
    assemble_rho,
    eof,
    two_point,
    two_point_engine,
    weak_magnetisation,
)

FIG2A = period3_flip_background(64)


def report(num: str, ok: bool, detail: str) -> None:
    print(f"[C{num}] {'PASS' if ok else 'FAIL'} - {detail}")


def test_c01_bessel_normalization():
    start = time.perf_counter()
    worst = 0.0
    for jt in (1.0, 10.0, 100.0):
        w = bessel_weights(jt)
        worst = max(worst, abs(float(np.dot(w.values, w.values)) - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 1.0
    report("01", ok, f"max |sum J^2 - 1| = {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_c02_oracle_equivalence_n14():
    """Engine vs dense ED on N = 14, post-flip period-3 state.

    At these times the impurity amplitude reflects off the open ends of a
    14-site chain (weight beyond the walls is 1e-4 .. 0.4), so the
    infinite-chain engine cannot match the finite chain at 1e-8; the same
    comparison passes at Jt = 0.15 (tests/test_oracle.py).  The criterion
    is asserted as stated and fails honestly.
    """
    start = time.perf_counter()
    n = 14
    lo = -(n // 2)
    spins0 = [int(s) for s in FIG2A.render(0, lo, lo + n - 1)]
    h = build_hamiltonian(HamiltonianSpec("folded", n))
    interior = slice(3, n - 3)
    sites = np.arange(lo, lo + n)
    devs = {}
    for jt in (0.5, 1.0, 1.5):
        psi = evolve(product_state(spins0), h, jt, method="eigh")
        ed = sz_profile(psi, n)
        eng = sigma_z_values(jt, FIG2A, sites)
        devs[jt] = float(np.max(np.abs((ed - eng)[interior])))
    elapsed = time.perf_counter() - start
    ok = all(d < 1e-8 for d in devs.values()) and elapsed < 120.0
    detail = ", ".join(f"Jt={t}: {d:.2e}" for t, d in devs.items())
    report("02", ok, f"interior deviations {detail} (tolerance 1e-8), {elapsed:.0f}s")
    assert ok, (
        "finite-size reflection gap: the stated tolerance is unattainable "
        f"on a 14-site chain ({detail})"
    )


def test_c03_asymptotic_magnetisation():
    start = time.perf_counter()
    maxdev = {}
    for jt, tol in ((50.0, 0.05), (100.0, 0.02)):
        span = int(3.5 * jt)
        sites = np.arange(-span, span + 1)
        exact = dict(zip(sites.tolist(), sigma_z_values(jt, FIG2A, sites)))
        scls, vals = asym_sigma_z_profile(jt, FIG2A, sites, x_fn=lambda l: 2 * l / 3.0)
        maxdev[jt] = max(abs(exact[s] - v) for s, v in zip(scls, vals))
    elapsed = time.perf_counter() - start
    ok = maxdev[50.0] < 0.05 and maxdev[100.0] < 0.02 and elapsed < 60.0
    report(
        "03",
        ok,
        f"max |exact - asym| = {maxdev[50.0]:.4f} (Jt=50, tol 0.05), "
        f"{maxdev[100.0]:.4f} (Jt=100, tol 0.02), {elapsed:.1f}s",
    )
    assert ok


def test_c04_noninteracting_null_result():
    """Single-species backgrounds keep every spin aligned except two.

    The late-time profile is evaluated through the three-spin rules; the
    two or three sites of the initial impurity have no stated rule and are
    excluded (their neighbourhood is not jammed).
    """
    jt = 10.0
    sites = np.arange(-60, 61)
    summary = []
    ok = True
    for label, bg, allowed in (
        ("fig2b", neel_flip_background(64), 0),
        ("fig2c", weak_flip_background(5, 1, 64), 2),
    ):
        scls, vals = asym_sigma_z_profile(jt, bg, sites)
        bad = [
            (int(s), float(v))
            for s, v in zip(scls, vals)
            if min(abs(v - 1.0), abs(v + 1.0)) >= 1e-10
        ]
        excluded = len(sites) - len(scls)
        summary.append(f"{label}: {len(bad)} unaligned (allowed {allowed}), {excluded} excluded")
        ok = ok and len(bad) <= allowed and excluded <= 3
    report("04", ok, "; ".join(summary))
    assert ok


def test_c05_lqjs_decay_and_envelope():
    start = time.perf_counter()
    maxima = {}
    rays_all, vals_all = [], []
    for jt in (25.0, 50.0):
        span = int(5.7 * jt)
        bonds = np.arange(-span, span + 1)
        scaled = jt * p_down_down_values(jt, FIG2A, bonds)
        rays = bonds / jt
        inner = np.abs(rays) <= 5.0
        maxima[jt] = float(scaled[inner].max())
        rays_all.append(rays)
        vals_all.append(scaled)
    ratio_gap = abs(maxima[50.0] / maxima[25.0] - 1.0)
    a, v = fit_lqjs_envelope(np.concatenate(rays_all), np.concatenate(vals_all))
    elapsed = time.perf_counter() - start
    ok = ratio_gap < 0.10 and 0.13 <= a <= 0.19 and 5.7 <= abs(v) <= 6.3
    report(
        "05",
        ok,
        f"max(Jt Pdd) ratio gap {ratio_gap:.3f} (tol 0.10, rays |z|<=5), "
        f"fit a = {a:.3f} (0.16 +- 0.03), |v| = {abs(v):.2f} (6 +- 0.3), {elapsed:.1f}s",
    )
    assert ok


def test_c06_current_decay():
    start = time.perf_counter()
    peaks = {}
    for jt in (25.0, 50.0):
        span = int(5.0 * jt)
        sites = np.arange(-span, span + 1)
        prof = current_profile(jt, FIG2A, sites)
        peaks[jt] = float(np.max(np.abs(prof.values)))
    ratio = peaks[50.0] / peaks[25.0]
    elapsed = time.perf_counter() - start
    ok = 0.4 <= ratio <= 0.6
    report(
        "06",
        ok,
        f"max |current| {peaks[25.0]:.5f} -> {peaks[50.0]:.5f}, ratio {ratio:.3f} "
        f"(window [0.4, 0.6], rays |z|<=5), {elapsed:.1f}s",
    )
    assert ok


def test_c07_weak_closed_forms():
    start = time.perf_counter()
    worst_mag = 0.0
    worst_two = 0.0
    for m, M in ((5, 1), (5, 3), (9, 10)):
        for jt in (0.7, 3.1, 12.0):
            cfg = WeakConfig(m, M, jt)
            from foldedxxz.weak import config_background

            bg = config_background(cfg)
            cone = bessel_weights(jt).order_cutoff
            sites = np.arange(-cone - 10, 2 * m + 2 * M + cone + 10)
            eng = sigma_z_values(jt, bg, sites)
            closed = np.array([weak_magnetisation(int(s), cfg) for s in sites])
            worst_mag = max(worst_mag, float(np.max(np.abs(eng - closed))))
            pair_sites = list(range(-6, 2 * m + 2 * M + 6))
            ds = sorted({1, 2, 3, M - 1, M, M + 1, 2 * M} - {0})
            for i in pair_sites:
                for d_sites in ds:
                    j = i + d_sites
                    if j > pair_sites[-1]:
                        continue
                    for aa, bb in (("z", "z"), ("x", "x"), ("y", "y"), ("x", "y"), ("y", "x")):
                        worst_two = max(
                            worst_two,
                            abs(
                                two_point(aa, bb, i, j, cfg)
                                - two_point_engine(aa, bb, i, j, cfg)
                            ),
                        )
    elapsed = time.perf_counter() - start
    ok = worst_mag < 1e-10 and worst_two < 1e-10
    report(
        "07",
        ok,
        f"magnetisation dev {worst_mag:.2e}, two-point dev {worst_two:.2e} "
        f"(tol 1e-10), {elapsed:.0f}s",
    )
    assert ok


def test_c08_classical_pair():
    cfg = WeakConfig(9, 10, 200.0)
    s1, s2 = 2 * 9 - 3, 2 * 9 + 2 * 10 - 3
    zz = two_point("z", "z", s1, s2, cfg)
    rho = assemble_rho((s1, s2), cfg).matrix
    mix = np.diag([0.0, 0.5, 0.5, 0.0]).astype(complex)
    gap = float(np.max(np.abs(rho - mix)))
    ok = zz < -0.95 and gap < 0.05
    report("08", ok, f"<zz> = {zz:.4f} (< -0.95), ||rho - mixture||_max = {gap:.4f} (< 0.05)")
    assert ok


def test_c09_eof_decay():
    """E(t) (Jt)^2 / log2(Jt) is stable between Jt = 50 and 100.

    The rescaled value is sampled over one Bessel period z in [4t, 4t+2pi]
    and its maximum compared: sampling at a single phase aliases the
    transverse-coherence oscillation, while the per-period envelope tracks
    the decay law.
    """
    pair = (6, 8)

    def envelope(jt):
        best = 0.0
        for dz in np.linspace(0.0, 2 * math.pi, 13):
            t = jt + dz / 4.0
            val = eof(assemble_rho(pair, WeakConfig(9, 10, t)))
            best = max(best, val * t * t / math.log2(t))
        return best

    e50, e100 = envelope(50.0), envelope(100.0)
    gap = abs(e100 / e50 - 1.0)
    ok = gap < 0.15
    report(
        "09",
        ok,
        f"pair {pair}: rescaled EoF envelope {e50:.5f} -> {e100:.5f}, "
        f"variation {100 * gap:.1f}% (tol 15%)",
    )
    assert ok


def test_c10a_schmidt_rank_bound():
    start = time.perf_counter()
    worst = 0
    for jt in (25.0, 50.0):
        bgx, w = guarded_background(FIG2A, jt)
        lo, hi = _cone_window(bgx, w)
        worst = max(worst, max(schmidt_count(c, jt, FIG2A) for c in range(lo, hi)))
    elapsed = time.perf_counter() - start
    ok = worst <= 3
    report("10a", ok, f"max Schmidt count over all cuts = {worst} (<= 3), {elapsed:.0f}s")
    assert ok


def test_c10b_entropy_matches_ed():
    """Engine entropy vs ED partial trace on N = 14 for Jt <= 1.5.

    Same finite-size reflection gap as criterion 2: passes at Jt = 0.25,
    fails at the stated tolerance for Jt >= 0.5 (see module docstring).
    """
    n = 14
    lo = -(n // 2)
    spins0 = [int(s) for s in FIG2A.render(0, lo, lo + n - 1)]
    h = build_hamiltonian(HamiltonianSpec("folded", n))
    devs = {}
    for jt in (0.25, 0.5, 1.0, 1.5):
        psi = evolve(product_state(spins0), h, jt, method="eigh")
        worst = 0.0
        for cut_chain in range(3, n - 4):
            ed = entanglement_entropy(psi, cut_chain, n)
            eng = bipartite_entropy(lo + cut_chain, jt, FIG2A)
            worst = max(worst, abs(ed - eng))
        devs[jt] = worst
    ok = all(d < 1e-6 for d in devs.values())
    detail = ", ".join(f"Jt={t}: {d:.2e}" for t, d in devs.items())
    report("10b", ok, f"entropy deviations {detail} (tolerance 1e-6)")
    assert ok, f"finite-size reflection gap: {detail}"


def test_c11_duality_monotone():
    start = time.perf_counter()
    rep = duality_compare([4.0, 8.0, 16.0], 16, 1.0)
    elapsed = time.perf_counter() - start
    devs = [rep.max_interior_deviation[d] for d in (4.0, 8.0, 16.0)]
    ok = rep.monotone and elapsed < 600.0
    report(
        "11",
        ok,
        "max interior |folded sz - xxz zz| = "
        + ", ".join(f"{d:.4f}" for d in devs)
        + f" for Delta = 4, 8, 16 (monotone), {elapsed:.0f}s",
    )
    assert ok


def test_c12_fluctuation_statistics():
    worst_var = 0.0
    worst_prob = 0.0
    for jt in (0.7, 5.0):
        w = bessel_weights(jt)
        bgx = FIG2A.extended_to_particles(-w.order_cutoff - 12, w.order_cutoff + 12)
        anchor = bgx.site_min + 8  # interior, and frozen for every stored state
        j_first = min(
            j for j in range(bgx.j_min, 0) if 2 * bgx.c(j) - bgx.b(j) >= anchor
        )
        for j in range(-10, 11):
            st = position_statistics(j, jt, bgx)
            f = position_cdf(float(j), w)
            worst_var = max(worst_var, abs(st.variance - (f - f * f)))
            # independent route: particle j sits at its unshifted site exactly
            # when it is the (j - j_first + 1)-th spin up right of the anchor
            target = 2 * bgx.c(j) - bgx.b(j)
            rank = j - j_first + 1

            def evaluator(win, rank=rank):
                ups = sum(1 for s in win.spins if s == UP)
                return 1.0 if (win.spins[-1] == UP and ups == rank) else 0.0

            ind = DiagonalObservable(evaluator, (anchor, target))
            prob = expect_diagonal(ind, jt, bgx)
            worst_prob = max(worst_prob, abs(prob - st.prob_lower))
    ok = worst_var < 1e-12 and worst_prob < 1e-10
    report(
        "12",
        ok,
        f"variance identity dev {worst_var:.2e} (tol 1e-12), "
        f"rank-indicator dev {worst_prob:.2e} (tol 1e-10)",
    )
    assert ok
