"""Self-check suite: invariants, oracle equivalence, and closed-form checks.

Each check returns a CheckResult; ``run_checks`` executes the whole list.
The CLI ``verify`` subcommand prints one line per check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import asymptotics, bessel, engine, lattice, oracle, weak


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _bessel_normalization() -> tuple[bool, str]:
    worst = 0.0
    for jt in (1.0, 10.0, 100.0):
        w = bessel.bessel_weights(jt)
        worst = max(worst, abs(float(np.dot(w.values, w.values)) - 1.0))
    return worst < 1e-12, f"max |sum J^2 - 1| = {worst:.2e}"


def _bessel_symmetry() -> tuple[bool, str]:
    w = bessel.bessel_weights(13.7)
    ok = all(w.j(-n) == (-1.0) ** n * w.j(n) for n in range(1, w.order_cutoff + 1))
    return ok, "J_{-n} = (-1)^n J_n bit-exact"


def _rule_render_equivalence() -> tuple[bool, str]:
    bg = lattice.period3_flip_background(40)
    worst = 0.0
    checked = 0
    for ell in list(range(1, 25)) + list(range(-25, -1)):
        try:
            for n in range(-30, 31):
                rule = engine.sigma_z_element_rule(n, ell, bg)
                rendered = float(bg.render(n, ell, ell)[0])
                worst = max(worst, abs(rule - rendered))
                checked += 1
        except engine.RuleDomainError:
            continue
    return worst == 0.0, f"{checked} elements, max dev {worst:.1e}"


def _projector_table() -> tuple[bool, str]:
    bg = lattice.period3_flip_background(40)
    n0 = 6
    bad = 0
    for ell in range(2, 16):
        pattern = "".join(
            "u" if s == lattice.UP else "d" for s in bg.render(0, ell, ell + 3)
        )
        j = None
        for cand in (ell, ell + 1, ell - 1):
            try:
                jj = {bg.site_of(k, 0): k for k in range(bg.j_min, bg.j_max + 1)}.get(cand)
            except lattice.IndexOutOfRangeError:
                jj = None
            if jj is not None:
                j = jj
                break
        for n in range(j + n0 + 1, j + n0 + 8):
            expect = engine.projector_pair_table(pattern, "right")
            row = bg.render(n, ell, ell + 1)
            got = (int(0.5 * (1 - row[0])), int(0.5 * (1 - row[1])))
            if got != expect or got[0] * got[1] != 0:
                bad += 1
        for n in range(j - n0 - 8, j - n0):
            expect = engine.projector_pair_table(pattern, "left")
            row = bg.render(n, ell, ell + 1)
            got = (int(0.5 * (1 - row[0])), int(0.5 * (1 - row[1])))
            if got != expect or got[0] * got[1] != 0:
                bad += 1
    return bad == 0, f"{bad} mismatches beyond n0 = {n0}"


def _sum_rules() -> tuple[bool, str]:
    # a window wide enough for the largest time makes the totals conserved
    bg = lattice.period3_flip_background(64)
    times = (0.0, 0.8, 3.0)
    span = 3 * (bessel.bessel_weights(max(times)).order_cutoff + 8)
    sites = np.arange(-span, span + 1)
    worst = 0.0
    ref_m = ref_s = None
    for t in times:
        vals = engine.sigma_z_values(t, bg, sites)
        total = float(vals.sum())
        lp = np.arange(-(span // 2) + 1, span // 2 - 1)
        stag = float(
            0.5 * (vals[2 * lp - sites[0]] - vals[2 * lp - 1 - sites[0]]).sum()
        )
        if ref_m is None:
            ref_m, ref_s = total, stag
        worst = max(worst, abs(total - ref_m), abs(stag - ref_s))
    return worst < 1e-9, f"max drift {worst:.2e}"


def _hermiticity() -> tuple[bool, str]:
    bg = lattice.period3_flip_background(32)
    worst = 0.0
    for ell in (-3, 0, 2, 5):
        val = engine.expect_operator(engine.current_operator(ell), 1.3, bg)
        worst = max(worst, abs(val.imag))
    return worst < 1e-12, f"max imaginary part {worst:.2e}"


def _oracle_profile() -> tuple[bool, str]:
    # the open ends sit far enough from the impurity at this time that the
    # reflected amplitude stays below the tolerance
    bg = lattice.period3_flip_background(20)
    n = 14
    lo = -(n // 2)
    spins0 = [int(s) for s in bg.render(0, lo, lo + n - 1)]
    h = oracle.build_hamiltonian(oracle.HamiltonianSpec("folded", n))
    t = 0.12
    psi = oracle.evolve(oracle.product_state(spins0), h, t, method="eigh")
    ed = oracle.sz_profile(psi, n)
    eng = engine.sigma_z_values(t, bg, np.arange(lo, lo + n))
    dev = float(np.max(np.abs(ed - eng)))
    return dev < 1e-8, f"N = {n}, Jt = {t}: max dev {dev:.2e}"


def _oracle_stepper() -> tuple[bool, str]:
    bg = lattice.period3_flip_background(20)
    n = 10
    lo = -(n // 2)
    spins0 = [int(s) for s in bg.render(0, lo, lo + n - 1)]
    h = oracle.build_hamiltonian(oracle.HamiltonianSpec("folded", n))
    a = oracle.evolve(oracle.product_state(spins0), h, 0.9, method="eigh")
    b = oracle.evolve(oracle.product_state(spins0), h, 0.9, method="krylov")
    dev = float(np.max(np.abs(a - b)))
    return dev < 1e-10, f"eigh vs krylov max dev {dev:.2e}"


def _sector_invariance() -> tuple[bool, str]:
    bg = lattice.period3_flip_background(20)
    n = 12
    lo = -(n // 2)
    spins0 = [int(s) for s in bg.render(0, lo, lo + n - 1)]
    h = oracle.build_hamiltonian(oracle.HamiltonianSpec("folded", n))
    psi = oracle.evolve(oracle.product_state(spins0), h, 1.1, method="eigh")
    inside = 0.0
    for m in range(bg.j_min + 1, bg.j_max - 1):
        try:
            row = bg.render(m, lo, lo + n - 1)
        except lattice.GuardError:
            continue
        target = oracle.product_state([int(s) for s in row])
        inside += abs(np.vdot(target, psi)) ** 2
    return abs(inside - 1.0) < 1e-10, f"sector weight deficit {abs(inside - 1.0):.2e}"


def _weak_closed_forms() -> tuple[bool, str]:
    worst = 0.0
    for (m, M, jt) in ((4, 2, 0.9), (5, 3, 2.2)):
        cfg = weak.WeakConfig(m, M, jt)
        bg = weak.config_background(cfg)
        sites = np.arange(-10, 2 * m + 2 * M + 10)
        eng = engine.sigma_z_values(jt, bg, sites)
        closed = np.array([weak.weak_magnetisation(int(s), cfg) for s in sites])
        worst = max(worst, float(np.max(np.abs(eng - closed))))
        for (i, j) in ((2 * m - 4, 2 * m - 2), (2 * m - 3, 2 * m - 1), (0, 2 * m)):
            for aa, bb in (("z", "z"), ("x", "x"), ("x", "y")):
                worst = max(
                    worst,
                    abs(
                        weak.two_point(aa, bb, i, j, cfg)
                        - weak.two_point_engine(aa, bb, i, j, cfg)
                    ),
                )
    return worst < 1e-10, f"max closed-form deviation {worst:.2e}"


def _entropy_structure() -> tuple[bool, str]:
    bg = lattice.period3_flip_background(40)
    counts = [engine.schmidt_count(c, 4.0, bg) for c in range(-30, 31)]
    zero = engine.bipartite_entropy(0, 0.0, bg)
    ok = max(counts) <= 3 and abs(zero) < 1e-12
    return ok, f"max Schmidt count {max(counts)}, S(t=0) = {zero:.1e}"


def _asym_convergence() -> tuple[bool, str]:
    bg = lattice.period3_flip_background(64)
    errs = []
    for jt in (25.0, 50.0):
        sites = np.arange(-int(3 * jt), int(3 * jt) + 1)
        exact = engine.sigma_z_values(jt, bg, sites)
        scls, vcls = asymptotics.asym_sigma_z_profile(jt, bg, sites)
        lookup = dict(zip(sites.tolist(), exact))
        errs.append(max(abs(lookup[s] - v) for s, v in zip(scls, vcls)))
    return errs[1] < errs[0] and errs[1] < 0.05, f"max dev {errs[0]:.3f} -> {errs[1]:.3f}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("bessel-normalization", _bessel_normalization),
    ("bessel-symmetry", _bessel_symmetry),
    ("rule-render-equivalence", _rule_render_equivalence),
    ("projector-pair-table", _projector_table),
    ("magnetisation-sum-rules", _sum_rules),
    ("current-hermiticity", _hermiticity),
    ("oracle-profile-agreement", _oracle_profile),
    ("oracle-stepper-agreement", _oracle_stepper),
    ("oracle-sector-invariance", _sector_invariance),
    ("weak-closed-forms", _weak_closed_forms),
    ("entropy-structure", _entropy_structure),
    ("asymptotic-convergence", _asym_convergence),
]


def run_checks(names: list[str] | None = None) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        if names and name not in names:
            continue
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        out.append(CheckResult(name, passed, detail, time.perf_counter() - start))
    return out
