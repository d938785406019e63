"""Brute-force ground truth on short open chains.

Dense/sparse state-vector evolution under the folded XXZ Hamiltonian

    H = J sum_l (1 - sigma^z_{l+1})/2 (sigma^x_l sigma^x_{l+2} + sigma^y_l sigma^y_{l+2})

and under the XXZ chain

    H = J sum_l (sigma^x_l sigma^x_{l+1} + sigma^y_l sigma^y_{l+1}
                 + Delta sigma^z_l sigma^z_{l+1}),

plus partial traces and the inverse-duality comparison between the two.

Basis convention: chain site ``l`` maps to bit ``N - 1 - l`` of the basis
index, i.e. the leftmost site is the most significant bit and reshaping a
state vector to ``(2,) * N`` orders axes by site.  Bit value 1 means spin
up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .engine import DiagonalObservable, PauliString
from .lattice import DOWN, UP

MAX_SITES = 20


class TooLargeError(Exception):
    pass


class SupportOutsideChainError(Exception):
    pass


class LightConeEscapeError(Exception):
    pass


@dataclass(frozen=True)
class HamiltonianSpec:
    kind: str  # "folded" | "xxz"
    n_sites: int
    coupling: float = 1.0
    delta: float | None = None
    boundary: str = "open"

    def __post_init__(self):
        if self.kind not in ("folded", "xxz"):
            raise ValueError("kind must be 'folded' or 'xxz'")
        if self.n_sites > MAX_SITES:
            raise TooLargeError(f"dense oracle capped at {MAX_SITES} sites")
        if self.n_sites < 3:
            raise ValueError("need at least three sites")
        if self.kind == "xxz" and self.delta is None:
            raise ValueError("xxz needs an anisotropy")
        if self.boundary != "open":
            raise ValueError("only open boundaries are supported")


def _bit(idx: np.ndarray, n_sites: int, site: int) -> np.ndarray:
    return (idx >> (n_sites - 1 - site)) & 1


def build_hamiltonian(spec: HamiltonianSpec) -> sp.csr_matrix:
    """Sparse Hamiltonian over the full 2^N space."""
    n = spec.n_sites
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    rows, cols, vals = [], [], []
    if spec.kind == "folded":
        for l in range(n - 2):
            a = _bit(idx, n, l)
            m = _bit(idx, n, l + 1)
            c = _bit(idx, n, l + 2)
            mask = (m == 0) & (a != c)
            src = idx[mask]
            dst = src ^ (1 << (n - 1 - l)) ^ (1 << (n - 1 - l - 2))
            rows.append(src)
            cols.append(dst)
            vals.append(np.full(src.shape, 2.0 * spec.coupling))
        diag = np.zeros(dim)
    else:
        for l in range(n - 1):
            a = _bit(idx, n, l)
            c = _bit(idx, n, l + 1)
            mask = a != c
            src = idx[mask]
            dst = src ^ (1 << (n - 1 - l)) ^ (1 << (n - 1 - l - 1))
            rows.append(src)
            cols.append(dst)
            vals.append(np.full(src.shape, 2.0 * spec.coupling))
        diag = np.zeros(dim)
        for l in range(n - 1):
            za = 2.0 * _bit(idx, n, l) - 1.0
            zb = 2.0 * _bit(idx, n, l + 1) - 1.0
            diag += spec.coupling * spec.delta * za * zb
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    h = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )
    return h.tocsr()


def product_state(spins) -> np.ndarray:
    """State vector for a product z-basis configuration (+1 up / -1 down)."""
    n = len(spins)
    if n > MAX_SITES:
        raise TooLargeError(f"dense oracle capped at {MAX_SITES} sites")
    index = 0
    for s in spins:
        index = (index << 1) | (1 if s == UP else 0)
    vec = np.zeros(1 << n, dtype=complex)
    vec[index] = 1.0
    return vec


def _popcounts(dim: int) -> np.ndarray:
    idx = np.arange(dim, dtype=np.uint64)
    counts = np.zeros(dim, dtype=np.int64)
    while idx.any():
        counts += (idx & 1).astype(np.int64)
        idx >>= 1
    return counts


def evolve(state: np.ndarray, h: sp.csr_matrix, t: float, method: str = "auto") -> np.ndarray:
    """exp(-i H t) |state>.

    ``eigh``: dense eigendecomposition restricted to the magnetisation
    sector of the state (reference path).  ``krylov``: scaled
    sparse-polynomial stepping.  ``auto`` picks by size.
    """
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if n > MAX_SITES:
        raise TooLargeError("state too large")
    if method == "auto":
        method = "eigh" if dim <= 1 << 12 else "krylov"
    if method == "krylov":
        out = spla.expm_multiply(-1j * t * h.astype(complex), state)
    elif method == "eigh":
        counts = _popcounts(dim)
        occupied = counts[np.abs(state) > 1e-14]
        if occupied.size and np.all(occupied == occupied[0]):
            mask = np.flatnonzero(counts == occupied[0])
            hs = h[np.ix_(mask, mask)].toarray()
            evals, evecs = np.linalg.eigh(hs)
            amp = evecs.conj().T @ state[mask]
            out = np.zeros_like(state)
            out[mask] = evecs @ (np.exp(-1j * evals * t) * amp)
        else:
            evals, evecs = np.linalg.eigh(h.toarray())
            out = evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ state))
    else:
        raise ValueError(f"unknown method {method!r}")
    if abs(np.linalg.norm(out) - 1.0) > 1e-10:
        raise ArithmeticError("evolution failed to preserve the norm")
    return out


def _apply_pauli(state: np.ndarray, factors, n_sites: int) -> np.ndarray:
    dim = state.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    out = state
    for site, ax in factors:
        if not 0 <= site < n_sites:
            raise SupportOutsideChainError(f"site {site} outside chain")
        bit = _bit(idx, n_sites, site)
        sign = 2.0 * bit - 1.0  # +1 up, -1 down
        if ax == "z":
            out = out * sign
        else:
            flipped = idx ^ (1 << (n_sites - 1 - site))
            moved = np.empty_like(out)
            moved[flipped] = out[idx] if ax == "x" else out[idx] * (1j * sign)
            out = moved
    return out


def measure(state: np.ndarray, op, n_sites: int | None = None) -> complex:
    """<state|op|state> for a PauliString or DiagonalObservable."""
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if n_sites is None:
        n_sites = n
    if isinstance(op, PauliString):
        return complex(np.vdot(state, _apply_pauli(state, op.factors, n_sites)))
    if isinstance(op, DiagonalObservable):
        from .lattice import SpinWindow

        lo, hi = op.support
        if lo < 0 or hi >= n_sites:
            raise SupportOutsideChainError("support outside chain")
        idx = np.arange(dim, dtype=np.int64)
        vals = np.zeros(dim)
        # evaluate the eigenvalue per basis pattern on the support
        width = hi - lo + 1
        patterns = np.zeros((dim, width), dtype=np.int8)
        for k in range(width):
            patterns[:, k] = np.where(_bit(idx, n_sites, lo + k) == 1, UP, DOWN)
        cache: dict[bytes, float] = {}
        for i in range(dim):
            key = patterns[i].tobytes()
            if key not in cache:
                cache[key] = op.evaluator(
                    SpinWindow(lo, tuple(int(s) for s in patterns[i]))
                )
            vals[i] = cache[key]
        return complex(np.vdot(state, vals * state))
    raise TypeError(f"cannot measure {type(op)}")


def sz_profile(state: np.ndarray, n_sites: int) -> np.ndarray:
    """<sigma^z_l> for every chain site."""
    dim = state.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    prob = np.abs(state) ** 2
    return np.array(
        [float(np.sum(prob * (2.0 * _bit(idx, n_sites, l) - 1.0))) for l in range(n_sites)]
    )


def zz_profile(state: np.ndarray, n_sites: int) -> np.ndarray:
    """<sigma^z_l sigma^z_{l+1}> for every bond."""
    dim = state.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    prob = np.abs(state) ** 2
    out = []
    for l in range(n_sites - 1):
        za = 2.0 * _bit(idx, n_sites, l) - 1.0
        zb = 2.0 * _bit(idx, n_sites, l + 1) - 1.0
        out.append(float(np.sum(prob * za * zb)))
    return np.array(out)


def partial_trace(state: np.ndarray, keep: tuple[int, ...], n_sites: int) -> np.ndarray:
    """Reduced density matrix over ``keep`` (site order preserved).

    Basis ordering: up before down per kept site (so the first basis state
    is all-up), matching the sigma^z = diag(1, -1) convention.
    """
    if any(not 0 <= s < n_sites for s in keep):
        raise SupportOutsideChainError("kept sites outside chain")
    tensor = state.reshape((2,) * n_sites)
    keep = tuple(keep)
    rest = [s for s in range(n_sites) if s not in keep]
    perm = list(keep) + rest
    tensor = np.transpose(tensor, perm)
    mat = tensor.reshape(2 ** len(keep), 2 ** len(rest))
    rho = mat @ mat.conj().T
    return rho[::-1, ::-1]  # bit value 1 = up sorts last; flip to up-first


def entanglement_entropy(state: np.ndarray, cut_after: int, n_sites: int, base: float = 2.0) -> float:
    """Entropy of the left block [0 .. cut_after] against the rest."""
    mat = state.reshape(2 ** (cut_after + 1), -1)
    svals = np.linalg.svd(mat, compute_uv=False)
    p = svals**2
    p = p[p > 1e-300]
    p = p / p.sum()
    return float(-(p * np.log(p)).sum() / np.log(base))


def schmidt_values(state: np.ndarray, cut_after: int) -> np.ndarray:
    mat = state.reshape(2 ** (cut_after + 1), -1)
    svals = np.linalg.svd(mat, compute_uv=False)
    return np.sort(svals**2)[::-1]


# -- duality ------------------------------------------------------------------


def dual_spin_string(folded_spins) -> list[int]:
    """Inverse duality image of a folded product state.

    Maps sigma^z_l to sigma^z_l sigma^z_{l+1}: the image has one more site,
    anchored with the first spin up.
    """
    out = [UP]
    for s in folded_spins:
        out.append(out[-1] * (1 if s == UP else -1))
    return out


@dataclass(frozen=True)
class DualityReport:
    time: float
    deltas: tuple[float, ...]
    folded_profile: np.ndarray
    xxz_bond_profiles: dict
    deviations: dict
    interior: tuple[int, int]
    max_interior_deviation: dict

    @property
    def monotone(self) -> bool:
        vals = [self.max_interior_deviation[d] for d in sorted(self.deltas)]
        return all(a > b for a, b in zip(vals, vals[1:]))

    def to_json(self, path) -> None:
        payload = {
            "time": self.time,
            "deltas": list(self.deltas),
            "interior": list(self.interior),
            "folded_profile": [float(v) for v in self.folded_profile],
            "xxz_bond_profiles": {
                str(d): [float(v) for v in vals] for d, vals in self.xxz_bond_profiles.items()
            },
            "deviations": {
                str(d): [float(v) for v in vals] for d, vals in self.deviations.items()
            },
            "max_interior_deviation": {
                str(d): float(v) for d, v in self.max_interior_deviation.items()
            },
            "monotone": self.monotone,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")


def duality_compare(
    deltas,
    n_sites: int,
    t: float,
    folded_spins=None,
    coupling: float = 1.0,
    edge_exclusion: int = 3,
    method: str = "auto",
) -> DualityReport:
    """Folded <sigma^z_l> against XXZ <sigma^z_l sigma^z_{l+1}> per anisotropy.

    ``n_sites`` is the XXZ chain length; the folded chain has one site
    less.  ``folded_spins`` defaults to a centered window of the period-3
    post-flip state.
    """
    if n_sites > 18:
        raise TooLargeError("duality comparison capped at 18 sites")
    if 4.0 * coupling * t + 2 > n_sites / 2.0:
        raise LightConeEscapeError("light cone reaches the chain edge")
    nf = n_sites - 1
    if folded_spins is None:
        from .lattice import period3_flip_background

        bg = period3_flip_background(16)
        lo = -(nf // 2)
        folded_spins = [int(s) for s in bg.render(0, lo, lo + nf - 1)]
    if len(folded_spins) != nf:
        raise ValueError("folded window must have n_sites - 1 spins")

    folded_h = build_hamiltonian(HamiltonianSpec("folded", nf, coupling))
    folded_state = evolve(product_state(folded_spins), folded_h, t, method)
    folded = sz_profile(folded_state, nf)

    dual0 = dual_spin_string(folded_spins)
    bond_profiles, deviations, maxdev = {}, {}, {}
    interior = (edge_exclusion, nf - 1 - edge_exclusion)
    for delta in deltas:
        h = build_hamiltonian(HamiltonianSpec("xxz", n_sites, coupling, delta=float(delta)))
        state = evolve(product_state(dual0), h, t, method)
        bonds = zz_profile(state, n_sites)
        dev = bonds - folded
        bond_profiles[float(delta)] = bonds
        deviations[float(delta)] = dev
        maxdev[float(delta)] = float(
            np.max(np.abs(dev[interior[0] : interior[1] + 1]))
        )
    return DualityReport(
        t, tuple(float(d) for d in deltas), folded, bond_profiles, deviations, interior, maxdev
    )
