"""Kerr-MZI block unitaries, stabilization parameter relations, revival
arithmetic, and coherent beam-splitter mixing.

Block construction
------------------
A block with linear phase ``phi`` and Kerr coefficient ``kappa`` acts on the
truncated two-mode space as

    U = exp(i pi/2 N) . exp[i (phi * n_arm + kappa * n_arm^2)]

where ``N`` is the total number operator and ``n_arm`` counts photons in the
Kerr-carrying interferometer arm:

    orientation I :  n_arm = (N - J)/2   (arm mode  (i a + b)/sqrt2)
    orientation II:  n_arm = (N + J)/2   (arm mode  (a + i b)/sqrt2)

with J = i(a†b - b†a). Both generators commute with N, so U is assembled
sector-by-sector in total photon number from the eigendecomposition of
``n_arm``; the result is unitary to rounding by construction
(``block_generator_check`` measures the residual).

In the Heisenberg picture this U reproduces the input-output rotation
pattern of the block exactly, with the phase operator carried as
``phi + kappa + 2 kappa n_arm``. The ``kappa * n_arm^2`` form is the one
whose fractional-revival phase table is ``exp(i kappa_total n^2)``; relative
to a ``kappa * n_arm (n_arm - 1)`` normal-ordered form it differs only by
the constant ``kappa`` folded into the linear phase (a splitter-phase
convention). The classical-correspondence property bounds this offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DeltaOutOfRange, LeakExceeded, NonUnitary
from .fock import DEFAULT_LEAK_THRESHOLD, FockCutoff, TwoModeState, leak_fraction

UNITARITY_TOL = 1e-10
DEFAULT_L_MAX = 64


class Orientation(Enum):
    I = "I"
    II = "II"


@dataclass(frozen=True)
class BlockParams:
    """One MZI block: c-number refractive shift and Kerr coefficient."""

    phi: float
    kappa: float
    orientation: Orientation = Orientation.I

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0 (fold signs into phi)")


@dataclass(frozen=True)
class RevivalInfo:
    is_revival: bool
    m: int
    l: int
    tolerance: float


@dataclass(frozen=True)
class StabilizedPair:
    """Blocks I and II satisfying the stabilization offsets.

    Invariants: (phi_I - phi_II)/2 = pi/2 - delta, kappa_I = kappa_II,
    feedback_R = sin(delta)/sqrt(2).
    """

    block_I: BlockParams
    block_II: BlockParams
    delta: float
    feedback_R: float

    @property
    def cap_phase(self) -> float:
        """Composite linear phase Phi = (phi_I + phi_II)/2."""
        return 0.5 * (self.block_I.phi + self.block_II.phi)

    @property
    def kappa_total(self) -> float:
        return self.block_I.kappa + self.block_II.kappa


def stabilization_offsets(block_I: BlockParams, delta: float) -> StabilizedPair:
    """Derive the stabilizer block from block I and the offset delta."""
    if not 0.0 < delta < math.pi / 2:
        raise DeltaOutOfRange(f"delta={delta} outside (0, pi/2)")
    block_II = BlockParams(
        phi=block_I.phi - math.pi + 2.0 * delta,
        kappa=block_I.kappa,
        orientation=Orientation.II,
    )
    return StabilizedPair(
        block_I=block_I,
        block_II=block_II,
        delta=delta,
        feedback_R=math.sin(delta) / math.sqrt(2.0),
    )


def kerr_phase_table(kappa: float, n_terms: int) -> np.ndarray:
    """exp(i kappa n^2) for n = 0 .. n_terms-1."""
    n = np.arange(n_terms)
    return np.exp(1j * kappa * n.astype(float) ** 2)


def revival_check(kappa: float, tolerance: float,
                  l_max: int = DEFAULT_L_MAX) -> RevivalInfo:
    """Find the smallest l <= l_max with |kappa - pi m / l| <= tolerance."""
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    for l in range(1, l_max + 1):
        m = round(kappa * l / math.pi)
        if abs(kappa - math.pi * m / l) <= tolerance:
            g = math.gcd(abs(m), l)
            m, l = m // g, l // g
            if abs(kappa - math.pi / 2) <= tolerance:
                # the simplest fractional revival: 1 for even n, i for odd n
                table = kerr_phase_table(math.pi / 2, 6)
                expect = np.array([1, 1j] * 3)
                assert np.allclose(table, expect, atol=1e-12)
            return RevivalInfo(True, m, l, tolerance)
    return RevivalInfo(False, 0, 0, tolerance)


def mix_with_input(alpha_fed: complex, alpha_in: complex) -> complex:
    """50-50 mixing of the fed-back coherent amplitude with the fixed input."""
    return (alpha_in + alpha_fed) / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# c-number layer
# ---------------------------------------------------------------------------

def cnumber_theta(p: BlockParams, intensity: float) -> float:
    """theta = phi + kappa * |field|^2 for the block."""
    return p.phi + p.kappa * intensity


def cnumber_block_matrix(p: BlockParams, intensity: float) -> np.ndarray:
    """The 2x2 c-number transfer matrix i e^{i theta/2} R(theta/2).

    Orientation I has +sin in the upper-right slot, orientation II the
    transposed sign pattern.
    """
    th = cnumber_theta(p, intensity)
    c, s = math.cos(th / 2.0), math.sin(th / 2.0)
    pref = 1j * np.exp(1j * th / 2.0)
    if p.orientation is Orientation.I:
        rot = np.array([[c, s], [-s, c]])
    else:
        rot = np.array([[c, -s], [s, c]])
    return pref * rot


def cnumber_composite_coefficients(pair: StabilizedPair, intensity: float):
    """(r_coeff, q_coeff) of the two-block c-number cascade on input (a, 0).

    Composes block I with the orientation-II stabilizer at the same input
    intensity (the arm entering the second Kerr element carries the original
    intensity exactly).
    """
    m1 = cnumber_block_matrix(pair.block_I, intensity)
    m2 = cnumber_block_matrix(pair.block_II, intensity)
    m = m2 @ m1
    return complex(m[0, 0]), complex(m[1, 0])


# ---------------------------------------------------------------------------
# block unitaries on the truncated space
# ---------------------------------------------------------------------------

_ARM_BASIS_CACHE: dict = {}


def _sector_indices(n_max: int):
    """Per total-N sector: flat indices and mode-1 occupations, m ascending."""
    out = []
    for N in range(2 * n_max + 1):
        ms = np.arange(max(0, N - n_max), min(n_max, N) + 1)
        ns = N - ms
        out.append((N, ms * (n_max + 1) + ns, ms, ns))
    return out


def _arm_basis(n_max: int, orientation: Orientation):
    """Eigendecomposition of n_arm per sector, cached per (n_max, orientation)."""
    key = (n_max, orientation)
    cached = _ARM_BASIS_CACHE.get(key)
    if cached is not None:
        return cached
    sign = -0.5 if orientation is Orientation.I else 0.5
    sectors = []
    for N, flat, ms, ns in _sector_indices(n_max):
        d = len(ms)
        M = np.diag(np.full(d, N / 2.0)).astype(np.complex128)
        # J|m,n> = i sqrt((m+1)n)|m+1,n-1> - i sqrt(m(n+1))|m-1,n+1>
        for k in range(d):
            m, n = int(ms[k]), int(ns[k])
            if m + 1 <= n_max and n - 1 >= 0:
                M[k + 1, k] += sign * 1j * math.sqrt((m + 1) * n)
            if m - 1 >= 0 and n + 1 <= n_max:
                M[k - 1, k] += sign * (-1j) * math.sqrt(m * (n + 1))
        lam, V = np.linalg.eigh(M)
        sectors.append((N, flat, lam, V))
    _ARM_BASIS_CACHE[key] = sectors
    return sectors


class BlockUnitary:
    """One block's unitary, stored sector-by-sector in total photon number."""

    def __init__(self, params: BlockParams, cutoff: FockCutoff):
        self.params = params
        self.cutoff = cutoff
        self._sectors = []
        for N, flat, lam, V in _arm_basis(cutoff.n_max, params.orientation):
            phase = params.phi * lam + params.kappa * lam * lam
            U = (V * np.exp(1j * phase)) @ V.conj().T
            U *= 1j ** (N % 4)
            self._sectors.append((flat, U))

    def apply_flat(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for flat, U in self._sectors:
            out[flat] = U @ psi[flat]
        return out

    def apply(self, s: TwoModeState) -> TwoModeState:
        d = self.cutoff.dim
        out = self.apply_flat(s.amps.ravel()).reshape(d, d)
        return TwoModeState(out, s.cutoff, s.mode_labels)

    def unitarity_deviation(self) -> float:
        dev = 0.0
        for flat, U in self._sectors:
            dev = max(dev, float(np.max(np.abs(U.conj().T @ U - np.eye(len(flat))))))
        return dev

    def dense(self) -> np.ndarray:
        """Full matrix; for small cutoffs and diagnostics only."""
        d = self.cutoff.dim**2
        M = np.zeros((d, d), dtype=np.complex128)
        for flat, U in self._sectors:
            M[np.ix_(flat, flat)] = U
        return M


def apply_block(s: TwoModeState, p: BlockParams,
                leak_threshold: float = DEFAULT_LEAK_THRESHOLD) -> TwoModeState:
    """Apply one block unitary; checks unitarity and post-application leak."""
    if s.cutoff.dim < 2:
        raise ValueError("cutoff too small for a two-mode block")
    bu = BlockUnitary(p, s.cutoff)
    dev = bu.unitarity_deviation()
    if dev >= UNITARITY_TOL:
        raise NonUnitary(f"construction deviation {dev:.3e} >= {UNITARITY_TOL:g}")
    out = bu.apply(s)
    leak = leak_fraction(out)
    if leak >= leak_threshold:
        raise LeakExceeded(
            f"leak {leak:.3e} >= {leak_threshold:g} after block "
            f"(phi={p.phi:.4f}, kappa={p.kappa:.4f}); increase n_max"
        )
    return out


def block_generator_check(p: BlockParams, cutoff: FockCutoff) -> float:
    """Max deviation from unitarity of the constructed block, ||U†U - 1||_max."""
    return BlockUnitary(p, cutoff).unitarity_deviation()
