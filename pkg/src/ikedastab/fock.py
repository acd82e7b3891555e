"""Truncated bosonic state space for one and two modes.

Index convention (fixed here, used everywhere): a two-mode amplitude
matrix ``amps[m, n]`` holds the coefficient of ``|m>_mode1 |n>_mode2``,
where mode 1 is the first entry of ``mode_labels`` and mode 2 the second.
Flattening is C-order, ``flat = m * (n_max + 1) + n``.

States may be sub-normalized: a conditional measurement leaves its success
probability behind as the squared norm. Normalization is always an explicit
step (``normalized()``), never implicit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import (
    CutoffMismatch,
    CutoffWarning,
    DegenerateWindow,
    TailTooHeavy,
    UnknownMode,
)

NORM_TOL = 1e-12          # |norm^2 - 1| below this counts as normalized
DEFAULT_LEAK_THRESHOLD = 1e-8
TAIL_ERROR_THRESHOLD = 1e-6


@dataclass(frozen=True)
class FockCutoff:
    """Highest retained Fock level per mode; dimension per mode is n_max + 1."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")

    @property
    def dim(self) -> int:
        return self.n_max + 1


def recommended_cutoff(alpha: complex) -> int:
    """Sizing rule: n_max >= |alpha|^2 + 6|alpha| keeps the truncated tail
    population of a coherent state below ~1e-8."""
    a = abs(alpha)
    return math.ceil(a * a + 6.0 * a)


@dataclass
class ModeState:
    """Single-mode state as a dense Fock amplitude vector."""

    amps: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (self.cutoff.dim,):
            raise ValueError(
                f"amps length {self.amps.shape} does not match cutoff dim {self.cutoff.dim}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm() ** 2 - 1.0) < NORM_TOL

    def normalized(self) -> "ModeState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return ModeState(self.amps / n, self.cutoff)

    def mean_photon(self) -> float:
        n = np.arange(self.cutoff.dim)
        return float(np.sum(n * np.abs(self.amps) ** 2))

    def mean_field(self) -> complex:
        """<a> via the annihilation ladder sum."""
        n = np.arange(1, self.cutoff.dim)
        return complex(np.sum(np.conj(self.amps[:-1]) * np.sqrt(n) * self.amps[1:]))


@dataclass
class TwoModeState:
    """Two-mode state; see module docstring for the index convention."""

    amps: np.ndarray
    cutoff: FockCutoff
    mode_labels: tuple = ("a", "b")

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        d = self.cutoff.dim
        if self.amps.shape != (d, d):
            raise ValueError(f"amps shape {self.amps.shape} != ({d},{d})")
        if len(self.mode_labels) != 2 or self.mode_labels[0] == self.mode_labels[1]:
            raise ValueError("mode_labels must be two distinct names")

    def mode_index(self, label: str) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise UnknownMode(
                f"mode {label!r} not in {self.mode_labels}"
            ) from None

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm() ** 2 - 1.0) < NORM_TOL

    def normalized(self) -> "TwoModeState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return TwoModeState(self.amps / n, self.cutoff, self.mode_labels)

    def relabeled(self, mode_labels) -> "TwoModeState":
        return TwoModeState(self.amps, self.cutoff, tuple(mode_labels))


@dataclass
class DensityOperator:
    """Single-mode density matrix; sub-normalized trace allowed after projection."""

    matrix: np.ndarray
    cutoff: FockCutoff

    HERMITICITY_TOL = 1e-12
    EIGENVALUE_TOL = -1e-10

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        d = self.cutoff.dim
        if self.matrix.shape != (d, d):
            raise ValueError(f"matrix shape {self.matrix.shape} != ({d},{d})")

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def purity(self) -> float:
        t = self.trace()
        return float(np.real(np.trace(self.matrix @ self.matrix))) / t**2

    def hermiticity_deviation(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.matrix)))


@dataclass
class QGrid:
    """Husimi Q values over a rectangular phase-plane window.

    ``values[i, j]`` is Q at re = re_axis[j], im = im_axis[i].
    """

    window: tuple          # (re_min, re_max, im_min, im_max)
    resolution: tuple      # (n_re, n_im)
    values: np.ndarray = field(repr=False)

    @property
    def re_axis(self) -> np.ndarray:
        re_min, re_max, _, _ = self.window
        return np.linspace(re_min, re_max, self.resolution[0])

    @property
    def im_axis(self) -> np.ndarray:
        _, _, im_min, im_max = self.window
        return np.linspace(im_min, im_max, self.resolution[1])

    def cell_area(self) -> float:
        re_min, re_max, im_min, im_max = self.window
        n_re, n_im = self.resolution
        return ((re_max - re_min) / (n_re - 1)) * ((im_max - im_min) / (n_im - 1))

    def integral(self) -> float:
        """Riemann sum times cell area; <= trace + grid tolerance."""
        return float(np.sum(self.values) * self.cell_area())


def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    """Raw truncated coherent amplitudes c_n = e^{-|a|^2/2} a^n / sqrt(n!).

    Log-gamma form keeps this stable far beyond n = 170.
    """
    if alpha == 0:
        c = np.zeros(n_max + 1, dtype=np.complex128)
        c[0] = 1.0
        return c
    n = np.arange(n_max + 1)
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def make_coherent(alpha: complex, cutoff: FockCutoff) -> ModeState:
    """Truncated coherent state |alpha>.

    Warns if the cutoff violates the sizing rule; raises TailTooHeavy when
    the truncated tail population reaches 1e-6.
    """
    if cutoff.n_max < recommended_cutoff(alpha):
        warnings.warn(
            f"n_max={cutoff.n_max} below recommended {recommended_cutoff(alpha)} "
            f"for |alpha|={abs(alpha):.3f}",
            CutoffWarning,
            stacklevel=2,
        )
    amps = coherent_amplitudes(alpha, cutoff.n_max)
    tail = 1.0 - float(np.sum(np.abs(amps) ** 2))
    if tail >= TAIL_ERROR_THRESHOLD:
        raise TailTooHeavy(
            f"tail population {tail:.3e} >= {TAIL_ERROR_THRESHOLD:g} "
            f"(|alpha|={abs(alpha):.3f}, n_max={cutoff.n_max})"
        )
    return ModeState(amps, cutoff)


def tensor_product(u: ModeState, v: ModeState, mode_labels=("a", "b")) -> TwoModeState:
    if u.cutoff != v.cutoff:
        raise CutoffMismatch(f"{u.cutoff} vs {v.cutoff}")
    return TwoModeState(np.outer(u.amps, v.amps), u.cutoff, tuple(mode_labels))


def overlap(s1: TwoModeState, s2: TwoModeState) -> complex:
    """<s1|s2>, conjugate-linear in the first argument."""
    if s1.cutoff != s2.cutoff:
        raise CutoffMismatch(f"{s1.cutoff} vs {s2.cutoff}")
    return complex(np.vdot(s1.amps, s2.amps))


def reduce_mode(s: TwoModeState, keep: str) -> DensityOperator:
    """Partial trace down to the kept mode; trace equals the input squared norm."""
    k = s.mode_index(keep)
    if k == 0:
        rho = s.amps @ s.amps.conj().T
    else:
        rho = s.amps.T @ s.amps.conj()
    return DensityOperator(rho, s.cutoff)


def mean_field(s: TwoModeState, mode: str) -> complex:
    """<a_mode> of a two-mode state via the ladder sum."""
    k = s.mode_index(mode)
    d = s.cutoff.dim
    sq = np.sqrt(np.arange(1, d))
    if k == 0:
        return complex(np.sum(np.conj(s.amps[:-1, :]) * sq[:, None] * s.amps[1:, :]))
    return complex(np.sum(np.conj(s.amps[:, :-1]) * sq[None, :] * s.amps[:, 1:]))


def leak_fraction(s: TwoModeState) -> float:
    """Population in the top two Fock levels of either mode (union), in [0, 1]."""
    d = s.cutoff.dim
    p = np.abs(s.amps) ** 2
    top = min(2, d)
    band1 = float(np.sum(p[d - top:, :]))
    band2 = float(np.sum(p[:, d - top:]))
    corner = float(np.sum(p[d - top:, d - top:]))
    return band1 + band2 - corner


def husimi_q(rho: DensityOperator, window, resolution) -> QGrid:
    """Q(beta) = <beta|rho|beta> / pi on a rectangular grid.

    ``window`` = (re_min, re_max, im_min, im_max); ``resolution`` = (n_re, n_im).
    """
    re_min, re_max, im_min, im_max = window
    n_re, n_im = resolution
    if n_re < 2 or n_im < 2 or re_max <= re_min or im_max <= im_min:
        raise DegenerateWindow(f"window={window}, resolution={resolution}")
    re = np.linspace(re_min, re_max, n_re)
    im = np.linspace(im_min, im_max, n_im)
    d = rho.cutoff.dim
    # matrix of coherent vectors over all grid points, shape (n_im*n_re, d)
    betas = (re[None, :] + 1j * im[:, None]).ravel()
    n = np.arange(d)
    mags = np.abs(betas)
    with np.errstate(divide="ignore"):
        log_abs = np.where(mags > 0, np.log(mags), 0.0)
    log_mag = (-0.5 * mags[:, None] ** 2 + n[None, :] * log_abs[:, None]
               - 0.5 * gammaln(n + 1)[None, :])
    B = np.exp(log_mag) * np.exp(1j * n[None, :] * np.angle(betas)[:, None])
    B[mags == 0, :] = 0.0
    B[mags == 0, 0] = 1.0
    vals = np.real(np.einsum("bi,ij,bj->b", B.conj(), rho.matrix, B)) / np.pi
    if vals.min() < -1e-8:
        raise ValueError(f"Q grid has negative value {vals.min():.3e}; density not PSD")
    vals = np.clip(vals, 0.0, None)
    return QGrid(tuple(window), (n_re, n_im), vals.reshape(n_im, n_re))
