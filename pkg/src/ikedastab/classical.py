"""c-number dynamics of the Kerr-MZI feedback loop.

Three map variants, all on a single complex amplitude ``a``:

* ``single_block``:  a' = n_f [a_in + i e^{i theta/2} cos(theta/2) a],
  theta = phi + kappa |a|^2   (one MZI, output fed back with the input).
* ``ikeda_limit``:   a' = n_f a_in + e^{i(phi + kappa |a|^2 / 2)} R a
  (small-Kerr generalized Ikeda form with a fixed feedback factor R).
* ``composite``:     a' = n_f [a_in - sin(delta) e^{i(phi + kappa |a|^2 / 2)} a]
  (two stabilized blocks; ``phi`` is the composite linear phase
  Phi = (phi_I + phi_II)/2, ``kappa`` the total Kerr kappa_I + kappa_II,
  and the constant -1 = e^{i pi} is frozen from the symbolic composition
  of the two block matrices -- see tests for the derivation check).

``input_norm`` selects n_f: ``half_power`` applies the 1/sqrt(2) of the
feedback beam splitter to the input term (faithful to the single-MZI map);
``unit`` drops it. The figure-level regimes of the source device are
reproduced with ``unit`` normalization (see the fig2a/fig2b presets).
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import NoConvergence, NonFiniteError

SQRT2 = math.sqrt(2.0)
DEFAULT_BURN_IN = 1000
NEWTON_MAX_STEPS = 100
NEWTON_TOL = 1e-10


class MapVariant(Enum):
    SINGLE_BLOCK = "single_block"
    IKEDA_LIMIT = "ikeda_limit"
    COMPOSITE = "composite"


class InputNorm(Enum):
    HALF_POWER = "half_power"
    UNIT = "unit"


@dataclass(frozen=True)
class MapConfig:
    variant: MapVariant
    a_in: complex
    phi: float
    kappa: float
    feedback_R: float = 0.0      # ikeda_limit only
    delta: float = 0.0           # composite only
    input_norm: InputNorm = InputNorm.HALF_POWER

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.variant is MapVariant.IKEDA_LIMIT and not (
                0.0 <= self.feedback_R <= 1.0 / SQRT2 + 1e-15):
            raise ValueError("feedback_R must lie in [0, 1/sqrt2]")

    @property
    def norm_factor(self) -> float:
        return 1.0 if self.input_norm is InputNorm.UNIT else 1.0 / SQRT2

    @property
    def effective_input(self) -> complex:
        """The additive input term of the map (a_in scaled by the norm factor)."""
        return self.a_in * self.norm_factor


@dataclass
class Trajectory:
    amplitudes: np.ndarray          # a_0 .. a_n
    config: MapConfig
    burn_in: int = 0

    @property
    def points(self):
        return list(enumerate(self.amplitudes))

    def __len__(self):
        return len(self.amplitudes)


@dataclass
class FixedPointResult:
    point: complex
    residual: float
    jacobian_eigenvalues: tuple
    stable: bool
    newton_steps: int = 0

    @property
    def leading_magnitude(self) -> float:
        return max(abs(e) for e in self.jacobian_eigenvalues)


def make_step(cfg: MapConfig):
    """Closure computing one iterate; shared by step/iterate/lyapunov."""
    nf = cfg.norm_factor
    a_in = cfg.a_in
    phi, kappa = cfg.phi, cfg.kappa
    if cfg.variant is MapVariant.SINGLE_BLOCK:
        def f(a):
            th = phi + kappa * (a.real * a.real + a.imag * a.imag)
            return nf * (a_in + 0.5j * (cmath.exp(1j * th) + 1.0) * a)
    elif cfg.variant is MapVariant.IKEDA_LIMIT:
        R = cfg.feedback_R
        def f(a):
            ps = phi + 0.5 * kappa * (a.real * a.real + a.imag * a.imag)
            return nf * a_in + R * cmath.exp(1j * ps) * a
    else:
        sd = math.sin(cfg.delta)
        def f(a):
            ps = phi + 0.5 * kappa * (a.real * a.real + a.imag * a.imag)
            return nf * (a_in - sd * cmath.exp(1j * ps) * a)
    return f


def make_jacobian(cfg: MapConfig):
    """Closure returning the Wirtinger pair (dF/da, dF/da*)."""
    nf = cfg.norm_factor
    phi, kappa = cfg.phi, cfg.kappa
    if cfg.variant is MapVariant.SINGLE_BLOCK:
        def jw(a):
            r2 = a.real * a.real + a.imag * a.imag
            eth = cmath.exp(1j * (phi + kappa * r2))
            fa = nf * (0.5j * (eth + 1.0) - 0.5 * kappa * r2 * eth)
            fab = -nf * 0.5 * kappa * a * a * eth
            return fa, fab
    elif cfg.variant is MapVariant.IKEDA_LIMIT:
        R = cfg.feedback_R
        def jw(a):
            r2 = a.real * a.real + a.imag * a.imag
            eps = R * cmath.exp(1j * (phi + 0.5 * kappa * r2))
            return eps * (1.0 + 0.5j * kappa * r2), eps * 0.5j * kappa * a * a
    else:
        sd = math.sin(cfg.delta)
        def jw(a):
            r2 = a.real * a.real + a.imag * a.imag
            eps = -nf * sd * cmath.exp(1j * (phi + 0.5 * kappa * r2))
            return eps * (1.0 + 0.5j * kappa * r2), eps * 0.5j * kappa * a * a
    return jw


def step(cfg: MapConfig, a: complex) -> complex:
    a1 = make_step(cfg)(a)
    if not (math.isfinite(a1.real) and math.isfinite(a1.imag)):
        raise NonFiniteError(f"non-finite iterate from a={a!r}")
    return a1


def jacobian(cfg: MapConfig, a: complex) -> np.ndarray:
    """Real 2x2 Jacobian of the map in (Re a, Im a)."""
    fa, fab = make_jacobian(cfg)(a)
    s, d = fa + fab, fa - fab
    J = np.array([[s.real, -d.imag], [s.imag, d.real]])
    if not np.all(np.isfinite(J)):
        raise NonFiniteError(f"non-finite jacobian at a={a!r}")
    return J


def iterate(cfg: MapConfig, a0: complex, n: int) -> Trajectory:
    """Apply the map n times, recording every iterate (n+1 points).

    Raises NonFiniteError carrying the partial trajectory when an iterate
    overflows.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    f = make_step(cfg)
    amps = np.empty(n + 1, dtype=np.complex128)
    a = complex(a0)
    amps[0] = a
    isfinite = math.isfinite
    for j in range(1, n + 1):
        a = f(a)
        if not (isfinite(a.real) and isfinite(a.imag)):
            raise NonFiniteError(
                f"non-finite iterate at j={j}", index=j,
                trajectory=Trajectory(amps[:j].copy(), cfg),
            )
        amps[j] = a
    return Trajectory(amps, cfg)


def lyapunov(cfg: MapConfig, a0: complex, n: int,
             burn_in: int = DEFAULT_BURN_IN) -> float:
    """Largest Lyapunov exponent by tangent-vector renormalization.

    Returns -inf for super-stable maps whose tangent vector collapses to 0.
    """
    if n - burn_in < 1000:
        raise ValueError("need n - burn_in >= 1000 for a stable estimate")
    f = make_step(cfg)
    jw = make_jacobian(cfg)
    a = complex(a0)
    vx, vy = 1.0, 0.0
    acc = 0.0
    count = 0
    isfinite = math.isfinite
    for j in range(n):
        fa, fab = jw(a)
        s, d = fa + fab, fa - fab
        wx = s.real * vx - d.imag * vy
        wy = s.imag * vx + d.real * vy
        norm = math.hypot(wx, wy)
        if norm == 0.0:
            return float("-inf")
        vx, vy = wx / norm, wy / norm
        if j >= burn_in:
            acc += math.log(norm)
            count += 1
        a = f(a)
        if not (isfinite(a.real) and isfinite(a.imag)):
            raise NonFiniteError(f"non-finite iterate at j={j + 1}", index=j + 1)
    return acc / count


def fixed_point(cfg: MapConfig, guess: complex) -> FixedPointResult:
    """Newton iteration on F(a) - a in R^2; residual < 1e-10 on success."""
    f = make_step(cfg)
    a = complex(guess)
    best = None
    best_res = math.inf
    for it in range(NEWTON_MAX_STEPS + 1):
        fa_val = f(a)
        if not (math.isfinite(fa_val.real) and math.isfinite(fa_val.imag)):
            raise NonFiniteError(f"non-finite map value at a={a!r}")
        g = fa_val - a
        res = abs(g)
        if res < best_res:
            best_res, best = res, a
        if res < NEWTON_TOL:
            J = jacobian(cfg, a)
            eig = np.linalg.eigvals(J)
            return FixedPointResult(
                point=a,
                residual=res,
                jacobian_eigenvalues=(complex(eig[0]), complex(eig[1])),
                stable=bool(np.all(np.abs(eig) < 1.0)),
                newton_steps=it,
            )
        J = jacobian(cfg, a) - np.eye(2)
        try:
            dx = np.linalg.solve(J, [-g.real, -g.imag])
        except np.linalg.LinAlgError:
            break
        a = complex(a.real + dx[0], a.imag + dx[1])
    J = jacobian(cfg, best)
    eig = np.linalg.eigvals(J)
    raise NoConvergence(
        f"no convergence after {NEWTON_MAX_STEPS} Newton steps "
        f"(best residual {best_res:.3e})",
        best=FixedPointResult(
            point=best, residual=best_res,
            jacobian_eigenvalues=(complex(eig[0]), complex(eig[1])),
            stable=bool(np.all(np.abs(eig) < 1.0)),
            newton_steps=NEWTON_MAX_STEPS,
        ),
    )


# ---------------------------------------------------------------------------
# presets reproducing the figure-level regimes
# ---------------------------------------------------------------------------

FIG2_PHI_I = 0.4
FIG2_A_IN = 5.0
FIG2_KAPPA = 0.1
FIG2_R = 0.1


def fig2_delta(R: float = FIG2_R) -> float:
    """delta solving R = sin(delta)/sqrt(2)."""
    return math.asin(R * SQRT2)


def fig2a_config() -> MapConfig:
    """Chaotic single-block regime: phi = pi/2 + phi_I, unit input norm."""
    return MapConfig(
        variant=MapVariant.SINGLE_BLOCK,
        a_in=FIG2_A_IN,
        phi=math.pi / 2 + FIG2_PHI_I,
        kappa=FIG2_KAPPA,
        input_norm=InputNorm.UNIT,
    )


def fig2b_config(R: float = FIG2_R) -> MapConfig:
    """Stabilized regime: phi = pi/2 + phi_I + delta, fixed feedback R."""
    return MapConfig(
        variant=MapVariant.IKEDA_LIMIT,
        a_in=FIG2_A_IN,
        phi=math.pi / 2 + FIG2_PHI_I + fig2_delta(R),
        kappa=FIG2_KAPPA,
        feedback_R=R,
        input_norm=InputNorm.UNIT,
    )


# ---------------------------------------------------------------------------
# parameter scans
# ---------------------------------------------------------------------------

SCAN_PARAMETERS = ("R", "delta", "kappa", "phi", "a_in_magnitude")


@dataclass
class ScanRow:
    value: float
    lyapunov: float
    fixed_point: FixedPointResult | None
    error: str | None = None

    @property
    def branch_lyapunov(self) -> float:
        """ln |leading Jacobian eigenvalue| of the tracked fixed point.

        This is the Lyapunov exponent of the trajectory started exactly on
        the fixed-point branch seeded at the effective input; it maps the
        stability boundary of the stabilized branch even where the free
        iteration settles onto a coexisting attractor.
        """
        if self.fixed_point is None:
            return math.nan
        return math.log(self.fixed_point.leading_magnitude)


def _substitute(cfg: MapConfig, parameter: str, value: float) -> MapConfig:
    if parameter == "R":
        return replace(cfg, feedback_R=value)
    if parameter == "delta":
        return replace(cfg, delta=value)
    if parameter == "kappa":
        return replace(cfg, kappa=value)
    if parameter == "phi":
        return replace(cfg, phi=value)
    if parameter == "a_in_magnitude":
        phase = cmath.phase(cfg.a_in) if cfg.a_in != 0 else 0.0
        return replace(cfg, a_in=value * cmath.exp(1j * phase))
    raise ValueError(f"parameter must be one of {SCAN_PARAMETERS}")


def _scan_row(args) -> ScanRow:
    cfg_template, parameter, value, a0, n, burn_in = args
    cfg = _substitute(cfg_template, parameter, value)
    try:
        lam = lyapunov(cfg, a0, n, burn_in)
    except NonFiniteError:
        return ScanRow(value, math.nan, None, error="non-finite trajectory")
    try:
        fp = fixed_point(cfg, cfg.effective_input)
    except NoConvergence as exc:
        return ScanRow(value, lam, exc.best, error="fixed point not converged")
    except NonFiniteError:
        return ScanRow(value, lam, None, error="non-finite in Newton")
    return ScanRow(value, lam, fp)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("IKEDASTAB_WORKERS", "1")))
    except ValueError:
        return 1


def scan(cfg_template: MapConfig, parameter: str, lo: float, hi: float,
         steps: int, a0: complex = 0j, n: int = 20000,
         burn_in: int = DEFAULT_BURN_IN, workers: int | None = None) -> list:
    """Lyapunov exponent and tracked fixed point over a parameter grid.

    Rows are independent (the fixed-point Newton seed is each row's
    effective input, not a continuation) and keep grid order regardless of
    the worker count. Per-row failures are recorded on the row, not raised.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if parameter not in SCAN_PARAMETERS:
        raise ValueError(f"parameter must be one of {SCAN_PARAMETERS}")
    values = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    jobs = [(cfg_template, parameter, float(v), a0, n, burn_in) for v in values]
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or len(jobs) == 1:
        return [_scan_row(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_row, jobs))
