"""Total-effect sensitivity estimation along periodic search curves.

Each factor of interest is driven at a high integer frequency while all other
factors oscillate at low frequencies; the share of output variance found
above the low-frequency band estimates the factor's total effect, including
every interaction it takes part in. Inputs are treated as independent
uniforms over per-factor ranges.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class InputSpace:
    """Uniform-distribution support (lo, hi) per factor."""

    ranges: tuple

    def __post_init__(self):
        object.__setattr__(self, "ranges", tuple((float(lo), float(hi)) for lo, hi in self.ranges))
        for lo, hi in self.ranges:
            if lo > hi:
                raise ValueError(f"invalid range ({lo}, {hi})")

    @property
    def n_factors(self):
        return len(self.ranges)


@dataclass(frozen=True)
class EfastConfig:
    """Sampling design for one analysis.

    samples_per_curve must be odd; with M = max_harmonic the factor of
    interest is driven at floor((Ns - 1) / (2 M)), which always satisfies
    Ns >= 2 * M * omega + 1.
    """

    samples_per_curve: int = 1025
    max_harmonic: int = 4
    resamples: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.samples_per_curve < 3 or self.samples_per_curve % 2 == 0:
            raise ValueError("samples_per_curve must be an odd integer >= 3")
        if self.max_harmonic < 1:
            raise ValueError("max_harmonic must be at least 1")
        if self.resamples < 1:
            raise ValueError("resamples must be at least 1")


@dataclass(frozen=True)
class EfastPlan:
    """Frequencies, phases and grid for one factor-of-interest sweep.

    omega_complement holds the frequencies of the other factors in ascending
    factor order (factor_of_interest skipped).
    """

    factor_of_interest: int
    omega_factor: int
    omega_complement: tuple
    phases: np.ndarray
    s_grid: np.ndarray


@dataclass(frozen=True)
class SensitivityEstimate:
    total_effect: float
    first_order: float
    total_variance: float
    flags: tuple = ()


def complementary_cap(omega, max_harmonic):
    """Largest frequency the complementary set may use for a given sweep."""
    return max(1, omega // (2 * max_harmonic))


def _complement_frequencies(n, cap):
    """Frequencies for the n complementary factors, in ascending factor order.

    Only the lower half of the allowed band is used: harmonics of the
    complementary factors then stay well inside the low-frequency band, which
    keeps their variance from bleeding into the factor-of-interest share.
    Within that band the frequencies are spread as evenly as possible, or
    cycled when there are more factors than band slots; bunching them at the
    bottom (e.g. 1, 2, ...) makes the curve variance strongly phase-dependent
    through cross-modulation of commensurate oscillations.
    """
    band = max(1, cap // 2)
    if n <= band:
        return tuple(int(f) for f in np.floor(np.linspace(1, band, n))) if n else ()
    return tuple(1 + (r % band) for r in range(n))


def assign_frequencies(H, cfg, factor, resample=0):
    """Build the sweep plan for one factor of interest.

    The factor of interest gets omega = floor((Ns - 1) / (2 M)); the other
    factors get low frequencies within 1..floor(omega / (2 M)), assigned in
    ascending factor order. Phases are uniform on [0, 2 pi), drawn from a
    generator seeded by (cfg.seed, factor, resample), so each resample gets
    fresh phases and repeated calls are identical.
    """
    if H < 1:
        raise ValueError("H must be at least 1")
    if not 0 <= factor < H:
        raise ValueError(f"factor {factor} out of range for {H} factors")
    Ns = cfg.samples_per_curve
    M = cfg.max_harmonic
    omega = (Ns - 1) // (2 * M)
    if omega < 1:
        raise ValueError(
            f"samples_per_curve={Ns} is too small for max_harmonic={M}; need at least {2 * M + 1}"
        )
    complement = _complement_frequencies(H - 1, complementary_cap(omega, M))
    rng = np.random.default_rng([cfg.seed, factor, resample])
    phases = rng.uniform(0.0, 2.0 * np.pi, H)
    j = np.arange(1, Ns + 1)
    s_grid = np.pi * (2.0 * j - Ns - 1) / Ns
    return EfastPlan(
        factor_of_interest=factor,
        omega_factor=omega,
        omega_complement=complement,
        phases=phases,
        s_grid=s_grid,
    )


def _full_frequencies(plan, H):
    omegas = np.empty(H, dtype=np.int64)
    others = iter(plan.omega_complement)
    for h in range(H):
        omegas[h] = plan.omega_factor if h == plan.factor_of_interest else next(others)
    return omegas


def generate_samples(plan, space):
    """Evaluate the search curve on the s grid, mapped into the input ranges.

    Row j, column h is lo_h + (hi_h - lo_h) * u with
    u = 1/2 + arcsin(sin(omega_h * s_j + phi_h)) / pi, so every cell stays
    inside its factor's range and sweeps it uniformly.
    """
    H = space.n_factors
    if len(plan.phases) != H:
        raise ValueError("plan arity does not match the input space")
    omegas = _full_frequencies(plan, H)
    angles = np.outer(plan.s_grid, omegas) + plan.phases
    u = 0.5 + np.arcsin(np.sin(angles)) / np.pi
    ranges = np.asarray(space.ranges)
    return ranges[:, 0] + (ranges[:, 1] - ranges[:, 0]) * u


def estimate_total_effect(outputs, plan, max_harmonic):
    """Read the total and first-order effects off the output spectrum.

    With A_p = (1/Ns) sum_j y_j cos(p s_j) and B_p the sine analogue, the
    partial variance at line p is Lambda_p = 2 (A_p^2 + B_p^2); on this grid
    that equals 2 |rfft(y)_p|^2 / Ns^2, which is how it is computed. The
    low-frequency band p <= floor(omega/2) carries the complementary-set
    variance; everything above it is attributed to the factor of interest.
    """
    y = np.asarray(outputs, dtype=np.float64)
    Ns = y.shape[0]
    if Ns % 2 == 0:
        raise ValueError("outputs length must be odd")
    if not np.isfinite(y).all():
        raise ValueError("outputs must be finite")
    spectrum = np.fft.rfft(y)
    lam = 2.0 * (np.abs(spectrum[1:]) / Ns) ** 2  # lam[p-1] is the line at frequency p
    total = float(lam.sum())
    if np.ptp(y) == 0.0 or total == 0.0:
        return SensitivityEstimate(
            total_effect=0.0, first_order=0.0, total_variance=0.0, flags=("zero-variance",)
        )
    cutoff = plan.omega_factor // 2
    complementary = float(lam[:cutoff].sum())
    harmonics = [q * plan.omega_factor for q in range(1, max_harmonic + 1)]
    own = float(sum(lam[p - 1] for p in harmonics if p - 1 < lam.shape[0]))
    te = float(np.clip(1.0 - complementary / total, 0.0, 1.0))
    fo = float(np.clip(own / total, 0.0, 1.0))
    return SensitivityEstimate(total_effect=te, first_order=fo, total_variance=total)


def _evaluate(model, X):
    """Evaluate the model on every row, vectorized when the model allows it."""
    try:
        y = np.asarray(model(X), dtype=np.float64)
        if y.shape != (X.shape[0],):
            y = y.reshape(X.shape[0])
    except Exception:
        y = np.array([float(model(X[j])) for j in range(X.shape[0])])
    if not np.isfinite(y).all():
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise ValueError(f"model returned non-finite output {y[bad]} at input {X[bad].tolist()}")
    return y


def _sweep(model, space, cfg, factor, resample):
    plan = assign_frequencies(space.n_factors, cfg, factor, resample)
    X = generate_samples(plan, space)
    y = _evaluate(model, X)
    return estimate_total_effect(y, plan, cfg.max_harmonic)


def total_effects(model, space, cfg, workers=1):
    """Total-effect estimate per factor, averaged over phase resamples.

    The model may map an (n, H) matrix to an (n,) vector (preferred) or a
    single length-H vector to a scalar. Sweeps are independent; with
    workers > 1 they run on a thread pool, and results are identical to the
    sequential ones because aggregation order is fixed.
    """
    H = space.n_factors
    jobs = [(h, r) for h in range(H) for r in range(cfg.resamples)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            estimates = list(pool.map(lambda j: _sweep(model, space, cfg, *j), jobs))
    else:
        estimates = [_sweep(model, space, cfg, *job) for job in jobs]
    per_factor = np.array([e.total_effect for e in estimates]).reshape(H, cfg.resamples)
    return per_factor.mean(axis=1)
