"""Inter-cell interference model and BER analysis.

A victim cell programmed to a level is read against a reference margin
``V_ref``. Programming a neighbour by a swing ``dV`` adds ``alpha * dV`` to the
victim on average, eroding the margin. A d-imbalance code caps the swing at
``dV * d / (q-1)``. Everything is expressed in units of the read noise sigma.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, InvalidParams

B0, B1, B2 = -0.844, -0.502, -0.469
APPROX_DOMAIN = (0.0, 8.0)


def q_exact(x: float) -> float:
    """Gaussian tail probability ``P(Z > x)``."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_approx(x: float) -> float:
    """Quadratic-exponent fit of the Gaussian tail, valid on ``[0, 8]``."""
    lo, hi = APPROX_DOMAIN
    if not lo <= x <= hi:
        raise DomainError(f"tail approximation is fitted on [{lo}, {hi}], got {x}")
    return math.exp(B2 * x * x + B1 * x + B0)


def _level_factor(q: int) -> float:
    if q < 2:
        raise InvalidParams(f"q must be >= 2, got {q}")
    return 2.0 * (q - 1) / q


def ber_baseline(q: int, vref_sigma: float) -> float:
    if vref_sigma < 0:
        raise DomainError(f"read margin must be non-negative, got {vref_sigma}")
    return _level_factor(q) * q_exact(vref_sigma)


def invert_ber_to_margin(ber: float, q: int) -> float:
    """Read margin (in sigma units) giving ``ber`` without interference."""
    top = _level_factor(q) * 0.5
    if not 0.0 < ber <= top:
        raise DomainError(f"BER must lie in (0, {top}], got {ber}")
    if ber == top:
        return 0.0
    return optimize.bisect(lambda v: ber_baseline(q, v) - ber, 0.0, 40.0, xtol=1e-12, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class IciNoiseParams:
    mean: float
    variance: float
    standard_variance: float

    def __iter__(self):
        # unpacks as (mean, variance)
        return iter((self.mean, self.variance))


def ici_noise_params(alpha: float, L: int, dVpp: float) -> IciNoiseParams:
    """Moments of ``alpha * sum(U_k)``, ``U_k ~ Uniform[0, dVpp]``, ``k = 1..L``.

    ``variance`` follows the tabulated closed form ``alpha^2 (L/2) ((dVpp+1)^2 - 1) / 12``;
    ``standard_variance`` is the exact sum-of-uniforms value ``alpha^2 L dVpp^2 / 12``.
    The simulator agrees with the latter.
    """
    if L < 0:
        raise InvalidParams(f"L must be non-negative, got {L}")
    mean = alpha * L * dVpp / 2
    printed = alpha**2 * (L / 2) * ((dVpp + 1) ** 2 - 1) / 12
    standard = alpha**2 * L * dVpp**2 / 12
    return IciNoiseParams(mean, printed, standard)


def ber_ici(q: int, vref_sigma: float, shift_sigma: float) -> float:
    """BER when the mean interference shift eats ``shift_sigma`` of the margin."""
    if shift_sigma < 0:
        raise DomainError(f"shift must be non-negative, got {shift_sigma}")
    return _level_factor(q) * q_exact(vref_sigma - shift_sigma)


@dataclass(frozen=True)
class ImprovementFactor:
    """BER ratio (constrained / unconstrained); values below 1 mean improvement."""

    closed_form: float
    direct_ratio: float

    @property
    def improvement(self) -> float:
        return 1.0 / self.direct_ratio


def ber_improvement_factor(q: int, d: int, vref_sigma: float, shift_sigma: float) -> ImprovementFactor:
    """Worst-case BER ratio from capping the aggressor swing at ``d/(q-1)`` of full scale.

    The closed form follows from the quadratic-exponent tail fit:
    ``exp{(1-r) s (2 b2 v + b1 - (1+r) b2 s)}`` with ``r = d/(q-1)``.
    """
    if not 1 <= d <= q - 1:
        raise InvalidParams(f"d must lie in 1..q-1, got d={d}, q={q}")
    r = d / (q - 1)
    lo, hi = APPROX_DOMAIN
    for x in (vref_sigma - shift_sigma, vref_sigma - r * shift_sigma):
        if not lo <= x <= hi:
            raise DomainError(f"shifted margin {x} outside the fitted range [{lo}, {hi}]")
    s, v = shift_sigma, vref_sigma
    closed = math.exp((1 - r) * s * (2 * B2 * v + B1 - (1 + r) * B2 * s))
    direct = ber_ici(q, v, s * r) / ber_ici(q, v, s)
    return ImprovementFactor(closed, direct)


# --- Monte-Carlo ISPP oracle --------------------------------------------------


@dataclass(frozen=True)
class IciModelParams:
    """Physical model in units where the read noise has std ``sigma``.

    ``dV`` is the full-scale aggressor swing; each ISPP step of size ``dVpp``
    couples ``alpha * Uniform[0, dVpp]`` into the victim.
    """

    q: int
    alpha: float
    dVpp: float
    sigma: float
    vref_sigma: float
    dV: float

    def __post_init__(self) -> None:
        if self.q < 2 or self.alpha <= 0 or self.dVpp <= 0 or self.sigma <= 0 or self.dV < 0:
            raise InvalidParams(f"invalid ICI model parameters: {self}")

    @property
    def shift_sigma(self) -> float:
        return self.alpha * self.dV / self.sigma

    def steps(self, d: int | None) -> int:
        """ISPP steps with uncompensated interference for the (possibly capped) swing."""
        swing = self.dV if d is None else self.dV * d / (self.q - 1)
        return int(round(2 * swing / self.dVpp))

    @classmethod
    def from_margins(
        cls, q: int, vref_sigma: float, shift_sigma: float, alpha: float = 0.1, steps: int | None = None
    ) -> IciModelParams:
        """Model realizing given margins; ``steps`` defaults to ``10(q-1)`` so capped swings stay whole."""
        steps = 10 * (q - 1) if steps is None else steps
        dV = shift_sigma / alpha
        return cls(q=q, alpha=alpha, dVpp=2 * dV / steps, sigma=1.0, vref_sigma=vref_sigma, dV=dV)


@dataclass(frozen=True)
class McResult:
    trials: int
    steps_constrained: int
    steps_unconstrained: int
    ber_constrained: float
    ber_unconstrained: float
    se_constrained: float
    se_unconstrained: float
    shift_variance: float
    shift_variance_se: float

    @property
    def ratio(self) -> float:
        return self.ber_constrained / self.ber_unconstrained

    @property
    def ratio_se(self) -> float:
        rel = (self.se_constrained / self.ber_constrained) ** 2 + (self.se_unconstrained / self.ber_unconstrained) ** 2
        return self.ratio * math.sqrt(rel)


_CHUNK = 200_000


def _run_chunk(
    seed: np.random.SeedSequence, n: int, p: IciModelParams, steps: int, track_moments: bool
) -> tuple[int, np.ndarray]:
    rng = np.random.default_rng(seed)
    shift = np.zeros(n)
    # accumulate step by step to bound memory at large step counts
    for start in range(0, steps, 32):
        k = min(32, steps - start)
        shift += rng.random((n, k)).sum(axis=1)
    shift *= p.alpha * p.dVpp
    errors = int(np.count_nonzero(p.sigma * rng.standard_normal(n) + shift > p.vref_sigma * p.sigma))
    if not track_moments:
        return errors, np.zeros(3)
    y = shift - p.alpha * steps * p.dVpp / 2
    return errors, np.array([y.sum(), (y**2).sum(), (y**4).sum()])


def _simulate_arm(p: IciModelParams, steps: int, trials: int, seed: np.random.SeedSequence, threads: int, moments: bool):
    sizes = [min(_CHUNK, trials - k) for k in range(0, trials, _CHUNK)]
    seeds = seed.spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda a: _run_chunk(a[0], a[1], p, steps, moments), zip(seeds, sizes)))
    errors = sum(r[0] for r in results)
    sums = sum((r[1] for r in results), np.zeros(3))
    return errors, sums


def mc_ispp_simulate(
    params: IciModelParams, d: int | None, trials: int, seed: int, threads: int = 1
) -> McResult:
    """Empirical BERs for the d-capped swing and the full-scale swing.

    Each trial draws Gaussian read noise plus an interference shift that is a
    sum of per-step uniforms. Chunks use independent child seeds, so the
    result does not depend on ``threads``. ``d=None`` leaves the swing uncapped
    in both arms; ``d=0`` removes the aggressor from the constrained arm.
    """
    if trials < 1:
        raise InvalidParams(f"trials must be >= 1, got {trials}")
    if d is not None and not 0 <= d <= params.q - 1:
        raise InvalidParams(f"d must lie in 0..q-1, got {d}")
    threads = threads or os.cpu_count() or 1
    root = np.random.SeedSequence(seed)
    seed_c, seed_u = root.spawn(2)
    l_c, l_u = params.steps(d), params.steps(None)
    err_c, _ = _simulate_arm(params, l_c, trials, seed_c, threads, False)
    err_u, mom = _simulate_arm(params, l_u, trials, seed_u, threads, True)

    factor = _level_factor(params.q)
    p_c, p_u = err_c / trials, err_u / trials
    mean_y = mom[0] / trials
    var = mom[1] / trials - mean_y**2
    m4 = mom[2] / trials
    var_se = math.sqrt(max(m4 - var**2, 0.0) / trials)
    return McResult(
        trials=trials,
        steps_constrained=l_c,
        steps_unconstrained=l_u,
        ber_constrained=factor * p_c,
        ber_unconstrained=factor * p_u,
        se_constrained=factor * math.sqrt(p_c * (1 - p_c) / trials),
        se_unconstrained=factor * math.sqrt(p_u * (1 - p_u) / trials),
        shift_variance=float(var),
        shift_variance_se=var_se,
    )
