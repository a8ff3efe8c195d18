"""Robustness analysis of gate solutions under SDK and parameter noise.

Implements the closed-form population-error fidelity bound, the stratified
Monte-Carlo estimate of motional errors from corrupted kicks (exactly m bad
kicks per stratum, binomially weighted), and shot-to-shot ensembles over
timing jitter, repetition-period error, mode-splitting drift, and RF-phase
error.

Every sample draws from its own counter-keyed stream, so ensembles are
reproducible regardless of chunking or parallel scheduling.  By default the
streams also incorporate the channel width, making different widths
statistically independent; setting ``crn=True`` on the channel drops that so
width sweeps share randomness (common random numbers).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RecalibrationFailure, TruncationWarning
from .gatekernel import ThermalState, evaluate_kicks
from .gpg import GateSolution
from .trap import calibrate

CHANNEL_KINDS = (
    "sdk_error",
    "timing_jitter",
    "rep_period",
    "mode_splitting",
    "rf_phase",
)
# Per-channel stream tags keep different channels on disjoint substreams
# even under a shared seed.
_TAGS = {kind: i + 1 for i, kind in enumerate(CHANNEL_KINDS)}
_DIRECT_TAG = 101
_TAIL_WARN = 1e-4


@dataclass(frozen=True)
class NoiseChannel:
    """One noise mechanism and its ensemble parameters.

    sigma is the channel's natural width: error probability per SDK for
    sdk_error, timing width in trap periods for timing_jitter and rep_period,
    a dimensionless mode-splitting shift for mode_splitting, and radians for
    rf_phase. samples is the per-stratum draw count for sdk_error and the
    total shot count otherwise.
    """

    kind: str
    sigma: float
    samples: int = 1000
    rng_seed: int = 0
    m_max: int = 3
    flip_prob: float = 0.5
    bins: int = 32
    crn: bool = False

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.m_max < 0:
            raise ValueError("m_max must be >= 0")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError("flip_prob must be in [0, 1]")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")


@dataclass(frozen=True, eq=False)
class NoiseReport:
    """Ensemble summary of gate infidelity under one channel."""

    channel: NoiseChannel
    mean: float
    variance: float
    samples: int
    seed: int
    hist_edges: np.ndarray
    hist_mass: np.ndarray
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class SdkErrorStratum:
    """Conditional infidelity statistics given exactly m corrupted kicks."""

    m: int
    weight: float
    mean: float
    variance: float
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class SdkErrorMixture:
    """Binomially weighted mixture over corrupted-kick counts."""

    strata: tuple[SdkErrorStratum, ...]
    tail_mass: float
    raw_mean: float


def population_bound(f0: float, n_sdk: float, eps: float) -> float:
    """Fidelity floor from qubit population leakage during the SDK train.

    Each of the n_sdk kicks leaves population epsilon outside the qubit
    manifold on each ion; the bound is (1 - n_sdk eps)^2 f0.
    """
    if eps < 0.0:
        raise DomainError("eps must be nonnegative")
    leak = n_sdk * eps
    if leak >= 1.0:
        raise DomainError(f"n_sdk * eps = {leak:g} >= 1; bound undefined")
    return (1.0 - leak) * (1.0 - leak) * f0


def _unit_expansion(solution: GateSolution):
    """Unit kicks (every weight +-1) regardless of the rep-rate mode."""
    times, weights = solution.sequence.expand()
    if times.size and np.max(np.abs(weights)) > 1.0:
        reps = np.abs(weights).astype(int)
        times = np.repeat(times, reps)
        weights = np.repeat(np.sign(weights), reps)
    return times, weights


def _sample_rng(ch: NoiseChannel, tag: int, k: int) -> np.random.Generator:
    entropy = [ch.rng_seed & 0xFFFFFFFFFFFFFFFF, tag, k]
    if not ch.crn:
        entropy.append(int(np.float64(ch.sigma).view(np.uint64)))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _corrupt(weights: np.ndarray, picks: np.ndarray, flips: np.ndarray):
    w = weights.copy()
    w[picks[flips]] *= -1.0
    w[picks[~flips]] = 0.0
    return w


def _histogram(values: np.ndarray, bins: int, weights: np.ndarray | None = None):
    counts, edges = np.histogram(values, bins=bins, weights=weights)
    total = counts.sum()
    mass = counts / total if total > 0 else counts
    return edges, mass


def _binomial_weight(n: int, m: int, eps: float) -> float:
    return math.comb(n, m) * eps**m * (1.0 - eps) ** (n - m)


def _sdk_stratum_worker(args):
    trap, thermal, times, weights, gate_time, ch, m, k0, k1 = args
    n = len(times)
    out = np.empty(k1 - k0)
    for i, k in enumerate(range(k0, k1)):
        rng = _sample_rng(ch, _TAGS["sdk_error"] * 1000 + m, k)
        picks = rng.choice(n, size=m, replace=False)
        flips = rng.random(m) < ch.flip_prob
        w = _corrupt(weights, picks, flips)
        out[i] = evaluate_kicks(times, w, gate_time, trap, thermal).infidelity
    return out


_CHUNK = 256


def _chunks(total: int):
    return [(k, min(k + _CHUNK, total)) for k in range(0, total, _CHUNK)]


def mc_sdk_errors(
    solution: GateSolution,
    ch: NoiseChannel,
    thermal: ThermalState,
    map_fn=map,
) -> tuple[NoiseReport, SdkErrorMixture]:
    """Stratified Monte-Carlo over the number of corrupted kicks.

    Stratum m holds exactly m corrupted kicks (uniform placement; each bad
    kick flips direction with probability flip_prob, otherwise drops).  The
    m = 0 stratum is the uncorrupted gate and needs no sampling.  Mixture
    weights are binomial in (n_sdk, sigma); the reported statistics are
    renormalized over the kept strata m <= m_max, and the unrenormalized
    truncated mean is kept in extras["raw_mean"].
    """
    if ch.kind != "sdk_error":
        raise ValueError(f"channel kind {ch.kind!r} is not sdk_error")
    times, weights = _unit_expansion(solution)
    n = len(times)
    eps = ch.sigma
    trap = solution.trap
    gate_time = solution.sequence.gate_time

    m_top = min(ch.m_max, n)
    kept = [_binomial_weight(n, m, eps) for m in range(m_top + 1)]
    tail = 1.0 - math.fsum(kept)
    if tail > _TAIL_WARN:
        warnings.warn(
            f"binomial tail mass {tail:.3e} beyond m_max={ch.m_max} "
            f"exceeds {_TAIL_WARN:g}",
            TruncationWarning,
            stacklevel=2,
        )

    baseline = evaluate_kicks(times, weights, gate_time, trap, thermal).infidelity
    strata = [
        SdkErrorStratum(
            m=0,
            weight=kept[0],
            mean=baseline,
            variance=0.0,
            values=np.array([baseline]),
        )
    ]
    for m in range(1, m_top + 1):
        jobs = [
            (trap, thermal, times, weights, gate_time, ch, m, k0, k1)
            for k0, k1 in _chunks(ch.samples)
        ]
        vals = np.concatenate(list(map_fn(_sdk_stratum_worker, jobs)))
        strata.append(
            SdkErrorStratum(
                m=m,
                weight=kept[m],
                mean=float(np.mean(vals)),
                variance=float(np.var(vals)),
                values=vals,
            )
        )

    kept_mass = math.fsum(s.weight for s in strata)
    mean = math.fsum(s.weight * s.mean for s in strata) / kept_mass
    second = math.fsum(s.weight * (s.variance + s.mean**2) for s in strata)
    variance = second / kept_mass - mean * mean
    raw_mean = math.fsum(s.weight * s.mean for s in strata)

    all_vals = np.concatenate([s.values for s in strata])
    all_wts = np.concatenate(
        [np.full(len(s.values), s.weight / len(s.values)) for s in strata]
    )
    edges, mass = _histogram(all_vals, ch.bins, weights=all_wts)

    mixture = SdkErrorMixture(strata=tuple(strata), tail_mass=tail, raw_mean=raw_mean)
    report = NoiseReport(
        channel=ch,
        mean=mean,
        variance=max(variance, 0.0),
        samples=sum(len(s.values) for s in strata[1:]),
        seed=ch.rng_seed,
        hist_edges=edges,
        hist_mass=mass,
        extras={
            "baseline": baseline,
            "tail_mass": tail,
            "raw_mean": raw_mean,
            "n_sdk": n,
            "stratum_weights": [s.weight for s in strata],
        },
    )
    return report, mixture


def _sdk_direct_worker(args):
    trap, thermal, times, weights, gate_time, ch, k0, k1 = args
    n = len(times)
    out = np.empty(k1 - k0)
    for i, k in enumerate(range(k0, k1)):
        rng = _sample_rng(ch, _DIRECT_TAG, k)
        bad = np.nonzero(rng.random(n) < ch.sigma)[0]
        flips = rng.random(len(bad)) < ch.flip_prob
        w = _corrupt(weights, bad, flips)
        out[i] = evaluate_kicks(times, w, gate_time, trap, thermal).infidelity
    return out


def mc_sdk_errors_direct(
    solution: GateSolution,
    ch: NoiseChannel,
    thermal: ThermalState,
    map_fn=map,
) -> NoiseReport:
    """Unstratified check of mc_sdk_errors: corrupt each kick at rate sigma."""
    if ch.kind != "sdk_error":
        raise ValueError(f"channel kind {ch.kind!r} is not sdk_error")
    times, weights = _unit_expansion(solution)
    trap = solution.trap
    gate_time = solution.sequence.gate_time
    jobs = [
        (trap, thermal, times, weights, gate_time, ch, k0, k1)
        for k0, k1 in _chunks(ch.samples)
    ]
    vals = np.concatenate(list(map_fn(_sdk_direct_worker, jobs)))
    edges, mass = _histogram(vals, ch.bins)
    return NoiseReport(
        channel=ch,
        mean=float(np.mean(vals)),
        variance=float(np.var(vals)),
        samples=len(vals),
        seed=ch.rng_seed,
        hist_edges=edges,
        hist_mass=mass,
        extras={"method": "direct"},
    )


def _enforce_min_gap(times: np.ndarray, tau: float, max_rounds: int = 200):
    """Sort, then symmetrically push apart pairs closer than tau."""
    t = np.sort(times)
    if tau <= 0.0 or len(t) < 2:
        return t
    for _ in range(max_rounds):
        gaps = np.diff(t)
        bad = np.nonzero(gaps < tau)[0]
        if not bad.size:
            break
        for j in bad:
            push = 0.5 * (tau - (t[j + 1] - t[j]))
            t[j] -= push
            t[j + 1] += push
        t.sort()
    return t


def _param_shot(trap, thermal, solution, ch, k):
    """One perturbed evaluation; returns infidelity or None on failure."""
    rng = _sample_rng(ch, _TAGS[ch.kind], k)
    seq = solution.sequence
    if ch.kind == "timing_jitter":
        times, weights = seq.expand()
        jitter = rng.normal(0.0, ch.sigma * 2.0 * math.pi, len(times))
        t = times + jitter
        order = np.argsort(t, kind="stable")
        t, w = t[order], weights[order]
        if seq.rep_rate is not None:
            t = _enforce_min_gap(t, 2.0 * math.pi / seq.rep_rate)
        t = np.clip(t, 0.0, seq.gate_time)
        return evaluate_kicks(t, w, seq.gate_time, trap, thermal).infidelity
    if ch.kind == "rep_period":
        tau = 2.0 * math.pi / seq.rep_rate
        tau_err = tau + rng.normal(0.0, ch.sigma * 2.0 * math.pi)
        tau_err = max(tau_err, 1e-9 * tau)
        times = []
        weights = []
        for t0, z in seq.kicks:
            s = 1.0 if z > 0 else -1.0
            for j in range(abs(z)):
                times.append(t0 + j * tau_err)
                weights.append(s)
        return evaluate_kicks(
            np.array(times), np.array(weights), seq.gate_time, trap, thermal
        ).infidelity
    if ch.kind == "mode_splitting":
        chi = trap.chi + rng.normal(0.0, ch.sigma)
        try:
            shifted = calibrate(
                q_x=trap.q_x,
                rf_ratio=trap.rf_ratio,
                chi=chi,
                eta=trap.eta,
                rf_phase=trap.rf_phase,
            )
        except Exception as exc:
            raise RecalibrationFailure(f"chi={chi:g}: {exc}") from exc
        times, weights = seq.expand()
        return evaluate_kicks(times, weights, seq.gate_time, shifted, thermal).infidelity
    if ch.kind == "rf_phase":
        phi = math.remainder(trap.rf_phase + rng.normal(0.0, ch.sigma), 2.0 * math.pi)
        shifted = trap.with_rf_phase(phi)
        times, weights = seq.expand()
        return evaluate_kicks(times, weights, seq.gate_time, shifted, thermal).infidelity
    raise ValueError(f"channel kind {ch.kind!r} is not a parameter channel")


def _param_worker(args):
    trap, thermal, solution, ch, k0, k1 = args
    vals = []
    failures = 0
    for k in range(k0, k1):
        try:
            vals.append(_param_shot(trap, thermal, solution, ch, k))
        except RecalibrationFailure:
            failures += 1
    return np.array(vals), failures


def mc_parameter_noise(
    solution: GateSolution,
    ch: NoiseChannel,
    thermal: ThermalState,
    map_fn=map,
) -> NoiseReport:
    """Shot-to-shot ensemble over one experimental parameter.

    timing_jitter perturbs every expanded kick time (normal, width
    sigma trap periods) and re-enforces the minimum spacing when the
    sequence has a finite repetition rate. rep_period perturbs the
    intra-group spacing once per shot, anchors fixed. mode_splitting
    redraws the mode splitting and recalibrates the trap per shot
    (failed recalibrations are counted, not fatal). rf_phase redraws
    the RF phase, wrapped onto (-pi, pi].
    """
    if ch.kind == "sdk_error":
        raise ValueError("use mc_sdk_errors for the sdk_error channel")
    if ch.kind == "rep_period" and solution.sequence.rep_rate is None:
        raise DomainError("rep_period channel needs a finite repetition rate")
    trap = solution.trap

    if ch.sigma == 0.0:
        times, weights = solution.sequence.expand()
        base = evaluate_kicks(
            times, weights, solution.sequence.gate_time, trap, thermal
        ).infidelity
        vals = np.array([base])
        edges, mass = _histogram(vals, ch.bins)
        return NoiseReport(
            channel=ch,
            mean=base,
            variance=0.0,
            samples=1,
            seed=ch.rng_seed,
            hist_edges=edges,
            hist_mass=mass,
            extras={"degenerate": True, "failed_samples": 0},
        )

    jobs = [
        (trap, thermal, solution, ch, k0, k1) for k0, k1 in _chunks(ch.samples)
    ]
    parts = list(map_fn(_param_worker, jobs))
    vals = np.concatenate([p[0] for p in parts])
    failures = sum(p[1] for p in parts)
    if not len(vals):
        raise RecalibrationFailure("every sample failed to recalibrate")
    edges, mass = _histogram(vals, ch.bins)
    extras = {"failed_samples": int(failures)}
    if ch.kind == "timing_jitter":
        extras["min_gap_enforcement"] = "symmetric pairwise push-apart after sorting"
    return NoiseReport(
        channel=ch,
        mean=float(np.mean(vals)),
        variance=float(np.var(vals)),
        samples=len(vals),
        seed=ch.rng_seed,
        hist_edges=edges,
        hist_mass=mass,
        extras=extras,
    )
