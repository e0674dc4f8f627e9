"""Monte Carlo simulation of the two-phase amplify-and-forward relay channel.

Symbols come from a unit-energy constellation and the source sends them
precoded with total energy one.  Relay ``k`` forwards ``r_k A_k + r_k* B_k``
scaled to power ``P2``.  Decoders use the exact noise covariance of the
realized relay-to-destination gains.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .construction import construct_dostbc, construct_rspdssdc
from .design import CodeSpec
from .errors import NotSingleSymbolDecodableError
from .precoding import precode
from .verification import TOL, SignalSet, covariance_matrix, noise_scale

DEFAULT_CHUNK = 2000


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    g: np.ndarray


@dataclass(frozen=True)
class PowerAllocation:
    """Source power ``P1`` and per-relay power ``P2`` per channel use."""

    P1: float
    P2: float

    def __post_init__(self) -> None:
        if self.P1 <= 0 or self.P2 <= 0:
            raise ValueError("powers must be positive")

    def relay_scale(self, spec: CodeSpec) -> float:
        """Relay amplification ``sqrt(P2 T / ((1 + P1) N))``."""
        return math.sqrt(noise_scale(spec, self.P1, self.P2))

    def signal_scale(self, spec: CodeSpec) -> float:
        """Amplitude of ``g X`` at the destination."""
        return math.sqrt(self.P1) * self.relay_scale(spec)


def _cn(rng: np.random.Generator, size) -> np.ndarray:
    size = (size,) if isinstance(size, int) else tuple(size)
    return rng.standard_normal(size + (2,)).view(np.complex128)[..., 0] * math.sqrt(0.5)


def sample_channel(K: int, rng: np.random.Generator, batch: int | None = None) -> ChannelRealization:
    """Independent unit-variance source-to-relay gains ``h`` and relay-to-destination gains ``g``."""
    size = K if batch is None else (batch, K)
    return ChannelRealization(_cn(rng, size), _cn(rng, size))


# -- transmission ----------------------------------------------------------------

def transmit_batch(spec: CodeSpec, s: np.ndarray, power: PowerAllocation, h: np.ndarray, g: np.ndarray,
                   rng: np.random.Generator | None, noise: bool = True) -> np.ndarray:
    """Received vectors ``(B, T)`` for symbol rows ``s`` of shape ``(B, N)``.

    Follows the two hops literally, so relay noise is forwarded through
    ``A_k`` and ``B_k`` before reaching the destination.
    """
    s = np.atleast_2d(np.asarray(s, dtype=complex))
    h, g = np.atleast_2d(h), np.atleast_2d(g)
    n_trials = s.shape[0]
    s_tilde = precode(s / math.sqrt(spec.N), spec)
    r = math.sqrt(power.P1 * spec.N) * h[:, :, None] * s_tilde[:, None, :]  # (B, K, N)
    if noise:
        r = r + _cn(rng, r.shape)
    r = r.transpose(1, 0, 2)
    t = r @ spec.A_array + r.conj() @ spec.B_array  # (K, B, T)
    y = power.relay_scale(spec) * np.einsum("bk,kbt->bt", g, t)
    if noise:
        y = y + _cn(rng, (n_trials, spec.T))
    return y


def transmit(spec: CodeSpec, s, power: PowerAllocation, chan: ChannelRealization,
             rng: np.random.Generator | None, noise: bool = True) -> np.ndarray:
    """Received vector (length ``T``) for one symbol vector."""
    return transmit_batch(spec, np.asarray(s)[None, :], power, chan.h[None, :], chan.g[None, :], rng, noise)[0]


def aggregate_noise_batch(spec: CodeSpec, power: PowerAllocation, g: np.ndarray, rng: np.random.Generator,
                          trials: int) -> np.ndarray:
    """Samples of the destination noise (forwarded relay noise plus thermal noise) at fixed ``g``."""
    n = _cn(rng, (trials, spec.K, spec.N))
    t = np.einsum("bkn,knt->bkt", n, spec.A_array) + np.einsum("bkn,knt->bkt", n.conj(), spec.B_array)
    return power.relay_scale(spec) * np.einsum("k,bkt->bt", g, t) + _cn(rng, (trials, spec.T))


# -- decoding --------------------------------------------------------------------

def _effective(spec: CodeSpec, h: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``g X = s~ Ga + s~* Gb`` with ``Ga = sum g_k h_k A_k`` and ``Gb = sum g_k h_k* B_k``."""
    K, N, T = spec.A_array.shape
    ga = (g * h) @ spec.A_array.reshape(K, N * T)
    gb = (g * np.conj(h)) @ spec.B_array.reshape(K, N * T)
    return ga.reshape(ga.shape[:-1] + (N, T)), gb.reshape(gb.shape[:-1] + (N, T))


def _inverse_covariance(spec: CodeSpec, g: np.ndarray, power: PowerAllocation) -> np.ndarray:
    return np.linalg.inv(covariance_matrix(spec, g, power.P1, power.P2))


def _relay_noise_gains(spec: CodeSpec) -> np.ndarray:
    """``A_k^H A_k + B_k^H B_k`` per relay, shape ``(K, T, T)``."""
    A, B = spec.A_array, spec.B_array
    return np.conj(A).transpose(0, 2, 1) @ A + np.conj(B).transpose(0, 2, 1) @ B


def _inverse_covariance_diagonal(spec: CodeSpec, g: np.ndarray, power: PowerAllocation) -> np.ndarray | None:
    """Diagonal of ``R^-1`` with shape ``(B, T)`` when ``R`` is diagonal for every ``g``, else ``None``."""
    D = _relay_noise_gains(spec)
    T = spec.T
    if np.any(D[:, ~np.eye(T, dtype=bool)]):
        return None
    diag = np.real(np.diagonal(D, axis1=1, axis2=2))  # (K, T)
    r = 1.0 + noise_scale(spec, power.P1, power.P2) * (np.abs(g) ** 2 @ diag)
    return 1.0 / r


def candidate_vectors(constellation: SignalSet, N: int) -> np.ndarray:
    """All ``|Lambda|^N`` symbol vectors in lexicographic index order."""
    idx = np.array(list(itertools.product(range(constellation.size), repeat=N)), dtype=np.intp)
    return constellation.array[idx]


def _metric_from_precoded(y, spec: CodeSpec, h, g, power: PowerAllocation, st: np.ndarray) -> np.ndarray:
    ga, gb = _effective(spec, h, g)
    d = np.asarray(y)[None, :] - power.signal_scale(spec) * (st @ ga + np.conj(st) @ gb)
    ri = _inverse_covariance_diagonal(spec, g[None, :], power)
    if ri is not None:
        return (d.real ** 2 + d.imag ** 2) @ ri[0]
    Ri = _inverse_covariance(spec, g, power)
    return np.real(np.einsum("mt,ts,ms->m", d, Ri, d.conj()))


def ml_metric(y, spec: CodeSpec, chan: ChannelRealization, power: PowerAllocation, candidates: np.ndarray) -> np.ndarray:
    """Full ML metric ``(y - c gX) R^-1 (y - c gX)^H`` for each candidate row."""
    return _metric_from_precoded(y, spec, chan.h, chan.g, power, precode(candidates, spec))


def ml_decode_joint(y, spec: CodeSpec, chan: ChannelRealization, power: PowerAllocation,
                    constellation: SignalSet, candidates: np.ndarray | None = None) -> np.ndarray:
    """Exhaustive ML decision; ties go to the lowest candidate index."""
    if candidates is None:
        candidates = candidate_vectors(constellation, spec.N)
    return candidates[int(np.argmin(ml_metric(y, spec, chan, power, candidates)))]


def _unit_codewords(spec: CodeSpec, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``g X`` for every unit real coordinate: shape ``(..., 2N, T)``."""
    N = spec.N
    units = np.eye(2 * N)
    e = precode(units[:, :N] + 1j * units[:, N:], spec)  # (2N, N)
    ga, gb = _effective(spec, h, g)
    return e @ ga + e.conj() @ gb


def per_symbol_statistics(Y: np.ndarray, spec: CodeSpec, h: np.ndarray, g: np.ndarray, power: PowerAllocation):
    """Gram ``G`` (B, 2N, 2N) and correlation ``L`` (B, 2N) of the real-coordinate expansion."""
    V = _unit_codewords(spec, h, g)
    ri = _inverse_covariance_diagonal(spec, g, power)
    VR = V * ri[:, None, :] if ri is not None else V @ _inverse_covariance(spec, g, power)
    G = np.real(VR @ np.conj(V).transpose(0, 2, 1))
    L = np.real(VR @ np.conj(Y)[:, :, None])[:, :, 0]
    return G, L


def _check_separable(G: np.ndarray, N: int) -> None:
    sym = np.arange(2 * N) % N
    cross = sym[:, None] != sym[None, :]
    mag = np.abs(G)
    scale = max(1.0, float(mag.max(initial=0.0)))
    if float((mag * cross).max(initial=0.0)) > TOL * scale:
        raise NotSingleSymbolDecodableError("the ML metric couples different symbols for this code")


def decode_per_symbol_batch(Y: np.ndarray, spec: CodeSpec, h: np.ndarray, g: np.ndarray, power: PowerAllocation,
                            constellation: SignalSet) -> np.ndarray:
    """Per-symbol ML decisions as constellation indices, shape ``(B, N)``."""
    N = spec.N
    G, L = per_symbol_statistics(Y, spec, h, g, power)
    _check_separable(G, N)
    c = power.signal_scale(spec)
    pr, pi = constellation.array.real, constellation.array.imag
    out = np.empty((Y.shape[0], N), dtype=np.intp)
    for i in range(N):
        q = N + i
        lin = L[:, i, None] * pr + L[:, q, None] * pi
        quad = G[:, i, i, None] * pr**2 + 2 * G[:, i, q, None] * pr * pi + G[:, q, q, None] * pi**2
        out[:, i] = np.argmin(-2 * c * lin + c * c * quad, axis=1)
    return out


def ml_decode_per_symbol(y, spec: CodeSpec, chan: ChannelRealization, power: PowerAllocation,
                         constellation: SignalSet) -> np.ndarray:
    """Single-symbol ML decision; refuses codes whose metric does not separate."""
    idx = decode_per_symbol_batch(np.asarray(y)[None, :], spec, chan.h[None, :], chan.g[None, :], power, constellation)
    return constellation.array[idx[0]]


def decode_joint_batch(Y: np.ndarray, spec: CodeSpec, h: np.ndarray, g: np.ndarray, power: PowerAllocation,
                       constellation: SignalSet) -> np.ndarray:
    """Joint ML decisions as constellation indices, shape ``(B, N)``."""
    idx = np.array(list(itertools.product(range(constellation.size), repeat=spec.N)), dtype=np.intp)
    st = precode(constellation.array[idx], spec)
    out = np.empty((Y.shape[0], spec.N), dtype=np.intp)
    for b in range(Y.shape[0]):
        out[b] = idx[int(np.argmin(_metric_from_precoded(Y[b], spec, h[b], g[b], power, st)))]
    return out


# -- SNR accounting --------------------------------------------------------------

def column_load(spec: CodeSpec) -> float:
    """Average number of relays transmitting in a column, over columns that carry energy."""
    active = (np.abs(spec.A_array).sum(axis=1) + np.abs(spec.B_array).sum(axis=1)) > 0  # (K, T)
    per_col = active.sum(axis=0)
    used = per_col[per_col > 0]
    return float(used.mean()) if used.size else 0.0


def snr_per_channel_use(power: PowerAllocation, spec: CodeSpec) -> float:
    """Nominal SNR ``a P1 P2 / (P1 + 1 + a P2)`` with ``a`` the average column load."""
    a = column_load(spec)
    return a * power.P1 * power.P2 / (power.P1 + 1 + a * power.P2)


def received_snr(power: PowerAllocation, spec: CodeSpec) -> float:
    """Average signal-to-noise ratio per destination channel use, including the ``T / N`` relay gain."""
    a = column_load(spec) * spec.T / spec.N
    return a * power.P1 * power.P2 / (power.P1 + 1 + a * power.P2)


def power_for_snr(snr_db: float, spec: CodeSpec, relay_factor: float = 1.0) -> PowerAllocation:
    """Solve ``snr_per_channel_use = target`` with ``P1 = p`` and ``P2 = relay_factor * p``."""
    S = 10 ** (snr_db / 10)
    af = column_load(spec) * relay_factor
    b = S * (1 + af)
    p = (b + math.sqrt(b * b + 4 * af * S)) / (2 * af)
    return PowerAllocation(p, relay_factor * p)


# -- SER runs --------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    spec: CodeSpec
    constellation: SignalSet
    snr_grid_db: tuple[float, ...]
    trials_per_point: int
    seed: int = 0
    decoder: str = "per_symbol"
    relay_factor: float = 1.0
    chunk_size: int = DEFAULT_CHUNK
    label: str = ""
    target_errors: int = 0
    min_trials: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "snr_grid_db", tuple(float(x) for x in self.snr_grid_db))
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be at least 1")
        if self.decoder not in ("joint", "per_symbol"):
            raise ValueError("decoder must be 'joint' or 'per_symbol'")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        if self.target_errors < 0 or self.min_trials < 0:
            raise ValueError("target_errors and min_trials must be nonnegative")

    @property
    def adaptive(self) -> bool:
        return self.target_errors > 0


@dataclass(frozen=True)
class SerCurve:
    snr_db: tuple[float, ...]
    ser: tuple[float, ...]
    trials: tuple[int, ...]
    errors: tuple[int, ...]
    symbols_per_trial: int
    fitted_slope: float = float("nan")
    label: str = ""

    def confidence_halfwidths(self, z: float = 1.96) -> list[float]:
        return [ser_confidence_halfwidth(e, t * self.symbols_per_trial, z) for e, t in zip(self.errors, self.trials)]


def ser_confidence_halfwidth(errors: int, symbols: int, z: float = 1.96) -> float:
    """Normal-approximation half-width of the SER confidence interval."""
    p = errors / symbols
    return z * math.sqrt(p * (1 - p) / symbols)


def _run_chunk(args) -> int:
    config, snr_index, chunk_index, count = args
    spec, const = config.spec, config.constellation
    rng = np.random.default_rng([config.seed, snr_index, chunk_index])
    power = power_for_snr(config.snr_grid_db[snr_index], spec, config.relay_factor)
    sent = rng.integers(0, const.size, size=(count, spec.N))
    chan = sample_channel(spec.K, rng, count)
    y = transmit_batch(spec, const.array[sent], power, chan.h, chan.g, rng)
    decode = decode_per_symbol_batch if config.decoder == "per_symbol" else decode_joint_batch
    got = decode(y, spec, chan.h, chan.g, power, const)
    return int(np.count_nonzero(got != sent))


def _chunk_sizes(config: SimConfig) -> list[int]:
    full, rest = divmod(config.trials_per_point, config.chunk_size)
    return [config.chunk_size] * full + ([rest] if rest else [])


def _run_point(config: SimConfig, si: int, pool, wave: int) -> tuple[int, int]:
    """Errors and trials at one SNR point.

    With ``target_errors`` set, chunks are consumed in index order and the
    point stops at the first chunk where both ``min_trials`` and
    ``target_errors`` are reached.  Chunks computed past that point are
    discarded, so the outcome does not depend on how many run at once.
    """
    sizes = _chunk_sizes(config)
    errors = trials = 0
    for start in range(0, len(sizes), wave):
        batch = [(config, si, ci, sizes[ci]) for ci in range(start, min(start + wave, len(sizes)))]
        counts = pool.map(_run_chunk, batch) if pool else map(_run_chunk, batch)
        for (_, _, _, n), c in zip(batch, counts):
            errors += c
            trials += n
            if config.adaptive and trials >= config.min_trials and errors >= config.target_errors:
                return errors, trials
    return errors, trials


def run_ser(config: SimConfig, workers: int = 1) -> SerCurve:
    """Symbol error rate over the SNR grid.

    Each chunk of trials draws from its own stream seeded by
    ``(seed, snr_index, chunk_index)``, so results do not depend on ``workers``.
    """
    n_chunks = len(_chunk_sizes(config))
    wave = max(1, workers) if config.adaptive else n_chunks
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        results = [_run_point(config, si, pool, wave) for si in range(len(config.snr_grid_db))]
    finally:
        if pool:
            pool.shutdown()
    errors = tuple(e for e, _ in results)
    trials = tuple(t for _, t in results)
    curve = SerCurve(
        config.snr_grid_db,
        tuple(e / (t * config.spec.N) for e, t in results),
        trials,
        errors,
        config.spec.N,
        label=config.label,
    )
    try:
        slope = estimate_diversity_order(curve)
    except ValueError:
        slope = float("nan")
    return replace(curve, fitted_slope=slope)


def reliable_mask(curve: SerCurve) -> np.ndarray:
    """Points whose SER exceeds ten error events per trial count."""
    ser = np.asarray(curve.ser, dtype=float)
    return (ser > 10.0 / np.asarray(curve.trials, dtype=float)) & (ser > 0)


def estimate_diversity_order(curve: SerCurve, min_points: int = 3,
                             window: tuple[float, float] | None = None) -> float:
    """Negated least-squares slope of ``log10 SER`` against ``SNR_dB / 10``.

    Only reliable points are fitted.  Without an explicit ``window`` the fit
    covers the top 10 dB of reliable SNRs.
    """
    snr = np.asarray(curve.snr_db, dtype=float)
    ser = np.asarray(curve.ser, dtype=float)
    reliable = reliable_mask(curve)
    if np.count_nonzero(reliable) < min_points:
        raise ValueError("not enough reliable SER points to fit a slope")
    if window is None:
        top = snr[reliable].max()
        window = (top - 10.0, top)
    use = reliable & (snr >= window[0] - 1e-9) & (snr <= window[1] + 1e-9)
    if np.count_nonzero(use) < min_points:
        raise ValueError("not enough reliable SER points in the fitting window")
    slope = np.polyfit(snr[use] / 10.0, np.log10(ser[use]), 1)[0]
    return float(-slope)


def matched_window(curves: Sequence[SerCurve], span_db: float = 10.0) -> tuple[float, float]:
    """Top ``span_db`` of the SNR points that are reliable on every curve."""
    common = None
    for c in curves:
        pts = set(np.asarray(c.snr_db)[reliable_mask(c)].tolist())
        common = pts if common is None else common & pts
    if not common:
        raise ValueError("curves share no reliable SNR points")
    top = max(common)
    return (top - span_db, top)


def matched_slopes(curves: Sequence[SerCurve], span_db: float = 10.0) -> list[float]:
    """Diversity slopes of several curves fitted over one shared SNR window."""
    window = matched_window(curves, span_db)
    return [estimate_diversity_order(c, window=window) for c in curves]


# -- output --------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else f"{x:.10g}"


def curve_csv(curve: SerCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["snr_db", "ser", "trials", "errors"])
    for s, p, t, e in zip(curve.snr_db, curve.ser, curve.trials, curve.errors):
        w.writerow([_fmt(s), _fmt(p), t, e])
    w.writerow(["fitted_slope", _fmt(curve.fitted_slope), "", ""])
    return buf.getvalue()


def curves_csv(curves: Sequence[SerCurve]) -> str:
    """Several curves in one table, tagged by label."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve", "snr_db", "ser", "trials", "errors"])
    for c in curves:
        for s, p, t, e in zip(c.snr_db, c.ser, c.trials, c.errors):
            w.writerow([c.label, _fmt(s), _fmt(p), t, e])
    for c in curves:
        w.writerow([c.label, "fitted_slope", _fmt(c.fitted_slope), "", ""])
    return buf.getvalue()


def plot_data(curves: Sequence[SerCurve]) -> str:
    """Whitespace-separated blocks, one per curve, readable by gnuplot's ``index``."""
    blocks = []
    for c in curves:
        lines = [f"# {c.label or 'curve'}", "# snr_db ser"]
        lines += [f"{_fmt(s)} {_fmt(p)}" for s, p in zip(c.snr_db, c.ser)]
        blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + "\n"


def bit_rates(spec: CodeSpec, constellation: SignalSet) -> dict[str, float]:
    """Bits per channel use counted over both hops and over the relay hop alone."""
    bits = spec.N * constellation.bits
    return {"both_phases": bits / (spec.N + spec.T), "second_phase": bits / spec.T}


FIG3_GRID = tuple(float(s) for s in range(6, 27, 2))
FIG3_TRIALS = 10_000_000
FIG3_MIN_TRIALS = 100_000
FIG3_TARGET_ERRORS = 1000


def fig3_configs(trials: int = FIG3_TRIALS, seed: int = 0, snr_grid_db=FIG3_GRID,
                 rotation_deg: float = 22.5, relay_factor: float = 2.0,
                 min_trials: int = FIG3_MIN_TRIALS, target_errors: int = FIG3_TARGET_ERRORS) -> list[SimConfig]:
    """The matched-rate comparison for four symbols and four relays.

    The rate-one code carries rotated QPSK and the rate-one-half DOSTBC
    carries 16-QAM, so both deliver 8 bits per codeword.  A third curve
    sends unrotated QPSK through the rate-one code.  Each point runs at
    least ``min_trials`` and at most ``trials`` trials, stopping once
    ``target_errors`` symbol errors are seen.
    """
    rs = construct_rspdssdc(4, 4)[1]
    dostbc = construct_dostbc(4, 4)[1]
    common = dict(seed=seed, chunk_size=min(20_000, trials), target_errors=target_errors,
                  min_trials=min(min_trials, trials))
    return [
        SimConfig(rs, SignalSet.qpsk(rotation_deg), snr_grid_db, trials, label="rs_pdssdc_rotated_qpsk", **common),
        SimConfig(dostbc, SignalSet.qam16(), snr_grid_db, trials, relay_factor=relay_factor,
                  label="dostbc_16qam", **common),
        SimConfig(rs, SignalSet.qpsk(0.0), snr_grid_db, trials, label="rs_pdssdc_qpsk", **common),
    ]


@dataclass(frozen=True)
class Fig3Result:
    curves: tuple[SerCurve, ...]
    parallel_slopes: tuple[float, float]
    rotation_slopes: tuple[float, float]

    @property
    def slope_gap(self) -> float:
        """Relative difference of the two matched-rate slopes."""
        a, b = self.parallel_slopes
        return abs(a - b) / max(a, b)

    @property
    def rotation_gain(self) -> float:
        return self.rotation_slopes[0] - self.rotation_slopes[1]


def run_fig3(trials: int = FIG3_TRIALS, seed: int = 0, workers: int = 1, **kwargs) -> Fig3Result:
    curves = tuple(run_ser(c, workers) for c in fig3_configs(trials, seed, **kwargs))
    rotated, qam, plain = curves
    return Fig3Result(curves, tuple(matched_slopes([rotated, qam])), tuple(matched_slopes([rotated, plain])))


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
