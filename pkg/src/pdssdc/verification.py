"""Executable structural checks for precoded distributed codes.

Checks on the exact relay and precoding matrices need no tolerance.  Checks
that involve channel draws run in floating point and treat a quantity as
zero when it is below ``TOL`` times the largest magnitude involved.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .design import CodeSpec, assemble_codeword, extract_weight_matrices
from .errors import DimensionError
from .exact import ExactComplex, ExactMatrix, vstack
from .precoding import precode

TOL = 1e-9

_ALPHABET = {ExactComplex(0), ExactComplex(1), ExactComplex(-1), ExactComplex(0, 1), ExactComplex(0, -1)}


def _cn(rng: np.random.Generator, size) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2)


def _small(x: np.ndarray, scale: float) -> bool:
    return float(np.max(np.abs(x), initial=0.0)) <= TOL * max(scale, 1.0)


# -- relay-matrix structure ----------------------------------------------------

def check_alphabet(spec: CodeSpec) -> bool:
    """Entries in {0, ±1, ±j}; ``A_k``, ``B_k`` position-disjoint; ``A_k``, ``B_k``, ``A_k + B_k`` column monomial."""
    for a, b in spec.relay_pairs:
        if any(e not in _ALPHABET for e in a.entries + b.entries):
            return False
        if any(x and y for x, y in zip(a.entries, b.entries)):
            return False
        if not (a.is_column_monomial() and b.is_column_monomial() and (a + b).is_column_monomial()):
            return False
    return True


def check_row_monomial(spec: CodeSpec) -> bool:
    return all(a.is_row_monomial() and b.is_row_monomial() for a, b in spec.relay_pairs)


# -- noise covariance ----------------------------------------------------------

def noise_scale(spec: CodeSpec, P1: float, P2: float) -> float:
    """Relay noise amplification ``P2 T / ((1 + P1) N)``."""
    return P2 * spec.T / ((1.0 + P1) * spec.N)


def signal_scale(spec: CodeSpec, P1: float, P2: float) -> float:
    """Amplitude ``sqrt(P1 P2 T / ((1 + P1) N))`` multiplying ``g X`` at the destination."""
    return math.sqrt(P1 * noise_scale(spec, P1, P2))


@dataclass(frozen=True)
class NoiseCovariance:
    R: np.ndarray
    g: np.ndarray
    P1: float
    P2: float
    N: int
    T: int

    @property
    def is_diagonal(self) -> bool:
        off = self.R - np.diag(np.diag(self.R))
        return _small(off, float(np.max(np.abs(self.R))))


def covariance_matrix(spec: CodeSpec, g, P1: float, P2: float) -> np.ndarray:
    """Destination noise covariance; ``g`` may be a single draw or a stack ``(..., K)``."""
    g = np.asarray(g, dtype=complex)
    A, B = spec.A_array, spec.B_array
    gram = np.einsum("knt,kns->kts", A.conj(), A) + np.einsum("knt,kns->kts", B.conj(), B)
    weights = np.abs(g) ** 2
    R = noise_scale(spec, P1, P2) * np.einsum("...k,kts->...ts", weights, gram)
    return R + np.eye(spec.T)


def build_R(spec: CodeSpec, g, P1: float = 1.0, P2: float = 1.0) -> NoiseCovariance:
    g = np.asarray(g, dtype=complex)
    if g.shape != (spec.K,):
        raise DimensionError(f"g must have length {spec.K}")
    if P1 <= 0 or P2 <= 0:
        raise ValueError("powers must be positive")
    return NoiseCovariance(covariance_matrix(spec, g, P1, P2), g, P1, P2, spec.N, spec.T)


def _random_covariances(spec: CodeSpec, samples: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``R = I`` followed by covariances from random relay-to-destination draws and powers."""
    out = [np.eye(spec.T)]
    for _ in range(samples):
        P1, P2 = rng.uniform(0.5, 10.0, size=2)
        out.append(covariance_matrix(spec, _cn(rng, spec.K), P1, P2))
    return out


# -- pairwise conditions on (P, Q, A_k, B_k) -------------------------------------

def _offdiag(m: np.ndarray) -> np.ndarray:
    return m - np.diag(np.diag(m))


def _lemma3_terms(spec: CodeSpec, Ri: np.ndarray):
    """Yield (label, matrix, must_be_real_diagonal) for every condition."""
    P, Q = spec.P_array, spec.Q_array
    A, B = spec.A_array, spec.B_array
    K = spec.K
    c = np.conj
    for k, kk in itertools.permutations(range(K), 2):
        ak, akk, bk, bkk = A[k], A[kk], B[k], B[kk]
        for u1, u2, p1, p2 in ((P, P, Q, Q), (P, Q, Q, P), (Q, P, P, Q)):
            yield (f"A-pair ({k + 1},{kk + 1})",
                   u1 @ ak @ Ri @ akk.conj().T @ u2.conj().T + c(p1) @ c(akk) @ Ri @ ak.T @ p2.T, False)
        for u1, u2, p1, p2 in ((Q, Q, P, P), (Q, P, P, Q), (P, Q, Q, P)):
            yield (f"B-pair ({k + 1},{kk + 1})",
                   c(u1) @ bk @ Ri @ bkk.conj().T @ u2.T + p1 @ c(bkk) @ Ri @ bk.T @ p2.conj().T, False)
    for k, kk in itertools.product(range(K), repeat=2):
        ak, akk, bk, bkk = A[k], A[kk], B[k], B[kk]
        mix_ba = bk @ Ri @ akk.conj().T + c(akk) @ Ri @ bk.T
        mix_ab = ak @ Ri @ bkk.conj().T + c(bkk) @ Ri @ ak.T
        for ups, pi in ((P, Q), (P, P), (Q, Q)):
            yield f"BA-mix ({k + 1},{kk + 1})", c(pi) @ mix_ba @ ups.conj().T, False
        for ups, pi in ((Q, P), (P, P), (Q, Q)):
            yield f"AB-mix ({k + 1},{kk + 1})", pi @ mix_ab @ ups.T, False
    for k in range(K):
        yield f"self ({k + 1})", A[k] @ Ri @ A[k].conj().T + c(B[k]) @ Ri @ B[k].T, True


def lemma3_violations(spec: CodeSpec, samples: int = 5, seed: int = 0,
                      covariances: Sequence[np.ndarray] | None = None) -> tuple[float, list[str]]:
    """Worst relative violation and the labels of failing conditions."""
    if covariances is None:
        covariances = _random_covariances(spec, samples, np.random.default_rng(seed))
    worst, failed = 0.0, []
    for R in covariances:
        R = np.asarray(R, dtype=complex)
        if R.shape != (spec.T, spec.T):
            raise DimensionError(f"R must be {spec.T} x {spec.T}")
        if not np.allclose(R, R.conj().T, atol=TOL * max(1.0, np.abs(R).max())):
            raise ValueError("R must be Hermitian")
        try:
            Ri = np.linalg.inv(R)
        except np.linalg.LinAlgError:
            raise ValueError("R is singular") from None
        for label, m, real_diag in _lemma3_terms(spec, Ri):
            scale = max(1.0, float(np.abs(m).max(initial=0.0)))
            bad = float(np.abs(_offdiag(m)).max(initial=0.0))
            if real_diag:
                bad = max(bad, float(np.abs(np.diag(m).imag).max(initial=0.0)))
            rel = bad / scale
            worst = max(worst, rel)
            if rel > TOL and label not in failed:
                failed.append(label)
    return worst, failed


def check_lemma3(spec: CodeSpec, samples: int = 5, seed: int = 0,
                 covariances: Sequence[np.ndarray] | None = None) -> bool:
    """All pairwise conditions are diagonal for ``R = I`` and ``samples`` random covariances."""
    return not lemma3_violations(spec, samples, seed, covariances)[1]


# -- single-symbol decodability --------------------------------------------------

def quadratic_coefficients(phi: np.ndarray, Ri: np.ndarray) -> np.ndarray:
    """``C[a, b] = Phi_a R^-1 Phi_b^H`` so that ``X R^-1 X^H = sum_ab u_a u_b C[a, b]``."""
    return np.einsum("aks,bls->abkl", phi @ Ri, phi.conj(), optimize=True)


def codeword_from_real(spec: CodeSpec, h, u) -> np.ndarray:
    """Codeword for the real coordinate vector ``u = (s_I | s_Q)``."""
    u = np.asarray(u, dtype=float)
    s = u[: spec.N] + 1j * u[spec.N:]
    return assemble_codeword(spec, h, precode(s, spec))


def gram_form(spec: CodeSpec, h, u, Ri: np.ndarray) -> np.ndarray:
    X = codeword_from_real(spec, h, u)
    return X @ Ri @ X.conj().T


def mixed_difference(spec: CodeSpec, h, Ri: np.ndarray, a: int, b: int, base) -> np.ndarray:
    """Second mixed difference of ``X R^-1 X^H`` along coordinates ``a`` and ``b``.

    The form is quadratic in ``u``, so the result is the exact cross
    coefficient and does not depend on ``base``.
    """
    base = np.asarray(base, dtype=float)
    ea, eb = np.eye(2 * spec.N)[a], np.eye(2 * spec.N)[b]
    f = lambda u: gram_form(spec, h, u, Ri)
    return f(base + ea + eb) - f(base + ea) - f(base + eb) + f(base)


@dataclass(frozen=True)
class SsdReport:
    is_ssd: bool
    is_unitary: bool
    is_pdssdc_alphabet: bool
    row_monomial: bool
    diagonal_R: bool
    pairing: tuple[tuple[int, ...], ...]
    max_pair_size: int
    is_semi_orthogonal: bool
    diag_coeffs: np.ndarray = field(repr=False)
    worst_violation: float
    iq_offdiag_terms: bool

    @property
    def is_pdssdc(self) -> bool:
        return self.is_ssd and self.is_pdssdc_alphabet

    def as_dict(self) -> dict:
        return {
            "is_ssd": self.is_ssd,
            "is_unitary": self.is_unitary,
            "is_pdssdc_alphabet": self.is_pdssdc_alphabet,
            "is_pdssdc": self.is_pdssdc,
            "row_monomial": self.row_monomial,
            "diagonal_R": self.diagonal_R,
            "is_semi_orthogonal": self.is_semi_orthogonal,
            "pairing": [[k + 1 for k in g] for g in self.pairing],
            "max_pair_size": self.max_pair_size,
            "worst_violation": self.worst_violation,
            "iq_offdiag_terms": self.iq_offdiag_terms,
        }


def _ssd_sample(spec: CodeSpec, h: np.ndarray, Ri: np.ndarray) -> tuple[float, np.ndarray, bool]:
    """Worst cross-symbol violation, per-(symbol, relay) square coefficients, and whether I*Q terms appear off the diagonal."""
    N, K = spec.N, spec.K
    C = quadratic_coefficients(extract_weight_matrices(spec, h), Ri)
    S = C + C.transpose(1, 0, 2, 3)
    scale = max(1.0, float(np.abs(C).max(initial=0.0)))
    sym = np.arange(2 * N) % N
    worst = 0.0
    iq_off = False
    for a, b in itertools.combinations(range(2 * N), 2):
        if sym[a] != sym[b]:
            worst = max(worst, float(np.abs(S[a, b]).max()) / scale)
        else:
            worst = max(worst, float(np.abs(np.diag(S[a, b])).max()) / scale)
            iq_off = iq_off or not _small(_offdiag(S[a, b]), scale)
    h2 = np.abs(h) ** 2
    diag = np.stack([np.real(np.diagonal(C[a, a])) for a in range(2 * N)])  # (2N, K)
    coeffs = np.stack([diag[:N] / h2, diag[N:] / h2], axis=-1)  # (N, K, 2)
    worst = max(worst, float(np.abs(np.imag(np.stack([np.diagonal(C[a, a]) for a in range(2 * N)]))).max()) / scale)
    return worst, coeffs, iq_off


def check_ssd(spec: CodeSpec, h_samples: int = 5, g_samples: int = 5, seed: int = 0,
              pairing: PairingResult | None = None) -> SsdReport:
    """Decide single-symbol decodability by expanding ``X R^-1 X^H`` over real coordinates."""
    rng = np.random.default_rng(seed)
    worst, coeffs, iq_off, diagonal = 0.0, [], False, True
    for _ in range(g_samples):
        P1, P2 = rng.uniform(0.5, 10.0, size=2)
        cov = build_R(spec, _cn(rng, spec.K), P1, P2)
        diagonal = diagonal and cov.is_diagonal
        Ri = np.linalg.inv(cov.R)
        for _ in range(h_samples):
            w, c, iq = _ssd_sample(spec, _cn(rng, spec.K), Ri)
            worst = max(worst, w)
            coeffs.append(c)
            iq_off = iq_off or iq
    if pairing is None:
        pairing = derive_pairing(spec, seed=seed)
    return SsdReport(
        is_ssd=worst <= TOL,
        is_unitary=check_unitary(spec, h_samples, seed),
        is_pdssdc_alphabet=check_alphabet(spec),
        row_monomial=check_row_monomial(spec),
        diagonal_R=diagonal,
        pairing=pairing.groups,
        max_pair_size=max((len(g) for g in pairing.groups), default=0),
        is_semi_orthogonal=pairing.is_semi_orthogonal,
        diag_coeffs=np.stack(coeffs) if coeffs else np.zeros((0, spec.N, spec.K, 2)),
        worst_violation=worst,
        iq_offdiag_terms=iq_off,
    )


def check_unitary(spec: CodeSpec, h_samples: int = 5, seed: int = 0, strict: bool = True) -> bool:
    """Every ``Phi Phi^H`` is diagonal.

    With ``strict`` each relay must also be either silent or carry every
    real coordinate, so a weight matrix never leaves an active relay empty.
    """
    rng = np.random.default_rng(seed + 1)
    for _ in range(h_samples):
        phi = extract_weight_matrices(spec, _cn(rng, spec.K))
        gram = np.einsum("akt,alt->akl", phi, phi.conj())
        scale = float(np.abs(gram).max(initial=0.0))
        if any(not _small(_offdiag(m), scale) for m in gram):
            return False
        if strict:
            active = np.abs(np.diagonal(gram, axis1=1, axis2=2)) > TOL * max(scale, 1.0)  # (2N, K)
            if np.any(active.any(axis=0) & ~active.all(axis=0)):
                return False
    return True


# -- pairing -------------------------------------------------------------------

@dataclass(frozen=True)
class PairingResult:
    groups: tuple[tuple[int, ...], ...]
    is_semi_orthogonal: bool
    max_degree: int
    column_disjoint: bool
    edges: tuple[tuple[int, int], ...]


def derive_pairing(spec: CodeSpec, samples: int = 10, seed: int = 0) -> PairingResult:
    """Rows ``k, k'`` are linked when ``[X R^-1 X^H]_{k,k'}`` is not identically zero.

    ``column_disjoint`` confirms ``A_k A_k'^H = 0`` and ``B_k* B_k'^T = 0``
    for every unlinked pair.
    """
    rng = np.random.default_rng(seed + 2)
    K = spec.K
    peak = np.zeros((K, K))
    scale = 0.0
    for _ in range(samples):
        h, g = _cn(rng, K), _cn(rng, K)
        P1, P2 = rng.uniform(0.5, 10.0, size=2)
        Ri = np.linalg.inv(covariance_matrix(spec, g, P1, P2))
        M = gram_form(spec, h, rng.standard_normal(2 * spec.N), Ri)
        peak = np.maximum(peak, np.abs(M))
        scale = max(scale, float(np.abs(M).max(initial=0.0)))
    linked = peak > TOL * max(scale, 1.0)
    edges = tuple((k, kk) for k, kk in itertools.combinations(range(K), 2) if linked[k, kk])
    degree = [sum(1 for e in edges if k in e) for k in range(K)]
    groups = _components(K, edges)
    A, B = spec.A_array, spec.B_array
    disjoint = all(
        _small(A[k] @ A[kk].conj().T, 1.0) and _small(B[k].conj() @ B[kk].T, 1.0)
        for k, kk in itertools.combinations(range(K), 2)
        if not linked[k, kk]
    )
    return PairingResult(groups, max(degree, default=0) <= 1, max(degree, default=0), disjoint, edges)


def _components(K: int, edges) -> tuple[tuple[int, ...], ...]:
    parent = list(range(K))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in edges:
        parent[find(a)] = find(b)
    comps: dict[int, list[int]] = {}
    for k in range(K):
        comps.setdefault(find(k), []).append(k)
    return tuple(sorted(tuple(c) for c in comps.values()))


# -- rank and rate bounds --------------------------------------------------------

def pair_rank_requirement(N: int) -> int:
    m = N // 2
    return 2 * m if N % 2 == 0 else 2 * m + 2


def rank_bound_failures(spec: CodeSpec, pairing) -> list[str]:
    """Reasons the relay matrices violate the paired-row or unpaired-row conditions."""
    failures = []
    groups = pairing.groups if isinstance(pairing, PairingResult) else pairing
    for group in groups:
        if len(group) > 2:
            failures.append(f"rows {[k + 1 for k in group]} form a group larger than two")
            continue
        if len(group) == 1:
            k = group[0]
            a, b = spec.relay_pairs[k]
            e = a @ a.H + b.conj() @ b.T
            if not e.is_diagonal() or any(not (e[i, i].im == 0 and e[i, i].re > 0) for i in range(spec.N)):
                failures.append(f"row {k + 1}: self Gram is not positive diagonal")
            continue
        k, kk = group
        (ak, bk), (akk, bkk) = spec.relay_pairs[k], spec.relay_pairs[kk]
        tag = f"pair ({k + 1},{kk + 1})"
        aa = ak @ akk.H
        bb = bk.conj() @ bkk.T
        total = aa + bb
        if any(aa[i, i] or bb[i, i] for i in range(spec.N)):
            failures.append(f"{tag}: nonzero diagonal")
        for name, m in (("A-cross", aa), ("B-cross", bb), ("sum", total)):
            if not (m.is_row_monomial() and m.is_column_monomial()):
                failures.append(f"{tag}: {name} is not row and column monomial")
        if total.nnz() % 2:
            failures.append(f"{tag}: odd number of nonzeros")
        at, bt = vstack([ak, akk]), vstack([bk, bkk])
        rank = (at @ at.H + bt.conj() @ bt.T).rank()
        if rank < pair_rank_requirement(spec.N):
            failures.append(f"{tag}: rank {rank} below {pair_rank_requirement(spec.N)}")
    return failures


def check_rank_bound(spec: CodeSpec, pairing) -> bool:
    return not rank_bound_failures(spec, pairing)


def rate_upper_bound(N: int, K: int) -> Fraction:
    """Largest symbol rate ``N / T`` a row-monomial semi-orthogonal code can reach."""
    if N < 1 or K < 2:
        raise ValueError("need N >= 1 and K >= 2")
    l, m = K // 2, N // 2
    if K % 2 == 0:
        return Fraction(2, l) if N % 2 == 0 else Fraction(2 * m + 1, (m + 1) * l)
    return Fraction(2, l + 1) if N % 2 == 0 else Fraction(4 * m + 2, (2 * m + 2) * l + 2 * m + 1)


# -- signal sets ---------------------------------------------------------------

@dataclass(frozen=True)
class SignalSet:
    """A two-dimensional constellation scaled to unit average energy."""

    label: str
    points: tuple[complex, ...]
    rotation_deg: float = 0.0

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=complex)
        if pts.size == 0:
            raise ValueError("empty signal set")
        if len(set(np.round(pts, 12).tolist())) != pts.size:
            raise ValueError("signal points must be distinct")
        energy = float(np.mean(np.abs(pts) ** 2))
        if energy > 0:
            pts = pts / math.sqrt(energy)
        object.__setattr__(self, "points", tuple(complex(p) for p in pts))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=complex)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def bits(self) -> float:
        return math.log2(self.size)

    @classmethod
    def qpsk(cls, rotation_deg: float = 0.0) -> "SignalSet":
        rot = np.exp(1j * math.radians(rotation_deg))
        pts = [complex(re, im) * rot for re in (-1, 1) for im in (-1, 1)]
        label = "QPSK" if rotation_deg == 0 else f"QPSK rotated {rotation_deg:g} deg"
        return cls(label, tuple(pts), rotation_deg)

    @classmethod
    def qam16(cls) -> "SignalSet":
        levels = (-3, -1, 1, 3)
        return cls("16-QAM", tuple(complex(re, im) for re in levels for im in levels))

    @classmethod
    def by_name(cls, name: str, rotation_deg: float | None = None) -> "SignalSet":
        key = name.lower().replace("-", "").replace("_", "")
        if key == "qpsk":
            return cls.qpsk(0.0 if rotation_deg is None else rotation_deg)
        if key in ("rqpsk", "rotatedqpsk"):
            return cls.qpsk(22.5 if rotation_deg is None else rotation_deg)
        if key in ("qam16", "16qam"):
            return cls.qam16()
        raise ValueError(f"unknown constellation {name!r}")


def check_signalset_diversity(sigset: SignalSet) -> bool:
    """No nonzero pairwise difference lies on a ±45 degree line."""
    pts = sigset.array
    for a, b in itertools.combinations(pts, 2):
        d = a - b
        if abs(abs(d.real) - abs(d.imag)) <= TOL * abs(d):
            return False
    return True


# -- whole-suite driver ----------------------------------------------------------

def verify_all(spec: CodeSpec, samples: int = 5, seed: int = 0) -> dict:
    """Run every check and gather the results in a JSON-friendly dict."""
    pairing = derive_pairing(spec, seed=seed)
    ssd = check_ssd(spec, samples, samples, seed, pairing)
    l3_worst, l3_failed = lemma3_violations(spec, samples, seed)
    rank_failures = rank_bound_failures(spec, pairing)
    report = ssd.as_dict()
    report.update({
        "N": spec.N,
        "K": spec.K,
        "T": spec.T,
        "family": spec.family,
        "lemma3": not l3_failed,
        "lemma3_worst_violation": l3_worst,
        "lemma3_failures": l3_failed[:20],
        "column_disjoint_orthogonal_rows": pairing.column_disjoint,
        "rank_bound": not rank_failures,
        "rank_bound_failures": rank_failures,
        "rate": str(spec.rate),
    })
    if spec.K >= 2:
        bound = rate_upper_bound(spec.N, spec.K)
        report["rate_bound"] = str(bound)
        report["rate_within_bound"] = spec.rate <= bound
        report["rate_achieves_bound"] = spec.rate == bound
    if spec.pairing is not None:
        report["declared_pairing_matches"] = tuple(spec.pairing) == pairing.groups
    return report
