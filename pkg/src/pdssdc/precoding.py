"""Source precoders and the coordinate-interleaving map ``s~ = sP + s*Q``."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionError
from .exact import ExactComplex, ExactMatrix, block_diag, kron

_H = Fraction(1, 2)


def build_gamma_omega() -> tuple[ExactMatrix, ExactMatrix]:
    """Return the 4x4 pair (Gamma, Omega) that interleaves four symbols."""
    one, j = ExactComplex(_H), ExactComplex(0, _H)
    z = ExactComplex()
    gamma = ExactMatrix.from_rows([
        [one, z, -j, z],
        [z, one, z, -j],
        [z, one, z, j],
        [one, z, j, z],
    ])
    omega = ExactMatrix.from_rows([
        [one, z, j, z],
        [z, one, z, j],
        [z, -one, z, j],
        [-one, z, j, z],
    ])
    return gamma, omega


@dataclass(frozen=True)
class PrecoderPair:
    """Precoders for ``N = 4y + a`` symbols; the last ``a`` pass through untouched."""

    N: int
    P: ExactMatrix
    Q: ExactMatrix
    y: int
    a: int

    def __post_init__(self) -> None:
        if self.P.shape != (self.N, self.N) or self.Q.shape != (self.N, self.N):
            raise DimensionError("P and Q must be N x N")


def build_precoders(N: int) -> PrecoderPair:
    """Interleaving precoders for ``N`` symbols.

    Each consecutive group of four symbols is interleaved by (Gamma, Omega);
    any remainder of up to three symbols, and every symbol when ``N < 4``,
    is sent as is.
    """
    if N < 1:
        raise ValueError("N must be positive")
    y, a = divmod(N, 4)
    gamma, omega = build_gamma_omega()
    blocks_p, blocks_q = [], []
    if y:
        blocks_p.append(kron(ExactMatrix.identity(y), gamma))
        blocks_q.append(kron(ExactMatrix.identity(y), omega))
    if a:
        blocks_p.append(ExactMatrix.identity(a))
        blocks_q.append(ExactMatrix.zeros(a))
    return PrecoderPair(N, block_diag(blocks_p), block_diag(blocks_q), y, a)


def identity_precoders(N: int) -> PrecoderPair:
    return PrecoderPair(N, ExactMatrix.identity(N), ExactMatrix.zeros(N), 0, N)


def precode(s, pair) -> np.ndarray:
    """Apply ``s P + s* Q`` to a vector or a stack of row vectors.

    ``pair`` is anything carrying exact ``P`` and ``Q`` (a
    :class:`PrecoderPair` or a code description).
    """
    P, Q = pair.P.to_numpy(), pair.Q.to_numpy()
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != P.shape[0]:
        raise DimensionError(f"symbol vector has length {s.shape[-1]}, precoder expects {P.shape[0]}")
    return s @ P + np.conj(s) @ Q


def real_map(pair) -> ExactMatrix:
    """Real 2N x 2N matrix ``M`` with ``(s~_I | s~_Q) = (s_I | s_Q) M``."""
    plus, minus = pair.P + pair.Q, pair.P - pair.Q
    re = lambda m: ExactMatrix(m.rows, m.cols, [ExactComplex(e.re) for e in m.entries])
    im = lambda m: ExactMatrix(m.rows, m.cols, [ExactComplex(e.im) for e in m.entries])
    return ExactMatrix.block([[re(plus), im(plus)], [-im(minus), re(minus)]])


def is_signed_permutation(m: ExactMatrix) -> bool:
    allowed = (ExactComplex(1), ExactComplex(-1))
    nz = m.nonzero_positions()
    return (
        m.rows == m.cols
        and len(nz) == m.rows
        and m.is_row_monomial()
        and m.is_column_monomial()
        and all(m[i, j] in allowed for i, j in nz)
    )


def to_real(s) -> np.ndarray:
    """Stack real and imaginary parts: ``(..., N)`` complex to ``(..., 2N)`` real."""
    s = np.asarray(s, dtype=complex)
    return np.concatenate([s.real, s.imag], axis=-1)


def from_real(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = u.shape[-1] // 2
    return u[..., :n] + 1j * u[..., n:]
