"""Row-monomial semi-orthogonal code construction and DOSTBC baselines."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .design import CodeSpec, Design, DesignEntry, extract_relay_matrices, juxtapose, spec_from_design
from .errors import UnsupportedParametersError
from .exact import ExactMatrix, ONE, ZERO
from .precoding import build_precoders, identity_precoders

__all__ = [
    "ConstructionParams",
    "GroupDiagonal",
    "build_alamouti",
    "build_omega_block",
    "construct_rspdssdc",
    "construct_dostbc",
    "extract_relay_matrices",
    "min_T_table",
    "rate_table_row",
]


@dataclass(frozen=True)
class ConstructionParams:
    """Decompositions ``K = 4x + a = 2l (+1)`` and ``N = 4y + b = 2m (+1)``."""

    N: int
    K: int

    @property
    def x(self) -> int:
        return self.K // 4

    @property
    def a(self) -> int:
        return self.K % 4

    @property
    def y(self) -> int:
        return self.N // 4

    @property
    def b(self) -> int:
        return self.N % 4

    @property
    def l(self) -> int:
        return self.K // 2

    @property
    def m(self) -> int:
        return self.N // 2


@dataclass(frozen=True)
class GroupDiagonal:
    """The alternating gain pattern: relay ``k`` (0-based) is conjugated when ``k`` is odd."""

    K: int

    @property
    def delta(self) -> ExactMatrix:
        return ExactMatrix.diag([ONE if k % 2 == 0 else ZERO for k in range(self.K)])

    @property
    def theta(self) -> ExactMatrix:
        return ExactMatrix.diag([ZERO if k % 2 == 0 else ONE for k in range(self.K)])

    @property
    def conjugated(self) -> tuple[bool, ...]:
        return tuple(bool(k % 2) for k in range(self.K))


def _entry(sym: int, conj: bool = False, coeff=ONE) -> DesignEntry:
    return DesignEntry(coeff, None, False, sym, conj)


def build_alamouti(i1: int, i2: int) -> Design:
    """Unbound 2x2 Alamouti template ``[[x_i1, x_i2], [-x_i2*, x_i1*]]`` (0-based indices)."""
    if i1 == i2:
        raise ValueError("Alamouti block needs two distinct symbols")
    return Design(max(i1, i2) + 1, [
        [_entry(i1), _entry(i2)],
        [_entry(i2, True, -ONE), _entry(i1, True)],
    ])


def build_omega_block(m: int) -> Design:
    """Unbound 4x4 template ``[[U1, U2], [U2, U1]]`` over symbols ``4m .. 4m+3``."""
    if m < 0:
        raise ValueError("block index must be nonnegative")
    u1 = build_alamouti(4 * m, 4 * m + 1)
    u2 = build_alamouti(4 * m + 2, 4 * m + 3)
    top = juxtapose([u1, u2])
    bottom = juxtapose([u2, u1])
    return Design(4 * m + 4, top.grid + bottom.grid)


def _block_diagonal(blocks: list[Design]) -> Design:
    T = sum(d.T for d in blocks)
    N = max(d.N for d in blocks)
    rows, offset = [], 0
    for d in blocks:
        for row in d.grid:
            rows.append((DesignEntry(),) * offset + row + (DesignEntry(),) * (T - offset - d.T))
        offset += d.T
    return Design(N, rows)


def _pairing_for(K_full: int, K: int) -> list[list[int]]:
    """Rows {4c, 4c+2} and {4c+1, 4c+3} pair up; a partner lost to row dropping leaves a singleton."""
    groups = []
    for c in range(K_full // 4):
        for first in (4 * c, 4 * c + 1):
            group = [k for k in (first, first + 2) if k < K]
            if group:
                groups.append(group)
    return groups


def _multiple_of_four(N: int, K: int) -> tuple[Design, list[list[int]]]:
    """Bound design for ``N = 4y`` symbols and any ``K``, padding ``K`` up to a multiple of 4."""
    y = N // 4
    copies = -(-K // 4)
    parts = [_block_diagonal([build_omega_block(m)] * copies) for m in range(y)]
    full = juxtapose(parts).bind_gains()
    return full.take_rows(K), _pairing_for(4 * copies, K)


def construct_rspdssdc(N: int, K: int) -> tuple[Design, CodeSpec]:
    """Row-monomial semi-orthogonal design for ``N >= 4`` symbols and ``K >= 4`` relays."""
    if N < 4 or K < 4:
        raise UnsupportedParametersError("this construction needs N >= 4 and K >= 4; use construct_dostbc for N < 4")
    p = ConstructionParams(N, K)
    design, pairing = _multiple_of_four(4 * p.y, K)
    if p.b:
        design = juxtapose([design, _dostbc_design(p.b, K, 4 * p.y)])
    design = design.with_symbol_count(N)
    spec = spec_from_design(design, build_precoders(N), "rs_pdssdc", pairing)
    return design, spec


def _dostbc_design(n: int, K: int, offset: int = 0) -> Design:
    """Bound row-monomial DOSTBC over symbols ``offset .. offset+n-1``."""
    if n == 1:
        rows = [[_entry(offset, bool(k % 2)) if t == k else DesignEntry() for t in range(K)] for k in range(K)]
        return Design(offset + 1, rows).bind_gains()
    if n == 3:
        return juxtapose([_dostbc_design(2, K, offset), _dostbc_design(1, K, offset + 2)])
    if n == 2:
        block = build_alamouti(offset, offset + 1)
    elif n == 4:
        block = build_omega_block(0).take_rows(2)
        block = Design(offset + 4, [[e if e.is_zero else _entry(e.sym_index + offset, e.sym_conj, e.coeff)
                                     for e in row] for row in block.grid])
    else:
        raise UnsupportedParametersError(f"no DOSTBC baseline for N = {n}; supported N are 1, 2, 3, 4")
    blocks = [block] * (K // 2)
    if K % 2:
        blocks.append(block.take_rows(1))
    return _block_diagonal(blocks).bind_gains()


def construct_dostbc(N: int, K: int) -> tuple[Design, CodeSpec]:
    """Row-monomial DOSTBC baseline for ``N`` in 1..4 symbols (no precoding)."""
    if N not in (1, 2, 3, 4):
        raise UnsupportedParametersError(f"no DOSTBC baseline for N = {N}; supported N are 1, 2, 3, 4")
    if K < 1:
        raise UnsupportedParametersError("need at least one relay")
    design = _dostbc_design(N, K)
    spec = spec_from_design(design, identity_precoders(N), "dostbc", [[k] for k in range(K)])
    return design, spec


def min_T_table(N: int, K: int) -> tuple[int, int]:
    """Minimum second-phase length ``T`` for the construction and for row-monomial DOSTBCs."""
    if N < 1 or K < 1:
        raise ValueError("N and K must be positive")
    p = ConstructionParams(N, K)
    x, y, a, b = p.x, p.y, p.a, p.b
    table = {
        (0, 0): (4 * x * y, 8 * x * y),
        (2, 0): (4 * x * y + 4 * x, 8 * x * y + 4 * x),
        (0, 2): (4 * x * y + 4 * y, 8 * x * y + 4 * y),
        (2, 2): (4 * x * y + 4 * y + 4 * x + 2, 8 * x * y + 4 * y + 4 * x + 2),
        (0, 1): (4 * x * y + 4 * y, 8 * x * y + 4 * y),
        (2, 1): (4 * x * y + 4 * y + 4 * x + 2, 8 * x * y + 4 * x + 4 * y + 2),
        (0, 3): (4 * x * y + 4 * y, 8 * x * y + 8 * y),
        (2, 3): (4 * x * y + 4 * y + 4 * x + 4, 8 * x * y + 8 * y + 4 * x + 4),
        (1, 0): (4 * x * y + 4 * x, 8 * x * y + 4 * x),
        (1, 2): (4 * x * y + 4 * y + 4 * x + 2, 8 * x * y + 4 * x + 4 * y + 2),
        (3, 0): (4 * x * y + 8 * x, 8 * x * y + 8 * x),
        (3, 2): (4 * x * y + 4 * y + 8 * x + 4, 8 * x * y + 4 * y + 8 * x + 4),
        (1, 1): (4 * x * y + 4 * y + 4 * x + 1,
                 max(8 * x * y + 4 * x + 2 * y + 1, 8 * x * y + 4 * y + 2 * x + 1)),
        (1, 3): (4 * x * y + 4 * y + 4 * x + 3,
                 max(8 * x * y + 6 * y + 4 * x + 3, 8 * x * y + 8 * y + 2 * x + 2)),
        (3, 1): (4 * x * y + 8 * x + 4 * y + 3,
                 max(8 * x * y + 6 * x + 4 * y + 3, 8 * x * y + 8 * x + 2 * y + 2)),
        (3, 3): (4 * x * y + 4 * y + 8 * x + 8,
                 max(8 * x * y + 8 * x + 6 * y + 6, 8 * x * y + 8 * y + 6 * x + 6)),
    }
    return table[(b, a)]


def rate_table_row(N: int, K: int) -> dict:
    """One row of the rate comparison; ``T_rspdssdc`` is measured from the construction when it applies."""
    from .verification import rate_upper_bound

    t_rs, t_dostbc = min_T_table(N, K)
    if N >= 4 and K >= 4:
        t_rs = construct_rspdssdc(N, K)[0].T
    bound = rate_upper_bound(N, K)
    rate_rs = Fraction(N, t_rs)
    return {
        "N": N,
        "K": K,
        "T_rspdssdc": t_rs,
        "T_dostbc": t_dostbc,
        "rate_rspdssdc": rate_rs,
        "rate_dostbc": Fraction(N, t_dostbc),
        "bound": bound,
        "achieved": rate_rs == bound,
    }
