"""Symbolic code designs, code descriptions and codeword assembly.

A :class:`Design` is the K x T template whose entries read like ``h1x1`` or
``-h2*x3*``.  A :class:`CodeSpec` is the operational description: precoders
``P, Q`` plus one relay-matrix pair ``(A_k, B_k)`` per relay.  Row ``k`` of a
codeword is ``h_k s~ A_k + h_k* s~* B_k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionError, MalformedDesignError, SpecFormatError
from .exact import ExactComplex, ExactMatrix, ONE, ZERO, J
from .precoding import precode

_COEFFS = {"": ONE, "-": -ONE, "j": J, "-j": -J}
_COEFF_TEXT = {v: k for k, v in _COEFFS.items()}


@dataclass(frozen=True)
class DesignEntry:
    """One slot of a design: ``coeff * h_k^(*) * x~_n^(*)`` or zero.

    ``h_index`` may be ``None`` on a nonzero entry; such an entry belongs to
    an unbound template that has not been multiplied by relay gains yet.
    Indices are 0-based.
    """

    coeff: ExactComplex = ZERO
    h_index: int | None = None
    h_conj: bool = False
    sym_index: int | None = None
    sym_conj: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeff", ExactComplex.coerce(self.coeff))
        if not self.coeff:
            if self.h_index is not None or self.sym_index is not None:
                raise MalformedDesignError("a zero entry carries no variables")
            return
        if self.coeff not in _COEFF_TEXT:
            raise MalformedDesignError(f"coefficient {self.coeff} is not one of 0, ±1, ±j")
        if self.sym_index is None:
            raise MalformedDesignError("a nonzero entry needs a symbol")
        if self.h_index is not None and self.h_conj != self.sym_conj:
            raise MalformedDesignError("h_k pairs with x~_n and h_k* with x~_n*")

    @property
    def is_zero(self) -> bool:
        return not self.coeff

    @classmethod
    def parse(cls, text: str) -> "DesignEntry":
        """Parse ``"0"``, ``"x3*"``, ``"-h2*x2*"``, ``"jh1x4"`` (1-based indices)."""
        s = str(text).replace(" ", "")
        if s == "0":
            return cls()
        try:
            head, _, rest = s.partition("x")
            if not rest:
                raise ValueError
            h_index, h_conj = None, False
            if "h" in head:
                prefix, _, h_txt = head.partition("h")
                h_conj = h_txt.endswith("*")
                h_index = int(h_txt.rstrip("*")) - 1
            else:
                prefix = head
            sym_conj = rest.endswith("*")
            sym_index = int(rest.rstrip("*")) - 1
            coeff = _COEFFS[prefix]
            if sym_index < 0 or (h_index is not None and h_index < 0):
                raise ValueError
        except (KeyError, ValueError):
            raise SpecFormatError(f"malformed design entry {text!r}") from None
        try:
            return cls(coeff, h_index, h_conj, sym_index, sym_conj)
        except MalformedDesignError as exc:
            raise SpecFormatError(f"{text!r}: {exc}") from None

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        h = "" if self.h_index is None else f"h{self.h_index + 1}" + ("*" if self.h_conj else "")
        x = f"x{self.sym_index + 1}" + ("*" if self.sym_conj else "")
        return _COEFF_TEXT[self.coeff] + h + x

    def with_gain(self, k: int, conj: bool) -> "DesignEntry":
        if self.is_zero:
            return self
        return DesignEntry(self.coeff, k, conj, self.sym_index, self.sym_conj)

    def value(self, h: np.ndarray, s_tilde: np.ndarray) -> complex:
        if self.is_zero:
            return 0j
        x = s_tilde[self.sym_index]
        x = np.conj(x) if self.sym_conj else x
        if self.h_index is not None:
            g = h[self.h_index]
            x = x * (np.conj(g) if self.h_conj else g)
        return complex(self.coeff) * x


@dataclass(frozen=True)
class Design:
    """A K x T grid of :class:`DesignEntry` over symbols ``x~_1 .. x~_N``."""

    N: int
    grid: tuple[tuple[DesignEntry, ...], ...]

    def __post_init__(self) -> None:
        grid = tuple(tuple(r) for r in self.grid)
        object.__setattr__(self, "grid", grid)
        if any(len(r) != len(grid[0]) for r in grid):
            raise DimensionError("ragged design")
        for k, row in enumerate(grid):
            for e in row:
                if e.is_zero:
                    continue
                if e.sym_index >= self.N:
                    raise MalformedDesignError(f"symbol x{e.sym_index + 1} exceeds N = {self.N}")
                if e.h_index is not None and e.h_index != k:
                    raise MalformedDesignError(f"row {k + 1} references h{e.h_index + 1}")

    @property
    def K(self) -> int:
        return len(self.grid)

    @property
    def T(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.K, self.T)

    def __getitem__(self, idx: tuple[int, int]) -> DesignEntry:
        k, t = idx
        return self.grid[k][t]

    @property
    def is_bound(self) -> bool:
        """True once every nonzero entry carries its relay gain."""
        return all(e.is_zero or e.h_index is not None for r in self.grid for e in r)

    @classmethod
    def from_text(cls, rows: Sequence[Sequence[str] | str], N: int | None = None) -> "Design":
        """Build from rows of entry strings (or whitespace-separated row strings)."""
        grid = [[DesignEntry.parse(e) for e in (r.split() if isinstance(r, str) else r)] for r in rows]
        if N is None:
            N = 1 + max((e.sym_index for r in grid for e in r if not e.is_zero), default=-1)
        return cls(N, grid)

    def to_text(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.grid]

    def __str__(self) -> str:
        cells = self.to_text()
        width = max((len(c) for r in cells for c in r), default=1)
        return "\n".join("  ".join(c.rjust(width) for c in r) for r in cells)

    @classmethod
    def zeros(cls, K: int, T: int, N: int) -> "Design":
        return cls(N, [[DesignEntry()] * T for _ in range(K)])

    def take_rows(self, count: int) -> "Design":
        return Design(self.N, self.grid[:count])

    def with_symbol_count(self, N: int) -> "Design":
        return Design(N, self.grid)

    def bind_gains(self) -> "Design":
        """Multiply row ``k`` by ``h_k`` (0-based even ``k``) or ``h_k*`` (odd ``k``).

        This is the alternating gain pattern ``G = H Delta + H* Theta``.
        Conjugated symbols must then sit exactly on the conjugated rows.
        """
        rows = []
        for k, row in enumerate(self.grid):
            try:
                rows.append([e.with_gain(k, bool(k % 2)) for e in row])
            except MalformedDesignError:
                raise MalformedDesignError(
                    f"row {k + 1} mixes conjugation with the alternating gain pattern"
                ) from None
        return Design(self.N, rows)

    def evaluate(self, h, s_tilde) -> np.ndarray:
        h = np.asarray(h, dtype=complex)
        s_tilde = np.asarray(s_tilde, dtype=complex)
        return np.array([[e.value(h, s_tilde) for e in row] for row in self.grid], dtype=complex)

    def column_load(self) -> list[int]:
        """Number of relays transmitting in each column."""
        return [sum(1 for k in range(self.K) if not self.grid[k][t].is_zero) for t in range(self.T)]


def juxtapose(designs: Sequence[Design]) -> Design:
    """Place designs side by side; the symbol count is the largest one."""
    if not designs:
        raise DimensionError("nothing to juxtapose")
    K = designs[0].K
    if any(d.K != K for d in designs):
        raise DimensionError("juxtaposed designs need the same number of rows")
    N = max(d.N for d in designs)
    return Design(N, [sum((d.grid[k] for d in designs), ()) for k in range(K)])


def extract_relay_matrices(d: Design) -> list[tuple[ExactMatrix, ExactMatrix]]:
    """Relay pairs ``(A_k, B_k)`` realizing a bound design."""
    if not d.is_bound:
        raise MalformedDesignError("bind relay gains before extracting relay matrices")
    pairs = []
    for k, row in enumerate(d.grid):
        a = [[ZERO] * d.T for _ in range(d.N)]
        b = [[ZERO] * d.T for _ in range(d.N)]
        for t, e in enumerate(row):
            if e.is_zero:
                continue
            (b if e.sym_conj else a)[e.sym_index][t] = e.coeff
        pairs.append((ExactMatrix.from_rows(a) if d.N else ExactMatrix.zeros(0, d.T),
                      ExactMatrix.from_rows(b) if d.N else ExactMatrix.zeros(0, d.T)))
    return pairs


def design_from_relay_matrices(A: Sequence[ExactMatrix], B: Sequence[ExactMatrix]) -> Design:
    """Inverse of :func:`extract_relay_matrices` for alphabet-valued, column-monomial pairs."""
    if not A:
        raise DimensionError("no relays")
    N, T = A[0].shape
    grid = []
    for k, (a, b) in enumerate(zip(A, B)):
        row = [DesignEntry()] * T
        for src, conj in ((a, False), (b, True)):
            for n, t in src.nonzero_positions():
                if not row[t].is_zero:
                    raise MalformedDesignError(f"relay {k + 1} uses column {t + 1} twice")
                row[t] = DesignEntry(src[n, t], k, conj, n, conj)
        grid.append(row)
    return Design(N, grid)


def _validate_pairing(pairing, K: int) -> tuple[tuple[int, ...], ...] | None:
    if pairing is None:
        return None
    groups = tuple(tuple(sorted(int(k) for k in g)) for g in pairing)
    groups = tuple(sorted(groups))
    flat = [k for g in groups for k in g]
    if sorted(flat) != list(range(K)):
        raise MalformedDesignError("pairing must partition the relays")
    return groups


@dataclass(frozen=True)
class CodeSpec:
    """Complete description of a precoded distributed code.

    ``pairing`` groups 0-based relay indices; JSON files use 1-based indices.
    """

    N: int
    K: int
    T: int
    P: ExactMatrix
    Q: ExactMatrix
    A: tuple[ExactMatrix, ...]
    B: tuple[ExactMatrix, ...]
    family: str = "user"
    pairing: tuple[tuple[int, ...], ...] | None = None
    note: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "A", tuple(self.A))
        object.__setattr__(self, "B", tuple(self.B))
        if self.P.shape != (self.N, self.N) or self.Q.shape != (self.N, self.N):
            raise DimensionError("P and Q must be N x N")
        if len(self.A) != self.K or len(self.B) != self.K:
            raise DimensionError(f"expected {self.K} relay pairs")
        for k, (a, b) in enumerate(zip(self.A, self.B)):
            if a.shape != (self.N, self.T) or b.shape != (self.N, self.T):
                raise DimensionError(f"relay {k + 1} matrices must be {self.N} x {self.T}")
        object.__setattr__(self, "pairing", _validate_pairing(self.pairing, self.K))

    @property
    def relay_pairs(self) -> list[tuple[ExactMatrix, ExactMatrix]]:
        return list(zip(self.A, self.B))

    @cached_property
    def A_array(self) -> np.ndarray:
        return np.stack([a.to_numpy() for a in self.A]).reshape(self.K, self.N, self.T)

    @cached_property
    def B_array(self) -> np.ndarray:
        return np.stack([b.to_numpy() for b in self.B]).reshape(self.K, self.N, self.T)

    @cached_property
    def P_array(self) -> np.ndarray:
        return self.P.to_numpy()

    @cached_property
    def Q_array(self) -> np.ndarray:
        return self.Q.to_numpy()

    @property
    def rate(self) -> Fraction:
        return Fraction(self.N, self.T)

    def design(self) -> Design:
        return design_from_relay_matrices(self.A, self.B)

    def replace_relay(self, k: int, A: ExactMatrix | None = None, B: ExactMatrix | None = None) -> "CodeSpec":
        """Copy with relay ``k`` (0-based) altered; handy for corruption fixtures."""
        As, Bs = list(self.A), list(self.B)
        if A is not None:
            As[k] = A
        if B is not None:
            Bs[k] = B
        return CodeSpec(self.N, self.K, self.T, self.P, self.Q, As, Bs, "user", None, self.note)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "N": self.N,
            "K": self.K,
            "T": self.T,
            "family": self.family,
            "P": self.P.to_strings(),
            "Q": self.Q.to_strings(),
            "A": [a.to_strings() for a in self.A],
            "B": [b.to_strings() for b in self.B],
        }
        if self.pairing is not None:
            out["pairing"] = [[k + 1 for k in g] for g in self.pairing]
        if self.note:
            out["note"] = self.note
        return out

    def to_json(self) -> str:
        """Deterministic JSON text with one matrix row per line."""
        d = self.to_dict()
        lines = ["{"]
        items = list(d.items())
        for idx, (key, value) in enumerate(items):
            comma = "," if idx < len(items) - 1 else ""
            if key in ("P", "Q"):
                body = _matrix_json(value, "  ")
            elif key in ("A", "B"):
                inner = ",\n".join("    " + _matrix_json(m, "    ") for m in value)
                body = "[\n" + inner + "\n  ]" if value else "[]"
            else:
                body = json.dumps(value)
            lines.append(f'  "{key}": {body}{comma}')
        lines.append("}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        try:
            N, K, T = int(d["N"]), int(d["K"]), int(d["T"])
            P = ExactMatrix.from_strings(d["P"], (N, N))
            Q = ExactMatrix.from_strings(d["Q"], (N, N))
            A = [ExactMatrix.from_strings(m, (N, T)) for m in d["A"]]
            B = [ExactMatrix.from_strings(m, (N, T)) for m in d["B"]]
            pairing = d.get("pairing")
            if pairing is not None:
                pairing = [[int(k) - 1 for k in g] for g in pairing]
            return cls(N, K, T, P, Q, A, B, str(d.get("family", "user")), pairing, str(d.get("note", "")))
        except SpecFormatError:
            raise
        except KeyError as exc:
            raise SpecFormatError(f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise SpecFormatError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(d, dict):
            raise SpecFormatError("a code description must be a JSON object")
        return cls.from_dict(d)


def _matrix_json(rows: list[list[str]], indent: str) -> str:
    if not rows:
        return "[]"
    inner = ",\n".join(indent + "  " + json.dumps(r) for r in rows)
    return "[\n" + inner + "\n" + indent + "]"


def spec_from_design(design: Design, precoders, family: str = "user", pairing=None, note: str = "") -> CodeSpec:
    """Bundle a bound design with its precoders."""
    pairs = extract_relay_matrices(design)
    return CodeSpec(
        design.N, design.K, design.T, precoders.P, precoders.Q,
        [a for a, _ in pairs], [b for _, b in pairs], family, pairing, note,
    )


def assemble_codeword(spec: CodeSpec, h, s_tilde) -> np.ndarray:
    """Codeword ``X`` (K x T) for relay gains ``h`` and precoded symbols ``s~``."""
    h = np.asarray(h, dtype=complex)
    s_tilde = np.asarray(s_tilde, dtype=complex)
    if h.shape != (spec.K,) or s_tilde.shape != (spec.N,):
        raise DimensionError(f"need h of length {spec.K} and s~ of length {spec.N}")
    sa = np.einsum("n,knt->kt", s_tilde, spec.A_array)
    sb = np.einsum("n,knt->kt", np.conj(s_tilde), spec.B_array)
    return h[:, None] * sa + np.conj(h)[:, None] * sb


def extract_weight_matrices(spec: CodeSpec, h) -> np.ndarray:
    """Weight matrices ``Phi`` of shape ``(2N, K, T)``.

    Index ``i`` is the in-phase part of symbol ``i`` and ``N + i`` its
    quadrature part, so ``X = sum_a u_a Phi_a`` with ``u = (s_I | s_Q)``.
    """
    units = np.eye(2 * spec.N)
    s = units[:, : spec.N] + 1j * units[:, spec.N:]
    s_tilde = precode(s, spec)
    return np.stack([assemble_codeword(spec, h, st) for st in s_tilde])
