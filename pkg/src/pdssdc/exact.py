"""Exact complex-rational scalars and matrices.

Relay and precoding matrices only ever hold entries such as ``0``, ``±1``,
``±j`` or ``±1/2 ± j/2``, so every structural property we test on them
(monomiality, disjointness, rank) is decided without floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionError, SpecFormatError

Number = Union[int, Fraction, "ExactComplex"]


@dataclass(frozen=True)
class ExactComplex:
    """Complex number with rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, value: Number) -> "ExactComplex":
        if isinstance(value, ExactComplex):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(Fraction(value))
        if isinstance(value, complex):
            raise TypeError("floating complex values cannot be made exact")
        raise TypeError(f"cannot convert {type(value).__name__} to ExactComplex")

    @property
    def re_num(self) -> int:
        return self.re.numerator

    @property
    def re_den(self) -> int:
        return self.re.denominator

    @property
    def im_num(self) -> int:
        return self.im.numerator

    @property
    def im_den(self) -> int:
        return self.im.denominator

    def conjugate(self) -> "ExactComplex":
        return ExactComplex(self.re, -self.im)

    def __add__(self, other: Number) -> "ExactComplex":
        o = ExactComplex.coerce(other)
        return ExactComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self) -> "ExactComplex":
        return ExactComplex(-self.re, -self.im)

    def __sub__(self, other: Number) -> "ExactComplex":
        return self + (-ExactComplex.coerce(other))

    def __rsub__(self, other: Number) -> "ExactComplex":
        return ExactComplex.coerce(other) - self

    def __mul__(self, other: Number) -> "ExactComplex":
        o = ExactComplex.coerce(other)
        return ExactComplex(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "ExactComplex":
        o = ExactComplex.coerce(other)
        norm = o.re * o.re + o.im * o.im
        if norm == 0:
            raise ZeroDivisionError("division by exact zero")
        num = self * o.conjugate()
        return ExactComplex(num.re / norm, num.im / norm)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, ExactComplex):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __str__(self) -> str:
        return format_entry(self)

    def __repr__(self) -> str:
        return f"ExactComplex({format_entry(self)!r})"


ZERO = ExactComplex()
ONE = ExactComplex(1)
J = ExactComplex(0, 1)


def _format_frac(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def format_entry(z: ExactComplex) -> str:
    """Canonical string form, e.g. ``"1/2-1/2*j"``, ``"-j"``, ``"0"``."""
    if not z.im:
        return _format_frac(z.re)
    if z.im == 1:
        im = "j"
    elif z.im == -1:
        im = "-j"
    else:
        im = f"{_format_frac(z.im)}*j"
    if not z.re:
        return im
    sign = "" if im.startswith("-") else "+"
    return f"{_format_frac(z.re)}{sign}{im}"


def parse_entry(text: str) -> ExactComplex:
    """Parse an entry string such as ``"1/2-1/2*j"``, ``"j"``, ``"-3"`` or ``"2*j"``."""
    s = str(text).replace(" ", "")
    try:
        if not s:
            raise ValueError
        if "j" not in s:
            return ExactComplex(Fraction(s))
        if not s.endswith("j") or s.count("j") != 1:
            raise ValueError
        body = s[:-1]
        split = max(body.rfind("+"), body.rfind("-"))
        re_txt, im_txt = (body[:split], body[split:]) if split > 0 else ("", body)
        if im_txt.endswith("*"):
            im_txt = im_txt[:-1]
        if im_txt in ("", "+"):
            im = Fraction(1)
        elif im_txt == "-":
            im = Fraction(-1)
        else:
            im = Fraction(im_txt)
        return ExactComplex(Fraction(re_txt) if re_txt else Fraction(0), im)
    except (ValueError, ZeroDivisionError):
        raise SpecFormatError(f"malformed matrix entry {text!r}") from None


class ExactMatrix:
    """Immutable dense matrix of :class:`ExactComplex` entries, row-major."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Iterable[Number]) -> None:
        ents = tuple(ExactComplex.coerce(e) for e in entries)
        if rows < 0 or cols < 0 or len(ents) != rows * cols:
            raise DimensionError(
                f"{rows}x{cols} matrix needs {rows * cols} entries, got {len(ents)}"
            )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", ents)

    def __setattr__(self, name, value):
        raise AttributeError("ExactMatrix is immutable")

    def __reduce__(self):
        return (ExactMatrix, (self.rows, self.cols, self.entries))

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Number]]) -> "ExactMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise DimensionError("ragged rows")
        return cls(len(rows), ncols, [e for r in rows for e in r])

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> "ExactMatrix":
        cols = rows if cols is None else cols
        return cls(rows, cols, [ZERO] * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls(n, n, [ONE if i == j else ZERO for i in range(n) for j in range(n)])

    @classmethod
    def diag(cls, values: Sequence[Number]) -> "ExactMatrix":
        n = len(values)
        return cls(n, n, [values[i] if i == j else ZERO for i in range(n) for j in range(n)])

    @classmethod
    def block(cls, blocks: Sequence[Sequence["ExactMatrix"]]) -> "ExactMatrix":
        return vstack([hstack(row) for row in blocks])

    # -- access ---------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx: tuple[int, int]) -> ExactComplex:
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(idx)
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[ExactComplex, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def column(self, j: int) -> tuple[ExactComplex, ...]:
        return self.entries[j::self.cols] if self.cols else ()

    def tolist(self) -> list[list[ExactComplex]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def to_numpy(self) -> np.ndarray:
        out = np.array([complex(e) for e in self.entries], dtype=complex)
        return out.reshape(self.rows, self.cols)

    def nonzero_positions(self) -> list[tuple[int, int]]:
        return [divmod(idx, self.cols) for idx, e in enumerate(self.entries) if e]

    # -- algebra --------------------------------------------------------------

    def _check_same_shape(self, other: "ExactMatrix") -> None:
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._check_same_shape(other)
        return ExactMatrix(self.rows, self.cols, [a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._check_same_shape(other)
        return ExactMatrix(self.rows, self.cols, [a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix(self.rows, self.cols, [-a for a in self.entries])

    def scale(self, c: Number) -> "ExactMatrix":
        c = ExactComplex.coerce(c)
        return ExactMatrix(self.rows, self.cols, [c * a for a in self.entries])

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        other_cols = [other.column(j) for j in range(other.cols)]
        for i in range(self.rows):
            r = self.row(i)
            nz = [(k, a) for k, a in enumerate(r) if a]
            for col in other_cols:
                acc = ZERO
                for k, a in nz:
                    b = col[k]
                    if b:
                        acc = acc + a * b
                out.append(acc)
        return ExactMatrix(self.rows, other.cols, out)

    @property
    def T(self) -> "ExactMatrix":
        return ExactMatrix(self.cols, self.rows, [e for j in range(self.cols) for e in self.column(j)])

    def conj(self) -> "ExactMatrix":
        return ExactMatrix(self.rows, self.cols, [e.conjugate() for e in self.entries])

    @property
    def H(self) -> "ExactMatrix":
        return self.T.conj()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.entries))

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "ExactMatrix":
        return ExactMatrix(len(rows), len(cols), [self[i, j] for i in rows for j in cols])

    # -- structure ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not any(self.entries)

    def is_diagonal(self) -> bool:
        return all(not e for idx, e in enumerate(self.entries) if idx // self.cols != idx % self.cols)

    def is_row_monomial(self) -> bool:
        return all(sum(1 for e in self.row(i) if e) <= 1 for i in range(self.rows))

    def is_column_monomial(self) -> bool:
        return all(sum(1 for e in self.column(j) if e) <= 1 for j in range(self.cols))

    def nnz(self) -> int:
        return sum(1 for e in self.entries if e)

    def rank(self) -> int:
        """Rank by fraction-exact Gaussian elimination."""
        m = [list(self.row(i)) for i in range(self.rows)]
        rank = 0
        for c in range(self.cols):
            pivot = next((r for r in range(rank, self.rows) if m[r][c]), None)
            if pivot is None:
                continue
            m[rank], m[pivot] = m[pivot], m[rank]
            p = m[rank][c]
            for r in range(self.rows):
                if r != rank and m[r][c]:
                    f = m[r][c] / p
                    m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
            rank += 1
            if rank == self.rows:
                break
        return rank

    def __repr__(self) -> str:
        body = "; ".join(", ".join(format_entry(e) for e in self.row(i)) for i in range(self.rows))
        return f"ExactMatrix({self.rows}x{self.cols}: [{body}])"

    # -- serialization --------------------------------------------------------

    def to_strings(self) -> list[list[str]]:
        return [[format_entry(e) for e in self.row(i)] for i in range(self.rows)]

    @classmethod
    def from_strings(cls, rows: Sequence[Sequence[str]], shape: tuple[int, int] | None = None) -> "ExactMatrix":
        if not isinstance(rows, (list, tuple)) or any(not isinstance(r, (list, tuple)) for r in rows):
            raise SpecFormatError("a matrix must be an array of rows")
        if shape is not None and shape[0] == 0:
            return cls.zeros(0, shape[1])
        try:
            mat = cls.from_rows([[parse_entry(str(e)) for e in r] for r in rows])
        except DimensionError as exc:
            raise SpecFormatError(str(exc)) from None
        if shape is not None and mat.shape != shape:
            raise SpecFormatError(f"expected a {shape[0]}x{shape[1]} matrix, got {mat.rows}x{mat.cols}")
        return mat


def kron(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    """Kronecker product ``a ⊗ b``."""
    rows, cols = a.rows * b.rows, a.cols * b.cols
    out = []
    for i in range(rows):
        ai, bi = divmod(i, b.rows)
        for j in range(cols):
            aj, bj = divmod(j, b.cols)
            x = a[ai, aj]
            out.append(x * b[bi, bj] if x else ZERO)
    return ExactMatrix(rows, cols, out)


def hstack(mats: Sequence[ExactMatrix]) -> ExactMatrix:
    if not mats:
        raise DimensionError("nothing to stack")
    rows = mats[0].rows
    if any(m.rows != rows for m in mats):
        raise DimensionError("hstack needs equal row counts")
    cols = sum(m.cols for m in mats)
    return ExactMatrix(rows, cols, [e for i in range(rows) for m in mats for e in m.row(i)])


def vstack(mats: Sequence[ExactMatrix]) -> ExactMatrix:
    if not mats:
        raise DimensionError("nothing to stack")
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise DimensionError("vstack needs equal column counts")
    return ExactMatrix(sum(m.rows for m in mats), cols, [e for m in mats for e in m.entries])


def block_diag(mats: Sequence[ExactMatrix]) -> ExactMatrix:
    total_c = sum(m.cols for m in mats)
    rows = []
    offset = 0
    for m in mats:
        left = ExactMatrix.zeros(m.rows, offset)
        right = ExactMatrix.zeros(m.rows, total_c - offset - m.cols)
        rows.append(hstack([left, m, right]))
        offset += m.cols
    return vstack(rows)


def matsum(mats: Iterable[ExactMatrix]) -> ExactMatrix:
    return reduce(lambda x, y: x + y, mats)
