"""Reference codes, kept as plain text so tests compare symbolically.

Designs are written with 1-based indices; ``x`` stands for a precoded
symbol ``x~`` whenever the code carries interleaving precoders.
"""

from __future__ import annotations

from .design import CodeSpec, Design, juxtapose, spec_from_design
from .exact import ExactMatrix
from .precoding import PrecoderPair, build_precoders, identity_precoders

X_4_4 = [
    "h1x1     h1x2     h1x3     h1x4",
    "-h2*x2*  h2*x1*   -h2*x4*  h2*x3*",
    "h3x3     h3x4     h3x1     h3x2",
    "-h4*x4*  h4*x3*   -h4*x2*  h4*x1*",
]

X_4_8 = [
    "h1x1     h1x2     h1x3     h1x4     0        0        0        0",
    "-h2*x2*  h2*x1*   -h2*x4*  h2*x3*   0        0        0        0",
    "h3x3     h3x4     h3x1     h3x2     0        0        0        0",
    "-h4*x4*  h4*x3*   -h4*x2*  h4*x1*   0        0        0        0",
    "0        0        0        0        h5x1     h5x2     h5x3     h5x4",
    "0        0        0        0        -h6*x2*  h6*x1*   -h6*x4*  h6*x3*",
    "0        0        0        0        h7x3     h7x4     h7x1     h7x2",
    "0        0        0        0        -h8*x4*  h8*x3*   -h8*x2*  h8*x1*",
]

X_4_6 = X_4_8[:6]

# Two-symbol DOSTBC over x5, x6 with the minus sign missing from row 6.
# It is not single-symbol decodable and serves as a negative fixture.
DOSTBC_2_8_MISSING_SIGN = [
    "h1x5     h1x6     0        0        0        0        0        0",
    "-h2*x6*  h2*x5*   0        0        0        0        0        0",
    "0        0        h3x5     h3x6     0        0        0        0",
    "0        0        -h4*x6*  h4*x5*   0        0        0        0",
    "0        0        0        0        h5x5     h5x6     0        0",
    "0        0        0        0        h6*x6*   h6*x5*   0        0",
    "0        0        0        0        0        0        h7x5     h7x6",
    "0        0        0        0        0        0        -h8*x6*  h8*x5*",
]

DOSTBC_2_8 = list(DOSTBC_2_8_MISSING_SIGN)
DOSTBC_2_8[5] = "0        0        0        0        -h6*x6*  h6*x5*   0        0"

DOSTBC_4_4 = [
    "h1x1     h1x2     h1x3     h1x4     0        0        0        0",
    "-h2*x2*  h2*x1*   -h2*x4*  h2*x3*   0        0        0        0",
    "0        0        0        0        h3x1     h3x2     h3x3     h3x4",
    "0        0        0        0        -h4*x2*  h4*x1*   -h4*x4*  h4*x3*",
]

PCIOD = [
    "h1x1     h1x2     0        0",
    "-h2*x2*  h2*x1*   0        0",
    "0        0        h3x3     h3x4",
    "0        0        -h4*x4*  h4*x3*",
]

PCIOD_P = [
    ["1/2", "0", "1/2", "0"],
    ["0", "1/2", "0", "1/2"],
    ["1/2", "0", "1/2", "0"],
    ["0", "1/2", "0", "1/2"],
]
PCIOD_Q = [
    ["1/2", "0", "-1/2", "0"],
    ["0", "1/2", "0", "-1/2"],
    ["-1/2", "0", "1/2", "0"],
    ["0", "-1/2", "0", "1/2"],
]

# Two-relay code mixing real and imaginary parts of h_k x_n; its relay
# matrices fall outside the {0, ±1, ±j} alphabet.
DSSDC_A = [
    [["1/2", "1/2"], ["1/2", "-1/2"]],
    [["1/2", "1/2"], ["1/2", "-1/2"]],
]
DSSDC_B = [
    [["1/2", "-1/2"], ["-1/2", "-1/2"]],
    [["-1/2", "1/2"], ["1/2", "1/2"]],
]

PRECODER_6_P = [
    ["1/2", "0", "-1/2*j", "0", "0", "0"],
    ["0", "1/2", "0", "-1/2*j", "0", "0"],
    ["0", "1/2", "0", "1/2*j", "0", "0"],
    ["1/2", "0", "1/2*j", "0", "0", "0"],
    ["0", "0", "0", "0", "1", "0"],
    ["0", "0", "0", "0", "0", "1"],
]
PRECODER_6_Q = [
    ["1/2", "0", "1/2*j", "0", "0", "0"],
    ["0", "1/2", "0", "1/2*j", "0", "0"],
    ["0", "-1/2", "0", "1/2*j", "0", "0"],
    ["-1/2", "0", "1/2*j", "0", "0", "0"],
    ["0", "0", "0", "0", "0", "0"],
    ["0", "0", "0", "0", "0", "0"],
]

# Nonzero relay matrices of the 4-relay, 4-symbol code; the other four are zero.
RELAY_4_4 = {
    ("A", 0): [["1", "0", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]],
    ("B", 1): [["0", "1", "0", "0"], ["-1", "0", "0", "0"], ["0", "0", "0", "1"], ["0", "0", "-1", "0"]],
    ("A", 2): [["0", "0", "1", "0"], ["0", "0", "0", "1"], ["1", "0", "0", "0"], ["0", "1", "0", "0"]],
    ("B", 3): [["0", "0", "0", "1"], ["0", "0", "-1", "0"], ["0", "1", "0", "0"], ["-1", "0", "0", "0"]],
}


def design(rows: list[str], N: int | None = None) -> Design:
    return Design.from_text(rows, N)


def renumbered(rows: list[str]) -> list[str]:
    """Shift the x5/x6 labels of the two-symbol code down to x1/x2."""
    return [r.replace("x5", "x1").replace("x6", "x2") for r in rows]


def x_6_8() -> Design:
    return juxtapose([design(X_4_8), design(DOSTBC_2_8)]).with_symbol_count(6)


def relay_matrices_4_4() -> list[tuple[ExactMatrix, ExactMatrix]]:
    zero = ExactMatrix.zeros(4)
    get = lambda kind, k: ExactMatrix.from_strings(RELAY_4_4[(kind, k)]) if (kind, k) in RELAY_4_4 else zero
    return [(get("A", k), get("B", k)) for k in range(4)]


def pciod_spec() -> CodeSpec:
    pair = PrecoderPair(4, ExactMatrix.from_strings(PCIOD_P), ExactMatrix.from_strings(PCIOD_Q), 1, 0)
    return spec_from_design(design(PCIOD), pair, "user", note="4-relay precoded coordinate-interleaved orthogonal design")


def dssdc_spec() -> CodeSpec:
    A = [ExactMatrix.from_strings(m) for m in DSSDC_A]
    B = [ExactMatrix.from_strings(m) for m in DSSDC_B]
    return CodeSpec(2, 2, 2, ExactMatrix.identity(2), ExactMatrix.zeros(2), A, B, "user",
                    note="2-relay single-symbol decodable code outside the relay-matrix alphabet")


def golden_specs() -> dict[str, CodeSpec]:
    """Every reference code as a :class:`CodeSpec`, keyed by file stem."""
    return {
        "x_4_4": spec_from_design(design(X_4_4), build_precoders(4), "rs_pdssdc", [[0, 2], [1, 3]],
                                  "4 symbols, 4 relays, T = 4"),
        "x_4_8": spec_from_design(design(X_4_8), build_precoders(4), "rs_pdssdc",
                                  [[0, 2], [1, 3], [4, 6], [5, 7]], "4 symbols, 8 relays, T = 8"),
        "x_4_6": spec_from_design(design(X_4_6), build_precoders(4), "rs_pdssdc",
                                  [[0, 2], [1, 3], [4], [5]], "4 symbols, 6 relays: the 8-relay code minus two rows"),
        "x_6_8": spec_from_design(x_6_8(), build_precoders(6), "rs_pdssdc",
                                  [[0, 2], [1, 3], [4, 6], [5, 7]], "6 symbols, 8 relays, T = 16"),
        "dostbc_2_8": spec_from_design(design(renumbered(DOSTBC_2_8)), identity_precoders(2), "dostbc",
                                       [[k] for k in range(8)], "2-symbol DOSTBC, 8 relays"),
        "dostbc_4_4": spec_from_design(design(DOSTBC_4_4), identity_precoders(4), "dostbc",
                                       [[k] for k in range(4)], "4-symbol row-monomial DOSTBC, 4 relays, T = 8"),
        "pciod": pciod_spec(),
        "dssdc_2x2": dssdc_spec(),
    }
