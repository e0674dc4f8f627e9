"""Human-readable summaries and SER plots."""

from __future__ import annotations

from typing import Sequence

from .simulator import SerCurve, ser_confidence_halfwidth

_CHECKS = (
    ("is_pdssdc_alphabet", "relay matrices in {0, +-1, +-j}"),
    ("row_monomial", "row monomial relay matrices"),
    ("diagonal_R", "diagonal noise covariance"),
    ("lemma3", "covariance-weighted orthogonality conditions"),
    ("is_ssd", "single-symbol decodable"),
    ("is_pdssdc", "precoded single-symbol decodable code"),
    ("is_unitary", "unitary weight matrices"),
    ("is_semi_orthogonal", "semi-orthogonal (pairs of at most two rows)"),
    ("column_disjoint_orthogonal_rows", "R-orthogonal rows use disjoint columns"),
    ("rank_bound", "rank conditions for the rate bound"),
)


def format_verify_report(report: dict) -> str:
    """Aligned PASS/FAIL table followed by the numeric details."""
    lines = [f"code: N={report['N']} K={report['K']} T={report['T']} family={report['family']}"]
    for key, text in _CHECKS:
        if key in report:
            lines.append(f"  {'PASS' if report[key] else 'FAIL'}  {text}")
    groups = " ".join("{" + ",".join(map(str, g)) + "}" for g in report["pairing"])
    lines.append(f"  pairing: {groups} (largest group {report['max_pair_size']})")
    lines.append(f"  worst SSD violation: {report['worst_violation']:.3e}")
    lines.append(f"  worst orthogonality violation: {report['lemma3_worst_violation']:.3e}")
    if report.get("iq_offdiag_terms"):
        lines.append("  note: in-phase/quadrature cross terms are present in the per-symbol metric")
    for label in report.get("lemma3_failures", [])[:5]:
        lines.append(f"  violated: {label}")
    for label in report.get("rank_bound_failures", [])[:5]:
        lines.append(f"  rank: {label}")
    rate = f"  rate {report['rate']}"
    if "rate_bound" in report:
        rate += f", bound {report['rate_bound']}"
        rate += ", achieved" if report["rate_achieves_bound"] else ""
    lines.append(rate)
    return "\n".join(lines) + "\n"


def plot_curves(curves: Sequence[SerCurve], path: str, title: str = "") -> None:
    """Semilog SER plot with 95% confidence bars, written with the Agg backend."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    markers = "osd^v<>"
    for i, c in enumerate(curves):
        pts = [(s, p, ser_confidence_halfwidth(e, t * c.symbols_per_trial))
               for s, p, e, t in zip(c.snr_db, c.ser, c.errors, c.trials) if p > 0]
        if not pts:
            continue
        x, y, err = zip(*pts)
        label = c.label or f"curve {i + 1}"
        ax.errorbar(x, y, yerr=err, marker=markers[i % len(markers)], capsize=2,
                    label=f"{label} (slope {c.fitted_slope:.2f})")
    ax.set_yscale("log")
    ax.set_xlabel("SNR per channel use (dB)")
    ax.set_ylabel("symbol error rate")
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="png")
    plt.close(fig)
