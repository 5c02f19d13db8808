"""Report files for scans and the reproduction table: delimited output plus
matplotlib figures rendered alongside."""

from __future__ import annotations

import csv
from pathlib import Path


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def write_scan_report(out_dir, name: str, scan) -> list[Path]:
    """Probe log CSV and a robustness-vs-r figure with the threshold marked."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}-scan.csv"
    probes = sorted(scan.probes, key=lambda p: p.r)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "signed_robustness", "status"])
        for p in probes:
            writer.writerow([f"{p.r:.6f}", f"{p.signed_robustness:.9e}", p.status])

    plt = _figure()
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.axvline(scan.threshold, color="tab:red", lw=1.0, ls="--",
               label=f"threshold {scan.threshold:.3f}")
    ax.plot([p.r for p in probes], [p.signed_robustness for p in probes],
            "o-", ms=4, color="tab:blue")
    ax.set_xlabel("depolarization r")
    ax.set_ylabel("signed robustness")
    ax.set_title(name)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig_path = out_dir / f"{name}-scan.png"
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    return [csv_path, fig_path]


def write_reproduce_report(out_dir, rows) -> list[Path]:
    """Threshold table CSV and a computed-vs-expected comparison figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "reproduce.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "computed", "expected", "tolerance", "abs_error", "passed", "seconds"])
        for row in rows:
            writer.writerow([
                row.name, f"{row.computed:.6f}", f"{row.expected:.6f}",
                f"{row.tolerance:g}", f"{abs(row.computed - row.expected):.2e}",
                "yes" if row.passed else "no", f"{row.seconds:.1f}",
            ])

    plt = _figure()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    xs = range(len(rows))
    ax.bar(xs, [r.computed for r in rows], width=0.55, color="tab:blue", label="computed")
    ax.plot(xs, [r.expected for r in rows], "k_", ms=18, mew=2, label="expected")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r.name for r in rows], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("threshold / witness value")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig_path = out_dir / "reproduce.png"
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    return [csv_path, fig_path]
