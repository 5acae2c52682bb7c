"""Static plots of sweep CSVs (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import NA, read_csv  # noqa: E402

_AXIS = {"rho_p": r"$\rho_p = P_X/(P_X+P_N)$", "snr_db": "total SNR [dB]", "y_th": "threshold $y_{th}$"}


def _family(label: str) -> str:
    return label.split("(", 1)[0]


def _num(cell: str) -> float:
    return float("nan") if cell == NA else float(cell)


def emit_plot(csv_path: str | Path, kind: str = "gains", out: str | Path | None = None) -> Path:
    """Render gains or capacity curves against the sweep variable."""
    if kind not in ("gains", "capacity"):
        raise ValueError("kind must be 'gains' or 'capacity'")
    _, rows = read_csv(csv_path)
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")
    out = Path(out) if out else Path(csv_path).with_suffix(".png")
    variable = rows[0]["sweep_variable"]
    families: dict[str, list[dict]] = {}
    for r in rows:
        families.setdefault(_family(r["g"]), []).append(r)

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    if kind == "gains":
        for fam, rs in families.items():
            xs = [_num(r["sweep_value"]) for r in rs]
            for col, marker in (("k_y", "o"), ("k_x", "s"), ("k_n", "^")):
                ax.errorbar(
                    xs,
                    [_num(r[col]) for r in rs],
                    yerr=[2 * _num(r[f"{col}_se"]) for r in rs],
                    marker=marker,
                    ms=4,
                    capsize=2,
                    label=f"{col} [{fam}]" if len(families) > 1 else col,
                )
        ax.set_ylabel("linear regression coefficient")
    else:
        first = next(iter(families.values()))
        xs0 = [_num(r["sweep_value"]) for r in first]
        ax.plot(xs0, [_num(r["mi_hist"]) for r in first], "k-", lw=2, label="I(X;Y) histogram")
        ax.plot(xs0, [_num(r["c_awgn"]) for r in first], "k:", label="AWGN bound")
        for fam, rs in families.items():
            xs = [_num(r["sweep_value"]) for r in rs]
            ax.plot(xs, [_num(r["c_snr_x"]) for r in rs], "o-", ms=4, label=f"C snr_x [{fam}]")
            ax.plot(xs, [_num(r["c_mse"]) for r in rs], "s--", ms=4, label=f"C mse [{fam}]")
        ax.set_ylabel("bits per channel use")
    ax.set_xlabel(_AXIS.get(variable, variable))
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, metadata={"Software": None} if out.suffix == ".png" else None)
    plt.close(fig)
    return out
