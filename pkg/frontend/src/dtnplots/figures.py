"""The five figure kinds.

Every renderer takes input path(s) and an output path, writes one image with
a fixed canvas (Agg backend, no timestamps), and returns a small dict of the
quantities it computed (fitted rates, slopes) so callers and tests can check
them without re-parsing the image.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import (
    SchemaError,
    mode_series,
    per_time,
    read_artifact_csv,
    read_artifact_json,
    require_columns,
)

FIGSIZE = (7.0, 4.5)
DPI = 120


def _save(fig, out_path) -> None:
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def render_spectrum(in_path, out_path) -> dict:
    """Overlay of solver-assembled flat spectra against the closed forms."""
    _, rows = read_artifact_csv(in_path)
    require_columns(rows, {"n", "g_i", "g_e", "a_n", "g_i_closed", "g_e_closed"},
                    in_path)
    n = np.array([float(r["n"]) for r in rows])
    fig, (ax, axd) = plt.subplots(1, 2, figsize=FIGSIZE)
    for col, style in (("g_i", "o"), ("g_e", "s")):
        ax.plot(n, [float(r[col]) for r in rows], style, ms=3.5, label=col)
    ax.plot(n, [float(r["g_i_closed"]) for r in rows], "k-", lw=0.8)
    ax.plot(n, [float(r["g_e_closed"]) for r in rows], "k--", lw=0.8,
            label="closed form")
    ax.set_xlabel("mode n")
    ax.set_ylabel("symbol")
    ax.legend(fontsize=8)
    defect = np.array([
        abs(float(r["g_i"]) - float(r["g_i_closed"])) for r in rows
    ])
    axd.semilogy(n, np.maximum(defect, 1e-18), "o-", ms=3)
    axd.set_xlabel("mode n")
    axd.set_ylabel("|solver - closed form|")
    fig.tight_layout()
    _save(fig, out_path)
    return {"n_modes": int(n.max()), "max_defect": float(defect.max())}


def render_fd(in_path, out_path) -> dict:
    """Finite-difference convergence and per-term attribution of the oracle."""
    data = read_artifact_json(in_path)
    rep = data.get("report", data)
    for key in ("eps_list", "fd_norms", "per_term_attribution"):
        if key not in rep:
            raise SchemaError(f"{in_path}: missing oracle field {key!r}")
    eps = np.array(rep["eps_list"], dtype=float)
    norms = np.array(rep["fd_norms"], dtype=float)
    if len(eps) < 3:
        raise SchemaError(f"{in_path}: need >= 3 steps for a convergence plot")
    # successive norm differences inherit the O(eps^2) error of the centered
    # difference, so their log-log slope estimates the convergence order
    diffs = np.abs(np.diff(norms))
    mids = np.sqrt(eps[:-1] * eps[1:])
    good = diffs > 0
    slope = float(np.polyfit(np.log(mids[good]), np.log(diffs[good]), 1)[0]) \
        if good.sum() >= 2 else float("nan")

    fig, (ax, axa) = plt.subplots(1, 2, figsize=FIGSIZE)
    ax.loglog(mids, diffs, "o-", label="successive FD differences")
    ax.loglog(mids, diffs[0] * (mids / mids[0]) ** 2, "k--", lw=0.8,
              label="slope 2 reference")
    ax.set_xlabel("step")
    ax.set_ylabel("difference norm")
    ax.set_title(f"observed slope {slope:.2f}")
    ax.legend(fontsize=8)

    attr = rep["per_term_attribution"]
    names = list(attr)
    axa.barh(range(len(names)), [attr[k] for k in names])
    axa.set_yticks(range(len(names)), names, fontsize=7)
    axa.set_xscale("log")
    axa.set_title("per-term attribution")
    fig.tight_layout()
    _save(fig, out_path)
    return {"slope": slope, "formula_residual": rep.get("formula_residual")}


def fit_decay_rate(times, coeffs) -> float:
    """Least-squares exponential rate of |c(t)|; positive means decay."""
    amp = np.abs(np.array(coeffs))
    t = np.array(times)
    live = amp > 1e-300
    if live.sum() < 2:
        return float("nan")
    return float(-np.polyfit(t[live], np.log(amp[live]), 1)[0])


def render_decay(in_path, out_path, modes=(0, 1, 2, 3)) -> dict:
    """Semilog mode-amplitude curves with the fitted rate of mode 1."""
    _, rows = read_artifact_csv(in_path)
    require_columns(rows, {"time", "mode_index", "coeff_re", "coeff_im"}, in_path)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    rates = {}
    for mode in modes:
        times, coeffs = mode_series(rows, mode)
        if not times:
            continue
        amp = np.abs(coeffs)
        ax.semilogy(times, np.maximum(amp, 1e-300), "o-", ms=2.5,
                    label=f"|c_{mode}(t)|")
        rates[mode] = fit_decay_rate(times, coeffs)
    if 1 not in rates:
        raise SchemaError(f"{in_path}: no mode-1 column in the time series")
    ax.set_xlabel("t")
    ax.set_ylabel("mode amplitude")
    ax.set_title(f"fitted mode-1 decay rate {rates[1]:.4f}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)
    return {"fitted_rate_mode1": rates[1], "rates": rates}


def render_energy(in_path, out_path) -> dict:
    """H1 energy against its fitted exponential envelope."""
    _, rows = read_artifact_csv(in_path)
    require_columns(rows, {"time", "norm_H1", "pairing_L2"}, in_path)
    times, h1 = per_time(rows, "norm_H1")
    t = np.array(times)
    h1 = np.array(h1)
    live = (t > 0) & (h1 > 0)
    # smallest exponential rate whose envelope dominates the trajectory
    rate = float(np.max(np.log(h1[live] / h1[0]) / t[live])) if live.any() else 0.0
    envelope = h1[0] ** 2 * np.exp(2.0 * rate * t)

    fig, (ax, axp) = plt.subplots(1, 2, figsize=FIGSIZE)
    ax.semilogy(t, h1**2, "o-", ms=2.5, label="H1 energy")
    ax.semilogy(t, envelope, "k--", lw=0.8,
                label=f"envelope rate {2 * rate:.3f}")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    tp, p2 = per_time(rows, "pairing_L2")
    axp.plot(tp, p2, "o-", ms=2.5)
    axp.set_xlabel("t")
    axp.set_ylabel("L2 dissipation pairing")
    fig.tight_layout()
    _save(fig, out_path)
    ratio = float(np.max(h1**2 / envelope))
    return {"envelope_rate": 2.0 * rate, "bound_ratio": ratio}


def render_shape(in_path, out_path, n_snapshots=4, n_theta=512) -> dict:
    """Reference circle against the deformed boundary at a few times."""
    _, rows = read_artifact_csv(in_path)
    require_columns(rows, {"time", "mode_index", "coeff_re", "coeff_im"}, in_path)
    by_time: dict[float, dict[int, complex]] = {}
    for r in rows:
        by_time.setdefault(float(r["time"]), {})[int(r["mode_index"])] = complex(
            float(r["coeff_re"]), float(r["coeff_im"])
        )
    times = sorted(by_time)
    picks = [times[int(round(i))] for i in
             np.linspace(0, len(times) - 1, min(n_snapshots, len(times)))]
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)

    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(np.cos(theta), np.sin(theta), "k--", lw=0.8, label="reference")
    for t in picks:
        rho = np.zeros_like(theta)
        for n, c in by_time[t].items():
            rho += np.real(c * np.exp(1j * n * theta))
        ax.plot((1.0 + rho) * np.cos(theta), (1.0 + rho) * np.sin(theta),
                lw=1.0, label=f"t = {t:g}")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)
    return {"snapshot_times": picks}


RENDERERS = {
    "spectrum": render_spectrum,
    "fd": render_fd,
    "decay": render_decay,
    "energy": render_energy,
    "shape": render_shape,
}
