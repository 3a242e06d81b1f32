"""Command-line entry point.

Subcommands: ``validate`` (run the cross-module property suite),
``spectrum`` (flat-spectrum and remainder table), ``shape-derivative-check``
(finite-difference oracle vs the explicit formulas), ``evolve-linear`` /
``evolve-nonlinear`` (time integration with monitors), and ``report``
(figures and a digest for a finished run directory).

Configuration is TOML; ``src/dtnlab/data/defaults.toml`` is the single
source of defaults and of the legal key set, and unknown keys are rejected.
Every data file starts with a header carrying the resolved-config hash and
the package version, and identical configs produce byte-identical artifacts.

Exit codes: 0 success, 1 a check or enforcement failed (the failing
invariant is named on stderr), 2 configuration or usage error.

Set ``DTNLAB_MAX_THREADS`` to cap the linear-algebra thread pools.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .elliptic import flat_spectra
from .evolution import (
    energy_report,
    rayleigh_taylor_check,
    solve_linearized,
    solve_nonlinear,
    write_timeseries_csv,
)
from .geometry import BoundaryField, Geometry
from .operators import (
    closed_form_g_exterior,
    closed_form_g_interior,
    dtn_exterior,
    dtn_interior,
    ntd_exterior,
    spectrum_rows,
)
from .shape_derivative import fd_oracle, linearized_A1


class ConfigError(Exception):
    """Invalid or unparseable run configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _load_defaults() -> dict:
    ref = resources.files("dtnlab.data").joinpath("defaults.toml")
    with ref.open("rb") as fh:
        return tomllib.load(fh)


def _check_keys(user: dict, legal: dict, path: str = "") -> None:
    for key, val in user.items():
        if key not in legal:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(legal[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {path + key!r} must be a table")
            _check_keys(val, legal[key], path + key + ".")


def load_config(path: str | None) -> dict:
    """Defaults deep-merged with the user file, schema-checked."""
    cfg = _load_defaults()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
        _check_keys(user, cfg)
        for block, values in user.items():
            if isinstance(values, dict):
                cfg[block].update(values)
            else:
                cfg[block] = values
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: dict) -> None:
    g = cfg["geometry"]
    if not 0 < g["R"] < g["R_ext"]:
        raise ConfigError("geometry: need 0 < R < R_ext")
    if g["eps0"] <= 0:
        raise ConfigError("geometry: eps0 must be positive")
    if g["n_theta"] < 1 or g["n_theta"] & (g["n_theta"] - 1):
        raise ConfigError("geometry: n_theta must be a power of two")
    if g["n_theta"] < 2 * (2 * g["n_modes"] + 1):
        raise ConfigError(
            "geometry: aliasing rule violated, need n_theta >= 2 (2 n_modes + 1)"
        )
    ev = cfg["evolution"]
    if ev["dt"] <= 0 or ev["t_final"] < ev["dt"]:
        raise ConfigError("evolution: need dt > 0 and t_final >= dt")
    if ev["n_galerkin"] < 0 or ev["n_galerkin"] > 2 * g["n_modes"] + 1:
        raise ConfigError("evolution: n_galerkin exceeds mode truncation")
    if ev["scheme"] not in ("exact-exponential", "implicit-midpoint"):
        raise ConfigError(f"evolution: unknown scheme {ev['scheme']!r}")
    if ev["variant"] not in ("adjudicated", "as-printed"):
        raise ConfigError(f"evolution: unknown variant {ev['variant']!r}")
    if cfg["oracle"]["operator"] not in ("G_i", "G_e", "F_e", "A"):
        raise ConfigError(f"oracle: unknown operator {cfg['oracle']['operator']!r}")
    for name in ("psi", "rho_init", "rhodot"):
        kind = cfg[name]["kind"]
        if kind not in ("constant", "fourier", "tabulated"):
            raise ConfigError(f"{name}: unknown kind {kind!r}")
        if kind == "tabulated" and len(cfg[name]["values"]) != g["n_theta"]:
            raise ConfigError(f"{name}: tabulated values must have length n_theta")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def build_geometry(cfg: dict) -> Geometry:
    g = cfg["geometry"]
    return Geometry(
        R=float(g["R"]), R_ext=float(g["R_ext"]), eps0=float(g["eps0"]),
        n_theta=int(g["n_theta"]), n_r=int(g["n_r"]), n_modes=int(g["n_modes"]),
    )


def build_field(cfg: dict, name: str, geom: Geometry) -> BoundaryField:
    block = cfg[name]
    kind = block["kind"]
    if kind == "constant":
        return geom.constant_field(float(block["value"]))
    if kind == "fourier":
        out = geom.zero_field()
        for n, re, im in block["modes"]:
            if abs(int(n)) > geom.n_modes:
                raise ConfigError(f"{name}: mode {n} exceeds truncation")
            out = out + geom.mode_field(int(n), complex(float(re), float(im)))
        return out
    return BoundaryField.from_values(geom, np.asarray(block["values"], dtype=float))


def _cap_threads() -> None:
    cap = os.environ.get("DTNLAB_MAX_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(int(cap))
    except ImportError:
        pass


# ---------------------------------------------------------------------------
# artifact helpers
# ---------------------------------------------------------------------------

def _header(cfg: dict, subcommand: str) -> str:
    return (
        f"# dtnlab version={__version__} "
        f"config_hash={config_hash(cfg)} subcommand={subcommand}"
    )


def _out_dir(cfg: dict, override: str | None) -> Path:
    d = Path(override if override is not None else cfg["output"]["directory"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_csv(path: Path, cfg: dict, subcommand: str, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_header(cfg, subcommand) + "\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, str, int)) or obj is None:
        return obj
    val = float(obj)
    return val if np.isfinite(val) else None


def _write_json(path: Path, cfg: dict, payload: dict) -> None:
    body = {"version": __version__, "config_hash": config_hash(cfg), **payload}
    with open(path, "w") as fh:
        json.dump(_jsonable(body), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _oracle_geometry(cfg: dict) -> Geometry:
    g = cfg["geometry"]
    o = cfg["oracle"]
    return Geometry(
        R=float(g["R"]), R_ext=float(g["R_ext"]), eps0=float(g["eps0"]),
        n_theta=int(o["n_theta"]), n_r=int(o["n_r"]), n_modes=int(o["n_modes"]),
    )


def _random_trig(geom: Geometry, rng: np.random.Generator, scale: float = 1.0):
    coeffs = rng.normal(size=5) * scale
    return geom.field_from_function(
        lambda t: sum(
            a * np.cos((k + 1) * t + k) for k, a in enumerate(coeffs)
        )
    )


def run_validate(cfg: dict, out: Path) -> int:
    geom = build_geometry(cfg)
    checks: list[dict] = []

    def check(name: str, passed: bool, value: float, tolerance: float) -> None:
        checks.append({
            "name": name, "passed": bool(passed),
            "value": float(value), "tolerance": float(tolerance),
        })

    # flat spectrum vs closed forms
    sp = flat_spectra(geom)
    ns = np.arange(1, geom.n_modes + 1)
    gi_err = float(np.max(np.abs(
        sp["g_i"][1:] - closed_form_g_interior(ns, geom)
    ) / closed_form_g_interior(ns, geom)))
    ge_ref = np.array([closed_form_g_exterior(n, geom) for n in range(geom.n_modes + 1)])
    ge_err = float(np.max(np.abs(sp["g_e"] - ge_ref) / ge_ref))
    check("flat_spectrum_interior", gi_err <= 1e-4, gi_err, 1e-4)
    check("flat_spectrum_exterior", ge_err <= 1e-4, ge_err, 1e-4)

    # inverse identities, flat and deformed
    rng = np.random.default_rng(1234)
    ogeom = _oracle_geometry(cfg)
    worst = 0.0
    for _ in range(5):
        psi = _random_trig(ogeom, rng)
        back = dtn_exterior(
            ogeom.zero_field(), ntd_exterior(ogeom.zero_field(), psi, ogeom), ogeom
        )
        worst = max(worst, (back - psi).l2_norm() / psi.l2_norm())
    check("inverse_identity_flat", worst <= 1e-6, worst, 1e-6)
    rho = ogeom.field_from_function(lambda t: 0.03 * np.cos(t))
    psi = _random_trig(ogeom, rng)
    back = dtn_exterior(rho, ntd_exterior(rho, psi, ogeom), ogeom)
    err = (back - psi).l2_norm() / psi.l2_norm()
    check("inverse_identity_deformed", err <= 1e-4, err, 1e-4)

    # detK-weighted symmetry and positivity on random admissible triples
    detK = 1.0 + rho / ogeom.R
    sym_worst = 0.0
    pos_ok = True
    for _ in range(10):
        f = _random_trig(ogeom, rng)
        g = _random_trig(ogeom, rng)
        for op in (dtn_interior, dtn_exterior):
            lhs = (op(rho, f, ogeom) * detK).inner(g)
            rhs = (op(rho, g, ogeom) * detK).inner(f)
            scale = max(abs(lhs), abs(rhs), 1e-3)
            sym_worst = max(sym_worst, abs(lhs - rhs) / scale)
            pos_ok &= np.real((op(rho, f, ogeom) * detK).inner(f)) > -1e-10
    check("operator_symmetry", sym_worst <= 1e-5, sym_worst, 1e-5)
    check("operator_positivity", pos_ok, 0.0 if pos_ok else 1.0, 0.0)
    const_err = dtn_interior(rho, ogeom.constant_field(1.0), ogeom).linf()
    check("interior_kills_constants", const_err <= 1e-8, const_err, 1e-8)

    # FD oracle on a fixed trio of configurations
    tol = float(cfg["oracle"]["tolerance"])
    eps_list = tuple(float(e) for e in cfg["oracle"]["eps_list"])
    rep = fd_oracle(
        "G_i", ogeom.zero_field(), ogeom.constant_field(1.0),
        ogeom.mode_field(3), ogeom, eps_list=eps_list,
    )
    err = abs(rep.fd_extrapolated.mode(3) - (-3.0))
    check("oracle_disk_symbol", err <= tol, err, tol)
    check("oracle_order", rep.fd_order >= 1.9, rep.fd_order, 1.9)
    err = abs(rep.fitted_curvature_coefficient - 0.5)
    check("oracle_fitted_coefficient", err <= 0.005, err, 0.005)
    for op, name in (("F_e", "oracle_ntd"), ("A", "oracle_composition")):
        rep = fd_oracle(
            op, ogeom.zero_field(), ogeom.field_from_function(np.cos),
            ogeom.constant_field(1.0), ogeom, eps_list=eps_list,
        )
        err = abs(rep.fd_extrapolated.mode(1) - (-0.2))
        check(name, err <= tol, err, tol)

    # the two algebraic forms of the linearized operator coincide
    worst = 0.0
    for _ in range(20):
        rd = _random_trig(geom, rng)
        psi = _random_trig(geom, rng)
        for variant in ("as-printed", "adjudicated"):
            s = linearized_A1(rd, psi, geom, variant, form="standard")
            c = linearized_A1(rd, psi, geom, variant, form="commutator")
            worst = max(worst, (s - c).linf())
    check("a1_commutator_identity", worst <= 1e-10, worst, 1e-10)

    passed = all(c["passed"] for c in checks)
    _write_json(out / "validate.json", cfg, {"passed": passed, "checks": checks})
    for c in checks:
        status = "ok" if c["passed"] else "FAIL"
        print(f"{status:4s} {c['name']}: {c['value']:.3e} (tol {c['tolerance']:.3e})")
    if not passed:
        failing = [c["name"] for c in checks if not c["passed"]]
        print(f"validate: failing invariants: {', '.join(failing)}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# the remaining subcommands
# ---------------------------------------------------------------------------

SPECTRUM_COLUMNS = [
    "n", "g_i", "g_e", "a_n", "g_i_closed", "g_e_closed",
    "disk_defect", "dtn_gap", "order0_symbol",
]


def run_spectrum(cfg: dict, out: Path) -> int:
    geom = build_geometry(cfg)
    rows = spectrum_rows(geom)
    _write_csv(out / "spectrum.csv", cfg, "spectrum", SPECTRUM_COLUMNS, rows)
    print(f"spectrum: wrote {out / 'spectrum.csv'} ({len(rows)} rows)")
    return 0


def run_shape_derivative_check(cfg: dict, out: Path, coefficient: str) -> int:
    ogeom = _oracle_geometry(cfg)
    base = float(cfg["oracle"]["base_scale"]) * build_field(cfg, "rho_init", ogeom)
    rhodot = build_field(cfg, "rhodot", ogeom)
    psi = build_field(cfg, "psi", ogeom)
    op = cfg["oracle"]["operator"]
    eps_list = tuple(float(e) for e in cfg["oracle"]["eps_list"])
    variant = cfg["evolution"]["variant"]

    if coefficient == "as-printed":
        c = 1.0
    elif coefficient == "fitted":
        probe = fd_oracle(op, base, rhodot, psi, ogeom, eps_list=eps_list,
                          variant=variant)
        c = probe.fitted_curvature_coefficient
        if not np.isfinite(c):
            print(
                "shape-derivative-check: curvature direction vanishes for "
                "this configuration; fit is undetermined, using c = 1.0"
            )
            c = 1.0
    else:
        try:
            c = float(coefficient)
        except ValueError as exc:
            raise ConfigError(
                "curvature coefficient must be 'as-printed', 'fitted' or a number"
            ) from exc
    rep = fd_oracle(
        op, base, rhodot, psi, ogeom, eps_list=eps_list,
        curvature_coefficient=c, variant=variant,
    )
    _write_json(out / "shape_derivative.json", cfg, {
        "curvature_coefficient": c,
        "variant": variant,
        "report": rep.to_json_dict(),
    })
    print(
        f"shape-derivative-check[{op}]: residual {rep.formula_residual:.3e} "
        f"at c={c:.6g}, fitted c={rep.fitted_curvature_coefficient:.6f}"
    )
    return 0


def _check_rayleigh_taylor(cfg: dict, psi: BoundaryField, geom: Geometry) -> int:
    ev = cfg["evolution"]
    stab = rayleigh_taylor_check(psi, geom, threshold=float(ev["alpha_floor"]))
    if ev["enforce_rayleigh_taylor"] and not stab.satisfied:
        print(
            "evolve-linear: failing invariant rayleigh_taylor: "
            f"min (Id + A_0) psi = {stab.min_w_hat:.4f} "
            f"<= alpha_floor = {ev['alpha_floor']}",
            file=sys.stderr,
        )
        return 1
    return 0


def run_evolve(cfg: dict, out: Path, nonlinear: bool) -> int:
    geom = build_geometry(cfg)
    ev = cfg["evolution"]
    rho0 = build_field(cfg, "rho_init", geom)
    psi = build_field(cfg, "psi", geom)
    if not nonlinear:
        status = _check_rayleigh_taylor(cfg, psi, geom)
        if status:
            return status
        result = solve_linearized(
            rho0, psi, geom, float(ev["t_final"]), float(ev["dt"]),
            variant=ev["variant"],
            method="exact" if ev["scheme"] == "exact-exponential" else "midpoint",
            n_galerkin=int(ev["n_galerkin"]) or None,
        )
    else:
        result = solve_nonlinear(
            rho0, psi, geom, float(ev["t_final"]), float(ev["dt"])
        )

    name = "nonlinear" if nonlinear else "linear"
    series = out / f"evolve_{name}.csv"
    tmp = out / f"evolve_{name}.csv.body"
    write_timeseries_csv(result, tmp)
    with open(series, "w") as fh:
        fh.write(_header(cfg, f"evolve-{name}") + "\n")
        fh.write(tmp.read_text())
    tmp.unlink()
    _write_json(out / f"evolve_{name}_summary.json", cfg, {
        **result.summary, "energy_report": energy_report(result),
    })
    print(
        f"evolve-{name}: {result.summary['n_steps']} steps, "
        f"final |rho|_L2 = {result.summary['final_norm_L2']:.6e}"
        + (" (halted: admissibility)" if result.halted else "")
    )
    return 0


def run_report(run_dir: Path, out: Path) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not run_dir.is_dir():
        raise ConfigError(f"run directory {run_dir} does not exist")

    made = []
    digest_rows = []

    spectrum = run_dir / "spectrum.csv"
    if spectrum.exists():
        rows = _read_csv_with_header(spectrum)
        n = np.array([float(r["n"]) for r in rows])
        fig, ax = plt.subplots(figsize=(6, 4))
        for col, marker in (("g_i", "o"), ("g_e", "s"), ("a_n", "^")):
            ax.plot(n, [float(r[col]) for r in rows], marker=marker,
                    ms=3, lw=1, label=col)
        ax.plot(n, [float(r["g_i_closed"]) for r in rows], "k--", lw=0.8,
                label="closed form")
        ax.set_xlabel("mode n")
        ax.legend()
        fig.savefig(out / "spectrum.png", dpi=120)
        plt.close(fig)
        made.append("spectrum.png")
        digest_rows.append({
            "artifact": "spectrum.csv", "quantity": "max |a_n - 1| at tail",
            "value": abs(float(rows[-1]["a_n"]) - 1.0),
        })

    for name in ("evolve_linear", "evolve_nonlinear"):
        series = run_dir / f"{name}.csv"
        if not series.exists():
            continue
        rows = _read_csv_with_header(series)
        if not rows:  # run halted before its first step
            continue
        times = sorted({float(r["time"]) for r in rows})
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for mode in (0, 1, 2):
            amp = [
                abs(complex(float(r["coeff_re"]), float(r["coeff_im"])))
                for r in rows if int(r["mode_index"]) == mode
            ]
            axes[0].semilogy(times, np.maximum(amp, 1e-300), label=f"n={mode}")
        axes[0].set_xlabel("t")
        axes[0].set_title("mode amplitudes")
        axes[0].legend()
        h1 = [float(r["norm_H1"]) for r in rows[:: len(rows) // len(times)]]
        axes[1].plot(times, h1[: len(times)])
        axes[1].set_xlabel("t")
        axes[1].set_title("H1 norm")
        fig.savefig(out / f"{name}.png", dpi=120)
        plt.close(fig)
        made.append(f"{name}.png")
        digest_rows.append({
            "artifact": f"{name}.csv", "quantity": "final H1 norm",
            "value": h1[len(times) - 1],
        })

    if not made:
        raise ConfigError(f"run directory {run_dir} holds no known artifacts")
    with open(out / "report_digest.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["artifact", "quantity", "value"])
        writer.writeheader()
        writer.writerows(digest_rows)
    print(f"report: rendered {', '.join(made)} and report_digest.csv in {out}")
    return 0


def _read_csv_with_header(path: Path) -> list[dict]:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtnlab",
        description="Pulled-back DtN operators, shape derivatives, and "
        "linearized interface evolution on an annular geometry.",
    )
    parser.add_argument("--config", help="TOML run configuration")
    parser.add_argument("--out", help="output directory (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", help="run the cross-module property suite")
    sub.add_parser("spectrum", help="emit the flat-spectrum table")
    p = sub.add_parser(
        "shape-derivative-check", help="finite-difference oracle vs formula"
    )
    p.add_argument(
        "--curvature-coefficient", default="as-printed",
        help="'as-printed', 'fitted', or a numeric value (default: as-printed)",
    )
    sub.add_parser("evolve-linear", help="integrate the linearized flow")
    sub.add_parser("evolve-nonlinear", help="integrate the nonlinear flow")
    p = sub.add_parser("report", help="render figures for a run directory")
    p.add_argument("--run", required=True, help="directory with run artifacts")
    return parser


def main(argv: list[str] | None = None) -> int:
    _cap_threads()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = _out_dir(cfg, args.out)
        if args.command == "validate":
            return run_validate(cfg, out)
        if args.command == "spectrum":
            return run_spectrum(cfg, out)
        if args.command == "shape-derivative-check":
            return run_shape_derivative_check(cfg, out, args.curvature_coefficient)
        if args.command == "evolve-linear":
            return run_evolve(cfg, out, nonlinear=False)
        if args.command == "evolve-nonlinear":
            return run_evolve(cfg, out, nonlinear=True)
        if args.command == "report":
            return run_report(Path(args.run), out)
        raise ConfigError(f"unknown subcommand {args.command!r}")
    except ConfigError as exc:
        print(f"dtnlab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
