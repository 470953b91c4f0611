"""Configuration-driven pipeline driver.

Subcommands
-----------
direct       profile -> scattering data JSON + invariant report
evolve       scattering data -> scattering data at each requested t
reconstruct  scattering data -> FieldGrid CSV + JSON per t
roundtrip    direct + reconstruct at t = 0, max-norm report vs the input
validate     full property suite, pass/fail JSON summary
report       reconstruct + rendered figures next to the CSV output

Configuration is one JSON document merged over the centralized defaults
(dump them with --print-defaults).  Exit codes: 0 success, 1 config
error, 2 numerical failure, 3 validation failure.  Every output file
embeds the toolkit version and the config hash.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .branch import BoundaryData, PRINCIPAL, Regime, gam, lam
from .constants import DEFAULTS, TAU_TAIL
from .evolution import evolve, evolved_rho_phase
from .jost import PotentialProfile
from .reconstruct import reconstruct_grid
from .rhp import direct_data_for_rhp, solve_rhp
from .scattering import ScatteringData, scattering_entries
from .stepref import step_S

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


# ------------------------------ config -------------------------------------

def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config(path: str | None, overrides: dict | None = None) -> dict:
    """Defaults <- config file <- command-line overrides."""
    cfg = json.loads(json.dumps(DEFAULTS))  # deep copy via round trip
    if path is not None:
        try:
            with open(path) as fh:
                cfg = _deep_merge(cfg, json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if overrides:
        cfg = _deep_merge(cfg, overrides)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    qm, qp = cfg["q_minus"], cfg["q_plus"]
    if not (qm > qp > 0):
        raise ConfigError(f"need q_minus > q_plus > 0, got {qm}, {qp}")
    if cfg["regime"] not in ("focusing", "defocusing"):
        raise ConfigError(f"unknown regime {cfg['regime']!r}")
    for name, tol in cfg["tolerances"].items():
        if tol <= 0:
            raise ConfigError(f"tolerance {name} must be positive")
    ts = cfg["t_list"]
    if list(ts) != sorted(ts):
        raise ConfigError("t_list must be sorted")
    g = cfg["x_grid"]
    if not (g["min"] < g["max"] and g["n"] >= 1):
        raise ConfigError("x_grid needs min < max and n >= 1")


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def boundary_data(cfg: dict) -> BoundaryData:
    return BoundaryData(cfg["q_minus"], cfg["q_plus"], Regime(cfg["regime"]))


def build_profile(cfg: dict) -> PotentialProfile:
    bd = boundary_data(cfg)
    spec = cfg["profile"]
    if "path" in spec:
        return PotentialProfile.from_file(spec["path"], bd)
    name = spec.get("name", "tanh_step")
    if name == "tanh_step":
        return PotentialProfile.tanh_step(
            bd, width=spec.get("width", DEFAULTS["profile"]["width"]),
            half_domain=spec.get("half_domain",
                                 DEFAULTS["profile"]["half_domain"]),
            step=spec.get("step", DEFAULTS["profile"]["step"]))
    if name == "pure_step":
        return PotentialProfile.pure_step(
            bd, half_domain=spec.get("half_domain",
                                     DEFAULTS["profile"]["half_domain"]),
            step=spec.get("step", DEFAULTS["profile"]["step"]))
    raise ConfigError(f"unknown profile {name!r}")


def x_grid(cfg: dict) -> np.ndarray:
    g = cfg["x_grid"]
    return np.linspace(g["min"], g["max"], int(g["n"]))


def _stamp(cfg: dict) -> dict:
    return {"version": __version__, "config_sha256": config_hash(cfg)}


def _write_json(path: Path, payload: dict, cfg: dict) -> None:
    payload = {**_stamp(cfg), **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               default=float) + "\n")


# --------------------------- invariant checks ------------------------------
#
# Each check returns {"name", "passed", "value", "tol", ...}; cmd_validate
# and the direct-report path assemble them into summaries.

def _result(name: str, value: float, tol: float, **extra) -> dict:
    return {"name": name, "value": float(value), "tol": float(tol),
            "passed": bool(value <= tol), **extra}


def check_branch_symmetry(bd: BoundaryData, n: int = 50,
                          tol: float = 1e-8) -> dict:
    """Cut symmetries of lambda and gamma: the two boundary values of
    lambda on the cut are opposite, and gamma^+ gamma^- = 4 lambda^2 /
    (lambda^2 - k^2); off the cut lambda obeys the Schwarz reflection."""
    worst = 0.0
    for q in (bd.q_minus, bd.q_plus):
        if bd.regime is Regime.FOCUSING:
            ks = 1j * np.linspace(-q, q, n + 2)[1:-1]
        else:
            ks = np.linspace(-q, q, n + 2)[1:-1] + 0j
        lp = lam(ks, q, bd.regime, +1)
        lm = lam(ks, q, bd.regime, -1)
        gp = gam(ks, q, bd.regime, +1)
        gm = gam(ks, q, bd.regime, -1)
        worst = max(worst, float(np.max(np.abs(lp + lm))))
        worst = max(worst, float(np.max(np.abs(
            gp * gm - 4.0 * lp * lp / (lp * lp - ks * ks)))))
        # Schwarz symmetry off the cut
        ko = np.linspace(1.5 * q, 3.0 * q, n) + 0.3j * q
        worst = max(worst, float(np.max(np.abs(
            np.conj(lam(np.conj(ko), q, bd.regime)) - lam(ko, q, bd.regime)))))
    return _result("branch_symmetry", worst, tol)


def check_det_s(profile: PotentialProfile, n_nodes: int = 200,
                tol: float = 1e-8, step: float | None = None) -> dict:
    """det S(k) = gamma_-/gamma_+ on real nodes outside the cuts."""
    bd = profile.bd
    half = n_nodes // 2
    ks = np.concatenate([np.linspace(1.1 * bd.q_minus, 10.0 * bd.q_minus,
                                     half),
                         -np.linspace(1.1 * bd.q_minus, 10.0 * bd.q_minus,
                                      n_nodes - half)]) + 0j
    ent = scattering_entries(profile, ks, keys=("s11", "s12", "s21", "s22",
                                                "gamma_ratio"), step=step)
    det = ent["s11"] * ent["s22"] - ent["s12"] * ent["s21"]
    rel = np.abs(det - ent["gamma_ratio"]) / np.abs(ent["gamma_ratio"])
    return _result("det_s", float(np.max(rel)), tol, n_nodes=n_nodes)


def check_step_oracle(bd: BoundaryData, n_nodes: int = 100,
                      tol: float = 1e-10) -> dict:
    """Numerical S for the pure step vs the closed form E_+^{-1} E_-."""
    profile = PotentialProfile.pure_step(bd)
    ks = np.linspace(1.2 * bd.q_minus, 8.0 * bd.q_minus, n_nodes) + 0j
    ent = scattering_entries(profile, ks, keys=("s11", "s12", "s21", "s22"))
    worst = 0.0
    for i, k in enumerate(ks):
        S = step_S(k, bd)
        Sn = np.array([[ent["s11"][i], ent["s12"][i]],
                       [ent["s21"][i], ent["s22"][i]]])
        worst = max(worst, float(np.max(np.abs(Sn - S))))
    return _result("step_oracle", worst, tol, n_nodes=n_nodes)


def check_one_sided(bd: BoundaryData, n_per_segment: int = 50,
                    tol: float = 1e-8) -> dict:
    """One-sided jump relations on the cuts for the pure step.

    The minus-side boundary value of s11 is a closed combination of
    plus-side entries: on the focusing upper cut
    s11^- = s22 (k + lambda_+)(k - lambda_-)/(-q_+ q_-); on the focusing
    Sigma_0 part s11^- = s12 (k - lambda_-)/(i q_-); on the defocusing
    gap s11^- = s21 (k + lambda_+)/(-i q_+).
    """
    profile = PotentialProfile.pure_step(bd)
    qm, qp = bd.q_minus, bd.q_plus
    worst = 0.0

    def rel_defect(ks, lhs_keys, rhs):
        nonlocal worst
        lhs = scattering_entries(profile, ks, side_m=-1, side_p=+1,
                                 keys=("s11",))["s11"]
        worst = max(worst, float(np.max(np.abs(lhs - rhs)
                                        / np.maximum(np.abs(rhs), 1e-30))))

    if bd.regime is Regime.FOCUSING:
        s = np.linspace(qp * 0.05, qp * 0.95, n_per_segment)
        ks = 1j * s
        ent = scattering_entries(profile, ks, keys=("s22",))
        lp = lam(ks, qp, bd.regime)
        lmv = lam(ks, qm, bd.regime)
        rel_defect(ks, ("s11",),
                   ent["s22"] * (ks + lp) * (ks - lmv) / (-qp * qm))
        s0 = np.linspace(qp * 1.05, qm * 0.95, n_per_segment)
        ks0 = 1j * s0
        ent0 = scattering_entries(profile, ks0, keys=("s12",))
        lm0 = lam(ks0, qm, bd.regime)
        rel_defect(ks0, ("s11",), ent0["s12"] * (ks0 - lm0) / (1j * qm))
    else:
        ks = np.linspace(qp * 1.05, qm * 0.95, n_per_segment) + 0j
        ent = scattering_entries(profile, ks, keys=("s21",))
        lp = lam(ks, qp, bd.regime)
        rel_defect(ks, ("s11",), ent["s21"] * (ks + lp) / (-1j * qp))
    return _result("one_sided_relations", worst, tol,
                   n_per_segment=n_per_segment)


def check_jump_residual(data: ScatteringData, xs=(0.0, 2.0, -2.0),
                        tol: float = 1e-4) -> dict:
    """RH jump residual at a few representative points of the t = 0 line."""
    worst = 0.0
    for x in xs:
        sol = solve_rhp(data, float(x), t=0.0)
        worst = max(worst, float(sol.diagnostics["residual"]))
    return _result("jump_residual", worst, tol, xs=list(xs))


def check_data_consistency(data: ScatteringData,
                           profile: PotentialProfile,
                           n_check: int = 12, tol: float = 1e-6) -> dict:
    """Stored segment samples vs freshly computed scattering quantities.

    This is the det-S-backed integrity check for scattering-data files: a
    corrupted file cannot reproduce the re-scattered values.
    """
    worst = 0.0
    for lab, seg in sorted(data.segments.items()):
        idx = np.linspace(0, len(seg.k) - 1, min(n_check, len(seg.k)))
        idx = np.unique(idx.astype(int))
        ks = seg.k[idx]
        fresh = scattering_entries(profile, ks, side_m=seg.side_m,
                                   side_p=seg.side_p,
                                   keys=tuple(seg.data.keys()))
        for key, stored in seg.data.items():
            d = np.abs(stored[idx] - fresh[key]) \
                / np.maximum(np.abs(fresh[key]), 1.0)
            worst = max(worst, float(np.max(d)))
    return _result("data_consistency", worst, tol)


def check_rho_phase_law(data: ScatteringData, profile: PotentialProfile,
                        t: float = 0.1, tol: float = 1e-3,
                        pde_n: int = 1201) -> dict:
    """Isospectrality under the PDE flow: evolve the field with pde_ref,
    re-run direct scattering, and compare rho(k, t) against the
    exp(-2 i f_+ t) phase law; discrete eigenvalues must not move."""
    from . import pde_ref
    bd = data.bd
    state = pde_ref.PdeState.from_profile(profile, n=pde_n)
    state = pde_ref.evolve_to(state, t)
    prof_t = PotentialProfile.from_samples(state.x, state.q, bd)
    lab = ("RealLineRight" if bd.regime is Regime.FOCUSING
           else "SigmaMinusRayRight")
    seg = data.segments[lab]
    sel = np.abs(seg.data["rho"]) > 1e-4  # phase needs signal
    ks = seg.k[sel][:24]
    rho0 = seg.data["rho"][sel][:24]
    fresh = scattering_entries(prof_t, ks, keys=("rho",))["rho"]
    pred = rho0 * evolved_rho_phase(ks, t, bd)
    worst = float(np.max(np.abs(fresh - pred)))
    eig_defect = 0.0
    if data.discrete:
        from .scattering import find_discrete_spectrum
        found = find_discrete_spectrum(prof_t)
        for d in data.discrete:
            gap = min(abs(d.k - f.k) for f in found) if found else np.inf
            eig_defect = max(eig_defect, float(gap))
    return _result("rho_phase_law", worst, tol, t=t,
                   eigenvalue_defect=eig_defect)


# ------------------------------ commands -----------------------------------

def cmd_direct(cfg: dict, out_dir: Path) -> int:
    profile = build_profile(cfg)
    data = direct_data_for_rhp(profile,
                               meta={"config_sha256": config_hash(cfg),
                                     "version": __version__})
    (out_dir / "scattering.json").write_text(data.to_json() + "\n")
    checks = [check_det_s(profile, n_nodes=60),
              check_one_sided(profile.bd),
              check_branch_symmetry(profile.bd)]
    _write_json(out_dir / "direct_report.json", {
        "checks": checks, "all_passed": all(c["passed"] for c in checks),
        "n_discrete": len(data.discrete),
    }, cfg)
    print(f"wrote {out_dir / 'scattering.json'} "
          f"({len(data.segments)} segments, {len(data.discrete)} eigenvalues)")
    return EXIT_OK


def _load_data(path: str) -> ScatteringData:
    return ScatteringData.from_json(Path(path).read_text())


def cmd_evolve(cfg: dict, out_dir: Path, data_path: str) -> int:
    data = _load_data(data_path)
    for t in cfg["t_list"]:
        ev = evolve(data, float(t))
        name = f"scattering_t{t:g}.json"
        (out_dir / name).write_text(ev.to_json() + "\n")
        print(f"wrote {out_dir / name}")
    return EXIT_OK


def cmd_reconstruct(cfg: dict, out_dir: Path, data_path: str,
                    pde_check: bool = False, workers: int = 1) -> int:
    data = _load_data(data_path)
    xs = x_grid(cfg)
    comment = f"# mkdvist {__version__} config {config_hash(cfg)}"
    grids = []
    for t in cfg["t_list"]:
        grid = reconstruct_grid(data, xs, float(t),
                                n_per_panel=cfg["contour"]["nodes_per_panel"],
                                workers=workers)
        grids.append(grid)
        base = out_dir / f"field_t{t:g}"
        grid.to_csv(base.with_suffix(".csv"), header_comment=comment)
        grid.to_json(base.with_suffix(".json"))
        print(f"t={t:g}: {len(grid)} points, {grid.n_failed} failed, "
              f"max residual {np.nanmax(grid.jump_residual):.2e}")
        if grid.n_failed:
            for i, msg in sorted(grid.messages.items()):
                print(f"  x={grid.x[i]:+.3f}: {msg}", file=sys.stderr)
    if pde_check:
        from . import pde_ref
        profile = build_profile(cfg)
        rows = []
        for t, grid in zip(cfg["t_list"], grids):
            state = pde_ref.PdeState.from_profile(profile)
            state = pde_ref.evolve_to(state, float(t))
            ref = np.interp(grid.x, state.x, state.q)
            ok = ~grid.failed
            gap = float(np.max(np.abs(grid.q[ok] - ref[ok]))) \
                if ok.any() else float("nan")
            rows.append({"t": float(t), "max_abs_diff": gap,
                         "n_failed": grid.n_failed})
            print(f"pde check t={t:g}: max |q_ist - q_pde| = {gap:.3e}")
        _write_json(out_dir / "pde_check.json", {"rows": rows}, cfg)
    return EXIT_OK


def cmd_roundtrip(cfg: dict, out_dir: Path, workers: int = 1) -> int:
    profile = build_profile(cfg)
    data = direct_data_for_rhp(profile)
    xs = x_grid(cfg)
    grid = reconstruct_grid(data, xs, 0.0,
                            n_per_panel=cfg["contour"]["nodes_per_panel"],
                            workers=workers)
    truth = np.asarray(profile.func(xs), dtype=float)
    ok = ~grid.failed
    err = float(np.max(np.abs(grid.q[ok] - truth[ok]))) if ok.any() \
        else float("nan")
    comment = f"# mkdvist {__version__} config {config_hash(cfg)}"
    grid.to_csv(out_dir / "roundtrip.csv", header_comment=comment)
    _write_json(out_dir / "roundtrip_report.json", {
        "max_norm_error": err, "n_failed": grid.n_failed,
        "max_imag": grid.max_imag,
        "max_jump_residual": float(np.nanmax(grid.jump_residual)),
    }, cfg)
    print(f"roundtrip t=0: max-norm error {err:.3e} "
          f"({grid.n_failed} failed points)")
    return EXIT_OK if ok.all() else EXIT_NUMERICAL


def cmd_validate(cfg: dict, out_dir: Path, data_path: str | None) -> int:
    profile = build_profile(cfg)
    bd = profile.bd
    checks = [
        check_branch_symmetry(bd),
        check_det_s(profile, n_nodes=60),
        check_step_oracle(bd),
        check_one_sided(bd),
    ]
    data = direct_data_for_rhp(profile) if data_path is None \
        else _load_data(data_path)
    checks.append(check_data_consistency(data, profile))
    checks.append(check_jump_residual(data))
    checks.append(check_rho_phase_law(data, profile, t=0.02))
    passed = all(c["passed"] for c in checks)
    _write_json(out_dir / "validate_report.json", {
        "checks": checks, "all_passed": passed,
    }, cfg)
    for c in checks:
        tag = "pass" if c["passed"] else "FAIL"
        print(f"[{tag}] {c['name']}: {c['value']:.3e} (tol {c['tol']:g})")
    return EXIT_OK if passed else EXIT_VALIDATION


def cmd_report(cfg: dict, out_dir: Path, data_path: str | None,
               workers: int = 1) -> int:
    """Reconstruct and additionally render figures next to the CSV."""
    from . import report
    if data_path is None:
        profile = build_profile(cfg)
        data = direct_data_for_rhp(profile)
        data_file = out_dir / "scattering.json"
        data_file.write_text(data.to_json() + "\n")
    else:
        data = _load_data(data_path)
    xs = x_grid(cfg)
    comment = f"# mkdvist {__version__} config {config_hash(cfg)}"
    figures = [report.render_scattering(data, out_dir / "scattering.png")]
    for t in cfg["t_list"]:
        grid = reconstruct_grid(data, xs, float(t),
                                n_per_panel=cfg["contour"]["nodes_per_panel"],
                                workers=workers)
        base = out_dir / f"field_t{t:g}"
        grid.to_csv(base.with_suffix(".csv"), header_comment=comment)
        grid.to_json(base.with_suffix(".json"))
        figures.append(report.render_field_grid(grid,
                                                base.with_suffix(".png")))
        print(f"t={t:g}: wrote {base.with_suffix('.csv').name} and "
              f"{base.with_suffix('.png').name}")
    _write_json(out_dir / "report_manifest.json",
                {"figures": [str(f) for f in figures]}, cfg)
    return EXIT_OK


# ------------------------------- parsing -----------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mkdvist",
        description="Inverse scattering transform pipeline for mKdV with "
                    "asymmetric nonzero boundary conditions.")
    p.add_argument("--print-defaults", action="store_true",
                   help="dump the default configuration as JSON and exit")
    sub = p.add_subparsers(dest="command")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (default from config)")
    common.add_argument("--regime", choices=("focusing", "defocusing"))
    common.add_argument("--t", metavar="LIST",
                        help="comma-separated time list, overrides config")
    common.add_argument("--nodes", type=int, metavar="N",
                        help="collocation nodes per panel")
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--workers", type=int, default=1,
                        help="parallel x-solves for grid commands")

    sub.add_parser("direct", parents=[common],
                   help="direct scattering of the configured profile")
    pe = sub.add_parser("evolve", parents=[common],
                        help="evolve a scattering-data file to each t")
    pe.add_argument("data", help="ScatteringData JSON file")
    pr = sub.add_parser("reconstruct", parents=[common],
                        help="reconstruct q(x, t) from a scattering file")
    pr.add_argument("data", help="ScatteringData JSON file")
    pr.add_argument("--pde-check", action="store_true",
                    help="compare against the pde_ref evolution")
    sub.add_parser("roundtrip", parents=[common],
                   help="direct + inverse at t = 0, report the error")
    pv = sub.add_parser("validate", parents=[common],
                        help="run the invariant suite")
    pv.add_argument("--data", default=None,
                    help="validate this scattering file instead of "
                         "freshly computed data")
    pp = sub.add_parser("report", parents=[common],
                        help="reconstruct and render figures")
    pp.add_argument("--data", default=None,
                    help="reuse an existing scattering file")
    return p


def _overrides(args) -> dict:
    ov: dict = {}
    if getattr(args, "regime", None):
        ov["regime"] = args.regime
    if getattr(args, "t", None):
        ov["t_list"] = [float(s) for s in args.t.split(",") if s]
    if getattr(args, "nodes", None):
        ov["contour"] = {"nodes_per_panel": args.nodes}
    if getattr(args, "out", None):
        ov["out_dir"] = args.out
    if getattr(args, "verbose", False):
        ov["verbose"] = True
    return ov


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.print_defaults:
        print(json.dumps(DEFAULTS, indent=2, sort_keys=True))
        return EXIT_OK
    if not args.command:
        _parser().print_help()
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    try:
        if args.command == "direct":
            code = cmd_direct(cfg, out_dir)
        elif args.command == "evolve":
            code = cmd_evolve(cfg, out_dir, args.data)
        elif args.command == "reconstruct":
            code = cmd_reconstruct(cfg, out_dir, args.data,
                                   pde_check=args.pde_check,
                                   workers=args.workers)
        elif args.command == "roundtrip":
            code = cmd_roundtrip(cfg, out_dir, workers=args.workers)
        elif args.command == "validate":
            code = cmd_validate(cfg, out_dir, args.data)
        elif args.command == "report":
            code = cmd_report(cfg, out_dir, args.data, workers=args.workers)
        else:  # pragma: no cover - argparse guards this
            return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.get("verbose"):
        print(f"[{args.command}] finished in {time.time() - t0:.1f} s")
    return code


if __name__ == "__main__":
    sys.exit(main())
