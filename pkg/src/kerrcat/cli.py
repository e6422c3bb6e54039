"""Command-line entry point.

Exit codes: 0 success, 1 domain or integration failure, 2 usage error.
Each subcommand writes a CSV (``#`` metadata lines, unit-bearing headers)
and a ``manifest.json`` with the resolved configuration and run statistics.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import experiments as ex
from .circuit import CircuitParams, derive_model1, derive_model2, pump_frequency_for_zero_kpo_detuning
from .config import ConfigError, ParamSet, parse_config
from .constants import GHZ, KHZ, MHZ, NS, PLANCK, TWO_PI
from .dynamics import IntegrationError
from .model import SystemParams
from .schedule import DetuningSchedule, find_alpha_max, lambda_of_t, theta_of_schedule

log = logging.getLogger("kerrcat")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

# header columns must end in a unit suffix or be explicitly dimensionless
_UNIT_COLUMN = re.compile(r".+_(ns|s|rad|mhz|khz|ghz|hz|thz|pf|ff|j)$")
DIMENSIONLESS_COLUMNS = {
    "infidelity", "analytic_infidelity", "alpha_max", "alpha_max_reference", "lambda",
    "quantity", "value", "unit", "alpha_max_coarse",
}
_INF_K = re.compile(r"infidelity_k[0-9.]+k?$")


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def system_params(ps: ParamSet, kappa: float | None = None) -> SystemParams:
    K = ps.angular("kerr_over_2pi")
    p = ps.angular("pump_over_2pi")
    g = ps.angular("g_over_2pi")
    alpha = math.sqrt(p / K)
    return SystemParams(
        K=K,
        p=p,
        chi=(ps.angular("chi_over_2pi"),) * 2,
        g=np.full((2, 2), g),
        kappa=ps.angular("kappa_over_2pi") if kappa is None else kappa,
        delta2=-2 * g * alpha / float(ps.get("alpha_min")),
    )


def circuit_params(ps: ParamSet) -> CircuitParams:
    ej_kpo = ps.joules("ej_kpo_over_h")
    phi_kpo = float(ps.get("phi_kpo"))
    eps = float(ps.get("epsilon_p"))
    return CircuitParams(
        C=float(ps.get("c")) * 1e-12,
        C_tilde=float(ps.get("c_tilde")) * 1e-15,
        E_J=(ej_kpo, ej_kpo, ps.joules("ej_c1_over_h"), ps.joules("ej_c2_over_h")),
        phi_dc=(phi_kpo, phi_kpo, float(ps.get("phi_c1")), float(ps.get("phi_c2"))),
        epsilon_p=(eps, eps, 0.0, 0.0),
        E_L=ps.joules("el_over_h"),
    )


def _truncation(ps: ParamSet, keep_key: str, coupler_key: str) -> ex.Truncation:
    return ex.Truncation(int(ps.get("kpo_cutoff")), int(ps.get(keep_key)), int(ps.get(coupler_key)))


def _tol(ps: ParamSet) -> ex.Tolerances:
    return ex.Tolerances(float(ps.get("rtol")), float(ps.get("atol")))


def write_csv(path: Path, header: list[str], rows, meta: dict) -> None:
    check_header(header)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def check_header(header: list[str]) -> None:
    for col in header:
        if not (_UNIT_COLUMN.match(col) or col in DIMENSIONLESS_COLUMNS or _INF_K.match(col)):
            raise ValueError(f"CSV column {col!r} carries no unit")


def validate_csv(path: Path) -> list[str]:
    """Schema check for an emitted CSV: metadata block, unit-bearing header, rectangular rows."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing metadata header")
    header = next(csv.reader([body[0]]))
    check_header(header)
    for row in csv.reader(body[1:]):
        if len(row) != len(header):
            raise ValueError(f"{path}: ragged row {row}")
    return header


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, ex.Truncation):
        return {"kpo_cutoff": obj.kpo_cutoff, "kpo_keep": obj.kpo_keep, "coupler_cutoff": obj.coupler_cutoff}
    return obj


def _meta(cmd: str, ps: ParamSet, tier: str) -> dict:
    meta = {"kerrcat": version(), "subcommand": cmd, "tier": tier}
    meta.update({k: v for k, v in ps.as_file_dict().items() if ps.values[_base(k)] is not None})
    return meta


def _base(full: str) -> str:
    from .config import _FULL

    return _FULL[full]


def _idle_times(ps: ParamSet, tier: str, kappa: float) -> np.ndarray:
    explicit = ps.seconds_list("t_samples")
    if explicit:
        return np.array(explicit)
    if kappa > 0:
        if tier == "full":
            return np.array([200, 400, 600, 800, 1000]) * NS
        return np.array([50, 100, 200]) * NS
    t_end = ps.get_or("t_end", 1000.0 if ps.get("model") == "II" else 20.0) * NS
    step = ps.seconds("t_step")
    n = int(round(t_end / step))
    return np.arange(1, n + 1) * step


def cmd_off_residual(ps, tier, out):
    kappa = ps.angular("kappa_over_2pi")
    if ps.get("model") == "II":
        params = ex.model2_params(kappa)
    else:
        params = system_params(ps)
    keys = ("dm_kpo_keep_dim", "dm_idle_coupler_cutoff") if kappa > 0 else ("kpo_keep_dim", "idle_coupler_cutoff")
    res = ex.run_off_residual(params, _idle_times(ps, tier, kappa), _truncation(ps, *keys), tol=_tol(ps))
    growth = ex.secular_growth(res["t"], res["infidelity"]) if len(res["t"]) > 2 else None
    rows = zip(res["t"] / NS, res["infidelity"], res["analytic_infidelity"])
    path = out / "off_residual.csv"
    write_csv(path, ["t_ns", "infidelity", "analytic_infidelity"], rows, _meta("off-residual", ps, tier))
    return [path], {"stats": res["stats"], "dim": res["dim"], "delta1_rad_per_s": res["delta1"], "secular": growth}


def cmd_rzz_gate(ps, tier, out):
    params = system_params(ps, kappa=0.0)
    kappa_khz = float(ps.get("kappa_over_2pi"))
    kappa_on = TWO_PI * (kappa_khz if kappa_khz > 0 else 20.0) * KHZ
    label = f"infidelity_k{(kappa_khz if kappa_khz > 0 else 20.0):g}k"
    t_fs = ps.seconds_list("gate_t_f_list") or [ps.seconds("t_f")]
    rows, stats = [], []
    for t_f in t_fs:
        reference = ex.REFERENCE_ALPHA_MAX.get(round(t_f / NS))
        if len(t_fs) == 1 and ps.values["alpha_max"] is not None:
            amax = float(ps.get("alpha_max"))
        elif reference is not None:
            amax = reference
        else:
            amax = float(ps.get("alpha_max"))
        r = ex.run_rzz_gate(
            params, t_f, amax, kappa_on, float(ps.get("alpha_min")),
            _truncation(ps, "kpo_keep_dim", "coupler_cutoff"),
            _truncation(ps, "dm_kpo_keep_dim", "dm_coupler_cutoff"), _tol(ps),
        )
        rows.append((t_f / NS, amax, r["infidelity_k0"], r["infidelity_kon"], r["theta"]))
        stats.append({"t_f_ns": t_f / NS, "k0": r["stats_k0"], "kon": r["stats_kon"]})
    path = out / "rzz_gate.csv"
    write_csv(path, ["t_f_ns", "alpha_max", "infidelity_k0", label, "theta_rad"], rows, _meta("rzz-gate", ps, tier))
    return [path], {"runs": stats}


def cmd_optimize_alpha(ps, tier, out):
    params = system_params(ps, kappa=0.0)
    amin = float(ps.get("alpha_min"))
    t_fs = ps.seconds_list("t_f_list")
    rows = []
    if tier == "full":
        trunc = _truncation(ps, "dm_kpo_keep_dim", "coupler_cutoff")
        for r in ex.run_alpha_max_sweep(params, t_fs, amin, trunc, _tol(ps)):
            rows.append((r["t_f"] / NS, r["alpha_max"], r["infidelity"], r["reference"] or ""))
        header = ["t_f_ns", "alpha_max", "infidelity", "alpha_max_reference"]
    else:
        for t_f in t_fs:
            coarse = find_alpha_max(float(ps.get("target_theta")), t_f, params.g_scalar, params.alpha, amin)
            rows.append((t_f / NS, coarse, ex.REFERENCE_ALPHA_MAX.get(round(t_f / NS), "")))
        header = ["t_f_ns", "alpha_max_coarse", "alpha_max_reference"]
    path = out / "optimize_alpha.csv"
    write_csv(path, header, rows, _meta("optimize-alpha", ps, tier))
    return [path], {"mode": "refined" if tier == "full" else "coarse"}


def cmd_circuit_derive(ps, tier, out):
    cp = circuit_params(ps)
    rows = []
    if ps.get("circuit_model") == "II":
        d = derive_model2(cp)
        rows += [
            ("E_C/h", d.E_C / PLANCK / MHZ, "MHz"), ("x", d.x, ""), ("y", d.y, ""),
            ("z", d.z, ""), ("w", d.w, ""),
            ("E_J_tilde_kpo/h", d.E_J_tilde_kpo / PLANCK / GHZ, "GHz"),
            ("E_J_tilde_c1/h", d.E_J_tilde_c[0] / PLANCK / GHZ, "GHz"),
            ("E_J_tilde_c2/h", d.E_J_tilde_c[1] / PLANCK / GHZ, "GHz"),
            ("K/2pi", d.K / TWO_PI / MHZ, "MHz"), ("p/2pi", d.p / TWO_PI / MHZ, "MHz"),
            ("alpha", d.alpha, ""),
            ("chi_c1/2pi", d.chi[0] / TWO_PI / MHZ, "MHz"), ("chi_c2/2pi", d.chi[1] / TWO_PI / MHZ, "MHz"),
            ("Delta_1/2pi", d.delta[0] / TWO_PI / GHZ, "GHz"), ("Delta_2/2pi", d.delta[1] / TWO_PI / GHZ, "GHz"),
            ("g_1/2pi", d.g[0] / TWO_PI / MHZ, "MHz"), ("g_2/2pi", d.g[1] / TWO_PI / MHZ, "MHz"),
            ("g_KPO/2pi", d.g_kpo / TWO_PI / KHZ, "kHz"), ("g_c/2pi", d.g_c / TWO_PI / KHZ, "kHz"),
            ("omega_p/2pi", pump_frequency_for_zero_kpo_detuning(d) / TWO_PI / GHZ, "GHz"),
        ]
    else:
        d = derive_model1(cp)
        rows += [("E_C/h", d.E_C / PLANCK / MHZ, "MHz"), ("x", d.x, ""), ("u", d.u, ""), ("v", d.v, "")]
        for i, name in enumerate(("kpo1", "kpo2", "c1", "c2")):
            rows += [
                (f"E_J_tilde_{name}/h", d.E_J_tilde[i] / PLANCK / GHZ, "GHz"),
                (f"K_{name}/2pi", d.K[i] / TWO_PI / MHZ, "MHz"),
                (f"p_{name}/2pi", d.p[i] / TWO_PI / MHZ, "MHz"),
                (f"Delta_{name}/2pi", d.detuning[i] / TWO_PI / GHZ, "GHz"),
            ]
        rows += [
            ("g_11/2pi", d.g_diag[0] / TWO_PI / MHZ, "MHz"), ("g_22/2pi", d.g_diag[1] / TWO_PI / MHZ, "MHz"),
            ("g_12/2pi", d.g_12 / TWO_PI / MHZ, "MHz"), ("g_21/2pi", d.g_21 / TWO_PI / MHZ, "MHz"),
            ("omega_p/2pi", d.omega_p / TWO_PI / GHZ, "GHz"),
        ]
    path = out / "circuit_derive.csv"
    write_csv(path, ["quantity", "value", "unit"], rows, _meta("circuit-derive", ps, tier))
    return [path], {}


def cmd_schedule_preview(ps, tier, out):
    params = system_params(ps, kappa=0.0)
    sched = DetuningSchedule(
        float(ps.get("alpha_min")), float(ps.get_or("alpha_max", 0.524)), ps.seconds("t_f"),
        params.g_scalar, params.alpha,
    )
    ts = np.linspace(0.0, sched.t_f, int(ps.get("preview_points")))
    rows = []
    for t in ts:
        lam = lambda_of_t(t, sched)
        rows.append((t / NS, 2 * sched.g * sched.alpha / lam / TWO_PI / MHZ, lam))
    path = out / "schedule_preview.csv"
    write_csv(path, ["t_ns", "delta1_over_2pi_mhz", "lambda"], rows, _meta("schedule-preview", ps, tier))
    return [path], {"theta_rad": theta_of_schedule(sched)}


def cmd_selftest(ps, tier, out):
    from .selftest import run_selftest

    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    failed = [r for r in results if not r[1]]
    return [], {"checks": len(results), "failed": [r[0] for r in failed]}, (EXIT_DOMAIN if failed else EXIT_OK)


COMMANDS = {
    "off-residual": cmd_off_residual,
    "rzz-gate": cmd_rzz_gate,
    "optimize-alpha": cmd_optimize_alpha,
    "circuit-derive": cmd_circuit_derive,
    "schedule-preview": cmd_schedule_preview,
    "selftest": cmd_selftest,
}


def _time_arg(text: str) -> float:
    """'16ns' or '16' -> 16.0 (ns)."""
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*(ns|us)?\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse time {text!r}; use e.g. 16ns")
    value = float(m.group(1))
    return value * 1000 if m.group(2) == "us" else value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kerrcat", description="Kerr-cat ZZ-coupler simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file or a previous manifest.json")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tier", choices=("ci", "full"), default="ci")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        if name in ("schedule-preview", "rzz-gate"):
            p.add_argument("--tf", type=_time_arg, help="gate time, e.g. 16ns")
            p.add_argument("--alpha-max", type=float)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    overrides = list(args.set)
    if getattr(args, "tf", None) is not None:
        overrides.append(f"t_f_ns={args.tf}")
    if getattr(args, "alpha_max", None) is not None:
        overrides.append(f"alpha_max={args.alpha_max}")
    try:
        ps = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "subcommand": args.command,
        "version": version(),
        "tier": args.tier,
        "config": ps.as_file_dict(),
        "outputs": [],
        "status": "failed",
    }
    started = time.perf_counter()
    code = EXIT_OK
    try:
        result = COMMANDS[args.command](ps, args.tier, out)
        paths, info = result[0], result[1]
        if len(result) > 2:
            code = result[2]
        manifest["outputs"] = [p.name for p in paths]
        manifest["run"] = _jsonable(info)
        manifest["status"] = "ok" if code == EXIT_OK else "failed"
        for p in paths:
            print(p)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        manifest["error"] = str(exc)
        code = EXIT_USAGE
    except (ValueError, ArithmeticError, IntegrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        manifest["error"] = str(exc)
        manifest["partial_outputs"] = sorted(p.name for p in out.glob("*.csv"))
        code = EXIT_DOMAIN
    manifest["wall_seconds"] = time.perf_counter() - started
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
