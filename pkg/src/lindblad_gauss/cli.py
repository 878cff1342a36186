"""Command-line front end.

Commands: simulate, sweep, thermal, audit, validate.  Exit codes:
0 success, 1 validation failure, 2 bad input, 3 unphysical trajectory,
4 partial sweep failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import checks
from .dynamics import (
    InitialConditions,
    LindbladParams,
    Mode,
    Trajectory,
    audit,
    propagate,
    stationary_formula,
    stationary_solve,
    thermal_calibration,
)
from .lengths import length_scales, thermal_lengths
from .state import purity, thermal_state

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BAD_INPUT = 2
EXIT_UNPHYSICAL = 3
EXIT_PARTIAL = 4

CSV_HEADER = "tau,A,B,C,mR,mP,omega_sq,purity,d_corr,d_decoh,d_mix,uncertainty"
CONVERGENCE_REL_TOL = 1e-3

_FLOAT_KEYS = ("omega", "gamma", "h11", "h33", "h13r", "a1", "b1", "mR0", "mP0", "t_end", "dt_out")
CONFIG_KEYS = frozenset(_FLOAT_KEYS + ("mode", "normalize"))
_DEFAULTS = {"omega": 1.0, "a1": 0.5, "b1": 0.5, "mR0": 0.0, "mP0": 0.0,
             "t_end": 20.0, "dt_out": 0.01, "normalize": False}
_REQUIRED = ("gamma", "h11", "h33", "h13r")


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    params: LindbladParams
    mode: Mode
    ic: InitialConditions
    t_end: float
    dt_out: float
    normalize: bool = False

    def __post_init__(self):
        if not (self.t_end > 0 and self.dt_out > 0):
            raise InputError("t_end and dt_out must be positive")

    def times(self) -> np.ndarray:
        n = max(1, int(round(self.t_end / self.dt_out)))
        return np.linspace(0.0, self.t_end, n + 1)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {text!r}")


def parse_key_values(lines: Sequence[str], source: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise InputError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(raw: dict[str, str], mode_flag: Optional[str] = None) -> ScenarioConfig:
    values: dict = dict(_DEFAULTS)
    for key, text in raw.items():
        if key == "mode":
            values["mode"] = text
        elif key == "normalize":
            values["normalize"] = _parse_bool(text)
        else:
            try:
                values[key] = float(text)
            except ValueError:
                raise InputError(f"{key}: not a number: {text!r}") from None
    if mode_flag is not None:
        values["mode"] = mode_flag
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise InputError(f"missing required keys: {', '.join(missing)}")
    if "mode" not in values:
        raise InputError("mode must be given (--mode or mode= in the config)")
    try:
        mode = Mode(values["mode"])
        params = LindbladParams(gamma=values["gamma"], h11=values["h11"], h33=values["h33"],
                                h13r=values["h13r"], omega=values["omega"])
        ic = InitialConditions(values["a1"], values["b1"], values["mR0"], values["mP0"])
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return ScenarioConfig(params, mode, ic, values["t_end"], values["dt_out"], values["normalize"])


def load_config(path: Optional[str], overrides: Sequence[str], mode_flag: Optional[str]) -> ScenarioConfig:
    raw: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read config {path!r}: {exc}") from None
        raw.update(parse_key_values(text.splitlines(), path))
    raw.update(parse_key_values(overrides, "--set"))
    return build_config(raw, mode_flag)


# -- formatting -----------------------------------------------------------------


def fmt_csv(x: float) -> str:
    return f"{x:.16e}"


def fmt_value(x) -> str:
    if isinstance(x, complex) or np.iscomplexobj(x):
        z = complex(x)
        return f"{z.real!r}{z.imag:+}j"
    return repr(float(x))


def _emit(lines: list[str], key: str, value) -> None:
    lines.append(f"{key}={value if isinstance(value, str) else fmt_value(value)}")


# -- simulate -------------------------------------------------------------------


def normalised_columns(tr: Trajectory, normalize: bool) -> dict[str, np.ndarray]:
    cols = {"d_corr": tr.d_corr, "d_decoh": tr.d_decoh, "d_mix": tr.d_mix, "uncertainty": tr.omega_sq}
    if not normalize:
        return cols
    out = {}
    for key, col in cols.items():
        # an infinite d_mix at tau = 0 (pure initial state) has no finite reference
        out[key] = col / col[0] if np.isfinite(col[0]) else col
    return out


def trajectory_csv(tr: Trajectory, normalize: bool) -> str:
    cols = normalised_columns(tr, normalize)
    rows = []
    if tr.flagged:
        rows.append("# FLAGGED unphysical state along trajectory")
    rows.append(CSV_HEADER)
    for i, tau in enumerate(tr.times):
        vals = (tau, *tr.moments[i], tr.omega_sq[i], tr.purity[i],
                cols["d_corr"][i], cols["d_decoh"][i], cols["d_mix"][i], cols["uncertainty"][i])
        rows.append(",".join(fmt_csv(v) for v in vals))
    return "\n".join(rows) + "\n"


def convergence_time(tr: Trajectory, x_inf: np.ndarray, rel_tol: float = CONVERGENCE_REL_TOL) -> Optional[float]:
    """First sampled tau after which ||x - x_inf|| / ||x(0) - x_inf|| stays below ``rel_tol``."""
    dist = np.linalg.norm(tr.second_moments - x_inf, axis=1)
    if dist[0] == 0.0:
        return float(tr.times[0])
    rel = dist / dist[0]
    above = np.flatnonzero(rel >= rel_tol)
    if above.size == 0:
        return float(tr.times[0])
    if above[-1] == len(rel) - 1:
        return None
    return float(tr.times[above[-1] + 1])


def simulation_summary(cfg: ScenarioConfig, tr: Trajectory) -> list[str]:
    p = cfg.params
    lines = [f"# simulate mode={cfg.mode.value}"]
    _emit(lines, "mode", cfg.mode.value)
    for key in ("gamma", "h11", "h33", "h13r", "omega"):
        _emit(lines, key, getattr(p, key))
    _emit(lines, "coupling_ok", str(p.coupling_ok).lower())
    if p.gamma > 0:
        x_inf = stationary_solve(p, cfg.mode)
        for name, v in zip("ABC", x_inf):
            _emit(lines, f"fixed_point_{name}", v)
        t_conv = convergence_time(tr, x_inf)
        _emit(lines, "convergence_tau", "not_reached" if t_conv is None else fmt_value(t_conv))
    else:
        lines.append("fixed_point=none")
    if p.gamma > 0 and p.omega == 1.0:
        for name, v in zip("ABC", stationary_formula(p)):
            _emit(lines, f"formula_{name}", v)
    _emit(lines, "flagged", str(tr.flagged).lower())
    for v in tr.violations:
        lines.append(f"# violation {v}")
    return lines


def run_scenario(cfg: ScenarioConfig) -> Trajectory:
    return propagate(cfg.params, cfg.mode, cfg.ic, cfg.times())


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.set, args.mode)
    if args.normalize:
        cfg = replace(cfg, normalize=True)
    tr = run_scenario(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectory.csv").write_text(trajectory_csv(tr, cfg.normalize))
    summary = simulation_summary(cfg, tr)
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    print("\n".join(summary))
    if tr.flagged:
        print("error: unphysical state along trajectory", file=sys.stderr)
        return EXIT_UNPHYSICAL
    return EXIT_OK


# -- sweep ----------------------------------------------------------------------


def windows_above(times: np.ndarray, values: np.ndarray, level: float = 1.0) -> list[tuple[float, float]]:
    above = values > level
    windows = []
    i, n = 0, len(values)
    while i < n:
        if above[i]:
            j = i
            while j + 1 < n and above[j + 1]:
                j += 1
            windows.append((float(times[i]), float(times[j])))
            i = j + 1
        else:
            i += 1
    return windows


def _ordering(values: list[float]) -> str:
    diffs = np.diff(values)
    if len(values) < 2:
        return "single"
    if np.all(diffs > 0):
        return "increasing"
    if np.all(diffs < 0):
        return "decreasing"
    return "non-monotonic"


def cmd_sweep(args) -> int:
    base = load_config(args.config, args.set, args.mode)
    base = replace(base, normalize=True)
    if not args.values:
        raise InputError("sweep needs at least one value")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    lines = [f"# sweep key={args.key} mode={base.mode.value}"]
    failures = 0
    asymptotic = []
    for value in args.values:
        tag = f"{args.key}={value!r}"
        try:
            params = replace(base.params, **{args.key: value})
            cfg = replace(base, params=params)
            tr = run_scenario(cfg)
        except ValueError as exc:
            failures += 1
            lines.append(f"# {tag} failed: {exc}")
            continue
        (out / f"sweep_{args.key}_{value!r}.csv").write_text(trajectory_csv(tr, True))
        cols = normalised_columns(tr, True)
        prefix = f"{args.key}_{value!r}"
        _emit(lines, f"{prefix}.coupling_ok", str(params.coupling_ok).lower())
        _emit(lines, f"{prefix}.flagged", str(tr.flagged).lower())
        if tr.flagged:
            failures += 1
            continue
        d_final, u_final = cols["d_decoh"][-1], cols["uncertainty"][-1]
        asymptotic.append(float(d_final))
        _emit(lines, f"{prefix}.d_decoh_final_normalized", d_final)
        _emit(lines, f"{prefix}.uncertainty_final_normalized", u_final)
        if params.gamma > 0:
            x = stationary_solve(params, cfg.mode)
            w2 = x[0] * x[2] - x[1] ** 2
            _emit(lines, f"{prefix}.d_decoh_fixed_point_normalized",
                  math.sqrt(x[2] / (2 * w2)) / tr.d_decoh[0])
        win = windows_above(tr.times, cols["d_decoh"])
        _emit(lines, f"{prefix}.d_decoh_above_1_windows",
              ";".join(f"{a!r}-{b!r}" for a, b in win) if win else "none")
    if asymptotic:
        _emit(lines, "d_decoh_final_ordering", _ordering(asymptotic))
    _emit(lines, "failed", str(failures))
    (out / "sweep_summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_PARTIAL if failures else EXIT_OK


# -- thermal --------------------------------------------------------------------


def cmd_thermal(args) -> int:
    try:
        T, gamma = args.T, args.gamma
        mode = Mode(args.mode)
        calibs = {m: thermal_calibration(T, gamma, m) for m in Mode}
        state = thermal_state(T)
        closed = thermal_lengths(T)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    lines = ["# thermal calibration"]
    _emit(lines, "T_tilde", T)
    _emit(lines, "gamma", gamma)
    _emit(lines, "mode", mode.value)
    for m, p in calibs.items():
        lines.append(f"# {m.value}: {p.provenance}")
        for key in ("h11", "h33", "h13r"):
            _emit(lines, f"calibration.{m.value}.{key}", getattr(p, key))
    lines.append("# thermal state")
    for key in ("A", "B", "C"):
        _emit(lines, f"state.{key}", getattr(state, key))
    _emit(lines, "state.purity", purity(state))
    x = stationary_solve(calibs[mode], mode)
    _emit(lines, f"stationary.{mode.value}.max_abs_deviation",
          float(np.max(np.abs(x - state.as_array()[:3]))))
    lines.append("# length scales (closed form)")
    _emit(lines, "d_corr", closed.d_corr)
    _emit(lines, "d_decoh", closed.d_decoh)
    _emit(lines, "d_mix", closed.d_mix)
    from_state = length_scales(state)
    _emit(lines, "d_decoh_from_state", from_state.d_decoh)
    print("\n".join(lines))
    return EXIT_OK


# -- audit ----------------------------------------------------------------------


def audit_lines(p: LindbladParams) -> list[str]:
    rep = audit(p)
    lines = ["# consistency audit"]
    for key in ("gamma", "h11", "h33", "h13r", "omega"):
        _emit(lines, key, getattr(p, key))
    if p.provenance:
        lines.append(f"# provenance: {p.provenance}")
    for m in Mode:
        ev = ",".join(fmt_value(complex(z)) for z in rep.eigenvalues[m])
        lines.append(f"{m.value}.eigenvalues={ev}")
        fev = ",".join(fmt_value(complex(z)) for z in rep.first_moment_eigenvalues[m])
        lines.append(f"{m.value}.first_moment_eigenvalues={fev}")
        _emit(lines, f"{m.value}.matches_stated_decay", str(rep.matches_stated_decay[m]).lower())
        for name, v in zip("ABC", rep.fixed_points[m]):
            _emit(lines, f"{m.value}.fixed_point_{name}", v)
        if m in rep.formula_residuals:
            _emit(lines, f"{m.value}.formula_residual", rep.formula_residuals[m])
        if rep.thermal_residuals is not None:
            _emit(lines, f"{m.value}.thermal_residual", rep.thermal_residuals[m])
    if rep.formula is not None:
        for name, v in zip("ABC", rep.formula):
            _emit(lines, f"formula.{name}", v)
    else:
        lines.append("# closed-form stationary values need omega = 1; skipped")
    for key, v in rep.differences.items():
        _emit(lines, f"difference.{key}", v)
    _emit(lines, "coupling_margin", rep.coupling_margin)
    _emit(lines, "coupling_ok", str(rep.coupling_ok).lower())
    if not rep.coupling_ok:
        lines.append(
            f"# WARNING coupling inequality violated: h11*h33={p.h11 * p.h33!r} "
            f"< h13r^2+gamma^2={p.h13r**2 + p.gamma**2!r}"
        )
    return lines


def cmd_audit(args) -> int:
    if args.thermal_T is not None:
        mode = args.mode or "rederived"
        gamma = args.gamma
        if gamma is None:
            raise InputError("--thermal-T needs --gamma")
        try:
            p = thermal_calibration(args.thermal_T, gamma, mode)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        raw: dict[str, str] = {}
        if args.config:
            try:
                raw.update(parse_key_values(Path(args.config).read_text().splitlines(), args.config))
            except OSError as exc:
                raise InputError(str(exc)) from None
        raw.update(parse_key_values(args.set, "--set"))
        raw.setdefault("mode", "rederived")  # audit always reports both modes
        p = build_config(raw).params
        if p.gamma <= 0:
            raise InputError("audit needs gamma > 0")
    print("\n".join(audit_lines(p)))
    return EXIT_OK


# -- validate -------------------------------------------------------------------


def cmd_validate(args) -> int:
    results = checks.run_checks()
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    for note in checks.informational():
        lines.append(f"# INFO {note}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"checks={len(results)} passed={len(results) - n_fail} failed={n_fail}")
    print("\n".join(lines))
    return EXIT_VALIDATION if n_fail else EXIT_OK


# -- entry point ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_INPUT)


def _common(sp, out_default: Optional[str] = "."):
    sp.add_argument("--config", help="key=value scenario file")
    sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    sp.add_argument("--mode", choices=[m.value for m in Mode])
    if out_default is not None:
        sp.add_argument("--out", default=out_default, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lindblad-gauss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="propagate one scenario and write a CSV")
    _common(sp)
    sp.add_argument("--normalize", action="store_true", help="divide lengths and uncertainty by their tau=0 values")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="repeat simulate over values of one coupling")
    _common(sp)
    sp.add_argument("--key", default="h13r", choices=["gamma", "h11", "h33", "h13r"])
    sp.add_argument("--values", type=float, nargs="+", required=True)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("thermal", help="thermal calibration and length scales")
    sp.add_argument("--T", type=float, required=True, help="dimensionless temperature")
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--mode", choices=[m.value for m in Mode], required=True)
    sp.set_defaults(func=cmd_thermal)

    sp = sub.add_parser("audit", help="cross-check the moment systems and stationary formulas")
    _common(sp, out_default=None)
    sp.add_argument("--thermal-T", type=float, help="audit the thermal calibration at this temperature")
    sp.add_argument("--gamma", type=float, help="friction for --thermal-T")
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("validate", help="run the invariant suite")
    sp.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
