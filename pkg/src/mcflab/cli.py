"""Command-line experiment driver.

    mcflab run <config.ini>
    mcflab list-scenarios
    mcflab calibrate
    mcflab scan-wavefront <config.ini>

Outputs go below $MCFLAB_OUTPUT (default ./mcflab-output).  Exit status is 0
when every declared expectation holds, 1 when one fails, 2 on a bad config.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from mcflab import oracle
from mcflab.constraint import XiSet
from mcflab.extract import WavefrontSample, threshold_set, wavefront_scan, write_scan_csv
from mcflab.field import Grid
from mcflab.pairing import EmpiricalPairing, SpatialDensity, check_limits
from mcflab.registry import RegistryError, build_generator, parse_complex, parse_list
from mcflab.scenarios import LIBRARY, SCENARIOS, Result, validate

OUTPUT_ENV = "MCFLAB_OUTPUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
SECTIONS = {"experiment", "grid", "limits", "generator", "integrand", "symbol", "expect", "params",
            "wavefront"}


class ConfigError(ValueError):
    pass


# -- deterministic JSON ---------------------------------------------------------------


def _num(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return '"' + repr(x) + '"'
    return format(x, ".17g")


def dump_json(obj, indent: int = 0) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {dump_json(obj[k], indent + 1)}' for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(dump_json(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, complex):
        return dump_json([obj.real, obj.imag], indent)
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


# -- config parsing -----------------------------------------------------------------------


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return i
        elif current == section and key is not None and s.split("=")[0].split(":")[0].strip() == key:
            return i
    return None


def _where(text: str, section: str, key: str | None = None) -> str:
    line = _line_of(text, section, key)
    loc = f"[{section}]" + (f" {key}" if key else "")
    return f"line {line}, {loc}" if line else loc


def _value(raw: str):
    """Numbers, comma lists of numbers, or plain strings."""
    parts = [t.strip() for t in raw.split(",")]
    try:
        vals = [int(t) if t.lstrip("-").isdigit() else float(t) for t in parts]
    except ValueError:
        return raw.strip()
    return tuple(vals) if len(vals) > 1 or "," in raw else vals[0]


def load_config(path) -> dict:
    """Parse an INI experiment file into scenario parameters."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"{_where(text, sec)}: unknown section (known: {', '.join(sorted(SECTIONS))})")
    if not cp.has_option("experiment", "scenario"):
        raise ConfigError(f"{_where(text, 'experiment')}: missing key 'scenario'")
    cfg = {"scenario": cp.get("experiment", "scenario").strip(), "params": {}, "text": text}
    cfg["output"] = cp.get("experiment", "output", fallback=cfg["scenario"]).strip()
    params = cfg["params"]
    try:
        if cp.has_section("grid"):
            for key in ("d", "n"):
                if cp.has_option("grid", key):
                    params[key] = cp.getint("grid", key)
        if cp.has_section("limits"):
            sec = cp["limits"]
            for key in sec:
                if key in ("j_list",):
                    params[key] = parse_list(sec[key], int)
                elif key in ("r_list",):
                    params["R_list"] = parse_list(sec[key], float)
                elif key == "mode":
                    params["mode"] = sec[key].strip()
                elif key == "tol":
                    params["tol"] = float(sec[key])
                else:
                    raise ConfigError(f"{_where(text, 'limits', key)}: unknown key")
        for sec in ("generator", "integrand", "symbol", "expect", "wavefront"):
            if cp.has_section(sec):
                params[sec] = {k: v for k, v in cp[sec].items()}
        if cp.has_section("params"):
            for k, v in cp["params"].items():
                params[k] = _value(v)
        if cp.has_option("experiment", "seed"):
            params["seed"] = cp.getint("experiment", "seed")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value in {path}: {exc}") from exc
    return cfg


def _validate(cfg: dict) -> list[str]:
    name = cfg["scenario"]
    text = cfg["text"]
    names = LIBRARY if name == "all" else [name]
    for nm in names:
        try:
            validate(nm, cfg["params"] if name != "all" else {})
        except RegistryError as exc:
            raise ConfigError(f"{_where(text, 'generator', 'kind')}: {exc}") from exc
        except KeyError as exc:
            raise ConfigError(f"{_where(text, 'experiment', 'scenario')}: {exc.args[0]}") from exc
        except ValueError as exc:
            raise ConfigError(f"{_where(text, 'limits')}: {exc}") from exc
    return names


# -- output ---------------------------------------------------------------------------------


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "mcflab-output"))


def _write_plot(label: str, obj, out: Path) -> None:
    if isinstance(obj, SpatialDensity):
        obj.to_csv(out / f"lambda-{label}.csv")
    elif isinstance(obj, list) and obj and isinstance(obj[0], WavefrontSample):
        write_scan_csv(obj, out / f"{label}.csv")
    elif isinstance(obj, XiSet):
        with open(out / f"{label}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["angle", "margin", "member"])
            for xi, c, m in zip(obj.directions, obj.cosines, obj.members):
                ang = math.atan2(xi[1], xi[0]) if len(xi) > 1 else 0.0
                w.writerow([format(ang, ".17g"), format(float(c), ".17g"), int(bool(m))])


def write_result(res: Result, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    summary = res.summary()
    summary["pairings"] = {k: p.summary() for k, p in sorted(res.pairings.items())}
    (out / "summary.json").write_text(dump_json(summary) + "\n")
    for label, pr in sorted(res.pairings.items()):
        pr.to_csv(out / f"pairing-{label}.csv")
    for label, obj in sorted(res.plots.items()):
        _write_plot(label, obj, out)


def _load_calibration() -> None:
    path = output_root() / "calibration.json"
    if path.exists():
        import json

        oracle.set_direction_constant(float(json.loads(path.read_text())["c_dir"]))


def run_experiment(cfg: dict) -> int:
    names = _validate(cfg)
    _load_calibration()
    root = output_root() / cfg["output"]
    ok = True
    overall = {}
    for nm in names:
        params = cfg["params"] if cfg["scenario"] != "all" else {}
        try:
            res = SCENARIOS[nm].run(params)
        except Exception as exc:  # diagnostics go to the summary, not a traceback
            res = Result(nm)
            res.errors.append(f"{type(exc).__name__}: {exc}")
        target = root if len(names) == 1 else root / nm
        write_result(res, target)
        overall[nm] = res.passed
        ok &= res.passed
        for c in res.checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {nm}: {c.name}")
        for e in res.errors:
            print(f"FAIL {nm}: {e}")
    if len(names) > 1:
        (root / "all.json").write_text(dump_json({"passed": ok, "scenarios": overall}) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def scan_wavefront(cfg: dict) -> int:
    p = cfg["params"]
    text = cfg["text"]
    if "generator" not in p:
        raise ConfigError(f"{_where(text, 'generator')}: scan-wavefront needs a [generator] section")
    wf = p.get("wavefront", {})
    try:
        grid = Grid(int(p.get("d", 1)), int(p.get("n", 4096)))
        gen = build_generator(p["generator"], grid.d)
        j_list = tuple(p.get("j_list", (32, 64)))
        R_list = tuple(p.get("R_list", (2.0, 4.0)))
        check_limits(gen, grid, j_list, R_list, "double-limit")
        x0s = [parse_list(t) for t in wf.get("x0", "0.5").split(";")]
        inf = wf.get("at_infinity", "false").strip().lower() == "true"
        z0s = [(parse_complex(t), inf) for t in wf.get("z0", "1").split(";")]
        count = int(wf.get("directions", 16))
        widths = (float(wf.get("x_width", 0.25)), float(wf.get("z_width", 0.3)),
                  float(wf.get("half_angle", math.pi / count if grid.d > 1 else math.pi / 4)))
    except RegistryError as exc:
        raise ConfigError(f"{_where(text, 'generator', 'kind')}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{_where(text, 'wavefront')}: {exc}") from exc
    if any(len(x) != grid.d for x in x0s):
        raise ConfigError(f"{_where(text, 'wavefront', 'x0')}: points must have {grid.d} coordinates")
    if grid.d == 1:
        dirs = [(1.0,), (-1.0,)]
    else:
        ang = 2 * np.pi * np.arange(count) / count
        dirs = [(float(np.cos(a)), float(np.sin(a))) for a in ang]
    samples = wavefront_scan(gen, grid, x0s, z0s, dirs, widths, j_list=j_list, R_list=R_list)
    out = output_root() / cfg["output"]
    out.mkdir(parents=True, exist_ok=True)
    write_scan_csv(samples, out / "wavefront.csv")
    write_scan_csv(threshold_set(samples), out / "wavefront-threshold.csv")
    top = max(s.indicator for s in samples)
    (out / "summary.json").write_text(dump_json({"max_indicator": top, "samples": len(samples),
                                                 "threshold": 0.1 * top}) + "\n")
    print(f"wrote {len(samples)} samples to {out}")
    return EXIT_OK


def calibrate() -> int:
    try:
        c = oracle.calibrate_direction()
    except oracle.CalibrationError as exc:
        print(f"FAIL calibration: {exc}")
        return EXIT_FAIL
    root = output_root()
    root.mkdir(parents=True, exist_ok=True)
    (root / "calibration.json").write_text(dump_json({"c_dir": c}) + "\n")
    print(f"c_dir = {format(c, '.17g')}")
    return EXIT_OK


def list_scenarios() -> int:
    for name, s in SCENARIOS.items():
        crit = f"criterion {s.criterion}" if s.criterion else "configurable"
        print(f"{name:20s} {crit:13s} {s.description}")
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="mcflab", description="microlocal compactness form experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a configured scenario (or 'all')")
    r.add_argument("config")
    sub.add_parser("list-scenarios", help="list the built-in scenario library")
    sub.add_parser("calibrate", help="fit and store the direction constant")
    w = sub.add_parser("scan-wavefront", help="wavefront indicator scan for a configured generator")
    w.add_argument("config")
    args = ap.parse_args(argv)
    try:
        if args.command == "run":
            return run_experiment(load_config(args.config))
        if args.command == "scan-wavefront":
            return scan_wavefront(load_config(args.config))
        if args.command == "calibrate":
            return calibrate()
        return list_scenarios()
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
