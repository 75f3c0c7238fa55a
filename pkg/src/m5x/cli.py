"""Batch front-end: load one experiment config, run theory / simulate / verify.

Exit status: 0 success, 1 verification failure, 2 config error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import copulas, theory
from .estimate import Z_GATE, verify
from .signatures import SignatureArray, SignatureError, normalize
from .simulate import SimConfig, block_maxima, write_maxima_csv, write_paths_csv

log = logging.getLogger("m5x")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
COMMANDS = ("theory", "simulate", "verify")
DEFAULTS = {"n": 1000, "reps": 10000, "seed": 42, "u_levels": [0.95, 0.99]}


class ConfigError(Exception):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


@dataclass
class ExperimentConfig:
    model: theory.M5Model
    sim: SimConfig
    tau_list: list
    u_levels: list
    output_dir: Path
    commands: list
    tail_samples: int = 100_000
    bootstrap: int = 200
    paths: int = 1
    source: Path | None = field(default=None, compare=False)


def _line(root, path):
    """Source line (1-based) of the YAML node at ``path``, best effort."""
    node = root
    for key in path:
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            node = None
        if node is None:
            break
    return None if node is None else node.start_mark.line + 1


class _Fields:
    def __init__(self, root_node, source):
        self.root = root_node
        self.source = source

    def fail(self, path, msg):
        where = ".".join(str(p) for p in path) or "<root>"
        line = _line(self.root, path) if self.root is not None else None
        at = f"{self.source}:{line}" if line else str(self.source)
        raise ValidationError(f"{at}: field '{where}': {msg}")

    def get(self, data, path, kind, default=None, required=False):
        key = path[-1]
        if not isinstance(data, dict) or key not in data or data[key] is None:
            if required:
                self.fail(path, "missing required field")
            return default
        value = data[key]
        try:
            if kind is int:
                if isinstance(value, bool) or float(value) != int(value):
                    raise ValueError
                return int(value)
            if kind is float:
                if isinstance(value, bool):
                    raise ValueError
                return float(value)
            if kind is list and not isinstance(value, list):
                raise ValueError
            if kind is dict and not isinstance(value, dict):
                raise ValueError
        except (TypeError, ValueError):
            self.fail(path, f"expected {kind.__name__}, got {value!r}")
        return value


def _build_model(raw, f: _Fields):
    m = f.get(raw, ["model"], dict, required=True)
    d = f.get(m, ["model", "d"], int, required=True)
    L = f.get(m, ["model", "L"], int, required=True)
    k_min = f.get(m, ["model", "k_min"], int, default=0)
    k_max = f.get(m, ["model", "k_max"], int, default=k_min)
    if d < 1 or L < 1:
        f.fail(["model"], f"d and L must be positive (d={d}, L={L})")
    if k_max < k_min:
        f.fail(["model", "k_max"], f"k_max={k_max} < k_min={k_min}")
    weights = f.get(m, ["model", "weights"], list, required=True)
    entries = []
    for i, w in enumerate(weights):
        p = ["model", "weights", i]
        if not (isinstance(w, (list, tuple)) and len(w) == 4):
            f.fail(p, f"expected [l, k, j, weight], got {w!r}")
        try:
            l, k, j = (int(v) for v in w[:3])
            wt = float(w[3])
        except (TypeError, ValueError):
            f.fail(p, f"expected [l, k, j, weight], got {w!r}")
        if wt < 0:
            f.fail(p, f"negative weight {wt} at (l={l}, k={k}, j={j})")
        entries.append((l, k, j, wt))
    try:
        sig = SignatureArray.from_entries(d, L, k_min, k_max, entries)
        if m.get("normalize"):
            sig = normalize(sig)
    except SignatureError as e:
        f.fail(["model", "weights"], str(e))
    cop_spec = f.get(m, ["model", "copula"], dict, required=True)
    try:
        cop = copulas.from_config(cop_spec, d)
    except ValueError as e:
        f.fail(["model", "copula"], str(e))
    try:
        return theory.M5Model(sig, cop)
    except SignatureError as e:
        f.fail(["model", "weights"], str(e))
    except ValueError as e:
        f.fail(["model"], str(e))


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config; a directory means ``<dir>/config.yaml``.

    Raises
    ------
    ParseError
        The file is missing or is not valid YAML (message carries the line).
    ValidationError
        A field is missing or violates a model rule (message names the field).
    """
    path = Path(path)
    if path.is_dir():
        path = path / "config.yaml"
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"{path}: cannot read config: {e}") from e
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ParseError(f"{path}{line}: {e.problem}") from e
    except yaml.YAMLError as e:
        raise ParseError(f"{path}: {e}") from e
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a mapping")
    f = _Fields(node, path)
    model = _build_model(raw, f)
    d = model.d

    s = f.get(raw, ["sim"], dict, default={})
    n = f.get(s, ["sim", "n"], int, default=DEFAULTS["n"])
    reps = f.get(s, ["sim", "reps"], int, default=DEFAULTS["reps"])
    seed = f.get(s, ["sim", "seed"], int, default=DEFAULTS["seed"])
    try:
        sim = SimConfig(model, n=n, reps=reps, seed=seed)
    except ValueError as e:
        f.fail(["sim"], str(e))

    tau_list = f.get(raw, ["tau_list"], list, default=[[1.0] * d])
    taus = []
    for i, tau in enumerate(tau_list):
        try:
            t = np.asarray(tau, dtype=float)
        except (TypeError, ValueError):
            f.fail(["tau_list", i], f"not a numeric vector: {tau!r}")
        if t.shape != (d,) or not np.all(np.isfinite(t) & (t > 0)):
            f.fail(["tau_list", i], f"need {d} strictly positive finite entries, got {tau!r}")
        taus.append(t)
    if not taus:
        f.fail(["tau_list"], "empty")

    u_levels = f.get(raw, ["u_levels"], list, default=list(DEFAULTS["u_levels"]))
    try:
        u_levels = [float(u) for u in u_levels]
    except (TypeError, ValueError):
        f.fail(["u_levels"], f"not numeric: {u_levels!r}")
    if any(not 0 < u < 1 for u in u_levels):
        f.fail(["u_levels"], "levels must lie in (0, 1)")

    commands = f.get(raw, ["commands"], list, default=["theory", "verify"])
    for i, c in enumerate(commands):
        if c not in COMMANDS:
            f.fail(["commands", i], f"unknown command {c!r}; expected one of {COMMANDS}")

    out = f.get(raw, ["output_dir"], str, default="m5x-out")
    out = Path(out)

    cfg = ExperimentConfig(model, sim, taus, u_levels, out, list(commands), source=path)
    cfg.tail_samples = f.get(s, ["sim", "tail_samples"], int, default=cfg.tail_samples)
    cfg.bootstrap = f.get(s, ["sim", "bootstrap"], int, default=cfg.bootstrap)
    cfg.paths = f.get(s, ["sim", "paths"], int, default=cfg.paths)
    if cfg.tail_samples < 1 or cfg.bootstrap < 2 or cfg.paths < 0:
        f.fail(["sim"], "need tail_samples >= 1, bootstrap >= 2, paths >= 0")
    return cfg


def _write_theory(cfg: ExperimentConfig, out: Path):
    summaries = [theory.summarize(cfg.model, tau) for tau in cfg.tau_list]
    with open(out / "theory.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(summaries[0].columns())
        for s in summaries:
            w.writerow([repr(v) for v in s.row()])
    text = "\n\n".join(s.report() for s in summaries) + "\n"
    (out / "theory_report.txt").write_text(text)
    bad = [b for s in summaries for b in theory.check_summary(s)]
    for b in bad:
        log.error("invariant violated: %s", b)
    return EXIT_VERIFY if bad else EXIT_OK


def run(cfg: ExperimentConfig, command: str, threads: int | None = None) -> int:
    """Execute one command, writing its outputs under ``cfg.output_dir``."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if command == "theory":
        return _write_theory(cfg, out)
    if command == "simulate":
        bm = block_maxima(cfg.sim, threads)
        write_maxima_csv(bm, out / "maxima.csv")
        write_paths_csv(cfg.sim, out / "paths.csv", cfg.paths)
        return EXIT_OK
    if command == "verify":
        rep = verify(cfg.model, cfg.sim, cfg.tau_list, cfg.u_levels, threads=threads,
                     tail_samples=cfg.tail_samples, n_boot=cfg.bootstrap)
        rep.to_csv(out / "verify.csv")
        (out / "verify_report.txt").write_text(rep.render() + "\n")
        return EXIT_OK if rep.passed(Z_GATE) else EXIT_VERIFY
    raise ValueError(f"unknown command {command!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="m5x", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="experiment config (YAML file or directory)")
    p.add_argument("--command", choices=COMMANDS, help="run only this command")
    p.add_argument("--seed", type=int, help="override sim.seed")
    p.add_argument("--out", help="override output_dir")
    p.add_argument("--threads", type=int, help="worker threads, 0 = auto (default: $M5X_THREADS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.sim = SimConfig(cfg.model, cfg.sim.n, cfg.sim.reps, args.seed)
        if args.out is not None:
            cfg.output_dir = Path(args.out)
    except (ConfigError, ValueError) as e:
        print(f"m5x: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    commands = [args.command] if args.command else cfg.commands
    status = EXIT_OK
    for command in commands:
        log.info("running %s", command)
        try:
            code = run(cfg, command, args.threads)
        except Exception as e:  # noqa: BLE001 - any failure maps to the runtime exit code
            print(f"m5x: {command} failed: {type(e).__name__}: {e}", file=sys.stderr)
            return EXIT_RUNTIME
        if code:
            print(f"m5x: {command} reported failures; see {cfg.output_dir}", file=sys.stderr)
        status = max(status, code)
    return status


def entry():
    sys.exit(main())
