"""Experiment configuration, orchestration and output files.

Configuration is a TOML file::

    [dataset]
    path = "students.csv"          # relative to the config file
    response = "pass"
    fixed = ["studytime", "sex"]
    categorical = ["sex"]          # optional; non-numeric columns are detected
    random = ["school"]
    level_order = "sorted"         # or "appearance"
    intercept = true

    [prior]
    mu0 = 0.0                      # scalar or list of length p
    Q = 0.001                      # c (c I), list (diagonal) or matrix; 0 is flat
    a = 0.0144                     # scalar or one per block
    b = 0.012

    [run]
    samplers = ["bg", "fg"]
    iterations = 120000
    burn_in = 20000
    thin = 1
    seed = 1

    [diagnostics]
    max_lag = 5
    groups = { beta = ["beta[(Intercept)]"] }   # optional

    [output]
    dir = "out"

Each run writes, per sampler ``k``, ``draws_k.csv`` and
``diagnostics_k.json``, plus ``ge_report.json`` and
``comparison.json``/``comparison.txt``.
"""

import csv
import io
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .diagnostics import diagnose, diagnose_chain
from .ergodicity import check_ge
from .errors import InputError, ParseError
from .ingest import DatasetFile, ingest
from .samplers import RunConfig, SamplerKind, run_chain

FLOAT_FMT = "%.17g"
_KNOWN = {
    "dataset": {"path", "response", "fixed", "random", "categorical", "level_order",
                "intercept", "delimiter"},
    "prior": {"mu0", "Q", "a", "b"},
    "run": {"samplers", "iterations", "burn_in", "thin", "seed"},
    "diagnostics": {"max_lag", "groups"},
    "output": {"dir"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetFile
    prior: dict = field(default_factory=dict)
    samplers: tuple = (SamplerKind.BLOCK, SamplerKind.FULL)
    iterations: int = 10_000
    burn_in: int = 1_000
    thin: int = 1
    seed: int = 0
    max_lag: int = 5
    groups: dict | None = None
    out_dir: str = "out"

    def __post_init__(self):
        kinds = tuple(dict.fromkeys(SamplerKind.parse(s) for s in self.samplers))
        if not kinds:
            raise InputError("select at least one sampler")
        object.__setattr__(self, "samplers", kinds)
        if self.max_lag < 1:
            raise InputError("max_lag must be at least 1")
        self.run_config(kinds[0])  # validates iteration counts and seed

    def run_config(self, kind):
        return RunConfig(kind, self.iterations, self.burn_in, self.thin, self.seed)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if "out_dir" in kw:
            kw["out_dir"] = str(kw["out_dir"])
        return replace(self, **kw)


def load_config(path):
    """Read an :class:`ExperimentConfig` from a TOML file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return config_from_dict(raw, base=path.parent)


def config_from_dict(raw, base="."):
    for section, keys in raw.items():
        if section not in _KNOWN:
            raise InputError(f"unknown config section [{section}]")
        unknown = set(keys) - _KNOWN[section]
        if unknown:
            raise InputError(f"unknown keys in [{section}]: {sorted(unknown)}")
    if "dataset" not in raw:
        raise InputError("config needs a [dataset] section")
    ds = dict(raw["dataset"])
    for key in ("path", "response"):
        if key not in ds:
            raise InputError(f"[dataset] needs '{key}'")
    ds_path = Path(ds.pop("path"))
    if not ds_path.is_absolute():
        ds_path = Path(base) / ds_path
    dataset = DatasetFile(path=str(ds_path), **ds)

    run = raw.get("run", {})
    diag = raw.get("diagnostics", {})
    out = raw.get("output", {})
    out_dir = Path(out.get("dir", "out"))
    if not out_dir.is_absolute():
        out_dir = Path(base) / out_dir
    kw = {}
    for key, name in (("iterations", "iterations"), ("burn_in", "burn_in"),
                      ("thin", "thin"), ("seed", "seed")):
        if key in run:
            kw[name] = run[key]
    if "samplers" in run:
        kw["samplers"] = tuple(run["samplers"])
    if "max_lag" in diag:
        kw["max_lag"] = diag["max_lag"]
    if "groups" in diag:
        kw["groups"] = {g: list(c) for g, c in diag["groups"].items()}
    return ExperimentConfig(dataset=dataset, prior=dict(raw.get("prior", {})),
                            out_dir=str(out_dir), **kw)


# ---------------------------------------------------------------------------
# file formats


def format_draws(names, draws):
    """CSV text with a header of names and 17-significant-digit values."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in draws:
        writer.writerow([FLOAT_FMT % v for v in row])
    return buf.getvalue()


def read_draws(path):
    """Parse a draws CSV into ``(names, matrix)``."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"draws file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        rows = []
        for i, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(names):
                raise ParseError(f"expected {len(names)} fields, found {len(row)}", row=i)
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ParseError("non-numeric value", row=i) from None
    if not rows:
        raise ParseError(f"{path} has no draws")
    return names, np.array(rows)


def dump_json(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def _split_timing(report):
    """Separate wall-clock quantities so the rest is reproducible."""
    d = report.to_dict()
    timing = {k: d.pop(k) for k in ("seconds", "ess_per_second", "mess_per_second")}
    return {"metrics": d, "timing": timing}


def comparison(reports, max_lag):
    """Table rows ``(sampler, kind, parameter, metric, value)``."""
    rows = []
    for kind, rep in reports.items():
        for name, values in rep.acf.items():
            for k in range(1, max_lag + 1):
                rows.append((kind, "parameter", name, f"acf_lag{k}",
                             None if values is None else values[k]))
            rows.append((kind, "parameter", name, "ess", rep.ess[name]))
            rows.append((kind, "parameter", name, "ess_per_second", rep.ess_per_second[name]))
        for g in rep.mess:
            rows.append((kind, "group", g, "mess", rep.mess[g]))
            rows.append((kind, "group", g, "mess_per_second", rep.mess_per_second[g]))
            rows.append((kind, "group", g, "msj", rep.msj[g]))
    return rows


def format_comparison(rows):
    def fmt(v):
        return "NA" if v is None else f"{v:.6g}"
    header = ("sampler", "scope", "name", "metric", "value")
    body = [(r[0], r[1], r[2], r[3], fmt(r[4])) for r in rows]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(line, widths)).rstrip()
             for line in (header, *body)]
    return "\n".join(lines) + "\n"


class _Outputs:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.created_dir = not self.dir.exists()
        self.paths = []

    def write(self, name, text):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
        self.paths.append(path)
        return path

    def rollback(self):
        for path in self.paths:
            path.unlink(missing_ok=True)
        if self.created_dir and self.dir.exists() and not any(self.dir.iterdir()):
            self.dir.rmdir()


def ge_report_dict(spec):
    return _clean(check_ge(spec).to_dict())


def run_experiment(config, spec=None, log=None):
    """Run every selected sampler and write the output files.

    Returns the list of written paths. On any error the files written so
    far are removed and the error is re-raised.
    """
    log = log or (lambda msg: None)
    outputs = _Outputs(config.out_dir)
    try:
        if spec is None:
            spec = ingest(config.dataset, config.prior)
        outputs.write("ge_report.json", dump_json(ge_report_dict(spec)))
        reports = {}
        for kind in config.samplers:
            log(f"running {kind.value}: {config.iterations} iterations")
            out = run_chain(spec, config.run_config(kind))
            outputs.write(f"draws_{kind.value}.csv", format_draws(out.names, out.draws))
            rep = diagnose_chain(out, max_lag=config.max_lag, groups=config.groups)
            body = _split_timing(rep)
            body["run"] = _clean(out.meta)
            outputs.write(f"diagnostics_{kind.value}.json", dump_json(_clean(body)))
            reports[kind.value] = rep
        rows = comparison(reports, config.max_lag)
        outputs.write("comparison.json", dump_json(_clean(
            [dict(zip(("sampler", "scope", "name", "metric", "value"), r)) for r in rows])))
        outputs.write("comparison.txt", format_comparison(rows))
    except BaseException:
        outputs.rollback()
        raise
    return outputs.paths


def diagnose_file(path, max_lag=5, groups=None):
    """Diagnostics for an existing draws CSV (no timing information)."""
    names, draws = read_draws(path)
    return diagnose(draws, names, max_lag=max_lag, groups=groups)
