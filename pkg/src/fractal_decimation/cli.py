"""Command-line front end.

    fractal-spectra [<task>] --model interval|sg --p <f>|--r <f> [--p-seq a,b,c]
        [--c <f>] --level <int> --bc dirichlet|neumann [--t <list>]
        [--delta-at <coord>] --out <dir> [--format csv|json] [--svg]
        [--config <file>]

A config file holds ``key = value`` lines using the option names without
dashes (``p-seq`` or ``p_seq``) plus ``task``; command-line options override it. Exit
status is 0 on success, 1 on a numerical or consistency failure and 2 on
invalid input.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import analysis, spacetime, variants
from .exceptions import FractalSpectraError, NumericalError, ParameterError, PreconditionError
from .graphs import assemble_operator, build_graph, dense_spectrum, format_float
from .models import INTERVAL, SG, make_params
from .svg import emit_plot_svg
from .validation import check_bc, check_cutoff, check_level, check_model

TASKS = ("spectrum", "eigenfunctions", "counting", "weyl", "ratios", "sturm", "heat", "wave",
         "limits")
SPECTRUM_HEADER = ["n", "level", "graph_eigenvalue", "renormalized_eigenvalue", "multiplicity",
                   "birth_level", "seed", "branches"]
DEFAULTS = {
    "model": "interval", "p": None, "r": None, "p_seq": None, "c": None, "level": 3,
    "bc": None, "t": "0.001,0.01,0.1", "delta_at": None, "out": ".", "format": "csv",
    "svg": False, "depth": 30, "window": 1, "bin_width": 0.01, "zero_tol": 1e-6,
    "count": None, "delta_convention": spacetime.UNIT_MASS, "limit_level": 3,
}
BOOLEAN = ("svg",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    ap = _Parser(prog="fractal-spectra", description="Spectra of self-similar Laplacians "
                 "on the Interval and the Sierpinski gasket.")
    ap.add_argument("task", nargs="?", choices=TASKS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--model", choices=("interval", "sg"))
    ap.add_argument("--p", type=float)
    ap.add_argument("--r", type=float)
    ap.add_argument("--p-seq", dest="p_seq", help="comma-separated parameter sequence")
    ap.add_argument("--c", type=float, help="threshold cutoff (Interval only)")
    ap.add_argument("--level", type=int)
    ap.add_argument("--bc", choices=("dirichlet", "neumann"))
    ap.add_argument("--t", help="comma-separated times")
    ap.add_argument("--delta-at", dest="delta_at", help="coordinate x or x,y")
    ap.add_argument("--delta-convention", dest="delta_convention",
                    choices=(spacetime.UNIT_MASS, spacetime.RAW_VALUE))
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--svg", action="store_true", default=None)
    ap.add_argument("--depth", type=int, help="target level for limits")
    ap.add_argument("--limit-level", dest="limit_level", type=int,
                    help="level whose first eigenvalues seed the limits")
    ap.add_argument("--window", type=int)
    ap.add_argument("--bin-width", dest="bin_width", type=float)
    ap.add_argument("--zero-tol", dest="zero_tol", type=float)
    ap.add_argument("--count", type=int, help="number of eigenfunctions to write")
    return ap


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS and key != "task":
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    if key in BOOLEAN:
        if isinstance(value, bool):
            return value
        return str(value).lower() in ("1", "true", "yes", "on")
    try:
        if key in ("p", "r", "c", "bin_width", "zero_tol"):
            return float(value)
        if key in ("level", "depth", "window", "count", "limit_level"):
            return int(value)
    except ValueError as exc:
        raise UsageError(f"invalid value for {key}: {value!r}") from exc
    return value


def resolve(argv):
    """Merge defaults, config file and command line into one dict."""
    ns = build_parser().parse_args(argv)
    cfg = dict(DEFAULTS)
    task = ns.task
    if ns.config:
        file_cfg = read_config(ns.config)
        file_task = file_cfg.pop("task", None)
        if file_task is not None and task is not None and file_task != task:
            raise UsageError("config task does not match the command-line task")
        task = task or file_task
        cfg.update(file_cfg)
    if task not in TASKS:
        raise UsageError("a task is required: " + ", ".join(TASKS) if task is None
                         else f"unknown task {task!r}")
    for key in DEFAULTS:
        v = getattr(ns, key, None)
        if v is not None:
            cfg[key] = v
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    cfg["task"] = task
    return cfg


def _sequence(text):
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError as exc:
        raise UsageError(f"invalid parameter sequence {text!r}") from exc


def _times(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"invalid time list {text!r}") from exc


class RunConfig:
    """Validated run description; construction raises on invalid input."""

    def __init__(self, cfg):
        self.task = cfg["task"]
        self.model = check_model(cfg["model"])
        self.level = check_level(cfg["level"])
        default_bc = "neumann" if self.task == "heat" else "dirichlet"
        self.bc = check_bc(cfg["bc"] or default_bc)
        key = "p" if self.model == INTERVAL else "r"
        other = "r" if key == "p" else "p"
        if cfg[other] is not None:
            raise UsageError(f"--{other} does not apply to model {self.model}")
        self.sequence = _sequence(cfg["p_seq"]) if cfg["p_seq"] else None
        self.param = cfg[key]
        if self.param is None and self.sequence is None:
            raise UsageError(f"--{key} (or --p-seq) is required for model {self.model}")
        if self.param is not None and self.sequence is not None:
            raise UsageError(f"give either --{key} or --p-seq, not both")
        self.cutoff = None
        if cfg["c"] is not None:
            if self.model != INTERVAL:
                raise UsageError("threshold subdivision is available on the Interval only")
            if self.sequence is not None:
                raise UsageError("--c and --p-seq cannot be combined")
            self.cutoff = check_cutoff(cfg["c"])
        self.variant = ("threshold" if self.cutoff is not None
                        else "hierarchical" if self.sequence is not None else "none")
        self.params = make_params(self.model, self.param) if self.param is not None else None
        if self.sequence is not None:
            self.hierarchical = variants.HierarchicalParams(self.model, self.sequence)
        self.times = _times(cfg["t"])
        if any(t < 0 for t in self.times):
            raise UsageError("times must be nonnegative")
        self.delta_at = cfg["delta_at"]
        self.delta_convention = cfg["delta_convention"]
        self.out = cfg["out"]
        self.format = cfg["format"]
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        self.svg = bool(cfg["svg"])
        self.depth = check_level(cfg["depth"])
        self.limit_level = check_level(cfg["limit_level"])
        self.window = check_level(cfg["window"])
        self.bin_width = float(cfg["bin_width"])
        self.zero_tol = float(cfg["zero_tol"])
        self.count = cfg["count"]
        if self.task == "sturm" and (self.model != INTERVAL or self.bc != "dirichlet"):
            raise UsageError("sturm applies to Dirichlet Interval eigenfunctions")
        if self.task == "limits" and (self.variant != "none" or self.bc != "dirichlet"):
            raise UsageError("limits apply to the standard Dirichlet families")


def compute_spectrum(cfg, eigenfunctions=True, level=None):
    level = cfg.level if level is None else level
    if cfg.variant == "threshold":
        return variants.threshold_spectrum(cfg.param, cfg.cutoff, level, cfg.bc)
    if cfg.variant == "hierarchical":
        return variants.hierarchical_spectrum(cfg.hierarchical, level, cfg.bc)
    if cfg.bc == "dirichlet":
        if cfg.model == INTERVAL:
            from .interval_decimation import decimate_interval
            spec = decimate_interval(cfg.params.p, level, eigenfunctions)
            if eigenfunctions:
                spec.graph = build_graph(cfg.params, level)
            return spec
        from .sg_decimation import full_spectrum_sg
        return full_spectrum_sg(cfg.params.r, level, eigenfunctions)
    return dense_spectrum(assemble_operator(build_graph(cfg.params, level), cfg.bc))


def spectrum_rows(spec):
    rows = []
    for i, pair in enumerate(spec):
        g = pair.genealogy
        rows.append([i + 1, spec.level, format_float(pair.graph_eigenvalue),
                     format_float(pair.renormalized), pair.multiplicity,
                     g.birth_level if g else "", g.seed if g else "",
                     g.branch_string() if g else ""])
    return rows


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        return float(format_float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_table(path, header, rows, fmt):
    """Write rows as CSV, or as a JSON list of objects when ``fmt == 'json'``."""
    if fmt == "json":
        data = [{h: _json_value(v) for h, v in zip(header, row)} for row in rows]
        for item in data:
            for k, v in item.items():
                if isinstance(v, str):
                    try:
                        item[k] = float(v) if any(c in v for c in ".e") else int(v)
                    except ValueError:
                        pass
        with open(path, "w") as fh:
            json.dump(data, fh, indent=1, sort_keys=False)
            fh.write("\n")
        return path
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def emit_spectrum_csv(spectrum, path):
    return write_table(path, SPECTRUM_HEADER, spectrum_rows(spectrum), "csv")


def _path(cfg, name):
    ext = "json" if cfg.format == "json" else "csv"
    return os.path.join(cfg.out, f"{name}.{ext}")


def _svg(cfg, name):
    return os.path.join(cfg.out, f"{name}.svg")


def task_spectrum(cfg):
    spec = compute_spectrum(cfg, eigenfunctions=False)
    files = [write_table(_path(cfg, "spectrum"), SPECTRUM_HEADER, spectrum_rows(spec), cfg.format)]
    # level-by-level table: column m holds the renormalized level-m eigenvalues
    columns = [compute_spectrum(cfg, False, m).eigenvalues for m in range(1, cfg.level)]
    columns.append(spec.eigenvalues)
    header = ["n"] + [f"m={m}" for m in range(1, cfg.level + 1)]
    rows = []
    for n in range(len(columns[-1])):
        rows.append([n + 1] + [format_float(col[n]) if n < len(col) else "" for col in columns])
    files.append(write_table(_path(cfg, "table"), header, rows, cfg.format))
    if cfg.svg:
        files.append(emit_plot_svg({"x": np.arange(1, len(spec) + 1), "y": spec.eigenvalues},
                                   "scatter", _svg(cfg, "spectrum"), title="eigenvalues",
                                   xlabel="n", ylabel="lambda", logy=True))
    return files


def task_eigenfunctions(cfg):
    spec = compute_spectrum(cfg)
    graph = spec.graph
    k = len(spec) if cfg.count is None else min(cfg.count, len(spec))
    coords = graph.coords
    names = ["x"] if coords.shape[1] == 1 else ["x", "y"]
    header = ["vertex"] + names + [f"f{i + 1}" for i in range(k)]
    rows = [[v] + [format_float(c) for c in coords[v]]
            + [format_float(spec.eigenfunctions[v, i]) for i in range(k)]
            for v in range(graph.n_vertices)]
    files = [write_table(_path(cfg, "eigenfunctions"), header, rows, cfg.format)]
    vals = [[i + 1, format_float(spec.eigenvalues[i])] for i in range(k)]
    files.append(write_table(_path(cfg, "eigenvalues"), ["n", "renormalized_eigenvalue"], vals,
                             cfg.format))
    if cfg.svg:
        for i in range(min(k, 16)):
            if coords.shape[1] == 1:
                series = {"x": coords[:, 0], "y": spec.eigenfunctions[:, i]}
                files.append(emit_plot_svg(series, "line", _svg(cfg, f"eigenfunction_{i + 1}"),
                                           title=f"f{i + 1}", xlabel="x"))
            else:
                series = {"x": coords[:, 0], "y": coords[:, 1]}
                files.append(emit_plot_svg(series, "scatter", _svg(cfg, f"eigenfunction_{i + 1}"),
                                           title=f"f{i + 1} support"))
    return files


def task_counting(cfg):
    spec = compute_spectrum(cfg, eigenfunctions=False)
    v = spec.eigenvalues
    uniq = np.unique(v)
    counts = analysis.counting_function(v, uniq)
    rows = [[format_float(a), int(c)] for a, c in zip(uniq, counts)]
    files = [write_table(_path(cfg, "counting"), ["lambda", "N"], rows, cfg.format)]
    if cfg.svg:
        files.append(emit_plot_svg({"x": uniq, "y": counts}, "step", _svg(cfg, "counting"),
                                   title="counting function", xlabel="lambda", ylabel="N(lambda)",
                                   logx=True, logy=True))
    return files


def _alpha(cfg):
    if cfg.params is not None:
        return analysis.weyl_alpha(cfg.params)
    # hierarchical: cells per level over the mean log renormalization factor
    cells = 4.0 if cfg.model == INTERVAL else 9.0
    seq = cfg.hierarchical.sequence(cfg.level)
    logs = [np.log(make_params(cfg.model, v).renorm) for v in seq]
    return float(np.log(cells) / np.mean(logs))


def task_weyl(cfg):
    spec = compute_spectrum(cfg, eigenfunctions=False)
    alpha = _alpha(cfg)
    series = analysis.weyl_series(spec, alpha)
    rows = [[format_float(a), int(c), format_float(w)]
            for a, c, w in zip(series.grid, series.counts, series.weyl)]
    files = [write_table(_path(cfg, "weyl"), ["lambda", "N", "W"], rows, cfg.format)]
    summary = [["alpha", format_float(alpha)], ["slope", format_float(series.slope)],
               ["bound_ratio", format_float(series.bound_ratio())]]
    files.append(write_table(_path(cfg, "weyl_summary"), ["quantity", "value"], summary, cfg.format))
    if cfg.svg:
        files.append(emit_plot_svg({"x": series.grid, "y": series.weyl}, "line", _svg(cfg, "weyl"),
                                   title=f"Weyl ratio, alpha={alpha:.5f}", xlabel="lambda",
                                   ylabel="W", logx=True, logy=True))
    return files


def task_ratios(cfg):
    spec = compute_spectrum(cfg, eigenfunctions=False)
    rs = analysis.ratio_set(spec, cfg.window, cfg.bin_width, cfg.zero_tol)
    centers = 0.5 * (rs.bin_edges[:-1] + rs.bin_edges[1:])
    rows = [[format_float(c), int(h)] for c, h in zip(centers, rs.histogram) if h]
    files = [write_table(_path(cfg, "ratios"), ["value", "count"], rows, cfg.format)]
    if cfg.svg:
        occupied = rs.histogram > 0
        files.append(emit_plot_svg({"x": centers[occupied], "y": rs.histogram[occupied]}, "bar",
                                   _svg(cfg, "ratios"), title="eigenvalue ratios",
                                   xlabel="ratio", ylabel="count"))
    return files


def task_sturm(cfg):
    spec = compute_spectrum(cfg)
    prof = analysis.sturm_profile(spec)
    rows = [[i + 1, int(z), int(e)] for i, (z, e) in enumerate(zip(prof.zeros, prof.extrema))]
    files = [write_table(_path(cfg, "sturm"), ["index", "zeros", "extrema"], rows, cfg.format)]
    fails = prof.failures()
    summary = [["functions", len(rows)], ["failures", len(fails)],
               ["failed_indices", " ".join(str(i) for i in fails)]]
    files.append(write_table(_path(cfg, "sturm_summary"), ["quantity", "value"], summary,
                             cfg.format))
    if fails:
        raise NumericalError(f"oscillation rules fail for eigenfunctions {fails[:10]}")
    return files


def _basis(cfg):
    spec = compute_spectrum(cfg)
    return spacetime.orthonormal_basis(spec)


def _initial(cfg, basis):
    if cfg.delta_at is None:
        loc = [0.5] if cfg.model == INTERVAL else [0.5, 0.28867513459481287]
    else:
        try:
            loc = [float(v) for v in str(cfg.delta_at).split(",")]
        except ValueError as exc:
            raise UsageError(f"invalid --delta-at {cfg.delta_at!r}") from exc
    if len(loc) != basis.coords.shape[1]:
        raise UsageError(f"--delta-at needs {basis.coords.shape[1]} coordinate(s)")
    vertex = spacetime.nearest_vertex(basis, loc)
    return spacetime.delta(basis, vertex, cfg.delta_convention)


def _evolution(cfg, name, solver):
    basis = _basis(cfg)
    f = _initial(cfg, basis)
    values = solver(basis, f, np.array(cfg.times))
    coords = basis.coords
    names = ["x"] if coords.shape[1] == 1 else ["x", "y"]
    rows = []
    for t, row in zip(cfg.times, values):
        for k in range(len(row)):
            rows.append([format_float(t)] + [format_float(c) for c in coords[k]]
                        + [format_float(row[k])])
    files = [write_table(_path(cfg, name), ["t"] + names + ["value"], rows, cfg.format)]
    if cfg.svg:
        for i, (t, row) in enumerate(zip(cfg.times, values)):
            if coords.shape[1] == 1:
                series = {"x": coords[:, 0], "y": row}
                kind = "line"
            else:
                series = {"x": coords[:, 0], "y": row}
                kind = "scatter"
            files.append(emit_plot_svg(series, kind, _svg(cfg, f"{name}_{i}"),
                                       title=f"{name} t={t:g}", xlabel="x", ylabel="u"))
    return files


def task_heat(cfg):
    return _evolution(cfg, "heat", spacetime.heat_solution)


def task_wave(cfg):
    return _evolution(cfg, "wave", spacetime.wave_solution)


def task_limits(cfg, n_values=4):
    level = min(cfg.limit_level, cfg.depth - 1)
    spec = compute_spectrum(cfg, eigenfunctions=False, level=level)
    rows = []
    for i in range(min(n_values, len(spec))):
        g = spec.genealogies[i]
        if cfg.model == INTERVAL:
            from .interval_decimation import renormalized_limit
            res = renormalized_limit(cfg.params.p, g, cfg.depth)
            value, change = res.value, res.change
        else:
            from .sg_decimation import renormalized_limit_sg
            value, change = renormalized_limit_sg(cfg.params.r, g, cfg.depth)
        rows.append([i + 1, format_float(value), cfg.depth, format_float(change), g.seed,
                     g.branch_string()])
    header = ["n", "limit", "depth", "relative_change", "seed", "branches"]
    return [write_table(_path(cfg, "limits"), header, rows, cfg.format)]


HANDLERS = {
    "spectrum": task_spectrum, "eigenfunctions": task_eigenfunctions, "counting": task_counting,
    "weyl": task_weyl, "ratios": task_ratios, "sturm": task_sturm, "heat": task_heat,
    "wave": task_wave, "limits": task_limits,
}


def run(cfg):
    """Execute a validated :class:`RunConfig`; returns the written paths."""
    os.makedirs(cfg.out, exist_ok=True)
    return HANDLERS[cfg.task](cfg)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = RunConfig(resolve(argv))
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, ParameterError, PreconditionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        files = run(cfg)
    except (ParameterError, PreconditionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (FractalSpectraError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
