"""Security-vs-accuracy sweeps.

A sweep is a grid of cells ``(scheme params, straggler count, delta)``.
Each cell calibrates the mask variance for its leakage budget and runs
independent trials on fresh Gaussian inputs.

Seeding: trial ``j`` draws its inputs from ``(seed, j)``, so every cell
sees the same input matrices for the same trial index; the job itself
(masks, stragglers, latencies) is seeded with ``(seed, cell_id, j)``.
Results therefore do not depend on execution order or thread count.
"""

import csv
import json
import math
import os
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .codec import params_from_dict
from .runtime import InProcessCluster, StragglerModel, WorkerConfig, run_job
from .security import calibrate, input_entropy_bits

CSV_COLUMNS = [
    "scheme",
    "p_or_mn",
    "X",
    "N",
    "stragglers",
    "delta_bits",
    "delta_relative",
    "sigma2",
    "trials",
    "mean_err",
    "median_err",
    "std_err",
    "mean_cond",
]

NORMALIZATION = (
    "delta_relative = delta_bits / (sum over all t*s + s*r input entries of the "
    "differential entropy, in bits, of the declared Gaussian input distribution)"
)

SeriesPoint = namedtuple("SeriesPoint", "delta mean_err stderr delta_bits")


@dataclass
class ExperimentConfig:
    """Sweep description; mirrors the ``sweep.json`` schema.

    ``schemes`` entries are ``{"scheme": "matdot", "p": .., "x": .., "n_servers": ..}``
    or ``{"scheme": "gasp", "m": .., "n": .., "x": .., "n_servers": ..}``.
    ``n_servers`` may be ``"auto"``, meaning the recovery threshold plus the
    cell's straggler count.
    """

    schemes: list
    delta_relative: list
    dims: tuple = (36, 36, 36)
    trials: int = 1000
    stragglers: list = field(default_factory=lambda: [0])
    seed: int = 0
    input_kind: str = "real"
    input_sigma2: float = 1.0
    strategy: str = "auto"
    per_trial: bool = False
    jitter: float = 1.0
    threads: int = None

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.delta_relative or any(not d > 0 for d in self.delta_relative):
            raise ValueError("delta_relative must be a non-empty list of positive values")
        if self.input_kind not in ("real", "complex"):
            raise ValueError(f"input_kind must be 'real' or 'complex', got {self.input_kind!r}")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        for spec in self.schemes:
            for count in self.stragglers:
                params_for(spec, count).split(
                    np.zeros(self.dims[:2]), np.zeros(self.dims[1:])
                )

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        grid = d.pop("delta_grid", None)
        if grid is not None:
            d["delta_relative"] = list(
                np.logspace(math.log10(grid["start"]), math.log10(grid["stop"]), int(grid["num"]))
            )
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @property
    def complex_inputs(self):
        return self.input_kind == "complex"


def params_for(spec, straggler_count):
    spec = dict(spec)
    if spec.get("n_servers", "auto") == "auto":
        probe = params_from_dict({**spec, "n_servers": 10**9})
        spec["n_servers"] = probe.threshold + straggler_count
    return params_from_dict(spec)


@dataclass
class CellResult:
    cell_id: int
    scheme: str
    params: dict
    p_or_mn: int
    X: int
    N: int
    stragglers: int
    delta_bits: float
    delta_relative: float
    sigma2: float
    trials: int
    mean_err: float
    median_err: float
    std_err: float
    mean_cond: float
    worst_set: tuple = ()
    records: list = field(default_factory=list, repr=False)

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class SweepTable:
    cells: list
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)


def draw_inputs(dims, rng, kind="real", variance=1.0):
    t, s, r = dims
    scale = math.sqrt(variance)
    if kind == "complex":
        scale = math.sqrt(variance / 2)
        a = (rng.standard_normal((t, s)) + 1j * rng.standard_normal((t, s))) * scale
        b = (rng.standard_normal((s, r)) + 1j * rng.standard_normal((s, r))) * scale
        return a, b
    return rng.standard_normal((t, s)) * scale, rng.standard_normal((s, r)) * scale


def _thread_count(config):
    if config.threads:
        return int(config.threads)
    env = os.environ.get("SDMM_THREADS")
    return int(env) if env else 1


def run_sweep(config, progress=None):
    """Run every cell of ``config``; returns a :class:`SweepTable`."""
    entropy = input_entropy_bits(
        config.dims, config.input_sigma2, config.input_sigma2, config.complex_inputs
    )
    cells = []
    cell_id = 0
    with ThreadPoolExecutor(max_workers=_thread_count(config)) as pool:
        for spec in config.schemes:
            for count in config.stragglers:
                params = params_for(spec, count)
                for rel in config.delta_relative:
                    cells.append(
                        _run_cell(pool, config, cell_id, params, count, float(rel), entropy)
                    )
                    if progress:
                        progress(cells[-1])
                    cell_id += 1
    metadata = {
        "dims": list(config.dims),
        "seed": config.seed,
        "input_kind": config.input_kind,
        "input_sigma2": config.input_sigma2,
        "input_entropy_bits": entropy,
        "normalization": NORMALIZATION,
        "error": "Frobenius norm of (decoded product - matmul oracle)",
    }
    return SweepTable(cells, metadata)


def _one_trial(config, cell_id, trial, params, noise, stragglers):
    a, b = draw_inputs(
        config.dims,
        np.random.default_rng([config.seed, trial]),
        config.input_kind,
        config.input_sigma2,
    )
    cluster = InProcessCluster(
        [WorkerConfig(i, jitter=config.jitter) for i in range(1, params.n_servers + 1)],
        keep_matrices=False,
    )
    _, record = run_job(a, b, params, noise, stragglers, [config.seed, cell_id, trial], cluster)
    record.cell_id = cell_id
    record.trial = trial
    return record


def _run_cell(pool, config, cell_id, params, count, rel, entropy):
    delta_bits = rel * entropy
    noise, report = calibrate(
        delta_bits,
        config.dims,
        params,
        input_sigma2_a=config.input_sigma2,
        input_sigma2_b=config.input_sigma2,
        strategy=config.strategy,
    )
    stragglers = StragglerModel(count)
    records = list(
        pool.map(
            lambda j: _one_trial(config, cell_id, j, params, noise, stragglers),
            range(config.trials),
        )
    )
    records.sort(key=lambda rec: rec.trial)
    errs = np.array([rec.abs_error for rec in records])
    conds = np.array([rec.condition for rec in records])
    return CellResult(
        cell_id=cell_id,
        scheme=params.scheme,
        params=params.describe(),
        p_or_mn=params.data_terms,
        X=params.x,
        N=params.n_servers,
        stragglers=count,
        delta_bits=delta_bits,
        delta_relative=rel,
        sigma2=noise.sigma2,
        trials=len(records),
        mean_err=float(errs.mean()),
        median_err=float(np.median(errs)),
        std_err=float(errs.std(ddof=1)) if len(errs) > 1 else 0.0,
        mean_cond=float(conds.mean()),
        worst_set=tuple(report.worst_set),
        records=records if config.per_trial else [],
    )


def select_cells(table, **selector):
    cells = table.cells if isinstance(table, SweepTable) else list(table)
    out = []
    for cell in cells:
        if all(_cell_value(cell, k) == v for k, v in selector.items()):
            out.append(cell)
    return out


def _cell_value(cell, key):
    if isinstance(cell, dict):
        return cell[key]
    return getattr(cell, key)


def mean_error_vs_delta(table, **selector):
    """Sorted ``(delta, mean_err, stderr, delta_bits)`` points of the matching cells.

    ``delta`` is the relative leakage. Raises ``KeyError`` if nothing matches.
    """
    cells = select_cells(table, **selector)
    if not cells:
        raise KeyError(f"no cells match {selector}")
    points = []
    for c in cells:
        n = int(_cell_value(c, "trials"))
        std = float(_cell_value(c, "std_err"))
        points.append(
            SeriesPoint(
                float(_cell_value(c, "delta_relative")),
                float(_cell_value(c, "mean_err")),
                std / math.sqrt(n),
                float(_cell_value(c, "delta_bits")),
            )
        )
    points.sort()
    deltas = [p.delta for p in points]
    if len(set(deltas)) != len(deltas):
        raise ValueError(f"selector {selector} matches several cells per delta")
    return points


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def emit_csv(table, path):
    """One row per cell; floats written with 17 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for cell in table:
                w.writerow([_fmt(v) for v in cell.row()])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_trials_csv(table, path):
    cols = ["cell_id", "trial", "sigma2", "abs_error", "rel_error", "condition", "stragglers", "used"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for cell in table:
            for rec in cell.records:
                w.writerow(
                    [
                        rec.cell_id,
                        rec.trial,
                        _fmt(rec.sigma2),
                        _fmt(rec.abs_error),
                        _fmt(rec.rel_error),
                        _fmt(rec.condition),
                        " ".join(map(str, rec.straggler_set)),
                        " ".join(map(str, rec.used_set)),
                    ]
                )


def emit_json(table, path, per_trial=None):
    """JSON mirror of the CSV plus metadata; per-trial arrays when requested."""
    docs = []
    for cell in table:
        d = {k: v for k, v in asdict(cell).items() if k != "records"}
        d["worst_set"] = list(cell.worst_set)
        want = per_trial if per_trial is not None else bool(cell.records)
        if want:
            d["trial_abs_error"] = [r.abs_error for r in cell.records]
            d["trial_rel_error"] = [r.rel_error for r in cell.records]
            d["trial_condition"] = [r.condition for r in cell.records]
            d["trial_stragglers"] = [list(r.straggler_set) for r in cell.records]
        docs.append(d)
    meta = table.metadata if isinstance(table, SweepTable) else {}
    try:
        with open(path, "w") as fh:
            json.dump({"metadata": meta, "cells": docs}, fh, indent=2)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Parse a cells CSV back into dicts with numeric fields restored."""
    ints = {"p_or_mn", "X", "N", "stragglers", "trials"}
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    k: (v if k == "scheme" else int(v) if k in ints else float(v))
                    for k, v in row.items()
                }
            )
    return rows


def figure_data(rows, figure):
    """Group cell rows into the series of figure 1 (collusion) or 2 (stragglers)."""
    series = {}
    for row in rows:
        if figure == 1:
            if row["stragglers"] != 0:
                continue
            label = f"{row['scheme']} p_or_mn={row['p_or_mn']} X={row['X']}"
        elif figure == 2:
            label = f"{row['scheme']} p_or_mn={row['p_or_mn']} X={row['X']} stragglers={row['stragglers']}"
        else:
            raise ValueError(f"figure must be 1 or 2, got {figure}")
        series.setdefault(label, []).append(
            (row["delta_relative"], row["mean_err"], row["std_err"] / math.sqrt(row["trials"]))
        )
    return {k: sorted(v) for k, v in sorted(series.items())}


GNUPLOT_TEMPLATE = """\
# gnuplot script: relative leaked information vs mean Frobenius error
set datafile separator ","
set logscale xy
set xlabel "relative leaked information"
set ylabel "mean Frobenius error"
set key outside right
set terminal pngcairo size 900,600
set output "{png}"
plot {plots}
"""


def emit_figure(rows, figure, out_dir):
    """Write ``figureN.csv`` and ``figureN.gp``; returns both paths."""
    data = figure_data(rows, figure)
    csv_path = os.path.join(out_dir, f"figure{figure}.csv")
    gp_path = os.path.join(out_dir, f"figure{figure}.gp")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["series", "delta_relative", "mean_err", "stderr"])
        for label, pts in data.items():
            for d, m, se in pts:
                w.writerow([label, _fmt(d), _fmt(m), _fmt(se)])
    plots = ", \\\n     ".join(
        f"\"< grep '^{label},' {os.path.basename(csv_path)}\" using 2:3 with linespoints title \"{label}\""
        for label in data
    )
    with open(gp_path, "w") as fh:
        fh.write(GNUPLOT_TEMPLATE.format(png=f"figure{figure}.png", plots=plots or "NaN notitle"))
    return csv_path, gp_path
