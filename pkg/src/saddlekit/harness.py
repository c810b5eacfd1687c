"""Seeded multi-start campaigns over the saddle dynamics.

Experiments mirror the benchmark protocols: perturbation studies around
reference stationary points, undifferentiated all-index pools, step-size
sweeps, Hartree-Fock bond scans, and catalog dumps. Every run draws its
randomness from numpy's default generator (PCG64) seeded with the row's own
integer seed, so results do not depend on worker count or completion order.

Rows are flushed to the output CSV as they complete and the file is
rewritten in canonical (cell, seed) order at the end, together with a JSON
document and the experiment's figures.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bundle import BundleState
from .dynamics import RunRecord, SolverConfig, solve
from .errors import InvalidInput
from .fcidump import parse_fcidump
from .linalg import qr_positive
from .manifolds import GrassmannProjector, Manifold, Stiefel
from .objectives import lep_grassmann_objective, lep_stiefel_objective, make_lep, rhf_objective
from .oracle import catalog_entry, enumerate_catalog, match_terminal
from .tolerances import MATCH_TOL

EXPERIMENTS = ("lep-perturb", "lep-all-index", "lep-sweep", "rhf-scan", "oracle-dump")

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "experiment",
    "cell",
    "seed",
    "k",
    "converged",
    "success",
    "failure",
    "iterations",
    "terminal_value",
    "classified_index",
    "degenerate",
    "matched_config",
    "residual",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one campaign."""

    experiment: str
    n: int = 10
    p: int = 2
    xi: float = 1.01
    instance_seed: int = 0
    fcidump: tuple[str, ...] = ()
    manifold: str = "grassmann"          # lep-perturb: grassmann | stiefel | both
    k: int | None = None                 # None: pool k = seed mod (dim + 1)
    eta_x: float = 25.0
    eta_plane: float | None = None
    maxit: int = 10_000
    tol: float = 1e-8
    retraction: str = "simple"
    variant: str = "projector"
    seed_start: int = 0
    seed_count: int = 100
    betas: tuple[float, ...] = (1e-3,)
    references: tuple[str, ...] = ("gm",)
    eta_grid: tuple[float, ...] = ()
    output: str | None = None
    threads: int = 1
    keep_records: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInput(f"unknown experiment {self.experiment!r}")
        if self.seed_count < 1:
            raise InvalidInput("seed range must be nonempty")
        if self.experiment in ("lep-perturb", "lep-sweep"):
            if any(not b > 0 for b in self.betas):
                raise InvalidInput("perturbation level beta must be positive")
        if self.manifold not in ("grassmann", "stiefel", "both"):
            raise InvalidInput(f"unknown manifold choice {self.manifold!r}")
        if self.threads < 1:
            raise InvalidInput("threads must be >= 1")

    def solver(self, k: int) -> SolverConfig:
        return SolverConfig(
            eta_x=self.eta_x,
            eta_plane=self.eta_plane,
            k=k,
            maxit=self.maxit,
            tol=self.tol,
            retraction=self.retraction,
            variant=self.variant,
        )

    @property
    def seeds(self) -> range:
        return range(self.seed_start, self.seed_start + self.seed_count)


@dataclass(frozen=True)
class CampaignRow:
    """One solver run (or one catalog entry for oracle-dump)."""

    experiment: str
    cell: str
    seed: int
    k: int
    converged: bool
    success: bool
    failure: str | None
    iterations: int
    terminal_value: float
    classified_index: int | None
    degenerate: int | None
    matched_config: tuple[int, ...] | None
    residual: float


@dataclass
class CampaignResult:
    experiment: str
    rows: list[CampaignRow]
    aggregates: dict
    config: ExperimentConfig
    elapsed_seconds: float
    records: list[RunRecord] | None = None

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg.pop("keep_records")
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "config": cfg,
            "rows": [
                {**asdict(r), "matched_config": list(r.matched_config) if r.matched_config else None}
                for r in self.rows
            ],
            "aggregates": self.aggregates,
            "elapsed_seconds": self.elapsed_seconds,
        }


# -- initialization ------------------------------------------------------------


def _plane_columns(manifold: Manifold, x, k: int, rng) -> list:
    """k tangent directions from independent symmetric Gaussian draws.

    On matrix manifolds each draw is a symmetric (n, n) Gaussian: Grassmann
    points project it directly, Stiefel frames take the lifted representative
    (Gamma X). Other manifolds project a plain ambient Gaussian. The plane is
    the orthonormalized span, so the non-orthonormal lift is harmless.
    """
    cols = []
    for _ in range(k):
        if isinstance(manifold, GrassmannProjector):
            g = rng.standard_normal((manifold.n, manifold.n))
            cols.append(manifold.project(x, 0.5 * (g + g.T)))
        elif isinstance(manifold, Stiefel):
            g = rng.standard_normal((manifold.n, manifold.n))
            cols.append(manifold.project(x, 0.5 * (g + g.T) @ x))
        else:
            cols.append(manifold.project(x, manifold.random_ambient(rng)))
    return cols


def init_random(manifold: Manifold, k: int, seed: int) -> BundleState:
    """Random bundle state: QR-of-Gaussian position, Gaussian k-plane."""
    rng = np.random.default_rng(seed)
    if isinstance(manifold, GrassmannProjector):
        q, _ = qr_positive(rng.standard_normal((manifold.n, manifold.p)))
        x = q @ q.T
        x = 0.5 * (x + x.T)
    elif isinstance(manifold, Stiefel):
        q, _ = qr_positive(rng.standard_normal((manifold.n, manifold.p)))
        x = q
    else:
        x = manifold.random_point(rng)
    return BundleState.from_columns(manifold, x, _plane_columns(manifold, x, k, rng))


def init_perturbed(
    manifold: Manifold, reference_frame: np.ndarray, beta: float, k: int, seed: int
) -> BundleState:
    """Perturbed start: QR(X_ref + beta Gaussian); plane drawn as init_random."""
    if not beta > 0:
        raise InvalidInput("beta must be positive")
    rng = np.random.default_rng(seed)
    q, _ = qr_positive(reference_frame + beta * rng.standard_normal(reference_frame.shape))
    if isinstance(manifold, GrassmannProjector):
        x = q @ q.T
        x = 0.5 * (x + x.T)
    elif isinstance(manifold, Stiefel):
        x = q
    else:
        raise InvalidInput(f"init_perturbed supports frame manifolds, not {manifold.name}")
    return BundleState.from_columns(manifold, x, _plane_columns(manifold, x, k, rng))


def reference_config(name: str, p: int) -> tuple[int, ...]:
    """'gm' or 'sp-index-m' to a 1-based eigenvalue configuration.

    The canonical index-m stationary point swaps the boundary pair:
    (1, ..., p-1, p+m), whose index is exactly m.
    """
    if name == "gm":
        return tuple(range(1, p + 1))
    if name.startswith("sp-index-"):
        m = int(name[len("sp-index-"):])
        if m < 0:
            raise InvalidInput(f"negative index in reference {name!r}")
        return tuple(range(1, p)) + (p + m,)
    raise InvalidInput(f"unknown reference {name!r} (use gm or sp-index-m)")


# -- campaign machinery --------------------------------------------------------


def _terminal_projector(manifold: Manifold, x: np.ndarray) -> np.ndarray:
    if isinstance(manifold, GrassmannProjector):
        return x
    return x @ x.T


def _run_lep_perturb(config: ExperimentConfig):
    spec = make_lep(config.n, config.p, config.xi, config.instance_seed)
    k = 1 if config.k is None else config.k
    target = catalog_entry(spec, reference_config(f"sp-index-{k}", config.p))
    manifolds = (
        ("grassmann", "stiefel") if config.manifold == "both" else (config.manifold,)
    )
    cells = []
    for mname in manifolds:
        for ref in config.references:
            for beta in config.betas:
                cells.append((f"{mname}/{ref}/beta={beta:g}", (mname, ref, beta)))

    entries = {ref: catalog_entry(spec, reference_config(ref, config.p)) for ref in config.references}

    def run(cell_label, cell, seed):
        mname, ref, beta = cell
        if mname == "grassmann":
            man = GrassmannProjector(config.n, config.p)
            obj = lep_grassmann_objective(spec)
        else:
            man = Stiefel(config.n, config.p)
            obj = lep_stiefel_objective(spec)
        state0 = init_perturbed(man, entries[ref].frame, beta, k, seed)
        rec = solve(obj, state0, config.solver(k))
        dist = float(np.linalg.norm(_terminal_projector(man, rec.state.x) - target.projector))
        matched = rec.converged and dist <= MATCH_TOL
        row = CampaignRow(
            experiment=config.experiment,
            cell=cell_label,
            seed=seed,
            k=k,
            converged=rec.converged,
            success=matched,
            failure=rec.failure,
            iterations=rec.iterations,
            terminal_value=rec.value,
            classified_index=target.index if matched else None,
            degenerate=None,
            matched_config=target.config if matched else None,
            residual=float(max(rec.r_x[-1], rec.r_plane[-1])),
        )
        return row, rec

    return cells, run


def _run_lep_all_index(config: ExperimentConfig):
    spec = make_lep(config.n, config.p, config.xi, config.instance_seed)
    catalog = enumerate_catalog(spec)
    man = GrassmannProjector(config.n, config.p)
    obj = lep_grassmann_objective(spec)
    pool = man.dim + 1
    cells = [("pool", None)]

    def run(cell_label, cell, seed):
        k = (seed % pool) if config.k is None else config.k
        state0 = init_random(man, k, seed)
        rec = solve(obj, state0, config.solver(k))
        entry = None
        failure = rec.failure
        if rec.converged:
            entry = match_terminal(catalog, rec.state.x)
        row = CampaignRow(
            experiment=config.experiment,
            cell=cell_label,
            seed=seed,
            k=k,
            converged=rec.converged,
            success=entry is not None,
            failure=failure,
            iterations=rec.iterations,
            terminal_value=rec.value,
            classified_index=entry.index if entry else None,
            degenerate=None,
            matched_config=entry.config if entry else None,
            residual=float(max(rec.r_x[-1], rec.r_plane[-1])),
        )
        return row, rec

    return cells, run


def _run_lep_sweep(config: ExperimentConfig):
    spec = make_lep(config.n, config.p, config.xi, config.instance_seed)
    k = 1 if config.k is None else config.k
    ref = config.references[0]
    beta = config.betas[0]
    ref_entry = catalog_entry(spec, reference_config(ref, config.p))
    target = catalog_entry(spec, reference_config(f"sp-index-{k}", config.p))
    grid = config.eta_grid if config.eta_grid else tuple(float(v) for v in range(10, 31, 2))
    man = GrassmannProjector(config.n, config.p)
    obj = lep_grassmann_objective(spec)
    cells = [
        (f"eta_x={ex:g}/eta_plane={ep:g}", (ex, ep)) for ex in grid for ep in grid
    ]

    def run(cell_label, cell, seed):
        ex, ep = cell
        state0 = init_perturbed(man, ref_entry.frame, beta, k, seed)
        solver = replace(config.solver(k), eta_x=ex, eta_plane=ep)
        rec = solve(obj, state0, solver)
        dist = float(np.linalg.norm(rec.state.x - target.projector))
        matched = rec.converged and dist <= MATCH_TOL
        row = CampaignRow(
            experiment=config.experiment,
            cell=cell_label,
            seed=seed,
            k=k,
            converged=rec.converged,
            success=matched,
            failure=rec.failure,
            iterations=rec.iterations,
            terminal_value=rec.value,
            classified_index=target.index if matched else None,
            degenerate=None,
            matched_config=target.config if matched else None,
            residual=float(max(rec.r_x[-1], rec.r_plane[-1])),
        )
        return row, rec

    return cells, run


def _run_rhf_scan(config: ExperimentConfig):
    if not config.fcidump:
        raise InvalidInput("rhf-scan needs at least one FCIDUMP path")
    problems = []
    for path in config.fcidump:
        data = parse_fcidump(path)
        rhf = rhf_objective(data)
        man = GrassmannProjector(rhf.norb, rhf.n_occ)
        problems.append((Path(path).stem, man, rhf.objective, man.dim))
    cells = [(stem, i) for i, (stem, _, _, _) in enumerate(problems)]

    def run(cell_label, cell, seed):
        _, man, obj, dim = problems[cell]
        k = (seed % (dim + 1)) if config.k is None else config.k
        state0 = init_random(man, k, seed)
        rec = solve(obj, state0, config.solver(k), classify_terminal=True)
        row = CampaignRow(
            experiment=config.experiment,
            cell=cell_label,
            seed=seed,
            k=k,
            converged=rec.converged,
            success=rec.converged,
            failure=rec.failure,
            iterations=rec.iterations,
            terminal_value=rec.value,
            classified_index=rec.index,
            degenerate=rec.degenerate,
            matched_config=None,
            residual=float(max(rec.r_x[-1], rec.r_plane[-1])),
        )
        return row, rec

    return cells, run


def _run_oracle_dump(config: ExperimentConfig):
    spec = make_lep(config.n, config.p, config.xi, config.instance_seed)
    catalog = enumerate_catalog(spec)
    rows = []
    for i, entry in enumerate(catalog.entries):
        rows.append(
            CampaignRow(
                experiment=config.experiment,
                cell="catalog",
                seed=i,
                k=entry.index,
                converged=True,
                success=True,
                failure=None,
                iterations=0,
                terminal_value=entry.value,
                classified_index=entry.index,
                degenerate=None,
                matched_config=entry.config,
                residual=0.0,
            )
        )
    return rows


def _aggregate(rows: list[CampaignRow]) -> dict:
    cells: dict[str, dict] = {}
    for row in rows:
        agg = cells.setdefault(
            row.cell,
            {"runs": 0, "converged": 0, "successes": 0, "_iters": []},
        )
        agg["runs"] += 1
        agg["converged"] += int(row.converged)
        agg["successes"] += int(row.success)
        if row.success:
            agg["_iters"].append(row.iterations)
    for agg in cells.values():
        iters = agg.pop("_iters")
        agg["success_rate"] = agg["successes"] / agg["runs"]
        agg["mean_iterations"] = float(np.mean(iters)) if iters else None
    return cells


def run_campaign(config: ExperimentConfig) -> CampaignResult:
    """Execute a campaign; failed runs become rows, never exceptions."""
    t0 = time.time()
    if config.experiment == "oracle-dump":
        rows = _run_oracle_dump(config)
        result = CampaignResult(
            experiment=config.experiment,
            rows=rows,
            aggregates=_aggregate(rows),
            config=config,
            elapsed_seconds=time.time() - t0,
        )
        if config.output is not None:
            emit(result, "csv", _out_path(config, "csv"))
            emit(result, "json", _out_path(config, "json"))
            _render(result)
        return result

    builders = {
        "lep-perturb": _run_lep_perturb,
        "lep-all-index": _run_lep_all_index,
        "lep-sweep": _run_lep_sweep,
        "rhf-scan": _run_rhf_scan,
    }
    cells, run = builders[config.experiment](config)
    jobs = [
        (order, label, cell, seed)
        for order, (label, cell) in enumerate(cells)
        for seed in config.seeds
    ]

    stream = None
    if config.output is not None:
        out = _out_path(config, "csv")
        out.parent.mkdir(parents=True, exist_ok=True)
        stream = open(out, "w")
        stream.write(",".join(CSV_COLUMNS) + "\n")

    def job(args):
        order, label, cell, seed = args
        row, rec = run(label, cell, seed)
        return order, row, rec

    keyed: dict[tuple[int, int], tuple[CampaignRow, RunRecord]] = {}
    try:
        if config.threads == 1:
            it = map(job, jobs)
            for order, row, rec in it:
                keyed[(order, row.seed)] = (row, rec)
                if stream is not None:
                    stream.write(_csv_line(row))
                    stream.flush()
        else:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                for order, row, rec in pool.map(job, jobs):
                    keyed[(order, row.seed)] = (row, rec)
                    if stream is not None:
                        stream.write(_csv_line(row))
                        stream.flush()
    finally:
        if stream is not None:
            stream.close()

    ordered = [keyed[key] for key in sorted(keyed)]
    rows = [row for row, _ in ordered]
    records = [rec for _, rec in ordered] if config.keep_records else None
    result = CampaignResult(
        experiment=config.experiment,
        rows=rows,
        aggregates=_aggregate(rows),
        config=config,
        elapsed_seconds=time.time() - t0,
        records=records,
    )
    if config.output is not None:
        emit(result, "csv", _out_path(config, "csv"))
        emit(result, "json", _out_path(config, "json"))
        _render(result)
    return result


# -- emission ------------------------------------------------------------------


def _out_path(config: ExperimentConfig, ext: str) -> Path:
    return Path(config.output) / f"{config.experiment}.{ext}"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, tuple):
        return "-".join(str(v) for v in value)
    return str(value)


def _csv_line(row: CampaignRow) -> str:
    d = asdict(row)
    return ",".join(_fmt(d[c]) for c in CSV_COLUMNS) + "\n"


def emit(result: CampaignResult, format: str, path) -> None:
    """Write a campaign as CSV rows or a schema-versioned JSON document."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if format == "csv":
            with open(path, "w") as fh:
                fh.write(",".join(CSV_COLUMNS) + "\n")
                for row in result.rows:
                    fh.write(_csv_line(row))
        elif format == "json":
            with open(path, "w") as fh:
                json.dump(result.to_dict(), fh, indent=1)
                fh.write("\n")
        else:
            raise InvalidInput(f"unknown emit format {format!r}")
    except OSError as exc:
        raise OSError(f"cannot write campaign output to {path}: {exc}") from exc


def load_json(path) -> CampaignResult:
    """Rebuild a CampaignResult from an emitted JSON document."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InvalidInput(f"unsupported schema version {doc.get('schema_version')}")
    cfg = doc["config"]
    for key in ("fcidump", "betas", "references", "eta_grid"):
        cfg[key] = tuple(cfg[key])
    rows = []
    for r in doc["rows"]:
        r = dict(r)
        mc = r.pop("matched_config")
        rows.append(CampaignRow(matched_config=tuple(mc) if mc else None, **r))
    return CampaignResult(
        experiment=doc["experiment"],
        rows=rows,
        aggregates=doc["aggregates"],
        config=ExperimentConfig(**cfg),
        elapsed_seconds=doc["elapsed_seconds"],
    )


def _render(result: CampaignResult) -> None:
    from .plots import render_campaign_figures

    render_campaign_figures(result, Path(result.config.output))
