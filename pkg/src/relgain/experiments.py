"""Run orchestration: family sweeps, conservation audits and refinement tables.

Each ``run_*`` function writes its tables plus one ``manifest.json`` into the
output directory and returns a :class:`RunResult` whose ``exit_code`` follows
the CLI contract (0 ok, 2 check breach, 3 invalid configuration, 4 non-finite
output).
"""
from __future__ import annotations

import csv
import json
import math
import os
import platform
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import selftest
from .collision import collision_field, conservation_moments, entropy_production, gain_at, loss_at
from .config import ConfigError, ExperimentConfig, build_distribution, build_family, config_hash, \
    theorem_cases
from .distributions import Gaussian, PowerLaw
from .quadrature import MomentumGrid, build_sphere_quadrature, integrate_grid, sample_on_grid
from .spectral import gradient_l2_fd, phase_sphere_integral, phase_vector
from .verification import DEFAULT_ENVELOPES, EnvelopeTable, relative_tail, settings_hash, \
    verify_cases

EXIT_OK = 0
EXIT_BREACH = 2
EXIT_INVALID = 3
EXIT_NONFINITE = 4

VERIFY_COLUMNS = ["family_param", "lhs", "rhs_f", "rhs_h", "ratio", "grid_N", "R", "mode_cutoff",
                  "tail_flag"]
CONSERVE_COLUMNS = ["moment_name", "residual", "normalizer", "relative"]
PROBE_COLUMNS = ["px", "py", "pz", "gain", "loss", "collision"]
CONVERGE_COLUMNS = ["quantity", "level", "N", "h", "value", "error", "observed_order"]
SELFTEST_COLUMNS = ["check", "samples", "violations", "max_error", "tolerance"]


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    files: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    data: dict = field(default_factory=dict)


class _Stages:
    def __init__(self):
        self.timings = {}

    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0


def _finite(rows):
    for row in rows:
        for v in row.values():
            if isinstance(v, (float, np.floating)) and not math.isfinite(v):
                return False
    return True


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class _Run:
    """Shared bookkeeping: output directory, timings, manifest."""

    def __init__(self, command, cfg: ExperimentConfig, out_dir=None, seed=None, threads=None):
        self.command = command
        self.cfg = cfg
        self.out = Path(out_dir or cfg.outputs.directory)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.threads = threads
        self.stages = _Stages()
        self.t0 = time.perf_counter()
        self.started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.files = []
        self.tails = {}
        self.extra = {}
        self.messages = []

    def table(self, stem, columns, rows, records=None):
        if "csv" in self.cfg.outputs.formats:
            path = self.out / f"{stem}.csv"
            write_csv(path, columns, rows)
            self.files.append(path.name)
        if "json" in self.cfg.outputs.formats:
            path = self.out / f"{stem}.json"
            path.write_text(json.dumps(_jsonable(records if records is not None else rows), indent=2,
                                       sort_keys=True) + "\n")
            self.files.append(path.name)

    def finish(self, exit_code, data=None):
        manifest = {
            "command": self.command,
            "config_hash": config_hash(self.cfg),
            "tool_version": tool_version(),
            "python": platform.python_version(),
            "started": self.started,
            "wall_clock_s": time.perf_counter() - self.t0,
            "stage_timings_s": self.stages.timings,
            "tail_mass_flags": self.tails,
            "seed": self.seed,
            "threads": self.threads,
            "exit_code": exit_code,
            "outputs": list(self.files),
            **self.extra,
        }
        (self.out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2,
                                                           sort_keys=True) + "\n")
        return RunResult(exit_code, self.out, list(self.files), manifest, self.messages, data or {})


def _record_tail(run, label, dist, R):
    t = relative_tail(dist, R)
    run.tails[label] = {"relative_tail_mass": t, "flag": bool(t > 1e-4)}


# ------------------------------------------------------------------- verify

def _is_informational(family):
    return any(isinstance(m.f, PowerLaw) or isinstance(m.h, PowerLaw) for m in family.members)


def run_verify(cfg: ExperimentConfig, out_dir=None, seed=None, threads=None, envelopes=None,
               freeze=False) -> RunResult:
    cases = theorem_cases(cfg)
    if not cases:
        raise ConfigError(["case: verify needs at least one theorem case"])
    run = _Run("verify", cfg, out_dir, seed, threads)
    grid = MomentumGrid(cfg.grid.R, cfg.grid.N)
    family = build_family(cfg)
    reports = []
    with run.stages("sweep"):
        for member in family.members:
            reports += verify_cases(member.f, member.h, cases, grid, cfg.kernel.amplitude,
                                    cfg.spectral.stride, cfg.spectral.kmax, family.name,
                                    member.param)
            run.tails[f"{family.name}={member.param:g}"] = {
                "relative_tail_mass_f": reports[-1].tail_f,
                "relative_tail_mass_h": reports[-1].tail_h,
                "flag": reports[-1].tail_flag,
            }
    swept = not all(math.isnan(m.param) for m in family.members)
    by_case = {}
    for r in reports:
        row = r.as_row()
        if not swept:
            row["family_param"] = ""
        by_case.setdefault(r.case.label, []).append((row, r.as_dict()))
    if not _finite([row for rows in by_case.values() for row, _ in rows]):
        run.messages.append("non-finite value in verification output; nothing written")
        return run.finish(EXIT_NONFINITE, {"reports": reports})
    with run.stages("write"):
        for label, rows in by_case.items():
            run.table(f"verify_{label}", VERIFY_COLUMNS, [r for r, _ in rows], [d for _, d in rows])

    settings = settings_hash({
        "R": grid.R, "N": grid.N, "stride": cfg.spectral.stride, "kmax": reports[0].mode_cutoff,
        "amplitude": cfg.kernel.amplitude, "family": family.name,
        "members": [m.param for m in family.members],
    })
    path = Path(envelopes or cfg.envelopes.path or DEFAULT_ENVELOPES)
    table = EnvelopeTable.load(path)
    code = EXIT_OK
    informational = _is_informational(family)
    if freeze:
        table.freeze(reports, settings)
        table.save(path)
        run.messages.append(f"froze envelopes into {path}")
    elif not informational:
        breaches = table.breaches(reports, cfg.envelopes.slack)
        for fam, case, peak, env in breaches:
            run.messages.append(f"envelope breach: {fam} {case} ratio {peak:.6g} > "
                                f"{cfg.envelopes.slack:g} x {env:.6g}")
        if breaches:
            code = EXIT_BREACH
    missing = sorted({r.case.label for r in reports if table.get(family.name, r.case.label) is None})
    stale = sorted({r.case.label for r in reports
                    if (rec := table.get(family.name, r.case.label)) is not None and rec.settings != settings})
    if stale and not freeze:
        run.messages.append("envelopes frozen under different grid settings for: " + ", ".join(stale))
    run.extra.update({"envelope_file": str(path), "settings_hash": settings,
                      "envelope_informational": informational, "envelopes_missing": missing,
                      "envelopes_other_settings": stale})
    return run.finish(code, {"reports": reports})


# ------------------------------------------------------------------ conserve

def probe_points(cfg: ExperimentConfig, seed=None):
    n = cfg.probes.count
    reach = 0.5 * cfg.grid.R
    if cfg.probes.placement == "axis":
        pts = np.zeros((n, 3))
        pts[:, 0] = np.linspace(0.0, reach, n)
        return pts
    rng = np.random.default_rng(cfg.probes.seed if seed is None else seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return v * (reach * rng.random(n) ** (1.0 / 3.0))[:, None]


def run_conservation(cfg: ExperimentConfig, out_dir=None, seed=None, threads=None) -> RunResult:
    fspec = cfg.distributions[0]
    if fspec.swept():
        raise ConfigError(["distributions[0]: conserve takes a single distribution, not a sweep"])
    f = build_distribution(fspec)
    if f.is_zero:
        raise ConfigError(["distributions[0]: conserve needs a nonzero distribution"])
    if cfg.kernel.a is None:
        raise ConfigError(["kernel.a: conserve needs a kernel exponent"])
    run = _Run("conserve", cfg, out_dir, seed, threads)
    kernel = cfg.kernel.build()
    grid = MomentumGrid(cfg.grid.R, cfg.grid.N)
    sphere = build_sphere_quadrature(cfg.sphere.n_polar, cfg.sphere.n_azimuth)
    _record_tail(run, "f", f, grid.R)
    with run.stages("collision_field"):
        fld = collision_field(f, kernel, grid, sphere)
    with run.stages("moments"):
        mom = conservation_moments(f, kernel, grid, sphere, field=fld)
        ent = entropy_production(f, kernel, grid, sphere, field=fld)
    rows = [{"moment_name": n, "residual": r, "normalizer": z, "relative": q}
            for n, r, z, q in zip(mom.names, mom.residual, mom.normalizer, mom.relative)]
    rows.append({"moment_name": "entropy_production", "residual": ent.value,
                 "normalizer": ent.normalizer, "relative": ent.relative})
    with run.stages("probes"):
        pts = probe_points(cfg, seed)
        gain = np.atleast_1d(gain_at(f, f, kernel, pts, grid, sphere))
        loss = np.atleast_1d(loss_at(f, f, kernel, pts, grid, sphere))
    prow = [{"px": p[0], "py": p[1], "pz": p[2], "gain": gp, "loss": lp, "collision": gp - lp}
            for p, gp, lp in zip(pts, gain, loss)]
    run.extra["entropy_floored_nodes"] = ent.floored_nodes
    if not _finite(rows + prow):
        run.messages.append("non-finite value in conservation output; nothing written")
        return run.finish(EXIT_NONFINITE)
    run.table("conserve", CONSERVE_COLUMNS, rows)
    run.table("probes", PROBE_COLUMNS, prow)
    return run.finish(EXIT_OK, {"moments": mom, "entropy": ent, "rows": rows})


# ------------------------------------------------------------------ converge

def estimated_cost(cfg: ExperimentConfig, levels):
    n_fine = cfg.grid.N * 2 ** (levels - 1)
    q = cfg.convergence.quantity
    if q == "gain_probe":
        return float(n_fine**3 * cfg.sphere.n_polar * cfg.sphere.n_azimuth)
    if q == "sphere_phase":
        p = 4 * 2 ** (levels - 1)
        return float(64 * p * 2 * p)
    return float(n_fine**3)


def _orders(errors):
    out = [""]
    for e0, e1 in zip(errors[:-1], errors[1:]):
        out.append(math.log2(e0 / e1) if e0 > 0 and e1 > 0 else "")
    return out


def _converge_rows(cfg: ExperimentConfig, levels):
    q = cfg.convergence.quantity
    R, N0 = cfg.grid.R, cfg.grid.N
    rows = []
    if q == "sphere_phase":
        rng = np.random.default_rng(0)
        p = rng.normal(size=(64, 3))
        qv = rng.normal(size=(64, 3))
        k = rng.normal(size=(64, 3))
        A = phase_vector(p, qv, k)
        exact = phase_sphere_integral(p, qv, k).real
        for lvl in range(levels):
            npol = 4 * 2**lvl
            rule = build_sphere_quadrature(npol, 2 * npol)
            approx = np.exp(-1j * (A @ rule.nodes.T)) @ rule.weights
            err = float(np.max(np.abs(approx - exact)))
            rows.append({"quantity": q, "level": lvl, "N": npol, "h": math.pi / npol,
                         "value": float(approx[0].real), "error": err})
    else:
        values, hs, Ns = [], [], []
        f = None
        if q == "gain_probe":
            fspec = cfg.distributions[0]
            f = build_distribution(fspec, {fspec.swept()[0][0]: fspec.swept()[0][1][0]}
                                   if fspec.swept() else None)
            kernel = cfg.kernel.build()
            sphere = build_sphere_quadrature(cfg.sphere.n_polar, cfg.sphere.n_azimuth)
        for lvl in range(levels):
            grid = MomentumGrid(R, N0 * 2**lvl)
            if q == "gaussian_mass":
                v = integrate_grid(sample_on_grid(Gaussian(), grid))
            elif q == "gradient_fd":
                u = sample_on_grid(Gaussian(), grid)
                v = gradient_l2_fd(u)
            else:
                v = float(gain_at(f, f, kernel, np.zeros(3), grid, sphere))
            values.append(v)
            hs.append(grid.h)
            Ns.append(grid.N)
        if q == "gaussian_mass":
            errors = [abs(v - (2 * math.pi) ** 1.5) for v in values]
        elif q == "gradient_fd":
            exact = math.sqrt(1.5 * math.pi**1.5)
            errors = [abs(v - exact) for v in values]
        else:
            errors = [abs(v - values[-1]) for v in values]
        for lvl in range(levels):
            rows.append({"quantity": q, "level": lvl, "N": Ns[lvl], "h": hs[lvl],
                         "value": values[lvl], "error": errors[lvl]})
        if q == "gain_probe":
            rows = rows[:-1]
    for row, o in zip(rows, _orders([r["error"] for r in rows])):
        row["observed_order"] = o
    return rows


def run_convergence(cfg: ExperimentConfig, levels=None, out_dir=None, seed=None, threads=None,
                    max_cost=None) -> RunResult:
    levels = cfg.convergence.levels if levels is None else int(levels)
    if not 2 <= levels <= 4:
        raise ConfigError([f"convergence.levels: must lie in [2, 4], got {levels}"])
    ceiling = cfg.convergence.max_cost if max_cost is None else float(max_cost)
    cost = estimated_cost(cfg, levels)
    run = _Run("converge", cfg, out_dir, seed, threads)
    run.extra.update({"estimated_cost": cost, "cost_ceiling": ceiling, "levels": levels})
    if cost > ceiling:
        run.messages.append(f"refusing: estimated cost {cost:.3g} exceeds ceiling {ceiling:.3g}")
        return run.finish(EXIT_INVALID)
    with run.stages("levels"):
        rows = _converge_rows(cfg, levels)
    if not _finite(rows):
        run.messages.append("non-finite value in convergence output; nothing written")
        return run.finish(EXIT_NONFINITE)
    run.table("converge", CONVERGE_COLUMNS, rows)
    return run.finish(EXIT_OK, {"rows": rows})


# ---------------------------------------------------------------- self-test

def run_selftest(cfg: ExperimentConfig, out_dir=None, seed=None, threads=None, scale=1.0):
    run = _Run("kinematics-selftest", cfg, out_dir, seed, threads)
    with run.stages("sampling"):
        results = selftest.run_all(0 if seed is None else seed, scale)
    rows = [r.as_row() for r in results]
    if not _finite(rows):
        return run.finish(EXIT_NONFINITE)
    run.table("selftest", SELFTEST_COLUMNS, rows)
    failed = [r.name for r in results if not r.passed]
    for name in failed:
        run.messages.append(f"check failed: {name}")
    return run.finish(EXIT_BREACH if failed else EXIT_OK, {"results": results})


def resolve_threads(flag):
    """--threads beats RELGAIN_THREADS; 0 or unset means all available."""
    if flag is None:
        env = os.environ.get("RELGAIN_THREADS", "").strip()
        flag = int(env) if env else 0
    if flag < 0:
        raise ConfigError([f"--threads: must be >= 0, got {flag}"])
    import numba
    avail = numba.config.NUMBA_NUM_THREADS
    n = avail if flag == 0 else min(flag, avail)
    numba.set_num_threads(n)
    return n
