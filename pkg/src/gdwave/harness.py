"""Experiment catalog, error norms, refinement drivers, and report files."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gdwave import __version__
from gdwave import meshes
from gdwave.exact import BoxModal, DiskBessel, RingPulse, bessel_prime_root_near, bessel_prime_roots
from gdwave.gdtensor import _apply2
from gdwave.geometry import (
    ProjTestMap,
    build_metric_terms,
    exact_jacobian,
    project_coordinates,
)
from gdwave.massop import MassKind, MassOperator
from gdwave.mesh import GeometryMode, Mesh
from gdwave.solver import WaveSolver, taylor_order_for

from gdwave.cli import PROBLEMS

log = logging.getLogger(__name__)
CLOSURES = ("extrapolation", "ghost")
DISK_STRATEGIES = ("simplicial", "coupled", "gd")
MESH_KINDS = ("skew-box", "skew-box-conforming", "skew-mixed", "square-gd",
              "square-triangles", "disk-simplicial", "disk-coupled", "disk-gd")
DT_POLICIES = ("stable", "cfl")
TIERS = ("reduced", "full")

# modal box mode numbers and grid sizes for the time-step comparison:
# n -> (k_n, N^E, N^G)
DT_COMPARE_TABLE = {3: (1, 15, 11), 5: (4, 27, 24), 7: (7, 30, 23),
                    9: (12, 38, 30), 11: (15, 43, 34)}
SQUARE_TRIANGLE_COUNT = 64


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """One experiment run.  Mirrors the JSON config accepted by the CLI."""

    problem: str
    n: int = 5
    closure: str = "extrapolation"
    geometry_mode: str = "discontinuous"
    mass_kind: str = "wadg"
    alpha: float = 1.0
    levels: int = 1
    start_level: int = 0
    seed: int = 0
    output: str | None = None
    mesh: str | None = None
    strategy: str = "simplicial"
    k: float | None = None
    beta: float | None = None
    t_final: float | None = None
    steps: int | None = None
    dt: float | None = None
    dt_policy: str = "stable"
    dt_factor: float = 0.5
    cfl: float = 0.3
    taylor_order: int | None = None
    tier: str = "reduced"
    periodic: bool | None = None
    sizes: list[int] | None = None
    orders: list[int] | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        def check(name, value, allowed):
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value!r}")

        check("problem", self.problem, PROBLEMS)
        check("closure", self.closure, CLOSURES)
        check("geometry_mode", self.geometry_mode, tuple(m.value for m in GeometryMode))
        check("mass_kind", self.mass_kind, tuple(m.value for m in MassKind))
        check("strategy", self.strategy, DISK_STRATEGIES)
        check("dt_policy", self.dt_policy, DT_POLICIES)
        check("tier", self.tier, TIERS)
        if self.mesh is not None:
            check("mesh", self.mesh, MESH_KINDS)
        if self.n < 1:
            raise ValueError(f"order n must be >= 1, got {self.n}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.levels < 1 or self.start_level < 0:
            raise ValueError(f"invalid level range: levels={self.levels}, "
                             f"start_level={self.start_level}")
        if self.dt is not None and self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.taylor_order is not None and (self.taylor_order % 4 not in (0, 3)
                                              or self.taylor_order <= self.n):
            raise ValueError(f"Taylor order {self.taylor_order} is not admissible "
                             f"for n={self.n}")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    @property
    def level_range(self) -> range:
        return range(self.start_level, self.start_level + self.levels)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class Table:
    header: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        self.rows = [_plain(r) for r in self.rows]

    def add(self, row):
        self.rows.append(_plain(row))

    def column(self, name: str) -> np.ndarray:
        k = self.header.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)


@dataclass
class Report:
    problem: str
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _plain(row) -> tuple:
    """Row with numpy scalars turned into Python ints and floats."""
    out = []
    for v in row:
        if isinstance(v, (bool, np.bool_)):
            v = int(v)
        elif isinstance(v, np.integer):
            v = int(v)
        elif isinstance(v, np.floating):
            v = float(v)
        if isinstance(v, float) and math.isnan(v):
            v = math.nan
        out.append(v)
    return tuple(out)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(tok: str):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        v = float(tok)
    except ValueError:
        return tok
    # a shared NaN object keeps row tuples comparable with ==
    return math.nan if math.isnan(v) else v


def write_csv(path, table: Table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(table.header)
        for row in table.rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path) -> Table:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        rows = [tuple(_parse(t) for t in row) for row in r]
    return Table(header, rows)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_report(report: Report, cfg: RunConfig, outdir) -> list[Path]:
    """CSV per table plus ``manifest.json``; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for name, table in report.tables.items():
        fname = f"{report.problem}.csv" if name == "main" else f"{report.problem}_{name}.csv"
        write_csv(outdir / fname, table)
        files.append(outdir / fname)
    manifest = {
        "problem": report.problem,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "version": __version__,
        "files": [f.name for f in files],
        "summary": report.summary,
    }
    mpath = outdir / "manifest.json"
    with open(mpath, "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2)
    files.append(mpath)
    return files


# ---------------------------------------------------------------------------
# norms and rates
# ---------------------------------------------------------------------------

def convergence_rates(errors) -> list[float]:
    """``log2(e_{l-1} / e_l)``; the first entry is NaN."""
    errors = [float(e) for e in errors]
    rates = [math.nan]
    for a, b in zip(errors[:-1], errors[1:]):
        rates.append(math.log2(a / b) if a > 0 and b > 0 else math.nan)
    return rates


def element_states(solver: WaveSolver, w) -> list[np.ndarray]:
    """Per-element ``(3, ndof_e)`` views of a global state."""
    return [solver.element_view(w, i) for i in range(len(solver.mesh.elements))]


def error_norm(mesh: Mesh, states, exact, t: float) -> float:
    """``sqrt(1/2 sum_e int J (dp^2 + dvx^2 + dvy^2))`` by element quadrature.

    ``states`` holds one ``(3, ndof_e)`` array per element; the exact
    solution is evaluated at the physical quadrature points.
    """
    tot = 0.0
    for e, u in zip(mesh.elements, states):
        xq, yq = e.geo.physical_quad_points()
        vals = exact(xq, yq, t)
        wj = e.ops.W2 * e.geo.Jq
        for c in range(3):
            d = e.ops.interp(u[c]) - vals[c]
            tot += float(np.sum(wj * d * d))
    return math.sqrt(0.5 * tot)


def solver_error(solver: WaveSolver, w, exact, t: float) -> float:
    return error_norm(solver.mesh, element_states(solver, w), exact, t)


def _coarse_values_at(fine, coarse_elems, coarse_states):
    """Coarse solution at the quadrature nodes of the fine element ``fine``.

    Elements are related through their level-0 ancestor: GD blocks share
    reference coordinates, simplices through their reference sub-maps.
    """
    ops = fine.ops
    if fine.base is None:
        raise ValueError("element has no level-0 ancestor id")
    cands = [(c, u) for c, u in zip(coarse_elems, coarse_states) if c.base == fine.base]
    if not cands:
        raise ValueError(f"no coarse element for base element {fine.base}")
    if fine.is_gd:
        c, u = cands[0]
        er = c.ops.ops_r.eval_matrix(ops.ops_r.qnodes)
        es = c.ops.ops_s.eval_matrix(ops.ops_s.qnodes)
        return np.stack([_apply2(es, er, u[k].reshape(c.ops.shape)).ravel()
                         for k in range(3)])
    rb, sb = fine.ref_affine(ops.rq, ops.sq)
    out = np.full((3, ops.nq), np.nan)
    for c, u in cands:
        A, b = c.ref_affine.A, c.ref_affine.b
        loc = np.linalg.solve(A, np.vstack((rb - b[0], sb - b[1])))
        r, s = loc
        inside = (r >= -1 - 1e-10) & (s >= -1 - 1e-10) & (r + s <= 1e-10) & np.isnan(out[0])
        if np.any(inside):
            E = c.ops.eval_matrix(r[inside], s[inside])
            for k in range(3):
                out[k, inside] = E @ u[k]
    if np.any(np.isnan(out)):
        raise ValueError("fine quadrature node outside every coarse element")
    return out


def level_difference(fine_mesh: Mesh, fine_states, coarse_mesh: Mesh, coarse_states) -> float:
    """``sqrt(1/2 sum_e int J |u_fine - u_coarse|^2)`` on the fine quadrature."""
    tot = 0.0
    for e, u in zip(fine_mesh.elements, fine_states):
        uc = _coarse_values_at(e, coarse_mesh.elements, coarse_states)
        wj = e.ops.W2 * e.geo.Jq
        for c in range(3):
            d = e.ops.interp(u[c]) - uc[c]
            tot += float(np.sum(wj * d * d))
    return math.sqrt(0.5 * tot)


# ---------------------------------------------------------------------------
# mesh catalog
# ---------------------------------------------------------------------------

def build_named_mesh(cfg: RunConfig, kind: str, level: int = 0, **kw) -> Mesh:
    periodic = bool(cfg.periodic)
    mode = GeometryMode(cfg.geometry_mode)
    sizes = tuple(cfg.sizes) if cfg.sizes else None
    if kind == "skew-box":
        return meshes.skew_box_mesh(cfg.n, cfg.closure, level, periodic, mode, sizes, **kw)
    if kind == "skew-box-conforming":
        return meshes.skew_box_mesh(cfg.n, cfg.closure, level, periodic,
                                    GeometryMode.WATERTIGHT, sizes or (21, 21),
                                    interpolate_conforming=True, **kw)
    if kind == "skew-mixed":
        return meshes.skew_box_mesh(cfg.n, cfg.closure, level, periodic, mode, sizes,
                                    simplex_quadrant=True, **kw)
    if kind == "square-gd":
        N = (sizes[0] if sizes else DT_COMPARE_TABLE.get(cfg.n, (0, 16, 16))[1]) * 2 ** level
        return meshes.square_gd_mesh(cfg.n, N, cfg.closure, periodic, **kw)
    if kind == "square-triangles":
        return meshes.square_triangle_mesh(cfg.n, 2 + level, periodic, **kw)
    if kind == "disk-simplicial":
        return meshes.disk_simplicial_mesh(cfg.n, level, **kw)
    if kind == "disk-coupled":
        return meshes.disk_coupled_mesh(cfg.n, cfg.closure, level, **kw)
    if kind == "disk-gd":
        return meshes.disk_gd_mesh(cfg.n, cfg.closure, level, **kw)
    raise ValueError(f"unknown mesh kind {kind!r}")


# ---------------------------------------------------------------------------
# time steps
# ---------------------------------------------------------------------------

def _taylor(cfg: RunConfig, solver: WaveSolver) -> int:
    return cfg.taylor_order or taylor_order_for(solver.n_max)


def base_time_step(cfg: RunConfig, solver: WaveSolver) -> float:
    """Time step on the mesh of ``solver`` according to the config policy."""
    if cfg.dt is not None:
        return cfg.dt
    if cfg.dt_policy == "cfl":
        return cfg.cfl * solver.cfl_guess() / 0.3
    return cfg.dt_factor * solver.max_stable_dt(cfg.seed, _taylor(cfg, solver))


def _solver(cfg: RunConfig, mesh: Mesh) -> WaveSolver:
    return WaveSolver(mesh, cfg.alpha, MassKind(cfg.mass_kind))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_project_test(cfg: RunConfig) -> Report:
    """Projection of ``cos(kx) cos(ky)`` onto one curved GD block.

    Three mass treatments: exact ``M_J``, weight-adjusted with the exact
    Jacobian, and weight-adjusted with the Jacobian from projected
    coordinates.  The right-hand side and the error always use the exact
    Jacobian; the error is ``Delta^T W J Delta``.
    """
    k = cfg.k if cfg.k is not None else np.pi / 2
    beta = cfg.beta if cfg.beta is not None else 0.125
    cmap = ProjTestMap(beta)
    table = Table(("level", "N", "e_l2proj", "e_wadg", "e_inexact",
                   "delta_wadg", "delta_inexact"))
    skipped = []
    for level in cfg.level_range:
        N = cfg.n * 2 ** level
        ops = meshes.gd_block_ops(cfg.n, N, N, cfg.closure)
        J = exact_jacobian(ops, cmap)
        xq, yq = cmap(ops.rq, ops.sq)
        fq = np.cos(k * xq) * np.cos(k * yq)
        b = ops.interp_T(ops.W2 * J * fq)

        def err(u):
            d = fq - ops.interp(u)
            return float(np.sum(ops.W2 * J * d * d))

        e_l2 = err(MassOperator(ops, J, MassKind.EXACT).apply_inverse(b))
        e_w = err(MassOperator(ops, J, MassKind.WADG).apply_inverse(b))
        xdof, ydof = project_coordinates(ops, cmap)
        Jm = build_metric_terms(ops, xdof, ydof).Jq
        if np.min(Jm) <= 0:
            skipped.append({"level": level, "N": N, "min_jacobian": float(np.min(Jm))})
            continue
        e_i = err(MassOperator(ops, Jm, MassKind.WADG_INEXACT).apply_inverse(b))
        table.add((level, N, e_l2, e_w, e_i, abs(e_w - e_l2), abs(e_i - e_l2)))
    return Report("project-test", {"main": table},
                  {"k": k, "beta": beta, "skipped_levels": skipped})


def _constant_state(solver: WaveSolver, values=(3.0, 1.0, 2.0)):
    w = solver.zeros()
    for c, v in enumerate(values):
        w[c] = v
    return w


def run_constants(cfg: RunConfig) -> Report:
    """Evolve the constant state ``(p, vx, vy) = (3, 1, 2)`` on a periodic mesh."""
    kind = cfg.mesh or "skew-box"
    cfg = cfg.replace(periodic=True if cfg.periodic is None else cfg.periodic)
    mesh = build_named_mesh(cfg, kind, cfg.start_level)
    solver = _solver(cfg, mesh)
    t_final = cfg.t_final if cfg.t_final is not None else 1.0
    dt_max = base_time_step(cfg, solver)
    w0 = _constant_state(solver)
    const = lambda x, y, t: (3.0, 1.0, 2.0)  # noqa: E731
    table = Table(("t", "error"))
    table.add((0.0, solver_error(solver, w0, const, 0.0)))
    nsteps = max(1, int(np.ceil(t_final / dt_max - 1e-12)))
    dt = t_final / nsteps

    def record(step, w):
        table.add((step * dt, solver_error(solver, w, const, step * dt)))

    solver.run(w0, dt, nsteps, _taylor(cfg, solver), record)
    return Report("constants", {"main": table},
                  {"mesh": kind, "dt": dt, "steps": nsteps,
                   "final_error": table.rows[-1][1], "dofs": mesh.ndof})


def run_conservation(cfg: RunConfig) -> Report:
    """Component masses of a pseudorandom state on a periodic mesh."""
    kind = cfg.mesh or "skew-box"
    cfg = cfg.replace(periodic=True if cfg.periodic is None else cfg.periodic)
    mesh = build_named_mesh(cfg, kind, cfg.start_level)
    solver = _solver(cfg, mesh)
    nsteps = cfg.steps or 500
    dt = base_time_step(cfg, solver)
    w0 = solver.random_state(cfg.seed)
    table = Table(("t", "mass_p", "mass_vx", "mass_vy"))
    table.add((0.0, *solver.component_masses(w0)))
    solver.run(w0, dt, nsteps, _taylor(cfg, solver),
               lambda step, w: table.add((step * dt, *solver.component_masses(w))))
    m = np.array([r[1:] for r in table.rows])
    drift = np.max(np.abs(m - m[0]), axis=0)
    scale = float(np.sum(np.abs(solver.mass_functional())))
    return Report("conservation", {"main": table},
                  {"mesh": kind, "dt": dt, "steps": nsteps,
                   "max_drift": drift.tolist(), "mass_scale": scale})


def run_energy(cfg: RunConfig) -> Report:
    """Energy history of a pseudorandom state."""
    kind = cfg.mesh or "skew-box"
    cfg = cfg.replace(periodic=True if cfg.periodic is None else cfg.periodic)
    mesh = build_named_mesh(cfg, kind, cfg.start_level)
    solver = _solver(cfg, mesh)
    nsteps = cfg.steps or 200
    dt = base_time_step(cfg, solver)
    w0 = solver.random_state(cfg.seed)
    table = Table(("t", "energy"))
    table.add((0.0, solver.energy(w0)))
    solver.run(w0, dt, nsteps, _taylor(cfg, solver),
               lambda step, w: table.add((step * dt, solver.energy(w))))
    e = table.column("energy")
    growth = float(np.max(np.diff(e) / e[:-1])) if len(e) > 1 else 0.0
    return Report("energy", {"main": table},
                  {"mesh": kind, "dt": dt, "steps": nsteps, "max_relative_growth": growth})


def run_spectrum(cfg: RunConfig) -> Report:
    """Eigenvalues of the assembled semidiscrete operator."""
    kind = cfg.mesh or "skew-box"
    cfg = cfg.replace(periodic=bool(cfg.periodic))
    mesh = build_named_mesh(cfg, kind, cfg.start_level)
    solver = _solver(cfg, mesh)
    lam = solver.spectrum()
    table = Table(("re", "im"), [(float(z.real), float(z.imag)) for z in lam])
    return Report("spectrum", {"main": table},
                  {"mesh": kind, "dofs": 3 * mesh.ndof,
                   "max_real": float(np.max(lam.real)),
                   "spectral_radius": float(np.max(np.abs(lam)))})


def convergence_study(cfg: RunConfig, make_mesh, exact, t_final: float,
                      name: str) -> Report:
    """Evolve the exact solution on successive levels and tabulate errors.

    The time step of the first level follows the config policy and is
    halved with every refinement.
    """
    table = Table(("level", "dofs", "dt", "error", "rate"))
    dt0 = None
    errors = []
    timings = []
    for j, level in enumerate(cfg.level_range):
        t0 = time.perf_counter()
        mesh = make_mesh(level)
        solver = _solver(cfg, mesh)
        if dt0 is None:
            dt0 = base_time_step(cfg, solver)
        w = solver.set_from_function(exact, 0.0)
        w, dt, _ = solver.advance_to(w, t_final, dt0 / 2 ** j, _taylor(cfg, solver))
        errors.append(solver_error(solver, w, exact, t_final))
        rate = convergence_rates(errors)[-1]
        table.add((level, mesh.ndof, dt, errors[-1], rate))
        timings.append(time.perf_counter() - t0)
        log.info("%s level %d: dofs %d dt %.4g error %.6e rate %.3f (%.1f s)",
                 name, level, mesh.ndof, dt, errors[-1], rate, timings[-1])
    return Report(name, {"main": table}, {"t_final": t_final, "seconds": timings})


def run_box_convergence(cfg: RunConfig) -> Report:
    k = int(cfg.k) if cfg.k is not None else 15
    exact = BoxModal(k)
    t_final = cfg.t_final if cfg.t_final is not None else exact.period
    mode = GeometryMode(cfg.geometry_mode)
    rep = convergence_study(
        cfg, lambda level: meshes.skew_box_mesh(cfg.n, cfg.closure, level, False, mode),
        exact, t_final, "box-convergence")
    rep.summary["k"] = k
    return rep


def disk_solution(n: int) -> DiskBessel:
    """Low mode (second root of ``J_7'``) for ``n <= 7``, high mode otherwise."""
    beta = 7
    R0 = bessel_prime_roots(beta, 2)[1] if n <= 7 else bessel_prime_root_near(beta, 109.6)
    return DiskBessel.normalized(beta, R0)


def run_disk(cfg: RunConfig) -> Report:
    exact = disk_solution(cfg.n)
    t_final = cfg.t_final if cfg.t_final is not None else exact.period
    builders = {
        "simplicial": lambda level: meshes.disk_simplicial_mesh(cfg.n, level),
        "coupled": lambda level: meshes.disk_coupled_mesh(cfg.n, cfg.closure, level),
        "gd": lambda level: meshes.disk_gd_mesh(cfg.n, cfg.closure, level),
    }
    rep = convergence_study(cfg, builders[cfg.strategy], exact, t_final, "disk")
    rep.summary.update({"strategy": cfg.strategy, "R0": exact.R0,
                        "amplitude": exact.amplitude, "beta": exact.beta,
                        "template": "inscribed square (3x3 cells) + 20-triangle strip"})
    return rep


def _gd_block_max_dt(cfg, n, N, closure):
    mesh = meshes.square_gd_mesh(n, N, closure)
    solver = WaveSolver(mesh, cfg.alpha, MassKind(cfg.mass_kind))
    return solver.max_stable_dt(cfg.seed)


def run_dt_compare(cfg: RunConfig) -> Report:
    """Maximum stable time steps of GD blocks and the 64-triangle square."""
    orders = cfg.orders or [cfg.n]
    dt_table = Table(("n", "k_n", "N_E", "Np_ratio_E", "dt_ratio_E", "cost_ratio_E",
                      "N_G", "Np_ratio_G", "dt_ratio_G", "cost_ratio_G"))
    cfl_table = Table(("n", "simplicial", "extrapolation", "ghost", "taylor_order"))
    r = meshes.SQUARE_TRIANGLE_CFL_RADIUS
    for n in orders:
        if n not in DT_COMPARE_TABLE:
            raise ValueError(f"no time-step comparison sizes for n={n}")
        kn, NE, NG = DT_COMPARE_TABLE[n]
        tri = WaveSolver(meshes.square_triangle_mesh(n, 2), cfg.alpha, MassKind(cfg.mass_kind))
        dtP = tri.max_stable_dt(cfg.seed)
        dtE = _gd_block_max_dt(cfg, n, NE, "extrapolation")
        dtG = _gd_block_max_dt(cfg, n, NG, "ghost")
        NpP = SQUARE_TRIANGLE_COUNT * (n + 1) * (n + 2) // 2
        NpE, NpG = (NE + 1) ** 2, (NG + n) ** 2
        dt_table.add((n, kn, NE, NpP / NpE, dtE / dtP, dtE * NpP / (NpE * dtP),
                              NG, NpP / NpG, dtG / dtP, dtG * NpP / (NpG * dtP)))
        cfl_table.add((n, n * dtP / (2 * r), dtE / (2.0 / NE), dtG / (2.0 / NG),
                               taylor_order_for(n)))
    return Report("dt-compare", {"main": dt_table, "cfl": cfl_table},
                  {"cfl_radius": r})


def run_inclusion(cfg: RunConfig) -> Report:
    """Self-convergence of the ring pulse scattering off four cylinders."""
    t_final = cfg.t_final if cfg.t_final is not None else (5.0 if cfg.tier == "reduced" else 30.0)
    pulse = RingPulse()
    levels = list(cfg.level_range) if cfg.levels > 1 else [0, 1, 2]
    if len(levels) < 3:
        raise ValueError("the self-convergence estimate needs three levels")
    tris = meshes.inclusion_triangles()
    table = Table(("level", "dofs", "dt", "delta", "rate"))
    prev = None
    dt0 = None
    deltas = []
    for j, level in enumerate(levels):
        t0 = time.perf_counter()
        mesh = meshes.inclusion_mesh(cfg.n, level, cfg.closure, tris)
        solver = _solver(cfg, mesh)
        if dt0 is None:
            dt0 = base_time_step(cfg, solver)
        w = solver.set_from_function(pulse, 0.0)
        w, dt, _ = solver.advance_to(w, t_final, dt0 / 2 ** j, _taylor(cfg, solver))
        states = [np.array(s) for s in element_states(solver, w)]
        if prev is None:
            delta = math.nan
        else:
            delta = level_difference(mesh, states, prev[0], prev[1])
            deltas.append(delta)
        rate = convergence_rates(deltas)[-1] if len(deltas) > 1 else math.nan
        table.add((level, mesh.ndof, dt, delta, rate))
        log.info("inclusion level %d: dofs %d dt %.4g delta %.6e rate %.3f (%.1f s)",
                 level, mesh.ndof, dt, delta, rate, time.perf_counter() - t0)
        prev = (mesh, states)
    return Report("inclusion", {"main": table},
                  {"t_final": t_final, "tier": cfg.tier,
                   "rate": table.rows[-1][-1],
                   "domain": [-15.0, 15.0], "simplicial_region": [-5.0, 5.0],
                   "triangles": len(tris),
                   "pulse_radius": pulse.radius, "pulse_width": pulse.width,
                   "template": ("8 segments per GD side, farthest-point interior, Delaunay, "
                                f"{meshes.INCLUSION_SMOOTHING_SWEEPS} smoothing sweeps")})


RUNNERS = {
    "project-test": run_project_test,
    "constants": run_constants,
    "conservation": run_conservation,
    "energy": run_energy,
    "box-convergence": run_box_convergence,
    "dt-compare": run_dt_compare,
    "spectrum": run_spectrum,
    "disk": run_disk,
    "inclusion": run_inclusion,
}


def run(cfg: RunConfig) -> Report:
    report = RUNNERS[cfg.problem](cfg)
    if cfg.output:
        write_report(report, cfg, cfg.output)
    return report
