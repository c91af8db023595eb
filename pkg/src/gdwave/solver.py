"""Semidiscrete acoustic wave operator, Taylor stepping, and stability tools.

The state is an array ``w`` of shape ``(3, ndof)`` holding ``(p, v_x, v_y)``
for all elements back to back.  The right-hand side is evaluated in three
phases: element volume terms, trace gather and numerical flux on the mortar
nodes, and lifting of the flux corrections followed by the mass inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gdwave.massop import MassKind, MassOperator, SimplexMassBatch
from gdwave.mesh import Mesh
from gdwave.mortar import BoundaryTag, numerical_flux


class SolverError(RuntimeError):
    pass


def taylor_order_for(n: int) -> int:
    """Smallest admissible Taylor order ``k in {4l-1, 4l}`` with ``k > n``."""
    k = n + 1
    while k % 4 not in (0, 3):
        k += 1
    return k


def check_taylor_order(k: int, n: int):
    if k % 4 not in (0, 3) or k <= 0:
        raise ValueError(f"Taylor order {k} is not of the form 4l-1 or 4l")
    if k <= n:
        raise ValueError(f"Taylor order {k} must exceed the spatial order {n}")


@dataclass
class SolverConfig:
    alpha: float = 1.0
    dt: float | None = None
    taylor_order: int | None = None
    tfinal: float = 0.0
    mass_kind: MassKind = MassKind.WADG_INEXACT

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        self.mass_kind = MassKind(self.mass_kind)


@dataclass
class _FacePlan:
    """Trace gather/scatter for one element (or simplex group) face side."""

    target: int           # GD element index, or -1 - simplex group index
    face: int
    side: int             # 0 = minus, 1 = plus
    idx: np.ndarray       # mortar node ids; (nn,) for GD, (g, nn) for simplex
    op: object            # FaceTrace for GD, dense matrix for simplex
    members: np.ndarray | None = None   # group-local element rows (simplex)


class WaveSolver:
    """Acoustic wave semidiscretization on a :class:`Mesh`."""

    def __init__(self, mesh: Mesh, alpha: float = 1.0,
                 mass_kind: MassKind = MassKind.WADG_INEXACT):
        if alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        self.mesh = mesh
        self.alpha = float(alpha)
        self.mass_kind = MassKind(mass_kind)
        els = mesh.elements

        # dof layout: GD elements first, then simplices grouped by order
        self.gd_ids = [i for i, e in enumerate(els) if e.is_gd]
        orders = sorted({e.n for e in els if not e.is_gd})
        self.groups = [[i for i, e in enumerate(els) if not e.is_gd and e.n == n]
                       for n in orders]
        self.offsets = np.zeros(len(els) + 1, dtype=int)
        off = 0
        self.gd_slices = []
        for i in self.gd_ids:
            self.gd_slices.append(slice(off, off + els[i].ndof))
            off += els[i].ndof
        self.group_slices = []
        self.group_pos = {}
        for g, ids in enumerate(self.groups):
            np_ = els[ids[0]].ndof
            self.group_slices.append(slice(off, off + len(ids) * np_))
            for row, i in enumerate(ids):
                self.group_pos[i] = (g, row)
            off += len(ids) * np_
        self.ndof = off
        self.n_max = max(e.n for e in els)

        self._build_volume()
        self._build_mass()
        self._build_surface()
        self._mass_functional = None

    # -- setup ---------------------------------------------------------------
    def _jacobian_for_mass(self, e):
        if self.mass_kind is MassKind.WADG_INEXACT:
            return e.geo.Jq
        return e.cmap.det(e.ops.rq, e.ops.sq)

    def _build_volume(self):
        els = self.mesh.elements
        self.group_ops = []
        self.group_factors = []
        self.group_store = []
        for ids in self.groups:
            ops = els[ids[0]].ops
            self.group_ops.append(ops)
            geos = [els[i].geo for i in ids]
            self.group_store.append(all(g.store_quadrature for g in geos))
            if self.group_store[-1]:
                f = [np.stack(c) for c in zip(*(g.factors() for g in geos))]
            else:
                f = None
            self.group_factors.append(f)

    def _group_metric_factors(self, g):
        if self.group_factors[g] is not None:
            return self.group_factors[g]
        els = self.mesh.elements
        ops = self.group_ops[g]
        ids = self.groups[g]
        out = []
        for name, sign in (("ys", 1), ("xs", -1), ("yr", -1), ("xr", 1)):
            dofs = np.stack([getattr(els[i].geo, name) for i in ids])
            out.append(sign * (dofs @ ops.Vq.T))
        return out

    def _build_mass(self):
        els = self.mesh.elements
        self.gd_mass = [MassOperator(els[i].ops, self._jacobian_for_mass(els[i]),
                                     self.mass_kind) for i in self.gd_ids]
        self.group_mass = []
        for ids in self.groups:
            J = np.stack([self._jacobian_for_mass(els[i]) for i in ids])
            self.group_mass.append(SimplexMassBatch(els[ids[0]].ops, J, self.mass_kind))

    def _build_surface(self):
        mesh = self.mesh
        els = mesh.elements
        nn = mesh.nmortar_nodes
        self.nx = np.empty(nn)
        self.ny = np.empty(nn)
        self.sjw = np.empty(nn)
        self.wall = np.zeros(nn, dtype=bool)

        # collect (element, face, side) -> [(node ids, params)]
        sides: dict[tuple[int, int, int], list] = {}
        for k, m in enumerate(mesh.mortars):
            sl = slice(mesh.mortar_offsets[k], mesh.mortar_offsets[k + 1])
            self.nx[sl] = m.nx
            self.ny[sl] = m.ny
            self.sjw[sl] = m.SJ * m.weights
            iface = mesh.interfaces[m.interface]
            ids = np.arange(sl.start, sl.stop)
            sides.setdefault((*iface.minus, 0), []).append((ids, m.t_minus))
            if iface.plus is None:
                self.wall[sl] = True
            else:
                sides.setdefault((*iface.plus, 1), []).append((ids, m.t_plus))

        gd_index = {i: j for j, i in enumerate(self.gd_ids)}
        self.plans: list[_FacePlan] = []
        simplex_groups: dict[tuple, list] = {}
        for (ei, f, side), pieces in sorted(sides.items()):
            idx = np.concatenate([p[0] for p in pieces])
            t = np.concatenate([p[1] for p in pieces])
            e = els[ei]
            if e.is_gd:
                self.plans.append(_FacePlan(gd_index[ei], f, side, idx,
                                            e.ops.face_trace(f, t)))
            else:
                g, row = self.group_pos[ei]
                key = (g, f, side, tuple(np.round(t, 12)))
                simplex_groups.setdefault(key, []).append((row, idx, t))
        for (g, f, side, _), items in simplex_groups.items():
            rows = np.array([it[0] for it in items])
            idx = np.stack([it[1] for it in items])
            mat = self.group_ops[g].face_trace(f, items[0][2])
            self.plans.append(_FacePlan(-1 - g, f, side, idx, mat, rows))

    # -- helpers ---------------------------------------------------------------
    def zeros(self):
        return np.zeros((3, self.ndof))

    def element_view(self, w, i):
        """View of element ``i``'s DOFs in ``w`` with shape ``(3, ndof_i)``."""
        if i in self.group_pos:
            g, row = self.group_pos[i]
            return self.group_view(w, g)[:, row, :]
        j = self.gd_ids.index(i)
        return w[:, self.gd_slices[j]]

    def group_view(self, w, g):
        ids = self.groups[g]
        np_ = self.mesh.elements[ids[0]].ndof
        return w[:, self.group_slices[g]].reshape(3, len(ids), np_)

    def set_from_function(self, func, t=0.0):
        """Project ``func(x, y, t) -> (p, vx, vy)`` with the solver's mass."""
        w = self.zeros()
        for i, e in enumerate(self.mesh.elements):
            xq, yq = e.geo.physical_quad_points()
            vals = func(xq, yq, t)
            J = self._quad_jacobian(i)
            view = self.element_view(w, i)
            for c in range(3):
                b = e.ops.interp_T(e.ops.W2 * J * np.broadcast_to(vals[c], xq.shape))
                view[c] = self._mass_inverse_single(i, b)
        return w

    def _quad_jacobian(self, i):
        e = self.mesh.elements[i]
        if e.is_gd:
            return self.gd_mass[self.gd_ids.index(i)].Jq
        g, row = self.group_pos[i]
        return self.group_mass[g].Jq[row]

    def _mass_inverse_single(self, i, b):
        e = self.mesh.elements[i]
        if e.is_gd:
            return self.gd_mass[self.gd_ids.index(i)].apply_inverse(b)
        g, row = self.group_pos[i]
        return self.group_mass[g].inv[row] @ b

    def _mass_apply_single(self, i, u):
        e = self.mesh.elements[i]
        if e.is_gd:
            return self.gd_mass[self.gd_ids.index(i)].apply(u)
        g, row = self.group_pos[i]
        return self.group_mass[g].fwd[row] @ u

    # -- right-hand side ---------------------------------------------------
    def rhs(self, w: np.ndarray, check_nan: bool = True) -> np.ndarray:
        w = np.asarray(w, dtype=float).reshape(3, self.ndof)
        dw = np.zeros_like(w)
        els = self.mesh.elements

        # volume terms
        for j, i in enumerate(self.gd_ids):
            ops = els[i].ops
            sl = self.gd_slices[j]
            p, vx, vy = w[0, sl], w[1, sl], w[2, sl]
            jrx, jry, jsx, jsy = els[i].geo.factors()
            W = ops.W2
            div = (jrx * ops.dr(vx) + jsx * ops.ds(vx)
                   + jry * ops.dr(vy) + jsy * ops.ds(vy))
            dw[0, sl] = -ops.interp_T(W * div)
            lp = W * ops.interp(p)
            dw[1, sl] = ops.dr_T(jrx * lp) + ops.ds_T(jsx * lp)
            dw[2, sl] = ops.dr_T(jry * lp) + ops.ds_T(jsy * lp)
        for g in range(len(self.groups)):
            ops = self.group_ops[g]
            U = self.group_view(w, g)
            dU = self.group_view(dw, g)
            jrx, jry, jsx, jsy = self._group_metric_factors(g)
            W = ops.W[None, :]
            Dr, Ds, Vq = ops.Drq, ops.Dsq, ops.Vq
            div = (jrx * (U[1] @ Dr.T) + jsx * (U[1] @ Ds.T)
                   + jry * (U[2] @ Dr.T) + jsy * (U[2] @ Ds.T))
            dU[0] = -(W * div) @ Vq
            lp = W * (U[0] @ Vq.T)
            dU[1] = (jrx * lp) @ Dr + (jsx * lp) @ Ds
            dU[2] = (jry * lp) @ Dr + (jsy * lp) @ Ds

        tr = self.face_traces(w)
        nn = self.mesh.nmortar_nodes
        nx, ny, sjw = self.nx, self.ny, self.sjw
        pm, pp = tr[0, 0], tr[1, 0]
        vnm = nx * tr[0, 1] + ny * tr[0, 2]
        vnp = nx * tr[1, 1] + ny * tr[1, 2]
        pp = np.where(self.wall, pm, pp)
        vnp = np.where(self.wall, -vnm, vnp)
        pstar, vnstar = numerical_flux(pm, pp, vnm, vnp, self.alpha)

        # lift terms (subtracted from the element right-hand side)
        q = np.empty((2, 3, nn))
        q[0, 0] = sjw * (vnstar - vnm)
        q[1, 0] = sjw * (vnp - vnstar)
        q[0, 1] = nx * sjw * pstar
        q[1, 1] = -q[0, 1]
        q[0, 2] = ny * sjw * pstar
        q[1, 2] = -q[0, 2]
        for plan in self.plans:
            if plan.target >= 0:
                sl = self.gd_slices[plan.target]
                for c in range(3):
                    dw[c, sl] -= plan.op.transpose(q[plan.side, c, plan.idx])
            else:
                dU = self.group_view(dw, -1 - plan.target)
                for c in range(3):
                    dU[c, plan.members] -= q[plan.side, c, plan.idx] @ plan.op

        # mass inverse
        for j in range(len(self.gd_ids)):
            sl = self.gd_slices[j]
            for c in range(3):
                dw[c, sl] = self.gd_mass[j].apply_inverse(dw[c, sl])
        for g in range(len(self.groups)):
            dU = self.group_view(dw, g)
            for c in range(3):
                dU[c] = self.group_mass[g].apply_inverse(dU[c])

        if check_nan and not np.all(np.isfinite(dw)):
            bad = self._first_bad_element(dw)
            raise SolverError(f"non-finite right-hand side in element {bad}")
        return dw

    def face_traces(self, w: np.ndarray) -> np.ndarray:
        """``(2, 3, nodes)`` minus/plus traces at the mortar quadrature nodes.

        Plus-side entries of wall nodes are left zero.
        """
        w = np.asarray(w, dtype=float).reshape(3, self.ndof)
        tr = np.zeros((2, 3, self.mesh.nmortar_nodes))
        for plan in self.plans:
            if plan.target >= 0:
                sl = self.gd_slices[plan.target]
                for c in range(3):
                    tr[plan.side, c, plan.idx] = plan.op(w[c, sl])
            else:
                U = self.group_view(w, -1 - plan.target)
                for c in range(3):
                    tr[plan.side, c, plan.idx] = U[c, plan.members] @ plan.op.T
        return tr

    def _first_bad_element(self, w):
        for i in range(len(self.mesh.elements)):
            if not np.all(np.isfinite(self.element_view(w, i))):
                return i
        return -1

    # -- functionals ---------------------------------------------------------
    def mass_apply(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float).reshape(3, self.ndof)
        out = np.zeros_like(w)
        for j in range(len(self.gd_ids)):
            sl = self.gd_slices[j]
            for c in range(3):
                out[c, sl] = self.gd_mass[j].apply(w[c, sl])
        for g in range(len(self.groups)):
            U = self.group_view(w, g)
            O = self.group_view(out, g)
            for c in range(3):
                O[c] = self.group_mass[g].apply(U[c])
        return out

    def energy(self, w: np.ndarray) -> float:
        """``sum_e 1/2 (p^T Mop p + v_x^T Mop v_x + v_y^T Mop v_y)``."""
        w = np.asarray(w, dtype=float).reshape(3, self.ndof)
        return 0.5 * float(np.sum(w * self.mass_apply(w)))

    def mass_functional(self) -> np.ndarray:
        if self._mass_functional is None:
            self._mass_functional = self.mass_apply(np.ones((3, self.ndof)))[0]
        return self._mass_functional

    def component_masses(self, w: np.ndarray):
        """``(m_p, m_vx, m_vy)`` with ``m_q = 1^T Mop q``."""
        c = self.mass_functional()
        w = np.asarray(w, dtype=float).reshape(3, self.ndof)
        return tuple(float(c @ w[k]) for k in range(3))

    # -- time stepping ---------------------------------------------------------
    def taylor_step(self, w: np.ndarray, dt: float, k: int) -> np.ndarray:
        """``sum_{l<=k} (dt A)^l / l! w`` by Horner's rule."""
        y = w
        for l in range(k, 0, -1):
            y = w + (dt / l) * self.rhs(y, check_nan=False)
        if not np.all(np.isfinite(y)):
            raise SolverError("non-finite state after Taylor step")
        return y

    def run(self, w, dt, nsteps, k=None, callback=None):
        k = taylor_order_for(self.n_max) if k is None else k
        check_taylor_order(k, self.n_max)
        for step in range(nsteps):
            w = self.taylor_step(w, dt, k)
            if callback is not None:
                callback(step + 1, w)
        return w

    def advance_to(self, w, tfinal, dt_max, k=None, callback=None):
        """Uniform steps of size at most ``dt_max`` landing exactly on ``tfinal``."""
        nsteps = max(1, int(np.ceil(tfinal / dt_max - 1e-12)))
        dt = tfinal / nsteps
        return self.run(w, dt, nsteps, k, callback), dt, nsteps

    def random_state(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.uniform(-1.0, 1.0, size=(3, self.ndof))

    def cfl_guess(self) -> float:
        mesh = self.mesh
        guesses = []
        if self.gd_ids:
            guesses.append(0.3 * mesh.h_min())
        if self.groups:
            guesses.append(0.3 * 2 * mesh.simplex_inradius_min() / self.n_max)
        return min(guesses)

    def is_stable(self, dt, k, w0, nsteps=100, check_every: int = 10) -> bool:
        """No energy growth after ``nsteps`` steps from ``w0``.

        Runs whose energy has clearly blown up (a factor 10) stop early.
        """
        e0 = self.energy(w0)
        w = w0
        try:
            for step in range(1, nsteps + 1):
                w = self.taylor_step(w, dt, k)
                if step % check_every == 0 and step < nsteps:
                    if not self.energy(w) <= 10.0 * e0:
                        return False
        except (SolverError, FloatingPointError):
            return False
        return self.energy(w) <= e0

    def max_stable_dt(self, seed: int = 0, k: int | None = None, nsteps: int = 100,
                      rtol: float = 0.005, guess: float | None = None,
                      max_doublings: int = 40) -> float:
        """Largest ``dt`` with no energy growth over ``nsteps`` random-data steps."""
        k = taylor_order_for(self.n_max) if k is None else k
        w0 = self.random_state(seed)
        dt = self.cfl_guess() if guess is None else guess
        with np.errstate(all="ignore"):
            if self.is_stable(dt, k, w0, nsteps):
                lo = dt
                hi = None
                for _ in range(max_doublings):
                    if self.is_stable(2 * lo, k, w0, nsteps):
                        lo *= 2
                    else:
                        hi = 2 * lo
                        break
            else:
                hi = dt
                lo = None
                for _ in range(max_doublings):
                    if self.is_stable(0.5 * hi, k, w0, nsteps):
                        lo = 0.5 * hi
                        break
                    hi *= 0.5
            if lo is None or hi is None:
                raise SolverError("could not bracket the maximum stable time step")
            while (hi - lo) > rtol * lo:
                mid = 0.5 * (lo + hi)
                if self.is_stable(mid, k, w0, nsteps):
                    lo = mid
                else:
                    hi = mid
        return lo

    # -- global operator -------------------------------------------------------
    def assemble_global_operator(self, cap: int = 6000) -> np.ndarray:
        n = 3 * self.ndof
        if n > cap:
            raise ValueError(f"operator size {n} exceeds cap {cap}")
        A = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            A[:, j] = self.rhs(e).ravel()
            e[j] = 0.0
        return A

    def assemble_global_mass(self) -> np.ndarray:
        n = 3 * self.ndof
        M = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            M[:, j] = self.mass_apply(e).ravel()
            e[j] = 0.0
        return 0.5 * (M + M.T)

    def spectrum(self, cap: int = 6000) -> np.ndarray:
        """Eigenvalues of the operator, computed in the mass-symmetrized form."""
        A = self.assemble_global_operator(cap)
        M = self.assemble_global_mass()
        R = np.linalg.cholesky(M).T
        B = R @ A @ np.linalg.inv(R)
        return np.linalg.eigvals(B)


def rhs(solver: WaveSolver, w):
    return solver.rhs(w)


def energy(solver: WaveSolver, w):
    return solver.energy(w)


def component_masses(solver: WaveSolver, w):
    return solver.component_masses(w)


def taylor_step(solver: WaveSolver, w, dt, k):
    return solver.taylor_step(w, dt, k)


def max_stable_dt(solver: WaveSolver, seed=0, **kw):
    return solver.max_stable_dt(seed, **kw)


def assemble_global_operator(solver: WaveSolver, cap=6000):
    return solver.assemble_global_operator(cap)
