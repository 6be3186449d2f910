"""Small conic modelling layer: affine expressions, cones, and a solver adapter.

Expressions are dense affine maps of a flat real decision vector. Complex
vectors and Hermitian matrices are declared through real coordinates, so
every expression may carry complex coefficients; constraints take real
parts (and imaginary parts where they must vanish) when they are lowered.

The lowered program has the standard form ``A x + s = b, s in K`` with
K a product of zero, non-negative, second-order and PSD-triangle cones. The
Clarabel interior-point solver consumes it directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

SQRT2 = np.sqrt(2.0)


class Affine:
    """Array-shaped affine expression ``coef @ x + const``.

    ``coef`` has shape ``shape + (nvars,)`` and may be complex. ``nvars``
    is the number of program variables that existed at creation time;
    operands are zero-padded when a later variable shows up.
    """

    __array_priority__ = 100

    def __init__(self, coef: np.ndarray, const: np.ndarray):
        self.coef = coef
        self.const = const

    # construction helpers
    @staticmethod
    def constant(value, nvars: int = 0) -> "Affine":
        value = np.asarray(value)
        return Affine(np.zeros(value.shape + (nvars,), dtype=value.dtype),
                      value.copy())

    @property
    def shape(self) -> tuple[int, ...]:
        return self.const.shape

    @property
    def nvars(self) -> int:
        return self.coef.shape[-1]

    def _padded(self, nvars: int) -> np.ndarray:
        if self.nvars == nvars:
            return self.coef
        pad = [(0, 0)] * (self.coef.ndim - 1) + [(0, nvars - self.nvars)]
        return np.pad(self.coef, pad)

    # arithmetic
    def __add__(self, other) -> "Affine":
        other = _lift(other)
        n = max(self.nvars, other.nvars)
        return Affine(self._padded(n) + other._padded(n),
                      self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "Affine":
        return Affine(-self.coef, -self.const)

    def __sub__(self, other) -> "Affine":
        return self + (-_lift(other))

    def __rsub__(self, other) -> "Affine":
        return _lift(other) + (-self)

    def __mul__(self, k) -> "Affine":
        k = np.asarray(k)
        if k.ndim == 0:
            return Affine(self.coef * k, self.const * k)
        return Affine(self.coef * k[..., None], self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k) -> "Affine":
        return self * (1.0 / k)

    def __rmatmul__(self, left) -> "Affine":
        left = np.asarray(left)
        coef = np.tensordot(left, self.coef, axes=([left.ndim - 1], [0]))
        return Affine(coef, left @ self.const)

    def __matmul__(self, right) -> "Affine":
        right = np.asarray(right)
        ax = self.coef.ndim - 2
        coef = np.tensordot(self.coef, right, axes=([ax], [0]))
        coef = np.moveaxis(coef, ax, -1)
        return Affine(coef, self.const @ right)

    def __getitem__(self, idx) -> "Affine":
        idx = idx if isinstance(idx, tuple) else (idx,)
        return Affine(self.coef[idx + (Ellipsis,)] if Ellipsis not in idx
                      else self.coef[idx], self.const[idx])

    # element-wise maps
    @property
    def real(self) -> "Affine":
        return Affine(self.coef.real.copy(), self.const.real.copy())

    @property
    def imag(self) -> "Affine":
        return Affine(self.coef.imag.copy(), self.const.imag.copy())

    def conj(self) -> "Affine":
        return Affine(self.coef.conj(), self.const.conj())

    @property
    def H(self) -> "Affine":
        """Conjugate transpose of a matrix (or a column vector)."""
        if self.const.ndim == 1:
            return self.conj()
        return Affine(np.swapaxes(self.coef, 0, 1).conj(), self.const.T.conj())

    def trace(self) -> "Affine":
        return Affine(np.einsum("iik->k", self.coef), np.trace(self.const))

    def sum(self) -> "Affine":
        axes = tuple(range(self.const.ndim))
        return Affine(self.coef.sum(axis=axes), self.const.sum())

    def reshape(self, *shape) -> "Affine":
        const = self.const.reshape(*shape)
        return Affine(self.coef.reshape(const.shape + (self.nvars,)), const)

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.coef @ x[: self.nvars] + self.const

    def __repr__(self) -> str:
        return f"Affine(shape={self.shape}, nvars={self.nvars})"


def _lift(v) -> Affine:
    if isinstance(v, Affine):
        return v
    return Affine.constant(np.asarray(v))


def stack(items: Iterable) -> Affine:
    """Stack scalar or vector expressions into one vector expression."""
    items = [_lift(i) for i in items]
    n = max((i.nvars for i in items), default=0)
    coefs, consts = [], []
    for i in items:
        c = i._padded(n)
        coefs.append(c.reshape(-1, n))
        consts.append(np.atleast_1d(i.const).reshape(-1))
    dt = np.result_type(*[c.dtype for c in coefs])
    return Affine(np.vstack(coefs).astype(dt), np.concatenate(consts).astype(dt))


def quad_trace(mat: Affine, h: np.ndarray) -> Affine:
    """Tr(h X) for a matrix expression X, taken as real (h and X Hermitian)."""
    h = np.asarray(h)
    return Affine(np.einsum("ji,ijk->k", h, mat.coef).real,
                  np.real(np.trace(h @ mat.const)))


@dataclass
class Constraint:
    kind: str  # "eq" | "nonneg" | "soc" | "psd"
    name: str
    expr: Affine  # real vector; for psd the svec of the embedded matrix
    dim: int  # cone dimension (matrix side for psd)


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | unbounded | numerical-limit
    objective: float
    x: np.ndarray
    iterations: int
    dual_objective: float = float("nan")
    raw_status: str = ""
    primal_residual: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def value(self, expr: Affine):
        v = expr.value(self.x)
        return v


@dataclass
class SolverOptions:
    tol_gap: float = 1e-9
    tol_feas: float = 1e-8
    max_iter: int = 200
    verbose: bool = False
    accept_almost: bool = True
    residual_tol: float = 1e-7
    extra: dict = field(default_factory=dict)  # raw Clarabel settings


class ConicProgram:
    """Declared variables, constraints and a linear objective to maximize."""

    def __init__(self, name: str = "program"):
        self.name = name
        self.nvars = 0
        self.var_names: list[tuple[str, int, int]] = []
        self.constraints: list[Constraint] = []
        self.objective: Affine | None = None

    # variables
    def _alloc(self, name: str, n: int) -> int:
        start = self.nvars
        self.nvars += n
        self.var_names.append((name, start, n))
        return start

    def _unit(self, start: int, n: int) -> np.ndarray:
        c = np.zeros((n, self.nvars))
        c[np.arange(n), start + np.arange(n)] = 1.0
        return c

    def real(self, name: str, n: int | None = None) -> Affine:
        """Real scalar (n is None) or real vector of length n."""
        size = 1 if n is None else n
        start = self._alloc(name, size)
        e = Affine(self._unit(start, size), np.zeros(size))
        return e[0] if n is None else e

    def complex(self, name: str, n: int) -> Affine:
        start = self._alloc(name, 2 * n)
        c = np.zeros((n, self.nvars), dtype=complex)
        c[np.arange(n), start + np.arange(n)] = 1.0
        c[np.arange(n), start + n + np.arange(n)] = 1j
        return Affine(c, np.zeros(n, dtype=complex))

    def hermitian(self, name: str, n: int, psd: bool = True) -> Affine:
        """Hermitian n x n matrix variable; constrained PSD by default.

        A PSD variable is carried by a real symmetric PSD matrix S of size
        2n, mapped to ``Q = (S11 + S22)/2 + i (S21 - S12)/2``. The map sends
        the real PSD cone onto the Hermitian PSD cone, and unlike the usual
        block embedding it has no duplicated coordinates, which keeps the
        interior-point dual well posed when Q is rank deficient.
        """
        if psd:
            m = 2 * n
            s = self.sym(name, m)
            self.add_psd(s, name=f"{name}_psd")
            c = (0.5 * (s.coef[:n, :n] + s.coef[n:, n:])
                 + 0.5j * (s.coef[n:, :n] - s.coef[:n, n:]))
            return Affine(c, np.zeros((n, n), dtype=complex))
        start = self._alloc(name, n * n)
        c = np.zeros((n, n, self.nvars), dtype=complex)
        k = start
        for i in range(n):
            c[i, i, k] = 1.0
            k += 1
        for i in range(n):
            for j in range(i + 1, n):
                c[i, j, k] = 1.0
                c[j, i, k] = 1.0
                c[i, j, k + 1] = 1j
                c[j, i, k + 1] = -1j
                k += 2
        return Affine(c, np.zeros((n, n), dtype=complex))

    def sym(self, name: str, n: int) -> Affine:
        """Real symmetric n x n matrix variable (no cone attached)."""
        start = self._alloc(name, n * (n + 1) // 2)
        c = np.zeros((n, n, self.nvars))
        k = start
        for j in range(n):
            for i in range(j + 1):
                c[i, j, k] = 1.0
                c[j, i, k] = 1.0
                k += 1
        return Affine(c, np.zeros((n, n)))

    # constraints
    def _add(self, kind: str, name: str, expr: Affine, dim: int):
        if expr.coef.ndim != 2:
            raise ValueError("constraint expression must be a vector")
        if np.iscomplexobj(expr.coef) or np.iscomplexobj(expr.const):
            if (np.abs(expr.coef.imag).max(initial=0.0) > 1e-9 * max(
                    1.0, np.abs(expr.coef).max(initial=0.0))):
                raise ValueError(f"{name}: constraint must be real")
            expr = expr.real
        self.constraints.append(Constraint(kind, name, expr, dim))
        return len(self.constraints) - 1

    def add_eq(self, lhs, rhs=0.0, name: str = "eq") -> int:
        """lhs == rhs element-wise; complex sides split into re/im parts."""
        d = _lift(lhs) - _lift(rhs)
        d = d.reshape(-1) if d.shape != () else d.reshape(1)
        if np.iscomplexobj(d.coef) or np.iscomplexobj(d.const):
            d = stack([d.real, d.imag])
        return self._add("eq", name, d, d.shape[0])

    def add_le(self, lhs, rhs, name: str = "le") -> int:
        """lhs <= rhs element-wise (real sides)."""
        d = _lift(rhs) - _lift(lhs)
        d = d.reshape(-1) if d.shape != () else d.reshape(1)
        return self._add("nonneg", name, d, d.shape[0])

    def add_ge(self, lhs, rhs, name: str = "ge") -> int:
        return self.add_le(rhs, lhs, name=name)

    def add_soc(self, t, v, name: str = "soc") -> int:
        """t >= ||v||_2; complex entries of v count through |.|."""
        t = _lift(t)
        v = _lift(v)
        v = v.reshape(-1) if v.shape != () else v.reshape(1)
        if np.iscomplexobj(v.coef) or np.iscomplexobj(v.const):
            v = stack([v.real, v.imag])
        e = stack([t.real if np.iscomplexobj(t.const) else t, v])
        return self._add("soc", name, e, e.shape[0])

    def add_square_le(self, y, x, name: str = "sq") -> int:
        """|y|^2 <= x for a scalar expression y (real or complex)."""
        x = _lift(x)
        y = _lift(y)
        return self.add_soc((x + 1.0) * 0.5, stack([y, (x - 1.0) * 0.5]),
                            name=name)

    def add_rotated(self, e, f, z, name: str = "rsoc") -> int:
        """e * f >= ||z||^2 with e, f >= 0 (rotated cone as an SOC)."""
        e = _lift(e)
        f = _lift(f)
        return self.add_soc((e + f) * 0.5, stack([_lift(z).reshape(-1),
                                                  ((e - f) * 0.5).reshape(1)]),
                            name=name)

    def add_psd(self, mat, name: str = "psd") -> int:
        """Hermitian matrix expression is PSD (real embedding when complex)."""
        mat = _lift(mat)
        n = mat.shape[0]
        if mat.shape != (n, n):
            raise ValueError("psd constraint needs a square matrix")
        hermitian = 0.5 * (mat + mat.H)
        complex_part = (np.abs(hermitian.coef.imag).max(initial=0.0) > 0.0
                        or np.abs(hermitian.const.imag).max(initial=0.0) > 0.0)
        if complex_part:
            re, im = hermitian.real, hermitian.imag
            big = _block([[re, -im], [im, re]])
        else:
            big = hermitian.real
        return self._add("psd", name, svec(big), big.shape[0])

    def maximize(self, expr) -> None:
        e = _lift(expr)
        if np.iscomplexobj(e.coef) or np.iscomplexobj(e.const):
            e = e.real
        self.objective = e

    # inspection
    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.kind] = out.get(c.kind, 0) + 1
        return out

    def count_named(self, prefix: str) -> int:
        return sum(c.name.startswith(prefix) for c in self.constraints)

    def dump(self) -> str:
        """Plain-text listing, one line per constraint.

        Line format: ``<kind> <name> dim=<d> rows=<r> A=<i:j:v,...> b=<v,...>``
        where each row i of the lowered expression reads
        ``sum_j A[i, j] x[j] + b[i]`` and must lie in the named cone.
        The first line lists variables as ``var <name> <start> <size>``.
        """
        lines = [f"program {self.name} nvars={self.nvars}"]
        for name, start, size in self.var_names:
            lines.append(f"var {name} {start} {size}")
        if self.objective is not None:
            c = self.objective._padded(self.nvars)
            nz = np.flatnonzero(c)
            terms = ",".join(f"{j}:{c[j]:.17g}" for j in nz)
            lines.append(f"maximize {terms} const={float(self.objective.const):.17g}")
        for con in self.constraints:
            a = con.expr._padded(self.nvars)
            rows, cols = np.nonzero(a)
            terms = ",".join(f"{i}:{j}:{a[i, j]:.17g}" for i, j in zip(rows, cols))
            consts = ",".join(f"{v:.17g}" for v in con.expr.const)
            lines.append(f"{con.kind} {con.name} dim={con.dim} "
                         f"rows={con.expr.shape[0]} A={terms} b={consts}")
        return "\n".join(lines) + "\n"

    # lowering
    def lower(self):
        """Return (q, A, b, cones) with minimize q.x, A x + s = b, s in cones."""
        import clarabel

        order = {"eq": 0, "nonneg": 1, "soc": 2, "psd": 3}
        cons = sorted(self.constraints, key=lambda c: order[c.kind])
        blocks, consts, cones = [], [], []
        zero = nonneg = 0
        for c in cons:
            blocks.append(c.expr._padded(self.nvars))
            consts.append(c.expr.const)
            if c.kind == "eq":
                zero += c.expr.shape[0]
            elif c.kind == "nonneg":
                nonneg += c.expr.shape[0]
        if zero:
            cones.append(clarabel.ZeroConeT(zero))
        if nonneg:
            cones.append(clarabel.NonnegativeConeT(nonneg))
        for c in cons:
            if c.kind == "soc":
                cones.append(clarabel.SecondOrderConeT(c.dim))
            elif c.kind == "psd":
                cones.append(clarabel.PSDTriangleConeT(c.dim))
        a = np.vstack(blocks) if blocks else np.zeros((0, self.nvars))
        b = np.concatenate(consts) if consts else np.zeros(0)
        # expr = coef x + const lies in K  <=>  (-coef) x + s = const
        obj = (self.objective._padded(self.nvars) if self.objective is not None
               else np.zeros(self.nvars))
        return -obj, -a, b, cones, cons

    def residual(self, x: np.ndarray) -> float:
        """Largest cone violation at x, relative to each constraint's size.

        A violation is divided by ``max(1, |const| + |coef| |x|)`` of its own
        rows, so constraints written in large units are not penalized for
        rounding at their own scale.
        """
        worst = 0.0
        x = np.asarray(x, dtype=float)
        for c in self.constraints:
            v = c.expr.value(x)
            size = 1.0 + float(np.abs(c.expr.const).max(initial=0.0)
                               + (np.abs(c.expr.coef) @ np.abs(x[: c.expr.nvars])).max(initial=0.0))
            if c.kind == "eq":
                viol = np.abs(v).max(initial=0.0)
            elif c.kind == "nonneg":
                viol = max(0.0, -v.min(initial=0.0))
            elif c.kind == "soc":
                viol = max(0.0, np.linalg.norm(v[1:]) - v[0])
            else:
                viol = max(0.0, -np.linalg.eigvalsh(smat(v, c.dim))[0])
            worst = max(worst, float(viol) / size)
        return worst

    def solve(self, opts: SolverOptions | None = None) -> SolveResult:
        return solve(self, opts)


def _block(rows: list[list[Affine]]) -> Affine:
    n = max(e.nvars for r in rows for e in r)
    coef = np.concatenate(
        [np.concatenate([e._padded(n) for e in r], axis=1) for r in rows], axis=0)
    const = np.block([[e.const for e in r] for r in rows])
    return Affine(coef, const)


def svec(mat: Affine) -> Affine:
    """Upper triangle, column-major, off-diagonals scaled by sqrt(2)."""
    n = mat.shape[0]
    ii, jj, scale = [], [], []
    for j in range(n):
        for i in range(j + 1):
            ii.append(i)
            jj.append(j)
            scale.append(1.0 if i == j else SQRT2)
    ii, jj, scale = np.array(ii), np.array(jj), np.array(scale)
    return Affine(mat.coef[ii, jj] * scale[:, None], mat.const[ii, jj] * scale)


def smat(v: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    k = 0
    for j in range(n):
        for i in range(j + 1):
            if i == j:
                out[i, j] = v[k]
            else:
                out[i, j] = out[j, i] = v[k] / SQRT2
            k += 1
    return out


_STATUS = {
    "Solved": "optimal",
    "AlmostSolved": "optimal",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostDualInfeasible": "unbounded",
}


def solve(prog: ConicProgram, opts: SolverOptions | None = None) -> SolveResult:
    """Solve with Clarabel; never raises on solver failure."""
    import clarabel

    opts = opts or SolverOptions()
    q, a, b, cones, _ = prog.lower()
    n = prog.nvars
    settings = clarabel.DefaultSettings()
    settings.verbose = opts.verbose
    settings.tol_gap_abs = opts.tol_gap
    settings.tol_gap_rel = opts.tol_gap
    settings.tol_feas = opts.tol_feas
    settings.max_iter = opts.max_iter
    for k, v in opts.extra.items():
        setattr(settings, k, v)
    try:
        solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)), q,
                                        sp.csc_matrix(a), b, cones, settings)
        sol = solver.solve()
    except Exception as exc:  # solver setup failure is reported, not raised
        return SolveResult("numerical-limit", float("nan"), np.full(n, np.nan),
                           0, raw_status=f"error: {exc}")
    raw = str(sol.status).split(".")[-1]
    x = np.asarray(sol.x, dtype=float)
    status = _STATUS.get(raw, "numerical-limit")
    if raw == "AlmostSolved" and not opts.accept_almost:
        status = "numerical-limit"
    res = prog.residual(x) if status == "optimal" else float("nan")
    obj = float("nan")
    if status == "optimal":
        obj = float(prog.objective.value(x)) if prog.objective is not None else 0.0
        if not np.isfinite(res) or res > opts.residual_tol:
            status = "numerical-limit"
    dual = -float(sol.obj_val_dual) if np.isfinite(sol.obj_val_dual) else float("nan")
    if prog.objective is not None:
        dual += float(np.real(prog.objective.const))
    return SolveResult(status, obj, x, int(sol.iterations), dual, raw, res)


# exponential cone approximated by second-order cones

EXP_TAYLOR_CONST = 19.0 / 72.0


@dataclass
class ExpConeHandle:
    slacks: Affine
    first: int
    count: int
    U: int = field(default=6)


def add_exp_cone_soc(prog: ConicProgram, a, phi, U: int = 6,
                     name: str = "exp", center: float = 0.0) -> ExpConeHandle:
    """Install ``1 + a >= exp(phi)`` as a chain of U + 4 quadratic slacks.

    With ``x = (phi - center) / 2**U`` the slacks satisfy q1 >= (1 + x)^2,
    q2 >= (5/6 + x/2)^2, q3 >= q1^2 and q4 >= 19/72 + q2 + q3/24, which
    makes q4 at least the fourth-order Taylor polynomial of e^x. U repeated
    squarings lift q4 to e^(phi - center), and the top slack is bounded by
    ``(1 + a) * exp(-center)``. ``center = 0`` is the plain chain; a center
    near the expected value of phi keeps the slacks close to one.
    """
    if U < 3:
        raise ValueError("U must be at least 3")
    a = _lift(a)
    phi = _lift(phi)
    q = prog.real(f"{name}_q", U + 4)
    first = len(prog.constraints)
    x = (phi - center) * (1.0 / 2**U)
    prog.add_le(q[U + 3], (a + 1.0) * np.exp(-center), name=f"{name}_top")
    prog.add_square_le(x + 1.0, q[0], name=f"{name}_q1")
    prog.add_square_le(x * 0.5 + 5.0 / 6.0, q[1], name=f"{name}_q2")
    prog.add_square_le(q[0], q[2], name=f"{name}_q3")
    prog.add_ge(q[3], q[1] + q[2] * (1.0 / 24.0) + EXP_TAYLOR_CONST,
                name=f"{name}_q4")
    for i in range(4, U + 4):
        prog.add_square_le(q[i - 1], q[i], name=f"{name}_q{i + 1}")
    return ExpConeHandle(q, first, len(prog.constraints) - first, U)


def exp_macro_value(phi: float, U: int = 6) -> float:
    """Value of 1 + a at the tightest point of the macro, minus one."""
    x = phi / 2**U
    q1 = (1.0 + x) ** 2
    q2 = (5.0 / 6.0 + x / 2.0) ** 2
    q4 = EXP_TAYLOR_CONST + q2 + q1**2 / 24.0
    return q4 ** (2**U) - 1.0


def log_macro(y: float, U: int = 6) -> float:
    """Largest phi with exp_macro_value(phi) <= y (inverse of the macro)."""
    target = (1.0 + y) ** (1.0 / 2**U)
    # q4(x) = 1 + x + x^2/2 + x^3/6 + x^4/24 is increasing where it matters
    x = np.log(target)
    for _ in range(50):
        p = 1 + x + x**2 / 2 + x**3 / 6 + x**4 / 24
        dp = 1 + x + x**2 / 2 + x**3 / 6
        step = (p - target) / dp
        x -= step
        if abs(step) < 1e-16:
            break
    return float(x * 2**U)
