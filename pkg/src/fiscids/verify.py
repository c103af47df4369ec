"""Verification battery: grid comparison against a reference evaluator,
cross-representation comparison, snapshot tables, and an integration-free
oracle for the transcendentally transcendental example system

    z1' = (z2 - z1) xi1,   z2' = z2 (z2 - z1) xi2,   z(0) = (0, 1),   y = z1.

Along its flow z2 = exp(xi2 z1 / xi1), and u = xi2 z1 / xi1 obeys
u' = xi1 (x e^u - u) with x = xi2 / xi1, so u(1) = G(xi1, x) where G inverts
F(s, x) = int_0^s du / (x e^u - u) in s.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import expr as E
from .calculus import evaluate
from .errors import BracketFailure, DomainError, FiscidsError
from .integrate import IntegrationConfig, compile_system, solve_batch


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid; the first dimension varies slowest."""

    dims: tuple  # ((lo, hi, count), ...)

    def __post_init__(self):
        dims = tuple((float(lo), float(hi), int(c)) for lo, hi, c in self.dims)
        for k, (lo, hi, c) in enumerate(dims):
            if not lo < hi:
                raise ValueError(f"dimension {k}: need lo < hi, got {lo}:{hi}")
            if c < 2:
                raise ValueError(f"dimension {k}: need at least 2 points, got {c}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """``lo:hi:count`` per dimension, comma separated."""
        dims = []
        for part in text.split(","):
            fields = part.strip().split(":")
            if len(fields) != 3:
                raise ValueError(f"bad box component {part!r}; expected lo:hi:count")
            dims.append((float(fields[0]), float(fields[1]), int(fields[2])))
        return cls(tuple(dims))

    @property
    def n(self) -> int:
        return len(self.dims)

    def __len__(self):
        return math.prod(c for _, _, c in self.dims)

    def points(self) -> np.ndarray:
        axes = [np.linspace(lo, hi, c) for lo, hi, c in self.dims]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _points(grid) -> np.ndarray:
    if isinstance(grid, GridSpec):
        return grid.points()
    return np.asarray(grid, dtype=float).reshape(len(grid), -1) if len(grid) else np.zeros((0, 0))


def thread_count() -> int:
    env = os.environ.get("FISCIDS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def evaluate_grid(sys, points: np.ndarray, times=(1.0,), config: IntegrationConfig | None = None):
    """solve_batch over ``points`` split into chunks, one per worker thread.
    Results are reassembled in grid order, so they do not depend on the
    number of threads."""
    cs = compile_system(sys)
    B = len(points)
    workers = min(thread_count(), max(B, 1))
    if workers <= 1 or B < 2 * workers:
        return solve_batch(cs, points, times, config)
    chunks = np.array_split(np.arange(B), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda ix: solve_batch(cs, points[ix], times, config), chunks))
    first = parts[0]
    first.states = np.concatenate([p.states for p in parts], axis=1)
    first.outputs = np.concatenate([p.outputs for p in parts], axis=1)
    first.errors = [e for p in parts for e in p.errors]
    return first


# ---------------------------------------------------------------------------
# reports


@dataclass
class ErrorReport:
    max_abs: float = 0.0
    max_rel: float = 0.0
    argmax: tuple | None = None
    failures: list = field(default_factory=list)  # (xi, kind)
    n_points: int = 0

    @property
    def n_success(self) -> int:
        return self.n_points - len(self.failures)

    def format(self) -> str:
        lines = [
            f"points    {self.n_points}",
            f"succeeded {self.n_success}",
            f"failed    {len(self.failures)}",
            f"max_abs   {self.max_abs:.16e}",
            f"max_rel   {self.max_rel:.16e}",
            f"argmax    {'none' if self.argmax is None else ','.join(f'{v:.16e}' for v in self.argmax)}",
        ]
        for xi, kind in self.failures:
            lines.append(f"failure   {','.join(f'{v:.16e}' for v in xi)}  {kind}")
        return "\n".join(lines)


def _failure_kind(err) -> str:
    return f"{type(err).__name__}: {err}"


def _reduce(points, ours, theirs, failures_a, failures_b) -> ErrorReport:
    report = ErrorReport(n_points=len(points))
    for b, xi in enumerate(points):
        key = tuple(float(v) for v in xi)
        fail = failures_a[b] or failures_b[b]
        if fail:
            report.failures.append((key, fail))
            continue
        ya, yb = ours[b], theirs[b]
        if not (np.all(np.isfinite(ya)) and np.all(np.isfinite(yb))):
            report.failures.append((key, "DomainError: output not finite"))
            continue
        diff = np.abs(ya - yb)
        abs_err = float(np.max(diff)) if diff.size else 0.0
        rel_err = float(np.max(diff / np.maximum(1.0, np.abs(yb)))) if diff.size else 0.0
        if report.argmax is None or abs_err > report.max_abs:
            report.max_abs, report.argmax = abs_err, key
        report.max_rel = max(report.max_rel, rel_err)
    return report


def grid_compare(sys, reference: Callable, grid, config: IntegrationConfig | None = None) -> ErrorReport:
    """Terminal output y(1; xi) against ``reference(xi)`` on every grid point."""
    pts = _points(grid)
    res = evaluate_grid(sys, pts, (1.0,), config)
    ours = res.outputs[0] if len(pts) else np.zeros((0, 0))
    fa = [None if e is None else _failure_kind(e) for e in res.errors]
    ref, fb = [], []
    for xi in pts:
        try:
            val = np.atleast_1d(np.asarray(reference(xi), dtype=float))
            ref.append(val)
            fb.append(None if np.all(np.isfinite(val)) else "reference: not finite")
        except (FiscidsError, ArithmeticError, ValueError) as exc:
            ref.append(None)
            fb.append(f"reference: {_failure_kind(exc)}")
    return _reduce(pts, ours, ref, fa, fb)


def cross_compare(sys_a, sys_b, grid, config: IntegrationConfig | None = None) -> ErrorReport:
    if sys_a.n != sys_b.n or sys_a.m != sys_b.m:
        raise ValueError("systems differ in input or output dimension")
    pts = _points(grid)
    ra = evaluate_grid(sys_a, pts, (1.0,), config)
    rb = evaluate_grid(sys_b, pts, (1.0,), config)
    fa = [None if e is None else _failure_kind(e) for e in ra.errors]
    fb = [None if e is None else _failure_kind(e) for e in rb.errors]
    if not len(pts):
        return ErrorReport()
    return _reduce(pts, ra.outputs[0], rb.outputs[0], fa, fb)


def expr_reference(e: E.Expr, names: Sequence[str]) -> Callable:
    """Reference evaluator xi -> phi(xi) for a parsed expression."""

    def ref(xi):
        return evaluate(e, dict(zip(names, map(float, xi))))

    return ref


# ---------------------------------------------------------------------------
# snapshots


@dataclass
class Snapshot:
    header: list
    rows: list

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([v if isinstance(v, str) else f"{v:.16e}" for v in row])
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def snapshot(sys, grid, times: Sequence[float], config: IntegrationConfig | None = None) -> Snapshot:
    """Rows (t, xi..., y..., status), times-major then grid order."""
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be sorted")
    pts = _points(grid)
    n = sys.n
    header = ["t", *(f"xi_{j + 1}" for j in range(n)), *(f"y_{k + 1}" for k in range(sys.m)), "status"]
    if not len(pts):
        return Snapshot(header, [])
    res = evaluate_grid(sys, pts, times, config)
    rows = []
    for r, t in enumerate(times):
        for b, xi in enumerate(pts):
            err = res.errors[b]
            y = res.outputs[r, b]
            if err is not None and t > 0.0:
                rows.append([t, *xi, *(["nan"] * sys.m), type(err).__name__])
            elif not np.all(np.isfinite(y)):
                rows.append([t, *xi, *(["nan"] * sys.m), "DomainError"])
            else:
                rows.append([t, *xi, *y, "ok"])
    return Snapshot(header, rows)


# ---------------------------------------------------------------------------
# integration-free oracle


def _check_x(x: float):
    if not x > 1.0 / math.e:
        raise DomainError(None, f"x = {x} must exceed 1/e")


def _integrand(x: float):
    floor = 1.0 + math.log(x) - 1e-12

    def f(u):
        d = x * math.exp(u) - u
        assert d >= floor, f"integrand denominator {d} below its minimum {floor}"
        return 1.0 / d

    return f


def adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 60) -> float:
    """Adaptive Simpson with Richardson correction, absolute tolerance."""
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f((a + b) / 2), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = (lo + hi) / 2
        fl, fr = f((lo + mid) / 2), f((mid + hi) / 2)
        left = (mid - lo) / 6 * (flo + 4 * fl + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * fr + fhi)
        delta = left + right - s
        if depth >= max_depth or abs(delta) <= 15 * eps:
            total += left + right + delta / 15
        else:
            stack.append((mid, hi, fmid, fr, fhi, right, eps / 2, depth + 1))
            stack.append((lo, mid, flo, fl, fmid, left, eps / 2, depth + 1))
    return total


def gauss_legendre(f, a: float, b: float, panels: int = 64, order: int = 20) -> float:
    """Composite Gauss-Legendre rule; the independent check on Simpson."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half, mid = (hi - lo) / 2, (hi + lo) / 2
        total += half * math.fsum(w * f(mid + half * t) for t, w in zip(nodes, weights))
    return total


def tt_F(s: float, x: float, tol: float = 1e-12) -> float:
    """F(s, x) = int_0^s du / (x e^u - u), defined for x > 1/e."""
    _check_x(x)
    return adaptive_simpson(_integrand(x), 0.0, float(s), tol)


def tt_F_check(s: float, x: float, tol: float = 1e-12) -> tuple[float, float]:
    """(Simpson, Gauss-Legendre) values of F(s, x) for self-testing."""
    _check_x(x)
    f = _integrand(x)
    return adaptive_simpson(f, 0.0, float(s), tol), gauss_legendre(f, 0.0, float(s))


def tt_G(w: float, x: float, tol: float = 1e-12, max_doublings: int = 60) -> float:
    """The s >= 0 with F(s, x) = w, for 0 < w < 1/x and x > 1/e."""
    _check_x(x)
    if not 0.0 < w < 1.0 / x:
        raise DomainError(None, f"w = {w} outside (0, 1/x = {1.0 / x})")
    quad_tol = tol * 1e-3
    g = lambda s: tt_F(s, x, quad_tol) - w
    hi = 1.0
    for _ in range(max_doublings):
        if g(hi) > 0:
            break
        hi *= 2
    else:
        raise BracketFailure(f"no bracket for w = {w}, x = {x} below s = {hi}")
    # |dF/ds| <= 1 / (1 + ln x), so this s-tolerance keeps |F(s) - w| <= tol
    xtol = tol * min(1.0, 1.0 + math.log(x))
    return brentq(g, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)


def in_tt_domain(xi1: float, xi2: float) -> bool:
    return 0.0 < xi1 < math.e * xi2 and 0.0 < xi2 < 1.0


def tt_oracle(xi1: float, xi2: float, tol: float = 1e-12) -> float:
    """y(1; xi1, xi2) = xi1 G(xi1, xi2/xi1) / xi2 without integrating the ODE."""
    if not in_tt_domain(xi1, xi2):
        raise DomainError(None, f"({xi1}, {xi2}) outside 0 < xi1 < e*xi2, 0 < xi2 < 1")
    return xi1 * tt_G(xi1, xi2 / xi1, tol) / xi2
