"""Integration of  z' = F(z) (xi - xi0)  on t in [0, 1].

The default method is the Dormand-Prince 5(4) pair with its quartic dense
output; ``fixed_rk4`` is the classical four-stage method on a uniform grid
with cubic Hermite interpolation between nodes.

Many inputs xi can be integrated at once.  Every element keeps its own time
and step size, and all arithmetic is elementwise (no BLAS reductions, step
factors computed per element with scalar ``math``), so an element's result
does not depend on which batch it was integrated in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calculus import evaluate_array
from .errors import Blowup, DomainError, MaxStepsExceeded, StepUnderflow
from .model import TrivialRepresentation, entry_as_rational

METHODS = ("adaptive_rk45", "fixed_rk4")


@dataclass(frozen=True)
class IntegrationConfig:
    method: str = "adaptive_rk45"
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    fixed_steps: int = 1000
    max_steps: int = 1_000_000
    blowup_bound: float = 1e12

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.fixed_steps < 1 or self.max_steps < 1:
            raise ValueError("step counts must be at least 1")
        if not self.blowup_bound > 0:
            raise ValueError("blowup_bound must be positive")


DEFAULT_CONFIG = IntegrationConfig()


# ---------------------------------------------------------------------------
# compiled right-hand side


class _Entry:
    """A rational entry as flat (monomial index, float coefficient) lists."""

    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num = num
        self.den = den  # None when the denominator is 1


class CompiledSystem:
    """Float evaluator for F and h; polynomials become term lists over a
    shared table of monomial values."""

    def __init__(self, sys):
        self.trivial = isinstance(sys, TrivialRepresentation)
        if self.trivial:
            self.N = self.n = sys.n
            self.m = sys.m
            self.phi = sys.phi
            self.z0 = np.zeros(self.N)
            self.base = np.zeros(self.n)
            return
        self.N, self.n, self.m = sys.N, sys.n, sys.m
        self.z0 = np.array(sys.z0_values(), dtype=float)
        self.base = np.array(sys.base_values(), dtype=float)
        self.names = sys.state_names
        self.monos: list = []
        self._mono_index: dict = {}
        self.symbolic: dict = {}
        self.F = [[self._compile(e, ("F", i, j)) for j, e in enumerate(row)] for i, row in enumerate(sys.F)]
        self.h = [self._compile(e, ("h", k)) for k, e in enumerate(sys.h)]
        self.max_exp = [max((mono[i] for mono in self.monos), default=0) for i in range(self.N)]

    def _terms(self, p):
        out = []
        for mono, c in p.sorted_terms():
            if mono not in self._mono_index:
                self._mono_index[mono] = len(self.monos)
                self.monos.append(mono)
            out.append((self._mono_index[mono], float(c)))
        return out

    def _compile(self, entry, where):
        r = entry_as_rational(entry, self.names)
        if r is None:
            # symbolic entry of a General system
            self.symbolic[where] = entry
            return None
        if r.is_zero():
            return _Entry([], None)
        den = None if r.is_polynomial() else self._terms(r.den)
        num = self._terms(r.num)
        if den is None:
            scale = 1.0 / float(r.den.constant_term())
            num = [(k, c * scale) for k, c in num]
        return _Entry(num, den)

    def _mono_values(self, Z: np.ndarray) -> list:
        powers = []
        for i in range(self.N):
            col = Z[:, i]
            pw = [None, col]
            for _ in range(2, self.max_exp[i] + 1):
                pw.append(pw[-1] * col)
            powers.append(pw)
        values = []
        for mono in self.monos:
            v = None
            for i, e in enumerate(mono):
                if e:
                    v = powers[i][e] if v is None else v * powers[i][e]
            values.append(np.ones(Z.shape[0]) if v is None else v)
        return values

    @staticmethod
    def _sum(terms, mv, B):
        if not terms:
            return np.zeros(B)
        k, c = terms[0]
        acc = c * mv[k]
        for k, c in terms[1:]:
            acc = acc + c * mv[k]
        return acc

    def _entry(self, entry, where, mv, Z):
        B = Z.shape[0]
        if entry is None:
            env = {nm: Z[:, i] for i, nm in enumerate(self.names)}
            return np.broadcast_to(evaluate_array(self.symbolic[where], env), (B,)).astype(float)
        val = self._sum(entry.num, mv, B)
        if entry.den is not None:
            val = val / self._sum(entry.den, mv, B)
        return val

    def rhs(self, Z: np.ndarray, U: np.ndarray) -> np.ndarray:
        """dz/dt for each row of Z under the shifted input rows U."""
        if self.trivial:
            return U.copy()
        B = Z.shape[0]
        out = np.empty((B, self.N))
        with np.errstate(all="ignore"):
            mv = self._mono_values(Z)
            for i, row in enumerate(self.F):
                acc = np.zeros(B)
                for j, entry in enumerate(row):
                    if entry is not None and not entry.num:
                        continue
                    acc = acc + self._entry(entry, ("F", i, j), mv, Z) * U[:, j]
                out[:, i] = acc
        return out

    def output(self, Z: np.ndarray) -> np.ndarray:
        B = Z.shape[0]
        if self.trivial:
            return np.array([self.phi_row(z) for z in Z]).reshape(B, self.m)
        out = np.empty((B, self.m))
        with np.errstate(all="ignore"):
            mv = self._mono_values(Z)
            for k, entry in enumerate(self.h):
                out[:, k] = self._entry(entry, ("h", k), mv, Z)
        return out

    def phi_row(self, z) -> list:
        if not np.all(np.isfinite(z)):
            return [math.nan] * self.m
        y = self.phi(list(map(float, z)))
        return [float(y)] if np.isscalar(y) else [float(v) for v in y]


def compile_system(sys) -> CompiledSystem:
    return sys if isinstance(sys, CompiledSystem) else CompiledSystem(sys)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_E = [-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40]
# dense output: y(t + s h) = y + h * sum_i K_i * (P[i] . (s, s^2, s^3, s^4))
_P = [
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
]
_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 10.0


def _combine(coeffs, K, skip_zero=True):
    acc = None
    for c, k in zip(coeffs, K):
        if skip_zero and c == 0.0:
            continue
        term = c * k
        acc = term if acc is None else acc + term
    return acc


def _rms(X: np.ndarray) -> np.ndarray:
    acc = np.zeros(X.shape[0])
    for i in range(X.shape[1]):
        acc = acc + X[:, i] * X[:, i]
    return np.sqrt(acc / max(X.shape[1], 1))


def _initial_step(cs, z0, f0, U, cfg) -> np.ndarray:
    scale = cfg.abs_tol + np.abs(z0) * cfg.rel_tol
    d0 = _rms(z0 / scale)
    d1 = _rms(f0 / scale)
    h0 = np.array([1e-6 if (a < 1e-5 or b < 1e-5) else 0.01 * a / b for a, b in zip(d0, d1)])
    f1 = cs.rhs(z0 + h0[:, None] * f0, U)
    with np.errstate(all="ignore"):
        d2 = _rms((f1 - f0) / scale) / h0
    out = []
    for a, b, c in zip(h0, d1, d2):
        if not math.isfinite(c):
            out.append(a)
            continue
        if b <= 1e-15 and c <= 1e-15:
            h1 = max(1e-6, a * 1e-3)
        else:
            h1 = (0.01 / max(b, c)) ** (1 / 5)
        out.append(min(100 * a, h1, 1.0))
    return np.array(out)


def _dense(z, K, hh, s):
    coeff = []
    for row in _P:
        coeff.append(s * (row[0] + s * (row[1] + s * (row[2] + s * row[3]))))
    acc = None
    for i, k in enumerate(K):
        if not np.any(coeff[i]):
            continue
        term = coeff[i][:, None] * k
        acc = term if acc is None else acc + term
    return z + hh[:, None] * acc


@dataclass
class BatchResult:
    """States and outputs at the requested times for a batch of inputs.
    Rows of failed elements hold nan from the failure time on."""

    times: np.ndarray
    states: np.ndarray  # (R, B, N)
    outputs: np.ndarray  # (R, B, m)
    errors: list  # per element: None or the IntegrationError
    steps: list = field(default_factory=list)  # per element: list of (t, z) accepted steps, if recorded


def _rk45(cs, Z0, U, times, cfg, record):
    B, N = Z0.shape
    R = len(times)
    S = np.full((R, B, N), np.nan)
    errors: list = [None] * B
    steps = [[(0.0, Z0[b].copy())] for b in range(B)] if record else []
    for r, tau in enumerate(times):
        if tau == 0.0:
            S[r] = Z0
    Z = Z0.copy()
    t = np.zeros(B)
    f = cs.rhs(Z, U)
    h = _initial_step(cs, Z, f, U, cfg)
    rejected = np.zeros(B, dtype=bool)
    nsteps = np.zeros(B, dtype=np.int64)
    active = np.ones(B, dtype=bool)
    for b in range(B):
        if not np.all(np.isfinite(f[b])):
            errors[b] = Blowup(0.0)
            active[b] = False

    while active.any():
        idx = np.nonzero(active)[0]
        z, k0, u, tt = Z[idx], f[idx], U[idx], t[idx]
        hh = h[idx].copy()
        last = hh >= 1.0 - tt
        hh = np.where(last, 1.0 - tt, hh)

        K = [k0]
        for s in range(1, 6):
            dz = _combine(_A[s], K)
            K.append(cs.rhs(z + hh[:, None] * dz, u))
        z_new = z + hh[:, None] * _combine(_B, K)
        f_new = cs.rhs(z_new, u)
        K.append(f_new)
        with np.errstate(all="ignore"):
            err = hh[:, None] * _combine(_E, K)
            scale = cfg.abs_tol + np.maximum(np.abs(z), np.abs(z_new)) * cfg.rel_tol
            err_norm = _rms(err / scale)

        t_new = np.where(last, 1.0, tt + hh)
        accept_idx = []
        for a, b in enumerate(idx):
            nsteps[b] += 1
            e = err_norm[a]
            if nsteps[b] > cfg.max_steps:
                errors[b], active[b] = MaxStepsExceeded(float(tt[a])), False
                continue
            min_step = 10 * (math.nextafter(float(tt[a]), math.inf) - float(tt[a]))
            if not math.isfinite(e):
                h[b] = hh[a] * _MIN_FACTOR
                rejected[b] = True
            elif e < 1.0:
                if not np.all(np.isfinite(z_new[a])) or np.max(np.abs(z_new[a])) > cfg.blowup_bound:
                    errors[b], active[b] = Blowup(float(t_new[a])), False
                    continue
                fac = _MAX_FACTOR if e == 0.0 else min(_MAX_FACTOR, _SAFETY * e ** (-1 / 5))
                if rejected[b]:
                    fac = min(1.0, fac)
                rejected[b] = False
                h[b] = hh[a] * fac
                accept_idx.append(a)
                continue
            else:
                h[b] = hh[a] * max(_MIN_FACTOR, _SAFETY * e ** (-1 / 5))
                rejected[b] = True
            if h[b] < min_step:
                errors[b], active[b] = StepUnderflow(float(tt[a])), False

        if not accept_idx:
            continue
        acc = np.array(accept_idx)
        sel = idx[acc]
        for r, tau in enumerate(times):
            inside = (tt[acc] < tau) & (tau <= t_new[acc])
            if not inside.any():
                continue
            rows = acc[inside]
            exact = tau == t_new[rows]
            S[r, idx[rows]] = z_new[rows]
            interp = ~exact
            if interp.any():
                ri = rows[interp]
                s_frac = (tau - tt[ri]) / hh[ri]
                S[r, idx[ri]] = _dense(z[ri], [k[ri] for k in K], hh[ri], s_frac)
        Z[sel] = z_new[acc]
        f[sel] = f_new[acc]
        t[sel] = t_new[acc]
        if record:
            for a in accept_idx:
                steps[idx[a]].append((float(t_new[a]), z_new[a].copy()))
        done = t[sel] >= 1.0
        active[sel[done]] = False

    _mask_failures(S, times, errors)
    return S, errors, steps


def _rk4(cs, Z0, U, times, cfg, record):
    B, N = Z0.shape
    R = len(times)
    S = np.full((R, B, N), np.nan)
    errors: list = [None] * B
    n_steps = cfg.fixed_steps
    hstep = 1.0 / n_steps
    steps = [[(0.0, Z0[b].copy())] for b in range(B)] if record else []
    for r, tau in enumerate(times):
        if tau == 0.0:
            S[r] = Z0
    Z = Z0.copy()
    alive = np.ones(B, dtype=bool)
    f = cs.rhs(Z, U)
    for k in range(n_steps):
        t0, t1 = k / n_steps, (k + 1) / n_steps
        k1 = f
        k2 = cs.rhs(Z + (0.5 * hstep) * k1, U)
        k3 = cs.rhs(Z + (0.5 * hstep) * k2, U)
        k4 = cs.rhs(Z + hstep * k3, U)
        Z1 = Z + (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        f1 = cs.rhs(Z1, U)
        bad = alive & (~np.all(np.isfinite(Z1), axis=1) | (np.max(np.abs(Z1), axis=1) > cfg.blowup_bound))
        for b in np.nonzero(bad)[0]:
            errors[b] = Blowup(t1)
        alive &= ~bad
        for r, tau in enumerate(times):
            if not (t0 < tau <= t1):
                continue
            if tau == t1:
                S[r, alive] = Z1[alive]
                continue
            s = (tau - t0) / hstep
            h00, h10 = (1 + 2 * s) * (1 - s) ** 2, s * (1 - s) ** 2
            h01, h11 = s * s * (3 - 2 * s), s * s * (s - 1)
            val = h00 * Z + h10 * hstep * k1 + h01 * Z1 + h11 * hstep * f1
            S[r, alive] = val[alive]
        if record:
            for b in np.nonzero(alive)[0]:
                steps[b].append((t1, Z1[b].copy()))
        Z, f = Z1, f1
        if not alive.any():
            break
    _mask_failures(S, times, errors)
    return S, errors, steps


def _mask_failures(S, times, errors):
    for b, err in enumerate(errors):
        if err is not None:
            for r, tau in enumerate(times):
                if tau > 0.0:
                    S[r, b] = np.nan


def _check_times(times) -> np.ndarray:
    ts = np.asarray(times, dtype=float).reshape(-1)
    if np.any(ts < 0.0) or np.any(ts > 1.0) or np.any(~np.isfinite(ts)):
        raise ValueError("times must lie in [0, 1]")
    return ts


def solve_batch(sys, xis, times: Sequence[float] = (1.0,), config: IntegrationConfig | None = None,
                record: bool = False) -> BatchResult:
    """Integrate every row of ``xis`` and sample states and outputs at
    ``times``.  Failures are reported per element, never raised."""
    cfg = config or DEFAULT_CONFIG
    cs = compile_system(sys)
    X = np.atleast_2d(np.asarray(xis, dtype=float))
    if X.shape[1] != cs.n:
        raise ValueError(f"expected inputs of length {cs.n}, got {X.shape[1]}")
    ts = _check_times(times)
    B = X.shape[0]
    U = X - cs.base[None, :]
    Z0 = np.tile(cs.z0, (B, 1))
    if B == 0:
        return BatchResult(ts, np.zeros((len(ts), 0, cs.N)), np.zeros((len(ts), 0, cs.m)), [], [])
    if np.all(ts == 0.0) and not record:
        S = np.broadcast_to(Z0, (len(ts), B, cs.N)).copy()
        errors, steps = [None] * B, []
    elif cs.trivial and not record:
        # dz/dt = xi from z = 0 has the closed form z(t) = t*xi
        S = ts[:, None, None] * U[None, :, :]
        errors, steps = [None] * B, []
    elif cfg.method == "fixed_rk4":
        S, errors, steps = _rk4(cs, Z0, U, ts, cfg, record)
    else:
        S, errors, steps = _rk45(cs, Z0, U, ts, cfg, record)
    Y = np.stack([cs.output(S[r]) for r in range(len(ts))]) if len(ts) else np.zeros((0, B, cs.m))
    return BatchResult(ts, S, Y, errors, steps)


@dataclass
class Trajectory:
    """Accepted steps of one integration: times[0] = 0 with states[0] = z0."""

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    xi: np.ndarray


def integrate(sys, xi, config: IntegrationConfig | None = None) -> Trajectory:
    """Integrate one input over [0, 1], keeping every accepted step.
    Raises an :class:`IntegrationError` on failure."""
    cs = compile_system(sys)
    res = solve_batch(cs, [list(xi)], (1.0,), config, record=True)
    if res.errors[0] is not None:
        raise res.errors[0]
    times = np.array([t for t, _ in res.steps[0]])
    states = np.array([z for _, z in res.steps[0]])
    return Trajectory(times, states, cs.output(states), np.asarray(xi, dtype=float))


def output_at(sys, xi, t: float = 1.0, config: IntegrationConfig | None = None) -> np.ndarray:
    """y(t; xi).  At t = 0 this is h(z0) with no integration at all."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    res = solve_batch(sys, [list(xi)], (t,), config)
    if res.errors[0] is not None:
        raise res.errors[0]
    y = res.outputs[0, 0]
    if not np.all(np.isfinite(y)):
        raise DomainError(None, f"output map undefined at z({t})")
    return y


def initial_output(sys) -> np.ndarray:
    cs = compile_system(sys)
    return cs.output(cs.z0[None, :])[0]
