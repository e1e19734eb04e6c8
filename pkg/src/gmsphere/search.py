"""Independent numerical oracle: minimize curvature over horizontal
2-planes, calibrate the zero-detection threshold, and run Monte Carlo
audits of the zero-set classification.

The minimizer runs multistart projected gradient descent over orthonormal
coordinate pairs in the 7-dimensional horizontal space. The objective is
the quartic contraction of a fixed curvature-like tensor, so the central
finite differences of the objective coincide with their exact closed form
(the objective is quadratic in each argument separately); they are
evaluated in that stable closed form. Steps use an Armijo backtracking
line search seeded by a Barzilai-Borwein step guess, with Gram-Schmidt
re-projection onto the constraint after every trial step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Optional, Sequence

import numpy as np

from .sp2 import AlgebraElement, GroupElement, haar_sample
from .cheeger import MetricParams, algebra_to_coords, coords_to_algebra, curvature_tensor
from .submersion import (a_table, horizontal_curvature, horizontal_space,
                         oneill_tensor)
from .zeroset import classify, make_z_point, perturb_point

DEFAULT_STARTS = 64
GRAD_TOL = 1e-12
STEP_TOL = 1e-12
# roundoff plateau of the quartic objective; flat planes must be resolved
# this far down so their bracket residuals (~sqrt(kappa)) reach 1e-7 scale
VALUE_FLOOR = 2e-15
ZERO_CANDIDATE = 1e-4
MAX_ITER = 2000
_ARMIJO_C1 = 1e-4


class CalibrationError(RuntimeError):
    """Zero/nonzero populations failed to separate."""


@dataclass
class MinResult:
    """Outcome of a multistart plane-curvature minimization."""

    value: float
    x_coords: np.ndarray          # canonical 10-dim coordinates
    y_coords: np.ndarray
    X: AlgebraElement
    Y: AlgebraElement
    iterations: int
    converged: bool
    status: str
    starts: int


def _orthonormal_pairs(n: int, dim: int, rng: np.random.Generator):
    """Sequentially drawn random orthonormal pairs; drawing k pairs yields
    a prefix of drawing 2k pairs with the same generator state."""
    xs = np.empty((n, dim))
    ys = np.empty((n, dim))
    for i in range(n):
        x = rng.standard_normal(dim)
        x /= np.linalg.norm(x)
        y = rng.standard_normal(dim)
        y -= (y @ x) * x
        y /= np.linalg.norm(y)
        xs[i] = x
        ys[i] = y
    return xs, ys


def _retract(xs, ys):
    xs = xs / np.linalg.norm(xs, axis=1, keepdims=True)
    ys = ys - np.sum(ys * xs, axis=1, keepdims=True) * xs
    ys = ys / np.linalg.norm(ys, axis=1, keepdims=True)
    return xs, ys


class _Quartic:
    """kappa(x, y) = T[a,b,c,d] x_a y_b y_c x_d as reshaped matrix products.

    The objective is quadratic in x with matrix M(y) and quadratic in y with
    matrix N(x); both come from one GEMM against a reshaped view of T.
    """

    def __init__(self, T: np.ndarray):
        d = T.shape[0]
        self.dim = d
        self.Tm = np.ascontiguousarray(T.transpose(1, 2, 0, 3).reshape(d * d, d * d))
        self.Tn = np.ascontiguousarray(T.transpose(0, 3, 1, 2).reshape(d * d, d * d))

    def M(self, ys):
        n, d = ys.shape
        yy = (ys[:, :, None] * ys[:, None, :]).reshape(n, d * d)
        return (yy @ self.Tm).reshape(n, d, d)

    def N(self, xs):
        n, d = xs.shape
        xx = (xs[:, :, None] * xs[:, None, :]).reshape(n, d * d)
        return (xx @ self.Tn).reshape(n, d, d)

    def values(self, xs, ys):
        Mx = self.M(ys)
        return np.sum(xs * (Mx @ xs[:, :, None])[:, :, 0], axis=1)


def _block_step(Ms, fixed):
    """Smallest eigenvector of the quadratic form Ms restricted to the unit
    sphere of the complement of `fixed`: project out the fixed direction and
    shift it above the rest of the spectrum."""
    Mf = (Ms @ fixed[:, :, None])[:, :, 0]
    fMf = np.sum(fixed * Mf, axis=1)
    outer_f = fixed[:, :, None] * fixed[:, None, :]
    PMP = (Ms
           - Mf[:, :, None] * fixed[:, None, :]
           - fixed[:, :, None] * Mf[:, None, :]
           + fMf[:, None, None] * outer_f)
    shift = np.sqrt(np.sum(Ms * Ms, axis=(1, 2))) + 1.0
    w, V = np.linalg.eigh(PMP + shift[:, None, None] * outer_f)
    return V[:, :, 0], w[:, 0]


def _block_sweep(q: "_Quartic", xs, ys, vals, idx):
    """One exact x-then-y alternation pass on the rows `idx`."""
    Y = ys[idx]
    M = q.M(Y)
    xs[idx], _ = _block_step(0.5 * (M + M.transpose(0, 2, 1)), Y)
    X = xs[idx]
    N = q.N(X)
    ys[idx], v = _block_step(0.5 * (N + N.transpose(0, 2, 1)), X)
    vals[idx] = v


def _block_minimize(q: "_Quartic", xs, ys, vals, active, max_sweeps: int = 120):
    """Exact alternating block minimization: for fixed y the objective is the
    quadratic form of M(y), so the optimal unit x orthogonal to y is the
    smallest eigenvector of the form restricted to the complement of y (and
    symmetrically for the y-block). Monotone; used to warm-start the
    gradient finisher."""
    sweeps = 0
    window = 8
    hist = vals.copy()
    live = active.copy()
    for sweep in range(max_sweeps):
        if not live.any() or vals.min() <= VALUE_FLOOR:
            break
        sweeps = sweep + 1
        idx = np.flatnonzero(live)
        _block_sweep(q, xs, ys, vals, idx)
        v = vals[idx]
        if sweep % window == window - 1:
            settled = (hist[idx] - v) < (1e-16 + 1e-15 * np.abs(v))
            live[idx[settled]] = False
            hist[idx] = v
    return sweeps


def _zero_continuation(q: "_Quartic", xs, ys, vals, max_sweeps: int = 30000,
                       budget: int = 50000):
    """Extended alternation for zero candidates, one row at a time.

    Near a flat (quartic) zero of the curvature the value decays only
    polynomially in the sweep count, so rows below ZERO_CANDIDATE get a
    long budget with a floor stop. Only the reported minimum matters:
    candidates run best-first, a floored row ends the continuation, and
    candidates sitting at essentially the value where a previous candidate
    stagnated (same basin) are skipped. A row settling toward a genuinely
    positive minimum is released once its relative progress per 32-sweep
    window drops below 1e-3; polynomial decay toward zero keeps making
    more than 1e-2 relative progress per window, so it is never released.
    """
    window = 32
    total = 0
    stagnated_at = np.inf
    order = np.argsort(vals)
    for row in order:
        if total >= budget:
            break
        v = vals[row]
        if not (VALUE_FLOOR < v < ZERO_CANDIDATE):
            continue
        if v >= 0.5 * stagnated_at:
            continue
        idx = np.array([row])
        hist = v
        for sweep in range(min(max_sweeps, budget - total)):
            _block_sweep(q, xs, ys, vals, idx)
            total += 1
            v = vals[row]
            if v <= VALUE_FLOOR:
                return total
            if sweep % window == window - 1:
                if (hist - v) < 1e-3 * abs(v):
                    break
                hist = v
        stagnated_at = min(stagnated_at, vals[row])
    return total


def _minimize_tensor(T: np.ndarray, starts: int, seed,
                     init: Optional[Sequence[tuple[np.ndarray, np.ndarray]]] = None,
                     max_iter: int = MAX_ITER,
                     gtol: float = GRAD_TOL, xtol: float = STEP_TOL):
    """Multistart minimization of T[a,b,c,d] x_a y_b y_c x_d over
    orthonormal pairs (x, y). Returns (value, x, y, iterations, status)."""
    dim = T.shape[0]
    q = _Quartic(T)
    rng = np.random.default_rng(seed)
    xs, ys = _orthonormal_pairs(starts, dim, rng)
    if init:
        for k, (ix, iy) in enumerate(init):
            if k >= starts:
                break
            xs[k], ys[k] = ix, iy
        xs, ys = _retract(xs, ys)

    vals = q.values(xs, ys)
    pre_sweeps = _block_minimize(q, xs, ys, vals, np.ones(starts, dtype=bool))
    pre_sweeps += _zero_continuation(q, xs, ys, vals)
    # finishing phase: projected gradient descent with backtracking from the
    # block-settled population; values move below every tested tolerance
    # within a few steps, so the budget is small
    max_iter = min(max_iter, 25)
    alphas = np.full(starts, 1.0)
    last_step = np.full(starts, np.inf)
    active = np.ones(starts, dtype=bool)
    statuses = np.full(starts, "maxiter", dtype=object)
    hist_vals = vals.copy()
    prev_px = np.zeros_like(xs)
    prev_py = np.zeros_like(ys)
    prev_gx = np.zeros_like(xs)
    prev_gy = np.zeros_like(ys)
    have_prev = np.zeros(starts, dtype=bool)
    total_iters = 0

    for it in range(max_iter):
        if not active.any():
            break
        if vals.min() <= VALUE_FLOOR:
            statuses[active] = "floor"
            break
        total_iters = it + 1
        idx = np.flatnonzero(active)
        X, Y = xs[idx], ys[idx]
        M = q.M(Y)
        N = q.N(X)
        # exact central differences of the coordinate-wise quadratic objective
        gx = (M @ X[:, :, None])[:, :, 0] + (X[:, None, :] @ M)[:, 0, :]
        gy = (N @ Y[:, :, None])[:, :, 0] + (Y[:, None, :] @ N)[:, 0, :]
        vals[idx] = np.sum(X * (M @ X[:, :, None])[:, :, 0], axis=1)
        # project onto the tangent of {|x|=1, |y|=1, x.y=0}
        gx = gx - np.sum(gx * X, axis=1, keepdims=True) * X
        gy = gy - np.sum(gy * Y, axis=1, keepdims=True) * Y
        beta = 0.5 * (np.sum(gx * Y, axis=1) + np.sum(gy * X, axis=1))
        gx = gx - beta[:, None] * Y
        gy = gy - beta[:, None] * X
        gn2 = np.sum(gx * gx, axis=1) + np.sum(gy * gy, axis=1)
        gn = np.sqrt(gn2)

        done = (gn < gtol) & (last_step[idx] < xtol)
        if done.any():
            statuses[idx[done]] = "converged"
            active[idx[done]] = False
        floor_hit = vals[idx] <= VALUE_FLOOR
        if floor_hit.any():
            statuses[idx[floor_hit]] = "floor"
            active[idx[floor_hit]] = False
        if it >= 5 and it % 5 == 0:
            stalled = (hist_vals[idx] - vals[idx]) < (1e-16 + 1e-13 * np.abs(vals[idx]))
            stalled &= ~done & ~floor_hit
            if stalled.any():
                statuses[idx[stalled]] = "stalled"
                active[idx[stalled]] = False
            hist_vals[idx] = vals[idx]
        still = active[idx]
        if not still.any():
            continue
        sub = idx[still]
        X, Y, gxs, gys = xs[sub], ys[sub], gx[still], gy[still]
        gns2 = gn2[still]

        # Barzilai-Borwein guess refreshed from the previous accepted step
        bb = alphas[sub]
        hp = have_prev[sub]
        if hp.any():
            dxp = np.concatenate([X - prev_px[sub], Y - prev_py[sub]], axis=1)
            dgp = np.concatenate([gxs - prev_gx[sub], gys - prev_gy[sub]], axis=1)
            num = np.sum(dxp * dxp, axis=1)
            den = np.sum(dxp * dgp, axis=1)
            good = hp & (den > 1e-30)
            bb = np.where(good, np.clip(num / np.maximum(den, 1e-30), 1e-10, 1e4), bb)
        prev_px[sub], prev_py[sub] = X, Y
        prev_gx[sub], prev_gy[sub] = gxs, gys
        have_prev[sub] = True

        cur = vals[sub]
        trial = bb.copy()
        accepted = np.zeros(len(sub), dtype=bool)
        newx, newy, newv = X.copy(), Y.copy(), cur.copy()
        for _ in range(40):
            rem = ~accepted
            if not rem.any():
                break
            tx = X[rem] - trial[rem, None] * gxs[rem]
            ty = Y[rem] - trial[rem, None] * gys[rem]
            tx, ty = _retract(tx, ty)
            tv = q.values(tx, ty)
            ok = tv <= cur[rem] - _ARMIJO_C1 * trial[rem] * gns2[rem]
            rem_idx = np.flatnonzero(rem)
            acc = rem_idx[ok]
            newx[acc], newy[acc], newv[acc] = tx[ok], ty[ok], tv[ok]
            accepted[acc] = True
            trial[rem_idx[~ok]] *= 0.5
            if trial[rem].max(initial=0.0) < 1e-18:
                break
        fail = ~accepted
        if fail.any():
            statuses[sub[fail]] = "converged"  # no admissible descent step
            active[sub[fail]] = False
        xs[sub], ys[sub], vals[sub] = newx, newy, newv
        last_step[sub] = np.where(accepted, trial * np.sqrt(gns2), 0.0)
        alphas[sub] = np.where(accepted, np.clip(trial * 2.0, 1e-10, 1e4), bb)

    best = int(np.argmin(vals))
    status = str(statuses[best])
    return float(vals[best]), xs[best], ys[best], pre_sweeps + total_iters, status


def _finalize(T7, H, m, starts, seed, init_pairs, max_iter) -> MinResult:
    init = None
    if init_pairs:
        init = []
        for (Xa, Ya) in init_pairs:
            xc = algebra_to_coords(Xa, m) @ H.T
            yc = algebra_to_coords(Ya, m) @ H.T
            init.append((xc, yc))
    val, x7, y7, iters, status = _minimize_tensor(T7, starts, seed, init=init,
                                                  max_iter=max_iter)
    x10 = x7 @ H
    y10 = y7 @ H
    return MinResult(
        value=val, x_coords=x10, y_coords=y10,
        X=coords_to_algebra(x10, m), Y=coords_to_algebra(y10, m),
        iterations=iters, converged=status != "maxiter", status=status,
        starts=starts,
    )


def min_kappa_horizontal(g: GroupElement, m: MetricParams,
                         starts: int = DEFAULT_STARTS, seed=0,
                         init_pairs=None, max_iter: int = MAX_ITER) -> MinResult:
    """Minimize the group curvature kappa over orthonormal horizontal pairs
    at g. Deterministic given (starts, seed); optional init_pairs are used
    as the leading starts."""
    hs = horizontal_space(g, m)
    T7 = horizontal_curvature(hs)
    return _finalize(T7, hs.coords, m, starts, seed, init_pairs, max_iter)


def min_sec_M(g: GroupElement, m: MetricParams,
              starts: int = DEFAULT_STARTS, seed=0,
              init_pairs=None, max_iter: int = MAX_ITER) -> MinResult:
    """Minimize the O'Neill base curvature sec_M over orthonormal
    horizontal pairs at g (group curvature plus 3|A|^2, with the A-tensor
    tabulated on the horizontal basis once per point)."""
    hs = horizontal_space(g, m)
    T7 = horizontal_curvature(hs) + oneill_tensor(hs, a_table(g, hs, m))
    return _finalize(T7, hs.coords, m, starts, seed, init_pairs, max_iter)


# calibration -----------------------------------------------------------------

@dataclass
class Calibration:
    """Separation data for the zero-detection threshold delta."""

    delta: float
    max_zero: float
    min_perturbed: float
    zero_values: np.ndarray
    perturbed_values: np.ndarray
    perturbation: float


def calibrate_threshold(m: MetricParams, seed, n_each: int = 100,
                        perturbation: float = 1e-2,
                        starts: int = DEFAULT_STARTS) -> Calibration:
    """Split threshold between constructed zero-set points and points
    displaced off the zero set by `perturbation`.

    All constructed points must minimize below 1e-9 and all displaced
    points must stay strictly above; delta is the geometric midpoint of the
    two population edges. Raises CalibrationError when they overlap.
    """
    rng = np.random.default_rng(seed)
    zero_vals = []
    pert_vals = []
    for k in range(n_each):
        g = make_z_point(rng, 1 + k % 4)
        zero_vals.append(min_kappa_horizontal(g, m, starts=starts, seed=(seed, k)).value)
        gp = perturb_point(g, rng, eps=perturbation)
        pert_vals.append(min_kappa_horizontal(gp, m, starts=starts, seed=(seed, k, 1)).value)
    zero_vals = np.array(zero_vals)
    pert_vals = np.array(pert_vals)
    max_zero = float(zero_vals.max())
    min_pert = float(pert_vals.min())
    if max_zero >= 1e-9:
        raise CalibrationError(
            f"constructed zero points do not minimize below 1e-9: {max_zero:.3e}")
    if min_pert <= 10.0 * max(max_zero, 1e-13):
        raise CalibrationError(
            f"no separation: max zero {max_zero:.3e} vs min perturbed {min_pert:.3e}")
    delta = math.sqrt(max(max_zero, 1e-13) * min_pert)
    return Calibration(delta, max_zero, min_pert, zero_vals, pert_vals, perturbation)


# scanning ---------------------------------------------------------------------

@dataclass
class ScanRecord:
    index: int
    seed: int
    g_flat: list
    min_kappa: float
    min_sec_m: Optional[float]
    z1: bool
    z2: bool
    z3: bool
    z4: bool
    agreement: bool

    def to_dict(self) -> dict:
        return {
            "index": self.index, "seed": self.seed, "g": list(self.g_flat),
            "min_kappa": self.min_kappa, "min_sec_m": self.min_sec_m,
            "z1": self.z1, "z2": self.z2, "z3": self.z3, "z4": self.z4,
            "agreement": self.agreement,
        }


@dataclass
class ScanReport:
    n_samples: int
    threshold: float
    starts: int
    records: list
    classifier_hits: int = 0
    disagreements: list = field(default_factory=list)
    agreement_fraction: float = 1.0
    quantiles: dict = field(default_factory=dict)
    frac_below: dict = field(default_factory=dict)

    def summarize(self):
        flags = np.array([r.z1 or r.z2 or r.z3 or r.z4 for r in self.records])
        self.classifier_hits = int(flags.sum())
        self.disagreements = [r.index for r in self.records if not r.agreement]
        n = max(1, len(self.records))
        self.agreement_fraction = 1.0 - len(self.disagreements) / n
        vals = np.array([r.min_sec_m if r.min_sec_m is not None else r.min_kappa
                         for r in self.records])
        if len(vals):
            qs = (0.0, 0.01, 0.05, 0.25, 0.5, 0.75, 1.0)
            self.quantiles = {str(q): float(np.quantile(vals, q)) for q in qs}
            self.frac_below = {f"1e-{k}": float((vals < 10.0 ** -k).mean())
                               for k in range(2, 9)}
        return self

    def summary_dict(self) -> dict:
        return {
            "n_samples": self.n_samples, "threshold": self.threshold,
            "starts": self.starts, "classifier_hits": self.classifier_hits,
            "n_disagreements": len(self.disagreements),
            "disagreements": self.disagreements,
            "agreement_fraction": self.agreement_fraction,
            "quantiles": self.quantiles, "frac_below": self.frac_below,
        }


def _audit_one(payload) -> ScanRecord:
    (index, sample_seed, flat, m, delta, starts, with_sec_m) = payload
    g = GroupElement.from_flat16(np.asarray(flat), tol=1e-8)
    cls = classify(g)
    mk = min_kappa_horizontal(g, m, starts=starts, seed=sample_seed)
    ms = min_sec_M(g, m, starts=starts, seed=(sample_seed, 1)) if with_sec_m else None
    flag = cls.any
    agreement = (mk.value < delta) == flag
    return ScanRecord(
        index=index, seed=sample_seed, g_flat=[float(v) for v in flat],
        min_kappa=mk.value, min_sec_m=None if ms is None else ms.value,
        z1=cls.z1, z2=cls.z2, z3=cls.z3, z4=cls.z4, agreement=agreement,
    )


def audit_points(points: Sequence[GroupElement], m: MetricParams, delta: float,
                 starts: int = DEFAULT_STARTS, seed: int = 0, workers: int = 1,
                 with_sec_m: bool = False) -> list[ScanRecord]:
    """Classify and minimize at each point; per-point seeds are seed XOR
    index, so results do not depend on the worker count."""
    curvature_tensor(m)  # warm the cache before forking
    payloads = [(i, seed ^ i, tuple(g.to_flat16()), m, delta, starts, with_sec_m)
                for i, g in enumerate(points)]
    if workers <= 1:
        return [_audit_one(p) for p in payloads]
    with Pool(processes=workers) as pool:
        return list(pool.imap(_audit_one, payloads, chunksize=8))


def scan(m: MetricParams, n_samples: int, seed: int, workers: int = 1,
         starts: int = DEFAULT_STARTS, delta: Optional[float] = None,
         spike_fraction: float = 0.0, with_sec_m: bool = True) -> ScanReport:
    """Monte Carlo audit over Haar samples (optionally spiked with
    constructed zero-set points): classifier flags against the minimizer
    threshold, plus the small-curvature tail statistics."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if delta is None:
        delta = calibrate_threshold(m, seed ^ 0xC0FFEE, n_each=48).delta
    period = round(1.0 / spike_fraction) if spike_fraction > 0 else 0
    points = []
    for i in range(n_samples):
        rng = np.random.default_rng(seed ^ i)
        if period and i % period == 0:
            points.append(make_z_point(rng, 1 + (i // period) % 4))
        else:
            points.append(haar_sample(rng))
    records = audit_points(points, m, delta, starts=starts, seed=seed,
                           workers=workers, with_sec_m=with_sec_m)
    report = ScanReport(n_samples=n_samples, threshold=delta, starts=starts,
                        records=records)
    return report.summarize()
