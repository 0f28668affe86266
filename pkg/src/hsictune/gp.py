"""Gaussian-process surrogate and expected-improvement optimization.

Configurations are encoded into [0, 1]^d (deterministic CDF midpoints for
ordered parameters, one-hot blocks for categoricals, 0/1 for booleans;
inactive conditional blocks are zeroed).  The surrogate is a Matern-5/2
ARD process whose hyperparameters maximize the log marginal likelihood
from eight deterministic starts, with a jitter ladder guarding the
Cholesky.  The optimizer alternates fit, acquisition maximization over a
scrambled low-discrepancy candidate set with a local polish of the best
few, and evaluation; failed evaluations are penalized, never fatal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.linalg import cho_solve, cholesky, LinAlgError
from scipy.stats import norm, qmc

from .harness import Trial, trial_seed
from .space import SearchSpace, _sample_value, sample_configuration

__all__ = [
    "FitError",
    "GpModel",
    "gp_fit",
    "gp_predict",
    "ei_value",
    "expected_improvement",
    "encode",
    "decode",
    "encoding_width",
    "gpbo",
]

_JITTERS = tuple(1e-10 * 10**k for k in range(7))   # 1e-10 .. 1e-4
_SQRT5 = math.sqrt(5.0)


class FitError(RuntimeError):
    pass


# -- encoding ----------------------------------------------------------------


def _blocks(space: SearchSpace):
    out = []
    pos = 0
    for p in space.params:
        width = len(p.levels) if p.kind == "categorical" else 1
        out.append((p, pos, width))
        pos += width
    return out, pos


def encoding_width(space: SearchSpace) -> int:
    return _blocks(space)[1]


def encode(space: SearchSpace, config: dict) -> np.ndarray:
    """Map a configuration to [0, 1]^d; inactive children become zeros."""
    blocks, width = _blocks(space)
    x = np.zeros(width)
    for p, pos, w in blocks:
        if p.name not in config:
            continue
        v = config[p.name]
        if p.kind == "continuous":
            if p.scale == "log":
                x[pos] = (math.log(v) - math.log(p.lo)) / (math.log(p.hi) - math.log(p.lo))
            else:
                x[pos] = (v - p.lo) / (p.hi - p.lo)
        elif p.kind == "integer":
            n = int(p.hi) - int(p.lo) + 1
            x[pos] = (int(v) - int(p.lo) + 0.5) / n
        elif p.kind == "categorical":
            x[pos + p.levels.index(v)] = 1.0
        else:
            x[pos] = 1.0 if v else 0.0
    return x


def decode(space: SearchSpace, x: np.ndarray) -> dict:
    """Snap an encoded vector back to a valid configuration.

    Parents decode before children so activation is respected; inactive
    children are dropped.
    """
    blocks, _ = _blocks(space)
    config = {}
    for p, pos, w in blocks:
        if p.kind == "continuous":
            u = float(np.clip(x[pos], 0.0, 1.0))
            if p.scale == "log":
                v = math.exp(math.log(p.lo) + u * (math.log(p.hi) - math.log(p.lo)))
                v = min(max(v, p.lo), p.hi)
            else:
                v = p.lo + u * (p.hi - p.lo)
            config[p.name] = float(v)
        elif p.kind == "integer":
            n = int(p.hi) - int(p.lo) + 1
            j = int(np.clip(np.floor(x[pos] * n), 0, n - 1))
            config[p.name] = int(p.lo) + j
        elif p.kind == "categorical":
            config[p.name] = p.levels[int(np.argmax(x[pos : pos + w]))]
        else:
            config[p.name] = bool(x[pos] >= 0.5)
    for rule in space.rules:
        if config.get(rule.parent) not in rule.activating_values:
            config.pop(rule.child, None)
    return config


# -- Matern-5/2 GP ------------------------------------------------------------


def _scaled_r(X1, X2, ls):
    d2 = np.zeros((len(X1), len(X2)))
    for d in range(X1.shape[1]):
        d2 += ((X1[:, d, None] - X2[None, :, d]) / ls[d]) ** 2
    return np.sqrt(np.maximum(d2, 0.0))


def _matern52(r):
    return (1.0 + _SQRT5 * r + 5.0 * r * r / 3.0) * np.exp(-_SQRT5 * r)


@dataclass
class GpModel:
    X: np.ndarray
    y_raw: np.ndarray
    y_mean: float
    y_std: float
    lengthscales: np.ndarray
    signal_var: float
    noise_var: float
    jitter: float
    chol: np.ndarray
    alpha: np.ndarray

    @property
    def n(self) -> int:
        return len(self.X)


def _build_cov(X, ls, signal, noise):
    K = signal * _matern52(_scaled_r(X, X, ls))
    K[np.diag_indices_from(K)] += noise
    return K


def _chol_with_jitter(K):
    scale = float(np.mean(np.diag(K)))
    for jit in (0.0,) + _JITTERS:
        try:
            L = cholesky(K + jit * scale * np.eye(len(K)), lower=True)
            return L, jit * scale
        except LinAlgError:
            continue
    raise FitError("kernel matrix singular even at maximum jitter")


def _nll_and_grad(theta, X, y):
    d = X.shape[1]
    ls = np.exp(theta[:d])
    signal = math.exp(theta[d])
    noise = math.exp(theta[d + 1])
    r = _scaled_r(X, X, ls)
    M = _matern52(r)
    K = signal * M
    K[np.diag_indices_from(K)] += noise
    try:
        L, _ = _chol_with_jitter(K)
    except FitError:
        return 1e25, np.zeros_like(theta)
    n = len(y)
    alpha = cho_solve((L, True), y)
    nll = 0.5 * float(y @ alpha) + float(np.log(np.diag(L)).sum()) + 0.5 * n * math.log(2 * math.pi)
    Kinv = cho_solve((L, True), np.eye(n))
    W = np.outer(alpha, alpha) - Kinv
    grad = np.empty_like(theta)
    base = signal * (5.0 / 3.0) * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r)
    for k in range(d):
        Sd = ((X[:, k, None] - X[None, :, k]) / ls[k]) ** 2
        grad[k] = -0.5 * float(np.sum(W * (base * Sd)))
    grad[d] = -0.5 * float(np.sum(W * (signal * M)))
    grad[d + 1] = -0.5 * float(np.trace(W)) * noise
    return nll, grad


def gp_fit(X, y, *, n_starts: int = 8, seed: int = 0) -> GpModel:
    """Fit by maximizing log marginal likelihood from deterministic starts.

    Targets are standardized internally; predictions are de-standardized.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(X) < 2:
        raise FitError("need at least 2 observations")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
        raise FitError("non-finite inputs or targets")
    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std <= 0:
        y_std = 1.0
    ys = (y - y_mean) / y_std
    d = X.shape[1]
    bounds = [(math.log(3e-2), math.log(3e1))] * d
    bounds += [(math.log(1e-3), math.log(1e3)), (math.log(1e-10), math.log(1.0))]
    ls_starts = (0.1, 0.3, 1.0, 3.0)
    noise_starts = (1e-6, 1e-2)
    starts = [
        np.array([math.log(l)] * d + [0.0, math.log(nz)])
        for l in ls_starts
        for nz in noise_starts
    ][:n_starts]
    best = None
    for x0 in starts:
        res = optimize.minimize(
            _nll_and_grad, x0, args=(X, ys), jac=True, method="L-BFGS-B",
            bounds=bounds, options={"maxiter": 300, "ftol": 1e-13, "gtol": 1e-9},
        )
        if best is None or res.fun < best.fun:
            best = res
    theta = best.x
    ls = np.exp(theta[:d])
    signal = math.exp(theta[d])
    noise = math.exp(theta[d + 1])
    K = _build_cov(X, ls, signal, noise)
    L, jit = _chol_with_jitter(K)
    alpha = cho_solve((L, True), ys)
    return GpModel(X, y, y_mean, y_std, ls, signal, noise, jit, L, alpha)


def gp_predict(model: GpModel, x) -> tuple:
    """Posterior mean and variance of the latent function, raw units."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.X.shape[1]:
        raise FitError("prediction point dimension mismatch")
    ks = model.signal_var * _matern52(_scaled_r(model.X, x, model.lengthscales))
    mean_s = ks.T @ model.alpha
    v = cho_solve((model.chol, True), ks)
    var_s = model.signal_var - np.einsum("ij,ij->j", ks, v)
    var_s = np.maximum(var_s, 0.0)
    mean = mean_s * model.y_std + model.y_mean
    var = var_s * model.y_std**2
    if len(mean) == 1:
        return float(mean[0]), float(var[0])
    return mean, var


def ei_value(mean, sd, best_so_far: float):
    """Closed-form expected improvement for minimization.

    (best - mean) Phi(gamma) + sd phi(gamma) with gamma = (best - mean)/sd;
    degenerates to max(best - mean, 0) at sd = 0.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    sd = np.atleast_1d(np.asarray(sd, dtype=float))
    gap = best_so_far - mean
    out = np.maximum(gap, 0.0)
    pos = sd > 0
    gamma = np.zeros_like(mean)
    gamma[pos] = gap[pos] / sd[pos]
    out[pos] = gap[pos] * norm.cdf(gamma[pos]) + sd[pos] * norm.pdf(gamma[pos])
    return float(out[0]) if len(out) == 1 else out


def expected_improvement(model: GpModel, x, best_so_far: float):
    """EI of the model's posterior at x; zero without variance or gain."""
    mean, var = gp_predict(model, x)
    return ei_value(mean, np.sqrt(np.atleast_1d(var)), best_so_far)


# -- Bayesian optimization loop ----------------------------------------------


def _force(space: SearchSpace, config: dict, fixed: dict, rng) -> dict:
    """Overwrite fixed values and re-resolve child activation."""
    out = dict(config)
    out.update(fixed or {})
    for rule in space.rules:
        active = out.get(rule.parent) in rule.activating_values
        if active and rule.child not in out:
            out[rule.child] = _sample_value(space.param(rule.child), rng)
        if not active:
            out.pop(rule.child, None)
    return out


def _finite_configs(space: SearchSpace, fixed: dict, limit: int):
    """Enumerate the whole space when every free parameter is discrete."""
    free = [p for p in space.params if p.name not in (fixed or {})]
    if any(p.kind == "continuous" for p in free):
        return None
    combos = [{}]
    for p in free:
        levels, _ = p.level_weights()
        combos = [dict(c, **{p.name: v}) for c in combos for v in levels]
        if len(combos) > limit:
            return None
    out = []
    for c in combos:
        c.update(fixed or {})
        cfg = {}
        for p in space.params:
            if p.name in c:
                cfg[p.name] = c[p.name]
        for rule in space.rules:
            if cfg.get(rule.parent) not in rule.activating_values:
                cfg.pop(rule.child, None)
        if cfg not in out:
            out.append(cfg)
    return out


def _transform_targets(trials):
    """Minimization targets: log of positive errors, penalized failures."""
    ok_scores = np.array([t.score for t in trials if t.ok], dtype=float)
    use_log = len(ok_scores) > 0 and np.all(ok_scores > 0)
    vals = []
    finite = [math.log(s) if use_log else float(s) for s in ok_scores]
    if finite:
        worst = max(finite)
        spread = float(np.std(finite)) if len(finite) > 1 else abs(worst) * 0.1 + 1.0
        penalty = worst + 3.0 * max(spread, 1e-6)
    else:
        penalty = 0.0
    for t in trials:
        if t.ok:
            vals.append(math.log(t.score) if use_log else float(t.score))
        else:
            vals.append(penalty)
    return np.array(vals)


def gpbo(
    objective,
    space: SearchSpace,
    fixed: dict | None = None,
    n_init: int = 10,
    n_iter: int = 25,
    seed: int = 0,
    initial_configs=None,
    n_candidates: int = 2048,
    n_polish: int = 5,
):
    """Sequential GP optimization; returns (incumbent trial, history).

    Fixed parameters keep their given values in every evaluated
    configuration.  History length is exactly n_init + n_iter; evaluation
    faults become failed trials with penalized targets.
    """
    fixed = dict(fixed or {})
    for name in fixed:
        space.param(name)
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x6B0)))
    blocks, width = _blocks(space)
    free_dims = []
    for p, pos, w in blocks:
        if p.name in fixed:
            continue
        free_dims.extend(range(pos, pos + w))
    history = []

    def _evaluate(config, index):
        s = trial_seed(seed, index)
        try:
            trial = objective.evaluate(config, s)
        except Exception as e:
            trial = Trial(dict(config), None, "failed", s, tags={"error": repr(e)[:200]})
        history.append(trial)
        return trial

    init_configs = list(initial_configs or [])
    init_configs = [_force(space, c, fixed, rng) for c in init_configs]
    finite = _finite_configs(space, fixed, n_init)
    if finite is not None:
        for cfg in finite:
            if len(init_configs) < n_init and cfg not in init_configs:
                init_configs.append(cfg)
    while len(init_configs) < n_init:
        cfg = _force(space, sample_configuration(space, rng), fixed, rng)
        init_configs.append(cfg)
    for i, cfg in enumerate(init_configs[:n_init]):
        _evaluate(cfg, i)

    for it in range(n_iter):
        X = np.array([encode(space, t.config) for t in history])
        y = _transform_targets(history)
        try:
            model = gp_fit(X, y, seed=seed)
        except FitError:
            cfg = _force(space, sample_configuration(space, rng), fixed, rng)
            _evaluate(cfg, n_init + it)
            continue
        best_t = float(np.min(y))
        sob = qmc.Sobol(
            d=max(len(free_dims), 1), scramble=True,
            seed=np.random.default_rng(np.random.SeedSequence((int(seed), 0x50B01, it))),
        )
        raw = sob.random(n_candidates)
        base = encode(space, _force(space, sample_configuration(space, rng), fixed, rng))
        cand = np.tile(base, (n_candidates, 1))
        if free_dims:
            cand[:, free_dims] = raw
        configs = [_force(space, decode(space, c), fixed, rng) for c in cand]
        snapped = np.array([encode(space, c) for c in configs])
        ei = expected_improvement(model, snapped, best_t)
        ei = np.atleast_1d(ei)
        top = np.argsort(-ei)[:n_polish]

        best_cfg = configs[int(top[0])]
        best_ei = float(ei[int(top[0])])
        cont_dims = [
            pos for p, pos, w in blocks
            if p.kind == "continuous" and p.name not in fixed
        ]
        if cont_dims:
            for idx in top:
                x0 = snapped[int(idx)].copy()

                def neg_ei(v):
                    xx = x0.copy()
                    xx[cont_dims] = v
                    return -float(expected_improvement(model, xx, best_t))

                res = optimize.minimize(
                    neg_ei, x0[cont_dims], method="L-BFGS-B",
                    bounds=[(0.0, 1.0)] * len(cont_dims),
                    options={"maxiter": 30},
                )
                xx = x0.copy()
                xx[cont_dims] = res.x
                cfg = _force(space, decode(space, xx), fixed, rng)
                val = float(expected_improvement(model, encode(space, cfg), best_t))
                if val > best_ei:
                    best_ei = val
                    best_cfg = cfg
        _evaluate(best_cfg, n_init + it)

    ok = [t for t in history if t.ok]
    if not ok:
        raise FitError("no successful evaluations")
    incumbent = min(ok, key=lambda t: t.score)
    return incumbent, history
