"""Ordinary Kriging for mixed continuous and categorical inputs.

The covariance is a product of a Matern(5/2) correlation over the
continuous coordinates and a cross-correlation matrix over the
categorical level pair. Hyperparameters are estimated by minimizing the
concentrated negative log-likelihood (trend and variance profiled out
in closed form) with a multi-start bounded Nelder-Mead search.
Prediction is the plug-in best linear unbiased predictor.

Continuous inputs are affinely mapped to [0, 1] per dimension using the
training set's declared bounds before any kernel evaluation; responses
are standardized for fitting and de-standardized for prediction.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve
from scipy.optimize import minimize

from .corrparam import CorrMatrix, FamilySpec, cat_param_bounds, corr_values, param_count
from .errors import FitFailureError, IllConditionedError, ParamArityError, ParamDomainError

SQRT5 = math.sqrt(5.0)

# Guards for degenerate data; see FitOptions for the tunable knobs.
SIGMA2_FLOOR = 1e-12
_YSTD_FLOOR = 1e-300
_FAILED_OBJ = 1e30


@dataclass(frozen=True)
class MixedPoint:
    """One input location: continuous coordinates plus a level in 1..s."""

    x: np.ndarray
    level: int

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel())
        if self.level < 1:
            raise ParamDomainError(f"level must be a positive integer, got {self.level}")


@dataclass(frozen=True)
class KernelConfig:
    """Kernel hyperparameters: lengthscales, family parameters, nugget.

    ``family_spec``/``cat_params`` are None for a continuous-only model.
    The nugget is added to the diagonal of the training correlation
    matrix (jitter); it is not rescaled away.
    """

    lengthscales: np.ndarray
    family_spec: FamilySpec | None = None
    cat_params: np.ndarray | None = None
    nugget: float = 1e-8
    corr_nugget: float = 1e-8

    def __post_init__(self):
        ls = np.asarray(self.lengthscales, dtype=float).ravel()
        object.__setattr__(self, "lengthscales", ls)
        if not np.all(ls > 0):
            raise ParamDomainError("lengthscales must be positive")
        if self.nugget < 0:
            raise ParamDomainError("nugget must be nonnegative")
        if self.cat_params is not None:
            object.__setattr__(
                self, "cat_params", np.asarray(self.cat_params, dtype=float).ravel()
            )
        if (self.family_spec is None) != (self.cat_params is None):
            raise ParamDomainError("family_spec and cat_params must be given together")
        if self.family_spec is not None:
            k = param_count(self.family_spec)
            if self.cat_params.shape != (k,):
                raise ParamArityError(
                    f"{self.family_spec.label} needs {k} parameters, "
                    f"got shape {self.cat_params.shape}"
                )

    @property
    def q(self) -> int:
        return self.lengthscales.size

    def corr_matrix(self) -> np.ndarray | None:
        if self.family_spec is None:
            return None
        return corr_values(self.family_spec, self.cat_params, self.corr_nugget)


class TrainingSet:
    """Observed mixed inputs and responses.

    Parameters
    ----------
    X : (n, q) array
        Continuous coordinates in problem units.
    levels : (n,) int array
        Categorical level per point, 1-based.
    y : (n,) array
        Responses.
    bounds : (q, 2) array, optional
        Per-dimension (lower, upper); defaults to the unit box. Used to
        normalize coordinates before kernel evaluation.
    n_levels : int, optional
        Number of levels s; defaults to max(levels).
    """

    def __init__(self, X, levels, y, bounds=None, n_levels=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        levels = np.asarray(levels, dtype=int).ravel()
        y = np.asarray(y, dtype=float).ravel()
        n, q = X.shape
        if n < 2:
            raise ParamDomainError(f"need at least 2 training points, got {n}")
        if levels.shape != (n,) or y.shape != (n,):
            raise ParamArityError("X, levels and y must have matching first dimension")
        if np.any(levels < 1):
            raise ParamDomainError("levels are 1-based positive integers")
        if bounds is None:
            bounds = np.tile((0.0, 1.0), (q, 1)).astype(float)
        bounds = np.asarray(bounds, dtype=float).reshape(q, 2)
        if np.any(bounds[:, 0] >= bounds[:, 1]):
            raise ParamDomainError("bounds must satisfy lower < upper per dimension")
        if np.any(X < bounds[:, 0] - 1e-9) or np.any(X > bounds[:, 1] + 1e-9):
            raise ParamDomainError("training coordinates outside declared bounds")
        key = {(tuple(row), lv) for row, lv in zip(X.tolist(), levels.tolist())}
        if len(key) != n:
            raise ParamDomainError(
                "duplicate (x, level) points make the correlation matrix singular"
            )
        self.X = X
        self.levels = levels
        self.y = y
        self.bounds = bounds
        self.n = n
        self.q = q
        self.n_levels = int(n_levels) if n_levels is not None else int(levels.max())
        if self.n_levels < levels.max():
            raise ParamDomainError("n_levels smaller than an observed level")
        self.X01 = (X - bounds[:, 0]) / (bounds[:, 1] - bounds[:, 0])
        self._absdiff = None

    @classmethod
    def from_points(cls, points, y, bounds=None, n_levels=None) -> "TrainingSet":
        X = np.array([p.x for p in points], dtype=float)
        levels = np.array([p.level for p in points], dtype=int)
        return cls(X, levels, y, bounds=bounds, n_levels=n_levels)

    def pairwise_absdiff(self) -> np.ndarray:
        """Memoized (q, n, n) array of |x_i - x_j| per dimension (normalized)."""
        if self._absdiff is None:
            self._absdiff = np.abs(self.X01[:, None, :] - self.X01[None, :, :]).transpose(2, 0, 1)
            self._absdiff.setflags(write=False)
        return self._absdiff


def matern52(h, lengthscales) -> float | np.ndarray:
    """Matern(5/2) correlation of a displacement ``h``.

    Separable product over dimensions of
    exp(-sqrt(5)|h_i|/theta_i) (5 h_i^2 / (3 theta_i^2) + sqrt(5)|h_i|/theta_i + 1).
    Accepts a single displacement vector or a stack of rows.
    """
    h = np.asarray(h, dtype=float)
    lengthscales = np.asarray(lengthscales, dtype=float)
    if not np.all(lengthscales > 0):
        raise ParamDomainError("lengthscales must be positive")
    t = SQRT5 * np.abs(h) / lengthscales
    vals = np.exp(-t) * (t * t / 3.0 + t + 1.0)
    out = vals.prod(axis=-1)
    return float(out) if out.ndim == 0 else out


def _matern_from_scaled(t: np.ndarray) -> np.ndarray:
    return np.exp(-t) * (t * t / 3.0 + t + 1.0)


def compound_corr(w1: MixedPoint, w2: MixedPoint, config: KernelConfig, P) -> float:
    """Product correlation: Matern over x-difference times P[level pair]."""
    cont = matern52(w1.x - w2.x, config.lengthscales)
    if P is None:
        return float(cont)
    Pv = P.values if isinstance(P, CorrMatrix) else np.asarray(P)
    return float(cont * Pv[w1.level - 1, w2.level - 1])


def cross_corr_matrix(X1, lv1, X2, lv2, lengthscales, P=None) -> np.ndarray:
    """Correlation matrix between two sets of normalized mixed points."""
    X1 = np.atleast_2d(X1)
    X2 = np.atleast_2d(X2)
    lengthscales = np.asarray(lengthscales, dtype=float)
    out = np.ones((X1.shape[0], X2.shape[0]))
    for d in range(X1.shape[1]):
        t = SQRT5 * np.abs(X1[:, d, None] - X2[None, :, d]) / lengthscales[d]
        out *= _matern_from_scaled(t)
    if P is not None:
        Pv = P.values if isinstance(P, CorrMatrix) else np.asarray(P)
        lv1 = np.asarray(lv1, dtype=int)
        lv2 = np.asarray(lv2, dtype=int)
        out *= Pv[np.ix_(lv1 - 1, lv2 - 1)]
    return out


def _corr_from_absdiff(absdiff, lengthscales, Pv, lv_ix) -> np.ndarray:
    out = _matern_from_scaled(SQRT5 / lengthscales[0] * absdiff[0])
    for d in range(1, absdiff.shape[0]):
        out *= _matern_from_scaled(SQRT5 / lengthscales[d] * absdiff[d])
    if Pv is not None:
        out = out * Pv[lv_ix]
    return out


def build_R(train: TrainingSet, config: KernelConfig, P=None):
    """Training correlation matrix with nugget, plus its Cholesky factor.

    Returns (R, L) with R = correlations + nugget * I and L lower
    triangular. Raises ``IllConditionedError`` when factorization fails.
    """
    if P is None:
        P = config.corr_matrix()
    Pv = P.values if isinstance(P, CorrMatrix) else P
    lv_ix = np.ix_(train.levels - 1, train.levels - 1) if Pv is not None else None
    R = _corr_from_absdiff(train.pairwise_absdiff(), config.lengthscales, Pv, lv_ix)
    R[np.diag_indices_from(R)] += config.nugget
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise IllConditionedError(
            "training correlation matrix is not positive definite; "
            "increase the model nugget"
        ) from None
    return R, L


def _standardize(y: np.ndarray):
    mean = float(y.mean())
    std = float(y.std())
    if std < _YSTD_FLOOR:
        std = 1.0
    return (y - mean) / std, mean, std


def _profiled_stats(L: np.ndarray, z: np.ndarray):
    """GLS mean, profiled variance and log-determinant given chol(R)."""
    n = z.size
    ones = np.ones(n)
    Ri_z = cho_solve((L, True), z)
    Ri_1 = cho_solve((L, True), ones)
    mu = float(ones @ Ri_z) / float(ones @ Ri_1)
    resid = z - mu
    sigma2 = float(resid @ cho_solve((L, True), resid)) / n
    sigma2 = max(sigma2, SIGMA2_FLOOR)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return mu, sigma2, logdet


def decode_psi(psi, q: int, spec: FamilySpec | None):
    """Split a flat parameter vector into (lengthscales, cat_params)."""
    psi = np.asarray(psi, dtype=float).ravel()
    k = param_count(spec) if spec is not None else 0
    if psi.size != q + k:
        raise ParamArityError(f"psi must have length {q + k}, got {psi.size}")
    return psi[:q], (psi[q:] if spec is not None else None)


def concentrated_nll(
    psi, train: TrainingSet, spec: FamilySpec | None, nugget: float = 1e-8,
    corr_nugget: float = 1e-8,
) -> float:
    """Profiled negative log-likelihood n log(sigma2_hat) + log det R.

    The trend and process variance are substituted by their closed-form
    generalized-least-squares estimates, so the objective depends only
    on the correlation parameters. Responses are standardized
    internally; the reported value refers to the standardized scale.
    """
    ls, cat = decode_psi(psi, train.q, spec)
    config = KernelConfig(ls, spec, cat, nugget=nugget, corr_nugget=corr_nugget)
    z, _, _ = _standardize(train.y)
    _, L = build_R(train, config)
    _, sigma2, logdet = _profiled_stats(L, z)
    return train.n * math.log(sigma2) + logdet


@dataclass(frozen=True)
class FitOptions:
    """Knobs for maximum-likelihood fitting.

    ``n_starts`` local searches begin from a maximin-spread sample of
    the parameter box; the search is Nelder-Mead with box clipping.
    ``max_evals_per_start`` of None means 150 evaluations per parameter.
    """

    n_starts: int = 10
    seed: int = 0
    nugget: float = 1e-8
    corr_nugget: float = 1e-8
    lengthscale_bounds: tuple[float, float] = (1e-2, 10.0)
    max_evals_per_start: int | None = None
    xatol: float = 1e-4
    fatol: float = 1e-7


def psi_box(q: int, spec: FamilySpec | None, options: FitOptions):
    """(lower, upper) arrays of the full parameter box."""
    lo = np.full(q, options.lengthscale_bounds[0])
    hi = np.full(q, options.lengthscale_bounds[1])
    if spec is not None:
        cb = cat_param_bounds(spec)
        lo = np.r_[lo, cb[:, 0]]
        hi = np.r_[hi, cb[:, 1]]
    return lo, hi


def maximin_starts(lo, hi, k: int, rng) -> np.ndarray:
    """Greedy maximin-spread subset of uniform candidates in the box."""
    dim = lo.size
    cand = rng.uniform(size=(max(64 * k, 256), dim))
    chosen = [0]
    d2 = ((cand - cand[0]) ** 2).sum(axis=1)
    for _ in range(k - 1):
        j = int(np.argmax(d2))
        chosen.append(j)
        d2 = np.minimum(d2, ((cand - cand[j]) ** 2).sum(axis=1))
    return lo + cand[chosen] * (hi - lo)


@dataclass(frozen=True)
class GPFit:
    """A fitted model: optimized kernel plus cached solves.

    ``mu_hat`` and ``sigma2_hat`` are reported in response units;
    ``neg_log_lik`` is the concentrated objective on the standardized
    scale, reproducible through :func:`concentrated_nll`. ``alpha`` is
    R^-1 (z - mu_z) on the standardized scale, so prediction is a dot
    product per query point.
    """

    config: KernelConfig
    mu_hat: float
    sigma2_hat: float
    neg_log_lik: float
    chol_R: np.ndarray
    alpha: np.ndarray
    train: TrainingSet
    y_mean: float
    y_std: float
    start_objectives: tuple = field(default=(), compare=False)

    @property
    def mu_z(self) -> float:
        return (self.mu_hat - self.y_mean) / self.y_std

    def predict(self, w0: MixedPoint) -> float:
        return predict(self, w0)

    def predict_batch(self, X, levels) -> np.ndarray:
        return predict_batch(self, X, levels)


def _finalize_fit(train: TrainingSet, config: KernelConfig, start_objectives=()):
    z, y_mean, y_std = _standardize(train.y)
    _, L = build_R(train, config)
    mu_z, sigma2_z, logdet = _profiled_stats(L, z)
    alpha = cho_solve((L, True), z - mu_z)
    nll = train.n * math.log(sigma2_z) + logdet
    return GPFit(
        config=config,
        mu_hat=y_mean + y_std * mu_z,
        sigma2_hat=y_std * y_std * sigma2_z,
        neg_log_lik=nll,
        chol_R=L,
        alpha=alpha,
        train=train,
        y_mean=y_mean,
        y_std=y_std,
        start_objectives=tuple(start_objectives),
    )


def fit(train: TrainingSet, spec: FamilySpec | None, options: FitOptions | None = None) -> GPFit:
    """Maximum-likelihood fit over the box-constrained parameter space.

    Runs ``options.n_starts`` Nelder-Mead searches from maximin-spread
    start points, keeps the best objective (ties resolved toward the
    lowest start index) and returns the finished model. Deterministic
    for a fixed seed.

    If fewer than two levels are observed the categorical parameters
    are unidentifiable; a warning is issued and a continuous-only model
    is fitted instead.
    """
    options = options or FitOptions()
    if spec is not None and np.unique(train.levels).size < 2:
        warnings.warn(
            "only one categorical level observed; fitting a continuous-only model",
            stacklevel=2,
        )
        spec = None

    lo, hi = psi_box(train.q, spec, options)
    dim = lo.size
    rng = np.random.default_rng(options.seed)
    starts = maximin_starts(lo, hi, options.n_starts, rng)
    maxfev = options.max_evals_per_start or 150 * dim

    z, _, _ = _standardize(train.y)
    absdiff = train.pairwise_absdiff()
    lv_ix = np.ix_(train.levels - 1, train.levels - 1)
    n, q = train.n, train.q

    def objective(psi):
        ls = psi[:q]
        try:
            Pv = corr_values(spec, psi[q:], options.corr_nugget) if spec is not None else None
            R = _corr_from_absdiff(absdiff, ls, Pv, lv_ix if Pv is not None else None)
            R[np.diag_indices_from(R)] += options.nugget
            L = np.linalg.cholesky(R)
        except (np.linalg.LinAlgError, ParamDomainError):
            return _FAILED_OBJ
        _, sigma2, logdet = _profiled_stats(L, z)
        return n * math.log(sigma2) + logdet

    best_val = np.inf
    best_psi = None
    diagnostics = []
    start_objectives = []
    for idx, start in enumerate(starts):
        f0 = objective(start)
        start_objectives.append(f0)
        try:
            res = minimize(
                objective,
                start,
                method="Nelder-Mead",
                bounds=np.column_stack([lo, hi]),
                options={
                    "maxfev": maxfev,
                    "xatol": options.xatol,
                    "fatol": options.fatol,
                },
            )
            val, psi = float(res.fun), np.asarray(res.x)
        except Exception as exc:  # keep going; other starts may succeed
            diagnostics.append((idx, f"exception: {exc}"))
            val, psi = np.inf, None
        if f0 < val and f0 < _FAILED_OBJ:
            val, psi = f0, start
        if val >= _FAILED_OBJ or psi is None:
            diagnostics.append((idx, f"no finite objective (start value {f0:.4g})"))
            continue
        if val < best_val - 1e-10:
            best_val, best_psi = val, psi

    if best_psi is None:
        raise FitFailureError(
            f"all {options.n_starts} optimizer starts failed", diagnostics=diagnostics
        )

    ls, cat = decode_psi(best_psi, q, spec)
    config = KernelConfig(
        ls, spec, cat, nugget=options.nugget, corr_nugget=options.corr_nugget
    )
    return _finalize_fit(train, config, start_objectives)


def refit_config(train: TrainingSet, config: KernelConfig) -> GPFit:
    """Build a GPFit from known hyperparameters without optimizing."""
    return _finalize_fit(train, config)


def _check_in_bounds(X, bounds):
    if np.any(X < bounds[:, 0] - 1e-9) or np.any(X > bounds[:, 1] + 1e-9):
        raise ParamDomainError("query point outside the model's declared bounds")


def predict(fit: GPFit, w0: MixedPoint) -> float:
    """Plug-in best linear unbiased prediction at a single point."""
    return float(predict_batch(fit, w0.x[None, :], np.array([w0.level]))[0])


def predict_batch(fit: GPFit, X, levels) -> np.ndarray:
    """Vectorized prediction: mu + r0 @ alpha per query row.

    ``X`` is in problem units; ``levels`` may be a scalar or per-row.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    levels = np.broadcast_to(np.asarray(levels, dtype=int), (X.shape[0],))
    train = fit.train
    _check_in_bounds(X, train.bounds)
    X01 = (X - train.bounds[:, 0]) / (train.bounds[:, 1] - train.bounds[:, 0])
    P = fit.config.corr_matrix()
    if P is not None and (np.any(levels < 1) or np.any(levels > P.shape[0])):
        raise ParamDomainError(f"query level outside 1..{P.shape[0]}")
    r0 = cross_corr_matrix(
        X01, levels, train.X01, train.levels, fit.config.lengthscales, P
    )
    return fit.y_mean + fit.y_std * (fit.mu_z + r0 @ fit.alpha)


class IndividualKriging:
    """One continuous-only model per level; prediction dispatches on level.

    Levels with fewer than two observations get no model and fall back
    to the level's mean response (global mean if the level is empty).
    """

    def __init__(self, fits: dict, fallback: dict, global_mean: float, bounds, n_levels: int):
        self.fits = fits
        self.fallback = fallback
        self.global_mean = global_mean
        self.bounds = bounds
        self.n_levels = n_levels

    def predict(self, w0: MixedPoint) -> float:
        return float(self.predict_batch(w0.x[None, :], np.array([w0.level]))[0])

    def predict_batch(self, X, levels) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        levels = np.broadcast_to(np.asarray(levels, dtype=int), (X.shape[0],))
        out = np.empty(X.shape[0])
        for lv in np.unique(levels):
            m = levels == lv
            submodel = self.fits.get(int(lv))
            if submodel is not None:
                out[m] = predict_batch(submodel, X[m], lv)
            else:
                out[m] = self.fallback.get(int(lv), self.global_mean)
        return out


def fit_individual(train: TrainingSet, options: FitOptions | None = None) -> IndividualKriging:
    """Fit an independent continuous GP to each level's sub-data set."""
    options = options or FitOptions()
    fits: dict[int, GPFit] = {}
    fallback: dict[int, float] = {}
    for lv in range(1, train.n_levels + 1):
        m = train.levels == lv
        if m.sum() >= 2:
            sub = TrainingSet(train.X[m], train.levels[m], train.y[m], train.bounds)
            fits[lv] = fit(sub, None, options)
        else:
            warnings.warn(f"level {lv} has {int(m.sum())} point(s); using mean fallback",
                          stacklevel=2)
            if m.any():
                fallback[lv] = float(train.y[m].mean())
    return IndividualKriging(
        fits, fallback, float(train.y.mean()), train.bounds, train.n_levels
    )


# ---------------------------------------------------------------------------
# model persistence

def save_fit(fit: GPFit, path) -> None:
    """Write a fitted model as self-describing JSON.

    Stores bounds, family spec, parameters and training data; loading
    recomputes the factorizations from the same numbers, so predictions
    round-trip bit-for-bit under identical arithmetic.
    """
    spec = fit.config.family_spec
    doc = {
        "format": "mixedgp-fit",
        "version": 1,
        "bounds": fit.train.bounds.tolist(),
        "n_levels": fit.train.n_levels,
        "family": None if spec is None else spec.family,
        "s": None if spec is None else spec.s,
        "rank": None if spec is None else spec.rank,
        "cat_params": None
        if fit.config.cat_params is None
        else fit.config.cat_params.tolist(),
        "lengthscales": fit.config.lengthscales.tolist(),
        "nugget": fit.config.nugget,
        "corr_nugget": fit.config.corr_nugget,
        "mu_hat": fit.mu_hat,
        "sigma2_hat": fit.sigma2_hat,
        "neg_log_lik": fit.neg_log_lik,
        "train_X": fit.train.X.tolist(),
        "train_levels": fit.train.levels.tolist(),
        "train_y": fit.train.y.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_fit(path) -> GPFit:
    """Reconstruct a fitted model saved by :func:`save_fit`."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "mixedgp-fit":
        raise ParamDomainError(f"{path}: not a mixedgp fit file")
    train = TrainingSet(
        np.array(doc["train_X"], dtype=float),
        np.array(doc["train_levels"], dtype=int),
        np.array(doc["train_y"], dtype=float),
        bounds=np.array(doc["bounds"], dtype=float),
        n_levels=doc["n_levels"],
    )
    spec = None
    if doc["family"] is not None:
        spec = FamilySpec(doc["family"], doc["s"], doc["rank"])
    config = KernelConfig(
        np.array(doc["lengthscales"], dtype=float),
        spec,
        None if doc["cat_params"] is None else np.array(doc["cat_params"], dtype=float),
        nugget=doc["nugget"],
        corr_nugget=doc["corr_nugget"],
    )
    return _finalize_fit(train, config)
