"""Cross-correlation matrix parameterizations for a categorical input.

Maps box-constrained parameter vectors to valid s x s cross-correlation
matrices. Four families are supported:

EC
    exchangeable / compound symmetry: one parameter c in (0, 1), all
    off-diagonal entries equal c.
MC
    multiplicative: s positive parameters, tau_ij = exp(-(phi_i + phi_j))
    off the diagonal. Only positive correlations are reachable.
UC
    unrestrictive hypersphere decomposition of the Cholesky factor,
    s(s-1)/2 angles in (0, pi). Every valid correlation matrix is
    reachable.
LRC_r
    low-rank loading matrix Q (s x r) built from spherical coordinates,
    returning Q Q^T with a nugget. (r-1)(s - r/2) angles. Parsimonious
    but still able to express negative correlations.

Angle vectors for UC and LRC are flattened row-major: rows i = 2..s,
and within row i the angles theta_{i,1}, ..., theta_{i,min(i,r)-1}
(min(i, s) for UC).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NumericalRankError,
    ParamArityError,
    ParamDomainError,
    RankRangeError,
)

DEFAULT_NUGGET = 1e-8

# Box margin used when the mathematical domain is an open interval;
# optimizers need closed boxes.
ANGLE_MARGIN = 1e-6

FAMILIES = ("EC", "MC", "UC", "LRC")


@dataclass(frozen=True)
class FamilySpec:
    """Identifies one parameterization family for s categorical levels."""

    family: str
    s: int
    rank: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParamDomainError(f"unknown family {self.family!r}")
        if self.s < 2:
            raise ParamDomainError(f"need at least 2 levels, got s={self.s}")
        if self.family == "LRC":
            if self.rank is None:
                raise RankRangeError("LRC requires a rank")
            if not 2 <= self.rank <= self.s - 1:
                raise RankRangeError(
                    f"rank must satisfy 2 <= rank <= s-1, got rank={self.rank} for s={self.s}"
                )
        elif self.rank is not None:
            raise RankRangeError(f"rank is only meaningful for LRC, not {self.family}")

    @property
    def label(self) -> str:
        return f"LRC{self.rank}" if self.family == "LRC" else self.family

    @classmethod
    def parse(cls, label: str, s: int) -> "FamilySpec":
        """Parse a label such as ``"EC"`` or ``"LRC3"`` into a spec."""
        label = label.strip().upper()
        if label.startswith("LRC") and len(label) > 3:
            return cls("LRC", s, int(label[3:]))
        return cls(label, s)


def lrc_param_count(s: int, rank: int) -> int:
    """(rank-1)(s - rank/2) angles, computed in integer arithmetic.

    The loading builder accepts any 2 <= rank <= s; a model spec
    additionally requires rank < s (rank s is just the unrestrictive
    parameterization).
    """
    if not 2 <= rank <= s:
        raise RankRangeError(f"rank must satisfy 2 <= rank <= s, got rank={rank} for s={s}")
    return (rank - 1) * s - rank * (rank - 1) // 2


def param_count(spec: FamilySpec) -> int:
    """Number of free parameters of the family for ``spec.s`` levels."""
    s = spec.s
    if spec.family == "EC":
        return 1
    if spec.family == "MC":
        return s
    if spec.family == "UC":
        return s * (s - 1) // 2
    return lrc_param_count(s, spec.rank)


def cat_param_bounds(spec: FamilySpec) -> np.ndarray:
    """Optimizer box for the family, shape (param_count, 2).

    The mathematical domains are open ((0,1), (0,inf), (0,pi)); the
    boxes shrink them by a small margin so box-constrained optimizers
    stay strictly inside. MC has no natural upper bound; 10 is used
    since exp(-20) is already indistinguishable from zero correlation.
    """
    k = param_count(spec)
    if spec.family == "EC":
        lo, hi = ANGLE_MARGIN, 1.0 - ANGLE_MARGIN
    elif spec.family == "MC":
        lo, hi = ANGLE_MARGIN, 10.0
    else:
        lo, hi = ANGLE_MARGIN, np.pi - ANGLE_MARGIN
    return np.tile((lo, hi), (k, 1)).astype(float)


@dataclass(frozen=True)
class CatParamVector:
    """Validated parameter vector of one family."""

    values: np.ndarray
    spec: FamilySpec
    bounds: np.ndarray = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bounds", cat_param_bounds(self.spec))
        k = param_count(self.spec)
        if values.shape != (k,):
            raise ParamArityError(
                f"{self.spec.label} with s={self.spec.s} needs {k} parameters, "
                f"got shape {values.shape}"
            )
        _check_domain(values, self.spec)


def _check_domain(values: np.ndarray, spec: FamilySpec) -> None:
    if spec.family == "EC":
        if not (0.0 < values[0] < 1.0):
            raise ParamDomainError(f"EC parameter must lie in (0, 1), got {values[0]}")
    elif spec.family == "MC":
        if not np.all(values > 0.0):
            raise ParamDomainError("MC parameters must all be positive")
    else:
        if not np.all((values > 0.0) & (values < np.pi)):
            raise ParamDomainError(f"{spec.family} angles must lie in (0, pi)")


@dataclass(frozen=True)
class CorrMatrix:
    """An s x s symmetric cross-correlation matrix with unit diagonal."""

    values: np.ndarray
    s: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.s, self.s):
            raise ParamArityError(f"expected shape ({self.s}, {self.s}), got {values.shape}")
        if not np.array_equal(values, values.T):
            raise ParamDomainError("correlation matrix must be stored symmetrically")
        if not np.all(np.diag(values) == 1.0):
            raise ParamDomainError("correlation matrix must have unit diagonal")
        if np.any(np.abs(values) > 1.0):
            raise ParamDomainError("correlation entries must lie in [-1, 1]")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.values)[0])

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor; raises ``NumericalRankError`` if not pd."""
        try:
            return np.linalg.cholesky(self.values)
        except np.linalg.LinAlgError:
            raise NumericalRankError(
                f"matrix is not positive definite "
                f"(smallest eigenvalue {self.min_eigenvalue():.3e})",
                smallest_eigenvalue=self.min_eigenvalue(),
            ) from None


@dataclass(frozen=True)
class LoadingMatrix:
    """The s x r loading matrix Q whose rows are unit vectors."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def s(self) -> int:
        return self.values.shape[0]

    @property
    def rank(self) -> int:
        return self.values.shape[1]


def _finish(P: np.ndarray, s: int) -> CorrMatrix:
    # force exact symmetry / unit diagonal / range against fp noise
    P = (P + P.T) / 2.0
    np.fill_diagonal(P, 1.0)
    np.clip(P, -1.0, 1.0, out=P)
    return CorrMatrix(P, s)


def _sphere_row(angles: np.ndarray) -> np.ndarray:
    """Point on the unit (k+1)-sphere from k spherical angles.

    Entry j is cos(theta_j) times the product of the preceding sines;
    the last entry is the product of all sines.
    """
    k = angles.size
    row = np.empty(k + 1)
    if k == 0:
        row[0] = 1.0
        return row
    c = np.cos(angles)
    sp = np.cumprod(np.sin(angles))
    row[0] = c[0]
    if k > 1:
        row[1:k] = c[1:] * sp[: k - 1]
    row[k] = sp[k - 1]
    return row


def ec_values(c: float, s: int) -> np.ndarray:
    if not (0.0 < c < 1.0):
        raise ParamDomainError(f"EC parameter must lie in (0, 1), got {c}")
    P = np.full((s, s), float(c))
    np.fill_diagonal(P, 1.0)
    return P


def build_ec(c: float, s: int) -> CorrMatrix:
    """Exchangeable correlation: every off-diagonal entry equals ``c``."""
    return _finish(ec_values(c, s), s)


def mc_values(phi: np.ndarray, s: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (s,):
        raise ParamArityError(f"MC needs {s} parameters, got shape {phi.shape}")
    if not np.all(phi > 0.0):
        raise ParamDomainError("MC parameters must all be positive")
    a = np.exp(-phi)
    P = np.outer(a, a)
    np.fill_diagonal(P, 1.0)
    return P


def build_mc(phi: np.ndarray, s: int) -> CorrMatrix:
    """Multiplicative correlation: tau_ij = exp(-(phi_i + phi_j)), i != j."""
    return _finish(mc_values(phi, s), s)


def uc_loading(theta: np.ndarray, s: int) -> np.ndarray:
    """Lower-triangular Cholesky factor from the hypersphere angles."""
    theta = np.asarray(theta, dtype=float)
    k = s * (s - 1) // 2
    if theta.shape != (k,):
        raise ParamArityError(f"UC with s={s} needs {k} angles, got shape {theta.shape}")
    if not np.all((theta > 0.0) & (theta < np.pi)):
        raise ParamDomainError("UC angles must lie in (0, pi)")
    L = np.zeros((s, s))
    L[0, 0] = 1.0
    off = 0
    for i in range(1, s):
        L[i, : i + 1] = _sphere_row(theta[off : off + i])
        off += i
    return L


def build_uc(theta: np.ndarray, s: int) -> CorrMatrix:
    """Unrestrictive correlation L L^T via spherical coordinates.

    Rows of L are points on unit hyperspheres, so the product has unit
    diagonal; the result is positive definite for any valid angles.
    """
    L = uc_loading(theta, s)
    return _finish(L @ L.T, s)


def lrc_loading(theta: np.ndarray, s: int, rank: int) -> np.ndarray:
    """The s x rank loading matrix Q with the first row fixed to (1, 0, ...).

    Row i holds spherical coordinates in min(i, rank) dimensions,
    zero-padded beyond. Only differences from the first row matter,
    which is what saves one angle per column.
    """
    theta = np.asarray(theta, dtype=float)
    k = lrc_param_count(s, rank)
    if theta.shape != (k,):
        raise ParamArityError(
            f"LRC{rank} with s={s} needs {k} angles, got shape {theta.shape}"
        )
    if not np.all((theta > 0.0) & (theta < np.pi)):
        raise ParamDomainError("LRC angles must lie in (0, pi)")
    Q = np.zeros((s, rank))
    Q[0, 0] = 1.0
    off = 0
    for i in range(2, s + 1):
        m = min(i, rank) - 1
        Q[i - 1, : m + 1] = _sphere_row(theta[off : off + m])
        off += m
    return Q


def build_lrc(
    theta: np.ndarray, s: int, rank: int, nugget: float = DEFAULT_NUGGET
) -> tuple[LoadingMatrix, CorrMatrix]:
    """Low-rank correlation Q Q^T, nugget-regularized to full rank.

    Returns both the loading matrix (for rank inspection) and the
    regularized correlation matrix. Before regularization the product
    has rank at most ``rank``.
    """
    Q = lrc_loading(theta, s, rank)
    return LoadingMatrix(Q), regularize(Q @ Q.T, nugget)


def regularize(P: np.ndarray, nugget: float = DEFAULT_NUGGET) -> CorrMatrix:
    """Add ``nugget`` to the diagonal and rescale so the diagonal is 1.

    (P + nugget I) / (1 + nugget) keeps entries in [-1, 1] and lifts the
    smallest eigenvalue to at least nugget / (1 + nugget) for psd P.
    """
    if nugget <= 0.0:
        raise ParamDomainError(f"nugget must be positive, got {nugget}")
    P = np.asarray(P, dtype=float)
    s = P.shape[0]
    if np.abs(P - P.T).max() > 1e-12:
        raise ParamDomainError("regularize expects a symmetric matrix")
    if np.abs(np.diag(P) - 1.0).max() > 1e-12:
        raise ParamDomainError("regularize expects a unit diagonal")
    if np.abs(P).max() > 1.0 + 1e-12:
        raise ParamDomainError("regularize expects entries in [-1, 1]")
    out = (P + nugget * np.eye(s)) / (1.0 + nugget)
    result = _finish(out, s)
    result.cholesky()  # NumericalRankError if still not pd
    return result


def embed_lrc_in_uc(
    theta_lrc: np.ndarray, s: int, rank: int, eps: float = 1e-9
) -> np.ndarray:
    """UC angle vector whose matrix matches the LRC one entrywise.

    A rank-r loading pattern is the special case of the full hypersphere
    recursion with theta_{i,r} = 0 for rows i > r: the sine factor then
    zeroes every later column. Zero is outside the open angle domain, so
    ``eps`` is substituted; the entrywise gap it causes is O(s * eps),
    far below 1e-6 at the default. Angles after position r are
    unidentified and fixed at pi/2.
    """
    lrc_loading(theta_lrc, s, rank)  # validates arity and domain
    theta_lrc = np.asarray(theta_lrc, dtype=float)
    out = []
    off = 0
    for i in range(2, s + 1):
        m = min(i, rank) - 1
        row = list(theta_lrc[off : off + m])
        off += m
        if i > rank:
            row.append(eps)
            row.extend([np.pi / 2.0] * (i - 1 - rank))
        out.append(row)
    return np.concatenate([np.asarray(r) for r in out])


def corr_values(
    spec: FamilySpec, values: np.ndarray, nugget: float = DEFAULT_NUGGET
) -> np.ndarray:
    """Raw matrix for the family, dispatching on ``spec``.

    Fast path used inside likelihood loops; skips the CorrMatrix
    wrapper for EC/MC/UC, which are exact by construction.
    """
    values = np.asarray(values, dtype=float)
    if spec.family == "EC":
        if values.shape != (1,):
            raise ParamArityError(f"EC takes a single parameter, got shape {values.shape}")
        return ec_values(float(values[0]), spec.s)
    if spec.family == "MC":
        return mc_values(values, spec.s)
    if spec.family == "UC":
        L = uc_loading(values, spec.s)
        P = L @ L.T
        P = (P + P.T) / 2.0
        np.fill_diagonal(P, 1.0)
        return np.clip(P, -1.0, 1.0)
    Q = lrc_loading(values, spec.s, spec.rank)
    P = (Q @ Q.T + nugget * np.eye(spec.s)) / (1.0 + nugget)
    P = (P + P.T) / 2.0
    np.fill_diagonal(P, 1.0)
    return np.clip(P, -1.0, 1.0)


def build_correlation(
    spec: FamilySpec, values: np.ndarray, nugget: float = DEFAULT_NUGGET
) -> CorrMatrix:
    """Validated correlation matrix for any family."""
    if spec.family == "LRC":
        return build_lrc(values, spec.s, spec.rank, nugget)[1]
    return _finish(corr_values(spec, values, nugget), spec.s)
