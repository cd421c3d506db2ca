"""Base kernel catalogue, weighted kernel dictionaries, and Gram assembly.

Seven scalar kernel families are supported: constant, linear, polynomial,
laplace, gaussian, triangular, and locally-periodic.  A
:class:`KernelDictionary` combines m base kernels with weights theta; the
combined kernel is ``sum_i theta_i**2 * k_i(x, y)``, so any real weight
vector yields a symmetric kernel and the squared weights keep the sum
positive semidefinite whenever the members are.

Numerical caveats, observable through :class:`GramMatrix`:

* the triangular family here is the truncated parabola
  ``max(0, 1 - ||x-y||^2 / sigma^2)``, which is *not* positive definite in
  general; its Gram matrices may need a nugget or may fail factorization;
* the locally-periodic family is positive definite on the real line but
  can be indefinite for inputs of dimension >= 2.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np
import yaml
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from ._validation import as_point, as_points
from .exceptions import SingularGramError

__all__ = [
    "BaseKernel",
    "KernelDictionary",
    "GramMatrix",
    "FAMILIES",
    "constant",
    "linear",
    "polynomial",
    "laplace",
    "gaussian",
    "triangular",
    "locally_periodic",
    "eval_base",
    "eval_dictionary",
    "gram",
    "resolve_nugget",
    "median_heuristic",
    "load_dictionary",
    "save_dictionary",
    "dictionary_to_spec",
    "dictionary_from_spec",
]

# Default nugget policy: this fraction of the mean diagonal entry.
NUGGET_SCALE = 1e-8


def pairwise_stats(X, Z=None, block=512):
    """Return ``(sqdist, dot)`` between rows of X and rows of Z.

    ``sqdist[i, j] = ||X[i] - Z[j]||^2`` and ``dot[i, j] = X[i] . Z[j]``.
    These two arrays are all any family needs, so Gram assembly computes
    them once per point set.

    Squared distances are computed by explicit differencing (in row blocks
    to bound memory) rather than via the expanded form
    ``||x||^2 + ||z||^2 - 2 x.z``: the expansion loses absolute accuracy
    ~1e-16 to cancellation, which ``sqrt`` inside the laplace and
    locally-periodic kernels amplifies to ~1e-8 errors near coincident
    points.  Differencing keeps full relative precision and yields exact
    zeros on coincident pairs.
    """
    X = np.asarray(X, dtype=np.float64)
    Z = X if Z is None else np.asarray(Z, dtype=np.float64)
    dot = X @ Z.T
    sq = np.empty((X.shape[0], Z.shape[0]))
    for start in range(0, X.shape[0], block):
        stop = min(start + block, X.shape[0])
        diff = X[start:stop, None, :] - Z[None, :, :]
        np.einsum("ijk,ijk->ij", diff, diff, out=sq[start:stop])
    return sq, dot


# --------------------------------------------------------------------------
# Family registry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Family:
    """Descriptor for one kernel family.

    ``value(sq, dot, beta)`` evaluates the kernel from precomputed squared
    distances and dot products.  ``dlog(sq, dot, beta)`` returns one array
    per hyperparameter: the derivative of the kernel with respect to the
    *logarithm* of that hyperparameter (zeros for non-learnable ones).
    """

    name: str
    beta_names: tuple
    learnable: tuple
    value: callable
    dlog: callable
    check: callable

    @property
    def n_beta(self):
        return len(self.beta_names)


def _check_positive(names):
    def check(beta):
        for name, value in zip(names, beta):
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value}")
    return check


def _check_degree(beta):
    (degree,) = beta
    if degree != int(degree) or degree < 1:
        raise ValueError(f"polynomial degree must be a positive integer, got {degree}")


def _constant_value(sq, dot, beta):
    return np.full_like(sq, beta[0])


def _linear_value(sq, dot, beta):
    return dot.copy()


def _polynomial_value(sq, dot, beta):
    return (1.0 + dot) ** int(beta[0])


def _laplace_value(sq, dot, beta):
    return np.exp(-np.sqrt(sq) / beta[0])


def _gaussian_value(sq, dot, beta):
    return np.exp(-sq / beta[0] ** 2)


def _triangular_value(sq, dot, beta):
    return np.maximum(0.0, 1.0 - sq / beta[0] ** 2)


def _locally_periodic_value(sq, dot, beta):
    sigma, ell, period = beta
    r = np.sqrt(sq)
    sin2 = np.sin(np.pi * r / period) ** 2
    return sigma**2 * np.exp(-2.0 * sin2 / ell**2 - sq / ell**2)


def _constant_dlog(sq, dot, beta):
    return [np.full_like(sq, beta[0])]


def _no_dlog(sq, dot, beta):
    return []


def _polynomial_dlog(sq, dot, beta):
    # degree is discrete; it never takes gradient steps
    return [np.zeros_like(sq)]


def _laplace_dlog(sq, dot, beta):
    r = np.sqrt(sq)
    return [np.exp(-r / beta[0]) * (r / beta[0])]


def _gaussian_dlog(sq, dot, beta):
    value = np.exp(-sq / beta[0] ** 2)
    return [value * (2.0 * sq / beta[0] ** 2)]


def _triangular_dlog(sq, dot, beta):
    inside = 1.0 - sq / beta[0] ** 2
    return [np.where(inside > 0.0, 2.0 * sq / beta[0] ** 2, 0.0)]


def _locally_periodic_dlog(sq, dot, beta):
    sigma, ell, period = beta
    r = np.sqrt(sq)
    sin2 = np.sin(np.pi * r / period) ** 2
    value = sigma**2 * np.exp(-2.0 * sin2 / ell**2 - sq / ell**2)
    d_sigma = 2.0 * value
    d_ell = value * (4.0 * sin2 + 2.0 * sq) / ell**2
    d_period = value * (2.0 * np.pi * r / (ell**2 * period)) * np.sin(2.0 * np.pi * r / period)
    return [d_sigma, d_ell, d_period]


FAMILIES = {
    f.name: f
    for f in (
        Family("constant", ("k",), (True,), _constant_value, _constant_dlog,
               _check_positive(("k",))),
        Family("linear", (), (), _linear_value, _no_dlog, lambda beta: None),
        Family("polynomial", ("degree",), (False,), _polynomial_value,
               _polynomial_dlog, _check_degree),
        Family("laplace", ("sigma",), (True,), _laplace_value, _laplace_dlog,
               _check_positive(("sigma",))),
        Family("gaussian", ("sigma",), (True,), _gaussian_value, _gaussian_dlog,
               _check_positive(("sigma",))),
        Family("triangular", ("sigma",), (True,), _triangular_value,
               _triangular_dlog, _check_positive(("sigma",))),
        Family("locally-periodic", ("sigma", "length", "period"),
               (True, True, True), _locally_periodic_value,
               _locally_periodic_dlog,
               _check_positive(("sigma", "length", "period"))),
    )
}


# --------------------------------------------------------------------------
# Kernels and dictionaries
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BaseKernel:
    """One member of the catalogue: a family tag plus its hyperparameters.

    Immutable; hyperparameter positivity (and integrality of the
    polynomial degree) is enforced at construction.
    """

    family: str
    beta: tuple = ()

    def __post_init__(self):
        name = str(self.family).replace("_", "-")
        if name not in FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; "
                f"choose from {sorted(FAMILIES)}"
            )
        beta = tuple(float(b) for b in np.atleast_1d(np.asarray(self.beta, dtype=np.float64))) \
            if len(np.atleast_1d(self.beta)) else ()
        spec = FAMILIES[name]
        if len(beta) != spec.n_beta:
            raise ValueError(
                f"{name} kernel takes {spec.n_beta} hyperparameters "
                f"{spec.beta_names}, got {len(beta)}"
            )
        spec.check(beta)
        object.__setattr__(self, "family", name)
        object.__setattr__(self, "beta", beta)

    @property
    def spec(self):
        return FAMILIES[self.family]

    @property
    def learnable(self):
        """Mask of hyperparameters that take gradient steps (in log space)."""
        return self.spec.learnable

    def with_beta(self, beta):
        return BaseKernel(self.family, tuple(beta))

    def value(self, sq, dot):
        return self.spec.value(sq, dot, self.beta)

    def dlog_beta(self, sq, dot):
        return self.spec.dlog(sq, dot, self.beta)

    def __call__(self, x, y):
        return eval_base(self, x, y)


def constant(k):
    return BaseKernel("constant", (k,))


def linear():
    return BaseKernel("linear", ())


def polynomial(degree):
    return BaseKernel("polynomial", (degree,))


def laplace(sigma):
    return BaseKernel("laplace", (sigma,))


def gaussian(sigma):
    return BaseKernel("gaussian", (sigma,))


def triangular(sigma):
    return BaseKernel("triangular", (sigma,))


def locally_periodic(sigma, length, period):
    return BaseKernel("locally-periodic", (sigma, length, period))


def eval_base(kernel, x, y):
    """Evaluate one base kernel at a pair of points."""
    x = as_point(x)
    y = as_point(y, dim=x.shape[0], name="y")
    sq, dot = pairwise_stats(x[None, :], y[None, :])
    return float(kernel.value(sq, dot)[0, 0])


@dataclass(frozen=True)
class KernelDictionary:
    """An ordered list of base kernels with real mixture weights.

    The combined kernel is ``sum_i theta[i]**2 * kernels[i](x, y)``; the
    coefficient is the squared weight, so the sign of theta is irrelevant.
    """

    kernels: tuple
    theta: tuple

    def __post_init__(self):
        kernels = tuple(self.kernels)
        if not kernels:
            raise ValueError("a kernel dictionary needs at least one kernel")
        if not all(isinstance(k, BaseKernel) for k in kernels):
            raise ValueError("kernels must be BaseKernel instances")
        theta = tuple(float(t) for t in np.asarray(self.theta, dtype=np.float64).reshape(-1))
        if len(theta) != len(kernels):
            raise ValueError(
                f"got {len(theta)} weights for {len(kernels)} kernels"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta contains non-finite values")
        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self):
        return len(self.kernels)

    @property
    def theta_array(self):
        return np.asarray(self.theta, dtype=np.float64)

    def with_theta(self, theta):
        return KernelDictionary(self.kernels, tuple(theta))

    def with_params(self, theta, betas):
        """Rebuild with new weights and per-kernel hyperparameters."""
        kernels = tuple(k.with_beta(b) for k, b in zip(self.kernels, betas))
        return KernelDictionary(kernels, tuple(theta))

    def subset(self, indices):
        """Dictionary containing only the listed kernels (order preserved)."""
        indices = sorted(set(int(i) for i in indices))
        if not indices:
            raise ValueError("subset needs at least one kernel index")
        if indices[0] < 0 or indices[-1] >= self.m:
            raise ValueError(f"kernel index out of range for m={self.m}")
        return KernelDictionary(
            tuple(self.kernels[i] for i in indices),
            tuple(self.theta[i] for i in indices),
        )

    def value(self, sq, dot):
        """Combined kernel values from precomputed pairwise statistics."""
        out = np.zeros_like(sq)
        for weight, kernel in zip(self.theta, self.kernels):
            if weight != 0.0:
                out += weight**2 * kernel.value(sq, dot)
        return out

    def diag(self, X):
        """Values of the combined kernel on the diagonal, K(x, x) per row."""
        X = as_points(X)
        sq = np.zeros(X.shape[0])
        dot = (X * X).sum(axis=1)
        out = np.zeros_like(sq)
        for weight, kernel in zip(self.theta, self.kernels):
            if weight != 0.0:
                out += weight**2 * kernel.value(sq, dot)
        return out

    def __call__(self, x, y):
        return eval_dictionary(self, x, y)


def eval_dictionary(dictionary, x, y):
    """Evaluate the weighted dictionary kernel at a pair of points."""
    x = as_point(x)
    y = as_point(y, dim=x.shape[0], name="y")
    sq, dot = pairwise_stats(x[None, :], y[None, :])
    return float(dictionary.value(sq, dot)[0, 0])


def cross_gram(dictionary, X, Z):
    """Rectangular kernel matrix K(X, Z) with no nugget."""
    X = as_points(X)
    Z = as_points(Z, name="Z")
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"point dimensions differ: {X.shape[1]} vs {Z.shape[1]}")
    sq, dot = pairwise_stats(X, Z)
    return dictionary.value(sq, dot)


def resolve_nugget(diagonal_mean, nugget=None):
    """Apply the default nugget policy.

    ``None`` means ``NUGGET_SCALE`` times the mean diagonal entry of the
    Gram matrix being regularized; an explicit value is used unchanged.
    """
    if nugget is None:
        return NUGGET_SCALE * float(diagonal_mean)
    nugget = float(nugget)
    if nugget < 0 or not np.isfinite(nugget):
        raise ValueError(f"nugget must be nonnegative and finite, got {nugget}")
    return nugget


@dataclass(frozen=True)
class GramMatrix:
    """Kernel matrix over a point set plus the nugget used to regularize it.

    ``entries`` holds the raw kernel values; the nugget is added to the
    diagonal only when the matrix is factorized or solved against.
    """

    entries: np.ndarray
    nugget: float

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "nugget", float(self.nugget))

    @property
    def n(self):
        return self.entries.shape[0]

    def regularized(self):
        out = self.entries.copy()
        out[np.diag_indices_from(out)] += self.nugget
        return out

    def cholesky(self):
        """Lower Cholesky factor of the regularized matrix.

        Raises :class:`SingularGramError` naming the offending pivot when
        the matrix is not positive definite.
        """
        return cholesky_factor(self.regularized())

    def solve(self, b):
        return cho_solve((self.cholesky(), True), np.asarray(b, dtype=np.float64))


def cholesky_factor(matrix):
    """Lower Cholesky factor via LAPACK, with a located failure report."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    factor, info = dpotrf(matrix, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise SingularGramError(
            f"Gram matrix is not positive definite: factorization failed at "
            f"pivot {info} of {matrix.shape[0]}",
            pivot=int(info),
        )
    if info < 0:
        raise ValueError(f"invalid argument {-info} passed to dpotrf")
    return factor


def gram(dictionary, X, nugget=None):
    """Assemble the dictionary Gram matrix over the rows of X.

    The result is exactly symmetric; the (resolved) nugget rides along and
    is applied at factorization time.  Duplicate points with a zero nugget
    are flagged as a conditioning risk but only fail at factorization.
    """
    X = as_points(X)
    sq, dot = pairwise_stats(X)
    entries = dictionary.value(sq, dot)
    entries = 0.5 * (entries + entries.T)
    resolved = resolve_nugget(entries.diagonal().mean(), nugget)
    if resolved == 0.0 and X.shape[0] > 1:
        off = sq + np.diag(np.full(X.shape[0], np.inf))
        if off.min() == 0.0:
            warnings.warn(
                "duplicate points with nugget=0: Gram matrix is singular "
                "and will fail factorization",
                stacklevel=2,
            )
    return GramMatrix(entries, resolved)


def median_heuristic(X):
    """Median pairwise Euclidean distance, a scale-robust default for sigma."""
    X = as_points(X)
    if X.shape[0] < 2:
        return 1.0
    sq, _ = pairwise_stats(X)
    upper = sq[np.triu_indices(X.shape[0], k=1)]
    med = float(np.median(np.sqrt(upper)))
    return med if med > 0 else 1.0


# --------------------------------------------------------------------------
# Dictionary specification files
# --------------------------------------------------------------------------
#
# A dictionary spec is a YAML document:
#
#   kernels:
#     - family: gaussian      # catalogue family name
#       beta: [0.2]           # hyperparameters, in family order
#       theta: 1.0            # initial mixture weight
#     - family: linear
#       theta: 1.0
#
# ``beta`` may be omitted for the linear kernel (it has none).

def dictionary_to_spec(dictionary):
    """Plain-data form of a dictionary, suitable for YAML/JSON."""
    return {
        "kernels": [
            {"family": k.family, "beta": list(k.beta), "theta": t}
            for k, t in zip(dictionary.kernels, dictionary.theta)
        ]
    }


def dictionary_from_spec(spec):
    """Inverse of :func:`dictionary_to_spec`; validates as it builds."""
    if not isinstance(spec, dict) or "kernels" not in spec:
        raise ValueError("dictionary spec must be a mapping with a 'kernels' list")
    entries = spec["kernels"]
    if not isinstance(entries, list) or not entries:
        raise ValueError("'kernels' must be a nonempty list")
    kernels = []
    theta = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "family" not in entry:
            raise ValueError(f"kernel entry {i} must be a mapping with a 'family'")
        kernels.append(BaseKernel(entry["family"], tuple(entry.get("beta", ()))))
        theta.append(float(entry.get("theta", 1.0)))
    return KernelDictionary(tuple(kernels), tuple(theta))


def save_dictionary(dictionary, path):
    with open(path, "w") as handle:
        yaml.safe_dump(dictionary_to_spec(dictionary), handle, sort_keys=False)


def load_dictionary(path):
    with open(path) as handle:
        spec = yaml.safe_load(handle)
    return dictionary_from_spec(spec)
