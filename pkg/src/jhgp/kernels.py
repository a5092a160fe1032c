"""Covariance-function families, realized Gram matrices and hyperparameter
derivatives.

Supported families:

* ``squared_exponential`` -- smooth population-mean kernel
  ``exp(-dt^2 / (2 lam^2))`` with length-scale ``lam > 0``.
* ``ar1`` -- stationary autoregressive correlation ``rho^|i-j|`` with
  ``rho in (-1, 0)``; requires integer tick spacing.
* ``brownian`` -- martingale kernel ``min(s, t)``; ticks must be positive
  (callers anchor subject windows by passing ``tick - first_tick + 1``).
* ``sum`` -- elementwise sum of two component kernels.

All solves go through Cholesky factorization with an escalating diagonal
jitter; explicit matrix inversion is never used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import ConditioningError, DomainError

JITTER_START = 1e-10
JITTER_MAX = 1e-6

_FAMILIES = ("squared_exponential", "ar1", "brownian", "sum")


@dataclass(frozen=True)
class KernelSpec:
    """A covariance family plus its hyperparameters.

    ``hyper`` holds the single hyperparameter for parametric families
    (length-scale for squared_exponential, rho for ar1). ``parts`` is only
    used by the ``sum`` family.
    """

    family: str
    hyper: tuple = ()
    parts: tuple = field(default=())
    jitter: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}")
        if self.jitter < 0:
            raise DomainError("jitter must be nonnegative")
        if self.family == "squared_exponential":
            if len(self.hyper) != 1 or not self.hyper[0] > 0:
                raise DomainError("squared_exponential needs length-scale > 0")
        elif self.family == "ar1":
            if len(self.hyper) != 1 or not (-1.0 < self.hyper[0] < 0.0):
                raise DomainError("ar1 needs rho strictly inside (-1, 0)")
        elif self.family == "brownian":
            if self.hyper:
                raise DomainError("brownian kernel has no hyperparameter")
        elif self.family == "sum":
            if len(self.parts) != 2:
                raise DomainError("sum kernel needs exactly two parts")

    @property
    def has_hyper(self) -> bool:
        return self.family in ("squared_exponential", "ar1")

    def with_hyper(self, value: float) -> "KernelSpec":
        """Copy of this spec with a replaced hyperparameter."""
        if not self.has_hyper:
            raise DomainError(f"{self.family} kernel has no hyperparameter")
        return KernelSpec(self.family, (float(value),), self.parts, self.jitter)

    def describe(self) -> str:
        """Config-file form: family name plus colon-separated hyperparameters."""
        if self.family == "sum":
            return f"sum({self.parts[0].describe()}, {self.parts[1].describe()})"
        if self.hyper:
            return f"{self.family}:" + ",".join(repr(h) for h in self.hyper)
        return self.family


def squared_exponential(length_scale: float, jitter: float = 0.0) -> KernelSpec:
    return KernelSpec("squared_exponential", (float(length_scale),), jitter=jitter)


def ar1(rho: float, jitter: float = 0.0) -> KernelSpec:
    return KernelSpec("ar1", (float(rho),), jitter=jitter)


def brownian(jitter: float = 0.0) -> KernelSpec:
    return KernelSpec("brownian", jitter=jitter)


def kernel_sum(a: KernelSpec, b: KernelSpec, jitter: float = 0.0) -> KernelSpec:
    return KernelSpec("sum", parts=(a, b), jitter=jitter)


def parse_kernel(text: str) -> KernelSpec:
    """Parse the config-file form produced by :meth:`KernelSpec.describe`."""
    text = text.strip()
    if text.startswith("sum(") and text.endswith(")"):
        inner = text[4:-1]
        depth = 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                return kernel_sum(parse_kernel(inner[:i]), parse_kernel(inner[i + 1:]))
        raise DomainError(f"cannot parse sum kernel {text!r}")
    if ":" in text:
        family, _, args = text.partition(":")
        hyper = tuple(float(v) for v in args.split(",") if v.strip())
        return KernelSpec(family.strip(), hyper)
    return KernelSpec(text)


def _pairwise_dt(grid_a: np.ndarray, grid_b: np.ndarray) -> np.ndarray:
    return grid_a[:, None] - grid_b[None, :]


def realize(spec: KernelSpec, grid_a, grid_b=None) -> np.ndarray:
    """Gram matrix ``k(a_i, b_j)`` for the family on the given tick grids."""
    a = np.asarray(grid_a, dtype=float)
    b = a if grid_b is None else np.asarray(grid_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise DomainError("kernel grids must be nonempty")
    if spec.family == "squared_exponential":
        lam = spec.hyper[0]
        dt = _pairwise_dt(a, b)
        return np.exp(-(dt * dt) / (2.0 * lam * lam))
    if spec.family == "ar1":
        rho = spec.hyper[0]
        d = np.abs(_pairwise_dt(a, b))
        if not np.allclose(d, np.round(d), atol=1e-9):
            raise DomainError("ar1 kernel requires integer tick distances")
        d = np.round(d)
        # rho < 0: split sign so the float power stays real
        return np.where(d % 2 == 0, 1.0, -1.0) * np.abs(rho) ** d
    if spec.family == "brownian":
        if np.any(a <= 0) or np.any(b <= 0):
            raise DomainError(
                "brownian kernel needs positive ticks; shift subject windows "
                "to tick - first_tick + 1 before realizing"
            )
        return np.minimum(a[:, None], b[None, :])
    # sum
    return realize(spec.parts[0], a, b) + realize(spec.parts[1], a, b)


def d_realize(spec: KernelSpec, grid) -> np.ndarray:
    """Elementwise derivative of the Gram matrix w.r.t. the hyperparameter."""
    g = np.asarray(grid, dtype=float)
    if spec.family == "squared_exponential":
        lam = spec.hyper[0]
        dt2 = _pairwise_dt(g, g) ** 2
        return np.exp(-dt2 / (2.0 * lam * lam)) * dt2 / lam**3
    if spec.family == "ar1":
        rho = spec.hyper[0]
        d = np.round(np.abs(_pairwise_dt(g, g)))
        out = np.zeros_like(d)
        off = d > 0
        # d * rho^(d-1), with the sign split as in realize
        out[off] = d[off] * np.where((d[off] - 1) % 2 == 0, 1.0, -1.0) * np.abs(rho) ** (d[off] - 1)
        return out
    raise DomainError(f"{spec.family} kernel has no hyperparameter to differentiate")


def chol_with_jitter(matrix: np.ndarray, initial: float = 0.0):
    """Lower Cholesky factor with escalating diagonal inflation.

    Starts at ``initial`` (0 by default), escalates x10 from 1e-10 up to
    1e-6 on failure, then raises :class:`ConditioningError`.
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    eye = np.eye(n)
    jitter = float(initial)
    while True:
        try:
            shifted = a + jitter * eye if jitter > 0 else a
            return np.linalg.cholesky(shifted), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX * (1.0 + 1e-12):
                raise ConditioningError(
                    f"Cholesky failed for {n}x{n} matrix even at jitter {JITTER_MAX:g}"
                ) from None


class CovMatrix:
    """Symmetric PD matrix with a lazily computed, jittered Cholesky factor."""

    def __init__(self, values, jitter: float = 0.0):
        a = np.asarray(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError("covariance matrix must be square")
        scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
        if np.max(np.abs(a - a.T)) > 1e-12 * scale:
            raise DomainError("covariance matrix is not symmetric to 1e-12 relative")
        self.values = 0.5 * (a + a.T)
        self._initial_jitter = float(jitter)
        self._chol = None
        self._used_jitter = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def chol(self) -> np.ndarray:
        if self._chol is None:
            self._chol, self._used_jitter = chol_with_jitter(
                self.values, self._initial_jitter
            )
        return self._chol

    @property
    def used_jitter(self) -> float:
        self.chol()
        return self._used_jitter

    def solve(self, b: np.ndarray) -> np.ndarray:
        return cho_solve((self.chol(), True), b)

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol()))))

    def quad(self, x: np.ndarray) -> float:
        """Quadratic form x' V^-1 x via one triangular solve."""
        w = solve_triangular(self.chol(), x, lower=True)
        return float(w @ w)


def realized_cov(spec: KernelSpec, grid) -> CovMatrix:
    """Realize ``spec`` on ``grid`` as a :class:`CovMatrix`."""
    return CovMatrix(realize(spec, grid), jitter=spec.jitter)


@lru_cache(maxsize=1024)
def _chol_cache(spec: KernelSpec, grid: tuple):
    v = realize(spec, np.asarray(grid))
    chol, jit = chol_with_jitter(v, spec.jitter)
    v.setflags(write=False)
    chol.setflags(write=False)
    return v, chol


def cached_chol(spec: KernelSpec, grid) -> tuple:
    """Memoized (V, lower Cholesky) pair keyed on spec and grid.

    The sampler proposes a new hyperparameter almost every sweep but
    revisits the same grids constantly; returned arrays are read-only.
    """
    return _chol_cache(spec, tuple(float(t) for t in np.asarray(grid).ravel()))


def whitening_trace_terms(spec: KernelSpec, grid):
    """Trace statistics of U = V^-1 dV/dtheta used by the objective priors.

    Returns ``(tr(U^2), tr(U), n)``, computed from Cholesky solves.
    """
    g = np.asarray(grid, dtype=float)
    dv = d_realize(spec, g)
    _, chol = cached_chol(spec, g)
    u = cho_solve((np.asarray(chol), True), dv)
    tr_u = float(np.trace(u))
    tr_u2 = float(np.sum(u * u.T))
    return tr_u2, tr_u, g.size
