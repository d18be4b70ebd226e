"""
Kernel-extended Gaussian PSO.

Distances are taken in the feature space of a kernel K, where
||psi(x) - psi(y)||^2 = K(x, x) + K(y, y) - 2 K(x, y). The linear kernel
reproduces plain Gaussian PSO exactly.
"""

import logging
from abc import ABC, abstractmethod
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist

from bayes_pso.core.gaussian import (
    Assumption,
    GaussianParams,
    PosteriorHistory,
    Prior,
    _mixture_terms,
)
from bayes_pso.core.swarm import (
    ConfigurationError,
    Evaluator,
    FitnessWeightSpec,
    RngStream,
    SwarmState,
    UsageError,
    advance,
)

logger = logging.getLogger(__name__)

# u below this uses the series of (u cos u - sin u) / u^3
SINC_SERIES_CUTOFF = 1e-2


class Kernel(ABC):
    """A kernel with an analytic x-gradient. Inputs broadcast over leading axes."""

    id: str = ""

    def __init__(self, mu: float = 1.0):
        self.mu = float(mu)

    @property
    def c(self) -> Optional[float]:
        """K(x, x) when it does not depend on x."""
        return None

    @abstractmethod
    def __call__(self, x, y) -> np.ndarray: ...

    @abstractmethod
    def grad(self, x, y) -> np.ndarray:
        """d/dx K(x, y)."""

    @abstractmethod
    def pairwise(self, X: np.ndarray, P: np.ndarray) -> np.ndarray:
        """(q, N) matrix of K(X_q, P_i)."""

    @abstractmethod
    def weighted_grad(self, X: np.ndarray, P: np.ndarray, coef: np.ndarray) -> np.ndarray:
        """(q, m) rows of sum_i coef[q, i] * d/dx K(x, P_i) at x = X_q."""

    def self_value(self, x) -> np.ndarray:
        """K(x, x)."""
        return self(x, x)

    def self_grad(self, x) -> np.ndarray:
        """d/dx K(x, x)."""
        return np.zeros_like(np.asarray(x, dtype=float))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(mu={self.mu})"


class RadialKernel(Kernel):
    """
    Kernel of the squared distance rho = ||x - y||^2.

    Subclasses give the profile and its slope a(rho), where
    d/dx K(x, y) = a(rho) * (x - y).
    """

    @abstractmethod
    def profile(self, rho: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def slope(self, rho: np.ndarray) -> np.ndarray: ...

    @property
    def c(self) -> float:
        return float(self.profile(np.zeros(())))

    def __call__(self, x, y) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return self.profile(np.sum(d * d, axis=-1))

    def grad(self, x, y) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return self.slope(np.sum(d * d, axis=-1))[..., None] * d

    def pairwise(self, X: np.ndarray, P: np.ndarray) -> np.ndarray:
        return self.profile(cdist(X, P, "sqeuclidean"))

    def weighted_grad(self, X: np.ndarray, P: np.ndarray, coef: np.ndarray) -> np.ndarray:
        scaled = coef * self.slope(cdist(X, P, "sqeuclidean"))
        return X * scaled.sum(axis=1, keepdims=True) - scaled @ P


KERNELS: dict[str, type[Kernel]] = {}


def register_kernel(kernel_id: str) -> Callable[[type[Kernel]], type[Kernel]]:
    """Class decorator adding a kernel to the registry under ``kernel_id``."""

    def decorator(cls: type[Kernel]) -> type[Kernel]:
        cls.id = kernel_id
        KERNELS[kernel_id] = cls
        return cls

    return decorator


@register_kernel("sqrt_shift")
class SqrtShiftKernel(RadialKernel):
    """sqrt(||x - y||^2 + mu)."""

    def __init__(self, mu: float = 1.0):
        if mu <= 0:
            raise ConfigurationError(f"sqrt_shift kernel needs mu > 0, got {mu}")
        super().__init__(mu)

    def profile(self, rho):
        return np.sqrt(rho + self.mu)

    def slope(self, rho):
        return 1.0 / np.sqrt(rho + self.mu)


@register_kernel("sinc")
class SincKernel(RadialKernel):
    """(mu / r) sin(r / mu) with r = ||x - y||; equals 1 at r = 0."""

    def __init__(self, mu: float = 1.0):
        if mu <= 0:
            raise ConfigurationError(f"sinc kernel needs mu > 0, got {mu}")
        super().__init__(mu)

    def profile(self, rho):
        u = np.sqrt(rho) / self.mu
        return np.sinc(u / np.pi)

    def slope(self, rho):
        u = np.sqrt(np.asarray(rho, dtype=float)) / self.mu
        small = u < SINC_SERIES_CUTOFF
        safe = np.where(small, 1.0, u)
        exact = (safe * np.cos(safe) - np.sin(safe)) / safe**3
        series = -1.0 / 3.0 + u * u / 30.0
        return np.where(small, series, exact) / self.mu**2


@register_kernel("poisson")
class PoissonKernel(RadialKernel):
    """(1 - cos(s) / 2) / (5/4 - cos(s)) with s = ||x - y||."""

    def profile(self, rho):
        cos_s = np.cos(np.sqrt(rho))
        return (1.0 - 0.5 * cos_s) / (1.25 - cos_s)

    def slope(self, rho):
        s = np.sqrt(rho)
        denom = 1.25 - np.cos(s)
        return -0.375 * np.sinc(s / np.pi) / (denom * denom)


@register_kernel("trig")
class TrigKernel(RadialKernel):
    """
    -cos(sin rho) e^(cos rho) / 2 with rho = ||x - y||^2.

    Its gradient is sin(rho + sin rho) e^(cos rho) (x - y), the factor used by
    the kernel-standard update.
    """

    def profile(self, rho):
        return -0.5 * np.cos(np.sin(rho)) * np.exp(np.cos(rho))

    def slope(self, rho):
        return np.sin(rho + np.sin(rho)) * np.exp(np.cos(rho))


@register_kernel("linear")
class LinearKernel(Kernel):
    """<x, y>."""

    def __call__(self, x, y):
        return np.sum(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)

    def grad(self, x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(y, dtype=float), np.broadcast_shapes(x.shape, np.shape(y))).copy()

    def pairwise(self, X, P):
        return X @ P.T

    def weighted_grad(self, X, P, coef):
        return coef @ P

    def self_grad(self, x):
        return 2.0 * np.asarray(x, dtype=float)


KERNEL_IDS = tuple(KERNELS)


def make_kernel(kernel_id: str, mu: float = 1.0) -> Kernel:
    """
    Build a kernel by id.

    Raises:
        ConfigurationError: If the id is unknown or mu is invalid
    """
    if kernel_id not in KERNELS:
        raise ConfigurationError(f"Unknown kernel: {kernel_id}")
    return KERNELS[kernel_id](mu)


def kernel_eval(kernel: Kernel, x, y) -> float:
    """K(x, y) for a single pair."""
    return float(kernel(x, y))


def kernel_grad(kernel: Kernel, x, y) -> np.ndarray:
    """d/dx K(x, y) for a single pair; zero at x = y for radial kernels."""
    return np.asarray(kernel.grad(x, y), dtype=float)


def feature_distance(kernel: Kernel, x, y) -> float:
    """K(x, x) + K(y, y) - 2 K(x, y)."""
    return float(kernel.self_value(x) + kernel.self_value(y) - 2.0 * kernel(x, y))


def kernel_component_log_density(kernel: Kernel, beta: float, x, center) -> float:
    """-beta/2 * (K(x, x) + K(c, c) - 2 K(x, c)), normalizing constant dropped."""
    return -0.5 * beta * feature_distance(kernel, x, center)


class KernelParams(BaseModel):
    """Kernel choice plus the Gaussian PSO settings it is combined with."""

    model_config = ConfigDict(frozen=True)

    kernel: str = Field(default="trig", description="Kernel id")
    mu: float = Field(default=1.0, gt=0.0, description="Kernel parameter")
    gamma: float = Field(default=0.8, gt=0.0, le=1.0)
    beta: Optional[float] = Field(default=None, gt=0.0)
    tau: float = Field(default=0.0, ge=0.0, lt=1.0, description="Momentum share for kernel-standard")
    prior: str = Field(default=Prior.UNIFORM, pattern="^(gaussian_unit|uniform)$")
    assumption: str = Field(default=Assumption.DEPENDENCE, pattern="^(dependence|independence)$")
    window: int = Field(default=100, ge=1)
    beta_g: float = Field(default=2.0, ge=0.0, description="Global-best coefficient for kernel-standard")
    beta_b: float = Field(default=2.0, ge=0.0, description="Personal-best coefficient for kernel-standard")
    weight_spec: FitnessWeightSpec = Field(default_factory=FitnessWeightSpec)

    def build_kernel(self) -> Kernel:
        return make_kernel(self.kernel, self.mu)

    def gaussian_view(self) -> GaussianParams:
        """The history and weighting settings as Gaussian PSO parameters."""
        return GaussianParams(
            gamma=self.gamma,
            beta=self.beta,
            prior=self.prior,
            assumption=self.assumption,
            window=self.window,
            weight_spec=self.weight_spec,
        )


def _kernel_terms(kernel: Kernel, queries: np.ndarray, history: PosteriorHistory):
    flat = history.flattened()
    positions = flat["positions"]
    if queries.shape[1] != positions.shape[1]:
        raise UsageError(f"Query dimension {queries.shape[1]} does not match history dimension {positions.shape[1]}")
    sq = (
        kernel.self_value(queries)[:, None]
        + kernel.self_value(positions)[None, :]
        - 2.0 * kernel.pairwise(queries, positions)
    )
    return flat, positions, sq


def _kernel_prior(kernel: Kernel, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log prior and its gradient for -1/2 (K(x,x) + K(0,0) - 2 K(x,0))."""
    origin = np.zeros(queries.shape[1])
    value = -0.5 * (kernel.self_value(queries) + kernel.self_value(origin) - 2.0 * kernel(queries, origin))
    grad = kernel.grad(queries, origin) - 0.5 * kernel.self_grad(queries)
    return value, grad


def kernel_log_posterior(x, history: PosteriorHistory, params: KernelParams, kernel: Optional[Kernel] = None):
    """
    Log posterior with kernel feature-space distances.

    Returns:
        float for a single point, (q,) array for a batch
    """
    kernel = kernel or params.build_kernel()
    gparams = params.gaussian_view()
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    queries = np.atleast_2d(x)

    flat, _, sq = _kernel_terms(kernel, queries, history)
    betas = history.record_betas(gparams)

    if params.assumption == Assumption.DEPENDENCE:
        log_mix, _ = _mixture_terms(flat["log_weights"] - 0.5 * betas * sq, flat)
        value = log_mix.sum(axis=1)
    else:
        value = -0.5 * (sq * (flat["norm_weights"] * betas)).sum(axis=1)

    if params.prior == Prior.GAUSSIAN_UNIT:
        value = value + _kernel_prior(kernel, queries)[0]
    return float(value[0]) if single else value


def kernel_log_posterior_grad(x, history: PosteriorHistory, params: KernelParams, kernel: Optional[Kernel] = None) -> np.ndarray:
    """
    Analytic gradient of :func:`kernel_log_posterior`.

    Each record contributes beta * (d/dx K(x, x_i) - 1/2 d/dx K(x, x)), weighted
    by normalized fitness (independence) or by within-round responsibilities
    (dependence).

    Under the gaussian_unit prior the prior term is +dK(x, 0)/dx - 1/2 dK(x, x)/dx,
    the ascent gradient of the kernelized log prior; for the linear kernel it
    reduces to -x, the Gaussian prior pull.
    """
    kernel = kernel or params.build_kernel()
    gparams = params.gaussian_view()
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    queries = np.atleast_2d(x)

    flat, positions, sq = _kernel_terms(kernel, queries, history)
    betas = history.record_betas(gparams)

    if params.assumption == Assumption.DEPENDENCE:
        _, resp = _mixture_terms(flat["log_weights"] - 0.5 * betas * sq, flat)
        coef = resp * betas
    else:
        coef = np.broadcast_to(flat["norm_weights"] * betas, sq.shape)

    grad = kernel.weighted_grad(queries, positions, coef)
    grad = grad - 0.5 * coef.sum(axis=1, keepdims=True) * kernel.self_grad(queries)

    if params.prior == Prior.GAUSSIAN_UNIT:
        grad = grad + _kernel_prior(kernel, queries)[1]
    return grad[0] if single else grad


def step_kernel(
    state: SwarmState,
    history: PosteriorHistory,
    params: KernelParams,
    objective: Evaluator,
    rng: RngStream,
    kernel: Optional[Kernel] = None,
) -> SwarmState:
    """
    Gradient-ascent step on the kernelized posterior; appends the new round to ``history``.

    Returns:
        SwarmState: Next state
    """
    grad = kernel_log_posterior_grad(state.positions, history, params, kernel)
    target = state.positions + params.gamma * grad
    new_state = advance(state, target, target - state.positions, objective, rng)
    history.append_state(new_state)
    return new_state


def kernel_standard_update(
    positions: np.ndarray,
    best_positions: np.ndarray,
    global_best: np.ndarray,
    velocities: np.ndarray,
    r: np.ndarray,
    params: KernelParams,
    kernel: Kernel,
) -> np.ndarray:
    """
    x + r (beta_g dK(x, g)/dx + beta_b dK(x, b)/dx) + r tau v.

    ``r`` holds one draw per particle, shared by both pulls and the momentum.
    """
    r = np.asarray(r, dtype=float).reshape(-1, 1)
    pull = params.beta_g * kernel.grad(positions, global_best) + params.beta_b * kernel.grad(positions, best_positions)
    return positions + r * pull + r * params.tau * velocities


def step_kernel_standard(
    state: SwarmState,
    params: KernelParams,
    objective: Evaluator,
    rng: RngStream,
    kernel: Optional[Kernel] = None,
) -> SwarmState:
    """
    Standard PSO with kernel gradients in place of random attraction factors.

    With the trig kernel this is the trigonometric update run in benchmarks.
    The stored velocity is the previous displacement, used only when tau > 0.

    Returns:
        SwarmState: Next state
    """
    kernel = kernel or params.build_kernel()
    r = rng.uniform((state.n, 1))
    target = kernel_standard_update(
        state.positions,
        state.best_positions,
        state.global_best_position,
        state.velocities,
        r,
        params,
        kernel,
    )
    return advance(state, target, target - state.positions, objective, rng)
