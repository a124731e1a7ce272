"""Ground-truth bandit environments over a finite domain.

An environment stores the true reward ``f`` and cost ``g`` as vectors over
the domain, the kernels a learner should use for them, and the observation
noise. It also solves the distributional baseline problem
``max_pi E_pi[f] s.t. E_pi[g] + eps <= 0`` exactly by enumeration.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_generator, check_non_negative, check_vector
from .exceptions import DatasetParseError, GenerationError, InfeasibleError, InvalidInputError
from .kernels import Domain, KernelSpec

__all__ = [
    "NoiseSpec",
    "BootstrapNoise",
    "BanditEnv",
    "OracleSolution",
    "rkhs_function",
    "generate_synthetic",
    "load_dataset",
    "MIN_SLATER_MARGIN",
    "MAX_GENERATION_ATTEMPTS",
]

MIN_SLATER_MARGIN = 1e-3
MAX_GENERATION_ATTEMPTS = 100


@dataclass(frozen=True)
class NoiseSpec:
    """Additive observation noise.

    kind : {"none", "gaussian", "uniform", "student_t"}
        ``scale`` is the std for ``"gaussian"``, the half-width for
        ``"uniform"`` and the scale for ``"student_t"`` (with ``dof``).
    """

    kind: str = "gaussian"
    scale: float = 0.1
    dof: float = 3.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "uniform", "student_t"):
            raise InvalidInputError(f"unknown noise kind {self.kind!r}")
        check_non_negative(self.scale, "noise scale")
        if self.kind == "student_t" and not self.dof > 0:
            raise InvalidInputError("student_t noise needs dof > 0")

    @property
    def sub_gaussian(self):
        return self.kind != "student_t"

    @property
    def R(self):
        """Sub-Gaussian parameter (the scale itself for heavy tails, as a plug-in)."""
        return 0.0 if self.kind == "none" else float(self.scale)

    def sample(self, rng, index=None, size=None):
        if self.kind == "none" or self.scale == 0.0:
            return 0.0 if size is None else np.zeros(size)
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal(size)
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, size)
        return self.scale * rng.standard_t(self.dof, size)


@dataclass(frozen=True)
class BootstrapNoise:
    """Resample per-arm residuals; ``sign`` flips them (cost = -reward + h)."""

    residuals: tuple
    sign: float = 1.0
    sub_gaussian: bool = True

    @property
    def R(self):
        pooled = np.concatenate([np.asarray(r) for r in self.residuals]) if self.residuals else []
        return float(np.std(pooled)) if len(pooled) else 0.0

    def sample(self, rng, index=None, size=None):
        res = np.asarray(self.residuals[index])
        if res.size == 0:
            return 0.0 if size is None else np.zeros(size)
        return self.sign * res[rng.integers(0, res.size, size=size)]


@dataclass(frozen=True)
class OracleSolution:
    """Optimal mixture of at most two domain points."""

    value: float
    support: tuple
    weights: tuple


@dataclass
class BanditEnv:
    """Finite-domain constrained bandit with known ground truth.

    Parameters
    ----------
    domain : Domain
    f_values, g_values : array-like of shape (n_points,)
    reward_noise, cost_noise : NoiseSpec or BootstrapNoise
    f_kernel, g_kernel : KernelSpec
        Kernels a learner should use for the reward and cost models.
    B, G : float, optional
        Sup-norm caps; default to the realized ``max |f|`` and ``max |g|``.
    """

    domain: Domain
    f_values: np.ndarray
    g_values: np.ndarray
    reward_noise: object = field(default_factory=lambda: NoiseSpec("none", 0.0))
    cost_noise: object = field(default_factory=lambda: NoiseSpec("none", 0.0))
    f_kernel: KernelSpec = field(default_factory=KernelSpec)
    g_kernel: KernelSpec = None
    B: float = None
    G: float = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.domain, Domain):
            self.domain = Domain(self.domain)
        self.f_values = check_vector(self.f_values, "f_values").copy()
        self.g_values = check_vector(self.g_values, "g_values").copy()
        n = self.domain.n_points
        if self.f_values.shape[0] != n or self.g_values.shape[0] != n:
            raise InvalidInputError("f_values and g_values must have one entry per domain point")
        if self.g_kernel is None:
            self.g_kernel = self.f_kernel
        if self.B is None:
            self.B = max(float(np.max(np.abs(self.f_values))), 1e-12)
        if self.G is None:
            self.G = max(float(np.max(np.abs(self.g_values))), 1e-12)
        self.f_values.setflags(write=False)
        self.g_values.setflags(write=False)
        self.metadata.setdefault(
            "sub_gaussian",
            bool(self.reward_noise.sub_gaussian and self.cost_noise.sub_gaussian),
        )

    @property
    def n_arms(self):
        return self.domain.n_points

    @property
    def R(self):
        return self.reward_noise.R

    @property
    def R_cost(self):
        return self.cost_noise.R

    def sample_feedback(self, action, rng=None):
        """Noisy ``(reward, cost)`` at domain index ``action``."""
        if not 0 <= int(action) < self.n_arms or int(action) != action:
            raise InvalidInputError(f"action {action} outside [0, {self.n_arms})")
        rng = check_generator(rng)
        a = int(action)
        r = self.f_values[a] + self.reward_noise.sample(rng, a)
        c = self.g_values[a] + self.cost_noise.sample(rng, a)
        return float(r), float(c)

    def slater_margin(self):
        """``delta = -min_x g(x)``, capped at one."""
        gmin = float(np.min(self.g_values))
        if not gmin < 0.0:
            raise InfeasibleError(f"no strictly feasible point: min g = {gmin:.6g}")
        return min(1.0, -gmin)

    def oracle_optimum(self, epsilon_shift=0.0):
        """Exact optimum of ``max_pi E_pi[f]`` subject to ``E_pi[g] + eps <= 0``.

        A linear program over the simplex with a single inequality has an
        optimal vertex supported on at most two points, so single points and
        binding two-point mixtures are enumerated.
        """
        eps = check_non_negative(epsilon_shift, "epsilon_shift")
        f = self.f_values
        h = self.g_values + eps
        feasible = h <= 0.0
        if not feasible.any():
            raise InfeasibleError(f"shifted constraint infeasible: min g + eps = {h.min():.6g}")
        best_i = int(np.flatnonzero(feasible)[np.argmax(f[feasible])])
        best = OracleSolution(float(f[best_i]), (best_i,), (1.0,))
        neg = np.flatnonzero(feasible)
        pos = np.flatnonzero(~feasible)
        if pos.size:
            hi = h[neg][:, None]
            hj = h[pos][None, :]
            w = hj / (hj - hi)  # weight on the feasible point; makes the mixture binding
            values = w * f[neg][:, None] + (1.0 - w) * f[pos][None, :]
            k = int(np.argmax(values))
            a, b = np.unravel_index(k, values.shape)
            if values[a, b] > best.value:
                wi = float(w[a, b])
                best = OracleSolution(
                    float(values[a, b]), (int(neg[a]), int(pos[b])), (wi, 1.0 - wi)
                )
        return best

    def default_slack(self, horizon):
        """``min(delta / 2, 2 G / sqrt(T))``."""
        return min(self.slater_margin() / 2.0, 2.0 * self.G / np.sqrt(max(horizon, 1)))


def rkhs_function(spec, domain, coefficients, support):
    """Evaluate ``sum_i a_i k(., x_i)`` over the domain points."""
    D = domain.points if isinstance(domain, Domain) else np.asarray(domain, dtype=float)
    S = np.asarray(support, dtype=float)
    if S.ndim == 1:
        S = S.reshape(-1, 1)
    return spec(D, S) @ np.asarray(coefficients, dtype=float)


def generate_synthetic(
    spec_f=None,
    spec_g=None,
    n_domain=100,
    p=100,
    seed=None,
    reward_noise=None,
    cost_noise=None,
):
    """Random RKHS reward and cost functions on a uniform grid over [0, 1].

    Each function is ``sum_i a_i k(., x_i)`` with ``a_i ~ U[-1, 1]`` and
    ``p`` support points drawn uniformly from the grid. Draws are repeated
    with fresh sub-seeds until ``min g <= -MIN_SLATER_MARGIN``.
    """
    if n_domain < 2:
        raise InvalidInputError("n_domain must be at least 2")
    if p < 1:
        raise InvalidInputError("p must be at least 1")
    spec_f = spec_f or KernelSpec("se", lengthscale=0.2)
    spec_g = spec_g or spec_f
    reward_noise = reward_noise or NoiseSpec("gaussian", 0.1)
    cost_noise = cost_noise or reward_noise
    domain = Domain.grid(n_domain)
    root = np.random.SeedSequence(seed)
    for attempt, child in enumerate(root.spawn(MAX_GENERATION_ATTEMPTS)):
        rng = np.random.default_rng(child)
        f = rkhs_function(
            spec_f, domain, rng.uniform(-1, 1, p), domain.points[rng.integers(0, n_domain, p)]
        )
        g = rkhs_function(
            spec_g, domain, rng.uniform(-1, 1, p), domain.points[rng.integers(0, n_domain, p)]
        )
        if g.min() <= -MIN_SLATER_MARGIN:
            return BanditEnv(
                domain,
                f,
                g,
                reward_noise=reward_noise,
                cost_noise=cost_noise,
                f_kernel=spec_f,
                g_kernel=spec_g,
                metadata={"kind": "synthetic", "seed": seed, "attempts": attempt + 1},
            )
    raise GenerationError(
        f"no Slater point after {MAX_GENERATION_ATTEMPTS} attempts (seed={seed})"
    )


def _read_columns(path, columns):
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetParseError(f"cannot open dataset {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetParseError(f"dataset {path} is empty", row=1) from None
        header = [h.strip() for h in header]
        if columns is None:
            picks = list(range(len(header)))
        else:
            missing = [c for c in columns if c not in header]
            if missing:
                raise DatasetParseError(f"columns not in header: {missing}", row=1)
            picks = [header.index(c) for c in columns]
        if len(picks) < 2:
            raise DatasetParseError("dataset needs at least 2 arm columns", row=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetParseError(
                    f"expected {len(header)} cells, got {len(row)}", row=lineno
                )
            values = []
            for j in picks:
                try:
                    values.append(float(row[j]))
                except ValueError:
                    raise DatasetParseError(
                        f"non-numeric cell {row[j]!r}", row=lineno, column=header[j]
                    ) from None
            rows.append(values)
    if not rows:
        raise DatasetParseError(f"dataset {path} has no samples", row=2)
    return [header[j] for j in picks], np.array(rows)


def empirical_kernel(samples):
    """Unit-diagonal PSD kernel from the covariance of column-normalized samples."""
    X = np.asarray(samples, dtype=float)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Z = (X - X.mean(axis=0)) / std
    K = (Z.T @ Z) / max(X.shape[0], 1)
    K = 0.5 * (K + K.T)
    w, Q = np.linalg.eigh(K)
    K = (Q * np.maximum(w, 0.0)) @ Q.T
    d = np.diag(K).copy()
    dead = d <= 1e-12
    d[dead] = 1.0
    K = K / np.sqrt(np.outer(d, d))
    K[dead, :] = 0.0
    K[:, dead] = 0.0
    np.fill_diagonal(K, 1.0)
    return K


def load_dataset(path, columns=None, threshold="half-B"):
    """Build an environment from a CSV with one column per arm.

    ``f`` is the per-column mean, ``g = -f + h`` with ``h = B / 2`` for
    ``threshold="half-B"`` or the given constant otherwise, and noise
    resamples per-column residuals.
    """
    names, X = _read_columns(path, columns)
    f = X.mean(axis=0)
    B = float(np.max(np.abs(f)))
    if isinstance(threshold, str):
        key = threshold.strip().lower()
        if key in ("half-b", "half_b", "b/2"):
            h = B / 2.0
        else:
            try:
                h = float(key)
            except ValueError:
                raise InvalidInputError(f"unknown threshold rule {threshold!r}") from None
    else:
        h = float(threshold)
    g = -f + h
    residuals = X - f
    res = tuple(tuple(col) if np.any(col) else () for col in residuals.T)
    K = empirical_kernel(X)
    spec = KernelSpec.from_matrix(K)
    return BanditEnv(
        Domain.indices(len(names)),
        f,
        g,
        reward_noise=BootstrapNoise(res, 1.0),
        cost_noise=BootstrapNoise(res, -1.0),
        f_kernel=spec,
        g_kernel=spec,
        B=max(B, 1e-12),
        metadata={"kind": "dataset", "path": str(path), "columns": names, "h": h},
    )
