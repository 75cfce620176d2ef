"""
Safety Regions

Gaussian mixture over demonstration states, fitted with EM, whose
components are partitioned among the options. The likelihood of an option
operating at a state is the largest unweighted density among the option's
components.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from ..core.errors import (
    DemonstrationError,
    DimensionMismatchError,
    DynoPlanError,
    UnknownOptionError,
    require_positive,
)
from ..data.models import CONTINUOUS, StateVector
from ..models.schemas import EmConfig

logger = logging.getLogger(__name__)

# Guards component mass against division by zero in the M-step
MASS_EPSILON = 10 * np.finfo(float).eps

States = Union[np.ndarray, Sequence[StateVector]]


def _as_matrix(states: States) -> np.ndarray:
    if isinstance(states, np.ndarray):
        return np.atleast_2d(np.asarray(states, dtype=float))
    states = list(states)
    if not states:
        raise DemonstrationError("No states given")
    if any(s.kind != CONTINUOUS for s in states):
        raise DynoPlanError("Gaussian mixtures need continuous states")
    dimension = states[0].dimension
    for s in states:
        if s.dimension != dimension:
            raise DimensionMismatchError(f"State of dimension {s.dimension} among dimension {dimension}")
    return np.array([s.values for s in states], dtype=float)


def gaussian_log_density(X: np.ndarray, mean: np.ndarray, covariance: np.ndarray) -> np.ndarray:
    """log N(x | mean, covariance) for every row of X, via a Cholesky factor."""
    d = X.shape[1]
    L = scipy.linalg.cholesky(covariance, lower=True)
    # (x - mu)^T Sigma^-1 (x - mu) = |L^-1 (x - mu)|^2
    solution = scipy.linalg.solve_triangular(L, (X - mean).T, lower=True)
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (d * np.log(2 * np.pi) + log_det + np.sum(solution ** 2, axis=0))


def floor_covariance(covariance: np.ndarray, floor: float) -> Tuple[np.ndarray, bool]:
    """Symmetrize and lift eigenvalues below floor. Returns (matrix, repaired)."""
    covariance = 0.5 * (covariance + covariance.T)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    if eigenvalues.min() >= floor:
        return covariance, False
    eigenvalues = np.maximum(eigenvalues, floor)
    repaired = (eigenvectors * eigenvalues) @ eigenvectors.T
    return 0.5 * (repaired + repaired.T), True


@dataclass(eq=False)
class GaussianMixture:
    weights: np.ndarray       # (M,)
    means: np.ndarray         # (M, d)
    covariances: np.ndarray   # (M, d, d)
    log_likelihood_history: List[float] = field(default_factory=list)  # mean per sample
    iterations: int = 0
    converged: bool = False
    repaired_components: List[int] = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def dimension(self) -> int:
        return self.means.shape[1]

    def component_log_densities(self, X: np.ndarray) -> np.ndarray:
        """(N, M) unweighted component log densities."""
        return np.column_stack([
            gaussian_log_density(X, self.means[i], self.covariances[i]) for i in range(self.n_components)
        ])

    def log_likelihood(self, X: np.ndarray) -> float:
        """Mean per-sample log-likelihood."""
        weighted = self.component_log_densities(X) + np.log(self.weights)
        return float(np.mean(logsumexp(weighted, axis=1)))


def _kmeans_plus_plus(X: np.ndarray, n_components: int, rng: np.random.Generator) -> np.ndarray:
    """Seed means with D^2-weighted sampling of data points."""
    centers = [X[rng.integers(len(X))]]
    for _ in range(1, n_components):
        squared = np.min(
            np.stack([np.sum((X - c) ** 2, axis=1) for c in centers]), axis=0
        )
        total = squared.sum()
        probabilities = squared / total if total > 0 else np.full(len(X), 1.0 / len(X))
        centers.append(X[rng.choice(len(X), p=probabilities)])
    return np.array(centers)


def _responsibilities(mixture: GaussianMixture, X: np.ndarray) -> Tuple[np.ndarray, float]:
    weighted = mixture.component_log_densities(X) + np.log(mixture.weights)
    log_norm = logsumexp(weighted, axis=1)
    return np.exp(weighted - log_norm[:, None]), float(np.mean(log_norm))


def fit_gmm(states: States, config: Optional[EmConfig] = None,
            n_components: Optional[int] = None) -> Tuple[GaussianMixture, np.ndarray]:
    """
    Fit a full-covariance Gaussian mixture with EM.

    Stops when the mean per-sample log-likelihood changes by less than the
    configured tolerance, or at the iteration cap. The returned
    responsibilities belong to the returned parameters.

    Returns:
        (mixture, responsibilities of shape (N, M))
    """
    config = config or EmConfig()
    X = _as_matrix(states)
    n_samples, d = X.shape
    M = n_components or config.n_components or 1
    if n_samples <= M:
        raise DemonstrationError(f"{n_samples} states cannot support {M} mixture components")

    rng = np.random.default_rng(config.seed)
    repaired = set()
    base, was_repaired = floor_covariance(np.atleast_2d(np.cov(X.T, bias=True)), config.reg_floor)
    mixture = GaussianMixture(
        weights=np.full(M, 1.0 / M),
        means=_kmeans_plus_plus(X, M, rng),
        covariances=np.repeat(base[None, :, :], M, axis=0),
    )

    previous = -np.inf
    responsibilities = None
    for iteration in range(config.max_iterations):
        responsibilities, mean_ll = _responsibilities(mixture, X)
        mixture.log_likelihood_history.append(mean_ll)
        if abs(mean_ll - previous) < config.tolerance:
            mixture.converged = True
            break
        previous = mean_ll

        # M-step
        mass = responsibilities.sum(axis=0) + MASS_EPSILON
        mixture.weights = mass / mass.sum()
        mixture.means = (responsibilities.T @ X) / mass[:, None]
        covariances = np.empty((M, d, d))
        for i in range(M):
            centered = X - mixture.means[i]
            raw = (responsibilities[:, i, None] * centered).T @ centered / mass[i]
            covariances[i], component_repaired = floor_covariance(raw, config.reg_floor)
            if component_repaired:
                repaired.add(i)
        mixture.covariances = covariances
        mixture.iterations = iteration + 1

    if not mixture.converged:
        responsibilities, mean_ll = _responsibilities(mixture, X)
        mixture.log_likelihood_history.append(mean_ll)
        logger.warning(f"EM stopped at the iteration cap ({config.max_iterations}) without converging")

    mixture.repaired_components = sorted(repaired)
    if repaired:
        logger.warning(f"Covariance floor repaired components {mixture.repaired_components}")
    logger.info(f"Fitted {M}-component mixture on {n_samples} states in {mixture.iterations} iterations "
                f"(mean log-likelihood {mixture.log_likelihood_history[-1]:.4f})")
    return mixture, responsibilities


@dataclass
class ComponentAssignment:
    mapping: Dict[int, List[int]]
    # new component index -> copied component index, for options that won no component
    duplicates: Dict[int, int] = field(default_factory=dict)


def assign_components(responsibilities: np.ndarray, labels: Sequence[int]) -> ComponentAssignment:
    """
    Give each component to the option whose states carry most of its responsibility mass.

    Ties go to the lowest option id. An option that wins nothing gets a copy of
    the component its own states weigh most.

    Raises:
        DemonstrationError: labels missing or not matching the responsibility rows
    """
    responsibilities = np.asarray(responsibilities, dtype=float)
    if labels is None or len(labels) != len(responsibilities):
        raise DemonstrationError("Every state needs an option label")
    if any(label is None for label in labels):
        raise DemonstrationError("Unlabeled state in component assignment")
    labels = np.asarray(labels, dtype=int)
    if (labels < 0).any():
        raise DemonstrationError("Unlabeled state in component assignment")

    option_ids = sorted(int(o) for o in np.unique(labels))
    mass = np.column_stack([responsibilities[labels == o].sum(axis=0) for o in option_ids])  # (M, K)
    owners = np.argmax(mass, axis=1)

    mapping: Dict[int, List[int]] = {o: [] for o in option_ids}
    for component, owner in enumerate(owners):
        mapping[option_ids[owner]].append(component)

    duplicates: Dict[int, int] = {}
    next_index = responsibilities.shape[1]
    for column, option_id in enumerate(option_ids):
        if mapping[option_id]:
            continue
        source = int(np.argmax(mass[:, column]))
        duplicates[next_index] = source
        mapping[option_id] = [next_index]
        logger.warning(f"Option {option_id} won no component; duplicating component {source}")
        next_index += 1
    return ComponentAssignment(mapping, duplicates)


@dataclass(eq=False)
class GaussianMixtureRegions:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    assignment: Dict[int, List[int]]
    duplicated: Dict[int, int] = field(default_factory=dict)
    repaired_components: List[int] = field(default_factory=list)
    log_likelihood_history: List[float] = field(default_factory=list)

    @classmethod
    def build(cls, mixture: GaussianMixture, assignment: ComponentAssignment) -> "GaussianMixtureRegions":
        """Materialize duplicated components, splitting weight evenly between original and copy."""
        weights = list(mixture.weights)
        means = list(mixture.means)
        covariances = list(mixture.covariances)
        for new_index in sorted(assignment.duplicates):
            source = assignment.duplicates[new_index]
            weights[source] /= 2.0
            weights.append(weights[source])
            means.append(means[source].copy())
            covariances.append(covariances[source].copy())
        return cls(
            weights=np.array(weights),
            means=np.array(means),
            covariances=np.array(covariances),
            assignment={o: list(c) for o, c in assignment.mapping.items()},
            duplicated=dict(assignment.duplicates),
            repaired_components=list(mixture.repaired_components),
            log_likelihood_history=list(mixture.log_likelihood_history),
        )

    @property
    def option_ids(self) -> List[int]:
        return sorted(self.assignment)

    @property
    def dimension(self) -> int:
        return self.means.shape[1]

    def _components(self, option_id: int) -> List[int]:
        if option_id not in self.assignment:
            raise UnknownOptionError(f"Option {option_id} has no region (known: {self.option_ids})")
        return self.assignment[option_id]

    def log_option_likelihood(self, X: np.ndarray, option_id: int) -> np.ndarray:
        """Log of the largest unweighted component density of option_id at each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dimension:
            raise DimensionMismatchError(f"Regions expect dimension {self.dimension}, got {X.shape[1]}")
        logs = [gaussian_log_density(X, self.means[i], self.covariances[i]) for i in self._components(option_id)]
        return np.max(np.stack(logs), axis=0)

    def classify(self, X: np.ndarray) -> np.ndarray:
        """Option with the highest likelihood at each row; ties go to the lowest id."""
        table = np.stack([self.log_option_likelihood(X, o) for o in self.option_ids], axis=1)
        return np.array(self.option_ids)[np.argmax(table, axis=1)]

    def to_dict(self) -> Dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "assignment": {str(o): c for o, c in sorted(self.assignment.items())},
            "duplicated": {str(k): v for k, v in sorted(self.duplicated.items())},
            "repaired_components": self.repaired_components,
            "log_likelihood_history": self.log_likelihood_history,
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "GaussianMixtureRegions":
        return cls(
            weights=np.array(payload["weights"], dtype=float),
            means=np.array(payload["means"], dtype=float),
            covariances=np.array(payload["covariances"], dtype=float),
            assignment={int(o): [int(i) for i in c] for o, c in payload["assignment"].items()},
            duplicated={int(k): int(v) for k, v in payload.get("duplicated", {}).items()},
            repaired_components=[int(i) for i in payload.get("repaired_components", [])],
            log_likelihood_history=[float(v) for v in payload.get("log_likelihood_history", [])],
        )


def fit_regions(states: States, labels: Sequence[int], config: Optional[EmConfig] = None) -> GaussianMixtureRegions:
    """fit_gmm + assign_components; M defaults to 3 components per option."""
    config = config or EmConfig()
    n_components = config.n_components or 3 * len(set(int(label) for label in labels))
    mixture, responsibilities = fit_gmm(states, config, n_components)
    return GaussianMixtureRegions.build(mixture, assign_components(responsibilities, labels))


def option_likelihood(state: StateVector, option_id: int, regions: GaussianMixtureRegions) -> float:
    return float(np.exp(regions.log_option_likelihood(state.as_array(), option_id)[0]))


def region_overlap(option_a: int, option_b: int, regions: GaussianMixtureRegions,
                   density_floor: float, probes: States) -> float:
    """Fraction of probes where both options' likelihoods exceed density_floor."""
    require_positive(density_floor, "density floor")
    X = _as_matrix(probes)
    if len(X) == 0:
        raise DemonstrationError("Region overlap needs at least one probe state")
    log_floor = np.log(density_floor)
    inside_a = regions.log_option_likelihood(X, option_a) > log_floor
    inside_b = regions.log_option_likelihood(X, option_b) > log_floor
    return float(np.mean(inside_a & inside_b))
