"""Gradient-free optimizers over flat parameter vectors.

Six algorithms (simulated annealing, particle swarm, ant colony, tabu
search, harmony search, genetic algorithm) plus a random-search baseline,
all behind one interface: an optimizer owns its internal state and rng,
and ``step(objective)`` proposes and evaluates one batch of candidates.

Conventions shared by every optimizer:

- Fitness is maximized.
- Candidates are drawn lazily: the first ``step`` call performs the
  initial evaluations, so the evaluation budget accounts for them.
- ``objective.evaluate`` raises :class:`BudgetExhausted` when the budget
  is spent; a partially finished step is fine because every completed
  evaluation has already been recorded by the objective.
- Each optimizer keeps its own ``best_genome`` / ``best_fitness`` (monotone).
- ``done`` turns True only for self-terminating algorithms (simulated
  annealing with a stop temperature).
- Fresh candidates come from ``init_sampler`` (default: standard normal
  scaled by 0.01, mirroring genome initialization), so random search is
  budget-comparable with the genome-space algorithms.

Per-environment default hyperparameters (population sizes, rates,
temperatures) live in :data:`DEFAULT_HYPERPARAMS`; perturbation scales the
source material leaves open (sigma_step, sigma_mut, v_max, bandwidth
excepted) have small defaults relative to rotation-angle scale and are
overridable everywhere.
"""

from __future__ import annotations

import math
import time

import numpy as np


class BudgetExhausted(Exception):
    """Raised by Objective.evaluate once the evaluation budget is spent."""


class Objective:
    """Budget-audited wrapper around a fitness function (maximized).

    Tracks ``eval_counter`` (exactly +1 per successful evaluate call) and
    the best genome/fitness seen. ``on_record(eval_index, fitness,
    best_so_far)`` fires after every evaluation; ``deadline`` (a
    ``time.perf_counter`` value) turns wall-clock overrun into
    :class:`BudgetExhausted` as well.
    """

    def __init__(self, fn, dim: int, budget: int | None = None, on_record=None,
                 deadline: float | None = None):
        self.fn = fn
        self.dim = dim
        self.budget = budget
        self.on_record = on_record
        self.deadline = deadline
        self.eval_counter = 0
        self.best_genome: np.ndarray | None = None
        self.best_fitness = -math.inf

    def exhausted(self) -> bool:
        return self.budget is not None and self.eval_counter >= self.budget

    def evaluate(self, x: np.ndarray) -> float:
        if self.exhausted():
            raise BudgetExhausted(f"budget of {self.budget} evaluations spent")
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise BudgetExhausted("wall-clock limit reached")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"candidate has shape {x.shape}, expected ({self.dim},)")
        fitness = float(self.fn(x))
        self.eval_counter += 1
        if fitness > self.best_fitness:
            self.best_fitness = fitness
            self.best_genome = x.copy()
        if self.on_record is not None:
            self.on_record(self.eval_counter, fitness, self.best_fitness)
        return fitness


def _default_sampler(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.standard_normal(dim) * 0.01


class Optimizer:
    """Shared bookkeeping: rng, best tracking, candidate sampling."""

    def __init__(self, dim: int, rng: np.random.Generator, init_sampler=None):
        self.dim = dim
        self.rng = rng
        self.init_sampler = init_sampler or _default_sampler
        self.best_genome: np.ndarray | None = None
        self.best_fitness = -math.inf
        self.done = False

    def _sample(self) -> np.ndarray:
        return self.init_sampler(self.rng, self.dim)

    def _track(self, x: np.ndarray, fitness: float) -> None:
        if fitness > self.best_fitness:
            self.best_fitness = fitness
            self.best_genome = np.array(x, dtype=float)

    def step(self, objective: Objective) -> None:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# simulated annealing
# ---------------------------------------------------------------------------


def sa_acceptance_probability(f_new: float, f_current: float, temperature: float) -> float:
    """1 for non-worsening moves, else the Metropolis factor exp(df/T)."""
    if f_new >= f_current:
        return 1.0
    return math.exp((f_new - f_current) / temperature)


class SimulatedAnnealing(Optimizer):
    """Single-trajectory annealer with geometric cooling.

    Proposes ``current + Normal(0, sigma_step)`` per coordinate, accepts
    worsening moves with the Metropolis probability, cools by
    ``T <- T * (1 - cooling_rate)`` each proposal, and stops proposing
    once T falls below ``stop_t`` (when one is set).
    """

    def __init__(self, dim, rng, t0=3000.0, cooling_rate=0.001, stop_t=None,
                 sigma_step=0.05, init_sampler=None):
        super().__init__(dim, rng, init_sampler)
        if t0 <= 0 or not 0 < cooling_rate < 1:
            raise ValueError("need t0 > 0 and cooling_rate in (0, 1)")
        self.temperature = t0
        self.cooling_rate = cooling_rate
        self.stop_t = stop_t
        self.sigma_step = sigma_step
        self._current: np.ndarray | None = None
        self._f_current = -math.inf

    def step(self, objective: Objective) -> None:
        if self._current is None:
            candidate = self._sample()
            fitness = objective.evaluate(candidate)
            self._current, self._f_current = candidate, fitness
            self._track(candidate, fitness)
            return
        if self.stop_t is not None and self.temperature < self.stop_t:
            self.done = True
            return
        neighbor = self._current + self.rng.normal(0.0, self.sigma_step, self.dim)
        f_new = objective.evaluate(neighbor)
        self._track(neighbor, f_new)
        prob = sa_acceptance_probability(f_new, self._f_current, self.temperature)
        if prob >= 1.0 or self.rng.random() < prob:
            self._current, self._f_current = neighbor, f_new
        self.temperature *= 1.0 - self.cooling_rate


# ---------------------------------------------------------------------------
# particle swarm optimization
# ---------------------------------------------------------------------------


def pso_velocity(v, x, pbest, gbest, w, c1, c2, r1, r2):
    """Canonical velocity update; r1, r2 are per-dimension uniforms."""
    return w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)


class ParticleSwarm(Optimizer):
    """Global-best PSO with per-dimension random coefficients.

    Velocities start at zero and are clamped to [-v_max, v_max]
    component-wise. Personal and global bests update immediately after
    each particle's evaluation.
    """

    def __init__(self, dim, rng, n_particles=20, w=0.4, c1=1.0, c2=1.5,
                 v_max=0.5, init_sampler=None):
        super().__init__(dim, rng, init_sampler)
        self.n_particles = int(n_particles)
        self.w, self.c1, self.c2, self.v_max = w, c1, c2, v_max
        self._x: np.ndarray | None = None

    def step(self, objective: Objective) -> None:
        if self._x is None:
            self._x = np.array([self._sample() for _ in range(self.n_particles)])
            self._v = np.zeros_like(self._x)
            self._pbest = self._x.copy()
            self._pbest_f = np.full(self.n_particles, -math.inf)
            self._gbest = self._x[0].copy()
            self._gbest_f = -math.inf
            for i in range(self.n_particles):
                f = objective.evaluate(self._x[i])
                self._pbest_f[i] = f
                self._absorb(i, f)
            return
        for i in range(self.n_particles):
            r1 = self.rng.random(self.dim)
            r2 = self.rng.random(self.dim)
            v = pso_velocity(self._v[i], self._x[i], self._pbest[i], self._gbest,
                             self.w, self.c1, self.c2, r1, r2)
            np.clip(v, -self.v_max, self.v_max, out=v)
            self._v[i] = v
            self._x[i] = self._x[i] + v
            f = objective.evaluate(self._x[i])
            if f > self._pbest_f[i]:
                self._pbest_f[i] = f
                self._pbest[i] = self._x[i].copy()
            self._absorb(i, f)

    def _absorb(self, i: int, f: float) -> None:
        if f > self._gbest_f:
            self._gbest_f = f
            self._gbest = self._x[i].copy()
        self._track(self._x[i], f)


# ---------------------------------------------------------------------------
# ant colony optimization (continuous adaptation)
# ---------------------------------------------------------------------------


def aco_selection_probabilities(tau: np.ndarray, fitness: np.ndarray,
                                alpha: float, beta: float) -> np.ndarray:
    """Agent-selection probabilities from pheromone columns and fitness.

    eta rescales fitness to [0, 1]; the 1e-12 terms keep degenerate
    all-equal-fitness populations selectable (uniformly, for a uniform
    pheromone matrix).
    """
    fitness = np.asarray(fitness, dtype=float)
    eta = (fitness - fitness.min()) / (fitness.max() - fitness.min() + 1e-12)
    weights = tau.sum(axis=0) ** alpha * (eta + 1e-12) ** beta
    return weights / weights.sum()


class AntColony(Optimizer):
    """Replicate-and-mutate colony with an n_ants x n_ants pheromone matrix.

    Each generation samples source agents proportionally to pheromone
    column mass and rescaled fitness, clones them with Gaussian mutation,
    then evaporates the matrix and deposits onto the sampled columns. The
    matrix is indexed by population slot, so it carries a decaying memory
    of which slots seeded good offspring.
    """

    def __init__(self, dim, rng, n_ants=10, evaporation=0.9, alpha=0.5,
                 beta=0.3, sigma_mut=0.1, init_sampler=None):
        super().__init__(dim, rng, init_sampler)
        self.n_ants = int(n_ants)
        self.evaporation = evaporation
        self.alpha, self.beta = alpha, beta
        self.sigma_mut = sigma_mut
        self._agents: np.ndarray | None = None

    def step(self, objective: Objective) -> None:
        if self._agents is None:
            self._agents = np.array([self._sample() for _ in range(self.n_ants)])
            self._fitness = np.full(self.n_ants, -math.inf)
            self._tau = np.ones((self.n_ants, self.n_ants))
            for i in range(self.n_ants):
                f = objective.evaluate(self._agents[i])
                self._fitness[i] = f
                self._track(self._agents[i], f)
            return
        probs = aco_selection_probabilities(self._tau, self._fitness,
                                            self.alpha, self.beta)
        sources = self.rng.choice(self.n_ants, size=self.n_ants, p=probs)
        mutations = self.rng.normal(0.0, self.sigma_mut, (self.n_ants, self.dim))
        eta = (self._fitness - self._fitness.min()) / (
            self._fitness.max() - self._fitness.min() + 1e-12
        )
        self._tau *= 1.0 - self.evaporation
        for j in sources:
            self._tau[:, j] += eta[j]
        new_agents = self._agents[sources] + mutations
        new_fitness = np.full(self.n_ants, -math.inf)
        self._agents = new_agents
        for i in range(self.n_ants):
            f = objective.evaluate(new_agents[i])
            new_fitness[i] = f
            self._track(new_agents[i], f)
        self._fitness = new_fitness


# ---------------------------------------------------------------------------
# tabu search
# ---------------------------------------------------------------------------


def tabu_fingerprint(x: np.ndarray) -> bytes:
    """Hashable key: coordinates rounded to 3 decimals (-0.0 normalized)."""
    return (np.round(x, 3) + 0.0).tobytes()


class TabuSearch(Optimizer):
    """Best-admissible-neighbor search with a bounded tabu memory.

    Per step: evaluate a Gaussian neighborhood of the current point; a
    neighbor is admissible unless its fingerprint is tabu, with aspiration
    overriding the list when it beats the best fitness seen before the
    step. Fingerprints of neighbors worse than the pre-move current point
    enter the list; the oldest entries fall off beyond tabu_size.
    """

    def __init__(self, dim, rng, tabu_size=7, neighborhood_size=20,
                 sigma_step=0.05, init_sampler=None):
        super().__init__(dim, rng, init_sampler)
        self.tabu_size = int(tabu_size)
        self.neighborhood_size = int(neighborhood_size)
        self.sigma_step = sigma_step
        self._tabu: dict = {}  # insertion-ordered fingerprint set
        self._current: np.ndarray | None = None
        self._f_current = -math.inf

    def step(self, objective: Objective) -> None:
        if self._current is None:
            candidate = self._sample()
            fitness = objective.evaluate(candidate)
            self._current, self._f_current = candidate, fitness
            self._track(candidate, fitness)
            return
        best_before = self.best_fitness
        offsets = self.rng.normal(0.0, self.sigma_step,
                                  (self.neighborhood_size, self.dim))
        neighbors = self._current + offsets
        fits = np.empty(self.neighborhood_size)
        for i in range(self.neighborhood_size):
            fits[i] = objective.evaluate(neighbors[i])
            self._track(neighbors[i], fits[i])

        chosen, chosen_f = None, -math.inf
        for i in range(self.neighborhood_size):
            fp = tabu_fingerprint(neighbors[i])
            admissible = fp not in self._tabu or fits[i] > best_before
            if admissible and fits[i] > chosen_f:
                chosen, chosen_f = neighbors[i], fits[i]

        prev_f = self._f_current
        for i in range(self.neighborhood_size):
            if fits[i] < prev_f:
                fp = tabu_fingerprint(neighbors[i])
                self._tabu.pop(fp, None)  # refresh position if present
                self._tabu[fp] = None
        while len(self._tabu) > self.tabu_size:
            self._tabu.pop(next(iter(self._tabu)))

        if chosen is not None:
            self._current, self._f_current = chosen, chosen_f


# ---------------------------------------------------------------------------
# harmony search
# ---------------------------------------------------------------------------


class HarmonySearch(Optimizer):
    """Memory-recombination search over a fixed-size harmony archive.

    Each dimension of a new harmony either copies a uniformly chosen
    memory member (prob hmcr), optionally pitch-adjusted by
    Uniform(-1, 1) * bandwidth (prob par), or is drawn fresh from the
    initialization distribution. The new harmony replaces the worst
    archive member only if it is better.
    """

    def __init__(self, dim, rng, hms=30, hmcr=0.9, par=0.3, bandwidth=0.1,
                 init_sampler=None):
        super().__init__(dim, rng, init_sampler)
        if not (0 <= hmcr <= 1 and 0 <= par <= 1):
            raise ValueError("hmcr and par must lie in [0, 1]")
        self.hms = int(hms)
        self.hmcr, self.par, self.bandwidth = hmcr, par, bandwidth
        self._memory: np.ndarray | None = None

    def step(self, objective: Objective) -> None:
        if self._memory is None:
            self._memory = np.array([self._sample() for _ in range(self.hms)])
            self._fitness = np.full(self.hms, -math.inf)
            for i in range(self.hms):
                f = objective.evaluate(self._memory[i])
                self._fitness[i] = f
                self._track(self._memory[i], f)
            return
        # fixed draw counts per step keep the rng stream deterministic
        member = self.rng.integers(0, self.hms, self.dim)
        use_memory = self.rng.random(self.dim) < self.hmcr
        adjust = self.rng.random(self.dim) < self.par
        offsets = self.rng.uniform(-1.0, 1.0, self.dim) * self.bandwidth
        fresh = self._sample()
        base = self._memory[member, np.arange(self.dim)]
        candidate = np.where(use_memory,
                             base + np.where(adjust, offsets, 0.0),
                             fresh)
        fitness = objective.evaluate(candidate)
        self._track(candidate, fitness)
        worst = int(np.argmin(self._fitness))
        if fitness > self._fitness[worst]:
            self._memory[worst] = candidate
            self._fitness[worst] = fitness


# ---------------------------------------------------------------------------
# genetic algorithm
# ---------------------------------------------------------------------------


class GeneticAlgorithm(Optimizer):
    """Elitist mutation-only GA: keep top_k, refill with mutated elites."""

    def __init__(self, dim, rng, population=500, top_k=10, sigma_mut=0.02,
                 init_sampler=None):
        super().__init__(dim, rng, init_sampler)
        if top_k >= population:
            raise ValueError("top_k must be smaller than population")
        self.population = int(population)
        self.top_k = int(top_k)
        self.sigma_mut = sigma_mut
        self._pop: np.ndarray | None = None

    def step(self, objective: Objective) -> None:
        if self._pop is None:
            self._pop = np.array([self._sample() for _ in range(self.population)])
            self._fitness = np.full(self.population, -math.inf)
            for i in range(self.population):
                f = objective.evaluate(self._pop[i])
                self._fitness[i] = f
                self._track(self._pop[i], f)
            return
        order = np.argsort(-self._fitness, kind="stable")
        elites = self._pop[order[: self.top_k]].copy()
        elite_f = self._fitness[order[: self.top_k]].copy()
        n_children = self.population - self.top_k
        parents = self.rng.integers(0, self.top_k, n_children)
        mutations = self.rng.normal(0.0, self.sigma_mut, (n_children, self.dim))
        children = elites[parents] + mutations
        child_f = np.full(n_children, -math.inf)
        self._pop = np.vstack([elites, children])
        self._fitness = np.concatenate([elite_f, child_f])
        for i in range(n_children):
            f = objective.evaluate(children[i])
            self._fitness[self.top_k + i] = f
            self._track(children[i], f)


# ---------------------------------------------------------------------------
# random search baseline
# ---------------------------------------------------------------------------


class RandomSearch(Optimizer):
    """Evaluates fresh initialization samples forever; tracks the best."""

    def step(self, objective: Objective) -> None:
        candidate = self._sample()
        fitness = objective.evaluate(candidate)
        self._track(candidate, fitness)


# ---------------------------------------------------------------------------
# registry and per-environment defaults
# ---------------------------------------------------------------------------

OPTIMIZERS = {
    "sa": SimulatedAnnealing,
    "pso": ParticleSwarm,
    "aco": AntColony,
    "ts": TabuSearch,
    "hs": HarmonySearch,
    "ga": GeneticAlgorithm,
    "random_search": RandomSearch,
}

# Tuned per-environment configurations for the two benchmark tasks; scale
# knobs (sigma_step, sigma_mut, v_max) use this library's defaults.
DEFAULT_HYPERPARAMS = {
    "sa": {
        "minigrid5x5": {"t0": 3000.0, "cooling_rate": 0.001, "stop_t": None,
                        "sigma_step": 0.05},
        "cartpole": {"t0": 500000.0, "cooling_rate": 0.001, "stop_t": 0.001,
                     "sigma_step": 0.05},
    },
    "pso": {
        "minigrid5x5": {"n_particles": 20, "w": 0.4, "c1": 1.0, "c2": 1.5,
                        "v_max": 0.5},
        "cartpole": {"n_particles": 20, "w": 0.9, "c1": 1.0, "c2": 2.0,
                     "v_max": 0.5},
    },
    "aco": {
        "minigrid5x5": {"n_ants": 10, "evaporation": 0.9, "alpha": 0.5,
                        "beta": 0.3, "sigma_mut": 0.1},
        "cartpole": {"n_ants": 30, "evaporation": 0.95, "alpha": 1.0,
                     "beta": 1.5, "sigma_mut": 0.1},
    },
    "ts": {
        "minigrid5x5": {"tabu_size": 7, "neighborhood_size": 20,
                        "sigma_step": 0.05},
        "cartpole": {"tabu_size": 10, "neighborhood_size": 40,
                     "sigma_step": 0.05},
    },
    "hs": {
        "minigrid5x5": {"hms": 30, "hmcr": 0.9, "par": 0.3, "bandwidth": 0.1},
        "cartpole": {"hms": 100, "hmcr": 0.8, "par": 0.5, "bandwidth": 0.3},
    },
    "ga": {
        "minigrid5x5": {"population": 500, "top_k": 10, "sigma_mut": 0.02},
        "cartpole": {"population": 500, "top_k": 10, "sigma_mut": 0.02},
    },
    "random_search": {"minigrid5x5": {}, "cartpole": {}},
}


def default_hyperparams(algo: str, env: str) -> dict:
    try:
        return dict(DEFAULT_HYPERPARAMS[algo][env])
    except KeyError:
        raise ValueError(f"no default hyperparameters for algo={algo!r}, env={env!r}")


def make_optimizer(algo: str, dim: int, seed, env: str | None = None,
                   overrides: dict | None = None, init_sampler=None) -> Optimizer:
    """Construct a seeded optimizer, merging env defaults with overrides."""
    if algo not in OPTIMIZERS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {sorted(OPTIMIZERS)}")
    params = default_hyperparams(algo, env) if env is not None else {}
    params.update(overrides or {})
    rng = np.random.default_rng(seed)
    return OPTIMIZERS[algo](dim=dim, rng=rng, init_sampler=init_sampler, **params)
