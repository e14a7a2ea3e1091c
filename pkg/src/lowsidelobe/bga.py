"""Breeder genetic algorithm over Bezier NLFM control points.

Each individual is a :class:`~lowsidelobe.waveform.BezierGenome`. Its
fitness is the ISL (dB) of the NLFM pulse it defines when compressed with
its own minimum-ISL mismatched filter; lower is better.
"""

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .exceptions import SingularSystemError
from .filter_design import build_convolution_matrix, isl, solve_min_isl
from .waveform import N_CONTROL, BezierGenome, build_nlfm_frequency, synthesize_nlfm

IMPROVEMENT_DB = 0.01


@dataclass
class WaveformParams:
    bandwidth: float = 5e6
    pulse_width: float = 20e-6
    sample_rate: float = 12e6
    filter_length: int = None
    mainlobe_width: int = 3

    @property
    def n_samples(self):
        return int(round(self.pulse_width * self.sample_rate))

    @property
    def resolved_filter_length(self):
        return 2 * self.n_samples if self.filter_length is None else int(self.filter_length)


@dataclass
class GaConfig:
    population_size: int = 200
    truncation_fraction: float = 0.40
    mutation_rate: float = 0.001
    crossover: str = "single_point"
    max_generations: int = 100
    stall_generations: int = 20
    elitism: bool = True
    seed: int = 0
    waveform_params: WaveformParams = field(default_factory=WaveformParams)

    def __post_init__(self):
        if isinstance(self.waveform_params, dict):
            self.waveform_params = WaveformParams(**self.waveform_params)
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError(f"population_size must be even and >= 4, got {self.population_size}")
        if not 0 < self.truncation_fraction <= 1:
            raise ValueError(f"truncation_fraction must lie in (0, 1], got {self.truncation_fraction}")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError(f"mutation_rate must lie in [0, 1], got {self.mutation_rate}")
        if self.crossover != "single_point":
            raise ValueError(f"unsupported crossover {self.crossover!r}")
        if self.max_generations < 1 or self.stall_generations < 1:
            raise ValueError("max_generations and stall_generations must be >= 1")
        if self.waveform_params.n_samples % 2:
            raise ValueError("pulse_width * sample_rate must give an even sample count")

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass
class Individual:
    genome: BezierGenome
    fitness: float = math.nan
    evaluated: bool = False


@dataclass
class GaHistory:
    best_fitness: list = field(default_factory=list)
    avg_fitness: list = field(default_factory=list)
    avg_distance: list = field(default_factory=list)
    best_so_far: list = field(default_factory=list)
    best_individual: Individual = None
    stop_reason: str = ""

    def __len__(self):
        return len(self.best_fitness)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("generation,best_db,avg_db,avg_distance\n")
        for g, (b, a, d) in enumerate(zip(self.best_fitness, self.avg_fitness, self.avg_distance)):
            buf.write(f"{g},{b!r},{a!r},{d!r}\n")
        return buf.getvalue()


def _genes(g):
    return np.asarray(getattr(g, "control_weights", g), dtype=float)


def init_population(config, rng=None):
    """``population_size`` genomes with genes uniform on ``[0, bandwidth/2]``."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    bw = config.waveform_params.bandwidth
    genes = rng.uniform(0.0, bw / 2, size=(config.population_size, N_CONTROL))
    return [Individual(BezierGenome(g, bw)) for g in genes]


def nlfm_waveform(genome, params):
    freq = build_nlfm_frequency(genome, params.n_samples)
    return synthesize_nlfm(freq, params.sample_rate)


def genome_fitness(genome, params):
    """ISL in dB of the genome's NLFM pulse under its min-ISL filter (+inf if singular)."""
    wf = nlfm_waveform(genome, params)
    S = build_convolution_matrix(wf, params.resolved_filter_length, params.mainlobe_width)
    try:
        W = solve_min_isl(S)
    except SingularSystemError:
        return math.inf
    return float(isl(W, S))


def evaluate_fitness(ind, config):
    """Evaluate and cache the fitness of ``ind``."""
    if not ind.evaluated:
        ind.fitness = genome_fitness(ind.genome, config.waveform_params)
        ind.evaluated = True
    return ind.fitness


def select_truncation(population, fraction):
    """The ``ceil(fraction * size)`` fittest individuals; ties go to the smaller genome."""
    if not population:
        raise ValueError("cannot select from an empty population")
    if any(not ind.evaluated for ind in population):
        raise ValueError("all individuals must be evaluated before selection")
    n = math.ceil(fraction * len(population))
    ranked = sorted(population, key=lambda ind: (ind.fitness, tuple(_genes(ind.genome))))
    return ranked[:n]


def crossover_single_point(p1, p2, rng):
    """Swap gene tails after a cut drawn uniformly from ``1..9``."""
    a, b = _genes(p1), _genes(p2)
    if a.size != b.size:
        raise ValueError("parents differ in genome length")
    cut = int(rng.integers(1, a.size))
    return np.concatenate((a[:cut], b[cut:])), np.concatenate((b[:cut], a[cut:]))


def mutate(genes, rate, rng, bandwidth):
    """Redraw each gene from ``U[0, bandwidth/2]`` with probability ``rate``."""
    if not 0 <= rate <= 1:
        raise ValueError(f"mutation rate must lie in [0, 1], got {rate}")
    g = _genes(genes).copy()
    hit = rng.random(g.size) < rate
    fresh = rng.uniform(0.0, bandwidth / 2, size=g.size)
    g[hit] = fresh[hit]
    return g


def mean_pairwise_distance(population):
    genes = np.array([_genes(ind.genome) for ind in population])
    return float(pdist(genes).mean()) if len(genes) > 1 else 0.0


def _evaluate_all(population, config, cache, n_jobs):
    todo = [ind for ind in population if not ind.evaluated]
    keys = [_genes(ind.genome).tobytes() for ind in todo]
    missing = list(dict.fromkeys(k for k in keys if k not in cache))
    genomes = {k: ind.genome for k, ind in zip(keys, todo)}
    params = config.waveform_params
    if n_jobs and n_jobs > 1 and len(missing) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            values = list(pool.map(lambda k: genome_fitness(genomes[k], params), missing))
    else:
        values = [genome_fitness(genomes[k], params) for k in missing]
    cache.update(zip(missing, values))
    for k, ind in zip(keys, todo):
        ind.fitness, ind.evaluated = cache[k], True


def evolve(config, initial_population=None, n_jobs=None, on_generation=None):
    """Run the breeder GA and return its per-generation history.

    Each generation is evaluated and recorded, then the fittest
    ``truncation_fraction`` become the mating pool. ``population_size / 2``
    random pairs of distinct pool members each yield two children by
    single-point crossover followed by mutation. With ``elitism`` the best
    individual replaces the first child unchanged. The run stops after
    ``max_generations`` or once ``stall_generations`` pass without the best
    fitness improving by more than 0.01 dB.

    Parameters
    ----------
    config : GaConfig
    initial_population : list of Individual, optional
        Replaces the random ``P(0)``; must have ``population_size`` members.
    n_jobs : int, optional
        Threads used for fitness evaluation; results do not depend on it.
    on_generation : callable, optional
        Called as ``on_generation(generation, population)`` after evaluation.
    """
    rng = np.random.default_rng(config.seed)
    bw = config.waveform_params.bandwidth
    if initial_population is None:
        population = init_population(config, rng)
    else:
        population = [Individual(ind.genome, ind.fitness, ind.evaluated) for ind in initial_population]
        if len(population) != config.population_size:
            raise ValueError("initial population size does not match config")
    history = GaHistory()
    cache = {}
    stall = 0
    for generation in range(config.max_generations):
        _evaluate_all(population, config, cache, n_jobs)
        if on_generation is not None:
            on_generation(generation, population)
        fitness = np.array([ind.fitness for ind in population])
        best = min(population, key=lambda ind: (ind.fitness, tuple(_genes(ind.genome))))
        finite = fitness[np.isfinite(fitness)]
        history.best_fitness.append(float(best.fitness))
        history.avg_fitness.append(float(finite.mean()) if finite.size else math.inf)
        history.avg_distance.append(mean_pairwise_distance(population))

        if history.best_individual is None or best.fitness < history.best_individual.fitness - IMPROVEMENT_DB:
            stall = 0
        else:
            stall += 1
        if history.best_individual is None or best.fitness < history.best_individual.fitness:
            history.best_individual = Individual(best.genome, best.fitness, True)
        history.best_so_far.append(float(history.best_individual.fitness))

        if stall >= config.stall_generations:
            history.stop_reason = "stall"
            break
        if generation == config.max_generations - 1:
            history.stop_reason = "max_generations"
            break

        pool = select_truncation(population, config.truncation_fraction)
        if len(pool) < 2:
            pool = select_truncation(population, 2 / len(population))
        children = []
        for _ in range(config.population_size // 2):
            i, j = rng.choice(len(pool), size=2, replace=False)
            for genes in crossover_single_point(pool[i].genome, pool[j].genome, rng):
                children.append(Individual(BezierGenome(mutate(genes, config.mutation_rate, rng, bw), bw)))
        if config.elitism:
            children[0] = Individual(best.genome, best.fitness, True)
        population = children
    return history
