"""
Monte Carlo simulation of the neutral Wright-Fisher chain:

    X_{k+1} | X_k = i  ~  Binomial(N, i/N),

absorbing at 0 (allele lost) and N (allele fixed). Used as an independent
check on quantities that the chain and the drift equation share: the
fixation probability p and the one-step moments E = i, Var = i(1 - i/N).

Trials are simulated in chunks of Config.Oracle.CHUNK_SIZE; chunk k draws
from numpy's PCG64 seeded with SeedSequence(seed).spawn(n_chunks)[k], so
results do not depend on the number of worker threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from wfdrift.config import Config

logger = logging.getLogger(__name__)

# |mean - i0| must stay within this many standard errors
MARTINGALE_SIGMAS = 4.0


def initial_count(N: int, p: float) -> int:
    """round(pN), halves rounded up."""
    return int(math.floor(p * N + 0.5))


class ChainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=2)
    p: float = Field(gt=0.0, lt=1.0)
    trials: int = Field(ge=1)
    max_generations: int = Field(default=Config.Oracle.MAX_GENERATIONS, ge=1)
    rng_seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_start(self) -> "ChainConfig":
        start = initial_count(self.N, self.p)
        if not 0 < start < self.N:
            raise ValueError(
                f"Initial count round(pN) = {start} is absorbing for N={self.N}, p={self.p}"
            )
        return self

    @property
    def start(self) -> int:
        return initial_count(self.N, self.p)


@dataclass(frozen=True)
class MartingaleRecord:
    generation: int
    mean: float
    std: float
    within_bound: bool


@dataclass(frozen=True)
class FixationResult:
    fixed: float
    lost: float
    unresolved: float
    trials: int
    martingale: List[MartingaleRecord] = field(default_factory=list)

    @property
    def standard_error(self) -> float:
        return math.sqrt(max(self.fixed * (1.0 - self.fixed), 0.0) / self.trials)


@dataclass(frozen=True)
class MomentCheck:
    N: int
    i: int
    draws: int
    sample_mean: float
    sample_var: float
    expected_mean: float
    expected_var: float
    mean_stderr: float
    var_stderr: float

    @property
    def mean_ok(self) -> bool:
        return abs(self.sample_mean - self.expected_mean) <= 4.0 * self.mean_stderr

    @property
    def var_ok(self) -> bool:
        return abs(self.sample_var - self.expected_var) <= 4.0 * self.var_stderr


def wf_step(N: int, i: int, rng: np.random.Generator) -> int:
    if not 0 <= i <= N:
        raise ValueError(f"Count {i} outside 0..{N}")
    if i == 0 or i == N:
        return i
    return int(rng.binomial(N, i / N))


@dataclass
class _ChunkTally:
    fixed: int
    lost: int
    sums: np.ndarray
    squares: np.ndarray


def _record_generations(max_generations: int) -> Tuple[int, ...]:
    return tuple(g for g in Config.Oracle.RECORD_GENERATIONS if g <= max_generations)


def _run_chunk(cfg: ChainConfig, seed: np.random.SeedSequence, size: int) -> _ChunkTally:
    rng = np.random.default_rng(seed)
    generations = _record_generations(cfg.max_generations)
    sums = np.zeros(len(generations), dtype=np.int64)
    squares = np.zeros(len(generations), dtype=np.int64)

    counts = np.full(size, cfg.start, dtype=np.int64)
    slot = 0

    def record():
        nonlocal slot
        sums[slot] = counts.sum()
        squares[slot] = (counts * counts).sum()
        slot += 1

    if generations and generations[0] == 0:
        record()

    active = np.flatnonzero((counts > 0) & (counts < cfg.N))
    generation = 0
    while active.size and generation < cfg.max_generations:
        counts[active] = rng.binomial(cfg.N, counts[active] / cfg.N)
        generation += 1
        if slot < len(generations) and generations[slot] == generation:
            record()
        active = active[(counts[active] > 0) & (counts[active] < cfg.N)]

    # absorbed chains keep their count for the generations not simulated
    while slot < len(generations):
        record()

    return _ChunkTally(
        fixed=int(np.count_nonzero(counts == cfg.N)),
        lost=int(np.count_nonzero(counts == 0)),
        sums=sums,
        squares=squares,
    )


def fixation_probability(
    cfg: ChainConfig, workers: int = Config.Integrator.WORKERS
) -> FixationResult:
    chunk = Config.Oracle.CHUNK_SIZE
    n_chunks = -(-cfg.trials // chunk)
    sizes = [min(chunk, cfg.trials - k * chunk) for k in range(n_chunks)]
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(n_chunks)

    logger.info(
        "Simulating %d Wright-Fisher chains (N=%d, start=%d) in %d chunks",
        cfg.trials,
        cfg.N,
        cfg.start,
        n_chunks,
    )
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            tallies = list(executor.map(lambda args: _run_chunk(cfg, *args), zip(seeds, sizes)))
    else:
        tallies = [_run_chunk(cfg, seed, size) for seed, size in zip(seeds, sizes)]

    fixed = sum(t.fixed for t in tallies)
    lost = sum(t.lost for t in tallies)
    sums = np.sum([t.sums for t in tallies], axis=0)
    squares = np.sum([t.squares for t in tallies], axis=0)

    martingale = []
    for g, total, total_sq in zip(_record_generations(cfg.max_generations), sums, squares):
        mean = total / cfg.trials
        var = max(total_sq / cfg.trials - mean**2, 0.0)
        std = math.sqrt(var)
        bound = MARTINGALE_SIGMAS * std / math.sqrt(cfg.trials)
        martingale.append(MartingaleRecord(g, mean, std, abs(mean - cfg.start) <= bound))

    result = FixationResult(
        fixed=fixed / cfg.trials,
        lost=lost / cfg.trials,
        unresolved=(cfg.trials - fixed - lost) / cfg.trials,
        trials=cfg.trials,
        martingale=martingale,
    )
    if result.unresolved > 0:
        logger.warning(
            "%d chains unresolved after %d generations",
            cfg.trials - fixed - lost,
            cfg.max_generations,
        )
    return result


def one_step_moments(
    N: int, i: int, draws: int = Config.Oracle.MOMENT_DRAWS, seed: int = 0
) -> MomentCheck:
    """Sample mean and variance of one transition from count i."""
    if N < 1 or not 0 <= i <= N:
        raise ValueError(f"Count {i} outside 0..{N}")
    if draws < 2:
        raise ValueError("Need at least two draws")

    rng = np.random.default_rng(seed)
    if i == 0 or i == N:
        samples = np.full(draws, i, dtype=np.int64)
    else:
        samples = rng.binomial(N, i / N, size=draws)

    samples = samples.astype(np.float64)
    mean = float(samples.mean())
    var = float(samples.var(ddof=1))
    fourth = float(np.mean((samples - mean) ** 4))
    return MomentCheck(
        N=N,
        i=i,
        draws=draws,
        sample_mean=mean,
        sample_var=var,
        expected_mean=float(i),
        expected_var=i * (1.0 - i / N),
        mean_stderr=math.sqrt(var / draws),
        var_stderr=math.sqrt(max(fourth - var**2, 0.0) / draws),
    )
