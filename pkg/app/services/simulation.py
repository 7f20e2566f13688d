"""Monte-Carlo simulation of the testing protocols

Trials are split into chunks of cfg.chunk_size; chunk i draws from
default_rng(SeedSequence(cfg.seed).spawn(...)[i]), so the outcome depends on
(trials, seed, chunk_size) only. Per-chunk sums are integers and are reduced
in chunk order, which makes results bit-identical for any worker count.
Within a chunk the draws are taken in sub-batches of at most
simulation.max_draw_elements Bernoulli cells, which bounds memory for large n
without changing the stream.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, FrozenSet, Optional, Tuple

import numpy as np

from app.core.config import Config
from app.core.errors import DomainError, NotSimulatableError
from app.core.procedures import get_procedure
from app.types.cutpoint import SimConfig, SimResult, SimulationReport

logger = logging.getLogger(__name__)

ProtocolOutcome = Tuple[int, FrozenSet[int]]


# Per-trial protocol walkers: return (tests used, identified defective indices)

def run_dorfman_protocol(items: np.ndarray) -> ProtocolOutcome:
    tests = 1
    if not items.any():
        return tests, frozenset()
    found = set()
    for i, defective in enumerate(items):
        tests += 1
        if defective:
            found.add(i)
    return tests, frozenset(found)


def run_md_protocol(items: np.ndarray) -> ProtocolOutcome:
    tests = 1
    if not items.any():
        return tests, frozenset()
    found = set()
    last = len(items) - 1
    for i in range(last):
        tests += 1
        if items[i]:
            found.add(i)
    if found:
        tests += 1
        if items[last]:
            found.add(last)
    else:
        # positive pool with n - 1 negatives: the last item must be defective
        found.add(last)
    return tests, frozenset(found)


def run_sterrett_protocol(items: np.ndarray) -> ProtocolOutcome:
    tests = 0
    found = set()
    start, size = 0, len(items)
    while start < size:
        tests += 1
        if not items[start:].any():
            break
        i = start
        while True:
            if i == size - 1:
                # all earlier members of a positive pool were negative
                found.add(i)
                start = size
                break
            tests += 1
            if items[i]:
                found.add(i)
                start = i + 1
                break
            i += 1
    return tests, frozenset(found)


def run_a2_protocol(grid: np.ndarray) -> ProtocolOutcome:
    n = grid.shape[0]
    rows = grid.any(axis=1)
    cols = grid.any(axis=0)
    tests = 2 * n
    found = set()
    for r in range(n):
        for c in range(n):
            if rows[r] and cols[c]:
                tests += 1
                if grid[r, c]:
                    found.add(r * n + c)
    return tests, frozenset(found)


# Vectorised chunk kernels: one row (or matrix) per trial

def _dorfman_counts(items: np.ndarray) -> np.ndarray:
    n = items.shape[1]
    return 1 + n * items.any(axis=1)


def _md_counts(items: np.ndarray) -> np.ndarray:
    n = items.shape[1]
    positive = items.any(axis=1)
    inferred = positive & ~items[:, :-1].any(axis=1)
    return 1 + n * positive - inferred


def _sterrett_counts(items: np.ndarray) -> np.ndarray:
    n = items.shape[1]
    positive = items.any(axis=1)
    # one pool per round: the first, plus one after each defective found before the last slot
    pools = 1 + items[:, :-1].sum(axis=1)
    last_defective = n - 1 - np.argmax(items[:, ::-1], axis=1)
    individual = np.minimum(last_defective + 1, n - 1)
    return np.where(positive, pools + individual, 1)


def _a2_counts(grid: np.ndarray) -> np.ndarray:
    n = grid.shape[1]
    rows = grid.any(axis=2)
    cols = grid.any(axis=1)
    return 2 * n + rows.sum(axis=1) * cols.sum(axis=1)


_PROTOCOLS: Dict[str, Tuple[Callable, Callable, int]] = {
    # name: (chunk kernel, per-trial walker, minimum n)
    "dorfman": (_dorfman_counts, run_dorfman_protocol, 2),
    "md": (_md_counts, run_md_protocol, 2),
    "sterrett": (_sterrett_counts, run_sterrett_protocol, 1),
    "a2": (_a2_counts, run_a2_protocol, 2),
}


def closed_form_mean(name: str, n: int, p: float) -> float:
    """M_X(n, p) from the registered formula"""
    return float(get_procedure(name).mean(float(n), p))


class ProtocolSimulator:
    """Chunked, seeded Monte-Carlo estimates of M_X(n, p)"""

    def __init__(self, max_workers: int = None, max_draw_elements: int = None):
        Config._ensure_initialized()
        self.max_workers = max_workers or Config.MAX_WORKERS
        self.max_draw_elements = max_draw_elements or Config.get_int(
            "simulation", "max_draw_elements", default=4_194_304
        )

    @staticmethod
    def default_config(**overrides) -> SimConfig:
        """SimConfig from the simulation section of the config"""
        values = {
            "trials": Config.get_int("simulation", "trials", default=1_000_000),
            "seed": Config.get_int("simulation", "seed", default=42),
            "chunk_size": Config.get_int("simulation", "chunk_size", default=65536),
            "verify_identification": bool(Config.get("simulation", "verify_identification", default=False)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return SimConfig(**values)

    def _run_chunk(self, name: str, n: int, p: float, size: int, seed_seq: np.random.SeedSequence, verify: bool) -> Tuple[int, int]:
        # sub-batches read the chunk's stream in order, so the draws match one (size, ...) call
        kernel, walker, _ = _PROTOCOLS[name]
        rng = np.random.default_rng(seed_seq)
        per_trial = n * n if name == "a2" else n
        rows = max(1, self.max_draw_elements // per_trial)
        total, total_sq = 0, 0
        for start in range(0, size, rows):
            batch = min(rows, size - start)
            shape = (batch, n, n) if name == "a2" else (batch, n)
            items = rng.random(shape) < p
            counts = kernel(items).astype(np.int64)
            if verify:
                self._replay(name, walker, items, counts)
            total += int(counts.sum())
            total_sq += int(np.square(counts).sum())
        return total, total_sq

    @staticmethod
    def _replay(name: str, walker: Callable, items: np.ndarray, counts: np.ndarray) -> None:
        """Check the vectorised counts against the per-trial protocol walker"""
        for trial, count in zip(items, counts):
            tests, found = walker(trial)
            drawn = frozenset(int(i) for i in np.flatnonzero(trial.ravel()))
            if tests != int(count) or found != drawn:
                raise AssertionError(
                    f"{name}: protocol replay mismatch (tests {tests} vs {int(count)}, "
                    f"identified {sorted(found)} vs drawn {sorted(drawn)})"
                )

    def simulate(self, name: str, n: int, p: float, cfg: SimConfig, progress: Optional[Callable[[int], None]] = None) -> SimResult:
        """Empirical mean and standard error of the number of tests per cohort"""
        proc = get_procedure(name)
        name = proc.name
        if name not in _PROTOCOLS:
            raise NotSimulatableError(f"{name} is not simulatable: no protocol is available", name)
        _, _, n_min = _PROTOCOLS[name]
        if int(n) != n or n < n_min:
            raise DomainError(f"{name} needs an integer n >= {n_min}, got {n}", name)
        if not 0.0 < p < 1.0:
            raise DomainError(f"prevalence must lie in (0, 1), got {p}", name)
        n = int(n)

        sizes = [cfg.chunk_size] * (cfg.trials // cfg.chunk_size)
        if cfg.trials % cfg.chunk_size:
            sizes.append(cfg.trials % cfg.chunk_size)
        seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
        logger.info("simulating %s n=%d p=%g: %d trials in %d chunks", name, n, p, cfg.trials, len(sizes))

        def work(index: int) -> Tuple[int, int]:
            sums = self._run_chunk(name, n, p, sizes[index], seeds[index], cfg.verify_identification)
            if progress is not None:
                progress(sizes[index])
            return sums

        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            chunk_sums = list(executor.map(work, range(len(sizes))))

        total = sum(s for s, _ in chunk_sums)
        total_sq = sum(s for _, s in chunk_sums)
        trials = cfg.trials
        mean = total / trials
        if trials > 1:
            # exact integer arithmetic until the final division
            variance = (trials * total_sq - total * total) / (trials * (trials - 1))
            std_error = math.sqrt(max(variance, 0.0) / trials)
        else:
            std_error = 0.0
        return SimResult(procedure=name, n=n, p=p, mean_tests=mean, std_error=std_error, trials=trials)

    def simulate_dorfman(self, n: int, p: float, cfg: SimConfig) -> SimResult:
        return self.simulate("dorfman", n, p, cfg)

    def simulate_md(self, n: int, p: float, cfg: SimConfig) -> SimResult:
        return self.simulate("md", n, p, cfg)

    def simulate_sterrett(self, n: int, p: float, cfg: SimConfig) -> SimResult:
        return self.simulate("sterrett", n, p, cfg)

    def simulate_a2(self, n: int, p: float, cfg: SimConfig) -> SimResult:
        return self.simulate("a2", n, p, cfg)

    def report(self, name: str, n: int, p: float, cfg: SimConfig, progress: Optional[Callable[[int], None]] = None) -> SimulationReport:
        """Simulation result with the closed-form mean and z-score"""
        result = self.simulate(name, n, p, cfg, progress=progress)
        expected = closed_form_mean(name, n, p)
        diff = result.mean_tests - expected
        if result.std_error > 0:
            z = diff / result.std_error
        else:
            z = 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)
        return SimulationReport(**result.model_dump(), closed_form=expected, z_score=z)
