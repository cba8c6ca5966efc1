"""Metropolis-Hastings over cut positions with frozen tree topology."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .emissions import CellMatrix, fit_and_score
from .partition import (AxisBox, LeafGaussian, MondrianTree, check_in_domain, internal_nodes,
                        with_rel_pos)
from .priors import Hyperparameters, PriorTable
from .sampler import RandomSource, child_seeds, log_prior, random_source, sample_mondrian

CACHE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MCMCConfig:
    n_chains: int = 50
    iterations: int = 2000
    step_size: float = 0.15
    seed: int = 0
    trace_every: int = 10
    debug: bool = False

    def __post_init__(self):
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.step_size < 1.0:
            raise ValueError("step_size must lie in (0, 1)")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")


@dataclass
class Chain:
    """One MCMC state. ``means``/``variances`` are (K, D) in leaf order.

    With no data attached the chain targets the prior alone and ``log_lik``
    stays 0.
    """

    tree: MondrianTree
    hyper: Hyperparameters
    rng: RandomSource
    log_prior: float
    log_lik: float = 0.0
    means: np.ndarray | None = None
    variances: np.ndarray | None = None
    accepted: int = 0
    iterations: int = 0
    index: int = 0

    @property
    def log_posterior(self) -> float:
        return self.log_prior + self.log_lik

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.iterations if self.iterations else 0.0

    @property
    def params(self) -> dict[str, LeafGaussian]:
        if self.means is None:
            return {}
        return {p: LeafGaussian(self.means[k].copy(), self.variances[k].copy())
                for k, p in enumerate(self.tree.leaf_ids())}


@dataclass
class PosteriorResult:
    samples: list[Chain]
    traces: list[np.ndarray] = field(default_factory=list)  # columns: iteration, log_prior, log_lik, acceptance

    @property
    def acceptance_rates(self) -> list[float]:
        return [c.acceptance_rate for c in self.samples]

    @property
    def trees(self) -> list[MondrianTree]:
        return [c.tree for c in self.samples]

    def map_sample(self) -> Chain:
        return max(self.samples, key=lambda c: c.log_posterior)


def _values(data) -> np.ndarray | None:
    if data is None:
        return None
    return data.values if isinstance(data, CellMatrix) else np.asarray(data, dtype=float)


def make_chain(tree: MondrianTree, hyper: Hyperparameters, rng: RandomSource, data=None,
               index: int = 0) -> Chain:
    X = _values(data)
    chain = Chain(tree, hyper, rng, log_prior(tree, tree.table, hyper), index=index)
    if X is not None:
        check_in_domain(tree.box, X)
        chain.means, chain.variances, chain.log_lik = fit_and_score(tree, X)
    return chain


def init_chains(config: MCMCConfig, box: AxisBox, table: PriorTable, hyper: Hyperparameters,
                data=None) -> list[Chain]:
    """Draw one prior tree per chain, each from its own derived seed."""
    X = _values(data)
    if X is not None:
        X = np.ascontiguousarray(X, dtype=float)
        check_in_domain(box, X)
    chains = []
    for i, seq in enumerate(child_seeds(config.seed, config.n_chains)):
        rng = random_source(seq)
        tree = sample_mondrian(hyper.budget, box, table, hyper, rng)
        chains.append(make_chain(tree, hyper, rng, X, index=i))
    return chains


def reflect_unit(x: float) -> float:
    """Fold ``x`` back into [0, 1] by reflecting at both ends."""
    x = math.fmod(abs(x), 2.0)
    return 2.0 - x if x > 1.0 else x


def propose_perturbation(chain: Chain, step_size: float = 0.15) -> MondrianTree:
    """Nudge the relative position of one uniformly chosen cut.

    The move is a Gaussian step reflected at 0 and 1, so it is symmetric.
    Descendant cuts keep their relative positions inside the rescaled boxes.
    A tree without cuts is returned unchanged.
    """
    nodes = list(internal_nodes(chain.tree))
    if not nodes:
        return chain.tree
    path, node = nodes[int(chain.rng.integers(len(nodes)))]
    rel = reflect_unit(node.cut.rel_pos + chain.rng.normal(0.0, step_size))
    if not 0.0 < rel < 1.0:
        # Landing exactly on a boundary has zero prior density; stay put.
        return chain.tree
    return with_rel_pos(chain.tree, path, rel)


def mh_step(chain: Chain, data, candidate: MondrianTree) -> Chain:
    """Accept or reject ``candidate`` in place and return the chain."""
    X = _values(data)
    u = chain.rng.random()
    chain.iterations += 1
    if candidate is chain.tree:
        chain.accepted += 1
        return chain
    lp = log_prior(candidate, candidate.table, chain.hyper)
    if X is not None:
        means, variances, ll = fit_and_score(candidate, X)
    else:
        means, variances, ll = None, None, 0.0
    log_ratio = (lp + ll) - chain.log_posterior
    if log_ratio >= 0 or math.log(u) < log_ratio:
        chain.tree, chain.log_prior, chain.log_lik = candidate, lp, ll
        chain.means, chain.variances = means, variances
        chain.accepted += 1
    return chain


def check_cache(chain: Chain, data) -> None:
    X = _values(data)
    lp = log_prior(chain.tree, chain.tree.table, chain.hyper)
    ll = fit_and_score(chain.tree, X)[2] if X is not None else 0.0
    if abs(lp - chain.log_prior) > CACHE_TOLERANCE * max(1.0, abs(lp)) or \
            abs(ll - chain.log_lik) > CACHE_TOLERANCE * max(1.0, abs(ll)):
        raise AssertionError(
            f"chain {chain.index}: cached ({chain.log_prior}, {chain.log_lik}) != recomputed ({lp}, {ll})")


def run_chain(chain: Chain, data, config: MCMCConfig) -> tuple[Chain, np.ndarray]:
    X = _values(data)
    rows = [(chain.iterations, chain.log_prior, chain.log_lik, chain.acceptance_rate)]
    for it in range(1, config.iterations + 1):
        mh_step(chain, X, propose_perturbation(chain, config.step_size))
        if it % config.trace_every == 0:
            rows.append((chain.iterations, chain.log_prior, chain.log_lik, chain.acceptance_rate))
        if config.debug and it % 100 == 0:
            check_cache(chain, X)
    return chain, np.array(rows, dtype=float)


def _run_chain_job(args):
    return run_chain(*args)


def run_mcmc(chains: list[Chain], data, config: MCMCConfig, workers: int = 1) -> PosteriorResult:
    """Run every chain for ``config.iterations`` steps; one posterior sample per chain.

    Output order follows chain order whatever ``workers`` is.
    """
    X = _values(data)
    jobs = [(chain, X, config) for chain in chains]
    if workers > 1 and len(chains) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chain_job, jobs))
    else:
        results = [run_chain(*job) for job in jobs]
    return PosteriorResult([c for c, _ in results], [t for _, t in results])


def fit_posterior(data: CellMatrix, table: PriorTable, hyper: Hyperparameters, config: MCMCConfig,
                  box: AxisBox | None = None, workers: int = 1) -> PosteriorResult:
    """Prior draws followed by MCMC, over the data's padded observed range by default."""
    data = data.aligned_to(table)
    if box is None:
        box = observed_box(data.values)
    chains = init_chains(config, box, table, hyper, data)
    return run_mcmc(chains, data, config, workers=workers)


def observed_box(X: np.ndarray, pad: float = 1e-3) -> AxisBox:
    """Per-dimension [min, max] of the data widened by ``pad`` of the range on each side."""
    X = np.asarray(X, dtype=float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    width = np.where(span > 0, span, np.maximum(1.0, np.abs(lo)))
    return AxisBox(tuple(lo - pad * width), tuple(hi + pad * width))
