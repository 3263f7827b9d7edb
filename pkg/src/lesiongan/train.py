"""Alternating adversarial optimization, evaluation, and the speed bench.

Each training step updates the discriminator once on (real, detached-fake)
pairs, then updates the generator once against the refreshed discriminator.
Gradient buffers are zeroed at each phase boundary so neither update can
see the other's gradients; parameter values of the fixed network are never
touched.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .checkpoint import save_checkpoint
from .config import RunConfig
from .data import Sample, batch
from .losses import LossWeights, discriminator_loss, generator_loss, soft_jaccard_loss
from .metrics import MetricsReport, report_from_pairs
from .networks import Discriminator, Generator, binarize, build_models
from .optim import OptimizerConfig, adam_step
from .tensor import (
    ConfigurationError,
    NumericError,
    Tensor,
    UsageError,
    no_grad,
)


@dataclass
class TrainState:
    step: int = 0
    rng_seed: int = 0
    loss_history: list[tuple[int, float, float]] = field(default_factory=list)


def _zero_grads(params) -> None:
    for p in params:
        p.zero_grad()


def _check_finite_loss(loss: Tensor, what: str, step: int) -> float:
    value = loss.item()
    if not np.isfinite(value):
        raise NumericError(f"{what} became non-finite at step {step}")
    return value


def train_step(gen: Generator, disc: Discriminator, batch_xy: tuple[Tensor, Tensor],
               weights: LossWeights, opt: OptimizerConfig,
               state: TrainState) -> tuple[float, float]:
    """One discriminator update then one generator update on a batch."""
    x, y = batch_xy
    step = state.step + 1
    gen.train(True)
    disc.train(True)
    try:
        fake = gen(x)

        # Discriminator phase: generator output detached, G receives nothing.
        _zero_grads(disc.parameters())
        d_real = disc(x, y)
        d_fake = disc(x, fake.detach())
        d_loss = discriminator_loss(d_real, d_fake)
        d_value = _check_finite_loss(d_loss, "discriminator loss", step)
        d_loss.backward()
        adam_step(disc.parameters(), opt, step)

        # Generator phase: D participates in the graph but is not stepped.
        _zero_grads(gen.parameters())
        _zero_grads(disc.parameters())
        d_fake2 = disc(x, fake)
        g_loss = generator_loss(d_fake2, fake, y, weights)
        g_value = _check_finite_loss(g_loss, "generator loss", step)
        g_loss.backward()
        adam_step(gen.parameters(), opt, step)
        _zero_grads(disc.parameters())
    except NumericError as exc:
        raise NumericError(f"step {step}: {exc}") from exc

    state.step = step
    state.loss_history.append((step, g_value, d_value))
    return g_value, d_value


@dataclass
class TrainResult:
    gen: Generator
    disc: Discriminator
    state: TrainState
    checkpoint_path: Optional[str] = None
    best_checkpoint_path: Optional[str] = None
    best_val_jsc: Optional[float] = None


def train(run_cfg: RunConfig, samples: Sequence[Sample], max_steps: int,
          out_dir: Optional[str] = None,
          val_samples: Optional[Sequence[Sample]] = None,
          log_fn=None) -> TrainResult:
    """Run the alternating loop for ``max_steps`` over shuffled batches.

    All randomness (weight init, dropout, shuffling) derives from
    ``run_cfg.seed``, so identical configs give bit-identical results.
    """
    if max_steps < 1:
        raise ConfigurationError(f"max_steps must be >= 1, got {max_steps}")
    gen, disc, rng_source = build_models(run_cfg.model, run_cfg.seed)
    shuffle_rng = np.random.default_rng([run_cfg.seed, 2])
    weights = run_cfg.loss_weights
    state = TrainState(rng_seed=run_cfg.seed)
    result = TrainResult(gen, disc, state)
    best_jsc = -1.0

    def maybe_checkpoint() -> None:
        nonlocal best_jsc
        if out_dir is None:
            return
        path = os.path.join(out_dir, f"checkpoint_step{state.step:06d}.lgseg")
        save_checkpoint(path, gen, disc, run_cfg.model, state.step)
        result.checkpoint_path = path
        if val_samples:
            report = evaluate(gen, val_samples)
            jsc = report.aggregate[2]
            if jsc > best_jsc:
                best_jsc = jsc
                best_path = os.path.join(out_dir, "checkpoint_best.lgseg")
                save_checkpoint(best_path, gen, disc, run_cfg.model, state.step)
                result.best_checkpoint_path = best_path
                result.best_val_jsc = jsc

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    dt = run_cfg.model.np_dtype
    while state.step < max_steps:
        for xb, yb in batch(samples, run_cfg.batch_size, shuffle=True, rng=shuffle_rng):
            if xb.data.dtype != dt:
                xb = Tensor(xb.data.astype(dt))
                yb = Tensor(yb.data.astype(dt))
            g_value, d_value = train_step(gen, disc, (xb, yb), weights,
                                          run_cfg.optim, state)
            if log_fn is not None:
                log_fn(state.step, g_value, d_value)
            if run_cfg.checkpoint_every and state.step % run_cfg.checkpoint_every == 0:
                maybe_checkpoint()
            if state.step >= max_steps:
                break

    if out_dir is not None:
        final = os.path.join(out_dir, "checkpoint_final.lgseg")
        save_checkpoint(final, gen, disc, run_cfg.model, state.step)
        result.checkpoint_path = final
        if val_samples:
            maybe_checkpoint_final_best(result, gen, disc, run_cfg, state,
                                        val_samples, best_jsc, out_dir)
        write_loss_log(os.path.join(out_dir, "loss_log.csv"), state.loss_history)
    return result


def maybe_checkpoint_final_best(result, gen, disc, run_cfg, state,
                                val_samples, best_jsc, out_dir) -> None:
    report = evaluate(gen, val_samples)
    jsc = report.aggregate[2]
    if jsc > best_jsc:
        best_path = os.path.join(out_dir, "checkpoint_best.lgseg")
        save_checkpoint(best_path, gen, disc, run_cfg.model, state.step)
        result.best_checkpoint_path = best_path
        result.best_val_jsc = jsc


def write_loss_log(path: str, history: Sequence[tuple[int, float, float]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,gen_loss,disc_loss\n")
        for step, g, d in history:
            fh.write(f"{step},{g!r},{d!r}\n")


def evaluate(gen: Generator, samples: Sequence[Sample],
             threshold: float = 0.5, pixel_pooled: bool = False) -> MetricsReport:
    """Binarize generator output per sample and compute all metrics."""
    pairs = []
    gen.eval()
    with no_grad():
        for sample in samples:
            if sample.mask is None:
                raise UsageError(f"sample {sample.id!r} has no ground-truth mask")
            pred = binarize(gen(sample.image), threshold)
            pairs.append((sample.id, sample.mask, pred))
    return report_from_pairs(pairs, pixel_pooled=pixel_pooled)


def mean_train_dsc(gen: Generator, samples: Sequence[Sample]) -> float:
    return evaluate(gen, samples).aggregate[1]


def mean_soft_jaccard(gen: Generator, samples: Sequence[Sample]) -> float:
    """Mean (1 - soft Jaccard loss) over samples, without binarization."""
    gen.eval()
    total = 0.0
    with no_grad():
        for sample in samples:
            pred = gen(sample.image)
            total += 1.0 - soft_jaccard_loss(sample.mask, pred).item()
    return total / len(samples)


@dataclass
class BenchReport:
    rows: list[tuple[int, float, float]]  # (input_size, mean_ms, fps)
    warmup_iters: int
    timed_iters: int

    def to_table(self) -> str:
        lines = [f"{'size':>6}{'mean_ms':>12}{'fps':>10}"]
        for size, ms, fps in self.rows:
            lines.append(f"{size:>6}{ms:>12.2f}{fps:>10.2f}")
        return "\n".join(lines)


def bench(gen: Generator, sizes: Sequence[int], warmup: int = 1,
          iters: int = 3, seed: int = 0) -> BenchReport:
    """Wall-clock single-image inference timing per input size."""
    if iters < 1:
        raise ConfigurationError(f"iters must be >= 1, got {iters}")
    for s in sizes:
        if s % 8:
            raise ConfigurationError(f"bench size {s} is not divisible by 8")
    rng = np.random.default_rng(seed)
    gen.eval()
    rows = []
    for s in sorted(sizes):
        x = Tensor(rng.random((1, 3, s, s)).astype(gen.cfg.np_dtype))
        with no_grad():
            for _ in range(warmup):
                gen(x)
            t0 = time.perf_counter()
            for _ in range(iters):
                gen(x)
            elapsed = time.perf_counter() - t0
        mean_ms = elapsed / iters * 1000.0
        rows.append((s, mean_ms, 1000.0 / mean_ms))
    return BenchReport(rows, warmup, iters)
