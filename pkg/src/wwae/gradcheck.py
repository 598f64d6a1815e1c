"""Full-model finite-difference gradient verification.

Probes every encoder and decoder parameter of a model built from a config,
holding the batch and all sampling noise fixed, and compares analytic
gradients against central differences on the identical loss evaluation
path. This is the decisive correctness gate for the hand-written backward
passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import data, models, nn
from .config import TrainConfig
from .numerics import Rng

FD_STEP = 1e-5
REL_TOL = 1e-4
GRAD_FLOOR = 1e-8  # coordinates below this magnitude are skipped

# Test hook: when set, applied to (enc_grad, dec_grad) before comparison so
# a broken-gradient path can be exercised end to end.
corrupt_hook: Optional[Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]] = None


@dataclass
class GradCheckResult:
    regularizer: str
    max_rel_err: float
    worst: str  # coordinate path of the worst relative error
    checked: int
    passed: bool

    def report_line(self) -> str:
        status = "pass" if self.passed else "fail"
        return (
            f"regularizer={self.regularizer} max_rel_err={self.max_rel_err:.6e} "
            f"worst={self.worst} checked={self.checked} tol={REL_TOL:g} "
            f"status={status}"
        )


def _coordinate_name(params: nn.MlpParams, net: str, flat_index: int) -> str:
    pos = flat_index
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        if pos < w.size:
            i, j = divmod(pos, w.shape[1])
            return f"{net}.W{layer}[{i},{j}]"
        pos -= w.size
        if pos < b.size:
            return f"{net}.b{layer}[{pos}]"
        pos -= b.size
    return f"{net}.flat[{flat_index}]"


def check_model_grads(
    cfg: TrainConfig, x: np.ndarray, image_data: bool = False
) -> GradCheckResult:
    """Compare analytic and central-difference gradients on one fixed batch."""
    n = x.shape[0]
    root = Rng(cfg.seed)
    model = models.build_model(cfg, x.shape[1], root.split(2), image_data=image_data)
    z_prior, prior_stats, eps = models.draw_step_noise(
        cfg, root.split(1), n, cfg.latent_dim
    )

    parts, grads = models.loss_and_grads(model, cfg, x, eps, z_prior, prior_stats)
    enc_grad, dec_grad = grads.enc, grads.dec
    if corrupt_hook is not None:
        enc_grad, dec_grad = corrupt_hook(enc_grad, dec_grad)

    enc_flat = nn.flatten_params(model.enc)
    dec_flat = nn.flatten_params(model.dec)

    def loss_at(enc_vec: np.ndarray, dec_vec: np.ndarray) -> float:
        probe = models.Model(
            nn.unflatten_params(enc_vec, model.enc),
            nn.unflatten_params(dec_vec, model.dec),
            model.latent_dim,
            model.output_activation,
        )
        p, _ = models.loss_and_grads(probe, cfg, x, eps, z_prior, prior_stats)
        return p.total

    max_rel = 0.0
    worst = "none"
    checked = 0
    for net, base_enc, base_dec, analytic in (
        ("enc", enc_flat, dec_flat, enc_grad),
        ("dec", enc_flat, dec_flat, dec_grad),
    ):
        vec = base_enc if net == "enc" else base_dec
        like = model.enc if net == "enc" else model.dec
        for idx in range(vec.size):
            bumped_hi = vec.copy()
            bumped_lo = vec.copy()
            bumped_hi[idx] += FD_STEP
            bumped_lo[idx] -= FD_STEP
            if net == "enc":
                hi = loss_at(bumped_hi, base_dec)
                lo = loss_at(bumped_lo, base_dec)
            else:
                hi = loss_at(base_enc, bumped_hi)
                lo = loss_at(base_enc, bumped_lo)
            fd = (hi - lo) / (2.0 * FD_STEP)
            a = analytic[idx]
            scale = max(abs(a), abs(fd))
            if scale <= GRAD_FLOOR:
                continue
            rel = abs(a - fd) / scale
            checked += 1
            if rel > max_rel:
                max_rel = rel
                worst = _coordinate_name(like, net, idx)
    return GradCheckResult(cfg.reg_kind(), max_rel, worst, checked, max_rel <= REL_TOL)


def check_config(cfg: TrainConfig) -> GradCheckResult:
    """Run the suite on the first batch of the configured dataset."""
    dataset = data.load_dataset(cfg, Rng(cfg.seed).split(3))
    n = min(cfg.batch_size, dataset.n)
    return check_model_grads(
        cfg, dataset.examples[:n], image_data=dataset.image_shape is not None
    )
