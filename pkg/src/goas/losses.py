"""Loss functions for both training phases.

Reductions are batch-and-pixel means so the loss weights are independent of
patch resolution and batch size. Probabilities are clamped to [EPS, 1-EPS]
before any log, which keeps every loss finite for arbitrary inputs (the
clamp blocks gradient where it is active).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from goas.errors import ValidationError
from goas.networks import LabOutput, PadMap
from goas.nn import autodiff as ad
from goas.nn.autodiff import Tensor

EPS = 1e-7


@dataclass
class LossWeights:
    vis_weight: float = 0.5  # multiplies the visual fidelity term
    lab_weight: float = 0.1  # multiplies the classifier terms in both phases

    def __post_init__(self):
        if self.vis_weight < 0 or self.lab_weight < 0:
            raise ValidationError("loss weights must be nonnegative")


def _check_same_shape(a, b):
    if tuple(np.shape(a if not isinstance(a, Tensor) else a.data)) != tuple(
        np.shape(b if not isinstance(b, Tensor) else b.data)
    ):
        raise ValidationError("shape mismatch between loss operands")


def vis_loss(images, generated) -> Tensor:
    """Mean squared error between input and synthesized images; keeps the
    injected noise low-energy."""
    _check_same_shape(images, generated)
    diff = ad.sub(generated, ad.as_tensor(images))
    return ad.mean(ad.mul(diff, diff))


def _neg_mean_log(p: Tensor) -> Tensor:
    return ad.neg(ad.mean(ad.log(ad.clip_probs(p, EPS))))


def disc_train_loss(probs_real_spoof, probs_synth, real_column: int = 0) -> Tensor:
    """Discriminator-phase adversarial loss: push the real-spoof batch toward
    the real class and synthesized images away from it."""
    p_real = ad.take_column(ad.as_tensor(probs_real_spoof), real_column)
    p_synth = ad.take_column(ad.as_tensor(probs_synth), real_column)
    return ad.add(_neg_mean_log(p_real), _neg_mean_log(ad.affine(p_synth, -1.0, 1.0)))


def disc_gen_loss(probs_synth, real_column: int = 0) -> Tensor:
    """Generator-phase adversarial loss: falls as synthesized images are
    accepted as real."""
    p_synth = ad.take_column(ad.as_tensor(probs_synth), real_column)
    return _neg_mean_log(p_synth)


def cross_entropy(probs, onehot) -> Tensor:
    """Mean over the batch of -log(probability of the true class)."""
    _check_same_shape(probs, onehot)
    logp = ad.log(ad.clip_probs(ad.as_tensor(probs), EPS))
    picked = ad.sum_axis(ad.mul(logp, ad.as_tensor(onehot)), axis=1)
    return ad.neg(ad.mean(picked))


def lab_train_loss(lab_out: LabOutput, sensor_onehot, medium_onehot) -> Tensor:
    """Supervised classifier loss: sensor and medium cross entropies summed."""
    return ad.add(
        cross_entropy(lab_out.probs_c, sensor_onehot),
        cross_entropy(lab_out.probs_m, medium_onehot),
    )


def lab_gen_loss(
    lab_out_synth: LabOutput,
    sensor_onehot,
    medium_onehot,
    live_sensor_loss: float,
    live_medium_loss: float,
) -> Tensor:
    """Generator-phase classifier loss, normalized by the classifier's cached
    performance on real live batches so a badly trained classifier cannot
    dominate the generator update. The cached denominators are constants."""
    if live_sensor_loss < 0 or live_medium_loss < 0:
        raise ValidationError("cached live-batch losses must be nonnegative")
    s_m = cross_entropy(lab_out_synth.probs_m, medium_onehot)
    s_c = cross_entropy(lab_out_synth.probs_c, sensor_onehot)
    return ad.add(
        ad.affine(s_m, 1.0 / (1.0 + live_medium_loss)),
        ad.affine(s_c, 1.0 / (1.0 + live_sensor_loss)),
    )


def pad_loss(pad_map: PadMap, target_map) -> Tensor:
    """Mean squared error against the constant 0/1 ground-truth map."""
    pred = pad_map.map if isinstance(pad_map, PadMap) else ad.as_tensor(pad_map)
    _check_same_shape(pred, target_map)
    diff = ad.sub(pred, ad.as_tensor(target_map))
    return ad.mean(ad.mul(diff, diff))


def pad_targets(is_spoof: np.ndarray, map_size: int, dtype=np.float32) -> np.ndarray:
    """Per-sample constant maps: 0 for live, 1 for spoof."""
    flags = np.asarray(is_spoof, dtype=dtype)
    return np.broadcast_to(flags[:, None, None], (flags.shape[0], map_size, map_size)).copy()


def generator_objective(disc_term: Tensor, vis_term: Tensor, lab_term: Tensor, weights: LossWeights) -> Tensor:
    """Total generator-phase objective; only generator and prototype-bank
    parameters may be trainable when this is backpropagated."""
    return ad.add(disc_term, ad.add(ad.affine(vis_term, weights.vis_weight), ad.affine(lab_term, weights.lab_weight)))


def discriminator_objective(disc_term: Tensor, lab_term: Tensor, weights: LossWeights) -> Tensor:
    """Total discriminator/classifier-phase objective."""
    return ad.add(disc_term, ad.affine(lab_term, weights.lab_weight))
