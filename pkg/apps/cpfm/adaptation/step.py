"""One adaptation step for one branch of one teacher's branch pair."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.cpfm.adaptation.autoencoder import prompt_autoencode
from apps.cpfm.adaptation.losses import (
    LossWeights,
    expand_mask,
    loss_ce_soft,
    loss_input_recon,
    loss_prompt_recon,
    total_loss,
)
from apps.cpfm.adaptation.model import CPFMModel
from apps.cpfm.encoder.layers import classify_head, reconstruct_head
from apps.cpfm.pseudo_labels import TeacherBuffer
from apps.cpfm.tensor import Adam, Tensor, backward, softmax


@dataclass(frozen=True)
class AblationFlags:
    no_prompt: bool = False
    no_input_recon: bool = False
    no_prompt_recon: bool = False
    naive_avg: bool = False

    @property
    def label(self) -> str:
        active = [name for name in ('no_prompt', 'no_input_recon', 'no_prompt_recon', 'naive_avg') if getattr(self, name)]
        return '+'.join(active) or 'full'

    def effective_weights(self, weights: LossWeights) -> LossWeights:
        return LossWeights(
            gamma1=0.0 if self.no_prompt_recon or self.no_prompt else weights.gamma1,
            gamma2=0.0 if self.no_input_recon else weights.gamma2,
            pi=weights.pi,
        )


@dataclass
class LossStats:
    ce: float
    pr: float
    ir: float
    total: float
    applied: bool = True


def prompt_recon_loss(model: CPFMModel) -> Tensor:
    pairs = []
    for pair in model.pairs:
        for p in (pair.prompts.p1, pair.prompts.p2):
            pairs.append((p, prompt_autoencode(p, model.autoencoder)))
    return loss_prompt_recon(pairs)


def adapt_batch(
    model: CPFMModel,
    optimizer: Adam,
    x: np.ndarray,
    ids: np.ndarray,
    buffer: TeacherBuffer,
    teacher: int,
    branch: int,
    weights: LossWeights,
    masks: np.ndarray | None = None,
    flags: AblationFlags = AblationFlags(),
) -> LossStats:
    """Forward the masked batch through one branch and step that branch's parameters.

    Only the branch prompt, the branch head, the reconstruction head and the
    prompt autoencoder are updated; the backbone stays frozen.
    """
    targets = buffer.lookup(ids)
    use_prompt = not flags.no_prompt and model.config.prompt_len > 0
    use_ir = not flags.no_input_recon
    effective = flags.effective_weights(weights)
    use_pr = use_prompt and effective.gamma1 > 0
    if not use_ir:
        masks = None

    tokens = model.tokens(x, teacher, branch, mask=masks, use_prompt=use_prompt)
    probs = softmax(classify_head(tokens, model.pairs[teacher].head(branch)), axis=-1)
    ce = loss_ce_soft(probs, targets)

    if use_ir:
        x_hat = reconstruct_head(tokens, model.recon_head, model.config)
        if masks is None:
            mask_t = np.zeros(np.shape(x)[:-1])
        else:
            mask_t = np.broadcast_to(expand_mask(masks, model.config.patch_len), np.shape(x)[:-1])
        ir = loss_input_recon(x, x_hat, mask_t, effective.pi)
    else:
        ir = Tensor(0.0)
    pr = prompt_recon_loss(model) if use_pr else Tensor(0.0)

    loss = total_loss(ce, pr, ir, effective)
    optimizer.zero_grad()
    backward(loss)

    names = model.branch_param_names(teacher, branch, use_prompt)
    if use_ir:
        names += list(model.recon_head.named_parameters('recon_head'))
    if use_pr:
        names += list(model.autoencoder.named_parameters('autoencoder'))
    applied = optimizer.step(names)
    return LossStats(ce=ce.item(), pr=pr.item(), ir=ir.item(), total=loss.item(), applied=applied)
