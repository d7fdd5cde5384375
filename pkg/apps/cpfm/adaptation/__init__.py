from apps.cpfm.adaptation.autoencoder import PromptAutoencoder, prompt_autoencode
from apps.cpfm.adaptation.losses import (
    LossWeights,
    expand_mask,
    gen_mask,
    loss_ce_soft,
    loss_input_recon,
    loss_prompt_recon,
    total_loss,
)
from apps.cpfm.adaptation.model import CPFMModel
from apps.cpfm.adaptation.step import AblationFlags, LossStats, adapt_batch

__all__ = [
    'AblationFlags',
    'CPFMModel',
    'LossStats',
    'LossWeights',
    'PromptAutoencoder',
    'adapt_batch',
    'expand_mask',
    'gen_mask',
    'loss_ce_soft',
    'loss_input_recon',
    'loss_prompt_recon',
    'prompt_autoencode',
    'total_loss',
]
