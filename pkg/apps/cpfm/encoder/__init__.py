from apps.cpfm.encoder.checkpoint import Checkpoint, read_checkpoint, write_checkpoint
from apps.cpfm.encoder.config import PRESETS, EncoderConfig, preset
from apps.cpfm.encoder.layers import (
    classify_head,
    embed_patches,
    encode,
    patchify,
    prompted_msa,
    reconstruct_head,
    unpatchify,
)
from apps.cpfm.encoder.model import PromptedClassifier
from apps.cpfm.encoder.params import Backbone, ClassifierHead, LayerParams, PromptPair, ReconstructionHead

__all__ = [
    'Backbone',
    'Checkpoint',
    'ClassifierHead',
    'EncoderConfig',
    'LayerParams',
    'PRESETS',
    'PromptPair',
    'PromptedClassifier',
    'ReconstructionHead',
    'classify_head',
    'embed_patches',
    'encode',
    'patchify',
    'preset',
    'prompted_msa',
    'read_checkpoint',
    'reconstruct_head',
    'unpatchify',
    'write_checkpoint',
]
