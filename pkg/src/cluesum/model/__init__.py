from .batch import Batch, PairFeatures, collate, prepare_document, prepare_pair
from .checkpoint import CheckpointError, load_checkpoint, read_checkpoint, save_checkpoint
from .config import ModelConfig
from .layers import gat_layer, sinusoidal_encoding
from .mixture import mix, mix_distribution, translation_gate, translation_matrix
from .network import ClueGraphSum, DecoderOutput, EncoderOutput

__all__ = [
    "Batch", "PairFeatures", "collate", "prepare_document", "prepare_pair",
    "CheckpointError", "load_checkpoint", "read_checkpoint", "save_checkpoint", "ModelConfig",
    "gat_layer", "sinusoidal_encoding", "mix", "mix_distribution", "translation_gate",
    "translation_matrix", "ClueGraphSum", "DecoderOutput", "EncoderOutput",
]
