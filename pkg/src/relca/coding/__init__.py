"""Block codes: Reed-Solomon over GF(2^l), hierarchical codes and the amplifier frame."""

from .rs import PRESETS, RSCode, RSError, preset
from .hier import HierSystem, hier_decode, hier_encode, site_map
from .frame import FrameParams, brc_amp_preset, frame_check

__all__ = ["PRESETS", "RSCode", "RSError", "preset", "HierSystem", "hier_decode",
           "hier_encode", "site_map", "FrameParams", "brc_amp_preset", "frame_check"]
