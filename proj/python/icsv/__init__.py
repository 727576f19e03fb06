"""Connectivity checking for segmented IC images.

Thin Python layer over the C++ core: component labeling, extension
features, synthetic layout generation, reconstruction differencing and
the pipeline entry points (synth / train / detect / eval).
"""

from icsv._core import (
    IcsvError,
    Layout,
    Model,
    class_weights,
    classify_patches,
    diff_images,
    encode_variant,
    encode_wv,
    estimate_vwb,
    gen_layout,
    h_extension,
    inject_via_errors,
    inject_wire_errors,
    label_components,
    load_checkpoint,
    reconstruct,
    render_sem,
    run_detect,
    run_eval,
    run_synth,
    run_train_via,
    run_train_wire,
    v_extension,
)

__all__ = [
    "IcsvError",
    "Layout",
    "Model",
    "class_weights",
    "classify_patches",
    "diff_images",
    "encode_variant",
    "encode_wv",
    "estimate_vwb",
    "gen_layout",
    "h_extension",
    "inject_via_errors",
    "inject_wire_errors",
    "label_components",
    "load_checkpoint",
    "reconstruct",
    "render_sem",
    "run_detect",
    "run_eval",
    "run_synth",
    "run_train_via",
    "run_train_wire",
    "v_extension",
]
