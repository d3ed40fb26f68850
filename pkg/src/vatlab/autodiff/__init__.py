"""Minimal reverse-mode autodiff, Adam, and parameter persistence."""

from vatlab.autodiff.engine import (
    NonFiniteError,
    ShapeError,
    Tape,
    Tensor,
    add,
    affine,
    backward,
    columns,
    concat,
    conv2d,
    conv_output_size,
    flatten,
    group_norm,
    index,
    gru_cell,
    mean,
    mse,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    square,
    stack,
    sub,
    sum_all,
    tanh,
)
from vatlab.autodiff.params import (
    AdamState,
    ParamFileError,
    ParamSet,
    adam_step,
    cast_params,
    copy_params,
    decode_params,
    encode_params,
    load_params,
    param_count,
    params_equal,
    save_bundle,
    save_params,
    soft_update,
    split_bundle,
)
