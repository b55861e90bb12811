"""Hamming-space LSH, adaptive false-negative attacks and robustified variants."""

from .adversary import (
    AttackConfig,
    AttackOutcome,
    fast_walk,
    find_isolated_origin,
    random_baseline,
    run_walk,
    simple_walk,
    verify_false_negative,
    walk_until_success,
)
from .datasets import (
    Dataset,
    gen_random,
    gen_sparse_random,
    gen_zero,
    load_points,
    one_hot_encode,
    save_points,
    threshold_binarize,
)
from .defenses import DpIndex, ResampledIndex, build_dp, build_resampled
from .hamming import as_point, child_rng, distance, make_rng
from .index import ConcatHash, LshIndex, LshParams, build_index, derive_params

__version__ = "0.1.0"
