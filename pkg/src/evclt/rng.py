"""Counter-based keyed random streams.

Every random quantity in the package is drawn from a Philox stream whose key
is derived from an integer tuple such as (seed, n, replicate, stream id).
The i-th raw output of a keyed stream is a pure function of (key, i), so
results do not depend on execution order or worker count, and prefixes are
stable: the first n draws of a stream never change when more are requested.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

# Stream identifiers. Fixed constants are part of the reproducibility
# contract; changing them changes every sampled value.
STREAM_EPS = 1
STREAM_DELTA = 2
STREAM_DESIGN = 3
STREAM_MC_EPS = 4
STREAM_MC_DELTA = 5

_INV_2_53 = 2.0 ** -53


_MASK_64 = (1 << 64) - 1


def keyed_bit_generator(key: Sequence[int]) -> np.random.Philox:
    """Philox bit generator keyed by an integer tuple.

    Components are reduced modulo 2^64 (SeedSequence rejects negatives, and
    config seeds are allowed to be any integer).
    """
    return np.random.Philox(np.random.SeedSequence([int(k) & _MASK_64 for k in key]))


def uniforms(key: Sequence[int], n: int) -> np.ndarray:
    """n uniforms on the open interval (0, 1) from the keyed stream.

    Uses the top 53 bits of each raw Philox output, offset by half an ulp so
    that 0 and 1 are never produced (inverse-CDF transforms stay finite).
    """
    raw = keyed_bit_generator(key).random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
