"""Feature-free similarity of quantized data streams by information annihilation.

Streams are summed with anti-streams of one another; how far the residue is
from flat white noise measures how different their hidden sources are.
"""

from ._backend import BACKEND
from .annihilation import (
    DistanceMatrices,
    InsufficientData,
    SmashConfig,
    SmashResult,
    annihilation_efficiency,
    calibrate,
    depth_for_epsilon,
    distance_matrix,
    smash,
    zeta_hat,
)
from .pfsa import (
    Pfsa,
    add,
    invert,
    one_state,
    next_symbol_table,
    pseudo_copy,
    random_pfsa,
    sample,
    stationary_distribution,
    synchronous_compose,
    theta_distance,
    validate,
    zero_model,
)
from .quantizer import (
    Partition,
    SchemeScore,
    difference_series,
    evaluate_scheme,
    fit_max_entropy_partition,
    quantize,
    select_alphabet_size,
)
from .stream_ops import fwn_stream, independent_copy, invert_stream, sum_streams
from .symbolic import (
    Alphabet,
    NGramCounts,
    SymbolStream,
    count_ngrams,
    symbolic_derivative,
    uniform_vector,
)

__version__ = "0.1.0"
