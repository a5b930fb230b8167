"""dnet: variation calculus, path-sampling sparsification, and bound calculators
for deep networks with ramp activations and nonnegative sign-doubled weights.

The package splits into:

* :mod:`dnet.network`   - the network type, evaluation, and the path-tree oracle;
* :mod:`dnet.variation` - variation quantities, rescalings, matrix-norm suite;
* :mod:`dnet.sampler`   - normalized Markov path measure, sampling, sparse covers;
* :mod:`dnet.bounds`    - closed-form cardinality/entropy/risk/complexity bounds;
* :mod:`dnet.families`  - structured weight families with known average variations;
* :mod:`dnet.packing`   - lattice + constant-weight-code packing lower bounds;
* :mod:`dnet.harness`   - reproducible certification sweeps and selection demo;
* :mod:`dnet.cli`       - the ``dnet`` command.
"""

from .errors import (
    BoundViolationError,
    DegenerateMeasureError,
    ResourceLimitError,
    StructureError,
    ValidationError,
)
from .network import (
    RampNetwork,
    evaluate,
    evaluate_batch,
    evaluate_unravelled,
    load_network,
    ramp_vector,
    save_network,
    sign_double,
)
from .sampler import (
    ApproximationBounds,
    MarkovMeasure,
    PathCounts,
    SparseCoverElement,
    empirical_error,
    enumerate_cover_elements,
    normalize,
    reconstruct,
    refined_bound,
    sample_paths,
)
from .variation import (
    VariationSummary,
    average_variation,
    full_variation,
    reduced_input_variations,
    rescale_canonical,
    rescale_global,
    rescale_per_layer,
    subnetwork_variations,
)

__version__ = "0.1.0"
