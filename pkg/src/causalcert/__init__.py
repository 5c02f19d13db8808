"""causalcert: process matrices, distributed POVMs, and SDP certification of causal nonseparability."""

from .hilbert import (
    SpaceLabel,
    LabeledOperator,
    LabeledVector,
    operator,
    vector,
    identity,
    tensor,
    partial_trace,
    partial_transpose,
    trace_replace,
    link_product,
    max_entangled,
    psd_check,
)
from .processes import (
    ScenarioKind,
    ScenarioParams,
    ProcessMatrix,
    validate_process,
    process_report,
    quantum_switch,
    depolarized_switch,
    feix_process,
    depolarized_feix,
    white_noise_process,
    certify_process,
)
from .instruments import (
    Instrument,
    POVM,
    QuantumInputSet,
    validate_instrument,
    teleport_instruments,
    qs_instruments,
    feix_instruments,
    classical_embedding,
    mdci_check,
    tomo_input_set,
)
from .dpovm import (
    DPOVM,
    Assemblage,
    induce_dpovm,
    probability,
    nosig_marginals,
    witness_value_from_correlations,
    ttu_assemblage,
    tuu_assemblage,
    realize_separable_dpovm,
)
from .certify import (
    CertificationResult,
    WitnessFamily,
    certify,
    apply_witness,
    verify_witness,
)
from .cones import ConeSpec
from .scan import threshold_scan

__version__ = "0.1.0"
