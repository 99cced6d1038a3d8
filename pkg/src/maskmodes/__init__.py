"""maskmodes: diffractive screens as unitary mode-coupling networks,
with exact Fock-state propagation, entanglement measures and the
order-by-order no-entanglement criterion for separable inputs."""

__version__ = "0.1.0"

from .diffraction import (
    CircularAperture,
    CosineGrating,
    CouplingMatrix,
    CustomSampled,
    ImpulseResponse,
    Pinhole,
    UnitaryMatrix,
    apply_impulse_response,
    complete_to_unitary,
    grating_block,
    inverse_design_response,
    mask_spectrum,
    overlap_unitary,
    plane_wave_coupling,
    unitarize,
)
from .entanglement import (
    Bipartition,
    EntanglementReport,
    entanglement_report,
    full_separability_scan,
    reduced_density,
)
from .fock import (
    Coherent,
    Fock,
    InputStateSpec,
    MultimodeFockState,
    SqueezedVacuum,
    Vacuum,
    apply_unitary,
    build_input_state,
    state_fidelity,
    two_mode_closed_form,
)
from .modes import (
    Grid2D,
    ModeBasis,
    PlaneWaveGrid,
    SampledField,
    apply_mask_to_field,
    field_overlap,
    hermite_gaussian_basis,
    laguerre_gaussian_basis,
    sample_field,
)
from .protocols import AtomPair, ScanResult, hom_coincidence, ifm_project, noon_fidelity_scan
from .separability import (
    BargmannInput,
    SeparabilityVerdict,
    check_no_entanglement,
    coupled_input_modes,
    covariance_separable,
    gaussian_covariance_propagate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
