"""Weyl and Berezin quantization for a particle in a variable magnetic field."""

__version__ = "0.1.0"

from .fields import (
    MagneticField,
    VectorPotential,
    GaugeFunction,
    SegmentRule,
    SimplexRule,
    flux_triangle,
    circulation,
    pentagon_flux,
    gauge_transform,
    poincare_potential,
    verify_potential,
)
from .grids import BoxGrid, PhaseGrid
from .phasespace import (
    Symbol,
    KernelFunction,
    partial_fourier,
    inverse_partial_fourier,
    norm_1_inf,
    poisson_bracket,
    symplectic_form,
)
from .weyl import (
    OperatorMatrix,
    operator_norm,
    rep_operator,
    weyl_op,
    magnetic_momentum,
    ccr_defect,
    twisted_conv,
    moyal_product,
)
from .berezin import (
    FiducialVector,
    CoherentFrame,
    coherent_vector,
    overlap_kernel,
    husimi,
    berezin_op,
    berezin_delta,
    berezin_p_expectation,
    sigma_map,
    ss_symbol,
    gauge_covariance_check,
)
from .bargmann import (
    BargmannSpace,
    bargmann_transform,
    bargmann_adjoint,
    toeplitz_op,
    covariant_symbol,
    berezin_transform,
)
from .strictq import (
    classical_product,
    kernel_bracket,
    phase_w,
    phase_lemma_check,
    rieffel_sweep,
    vonneumann_sweep,
    dirac_sweep,
    semiclassical_sweep,
    sigma_sweep,
    sweep_grids,
    momentum_coverage_points,
    SweepReport,
)
