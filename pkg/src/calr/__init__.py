"""Numerical laboratory for anomalous localized resonance in radially
layered quasistatic media: per-mode solves on doubly complementary
structures, loss sweeps with blow-up classification, explicit removal of
the resonant singular part, and end-to-end cloaking demonstrations."""

from .analysis import (
    DensityReport,
    PlasmonPair,
    RigidityReport,
    ThreeSpheresReport,
    density_residual,
    plasmon_medium,
    plasmon_pair,
    rigidity_check,
    three_spheres_check,
)
from .cloak import CloakReport, build_cloak, cloak_demo, cloak_summary
from .errors import (
    CalrError,
    NormalizationError,
    SolverError,
    ValidationError,
    VerificationFailure,
)
from .maps import ComposedMap, DilationMap, KelvinMap, compose, kelvin_map, pushforward
from .medium import (
    ComplementarityReport,
    ComplementaryStructure,
    Layer,
    LayeredMedium,
    build_doubly_complementary,
    s_delta,
    unit_profile,
    verify_complementarity,
)
from .profiles import (
    RadialProfile,
    constant_profile,
    power_profile,
    profile_from_callable,
    profile_from_expr,
)
from .radial import FundamentalPair, fundamental_pair, make_basis
from .resonance import (
    AgreementReport,
    ClassifierPolicy,
    CriticalRadiusResult,
    ExtendabilityReport,
    FarFieldReport,
    SweepRow,
    Verdict,
    classify,
    critical_radius,
    delta_half_h1_variation,
    delta_sweep,
    dichotomy_agreement,
    extendability_test,
    far_field_report,
    normalize,
    normalize_field,
    power,
    shell_window,
)
from .singularity import (
    AuxiliaryW,
    ReflectionPair,
    SingularPart,
    build_W_delta,
    reflect,
    remove_singularity,
)
from .solver import (
    Field,
    LayerGrid,
    ModeSystem,
    assemble_mode_system,
    solve_field,
    trace_norm_from_coeffs,
)
from .spectra import (
    ModeSpectrum,
    explicit_spectrum,
    geometric_spectrum,
    single_mode,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
