"""Fourth-order compact solver for coupled space-fractional Ginzburg-Landau equations."""

__version__ = "0.1.0"

from .coeffs import (  # noqa: E402
    CoeffTable,
    ExpansionCoeffs,
    GenFnParams,
    expansion_coeffs,
    g2_coeffs,
    g2_coeffs_direct,
    g4_coeffs,
    gen_fn_params,
    symbol_functions,
)
from .errors import (  # noqa: E402
    ConfigError,
    ContractError,
    DomainError,
    InputError,
    LossOfPrecisionWarning,
    NonConvergenceError,
)
from .norms import GridFunction, frac_seminorm, gn_probe, norm_l2h, norm_lph  # noqa: E402
from .operators import (  # noqa: E402
    DiscreteOperator,
    Grid1D,
    PolyOracle,
    apply_B,
    assemble,
    frac_laplacian,
    poly_exact_frac_laplacian,
)
from .solver import FieldPair, ModelParams, init_fields, run, step  # noqa: E402

__all__ = [
    "__version__",
    "CoeffTable",
    "ExpansionCoeffs",
    "GenFnParams",
    "expansion_coeffs",
    "g2_coeffs",
    "g2_coeffs_direct",
    "g4_coeffs",
    "gen_fn_params",
    "symbol_functions",
    "ConfigError",
    "ContractError",
    "DomainError",
    "InputError",
    "LossOfPrecisionWarning",
    "NonConvergenceError",
    "GridFunction",
    "frac_seminorm",
    "gn_probe",
    "norm_l2h",
    "norm_lph",
    "DiscreteOperator",
    "Grid1D",
    "PolyOracle",
    "apply_B",
    "assemble",
    "frac_laplacian",
    "poly_exact_frac_laplacian",
    "FieldPair",
    "ModelParams",
    "init_fields",
    "run",
    "step",
]
