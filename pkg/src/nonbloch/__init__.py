"""Non-Bloch band theory for one-dimensional tight-binding chains."""

__version__ = "0.1.0"

from .bloch import (  # noqa: E402
    BlochPoint,
    bz_intersection_period,
    closed_form_bloch,
    find_bloch_points,
    kappa_order,
    saddle_order,
)
from .errors import NonBlochError  # noqa: E402
from .gbz import detect_cusps, gbz_finite_size, gbz_sweep  # noqa: E402
from .model import (  # noqa: E402
    DisorderSpec,
    LaurentPolynomial,
    SingleBandModel,
    TwoBandModel,
    build_chain,
    load_model,
    single_band,
    ssh_model,
)
from .scaling import (  # noqa: E402
    disorder_series,
    dos_exponent,
    fit_power_law,
    periodicity_scan,
    scaling_series,
    select_level,
)
from .spectral import dense_eig, obc_spectrum  # noqa: E402
from .verify import boundary_zeros, pbc_consistency, run_checks  # noqa: E402

__all__ = [
    "BlochPoint",
    "DisorderSpec",
    "LaurentPolynomial",
    "NonBlochError",
    "SingleBandModel",
    "TwoBandModel",
    "boundary_zeros",
    "build_chain",
    "bz_intersection_period",
    "closed_form_bloch",
    "dense_eig",
    "detect_cusps",
    "disorder_series",
    "dos_exponent",
    "find_bloch_points",
    "fit_power_law",
    "gbz_finite_size",
    "gbz_sweep",
    "kappa_order",
    "load_model",
    "obc_spectrum",
    "pbc_consistency",
    "periodicity_scan",
    "run_checks",
    "saddle_order",
    "scaling_series",
    "select_level",
    "single_band",
    "ssh_model",
]
