"""Owen's T function and the bivariate normal distribution from gamma-weighted series."""

__version__ = "0.1.0"

from .bvn import (
    critical_split,
    decompose,
    density,
    l_complement,
    owen5_transform_identity,
    phi2,
    phi2_h0,
    phi2_unified,
)
from .numkernel import (
    BINARY64,
    MPReal,
    arctan_arcsin_series,
    arctan_euler,
    mp_context,
    reg_gamma_half_seq,
    reg_gamma_q_seq,
    std_normal_cdf,
)
from .owent import (
    EvalReport,
    NonConvergenceError,
    OwenParams,
    SeriesVariant,
    owen_t,
    owen_t_alternating,
    owen_t_batch,
    owen_u,
    std_normal_cdf_via_series,
    truncation_bound,
)
from .tetrachoric import owen_t_tetrachoric, phi2_tetrachoric_h0, phi2_tetrachoric_xy

__all__ = [
    "BINARY64",
    "EvalReport",
    "MPReal",
    "NonConvergenceError",
    "OwenParams",
    "SeriesVariant",
    "arctan_arcsin_series",
    "arctan_euler",
    "critical_split",
    "decompose",
    "density",
    "l_complement",
    "mp_context",
    "owen5_transform_identity",
    "owen_t",
    "owen_t_alternating",
    "owen_t_batch",
    "owen_t_tetrachoric",
    "owen_u",
    "phi2",
    "phi2_h0",
    "phi2_tetrachoric_h0",
    "phi2_tetrachoric_xy",
    "phi2_unified",
    "reg_gamma_half_seq",
    "reg_gamma_q_seq",
    "std_normal_cdf",
    "std_normal_cdf_via_series",
    "truncation_bound",
]
