"""Secure arithmetic computation over black-box rings."""
from .ring import (Abort, Bottom, RingOracle, make_matrix_family, make_prime_field,
                   make_zm_family, parse_ring)
from .harness import Session, capture_view, run_protocol
from .pdtshr import (Ideal, Rho, ShareOutcome, Sigma, Tau, Wrapped, beaver_wrap,
                     degree2_share, multiparty_product_share, rho_ot, sigma_ot, tau_ot)
from .homenc import Psi, Theta, psi_matrix, psi_protocol, theta_protocol
from .circuit import ArithCircuit, eval_plain, eval_shared, parse_circuit
from .packed import PackedParams, run_outer_protocol

__all__ = [
    "Abort", "Bottom", "RingOracle", "make_matrix_family", "make_prime_field",
    "make_zm_family", "parse_ring", "Session", "capture_view", "run_protocol",
    "Ideal", "Rho", "ShareOutcome", "Sigma", "Tau", "Wrapped", "beaver_wrap",
    "degree2_share", "multiparty_product_share", "rho_ot", "sigma_ot", "tau_ot",
    "Psi", "Theta", "psi_matrix", "psi_protocol", "theta_protocol",
    "ArithCircuit", "eval_plain", "eval_shared", "parse_circuit",
    "PackedParams", "run_outer_protocol",
]
