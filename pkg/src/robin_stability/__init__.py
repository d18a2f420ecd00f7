"""Quantitative stability of the second Robin eigenvalue for negative boundary parameter.

Analytic ball spectra, the explicit stability constants, star-shaped planar
domains with Fraenkel asymmetry, and a finite-element pipeline that checks
``lambda_2(B) - lambda_2(Omega) >= gamma A(Omega)**2`` numerically.
"""
from .ball_spectrum import (
    BallSpec,
    RadialEigenSolution,
    RadialProfile,
    ball_mode,
    lambda1_ball,
    lambda2_ball,
    lambda2_unit_ball,
    neumann_root,
    radial_g,
    radial_h,
)
from .errors import (
    AssemblyError,
    BracketError,
    ClusterError,
    DomainError,
    DomainFileError,
    InvalidArgumentError,
    MeshQualityError,
    OutOfRangeError,
    RobinStabilityError,
    SolverError,
)
from .geometry import StarDomain2D, disk, equivalent_ball, fraenkel_asymmetry, make_star_domain, volume
from .stability_constants import delta_constant, eta_constant, gamma_constant, keypoint_gap

__version__ = "0.1.0"
