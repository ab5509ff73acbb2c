"""Pointwise verification of projective Finsler metrizability for sprays."""
from .errors import (AnnihilationError, ArityError, ConfigError, DegenerateRay, DimensionMismatch, DivisionByZero,
                     DomainError, HomogeneityError, MetricError, ParseError, SprayMetricError, StepFailure)
from .jets import Jet, jet_arith, jet_func
from .fieldspec import FieldDef, Point, eval_field, eval_field_jet, fd_oracle, load_field, parse_field
from .spray import (CurvatureData, SprayData, curvature, dyn_cov_deriv, homogeneity_residual, isotropy_residual,
                    normalize_semispray, projective_transform, spray_data)
from .metrizability import (ConditionReport, Entry, FieldTwoForm, HilbertForm, KahlerForm, Multiplier, OneForm,
                            TwoFormValue, bm_residuals, f_from_theta, helmholtz_residuals, hessian_of_scalar,
                            hilbert_oneform, kahler_lift, quadratic_form, quasi_definiteness, twoform_residuals)
from .dynamics import (AffineSubspace, JacobiChannel, Trajectory, integrate_geodesic, integrate_jacobi,
                       pairing_constancy, totally_geodesic_residual)
from .grassmann import GrassmannFrame, grassmann_frame, segre_checks
from .examples import (PathCoords, builtin_spray, circle_finsler, omega_path_spiral, pullback_check_spiral,
                       spiral_finsler, to_path_coords_spiral)

__version__ = "0.1.0"
