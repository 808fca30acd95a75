__version__ = "0.1.0"

from .linalg import CMatrix, TakagiFactors, hs_norm, op_norm, random_matrix, random_pair, takagi
from .haagerup import ElemOp, NormCertificate, Term, cb_norm_oracle, certify, haagerup_norm, op_norm_estimate
from .jordan import jordan_op, reduce_to_canonical, symmetrize, verify_lower_bounds
from .formulas import (
    cb_symmetric_formula,
    diag_commuting_formula,
    normal_commuting_formula,
    selfadjoint_cb_formula,
)
from .geometry import EllipseModel, ellipse_model, hyperbola_check, jnr_sample
