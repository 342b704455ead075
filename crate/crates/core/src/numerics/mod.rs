//! Dense numerical kernels shared by the solvers.

mod linalg;
mod lp;
mod roots;
mod special;

pub(crate) use linalg::{dot, solve_real};
pub use linalg::{hermitian_eig, psd_sqrt, CMatrix, EigenDecomposition};
pub use lp::{solve_lp, Constraint, LpProblem, LpSolution, LpStatus, Relation};
pub use roots::{find_min_root, maximize_unimodal};
pub use special::{bessel_i0, bessel_i0_scaled, lambert_w0, lambert_w0_of_exp};
