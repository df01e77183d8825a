//! Grid-sampled fields, finite-difference calculus, and test functions.

pub mod calculus;
pub mod grid;
pub mod io;
pub mod scalar;
pub mod testfn;

pub use calculus::{
    cj_norm, cj_norm_sym, derivative, grad_sup_norm, gradient, holder_seminorm, matrix_curl,
    mixed_derivative, second_derivative, Axis,
};
pub use grid::{Grid2D, Rect};
pub use scalar::{ScalarField2D, SymMatrixField2D, VectorField2D};
pub use testfn::{
    bump_profile_mass, SmoothedDiskIndicator, SmoothedRectIndicator, SmoothStep, TestField,
    TestFunction,
};
