//! Numerical operator calculus on generalized Segal-Bargmann spaces `H_Φ`.
//!
//! A space is fixed by an admissible quadratic phase
//! `φ(X, y) = ½⟨X, AX⟩ + ⟨X, By⟩ + ½⟨y, Cy⟩` together with a semiclassical
//! parameter `h`. Everything downstream works in the orthonormal monomial
//! basis `u_α`, so operators on `H_Φ` become (truncated) complex matrices:
//!
//! - [`geometry`]: phase validation and the derived weight `Φ`, polarization `Ψ`,
//!   the canonical map `κ_T` and the normalization constants.
//! - [`quadrature`]: deterministic tensor Gauss-Hermite (and Gauss-Laguerre) rules.
//! - [`basis`]: graded multi-indices, `u_α` evaluation, Gram and Galerkin matrices.
//! - [`symbols`]: plane-wave and callable symbols with the `Q`, `{·,·}`, `Δ`, `Q₁` calculus.
//! - [`heat`]: the symbol heat flow `e^{thΔ}`, polarization and the Wiener-algebra diagnostic.
//! - [`operators`]: Berezin-Toeplitz and Weyl matrices, norms, bound and deformation checks.
//! - [`bargmann`]: the transform `T`, its adjoint, the projector and the Egorov-Guillemin check.

pub mod bargmann;
pub mod basis;
pub mod error;
pub mod geometry;
pub mod heat;
mod linalg;
pub mod operators;
pub mod quadrature;
pub mod symbols;

pub use error::{Error, Result};
pub use geometry::{PhaseMatrices, SpaceContext};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used throughout the crate.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector used throughout the crate.
pub type CVec = nalgebra::DVector<C64>;
