//! Discrete linear Hamiltonian systems with non-Hermitian coefficient
//! matrices, their adjoint systems, and the extension theory of the
//! associated linear relations, realized by exact finite-dimensional
//! linear algebra on finite integer intervals.
//!
//! The crate is organized along the pipeline
//!
//! 1. [`system`]: coefficient data, standing assumptions, window Gram
//!    matrices.
//! 2. [`dynamics`]: solution propagation, fundamental matrices,
//!    summation identities, variation of constants, patched boundary
//!    value problems.
//! 3. [`quotient`]: the weighted quotient space `L²_W` as a concrete
//!    finite-dimensional Hilbert space.
//! 4. [`relation`]: a general subspace calculus for linear relations
//!    (adjoints, Arens decomposition, deficiency indices, dual pairs).
//! 5. [`extension`], [`doubling`], [`halfline`]: maximal/minimal
//!    Hamiltonian relations, boundary-subspace extensions, the doubled
//!    formally self-adjoint system, and half-line truncation
//!    diagnostics.

pub mod dynamics;
pub mod doubling;
pub mod error;
pub mod extension;
pub mod halfline;
pub mod instances;
pub mod linalg;
pub mod quotient;
pub mod relation;
pub mod subspace;
pub mod system;
pub mod tol;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex vector used throughout.
pub type CVector = nalgebra::DVector<C64>;
