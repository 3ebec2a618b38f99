//! Numerical laboratory for random walks on homogeneous spaces: Lie structure,
//! Cartan projections, Grassmannian geometry, submodular intersection bounds,
//! dyadic multislicing, the modular surface, and a rank certificate for
//! non-transversality in `so(q)`.
//!
//! The linear-algebra core is generic over the scalar ([`Real`]: `f32`, `f64`);
//! exact structural checks use rationals; Monte-Carlo code runs in `f64`.

pub mod cartan;
pub mod error;
pub mod grassmannian;
pub mod lie;
pub mod linalg;
pub mod modular;
pub mod multislicing;
pub mod rng;
pub mod scalar;
pub mod so_transversality;
pub mod submodular;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Subspace64 = grassmannian::Subspace<f64>;
pub type Subspace32 = grassmannian::Subspace<f32>;
pub type Flag64 = grassmannian::Flag<f64>;
pub type LieAlgebra64 = lie::LieAlgebraSpec<f64>;
pub type LieAlgebra32 = lie::LieAlgebraSpec<f32>;
pub type CartanTriple64 = cartan::CartanTriple<f64>;
