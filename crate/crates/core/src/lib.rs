//! Finite étale groupoids seen through their inverse quantal frames.
//!
//! The crate builds `O(G)` for finite discrete groupoids, treats groupoid
//! actions as Hilbert modules over it, and decides principality,
//! biprincipality and Morita equivalence by exhaustive computation.

pub mod bimodule;
pub mod bits;
pub mod catalog;
pub mod error;
pub mod groupoid;
pub mod locale;
pub mod morita;
pub mod qmodule;
pub mod quantale;
pub mod suites;
pub mod suplat;

pub use error::{Error, Result};
