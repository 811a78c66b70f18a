//! Concentration analysis for sequences of finite weighted point clouds, and a
//! profile decomposition for grid-sampled Sobolev functions built on top of it.
//!
//! The crate is organized bottom-up:
//!
//! - [`measures`] — weighted point clouds treated as finite positive measures
//!   on `R^N`, with ball restriction and CSV interchange.
//! - [`concfun`] — concentration functions `q(t) = sup_x mu(B(x, t))` over a
//!   radius grid, tail-based limit profiles, diagonal scale selection, and a
//!   Helly-type convergent-subsequence search.
//! - [`extraction`] — the vanishing / concentration / dichotomy trichotomy and
//!   iterative extraction of concentrating bubbles with mass accounting.
//! - [`sobolev`] — grid functions, gradient densities, a local-uniform-mass
//!   interpolation inequality, smooth cutoff partitions, and the profile
//!   decomposition of bounded function families.
//! - [`synth`] — deterministic seeded generators for all fixture families.
//! - [`io`] — CSV / JSON / binary grid-function file formats.
//!
//! Everything is deterministic: the same inputs and seeds produce bitwise
//! identical results, including serialized reports.

pub mod concfun;
pub mod error;
pub mod extraction;
pub mod io;
pub mod measures;
pub mod sobolev;
pub mod synth;

pub use error::{Error, Result};
