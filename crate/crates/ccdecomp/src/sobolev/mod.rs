//! Grid-sampled functions on `R^N` and the Sobolev side of the analysis:
//! finite-difference gradients, concentration densities, a local-uniform-mass
//! interpolation inequality, smooth cutoff partitions, and the profile
//! decomposition of bounded function families.
//!
//! Functions are samples on a uniform axis-aligned grid and are extended by
//! zero outside it. All integrals are Riemann sums `sum(v) * h^N`.

mod cutoff;
mod density;
mod grid;
mod profile;

pub use cutoff::{cutoff_partition, cutoff_profile, CutoffPartition};
pub use density::{
    density_rho, lemma41_check, local_uniform_mass, Lemma41Report, Lemma41Row, SeriesParams,
    SobolevParams,
};
pub use grid::{gradient, gradient_magnitude, GridFunction, GridGeometry};
pub use profile::{
    norm_expansion_check, profile_extract, remainder_split, ExpansionResiduals, NormTable,
    ProfileDecomposition, ProfileDiagnostics,
};
