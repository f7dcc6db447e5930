//! Max filtering for finite subgroups of `O(d)`.
//!
//! Groups and orbits live in [`group`], the max filter and quotient metric in
//! [`quotient`], Voronoi cell geometry in [`voronoi`], Lipschitz bounds in
//! [`bounds`] and kernel audits in [`kernel`].

pub mod bounds;
pub mod error;
pub mod group;
pub mod kernel;
pub mod linalg;
mod lp;
pub mod quotient;
pub mod sampling;
pub mod tol;
pub mod voronoi;

pub use error::{Error, Result};
pub use group::{build_family, orbit_of, Family, FiniteGroup, GroupElement, Orbit};
pub use quotient::{apply_bank, max_filter, quotient_distance, MaxFilterBank};
pub use tol::TolerancePolicy;
