//! Certificates for polynomial ideal and module membership.
//!
//! Two independent routes produce cofactors `Q_i` with `Σ F_i Q_i = Φ`:
//!
//! * [`certsolver`] decides membership at a degree bound `ρ` by exact
//!   linear algebra over the Gaussian rationals, and verifies certificates;
//! * [`quad`] evaluates an explicit division integral on projective space
//!   (weights built from [`hefer`] divided differences and the Koszul
//!   section of the generators, see [`projkernel`]) by numerical quadrature.
//!
//! [`bounds`] supplies the degree bounds `ρ` both routes are run at.

pub mod bounds;
pub mod certsolver;
pub mod format;
pub mod hefer;
pub mod polyring;
pub mod projkernel;
pub mod quad;

pub use bounds::{BoundReport, SystemProfile, Theorem};
pub use certsolver::{Certificate, MembershipProblem, Outcome};
pub use hefer::HeferTable;
pub use polyring::{GaussRational, Monomial, NumPoly, Poly};
