//! Entropic c-functions and Rényi entropies of the Ising model from
//! non-equilibrium Monte Carlo in a replica geometry.
//!
//! The cut between subsystems is moved one column at a time; the work done
//! while ramping the couplings at the moving edge gives, through Jarzynski's
//! equality, the ratio of replica partition functions and hence the
//! increment of the Rényi entropy.

pub mod dynamics;
pub mod error;
pub mod fit;
pub mod jarzynski;
pub mod lattice;
pub mod observables;
pub mod oracle;
pub mod scan;
pub mod schedule;
pub mod special;

pub use error::{Error, Result};
