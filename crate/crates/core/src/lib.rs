//! Adaptive voter model toolkit.
//!
//! Three descriptions of the same coevolving network, from most to least
//! detailed:
//!
//! * [`abm`]: the stochastic link-update simulation on an Erdős–Rényi substrate
//!   built by [`graph`].
//! * [`moment_ode`]: the truncated active-neighbourhood system for the densities
//!   `A[k][l]` of opinion-A nodes with `k` inert and `l` active links.
//! * [`genfunc`]: the generating function `Q(x, y, t) = Σ A[k][l] x^k y^l`, solved
//!   in closed form along its characteristics.
//!
//! [`experiments`] drives all three and renders the comparisons as CSV.

pub mod abm;
pub mod error;
pub mod experiments;
pub mod genfunc;
pub mod graph;
pub mod grid;
pub mod moment_ode;
pub mod series;

pub use error::{Error, Result};
pub use genfunc::{AnalyticSolution, CharacteristicFlow, GenFuncPoint};
pub use graph::{Graph, Opinion, OpinionState};
pub use grid::AklGrid;
pub use moment_ode::{ClosureFactors, OdeConfig, OdeMode};
pub use series::{Source, TimeSeries};

/// Below this mean active degree a trajectory is considered fragmented.
pub const FRAGMENTATION_GAMMA: f64 = 1e-9;
