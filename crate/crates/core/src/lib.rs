//! Model-based community detection for time-evolving binary networks.
//!
//! Nodes are grouped by fitting a finite mixture of temporal exponential-family
//! random graph models: either a TERGM with one stability parameter per
//! community, or a separable STERGM with formation and persistence
//! parameters. Fitting uses a variational EM algorithm whose E-step maximizes
//! a minorizer of the lower bound through per-node quadratic programs on the
//! simplex, and whose M-step combines a closed-form update of the mixing
//! proportions with a line-searched Newton step for the dynamic parameters.
//! The number of communities is chosen with a conditional-likelihood BIC
//! (sandwich complexity) or a modified ICL.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod metrics;
pub mod models;
pub mod netseries;
pub mod selection;
pub mod simulate;
pub mod varem;

pub use error::{Error, Result};
pub use models::{ModelKind, ModelSpec, Params};
pub use netseries::{BlockTransitionCounts, NetworkSeries, SeriesFormat, Snapshot};
pub use varem::{fit, FitConfig, FitResult, VariationalState};
pub use metrics::{instability_stats, rand_index, rse, InstabilityReport};
pub use selection::{select, Selection, SelectionReport};
pub use simulate::{Preset, SimConfig};
