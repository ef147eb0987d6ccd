//! Numerical laboratory for U(n)-invariant Kähler metrics on Calabi's twisted
//! bundles and their Kähler–Ricci flow, reduced to one radial variable.

pub mod analysis;
pub mod calabi;
pub mod cli;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod profile;
pub mod quadrature;

pub use analysis::{Certificate, MixedSignReport, RateComparison};
pub use calabi::{ExpansionEnd, ExpansionFit, ExtensionVerdict};
pub use error::{Error, Result};
pub use flow::{FlowSnapshot, FlowSolver, FlowState, SolverConfig};
pub use geometry::{HermitianForm, PointCoordinates, RicciEigenpair};
pub use profile::{ProfileMode, ProfileParams, ProfileSample, RadialProfile};
