//! Simulation and algorithm library for semantic-communication-enabled LEO
//! satellite networks.
//!
//! The pipeline: [`geometry`] synthesizes a constellation and its contact
//! plan, [`temporal`] discretizes the plan into service windows with one
//! snapshot graph each, [`routing`] places codecs and routes applications per
//! snapshot, [`deployment`] decides which AI satellites host which models,
//! and [`scenario`] runs the traditional-versus-semantic comparison.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deployment;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod temporal;
pub mod types;

pub use error::{Error, Result};
pub use geometry::{ConstellationSpec, Contact, ContactPlan, GroundSite, Horizon, LinkKind, VisibilityRules};
pub use routing::{
    Application, CaseType, CompressionProfile, Method, Objective, RoutePlan, Stage, Unroutable,
    UnroutableReason,
};
pub use temporal::{DiscretizationConfig, SnapshotGraph, SnapshotLink, TimeWindow};
pub use types::{KnowledgeBaseCatalog, ModelRole, NodeId, NodeKind, NodeSpec};
