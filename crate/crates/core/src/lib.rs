//! Proximity networks over Lagrangian trajectory ensembles: construction,
//! local network measures, FTLE fields, analytic degree estimates and
//! diffusion-map classification.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classify;
pub mod ensemble;
pub mod error;
pub mod flows;
pub mod linalg;
pub mod measures;
pub mod netbuild;
pub mod rng;
pub mod theory;

pub use classify::{DiffusionParams, EmbeddingCloud};
pub use ensemble::{TrajectoryEnsemble, ValidationReport};
pub use error::{Error, Result};
pub use flows::{FundamentalPath, GridSpec, ScalarField, SingularHistory};
pub use measures::NodeMeasureTable;
pub use netbuild::{AdjacencyMatrix, SliceIndex};
