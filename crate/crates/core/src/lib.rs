//! Tile-constrained permutation models and most-informative projections for
//! interactive data exploration.

pub mod covariance;
pub mod error;
pub mod experiments;
pub mod ingestion;
pub mod plot;
pub mod projection;
pub mod request;
pub mod rng;
pub mod sampler;
pub mod selection;
pub mod session;
pub mod synthetic;
pub mod tiling;

pub use covariance::{center, hypothesis_covariances, tiling_covariance, CenteredData, CovariancePair};
pub use error::{Error, Result};
pub use ingestion::{load_csv, DataMatrix, LoadOptions, Loaded, Manifest};
pub use projection::{most_informative_directions, whiten, ProjectionResult, Whitener};
pub use request::{HypothesisSpec, RowSpec, SelectionSpec};
pub use sampler::{sample_dataset, sample_permutation, SampleConfig};
pub use selection::{selection_to_tile, AttributeReport, PointSelection};
pub use session::{replay, Event, Session, SessionDocument, ViewState};
pub use tiling::{HypothesisTilings, PermutationVector, Tile, TileMap};
