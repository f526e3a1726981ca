//! Grid-based point-cloud reduction with an occupancy threshold (RCLA),
//! persistence diagrams for the reduced clouds, and the probabilistic and
//! data-driven tools for choosing the grid side δ and threshold k.
//!
//! ```
//! use rcla::{rcla_reduce, PointCloud, ReductionParams, RepresentativeMode};
//!
//! let cloud = PointCloud::from_rows(&[[0.1, 0.1], [0.2, 0.2], [0.9, 0.9]]).unwrap();
//! let params = ReductionParams::new(0.5, 2, RepresentativeMode::Center).unwrap();
//! let reduced = rcla_reduce(&cloud, &params).unwrap();
//! assert_eq!(reduced.points.len(), 1);
//! ```

pub mod autoselect;
pub mod bottleneck;
pub mod cloud;
pub mod error;
pub mod experiment;
pub mod features;
pub mod grid;
pub mod io;
pub mod persistence;
pub mod poisson;
pub mod reduction;
pub mod special;
pub mod synth;
mod union_find;

pub use autoselect::{auto_select, AutoSelectConfig, AutoSelectResult, CandidateReport};
pub use bottleneck::{bottleneck_distance, bottleneck_matching, Matching};
pub use cloud::{euclidean, PointCloud};
pub use error::{Error, Result};
pub use experiment::{run_comparison, Dataset, ExperimentReport, ExperimentSpec, Variant};
pub use features::{diagram_features, FeatureName, FeatureVector};
pub use grid::{build_grid, cell_center, cell_of, histogram, CellKey, GridSpec};
pub use persistence::{
    default_max_scale, distance_matrix, vr_persistence, vr_persistence_scaled, DistanceMatrix,
    PersistenceDiagram, Scale,
};
pub use poisson::{stability_certificate, NoiseModel, ShapeOccupancy, StabilityCertificate};
pub use reduction::{cla_reduce, rcla_reduce, rcla_reduce_on_grid, ReducedCloud, ReductionParams, RepresentativeMode};
pub use synth::{AxisBox, RngSeed};
