//! Covered wooded area (SAC) estimation for dehesa orthophotos.
//!
//! Pixels are clustered in RGB space with the Gustafson-Kessel algorithm
//! under Babuška's covariance conditioning, the greenest cluster is taken as
//! vegetation, and connected vegetation blobs are split into productive tree
//! crowns and shrubs by area. The crate also scores masks against expert
//! ground truth and maps cover percentages to livestock loads.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod evaluation;
pub mod raster;
pub mod render;
pub mod report;
pub mod segmentation;
pub mod stocking;
pub mod synthetic;

pub use clustering::{fit, ClusterError, ClusterModel, FitResult, FuzzyPartition, GkbParams};
pub use evaluation::{evaluate, MetricReport};
pub use raster::{BinaryMask, Class, GroundTruthMask, LabelMask, Orthophoto, WorldFile};
pub use report::RunReport;
pub use segmentation::{segment, SegmentationConfig, SegmentationOutput};
pub use stocking::StockingTable;
