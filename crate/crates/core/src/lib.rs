//! Segmentation of the RPE and the choroid–sclera interface in EDI-OCT
//! B-scans.
//!
//! Scans are mapped to neutrosophic space, the RPE is traced as a
//! minimum-weight path through a gradient-weighted pixel graph, the scan is
//! flattened along it, and the choroid boundary is traced on the enhanced
//! falsity set below. See [`pipeline::segment`].

pub mod error;
pub mod filters;
pub mod graph_segment;
pub mod neutrosophic;
pub mod phantom;
pub mod pipeline;
pub mod scan_io;

pub use error::{Error, Result};
pub use filters::{FlattenMap, HomomorphicParams};
pub use graph_segment::{Boundary, Layer, WeightConfig, WeightMode};
pub use neutrosophic::{NeutroConfig, NeutrosophicImage};
pub use pipeline::{
    segment, ErrorReport, Flag, PipelineConfig, SegmentationResult, ThicknessProfile, MM_PER_PX,
};
pub use scan_io::{GrayImage, LabelSet, Labels, Point};
