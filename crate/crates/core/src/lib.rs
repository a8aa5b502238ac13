//! Engine for exploring plant pedigree nets: validated DAGs of lines,
//! cross-notation parsing, layered layout, phenotype overlays, SNP genotype
//! checks and the bundle file formats.
//!
//! Geometry and scores are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, with `F32` variants where single precision is
//! useful.

pub mod genotype;
pub mod io;
pub mod layout;
pub mod notation;
pub mod overlay;
pub mod pedigree;
pub mod scalar;
pub mod synth;

pub use genotype::{AlleleCall, Base, ConsistencyReport, GenotypeError, GenotypeMatrix, MarkerMap};
pub use io::{load_bundle, save_bundle, DataBundle, IoError, SessionHistory};
pub use layout::{LayoutError, MAX_SWEEP_PASSES};
pub use notation::{CrossTree, Notation, ParseDiagnostic, ParseErrorKind};
pub use overlay::{PhenotypeTable, Rgb, TraitDescriptor, TraitKind};
pub use pedigree::{
    build_net, classify_lines, search_lines, usage_stats, Diagnostic, DiagnosticCode, LineClass,
    LineId, LineRecord, LineUsage, ParentRelation, PedigreeError, PedigreeNet, Role, Severity,
    Thresholds, UsageStats,
};
pub use scalar::Scalar;

pub type Layout = layout::Layout<f64>;
pub type LayoutF32 = layout::Layout<f32>;
pub type LayoutConfig = layout::LayoutConfig<f64>;
pub type LayoutConfigF32 = layout::LayoutConfig<f32>;
pub type LayoutNode = layout::LayoutNode<f64>;
pub type LayoutEdge = layout::LayoutEdge<f64>;
pub type OverlaySpec = overlay::OverlaySpec<f64>;
pub type OverlaySpecF32 = overlay::OverlaySpec<f32>;
pub type NodeStyle = overlay::NodeStyle<f64>;
pub type SizeRange = overlay::SizeRange<f64>;
pub type Similarity = genotype::Similarity<f64>;
pub type SimilarityF32 = genotype::Similarity<f32>;
pub type SimilarityEntry = genotype::SimilarityEntry<f64>;
pub type SimilarityProfile = genotype::SimilarityProfile<f64>;
pub type MatchHit = genotype::MatchHit<f64>;
pub type GenotypeStats = genotype::GenotypeStats<f64>;
