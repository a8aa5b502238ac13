//! Overlay requests and the layout-with-styles view shared by the HTTP
//! service and the command line.

use serde::{Deserialize, Serialize};

use pednet_core::genotype::similarity_to_all;
use pednet_core::io::DataBundle;
use pednet_core::layout::{LayoutEdge, LayoutNodeKind};
use pednet_core::overlay::{
    merge_phenotypes, size_nodes, CollapsePolicy, LegendEntry, OverlayError, SizeMode, NEUTRAL_FILL,
};
use pednet_core::{GenotypeError, Layout, LineId, OverlaySpec, Rgb, SizeRange, UsageStats};

/// Radius of every line when no size mode is chosen.
pub const DEFAULT_NODE_SIZE: f64 = 6.0;

/// Cut-off applied when a similarity overlay gives none.
pub const DEFAULT_CUTOFF: f64 = 0.45;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityOverlay {
    pub base: LineId,
    #[serde(default)]
    pub cutoff: Option<f64>,
}

/// What to color and size nodes by. Traits and similarity are exclusive
/// fill sources; similarity wins when both are set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlayRequest {
    #[serde(default)]
    pub traits: Vec<String>,
    #[serde(default)]
    pub similarity: Option<SimilarityOverlay>,
    #[serde(default)]
    pub size_by: Option<SizeMode>,
    #[serde(default)]
    pub policy: CollapsePolicy,
}

#[derive(Debug)]
pub enum OverlayFailure {
    Overlay(OverlayError),
    NoGenotypes,
    Genotype(GenotypeError),
    InvalidCutoff(f64),
}

pub fn build_overlay(
    bundle: &DataBundle,
    stats: &UsageStats,
    req: &OverlayRequest,
) -> Result<OverlaySpec, OverlayFailure> {
    let ids: Vec<LineId> = bundle.net.lines().iter().map(|l| l.id.clone()).collect();
    let mut spec = OverlaySpec::uniform(ids.iter(), DEFAULT_NODE_SIZE);
    if let Some(mode) = req.size_by {
        let sizes = size_nodes(stats, mode, SizeRange::default()).map_err(OverlayFailure::Overlay)?;
        spec.apply_sizes(&sizes);
    }
    if let Some(sim) = &req.similarity {
        let cutoff = sim.cutoff.unwrap_or(DEFAULT_CUTOFF);
        if !(0.0..=1.0).contains(&cutoff) {
            return Err(OverlayFailure::InvalidCutoff(cutoff));
        }
        let matrix = bundle.matrix.as_ref().ok_or(OverlayFailure::NoGenotypes)?;
        let profile = similarity_to_all::<f64>(matrix, &sim.base).map_err(OverlayFailure::Genotype)?;
        spec.apply_similarity(&profile.scores(), cutoff);
    } else if !req.traits.is_empty() {
        let table = bundle.phenotypes.clone().unwrap_or_default();
        let merged = merge_phenotypes(&table, &bundle.traits, &req.traits, &ids, req.policy)
            .map_err(OverlayFailure::Overlay)?;
        spec.apply_merged(&merged);
    }
    Ok(spec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewNode {
    pub id: String,
    #[serde(flatten)]
    pub kind: LayoutNodeKind,
    pub x: f64,
    pub y: f64,
    pub layer: u32,
    /// Radius; absent on dummy nodes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<Rgb>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub highlight: bool,
}

/// Layout geometry with the overlay styles applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutView {
    pub nodes: Vec<ViewNode>,
    pub edges: Vec<LayoutEdge<f64>>,
    pub layer_count: u32,
    pub crossing_count: u64,
    pub initial_crossing_count: u64,
    pub legend: Vec<LegendEntry>,
}

pub fn layout_view(layout: &Layout, overlay: &OverlaySpec) -> LayoutView {
    let nodes = layout
        .nodes
        .iter()
        .map(|n| {
            let style = match &n.kind {
                LayoutNodeKind::Line { line } => overlay.nodes.get(line),
                LayoutNodeKind::Dummy { .. } => None,
            };
            let is_line = matches!(n.kind, LayoutNodeKind::Line { .. });
            ViewNode {
                id: n.id.clone(),
                kind: n.kind.clone(),
                x: n.x,
                y: n.y,
                layer: n.layer,
                size: style.map(|s| s.size).or(is_line.then_some(DEFAULT_NODE_SIZE)),
                color: is_line.then(|| style.and_then(|s| s.fill).unwrap_or(NEUTRAL_FILL)),
                highlight: style.is_some_and(|s| s.highlight),
            }
        })
        .collect();
    LayoutView {
        nodes,
        edges: layout.edges.clone(),
        layer_count: layout.layer_count,
        crossing_count: layout.crossing_count,
        initial_crossing_count: layout.initial_crossing_count,
        legend: overlay.legend.clone(),
    }
}
