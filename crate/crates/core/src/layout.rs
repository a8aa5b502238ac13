//! Layered drawing of a pedigree net.
//!
//! The pipeline is longest-path layering, dummy chains for relations that
//! span several layers, barycenter crossing reduction and a single
//! median-alignment coordinate pass. Weakly connected components are laid
//! out independently and packed left to right, largest first.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pedigree::{LineId, PedigreeNet, Role};
use crate::scalar::Scalar;

/// Upper bound on full down+up barycenter passes.
pub const MAX_SWEEP_PASSES: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("pedigree contains a cycle")]
    CycleDetected,
    #[error("invalid layout configuration: {0}")]
    InvalidConfig(String),
}

/// Layer of every line, indexed like the net's lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerAssignment {
    pub layer: Vec<u32>,
}

impl LayerAssignment {
    pub fn layer_count(&self) -> u32 {
        self.layer.iter().max().map_or(0, |m| m + 1)
    }

    pub fn layer_of(&self, net: &PedigreeNet, id: &LineId) -> Option<u32> {
        net.index_of(id).map(|i| self.layer[i])
    }
}

/// Longest-path layering: roots sit on layer 0 and every other line one
/// layer below its deepest parent.
pub fn assign_layers(net: &PedigreeNet) -> Result<LayerAssignment, LayoutError> {
    if net.topological().len() != net.len() {
        return Err(LayoutError::CycleDetected);
    }
    let mut layer = vec![0u32; net.len()];
    for &v in net.topological() {
        for &r in net.parent_relations(v) {
            let (p, _) = net.relation_ends(r);
            layer[v] = layer[v].max(layer[p] + 1);
        }
    }
    Ok(LayerAssignment { layer })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// A line, by its index in the net.
    Line(usize),
    /// Step `step` (1-based) of the dummy chain routing relation `relation`.
    Dummy { relation: usize, step: u32 },
}

/// Proper layered graph: every segment joins adjacent layers.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredGraph {
    pub kinds: Vec<NodeKind>,
    pub layer_of: Vec<u32>,
    /// Node ids per layer, in drawing order.
    pub layers: Vec<Vec<usize>>,
    /// `(upper, lower)` node pairs on adjacent layers.
    pub segments: Vec<(usize, usize)>,
    /// Per relation: parent node, dummies, child node.
    pub chains: Vec<Vec<usize>>,
    /// Tie-break rank per node.
    tie: Vec<usize>,
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
}

impl LayeredGraph {
    /// A graph of anonymous nodes with the given layer sizes. Segments refer
    /// to nodes numbered layer by layer; initial order and tie-break follow
    /// that numbering.
    pub fn from_parts(layer_sizes: &[usize], segments: &[(usize, usize)]) -> Self {
        let mut kinds = Vec::new();
        let mut layer_of = Vec::new();
        let mut layers = Vec::new();
        for (l, &size) in layer_sizes.iter().enumerate() {
            let start = kinds.len();
            for k in 0..size {
                kinds.push(NodeKind::Line(start + k));
                layer_of.push(l as u32);
            }
            layers.push((start..start + size).collect());
        }
        let tie = (0..kinds.len()).collect();
        let chains = segments.iter().map(|&(u, l)| vec![u, l]).collect();
        let mut g = LayeredGraph {
            kinds,
            layer_of,
            layers,
            segments: segments.to_vec(),
            chains,
            tie,
            up: Vec::new(),
            down: Vec::new(),
        };
        g.index();
        g
    }

    fn index(&mut self) {
        let n = self.kinds.len();
        self.up = vec![Vec::new(); n];
        self.down = vec![Vec::new(); n];
        for &(u, l) in &self.segments {
            self.down[u].push(l);
            self.up[l].push(u);
        }
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn dummy_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| matches!(k, NodeKind::Dummy { .. }))
            .count()
    }

    fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.kinds.len()];
        for layer in &self.layers {
            for (i, &v) in layer.iter().enumerate() {
                pos[v] = i;
            }
        }
        pos
    }

    /// Exact number of pairwise segment crossings between adjacent layers
    /// under the current order.
    pub fn crossings(&self) -> u64 {
        let pos = self.positions();
        let mut per_layer: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.layers.len()];
        for &(u, l) in &self.segments {
            per_layer[self.layer_of[u] as usize].push((pos[u], pos[l]));
        }
        per_layer
            .iter_mut()
            .enumerate()
            .map(|(i, segs)| {
                let width = self.layers.get(i + 1).map_or(0, Vec::len);
                count_inversions(segs, width)
            })
            .sum()
    }
}

/// Crossings among segments given as `(upper position, lower position)`:
/// sorted by upper then lower, a crossing is a strict inversion of lower
/// positions. Counted with a Fenwick tree.
fn count_inversions(segs: &mut [(usize, usize)], width: usize) -> u64 {
    if segs.len() < 2 {
        return 0;
    }
    segs.sort_unstable();
    let mut tree = vec![0u64; width + 1];
    let mut total = 0u64;
    for (inserted, &(_, l)) in segs.iter().enumerate() {
        // Count already inserted segments with lower position > l.
        let mut le = 0u64;
        let mut i = l + 1;
        while i > 0 {
            le += tree[i];
            i &= i - 1;
        }
        total += inserted as u64 - le;
        let mut i = l + 1;
        while i <= width {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    total
}

/// Replaces every relation spanning `s > 1` layers with a chain of `s - 1`
/// dummy nodes, one per intermediate layer. Initial order within a layer
/// is by line name then id; dummies follow in relation order.
pub fn insert_dummies(assignment: &LayerAssignment, net: &PedigreeNet) -> LayeredGraph {
    let n = net.len();
    let mut line_rank: Vec<usize> = (0..n).collect();
    line_rank.sort_by(|&a, &b| {
        let (la, lb) = (net.line_at(a), net.line_at(b));
        la.name.cmp(&lb.name).then_with(|| la.id.cmp(&lb.id))
    });
    let mut rank_of = vec![0; n];
    for (r, &v) in line_rank.iter().enumerate() {
        rank_of[v] = r;
    }

    let mut kinds: Vec<NodeKind> = (0..n).map(NodeKind::Line).collect();
    let mut layer_of: Vec<u32> = assignment.layer.clone();
    let mut sort_key: Vec<(usize, usize, usize)> = (0..n).map(|v| (0, rank_of[v], 0)).collect();
    let mut segments = Vec::new();
    let mut chains = Vec::with_capacity(net.relations().len());
    for r in 0..net.relations().len() {
        let (p, c) = net.relation_ends(r);
        let (lp, lc) = (assignment.layer[p], assignment.layer[c]);
        let mut chain = vec![p];
        for (step, layer) in (lp + 1..lc).enumerate() {
            let id = kinds.len();
            kinds.push(NodeKind::Dummy {
                relation: r,
                step: step as u32 + 1,
            });
            layer_of.push(layer);
            sort_key.push((1, r, step));
            chain.push(id);
        }
        chain.push(c);
        for w in chain.windows(2) {
            segments.push((w[0], w[1]));
        }
        chains.push(chain);
    }

    let mut order: Vec<usize> = (0..kinds.len()).collect();
    order.sort_by_key(|&v| sort_key[v]);
    let mut tie = vec![0; kinds.len()];
    for (t, &v) in order.iter().enumerate() {
        tie[v] = t;
    }
    let layer_count = layer_of.iter().max().map_or(0, |m| *m as usize + 1);
    let mut layers = vec![Vec::new(); layer_count];
    for &v in &order {
        layers[layer_of[v] as usize].push(v);
    }

    let mut g = LayeredGraph {
        kinds,
        layer_of,
        layers,
        segments,
        chains,
        tie,
        up: Vec::new(),
        down: Vec::new(),
    };
    g.index();
    g
}

/// Outcome of crossing reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub initial: u64,
    pub final_count: u64,
    pub passes: usize,
}

/// Most extra starts tried on a small graph.
const MAX_RESTARTS: usize = 16;

/// Restarts are tried while `restarts * (nodes + segments)` stays within
/// this budget, so large graphs get a single run.
const RESTART_WORK_BUDGET: usize = 4096;

/// Barycenter sweeps, down then up, repeated while the crossing count
/// improves and at most [`MAX_SWEEP_PASSES`] times, then adjacent
/// exchanges. Ties are broken by the node tie rank (name, then id). Small
/// graphs also rerun from seeded shuffles of every layer. The best order
/// seen, including the input order, is kept.
pub fn minimize_crossings(graph: &mut LayeredGraph) -> CrossingReport {
    let initial = graph.crossings();
    let start = graph.layers.clone();
    let (mut best, passes) = reduce_from(graph, initial);
    let mut best_layers = graph.layers.clone();
    let work = (graph.node_count() + graph.segments.len()).max(1);
    let restarts = if best == 0 { 0 } else { (RESTART_WORK_BUDGET / work).min(MAX_RESTARTS) };
    let mut rng = ChaCha8Rng::seed_from_u64(work as u64);
    for _ in 0..restarts {
        graph.layers = start.clone();
        for layer in &mut graph.layers {
            layer.shuffle(&mut rng);
        }
        let shuffled = graph.crossings();
        let (count, _) = reduce_from(graph, shuffled);
        if count < best {
            best = count;
            best_layers = graph.layers.clone();
            if best == 0 {
                break;
            }
        }
    }
    graph.layers = best_layers;
    CrossingReport {
        initial,
        final_count: best,
        passes,
    }
}

/// One descent from the current order; leaves the best order found in
/// `graph` and returns its crossings and the sweep passes used.
fn reduce_from(graph: &mut LayeredGraph, current: u64) -> (u64, usize) {
    let mut best = current;
    let mut best_layers = graph.layers.clone();
    let mut passes = 0;
    if best > 0 {
        while passes < MAX_SWEEP_PASSES {
            passes += 1;
            for i in 1..graph.layers.len() {
                sweep_layer(graph, i, true);
            }
            for i in (0..graph.layers.len().saturating_sub(1)).rev() {
                sweep_layer(graph, i, false);
            }
            let now = graph.crossings();
            if now < best {
                best = now;
                best_layers = graph.layers.clone();
                if best == 0 {
                    break;
                }
            } else {
                break;
            }
        }
    }
    graph.layers = best_layers;
    if best > 0 {
        adjacent_exchange(graph);
        best = graph.crossings();
    }
    (best, passes)
}

/// Cap on exchange rounds over all layers.
const MAX_EXCHANGE_ROUNDS: usize = 32;

/// Swaps neighbours within a layer while that strictly lowers their
/// crossings with both adjacent layers.
fn adjacent_exchange(graph: &mut LayeredGraph) {
    let mut pos = graph.positions();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..MAX_EXCHANGE_ROUNDS {
        let mut improved = false;
        for layer in 0..graph.layers.len() {
            for i in 0..graph.layers[layer].len().saturating_sub(1) {
                let (u, v) = (graph.layers[layer][i], graph.layers[layer][i + 1]);
                let (mut keep, mut swap) = (0, 0);
                for adj in [&graph.up, &graph.down] {
                    keep += pair_crossings(&adj[u], &adj[v], &pos, &mut a, &mut b);
                    swap += pair_crossings(&adj[v], &adj[u], &pos, &mut a, &mut b);
                }
                if swap < keep {
                    graph.layers[layer].swap(i, i + 1);
                    pos.swap(u, v);
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Crossings between the segments of a left node (`left`) and a right node
/// (`right`) into one neighbour layer.
fn pair_crossings(left: &[usize], right: &[usize], pos: &[usize], a: &mut Vec<usize>, b: &mut Vec<usize>) -> u64 {
    if left.is_empty() || right.is_empty() {
        return 0;
    }
    a.clear();
    a.extend(left.iter().map(|&x| pos[x]));
    a.sort_unstable();
    b.clear();
    b.extend(right.iter().map(|&y| pos[y]));
    b.sort_unstable();
    let mut count = 0u64;
    let mut j = 0;
    for &x in a.iter() {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        count += j as u64;
    }
    count
}

fn sweep_layer(graph: &mut LayeredGraph, layer: usize, downward: bool) {
    let neighbour_layer = if downward { layer - 1 } else { layer + 1 };
    let mut pos = HashMap::with_capacity(graph.layers[neighbour_layer].len());
    for (i, &v) in graph.layers[neighbour_layer].iter().enumerate() {
        pos.insert(v, i as f64);
    }
    let mut keyed: Vec<(f64, usize, usize)> = graph.layers[layer]
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let adj = if downward { &graph.up[v] } else { &graph.down[v] };
            let bary = if adj.is_empty() {
                i as f64
            } else {
                adj.iter().map(|u| pos[u]).sum::<f64>() / adj.len() as f64
            };
            (bary, graph.tie[v], v)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    graph.layers[layer] = keyed.into_iter().map(|(_, _, v)| v).collect();
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig<F> {
    pub node_gap: F,
    pub layer_gap: F,
}

impl<F: Scalar> Default for LayoutConfig<F> {
    fn default() -> Self {
        LayoutConfig {
            node_gap: F::of(40.0),
            layer_gap: F::of(60.0),
        }
    }
}

impl<F: Scalar> LayoutConfig<F> {
    fn validate(&self) -> Result<(), LayoutError> {
        let ok = |v: F| v.is_finite() && v > F::zero();
        if !ok(self.node_gap) || !ok(self.layer_gap) {
            return Err(LayoutError::InvalidConfig(format!(
                "gaps must be positive and finite (node_gap {}, layer_gap {})",
                self.node_gap, self.layer_gap
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayoutNodeKind {
    Line { line: LineId },
    Dummy { edge: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode<F> {
    pub id: String,
    #[serde(flatten)]
    pub kind: LayoutNodeKind,
    pub x: F,
    pub y: F,
    pub layer: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutEdge<F> {
    pub id: String,
    pub parent: LineId,
    pub child: LineId,
    pub role: Role,
    /// Node indices: parent, dummies, child.
    pub path: Vec<usize>,
    /// Polyline through `path`.
    pub points: Vec<[F; 2]>,
}

/// Positioned nodes and polyline edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout<F> {
    pub nodes: Vec<LayoutNode<F>>,
    pub edges: Vec<LayoutEdge<F>>,
    pub layer_count: u32,
    pub crossing_count: u64,
    /// Crossings of the initial name order, before reduction.
    pub initial_crossing_count: u64,
}

impl<F> Default for Layout<F> {
    fn default() -> Self {
        Layout {
            nodes: Vec::new(),
            edges: Vec::new(),
            layer_count: 0,
            crossing_count: 0,
            initial_crossing_count: 0,
        }
    }
}

impl<F: Scalar> Layout<F> {
    pub fn line_nodes(&self) -> impl Iterator<Item = (&LineId, &LayoutNode<F>)> {
        self.nodes.iter().filter_map(|n| match &n.kind {
            LayoutNodeKind::Line { line } => Some((line, n)),
            LayoutNodeKind::Dummy { .. } => None,
        })
    }

    pub fn dummy_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, LayoutNodeKind::Dummy { .. }))
            .count()
    }

    pub fn position(&self, id: &LineId) -> Option<(F, F)> {
        self.line_nodes()
            .find(|(l, _)| *l == id)
            .map(|(_, n)| (n.x, n.y))
    }

    /// Checks the structural invariants: parents above children, strictly
    /// increasing x within each layer, and `span - 1` dummies per edge.
    pub fn check_invariants(&self) -> Result<(), String> {
        for e in &self.edges {
            let (p, c) = (&self.nodes[e.path[0]], &self.nodes[*e.path.last().unwrap()]);
            if p.layer >= c.layer {
                return Err(format!("edge {} does not point downward", e.id));
            }
            if e.path.len() as u32 != c.layer - p.layer + 1 {
                return Err(format!("edge {} has the wrong number of dummies", e.id));
            }
            for w in e.path.windows(2) {
                if self.nodes[w[1]].layer != self.nodes[w[0]].layer + 1 {
                    return Err(format!("edge {} skips a layer", e.id));
                }
            }
        }
        let mut by_layer: Vec<Vec<F>> = vec![Vec::new(); self.layer_count as usize];
        for n in &self.nodes {
            by_layer[n.layer as usize].push(n.x);
        }
        for (l, xs) in by_layer.iter_mut().enumerate() {
            xs.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
            if xs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("layer {l} has coinciding x positions"));
            }
        }
        Ok(())
    }
}

/// Places nodes: `y = layer * layer_gap`; `x` starts at the cumulative
/// slot `position * node_gap` and one top-down pass then moves each node
/// to the median x of its upper neighbours, pushing right as needed to
/// keep `node_gap` separation and the layer order.
pub fn assign_coordinates<F: Scalar>(
    graph: &LayeredGraph,
    config: &LayoutConfig<F>,
) -> Result<Vec<(F, F)>, LayoutError> {
    config.validate()?;
    let mut xy = vec![(F::zero(), F::zero()); graph.node_count()];
    for (l, layer) in graph.layers.iter().enumerate() {
        let y = F::of(l as f64) * config.layer_gap;
        let mut prev: Option<F> = None;
        for (k, &v) in layer.iter().enumerate() {
            let slot = F::of(k as f64) * config.node_gap;
            let desired = if graph.up[v].is_empty() {
                slot
            } else {
                let mut ups: Vec<F> = graph.up[v].iter().map(|&u| xy[u].0).collect();
                ups.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
                let m = ups.len();
                if m % 2 == 1 {
                    ups[m / 2]
                } else {
                    (ups[m / 2 - 1] + ups[m / 2]) / F::of(2.0)
                }
            };
            let x = match prev {
                Some(p) => desired.max(p + config.node_gap),
                None => desired,
            };
            xy[v] = (x, y);
            prev = Some(x);
        }
    }
    Ok(xy)
}

/// Full pipeline for one net.
pub fn compute_layout<F: Scalar>(
    net: &PedigreeNet,
    config: &LayoutConfig<F>,
) -> Result<Layout<F>, LayoutError> {
    config.validate()?;
    let assignment = assign_layers(net)?;
    let mut layout = Layout::default();
    let mut offset = F::zero();
    for component in net.components() {
        let ids = component.iter().map(|&i| net.line_at(i).id.clone()).collect();
        let sub = net.induced(&ids);
        let sub_assignment = LayerAssignment {
            layer: component.iter().map(|&i| assignment.layer[i]).collect(),
        };
        let mut graph = insert_dummies(&sub_assignment, &sub);
        let report = minimize_crossings(&mut graph);
        let xy = assign_coordinates(&graph, config)?;
        let min_x = xy.iter().map(|p| p.0).fold(F::infinity(), F::min);
        let max_x = xy.iter().map(|p| p.0).fold(F::neg_infinity(), F::max);
        let shift = offset - min_x;

        let base = layout.nodes.len();
        let edge_base = layout.edges.len();
        for (v, kind) in graph.kinds.iter().enumerate() {
            let (id, kind) = match *kind {
                NodeKind::Line(i) => {
                    let line = sub.line_at(i).id.clone();
                    (line.to_string(), LayoutNodeKind::Line { line })
                }
                NodeKind::Dummy { relation, step } => (
                    format!("~e{}.{}", edge_base + relation, step),
                    LayoutNodeKind::Dummy {
                        edge: edge_base + relation,
                    },
                ),
            };
            layout.nodes.push(LayoutNode {
                id,
                kind,
                x: xy[v].0 + shift,
                y: xy[v].1,
                layer: graph.layer_of[v],
            });
        }
        for (r, chain) in graph.chains.iter().enumerate() {
            let rel = &sub.relations()[r];
            let path: Vec<usize> = chain.iter().map(|&v| base + v).collect();
            let points = path
                .iter()
                .map(|&v| [layout.nodes[v].x, layout.nodes[v].y])
                .collect();
            layout.edges.push(LayoutEdge {
                id: format!("e{}", edge_base + r),
                parent: rel.parent.clone(),
                child: rel.child.clone(),
                role: rel.role,
                path,
                points,
            });
        }
        layout.layer_count = layout.layer_count.max(graph.layers.len() as u32);
        layout.crossing_count += report.final_count;
        layout.initial_crossing_count += report.initial;
        offset = offset + (max_x - min_x) + config.node_gap;
    }
    Ok(layout)
}

/// Pairwise crossings between adjacent layers, recomputed from node x
/// order and edge paths.
pub fn count_crossings<F: Scalar>(layout: &Layout<F>) -> u64 {
    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); layout.layer_count as usize];
    for (i, n) in layout.nodes.iter().enumerate() {
        by_layer[n.layer as usize].push(i);
    }
    let mut pos = vec![0usize; layout.nodes.len()];
    for layer in &mut by_layer {
        layer.sort_by(|&a, &b| {
            layout.nodes[a]
                .x
                .partial_cmp(&layout.nodes[b].x)
                .expect("finite coordinates")
        });
        for (k, &v) in layer.iter().enumerate() {
            pos[v] = k;
        }
    }
    let mut segs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); by_layer.len()];
    for e in &layout.edges {
        for w in e.path.windows(2) {
            let l = layout.nodes[w[0]].layer as usize;
            segs[l].push((pos[w[0]], pos[w[1]]));
        }
    }
    segs.iter_mut()
        .enumerate()
        .map(|(l, s)| count_inversions(s, by_layer.get(l + 1).map_or(0, Vec::len)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pedigree::{build_net, LineRecord, ParentRelation};

    fn net(names: &[&str], rels: Vec<ParentRelation>) -> PedigreeNet {
        let lines = names.iter().map(|n| LineRecord::named(n)).collect();
        build_net(lines, rels).unwrap().0
    }

    fn diamond() -> PedigreeNet {
        net(
            &["A", "B", "C", "D"],
            vec![
                ParentRelation::selfed("B", "A"),
                ParentRelation::selfed("C", "A"),
                ParentRelation::female("D", "B"),
                ParentRelation::male("D", "C"),
            ],
        )
    }

    fn layers_by_name(net: &PedigreeNet) -> Vec<(String, u32)> {
        let a = assign_layers(net).unwrap();
        net.lines()
            .iter()
            .map(|l| (l.name.clone(), a.layer_of(net, &l.id).unwrap()))
            .collect()
    }

    /// Crossings of a two-layer graph under explicit orders, by checking
    /// every pair of edges.
    fn brute_crossings(edges: &[(usize, usize)], top: &[usize], bottom: &[usize]) -> u64 {
        let pt = |v: usize| top.iter().position(|&t| t == v).unwrap();
        let pb = |v: usize| bottom.iter().position(|&b| b == v).unwrap();
        let mut n = 0;
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                let (a, b) = (edges[i], edges[j]);
                let du = pt(a.0) as i64 - pt(b.0) as i64;
                let dl = pb(a.1) as i64 - pb(b.1) as i64;
                if du * dl < 0 {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn chain_and_diamond_layers() {
        let chain = net(
            &["A", "B", "C"],
            vec![ParentRelation::selfed("B", "A"), ParentRelation::selfed("C", "B")],
        );
        let got = layers_by_name(&chain);
        assert_eq!(got, vec![("A".into(), 0), ("B".into(), 1), ("C".into(), 2)]);
        let got = layers_by_name(&diamond());
        assert_eq!(
            got,
            vec![("A".into(), 0), ("B".into(), 1), ("C".into(), 1), ("D".into(), 2)]
        );
    }

    #[test]
    fn old_landrace_in_modern_cross_spans_many_layers() {
        // L is a landrace; M's other parent sits at layer 4.
        let n = net(
            &["L", "P0", "P1", "P2", "P3", "P4", "M"],
            vec![
                ParentRelation::selfed("P1", "P0"),
                ParentRelation::selfed("P2", "P1"),
                ParentRelation::selfed("P3", "P2"),
                ParentRelation::selfed("P4", "P3"),
                ParentRelation::female("M", "P4"),
                ParentRelation::male("M", "L"),
            ],
        );
        let a = assign_layers(&n).unwrap();
        assert_eq!(a.layer_of(&n, &"L".into()), Some(0));
        assert_eq!(a.layer_of(&n, &"M".into()), Some(5));
        let g = insert_dummies(&a, &n);
        let long = n
            .relations()
            .iter()
            .position(|r| r.parent.as_str() == "L")
            .unwrap();
        assert_eq!(g.chains[long].len(), 6);
        let dummy_layers: Vec<u32> = g.chains[long][1..5].iter().map(|&d| g.layer_of[d]).collect();
        assert_eq!(dummy_layers, vec![1, 2, 3, 4]);
        assert_eq!(g.dummy_count(), 4);
    }

    #[test]
    fn no_long_edges_means_no_dummies() {
        let d = diamond();
        let g = insert_dummies(&assign_layers(&d).unwrap(), &d);
        assert_eq!(g.dummy_count(), 0);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.segments.len(), 4);
    }

    #[test]
    fn x_pattern_is_uncrossed() {
        // Top A=0, B=1; bottom C=2, D=3; edges A->D, B->C.
        let edges = [(0, 3), (1, 2)];
        let mut g = LayeredGraph::from_parts(&[2, 2], &edges);
        assert_eq!(g.crossings(), 1);
        assert_eq!(brute_crossings(&edges, &[0, 1], &[2, 3]), 1);
        let report = minimize_crossings(&mut g);
        assert_eq!(report.initial, 1);
        assert_eq!(report.final_count, 0);
        assert_eq!(g.crossings(), 0);
        // Brute force over the four orderings agrees the optimum is 0.
        let best = [[0, 1], [1, 0]]
            .iter()
            .flat_map(|t| [[2, 3], [3, 2]].map(|b| brute_crossings(&edges, t, &b)))
            .min()
            .unwrap();
        assert_eq!(best, 0);
    }

    #[test]
    fn complete_bipartite_two_by_two_stays_at_one() {
        let edges = [(0, 2), (0, 3), (1, 2), (1, 3)];
        let mut g = LayeredGraph::from_parts(&[2, 2], &edges);
        let report = minimize_crossings(&mut g);
        assert_eq!(report.final_count, 1);
        assert!(report.final_count <= report.initial);
        let best = [[0, 1], [1, 0]]
            .iter()
            .flat_map(|t| [[2, 3], [3, 2]].map(|b| brute_crossings(&edges, t, &b)))
            .min()
            .unwrap();
        assert_eq!(best, 1);
    }

    #[test]
    fn edge_free_layers_keep_their_order() {
        let mut g = LayeredGraph::from_parts(&[3, 2], &[]);
        let before = g.layers.clone();
        minimize_crossings(&mut g);
        assert_eq!(g.layers, before);
    }

    #[test]
    fn inversion_counter_matches_pairwise_check() {
        let edges = [(0, 4), (0, 6), (1, 3), (2, 3), (2, 5), (1, 6)];
        let g = LayeredGraph::from_parts(&[3, 4], &edges);
        assert_eq!(g.crossings(), brute_crossings(&edges, &[0, 1, 2], &[3, 4, 5, 6]));
    }

    #[test]
    fn coordinates() {
        let cfg = LayoutConfig {
            node_gap: 10.0,
            layer_gap: 10.0,
        };
        let single = net(&["A"], vec![]);
        let l = compute_layout(&single, &cfg).unwrap();
        assert_eq!((l.nodes[0].x, l.nodes[0].y), (0.0, 0.0));

        let g = LayeredGraph::from_parts(&[2], &[]);
        let xy = assign_coordinates(&g, &cfg).unwrap();
        assert_eq!(xy, vec![(0.0, 0.0), (10.0, 0.0)]);

        let chain = net(
            &["A", "B", "C"],
            vec![ParentRelation::selfed("B", "A"), ParentRelation::selfed("C", "B")],
        );
        let l = compute_layout(&chain, &cfg).unwrap();
        assert!(l.nodes.iter().all(|n| n.x == l.nodes[0].x));

        let bad = LayoutConfig {
            node_gap: 0.0,
            layer_gap: 10.0,
        };
        assert!(matches!(
            compute_layout(&chain, &bad),
            Err(LayoutError::InvalidConfig(_))
        ));
    }

    #[test]
    fn diamond_layout() {
        let d = diamond();
        let l: Layout<f64> = compute_layout(&d, &LayoutConfig::default()).unwrap();
        assert_eq!(l.layer_count, 3);
        assert_eq!(l.crossing_count, 0);
        assert_eq!(count_crossings(&l), 0);
        assert_eq!(l.nodes.len(), 4);
        assert_eq!(l.edges.len(), 4);
        l.check_invariants().unwrap();
    }

    #[test]
    fn empty_net_gives_empty_layout() {
        let l: Layout<f32> = compute_layout(&PedigreeNet::empty(), &LayoutConfig::default()).unwrap();
        assert!(l.nodes.is_empty() && l.edges.is_empty());
        assert_eq!(l.crossing_count, 0);
    }

    #[test]
    fn single_edge_has_no_crossings() {
        let n = net(&["A", "B"], vec![ParentRelation::selfed("B", "A")]);
        let l: Layout<f64> = compute_layout(&n, &LayoutConfig::default()).unwrap();
        assert_eq!(count_crossings(&l), 0);
    }

    #[test]
    fn components_are_packed_largest_first() {
        let n = net(
            &["A", "B", "C", "X", "Y"],
            vec![
                ParentRelation::selfed("B", "A"),
                ParentRelation::selfed("C", "A"),
                ParentRelation::selfed("Y", "X"),
            ],
        );
        let cfg = LayoutConfig {
            node_gap: 10.0,
            layer_gap: 10.0,
        };
        let l = compute_layout(&n, &cfg).unwrap();
        let x = |id: &str| l.position(&id.into()).unwrap().0;
        // Component {A,B,C} spans [0, 10]; {X,Y} starts one gap later.
        assert_eq!((x("B"), x("C")), (0.0, 10.0));
        assert_eq!(x("X"), 20.0);
        assert_eq!(x("Y"), 20.0);
        l.check_invariants().unwrap();
    }
}
