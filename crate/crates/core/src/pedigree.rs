//! Pedigree net model: lines, atomized parent relations, validation,
//! traversal, usage statistics, usage classes and name search.
//!
//! A [`PedigreeNet`] is immutable once built. Lines are stored in id order
//! and relations in `(child, role, parent)` order, so two nets built from
//! the same rows in any order compare equal.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stable identifier of a line within a net.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineId(String);

impl LineId {
    pub fn new(id: impl Into<String>) -> Self {
        LineId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LineId {
    fn from(s: &str) -> Self {
        LineId(s.to_string())
    }
}

impl From<String> for LineId {
    fn from(s: String) -> Self {
        LineId(s)
    }
}

impl Borrow<str> for LineId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// A named variety, cultivar or breeding line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineRecord {
    pub id: LineId,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    /// Passport fields such as ecotype or row type.
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

impl LineRecord {
    pub fn new(id: impl Into<LineId>, name: impl Into<String>) -> Self {
        LineRecord {
            id: id.into(),
            name: name.into(),
            aliases: Vec::new(),
            attributes: BTreeMap::new(),
        }
    }

    /// A line whose id is its name.
    pub fn named(name: &str) -> Self {
        LineRecord::new(name, name)
    }

    pub fn with_alias(mut self, alias: impl Into<String>) -> Self {
        self.aliases.push(alias.into());
        self
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }
}

/// Parental role of a relation. `Selfed` stands for both the male and the
/// female role of a self-pollination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Female,
    Male,
    Unknown,
    #[serde(rename = "self")]
    Selfed,
}

impl Role {
    /// One-letter code used in pedigree files.
    pub fn code(self) -> char {
        match self {
            Role::Male => 'M',
            Role::Female => 'F',
            Role::Unknown => 'U',
            Role::Selfed => 'S',
        }
    }

    pub fn from_code(code: &str) -> Option<Role> {
        match code {
            "M" => Some(Role::Male),
            "F" => Some(Role::Female),
            "U" => Some(Role::Unknown),
            "S" => Some(Role::Selfed),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Male => "male",
            Role::Female => "female",
            Role::Unknown => "unknown",
            Role::Selfed => "self",
        })
    }
}

/// One atomized `child <- parent` edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParentRelation {
    pub child: LineId,
    pub parent: LineId,
    pub role: Role,
    pub cross_type: String,
}

impl ParentRelation {
    pub fn new(
        child: impl Into<LineId>,
        parent: impl Into<LineId>,
        role: Role,
        cross_type: impl Into<String>,
    ) -> Self {
        ParentRelation {
            child: child.into(),
            parent: parent.into(),
            role,
            cross_type: cross_type.into(),
        }
    }

    pub fn female(child: impl Into<LineId>, parent: impl Into<LineId>) -> Self {
        ParentRelation::new(child, parent, Role::Female, "cross")
    }

    pub fn male(child: impl Into<LineId>, parent: impl Into<LineId>) -> Self {
        ParentRelation::new(child, parent, Role::Male, "cross")
    }

    pub fn selfed(child: impl Into<LineId>, parent: impl Into<LineId>) -> Self {
        ParentRelation::new(child, parent, Role::Selfed, "self")
    }

    fn sort_key(&self) -> (&LineId, Role, &LineId, &str) {
        (&self.child, self.role, &self.parent, &self.cross_type)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticCode {
    CycleDetected,
    UnknownEndpoint,
    DuplicateParentRole,
    DuplicateLineId,
    InvalidLine,
    DuplicateName,
    DuplicateAlias,
}

impl DiagnosticCode {
    pub fn severity(self) -> Severity {
        match self {
            DiagnosticCode::DuplicateName | DiagnosticCode::DuplicateAlias => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

/// A validation finding raised while building a net.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub severity: Severity,
    pub ids: Vec<LineId>,
    pub message: String,
}

impl Diagnostic {
    fn new(code: DiagnosticCode, ids: Vec<LineId>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: code.severity(),
            ids,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{:?}]: {}", self.code, self.message)
    }
}

#[derive(Debug, Error)]
pub enum PedigreeError {
    #[error("pedigree rejected: {}", summarize(.0))]
    Rejected(Vec<Diagnostic>),
    #[error("unknown line `{0}`")]
    UnknownLine(LineId),
    #[error("principal_min_uses must be at least 1 (got {0})")]
    InvalidThreshold(usize),
}

fn summarize(diags: &[Diagnostic]) -> String {
    let errors: Vec<String> = diags
        .iter()
        .filter(|d| d.is_error())
        .map(|d| d.message.clone())
        .collect();
    errors.join("; ")
}

impl PedigreeError {
    /// Diagnostics carried by a rejected build, empty otherwise.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            PedigreeError::Rejected(d) => d,
            _ => &[],
        }
    }
}

/// Immutable DAG of lines and parent relations with adjacency indexes.
#[derive(Clone, Debug)]
pub struct PedigreeNet {
    lines: Vec<LineRecord>,
    index: HashMap<LineId, usize>,
    relations: Vec<ParentRelation>,
    /// `(parent index, child index)` per relation.
    ends: Vec<(usize, usize)>,
    /// Relation indices per child.
    up: Vec<Vec<usize>>,
    /// Relation indices per parent.
    down: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl PartialEq for PedigreeNet {
    fn eq(&self, other: &Self) -> bool {
        self.lines == other.lines && self.relations == other.relations
    }
}

impl Eq for PedigreeNet {}

/// Validates raw lines and relations and builds a net.
///
/// On success the returned diagnostics hold only warnings (for example
/// distinct lines sharing a display name). Any error-severity finding
/// rejects the whole input with the full diagnostic list.
pub fn build_net(
    lines: Vec<LineRecord>,
    relations: Vec<ParentRelation>,
) -> Result<(PedigreeNet, Vec<Diagnostic>), PedigreeError> {
    let mut diags = Vec::new();

    let mut lines = lines;
    lines.sort_by(|a, b| a.id.cmp(&b.id));
    let mut unique: Vec<LineRecord> = Vec::with_capacity(lines.len());
    for mut line in lines {
        if line.name.trim().is_empty() {
            diags.push(Diagnostic::new(
                DiagnosticCode::InvalidLine,
                vec![line.id.clone()],
                format!("line `{}` has an empty name", line.id),
            ));
        }
        let mut seen = BTreeSet::new();
        let before = line.aliases.len();
        line.aliases.retain(|a| seen.insert(a.clone()));
        if line.aliases.len() != before {
            diags.push(Diagnostic::new(
                DiagnosticCode::DuplicateAlias,
                vec![line.id.clone()],
                format!("line `{}` lists the same alias more than once", line.id),
            ));
        }
        match unique.last() {
            Some(prev) if prev.id == line.id => diags.push(Diagnostic::new(
                DiagnosticCode::DuplicateLineId,
                vec![line.id.clone()],
                format!("line id `{}` is defined more than once", line.id),
            )),
            _ => unique.push(line),
        }
    }
    let lines = unique;

    let mut by_name: BTreeMap<&str, Vec<&LineId>> = BTreeMap::new();
    for line in &lines {
        by_name.entry(line.name.as_str()).or_default().push(&line.id);
    }
    for (name, ids) in &by_name {
        if ids.len() > 1 {
            diags.push(Diagnostic::new(
                DiagnosticCode::DuplicateName,
                ids.iter().map(|&id| id.clone()).collect(),
                format!("{} distinct lines share the name `{name}`", ids.len()),
            ));
        }
    }

    let index: HashMap<LineId, usize> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (l.id.clone(), i))
        .collect();

    let mut relations = relations;
    relations.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut kept = Vec::with_capacity(relations.len());
    for rel in relations {
        let mut missing = Vec::new();
        if !index.contains_key(&rel.child) {
            missing.push(rel.child.clone());
        }
        if !index.contains_key(&rel.parent) && rel.parent != rel.child {
            missing.push(rel.parent.clone());
        }
        if !missing.is_empty() {
            let names: Vec<&str> = missing.iter().map(|m| m.as_str()).collect();
            diags.push(Diagnostic::new(
                DiagnosticCode::UnknownEndpoint,
                missing.clone(),
                format!(
                    "relation {} <- {} references unknown line(s): {}",
                    rel.child,
                    rel.parent,
                    names.join(", ")
                ),
            ));
            continue;
        }
        if rel.child == rel.parent {
            diags.push(Diagnostic::new(
                DiagnosticCode::CycleDetected,
                vec![rel.child.clone()],
                format!("cycle detected: {} is its own parent", rel.child),
            ));
            continue;
        }
        kept.push(rel);
    }

    // Parent-role rules per child.
    let mut start = 0;
    while start < kept.len() {
        let child = &kept[start].child;
        let end = start + kept[start..].iter().take_while(|r| &r.child == child).count();
        let family = &kept[start..end];
        if let Some(problem) = family_problem(family) {
            let mut ids = vec![child.clone()];
            ids.extend(family.iter().map(|r| r.parent.clone()));
            diags.push(Diagnostic::new(
                DiagnosticCode::DuplicateParentRole,
                ids,
                format!("line `{child}` {problem}"),
            ));
        }
        start = end;
    }

    let net = PedigreeNet::assemble(lines, index, kept);
    match net.topological_order() {
        Ok(topo) => {
            if diags.iter().any(Diagnostic::is_error) {
                return Err(PedigreeError::Rejected(diags));
            }
            let net = PedigreeNet { topo, ..net };
            Ok((net, diags))
        }
        Err(cycle) => {
            let names: Vec<&str> = cycle.iter().map(|&i| net.lines[i].id.as_str()).collect();
            diags.push(Diagnostic::new(
                DiagnosticCode::CycleDetected,
                cycle.iter().map(|&i| net.lines[i].id.clone()).collect(),
                format!("cycle detected: {}", names.join(" -> ")),
            ));
            Err(PedigreeError::Rejected(diags))
        }
    }
}

fn family_problem(family: &[ParentRelation]) -> Option<String> {
    let count = |role| family.iter().filter(|r| r.role == role).count();
    if count(Role::Selfed) > 0 && family.len() > 1 {
        return Some("has a self relation alongside other parent relations".into());
    }
    if family.len() > 2 {
        return Some(format!("has {} parent relations (at most 2)", family.len()));
    }
    if count(Role::Male) > 1 {
        return Some("has more than one male parent".into());
    }
    if count(Role::Female) > 1 {
        return Some("has more than one female parent".into());
    }
    None
}

impl PedigreeNet {
    /// Builds indexes over already validated parts. `topo` is left empty.
    fn assemble(
        lines: Vec<LineRecord>,
        index: HashMap<LineId, usize>,
        relations: Vec<ParentRelation>,
    ) -> Self {
        let n = lines.len();
        let mut up = vec![Vec::new(); n];
        let mut down = vec![Vec::new(); n];
        let mut ends = Vec::with_capacity(relations.len());
        for (r, rel) in relations.iter().enumerate() {
            let p = index[&rel.parent];
            let c = index[&rel.child];
            ends.push((p, c));
            up[c].push(r);
            down[p].push(r);
        }
        PedigreeNet {
            lines,
            index,
            relations,
            ends,
            up,
            down,
            topo: Vec::new(),
        }
    }

    /// Kahn's algorithm; on failure returns one cycle as line indices in
    /// parent-to-child order, rotated to start at its smallest id.
    fn topological_order(&self) -> Result<Vec<usize>, Vec<usize>> {
        let n = self.lines.len();
        let mut indegree: Vec<usize> = self.up.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &r in &self.down[v] {
                let c = self.ends[r].1;
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        // Every leftover node has a leftover parent; walk parents until a
        // node repeats.
        let start = (0..n).find(|&i| indegree[i] > 0).expect("leftover node");
        let mut pos: HashMap<usize, usize> = HashMap::new();
        let mut walk = Vec::new();
        let mut v = start;
        while !pos.contains_key(&v) {
            pos.insert(v, walk.len());
            walk.push(v);
            v = self.up[v]
                .iter()
                .map(|&r| self.ends[r].0)
                .find(|&p| indegree[p] > 0)
                .expect("leftover parent");
        }
        let mut cycle: Vec<usize> = walk[pos[&v]..].to_vec();
        cycle.reverse();
        let min_at = (0..cycle.len())
            .min_by(|&a, &b| self.lines[cycle[a]].id.cmp(&self.lines[cycle[b]].id))
            .unwrap_or(0);
        cycle.rotate_left(min_at);
        Err(cycle)
    }

    pub fn empty() -> Self {
        PedigreeNet::assemble(Vec::new(), HashMap::new(), Vec::new())
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Lines in id order.
    pub fn lines(&self) -> &[LineRecord] {
        &self.lines
    }

    /// Relations in `(child, role, parent)` order.
    pub fn relations(&self) -> &[ParentRelation] {
        &self.relations
    }

    pub fn contains(&self, id: &LineId) -> bool {
        self.index.contains_key(id)
    }

    pub fn line(&self, id: &LineId) -> Option<&LineRecord> {
        self.index.get(id).map(|&i| &self.lines[i])
    }

    pub fn index_of(&self, id: &LineId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn line_at(&self, index: usize) -> &LineRecord {
        &self.lines[index]
    }

    /// `(parent index, child index)` of relation `r`.
    pub fn relation_ends(&self, r: usize) -> (usize, usize) {
        self.ends[r]
    }

    /// Indices of relations whose child is line `index`.
    pub fn parent_relations(&self, index: usize) -> &[usize] {
        &self.up[index]
    }

    /// Indices of relations whose parent is line `index`.
    pub fn child_relations(&self, index: usize) -> &[usize] {
        &self.down[index]
    }

    /// Line indices in a parents-before-children order.
    pub fn topological(&self) -> &[usize] {
        &self.topo
    }

    fn require(&self, id: &LineId) -> Result<usize, PedigreeError> {
        self.index_of(id)
            .ok_or_else(|| PedigreeError::UnknownLine(id.clone()))
    }

    /// Distinct parents of a line, in relation order.
    pub fn parents_of(&self, id: &LineId) -> Result<Vec<&LineId>, PedigreeError> {
        let i = self.require(id)?;
        let mut out: Vec<&LineId> = Vec::new();
        for &r in &self.up[i] {
            let p = &self.relations[r].parent;
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Distinct children of a line, in id order.
    pub fn children_of(&self, id: &LineId) -> Result<Vec<&LineId>, PedigreeError> {
        let i = self.require(id)?;
        let set: BTreeSet<&LineId> = self.down[i]
            .iter()
            .map(|&r| &self.relations[r].child)
            .collect();
        Ok(set.into_iter().collect())
    }

    /// Breadth-first walk over child-to-parent edges. Each ancestor maps to
    /// its shortest generation distance.
    pub fn ancestors(
        &self,
        id: &LineId,
        max_generations: Option<u32>,
    ) -> Result<BTreeMap<LineId, u32>, PedigreeError> {
        let start = self.require(id)?;
        Ok(self.walk(start, max_generations, Direction::Up))
    }

    /// Mirror of [`ancestors`](Self::ancestors) over parent-to-child edges.
    pub fn descendants(
        &self,
        id: &LineId,
        max_generations: Option<u32>,
    ) -> Result<BTreeMap<LineId, u32>, PedigreeError> {
        let start = self.require(id)?;
        Ok(self.walk(start, max_generations, Direction::Down))
    }

    fn walk(&self, start: usize, limit: Option<u32>, dir: Direction) -> BTreeMap<LineId, u32> {
        let mut dist: HashMap<usize, u32> = HashMap::new();
        let mut queue = VecDeque::from([(start, 0u32)]);
        let mut seen = vec![false; self.lines.len()];
        seen[start] = true;
        while let Some((v, d)) = queue.pop_front() {
            if limit.is_some_and(|m| d >= m) {
                continue;
            }
            let next = match dir {
                Direction::Up => &self.up[v],
                Direction::Down => &self.down[v],
            };
            for &r in next {
                let (p, c) = self.ends[r];
                let w = if dir == Direction::Up { p } else { c };
                if !seen[w] {
                    seen[w] = true;
                    dist.insert(w, d + 1);
                    queue.push_back((w, d + 1));
                }
            }
        }
        dist.into_iter()
            .map(|(i, d)| (self.lines[i].id.clone(), d))
            .collect()
    }

    /// Induced sub-net on a line, its ancestors within `up` generations and
    /// its descendants within `down` generations.
    pub fn local_subnet(
        &self,
        id: &LineId,
        up: u32,
        down: u32,
    ) -> Result<PedigreeNet, PedigreeError> {
        let mut keep: BTreeSet<LineId> = self.ancestors(id, Some(up))?.into_keys().collect();
        keep.extend(self.descendants(id, Some(down))?.into_keys());
        keep.insert(id.clone());
        Ok(self.induced(&keep))
    }

    /// Sub-net on the given ids; relations are kept when both ends are.
    pub fn induced(&self, keep: &BTreeSet<LineId>) -> PedigreeNet {
        let lines: Vec<LineRecord> = self
            .lines
            .iter()
            .filter(|l| keep.contains(&l.id))
            .cloned()
            .collect();
        let index: HashMap<LineId, usize> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.clone(), i))
            .collect();
        let relations: Vec<ParentRelation> = self
            .relations
            .iter()
            .filter(|r| keep.contains(&r.child) && keep.contains(&r.parent))
            .cloned()
            .collect();
        let net = PedigreeNet::assemble(lines, index, relations);
        let topo = net
            .topological_order()
            .expect("induced subgraph of a DAG is acyclic");
        PedigreeNet { topo, ..net }
    }

    /// Weakly connected components as sorted line-index lists, largest
    /// first; equal sizes ordered by their smallest id.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.lines.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let k = out.len();
            let mut members = vec![s];
            comp[s] = k;
            let mut i = 0;
            while i < members.len() {
                let v = members[i];
                i += 1;
                for &r in self.up[v].iter().chain(&self.down[v]) {
                    let (p, c) = self.ends[r];
                    for w in [p, c] {
                        if comp[w] == usize::MAX {
                            comp[w] = k;
                            members.push(w);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        // Members are index-sorted and indices follow id order, so the
        // first member carries the smallest id.
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Up,
    Down,
}

/// Usage counts of one line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineUsage {
    /// Number of distinct children.
    pub times_as_parent: usize,
    pub descendant_count: usize,
    pub ancestor_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageStats {
    pub per_line: BTreeMap<LineId, LineUsage>,
}

impl UsageStats {
    pub fn get(&self, id: &LineId) -> Option<&LineUsage> {
        self.per_line.get(id)
    }
}

/// Exact usage counts. Reachability is computed with one bitset per line
/// folded in topological order, so memory is quadratic in net size.
pub fn usage_stats(net: &PedigreeNet) -> UsageStats {
    let n = net.len();
    let words = n.div_ceil(64);
    let reach = |forward: bool| -> Vec<usize> {
        let mut sets = vec![0u64; n * words];
        let order: Box<dyn Iterator<Item = &usize>> = if forward {
            Box::new(net.topo.iter().rev())
        } else {
            Box::new(net.topo.iter())
        };
        for &v in order {
            let rels = if forward { &net.down[v] } else { &net.up[v] };
            for &r in rels {
                let (p, c) = net.ends[r];
                let w = if forward { c } else { p };
                sets[v * words + w / 64] |= 1 << (w % 64);
                let (dst, src) = if v < w {
                    let (a, b) = sets.split_at_mut(w * words);
                    (&mut a[v * words..(v + 1) * words], &b[..words])
                } else {
                    let (a, b) = sets.split_at_mut(v * words);
                    (&mut b[..words], &a[w * words..(w + 1) * words])
                };
                for (d, s) in dst.iter_mut().zip(src) {
                    *d |= *s;
                }
            }
        }
        (0..n)
            .map(|v| {
                sets[v * words..(v + 1) * words]
                    .iter()
                    .map(|x| x.count_ones() as usize)
                    .sum()
            })
            .collect()
    };
    let desc = reach(true);
    let anc = reach(false);
    let per_line = (0..n)
        .map(|v| {
            let children: BTreeSet<usize> = net.down[v].iter().map(|&r| net.ends[r].1).collect();
            (
                net.lines[v].id.clone(),
                LineUsage {
                    times_as_parent: children.len(),
                    descendant_count: desc[v],
                    ancestor_count: anc[v],
                },
            )
        })
        .collect();
    UsageStats { per_line }
}

/// Usage class of a line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineClass {
    /// Heavily used parent.
    Principal,
    /// Occasional parent.
    Flanking,
    /// Never used as a parent.
    Terminal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub principal_min_uses: usize,
}

impl Thresholds {
    /// 90th percentile (nearest rank) of the nonzero `times_as_parent`
    /// values, at least 1.
    pub fn percentile_default(stats: &UsageStats) -> Thresholds {
        let mut uses: Vec<usize> = stats
            .per_line
            .values()
            .map(|u| u.times_as_parent)
            .filter(|&u| u > 0)
            .collect();
        if uses.is_empty() {
            return Thresholds {
                principal_min_uses: 1,
            };
        }
        uses.sort_unstable();
        let rank = (uses.len() * 9).div_ceil(10).max(1);
        Thresholds {
            principal_min_uses: uses[rank - 1].max(1),
        }
    }
}

pub fn classify_lines(
    net: &PedigreeNet,
    stats: &UsageStats,
    thresholds: Thresholds,
) -> Result<BTreeMap<LineId, LineClass>, PedigreeError> {
    if thresholds.principal_min_uses < 1 {
        return Err(PedigreeError::InvalidThreshold(thresholds.principal_min_uses));
    }
    Ok(net
        .lines
        .iter()
        .map(|line| {
            let uses = stats.get(&line.id).map_or(0, |u| u.times_as_parent);
            let class = if uses == 0 {
                LineClass::Terminal
            } else if uses >= thresholds.principal_min_uses {
                LineClass::Principal
            } else {
                LineClass::Flanking
            };
            (line.id.clone(), class)
        })
        .collect())
}

/// Case-insensitive wildcard search over names and aliases. `*` matches
/// any run of characters and `?` exactly one.
///
/// Hits are ordered: exact matches, then matches on the literal prefix of
/// the pattern, then the rest; alphabetically by name within each group.
pub fn search_lines(net: &PedigreeNet, pattern: &str) -> Vec<LineId> {
    let pat: Vec<char> = pattern.trim().to_lowercase().chars().collect();
    if pat.is_empty() {
        return Vec::new();
    }
    let literal_prefix: String = pat.iter().take_while(|c| **c != '*' && **c != '?').collect();
    let pat_str: String = pat.iter().collect();

    let mut hits: Vec<(u8, String, &LineId)> = Vec::new();
    for line in &net.lines {
        let mut best: Option<u8> = None;
        for label in std::iter::once(&line.name).chain(&line.aliases) {
            let text = label.to_lowercase();
            let chars: Vec<char> = text.chars().collect();
            if !wildcard_match(&pat, &chars) {
                continue;
            }
            let rank = if text == pat_str {
                0
            } else if !literal_prefix.is_empty() && text.starts_with(&literal_prefix) {
                1
            } else {
                2
            };
            best = Some(best.map_or(rank, |b: u8| b.min(rank)));
        }
        if let Some(rank) = best {
            hits.push((rank, line.name.to_lowercase(), &line.id));
        }
    }
    hits.sort();
    hits.into_iter().map(|(_, _, id)| id.clone()).collect()
}

/// Greedy wildcard matcher with single-star backtracking.
pub(crate) fn wildcard_match(pattern: &[char], text: &[char]) -> bool {
    let (mut p, mut t) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while t < text.len() {
        if p < pattern.len() && (pattern[p] == '?' || pattern[p] == text[t]) {
            p += 1;
            t += 1;
        } else if p < pattern.len() && pattern[p] == '*' {
            star = Some((p, t));
            p += 1;
        } else if let Some((sp, st)) = star {
            p = sp + 1;
            t = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    pattern[p..].iter().all(|&c| c == '*')
}
