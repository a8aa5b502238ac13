//! SNP genotypes: allele calls, Mendelian consistency of trios and nets,
//! identity-by-state similarity, genotype matching and second-parent
//! inference.
//!
//! Calls are stored as one-byte codes so the hot loops (all-pairs
//! similarity, candidate scoring) run over lookup tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pedigree::{LineId, PedigreeNet, Role};
use crate::scalar::Scalar;

/// Matches resting on fewer compared loci are flagged low-confidence.
pub const LOW_CONFIDENCE_LOCI: usize = 30;

/// Number of similarity histogram bins over `[0, 1]`.
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum GenotypeError {
    #[error("call vectors differ in length (expected {expected}, found {found})")]
    LengthMismatch { expected: usize, found: usize },
    #[error("line `{0}` is not genotyped")]
    UnknownLine(LineId),
    #[error("line `{0}` appears twice in the genotype matrix")]
    DuplicateLine(LineId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Base {
    A,
    C,
    G,
    T,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    pub fn from_char(c: char) -> Option<Base> {
        match c {
            'A' => Some(Base::A),
            'C' => Some(Base::C),
            'G' => Some(Base::G),
            'T' => Some(Base::T),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// A diploid SNP call. Heterozygous pairs are kept in alphabetical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AlleleCall {
    Missing,
    Hom(Base),
    Het(Base, Base),
}

impl AlleleCall {
    /// Normalized call from two alleles in any order.
    pub fn pair(a: Base, b: Base) -> AlleleCall {
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => AlleleCall::Hom(a),
            std::cmp::Ordering::Less => AlleleCall::Het(a, b),
            std::cmp::Ordering::Greater => AlleleCall::Het(b, a),
        }
    }

    /// The ten non-missing calls in code order.
    pub fn all_called() -> impl Iterator<Item = AlleleCall> {
        (1..=10u8).map(AlleleCall::from_code)
    }

    pub fn alleles(self) -> Option<(Base, Base)> {
        match self {
            AlleleCall::Missing => None,
            AlleleCall::Hom(a) => Some((a, a)),
            AlleleCall::Het(a, b) => Some((a, b)),
        }
    }

    pub fn is_missing(self) -> bool {
        self == AlleleCall::Missing
    }

    pub fn is_het(self) -> bool {
        matches!(self, AlleleCall::Het(..))
    }

    /// 0 for missing, 1..=10 for AA, AC, AG, AT, CC, CG, CT, GG, GT, TT.
    pub fn code(self) -> u8 {
        match self.alleles() {
            None => 0,
            Some((a, b)) => PAIR_CODE[a.index()][b.index()],
        }
    }

    pub fn from_code(code: u8) -> AlleleCall {
        match code {
            0 => AlleleCall::Missing,
            c => {
                let (a, b) = CODE_PAIR[c as usize - 1];
                AlleleCall::pair(Base::ALL[a], Base::ALL[b])
            }
        }
    }

    /// Relabels both alleles.
    pub fn map_bases(self, f: impl Fn(Base) -> Base) -> AlleleCall {
        match self.alleles() {
            None => AlleleCall::Missing,
            Some((a, b)) => AlleleCall::pair(f(a), f(b)),
        }
    }
}

const PAIR_CODE: [[u8; 4]; 4] = [[1, 2, 3, 4], [2, 5, 6, 7], [3, 6, 8, 9], [4, 7, 9, 10]];
const CODE_PAIR: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

impl fmt::Display for AlleleCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alleles() {
            None => f.write_str("-"),
            Some((a, b)) => write!(f, "{}{}", a.as_char(), b.as_char()),
        }
    }
}

impl FromStr for AlleleCall {
    type Err = String;

    /// Accepts two uppercase bases in either order, `-` or `NN`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "-" || s == "NN" {
            return Ok(AlleleCall::Missing);
        }
        let mut chars = s.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => match (Base::from_char(a), Base::from_char(b)) {
                (Some(a), Some(b)) => Ok(AlleleCall::pair(a, b)),
                _ => Err(format!("illegal allele call `{s}`")),
            },
            _ => Err(format!("illegal allele call `{s}`")),
        }
    }
}

impl From<AlleleCall> for String {
    fn from(c: AlleleCall) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for AlleleCall {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Parses a whitespace- or comma-separated list of calls.
pub fn parse_calls(s: &str) -> Result<Vec<AlleleCall>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

/// Chromosome and map position of one marker; unknown when the marker was
/// absent from the map file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerInfo {
    pub name: String,
    pub chromosome: Option<String>,
    pub position: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkerMap {
    pub markers: Vec<MarkerInfo>,
}

/// Lines by markers table of calls, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenotypeMatrix {
    lines: Vec<LineId>,
    markers: Vec<String>,
    codes: Vec<u8>,
    index: HashMap<LineId, usize>,
}

impl GenotypeMatrix {
    pub fn new(
        lines: Vec<LineId>,
        markers: Vec<String>,
        rows: Vec<Vec<AlleleCall>>,
    ) -> Result<Self, GenotypeError> {
        let width = markers.len();
        let mut codes = Vec::with_capacity(lines.len() * width);
        let mut index = HashMap::with_capacity(lines.len());
        if rows.len() != lines.len() {
            return Err(GenotypeError::LengthMismatch {
                expected: lines.len(),
                found: rows.len(),
            });
        }
        for (i, (line, row)) in lines.iter().zip(&rows).enumerate() {
            if row.len() != width {
                return Err(GenotypeError::LengthMismatch {
                    expected: width,
                    found: row.len(),
                });
            }
            if index.insert(line.clone(), i).is_some() {
                return Err(GenotypeError::DuplicateLine(line.clone()));
            }
            codes.extend(row.iter().map(|c| c.code()));
        }
        Ok(GenotypeMatrix {
            lines,
            markers,
            codes,
            index,
        })
    }

    pub fn lines(&self) -> &[LineId] {
        &self.lines
    }

    pub fn markers(&self) -> &[String] {
        &self.markers
    }

    pub fn marker_count(&self) -> usize {
        self.markers.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn contains(&self, id: &LineId) -> bool {
        self.index.contains_key(id)
    }

    pub fn index_of(&self, id: &LineId) -> Option<usize> {
        self.index.get(id).copied()
    }

    fn codes_of(&self, i: usize) -> &[u8] {
        let w = self.markers.len();
        &self.codes[i * w..(i + 1) * w]
    }

    pub fn row_at(&self, i: usize) -> Vec<AlleleCall> {
        self.codes_of(i).iter().map(|&c| AlleleCall::from_code(c)).collect()
    }

    pub fn row(&self, id: &LineId) -> Option<Vec<AlleleCall>> {
        self.index_of(id).map(|i| self.row_at(i))
    }

    pub fn call(&self, line: usize, marker: usize) -> AlleleCall {
        AlleleCall::from_code(self.codes[line * self.markers.len() + marker])
    }

    fn require(&self, id: &LineId) -> Result<usize, GenotypeError> {
        self.index_of(id)
            .ok_or_else(|| GenotypeError::UnknownLine(id.clone()))
    }
}

/// How a child call fails to follow from its parents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// The child carries an allele neither parent has.
    NonParentalAllele,
    /// Every allele occurs in a parent, but no one-gamete-per-parent
    /// combination yields the child call.
    IncompatibleCombination,
}

const TRIO_UNTESTED: u8 = 0;
const TRIO_OK: u8 = 1;
const TRIO_NON_PARENTAL: u8 = 2;
const TRIO_INCOMPATIBLE: u8 = 3;

/// `[child][p1][p2]` outcome over call codes.
fn trio_table() -> &'static [[[u8; 11]; 11]; 11] {
    static TABLE: OnceLock<Box<[[[u8; 11]; 11]; 11]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[[TRIO_UNTESTED; 11]; 11]; 11]);
        for c in 1..=10u8 {
            for p in 1..=10u8 {
                for q in 1..=10u8 {
                    t[c as usize][p as usize][q as usize] = classify_trio(
                        AlleleCall::from_code(c),
                        AlleleCall::from_code(p),
                        AlleleCall::from_code(q),
                    );
                }
            }
        }
        t
    })
}

/// A child `xy` is consistent when `x` can come from one parent and `y`
/// from the other.
fn classify_trio(child: AlleleCall, p1: AlleleCall, p2: AlleleCall) -> u8 {
    let (Some((x, y)), Some((a1, b1)), Some((a2, b2))) = (child.alleles(), p1.alleles(), p2.alleles())
    else {
        return TRIO_UNTESTED;
    };
    let in1 = |z: Base| z == a1 || z == b1;
    let in2 = |z: Base| z == a2 || z == b2;
    if (in1(x) && in2(y)) || (in1(y) && in2(x)) {
        TRIO_OK
    } else if !(in1(x) || in2(x)) || !(in1(y) || in2(y)) {
        TRIO_NON_PARENTAL
    } else {
        TRIO_INCOMPATIBLE
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrioFinding {
    pub locus: usize,
    pub child: AlleleCall,
    pub parents: [AlleleCall; 2],
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrioCheck {
    pub findings: Vec<TrioFinding>,
    /// Loci with all three calls present.
    pub tested: usize,
    /// Loci skipped for a missing call.
    pub untested: usize,
}

/// Checks every locus of a trio. `p2 = None` means the child is a selfing
/// of `p1`.
pub fn check_trio(
    child: &[AlleleCall],
    p1: &[AlleleCall],
    p2: Option<&[AlleleCall]>,
) -> Result<TrioCheck, GenotypeError> {
    let p2 = p2.unwrap_or(p1);
    for other in [p1, p2] {
        if other.len() != child.len() {
            return Err(GenotypeError::LengthMismatch {
                expected: child.len(),
                found: other.len(),
            });
        }
    }
    let c: Vec<u8> = child.iter().map(|x| x.code()).collect();
    let a: Vec<u8> = p1.iter().map(|x| x.code()).collect();
    let b: Vec<u8> = p2.iter().map(|x| x.code()).collect();
    Ok(check_codes(&c, &a, &b))
}

fn check_codes(child: &[u8], p1: &[u8], p2: &[u8]) -> TrioCheck {
    let table = trio_table();
    let mut out = TrioCheck::default();
    for (locus, ((&c, &a), &b)) in child.iter().zip(p1).zip(p2).enumerate() {
        match table[c as usize][a as usize][b as usize] {
            TRIO_UNTESTED => out.untested += 1,
            TRIO_OK => out.tested += 1,
            outcome => {
                out.tested += 1;
                out.findings.push(TrioFinding {
                    locus,
                    child: AlleleCall::from_code(c),
                    parents: [AlleleCall::from_code(a), AlleleCall::from_code(b)],
                    kind: if outcome == TRIO_NON_PARENTAL {
                        ViolationKind::NonParentalAllele
                    } else {
                        ViolationKind::IncompatibleCombination
                    },
                });
            }
        }
    }
    out
}

fn count_violations(child: &[u8], p1: &[u8], p2: &[u8]) -> (usize, usize) {
    let table = trio_table();
    let mut violations = 0;
    let mut tested = 0;
    for ((&c, &a), &b) in child.iter().zip(p1).zip(p2) {
        let o = table[c as usize][a as usize][b as usize];
        tested += (o != TRIO_UNTESTED) as usize;
        violations += (o >= TRIO_NON_PARENTAL) as usize;
    }
    (violations, tested)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub child: LineId,
    pub parents: Vec<LineId>,
    pub locus: usize,
    pub marker: String,
    pub child_call: AlleleCall,
    pub parent_calls: Vec<AlleleCall>,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// In child id order, then locus order.
    pub findings: Vec<Finding>,
    /// Violations per checked child.
    pub per_line: BTreeMap<LineId, usize>,
    pub families_checked: usize,
    /// Families with a parent or the child not genotyped, or only one
    /// non-self parent recorded.
    pub families_skipped: usize,
    pub loci_tested: usize,
    pub loci_untested: usize,
}

/// Parent sets of every line with recorded parents: `(child, p1, p2)`, with
/// `p2 = None` for selfings and single known parents flagged incomplete.
fn families(net: &PedigreeNet) -> Vec<(usize, Vec<usize>, bool)> {
    let mut out = Vec::new();
    for v in 0..net.len() {
        let rels = net.parent_relations(v);
        if rels.is_empty() {
            continue;
        }
        let mut parents: Vec<(Role, usize)> = rels
            .iter()
            .map(|&r| (net.relations()[r].role, net.relation_ends(r).0))
            .collect();
        parents.sort();
        let selfed = parents.len() == 1 && parents[0].0 == Role::Selfed;
        let complete = selfed || parents.len() == 2;
        out.push((v, parents.into_iter().map(|(_, p)| p).collect(), complete));
    }
    out
}

/// Child index, parent net indices, parent matrix rows and the trio result.
type FamilyCheck = (usize, Vec<usize>, Vec<usize>, TrioCheck);

/// Runs [`check_trio`] over every family whose child and parents are all
/// genotyped.
pub fn check_net(net: &PedigreeNet, matrix: &GenotypeMatrix) -> ConsistencyReport {
    let fams = families(net);
    let results: Vec<Option<FamilyCheck>> = fams
        .par_iter()
        .map(|(child, parents, complete)| {
            if !complete {
                return None;
            }
            let c = matrix.index_of(&net.line_at(*child).id)?;
            let rows: Option<Vec<usize>> = parents
                .iter()
                .map(|&p| matrix.index_of(&net.line_at(p).id))
                .collect();
            let rows = rows?;
            let p1 = matrix.codes_of(rows[0]);
            let p2 = matrix.codes_of(*rows.get(1).unwrap_or(&rows[0]));
            Some((*child, parents.clone(), rows, check_codes(matrix.codes_of(c), p1, p2)))
        })
        .collect();

    let mut report = ConsistencyReport::default();
    for r in results {
        let Some((child, parents, _rows, check)) = r else {
            report.families_skipped += 1;
            continue;
        };
        report.families_checked += 1;
        report.loci_tested += check.tested;
        report.loci_untested += check.untested;
        let child_id = net.line_at(child).id.clone();
        let parent_ids: Vec<LineId> = parents.iter().map(|&p| net.line_at(p).id.clone()).collect();
        report.per_line.insert(child_id.clone(), check.findings.len());
        for f in check.findings {
            let parent_calls = if parents.len() == 1 {
                vec![f.parents[0]]
            } else {
                f.parents.to_vec()
            };
            report.findings.push(Finding {
                child: child_id.clone(),
                parents: parent_ids.clone(),
                locus: f.locus,
                marker: matrix.markers[f.locus].clone(),
                child_call: f.child,
                parent_calls,
                kind: f.kind,
            });
        }
    }
    report
}

/// IBS alleles shared (0, 1 or 2) by two calls, `None` when either is
/// missing.
pub fn shared_alleles(a: AlleleCall, b: AlleleCall) -> Option<u8> {
    let ((a1, a2), (b1, b2)) = (a.alleles()?, b.alleles()?);
    let mut pool = vec![b1, b2];
    let mut shared = 0;
    for x in [a1, a2] {
        if let Some(i) = pool.iter().position(|&y| y == x) {
            pool.swap_remove(i);
            shared += 1;
        }
    }
    Some(shared)
}

/// `[a][b]` shared-allele count, 255 for missing.
fn ibs_table() -> &'static [[u8; 11]; 11] {
    static TABLE: OnceLock<[[u8; 11]; 11]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[255u8; 11]; 11];
        for a in 1..=10u8 {
            for b in 1..=10u8 {
                t[a as usize][b as usize] =
                    shared_alleles(AlleleCall::from_code(a), AlleleCall::from_code(b)).unwrap();
            }
        }
        t
    })
}

fn ibs_codes(a: &[u8], b: &[u8]) -> (u32, u32) {
    let t = ibs_table();
    let mut shared = 0u32;
    let mut compared = 0u32;
    for (&x, &y) in a.iter().zip(b) {
        let s = t[x as usize][y as usize];
        if s != 255 {
            shared += s as u32;
            compared += 1;
        }
    }
    (shared, compared)
}

/// IBS similarity: the mean over loci called in both rows of 1 (identical),
/// 0.5 (one allele shared) or 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity<F> {
    /// `None` when no locus was compared.
    pub score: Option<F>,
    pub compared: usize,
    /// Sum of shared alleles over compared loci (score = this / 2·compared).
    pub shared_alleles: u64,
}

impl<F: Scalar> Similarity<F> {
    pub fn from_counts(shared_alleles: u64, compared: usize) -> Self {
        Similarity {
            score: (compared > 0).then(|| F::ratio(shared_alleles, 2 * compared as u64)),
            compared,
            shared_alleles,
        }
    }

    /// Histogram bin `[k/20, (k+1)/20)`, with 1.0 in the top bin; computed
    /// from the exact counts.
    pub fn bin(&self) -> Option<usize> {
        (self.compared > 0).then(|| {
            let k = (10 * self.shared_alleles / self.compared as u64) as usize;
            k.min(HISTOGRAM_BINS - 1)
        })
    }
}

pub fn similarity<F: Scalar>(a: &[AlleleCall], b: &[AlleleCall]) -> Result<Similarity<F>, GenotypeError> {
    if a.len() != b.len() {
        return Err(GenotypeError::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let ca: Vec<u8> = a.iter().map(|c| c.code()).collect();
    let cb: Vec<u8> = b.iter().map(|c| c.code()).collect();
    let (s, c) = ibs_codes(&ca, &cb);
    Ok(Similarity::from_counts(s as u64, c as usize))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEntry<F> {
    pub line: LineId,
    #[serde(flatten)]
    pub similarity: Similarity<F>,
}

/// Similarity of one base line to every other genotyped line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProfile<F> {
    pub base: LineId,
    /// Matrix order, base excluded.
    pub entries: Vec<SimilarityEntry<F>>,
    /// Counts per `[k·0.05, (k+1)·0.05)` bin over entries with a score.
    pub histogram: [usize; HISTOGRAM_BINS],
}

impl<F: Scalar> SimilarityProfile<F> {
    fn build(base: LineId, entries: Vec<SimilarityEntry<F>>) -> Self {
        let mut histogram = [0usize; HISTOGRAM_BINS];
        for e in &entries {
            if let Some(b) = e.similarity.bin() {
                histogram[b] += 1;
            }
        }
        SimilarityProfile {
            base,
            entries,
            histogram,
        }
    }

    pub fn scores(&self) -> BTreeMap<LineId, Option<F>> {
        self.entries
            .iter()
            .map(|e| (e.line.clone(), e.similarity.score))
            .collect()
    }
}

pub fn similarity_to_all<F: Scalar>(
    matrix: &GenotypeMatrix,
    base: &LineId,
) -> Result<SimilarityProfile<F>, GenotypeError> {
    let b = matrix.require(base)?;
    let base_row = matrix.codes_of(b);
    let entries = (0..matrix.line_count())
        .into_par_iter()
        .filter(|&i| i != b)
        .map(|i| {
            let (s, c) = ibs_codes(base_row, matrix.codes_of(i));
            SimilarityEntry {
                line: matrix.lines[i].clone(),
                similarity: Similarity::from_counts(s as u64, c as usize),
            }
        })
        .collect();
    Ok(SimilarityProfile::build(base.clone(), entries))
}

/// Lines scoring at or above `cutoff`, most similar first, ties by id.
/// Entries without a score never pass.
pub fn filter_by_cutoff<F: Scalar>(entries: &[SimilarityEntry<F>], cutoff: F) -> Vec<(LineId, F)> {
    let mut out: Vec<(LineId, F)> = entries
        .iter()
        .filter_map(|e| e.similarity.score.filter(|&s| s >= cutoff).map(|s| (e.line.clone(), s)))
        .collect();
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}

/// All-by-all similarity counts, computed once in parallel.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    lines: Vec<LineId>,
    /// Row-major `(shared alleles, compared loci)`.
    counts: Vec<(u32, u32)>,
}

impl SimilarityMatrix {
    pub fn get<F: Scalar>(&self, i: usize, j: usize) -> Similarity<F> {
        let (s, c) = self.counts[i * self.lines.len() + j];
        Similarity::from_counts(s as u64, c as usize)
    }

    pub fn lines(&self) -> &[LineId] {
        &self.lines
    }

    /// Same result as [`similarity_to_all`], read from the cache.
    pub fn profile<F: Scalar>(&self, base: &LineId) -> Result<SimilarityProfile<F>, GenotypeError> {
        let b = self
            .lines
            .iter()
            .position(|l| l == base)
            .ok_or_else(|| GenotypeError::UnknownLine(base.clone()))?;
        let entries = (0..self.lines.len())
            .filter(|&i| i != b)
            .map(|i| SimilarityEntry {
                line: self.lines[i].clone(),
                similarity: self.get(b, i),
            })
            .collect();
        Ok(SimilarityProfile::build(base.clone(), entries))
    }
}

pub fn all_pairs_similarity(matrix: &GenotypeMatrix) -> SimilarityMatrix {
    let n = matrix.line_count();
    let rows: Vec<Vec<(u32, u32)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = matrix.codes_of(i);
            (0..n)
                .map(|j| if j < i { (0, 0) } else { ibs_codes(ri, matrix.codes_of(j)) })
                .collect()
        })
        .collect();
    let mut counts: Vec<(u32, u32)> = rows.into_iter().flatten().collect();
    for i in 0..n {
        for j in 0..i {
            counts[i * n + j] = counts[j * n + i];
        }
    }
    SimilarityMatrix {
        lines: matrix.lines.clone(),
        counts,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchHit<F> {
    pub line: LineId,
    #[serde(flatten)]
    pub similarity: Similarity<F>,
    pub low_confidence: bool,
}

/// Scores every line against a query row; scored lines first by
/// descending similarity, then unscored ones, ties by id.
pub fn match_genotype<F: Scalar>(
    matrix: &GenotypeMatrix,
    query: &[AlleleCall],
) -> Result<Vec<MatchHit<F>>, GenotypeError> {
    if query.len() != matrix.marker_count() {
        return Err(GenotypeError::LengthMismatch {
            expected: matrix.marker_count(),
            found: query.len(),
        });
    }
    let q: Vec<u8> = query.iter().map(|c| c.code()).collect();
    let mut hits: Vec<MatchHit<F>> = (0..matrix.line_count())
        .into_par_iter()
        .map(|i| {
            let (s, c) = ibs_codes(&q, matrix.codes_of(i));
            let similarity = Similarity::from_counts(s as u64, c as usize);
            MatchHit {
                line: matrix.lines[i].clone(),
                low_confidence: similarity.compared < LOW_CONFIDENCE_LOCI,
                similarity,
            }
        })
        .collect();
    hits.sort_by(|a, b| {
        let key = |h: &MatchHit<F>| h.similarity.score;
        match (key(a), key(b)) {
            (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Equal),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
        .then_with(|| a.line.cmp(&b.line))
    });
    Ok(hits)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentCandidate {
    pub line: LineId,
    pub violations: usize,
    pub tested: usize,
    /// 1 + number of candidates with strictly fewer violations.
    pub rank: usize,
}

/// Scores every genotyped line other than the child as the unknown second
/// parent by its trio violation count; fewest first, ties by id.
pub fn infer_second_parent(
    matrix: &GenotypeMatrix,
    child: &LineId,
    known_parent: &LineId,
) -> Result<Vec<ParentCandidate>, GenotypeError> {
    let c = matrix.require(child)?;
    let p = matrix.require(known_parent)?;
    let (cr, pr) = (matrix.codes_of(c), matrix.codes_of(p));
    let mut out: Vec<ParentCandidate> = (0..matrix.line_count())
        .into_par_iter()
        .filter(|&i| i != c)
        .map(|i| {
            let (violations, tested) = count_violations(cr, pr, matrix.codes_of(i));
            ParentCandidate {
                line: matrix.lines[i].clone(),
                violations,
                tested,
                rank: 0,
            }
        })
        .collect();
    out.sort_by(|a, b| a.violations.cmp(&b.violations).then_with(|| a.line.cmp(&b.line)));
    let mut better = 0;
    for i in 0..out.len() {
        if i > 0 && out[i].violations > out[i - 1].violations {
            better = i;
        }
        out[i].rank = better + 1;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenotypeStats<F> {
    /// Heterozygous share of called loci; `None` when nothing was called.
    pub heterozygosity: Option<F>,
    pub missing_rate: F,
    pub het_calls: usize,
    pub called: usize,
}

pub fn genotype_stats<F: Scalar>(matrix: &GenotypeMatrix) -> BTreeMap<LineId, GenotypeStats<F>> {
    let total = matrix.marker_count();
    (0..matrix.line_count())
        .map(|i| {
            let row = matrix.codes_of(i);
            let called = row.iter().filter(|&&c| c != 0).count();
            let het_calls = row
                .iter()
                .filter(|&&c| AlleleCall::from_code(c).is_het())
                .count();
            let stats = GenotypeStats {
                heterozygosity: (called > 0).then(|| F::ratio(het_calls as u64, called as u64)),
                missing_rate: if total == 0 {
                    F::zero()
                } else {
                    F::ratio((total - called) as u64, total as u64)
                },
                het_calls,
                called,
            };
            (matrix.lines[i].clone(), stats)
        })
        .collect()
}
