//! Seeded synthetic data: pedigree-shaped DAGs, Mendelian genotypes with
//! planted call errors, inbred panels and DUS-style phenotypes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::genotype::{AlleleCall, Base, GenotypeMatrix, MarkerInfo, MarkerMap};
use crate::overlay::{PhenotypeRecord, PhenotypeTable, TraitDescriptor, TraitKind};
use crate::pedigree::{LineId, LineRecord, ParentRelation, Role};

pub const DEFAULT_MARKERS: usize = 4769;
const CHROMOSOMES: [&str; 7] = ["1H", "2H", "3H", "4H", "5H", "6H", "7H"];
const NAME_STEMS: [&str; 16] = [
    "Maris", "Golden", "Tartan", "Proctor", "Pioneer", "Optic", "Chariot", "Halcyon", "Triumph",
    "Derkado", "Pipkin", "Kenia", "Plumage", "Spratt", "Archer", "Vada",
];
const SITES: [&str; 3] = ["Dundee", "Cambridge", "Norwich"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub lines: usize,
    pub markers: usize,
    pub seed: u64,
    /// Probability of a planted call error per checkable locus.
    pub error_rate: f64,
    pub missing_rate: f64,
    /// Genotyped line count; defaults to the 750 of 803 ratio.
    pub genotyped: Option<usize>,
    /// Heterozygous call rate of founders.
    pub founder_het_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            lines: 803,
            markers: DEFAULT_MARKERS,
            seed: 1,
            error_rate: 0.0,
            missing_rate: 0.01,
            genotyped: None,
            founder_het_rate: 0.004,
        }
    }
}

impl SynthConfig {
    pub fn genotyped_count(&self) -> usize {
        self.genotyped
            .unwrap_or((self.lines * 750 + 401) / 803)
            .min(self.lines)
    }
}

/// A call deliberately made inconsistent with the line's parents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlantedError {
    pub line: LineId,
    pub locus: usize,
    pub marker: String,
    pub true_call: AlleleCall,
    pub observed: AlleleCall,
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub lines: Vec<LineRecord>,
    pub relations: Vec<ParentRelation>,
    pub matrix: GenotypeMatrix,
    pub marker_map: MarkerMap,
    pub traits: Vec<TraitDescriptor>,
    pub phenotypes: PhenotypeTable,
    /// Sorted by line then locus.
    pub planted: Vec<PlantedError>,
}

fn line_id(i: usize, n: usize) -> LineId {
    let width = n.saturating_sub(1).to_string().len().max(4);
    LineId::new(format!("L{i:0width$}"))
}

/// A pedigree-shaped DAG on `n` lines: early founders, later lines crossing
/// mostly recent parents with occasional old ones. Line `i` only has parents
/// with smaller index, so index order is topological.
pub fn random_pedigree(n: usize, seed: u64) -> (Vec<LineRecord>, Vec<ParentRelation>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pedigree_with(n, &mut rng)
}

fn random_pedigree_with(n: usize, rng: &mut ChaCha8Rng) -> (Vec<LineRecord>, Vec<ParentRelation>) {
    const WINDOW: usize = 60;
    let founders = (n / 8).max(2).min(n);
    let lines: Vec<LineRecord> = (0..n)
        .map(|i| {
            let stem = NAME_STEMS[rng.gen_range(0..NAME_STEMS.len())];
            LineRecord::new(line_id(i, n), format!("{stem} {i}"))
        })
        .collect();
    let mut relations = Vec::new();
    for i in founders..n {
        let pick = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.15) {
                rng.gen_range(0..i)
            } else {
                rng.gen_range(i.saturating_sub(WINDOW)..i)
            }
        };
        let child = lines[i].id.clone();
        let p1 = pick(rng);
        let r: f64 = rng.gen();
        if r < 0.08 {
            relations.push(ParentRelation::selfed(child, lines[p1].id.clone()));
        } else if r < 0.12 {
            relations.push(ParentRelation::female(child, lines[p1].id.clone()));
        } else {
            let mut p2 = pick(rng);
            while p2 == p1 {
                p2 = rng.gen_range(0..i);
            }
            relations.push(ParentRelation::female(child.clone(), lines[p1].id.clone()));
            relations.push(ParentRelation::male(child, lines[p2].id.clone()));
        }
    }
    (lines, relations)
}

/// One allele drawn from a parent call.
pub fn gamete<R: Rng>(call: AlleleCall, rng: &mut R) -> Option<Base> {
    let (a, b) = call.alleles()?;
    Some(if rng.gen_bool(0.5) { a } else { b })
}

/// Progeny of two parents, one gamete from each per locus; missing where
/// either parent is missing.
pub fn cross<R: Rng>(p1: &[AlleleCall], p2: &[AlleleCall], rng: &mut R) -> Vec<AlleleCall> {
    p1.iter()
        .zip(p2)
        .map(|(&a, &b)| match (gamete(a, rng), gamete(b, rng)) {
            (Some(x), Some(y)) => AlleleCall::pair(x, y),
            _ => AlleleCall::Missing,
        })
        .collect()
}

/// Replaces each called locus with a different random call at `rate`;
/// returns the number of changed loci.
pub fn corrupt_calls<R: Rng>(row: &mut [AlleleCall], rate: f64, rng: &mut R) -> usize {
    let mut changed = 0;
    for c in row.iter_mut() {
        if !c.is_missing() && rng.gen_bool(rate) {
            let mut code = rng.gen_range(1..=9u8);
            if code >= c.code() {
                code += 1;
            }
            *c = AlleleCall::from_code(code);
            changed += 1;
        }
    }
    changed
}

/// Biallelic marker: two distinct bases and the founder frequency of the
/// first.
struct Snp {
    alleles: (Base, Base),
    freq: f64,
}

fn random_snp<R: Rng>(rng: &mut R) -> Snp {
    let mut bases = Base::ALL;
    bases.shuffle(rng);
    Snp {
        alleles: (bases[0], bases[1]),
        freq: rng.gen_range(0.1..0.9),
    }
}

fn inbred_call<R: Rng>(snp: &Snp, het_rate: f64, rng: &mut R) -> AlleleCall {
    let (a, b) = snp.alleles;
    if rng.gen_bool(het_rate) {
        AlleleCall::pair(a, b)
    } else if rng.gen_bool(snp.freq) {
        AlleleCall::Hom(a)
    } else {
        AlleleCall::Hom(b)
    }
}

fn marker_names(m: usize) -> Vec<String> {
    let width = m.saturating_sub(1).to_string().len().max(4);
    (0..m).map(|j| format!("SNP{j:0width$}")).collect()
}

fn marker_map(names: &[String]) -> MarkerMap {
    let per = names.len().div_ceil(CHROMOSOMES.len()).max(1);
    MarkerMap {
        markers: names
            .iter()
            .enumerate()
            .map(|(j, name)| MarkerInfo {
                name: name.clone(),
                chromosome: Some(CHROMOSOMES[j / per].to_string()),
                position: Some(((j % per) as f64 * 150.0 / per as f64 * 100.0).round() / 100.0),
            })
            .collect(),
    }
}

/// Fully homozygous-dominated lines at a target heterozygous call rate.
pub fn inbred_panel(lines: usize, markers: usize, het_rate: f64, seed: u64) -> GenotypeMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snps: Vec<Snp> = (0..markers).map(|_| random_snp(&mut rng)).collect();
    let rows = (0..lines)
        .map(|_| snps.iter().map(|s| inbred_call(s, het_rate, &mut rng)).collect())
        .collect();
    GenotypeMatrix::new(
        (0..lines).map(|i| line_id(i, lines)).collect(),
        marker_names(markers),
        rows,
    )
    .expect("panel rows are rectangular")
}

/// A call the trio check must reject: a biallelic call if one is
/// inconsistent, otherwise a homozygote of a base neither parent carries.
fn inconsistent_call<R: Rng>(snp: &Snp, p1: AlleleCall, p2: AlleleCall, rng: &mut R) -> AlleleCall {
    let (a, b) = snp.alleles;
    let (a1, b1) = p1.alleles().expect("called");
    let (a2, b2) = p2.alleles().expect("called");
    let from = |x: Base, y: Base| (x == a1 || x == b1) && (y == a2 || y == b2);
    let ok = |c: AlleleCall| {
        let (x, y) = c.alleles().expect("called");
        from(x, y) || from(y, x)
    };
    let options: Vec<AlleleCall> = [AlleleCall::Hom(a), AlleleCall::Hom(b), AlleleCall::pair(a, b)]
        .into_iter()
        .filter(|&c| !ok(c))
        .collect();
    if let Some(&c) = options.choose(rng) {
        return c;
    }
    let foreign = Base::ALL
        .into_iter()
        .find(|&x| x != a1 && x != b1 && x != a2 && x != b2)
        .expect("two parents carry at most four bases, biallelic at most two");
    AlleleCall::Hom(foreign)
}

fn traits() -> Vec<TraitDescriptor> {
    vec![
        TraitDescriptor::new("Ecotype", TraitKind::Nominal, &["winter", "spring"]).unwrap(),
        TraitDescriptor::new("RowType", TraitKind::Nominal, &["2-row", "6-row"]).unwrap(),
        TraitDescriptor::new(
            "AnthocyaninColour",
            TraitKind::Ordinal,
            &["absent", "weak", "medium", "strong"],
        )
        .unwrap(),
    ]
}

/// Generates a full dataset. Identical configs give identical data.
pub fn generate(config: &SynthConfig) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.lines;
    let m = config.markers;
    let (lines, relations) = random_pedigree_with(n, &mut rng);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut genotyped = vec![false; n];
    for &i in order.iter().take(config.genotyped_count()) {
        genotyped[i] = true;
    }
    let snps: Vec<Snp> = (0..m).map(|_| random_snp(&mut rng)).collect();
    let observed_mask: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|_| genotyped[i] && !rng.gen_bool(config.missing_rate))
                .collect()
        })
        .collect();

    let mut parents: Vec<Vec<(Role, usize)>> = vec![Vec::new(); n];
    for r in &relations {
        let c = index_of(&r.child);
        let p = index_of(&r.parent);
        parents[c].push((r.role, p));
    }
    let names = marker_names(m);

    // Index order is topological, so parents are always generated first.
    let mut calls: Vec<Vec<AlleleCall>> = Vec::with_capacity(n);
    let mut planted = Vec::new();
    for i in 0..n {
        let fam = &parents[i];
        let row = match fam.as_slice() {
            [] => snps
                .iter()
                .map(|s| inbred_call(s, config.founder_het_rate, &mut rng))
                .collect(),
            [(_, p)] => {
                // Selfing, or a single recorded parent crossed with an
                // unrecorded inbred.
                let other: Vec<AlleleCall> = if fam[0].0 == Role::Selfed {
                    calls[*p].clone()
                } else {
                    snps.iter()
                        .map(|s| inbred_call(s, config.founder_het_rate, &mut rng))
                        .collect()
                };
                cross(&calls[*p], &other, &mut rng)
            }
            [(_, p), (_, q)] => cross(&calls[*p], &calls[*q], &mut rng),
            _ => unreachable!("generator emits at most two parents"),
        };
        let mut row = row;
        let complete = fam.len() == 2 || matches!(fam.as_slice(), [(Role::Selfed, _)]);
        let checked = complete && genotyped[i] && fam.iter().all(|&(_, p)| genotyped[p]);
        if checked && config.error_rate > 0.0 {
            let p = fam[0].1;
            let q = fam.get(1).map_or(p, |f| f.1);
            for j in 0..m {
                let visible = observed_mask[i][j] && observed_mask[p][j] && observed_mask[q][j];
                if visible && rng.gen_bool(config.error_rate) {
                    let bad = inconsistent_call(&snps[j], calls[p][j], calls[q][j], &mut rng);
                    planted.push(PlantedError {
                        line: lines[i].id.clone(),
                        locus: j,
                        marker: names[j].clone(),
                        true_call: row[j],
                        observed: bad,
                    });
                    row[j] = bad;
                }
            }
        }
        calls.push(row);
    }

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for i in (0..n).filter(|&i| genotyped[i]) {
        ids.push(lines[i].id.clone());
        rows.push(
            calls[i]
                .iter()
                .zip(&observed_mask[i])
                .map(|(&c, &seen)| if seen { c } else { AlleleCall::Missing })
                .collect(),
        );
    }
    let matrix = GenotypeMatrix::new(ids, names.clone(), rows).expect("rectangular");

    let traits = traits();
    let mut classes: Vec<Vec<usize>> = Vec::with_capacity(n);
    for family in &parents {
        let row = traits
            .iter()
            .enumerate()
            .map(|(t, d)| match family.first() {
                Some(&(_, p)) if rng.gen_bool(0.8) => {
                    let q = family.get(1).map_or(p, |f| f.1);
                    if rng.gen_bool(0.5) { classes[p][t] } else { classes[q][t] }
                }
                _ => rng.gen_range(0..d.classes.len()),
            })
            .collect();
        classes.push(row);
    }
    let mut phenotypes = PhenotypeTable::new();
    for i in 0..n {
        if !rng.gen_bool(0.9) {
            continue;
        }
        let year = 2005 + rng.gen_range(0..12);
        let site = SITES[rng.gen_range(0..SITES.len())];
        for (t, d) in traits.iter().enumerate() {
            phenotypes.insert(PhenotypeRecord {
                line: lines[i].id.clone(),
                trait_name: d.name.clone(),
                value: d.classes[classes[i][t]].clone(),
                year: Some(year),
                site: Some(site.to_string()),
            });
        }
    }

    planted.sort();
    SynthData {
        lines,
        relations,
        matrix,
        marker_map: marker_map(&names),
        traits,
        phenotypes,
        planted,
    }
}

fn index_of(id: &LineId) -> usize {
    id.as_str()[1..].parse().expect("generated ids are L<index>")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::{check_net, genotype_stats};
    use crate::pedigree::build_net;
    use std::collections::BTreeSet;

    #[test]
    fn pedigree_is_valid_and_seeded() {
        let (lines, rels) = random_pedigree(500, 3);
        let (net, diags) = build_net(lines.clone(), rels.clone()).unwrap();
        assert_eq!(net.len(), 500);
        assert!(diags.iter().all(|d| !d.is_error()));
        assert_eq!(random_pedigree(500, 3), (lines, rels));
    }

    #[test]
    fn planted_errors_are_exactly_what_the_checker_finds() {
        let config = SynthConfig {
            lines: 120,
            markers: 300,
            seed: 9,
            error_rate: 0.01,
            ..SynthConfig::default()
        };
        let data = generate(&config);
        assert!(!data.planted.is_empty());
        let (net, _) = build_net(data.lines.clone(), data.relations.clone()).unwrap();
        let report = check_net(&net, &data.matrix);
        let found: BTreeSet<(LineId, usize)> =
            report.findings.iter().map(|f| (f.child.clone(), f.locus)).collect();
        let truth: BTreeSet<(LineId, usize)> =
            data.planted.iter().map(|p| (p.line.clone(), p.locus)).collect();
        assert_eq!(found, truth);
    }

    #[test]
    fn error_free_data_is_consistent() {
        let data = generate(&SynthConfig {
            lines: 80,
            markers: 200,
            seed: 2,
            ..SynthConfig::default()
        });
        let (net, _) = build_net(data.lines.clone(), data.relations.clone()).unwrap();
        assert!(check_net(&net, &data.matrix).findings.is_empty());
        assert_eq!(data.matrix.line_count(), (80 * 750 + 401) / 803);
    }

    #[test]
    fn inbred_panel_het_rate() {
        let panel = inbred_panel(100, 2000, 0.004, 5);
        let stats = genotype_stats::<f64>(&panel);
        let mean: f64 = stats.values().map(|s| s.heterozygosity.unwrap()).sum::<f64>() / 100.0;
        assert!((mean - 0.004).abs() < 0.001, "{mean}");
    }

    #[test]
    fn corrupt_changes_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let orig = vec![AlleleCall::Hom(Base::A); 1000];
        let mut row = orig.clone();
        let n = corrupt_calls(&mut row, 0.1, &mut rng);
        let diff = orig.iter().zip(&row).filter(|(a, b)| a != b).count();
        assert_eq!(n, diff);
        assert!(row.iter().all(|c| !c.is_missing()));
    }
}
