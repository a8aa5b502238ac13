//! Visual encodings: palettes, merged phenotype classes, node sizing and
//! class histograms.
//!
//! Nominal classes are told apart by hue and ordinal classes by saturation
//! and lightness along a single hue. Colors are always emitted as `#RRGGBB`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pedigree::{LineId, UsageStats};
use crate::scalar::Scalar;

/// The eight base hues of the nominal palette. This table is the single
/// source of truth for categorical colors.
pub const NOMINAL_BASE: [&str; 8] = [
    "#E41A1C", "#377EB8", "#4DAF4A", "#984EA3", "#FF7F00", "#A65628", "#F781BF", "#17BECF",
];

/// Lightness removed from the base hues for nominal classes 9 to 16.
pub const NOMINAL_DARKEN: f64 = 0.2;

/// Hue of the ordinal ramp, in degrees.
pub const ORDINAL_HUE: f64 = 210.0;

/// Smallest HSL lightness difference between adjacent ordinal classes,
/// measured on the emitted 8-bit colors, for up to 12 classes.
pub const ORDINAL_MIN_LIGHTNESS_STEP: f64 = 0.05;

/// Lightness step the ramp is built with when it has to stretch; the
/// margin over [`ORDINAL_MIN_LIGHTNESS_STEP`] absorbs 8-bit rounding.
const ORDINAL_STRETCH_STEP: f64 = 0.065;

/// Fill of nodes without an overlay class.
pub const NEUTRAL_FILL: Rgb = Rgb(0xBD, 0xBD, 0xBD);

const GOLDEN_ANGLE: f64 = 137.507_764_050_037_85;

/// An sRGB color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn from_hsl(h: f64, s: f64, l: f64) -> Rgb {
        let h = h.rem_euclid(360.0) / 360.0;
        let s = s.clamp(0.0, 1.0);
        let l = l.clamp(0.0, 1.0);
        if s == 0.0 {
            let v = (l * 255.0).round() as u8;
            return Rgb(v, v, v);
        }
        let q = if l < 0.5 { l * (1.0 + s) } else { l + s - l * s };
        let p = 2.0 * l - q;
        let channel = |mut t: f64| {
            t = t.rem_euclid(1.0);
            let v = if t < 1.0 / 6.0 {
                p + (q - p) * 6.0 * t
            } else if t < 0.5 {
                q
            } else if t < 2.0 / 3.0 {
                p + (q - p) * (2.0 / 3.0 - t) * 6.0
            } else {
                p
            };
            (v * 255.0).round() as u8
        };
        Rgb(channel(h + 1.0 / 3.0), channel(h), channel(h - 1.0 / 3.0))
    }

    /// `(hue degrees, saturation, lightness)`.
    pub fn to_hsl(self) -> (f64, f64, f64) {
        let r = self.0 as f64 / 255.0;
        let g = self.1 as f64 / 255.0;
        let b = self.2 as f64 / 255.0;
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let l = (max + min) / 2.0;
        if max == min {
            return (0.0, 0.0, l);
        }
        let d = max - min;
        let s = if l > 0.5 { d / (2.0 - max - min) } else { d / (max + min) };
        let h = if max == r {
            (g - b) / d + if g < b { 6.0 } else { 0.0 }
        } else if max == g {
            (b - r) / d + 2.0
        } else {
            (r - g) / d + 4.0
        };
        (h * 60.0, s, l)
    }

    pub fn lightness(self) -> f64 {
        self.to_hsl().2
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s
            .strip_prefix('#')
            .filter(|h| h.len() == 6 && h.is_ascii())
            .ok_or_else(|| format!("`{s}` is not a #RRGGBB color"))?;
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|e| e.to_string());
        Ok(Rgb(byte(0)?, byte(2)?, byte(4)?))
    }
}

impl From<Rgb> for String {
    fn from(c: Rgb) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Rgb {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// `n` pairwise distinct categorical colors: the base table, then the same
/// hues darkened, then golden-angle hue steps.
pub fn nominal_palette(n: usize) -> Vec<Rgb> {
    let base: Vec<Rgb> = NOMINAL_BASE
        .iter()
        .map(|h| h.parse().expect("valid table color"))
        .collect();
    let mut out: Vec<Rgb> = Vec::with_capacity(n);
    let mut used: HashSet<Rgb> = HashSet::new();
    for i in 0..n {
        let mut color = if i < 8 {
            base[i]
        } else if i < 16 {
            let (h, s, l) = base[i - 8].to_hsl();
            Rgb::from_hsl(h, s, (l - NOMINAL_DARKEN).max(0.12))
        } else {
            let k = (i - 16) as f64;
            let l = [0.45, 0.62, 0.32][(i - 16) % 3];
            Rgb::from_hsl(15.0 + k * GOLDEN_ANGLE, 0.7, l)
        };
        let mut nudge = 0;
        while used.contains(&color) {
            nudge += 1;
            let (h, s, l) = color.to_hsl();
            color = Rgb::from_hsl(h + 7.0 * nudge as f64, s, l);
        }
        used.insert(color);
        out.push(color);
    }
    out
}

/// Single-hue ramp from light and pale to dark and saturated. Up to eight
/// classes use lightness 0.85 to 0.35; larger counts stretch the ramp so
/// adjacent classes stay at least [`ORDINAL_MIN_LIGHTNESS_STEP`] apart.
pub fn ordinal_palette(n: usize) -> Vec<Rgb> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![Rgb::from_hsl(ORDINAL_HUE, 0.6, 0.55)];
    }
    let (top, bottom) = if n <= 8 {
        (0.85, 0.35)
    } else {
        let span = (ORDINAL_STRETCH_STEP * (n - 1) as f64).clamp(0.5, 0.85);
        let top = (0.55 + span / 2.0).min(0.95);
        (top, top - span)
    };
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let l = top - t * (top - bottom);
            let s = 0.35 + t * 0.5;
            Rgb::from_hsl(ORDINAL_HUE, s, l)
        })
        .collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum OverlayError {
    #[error("unknown trait `{0}`")]
    UnknownTrait(String),
    #[error("invalid trait `{0}`: {1}")]
    InvalidTrait(String, String),
    #[error("invalid size range: need max_r > min_r > 0")]
    InvalidRange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraitKind {
    Nominal,
    Ordinal,
}

impl FromStr for TraitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nominal" => Ok(TraitKind::Nominal),
            "ordinal" => Ok(TraitKind::Ordinal),
            other => Err(format!("unknown trait kind `{other}`")),
        }
    }
}

impl fmt::Display for TraitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraitKind::Nominal => "nominal",
            TraitKind::Ordinal => "ordinal",
        })
    }
}

/// A categorical trait; for ordinal traits `classes` is in rank order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitDescriptor {
    pub name: String,
    pub kind: TraitKind,
    pub classes: Vec<String>,
}

impl TraitDescriptor {
    pub fn new(name: &str, kind: TraitKind, classes: &[&str]) -> Result<Self, OverlayError> {
        let t = TraitDescriptor {
            name: name.to_string(),
            kind,
            classes: classes.iter().map(|c| c.to_string()).collect(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), OverlayError> {
        if self.classes.is_empty() {
            return Err(OverlayError::InvalidTrait(self.name.clone(), "no classes".into()));
        }
        let unique: BTreeSet<&String> = self.classes.iter().collect();
        if unique.len() != self.classes.len() {
            return Err(OverlayError::InvalidTrait(
                self.name.clone(),
                "duplicate class labels".into(),
            ));
        }
        Ok(())
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Palette for this trait's classes, by kind.
    pub fn palette(&self) -> Vec<Rgb> {
        match self.kind {
            TraitKind::Nominal => nominal_palette(self.classes.len()),
            TraitKind::Ordinal => ordinal_palette(self.classes.len()),
        }
    }
}

fn find_trait<'a>(catalog: &'a [TraitDescriptor], name: &str) -> Result<&'a TraitDescriptor, OverlayError> {
    catalog
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| OverlayError::UnknownTrait(name.to_string()))
}

/// One observation of a trait class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhenotypeRecord {
    pub line: LineId,
    pub trait_name: String,
    pub value: String,
    pub year: Option<i32>,
    pub site: Option<String>,
}

type RecordKey = (LineId, String, Option<i32>, Option<String>);

/// Phenotype observations, unique per `(line, trait, year, site)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhenotypeTable {
    records: BTreeMap<RecordKey, String>,
}

/// How several years or sites of one trait collapse to one class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollapsePolicy {
    /// Latest year wins; records without a year count as oldest and equal
    /// years resolve to the alphabetically first site.
    #[default]
    MostRecent,
    /// Most frequent class; ties go to the earlier class in trait order.
    Majority,
}

impl PhenotypeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a record, returning the value it replaced.
    pub fn insert(&mut self, rec: PhenotypeRecord) -> Option<String> {
        self.records
            .insert((rec.line, rec.trait_name, rec.year, rec.site), rec.value)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = PhenotypeRecord> + '_ {
        self.records.iter().map(|((line, t, year, site), value)| PhenotypeRecord {
            line: line.clone(),
            trait_name: t.clone(),
            value: value.clone(),
            year: *year,
            site: site.clone(),
        })
    }

    pub fn lines(&self) -> BTreeSet<&LineId> {
        self.records.keys().map(|k| &k.0).collect()
    }

    fn observations<'a>(
        &'a self,
        line: &'a LineId,
        trait_name: &'a str,
    ) -> impl Iterator<Item = (&'a Option<i32>, &'a Option<String>, &'a String)> + 'a {
        self.records
            .range((line.clone(), trait_name.to_string(), None, None)..)
            .take_while(move |(k, _)| &k.0 == line && k.1 == trait_name)
            .map(|(k, v)| (&k.2, &k.3, v))
    }

    /// The single class shown for a line and trait.
    pub fn resolve<'a>(
        &'a self,
        line: &'a LineId,
        descriptor: &'a TraitDescriptor,
        policy: CollapsePolicy,
    ) -> Option<&'a str> {
        let obs: Vec<_> = self.observations(line, &descriptor.name).collect();
        match policy {
            CollapsePolicy::MostRecent => obs
                .iter()
                // Max year; among equal years the first site wins, so
                // compare sites reversed.
                .max_by(|a, b| a.0.cmp(b.0).then_with(|| b.1.cmp(a.1)))
                .map(|o| o.2.as_str()),
            CollapsePolicy::Majority => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for o in &obs {
                    *counts.entry(o.2.as_str()).or_default() += 1;
                }
                counts
                    .into_iter()
                    .max_by(|a, b| {
                        a.1.cmp(&b.1).then_with(|| {
                            let ia = descriptor.class_index(a.0).unwrap_or(usize::MAX);
                            let ib = descriptor.class_index(b.0).unwrap_or(usize::MAX);
                            ib.cmp(&ia)
                        })
                    })
                    .map(|(v, _)| v)
            }
        }
    }
}

/// A distinct combination of classes across the selected traits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinationClass {
    /// One slot per selected trait; `None` is the unknown slot.
    pub values: Vec<Option<String>>,
    pub label: String,
    pub color: Rgb,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedPhenotypes {
    pub traits: Vec<String>,
    pub classes: Vec<CombinationClass>,
    /// Class index per line.
    pub assignment: BTreeMap<LineId, usize>,
}

pub const UNKNOWN_LABEL: &str = "unknown";

/// Groups lines by the exact tuple of their classes over `trait_names`.
/// Each observed tuple becomes one class, colored from the nominal palette
/// in tuple order (trait class order, unknown last).
pub fn merge_phenotypes(
    table: &PhenotypeTable,
    catalog: &[TraitDescriptor],
    trait_names: &[String],
    lines: &[LineId],
    policy: CollapsePolicy,
) -> Result<MergedPhenotypes, OverlayError> {
    let traits: Vec<&TraitDescriptor> = trait_names
        .iter()
        .map(|n| find_trait(catalog, n))
        .collect::<Result<_, _>>()?;
    let mut tuples: BTreeMap<Vec<usize>, Vec<&LineId>> = BTreeMap::new();
    for line in lines {
        let key: Vec<usize> = traits
            .iter()
            .map(|t| {
                table
                    .resolve(line, t, policy)
                    .and_then(|v| t.class_index(v))
                    .unwrap_or(usize::MAX)
            })
            .collect();
        tuples.entry(key).or_default().push(line);
    }
    let palette = nominal_palette(tuples.len());
    let mut classes = Vec::with_capacity(tuples.len());
    let mut assignment = BTreeMap::new();
    for (k, (key, members)) in tuples.into_iter().enumerate() {
        let values: Vec<Option<String>> = key
            .iter()
            .zip(&traits)
            .map(|(&i, t)| t.classes.get(i).cloned())
            .collect();
        let label = values
            .iter()
            .map(|v| v.as_deref().unwrap_or(UNKNOWN_LABEL))
            .collect::<Vec<_>>()
            .join(" / ");
        for line in &members {
            assignment.insert((*line).clone(), k);
        }
        classes.push(CombinationClass {
            values,
            label,
            color: palette[k],
            count: members.len(),
        });
    }
    Ok(MergedPhenotypes {
        traits: trait_names.to_vec(),
        classes,
        assignment,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeMode {
    TimesAsParent,
    DescendantCount,
}

impl FromStr for SizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uses" | "times_as_parent" => Ok(SizeMode::TimesAsParent),
            "descendants" | "descendant_count" => Ok(SizeMode::DescendantCount),
            other => Err(format!("unknown size mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRange<F> {
    pub min_r: F,
    pub max_r: F,
}

impl<F: Scalar> Default for SizeRange<F> {
    fn default() -> Self {
        SizeRange {
            min_r: F::of(4.0),
            max_r: F::of(16.0),
        }
    }
}

/// `min_r + (max_r - min_r) * sqrt(count / max_count)`, so node area grows
/// roughly with the count.
pub fn size_nodes<F: Scalar>(
    stats: &UsageStats,
    mode: SizeMode,
    range: SizeRange<F>,
) -> Result<BTreeMap<LineId, F>, OverlayError> {
    if !(range.min_r > F::zero() && range.max_r > range.min_r) {
        return Err(OverlayError::InvalidRange);
    }
    let count = |u: &crate::pedigree::LineUsage| match mode {
        SizeMode::TimesAsParent => u.times_as_parent,
        SizeMode::DescendantCount => u.descendant_count,
    };
    let max = stats.per_line.values().map(count).max().unwrap_or(0);
    Ok(stats
        .per_line
        .iter()
        .map(|(id, u)| {
            let c = count(u);
            let size = if max == 0 || c == 0 {
                range.min_r
            } else {
                range.min_r + (range.max_r - range.min_r) * F::ratio(c as u64, max as u64).sqrt()
            };
            (id.clone(), size)
        })
        .collect())
}

/// Class counts over `lines`: in class order for ordinal traits, by
/// descending count (ties in class order) for nominal ones. Every class
/// gets a bin.
pub fn class_histogram(
    table: &PhenotypeTable,
    catalog: &[TraitDescriptor],
    trait_name: &str,
    lines: &[LineId],
    policy: CollapsePolicy,
) -> Result<Vec<(String, usize)>, OverlayError> {
    let t = find_trait(catalog, trait_name)?;
    let mut counts = vec![0usize; t.classes.len()];
    for line in lines {
        if let Some(i) = table.resolve(line, t, policy).and_then(|v| t.class_index(v)) {
            counts[i] += 1;
        }
    }
    let mut bins: Vec<(usize, String, usize)> = t
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.clone(), counts[i]))
        .collect();
    if t.kind == TraitKind::Nominal {
        bins.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    }
    Ok(bins.into_iter().map(|(_, c, n)| (c, n)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeStyle<F> {
    /// `None` draws with [`NEUTRAL_FILL`].
    pub fill: Option<Rgb>,
    pub size: F,
    pub highlight: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub label: String,
    pub color: Rgb,
}

/// Per-line fill, size and highlight plus the legend explaining the fills.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlaySpec<F> {
    pub nodes: BTreeMap<LineId, NodeStyle<F>>,
    pub legend: Vec<LegendEntry>,
}

/// Lower edges of the similarity color bins: 0.45, 0.50, ..., 0.95.
pub const SIMILARITY_BIN_FLOOR: f64 = 0.45;
pub const SIMILARITY_BIN_WIDTH: f64 = 0.05;
pub const SIMILARITY_COLOR_BINS: usize = 11;

impl<F: Scalar> OverlaySpec<F> {
    /// Every line uncolored at `size`.
    pub fn uniform<'a>(lines: impl IntoIterator<Item = &'a LineId>, size: F) -> Self {
        OverlaySpec {
            nodes: lines
                .into_iter()
                .map(|id| {
                    (
                        id.clone(),
                        NodeStyle {
                            fill: None,
                            size,
                            highlight: false,
                        },
                    )
                })
                .collect(),
            legend: Vec::new(),
        }
    }

    pub fn apply_sizes(&mut self, sizes: &BTreeMap<LineId, F>) {
        for (id, style) in self.nodes.iter_mut() {
            if let Some(s) = sizes.get(id) {
                style.size = *s;
            }
        }
    }

    /// Colors lines by their combination class.
    pub fn apply_merged(&mut self, merged: &MergedPhenotypes) {
        for (id, style) in self.nodes.iter_mut() {
            style.fill = merged.assignment.get(id).map(|&k| merged.classes[k].color);
        }
        self.legend = merged
            .classes
            .iter()
            .map(|c| LegendEntry {
                label: c.label.clone(),
                color: c.color,
            })
            .collect();
    }

    /// Colors lines by similarity to a base line in 0.05 bins from 0.45 up,
    /// darker meaning more similar, and highlights lines at or above
    /// `cutoff`. Lines below 0.45 or without a score stay uncolored.
    pub fn apply_similarity(&mut self, scores: &BTreeMap<LineId, Option<F>>, cutoff: F) {
        let palette = ordinal_palette(SIMILARITY_COLOR_BINS);
        for (id, style) in self.nodes.iter_mut() {
            let score = scores.get(id).copied().flatten();
            style.highlight = score.is_some_and(|s| s >= cutoff);
            style.fill = score.and_then(|s| {
                let s = s.as_f64();
                if s < SIMILARITY_BIN_FLOOR {
                    return None;
                }
                let bin = ((s - SIMILARITY_BIN_FLOOR) / SIMILARITY_BIN_WIDTH + 1e-9).floor() as usize;
                Some(palette[bin.min(SIMILARITY_COLOR_BINS - 1)])
            });
        }
        self.legend = palette
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let lo = SIMILARITY_BIN_FLOOR + i as f64 * SIMILARITY_BIN_WIDTH;
                let hi = (lo + SIMILARITY_BIN_WIDTH).min(1.0);
                LegendEntry {
                    label: format!("{lo:.2}-{hi:.2}"),
                    color: *c,
                }
            })
            .collect();
    }

    /// Every fill in use appears exactly once in the legend.
    pub fn legend_complete(&self) -> bool {
        let mut counts: BTreeMap<Rgb, usize> = BTreeMap::new();
        for e in &self.legend {
            *counts.entry(e.color).or_default() += 1;
        }
        self.nodes
            .values()
            .filter_map(|s| s.fill)
            .all(|c| counts.get(&c) == Some(&1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pedigree::LineUsage;

    fn distinct(colors: &[Rgb]) -> bool {
        colors.iter().collect::<HashSet<_>>().len() == colors.len()
    }

    #[test]
    fn hex_round_trip_and_format() {
        let c: Rgb = "#E41A1C".parse().unwrap();
        assert_eq!(c, Rgb(0xE4, 0x1A, 0x1C));
        assert_eq!(c.to_string(), "#E41A1C");
        assert_eq!(c.to_string().len(), 7);
        assert!("E41A1C".parse::<Rgb>().is_err());
        assert_eq!(serde_json::to_string(&c).unwrap(), "\"#E41A1C\"");
    }

    #[test]
    fn hsl_round_trip_is_close() {
        for hex in NOMINAL_BASE {
            let c: Rgb = hex.parse().unwrap();
            let (h, s, l) = c.to_hsl();
            assert_eq!(Rgb::from_hsl(h, s, l), c);
        }
    }

    #[test]
    fn nominal_palettes() {
        let one = nominal_palette(1);
        assert_eq!(one, vec![NOMINAL_BASE[0].parse().unwrap()]);
        let eight = nominal_palette(8);
        let table: Vec<Rgb> = NOMINAL_BASE.iter().map(|h| h.parse().unwrap()).collect();
        assert_eq!(eight, table);
        assert!(distinct(&eight));
        for n in 1..=40 {
            let p = nominal_palette(n);
            assert_eq!(p.len(), n);
            assert!(distinct(&p), "n = {n}");
        }
        // Classes 9-16 share hues with the base table but are darker.
        let p = nominal_palette(16);
        for i in 0..8 {
            assert!(p[i + 8].lightness() < p[i].lightness());
        }
        assert_eq!(nominal_palette(20), nominal_palette(20));
    }

    #[test]
    fn ordinal_palettes() {
        let two = ordinal_palette(2);
        assert!(two[0].lightness() > two[1].lightness());
        let five = ordinal_palette(5);
        assert!(five.windows(2).all(|w| w[0].lightness() > w[1].lightness()));
        assert!(five.windows(2).all(|w| w[0].to_hsl().1 <= w[1].to_hsl().1 + 1e-9));
        for n in 2..=12 {
            let p = ordinal_palette(n);
            for w in p.windows(2) {
                let step = w[0].lightness() - w[1].lightness();
                assert!(step >= ORDINAL_MIN_LIGHTNESS_STEP, "n = {n}, step = {step}");
            }
            for c in &p {
                let (h, _, _) = c.to_hsl();
                assert!((h - ORDINAL_HUE).abs() < 3.0, "hue drift {h}");
            }
        }
    }

    fn catalog() -> Vec<TraitDescriptor> {
        vec![
            TraitDescriptor::new("T1", TraitKind::Nominal, &["a", "b"]).unwrap(),
            TraitDescriptor::new("T2", TraitKind::Nominal, &["x", "y"]).unwrap(),
            TraitDescriptor::new(
                "Anthocyanin",
                TraitKind::Ordinal,
                &["absent", "weak", "medium", "strong"],
            )
            .unwrap(),
        ]
    }

    fn rec(line: &str, t: &str, v: &str, year: Option<i32>, site: Option<&str>) -> PhenotypeRecord {
        PhenotypeRecord {
            line: line.into(),
            trait_name: t.into(),
            value: v.into(),
            year,
            site: site.map(String::from),
        }
    }

    #[test]
    fn trait_descriptor_validation() {
        assert!(TraitDescriptor::new("T", TraitKind::Nominal, &[]).is_err());
        assert!(TraitDescriptor::new("T", TraitKind::Nominal, &["a", "a"]).is_err());
    }

    #[test]
    fn merge_combinations() {
        let mut table = PhenotypeTable::new();
        table.insert(rec("L1", "T1", "a", None, None));
        table.insert(rec("L1", "T2", "x", None, None));
        table.insert(rec("L2", "T1", "a", None, None));
        table.insert(rec("L2", "T2", "y", None, None));
        table.insert(rec("L3", "T1", "a", None, None));
        let traits = vec!["T1".to_string(), "T2".to_string()];
        let lines: Vec<LineId> = vec!["L1".into(), "L2".into()];
        let m = merge_phenotypes(&table, &catalog(), &traits, &lines, CollapsePolicy::MostRecent).unwrap();
        assert_eq!(m.classes.len(), 2);
        assert_ne!(m.classes[0].color, m.classes[1].color);

        let one = merge_phenotypes(&table, &catalog(), &traits[..1], &lines, CollapsePolicy::MostRecent)
            .unwrap();
        assert_eq!(one.classes.len(), 1);
        assert_eq!(one.classes[0].values, vec![Some("a".to_string())]);

        let with_missing = merge_phenotypes(
            &table,
            &catalog(),
            &traits,
            &["L3".into()],
            CollapsePolicy::MostRecent,
        )
        .unwrap();
        assert_eq!(with_missing.classes[0].values, vec![Some("a".into()), None]);
        assert_eq!(with_missing.classes[0].label, "a / unknown");

        let err = merge_phenotypes(&table, &catalog(), &["Nope".into()], &lines, CollapsePolicy::MostRecent);
        assert_eq!(err.unwrap_err(), OverlayError::UnknownTrait("Nope".into()));
    }

    #[test]
    fn collapse_policies() {
        let cat = catalog();
        let t = &cat[2];
        let mut table = PhenotypeTable::new();
        table.insert(rec("L", "Anthocyanin", "weak", Some(2010), Some("Dundee")));
        table.insert(rec("L", "Anthocyanin", "weak", Some(2011), Some("Cambridge")));
        table.insert(rec("L", "Anthocyanin", "strong", Some(2012), Some("Dundee")));
        assert_eq!(table.resolve(&"L".into(), t, CollapsePolicy::MostRecent), Some("strong"));
        assert_eq!(table.resolve(&"L".into(), t, CollapsePolicy::Majority), Some("weak"));
        // Same key: last write wins.
        let old = table.insert(rec("L", "Anthocyanin", "medium", Some(2012), Some("Dundee")));
        assert_eq!(old.as_deref(), Some("strong"));
        assert_eq!(table.resolve(&"L".into(), t, CollapsePolicy::MostRecent), Some("medium"));
    }

    #[test]
    fn sizes() {
        let mut stats = UsageStats::default();
        for (id, uses) in [("A", 0usize), ("B", 4), ("C", 16)] {
            stats.per_line.insert(
                id.into(),
                LineUsage {
                    times_as_parent: uses,
                    descendant_count: uses,
                    ancestor_count: 0,
                },
            );
        }
        let range = SizeRange { min_r: 2.0, max_r: 10.0 };
        let s = size_nodes(&stats, SizeMode::TimesAsParent, range).unwrap();
        assert_eq!(s[&LineId::from("A")], 2.0);
        assert_eq!(s[&LineId::from("C")], 10.0);
        // count = max/4 -> halfway under sqrt scaling.
        assert_eq!(s[&LineId::from("B")], 6.0);

        for u in stats.per_line.values_mut() {
            u.times_as_parent = 0;
        }
        let s = size_nodes(&stats, SizeMode::TimesAsParent, range).unwrap();
        assert!(s.values().all(|&v| v == 2.0));
        let bad = SizeRange { min_r: 3.0, max_r: 3.0 };
        assert_eq!(
            size_nodes(&stats, SizeMode::TimesAsParent, bad).unwrap_err(),
            OverlayError::InvalidRange
        );
    }

    #[test]
    fn histograms() {
        let cat = catalog();
        let mut table = PhenotypeTable::new();
        for l in ["L1", "L2", "L3"] {
            table.insert(rec(l, "T1", "a", None, None));
        }
        let lines: Vec<LineId> = vec!["L1".into(), "L2".into(), "L3".into()];
        let h = class_histogram(&table, &cat, "T1", &lines, CollapsePolicy::MostRecent).unwrap();
        assert_eq!(h, vec![("a".into(), 3), ("b".into(), 0)]);
        let h = class_histogram(&table, &cat, "T1", &[], CollapsePolicy::MostRecent).unwrap();
        assert!(h.iter().all(|(_, n)| *n == 0));

        // Ordinal bins stay in class order whatever the counts.
        let classes = ["absent", "weak", "medium", "strong"];
        let values = [3, 3, 1, 2, 3, 0, 3, 1, 2, 3];
        let mut table = PhenotypeTable::new();
        let mut lines = Vec::new();
        for (i, v) in values.iter().enumerate() {
            let id = format!("L{i}");
            table.insert(rec(&id, "Anthocyanin", classes[*v], None, None));
            lines.push(LineId::new(id));
        }
        let h = class_histogram(&table, &cat, "Anthocyanin", &lines, CollapsePolicy::MostRecent).unwrap();
        let mut tally = [0usize; 4];
        for v in values {
            tally[v] += 1;
        }
        let expected: Vec<(String, usize)> =
            classes.iter().zip(tally).map(|(c, n)| (c.to_string(), n)).collect();
        assert_eq!(h, expected);
        assert!(class_histogram(&table, &cat, "Nope", &lines, CollapsePolicy::MostRecent).is_err());
    }

    #[test]
    fn overlay_legend_is_complete() {
        let ids: Vec<LineId> = vec!["A".into(), "B".into(), "C".into()];
        let mut spec: OverlaySpec<f64> = OverlaySpec::uniform(&ids, 4.0);
        let scores: BTreeMap<LineId, Option<f64>> = [
            ("A".into(), Some(1.0)),
            ("B".into(), Some(0.5)),
            ("C".into(), Some(0.2)),
        ]
        .into_iter()
        .collect();
        spec.apply_similarity(&scores, 0.45);
        assert!(spec.legend_complete());
        assert!(spec.nodes[&LineId::from("A")].highlight);
        assert!(spec.nodes[&LineId::from("C")].fill.is_none());
        assert_eq!(spec.nodes[&LineId::from("A")].fill, Some(spec.legend[10].color));
        assert_eq!(spec.nodes[&LineId::from("B")].fill, Some(spec.legend[1].color));
    }
}
