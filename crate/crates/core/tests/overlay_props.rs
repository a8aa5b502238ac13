use std::collections::{BTreeMap, BTreeSet};

use pednet_core::overlay::{
    merge_phenotypes, nominal_palette, ordinal_palette, size_nodes, CollapsePolicy, PhenotypeRecord,
    SizeMode, ORDINAL_MIN_LIGHTNESS_STEP,
};
use pednet_core::{
    LineId, LineUsage, OverlaySpec, PhenotypeTable, SizeRange, TraitDescriptor, TraitKind, UsageStats,
};
use proptest::prelude::*;

#[test]
fn palettes_are_deterministic_and_distinct() {
    for n in 0..=20 {
        let p = nominal_palette(n);
        assert_eq!(p, nominal_palette(n));
        assert_eq!(p.iter().collect::<BTreeSet<_>>().len(), n);
    }
    for n in 2..=12 {
        let p = ordinal_palette(n);
        assert_eq!(p, ordinal_palette(n));
        for w in p.windows(2) {
            assert!(w[0].lightness() - w[1].lightness() >= ORDINAL_MIN_LIGHTNESS_STEP - 1e-9);
        }
    }
}

fn stats(counts: &[usize]) -> UsageStats {
    UsageStats {
        per_line: counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                (
                    LineId::new(format!("L{i:03}")),
                    LineUsage {
                        times_as_parent: c,
                        descendant_count: c,
                        ancestor_count: 0,
                    },
                )
            })
            .collect(),
    }
}

fn traits() -> Vec<TraitDescriptor> {
    vec![
        TraitDescriptor::new("Ecotype", TraitKind::Nominal, &["winter", "spring"]).unwrap(),
        TraitDescriptor::new("Colour", TraitKind::Ordinal, &["absent", "weak", "medium", "strong"])
            .unwrap(),
    ]
}

proptest! {
    #[test]
    fn sizes_are_monotone(counts in proptest::collection::vec(0usize..500, 1..60)) {
        let s = stats(&counts);
        let range = SizeRange::default();
        let sizes = size_nodes(&s, SizeMode::TimesAsParent, range).unwrap();
        let pairs: Vec<(usize, f64)> = s.per_line.iter().map(|(id, u)| (u.times_as_parent, sizes[id])).collect();
        for a in &pairs {
            prop_assert!(a.1 >= range.min_r - 1e-12 && a.1 <= range.max_r + 1e-12);
            for b in &pairs {
                if a.0 < b.0 {
                    prop_assert!(a.1 < b.1);
                }
            }
        }
    }

    #[test]
    fn merged_classes_and_legend(obs in proptest::collection::vec((0usize..30, prop::option::of(0usize..2), prop::option::of(0usize..4)), 0..80)) {
        let catalog = traits();
        let mut table = PhenotypeTable::new();
        for (line, eco, col) in &obs {
            let line = LineId::new(format!("L{line:02}"));
            if let Some(e) = eco {
                table.insert(PhenotypeRecord { line: line.clone(), trait_name: "Ecotype".into(), value: catalog[0].classes[*e].clone(), year: None, site: None });
            }
            if let Some(c) = col {
                table.insert(PhenotypeRecord { line: line.clone(), trait_name: "Colour".into(), value: catalog[1].classes[*c].clone(), year: None, site: None });
            }
        }
        let lines: Vec<LineId> = (0..30).map(|i| LineId::new(format!("L{i:02}"))).collect();
        let names = vec!["Ecotype".to_string(), "Colour".to_string()];
        let merged = merge_phenotypes(&table, &catalog, &names, &lines, CollapsePolicy::MostRecent).unwrap();
        prop_assert!(merged.classes.len() <= 3 * 5);

        let mut tuples = BTreeSet::new();
        for l in &lines {
            let t: Vec<Option<&str>> = catalog.iter().map(|d| table.resolve(l, d, CollapsePolicy::MostRecent)).collect();
            tuples.insert(t);
        }
        prop_assert_eq!(merged.classes.len(), tuples.len());

        let mut spec = OverlaySpec::uniform(lines.iter(), 5.0);
        spec.apply_merged(&merged);
        prop_assert!(spec.legend_complete());
        let used: BTreeSet<_> = spec.nodes.values().filter_map(|s| s.fill).collect();
        let legend: BTreeMap<_, usize> = spec.legend.iter().fold(BTreeMap::new(), |mut m, e| { *m.entry(e.color).or_default() += 1; m });
        for c in used {
            prop_assert_eq!(legend.get(&c), Some(&1));
        }
    }
}
