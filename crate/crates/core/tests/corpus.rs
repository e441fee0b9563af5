use std::collections::BTreeSet;

use excellence_core::corpus::{
    apply_thresholds, attribute_full_counting, parse_papers, DocType, PaperFormat, PaperRecord, Thresholds,
};
use proptest::prelude::*;

fn arb_paper() -> impl Strategy<Value = PaperRecord> {
    (
        prop::collection::btree_set(0usize..12, 1..4),
        prop::collection::btree_set(prop::sample::select(vec!["A", "B"]), 1..3),
    )
        .prop_map(|(affs, subjects)| PaperRecord {
            paper_id: String::new(),
            year: 2007,
            doc_type: DocType::Article,
            subject_areas: subjects.into_iter().map(String::from).collect(),
            citations: 1,
            journal_sjr2: 1.0,
            affiliations: affs.into_iter().map(|a| format!("I{a:02}")).collect(),
        })
}

fn corpus() -> impl Strategy<Value = Vec<PaperRecord>> {
    prop::collection::vec(arb_paper(), 0..200).prop_map(|mut ps| {
        for (i, p) in ps.iter_mut().enumerate() {
            p.paper_id = format!("P{i}");
        }
        ps
    })
}

proptest! {
    #[test]
    fn attribution_conserves_affiliations(papers in corpus(), min_papers in 1usize..20) {
        let th = Thresholds { min_papers, min_institutions: 1 };
        let Ok(kept) = apply_thresholds("A", attribute_full_counting(&papers, "A"), th) else {
            return Ok(());
        };
        let retained: BTreeSet<&String> = kept.keys().collect();
        let lhs: usize = kept.values().map(Vec::len).sum();
        let rhs: usize = papers
            .iter()
            .filter(|p| p.subject_areas.contains("A"))
            .map(|p| p.affiliations.iter().filter(|a| retained.contains(a)).count())
            .sum();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn thresholds_are_monotone(papers in corpus(), lo in 1usize..30, extra in 0usize..30, inst in 1usize..12) {
        let table = attribute_full_counting(&papers, "B");
        let run = |min_papers, min_institutions| {
            apply_thresholds("B", table.clone(), Thresholds { min_papers, min_institutions })
        };
        if let Ok(high) = run(lo + extra, 1) {
            let low = run(lo, 1).unwrap();
            prop_assert!(high.keys().all(|k| low.contains_key(k)));
        }
        if run(lo, inst + 1).is_ok() {
            prop_assert!(run(lo, inst).is_ok());
        }
    }

    #[test]
    fn jsonl_round_trip(papers in corpus()) {
        let text: String = papers
            .iter()
            .map(|p| serde_json::to_string(p).unwrap() + "\n")
            .collect();
        prop_assert_eq!(parse_papers(text.as_bytes(), PaperFormat::Jsonl).unwrap(), papers);
    }
}
