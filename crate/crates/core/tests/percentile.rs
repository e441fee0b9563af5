use excellence_core::corpus::DocType;
use excellence_core::percentile::{assign_percentiles, rank_stratum, Stratum, StratumPaper};
use proptest::prelude::*;

fn stratum() -> Stratum {
    Stratum {
        subject: "3100".into(),
        year: 2008,
        doc_type: DocType::Article,
    }
}

fn flagged(papers: Vec<StratumPaper>) -> usize {
    assign_percentiles(&rank_stratum(papers), &stratum())
        .iter()
        .filter(|a| a.is_class10)
        .count()
}

/// Papers whose (citations, SJR2) key is at least as high as that of 90% of
/// the stratum, counted directly from the keys.
fn oracle_flagged(keys: &[(u64, u64)]) -> usize {
    let n = keys.len();
    keys.iter()
        .filter(|k| {
            let at_or_below = keys.iter().filter(|o| *o <= *k).count();
            10 * (at_or_below - 1) >= 9 * n
        })
        .count()
}

fn papers_from_groups(groups: &[usize]) -> (Vec<StratumPaper>, Vec<(u64, u64)>) {
    let mut papers = Vec::new();
    let mut keys = Vec::new();
    for (g, &size) in groups.iter().enumerate() {
        for m in 0..size {
            papers.push(StratumPaper {
                paper_id: format!("g{g:02}m{m:02}"),
                citations: g as u64,
                journal_sjr2: 1.0,
            });
            keys.push((g as u64, 0));
        }
    }
    (papers, keys)
}

fn compositions(n: usize) -> Vec<Vec<usize>> {
    (0..1u32 << (n - 1))
        .map(|mask| {
            let mut parts = vec![1usize];
            for bit in 0..n - 1 {
                if mask & (1 << bit) != 0 {
                    *parts.last_mut().unwrap() += 1;
                } else {
                    parts.push(1);
                }
            }
            parts
        })
        .collect()
}

#[test]
fn tie_free_strata_flag_n_minus_ceil_ninety_percent() {
    for n in 1..=1000usize {
        let papers = (0..n)
            .map(|i| StratumPaper {
                paper_id: format!("p{i:04}"),
                citations: ((i * 7919) % n) as u64,
                journal_sjr2: 1.0,
            })
            .collect();
        let expected = n - (9 * n).div_ceil(10);
        assert_eq!(flagged(papers), expected, "n={n}");
    }
}

#[test]
fn every_tie_pattern_matches_the_oracle_and_never_deflates() {
    for n in 1..=12usize {
        let tie_free = n - (9 * n).div_ceil(10);
        for groups in compositions(n) {
            let (papers, keys) = papers_from_groups(&groups);
            let got = flagged(papers);
            assert_eq!(got, oracle_flagged(&keys), "groups {groups:?}");
            assert!(got >= tie_free, "groups {groups:?}");
            // merging two adjacent groups adds ties and must not lower the count
            for i in 0..groups.len().saturating_sub(1) {
                let mut merged = groups.clone();
                let extra = merged.remove(i + 1);
                merged[i] += extra;
                assert!(flagged(papers_from_groups(&merged).0) >= got, "{groups:?} merge {i}");
            }
        }
    }
}

#[test]
fn input_order_is_irrelevant() {
    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, head);
                out.push(p);
            }
        }
        out
    }
    let (papers, _) = papers_from_groups(&[2, 1, 3, 1]);
    let reference = assign_percentiles(&rank_stratum(papers.clone()), &stratum());
    for perm in permutations(&(0..papers.len()).collect::<Vec<_>>()) {
        let shuffled = perm.iter().map(|&i| papers[i].clone()).collect();
        assert_eq!(assign_percentiles(&rank_stratum(shuffled), &stratum()), reference);
    }
}

proptest! {
    #[test]
    fn flagged_count_never_falls_below_the_tie_free_count(
        cites in prop::collection::vec(0u64..50, 10..400),
        distinct in any::<bool>(),
    ) {
        let n = cites.len();
        let papers: Vec<_> = cites.iter().enumerate().map(|(i, &c)| StratumPaper {
            paper_id: format!("p{i:04}"),
            citations: if distinct { i as u64 } else { c },
            journal_sjr2: (i % 3) as f64,
        }).collect();
        let got = flagged(papers);
        let tie_free = n - (9 * n).div_ceil(10);
        prop_assert!(got >= tie_free);
        if distinct {
            // share within (10% − 1/n, 10%]
            prop_assert_eq!(got, tie_free);
            let share = got as f64 / n as f64;
            prop_assert!(share <= 0.1 + 1e-12 && share > 0.1 - 1.0 / n as f64);
        }
    }

    #[test]
    fn monotone_rescaling_preserves_percentiles(
        cites in prop::collection::vec(0u64..10_000, 1..200),
        scale in 1u64..50,
        shift in 0u64..1000,
    ) {
        let make = |f: &dyn Fn(u64) -> u64| -> Vec<StratumPaper> {
            cites.iter().enumerate().map(|(i, &c)| StratumPaper {
                paper_id: format!("p{i:04}"),
                citations: f(c),
                journal_sjr2: 0.5,
            }).collect()
        };
        let a = assign_percentiles(&rank_stratum(make(&|c| c)), &stratum());
        let b = assign_percentiles(&rank_stratum(make(&|c| c * scale + shift)), &stratum());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ranks_are_a_permutation(cites in prop::collection::vec((0u64..20, 0u8..3), 1..300)) {
        let papers: Vec<_> = cites.iter().enumerate().map(|(i, &(c, s))| StratumPaper {
            paper_id: format!("p{i:04}"),
            citations: c,
            journal_sjr2: s as f64,
        }).collect();
        let n = papers.len();
        let a = assign_percentiles(&rank_stratum(papers), &stratum());
        let mut ranks: Vec<usize> = a.iter().map(|x| x.rank).collect();
        ranks.sort_unstable();
        prop_assert_eq!(ranks, (1..=n).collect::<Vec<_>>());
        for x in &a {
            prop_assert!((0.0..100.0).contains(&x.percentile));
            prop_assert_eq!(x.is_class10, x.percentile >= 90.0);
        }
    }
}
