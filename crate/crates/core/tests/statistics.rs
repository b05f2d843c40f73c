mod common;

use fetalsim::eval::{bonferroni, build_report, dice, wilcoxon_signed_rank, Comparison, DscTable, ZeroMethod};
use fetalsim::volume::{Grid, LabelVolume};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{dice_oracle, integer_pair, wilcoxon_enumeration};

#[test]
fn exact_p_equals_sign_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let (x, y) = integer_pair(&mut rng);
        let (w, p) = wilcoxon_enumeration(&x, &y).unwrap();
        let t = wilcoxon_signed_rank(&x, &y, ZeroMethod::Drop).unwrap();
        assert_eq!((t.statistic, t.p_value), (w, p), "x={x:?} y={y:?}");
        assert!(t.exact);
    }
}

#[test]
fn five_positive_differences() {
    let t = wilcoxon_signed_rank(&[1.1, 2.2, 3.3, 4.4, 5.5], &[0.0; 5], ZeroMethod::Drop).unwrap();
    assert_eq!(t.statistic, 0.0);
    assert_eq!(t.p_value, 0.0625);
}

fn labels(data: Vec<u8>) -> LabelVolume {
    LabelVolume::new(Grid::centered([4, 4, 2], [1.0; 3]).unwrap(), data).unwrap()
}

proptest! {
    #[test]
    fn dice_is_symmetric_and_matches_counting(
        a in prop::collection::vec(0u8..4, 32),
        b in prop::collection::vec(0u8..4, 32),
        class in 0u8..5,
    ) {
        let (pa, pb) = (labels(a), labels(b));
        let d = dice(&pa, &pb, class).unwrap();
        prop_assert_eq!(d, dice(&pb, &pa, class).unwrap());
        prop_assert!((d - dice_oracle(&pa, &pb, class)).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn bonferroni_is_monotone(p in prop::collection::vec(1e-9f64..=1.0, 1..12)) {
        let adj = bonferroni(&p).unwrap();
        for i in 0..p.len() {
            prop_assert!(adj[i] >= p[i] && adj[i] <= 1.0);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(adj[i] <= adj[j]);
                }
            }
        }
    }
}

fn two_config_table() -> String {
    let mut s = String::from("subject,cohort,configuration,tissue,dsc\n");
    for subj in 0..6 {
        let cohort = if subj % 2 == 0 { "neurotypical" } else { "pathological" };
        for t in 1..=7 {
            let base = 0.5 + 0.03 * subj as f64 + 0.01 * t as f64;
            s += &format!("s{subj},{cohort},Baseline,{t},{base:.3}\n");
            s += &format!("s{subj},{cohort},Adapted,{t},{:.3}\n", base + 0.05 + 0.001 * subj as f64);
        }
    }
    s
}

#[test]
fn report_is_reproducible_and_adjusts_p() {
    let table = DscTable::parse(&two_config_table(), "inline").unwrap();
    let cmp: Vec<Comparison> = vec!["Adapted:Baseline".parse().unwrap()];
    let a = build_report(&table, &cmp, 0.05, ZeroMethod::Drop).unwrap();
    let b = build_report(&table, &cmp, 0.05, ZeroMethod::Drop).unwrap();
    assert_eq!(a.summary_csv(), b.summary_csv());
    assert_eq!(a.comparisons_csv(), b.comparisons_csv());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let all = &a.cohorts[0];
    assert_eq!(all.cohort, "all");
    assert_eq!(a.cohorts.len(), 3);
    // six positive differences: exact p = 2/64, ×7 over the tissue rows
    for row in all.comparisons.iter().filter(|r| r.row != "Overall") {
        assert_eq!(row.p_raw, Some(2.0 / 64.0));
        assert_eq!(row.p_adjusted, Some(14.0 / 64.0));
        assert!(!row.significant);
    }
    let overall = all.comparisons.iter().find(|r| r.row == "Overall").unwrap();
    assert_eq!(overall.p_adjusted, Some(2.0 / 64.0));
    assert!(overall.significant);
    let rows: Vec<&str> = all.summaries.iter().filter(|s| s.configuration == "Baseline").map(|s| s.row.as_str()).collect();
    assert_eq!(rows, ["CSF", "cortical_GM", "WM", "ventricles", "cerebellum", "deep_GM", "brain_stem", "Overall"]);
}
