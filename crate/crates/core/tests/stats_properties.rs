mod common;

use formulab::stats::{build_table, compare, normal_cdf, z_score, MetricDist, Verdict};
use proptest::prelude::*;

fn dist() -> impl Strategy<Value = MetricDist> {
    (-1e3..1e3f64, 1e-3..1e2f64, 1usize..20).prop_map(|(m, s, n)| MetricDist::new(m, s, n))
}

proptest! {
    #[test]
    fn z_is_antisymmetric(a in dist(), b in dist()) {
        prop_assert_eq!(z_score(&a, &b), -z_score(&b, &a));
    }

    #[test]
    fn z_is_scale_equivariant(a in dist(), b in dist(), c in 1e-3..1e3f64) {
        let scale = |d: MetricDist| MetricDist::new(d.mean * c, d.std * c, d.n);
        let z = z_score(&a, &b);
        let zc = z_score(&scale(a), &scale(b));
        prop_assert!((z - zc).abs() <= 1e-12 * z.abs().max(1.0), "{} vs {}", z, zc);
    }

    #[test]
    fn verdicts_mirror(a in dist(), b in dist()) {
        let ab = compare(&a, &b).verdict;
        let ba = compare(&b, &a).verdict;
        prop_assert_eq!(ab == Verdict::Better, ba == Verdict::Worse);
        prop_assert_eq!(ab == Verdict::Indistinguishable, ba == Verdict::Indistinguishable);
    }

    #[test]
    fn probabilities_complement(a in dist(), b in dist()) {
        let p = compare(&a, &b).probability + compare(&b, &a).probability;
        prop_assert!((p - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cdf_is_monotone(x in -10.0..10.0f64, dx in 1e-6..1.0f64) {
        prop_assert!(normal_cdf(x) <= normal_cdf(x + dx));
    }
}

#[test]
fn table_z_values_match_within_rounding() {
    let table = build_table(&common::stats()).unwrap();
    for (row, published) in table.rows.iter().zip(common::TABLE.iter()) {
        for (m, (cell, printed)) in row.cells.iter().zip(published.z).enumerate() {
            let Some(want) = printed else { continue };
            let got = cell.z.unwrap();
            if common::ROUNDED_INPUT_ROWS.contains(&(published.name, m)) {
                let reference = common::reference_row(published).unwrap();
                let (lo, hi) = common::z_interval(
                    common::metric_pair(published, m).unwrap(),
                    common::metric_pair(reference, m).unwrap(),
                    common::HALF_UNIT[m],
                );
                assert!(lo <= want && want <= hi, "{}: {want} outside [{lo}, {hi}]", published.name);
                assert!((got - want).abs() < 0.02);
            } else {
                // Half a unit of the printed z plus the effect of rounded inputs.
                assert!((got - want).abs() <= 0.01, "{} metric {m}: {got} vs {want}", published.name);
            }
        }
    }
}

#[test]
fn reference_rows_have_no_z() {
    let table = build_table(&common::stats()).unwrap();
    for row in table.rows.iter().filter(|r| r.reference.is_none()) {
        assert!(row.cells.iter().all(|c| c.z.is_none() && c.verdict.is_none()));
    }
}

#[test]
fn population_std_matches_published_steps() {
    // 63000 ± 22825 over 10 seeds on a 10k-step grid: the multiset
    // {30k, 40k, 40k, 50k, 60k, 70k, 70k, 80k, 80k, 110k} has population σ 22825.
    let steps = [30e3, 40e3, 40e3, 50e3, 60e3, 70e3, 70e3, 80e3, 80e3, 110e3];
    let d = MetricDist::from_samples(&steps).unwrap();
    assert_eq!(d.mean, 63_000.0);
    assert!((d.std - 22_825.0).abs() < 0.5, "{}", d.std);
}
