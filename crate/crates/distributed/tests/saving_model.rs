use sensorsift_distributed::analytic::{
    within_tolerance, TABLE3_K, TABLE3_MB, TABLE3_N, TABLE3_NODES, TABLE3_SENSORS_PER_NODE,
};
use sensorsift_distributed::{analytic_saving, fit_record_size, table3_report};

#[test]
fn fitted_record_size_is_about_two_hundred_bytes() {
    let r = fit_record_size();
    assert!((r - 202.33).abs() < 0.01, "{r}");
}

#[test]
fn reconstruction_reproduces_published_table() {
    let report = table3_report(fit_record_size());
    assert_eq!(report.cells.len(), 45);
    assert!(report.fraction_matched() >= 0.9, "{}", report.fraction_matched());
    let first = report.cell(10, 100).unwrap();
    assert!(within_tolerance(-60.7, first.model_mb), "{first:?}");
    let last = report.cell(500_000, 1_000_000).unwrap();
    assert!(within_tolerance(101.2, last.model_mb), "{last:?}");
}

#[test]
fn literal_equation_does_not_fit() {
    let report = table3_report(fit_record_size());
    let literal_matches = report
        .cells
        .iter()
        .filter(|c| within_tolerance(c.published_mb, c.literal_mb))
        .count();
    assert!(literal_matches < report.cells.len() / 2);
}

fn saving(big_n: u64, k: u64) -> f64 {
    analytic_saving(TABLE3_NODES, TABLE3_SENSORS_PER_NODE, big_n, k, 200.0)
        .unwrap()
        .reconstructed
}

#[test]
fn saving_grows_with_n() {
    for &k in &TABLE3_K {
        let row: Vec<f64> = TABLE3_N.iter().filter(|&&n| k < n).map(|&n| saving(n, k)).collect();
        assert!(row.windows(2).all(|w| w[0] < w[1]), "k = {k}");
    }
}

#[test]
fn best_k_is_interior() {
    for &n in TABLE3_N.iter().filter(|&&n| n >= 5_000) {
        let best = (1..n).max_by(|&a, &b| saving(n, a).total_cmp(&saving(n, b))).unwrap();
        assert!(best > 1 && best < n - 1, "N = {n}: {best}");
        // continuous optimum is sqrt(S)
        assert_eq!(best, 1_000);
    }
}

#[test]
fn grey_cells_are_exactly_k_not_below_n() {
    for (i, &k) in TABLE3_K.iter().enumerate() {
        for (j, &n) in TABLE3_N.iter().enumerate() {
            assert_eq!(TABLE3_MB[i][j].is_none(), k >= n);
            assert_eq!(analytic_saving(4, 1e6, n, k, 1.0).is_err(), k >= n);
        }
    }
}
