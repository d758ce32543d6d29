//! Statistical test wrappers emitting uniform reports.

use maxcond_core::stats::{chi2_sf, ks_p_value, ks_statistic, ks_statistic_two_sample};
use serde::Serialize;

/// Outcome of one statistical check; serialized as a JSON line by the
/// validation harness.
#[derive(Clone, Debug, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    /// Distance measured in combined standard errors, for closeness checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_distance: Option<f64>,
    pub n_effective: usize,
    pub pass: bool,
    pub tolerance: f64,
}

impl TestReport {
    pub fn assert_pass(&self) {
        assert!(
            self.pass,
            "{}: statistic {:.6}, p {:?}, se distance {:?}, tolerance {:.4}",
            self.name, self.statistic, self.p_value, self.se_distance, self.tolerance
        );
    }
}

/// One-sample Kolmogorov-Smirnov test at level `alpha` (n >= 100 required for
/// the asymptotic p-value to be trustworthy).
pub fn ks_test(
    name: &str,
    samples: &mut [f64],
    cdf: impl Fn(f64) -> f64,
    alpha: f64,
) -> TestReport {
    assert!(samples.len() >= 100, "KS test needs n >= 100");
    let d = ks_statistic(samples, cdf);
    let p = ks_p_value(d, samples.len());
    TestReport {
        name: name.to_string(),
        statistic: d,
        p_value: Some(p),
        se_distance: None,
        n_effective: samples.len(),
        pass: p > alpha,
        tolerance: alpha,
    }
}

/// Two-sample Kolmogorov-Smirnov test at level `alpha`.
pub fn ks_test_two_sample(name: &str, a: &mut [f64], b: &mut [f64], alpha: f64) -> TestReport {
    assert!(a.len() >= 100 && b.len() >= 100);
    let d = ks_statistic_two_sample(a, b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let effective = n * m / (n + m);
    let p = ks_p_value(d, effective.round() as usize);
    TestReport {
        name: name.to_string(),
        statistic: d,
        p_value: Some(p),
        se_distance: None,
        n_effective: effective.round() as usize,
        pass: p > alpha,
        tolerance: alpha,
    }
}

/// Pearson chi-square goodness-of-fit of observed counts against expected
/// probabilities.
pub fn chi2_test(name: &str, observed: &[u64], expected_probs: &[f64], alpha: f64) -> TestReport {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = n * p;
        if e > 0.0 {
            stat += (o as f64 - e) * (o as f64 - e) / e;
            dof += 1;
        } else {
            assert_eq!(o, 0, "observed count in a zero-probability cell");
        }
    }
    let dof = dof.saturating_sub(1).max(1);
    let p = chi2_sf(stat, dof as f64);
    TestReport {
        name: name.to_string(),
        statistic: stat,
        p_value: Some(p),
        se_distance: None,
        n_effective: total as usize,
        pass: p > alpha,
        tolerance: alpha,
    }
}

/// Chi-square test of independence on a contingency table (rows x columns).
pub fn chi2_independence_test(name: &str, table: &[Vec<u64>], alpha: f64) -> TestReport {
    let cols = table[0].len();
    let row_sum: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sum: Vec<f64> = (0..cols)
        .map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64)
        .collect();
    let total: f64 = row_sum.iter().sum();
    let mut stat = 0.0;
    let mut live_rows = 0usize;
    let mut live_cols = 0usize;
    for (r, rs) in row_sum.iter().enumerate() {
        if *rs == 0.0 {
            continue;
        }
        live_rows += 1;
        for (c, cs) in col_sum.iter().enumerate() {
            if *cs == 0.0 {
                continue;
            }
            let e = rs * cs / total;
            stat += (table[r][c] as f64 - e) * (table[r][c] as f64 - e) / e;
        }
    }
    for cs in &col_sum {
        if *cs > 0.0 {
            live_cols += 1;
        }
    }
    let dof = (live_rows.saturating_sub(1) * live_cols.saturating_sub(1)).max(1);
    let p = chi2_sf(stat, dof as f64);
    TestReport {
        name: name.to_string(),
        statistic: stat,
        p_value: Some(p),
        se_distance: None,
        n_effective: total as usize,
        pass: p > alpha,
        tolerance: alpha,
    }
}

/// `|estimate - reference| <= max(3 se, floor)` closeness check.
pub fn se_distance_test(
    name: &str,
    estimate: f64,
    reference: f64,
    se: f64,
    floor: f64,
    n_effective: usize,
) -> TestReport {
    let tol = (3.0 * se).max(floor);
    let dist = (estimate - reference).abs();
    TestReport {
        name: name.to_string(),
        statistic: dist,
        p_value: None,
        se_distance: Some(if se > 0.0 { dist / se } else { f64::INFINITY }),
        n_effective,
        pass: dist <= tol,
        tolerance: tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use maxcond_core::SplitRng;

    #[test]
    fn ks_calibration_pass_rate_near_one_minus_alpha() {
        let alpha = 0.01;
        let mut passes = 0;
        for seed in 0..100 {
            let mut rng = SplitRng::new(seed, 0);
            let mut xs: Vec<f64> = (0..2000).map(|_| rng.next_f64()).collect();
            if ks_test("unif", &mut xs, |x| x.clamp(0.0, 1.0), alpha).pass {
                passes += 1;
            }
        }
        // Bernoulli(0.99) over 100 seeds: anything >= 95 is consistent
        assert!(passes >= 95, "pass rate {passes}/100");
    }

    #[test]
    fn ks_detects_frechet_and_rejects_shift() {
        let mut rng = SplitRng::new(5, 0);
        let mut xs: Vec<f64> = (0..5000).map(|_| rng.frechet(1.0)).collect();
        ks_test(
            "frechet",
            &mut xs,
            |x| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 },
            0.01,
        )
        .assert_pass();
        let mut shifted: Vec<f64> = xs.iter().map(|x| x + 0.3).collect();
        let rep = ks_test(
            "frechet-shifted",
            &mut shifted,
            |x| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 },
            0.01,
        );
        assert!(!rep.pass, "shifted sample must fail");
    }

    #[test]
    fn chi2_calibration_and_power() {
        let mut rng = SplitRng::new(9, 0);
        let probs = [0.2, 0.3, 0.5];
        let mut counts = [0u64; 3];
        for _ in 0..30_000 {
            let u = rng.next_f64();
            let idx = if u < 0.2 {
                0
            } else if u < 0.5 {
                1
            } else {
                2
            };
            counts[idx] += 1;
        }
        chi2_test("fair", &counts, &probs, 0.01).assert_pass();
        let rep = chi2_test("wrong", &counts, &[0.3, 0.3, 0.4], 0.01);
        assert!(!rep.pass);
    }

    #[test]
    fn independence_test_on_independent_table_passes() {
        let mut rng = SplitRng::new(11, 0);
        let mut table = vec![vec![0u64; 2]; 2];
        for _ in 0..20_000 {
            let r = (rng.next_f64() < 0.3) as usize;
            let c = (rng.next_f64() < 0.6) as usize;
            table[r][c] += 1;
        }
        chi2_independence_test("indep", &table, 0.01).assert_pass();
    }

    #[test]
    fn se_distance_test_tolerance_floor() {
        assert!(se_distance_test("x", 0.505, 0.5, 0.001, 0.01, 100).pass);
        assert!(!se_distance_test("x", 0.55, 0.5, 0.001, 0.01, 100).pass);
    }
}
