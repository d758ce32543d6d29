//! Hitting-scenario posterior checks: closed-form weights recomputed
//! independently in the test, band-rejection oracle frequencies, and the
//! structural invariants (normalization, permutation equivariance,
//! stratum dominance for discrete models).

use maxcond_core::model::Variogram;
use maxcond_core::stats::{normal_pdf, phi};
use maxcond_core::{Grid, Model, ObservationSet, Partition};
use maxcond_kernels::{partition_log_weight, scenario_posterior, KernelError, KernelOpts};
use maxcond_oracle::{reject_condition, BandSpec};

fn grid2() -> Grid {
    Grid::line(0.0, 1.0, 2).unwrap()
}

/// q = 3 toy with profiles (1, .2), (.2, 1), (.5, .5) and weights normalized
/// to unit Frechet margins.
fn max_linear_toy() -> Model {
    Model::max_linear(
        grid2(),
        vec![1.0, 1.0, 1.0],
        vec![vec![1.0, 0.2], vec![0.2, 1.0], vec![0.5, 0.5]],
        true,
    )
    .unwrap()
}

fn log_gaussian_pair() -> Model {
    Model::log_gaussian(
        grid2(),
        Variogram::Power {
            scale: 1.0,
            exponent: 1.0,
        },
    )
    .unwrap()
}

fn obs(model: &Model, values: &[f64]) -> ObservationSet {
    ObservationSet::new(model.grid(), (0..values.len()).collect(), values.to_vec()).unwrap()
}

#[test]
fn single_site_posterior_is_degenerate() {
    let opts = KernelOpts::default();
    for model in [max_linear_toy(), log_gaussian_pair()] {
        let o = ObservationSet::new(model.grid(), vec![0], vec![1.3]).unwrap();
        let law = scenario_posterior(&model, &o, &opts).unwrap();
        assert_eq!(law.pi(), &[1.0]);
        assert_eq!(law.partitions().len(), 1);
    }
}

#[test]
fn discrete_pair_weight_requires_proportionality() {
    // two rays (1, .2) and (.2, 1); the observation (1, 1) lies on neither,
    // so the one-block partition is incompatible while singletons are fine
    let model = Model::max_linear(
        grid2(),
        vec![1.0, 1.0],
        vec![vec![1.0, 0.2], vec![0.2, 1.0]],
        false,
    )
    .unwrap();
    let o = obs(&model, &[1.0, 1.0]);
    let opts = KernelOpts::default();
    let pair = Partition::parse_rgs("0 0").unwrap();
    let singles = Partition::parse_rgs("0 1").unwrap();
    assert_eq!(
        partition_log_weight(&model, &o, &pair, &opts).unwrap(),
        f64::NEG_INFINITY
    );
    let w = partition_log_weight(&model, &o, &singles, &opts).unwrap();
    assert!(w.is_finite());
    // singletons: site 0 explained only by ray 0, site 1 only by ray 1
    // weight = ln(w0 f0(t0)/y0) + ln(w1 f1(t1)/y1) = ln(1) + ln(1)
    assert!((w - 0.0).abs() < 1e-12);
}

#[test]
fn off_ray_observation_gives_singletons_and_matches_oracle() {
    let model = max_linear_toy();
    let o = obs(&model, &[1.3, 0.7]);
    let opts = KernelOpts::default();
    let law = scenario_posterior(&model, &o, &opts).unwrap();
    let rgs: Vec<String> = law.partitions().iter().map(|p| p.rgs_string()).collect();
    assert_eq!(rgs, vec!["0 0", "0 1"]);
    assert_eq!(
        law.pi()[0],
        0.0,
        "pair partition needs exact proportionality"
    );
    assert!((law.pi()[1] - 1.0).abs() < 1e-15);

    // band oracle: no accepted sample can carry the pair scenario once the
    // band is too narrow to touch any ray
    let band = BandSpec::new(o.values().to_vec(), 0.02).unwrap();
    let rep = reject_condition(&model, o.site_ids(), &band, 1_500_000, 91, 4, &opts.sim).unwrap();
    let freqs = rep.scenario_frequencies(law.partitions());
    assert_eq!(freqs[0], 0.0);
    assert!((freqs[1] - 1.0).abs() < 1e-12);
    assert!(rep.accepted.len() > 100);
}

#[test]
fn on_ray_observation_concentrates_on_the_coarse_partition() {
    let model = max_linear_toy();
    // (1, 1) is proportional to the third profile (.5, .5)
    let o = obs(&model, &[1.0, 1.0]);
    let opts = KernelOpts::default();
    let law = scenario_posterior(&model, &o, &opts).unwrap();
    let pair_idx = law
        .partition_index(&Partition::parse_rgs("0 0").unwrap())
        .unwrap();
    let sing_idx = law
        .partition_index(&Partition::parse_rgs("0 1").unwrap())
        .unwrap();
    assert_eq!(law.pi()[pair_idx], 1.0);
    assert_eq!(law.pi()[sing_idx], 0.0);
    // the singleton weight is finite (its stratum just has lower dimension)
    assert!(law.log_weights()[sing_idx].is_finite());

    // the band oracle must approach the degenerate posterior as the band
    // narrows: frequency of the coarse scenario increases as eps decreases
    let mut freqs = Vec::new();
    for (seed, eps) in [(11u64, 0.02f64), (12, 0.04)] {
        let band = BandSpec::new(o.values().to_vec(), eps).unwrap();
        let rep =
            reject_condition(&model, o.site_ids(), &band, 600_000, seed, 4, &opts.sim).unwrap();
        let f = rep.scenario_frequencies(law.partitions());
        freqs.push(f[pair_idx]);
    }
    assert!(freqs[0] > 0.9, "narrow band: pair frequency {}", freqs[0]);
    assert!(
        freqs[0] >= freqs[1] - 0.02,
        "pair frequency must not degrade as the band narrows: {freqs:?}"
    );
}

#[test]
fn perfectly_dependent_model_posterior_and_inconsistency() {
    let grid = grid2();
    let model = Model::log_gaussian(
        grid,
        Variogram::Power {
            scale: 0.0,
            exponent: 1.0,
        },
    )
    .unwrap();
    let opts = KernelOpts::default();
    let o = obs(&model, &[0.8, 0.8]);
    let law = scenario_posterior(&model, &o, &opts).unwrap();
    let pair_idx = law
        .partition_index(&Partition::parse_rgs("0 0").unwrap())
        .unwrap();
    assert_eq!(law.pi()[pair_idx], 1.0);

    // unequal values cannot occur under perfect dependence
    let bad = obs(&model, &[1.0, 2.0]);
    match scenario_posterior(&model, &bad, &opts) {
        Err(KernelError::InconsistentObservation) => {}
        other => panic!("expected InconsistentObservation, got {other:?}"),
    }
}

/// Independent re-derivation of the two-site log-Gaussian posterior: with
/// increment variance G between the sites, the one-block weight is the
/// bivariate exponent density and each singleton weight is
/// `y_i^-2 Phi((log(y_j/y_i) + G/2) / sqrt(G))`.
#[test]
fn log_gaussian_pair_posterior_matches_hand_formula_and_oracle() {
    let model = log_gaussian_pair();
    let g = 2.0f64; // 2 * gamma(1)
    let o = obs(&model, &[1.0, 1.5]);
    let (y0, y1) = (1.0f64, 1.5f64);
    let opts = KernelOpts::default();
    let law = scenario_posterior(&model, &o, &opts).unwrap();

    let u = (y1 / y0).ln();
    let i_pair = y0.powi(-2) * y1.powi(-1) * normal_pdf((u + 0.5 * g) / g.sqrt()) / g.sqrt();
    let i_s0 = y0.powi(-2) * phi(((y1 / y0).ln() + 0.5 * g) / g.sqrt());
    let i_s1 = y1.powi(-2) * phi(((y0 / y1).ln() + 0.5 * g) / g.sqrt());
    let pi_pair = i_pair / (i_pair + i_s0 * i_s1);

    let pair_idx = law
        .partition_index(&Partition::parse_rgs("0 0").unwrap())
        .unwrap();
    let sing_idx = law
        .partition_index(&Partition::parse_rgs("0 1").unwrap())
        .unwrap();
    assert!(
        (law.pi()[pair_idx] - pi_pair).abs() < 1e-10,
        "pi_pair = {} vs hand formula {}",
        law.pi()[pair_idx],
        pi_pair
    );
    assert!((law.pi()[pair_idx] + law.pi()[sing_idx] - 1.0).abs() < 1e-10);

    // band oracle cross-check (statistical)
    let band = BandSpec::new(o.values().to_vec(), 0.03).unwrap();
    let rep = reject_condition(&model, o.site_ids(), &band, 400_000, 5, 4, &opts.sim).unwrap();
    let freqs = rep.scenario_frequencies(law.partitions());
    let n = rep.accepted.len() as f64;
    let se = (pi_pair * (1.0 - pi_pair) / n).sqrt();
    assert!(
        (freqs[pair_idx] - pi_pair).abs() < (3.0 * se).max(0.02),
        "oracle {} vs pi {} (n = {n})",
        freqs[pair_idx],
        pi_pair
    );
}

#[test]
fn posterior_normalization_and_permutation_equivariance() {
    let opts = KernelOpts::default();
    let grid3 = Grid::line(0.0, 2.0, 3).unwrap();
    let model = Model::log_gaussian(
        grid3,
        Variogram::Power {
            scale: 0.7,
            exponent: 1.2,
        },
    )
    .unwrap();
    let mut rng = maxcond_core::SplitRng::new(2024, 0);
    for _ in 0..10 {
        let y: Vec<f64> = (0..3).map(|_| rng.frechet(1.0).clamp(0.05, 50.0)).collect();
        let o = ObservationSet::new(model.grid(), vec![0, 1, 2], y.clone()).unwrap();
        let law = scenario_posterior(&model, &o, &opts).unwrap();
        let total: f64 = law.pi().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);

        // permute the observation pairs; partition masses must follow the
        // relabeling (tolerance reflects reordered floating-point reductions)
        let perm = [2usize, 0, 1];
        let po = o.permuted(&perm).unwrap();
        let plaw = scenario_posterior(&model, &po, &opts).unwrap();
        for (idx, p) in law.partitions().iter().enumerate() {
            // positions map: new position i holds old pair perm[i], so old
            // element e sits at new index perm^{-1}(e)
            let mut inv = [0usize; 3];
            for (newi, &old) in perm.iter().enumerate() {
                inv[old] = newi;
            }
            let relabeled = Partition::new(
                p.blocks()
                    .iter()
                    .map(|b| b.iter().map(|&e| inv[e]).collect())
                    .collect(),
                3,
            )
            .unwrap();
            let pidx = plaw.partition_index(&relabeled).unwrap();
            let (a, b) = (law.pi()[idx], plaw.pi()[pidx]);
            assert!(
                (a - b).abs() <= 1e-9 * a.max(b).max(1e-12),
                "pi not equivariant: {a} vs {b}"
            );
        }
    }
}

#[test]
fn moving_max_models_are_rejected() {
    let grid = Grid::line(0.0, 5.0, 3).unwrap();
    let model = Model::moving_max(
        grid,
        maxcond_core::model::Kernel::Indicator { half_width: 0.5 },
        (0.0, 5.0),
    )
    .unwrap();
    let o = obs(&model, &[1.0, 1.0]);
    assert!(matches!(
        scenario_posterior(&model, &o, &KernelOpts::default()),
        Err(KernelError::Unsupported(_))
    ));
}

#[test]
fn regular_capacity_is_enforced() {
    let grid = Grid::line(0.0, 6.0, 7).unwrap();
    let model = Model::log_gaussian(
        grid,
        Variogram::Power {
            scale: 1.0,
            exponent: 1.0,
        },
    )
    .unwrap();
    let o = ObservationSet::new(model.grid(), (0..7).collect(), vec![1.0; 7]).unwrap();
    assert!(scenario_posterior(&model, &o, &KernelOpts::default()).is_err());
}
