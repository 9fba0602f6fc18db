mod common;

use approx::assert_relative_eq;
use nalgebra::DVector;
use online_em::estimators::{
    batch_em, fisher_direction, incremental_em, limiting_em_step, online_em, polyak_ruppert, titterington,
    titterington_step, tour_runner, IncrementalEmConfig, OnlineEmConfig, RecordPolicy, ScanOrder, StepsizeSchedule,
    TitteringtonConfig,
};
use online_em::harness::{sample_poisson_mixture, sample_ppca1};
use online_em::model::{empirical_score, euclidean_norm, mean_estep, normalized_loglik};
use online_em::models::{MixtureParam, MixtureStat, PoissonMixture, Ppca1, Ppca1Param, Ppca1Stat};
use online_em::{LatentModel, SufficientStat};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const SIX: [u64; 6] = [0, 0, 1, 3, 3, 4];

fn mixture_data(n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_poisson_mixture(&MixtureParam::poisson(&[0.8, 0.2], &[1.0, 3.0]), n, &mut rng).unwrap()
}

fn ppca_data(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![0.0; d];
    u[0] = 1.0;
    sample_ppca1(&Ppca1Param::new(u, 2.0), n, &mut rng).unwrap()
}

fn online_config<S>(alpha: f64, freeze: u64) -> OnlineEmConfig<S> {
    let mut c = OnlineEmConfig::new(StepsizeSchedule::power(alpha).unwrap());
    c.freeze_count = freeze;
    c
}

#[test]
fn one_iteration_on_one_observation_is_a_composition() {
    let m = PoissonMixture::poisson(2).unwrap();
    let theta0 = MixtureParam::poisson(&[0.6, 0.4], &[1.0, 4.0]);
    let traj = batch_em(&m, &[3], &theta0, 1).unwrap();
    assert_eq!(traj.final_theta, m.mstep(&m.estep(&theta0, &3).unwrap()).unwrap());
}

#[test]
fn six_point_iteration_matches_brute_force() {
    let m = PoissonMixture::poisson(2).unwrap();
    let (mut w, mut beta) = (vec![0.5, 0.5], vec![1.0, 3.0]);
    let traj = batch_em(&m, &SIX, &MixtureParam::poisson(&w, &beta), 10).unwrap();
    for rec in &traj.records[1..] {
        (w, beta) = poisson_em_iteration(&w, &beta, &SIX);
        assert!(max_abs_diff(&rec.theta.weights, &w) < 1e-12);
        assert!(max_abs_diff(&rec.theta.means(), &beta) < 1e-12);
    }
}

#[test]
fn stationary_point_is_fixed() {
    let m = PoissonMixture::poisson(2).unwrap();
    let (w, beta) = poisson_em_fixed_point(&[0.5, 0.5], &[1.0, 3.0], &SIX);
    let star = MixtureParam::poisson(&w, &beta);
    let next = limiting_em_step(&m, &SIX, &star).unwrap();
    assert!(max_abs_diff(&m.param_coords(&next), &m.param_coords(&star)) < 1e-10);
    assert!(euclidean_norm(&empirical_score(&m, &star, &SIX).unwrap()) < 1e-6);
}

#[test]
fn batch_em_converges_to_a_fixed_point() {
    let m = Ppca1::new(3).unwrap();
    let data = ppca_data(3, 200, 1);
    let theta0 = Ppca1Param::new(vec![0.3, 0.3, 0.3], 1.0);
    let traj = batch_em(&m, &data, &theta0, 2000).unwrap();
    let star = traj.final_theta;
    let next = limiting_em_step(&m, &data, &star).unwrap();
    assert!(max_abs_diff(&m.param_coords(&next), &m.param_coords(&star)) < 1e-10);
    assert!(euclidean_norm(&empirical_score(&m, &star, &data).unwrap()) < 1e-6);
}

#[test]
fn limiting_step_equals_first_batch_record() {
    let m = PoissonMixture::poisson(2).unwrap();
    let data = mixture_data(100, 2);
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[0.7, 4.0]);
    let traj = batch_em(&m, &data, &theta0, 1).unwrap();
    let step = limiting_em_step(&m, &data, &theta0).unwrap();
    assert_eq!(traj.records[1].theta, step);
    // Kullback-Leibler Lyapunov property on the empirical distribution
    let before = normalized_loglik(&m, &theta0, &data).unwrap();
    let after = normalized_loglik(&m, &step, &data).unwrap();
    assert!(after >= before);
}

#[test]
fn batch_em_ascends() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mix = PoissonMixture::poisson(2).unwrap();
    let counts = mixture_data(300, 4);
    let ppca = Ppca1::new(4).unwrap();
    let vectors = ppca_data(4, 300, 5);
    for _ in 0..10 {
        let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[rng.random_range(0.5..5.0), rng.random_range(0.5..5.0)]);
        let t = batch_em(&mix, &counts, &theta0, 30).unwrap();
        for pair in t.records.windows(2) {
            let (a, b) = (pair[0].loglik.unwrap(), pair[1].loglik.unwrap());
            assert!(b - a >= -1e-10 * a.abs());
        }
        let u0: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = batch_em(&ppca, &vectors, &Ppca1Param::new(u0, rng.random_range(0.5..3.0)), 30).unwrap();
        for pair in t.records.windows(2) {
            let (a, b) = (pair[0].loglik.unwrap(), pair[1].loglik.unwrap());
            assert!(b - a >= -1e-10 * a.abs());
        }
    }
}

#[test]
fn statistic_space_recursion_is_dual() {
    let m = Ppca1::new(3).unwrap();
    let data = ppca_data(3, 150, 6);
    let theta0 = Ppca1Param::new(vec![0.2, -0.1, 0.4], 1.5);
    let traj = batch_em(&m, &data, &theta0, 15).unwrap();
    let mut s = mean_estep(&m, &theta0, &data).unwrap();
    for rec in &traj.records[1..] {
        let theta = m.mstep(&s).unwrap();
        assert!(max_abs_diff(&m.param_coords(&theta), &m.param_coords(&rec.theta)) < 1e-12);
        s = mean_estep(&m, &theta, &data).unwrap();
    }
}

#[test]
fn first_stepsize_erases_the_initial_statistic() {
    let m = PoissonMixture::poisson(2).unwrap();
    let data = mixture_data(20, 7);
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[1.0, 2.5]);
    let plain = online_em(&m, &data, &theta0, online_config(0.6, 5)).unwrap();
    let mut cfg = online_config(0.6, 5);
    cfg.initial_stat = Some(MixtureStat::new(&[0.1, 0.9], &[vec![7.0], vec![0.2]]));
    let seeded = online_em(&m, &data, &theta0, cfg).unwrap();
    assert_eq!(plain.records, seeded.records);
    assert_eq!(
        plain.records[1].stat.as_ref().unwrap(),
        &m.estep(&theta0, &data[0]).unwrap()
    );
}

#[test]
fn two_steps_unrolled() {
    let m = PoissonMixture::poisson(2).unwrap();
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[1.0, 3.0]);
    let data = [2, 5];
    let schedule = StepsizeSchedule::power(0.6)
        .unwrap()
        .with_explicit(vec![1.0, 0.5])
        .unwrap();

    let mut frozen = OnlineEmConfig::new(schedule.clone());
    frozen.freeze_count = 1;
    let traj = online_em(&m, &data, &theta0, frozen).unwrap();
    let e1 = m.estep(&theta0, &2).unwrap();
    let e2 = m.estep(&theta0, &5).unwrap();
    let want: Vec<f64> = e1
        .coords()
        .iter()
        .zip(e2.coords())
        .map(|(a, b)| 0.5 * a + 0.5 * b)
        .collect();
    assert!(max_abs_diff(traj.records[2].stat.as_ref().unwrap().coords(), &want) < 1e-15);

    let mut free = OnlineEmConfig::new(schedule);
    free.freeze_count = 0;
    let traj = online_em(&m, &data, &theta0, free).unwrap();
    let theta1 = m.mstep(&e1).unwrap();
    assert_eq!(traj.records[1].theta, theta1);
    let e2 = m.estep(&theta1, &5).unwrap();
    let want: Vec<f64> = e1
        .coords()
        .iter()
        .zip(e2.coords())
        .map(|(a, b)| 0.5 * a + 0.5 * b)
        .collect();
    assert!(max_abs_diff(traj.records[2].stat.as_ref().unwrap().coords(), &want) < 1e-15);
}

#[test]
fn whole_data_minibatch_is_one_batch_iteration() {
    let m = Ppca1::new(3).unwrap();
    let data = ppca_data(3, 64, 8);
    let theta0 = Ppca1Param::new(vec![0.5, 0.0, -0.2], 1.0);
    let mut cfg = online_config(0.6, 0);
    cfg.minibatch_size = data.len();
    let online = online_em(&m, &data, &theta0, cfg).unwrap();
    assert_eq!(online.last_step, 1);
    let batch = batch_em(&m, &data, &theta0, 1).unwrap();
    assert!(
        max_abs_diff(
            &m.param_coords(&online.final_theta),
            &m.param_coords(&batch.final_theta)
        ) < 1e-12
    );
}

#[test]
fn map_mode_adds_the_scaled_prior() {
    let m = PoissonMixture::poisson(2).unwrap();
    let data = mixture_data(30, 9);
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[1.0, 3.0]);
    let prior = MixtureStat::new(&[1.0, 1.0], &[vec![1.0], vec![3.0]]);
    let mut cfg = online_config(0.6, 5);
    cfg.prior = Some(prior.clone());
    let traj = online_em(&m, &data, &theta0, cfg).unwrap();
    for rec in &traj.records[6..] {
        let s = rec.stat.as_ref().unwrap();
        let n = rec.step as f64;
        let target: Vec<f64> = s.coords().iter().zip(prior.coords()).map(|(a, b)| a + b / n).collect();
        let expect = m
            .mstep(&MixtureStat::new(&target[..2], &[vec![target[2]], vec![target[3]]]))
            .unwrap();
        assert!(max_abs_diff(&m.param_coords(&rec.theta), &m.param_coords(&expect)) < 1e-14);
    }
}

#[test]
fn incremental_first_tour_is_harmonic_online_em() {
    let m = PoissonMixture::poisson(2).unwrap();
    let data = mixture_data(200, 10);
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[0.8, 2.0]);
    let inc = incremental_em(&m, &data, &theta0, 1, IncrementalEmConfig::default()).unwrap();
    let online = online_em(&m, &data, &theta0, OnlineEmConfig::new(StepsizeSchedule::harmonic())).unwrap();
    assert_eq!(inc.records, online.records);
    assert_eq!(inc.final_theta, online.final_theta);
}

#[test]
fn incremental_tour_at_fixed_point_is_stationary() {
    let m = PoissonMixture::poisson(2).unwrap();
    let (w, beta) = poisson_em_fixed_point(&[0.5, 0.5], &[1.0, 3.0], &SIX);
    let star = MixtureParam::poisson(&w, &beta);
    let cfg = IncrementalEmConfig {
        freeze_count: SIX.len() as u64,
        ..IncrementalEmConfig::default()
    };
    let traj = incremental_em(&m, &SIX, &star, 2, cfg).unwrap();
    for rec in &traj.records[SIX.len() + 1..] {
        assert!(max_abs_diff(&m.param_coords(&rec.theta), &m.param_coords(&star)) < 1e-10);
    }
}

#[test]
fn incremental_on_one_observation_repeats_em() {
    let m = PoissonMixture::poisson(2).unwrap();
    let theta0 = MixtureParam::poisson(&[0.3, 0.7], &[1.0, 3.0]);
    let cfg = IncrementalEmConfig {
        freeze_count: 0,
        ..IncrementalEmConfig::default()
    };
    let inc = incremental_em(&m, &[4], &theta0, 5, cfg).unwrap();
    let batch = batch_em(&m, &[4], &theta0, 5).unwrap();
    for (a, b) in inc.records.iter().zip(&batch.records) {
        assert!(max_abs_diff(&m.param_coords(&a.theta), &m.param_coords(&b.theta)) < 1e-14);
    }
}

#[test]
fn titterington_zero_score_is_stationary() {
    let m = PoissonMixture::poisson(1).unwrap();
    let theta = MixtureParam::poisson(&[1.0], &[3.0]);
    let (next, projected) = titterington_step(&m, &theta, &3, 0.5, 1e-8).unwrap();
    assert_eq!(next, theta);
    assert!(!projected);
}

#[test]
fn titterington_natural_direction_for_one_poisson() {
    // I_p = 1/beta and score = y/beta - 1, so the direction is y - beta
    let m = PoissonMixture::poisson(1).unwrap();
    for (beta, y) in [(2.0, 5u64), (0.5, 0), (4.0, 1)] {
        let theta = MixtureParam::poisson(&[1.0], &[beta]);
        let (next, _) = titterington_step(&m, &theta, &y, 0.1, 1e-8).unwrap();
        assert_relative_eq!(next.means()[0], beta + 0.1 * (y as f64 - beta), epsilon = 1e-14);
    }
}

#[test]
fn titterington_step_matches_dense_solve() {
    let m = PoissonMixture::poisson(2).unwrap();
    let (w, beta) = ([0.8, 0.2], [1.0, 3.0]);
    let theta = MixtureParam::poisson(&w, &beta);
    let x = vec![0.8, 1.0, 3.0];
    let score = gradient_5pt(&|z: &[f64]| mixture_loglik_reduced(z, 2, 0), &x, 1e-3);
    let delta = poisson_mixture_fisher(&w, &beta)
        .lu()
        .solve(&DVector::from_vec(score))
        .unwrap();
    let (next, _) = titterington_step(&m, &theta, &0, 0.1, 1e-8).unwrap();
    let got = m.reduced_coords(&next);
    for i in 0..3 {
        assert!((got[i] - (x[i] + 0.1 * delta[i])).abs() < 1e-10, "{got:?}");
    }
}

#[test]
fn singular_information_is_ridged() {
    let fisher = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let d = fisher_direction(fisher, &[2.0, 0.0]).unwrap();
    assert_relative_eq!(d[0], 2.0, epsilon = 1e-8);
    assert_eq!(d[1], 0.0);
}

#[test]
fn titterington_projection_keeps_weights_inside() {
    let m = PoissonMixture::poisson(2).unwrap();
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[0.5, 8.0]);
    let data = vec![20u64; 10];
    let traj = titterington(
        &m,
        &data,
        &theta0,
        &StepsizeSchedule::power(0.6).unwrap(),
        TitteringtonConfig::default(),
    )
    .unwrap();
    for rec in &traj.records {
        assert!(rec.theta.weights.iter().all(|w| *w >= 1e-8 && *w <= 1.0 - 1e-8));
        assert!(rec.theta.means().iter().all(|b| *b >= 1e-8));
    }
    assert!(!traj.projected_steps.is_empty());
}

#[test]
fn streaming_average_matches_post_hoc_average() {
    let m = PoissonMixture::poisson(2).unwrap();
    let data = mixture_data(400, 11);
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[0.7, 2.5]);
    let mut cfg = online_config(0.6, 5);
    cfg.averaging_start_fraction = Some(0.5);
    let traj = online_em(&m, &data, &theta0, cfg).unwrap();
    let post = polyak_ruppert(&m, &traj, 200).unwrap();
    let streamed = traj.averaged_theta.unwrap();
    assert!(max_abs_diff(&m.param_coords(&post), &m.param_coords(&streamed)) < 1e-12);
}

#[test]
fn tours_continue_the_stepsize() {
    let m = PoissonMixture::poisson(2).unwrap();
    let data = mixture_data(50, 12);
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[0.7, 2.5]);
    let cfg = online_config(0.6, 5);
    let toured = tour_runner(&m, &data, &theta0, cfg.clone(), 3, ScanOrder::systematic()).unwrap();
    let tripled: Vec<u64> = data.iter().chain(&data).chain(&data).copied().collect();
    let plain = online_em(&m, &tripled, &theta0, cfg).unwrap();
    assert_eq!(toured.records, plain.records);
    assert_eq!(toured.tour_logliks.len(), 3);
    let ll = normalized_loglik(&m, &toured.final_theta, &data).unwrap();
    assert_eq!(toured.tour_logliks[2], ll);
}

#[test]
fn random_scan_is_seeded() {
    let m = Ppca1::new(2).unwrap();
    let data = ppca_data(2, 40, 13);
    let theta0 = Ppca1Param::new(vec![0.5, 0.5], 1.0);
    let run = |seed| tour_runner(&m, &data, &theta0, online_config(0.7, 5), 2, ScanOrder::random(seed)).unwrap();
    assert_eq!(run(1), run(1));
    assert_ne!(run(1).final_theta, run(2).final_theta);
}

#[test]
fn prior_weight_is_forgotten_faster_than_one_over_n() {
    let s = StepsizeSchedule::power(0.6).unwrap();
    let mut log_w = 0.0;
    let mut prev = f64::INFINITY;
    for n in 2..=100_000u64 {
        log_w += (1.0 - s.gamma(n)).ln();
        let scaled = log_w + (n as f64).ln();
        if n > 10 {
            assert!(scaled < prev);
        }
        prev = scaled;
    }
    assert_relative_eq!(s.log_retained_weight(2, 100_000), log_w, max_relative = 1e-12);
    assert!(prev.exp() < 1e-3);
}

#[test]
fn ppca_inadmissible_statistic_freezes() {
    let m = Ppca1::new(2).unwrap();
    let mut cfg: OnlineEmConfig<Ppca1Stat> = online_config(0.6, 0);
    cfg.record = RecordPolicy::Endpoints;
    // a zero observation gives lambda = 0, which is not a valid parameter
    let traj = online_em(&m, &[vec![0.0, 0.0]], &Ppca1Param::new(vec![1.0, 0.0], 1.0), cfg).unwrap();
    assert_eq!(traj.frozen_steps, vec![1]);
    assert_eq!(traj.final_theta, Ppca1Param::new(vec![1.0, 0.0], 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn online_statistic_stays_a_convex_combination(
        data in prop::collection::vec(0u64..15, 1..60),
        alpha in 0.55f64..1.0,
        b0 in 0.3f64..5.0,
        b1 in 0.3f64..5.0,
    ) {
        let m = PoissonMixture::poisson(2).unwrap();
        let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[b0, b1]);
        let traj = online_em(&m, &data, &theta0, online_config(alpha, 5)).unwrap();
        let max_y = *data.iter().max().unwrap() as f64;
        for rec in &traj.records[1..] {
            let s = rec.stat.as_ref().unwrap();
            prop_assert!((s.weight_stats().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..2 {
                prop_assert!(s.component_stat(i)[0] >= 0.0);
                prop_assert!(s.component_stat(i)[0] <= max_y * s.weight_stats()[i] * (1.0 + 1e-12) + 1e-300);
            }
            prop_assert!((rec.theta.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stepsizes_lie_in_unit_interval(alpha in 0.501f64..=1.0, n in 1u64..10_000_000) {
        let g = StepsizeSchedule::power(alpha).unwrap().gamma(n);
        prop_assert!(g > 0.0 && g <= 1.0);
    }

    #[test]
    fn batch_iteration_never_decreases_loglik(
        data in prop::collection::vec(0u64..12, 2..40),
        w0 in 0.05f64..0.95,
        b0 in 0.2f64..6.0,
        b1 in 0.2f64..6.0,
    ) {
        let m = PoissonMixture::poisson(2).unwrap();
        let theta0 = MixtureParam::poisson(&[w0, 1.0 - w0], &[b0, b1]);
        // a mean collapsing onto zero ends the run with an inadmissible statistic
        let traj = match batch_em(&m, &data, &theta0, 5) {
            Ok(t) => t,
            Err(e) => {
                prop_assert!(e.is_inadmissible());
                return Ok(());
            }
        };
        for pair in traj.records.windows(2) {
            let (a, b) = (pair[0].loglik.unwrap(), pair[1].loglik.unwrap());
            prop_assert!(b - a >= -1e-10 * a.abs());
        }
    }
}
