use broxlab::diffusion::{Construction, DiffusionRealization, Estimator, Stop};
use broxlab::environment::Environment;
use broxlab::path::sample::{sample_brownian, SamplerConfig};
use broxlab::seed::{rng_for, rng_from_seed, Stream};

fn skeleton(env: Environment, seed: u64) -> DiffusionRealization {
    DiffusionRealization::new(env, rng_for(seed, 0, Stream::Driver), Construction::Skeleton).unwrap()
}

#[test]
fn both_estimators_normalize() {
    for seed in 0..5 {
        let env = Environment::brownian_for(seed, 0, 0.05, 1_000_000).unwrap();
        let mut run = skeleton(env, seed).skeleton().unwrap();
        let t = 150.0;
        assert!(run.advance(&Stop::at_time(t)).reason.reached());
        let direct = run.field(0.05, Estimator::Direct).unwrap();
        let formula = run.field(0.05, Estimator::Formula).unwrap();
        assert!((direct.total() - t).abs() <= 1e-9 * t);
        assert!((formula.total() - t).abs() <= 0.01 * t, "formula total {}", formula.total());
    }
}

#[test]
fn estimators_agree_on_heavy_bins() {
    for seed in 0..5 {
        let env = Environment::brownian_for(seed, 0, 0.05, 1_000_000).unwrap();
        let mut run = skeleton(env, seed).skeleton().unwrap();
        let t = 400.0;
        run.advance(&Stop::at_time(t));
        let direct = run.field(0.05, Estimator::Direct).unwrap();
        let formula = run.field(0.05, Estimator::Formula).unwrap();
        for b in direct.bins.iter().filter(|b| b.l * b.width > 0.01 * t) {
            let f = formula.value_at(b.x_center);
            assert!((f - b.l).abs() <= 0.1 * b.l, "seed {seed} x {}: direct {} formula {f}", b.x_center, b.l);
        }
    }
}

#[test]
fn l_star_grows_with_time() {
    let env = Environment::brownian_for(4, 0, 0.05, 1_000_000).unwrap();
    let mut run = skeleton(env, 4).skeleton().unwrap();
    let mut last = 0.0;
    for t in [1.0, 5.0, 20.0, 80.0, 320.0] {
        run.advance(&Stop::at_time(t));
        let l = run.l_star();
        assert!(l >= last);
        last = l;
    }
}

#[test]
fn starts_at_origin() {
    let env = Environment::brownian_for(1, 0, 0.05, 1_000_000).unwrap();
    let mut real = DiffusionRealization::new(env, rng_for(1, 0, Stream::Driver), Construction::Uniform { driver_step: 1e-3 })
        .unwrap();
    assert_eq!(real.diffusion_value(0.0).unwrap(), 0.0);
    assert_eq!(real.hitting_time_diffusion(0.0).unwrap(), 0.0);
}

#[test]
fn hitting_then_evaluating_returns_the_point() {
    for seed in 0..5 {
        let env = Environment::brownian_for(seed, 0, 0.05, 1_000_000).unwrap();
        let mut real =
            DiffusionRealization::new(env, rng_for(seed, 0, Stream::Driver), Construction::Uniform { driver_step: 1e-3 })
                .unwrap();
        for x in [0.3, -0.4] {
            let t = real.hitting_time_diffusion(x).unwrap();
            let back = real.diffusion_value(t).unwrap();
            assert!((back - x).abs() <= 1e-6, "seed {seed}: X(tau({x})) = {back}");
        }
    }
}

#[test]
fn inverse_local_time_is_monotone_and_exact() {
    let env = Environment::brownian_for(8, 0, 0.05, 1_000_000).unwrap();
    let real = skeleton(env, 8);
    let mut prev = 0.0;
    for r in [0.5, 1.0, 2.0, 4.0] {
        let s = real.clone().inverse_local_time(r, 0.0, 0.05).unwrap();
        assert!(s.reached);
        assert!(s.value >= prev);
        prev = s.value;

        let mut run = real.skeleton().unwrap();
        run.advance(&Stop { local_time: vec![(0.0, r)], ..Default::default() });
        let l = run.local_time_at(0.0);
        assert!((l - r).abs() <= 1e-9 * r, "L(sigma) = {l} for r = {r}");
    }
}

#[test]
fn symmetric_environment_gives_symmetric_sign() {
    let side = sample_brownian(&SamplerConfig::new(0.05, 77, 30.0).unwrap(), false).unwrap();
    let env = Environment::from_sides(side.clone(), side).unwrap();
    let n = 10_000;
    let mut positive = 0;
    for i in 0..n {
        let real = DiffusionRealization::new(env.clone(), rng_for(21, i, Stream::Driver), Construction::Skeleton).unwrap();
        let mut run = real.skeleton().unwrap();
        let o = run.advance(&Stop::at_time(1.0));
        assert!(o.reason.reached());
        if o.position > 0.0 {
            positive += 1;
        }
    }
    let f = positive as f64 / n as f64;
    assert!((0.47..=0.53).contains(&f), "P(X > 0) = {f}");
}

#[test]
fn flat_environment_uniform_driver_is_brownian() {
    let env = Environment::flat(50.0, 0.01).unwrap();
    let mut real = DiffusionRealization::new(env, rng_from_seed(3), Construction::Uniform { driver_step: 1e-4 }).unwrap();
    for s in [0.1, 0.7, 2.0] {
        assert!((real.time_change(s).unwrap() - s).abs() <= 1e-9 * s);
    }
}
