use broxlab::harness::{run, Experiment, ExperimentConfig};

/// A quick configuration of every experiment.
fn small(e: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(e);
    cfg.base_seed = 5;
    cfg.replicates = 60;
    cfg.barrier_replicates = 200;
    match e {
        Experiment::Gamma | Experiment::Profile | Experiment::Localization | Experiment::Sandwich => {
            cfg.c = None;
            (cfg.c1, cfg.c2, cfg.c3) = (0.5, 0.5, 0.5);
            cfg.v_grid = vec![5.0, 6.0];
            cfg.replicates = 8;
        }
        Experiment::Ladder => cfg.n_max = 3,
        Experiment::Tanaka => cfg.v_grid = vec![2.0],
        Experiment::Simulate => cfg.v_grid = vec![4.0],
        Experiment::RayKnight => {}
    }
    cfg
}

#[test]
fn same_config_same_bytes() {
    for e in Experiment::ALL {
        let cfg = small(e);
        let a = run(&cfg).unwrap().to_json_without_wall_time();
        let b = run(&cfg).unwrap().to_json_without_wall_time();
        assert_eq!(a, b, "{e} differs between runs");
    }
}

#[test]
fn worker_count_does_not_change_the_report() {
    for e in [Experiment::Simulate, Experiment::Gamma, Experiment::Tanaka] {
        let mut cfg = small(e);
        cfg.workers = 1;
        let a = run(&cfg).unwrap().to_json_without_wall_time();
        cfg.workers = 3;
        let mut b = run(&cfg).unwrap();
        b.config.workers = 1;
        let b = b.to_json_without_wall_time();
        assert_eq!(a, b, "{e} depends on the worker count");
    }
}

#[test]
fn different_seed_different_report() {
    let cfg = small(Experiment::Simulate);
    let mut other = cfg.clone();
    other.base_seed += 1;
    assert_ne!(run(&cfg).unwrap().to_json_without_wall_time(), run(&other).unwrap().to_json_without_wall_time());
}
