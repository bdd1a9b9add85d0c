use asilfd_core::agent::{Agent, CriticMode};
use asilfd_core::buffers::write_trajectories;
use asilfd_core::envs::{collect_demos, ControllerSpec, EnvId, EnvSpec};
use asilfd_core::harness::{
    metrics_csv, read_metrics, train, train_with_demos, Precision, RunOutput, TrainConfig, Variant,
};
use asilfd_core::Error;

fn tiny(variant: Variant, demo_path: Option<std::path::PathBuf>) -> TrainConfig {
    TrainConfig {
        variant,
        total_steps: 600,
        batch_size: 32,
        hidden: vec![8, 8],
        n_critics: 3,
        warmup_steps: 100,
        eval_interval: 200,
        eval_episodes: 2,
        bc_epochs: 20,
        demo_path,
        max_episode_steps: Some(50),
        sample_capacity: 10_000,
        ..TrainConfig::default()
    }
}

fn demo_file(dir: &std::path::Path) -> std::path::PathBuf {
    let spec = EnvSpec::new(EnvId::PointMass).with_max_steps(50);
    let demos = collect_demos(&spec, &ControllerSpec::default_imperfect(2), 4, 7).unwrap();
    let p = dir.join("demos.csv");
    write_trajectories(&p, EnvId::PointMass, &demos, None).unwrap();
    p
}

#[test]
fn zero_steps_records_only_the_initial_evaluation() {
    let c = TrainConfig { total_steps: 0, ..tiny(Variant::Td3, None) };
    let r = train(&c, &RunOutput::none()).unwrap();
    assert_eq!(r.records.len(), 1);
    assert_eq!(r.records[0].step, 0);
    assert_eq!(r.records[0].updates, 0);
}

#[test]
fn every_variant_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demo_file(dir.path());
    for v in Variant::ALL {
        let c = tiny(v, v.uses_demos().then(|| demos.clone()));
        let a = dir.path().join(format!("{v}-a"));
        let b = dir.path().join(format!("{v}-b"));
        train(&c, &RunOutput::dir(&a)).unwrap();
        train(&c, &RunOutput::dir(&b)).unwrap();
        let ma = std::fs::read(a.join("metrics.csv")).unwrap();
        assert_eq!(ma, std::fs::read(b.join("metrics.csv")).unwrap(), "{v}");
        assert_eq!(std::fs::read(a.join("agent.ckpt")).unwrap(), std::fs::read(b.join("agent.ckpt")).unwrap());
        assert_eq!(read_metrics(&a.join("metrics.csv")).unwrap().len(), 4);
    }
}

#[test]
fn parallel_critics_reproduce_sequential_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(Variant::Asilfd, Some(demo_file(dir.path())));
    let seq = train(&c, &RunOutput::none()).unwrap();
    let par = train(&TrainConfig { critic_mode: CriticMode::Parallel, ..c }, &RunOutput::none()).unwrap();
    assert_eq!(metrics_csv(&seq.records), metrics_csv(&par.records));
}

#[test]
fn metrics_file_matches_in_memory_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = train(&tiny(Variant::Redq, None), &RunOutput::dir(&out)).unwrap();
    assert_eq!(std::fs::read_to_string(out.join("metrics.csv")).unwrap(), metrics_csv(&r.records));
    let timing = std::fs::read_to_string(out.join("timing.csv")).unwrap();
    assert_eq!(timing.lines().count(), r.records.len() + 1);
    let agent = Agent::<f64>::load(&out.join("agent.ckpt")).unwrap();
    assert_eq!(agent.to_text().unwrap(), r.checkpoint);
}

#[test]
fn logged_buffer_threshold_and_penalty_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let c = TrainConfig { total_steps: 2000, eval_interval: 100, ..tiny(Variant::Asilfd, Some(demo_file(dir.path()))) };
    let r = train(&c, &RunOutput::none()).unwrap();
    for w in r.records.windows(2) {
        assert!(w[1].step > w[0].step);
        assert!(w[1].r_min >= w[0].r_min, "r_min fell: {} -> {}", w[0].r_min, w[1].r_min);
        assert!(w[1].lambda <= w[0].lambda);
    }
    assert_eq!(r.records[0].lambda, 1.0);
    assert_eq!(r.records.last().unwrap().lambda, 0.05);
    assert_eq!(r.episode_returns.len(), 40);
    assert_eq!(r.records.last().unwrap().episodes, 40);
}

#[test]
fn updates_start_once_sample_buffer_exceeds_batch() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(Variant::Asilfd, Some(demo_file(dir.path())));
    let r = train(&c, &RunOutput::none()).unwrap();
    for rec in &r.records {
        assert_eq!(rec.updates, rec.step.saturating_sub(c.batch_size as u64), "step {}", rec.step);
    }
    let lfd = train(&tiny(Variant::RedqLfd, c.demo_path.clone()), &RunOutput::none()).unwrap();
    // 200 demo transitions already exceed the batch, so every step updates.
    assert_eq!(lfd.records.last().unwrap().updates, 600);
}

#[test]
fn scratch_variants_never_read_demos() {
    let missing = Some(std::path::PathBuf::from("/nonexistent/demos.csv"));
    for v in [Variant::Td3, Variant::Redq] {
        let c = TrainConfig { total_steps: 100, ..tiny(v, missing.clone()) };
        train(&c, &RunOutput::none()).unwrap();
    }
    let c = tiny(Variant::Asilfd, missing);
    assert!(matches!(train(&c, &RunOutput::none()), Err(Error::Config(_))));
}

#[test]
fn demo_dimension_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = EnvSpec::new(EnvId::Pendulum);
    let demos = collect_demos(&spec, &ControllerSpec::expert(1), 2, 1).unwrap();
    let p = dir.path().join("pend.csv");
    write_trajectories(&p, EnvId::Pendulum, &demos, None).unwrap();
    assert!(matches!(train(&tiny(Variant::Asilfd, Some(p)), &RunOutput::none()), Err(Error::Config(_))));
    let err = train_with_demos(&tiny(Variant::Asilfd, None), Some(demos), &RunOutput::none());
    assert!(matches!(err, Err(Error::Config(_))));
}

#[test]
fn td3_uses_two_critics_and_bc_variants_report_pretraining() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demo_file(dir.path());
    let r = train(&tiny(Variant::Td3, None), &RunOutput::none()).unwrap();
    assert!(r.checkpoint.contains("critics 2 2"));
    assert!(r.bc.is_none());
    let r = train(&tiny(Variant::RedqBc, Some(demos)), &RunOutput::none()).unwrap();
    let bc = r.bc.unwrap();
    assert!(bc.final_mse < bc.initial_mse);
    assert!(r.records.iter().all(|m| m.r_min.is_nan() && m.lambda == 0.0));
}

#[test]
fn f32_runs_are_deterministic_too() {
    let c = TrainConfig { precision: Precision::F32, ..tiny(Variant::Redq, None) };
    let a = train(&c, &RunOutput::none()).unwrap();
    let b = train(&c, &RunOutput::none()).unwrap();
    assert_eq!(metrics_csv(&a.records), metrics_csv(&b.records));
    assert!(a.checkpoint.starts_with("agent-checkpoint f32"));
}
