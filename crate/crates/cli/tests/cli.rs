use std::path::Path;
use std::process::{Command, Output};

fn asilfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asilfd")).args(args).output().expect("spawn asilfd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn returns(o: &Output) -> Vec<f64> {
    stdout(o)
        .lines()
        .filter(|l| l.starts_with("trajectory"))
        .map(|l| l.rsplit(' ').next().unwrap().parse().unwrap())
        .collect()
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    std::fs::write(
        &path,
        "total_steps = 2000\nbatch_size = 32\nhidden = [16, 16]\nn_critics = 3\nwarmup_steps = 200\n\
         eval_interval = 500\neval_episodes = 2\nbc_epochs = 20\n",
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn gen_demos_writes_four_trajectories_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = asilfd(&[
            "gen-demos",
            "--env",
            "pointmass",
            "--quality",
            "expert",
            "--n",
            "4",
            "--seed",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(returns(&o).len(), 4);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let file = asilfd_core::buffers::read_trajectories(&a).unwrap();
    assert_eq!(file.trajectories.len(), 4);
}

#[test]
fn imperfect_demos_score_below_expert() {
    let dir = tempfile::tempdir().unwrap();
    let run = |q: &str| {
        let out = dir.path().join(format!("{q}.csv"));
        returns(&asilfd(&["gen-demos", "--quality", q, "--n", "4", "--seed", "1", "--out", out.to_str().unwrap()]))
    };
    let (expert, imperfect) = (run("expert"), run("imperfect"));
    for (e, i) in expert.iter().zip(&imperfect) {
        assert!(i < e, "imperfect {i} vs expert {e}");
    }
}

#[test]
fn train_runs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let demos = dir.path().join("demos.csv");
    assert!(asilfd(&["gen-demos", "--quality", "imperfect", "--out", demos.to_str().unwrap()]).status.success());
    let metrics: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("run{k}"));
            let o = asilfd(&[
                "train",
                "--config",
                &cfg,
                "--demos",
                demos.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            assert!(out.join("config.toml").exists() && out.join("agent.ckpt").exists());
            std::fs::read(out.join("metrics.csv")).unwrap()
        })
        .collect();
    assert_eq!(metrics[0], metrics[1]);
    assert_eq!(String::from_utf8_lossy(&metrics[0]).lines().count(), 1 + 5);

    let ckpt = dir.path().join("run0/agent.ckpt");
    let o = asilfd(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--episodes", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("mean return over 2 episodes"));
    let o = asilfd(&["diagnose", "--checkpoint", ckpt.to_str().unwrap(), "--states", "10", "--horizon", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn td3_trains_without_demos() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("td3");
    let o = asilfd(&["train", "--config", &cfg, "--variant", "td3", "--steps", "600", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("experience.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "total_steps = 10\nnot_a_field = 1\n").unwrap();
    assert_eq!(asilfd(&["train", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    // asilfd without a demo file
    let cfg = tiny_config(dir.path());
    assert_eq!(asilfd(&["train", "--config", &cfg]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(asilfd(&["train", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(asilfd(&["gen-demos", "--n", "0", "--out", "x.csv"]).status.code(), Some(2));
    assert_eq!(asilfd(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn plot_rejects_empty_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = dir.path().join("plot.svg");
    let o = asilfd(&["plot", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert!(!out.exists());
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let mut files = Vec::new();
    for seed in ["0", "1"] {
        let out = dir.path().join(format!("s{seed}"));
        let o = asilfd(&[
            "train",
            "--config",
            &cfg,
            "--variant",
            "td3",
            "--steps",
            "1000",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        files.push(out.join("metrics.csv").to_str().unwrap().to_owned());
    }
    let svg = dir.path().join("curves.svg");
    let o = asilfd(&["plot", &files[0], &files[1], "--out", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
}

#[test]
fn grad_check_passes() {
    let o = asilfd(&["grad-check", "--instances", "50"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let worst: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("worst relative error "))
        .and_then(|l| l.split(' ').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(worst <= 1e-6);
}

#[test]
fn grad_check_with_impossible_tolerance_exits_3() {
    assert_eq!(asilfd(&["grad-check", "--instances", "5", "--tolerance", "0"]).status.code(), Some(3));
}

#[test]
fn diagnose_fresh_and_fixture() {
    let o = asilfd(&["diagnose", "--fresh", "--states", "20", "--horizon", "100"]);
    assert!(o.status.success());
    let err: f64 = stdout(&o).lines().find_map(|l| l.strip_prefix("mean absolute Q error ")).unwrap().parse().unwrap();
    assert!(err.is_finite());

    let o = asilfd(&["diagnose", "--fixture", "chain-reward", "--env", "chain"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("within tolerance"));
}

#[test]
fn commands_are_deterministic() {
    let a = asilfd(&["diagnose", "--fresh", "--states", "15", "--horizon", "40", "--seed", "3"]);
    let b = asilfd(&["diagnose", "--fresh", "--states", "15", "--horizon", "40", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}
