use std::path::Path;
use std::process::{Command, Output};

use ctgan::metrics::header;

fn ctgan(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ctgan"));
    cmd.args(args).env_remove("CTGAN_OUT_DIR");
    if let Some(p) = out_env {
        cmd.env("CTGAN_OUT_DIR", p);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn train_tiny(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    let cfg = dir.join(format!("{name}.toml"));
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(&cfg, "preset = \"gp-wgan\"\n[output]\nmetric_every = 2\n").unwrap();
    let o = ctgan(
        &["train", "--config", cfg.to_str().unwrap(), "--iters", "4", "--seed", seed, "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn flags_override_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "preset = \"gp-wgan\"\nseed = 3\nout = \"file-out\"\n[train]\nbatch = 32\n").unwrap();
    let env_out = dir.path().join("env-out");
    let o = ctgan(&["train", "--dry-run", "--config", cfg.to_str().unwrap()], Some(&env_out));
    let text = stdout(&o);
    assert!(text.contains("batch = 32"));
    assert!(text.contains("seed = 3"));
    assert!(text.contains(&format!("out = \"{}\"", env_out.display())));

    let o = ctgan(
        &["train", "--dry-run", "--config", cfg.to_str().unwrap(), "--seed", "8", "--out", "flag-out", "--no-gp"],
        Some(&env_out),
    );
    let text = stdout(&o);
    assert!(text.contains("seed = 8"));
    assert!(text.contains("out = \"flag-out\""));
    assert!(text.contains("enable_gp = false"));
}

#[test]
fn exit_codes_follow_error_kind() {
    assert_eq!(ctgan(&["train", "--preset", "nope", "--dry-run"], None).status.code(), Some(1));
    assert_eq!(ctgan(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(ctgan(&["--help"], None).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.ckpt");
    let report = dir.path().join("r.csv");
    let o = ctgan(
        &["probe", "--checkpoint", missing.to_str().unwrap(), "--which", "weights", "--report", report.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "[train]\nlamda1 = 1.0\n").unwrap();
    let o = ctgan(&["train", "--dry-run", "--config", bad_cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("ctgan: "));
}

#[test]
fn export_merges_runs_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let merged = dir.path().join("empty.csv");
    assert_eq!(
        ctgan(&["export", empty.to_str().unwrap(), "--out", merged.to_str().unwrap()], None).status.code(),
        Some(0)
    );
    assert_eq!(std::fs::read_to_string(&merged).unwrap(), format!("{}\n", header().join(",")));

    let runs = dir.path().join("runs");
    train_tiny(&runs, "a", "1");
    train_tiny(&runs, "b", "2");
    let once = dir.path().join("once.csv");
    let twice = dir.path().join("twice.csv");
    assert_eq!(ctgan(&["export", runs.to_str().unwrap(), "--out", once.to_str().unwrap()], None).status.code(), Some(0));
    assert_eq!(ctgan(&["export", once.to_str().unwrap(), "--out", twice.to_str().unwrap()], None).status.code(), Some(0));
    let a = std::fs::read_to_string(&once).unwrap();
    assert_eq!(a, std::fs::read_to_string(&twice).unwrap());
    let ids: Vec<&str> = a.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert!(ids.contains(&"gp-wgan-s1") && ids.contains(&"gp-wgan-s2"));
}

#[test]
fn probes_report_and_reject_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = train_tiny(dir.path(), "run", "5");
    let ckpt = run.join("final.ckpt");
    let report = dir.path().join("g.csv");
    let o = ctgan(
        &["probe", "--checkpoint", ckpt.to_str().unwrap(), "--which", "gradnorm", "--report", report.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "grad_norm_max,rows");
    assert!(lines[1].split(',').next().unwrap().parse::<f64>().unwrap() > 0.0);

    let same = dir.path().join("same.csv");
    std::fs::write(&same, "0.5,0.5\n0.5,0.5\n0.5,0.5\n").unwrap();
    let o = ctgan(
        &[
            "probe",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--which",
            "pairwise",
            "--input",
            same.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));

    let wide = dir.path().join("wide.csv");
    std::fs::write(&wide, "1,2,3\n4,5,6\n").unwrap();
    let o = ctgan(
        &[
            "probe",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--which",
            "gradnorm",
            "--input",
            wide.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));

    let o = ctgan(
        &["probe", "--checkpoint", ckpt.to_str().unwrap(), "--which", "weights", "--bins", "8", "--report", report.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn fresh_critic_weights_follow_the_init_distribution() {
    use statrs::distribution::{ContinuousCDF, Normal};
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = ctgan(&["train", "--preset", "gp-wgan", "--iters", "0", "--out", run.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ck = ctgan::checkpoint::Checkpoint::load(&run.join("final.ckpt")).unwrap();
    let mut w: Vec<f64> = ck
        .network("critic")
        .unwrap()
        .params()
        .iter()
        .filter(|p| p.kind == ctgan_core::nn::ParamKind::Weight)
        .flat_map(|p| p.value.data().to_vec())
        .collect();
    w.sort_by(f64::total_cmp);
    let n = w.len() as f64;
    let normal = Normal::new(0.0, 0.02).unwrap();
    let d = w
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = normal.cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS statistic.
    assert!(d < 1.63 / n.sqrt(), "KS statistic {d} over {n} weights");
}
