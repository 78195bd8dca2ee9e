use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_stabperc");

fn stabperc(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("STABPERC_OUT")
        .env_remove("STABPERC_THREADS")
        .output()
        .unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn sweep_is_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let common = ["--side", "6", "--h", "0.1", "--replicas", "12", "--seed", "4"];
    for (threads, out) in [("1", "one"), ("3", "three")] {
        let mut args = vec!["sweep", "--threads", threads, "--output", out];
        args.extend_from_slice(&common);
        let o = stabperc(&args, tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["sweep.csv", "threshold.txt"] {
        assert_eq!(read(tmp.path().join("one").join(f)), read(tmp.path().join("three").join(f)), "{f}");
    }
    let settings = |dir: &str| -> Vec<String> {
        let text = String::from_utf8(read(tmp.path().join(dir).join("manifest.txt"))).unwrap();
        text.lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
    };
    assert_eq!(settings("one"), settings("three"));
    let csv = String::from_utf8(read(tmp.path().join("one/sweep.csv"))).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "alpha,p_hat,ci_lo,ci_hi,replicas,crossings");
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn manifest_reruns_to_the_same_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stabperc(&["allocate", "--side", "5", "--h", "0.05", "--alpha", "0.7", "--seed", "11", "--majorant", "true", "--output", "first"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = stabperc(&["allocate", "--config", "first/manifest.txt", "--output", "second"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["centers.txt", "allocation.snap", "claimed.snap", "rfield.snap", "painted.snap", "allocation.ppm", "summary.json"] {
        assert_eq!(read(tmp.path().join("first").join(f)), read(tmp.path().join("second").join(f)), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&read(tmp.path().join("first/summary.json"))).unwrap();
    assert_eq!(summary["unstable_pairs"], 0);
    assert_eq!(summary["containment_violations"], 0);
}

#[test]
fn centers_file_drives_allocation() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.txt"), "2 1 0 box 4 4\n1.0 1.0\n3.0 2.5\n").unwrap();
    let o = stabperc(&["allocate", "--side", "4", "--h", "0.05", "--alpha", "0", "--centers", "c.txt", "--output", "out"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let img = read(tmp.path().join("out/allocation.ppm"));
    let header = b"P6\n400 400\n255\n";
    assert!(img.starts_with(header));
    let body = &img[header.len()..];
    assert_eq!(body.len(), 400 * 400 * 3);
    assert!(body.chunks_exact(3).all(|p| p == [255, 255, 255] || p == [0, 0, 0]));
    assert!(body.chunks_exact(3).any(|p| p == [0, 0, 0]));
    // window mismatch is reported
    let o = stabperc(&["allocate", "--side", "5", "--centers", "c.txt", "--output", "bad"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_errors_exit_two_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("cfg.txt"), "side = 10\n# note\nlambda = -1\n").unwrap();
    let o = stabperc(&["sweep", "--config", "cfg.txt"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("cfg.txt:3: lambda must be nonnegative"), "{err}");

    let o = stabperc(&["pm", "--m", "zero"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = stabperc(&["render", "--dim", "3"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = stabperc(&["sweep", "--config", "missing.txt"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("file"), "x").unwrap();
    let o = stabperc(&["tailbound", "--replicas", "10", "--output", "file/sub"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["pm", "--replicas", "5", "--m", "7", "--lambda", "0.01"])
        .current_dir(tmp.path())
        .env("STABPERC_OUT", tmp.path().join("runs"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pm: serde_json::Value = serde_json::from_slice(&read(tmp.path().join("runs/pm/pm.json"))).unwrap();
    assert_eq!(pm["p_m"]["trials"], 5);
    assert_eq!(pm["diameter"], "linf");
}

#[test]
fn diagnostics_and_render_verbs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stabperc(&["diagnostics", "--side", "12", "--replicas", "3", "--alpha", "0.5,1", "--output", "d"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let totals: serde_json::Value = serde_json::from_slice(&read(tmp.path().join("d/diagnostics.json"))).unwrap();
    for k in ["unstable", "containment", "uncovered", "domination"] {
        assert_eq!(totals[k], 0, "{k}");
    }
    let o = stabperc(&["render", "--side", "8", "--output", "r"], tmp.path());
    assert!(o.status.success());
    let img = read(tmp.path().join("r/render.ppm"));
    assert!(img.starts_with(b"P6\n"));
    let o = stabperc(&["allocate", "--side", "8", "--output", "a"], tmp.path());
    assert!(o.status.success());
    let o = stabperc(&["render", "--snapshot", "a/claimed.snap", "--output", "m"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = stabperc(&["render", "--snapshot", "a/centers.txt", "--output", "x"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tailbound_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stabperc(&["tailbound", "--replicas", "300", "--output", "t"], tmp.path());
    assert!(o.status.success());
    let csv = String::from_utf8(read(tmp.path().join("t/tailbound.csv"))).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "a,replicas,exceed,p_hat,mc_sigma,bound,within");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",1,true")));
}
