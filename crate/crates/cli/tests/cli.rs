use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
[data]
seed = 7
days = 10

[training]
epochs = 1
batch_size = 4
architecture = { kind = "mlp", hidden = [8] }
patience = 0

[evaluation]
approaches = ["per-f", "proposed", "qua-e"]
"#;

fn vof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vof")).args(args).output().expect("vof runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("experiment.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_data_then_one_epoch_of_mse_training() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let csv = dir.path().join("data.csv");
    let o = vof(&["gen-data", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = std::fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(rows, 1 + 240);

    let run = dir.path().join("run");
    let o = vof(&[
        "train", "--config", cfg.to_str().unwrap(), "--seed", "3", "--loss", "mse", "--out", run.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = std::fs::read_to_string(run.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2, "{trace}");
    assert!(run.join("model.json").exists());
}

/// Sum of the real-time cost over hours where the realization fell short.
fn shortage_rt_cost(hourly: &Path) -> (f64, usize) {
    let text = std::fs::read_to_string(hourly).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("day,hour,y,y_hat,lambda,nu,da_cost,rt_cost"));
    let (mut total, mut hours) = (0.0, 0);
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        if v[2] < v[3] - 1e-6 {
            total += v[7];
            hours += 1;
        }
    }
    (total, hours)
}

#[test]
fn rt_override_scales_shortage_costs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let run = dir.path().join("run");
    let o = vof(&["train", "--config", cfg, "--seed", "1", "--loss", "mse", "--out", run.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = run.join("model.json");
    let mut costs = Vec::new();
    for (name, prices) in [("high", "90,100"), ("low", "5,15")] {
        let out = dir.path().join(name);
        let o = vof(&[
            "eval", "--config", cfg, "--model", model.to_str().unwrap(), "--rt-cost-override", prices, "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(out.join("metrics.json").exists());
        costs.push(shortage_rt_cost(&out.join("hourly.csv")));
    }
    let ((high, n_high), (low, n_low)) = (costs[0], costs[1]);
    assert_eq!(n_high, n_low);
    assert!(n_high > 0);
    assert!(high > low, "{high} vs {low}");
}

#[test]
fn compare_twice_gives_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("cmp{k}"));
        let o = vof(&["compare", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(out.join("metrics.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn failures_print_their_class_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();

    let o = vof(&["train", "--config", cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: ConfigError"), "{}", stderr(&o));

    let o = vof(&["train", "--config", cfg, "--seed", "1", "--loss", "pinball", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ConfigError"), "{}", stderr(&o));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[data]\nno_such_key = 1\n").unwrap();
    let o = vof(&["gen-data", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ConfigError"), "{}", stderr(&o));

    let missing = dir.path().join("missing.json");
    let o = vof(&["eval", "--config", cfg, "--model", missing.to_str().unwrap(), "--out", out]);
    assert!(!o.status.success());
    assert_eq!(stderr(&o).lines().count(), 1, "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: "));

    let o = vof(&["eval", "--config", cfg, "--model", missing.to_str().unwrap(), "--rt-cost-override", "1", "--out", out]);
    assert!(!o.status.success());
}
