use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ura");

const SMALL: &str = "\
# small decoder sweep
system.users = 40
system.sigma2 = 0.05
system.total_bits = 22
sweep.param = system.antennas
sweep.values = 15, 30
trials = 3
seed = 7
";

fn ura(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(ura(&["--help"]).status.code(), Some(0));
    assert_eq!(ura(&["--version"]).status.code(), Some(0));
    assert_eq!(ura(&[]).status.code(), Some(1));
    assert_eq!(ura(&["amp-mse-sweep", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        ura(&["amp-mse-sweep", "--set", "system.nonsense=1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        ura(&["amp-mse-sweep", "--config", "/nonexistent/spec.txt"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn kind_in_config_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.txt", &format!("kind = compare\n{SMALL}"));
    let out = ura(&["amp-mse-sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("compare"));
}

#[test]
fn output_is_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.txt", SMALL);
    let mut outputs = Vec::new();
    for (name, threads) in [("1.csv", "1"), ("2.csv", "3"), ("3.csv", "1")] {
        let out = dir.path().join(name);
        let o = ura(&[
            "amp-mse-sweep",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("sweep_param,sweep_value,trial,pe,mse,iters,converged,sigma2_hat,wall_ms\n"));
    assert!(!text.contains('\r'));
    // 2 points × (3 trials + mean)
    assert_eq!(text.lines().count(), 1 + 2 * 4);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.txt", SMALL);
    let a = ura(&["amp-mse-sweep", "--config", &cfg]).stdout;
    let b = ura(&["amp-mse-sweep", "--config", &cfg, "--seed", "7"]).stdout;
    let c = ura(&["amp-mse-sweep", "--config", &cfg, "--seed", "8"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn empty_sweep_prints_header_only() {
    let o = ura(&[
        "e2e-pe-sweep",
        "--set",
        "sweep.param=system.antennas",
        "--set",
        "sweep.values=",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "sweep_param,sweep_value,trial,pe,mse,iters,converged,sigma2_hat,wall_ms\n"
    );
}

#[test]
fn compare_header_is_exact() {
    let o = ura(&[
        "compare",
        "--set",
        "system.users=40",
        "--set",
        "system.antennas=20",
        "--set",
        "trials=2",
        "--set",
        "replica.mc_samples=2000",
        "--set",
        "replica.d_max=0.3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("sweep_value,phi_bayes_d,phi_amp_d,mse_bayes,mse_amp,pe_pred,mse_emp,pe_emp,se_mse,se_pe")
    );
    assert_eq!(lines.count(), 1);
}
