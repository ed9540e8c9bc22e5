use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_heom");

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn heom(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn run(mode: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![mode, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let output = heom(&args);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    output
}

/// Rows of a CSV file as a header plus float columns.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k]).collect()
}

/// Writes `text` as a config in a fresh temporary directory and returns the
/// exit code of `heom <mode>` on it, plus stderr.
fn exit_code(mode: &str, text: &str) -> (i32, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = heom(&[mode, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

const CLOSED: &str = "[system]\ndelta_ev = 0.21\nw_ev = 0.13\nt_final_fs = 2.0\n";
const BATH: &str = "[bath]\ntemperature_k = 298.0\nmatsubara = 2\nterms = [{ p_ev5 = 2.3e-6, omega1_ev = 0.30, gamma1_ev = 0.06, omega2_ev = 0.50, gamma2_ev = 0.10 }]\n";

#[test]
fn field_free_population_oscillates_and_damps() {
    let dir = tempfile::tempdir().unwrap();
    run("propagate", &example("field_free.toml"), dir.path(), &[]);
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t_fs", "rho11", "rho22", "Re_rho12", "Im_rho12", "X1_11_au", "X1_22_au", "E_au"]);
    let t = column(&header, &rows, "t_fs");
    let p = column(&header, &rows, "rho11");
    let minima: Vec<usize> = (1..p.len() - 1).filter(|&i| p[i] < p[i - 1] && p[i] <= p[i + 1]).collect();
    assert!(minima.len() >= 3);
    let maxima: Vec<usize> = (1..p.len() - 1).filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1]).collect();
    for w in minima.windows(2) {
        let spacing = t[w[1]] - t[w[0]];
        assert!((spacing / 12.3 - 1.0).abs() < 0.05, "spacing {spacing} fs");
    }
    // Peak-to-trough swing shrinks while the population relaxes.
    let swings: Vec<f64> = maxima.iter().zip(&minima[1..]).map(|(&hi, &lo)| p[hi] - p[lo]).collect();
    assert!(swings.len() >= 2 && swings.windows(2).all(|w| w[1] < w[0]), "{swings:?}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["diagnostics"]["max_trace_defect"].as_f64().unwrap() < 1e-8);
}

#[test]
fn witness_outputs_carry_unit_suffixes() {
    let dir = tempfile::tempdir().unwrap();
    run("propagate", &example("closed_rabi.toml"), dir.path(), &["--witness"]);
    let (header, rows) = read_csv(&dir.path().join("witness.csv"));
    assert_eq!(header, ["t_fs", "V", "Gamma_au", "g1_au", "g2_au", "g3_au", "w1", "w2", "w3", "S_rho_bits"]);
    // Closed evolution keeps the volume at one.
    assert!(column(&header, &rows, "V").iter().all(|v| (v - 1.0).abs() < 1e-9));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("decomposition.json")).unwrap()).unwrap();
    assert!(!json["samples"].as_array().unwrap().is_empty());
}

#[test]
fn closed_swap_reaches_the_target() {
    let dir = tempfile::tempdir().unwrap();
    run("optimize", &example("c1_swap.toml"), dir.path(), &[]);
    let (header, rows) = read_csv(&dir.path().join("fidelity.csv"));
    assert_eq!(header, ["iter", "fidelity", "max_amp_au"]);
    let f = column(&header, &rows, "fidelity");
    assert!(*f.last().unwrap() > 0.99);
    assert!(f.windows(2).all(|w| w[1] >= w[0] - 1e-6));
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert!(*column(&header, &rows, "rho22").last().unwrap() > 0.99);
    let (header, rows) = read_csv(&dir.path().join("field_optimal.csv"));
    assert_eq!(header, ["t_fs", "E_au"]);
    assert!(column(&header, &rows, "E_au").iter().all(|e| e.abs() <= 1e-2));
}

#[test]
fn scans_converge_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    run("scan", &example("level_scan.toml"), dir.path(), &[]);
    let (header, rows) = read_csv(&dir.path().join("scan.csv"));
    assert_eq!(header, ["value", "rho11_final", "fidelity", "max_deviation", "c0_rel_error"]);
    let dev = column(&header, &rows, "max_deviation");
    assert!(dev.windows(2).all(|w| w[1] <= w[0]), "{dev:?}");
    assert_eq!(*dev.last().unwrap(), 0.0);

    let dir = tempfile::tempdir().unwrap();
    run("scan", &example("matsubara_scan.toml"), dir.path(), &[]);
    let (header, rows) = read_csv(&dir.path().join("scan.csv"));
    let err = column(&header, &rows, "c0_rel_error");
    assert!(err.windows(2).all(|w| w[1] <= w[0]), "{err:?}");
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let runs: Vec<tempfile::TempDir> = ["1", "2", "1"]
        .iter()
        .map(|threads| {
            let dir = tempfile::tempdir().unwrap();
            run("propagate", &example("driven.toml"), dir.path(), &["--threads", threads]);
            dir
        })
        .collect();
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("trajectory.csv")).unwrap();
    assert_eq!(read(&runs[0]), read(&runs[1]));
    assert_eq!(read(&runs[0]), read(&runs[2]));
}

#[test]
fn correlation_export() {
    let dir = tempfile::tempdir().unwrap();
    run("correlation", &example("correlation.toml"), dir.path(), &[]);
    let (header, rows) = read_csv(&dir.path().join("correlation.csv"));
    assert_eq!(header, ["t_fs", "Re_C_au", "Im_C_au", "Abs_C_au"]);
    assert!(rows[0][3] > 0.0 && rows.last().unwrap()[3] < 0.05 * rows[0][3]);
}

#[test]
fn config_errors_exit_with_code_2() {
    let zero_t = format!("{CLOSED}{}", BATH.replace("298.0", "0.0"));
    let (code, _) = exit_code("propagate", &zero_t);
    assert_eq!(code, 2);

    let (code, err) = exit_code("propagate", &format!("{CLOSED}colour = \"red\"\n"));
    assert_eq!(code, 2, "{err}");

    let (code, err) = exit_code("propagate", &CLOSED.replace("delta_ev", "delta"));
    assert_eq!(code, 2);
    assert!(err.contains("delta_ev"), "{err}");

    let (code, _) = exit_code("scan", &format!("{CLOSED}[scan]\nparameter = \"heom_level\"\nvalues = []\n"));
    assert_eq!(code, 2);

    // mode key must agree with the subcommand
    let (code, _) = exit_code("propagate", &format!("mode = \"scan\"\n{CLOSED}"));
    assert_eq!(code, 2);
}

#[test]
fn oversized_hierarchy_exits_with_code_4() {
    let text = format!("{}heom_level = 40\nmax_slots = 1000\n{BATH}", CLOSED);
    let (code, err) = exit_code("propagate", &text);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn unreadable_config_exits_with_code_5() {
    let o = heom(&["propagate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(5));
}
