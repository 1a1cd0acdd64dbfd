use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_solitonlab"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).arg("--quiet").current_dir(dir).output().expect("binary runs")
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

const SMALL: &str = "grid.n = 1024\ngrid.L = 40\ntime.T = 2\ntime.store_every = 0.25\n";

#[test]
fn rejects_non_power_of_two_grid() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.conf"), "grid.n = 1000\n").unwrap();
    let out = run(&["simulate", "--config", "bad.conf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["no-such-command"], dir.path()).status.code(), Some(2));
    let out = run(&["simulate", "--config", "missing.conf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identities_pass_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify-identities", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv(&dir.path().join("o/reports/identities.csv"));
    assert_eq!(header, ["name", "lattice", "max_rel_err", "max_abs_err", "pass"]);
    assert!(rows.len() >= 14);
    for r in rows {
        let rel: f64 = r[2].parse().unwrap();
        // the Fourier self-test compares against a windowed quadrature at 1e-3
        if r[0] != "ft_tanh" {
            assert!(rel < 1e-6, "{r:?}");
        }
        assert_eq!(r[4], "true", "{r:?}");
    }
}

#[test]
fn control_run_conserves_mass_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}perturbation.kind = none\nperturbation.amplitude = 0\n");
    fs::write(dir.path().join("c.conf"), cfg).unwrap();
    for o in ["a", "b"] {
        let out = run(&["simulate", "--config", "c.conf", "--out", o, "--threads", "2"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (header, rows) = csv(&dir.path().join("a/series/conserved.csv"));
    assert_eq!(header, ["t", "mass", "momentum", "energy", "boundary_mass"]);
    let mass: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    for m in &mass {
        assert!((m - mass[0]).abs() / mass[0] < 1e-12);
    }
    for f in ["series/conserved.csv", "series/final_field.csv", "reports/simulate.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn dft_roundtrips_pass() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.conf"), SMALL).unwrap();
    let out = run(&["verify-dft", "--config", "s.conf", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = csv(&dir.path().join("o/reports/dft.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn fit_modulation_writes_parameter_series() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.conf"), SMALL).unwrap();
    let out = run(&["fit-modulation", "--config", "s.conf", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv(&dir.path().join("o/series/modulation.csv"));
    assert_eq!(
        header,
        ["t", "omega", "gamma", "p", "sigma", "theta1", "theta2", "newton_residual", "orth1", "orth2", "orth3", "orth4"]
    );
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let res: f64 = r[7].parse().unwrap();
        assert!(res < 1e-9);
    }
    assert!(dir.path().join("o/series/modulation_ode_residual.csv").exists());
}

#[test]
fn decay_report_reproduces_the_amplitude_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["decay-report", "--out", "o"], dir.path());
    let (header, rows) = csv(&dir.path().join("o/reports/summary.csv"));
    assert_eq!(header, ["quantity", "slope", "stderr", "predicted", "pass"]);
    let row = rows.iter().find(|r| r[0] == "u_Linf").expect("u_Linf row");
    let slope: f64 = row[1].parse().unwrap();
    assert!((-0.65..=-0.35).contains(&slope), "{slope}");
    assert_eq!(out.status.code(), Some(0), "{:?}", rows);
    for name in ["u_Linf", "h1", "h2", "u_minus_uinf", "modulation", "w_profile", "amplitudes_h"] {
        assert!(dir.path().join(format!("o/series/{name}.csv")).exists(), "{name}");
    }
}
