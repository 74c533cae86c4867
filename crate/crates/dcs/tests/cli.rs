use std::path::Path;
use std::process::{Command, Output};

use dcs::table::ResultTable;

fn dcs(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcs"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CHAOS_SYNC_OUT")
        .output()
        .expect("run dcs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_writes_t_x_y_z_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcs(&["generate", "--map", "lorenz", "--T", "1024", "--dt", "0.1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 1, "{stdout}");
    let t = ResultTable::read(&dir.path().join("lorenz_trajectory.csv")).unwrap();
    assert_eq!(t.columns, ["t", "x", "y", "z"]);
    assert_eq!(t.rows.len(), 1024);
    assert_eq!(t.rows[0], vec![0.0, 0.1, 0.1, 0.1]);
    assert!(t.meta("config_hash").is_some_and(|h| h.len() == 16));
    assert_eq!(t.meta("seed"), Some("2024"));
}

#[test]
fn generate_is_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(dcs(&["generate", "--map", "henon", "--T", "300", "--set", "eval.span=200", "--set", "ga.fitness_span=200", "--set", "fig10.lengths=[300]"], d.path()).status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("henon_trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn empty_config_exits_2_naming_the_missing_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "").unwrap();
    let o = dcs(&["generate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("signal"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_flag_exit_2_with_the_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcs(&["generate", "--set", "dip.momentun=0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dip.momentun"), "{}", stderr(&o));
    let o = dcs(&["generate", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--frobnicate"), "{}", stderr(&o));
}

#[test]
fn invalid_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcs(&["corrupt", "--set", "noise.sigma2=[-1.0]"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested");
    let o = Command::new(env!("CARGO_BIN_EXE_dcs"))
        .args(["corrupt", "--T", "64", "--sigma2", "0.3", "--set", "eval.span=50", "--set", "ga.fitness_span=50", "--set", "fig10.lengths=[64]"])
        .current_dir(dir.path())
        .env("CHAOS_SYNC_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let t = ResultTable::read(&target.join("lorenz_received.csv")).unwrap();
    assert_eq!(t.rows.len(), 64);
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec![std::ffi::OsString::from("nested")]);
}

#[test]
fn conventional_receiver_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcs(&["receive", "--receiver", "conventional", "--sigma2", "0"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let t = ResultTable::read(&dir.path().join("lorenz_receive_conventional.csv")).unwrap();
    let (z, zr) = (t.column("z").unwrap(), t.column("zr").unwrap());
    assert_eq!(z.len(), 1024);
    assert!(t.meta("avg_sync_error").is_some());
    assert!(z.iter().zip(&zr).all(|(a, b)| a.is_finite() && b.is_finite()));
}

#[test]
fn reduced_fig7_has_one_series_per_noise_power() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcs(
        &[
            "fig7",
            "--T", "64",
            "--set", "dip.latent_length=2",
            "--set", "fig7.sigma2=[0.1, 0.4, 0.7]",
            "--set", "fig7.iterations=20",
            "--set", "fig7.snapshot_every=5",
            "--set", "fig7.maps=[\"lorenz\", \"henon\"]",
            "--set", "fig7.map_seeds=1",
            "--set", "ga.population_size=50",
            "--set", "ga.fitness_span=50",
            "--set", "eval.span=50",
            "--set", "fig10.lengths=[64]",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let loss = ResultTable::read(&dir.path().join("fig7_loss.csv")).unwrap();
    assert_eq!(loss.columns, ["iteration", "sigma2=0.1", "sigma2=0.4", "sigma2=0.7"]);
    assert_eq!(loss.rows.len(), 5);
    let svg = std::fs::read_to_string(dir.path().join("fig7a_loss.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), 3);
    let maps = ResultTable::read(&dir.path().join("fig7_maps.csv")).unwrap();
    assert_eq!(maps.rows.len(), 2);
}
