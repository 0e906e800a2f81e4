use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_qhel");

fn qhel(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = qhel(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (
        header,
        lines
            .map(|l| l.split(',').map(String::from).collect())
            .collect(),
    )
}

fn report(path: &Path) -> Vec<(String, f64)> {
    csv(path)
        .1
        .into_iter()
        .map(|r| (r[0].clone(), r[1].parse().unwrap()))
        .collect()
}

fn get(rows: &[(String, f64)], key: &str) -> f64 {
    rows.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("no {key}"))
        .1
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn abc_has_six_wave_vectors() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["field", "abc", "1", "1", "1"]);
    assert!(out.contains("6 wave vectors"), "{out}");
    let (header, rows) = csv(&d.path().join("field.csv"));
    assert_eq!(
        header,
        [
            "n1",
            "n2",
            "n3",
            "re_cplus",
            "im_cplus",
            "re_cminus",
            "im_cminus"
        ]
    );
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let k: Vec<i32> = r[..3].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(k.iter().map(|m| m * m).sum::<i32>(), 1);
        // positive-helicity field: no minus amplitudes
        assert_eq!(r[5].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[6].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn powerlaw_is_byte_identical_across_runs_and_workers() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let args = [
        "field", "powerlaw", "--alpha", "1.6667", "--kmax", "12", "--seed", "7",
    ];
    ok(&a, &[&["--threads", "1"], &args[..]].concat());
    ok(&b, &[&["--threads", "3"], &args[..]].concat());
    for f in ["field.csv", "manifest.txt"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let manifest = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed=7") && manifest.contains("alpha=1.6667"));
    assert!(!manifest.contains("threads"));
}

#[test]
fn bad_input_exits_with_two() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["field", "abc"]);
    let f = path(d.path(), "field.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["field", "wave", "--k", "0"],
        vec!["field", "abc", "1", "2"],
        vec!["field", "nope"],
        vec!["field", "tube", "--R", "3", "--a", "0.5"],
        vec!["evolve", &f, "--eta", "-1"],
        vec!["evolve", &f, "--dt", "0.3", "--t-end", "1"],
        vec!["invariants", "/nonexistent/field.csv"],
        vec!["invariants", &f, "--seeds", "4"],
        vec!["spectra", &f, "--quantities", "bogus"],
    ];
    for c in cases {
        assert_eq!(qhel(d.path(), &c).status.code(), Some(2), "{c:?}");
    }
    std::fs::write(d.path().join("junk.csv"), "1,2,3\n").unwrap();
    assert_eq!(
        qhel(d.path(), &["invariants", &path(d.path(), "junk.csv")])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn wave_invariants_are_equal() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["field", "wave", "--b0", "0.7", "--k", "2"]);
    ok(
        d.path(),
        &[
            "invariants",
            &path(d.path(), "field.csv"),
            "--seeds",
            "27",
            "--T",
            "20,40",
        ],
    );
    let r = report(&d.path().join("report.csv"));
    let vol = (2.0 * std::f64::consts::PI).powi(3);
    // circular wave at k = 2: chi = U/k
    let (u, chi) = (get(&r, "U"), get(&r, "chi"));
    assert!((u - 2.0 * chi).abs() < 1e-12 * u);
    let target = chi * chi / vol;
    for q in ["delta2", "chi2", "meanSquareDensity"] {
        assert!((get(&r, q) - target).abs() < 1e-8 * target, "{q}");
    }
    let (_, verdicts) = csv(&d.path().join("verdicts.csv"));
    assert!(verdicts.iter().all(|v| v[5] != "VIOLATED"));
}

#[test]
fn zero_field_reports_zero() {
    let d = tempfile::tempdir().unwrap();
    let f = d.path().join("zero.csv");
    std::fs::write(
        &f,
        "#format=helical-v1\n#box=6.283185307179586\n#storage=halfspace\nn1,n2,n3,re_cplus,im_cplus,re_cminus,im_cminus\n",
    )
    .unwrap();
    ok(d.path(), &["invariants", &f.to_string_lossy()]);
    let r = report(&d.path().join("report.csv"));
    for q in ["U", "chi", "chiC", "delta2", "chi2"] {
        assert_eq!(get(&r, q), 0.0, "{q}");
    }
}

#[test]
fn trace_writes_one_file_per_seed() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["field", "abc"]);
    ok(
        d.path(),
        &[
            "trace",
            &path(d.path(), "field.csv"),
            "--seeds",
            "5",
            "--T",
            "3",
        ],
    );
    for i in 0..5 {
        let (header, rows) = csv(&d.path().join(format!("trajectory_{i:03}.csv")));
        assert_eq!(header, ["tau", "x", "y", "z", "lambdaA_running"]);
        let last: f64 = rows.last().unwrap()[0].parse().unwrap();
        assert!((last - 3.0).abs() < 1e-12);
    }
    assert!(!d.path().join("trajectory_005.csv").exists());
}

#[test]
fn evolve_follows_exponential_growth() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["field", "abc", "1", "0.5", "-0.3"]);
    let (alpha, eta) = (0.3, 0.1);
    ok(
        d.path(),
        &[
            "evolve",
            &path(d.path(), "field.csv"),
            "--alpha",
            "0.3",
            "--eta",
            "0.1",
            "--dt",
            "0.1",
            "--t-end",
            "2",
            "--snapshot-every",
            "4",
        ],
    );
    let (header, rows) = csv(&d.path().join("evolve.csv"));
    assert_eq!(header, ["t", "U", "chi", "chiC", "delta2", "theorem2_rhs"]);
    let v: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|s| s.parse().unwrap()).collect())
        .collect();
    let u0 = v[0][1];
    for r in &v {
        // unit-eigenvalue field: every amplitude grows like exp((α − η)t)
        let want = u0 * (2.0 * (alpha - eta) * r[0]).exp();
        assert!((r[1] - want).abs() < 1e-10 * want, "t = {}", r[0]);
        assert!((r[2] - r[1]).abs() < 1e-10 * r[1]);
    }
    assert_eq!(v.last().unwrap()[0], 2.0);
    // initial state plus every fourth of 20 steps
    for (i, t) in [0.0, 0.4, 0.8, 1.2, 1.6, 2.0].iter().enumerate() {
        let text = std::fs::read_to_string(d.path().join(format!("evolve_{i:04}.csv"))).unwrap();
        let stamp: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("#t="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((stamp - t).abs() < 1e-12);
    }
    assert!(!d.path().join("evolve_0006.csv").exists());
}

#[test]
fn spectra_writes_files_and_shells_sum_to_totals() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(
        d.path(),
        &["field", "powerlaw", "--kmax", "8", "--seed", "4"],
    );
    let chi: f64 = out
        .split("chi = ")
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    ok(
        d.path(),
        &[
            "spectra",
            &path(d.path(), "field.csv"),
            "--quantities",
            "helicity,energy_sq,delta2",
            "--gnuplot",
        ],
    );
    for q in ["helicity", "energy_sq", "delta2"] {
        assert!(d.path().join(format!("spectrum_{q}.csv")).exists());
        assert!(d.path().join(format!("spectrum_{q}.dat")).exists());
    }
    let (_, rows) = csv(&d.path().join("spectrum_helicity.csv"));
    let total: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - chi).abs() < 1e-8 * chi.abs());
    let (_, fits) = csv(&d.path().join("fits.csv"));
    assert_eq!(fits.len(), 3);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "# wave settings\nb0 = 2\nk = 3\nseed = 11\n").unwrap();
    let out = ok(
        d.path(),
        &[
            "--config",
            &cfg.to_string_lossy(),
            "field",
            "wave",
            "--k",
            "1",
        ],
    );
    let manifest = std::fs::read_to_string(d.path().join("manifest.txt")).unwrap();
    assert!(
        manifest.contains("b0=2") && manifest.contains("k=1") && manifest.contains("seed=11"),
        "{manifest}"
    );
    assert!(out.contains("2 wave vectors"));
}
