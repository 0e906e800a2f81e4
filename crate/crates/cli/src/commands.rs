use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use qhel::evolution::{evolve, EvolutionParams};
use qhel::fields::{
    abc_field, circular_wave, hopf_pair, random_powerlaw, two_tubes, Profile, TubeField, TubeSet,
    TubeSpec,
};
use qhel::invariants::{
    box_seeds, check_inequalities, chi_bracket2_closed, delta2, delta_bracket2, tube_quadratures,
    tube_seeds, Estimate, InvariantReport, LineEnsemble, Seeding,
};
use qhel::io::{
    load_snapshot, load_spectral, save_csv, save_grid, save_spectral, Metadata, Snapshot,
};
use qhel::scaling::{product_spectrum, shell_spectrum, Quantity, ShellSpectrum};
use qhel::spectral::{analyze, SpectralField, Support};
use qhel::tracer::{trace_many, SpectralLineField, Tolerance, TraceOptions};
use qhel::Vec3;

use crate::{
    criteria, Cli, Command, EvolveArgs, Failure, FieldArgs, FieldKind, InvariantArgs, ProfileArg,
    SpectraArgs, TraceArgs,
};

type Res<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn write_manifest(dir: &Path, entries: &[(String, String)]) -> Res {
    let mut w = BufWriter::new(File::create(dir.join("manifest.txt"))?);
    writeln!(w, "qhel {}", env!("CARGO_PKG_VERSION"))?;
    for (k, v) in entries {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cli: &Cli) -> Res {
    match &cli.command {
        Command::Field(a) => field(cli, a),
        Command::Trace(a) => trace(cli, a),
        Command::Invariants(a) => invariants(cli, a),
        Command::Evolve(a) => evolve_cmd(cli, a),
        Command::Spectra(a) => spectra(cli, a),
        Command::Check => check(cli),
    }
}

fn profile_name(p: ProfileArg) -> &'static str {
    match p {
        ProfileArg::Bump => "bump",
        ProfileArg::Uniform => "uniform",
    }
}

fn meta(pairs: &[(&str, String)]) -> Metadata {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn value<'a>(m: &'a Metadata, key: &str) -> Option<&'a str> {
    m.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Center of a Hopf pair placed symmetrically about the box center.
fn hopf_center(r: f64) -> Vec3 {
    Vec3::new(PI - 0.5 * r, PI, PI)
}

/// Rebuilds the analytic tube configuration recorded in a grid snapshot's metadata.
fn tubes_from_meta(m: &Metadata) -> Option<Res<TubeSet>> {
    let kind = value(m, "kind")?;
    if kind != "tube" && kind != "two-tubes" {
        return None;
    }
    let num = |key: &str| -> Res<f64> {
        value(m, key)
            .ok_or_else(|| usage(format!("tube snapshot lacks '{key}'")))?
            .parse::<f64>()
            .map_err(|e| usage(format!("tube metadata '{key}': {e}")))
    };
    let build = || -> Res<TubeSet> {
        let profile = match value(m, "profile").unwrap_or("bump") {
            "bump" => Profile::Bump,
            "uniform" => Profile::Uniform,
            p => return Err(usage(format!("unknown tube profile '{p}'"))),
        };
        let (r, a, phi) = (num("R")?, num("a")?, num("phi")?);
        let tubes = if kind == "tube" {
            let spec = TubeSpec::centered(r, a, num("kappa")? as i32, phi).with_profile(profile);
            vec![TubeField::new(spec)?]
        } else {
            let (s1, s2) = hopf_pair(r, a, phi, num("phi2")?, hopf_center(r));
            vec![
                TubeField::new(s1.with_profile(profile))?,
                TubeField::new(s2.with_profile(profile))?,
            ]
        };
        Ok(TubeSet::new(tubes)?)
    };
    Some(build())
}

enum Source {
    Spectral(SpectralField),
    Tubes(TubeSet, usize),
}

fn load_source(path: &Path) -> Res<Source> {
    match load_snapshot(path)? {
        Snapshot::Spectral(f, _) => Ok(Source::Spectral(f)),
        Snapshot::Grid(g, m) => {
            if let Some(set) = tubes_from_meta(&m) {
                return Ok(Source::Tubes(set?, g.n()));
            }
            match g.support() {
                Support::Torus => Ok(Source::Spectral(analyze(&g).field)),
                Support::Ball { .. } => Err(usage(
                    "ball-supported grid without tube parameters cannot be traced",
                )),
            }
        }
    }
}

fn load_field(path: &Path) -> Res<SpectralField> {
    match load_snapshot(path)? {
        Snapshot::Spectral(f, _) => Ok(f),
        Snapshot::Grid(g, _) if g.support() == Support::Torus => Ok(analyze(&g).field),
        Snapshot::Grid(..) => Err(usage(
            "this command needs a periodic field, got a ball-supported grid",
        )),
    }
}

fn field(cli: &Cli, a: &FieldArgs) -> Res {
    let out = |default: &str| cli.out_dir.join(a.output.as_deref().unwrap_or(default));
    let spectral = |f: SpectralField, m: Metadata| -> Res {
        let path = out("field.csv");
        save_spectral(&path, &f, &m)?;
        println!(
            "{}: {} wave vectors ({} stored), U = {:.10}, chi = {:.10}, chiC = {:.10}",
            path.display(),
            2 * f.mode_count(),
            f.mode_count(),
            f.energy(),
            f.helicity(),
            f.current_helicity()
        );
        Ok(())
    };
    match a.kind {
        FieldKind::Abc => {
            let [x, y, z] = match a.amplitudes.as_slice() {
                [] => [1.0; 3],
                &[x, y, z] => [x, y, z],
                v => {
                    return Err(usage(format!(
                        "abc takes three amplitudes, got {}",
                        v.len()
                    )))
                }
            };
            let m = meta(&[
                ("kind", "abc".into()),
                ("A", x.to_string()),
                ("B", y.to_string()),
                ("C", z.to_string()),
            ]);
            spectral(abc_field(x, y, z)?, m)
        }
        FieldKind::Wave => {
            let m = meta(&[
                ("kind", "wave".into()),
                ("b0", a.b0.to_string()),
                ("k", a.k.to_string()),
            ]);
            spectral(circular_wave(a.b0, a.k)?, m)
        }
        FieldKind::Powerlaw => {
            let f = random_powerlaw(a.alpha, a.gamma_plus, a.gamma_minus, a.kmax, cli.seed)?;
            let m = meta(&[
                ("kind", "powerlaw".into()),
                ("alpha", a.alpha.to_string()),
                ("gamma_plus", a.gamma_plus.to_string()),
                ("gamma_minus", a.gamma_minus.to_string()),
                ("kmax", a.kmax.to_string()),
                ("seed", cli.seed.to_string()),
            ]);
            spectral(f, m)
        }
        FieldKind::Tube | FieldKind::TwoTubes => {
            if a.n < 8 {
                return Err(usage(format!(
                    "grid size N must be at least 8, got {}",
                    a.n
                )));
            }
            let profile = match a.profile {
                ProfileArg::Bump => Profile::Bump,
                ProfileArg::Uniform => Profile::Uniform,
            };
            let (r, minor) = (a.major_radius, a.minor_radius);
            let (grid, m) = if a.kind == FieldKind::Tube {
                let spec = TubeSpec::centered(r, minor, a.kappa, a.phi).with_profile(profile);
                let set = TubeSet::new(vec![TubeField::new(spec)?])?;
                let m = meta(&[
                    ("kind", "tube".into()),
                    ("R", r.to_string()),
                    ("a", minor.to_string()),
                    ("kappa", a.kappa.to_string()),
                    ("phi", a.phi.to_string()),
                    ("profile", profile_name(a.profile).into()),
                ]);
                (set.sample(a.n), m)
            } else {
                let (s1, s2) = hopf_pair(r, minor, a.phi, a.phi2, hopf_center(r));
                let g = two_tubes(s1.with_profile(profile), s2.with_profile(profile), a.n)?;
                let m = meta(&[
                    ("kind", "two-tubes".into()),
                    ("R", r.to_string()),
                    ("a", minor.to_string()),
                    ("phi", a.phi.to_string()),
                    ("phi2", a.phi2.to_string()),
                    ("profile", profile_name(a.profile).into()),
                ]);
                (g, m)
            };
            let path = out("field.bin");
            save_grid(&path, &grid, &m)?;
            let (dmax, drms) = grid.divergence_fd();
            let scale = grid.max_norm() / grid.spacing();
            println!(
                "{}: N = {}, U = {:.8}",
                path.display(),
                grid.n(),
                grid.inner(&grid)
            );
            println!("divergence (central differences): max {dmax:.3e}, rms {drms:.3e}, relative to |B|/h: {:.3e}", drms / scale);
            Ok(())
        }
    }
}

fn trace(cli: &Cli, a: &TraceArgs) -> Res {
    if a.seeds == 0 {
        return Err(usage("need at least one seed"));
    }
    let tol = Tolerance {
        rtol: a.rtol,
        atol: a.atol,
    };
    let opts = TraceOptions {
        tol,
        ..Default::default()
    };
    let lines = match load_source(&a.snapshot)? {
        Source::Spectral(f) => {
            let seeds = box_seeds(a.seeds, Seeding::Uniform, cli.seed);
            trace_many(&SpectralLineField::new(&f), &seeds, a.t, &opts)?
        }
        Source::Tubes(set, _) => {
            trace_many(&set, &tube_seeds(&set, a.seeds, cli.seed), a.t, &opts)?
        }
    };
    for (i, l) in lines.iter().enumerate() {
        let path = cli.out_dir.join(format!("trajectory_{i:03}.csv"));
        save_csv(&path, "tau,x,y,z,lambdaA_running", l.trajectory_rows())?;
        let note = l.diagnostic.as_deref().unwrap_or("complete");
        println!(
            "line {i:3}: seed ({:.4}, {:.4}, {:.4}) T = {:.4} steps {} lambdaA = {:.8} ({note})",
            l.seed[0],
            l.seed[1],
            l.seed[2],
            l.t_end,
            l.steps,
            l.lambda_a(l.t_end)?
        );
    }
    Ok(())
}

fn write_report(dir: &Path, rows: &[(String, f64, f64, f64)], report: &InvariantReport) -> Res {
    let mut w = BufWriter::new(File::create(dir.join("report.csv"))?);
    writeln!(w, "quantity,value,stderr,systematic")?;
    for (q, v, s, y) in rows {
        writeln!(w, "{q},{v},{s},{y}")?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("verdicts.csv"))?);
    writeln!(w, "relation,lhs,rhs,sigma,margin,status")?;
    for v in &report.verdicts {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            v.name,
            v.lhs,
            v.rhs,
            v.sigma,
            v.margin,
            status(v.satisfied)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn status(s: Option<bool>) -> &'static str {
    match s {
        Some(true) => "holds",
        Some(false) => "VIOLATED",
        None => "reference",
    }
}

fn push(rows: &mut Vec<(String, f64, f64, f64)>, name: &str, e: &Estimate) {
    rows.push((name.into(), e.value, e.stderr, e.systematic));
}

fn invariants(cli: &Cli, a: &InvariantArgs) -> Res {
    if a.ladder.is_empty() || a.ladder.iter().any(|&t| !(t > 0.0)) {
        return Err(usage("time ladder entries must be positive"));
    }
    let (mut report, mut extra) = match load_source(&a.snapshot)? {
        Source::Spectral(f) => {
            if a.pairs.is_some() {
                log::warn!("--pairs only applies to tube fields; ignored");
            }
            let mut report = InvariantReport::for_spectral(&f);
            report.delta2 = Some(delta2(&f)?);
            let mut extra = Vec::new();
            if f.is_empty() {
                report.chi2 = Some(Estimate::exact(0.0));
            } else {
                if a.seeds < 16 {
                    return Err(usage(format!(
                        "at least 16 seeds required, got {}",
                        a.seeds
                    )));
                }
                let seeds = box_seeds(a.seeds, Seeding::Stratified, cli.seed);
                let ens = LineEnsemble::trace(
                    &SpectralLineField::new(&f),
                    &seeds,
                    &a.ladder,
                    qhel::VOLUME,
                    Tolerance::default(),
                )?;
                report.chi2 = Some(ens.chi2());
                push(&mut extra, "meanSquareDensity", &ens.mean_square_density());
                push(
                    &mut extra,
                    "dispersionAlongLines",
                    &ens.dispersion_along_lines(),
                );
                push(
                    &mut extra,
                    "dispersionOfLineMeans",
                    &ens.dispersion_of_line_means(),
                );
            }
            (report, extra)
        }
        Source::Tubes(set, n) => {
            if a.seeds < 16 {
                return Err(usage(format!(
                    "at least 16 seeds required, got {}",
                    a.seeds
                )));
            }
            let (u, chi, d2) = tube_quadratures(&set, n)?;
            let pairs = a.pairs.unwrap_or(256);
            let cutoff = a.cutoff.unwrap_or(qhel::BOX_LENGTH / n as f64);
            let ens = LineEnsemble::closed_tube_lines(
                &set,
                &tube_seeds(&set, a.seeds, cli.seed),
                &[1, 2],
                Tolerance::default(),
            )?;
            let report = InvariantReport {
                volume: set.tube_volume(),
                energy: u,
                helicity: chi,
                current_helicity: f64::NAN,
                delta2: Some(Estimate::exact(d2)),
                delta_bracket2: Some(delta_bracket2(&set, pairs, cutoff, cli.seed)?),
                chi2: Some(ens.chi2()),
                chi_bracket2: Some(chi_bracket2_closed(&set, pairs, cli.seed.wrapping_add(1))?),
                verdicts: Vec::new(),
            };
            let mut extra = Vec::new();
            push(&mut extra, "chiLines", &ens.helicity());
            push(&mut extra, "meanSquareDensity", &ens.mean_square_density());
            (report, extra)
        }
    };
    report.verdicts = check_inequalities(&report);
    let mut rows: Vec<_> = report
        .rows()
        .into_iter()
        .filter(|r| !r.1.is_nan())
        .collect();
    rows.append(&mut extra);
    write_report(&cli.out_dir, &rows, &report)?;
    println!(
        "{:<24} {:>18} {:>12} {:>12}",
        "quantity", "value", "stderr", "systematic"
    );
    for (q, v, s, y) in &rows {
        println!("{q:<24} {v:>18.10e} {s:>12.3e} {y:>12.3e}");
    }
    for e in [&report.chi2, &report.delta2].into_iter().flatten() {
        if let Some(flag) = &e.flag {
            log::warn!("{flag}");
        }
    }
    println!();
    for v in &report.verdicts {
        println!(
            "{:<44} {:>16.8e} vs {:>16.8e}  {}",
            v.name,
            v.lhs,
            v.rhs,
            status(v.satisfied)
        );
    }
    if report.all_satisfied() {
        Ok(())
    } else {
        Err(Failure::Check(
            "an inequality of the chain is violated".into(),
        ))
    }
}

fn evolve_cmd(cli: &Cli, a: &EvolveArgs) -> Res {
    let f = load_field(&a.snapshot)?;
    let mut params = EvolutionParams::new(a.alpha, a.eta, a.dt, a.t_end);
    params.kmax = a.kmax;
    if let Some(v) = &a.velocity {
        params.velocity = Some(load_spectral(v)?.0);
    }
    let run = evolve(&f, &params, a.snapshot_every)?;
    let rows = run.series.iter().map(|r| {
        [
            r.t,
            r.energy,
            r.helicity,
            r.current_helicity,
            r.delta2,
            r.theorem2_rhs,
        ]
    });
    save_csv(
        &cli.out_dir.join("evolve.csv"),
        "t,U,chi,chiC,delta2,theorem2_rhs",
        rows,
    )?;
    for (i, (t, s)) in run.snapshots.iter().enumerate() {
        save_spectral(
            &cli.out_dir.join(format!("evolve_{i:04}.csv")),
            s,
            &meta(&[("t", t.to_string())]),
        )?;
    }
    for w in &run.warnings {
        log::warn!("{w}");
    }
    if let Some(last) = run.series.last() {
        println!(
            "t = {}: U = {:.10}, chi = {:.10}, chiC = {:.10}, delta2 = {:.10}; {} snapshots",
            last.t,
            last.energy,
            last.helicity,
            last.current_helicity,
            last.delta2,
            run.snapshots.len()
        );
    }
    Ok(())
}

fn spectra(cli: &Cli, a: &SpectraArgs) -> Res {
    let f = load_field(&a.snapshot)?;
    if f.is_empty() {
        return Err(usage("field has no modes"));
    }
    let kmax = a
        .fit_max
        .unwrap_or((f.max_wave() as usize / 2).max(a.fit_min + 4));
    let mut fits = BufWriter::new(File::create(cli.out_dir.join("fits.csv"))?);
    writeln!(fits, "quantity,slope,stderr,intercept,kmin,kmax,used")?;
    for name in &a.quantities {
        let q: Quantity = name.parse()?;
        let spec = match q {
            Quantity::Energy | Quantity::Helicity => shell_spectrum(&f, q)?,
            _ => product_spectrum(&f, q)?,
        };
        let spec = match spec.clone().with_fit(a.fit_min, kmax) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("{q}: no slope fit ({e})");
                spec
            }
        };
        write_spectrum(&cli.out_dir, &spec, a.gnuplot)?;
        match &spec.fit {
            Some(fit) => {
                writeln!(
                    fits,
                    "{q},{},{},{},{},{},{}",
                    fit.slope, fit.stderr, fit.intercept, fit.kmin, fit.kmax, fit.used
                )?;
                if let Some(n) = &fit.notice {
                    log::warn!("{q}: {n}");
                }
                println!(
                    "{q:<12} total {:>16.8e}  slope {:.4} ± {:.4} over [{}, {}]",
                    spec.total(),
                    fit.slope,
                    fit.stderr,
                    fit.kmin,
                    fit.kmax
                );
            }
            None => println!("{q:<12} total {:>16.8e}  no fit", spec.total()),
        }
    }
    fits.flush()?;
    Ok(())
}

fn write_spectrum(dir: &Path, spec: &ShellSpectrum, gnuplot: bool) -> Res {
    let q = spec.quantity;
    let rows = spec
        .shells
        .iter()
        .map(|s| [s.k as f64, s.count as f64, s.value]);
    save_csv(
        &dir.join(format!("spectrum_{q}.csv")),
        "k,count,value",
        rows,
    )?;
    if gnuplot {
        let mut w = BufWriter::new(File::create(dir.join(format!("spectrum_{q}.dat")))?);
        writeln!(w, "# k {q}")?;
        for s in spec.shells.iter().filter(|s| s.k > 0 && s.value > 0.0) {
            writeln!(w, "{} {}", s.k, s.value)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn check(cli: &Cli) -> Res {
    let mut rows = Vec::new();
    let failed = criteria::run_all(|n, name, out, secs| {
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {status} {name} ({secs:.1}s): {}",
            out.detail
        );
        rows.push(format!(
            "{n},{name},{status},\"{}\"",
            out.detail.replace('"', "'")
        ));
    });
    let mut w = BufWriter::new(File::create(cli.out_dir.join("check.csv"))?);
    writeln!(w, "criterion,name,status,detail")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    if failed.is_empty() {
        println!("all 10 criteria passed");
        Ok(())
    } else {
        Err(Failure::Check(format!("criteria {failed:?}")))
    }
}
