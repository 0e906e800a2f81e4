//! The ten acceptance criteria, shared by the `acceptance` test target and `qhel check`.
use std::f64::consts::TAU;
use std::time::Instant;

use qhel::evolution::{chi2_closed_form, evolve, helicity_balance, theorem2_rhs, EvolutionParams};
use qhel::fields::{
    abc_field, circular_wave, hopf_pair, random_powerlaw, twisted_tube, Profile, TubeField,
    TubeSet, TubeSpec,
};
use qhel::invariants::{
    box_seeds, check_inequalities, chi2_estimate, delta2, tube_seeds, Estimate, InvariantReport,
    LineEnsemble, Seeding,
};
use qhel::scaling::{arnold_check, product_spectrum, shell_spectrum, Quantity};
use qhel::spectral::{analyze, SpectralField};
use qhel::tracer::{
    gauss_linking, linking_number, stokes_gauge_check, trace_line, FieldLine, SpectralLineField,
    Tolerance, TraceOptions,
};
use qhel::{Vec3, VOLUME};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let f = circular_wave(1.0, 1).unwrap();
    let (u, chi) = (f.energy(), f.helicity());
    let target = chi * chi / VOLUME;
    let d2 = delta2(&f).unwrap();
    let c2 = chi2_estimate(
        &SpectralLineField::new(&f),
        64,
        &[250.0, 500.0],
        1,
        Seeding::Stratified,
    )
    .unwrap();
    let mut report = InvariantReport::for_spectral(&f);
    report.delta2 = Some(d2.clone());
    report.chi2 = Some(c2.clone());
    let verdicts = check_inequalities(&report);
    let tight = verdicts
        .iter()
        .filter(|v| v.satisfied.is_some())
        .all(|v| rel(v.lhs, v.rhs) < 0.01);
    let pass = rel(chi, u) < 0.01
        && rel(d2.value, target) < 0.01
        && rel(c2.value, target) < 0.01
        && tight
        && report.verdicts.iter().all(|v| v.satisfied != Some(false));
    Outcome {
        pass,
        detail: format!(
            "chi={chi:.6} U={u:.6} delta2={:.6} chi2={:.6}±{:.1e} chi^2/Vol={target:.6}, {} chain relations tight",
            d2.value,
            c2.value,
            c2.stderr,
            verdicts.len()
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for seed in 1..=5u64 {
        let f = random_powerlaw(5.0 / 3.0, 1.0, 0.0, 16, seed).unwrap();
        let mut report = InvariantReport::for_spectral(&f);
        report.delta2 = Some(delta2(&f).unwrap());
        let lines = SpectralLineField::new(&f);
        report.chi2 = Some(
            chi2_estimate(
                &lines,
                64,
                &[250.0, 500.0, 1000.0],
                seed,
                Seeding::Stratified,
            )
            .unwrap(),
        );
        let verdicts = check_inequalities(&report);
        let ok = verdicts.iter().all(|v| v.satisfied != Some(false));
        pass &= ok && verdicts.len() == 2;
        let margins: Vec<String> = verdicts
            .iter()
            .map(|v| format!("{:+.2}σ", v.margin / v.sigma.max(f64::MIN_POSITIVE)))
            .collect();
        parts.push(format!("seed {seed}: [{}]", margins.join(" ")));
    }
    Outcome {
        pass,
        detail: format!(
            "margins (rhs−lhs)/σ for chi2<=delta2, chi^2<=Vol*chi2: {}",
            parts.join("; ")
        ),
    }
}

struct BeltramiRun {
    times: Vec<f64>,
    chi2: Vec<Estimate>,
    rhs: Vec<f64>,
    chi2_0: f64,
    closed: Vec<f64>,
    amp_err: f64,
}

fn beltrami_run() -> BeltramiRun {
    let f = abc_field(1.0, 1.0, 1.0).unwrap();
    let p = EvolutionParams::new(0.1, 0.05, 0.05, 1.0);
    let ev = evolve(&f, &p, 5).unwrap();
    let lambda = 1.0;
    let (_, last) = ev.snapshots.last().unwrap();
    let factor = (lambda * 1.0 * (p.alpha - lambda * p.eta)).exp();
    let amp_err = f
        .modes()
        .iter()
        .zip(last.modes())
        .map(|(a, b)| {
            let want = a.vector().map(|c| c * factor);
            let got = b.vector();
            (0..3)
                .map(|i| (got[i] - want[i]).norm() / want[i].norm().max(1e-300))
                .filter(|x| x.is_finite())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let mut times = Vec::new();
    let mut chi2 = Vec::new();
    let mut rhs = Vec::new();
    for (t, snap) in &ev.snapshots {
        let e = chi2_estimate(
            &SpectralLineField::new(snap),
            64,
            &[200.0, 400.0],
            3,
            Seeding::Stratified,
        )
        .unwrap();
        times.push(*t);
        chi2.push(e);
        rhs.push(theorem2_rhs(snap, &p).unwrap());
    }
    let chi2_0 = chi2[0].value;
    let closed = times
        .iter()
        .map(|&t| chi2_closed_form(&f, chi2_0, &p, t).unwrap())
        .collect();
    BeltramiRun {
        times,
        chi2,
        rhs,
        chi2_0,
        closed,
        amp_err,
    }
}

fn criterion_3(run: &BeltramiRun) -> Outcome {
    let worst = run
        .chi2
        .iter()
        .zip(&run.closed)
        .map(|(e, c)| rel(e.value, *c))
        .fold(0.0, f64::max);
    let n = run.times.len() - 1;
    Outcome {
        pass: run.amp_err < 1e-10 && worst < 0.02,
        detail: format!(
            "amplitude error {:.1e}; chi2(0)={:.2}, chi2(1)={:.2} vs closed form {:.2}; worst deviation {:.2}%",
            run.amp_err,
            run.chi2_0,
            run.chi2[n].value,
            run.closed[n],
            100.0 * worst
        ),
    }
}

fn criterion_4() -> Outcome {
    let b = random_powerlaw(5.0 / 3.0, 1.0, 0.5, 6, 21).unwrap();
    let mut p = EvolutionParams::new(0.1, 0.05, 0.02, 0.02);
    p.velocity = Some(
        random_powerlaw(5.0 / 3.0, 0.3, 0.3, 4, 22)
            .unwrap()
            .scaled(0.5),
    );
    let residual = |dt: f64| {
        let q = EvolutionParams {
            dt,
            t_end: dt,
            ..p.clone()
        };
        let (pred, meas) = helicity_balance(&b, &q).unwrap();
        (meas - pred).abs()
    };
    let r: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| residual(dt)).collect();
    let ratios = [r[0] / r[1], r[1] / r[2]];
    Outcome {
        pass: ratios.iter().all(|x| (3.2..=4.8).contains(x)),
        detail: format!(
            "residuals {:.3e} {:.3e} {:.3e}; ratios {:.3} {:.3}",
            r[0], r[1], r[2], ratios[0], ratios[1]
        ),
    }
}

fn criterion_5(run: &BeltramiRun) -> Outcome {
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    for i in 1..run.times.len() {
        let dt = run.times[i] - run.times[i - 1];
        let (a, b) = (&run.chi2[i - 1], &run.chi2[i]);
        let rate = (b.value.sqrt() - a.value.sqrt()).abs() / dt;
        let sigma =
            (a.combined() / (2.0 * a.value.sqrt()) + b.combined() / (2.0 * b.value.sqrt())) / dt;
        let bound = run.rhs[i - 1].min(run.rhs[i]);
        pass &= rate <= bound + 2.0 * sigma;
        worst = worst.max(rate - bound);
    }
    Outcome {
        pass,
        detail: format!(
            "rhs from {:.3} to {:.3}; max(|Δ√chi2/Δt| − rhs) = {worst:.3}",
            run.rhs[0],
            run.rhs[run.rhs.len() - 1]
        ),
    }
}

fn circle(c: Vec3, e1: Vec3, e2: Vec3, r: f64) -> FieldLine {
    FieldLine::from_curve(
        |t| {
            let (s, co) = (TAU * t).sin_cos();
            (c + (e1 * co + e2 * s) * r, (e2 * co - e1 * s) * (r * TAU))
        },
        1.0,
        400,
    )
}

fn closed_line(set: &TubeSet, seed: Vec3) -> FieldLine {
    let tube = set.tube_at(seed).unwrap();
    let period = set.tubes()[tube].period(seed).unwrap();
    let line = trace_line(set, seed, period, &TraceOptions::default()).unwrap();
    assert!(line.is_complete());
    line
}

fn criterion_6() -> Outcome {
    let (x, y, z) = (
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    );
    let lk_circles =
        gauss_linking(&circle(Vec3::ZERO, x, y, 1.0), &circle(x, x, z, 1.0), 1.0).unwrap();

    let center = Vec3::new(3.0, 3.0, 3.0);
    let (s1, s2) = hopf_pair(1.0, 0.2, 1.0, 1.0, center);
    let hopf = TubeSet::new(vec![
        TubeField::new(s1).unwrap(),
        TubeField::new(s2).unwrap(),
    ])
    .unwrap();
    let cores = [
        hopf.tubes()[0].axis_point(0.3),
        hopf.tubes()[1].axis_point(1.1),
    ];
    let lk_cores =
        linking_number(&closed_line(&hopf, cores[0]), &closed_line(&hopf, cores[1])).unwrap();

    let mut pass = (lk_circles.abs() - 1.0).abs() < 1e-3 && (lk_cores.abs() - 1.0).abs() < 1e-3;
    let mut pair_lk = Vec::new();
    for profile in [Profile::Bump, Profile::Uniform] {
        let spec = TubeSpec::centered(1.5, 0.4, 3, 1.0).with_profile(profile);
        let set = TubeSet::new(vec![TubeField::new(spec).unwrap()]).unwrap();
        let seeds = tube_seeds(&set, 8, 5);
        for pair in seeds.chunks(2) {
            let lk =
                linking_number(&closed_line(&set, pair[0]), &closed_line(&set, pair[1])).unwrap();
            pass &= (lk - 3.0).abs() < 1e-2;
            pair_lk.push(lk);
        }
    }
    let spec = TubeSpec::centered(1.5, 0.4, 3, 1.0).with_profile(Profile::Uniform);
    let tube = TubeField::new(spec).unwrap();
    let chi = tube.helicity();
    let set = TubeSet::new(vec![tube]).unwrap();
    let seeds = tube_seeds(&set, 64, 9);
    let ens = LineEnsemble::closed_tube_lines(&set, &seeds, &[1, 2], Tolerance::default()).unwrap();
    let c2 = ens.chi2();
    let product = c2.value * set.tube_volume();
    // the grid quadrature of the sampled tube gives the measured helicity
    let grid = twisted_tube(spec, 96).unwrap();
    let a = qhel::spectral::biot_savart::biot_savart_potential(&grid).unwrap();
    let chi_grid = grid.inner(&a);
    pass &= rel(product, chi * chi) < 0.02 && ens.incomplete == 0;
    let worst = pair_lk.iter().map(|l| (l - 3.0).abs()).fold(0.0, f64::max);
    Outcome {
        pass,
        detail: format!(
            "circles {lk_circles:.6}, tube cores {lk_cores:.6}; {} tube pairs within {worst:.1e} of 3; chi2*Vol={product:.6} chi^2={:.6} (grid chi {chi_grid:.4})",
            pair_lk.len(),
            chi * chi
        ),
    }
}

fn criterion_7() -> Outcome {
    let f = random_powerlaw(5.0 / 3.0, 1.0, 0.0, 32, 7).unwrap();
    let fit = |q: Quantity| {
        product_spectrum(&f, q)
            .unwrap()
            .with_fit(4, 16)
            .unwrap()
            .fit
            .unwrap()
    };
    let (u2, x2, d2) = (
        fit(Quantity::EnergySq),
        fit(Quantity::HelicitySq),
        fit(Quantity::Delta2),
    );
    let e = shell_spectrum(&f, Quantity::Energy)
        .unwrap()
        .with_fit(4, 16)
        .unwrap()
        .fit
        .unwrap();
    let ok_u2 = (u2.slope + 7.0 / 3.0).abs() <= 0.15;
    let ok_x2 = (x2.slope + 13.0 / 3.0).abs() <= 0.2;
    let ok_d2 = (-13.0 / 3.0..=-7.0 / 3.0).contains(&d2.slope);
    let mark = |b: bool| if b { "ok" } else { "MISS" };
    Outcome {
        pass: ok_u2 && ok_x2 && ok_d2,
        detail: format!(
            "U² {:.3}±{:.3} (want −2.333±0.15, {}); chi² {:.3}±{:.3} (want −4.333±0.2, {}); delta2 {:.3}±{:.3} (want in [−4.333, −2.333], {}); energy shells {:.3}",
            u2.slope,
            u2.stderr,
            mark(ok_u2),
            x2.slope,
            x2.stderr,
            mark(ok_x2),
            d2.slope,
            d2.stderr,
            mark(ok_d2),
            e.slope
        ),
    }
}

fn criterion_8() -> Outcome {
    let f = abc_field(1.0, 1.0, 1.0).unwrap();
    let lines = SpectralLineField::new(&f);
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, seed) in box_seeds(3, Seeding::Uniform, 4).into_iter().enumerate() {
        let line = trace_line(&lines, seed, 10.0, &TraceOptions::default()).unwrap();
        let dir = Vec3::new(0.3, -0.5 + i as f64 * 0.2, 0.8);
        let d = |eps: f64| stokes_gauge_check(&lines, &line, eps, dir).unwrap();
        let (a, b) = (d(0.02), d(0.01));
        let ratio = a.difference / b.difference;
        let flux = rel(a.difference, a.strip_flux);
        pass &= (3.2..=4.8).contains(&ratio);
        parts.push(format!("ratio {ratio:.3} (strip flux off by {:.1e})", flux));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_9() -> Outcome {
    let f = abc_field(1.0, 1.0, 1.0).unwrap();
    let lines = SpectralLineField::new(&f);
    let d2 = delta2(&f).unwrap().value;
    let chi = f.helicity();
    let replicas = 8;
    let mut along = Vec::new();
    let mut means = Vec::new();
    for r in 0..replicas {
        let seeds = box_seeds(1000, Seeding::Stratified, 100 + r);
        let ens = LineEnsemble::trace(&lines, &seeds, &[50.0, 100.0], VOLUME, Tolerance::default())
            .unwrap();
        let c2 = ens.chi2().value;
        along.push((d2 - c2, ens.dispersion_along_lines().value));
        means.push((
            c2 - chi * chi / VOLUME,
            ens.dispersion_of_line_means().value,
        ));
    }
    let summarize = |v: &[(f64, f64)]| {
        let n = v.len() as f64;
        let ml = v.iter().map(|p| p.0).sum::<f64>() / n;
        let mr = v.iter().map(|p| p.1).sum::<f64>() / n;
        let diff: Vec<f64> = v.iter().map(|p| p.0 - p.1).collect();
        let md = diff.iter().sum::<f64>() / n;
        let sd = (diff.iter().map(|d| (d - md).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
        (ml, mr, sd)
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, v) in [
        ("delta2−chi2 vs along-line variance", &along),
        ("chi2−chi^2/Vol vs variance of line means", &means),
    ] {
        let (l, r, sigma) = summarize(v);
        let ok = (l - r).abs() <= (0.03 * r.abs()).max(2.0 * sigma);
        pass &= ok;
        parts.push(format!(
            "{name}: {l:.1} vs {r:.1} (Δ {:.1}%, σ {sigma:.1})",
            100.0 * (l - r) / r
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_10() -> Outcome {
    let mut fields: Vec<(String, SpectralField, bool)> = vec![
        ("abc(1,1,1)".into(), abc_field(1.0, 1.0, 1.0).unwrap(), true),
        (
            "abc(0.3,1.7,-0.8)".into(),
            abc_field(0.3, 1.7, -0.8).unwrap(),
            true,
        ),
        ("wave(1,1)".into(), circular_wave(1.0, 1).unwrap(), true),
        ("wave(1,2)".into(), circular_wave(1.0, 2).unwrap(), false),
    ];
    for seed in 1..=4u64 {
        let g = 0.25 * seed as f64;
        fields.push((
            format!("powerlaw seed {seed}"),
            random_powerlaw(5.0 / 3.0, 1.0, g, 8, seed).unwrap(),
            false,
        ));
    }
    let tube = twisted_tube(TubeSpec::centered(1.5, 0.4, 3, 1.0), 48).unwrap();
    fields.push(("twisted tube".into(), analyze(&tube).field, false));
    let mut pass = true;
    let mut eq = 0;
    for (name, f, equality) in &fields {
        let c = arnold_check(f);
        let ok = c.holds
            && (!*equality || (c.energy - c.kmin * c.helicity_abs).abs() <= 1e-12 * c.energy);
        if *equality && ok {
            eq += 1;
        }
        if !ok {
            eprintln!("  arnold failed for {name}: {c:?}");
        }
        pass &= ok;
    }
    Outcome {
        pass,
        detail: format!(
            "{} fields hold U >= kmin|chi|, {eq} unit Beltrami fields at equality",
            fields.len()
        ),
    }
}

pub const NAMES: [&str; 10] = [
    "constant-density equality",
    "inequality chain on power-law fields",
    "Beltrami evolution closed form",
    "helicity balance O(dt²)",
    "quadratic-helicity rate bound",
    "linking integers",
    "spectral exponents",
    "Stokes perturbation ratio",
    "ergodic dispersion identities",
    "Arnold inequality",
];

/// Runs every criterion in order, handing `(number, name, outcome, seconds)` to `report`.
/// Returns the numbers of the failed criteria.
pub fn run_all(mut report: impl FnMut(usize, &str, &Outcome, f64)) -> Vec<usize> {
    let mut failed = Vec::new();
    let mut run: Option<BeltramiRun> = None;
    for (i, name) in NAMES.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let out = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 | 5 => {
                let r = run.get_or_insert_with(beltrami_run);
                if n == 3 {
                    criterion_3(r)
                } else {
                    criterion_5(r)
                }
            }
            4 => criterion_4(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        report(n, name, &out, start.elapsed().as_secs_f64());
        if !out.pass {
            failed.push(n);
        }
    }
    failed
}
