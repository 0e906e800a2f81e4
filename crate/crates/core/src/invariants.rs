//! Quadratic helicity estimators, correlation bounds, and the inequality chain.
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::TubeSet;
use crate::spectral::biot_savart::biot_savart_potential;
use crate::spectral::fft::fft_size;
use crate::spectral::field::SpectralField;
use crate::spectral::grid::{synthesize, GridField};
use crate::tracer::{
    gauss_linking, linking_number, trace_line, LineField, Tolerance, TraceOptions,
};
use crate::vec3::Vec3;
use crate::{BOX_LENGTH, VOLUME};

/// A scalar estimate with statistical and systematic uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub systematic: f64,
    /// Number of seeds, pairs, or quadrature points behind the value.
    pub samples: usize,
    /// `(T, value)` pairs when the estimate depends on a time ladder.
    pub ladder: Vec<(f64, f64)>,
    pub flag: Option<String>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            stderr: 0.0,
            systematic: 0.0,
            samples: 0,
            ladder: Vec::new(),
            flag: None,
        }
    }

    /// Statistical and systematic parts added in quadrature.
    pub fn combined(&self) -> f64 {
        self.stderr.hypot(self.systematic)
    }
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// How seed points are placed in the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seeding {
    Uniform,
    /// One jittered point per cell of an `m³` partition, `m = round(∛n)`.
    Stratified,
}

impl std::str::FromStr for Seeding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Seeding::Uniform),
            "stratified" => Ok(Seeding::Stratified),
            _ => Err(Error::InvalidParameter(format!("unknown seeding '{s}'"))),
        }
    }
}

/// Seed points in the periodic box; stratified seeding returns `m³` points.
pub fn box_seeds(n: usize, seeding: Seeding, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match seeding {
        Seeding::Uniform => (0..n)
            .map(|_| Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * BOX_LENGTH)
            .collect(),
        Seeding::Stratified => {
            let m = ((n as f64).cbrt().round() as usize).max(1);
            let cell = BOX_LENGTH / m as f64;
            let mut out = Vec::with_capacity(m * m * m);
            for iz in 0..m {
                for iy in 0..m {
                    for ix in 0..m {
                        let j = Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
                        out.push((Vec3::new(ix as f64, iy as f64, iz as f64) + j) * cell);
                    }
                }
            }
            out
        }
    }
}

/// Uniform seed points inside the tube supports.
pub fn tube_seeds(set: &TubeSet, n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| set.uniform_point(&mut rng)).collect()
}

/// Per-line time averages needed by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct LineStats {
    pub seed: Vec3,
    /// `Λ_A(T_j)` at each ladder time.
    pub lambda: Vec<f64>,
    /// `(1/T) ∫ (A, B)² dτ` at the last ladder time.
    pub mean_square: f64,
}

/// Time averages of a set of lines seeded uniformly over a domain of volume `volume`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineEnsemble {
    pub volume: f64,
    /// Ladder times; for closed lines these are multiples of each line's own period.
    pub ladder: Vec<f64>,
    pub lines: Vec<LineStats>,
    pub incomplete: usize,
}

impl LineEnsemble {
    /// Traces every seed to `max(ladder)` and records `Λ_A` at each ladder time.
    pub fn trace<F: LineField + ?Sized>(
        field: &F,
        seeds: &[Vec3],
        ladder: &[f64],
        volume: f64,
        tol: Tolerance,
    ) -> Result<Self> {
        let mut ladder = ladder.to_vec();
        ladder.sort_by(f64::total_cmp);
        let t_max = *ladder
            .last()
            .ok_or_else(|| Error::InvalidParameter("empty time ladder".into()))?;
        let opts = TraceOptions {
            tol,
            ..TraceOptions::ladder(&ladder)
        };
        let traced: Vec<Option<LineStats>> = seeds
            .par_iter()
            .map(|&s| {
                let line = trace_line(field, s, t_max, &opts)?;
                if !line.is_complete() {
                    return Ok(None);
                }
                let lambda = ladder
                    .iter()
                    .map(|&t| line.lambda_a(t))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(LineStats {
                    seed: s,
                    lambda,
                    mean_square: line.mean_square_density(t_max)?,
                }))
            })
            .collect::<Result<_>>()?;
        Self::assemble(volume, ladder, traced)
    }

    /// Traces each tube line over whole periods, which makes its averages exact.
    pub fn closed_tube_lines(
        set: &TubeSet,
        seeds: &[Vec3],
        periods: &[u32],
        tol: Tolerance,
    ) -> Result<Self> {
        let mut periods = periods.to_vec();
        periods.sort();
        let m_max = *periods
            .last()
            .ok_or_else(|| Error::InvalidParameter("empty period ladder".into()))?
            as f64;
        let traced: Vec<Option<LineStats>> = seeds
            .par_iter()
            .map(|&s| {
                let tube = set
                    .tube_at(s)
                    .ok_or_else(|| Error::InvalidParameter("seed outside the tubes".into()))?;
                let p = set.tubes()[tube].period(s).expect("inside the tube");
                let stops: Vec<f64> = periods.iter().map(|&m| m as f64 * p).collect();
                let opts = TraceOptions {
                    tol,
                    ..TraceOptions::ladder(&stops)
                };
                let line = trace_line(set, s, m_max * p, &opts)?;
                if !line.is_complete() {
                    return Ok(None);
                }
                let lambda = stops
                    .iter()
                    .map(|&t| line.lambda_a(t))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(LineStats {
                    seed: s,
                    lambda,
                    mean_square: line.mean_square_density(m_max * p)?,
                }))
            })
            .collect::<Result<_>>()?;
        Self::assemble(
            set.tube_volume(),
            periods.iter().map(|&m| m as f64).collect(),
            traced,
        )
    }

    fn assemble(volume: f64, ladder: Vec<f64>, traced: Vec<Option<LineStats>>) -> Result<Self> {
        let incomplete = traced.iter().filter(|t| t.is_none()).count();
        let lines: Vec<LineStats> = traced.into_iter().flatten().collect();
        if lines.is_empty() {
            return Err(Error::InvalidParameter(
                "no line reached the requested time".into(),
            ));
        }
        if incomplete > 0 {
            log::warn!("{incomplete} lines stopped early and were dropped");
        }
        Ok(LineEnsemble {
            volume,
            ladder,
            lines,
            incomplete,
        })
    }

    fn last(&self) -> usize {
        self.ladder.len() - 1
    }

    /// `Vol · mean Λ_A(T_max)`, an unbiased estimate of `χ`.
    pub fn helicity(&self) -> Estimate {
        let j = self.last();
        let v: Vec<f64> = self
            .lines
            .iter()
            .map(|l| self.volume * l.lambda[j])
            .collect();
        let (value, stderr) = mean_and_stderr(&v);
        Estimate {
            value,
            stderr,
            systematic: 0.0,
            samples: v.len(),
            ladder: Vec::new(),
            flag: None,
        }
    }

    /// `χ⁽²⁾ ≈ Vol · mean Λ_A(T_max)²`, with the ladder spread as systematic error.
    pub fn chi2(&self) -> Estimate {
        let at = |j: usize| -> (f64, f64) {
            let v: Vec<f64> = self
                .lines
                .iter()
                .map(|l| self.volume * l.lambda[j].powi(2))
                .collect();
            mean_and_stderr(&v)
        };
        let ladder: Vec<(f64, f64)> = (0..self.ladder.len())
            .map(|j| (self.ladder[j], at(j).0))
            .collect();
        let (value, stderr) = at(self.last());
        let systematic = ladder
            .iter()
            .map(|(_, v)| (v - value).abs())
            .fold(0.0, f64::max);
        let flag = (systematic > 3.0 * stderr && systematic > 1e-12 * value.abs()).then(|| {
            format!("time ladder not converged: spread {systematic:.3e} vs stderr {stderr:.3e}")
        });
        Estimate {
            value,
            stderr,
            systematic,
            samples: self.lines.len(),
            ladder,
            flag,
        }
    }

    /// `Vol · mean_i (1/T)∫(A,B)²dτ`; its expectation is `δ⁽²⁾` for uniform seeds.
    pub fn mean_square_density(&self) -> Estimate {
        let v: Vec<f64> = self
            .lines
            .iter()
            .map(|l| self.volume * l.mean_square)
            .collect();
        let (value, stderr) = mean_and_stderr(&v);
        Estimate {
            value,
            stderr,
            systematic: 0.0,
            samples: v.len(),
            ladder: Vec::new(),
            flag: None,
        }
    }

    /// Seed average of each line's time variance of `(A, B)`, scaled by `Vol`.
    pub fn dispersion_along_lines(&self) -> Estimate {
        let j = self.last();
        let v: Vec<f64> = self
            .lines
            .iter()
            .map(|l| self.volume * (l.mean_square - l.lambda[j].powi(2)).max(0.0))
            .collect();
        let (value, stderr) = mean_and_stderr(&v);
        Estimate {
            value,
            stderr,
            systematic: 0.0,
            samples: v.len(),
            ladder: Vec::new(),
            flag: None,
        }
    }

    /// Seed variance of the line means `Λ_A(T_max)`, scaled by `Vol`.
    pub fn dispersion_of_line_means(&self) -> Estimate {
        let j = self.last();
        let lam: Vec<f64> = self.lines.iter().map(|l| l.lambda[j]).collect();
        let n = lam.len() as f64;
        let mean = lam.iter().sum::<f64>() / n;
        let m2 = lam.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = lam.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let value = self.volume * m2;
        let stderr = self.volume * ((m4 - m2 * m2).max(0.0) / n).sqrt();
        Estimate {
            value,
            stderr,
            systematic: 0.0,
            samples: lam.len(),
            ladder: Vec::new(),
            flag: None,
        }
    }
}

/// `χ⁽²⁾` of a field on the periodic box from `n_seeds` seeds and a time ladder.
pub fn chi2_estimate<F: LineField + ?Sized>(
    field: &F,
    n_seeds: usize,
    ladder: &[f64],
    seed: u64,
    seeding: Seeding,
) -> Result<Estimate> {
    if n_seeds < 16 {
        return Err(Error::InvalidParameter(format!(
            "at least 16 seeds required, got {n_seeds}"
        )));
    }
    let seeds = box_seeds(n_seeds, seeding, seed);
    Ok(LineEnsemble::trace(field, &seeds, ladder, VOLUME, Tolerance::default())?.chi2())
}

/// `δ⁽²⁾ = ∫ (A, B)² dV` for a spectral field.
///
/// The integrand is a trigonometric polynomial of degree `4K`, so the
/// trapezoid rule on `N > 4K` points is exact; a second, finer grid
/// confirms the value.
pub fn delta2(f: &SpectralField) -> Result<Estimate> {
    if f.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let k = f.max_wave() as usize;
    let n1 = fft_size(4 * k + 1);
    let n2 = fft_size(n1 + n1 / 4);
    let a = f.vector_potential();
    let at = |n: usize| -> Result<f64> {
        let gb = synthesize(f, n)?;
        let ga = synthesize(&a, n)?;
        Ok(gb.integrate_pair(&ga, |b, a| a.dot(b).powi(2)))
    };
    let v1 = at(n1)?;
    let v2 = at(n2)?;
    let change = (v2 - v1).abs();
    let flag =
        (change > 1e-2 * v2.abs()).then(|| format!("refinement changes δ⁽²⁾ by {change:.3e}"));
    Ok(Estimate {
        value: v2,
        stderr: 0.0,
        systematic: change,
        samples: n2.pow(3),
        ladder: vec![],
        flag,
    })
}

/// `δ⁽²⁾` of a ball-supported grid field with its free-space potential.
pub fn delta2_grid(g: &GridField) -> Result<f64> {
    let a = biot_savart_potential(g)?;
    Ok(g.integrate_pair(&a, |b, a| a.dot(b).powi(2)))
}

/// Grid quadratures of a tube configuration: `(U, χ, δ⁽²⁾)` with the free-space potential.
pub fn tube_quadratures(set: &TubeSet, n: usize) -> Result<(f64, f64, f64)> {
    let g = set.sample(n);
    let a = biot_savart_potential(&g)?;
    Ok((
        g.inner(&g),
        g.inner(&a),
        g.integrate_pair(&a, |b, a| a.dot(b).powi(2)),
    ))
}

fn bracket_integrand(b1: Vec3, x1: Vec3, b2: Vec3, x2: Vec3) -> (f64, f64) {
    let r = x1 - x2;
    let d = r.norm();
    let a = b2.cross(r) / (4.0 * std::f64::consts::PI * d * d * d);
    (b1.dot(a).powi(2), d)
}

/// `δ^[2] = ∬ (B(x₁), A(x₂; x₁))²` by Monte Carlo over point pairs in the tube supports.
///
/// Pairs closer than `cutoff` are excluded; the change from halving the
/// cutoff is reported as the systematic error.
pub fn delta_bracket2(set: &TubeSet, n_pairs: usize, cutoff: f64, seed: u64) -> Result<Estimate> {
    if n_pairs < 16 {
        return Err(Error::InvalidParameter(format!(
            "at least 16 pairs required, got {n_pairs}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(Vec3, Vec3)> = (0..n_pairs)
        .map(|_| (set.uniform_point(&mut rng), set.uniform_point(&mut rng)))
        .collect();
    let vol2 = set.tube_volume().powi(2);
    let vals: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&(x1, x2)| bracket_integrand(set.field(x1), x1, set.field(x2), x2))
        .collect();
    let with_cut = |h: f64| -> Vec<f64> {
        vals.iter()
            .map(|&(f, d)| if d >= h { vol2 * f } else { 0.0 })
            .collect()
    };
    let (value, stderr) = mean_and_stderr(&with_cut(cutoff));
    let (half, _) = mean_and_stderr(&with_cut(0.5 * cutoff));
    Ok(Estimate {
        value,
        stderr,
        systematic: (half - value).abs(),
        samples: n_pairs,
        ladder: vec![],
        flag: None,
    })
}

/// `χ^[2] ≈ Vol² · mean Λ(T; x₁, x₂)²` over independent seed pairs in the tube supports.
pub fn chi_bracket2_estimate(set: &TubeSet, n_pairs: usize, t: f64, seed: u64) -> Result<Estimate> {
    if n_pairs < 16 {
        return Err(Error::InvalidParameter(format!(
            "at least 16 pairs required, got {n_pairs}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec3, Vec3)> = (0..n_pairs)
        .map(|_| (set.uniform_point(&mut rng), set.uniform_point(&mut rng)))
        .collect();
    let opts = TraceOptions::default();
    let vol2 = set.tube_volume().powi(2);
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let la = trace_line(set, a, t, &opts)?;
            let lb = trace_line(set, b, t, &opts)?;
            Ok(vol2 * gauss_linking(&la, &lb, t)?.powi(2))
        })
        .collect::<Result<_>>()?;
    let (value, stderr) = mean_and_stderr(&vals);
    Ok(Estimate {
        value,
        stderr,
        systematic: 0.0,
        samples: n_pairs,
        ladder: vec![(t, value)],
        flag: None,
    })
}

/// Closed-line limit of `χ^[2]`: each pair contributes `(Lk / (p₁ p₂))²`,
/// the `T → ∞` value of the asymptotic linking coefficient of two periodic lines.
pub fn chi_bracket2_closed(set: &TubeSet, n_pairs: usize, seed: u64) -> Result<Estimate> {
    if n_pairs < 16 {
        return Err(Error::InvalidParameter(format!(
            "at least 16 pairs required, got {n_pairs}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec3, Vec3)> = (0..n_pairs)
        .map(|_| (set.uniform_point(&mut rng), set.uniform_point(&mut rng)))
        .collect();
    let vol2 = set.tube_volume().powi(2);
    let closed = |x: Vec3| -> Result<_> {
        let t = set
            .tube_at(x)
            .ok_or_else(|| Error::InvalidParameter("seed outside the tubes".into()))?;
        let p = set.tubes()[t].period(x).expect("inside the tube");
        Ok((trace_line(set, x, p, &TraceOptions::default())?, p))
    };
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (la, pa) = closed(a)?;
            let (lb, pb) = closed(b)?;
            Ok(vol2 * (linking_number(&la, &lb)? / (pa * pb)).powi(2))
        })
        .collect::<Result<_>>()?;
    let (value, stderr) = mean_and_stderr(&vals);
    Ok(Estimate {
        value,
        stderr,
        systematic: 0.0,
        samples: n_pairs,
        ladder: vec![],
        flag: None,
    })
}

/// One inequality `lhs ≤ rhs` with its uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub sigma: f64,
    /// `None` for relations evaluated for reference only.
    pub satisfied: Option<bool>,
    pub margin: f64,
}

impl Verdict {
    fn binding(name: &str, lhs: f64, rhs: f64, sigma: f64) -> Self {
        let tiny = 1e-12 * lhs.abs().max(rhs.abs());
        Verdict {
            name: name.into(),
            lhs,
            rhs,
            sigma,
            satisfied: Some(lhs <= rhs + 2.0 * sigma + tiny),
            margin: rhs - lhs,
        }
    }

    fn reference(name: &str, lhs: f64, rhs: f64, sigma: f64) -> Self {
        Verdict {
            name: name.into(),
            lhs,
            rhs,
            sigma,
            satisfied: None,
            margin: rhs - lhs,
        }
    }
}

/// Scalar diagnostics of one field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    /// Domain volume entering the chain (the box, or the tube supports).
    pub volume: f64,
    pub energy: f64,
    pub helicity: f64,
    pub current_helicity: f64,
    pub delta2: Option<Estimate>,
    pub delta_bracket2: Option<Estimate>,
    pub chi2: Option<Estimate>,
    pub chi_bracket2: Option<Estimate>,
    pub verdicts: Vec<Verdict>,
}

impl InvariantReport {
    pub fn for_spectral(f: &SpectralField) -> Self {
        InvariantReport {
            volume: VOLUME,
            energy: f.energy(),
            helicity: f.helicity(),
            current_helicity: f.current_helicity(),
            ..Default::default()
        }
    }

    /// Rows `(quantity, value, stderr, systematic)`.
    pub fn rows(&self) -> Vec<(String, f64, f64, f64)> {
        let mut rows = vec![
            ("volume".to_string(), self.volume, 0.0, 0.0),
            ("U".to_string(), self.energy, 0.0, 0.0),
            ("chi".to_string(), self.helicity, 0.0, 0.0),
            ("chiC".to_string(), self.current_helicity, 0.0, 0.0),
        ];
        for (name, e) in [
            ("delta2", &self.delta2),
            ("deltaBracket2", &self.delta_bracket2),
            ("chi2", &self.chi2),
            ("chiBracket2", &self.chi_bracket2),
        ] {
            if let Some(e) = e {
                rows.push((name.to_string(), e.value, e.stderr, e.systematic));
            }
        }
        rows
    }

    /// True when every binding inequality holds.
    pub fn all_satisfied(&self) -> bool {
        self.verdicts.iter().all(|v| v.satisfied != Some(false))
    }
}

/// Evaluates the inequality chain from the populated entries of `report`.
///
/// Binding: `χ⁽²⁾ ≤ δ⁽²⁾`, `χ^[2] ≤ δ^[2]`, `χ² ≤ Vol·χ⁽²⁾`,
/// `χ⁽²⁾ ≤ Vol·χ^[2]`, `δ⁽²⁾ ≤ Vol·δ^[2]`, all at 2σ of the combined
/// uncertainty. The forms `δ⁽²⁾ ≤ δ^[2]/Vol` and
/// `2χ²/Vol² ≤ 2χ⁽²⁾/Vol ≤ χ^[2]` are recorded without a verdict.
pub fn check_inequalities(report: &InvariantReport) -> Vec<Verdict> {
    let vol = report.volume;
    let chi = report.helicity;
    let mut out = Vec::new();
    let sig = |e: &Estimate| e.combined();
    if let (Some(c2), Some(d2)) = (&report.chi2, &report.delta2) {
        out.push(Verdict::binding(
            "chi2 <= delta2",
            c2.value,
            d2.value,
            sig(c2).hypot(sig(d2)),
        ));
    }
    if let (Some(cb), Some(db)) = (&report.chi_bracket2, &report.delta_bracket2) {
        out.push(Verdict::binding(
            "chiBracket2 <= deltaBracket2",
            cb.value,
            db.value,
            sig(cb).hypot(sig(db)),
        ));
    }
    if let Some(c2) = &report.chi2 {
        out.push(Verdict::binding(
            "chi^2 <= Vol*chi2",
            chi * chi,
            vol * c2.value,
            vol * sig(c2),
        ));
    }
    if let (Some(c2), Some(cb)) = (&report.chi2, &report.chi_bracket2) {
        out.push(Verdict::binding(
            "chi2 <= Vol*chiBracket2",
            c2.value,
            vol * cb.value,
            sig(c2).hypot(vol * sig(cb)),
        ));
        out.push(Verdict::reference(
            "2*chi2/Vol <= chiBracket2 (printed form)",
            2.0 * c2.value / vol,
            cb.value,
            (2.0 * sig(c2) / vol).hypot(sig(cb)),
        ));
        out.push(Verdict::reference(
            "2*chi^2/Vol^2 <= 2*chi2/Vol (printed form)",
            2.0 * chi * chi / (vol * vol),
            2.0 * c2.value / vol,
            2.0 * sig(c2) / vol,
        ));
    }
    if let (Some(d2), Some(db)) = (&report.delta2, &report.delta_bracket2) {
        out.push(Verdict::binding(
            "delta2 <= Vol*deltaBracket2",
            d2.value,
            vol * db.value,
            sig(d2).hypot(vol * sig(db)),
        ));
        out.push(Verdict::reference(
            "delta2 <= deltaBracket2/Vol (printed form)",
            d2.value,
            db.value / vol,
            sig(d2).hypot(sig(db) / vol),
        ));
    }
    out
}
