use rayon::prelude::*;

use super::ode::{integrate, Outcome, Tolerance};
use super::LineField;
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Dense-output sample of a traced line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub tau: f64,
    /// Unwrapped position.
    pub x: Vec3,
    /// `ẋ = B(x)`.
    pub v: Vec3,
    /// `∫₀^τ (A, B) dτ'`.
    pub i1: f64,
    /// `∫₀^τ (A, B)² dτ'`.
    pub i2: f64,
    /// `(A, B)` at `x`.
    pub density: f64,
}

#[derive(Debug, Clone)]
pub struct TraceOptions {
    pub tol: Tolerance,
    /// Times at which the running integrals are recorded exactly.
    pub checkpoints: Vec<f64>,
    /// Keep every accepted step (needed for linking integrals and dumps).
    pub store_samples: bool,
    pub max_steps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            tol: Tolerance::default(),
            checkpoints: Vec::new(),
            store_samples: true,
            max_steps: 50_000_000,
        }
    }
}

impl TraceOptions {
    pub fn ladder(checkpoints: &[f64]) -> Self {
        TraceOptions {
            checkpoints: checkpoints.to_vec(),
            store_samples: false,
            ..Default::default()
        }
    }
}

/// Trajectory of `ẋ = B(x)` with running helicity-density integrals.
#[derive(Debug, Clone)]
pub struct FieldLine {
    pub seed: Vec3,
    /// Time actually reached.
    pub t_end: f64,
    pub t_requested: f64,
    pub tol: Tolerance,
    /// Every accepted step, when requested.
    pub samples: Vec<Sample>,
    /// State at each requested checkpoint reached.
    pub checkpoints: Vec<Sample>,
    /// Set when integration stopped early.
    pub diagnostic: Option<String>,
    pub steps: usize,
}

impl FieldLine {
    pub fn is_complete(&self) -> bool {
        self.diagnostic.is_none()
    }

    pub fn end(&self) -> Sample {
        *self
            .checkpoints
            .last()
            .expect("a line always records its end point")
    }

    /// Builds a line from a parametrized curve `t ↦ (x, ẋ)` on `[0, t_end]`.
    pub fn from_curve(curve: impl Fn(f64) -> (Vec3, Vec3), t_end: f64, n: usize) -> Self {
        let samples: Vec<Sample> = (0..=n)
            .map(|i| {
                let tau = t_end * i as f64 / n as f64;
                let (x, v) = curve(tau);
                Sample {
                    tau,
                    x,
                    v,
                    i1: 0.0,
                    i2: 0.0,
                    density: 0.0,
                }
            })
            .collect();
        FieldLine {
            seed: samples[0].x,
            t_end,
            t_requested: t_end,
            tol: Tolerance::default(),
            checkpoints: vec![*samples.last().unwrap()],
            samples,
            diagnostic: None,
            steps: n,
        }
    }

    fn state_at(&self, t: f64) -> Result<Sample> {
        if !(0.0..=self.t_end * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "time {t} outside traced range [0, {}]",
                self.t_end
            )));
        }
        if let Some(c) = self
            .checkpoints
            .iter()
            .find(|c| (c.tau - t).abs() <= 1e-12 * t.max(1.0))
        {
            return Ok(*c);
        }
        if self.samples.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "time {t} is not a checkpoint of a line without samples"
            )));
        }
        let j = self
            .samples
            .partition_point(|s| s.tau <= t)
            .clamp(1, self.samples.len() - 1);
        let (a, b) = (&self.samples[j - 1], &self.samples[j]);
        let dt = b.tau - a.tau;
        let s = (t - a.tau) / dt;
        let (h00, h10, h01, h11) = hermite(s);
        let i1 = h00 * a.i1 + h10 * dt * a.density + h01 * b.i1 + h11 * dt * b.density;
        let i2 =
            h00 * a.i2 + h10 * dt * a.density.powi(2) + h01 * b.i2 + h11 * dt * b.density.powi(2);
        let x = a.x * h00 + a.v * (h10 * dt) + b.x * h01 + b.v * (h11 * dt);
        Ok(Sample {
            tau: t,
            x,
            v: a.v * (1.0 - s) + b.v * s,
            i1,
            i2,
            density: a.density * (1.0 - s) + b.density * s,
        })
    }

    /// Position at time `t` from the dense output.
    pub fn position(&self, t: f64) -> Result<Vec3> {
        Ok(self.state_at(t)?.x)
    }

    /// `Λ_A(T) = (1/T) ∫₀ᵀ (B, A) dτ`.
    pub fn lambda_a(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(self
                .samples
                .first()
                .or(self.checkpoints.first())
                .map_or(0.0, |s| s.density));
        }
        Ok(self.state_at(t)?.i1 / t)
    }

    /// `Λ⁽²⁾(T) = Λ_A(T)²`.
    pub fn lambda_sq(&self, t: f64) -> Result<f64> {
        Ok(self.lambda_a(t)?.powi(2))
    }

    /// `(1/T) ∫₀ᵀ (B, A)² dτ`, the Cauchy–Schwarz majorant of `Λ⁽²⁾`.
    pub fn mean_square_density(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return self.lambda_sq(0.0);
        }
        Ok(self.state_at(t)?.i2 / t)
    }

    /// Time variance of the helicity density about its mean `Λ_A(T)`.
    pub fn density_variance(&self, t: f64) -> Result<f64> {
        Ok((self.mean_square_density(t)? - self.lambda_sq(t)?).max(0.0))
    }

    /// Sample variance of the window means of `(B, A)` over consecutive windows of length `w`.
    pub fn window_variance(&self, w: f64) -> Result<f64> {
        let n = (self.t_end / w * (1.0 + 1e-12)).floor() as usize;
        if !(w > 0.0) || n < 2 {
            return Err(Error::InvalidParameter(format!(
                "window {w} leaves fewer than two windows in {}",
                self.t_end
            )));
        }
        let mut prev = 0.0;
        let mut means = Vec::with_capacity(n);
        for k in 1..=n {
            let i1 = self.state_at((k as f64 * w).min(self.t_end))?.i1;
            means.push((i1 - prev) / w);
            prev = i1;
        }
        let m = means.iter().sum::<f64>() / n as f64;
        Ok(means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64)
    }

    /// Rows `(τ, x, y, z, Λ_A running)` of the stored samples.
    pub fn trajectory_rows(&self) -> Vec<[f64; 5]> {
        self.samples
            .iter()
            .map(|s| {
                let running = if s.tau > 0.0 { s.i1 / s.tau } else { s.density };
                [s.tau, s.x[0], s.x[1], s.x[2], running]
            })
            .collect()
    }
}

pub(crate) fn hermite(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

/// Integrates `ẋ = B(x)` from `seed` for time `t_end`, accumulating
/// `∫(A,B)dτ` and `∫(A,B)²dτ` alongside the position.
pub fn trace_line<F: LineField + ?Sized>(
    field: &F,
    seed: Vec3,
    t_end: f64,
    opts: &TraceOptions,
) -> Result<FieldLine> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trace time must be positive, got {t_end}"
        )));
    }
    let rhs = |y: &[f64; 5]| {
        let (b, a) = field.field_and_potential(Vec3([y[0], y[1], y[2]]));
        let d = a.dot(b);
        [b[0], b[1], b[2], d, d * d]
    };
    let to_sample = |t: f64, y: &[f64; 5], dy: &[f64; 5]| Sample {
        tau: t,
        x: Vec3([y[0], y[1], y[2]]),
        v: Vec3([dy[0], dy[1], dy[2]]),
        i1: y[3],
        i2: y[4],
        density: dy[3],
    };
    let y0 = [seed[0], seed[1], seed[2], 0.0, 0.0];
    let first = to_sample(0.0, &y0, &rhs(&y0));
    let mut samples = Vec::new();
    if opts.store_samples {
        samples.push(first);
    }
    let mut checkpoints = Vec::new();
    let mut last = first;
    let stops: Vec<f64> = opts
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c > 0.0 && c <= t_end)
        .collect();
    let is_stop = |t: f64| stops.contains(&t) || t == t_end;
    let (_, outcome, steps) =
        integrate(rhs, y0, t_end, &stops, 3, opts.tol, opts.max_steps, |acc| {
            let s = to_sample(acc.t, &acc.y, &acc.dy);
            last = s;
            if opts.store_samples {
                samples.push(s);
            }
            if is_stop(acc.t) {
                checkpoints.push(s);
            }
            true
        });
    let (t_reached, diagnostic) = match outcome {
        Outcome::Finished => (t_end, None),
        Outcome::StepUnderflow(t) => (t, Some(format!("step size underflow at τ = {t:.6e}"))),
        Outcome::MaxSteps => (
            last.tau,
            Some(format!("step limit {} reached", opts.max_steps)),
        ),
        Outcome::Stopped => unreachable!("observer never stops"),
    };
    if let Some(d) = &diagnostic {
        log::warn!("line from {:?}: {d}", seed.0);
    }
    if checkpoints.is_empty() || checkpoints.last().unwrap().tau < t_reached {
        // partial line: record where it ended
        checkpoints.push(last);
    }
    Ok(FieldLine {
        seed,
        t_end: t_reached,
        t_requested: t_end,
        tol: opts.tol,
        samples,
        checkpoints,
        diagnostic,
        steps,
    })
}

/// Traces every seed in parallel; output order follows `seeds`.
pub fn trace_many<F: LineField + ?Sized>(
    field: &F,
    seeds: &[Vec3],
    t_end: f64,
    opts: &TraceOptions,
) -> Result<Vec<FieldLine>> {
    seeds
        .par_iter()
        .map(|&s| trace_line(field, s, t_end, opts))
        .collect()
}
