//! Induction equation `∂B/∂t = rot(v × B) + α rot B − η rot rot B` in the helical basis.
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::invariants::delta2;
use crate::spectral::basis::{cdot, helical_basis, i_cross, CVec3, HelicalBasis, WaveVector};
use crate::spectral::fft::{fft_size, wave_to_index, Fft3};
use crate::spectral::field::{Mode, SpectralField};
use crate::spectral::grid::{synthesize, synthesize_vectors, GridField};

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    pub alpha: f64,
    pub eta: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Frozen divergence-free velocity.
    pub velocity: Option<SpectralField>,
    /// Truncation `|k_i| ≤ kmax` when a velocity is present (default: the larger of the two fields' maxima).
    pub kmax: Option<i32>,
}

impl EvolutionParams {
    pub fn new(alpha: f64, eta: f64, dt: f64, t_end: f64) -> Self {
        EvolutionParams {
            alpha,
            eta,
            dt,
            t_end,
            velocity: None,
            kmax: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.eta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eta must be ≥ 0, got {}",
                self.eta
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Diagonal growth rate of the `±` mode at `|k|`.
    pub fn rate(&self, k: f64, sign: f64) -> f64 {
        sign * self.alpha * k - self.eta * k * k
    }
}

/// Precomputed state for stepping one mode set.
struct Stepper {
    ks: Vec<WaveVector>,
    bases: Vec<HelicalBasis>,
    rates: Vec<(f64, f64)>,
    advect: Option<Advection>,
}

/// Pseudo-spectral `rot(v × B)` on a padded grid.
struct Advection {
    m: usize,
    fft: Fft3,
    v: [Vec<f64>; 3],
}

type State = Vec<(Complex64, Complex64)>;

impl Stepper {
    fn new(field: &SpectralField, params: &EvolutionParams) -> Result<Self> {
        params.validate()?;
        let ks: Vec<WaveVector> = match &params.velocity {
            None => field.modes().iter().map(|m| m.k).collect(),
            Some(v) => {
                let kmax = params.kmax.unwrap_or(field.max_wave().max(v.max_wave()));
                if kmax < field.max_wave() {
                    return Err(Error::InvalidParameter(format!(
                        "truncation {kmax} below the field's largest wave number {}",
                        field.max_wave()
                    )));
                }
                let mut ks = Vec::new();
                for n3 in 0..=kmax {
                    for n2 in -kmax..=kmax {
                        for n1 in -kmax..=kmax {
                            let k = WaveVector::new(n1, n2, n3);
                            if k.in_half_space() {
                                ks.push(k);
                            }
                        }
                    }
                }
                ks.sort();
                ks
            }
        };
        let bases = ks
            .iter()
            .map(|&k| helical_basis(k))
            .collect::<Result<Vec<_>>>()?;
        let norms: Vec<f64> = ks.iter().map(|k| k.norm()).collect();
        let rates = norms
            .iter()
            .map(|&k| (params.rate(k, 1.0), params.rate(k, -1.0)))
            .collect();
        let advect = match &params.velocity {
            None => None,
            Some(v) => {
                let kmax = ks.iter().map(|k| k.max_abs()).max().unwrap_or(1);
                let m = fft_size((3 * kmax.max(v.max_wave()) + 1) as usize);
                let vg = synthesize(v, m)?;
                let vmax = vg.max_norm();
                let cfl = params.dt * vmax * kmax as f64;
                if cfl > 0.5 {
                    return Err(Error::Cfl(cfl));
                }
                Some(Advection {
                    m,
                    fft: Fft3::new(m),
                    v: vg.components().clone(),
                })
            }
        };
        Ok(Stepper {
            ks,
            bases,
            rates,
            advect,
        })
    }

    fn load(&self, field: &SpectralField) -> State {
        self.ks
            .iter()
            .map(|&k| {
                field
                    .get(k)
                    .map_or((Complex64::default(), Complex64::default()), |m| {
                        (m.plus, m.minus)
                    })
            })
            .collect()
    }

    fn store(&self, s: &State) -> SpectralField {
        SpectralField::from_modes(
            self.ks
                .iter()
                .zip(s)
                .filter(|(_, (p, m))| p.norm_sqr() + m.norm_sqr() > 0.0)
                .map(|(&k, &(plus, minus))| Mode { k, plus, minus }),
        )
        .expect("stepper modes are valid")
    }

    fn nonlinear(&self, s: &State) -> Option<State> {
        let adv = self.advect.as_ref()?;
        let m = adv.m;
        let vectors = self
            .ks
            .iter()
            .zip(&self.bases)
            .zip(s)
            .map(|((&k, b), &(p, q))| {
                let v: CVec3 = [0, 1, 2].map(|i| b.plus[i] * p + b.minus[i] * q);
                (k, v)
            });
        let bg = synthesize_vectors(m, vectors);
        let v = &adv.v;
        let len = m * m * m;
        let norm = 1.0 / len as f64;
        let mut w: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); len]; 3];
        for i in 0..len {
            let (bx, by, bz) = (bg[0][i], bg[1][i], bg[2][i]);
            let (vx, vy, vz) = (v[0][i], v[1][i], v[2][i]);
            w[0][i] = Complex64::new((vy * bz - vz * by) * norm, 0.0);
            w[1][i] = Complex64::new((vz * bx - vx * bz) * norm, 0.0);
            w[2][i] = Complex64::new((vx * by - vy * bx) * norm, 0.0);
        }
        for c in w.iter_mut() {
            adv.fft.forward(c);
        }
        Some(
            self.ks
                .iter()
                .zip(&self.bases)
                .map(|(&k, b)| {
                    let idx = (wave_to_index(k.0[2], m) * m + wave_to_index(k.0[1], m)) * m
                        + wave_to_index(k.0[0], m);
                    let wh: CVec3 = [w[0][idx], w[1][idx], w[2][idx]];
                    let curl = i_cross(k.as_vec3(), &wh);
                    (cdot(&b.plus, &curl), cdot(&b.minus, &curl))
                })
                .collect(),
        )
    }

    /// One integrating-factor RK4 step of size `dt` (negative steps run backwards).
    fn step(&self, s: &State, dt: f64) -> State {
        let e: Vec<(f64, f64)> = self
            .rates
            .iter()
            .map(|&(a, b)| ((a * dt).exp(), (b * dt).exp()))
            .collect();
        let k1 = match self.nonlinear(s) {
            None => {
                return s
                    .iter()
                    .zip(&e)
                    .map(|(&(p, q), &(ep, em))| (p * ep, q * em))
                    .collect()
            }
            Some(k) => k,
        };
        let eh: Vec<(f64, f64)> = self
            .rates
            .iter()
            .map(|&(a, b)| ((0.5 * a * dt).exp(), (0.5 * b * dt).exp()))
            .collect();
        let h = 0.5 * dt;
        let comb = |f: &dyn Fn(usize) -> (Complex64, Complex64)| -> State {
            (0..s.len()).map(f).collect()
        };
        let s2 = comb(&|i| {
            (
                (s[i].0 + k1[i].0 * h) * eh[i].0,
                (s[i].1 + k1[i].1 * h) * eh[i].1,
            )
        });
        let k2 = self.nonlinear(&s2).unwrap();
        let s3 = comb(&|i| {
            (
                s[i].0 * eh[i].0 + k2[i].0 * h,
                s[i].1 * eh[i].1 + k2[i].1 * h,
            )
        });
        let k3 = self.nonlinear(&s3).unwrap();
        let s4 = comb(&|i| {
            (
                s[i].0 * e[i].0 + k3[i].0 * (dt * eh[i].0),
                s[i].1 * e[i].1 + k3[i].1 * (dt * eh[i].1),
            )
        });
        let k4 = self.nonlinear(&s4).unwrap();
        let w = dt / 6.0;
        comb(&|i| {
            let p = s[i].0 * e[i].0
                + (k1[i].0 * e[i].0 + (k2[i].0 + k3[i].0) * (2.0 * eh[i].0) + k4[i].0) * w;
            let q = s[i].1 * e[i].1
                + (k1[i].1 * e[i].1 + (k2[i].1 + k3[i].1) * (2.0 * eh[i].1) + k4[i].1) * w;
            (p, q)
        })
    }

    fn top_shell_fraction(&self, s: &State) -> f64 {
        let top = self.ks.iter().map(|k| k.max_abs()).max().unwrap_or(0);
        let total: f64 = s.iter().map(|(p, q)| p.norm_sqr() + q.norm_sqr()).sum();
        let upper: f64 = self
            .ks
            .iter()
            .zip(s)
            .filter(|(k, _)| k.max_abs() == top)
            .map(|(_, (p, q))| p.norm_sqr() + q.norm_sqr())
            .sum();
        if total > 0.0 {
            upper / total
        } else {
            0.0
        }
    }
}

/// Advances the field by one step of `params.dt`.
pub fn step_induction(field: &SpectralField, params: &EvolutionParams) -> Result<SpectralField> {
    let st = Stepper::new(field, params)?;
    let s = st.load(field);
    let out = st.step(&s, params.dt);
    if params.velocity.is_some() {
        let frac = st.top_shell_fraction(&out);
        if frac > 1e-6 {
            log::warn!("top-shell energy fraction {frac:.2e}: increase kmax");
        }
    }
    Ok(st.store(&out))
}

/// One row of the evolution time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub energy: f64,
    pub helicity: f64,
    pub current_helicity: f64,
    pub delta2: f64,
    pub theorem2_rhs: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub snapshots: Vec<(f64, SpectralField)>,
    pub series: Vec<SeriesRow>,
    pub warnings: Vec<String>,
}

/// Integrates to `params.t_end`, recording every `every` steps (and the end).
pub fn evolve(field: &SpectralField, params: &EvolutionParams, every: usize) -> Result<Evolution> {
    let st = Stepper::new(field, params)?;
    let n_steps = (params.t_end / params.dt).round() as usize;
    if (n_steps as f64 * params.dt - params.t_end).abs() > 1e-9 * params.t_end.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "t_end {} is not a multiple of dt {}",
            params.t_end, params.dt
        )));
    }
    let every = every.max(1);
    let mut s = st.load(field);
    let mut snapshots = Vec::new();
    let mut series = Vec::new();
    let mut warnings = Vec::new();
    let mut record = |i: usize, s: &State| -> Result<()> {
        let t = i as f64 * params.dt;
        let f = st.store(s);
        series.push(SeriesRow {
            t,
            energy: f.energy(),
            helicity: f.helicity(),
            current_helicity: f.current_helicity(),
            delta2: delta2(&f)?.value,
            theorem2_rhs: theorem2_rhs(&f, params)?,
        });
        snapshots.push((t, f));
        Ok(())
    };
    record(0, &s)?;
    for i in 1..=n_steps {
        s = st.step(&s, params.dt);
        if st.advect.is_some() {
            let frac = st.top_shell_fraction(&s);
            if frac > 1e-6 && warnings.is_empty() {
                let w = format!(
                    "top-shell energy fraction {frac:.2e} at t = {:.4}",
                    i as f64 * params.dt
                );
                log::warn!("{w}");
                warnings.push(w);
            }
        }
        if i % every == 0 || i == n_steps {
            record(i, &s)?;
        }
    }
    Ok(Evolution {
        snapshots,
        series,
        warnings,
    })
}

/// `(−2ηχᶜ + 2αU, centered difference of χ over ±dt)` at the current field.
pub fn helicity_balance(field: &SpectralField, params: &EvolutionParams) -> Result<(f64, f64)> {
    let st = Stepper::new(field, params)?;
    let s = st.load(field);
    let fwd = st.store(&st.step(&s, params.dt)).helicity();
    let back = st.store(&st.step(&s, -params.dt)).helicity();
    let predicted =
        -2.0 * params.eta * field.current_helicity() + 2.0 * params.alpha * field.energy();
    Ok((predicted, (fwd - back) / (2.0 * params.dt)))
}

/// Signed curl eigenvalue of a single-shell, single-helicity field.
pub fn beltrami_eigenvalue(field: &SpectralField) -> Result<f64> {
    let mut lambda: Option<f64> = None;
    for m in field.modes() {
        let k = m.k.norm();
        for (amp, sign) in [(m.plus, 1.0), (m.minus, -1.0)] {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let l = sign * k;
            match lambda {
                None => lambda = Some(l),
                Some(prev) if (prev - l).abs() > 1e-12 * k => {
                    return Err(Error::NotBeltrami(format!(
                        "modes with eigenvalues {prev} and {l}"
                    )));
                }
                _ => {}
            }
        }
    }
    lambda.ok_or_else(|| Error::NotBeltrami("zero field".into()))
}

/// `χ⁽²⁾(t) = χ⁽²⁾(0) exp(4λt(α − λη))` for an eigenfield with eigenvalue `λ`.
pub fn chi2_closed_form(
    field: &SpectralField,
    chi2_0: f64,
    params: &EvolutionParams,
    t: f64,
) -> Result<f64> {
    if params.velocity.is_some() {
        return Err(Error::NotBeltrami(
            "closed form holds only without advection".into(),
        ));
    }
    let l = beltrami_eigenvalue(field)?;
    Ok(chi2_0 * (4.0 * l * t * (params.alpha - l * params.eta)).exp())
}

/// Right-hand side of the bound on `|d√χ⁽²⁾/dt|`, evaluated by exact grid quadrature.
pub fn theorem2_rhs(field: &SpectralField, params: &EvolutionParams) -> Result<f64> {
    if field.is_empty() || (params.alpha == 0.0 && params.eta == 0.0) {
        return Ok(0.0);
    }
    let j = field.curl();
    let jj = j.curl();
    let a = field.vector_potential();
    // (J'', J'')⁴ has degree 8K
    let n = fft_size(8 * field.max_wave() as usize + 1);
    let g = |f: &SpectralField| synthesize(f, n);
    let (b, j, jj, a) = (g(field)?, g(&j)?, g(&jj)?, g(&a)?);
    let top = field.max_wave();
    let top_energy: f64 = field
        .modes()
        .iter()
        .filter(|m| m.k.max_abs() == top)
        .map(|m| m.k.norm_sq() as f64 * (m.plus.norm_sqr() + m.minus.norm_sqr()))
        .sum();
    let curl_energy: f64 = field
        .modes()
        .iter()
        .map(|m| m.k.norm_sq() as f64 * (m.plus.norm_sqr() + m.minus.norm_sqr()))
        .sum();
    if top > 1 && top_energy > 0.5 * curl_energy {
        log::warn!("rot B dominated by the top shell; higher derivatives unresolved");
    }
    let sq = |x: &GridField, y: &GridField| x.integrate_pair(y, |p, q| p.dot(q).powi(2)).sqrt();
    let l8 = |x: &GridField| x.integrate(|p| p.norm_sq().powi(4)).powf(0.125);
    let a4 = a.integrate(|p| p.norm_sq().powi(2)).powf(0.25);
    let (eta, alpha) = (params.eta, params.alpha);
    Ok(eta * sq(&j, &b)
        + eta * sq(&jj, &a)
        + alpha * sq(&b, &b)
        + alpha * sq(&j, &a)
        + eta * l8(&jj) * a4
        + alpha * l8(&j) * a4)
}
