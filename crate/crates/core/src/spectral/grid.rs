use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{CVec3, WaveVector, CZERO};
use super::fft::{index_to_wave, wave_to_index, Fft3};
use super::field::{FieldBuilder, SpectralField};
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use crate::{BOX_LENGTH, VOLUME};

/// Where a grid field is allowed to be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Torus,
    Ball { center: Vec3, radius: f64 },
}

impl Support {
    pub fn volume(&self) -> f64 {
        match *self {
            Support::Torus => VOLUME,
            Support::Ball { radius, .. } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
        }
    }
}

/// Real vector samples on a uniform `n³` grid over the box, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    data: [Vec<f64>; 3],
    support: Support,
}

impl GridField {
    pub fn new(n: usize, data: [Vec<f64>; 3], support: Support) -> Result<Self> {
        if n == 0 || data.iter().any(|c| c.len() != n * n * n) {
            return Err(Error::InvalidParameter(format!(
                "grid components must hold {n}³ samples"
            )));
        }
        Ok(GridField { n, data, support })
    }

    pub fn zeros(n: usize, support: Support) -> Self {
        let len = n * n * n;
        GridField {
            n,
            data: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
            support,
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(n: usize, support: Support, f: impl Fn(Vec3) -> Vec3 + Sync) -> Self {
        let h = BOX_LENGTH / n as f64;
        let pts: Vec<Vec3> = (0..n * n * n)
            .into_par_iter()
            .map(|i| {
                let (ix, iy, iz) = (i % n, (i / n) % n, i / (n * n));
                f(Vec3::new(ix as f64 * h, iy as f64 * h, iz as f64 * h))
            })
            .collect();
        let mut g = GridField::zeros(n, support);
        for (i, p) in pts.into_iter().enumerate() {
            for c in 0..3 {
                g.data[c][i] = p[c];
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn spacing(&self) -> f64 {
        BOX_LENGTH / self.n as f64
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.data[c]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.data
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.n + iy) * self.n + ix
    }

    #[inline]
    pub fn at(&self, i: usize) -> Vec3 {
        Vec3([self.data[0][i], self.data[1][i], self.data[2][i]])
    }

    pub fn position(&self, i: usize) -> Vec3 {
        let n = self.n;
        let h = self.spacing();
        Vec3::new(
            (i % n) as f64 * h,
            ((i / n) % n) as f64 * h,
            (i / (n * n)) as f64 * h,
        )
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.n.pow(3))
            .map(|i| self.at(i).norm())
            .fold(0.0, f64::max)
    }

    /// `h³ Σ f(B(x_i), x_i)`: the periodic trapezoid rule.
    pub fn integrate(&self, f: impl Fn(Vec3) -> f64) -> f64 {
        let w = self.spacing().powi(3);
        w * (0..self.n.pow(3)).map(|i| f(self.at(i))).sum::<f64>()
    }

    /// Pointwise inner product integrated over the box.
    pub fn inner(&self, other: &GridField) -> f64 {
        self.integrate_pair(other, |a, b| a.dot(b))
    }

    pub fn integrate_pair(&self, other: &GridField, f: impl Fn(Vec3, Vec3) -> f64) -> f64 {
        assert_eq!(self.n, other.n, "grid sizes differ");
        let w = self.spacing().powi(3);
        w * (0..self.n.pow(3))
            .map(|i| f(self.at(i), other.at(i)))
            .sum::<f64>()
    }

    /// Componentwise sum; supports are merged into the smaller enclosing description.
    pub fn add(&self, other: &GridField) -> Result<GridField> {
        if self.n != other.n {
            return Err(Error::InvalidParameter("grid sizes differ".into()));
        }
        let data = [0, 1, 2].map(|c| {
            self.data[c]
                .iter()
                .zip(&other.data[c])
                .map(|(a, b)| a + b)
                .collect::<Vec<_>>()
        });
        let support = if self.support == other.support {
            self.support
        } else {
            Support::Torus
        };
        Ok(GridField {
            n: self.n,
            data,
            support,
        })
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    fn spectra(&self) -> Vec<Vec<Complex64>> {
        let fft = Fft3::new(self.n);
        let norm = 1.0 / (self.n.pow(3) as f64);
        (0..3)
            .into_par_iter()
            .map(|c| {
                let mut buf: Vec<Complex64> = self.data[c]
                    .iter()
                    .map(|&v| Complex64::new(v * norm, 0.0))
                    .collect();
                fft.forward(&mut buf);
                buf
            })
            .collect()
    }

    /// Second-order central-difference divergence: `(max, rms)` over the grid.
    pub fn divergence_fd(&self) -> (f64, f64) {
        let n = self.n;
        let inv = 0.5 / self.spacing();
        let (max, sum) = (0..n * n * n)
            .into_par_iter()
            .map(|i| {
                let (ix, iy, iz) = (i % n, (i / n) % n, i / (n * n));
                let up = |v: usize| (v + 1) % n;
                let dn = |v: usize| (v + n - 1) % n;
                let d = (self.data[0][self.index(up(ix), iy, iz)]
                    - self.data[0][self.index(dn(ix), iy, iz)]
                    + self.data[1][self.index(ix, up(iy), iz)]
                    - self.data[1][self.index(ix, dn(iy), iz)]
                    + self.data[2][self.index(ix, iy, up(iz))]
                    - self.data[2][self.index(ix, iy, dn(iz))])
                    * inv;
                (d.abs(), d * d)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1 + b.1));
        (max, (sum / (n * n * n) as f64).sqrt())
    }

    /// Spectral divergence, max norm over the grid.
    pub fn divergence_max(&self) -> f64 {
        let n = self.n;
        let mut spec = self.spectra();
        let mut div = vec![CZERO; n.pow(3)];
        for (i, d) in div.iter_mut().enumerate() {
            let k = wave_at(i, n);
            let nyq = k.iter().any(|&m| 2 * m.unsigned_abs() as usize == n);
            if nyq {
                continue;
            }
            *d = Complex64::new(0.0, 1.0)
                * (spec[0][i] * k[0] as f64 + spec[1][i] * k[1] as f64 + spec[2][i] * k[2] as f64);
        }
        spec.clear();
        Fft3::new(n).inverse(&mut div);
        div.iter().map(|v| v.re.abs()).fold(0.0, f64::max)
    }
}

fn wave_at(i: usize, n: usize) -> [i32; 3] {
    [
        index_to_wave(i % n, n),
        index_to_wave((i / n) % n, n),
        index_to_wave(i / (n * n), n),
    ]
}

/// Minimum grid size that represents every stored mode without aliasing.
pub fn min_grid_size(f: &SpectralField) -> usize {
    2 * f.max_wave() as usize + 2
}

/// Inverse transform of a spectral field onto an `n³` grid.
pub fn synthesize(f: &SpectralField, n: usize) -> Result<GridField> {
    let required = min_grid_size(f);
    if n < required {
        return Err(Error::Aliasing { n, required });
    }
    let data = synthesize_vectors(n, f.modes().iter().map(|m| (m.k, m.vector())));
    Ok(GridField {
        n,
        data,
        support: Support::Torus,
    })
}

/// Real field `Σ v e^{ik·x} + c.c.` sampled on an `n³` grid.
pub(crate) fn synthesize_vectors(
    n: usize,
    terms: impl Iterator<Item = (WaveVector, CVec3)>,
) -> [Vec<f64>; 3] {
    let len = n * n * n;
    let mut bufs = vec![vec![CZERO; len]; 3];
    let idx = |k: [i32; 3]| {
        (wave_to_index(k[2], n) * n + wave_to_index(k[1], n)) * n + wave_to_index(k[0], n)
    };
    for (k, v) in terms {
        let ip = idx(k.0);
        let im = idx(k.neg().0);
        for c in 0..3 {
            bufs[c][ip] += v[c];
            bufs[c][im] += v[c].conj();
        }
    }
    let fft = Fft3::new(n);
    let data: Vec<Vec<f64>> = bufs
        .into_par_iter()
        .map(|mut b| {
            fft.inverse(&mut b);
            b.into_iter().map(|z| z.re).collect()
        })
        .collect();
    let mut it = data.into_iter();
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

/// Result of projecting grid samples onto the helical basis.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub field: SpectralField,
    /// RMS of the discarded k-parallel (compressive) part.
    pub compressive_rms: f64,
    /// Discarded mean field.
    pub mean: Vec3,
    pub warnings: Vec<String>,
}

/// Forward transform plus helical projection. Nyquist planes are dropped.
pub fn analyze(g: &GridField) -> Analysis {
    let n = g.n;
    let spec = g.spectra();
    let mut builder = FieldBuilder::default();
    let mut peak = 0.0f64;
    let mut entries = Vec::new();
    for i in 0..n.pow(3) {
        let k = wave_at(i, n);
        if k.iter().any(|&m| 2 * m.unsigned_abs() as usize == n) {
            continue;
        }
        let wv = WaveVector(k);
        if !wv.in_half_space() {
            continue;
        }
        let v: CVec3 = [spec[0][i], spec[1][i], spec[2][i]];
        let mag = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        peak = peak.max(mag);
        entries.push((wv, v, mag));
    }
    // round-off floor: FFT noise is ~1e-16 of the largest amplitude
    let floor = peak * 1e-13;
    for (wv, v, mag) in entries {
        if mag > floor {
            builder
                .add_vector(wv, v)
                .expect("half-space vectors are nonzero");
        }
    }
    let (field, compressive_rms) = builder.build();
    let mean = Vec3([spec[0][0].re, spec[1][0].re, spec[2][0].re]);
    let scale = g.max_norm();
    let mut warnings = Vec::new();
    if mean.norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        warnings.push(format!("nonzero mean field {:?} discarded", mean.0));
    }
    if compressive_rms > 1e-8 * scale {
        warnings.push(format!(
            "compressive component rms {compressive_rms:.3e} discarded"
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Analysis {
        field,
        compressive_rms,
        mean,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::Mode;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn five_modes() -> SpectralField {
        SpectralField::from_modes([
            Mode {
                k: WaveVector::new(1, 0, 0),
                plus: c(0.3, -0.2),
                minus: c(0.1, 0.05),
            },
            Mode {
                k: WaveVector::new(0, 2, 1),
                plus: c(-0.4, 0.1),
                minus: c(0.0, 0.2),
            },
            Mode {
                k: WaveVector::new(-3, 1, 2),
                plus: c(0.05, 0.05),
                minus: c(-0.1, 0.0),
            },
            Mode {
                k: WaveVector::new(-2, 2, 0),
                plus: c(0.2, 0.0),
                minus: c(0.0, -0.3),
            },
            Mode {
                k: WaveVector::new(0, 0, 4),
                plus: c(0.0, 0.1),
                minus: c(0.15, 0.0),
            },
        ])
        .unwrap()
    }

    #[test]
    fn round_trip_reproduces_amplitudes() {
        let f = five_modes();
        let g = synthesize(&f, 32).unwrap();
        let back = analyze(&g);
        assert_eq!(back.field.mode_count(), 5);
        for (a, b) in f.modes().iter().zip(back.field.modes()) {
            assert_eq!(a.k, b.k);
            assert!((a.plus - b.plus).norm() < 1e-12 && (a.minus - b.minus).norm() < 1e-12);
        }
        assert!(back.compressive_rms < 1e-13);
        assert!(back.warnings.is_empty());
    }

    #[test]
    fn aliasing_rejected() {
        let f = five_modes();
        assert!(matches!(
            synthesize(&f, 9),
            Err(Error::Aliasing { required: 10, .. })
        ));
    }

    #[test]
    fn zero_field_synthesizes_to_zeros() {
        let g = synthesize(&SpectralField::zero(), 8).unwrap();
        assert!(g.components().iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn constant_field_is_discarded_with_warning() {
        let g = GridField::from_fn(8, Support::Torus, |_| Vec3::new(1.0, 2.0, 0.0));
        let a = analyze(&g);
        assert!(a.field.is_empty());
        assert!((a.mean - Vec3::new(1.0, 2.0, 0.0)).norm() < 1e-14);
        assert_eq!(a.warnings.len(), 1);
    }

    #[test]
    fn gradient_field_reported_as_compressive() {
        let g = GridField::from_fn(16, Support::Torus, |x| Vec3::new(x[0].cos(), 0.0, 0.0));
        let a = analyze(&g);
        assert!(a.field.is_empty());
        assert!((a.compressive_rms - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(!a.warnings.is_empty());
    }

    #[test]
    fn synthesized_divergence_vanishes() {
        let g = synthesize(&five_modes(), 24).unwrap();
        assert!(g.divergence_max() <= 1e-12 * g.max_norm());
    }

    #[test]
    fn parseval_and_helicity_quadrature() {
        let f = five_modes();
        let g = synthesize(&f, 32).unwrap();
        let a = synthesize(&f.vector_potential(), 32).unwrap();
        let j = synthesize(&f.curl(), 32).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        assert!(rel(g.inner(&g), f.energy()) < 1e-10);
        assert!(rel(a.inner(&g), f.helicity()) < 1e-10);
        assert!(rel(j.inner(&g), f.current_helicity()) < 1e-10);
    }
}
