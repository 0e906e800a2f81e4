//! Periodic tricubic B-spline interpolation of a spectral field and its potential.
use super::basis::{cscale, CVec3};
use super::fft::fft_size;
use super::field::SpectralField;
use super::grid::synthesize_vectors;
use crate::vec3::Vec3;
use crate::BOX_LENGTH;

use num_complex::Complex64;

/// Cubic B-spline interpolant of `B` and `A` on a periodic grid.
///
/// Coefficients come from an exact spectral prefilter, so the spline
/// interpolates the grid samples of the truncated Fourier sum.
#[derive(Debug, Clone)]
pub struct SplineField {
    n: usize,
    coef: Vec<[f64; 6]>,
}

fn bspline_symbol(m: i32, n: usize) -> f64 {
    (4.0 + 2.0 * (2.0 * std::f64::consts::PI * m as f64 / n as f64).cos()) / 6.0
}

#[inline]
fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

impl SplineField {
    /// Grid size used by default: the smallest FFT-friendly size ≥ 4·kmax.
    pub fn default_size(f: &SpectralField) -> usize {
        fft_size((4 * f.max_wave().max(1)) as usize)
    }

    pub fn new(field: &SpectralField, potential: &SpectralField, n: usize) -> Self {
        let needed = 2 * field.max_wave().max(potential.max_wave()) as usize + 2;
        assert!(n >= needed, "spline grid {n} aliases modes (need {needed})");
        let prefilter = |f: &SpectralField| {
            synthesize_vectors(
                n,
                f.modes().iter().map(|m| {
                    let s: f64 = m.k.0.iter().map(|&c| bspline_symbol(c, n)).product();
                    let v: CVec3 = cscale(&m.vector(), Complex64::new(1.0 / s, 0.0));
                    (m.k, v)
                }),
            )
        };
        let b = prefilter(field);
        let a = prefilter(potential);
        let coef = (0..n * n * n)
            .map(|i| [b[0][i], b[1][i], b[2][i], a[0][i], a[1][i], a[2][i]])
            .collect();
        SplineField { n, coef }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field_and_potential(&self, x: Vec3) -> (Vec3, Vec3) {
        let n = self.n;
        let inv_h = n as f64 / BOX_LENGTH;
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        for d in 0..3 {
            let u = x[d] * inv_h;
            let fl = u.floor();
            w[d] = weights(u - fl);
            base[d] = ((fl as i64 - 1).rem_euclid(n as i64)) as usize;
        }
        let wrap = |b: usize, o: usize| {
            let i = b + o;
            if i >= n {
                i - n
            } else {
                i
            }
        };
        let mut acc = [0.0; 6];
        for oz in 0..4 {
            let iz = wrap(base[2], oz);
            for oy in 0..4 {
                let iy = wrap(base[1], oy);
                let wyz = w[2][oz] * w[1][oy];
                let row = (iz * n + iy) * n;
                for ox in 0..4 {
                    let c = &self.coef[row + wrap(base[0], ox)];
                    let wt = wyz * w[0][ox];
                    for j in 0..6 {
                        acc[j] += wt * c[j];
                    }
                }
            }
        }
        (
            Vec3([acc[0], acc[1], acc[2]]),
            Vec3([acc[3], acc[4], acc[5]]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::basis::WaveVector;
    use crate::spectral::field::{ExactEvaluator, Mode};

    #[test]
    fn weights_partition_unity() {
        for t in [0.0, 0.3, 0.77, 1.0] {
            assert!((weights(t).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolates_grid_nodes_exactly() {
        let f = SpectralField::single(
            WaveVector::new(1, 2, 0),
            Complex64::new(0.5, 0.1),
            Complex64::new(0.0, 0.3),
        )
        .unwrap();
        let a = f.vector_potential();
        let s = SplineField::new(&f, &a, 16);
        let ex = ExactEvaluator::new(&f, None);
        let h = BOX_LENGTH / 16.0;
        for p in [[0, 0, 0], [3, 5, 7], [15, 1, 9]] {
            let x = Vec3::new(p[0] as f64 * h, p[1] as f64 * h, p[2] as f64 * h);
            let (b, aa) = s.field_and_potential(x);
            let (be, ae) = ex.field_and_potential(x);
            assert!((b - be).norm() < 1e-13 && (aa - ae).norm() < 1e-13);
        }
    }

    #[test]
    fn matches_exact_sum_off_grid() {
        let c = |re, im| Complex64::new(re, im);
        let f = SpectralField::from_modes([
            Mode {
                k: WaveVector::new(1, 0, 0),
                plus: c(0.3, -0.2),
                minus: c(0.1, 0.05),
            },
            Mode {
                k: WaveVector::new(0, 1, 1),
                plus: c(-0.4, 0.1),
                minus: c(0.0, 0.2),
            },
            Mode {
                k: WaveVector::new(-1, 1, 0),
                plus: c(0.05, 0.05),
                minus: c(-0.1, 0.0),
            },
            Mode {
                k: WaveVector::new(0, 0, 1),
                plus: c(0.2, 0.0),
                minus: c(0.0, -0.3),
            },
            Mode {
                k: WaveVector::new(1, -1, 1),
                plus: c(0.0, 0.1),
                minus: c(0.15, 0.0),
            },
        ])
        .unwrap();
        let s = SplineField::new(&f, &f.vector_potential(), 64);
        let ex = ExactEvaluator::new(&f, None);
        let mut worst = 0.0f64;
        for i in 0..50 {
            let t = i as f64 * 0.731;
            let x = Vec3::new(t.sin() * 3.0 + 3.0, (1.3 * t).cos() * 3.0 + 3.0, t % 6.2);
            worst = worst.max((s.field_and_potential(x).0 - ex.field(x)).norm());
        }
        assert!(worst < 1e-6, "spline error {worst}");
    }
}
