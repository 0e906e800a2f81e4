//! Free-space vector potential of a compactly supported grid field.
//!
//! `W = G * B` with `G = 1/(4π|r|)` is computed by a zero-padded (Hockney)
//! FFT convolution and `A = curl W` by fourth-order central differences.
//! Results are accurate wherever the support stays a few cells away from
//! the box faces.
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::CZERO;
use super::fft::Fft3;
use super::grid::{GridField, Support};
use crate::error::{Error, Result};

/// `∫_{[-1/2,1/2]³} dV/|r|`, the cell average of the singular kernel.
const CELL_SELF_INTEGRAL: f64 = 2.380_077_2;

pub fn biot_savart_potential(b: &GridField) -> Result<GridField> {
    if !matches!(b.support(), Support::Ball { .. }) {
        return Err(Error::NotBallSupported);
    }
    let n = b.n();
    let m = 2 * n;
    let h = b.spacing();
    let fft = Fft3::new(m);
    let four_pi = 4.0 * std::f64::consts::PI;
    let mut kernel = vec![CZERO; m * m * m];
    for iz in 0..m {
        let dz = if iz < n {
            iz as f64
        } else {
            iz as f64 - m as f64
        };
        for iy in 0..m {
            let dy = if iy < n {
                iy as f64
            } else {
                iy as f64 - m as f64
            };
            for ix in 0..m {
                let dx = if ix < n {
                    ix as f64
                } else {
                    ix as f64 - m as f64
                };
                let r = (dx * dx + dy * dy + dz * dz).sqrt() * h;
                let g = if r == 0.0 {
                    CELL_SELF_INTEGRAL / (four_pi * h)
                } else {
                    1.0 / (four_pi * r)
                };
                kernel[(iz * m + iy) * m + ix] = Complex64::new(g * h.powi(3), 0.0);
            }
        }
    }
    fft.forward(&mut kernel);
    let scale = 1.0 / (m.pow(3) as f64);
    let w: Vec<Vec<f64>> = (0..3)
        .into_par_iter()
        .map(|c| {
            let mut buf = vec![CZERO; m * m * m];
            let src = b.component(c);
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        buf[(iz * m + iy) * m + ix] =
                            Complex64::new(src[(iz * n + iy) * n + ix], 0.0);
                    }
                }
            }
            fft.forward(&mut buf);
            for (v, k) in buf.iter_mut().zip(&kernel) {
                *v *= k * scale;
            }
            fft.inverse(&mut buf);
            let mut out = vec![0.0; n * n * n];
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        out[(iz * n + iy) * n + ix] = buf[(iz * m + iy) * m + ix].re;
                    }
                }
            }
            out
        })
        .collect();
    let d = |comp: &[f64], axis: usize, i: usize| -> f64 {
        let stride = n.pow(axis as u32);
        let coord = (i / stride) % n;
        let at = |o: i64| {
            let c = (coord as i64 + o).rem_euclid(n as i64) as usize;
            comp[i - coord * stride + c * stride]
        };
        (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)
    };
    let len = n * n * n;
    let mut a = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    for i in 0..len {
        a[0][i] = d(&w[2], 1, i) - d(&w[1], 2, i);
        a[1][i] = d(&w[0], 2, i) - d(&w[2], 0, i);
        a[2][i] = d(&w[1], 0, i) - d(&w[0], 1, i);
    }
    GridField::new(n, a, Support::Torus)
}
