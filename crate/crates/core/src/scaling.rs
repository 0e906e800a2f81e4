//! Shell spectra of quadratic and quartic quantities, slope fits and the Arnold check.
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::fft::{fft_size, index_to_wave, Fft3};
use crate::spectral::field::SpectralField;
use crate::spectral::grid::{synthesize, GridField};
use crate::VOLUME;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Energy,
    Helicity,
    EnergySq,
    HelicitySq,
    Delta2,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Energy => "energy",
            Quantity::Helicity => "helicity",
            Quantity::EnergySq => "energy_sq",
            Quantity::HelicitySq => "helicity_sq",
            Quantity::Delta2 => "delta2",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Quantity::Energy,
            Quantity::Helicity,
            Quantity::EnergySq,
            Quantity::HelicitySq,
            Quantity::Delta2,
        ]
        .into_iter()
        .find(|q| q.name() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown spectrum quantity '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub k: usize,
    pub value: f64,
    /// Number of lattice vectors `k ≠ 0` with `round(|k|)` equal to the shell index.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub kmin: usize,
    pub kmax: usize,
    pub used: usize,
    pub notice: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellSpectrum {
    pub quantity: Quantity,
    pub shells: Vec<Shell>,
    pub fit: Option<SlopeFit>,
}

impl ShellSpectrum {
    pub fn total(&self) -> f64 {
        self.shells.iter().map(|s| s.value).sum()
    }

    pub fn value(&self, k: usize) -> f64 {
        self.shells.get(k).map_or(0.0, |s| s.value)
    }

    /// Fits and stores the slope over `[kmin, kmax]`.
    pub fn with_fit(mut self, kmin: usize, kmax: usize) -> Result<Self> {
        self.fit = Some(fit_slope(&self, kmin, kmax)?);
        Ok(self)
    }

    fn from_values(quantity: Quantity, values: Vec<f64>) -> Self {
        let counts = lattice_counts(values.len().saturating_sub(1));
        let shells = values
            .into_iter()
            .zip(counts)
            .enumerate()
            .map(|(k, (value, count))| Shell { k, value, count })
            .collect();
        ShellSpectrum {
            quantity,
            shells,
            fit: None,
        }
    }
}

/// Lattice multiplicities of shells `0..=smax` (shell 0 excludes the origin).
pub fn lattice_counts(smax: usize) -> Vec<usize> {
    let mut counts = vec![0; smax + 1];
    let r = smax as i32 + 1;
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                if a == 0 && b == 0 && c == 0 {
                    continue;
                }
                let s = (((a * a + b * b + c * c) as f64).sqrt()).round() as usize;
                if s <= smax {
                    counts[s] += 1;
                }
            }
        }
    }
    counts
}

/// Per-shell energy or helicity; shells sum to `U` or `χ`.
pub fn shell_spectrum(field: &SpectralField, quantity: Quantity) -> Result<ShellSpectrum> {
    let smax = field.modes().iter().map(|m| m.k.shell()).max().unwrap_or(0);
    let mut values = vec![0.0; smax + 1];
    for m in field.modes() {
        let (p, q) = (m.plus.norm_sqr(), m.minus.norm_sqr());
        values[m.k.shell()] += 2.0
            * VOLUME
            * match quantity {
                Quantity::Energy => p + q,
                Quantity::Helicity => (p - q) / m.k.norm(),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "{other} is not a quadratic shell quantity"
                    )));
                }
            };
    }
    Ok(ShellSpectrum::from_values(quantity, values))
}

/// Grid size on which the quartic densities are resolved exactly.
pub fn product_grid_size(field: &SpectralField) -> usize {
    fft_size(4 * field.max_wave().max(1) as usize + 1)
}

/// Spectrum of `U²`, `χ²` or `δ⁽²⁾` on the exact grid.
pub fn product_spectrum(field: &SpectralField, quantity: Quantity) -> Result<ShellSpectrum> {
    product_spectrum_on(field, quantity, product_grid_size(field))
}

/// As [`product_spectrum`] on an `n³` grid; undersized grids alias and are reported.
///
/// `energy_sq` and `delta2` shell the squared transform of `|B|²` and `(A, B)`, so they
/// sum to `∫|B|⁴` and `δ⁽²⁾`. `helicity_sq` pairs helicity shells by their larger index,
/// `X_s = H_s² + 2 H_s Σ_{s'<s} H_{s'}`, and sums to `χ²`.
pub fn product_spectrum_on(
    field: &SpectralField,
    quantity: Quantity,
    n: usize,
) -> Result<ShellSpectrum> {
    match quantity {
        Quantity::HelicitySq => {
            let h = shell_spectrum(field, Quantity::Helicity)?;
            let mut below = 0.0;
            let values = h
                .shells
                .iter()
                .map(|s| {
                    let x = s.value * s.value + 2.0 * s.value * below;
                    below += s.value;
                    x
                })
                .collect();
            Ok(ShellSpectrum::from_values(quantity, values))
        }
        Quantity::EnergySq | Quantity::Delta2 => {
            let required = product_grid_size(field);
            if n < required {
                log::warn!("{n}³ grid aliases the {quantity} density; {required}³ required");
            }
            let b = synthesize(field, n)?;
            let density = if quantity == Quantity::EnergySq {
                density_of(&b, None, |x, _| x.norm_sq())
            } else {
                let a = synthesize(&field.vector_potential(), n)?;
                density_of(&b, Some(&a), |x, y| x.dot(y))
            };
            Ok(ShellSpectrum::from_values(
                quantity,
                shell_power(density, n),
            ))
        }
        other => Err(Error::InvalidParameter(format!(
            "{other} is not a product quantity"
        ))),
    }
}

fn density_of(
    b: &GridField,
    a: Option<&GridField>,
    f: impl Fn(crate::Vec3, crate::Vec3) -> f64,
) -> Vec<f64> {
    (0..b.n().pow(3))
        .map(|i| f(b.at(i), a.map_or(b.at(i), |a| a.at(i))))
        .collect()
}

/// `Vol Σ |f̂_k|²` binned by shell, for real samples `f`.
fn shell_power(f: Vec<f64>, n: usize) -> Vec<f64> {
    let len = n * n * n;
    let mut buf: Vec<Complex64> = f
        .into_iter()
        .map(|x| Complex64::new(x / len as f64, 0.0))
        .collect();
    Fft3::new(n).forward(&mut buf);
    let mut bins: BTreeMap<usize, f64> = BTreeMap::new();
    for (i, z) in buf.iter().enumerate() {
        let k = [
            index_to_wave(i % n, n),
            index_to_wave((i / n) % n, n),
            index_to_wave(i / (n * n), n),
        ];
        let s =
            ((k.iter().map(|&c| (c as i64).pow(2)).sum::<i64>() as f64).sqrt()).round() as usize;
        *bins.entry(s).or_default() += VOLUME * z.norm_sqr();
    }
    let smax = bins.keys().next_back().copied().unwrap_or(0);
    (0..=smax)
        .map(|s| bins.get(&s).copied().unwrap_or(0.0))
        .collect()
}

/// Least squares of `log value` on `log k` over shells `kmin..=kmax`.
pub fn fit_slope(spec: &ShellSpectrum, kmin: usize, kmax: usize) -> Result<SlopeFit> {
    let in_range: Vec<&Shell> = spec
        .shells
        .iter()
        .filter(|s| s.k >= kmin.max(1) && s.k <= kmax)
        .collect();
    let usable: Vec<&Shell> = in_range.iter().copied().filter(|s| s.value > 0.0).collect();
    let notice = (usable.len() < in_range.len()).then(|| {
        let n = in_range.len() - usable.len();
        log::info!(
            "dropped {n} nonpositive shells from the {} fit",
            spec.quantity
        );
        format!("{n} nonpositive shells dropped")
    });
    if usable.len() < 5 {
        return Err(Error::TooFewShells {
            need: 5,
            got: usable.len(),
        });
    }
    let pts: Vec<(f64, f64)> = usable
        .iter()
        .map(|s| ((s.k as f64).ln(), s.value.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
        kmin: usable[0].k,
        kmax: usable[usable.len() - 1].k,
        used: usable.len(),
        notice,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldCheck {
    pub energy: f64,
    pub helicity_abs: f64,
    /// Smallest populated `|k|`.
    pub kmin: f64,
    /// `U/|χ|` (infinite for zero helicity).
    pub effective_constant: f64,
    pub holds: bool,
}

/// Checks `U ≥ kmin |χ|` on the torus.
pub fn arnold_check(field: &SpectralField) -> ArnoldCheck {
    let energy = field.energy();
    let helicity_abs = field.helicity().abs();
    let kmin = field.min_norm().unwrap_or(0.0);
    let effective_constant = if helicity_abs > 0.0 {
        energy / helicity_abs
    } else {
        f64::INFINITY
    };
    ArnoldCheck {
        energy,
        helicity_abs,
        kmin,
        effective_constant,
        holds: energy >= kmin * helicity_abs * (1.0 - 1e-12),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{abc_field, circular_wave, random_powerlaw};
    use crate::spectral::WaveVector;

    #[test]
    fn single_mode_single_shell() {
        let f = circular_wave(1.0, 3).unwrap();
        let s = shell_spectrum(&f, Quantity::Energy).unwrap();
        let nonzero: Vec<usize> = s
            .shells
            .iter()
            .filter(|s| s.value != 0.0)
            .map(|s| s.k)
            .collect();
        assert_eq!(nonzero, vec![3]);
        assert!((s.total() - f.energy()).abs() < 1e-12 * f.energy());
    }

    #[test]
    fn lattice_multiplicities() {
        let c = lattice_counts(2);
        // shell 1: |k|² ∈ {1, 2}: 6 + 12; shell 2: |k|² ∈ {3, 4, 5, 6}: 8 + 6 + 24 + 24
        assert_eq!(c, vec![0, 18, 62]);
    }

    #[test]
    fn exact_power_law_fit() {
        let values = (0..20)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    3.0 * (k as f64).powi(-2)
                }
            })
            .collect();
        let s = ShellSpectrum::from_values(Quantity::Energy, values);
        let fit = fit_slope(&s, 2, 19).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-10 && fit.stderr < 1e-6);
        assert!(matches!(
            fit_slope(&s, 4, 4),
            Err(Error::TooFewShells { .. })
        ));
    }

    #[test]
    fn nonpositive_shells_dropped() {
        let values = (0..12)
            .map(|k| {
                if k % 3 == 0 {
                    0.0
                } else {
                    (k as f64).powf(-1.5)
                }
            })
            .collect();
        let fit = fit_slope(&ShellSpectrum::from_values(Quantity::Energy, values), 1, 11).unwrap();
        assert!(fit.notice.is_some() && (fit.slope + 1.5).abs() < 1e-10);
    }

    #[test]
    fn product_spectra_sum_rules() {
        let f = random_powerlaw(5.0 / 3.0, 1.0, 0.3, 4, 3).unwrap();
        let n = product_grid_size(&f);
        let b = synthesize(&f, n).unwrap();
        let u4 = b.integrate(|x| x.norm_sq().powi(2));
        let e2 = product_spectrum(&f, Quantity::EnergySq).unwrap();
        assert!((e2.total() - u4).abs() < 1e-8 * u4);
        let d = product_spectrum(&f, Quantity::Delta2).unwrap();
        let want = crate::invariants::delta2(&f).unwrap().value;
        assert!((d.total() - want).abs() < 1e-8 * want);
        let h2 = product_spectrum(&f, Quantity::HelicitySq).unwrap();
        assert!((h2.total() - f.helicity().powi(2)).abs() < 1e-10 * f.helicity().powi(2));
    }

    #[test]
    fn arnold_extremes() {
        let abc = arnold_check(&abc_field(1.0, 1.0, 1.0).unwrap());
        assert!(abc.holds && (abc.effective_constant - 1.0).abs() < 1e-12);
        let w = arnold_check(&circular_wave(1.0, 2).unwrap());
        assert!((w.energy - 2.0 * w.helicity_abs).abs() < 1e-12 * w.energy);
        let k = WaveVector::new(1, 1, 1);
        let f = SpectralField::single(k, Complex64::new(0.0, 1.0), Complex64::default()).unwrap();
        let c = arnold_check(&f);
        assert!(c.holds && (c.effective_constant - 3f64.sqrt()).abs() < 1e-12);
    }
}
