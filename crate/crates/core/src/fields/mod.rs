//! Analytic and randomized test fields.
mod tube;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::basis::WaveVector;
use crate::spectral::field::{FieldBuilder, Mode, SpectralField};

pub use tube::{hopf_pair, twisted_tube, two_tubes, Profile, TubeField, TubeSet, TubeSpec};

/// `B = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`, a curl eigenfield with eigenvalue 1.
pub fn abc_field(a: f64, b: f64, c: f64) -> Result<SpectralField> {
    if a == 0.0 && b == 0.0 && c == 0.0 {
        return Err(Error::InvalidParameter(
            "ABC amplitudes are all zero".into(),
        ));
    }
    let half = |s: f64| Complex64::new(0.5 * s, 0.0);
    let ihalf = |s: f64| Complex64::new(0.0, -0.5 * s);
    let zero = Complex64::new(0.0, 0.0);
    let mut builder = FieldBuilder::default();
    builder.add_vector(WaveVector::new(0, 0, 1), [ihalf(a), half(a), zero])?;
    builder.add_vector(WaveVector::new(1, 0, 0), [zero, ihalf(b), half(b)])?;
    builder.add_vector(WaveVector::new(0, 1, 0), [half(c), zero, ihalf(c)])?;
    Ok(builder.build().0)
}

/// Single circularly polarized wave `B = B0 (cos kz, −sin kz, 0)` with `curl B = k B`.
pub fn circular_wave(b0: f64, k: i32) -> Result<SpectralField> {
    if k < 1 {
        return Err(Error::InvalidParameter(format!(
            "wave number must be ≥ 1, got {k}"
        )));
    }
    SpectralField::single(
        WaveVector::new(0, 0, k),
        Complex64::new(b0 / std::f64::consts::SQRT_2, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// Half-space wave vectors with `1 ≤ |k| ≤ kmax`, in ascending order.
pub fn ball_wave_vectors(kmax: i32) -> Vec<WaveVector> {
    let r2 = (kmax as i64).pow(2);
    let mut out = Vec::new();
    for n1 in -kmax..=kmax {
        for n2 in -kmax..=kmax {
            for n3 in -kmax..=kmax {
                let k = WaveVector::new(n1, n2, n3);
                if k.in_half_space() && k.norm_sq() <= r2 {
                    out.push(k);
                }
            }
        }
    }
    out.sort();
    out
}

/// Random-phase field whose shell sums of `|c±|²` follow `γ±² s^{−2α}`.
///
/// Each populated shell `s = round(|k|)` distributes its amplitude evenly over
/// its half-space lattice vectors, so per-mode magnitudes are
/// `γ± s^{−α}/√M_s`. Phases are uniform, drawn in ascending wave-vector order
/// from a ChaCha8 stream seeded with `seed`.
pub fn random_powerlaw(
    alpha: f64,
    gamma_plus: f64,
    gamma_minus: f64,
    kmax: i32,
    seed: u64,
) -> Result<SpectralField> {
    if kmax < 4 {
        return Err(Error::InvalidParameter(format!(
            "kmax must be ≥ 4, got {kmax}"
        )));
    }
    if alpha <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must exceed 1, got {alpha}"
        )));
    }
    let ks = ball_wave_vectors(kmax);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for k in &ks {
        *counts.entry(k.shell()).or_default() += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 2.0 * std::f64::consts::PI;
    let modes: Vec<Mode> = ks
        .into_iter()
        .map(|k| {
            let s = k.shell();
            let mag = (s as f64).powf(-alpha) / (counts[&s] as f64).sqrt();
            let p1: f64 = rng.gen::<f64>() * tau;
            let p2: f64 = rng.gen::<f64>() * tau;
            Mode {
                k,
                plus: Complex64::from_polar(gamma_plus * mag, p1),
                minus: Complex64::from_polar(gamma_minus * mag, p2),
            }
        })
        .collect();
    SpectralField::from_modes(modes)
}
