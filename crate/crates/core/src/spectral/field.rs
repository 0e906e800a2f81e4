use std::collections::BTreeMap;

use num_complex::Complex64;

use super::basis::{cadd, cconj, cdot, cscale, helical_basis, CVec3, WaveVector, CZERO};
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use crate::{BOX_LENGTH, VOLUME};

/// Helical amplitudes of one stored wave vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: WaveVector,
    pub plus: Complex64,
    pub minus: Complex64,
}

impl Mode {
    /// Complex vector amplitude `c⁺h⁺ + c⁻h⁻`.
    pub fn vector(&self) -> CVec3 {
        let b = helical_basis(self.k).expect("stored modes are nonzero");
        cadd(&cscale(&b.plus, self.plus), &cscale(&b.minus, self.minus))
    }

    fn power(&self) -> f64 {
        self.plus.norm_sqr() + self.minus.norm_sqr()
    }
}

/// Divergence-free, zero-mean periodic field in the helical basis.
///
/// Only half-space wave vectors are stored; the real field is
/// `B(x) = Σ (c⁺h⁺ + c⁻h⁻) e^{ik·x} + c.c.` on the box `[0, 2π)³`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralField {
    modes: Vec<Mode>,
}

impl SpectralField {
    pub fn zero() -> Self {
        SpectralField::default()
    }

    /// Builds a field from half-space modes; repeated wave vectors are summed.
    pub fn from_modes<I: IntoIterator<Item = Mode>>(modes: I) -> Result<Self> {
        let mut map: BTreeMap<WaveVector, (Complex64, Complex64)> = BTreeMap::new();
        for m in modes {
            if m.k.is_zero() {
                return Err(Error::ZeroWaveVector);
            }
            if !m.k.in_half_space() {
                let [a, b, c] = m.k.0;
                return Err(Error::NotInHalfSpace(a, b, c));
            }
            let e = map.entry(m.k).or_insert((CZERO, CZERO));
            e.0 += m.plus;
            e.1 += m.minus;
        }
        Ok(SpectralField {
            modes: map
                .into_iter()
                .map(|(k, (plus, minus))| Mode { k, plus, minus })
                .collect(),
        })
    }

    pub fn single(k: WaveVector, plus: Complex64, minus: Complex64) -> Result<Self> {
        SpectralField::from_modes([Mode { k, plus, minus }])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn get(&self, k: WaveVector) -> Option<&Mode> {
        self.modes
            .binary_search_by(|m| m.k.cmp(&k))
            .ok()
            .map(|i| &self.modes[i])
    }

    /// Largest absolute wave-number component.
    pub fn max_wave(&self) -> i32 {
        self.modes.iter().map(|m| m.k.max_abs()).max().unwrap_or(0)
    }

    /// Smallest populated `|k|`, or `None` for the zero field.
    pub fn min_norm(&self) -> Option<f64> {
        self.modes
            .iter()
            .filter(|m| m.power() > 0.0)
            .map(|m| m.k.norm())
            .min_by(|a, b| a.total_cmp(b))
    }

    fn map_modes(&self, f: impl Fn(&Mode) -> (Complex64, Complex64)) -> SpectralField {
        SpectralField {
            modes: self
                .modes
                .iter()
                .map(|m| {
                    let (plus, minus) = f(m);
                    Mode {
                        k: m.k,
                        plus,
                        minus,
                    }
                })
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        self.map_modes(|m| (m.plus * s, m.minus * s))
    }

    /// Applies `c± ↦ c± · factor(±|k|)`, e.g. an integrating factor.
    pub fn apply_eigen_factor(&self, factor: impl Fn(f64) -> f64) -> SpectralField {
        self.map_modes(|m| {
            let k = m.k.norm();
            (m.plus * factor(k), m.minus * factor(-k))
        })
    }

    /// `curl`: `c± ↦ ±|k| c±`.
    pub fn curl(&self) -> SpectralField {
        self.apply_eigen_factor(|lambda| lambda)
    }

    /// Zero-mean Coulomb-gauge vector potential: `c± ↦ ±c±/|k|`.
    pub fn vector_potential(&self) -> SpectralField {
        self.apply_eigen_factor(|lambda| 1.0 / lambda)
    }

    /// Point reflection `B'(x) = -B(-x)`.
    pub fn mirrored(&self) -> SpectralField {
        // conj(h⁺(k)) = h⁻(k), so the reflected amplitudes swap helicity
        self.map_modes(|m| (-m.minus.conj(), -m.plus.conj()))
    }

    /// `U = ∫ |B|² dV = 2·Vol·Σ(|c⁺|² + |c⁻|²)`.
    pub fn energy(&self) -> f64 {
        2.0 * VOLUME * self.modes.iter().map(Mode::power).sum::<f64>()
    }

    /// `χ = ∫ (A, B) dV = 2·Vol·Σ(|c⁺|² − |c⁻|²)/|k|`.
    pub fn helicity(&self) -> f64 {
        2.0 * VOLUME
            * self
                .modes
                .iter()
                .map(|m| (m.plus.norm_sqr() - m.minus.norm_sqr()) / m.k.norm())
                .sum::<f64>()
    }

    /// `χᶜ = ∫ (B, curl B) dV = 2·Vol·Σ|k|(|c⁺|² − |c⁻|²)`.
    pub fn current_helicity(&self) -> f64 {
        2.0 * VOLUME
            * self
                .modes
                .iter()
                .map(|m| (m.plus.norm_sqr() - m.minus.norm_sqr()) * m.k.norm())
                .sum::<f64>()
    }

    /// Sum of two fields.
    pub fn add(&self, other: &SpectralField) -> SpectralField {
        SpectralField::from_modes(self.modes.iter().chain(other.modes.iter()).copied())
            .expect("both operands hold valid modes")
    }

    /// Exact truncated Fourier sum at `x`.
    pub fn evaluate_point(&self, x: Vec3) -> Vec3 {
        ExactEvaluator::new(self, None).field(x)
    }

    /// Rotates the field by a signed permutation matrix `r` (det +1):
    /// `B'(x) = R B(Rᵀx)`, an exact volume-preserving symmetry of the lattice.
    pub fn lattice_rotated(&self, r: [[i32; 3]; 3]) -> Result<SpectralField> {
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        let orthogonal = (0..3).all(|i| {
            (0..3).all(|j| {
                let d: i32 = (0..3).map(|l| r[i][l] * r[j][l]).sum();
                d == i32::from(i == j)
            })
        });
        if det != 1 || !orthogonal {
            return Err(Error::InvalidParameter(
                "rotation must be a signed permutation with det +1".into(),
            ));
        }
        let mut builder = FieldBuilder::default();
        for m in &self.modes {
            let k = m.k.0;
            let kr = WaveVector([0, 1, 2].map(|i| (0..3).map(|j| r[i][j] * k[j]).sum()));
            let b = m.vector();
            let br: CVec3 =
                [0, 1, 2].map(|i| (0..3).fold(CZERO, |acc, j| acc + b[j] * r[i][j] as f64));
            builder.add_vector(kr, br)?;
        }
        Ok(builder.build().0)
    }
}

/// Accumulates complex vector amplitudes at arbitrary nonzero wave vectors
/// and projects them onto the helical basis.
#[derive(Debug, Default, Clone)]
pub struct FieldBuilder {
    vectors: BTreeMap<WaveVector, CVec3>,
}

impl FieldBuilder {
    /// Adds `b̂ e^{ik·x}`; the conjugate partner is implied.
    pub fn add_vector(&mut self, k: WaveVector, bhat: CVec3) -> Result<()> {
        if k.is_zero() {
            return Err(Error::ZeroWaveVector);
        }
        let (key, v) = if k.in_half_space() {
            (k, bhat)
        } else {
            (k.neg(), cconj(&bhat))
        };
        let e = self.vectors.entry(key).or_insert([CZERO; 3]);
        *e = cadd(e, &v);
        Ok(())
    }

    /// Projects onto `h±`; returns the field and the RMS of the discarded
    /// compressive (k-parallel) part.
    pub fn build(self) -> (SpectralField, f64) {
        let mut compressive = 0.0;
        let mut modes = Vec::with_capacity(self.vectors.len());
        for (k, v) in self.vectors {
            let b = helical_basis(k).expect("nonzero");
            let kh = k.as_vec3().normalized();
            let kc: CVec3 = [0, 1, 2].map(|i| Complex64::new(kh[i], 0.0));
            let par = cdot(&kc, &v).norm_sqr();
            compressive += par;
            let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            // purely compressive vectors leave no solenoidal mode behind
            if total - par <= 1e-26 * total {
                continue;
            }
            modes.push(Mode {
                k,
                plus: cdot(&b.plus, &v),
                minus: cdot(&b.minus, &v),
            });
        }
        (SpectralField { modes }, (2.0 * compressive).sqrt())
    }
}

/// Per-axis phase table `e^{i n x}` for `n ∈ [-K, K]`.
fn phases(x: f64, kmax: i32, out: &mut Vec<Complex64>) {
    out.clear();
    out.extend((-kmax..=kmax).map(|n| Complex64::from_polar(1.0, n as f64 * x)));
}

/// Exact Fourier-sum evaluator of a field and (optionally) its potential.
#[derive(Debug, Clone)]
pub struct ExactEvaluator {
    kmax: i32,
    idx: Vec<[usize; 3]>,
    field: Vec<CVec3>,
    potential: Vec<CVec3>,
}

impl ExactEvaluator {
    /// `potential` defaults to the Coulomb-gauge potential of `field`.
    pub fn new(field: &SpectralField, potential: Option<&SpectralField>) -> Self {
        let pot = potential
            .cloned()
            .unwrap_or_else(|| field.vector_potential());
        let mut merged: BTreeMap<WaveVector, (CVec3, CVec3)> = BTreeMap::new();
        for m in field.modes() {
            merged.entry(m.k).or_insert(([CZERO; 3], [CZERO; 3])).0 = m.vector();
        }
        for m in pot.modes() {
            merged.entry(m.k).or_insert(([CZERO; 3], [CZERO; 3])).1 = m.vector();
        }
        let kmax = field.max_wave().max(pot.max_wave());
        let mut idx = Vec::with_capacity(merged.len());
        let mut f = Vec::with_capacity(merged.len());
        let mut a = Vec::with_capacity(merged.len());
        for (k, (bv, av)) in merged {
            idx.push(k.0.map(|c| (c + kmax) as usize));
            f.push(bv);
            a.push(av);
        }
        ExactEvaluator {
            kmax,
            idx,
            field: f,
            potential: a,
        }
    }

    pub fn field_and_potential(&self, x: Vec3) -> (Vec3, Vec3) {
        let (mut px, mut py, mut pz) = (Vec::new(), Vec::new(), Vec::new());
        phases(x[0], self.kmax, &mut px);
        phases(x[1], self.kmax, &mut py);
        phases(x[2], self.kmax, &mut pz);
        let mut b = [0.0; 3];
        let mut a = [0.0; 3];
        for ((ix, bv), av) in self.idx.iter().zip(&self.field).zip(&self.potential) {
            let ph = px[ix[0]] * py[ix[1]] * pz[ix[2]];
            for c in 0..3 {
                b[c] += bv[c].re * ph.re - bv[c].im * ph.im;
                a[c] += av[c].re * ph.re - av[c].im * ph.im;
            }
        }
        (Vec3(b.map(|v| 2.0 * v)), Vec3(a.map(|v| 2.0 * v)))
    }

    pub fn field(&self, x: Vec3) -> Vec3 {
        self.field_and_potential(x).0
    }
}

/// Wraps a point into the periodic box.
pub fn wrap(x: Vec3) -> Vec3 {
    x.wrapped(BOX_LENGTH)
}
