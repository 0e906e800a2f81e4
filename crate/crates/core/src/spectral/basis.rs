use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Complex 3-vector.
pub type CVec3 = [Complex64; 3];

pub(crate) const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Integer wave vector on the 2π-periodic box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveVector(pub [i32; 3]);

impl WaveVector {
    pub const fn new(n1: i32, n2: i32, n3: i32) -> Self {
        WaveVector([n1, n2, n3])
    }

    pub fn is_zero(self) -> bool {
        self.0 == [0, 0, 0]
    }

    pub fn norm_sq(self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Shell index `round(|k|)`.
    pub fn shell(self) -> usize {
        self.norm().round() as usize
    }

    pub fn max_abs(self) -> i32 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Lexicographic half-space: the last nonzero component is positive.
    pub fn in_half_space(self) -> bool {
        let [a, b, c] = self.0;
        c > 0 || (c == 0 && (b > 0 || (b == 0 && a > 0)))
    }

    pub fn neg(self) -> Self {
        WaveVector(self.0.map(|c| -c))
    }

    pub fn as_vec3(self) -> Vec3 {
        Vec3(self.0.map(|c| c as f64))
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Unit helical polarization vectors `h±` with `i k̂ × h± = ± h±`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelicalBasis {
    pub plus: CVec3,
    pub minus: CVec3,
}

/// Builds `h± = (û ± i v̂)/√2` with `û = k̂×ẑ/|k̂×ẑ|` (or `x̂` when `k ∥ ẑ`) and `v̂ = k̂×û`.
pub fn helical_basis(k: WaveVector) -> Result<HelicalBasis> {
    if k.is_zero() {
        return Err(Error::ZeroWaveVector);
    }
    let khat = k.as_vec3().normalized();
    let u = if k.0[0] == 0 && k.0[1] == 0 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        khat.cross(Vec3::new(0.0, 0.0, 1.0)).normalized()
    };
    let v = khat.cross(u);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [0, 1, 2].map(|i| Complex64::new(u[i] * s, v[i] * s));
    let minus = [0, 1, 2].map(|i| Complex64::new(u[i] * s, -v[i] * s));
    Ok(HelicalBasis { plus, minus })
}

/// Hermitian inner product `⟨a, b⟩ = Σ conj(a_i) b_i`.
#[inline]
pub fn cdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]
}

#[inline]
pub fn cscale(a: &CVec3, s: Complex64) -> CVec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn cadd(a: &CVec3, b: &CVec3) -> CVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn cconj(a: &CVec3) -> CVec3 {
    [a[0].conj(), a[1].conj(), a[2].conj()]
}

/// `i k × a` for a real vector `k`.
#[inline]
pub fn i_cross(k: Vec3, a: &CVec3) -> CVec3 {
    let i = Complex64::new(0.0, 1.0);
    [
        i * (a[2] * k[1] - a[1] * k[2]),
        i * (a[0] * k[2] - a[2] * k[0]),
        i * (a[1] * k[0] - a[0] * k[1]),
    ]
}
