//! Closed magnetic flux tubes with exact divergence-free toroidal geometry.
//!
//! In the tube frame, with `ρ = R + r cos θ` and `z = r sin θ`,
//! `B = g(r)/ρ · (√(R² − r²) ê_φ − κ r ê_θ)`. Every line closes after one
//! toroidal circuit and `κ` poloidal turns, and each line links the flux `κΦ`
//! (positive κ gives right-handed twist and positive helicity).
use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::spectral::grid::{GridField, Support};
use crate::vec3::Vec3;
use crate::BOX_LENGTH;

/// Radial flux profile `g(r)` of a tube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `exp(1 − 1/(1 − (r/a)²))`, smooth with compact support.
    Bump,
    /// Constant inside the tube.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSpec {
    /// Major radius of the axis circle.
    pub major_radius: f64,
    /// Cross-section radius.
    pub minor_radius: f64,
    /// Poloidal windings per toroidal circuit.
    pub kappa: i32,
    /// Flux through the cross-section.
    pub flux: f64,
    pub center: Vec3,
    /// Unit normal of the axis-circle plane.
    pub normal: Vec3,
    pub profile: Profile,
}

impl TubeSpec {
    /// Tube centered in the box with its axis circle in the xy-plane.
    pub fn centered(major_radius: f64, minor_radius: f64, kappa: i32, flux: f64) -> Self {
        TubeSpec {
            major_radius,
            minor_radius,
            kappa,
            flux,
            center: Vec3::new(PI, PI, PI),
            normal: Vec3::new(0.0, 0.0, 1.0),
            profile: Profile::Bump,
        }
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = profile;
        self
    }

    /// Volume of the solid torus.
    pub fn volume(&self) -> f64 {
        2.0 * PI * PI * self.major_radius * self.minor_radius * self.minor_radius
    }

    /// Length of the axis circle.
    pub fn axis_length(&self) -> f64 {
        2.0 * PI * self.major_radius
    }

    fn validate(&self) -> Result<()> {
        let (r, a) = (self.major_radius, self.minor_radius);
        if !(a > 0.0 && r > 0.0 && self.flux > 0.0) {
            return Err(Error::InvalidParameter(
                "tube radii and flux must be positive".into(),
            ));
        }
        if a >= r {
            return Err(Error::InvalidParameter(format!(
                "minor radius {a} must be below major radius {r}"
            )));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(
                "tube normal must be a unit vector".into(),
            ));
        }
        Ok(())
    }
}

/// Local toroidal coordinates of a point.
struct Local {
    rho: f64,
    z: f64,
    r: f64,
    e_phi: Vec3,
    e_rho: Vec3,
}

/// Analytic field and vector potential of one tube.
#[derive(Debug, Clone)]
pub struct TubeField {
    spec: TubeSpec,
    e1: Vec3,
    e2: Vec3,
    /// Peak value of `g`.
    g0: f64,
    rule: GaussRule,
}

fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl TubeField {
    pub fn new(spec: TubeSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.normal;
        let helper = if n[0].abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        let e1 = helper.cross(n).normalized();
        let e2 = n.cross(e1);
        let rule = GaussRule::new(48);
        let a = spec.minor_radius;
        // Φ = 2π g0 a² ∫₀¹ s ĝ(s) ds
        let shape_integral = match spec.profile {
            Profile::Bump => rule.integrate(0.0, 1.0, |s| s * bump(s)),
            Profile::Uniform => 0.5,
        };
        let g0 = spec.flux / (2.0 * PI * a * a * shape_integral);
        Ok(TubeField {
            spec,
            e1,
            e2,
            g0,
            rule,
        })
    }

    pub fn spec(&self) -> &TubeSpec {
        &self.spec
    }

    /// Axial profile `g(r)`.
    pub fn profile(&self, r: f64) -> f64 {
        let s = r / self.spec.minor_radius;
        if s >= 1.0 {
            return 0.0;
        }
        match self.spec.profile {
            Profile::Bump => self.g0 * bump(s),
            Profile::Uniform => self.g0,
        }
    }

    fn local(&self, x: Vec3) -> Local {
        let p = x - self.spec.center;
        let z = p.dot(self.spec.normal);
        let (px, py) = (p.dot(self.e1), p.dot(self.e2));
        let rho = px.hypot(py);
        let (e_rho, e_phi) = if rho > 0.0 {
            (
                (self.e1 * px + self.e2 * py) / rho,
                (self.e2 * px - self.e1 * py) / rho,
            )
        } else {
            (self.e1, self.e2)
        };
        Local {
            rho,
            z,
            r: (rho - self.spec.major_radius).hypot(z),
            e_phi,
            e_rho,
        }
    }

    /// Position on the axis circle at toroidal angle `phi`.
    pub fn axis_point(&self, phi: f64) -> Vec3 {
        self.spec.center + (self.e1 * phi.cos() + self.e2 * phi.sin()) * self.spec.major_radius
    }

    /// Point at minor radius `r`, poloidal angle `theta`, toroidal angle `phi`.
    pub fn point(&self, r: f64, theta: f64, phi: f64) -> Vec3 {
        let radial = self.e1 * phi.cos() + self.e2 * phi.sin();
        self.spec.center
            + radial * (self.spec.major_radius + r * theta.cos())
            + self.spec.normal * (r * theta.sin())
    }

    /// Minor radius of `x` measured from the axis circle.
    pub fn minor_radius_of(&self, x: Vec3) -> f64 {
        self.local(x).r
    }

    pub fn field(&self, x: Vec3) -> Vec3 {
        let l = self.local(x);
        let g = self.profile(l.r);
        if g == 0.0 {
            return Vec3::ZERO;
        }
        let big_r = self.spec.major_radius;
        let (cos_t, sin_t) = if l.r > 0.0 {
            ((l.rho - big_r) / l.r, l.z / l.r)
        } else {
            (1.0, 0.0)
        };
        let e_theta = l.e_rho * (-sin_t) + self.spec.normal * cos_t;
        (l.e_phi * (big_r * big_r - l.r * l.r).sqrt() - e_theta * (self.spec.kappa as f64 * l.r))
            * (g / l.rho)
    }

    /// `Ψ(r) = κ ∫_r^a r' g(r') dr'`, the poloidal flux function.
    fn psi(&self, r: f64) -> f64 {
        let a = self.spec.minor_radius;
        if r >= a || self.spec.kappa == 0 {
            return 0.0;
        }
        let kappa = self.spec.kappa as f64;
        match self.spec.profile {
            Profile::Uniform => kappa * self.g0 * (a * a - r * r) / 2.0,
            Profile::Bump => kappa * self.rule.integrate(r, a, |s| s * self.profile(s)),
        }
    }

    /// Vector potential `A = (Ψ/ρ) ê_φ + a_z n̂` with `a_z(ρ,z) = ∫_ρ^∞ g√(R²−r²)/ρ' dρ'`.
    pub fn potential(&self, x: Vec3) -> Vec3 {
        let l = self.local(x);
        let (big_r, a) = (self.spec.major_radius, self.spec.minor_radius);
        let mut out = Vec3::ZERO;
        if l.r < a && l.rho > 0.0 {
            out += l.e_phi * (self.psi(l.r) / l.rho);
        }
        if l.z.abs() < a {
            let half = (a * a - l.z * l.z).sqrt();
            let lo = l.rho.max(big_r - half);
            let hi = big_r + half;
            if lo < hi {
                let az = self.rule.integrate(lo, hi, |rp| {
                    let r = (rp - big_r).hypot(l.z);
                    self.profile(r) * (big_r * big_r - r * r).max(0.0).sqrt() / rp
                });
                out += self.spec.normal * az;
            }
        }
        out
    }

    /// Time for the line through `x` to close, or `None` outside the tube.
    pub fn period(&self, x: Vec3) -> Option<f64> {
        let l = self.local(x);
        let g = self.profile(l.r);
        if g == 0.0 {
            return None;
        }
        let big_r = self.spec.major_radius;
        if self.spec.kappa != 0 {
            Some(2.0 * PI * big_r / g)
        } else {
            Some(2.0 * PI * l.rho * l.rho / (g * (big_r * big_r - l.r * l.r).sqrt()))
        }
    }

    /// Flux linked by every line: `κΦ`.
    pub fn linked_flux(&self) -> f64 {
        self.spec.kappa as f64 * self.spec.flux
    }

    /// Analytic helicity `κΦ²`.
    pub fn helicity(&self) -> f64 {
        self.spec.kappa as f64 * self.spec.flux * self.spec.flux
    }

    /// Bounding ball (center, radius) of the tube.
    pub fn bounding_ball(&self) -> (Vec3, f64) {
        (
            self.spec.center,
            self.spec.major_radius + self.spec.minor_radius,
        )
    }

    /// Uniform random point inside the solid torus.
    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let (big_r, a) = (self.spec.major_radius, self.spec.minor_radius);
        loop {
            let r = a * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            // volume element carries the factor ρ = R + r cos θ
            if rng.gen::<f64>() * (big_r + a) <= big_r + r * theta.cos() {
                return self.point(r, theta, 2.0 * PI * rng.gen::<f64>());
            }
        }
    }

    /// Distance from `x` to the axis circle.
    pub fn axis_distance(&self, x: Vec3) -> f64 {
        self.local(x).r
    }
}

/// Superposition of tubes with disjoint supports.
#[derive(Debug, Clone)]
pub struct TubeSet {
    tubes: Vec<TubeField>,
    center: Vec3,
    radius: f64,
}

impl TubeSet {
    pub fn new(tubes: Vec<TubeField>) -> Result<Self> {
        if tubes.is_empty() {
            return Err(Error::InvalidParameter("empty tube set".into()));
        }
        for (i, t) in tubes.iter().enumerate() {
            for u in &tubes[i + 1..] {
                if axis_separation(t, u) <= t.spec.minor_radius + u.spec.minor_radius {
                    return Err(Error::OverlappingSupports);
                }
            }
        }
        let (center, radius) = enclosing_ball(&tubes);
        let box_center = Vec3::new(PI, PI, PI);
        let slack = (center - box_center).norm() + radius;
        if slack >= BOX_LENGTH / 2.0 {
            return Err(Error::SupportOutsideBox(format!(
                "support ball reaches {slack:.4} from the box center (limit {:.4})",
                BOX_LENGTH / 2.0
            )));
        }
        Ok(TubeSet {
            tubes,
            center,
            radius,
        })
    }

    pub fn tubes(&self) -> &[TubeField] {
        &self.tubes
    }

    pub fn support(&self) -> Support {
        Support::Ball {
            center: self.center,
            radius: self.radius,
        }
    }

    pub fn field(&self, x: Vec3) -> Vec3 {
        self.tubes
            .iter()
            .fold(Vec3::ZERO, |acc, t| acc + t.field(x))
    }

    pub fn potential(&self, x: Vec3) -> Vec3 {
        self.tubes
            .iter()
            .fold(Vec3::ZERO, |acc, t| acc + t.potential(x))
    }

    /// Index of the tube containing `x`.
    pub fn tube_at(&self, x: Vec3) -> Option<usize> {
        self.tubes
            .iter()
            .position(|t| t.profile(t.axis_distance(x)) > 0.0)
    }

    /// Total volume of the tube supports.
    pub fn tube_volume(&self) -> f64 {
        self.tubes.iter().map(|t| t.spec.volume()).sum()
    }

    /// Uniform random point in the union of the tube supports.
    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let total = self.tube_volume();
        let mut u = rng.gen::<f64>() * total;
        for t in &self.tubes {
            let v = t.spec.volume();
            if u < v {
                return t.uniform_point(rng);
            }
            u -= v;
        }
        self.tubes.last().expect("nonempty").uniform_point(rng)
    }

    pub fn sample(&self, n: usize) -> GridField {
        GridField::from_fn(n, self.support(), |x| self.field(x))
    }
}

/// Smallest distance between two axis circles, by dense sampling of the first.
fn axis_separation(t: &TubeField, u: &TubeField) -> f64 {
    (0..4096)
        .map(|i| u.axis_distance(t.axis_point(2.0 * PI * i as f64 / 4096.0)))
        .fold(f64::INFINITY, f64::min)
}

/// A ball enclosing every tube's bounding ball, centered at their mean.
fn enclosing_ball(tubes: &[TubeField]) -> (Vec3, f64) {
    let balls: Vec<(Vec3, f64)> = tubes.iter().map(TubeField::bounding_ball).collect();
    let mut center = Vec3::ZERO;
    for (c, _) in &balls {
        center += *c;
    }
    center = center / balls.len() as f64;
    if balls.len() == 2 {
        // tight sampled bound for the common two-tube case
        let mut r: f64 = 0.0;
        for t in tubes {
            for i in 0..2048 {
                let phi = 2.0 * PI * i as f64 / 2048.0;
                r = r.max((t.axis_point(phi) - center).norm() + t.spec.minor_radius);
            }
        }
        return (center, r);
    }
    let r = balls
        .iter()
        .map(|(c, r)| (*c - center).norm() + r)
        .fold(0.0, f64::max);
    (center, r)
}

/// Single twisted tube sampled on an `n³` grid.
pub fn twisted_tube(spec: TubeSpec, n: usize) -> Result<GridField> {
    Ok(TubeSet::new(vec![TubeField::new(spec)?])?.sample(n))
}

/// Two untwisted tubes forming a Hopf link, sampled on an `n³` grid.
pub fn two_tubes(spec1: TubeSpec, spec2: TubeSpec, n: usize) -> Result<GridField> {
    if spec1.kappa != 0 || spec2.kappa != 0 {
        return Err(Error::InvalidParameter(
            "linked tubes must be untwisted".into(),
        ));
    }
    let t1 = TubeField::new(spec1)?;
    let t2 = TubeField::new(spec2)?;
    if axis_crossings(&t1, &t2) != 1 || axis_crossings(&t2, &t1) != 1 {
        return Err(Error::InvalidParameter(
            "tube axes do not form a Hopf link".into(),
        ));
    }
    Ok(TubeSet::new(vec![t1, t2])?.sample(n))
}

/// Number of times the axis of `t` pierces the disk spanned by the axis of `u`.
fn axis_crossings(t: &TubeField, u: &TubeField) -> usize {
    let m = 4096;
    let mut count = 0;
    let mut prev = t.axis_point(0.0);
    for i in 1..=m {
        let cur = t.axis_point(2.0 * PI * i as f64 / m as f64);
        let (zp, zc) = (
            (prev - u.spec.center).dot(u.spec.normal),
            (cur - u.spec.center).dot(u.spec.normal),
        );
        if zp.signum() != zc.signum() {
            let hit = prev + (cur - prev) * (zp / (zp - zc));
            if (hit - u.spec.center).norm() < u.spec.major_radius {
                count += 1;
            }
        }
        prev = cur;
    }
    count
}

/// Hopf-linked pair: the first axis circle lies in the xy-plane around
/// `center`, the second in the xz-plane around `center + R x̂`.
pub fn hopf_pair(
    major_radius: f64,
    minor_radius: f64,
    flux1: f64,
    flux2: f64,
    center: Vec3,
) -> (TubeSpec, TubeSpec) {
    let first = TubeSpec {
        major_radius,
        minor_radius,
        kappa: 0,
        flux: flux1,
        center,
        normal: Vec3::new(0.0, 0.0, 1.0),
        profile: Profile::Bump,
    };
    let second = TubeSpec {
        center: center + Vec3::new(major_radius, 0.0, 0.0),
        normal: Vec3::new(0.0, 1.0, 0.0),
        flux: flux2,
        ..first
    };
    (first, second)
}
