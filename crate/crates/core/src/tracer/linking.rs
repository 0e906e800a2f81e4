use rayon::prelude::*;

use super::line::{hermite, FieldLine};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::vec3::Vec3;

/// Cubic Hermite piece of a line's dense output.
#[derive(Debug, Clone, Copy)]
struct Segment {
    x0: Vec3,
    v0: Vec3,
    x1: Vec3,
    v1: Vec3,
    dt: f64,
}

impl Segment {
    /// Position and `d/dτ` at local parameter `s ∈ [0, 1]`.
    fn eval(&self, s: f64) -> (Vec3, Vec3) {
        let (h00, h10, h01, h11) = hermite(s);
        let x =
            self.x0 * h00 + self.v0 * (h10 * self.dt) + self.x1 * h01 + self.v1 * (h11 * self.dt);
        let s2 = s * s;
        let (d00, d10, d01, d11) = (
            6.0 * s2 - 6.0 * s,
            3.0 * s2 - 4.0 * s + 1.0,
            -6.0 * s2 + 6.0 * s,
            3.0 * s2 - 2.0 * s,
        );
        let v = (self.x0 * d00 + self.x1 * d01) / self.dt + self.v0 * d10 + self.v1 * d11;
        (x, v)
    }

    fn sub(&self, a: f64, b: f64) -> Segment {
        let (x0, v0) = self.eval(a);
        let (x1, v1) = self.eval(b);
        Segment {
            x0,
            v0,
            x1,
            v1,
            dt: self.dt * (b - a),
        }
    }

    fn middle(&self) -> Vec3 {
        self.eval(0.5).0
    }

    /// Bound on the distance from the midpoint to any point of the piece.
    fn radius(&self) -> f64 {
        let arc = self.dt * self.v0.norm().max(self.v1.norm());
        0.5 * arc.max((self.x1 - self.x0).norm()) * 1.05
    }
}

struct Rules {
    by_order: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Rules {
    fn new() -> Self {
        let by_order = [2, 4, 6, 8]
            .iter()
            .map(|&n| {
                let (x, w) = gauss_legendre(n);
                (
                    x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
                    w.iter().map(|w| 0.5 * w).collect(),
                )
            })
            .collect();
        Rules { by_order }
    }
}

fn segments(line: &FieldLine, t: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    for w in line.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.tau >= t {
            break;
        }
        let seg = Segment {
            x0: a.x,
            v0: a.v,
            x1: b.x,
            v1: b.v,
            dt: b.tau - a.tau,
        };
        if b.tau > t {
            out.push(seg.sub(0.0, (t - a.tau) / seg.dt));
            break;
        }
        out.push(seg);
    }
    out
}

fn pair(a: &Segment, b: &Segment, rules: &Rules, depth: u32) -> f64 {
    let (ra, rb) = (a.radius(), b.radius());
    let dc = (a.middle() - b.middle()).norm();
    let ratio = (ra + rb) / dc;
    let order = if ratio < 0.05 {
        0
    } else if ratio < 0.15 {
        1
    } else if ratio < 0.35 {
        2
    } else if depth >= 48 || (ra.max(rb) < 1e-12) {
        3
    } else if ra >= rb {
        return pair(&a.sub(0.0, 0.5), b, rules, depth + 1)
            + pair(&a.sub(0.5, 1.0), b, rules, depth + 1);
    } else {
        return pair(a, &b.sub(0.0, 0.5), rules, depth + 1)
            + pair(a, &b.sub(0.5, 1.0), rules, depth + 1);
    };
    let (nodes, weights) = &rules.by_order[order];
    let pb: Vec<(Vec3, Vec3)> = nodes.iter().map(|&s| b.eval(s)).collect();
    let mut acc = 0.0;
    for (&sa, &wa) in nodes.iter().zip(weights) {
        let (xa, va) = a.eval(sa);
        for ((xb, vb), &wb) in pb.iter().zip(weights) {
            let r = xa - *xb;
            let d = r.norm();
            if d > 0.0 {
                acc += wa * wb * va.cross(*vb).dot(r) / (d * d * d);
            }
        }
    }
    acc * a.dt * b.dt
}

/// `∬ ⟨ẋ₁, ẋ₂, x₁ − x₂⟩ / |x₁ − x₂|³ dτ₁ dτ₂` over `[0, t1] × [0, t2]`.
fn gauss_integral(l1: &FieldLine, t1: f64, l2: &FieldLine, t2: f64) -> Result<f64> {
    if (l1.seed - l2.seed).norm() < 1e-12 {
        return Err(Error::CoincidentSeeds);
    }
    if l1.samples.len() < 2 || l2.samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "linking integrals need lines traced with stored samples".into(),
        ));
    }
    let s1 = segments(l1, t1);
    let s2 = segments(l2, t2);
    let rules = Rules::new();
    let parts: Vec<f64> = s1
        .par_iter()
        .map(|a| s2.iter().map(|b| pair(a, b, &rules, 0)).sum())
        .collect();
    Ok(parts.iter().sum())
}

/// Asymptotic Gauss linking coefficient
/// `(1/4πT²) ∬₀ᵀ ⟨ẋ₁, ẋ₂, x₁ − x₂⟩/|x₁ − x₂|³ dτ₁dτ₂` in unwrapped coordinates.
pub fn gauss_linking(l1: &FieldLine, l2: &FieldLine, t: f64) -> Result<f64> {
    if !(t > 0.0) || t > l1.t_end * (1.0 + 1e-12) || t > l2.t_end * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "linking time {t} exceeds traced ranges {} and {}",
            l1.t_end, l2.t_end
        )));
    }
    Ok(gauss_integral(l1, t, l2, t)? / (4.0 * std::f64::consts::PI * t * t))
}

/// Gauss linking number of two closed lines, each integrated over its full extent.
pub fn linking_number(l1: &FieldLine, l2: &FieldLine) -> Result<f64> {
    Ok(gauss_integral(l1, l1.t_end, l2, l2.t_end)? / (4.0 * std::f64::consts::PI))
}
