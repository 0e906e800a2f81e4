use super::line::FieldLine;
use super::LineField;
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::vec3::Vec3;

/// Outcome of a line-integral perturbation test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesResult {
    /// `∫(A, ġ) dt − ∫(A, ẋ) dt`.
    pub difference: f64,
    /// Flux of `B` through the strip swept between the two curves.
    pub strip_flux: f64,
}

fn check_line(line: &FieldLine) -> Result<()> {
    if line.samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "perturbation test needs a line with stored samples".into(),
        ));
    }
    Ok(())
}

/// Positions and velocities at Gauss nodes of every segment of the line.
fn nodes(line: &FieldLine, rule: &GaussRule) -> Vec<(f64, f64, Vec3, Vec3)> {
    let mut out = Vec::new();
    for w in line.samples.windows(2) {
        for (tau, wt) in rule.points(w[0].tau, w[1].tau) {
            let x = line.position(tau).expect("inside traced range");
            // velocity from the Hermite derivative
            let dt = w[1].tau - w[0].tau;
            let s = (tau - w[0].tau) / dt;
            let s2 = s * s;
            let v = (w[0].x * (6.0 * s2 - 6.0 * s) + w[1].x * (-6.0 * s2 + 6.0 * s)) / dt
                + w[0].v * (3.0 * s2 - 4.0 * s + 1.0)
                + w[1].v * (3.0 * s2 - 2.0 * s);
            out.push((tau, wt, x, v));
        }
    }
    out
}

/// Compares `∫(A,ġ)dt` with `∫(A,ẋ)dt` for `g(t) = x(t) + ε ê sin(πt/T)`,
/// a perturbation with matched endpoints along the fixed unit direction `ê`.
///
/// The difference equals the flux of `B` through the swept strip, which is
/// `O(ε²)` because the strip is tangent to `B` along the line.
pub fn stokes_gauge_check<F: LineField + ?Sized>(
    field: &F,
    line: &FieldLine,
    eps: f64,
    dir: Vec3,
) -> Result<StokesResult> {
    check_line(line)?;
    let t = line.t_end;
    let e = dir.normalized();
    let rule = GaussRule::new(6);
    let pi_t = std::f64::consts::PI / t;
    let mut difference = 0.0;
    let mut strip_flux = 0.0;
    let srule = GaussRule::new(4);
    for (tau, w, x, v) in nodes(line, &rule) {
        let (sn, cs) = (pi_t * tau).sin_cos();
        let g = x + e * (eps * sn);
        let gdot = v + e * (eps * pi_t * cs);
        difference += w * (field.potential(g).dot(gdot) - field.potential(x).dot(v));
        // S(s, t) = x + s ê sin(πt/T); ∂_s S × ∂_t S = sin(πt/T) ê × ẋ
        let normal = e.cross(v) * sn;
        strip_flux += w * srule.integrate(0.0, eps, |s| field.field(x + e * (s * sn)).dot(normal));
    }
    Ok(StokesResult {
        difference,
        strip_flux,
    })
}

/// Endpoint-mismatch variant: `g(t) = x(t) + l sin(πt/2T)` ends at `x(T) + l`.
/// Returns the line-integral difference and its first-order prediction `(A(x(T)), l)`.
pub fn stokes_endpoint_check<F: LineField + ?Sized>(
    field: &F,
    line: &FieldLine,
    l: Vec3,
) -> Result<(f64, f64)> {
    check_line(line)?;
    let t = line.t_end;
    let rule = GaussRule::new(6);
    let k = 0.5 * std::f64::consts::PI / t;
    let mut difference = 0.0;
    for (tau, w, x, v) in nodes(line, &rule) {
        let (sn, cs) = (k * tau).sin_cos();
        let g = x + l * sn;
        let gdot = v + l * (k * cs);
        difference += w * (field.potential(g).dot(gdot) - field.potential(x).dot(v));
    }
    let end = line.position(t)?;
    Ok((difference, field.potential(end).dot(l)))
}
