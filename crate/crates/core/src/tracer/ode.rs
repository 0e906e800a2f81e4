//! Dormand–Prince 5(4) embedded Runge–Kutta pair with step-size control.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-9,
            atol: 1e-11,
        }
    }
}

/// One accepted step: state and derivative at its end.
#[derive(Debug, Clone, Copy)]
pub struct Accepted<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Finished,
    /// Step size fell below the floor at the given time.
    StepUnderflow(f64),
    /// Observer requested termination.
    Stopped,
    MaxSteps,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(y)` from `t = 0` to `t_end`.
///
/// Error control uses the first `controlled` components with the usual mixed
/// scale `atol + rtol·max(|y|, |y_new|, 1)`. Every time in `stops` is hit
/// exactly. `observer` sees every accepted step and may return `false` to stop.
pub fn integrate<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_end: f64,
    stops: &[f64],
    controlled: usize,
    tol: Tolerance,
    max_steps: usize,
    mut observer: impl FnMut(&Accepted<N>) -> bool,
) -> (Accepted<N>, Outcome, usize) {
    let mut y = y0;
    let mut k1 = f(&y);
    let mut t = 0.0;
    let speed = k1[..controlled].iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h = if speed > 0.0 {
        (0.01 / speed).min(t_end)
    } else {
        t_end
    };
    let mut stops: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s < t_end)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.push(t_end);
    let mut next = 0;
    let mut steps = 0;
    let mut current = Accepted { t, y, dy: k1 };
    while next < stops.len() {
        if steps >= max_steps {
            return (current, Outcome::MaxSteps, steps);
        }
        let target = stops[next];
        let mut hit = false;
        if t + h >= target {
            h = target - t;
            hit = true;
        }
        let k2 = f(&axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(&axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(
            &y,
            h,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        ));
        let k6 = f(&axpy(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(&y_new);
        let mut err = 0.0;
        for i in 0..controlled {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs()).max(1.0);
            err += (e / sc).powi(2);
        }
        let err = (err / controlled as f64).sqrt();
        let err = if err.is_finite() { err } else { f64::INFINITY };
        if err <= 1.0 {
            t = if hit { target } else { t + h };
            y = y_new;
            k1 = k7;
            steps += 1;
            current = Accepted { t, y, dy: k1 };
            if hit {
                next += 1;
            }
            if !observer(&current) {
                return (current, Outcome::Stopped, steps);
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return (current, Outcome::StepUnderflow(t), steps);
        }
    }
    (current, Outcome::Finished, steps)
}
