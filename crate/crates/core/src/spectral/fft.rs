//! Three-dimensional complex FFT on an `n³` periodic grid.
//!
//! Layout is x-fastest: `index = (iz * n + iy) * n + ix`. Both directions are
//! unnormalized; callers divide by `n³` where needed.
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "grid buffer has wrong length");
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // x: rows are contiguous
        fft.process_with_scratch(data, &mut scratch);
        // y: transpose each z-plane
        let mut plane = vec![Complex64::default(); n * n];
        for iz in 0..n {
            let base = iz * n * n;
            for iy in 0..n {
                for ix in 0..n {
                    plane[ix * n + iy] = data[base + iy * n + ix];
                }
            }
            fft.process_with_scratch(&mut plane, &mut scratch);
            for iy in 0..n {
                for ix in 0..n {
                    data[base + iy * n + ix] = plane[ix * n + iy];
                }
            }
        }
        // z: gather (x, z) slabs for each y
        for iy in 0..n {
            for iz in 0..n {
                let row = (iz * n + iy) * n;
                for ix in 0..n {
                    plane[ix * n + iz] = data[row + ix];
                }
            }
            fft.process_with_scratch(&mut plane, &mut scratch);
            for iz in 0..n {
                let row = (iz * n + iy) * n;
                for ix in 0..n {
                    data[row + ix] = plane[ix * n + iz];
                }
            }
        }
    }
}

/// Smallest `2^a 3^b 5^c` not below `min`.
pub fn fft_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Grid index of wave number `m` on an `n`-point axis.
#[inline]
pub fn wave_to_index(m: i32, n: usize) -> usize {
    m.rem_euclid(n as i32) as usize
}

/// Signed wave number of grid index `i` (Nyquist maps to `+n/2`).
#[inline]
pub fn index_to_wave(i: usize, n: usize) -> i32 {
    if i <= n / 2 {
        i as i32
    } else {
        i as i32 - n as i32
    }
}
