//! Thin planner wrappers around rustfft plus the wavenumber-grid convention.
//!
//! Forward transforms use the kernel `exp(-i k x)`, inverse `exp(+i k x)`;
//! inverse methods fold in the `1/n` normalization so forward/inverse are
//! mutual inverses and `forward^H = n * inverse` holds exactly.

use std::sync::Arc;

use ndarray::Array2;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::C64;

/// Planned 1D transform of fixed length.
pub struct Fft1 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft1 {
            n,
            fwd: planner.plan_fft(n, FftDirection::Forward),
            inv: planner.plan_fft(n, FftDirection::Inverse),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// In-place unnormalized forward transform of one or more length-n rows.
    pub fn forward(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        let mut scratch = vec![C64::default(); self.fwd.get_inplace_scratch_len()];
        self.fwd.process_with_scratch(buf, &mut scratch);
    }

    /// In-place inverse transform including the 1/n normalization.
    pub fn inverse(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        let mut scratch = vec![C64::default(); self.inv.get_inplace_scratch_len()];
        self.inv.process_with_scratch(buf, &mut scratch);
        let s = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    /// Inverse transform without the 1/n normalization.
    pub fn inverse_unnormalized(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        let mut scratch = vec![C64::default(); self.inv.get_inplace_scratch_len()];
        self.inv.process_with_scratch(buf, &mut scratch);
    }
}

/// Planned separable 2D transform over (s, r) survey fields.
pub struct Fft2 {
    ns: usize,
    nr: usize,
    along_r: Fft1,
    along_s: Fft1,
}

impl Fft2 {
    pub fn new(ns: usize, nr: usize) -> Self {
        Fft2 { ns, nr, along_r: Fft1::new(nr), along_s: Fft1::new(ns) }
    }

    fn transposed(&self, a: &Array2<C64>) -> Array2<C64> {
        let mut t = Array2::default((self.nr, self.ns));
        for i in 0..self.ns {
            for j in 0..self.nr {
                t[(j, i)] = a[(i, j)];
            }
        }
        t
    }

    fn apply(&self, a: &mut Array2<C64>, forward: bool) {
        debug_assert_eq!(a.dim(), (self.ns, self.nr));
        {
            let rows = a.as_slice_mut().expect("survey field must be contiguous");
            if forward {
                self.along_r.forward(rows);
            } else {
                self.along_r.inverse_unnormalized(rows);
            }
        }
        let mut t = self.transposed(a);
        {
            let cols = t.as_slice_mut().unwrap();
            if forward {
                self.along_s.forward(cols);
            } else {
                self.along_s.inverse_unnormalized(cols);
            }
        }
        for i in 0..self.ns {
            for j in 0..self.nr {
                a[(i, j)] = t[(j, i)];
            }
        }
    }

    /// Unnormalized forward 2D transform.
    pub fn forward(&self, a: &mut Array2<C64>) {
        self.apply(a, true);
    }

    /// Inverse 2D transform including the 1/(ns*nr) normalization.
    pub fn inverse(&self, a: &mut Array2<C64>) {
        self.apply(a, false);
        let s = 1.0 / (self.ns * self.nr) as f64;
        a.mapv_inplace(|v| v * s);
    }
}

/// Angular wavenumbers (rad per axis unit) of the unnormalized DFT bins for
/// `n` samples at spacing `delta`, in FFT storage order (non-negative bins
/// first, then negative).
pub fn wavenumbers(n: usize, delta: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * delta);
    (0..n)
        .map(|j| {
            let j = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            j * dk
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_roundtrip() {
        let n = 24;
        let fft = Fft1::new(n);
        let orig: Vec<C64> = (0..n)
            .map(|i| C64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let mut buf = orig.clone();
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn wavenumber_grid_signs() {
        let k = wavenumbers(8, 0.5);
        assert_eq!(k[0], 0.0);
        assert!(k[1] > 0.0);
        assert!(k[7] < 0.0);
        assert!((k[1] + k[7]).abs() < 1e-15);
        // Nyquist bin
        assert!((k[4] - std::f64::consts::PI / 0.5).abs() < 1e-12);
    }

    #[test]
    fn fft2_roundtrip() {
        let (ns, nr) = (6, 10);
        let fft = Fft2::new(ns, nr);
        let mut a = Array2::from_shape_fn((ns, nr), |(i, j)| {
            C64::new((i as f64 - 0.3 * j as f64).sin(), (j as f64 * 0.9).cos())
        });
        let orig = a.clone();
        fft.forward(&mut a);
        fft.inverse(&mut a);
        for (x, y) in a.iter().zip(orig.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
