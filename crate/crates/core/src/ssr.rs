//! One-way (single-square-root) depth extrapolation.
//!
//! A continuation step is split-step Fourier: a wavenumber-domain phase
//! shift with a per-depth reference velocity, followed by a space-domain
//! phase correction for the lateral velocity residual. The vertical
//! slowness symbol is regularized around its zero set `|k| = |omega|/c` by
//! a small imaginary term whose sign damps (never amplifies) the field, so
//! every multiplier has modulus at most 1 and the adjoint step is the
//! exact conjugate transpose of the forward step.

use crate::error::{Error, Result};
use crate::fft::{wavenumbers, Fft1};
use crate::grid::Axis;
use crate::model::ModelView;
use crate::C64;

/// Regularization of the vertical-slowness symbol across the evanescent
/// boundary, parameterized by `q = |k| c / |omega|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaperConfig {
    /// Lower edge of the regularized band (symbol exact below this).
    pub q_lo: f64,
    /// Upper edge of the regularized band.
    pub q_hi: f64,
    /// Height of the damping bump.
    pub phi_max: f64,
    /// What happens beyond `q_hi`.
    pub evanescent_policy: EvanescentPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvanescentPolicy {
    /// Multiply by `exp(-|omega| phi_max dz / c_ref)` beyond `q_hi`.
    Damp,
    /// Zero the field beyond `q_hi`.
    Zero,
}

impl Default for TaperConfig {
    fn default() -> Self {
        TaperConfig { q_lo: 0.90, q_hi: 1.10, phi_max: 0.1, evanescent_policy: EvanescentPolicy::Damp }
    }
}

impl TaperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_lo > 0.0 && self.q_lo < 1.0 && self.q_hi > 1.0) {
            return Err(Error::Config(format!(
                "taper requires 0 < q_lo < 1 < q_hi, got q_lo = {}, q_hi = {}",
                self.q_lo, self.q_hi
            )));
        }
        if !(self.phi_max > 0.0) {
            return Err(Error::Config("taper phi_max must be positive".into()));
        }
        Ok(())
    }

    /// Raised-cosine damping bump on `[q_lo, q_hi]`, height `phi_max`.
    pub fn phi(&self, q: f64) -> f64 {
        if q <= self.q_lo || q >= self.q_hi {
            return 0.0;
        }
        let center = 0.5 * (self.q_lo + self.q_hi);
        let width = self.q_hi - self.q_lo;
        let u = (q - center) / width; // in (-1/2, 1/2)
        self.phi_max * 0.5 * (1.0 + (2.0 * std::f64::consts::PI * u).cos())
    }
}

/// Complex field over the horizontal axis at one frequency and depth.
#[derive(Debug, Clone)]
pub struct FreqSlice {
    pub omega: f64,
    pub z: f64,
    pub axis: Axis,
    pub u: Vec<C64>,
}

impl FreqSlice {
    pub fn new(omega: f64, z: f64, axis: Axis, u: Vec<C64>) -> Result<Self> {
        if u.len() != axis.n {
            return Err(Error::Length("slice length must match its axis".into()));
        }
        if !u.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Data("slice contains non-finite samples".into()));
        }
        Ok(FreqSlice { omega, z, axis, u })
    }

    pub fn dot(&self, other: &FreqSlice) -> C64 {
        self.u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Adjoint,
}

/// Regularized vertical-slowness symbol `b(c, omega, k)`.
///
/// Below `q_lo` this is the exact branch `sgn(omega) sqrt(omega^2/c^2 - k^2)`;
/// inside `(q_lo, q_hi)` the square root of the damped symbol
/// `omega^2/c^2 - k^2 - i omega^2 phi(q)` with the branch whose imaginary
/// part is nonpositive; beyond `q_hi` a purely damping value. In all
/// regimes `Im b <= 0`, so `exp(-i b dz)` never amplifies.
pub fn vertical_slowness_symbol(c: f64, omega: f64, k: f64, taper: &TaperConfig) -> C64 {
    debug_assert!(omega != 0.0 && c > 0.0);
    let q = k.abs() * c / omega.abs();
    if q <= taper.q_lo {
        let a = (omega * omega / (c * c) - k * k).max(0.0);
        C64::new(omega.signum() * a.sqrt(), 0.0)
    } else if q < taper.q_hi {
        let a = C64::new(
            omega * omega / (c * c) - k * k,
            -omega * omega * taper.phi(q),
        );
        let r = a.sqrt(); // principal branch: Re >= 0, Im <= 0 here
        C64::new(omega.signum() * r.re, r.im.min(0.0))
    } else {
        C64::new(0.0, -omega.abs() * taper.phi_max / c)
    }
}

/// Per-bin one-step multipliers `exp(-i b(k) dz)` on the wavenumber grid of
/// `axis`, with the reference velocity `c_ref`.
pub fn step_multipliers(
    axis: &Axis,
    omega: f64,
    c_ref: f64,
    dz: f64,
    taper: &TaperConfig,
) -> Vec<C64> {
    wavenumbers(axis.n, axis.delta)
        .iter()
        .map(|&k| {
            let q = k.abs() * c_ref / omega.abs();
            if q >= taper.q_hi && taper.evanescent_policy == EvanescentPolicy::Zero {
                return C64::new(0.0, 0.0);
            }
            let b = vertical_slowness_symbol(c_ref, omega, k, taper);
            (C64::new(0.0, -1.0) * b * dz).exp()
        })
        .collect()
}

/// Space-domain split-step correction `exp(-i omega (1/c0(x, z) - 1/c_ref) dz)`
/// sampled on `axis` at depth `z`.
pub fn space_multipliers(
    axis: &Axis,
    omega: f64,
    z: f64,
    c_ref: f64,
    dz: f64,
    model: &ModelView,
) -> Vec<C64> {
    axis.coords()
        .map(|x| {
            let phase = -omega * (1.0 / model.c_at(x, z) - 1.0 / c_ref) * dz;
            C64::new(0.0, phase).exp()
        })
        .collect()
}

fn apply_diag(u: &mut [C64], m: &[C64], conj: bool) {
    if conj {
        for (v, w) in u.iter_mut().zip(m) {
            *v *= w.conj();
        }
    } else {
        for (v, w) in u.iter_mut().zip(m) {
            *v *= w;
        }
    }
}

/// One split-step continuation step. Forward moves the slice upward
/// (`z -> z - dz`); the adjoint applies the conjugated multipliers in
/// reverse order and moves downward.
pub fn ssr_step(
    slice: &FreqSlice,
    dz: f64,
    model: &ModelView,
    taper: &TaperConfig,
    direction: Direction,
) -> Result<FreqSlice> {
    if dz < 0.0 {
        return Err(Error::Config("ssr_step requires dz >= 0".into()));
    }
    if dz == 0.0 {
        return Ok(slice.clone());
    }
    taper.validate()?;
    let z_mid = match direction {
        Direction::Forward => slice.z - 0.5 * dz,
        Direction::Adjoint => slice.z + 0.5 * dz,
    };
    let c_ref = model.c_ref_at(z_mid);
    if !(c_ref > 0.0) {
        return Err(Error::Config("reference velocity must be positive".into()));
    }
    let wav = step_multipliers(&slice.axis, slice.omega, c_ref, dz, taper);
    let spc = space_multipliers(&slice.axis, slice.omega, z_mid, c_ref, dz, model);

    let fft = Fft1::new(slice.axis.n);
    let mut u = slice.u.clone();
    let z_next = match direction {
        Direction::Forward => {
            fft.forward(&mut u);
            apply_diag(&mut u, &wav, false);
            fft.inverse(&mut u);
            apply_diag(&mut u, &spc, false);
            slice.z - dz
        }
        Direction::Adjoint => {
            apply_diag(&mut u, &spc, true);
            fft.forward(&mut u);
            apply_diag(&mut u, &wav, true);
            fft.inverse(&mut u);
            slice.z + dz
        }
    };
    FreqSlice::new(slice.omega, z_next, slice.axis.clone(), u)
}

/// Normalization weight: multiplies the wavenumber-domain field by
/// `[|omega|^-1/2 (1/c_ref^2 - k^2/omega^2)^-1/4]^power`, with the symbol
/// frozen at its `q_lo` value across the evanescent boundary so that the
/// `power = +1` and `power = -1` weights stay exact mutual inverses.
pub fn q_weight(
    slice: &FreqSlice,
    model: &ModelView,
    z: f64,
    power: i32,
    taper: &TaperConfig,
) -> Result<FreqSlice> {
    if power != 1 && power != -1 {
        return Err(Error::Config("q_weight power must be +1 or -1".into()));
    }
    let c_ref = model.c_ref_at(z);
    let mults = q_multipliers(&slice.axis, slice.omega, c_ref, power, taper);
    let fft = Fft1::new(slice.axis.n);
    let mut u = slice.u.clone();
    fft.forward(&mut u);
    for (v, m) in u.iter_mut().zip(&mults) {
        *v *= *m;
    }
    fft.inverse(&mut u);
    FreqSlice::new(slice.omega, slice.z, slice.axis.clone(), u)
}

/// Real per-bin multipliers of [`q_weight`].
pub fn q_multipliers(axis: &Axis, omega: f64, c_ref: f64, power: i32, taper: &TaperConfig) -> Vec<f64> {
    wavenumbers(axis.n, axis.delta)
        .iter()
        .map(|&k| {
            let q = (k.abs() * c_ref / omega.abs()).min(taper.q_lo);
            let g = (1.0 - q * q) / (c_ref * c_ref);
            let base = omega.abs().powf(-0.5) * g.powf(-0.25);
            match power {
                1 => base,
                -1 => 1.0 / base,
                _ => unreachable!(),
            }
        })
        .collect()
}

/// Compose [`ssr_step`] over a uniform depth interval. Forward continues
/// upward from `z_from` to `z_to < z_from`; the adjoint composes adjoint
/// steps in reverse depth order.
pub fn propagate_ssr(
    slice: &FreqSlice,
    z_from: f64,
    z_to: f64,
    dz: f64,
    model: &ModelView,
    taper: &TaperConfig,
    direction: Direction,
) -> Result<FreqSlice> {
    let span = z_from - z_to;
    if !(span > 0.0) {
        return Err(Error::Config("propagate_ssr requires z_to < z_from".into()));
    }
    let steps_f = span / dz;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 || steps < 1.0 {
        return Err(Error::Axis(format!(
            "depth interval {span} is not an integer number of steps of {dz}"
        )));
    }
    let steps = steps as usize;
    let mut s = slice.clone();
    match direction {
        Direction::Forward => {
            s.z = z_from;
            for _ in 0..steps {
                s = ssr_step(&s, dz, model, taper, Direction::Forward)?;
            }
        }
        Direction::Adjoint => {
            s.z = z_to;
            for _ in 0..steps {
                s = ssr_step(&s, dz, model, taper, Direction::Adjoint)?;
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{AxisLabel, Grid2D, GridValues};

    fn constant_model(c: f64, nx: usize, dx: f64) -> Grid2D {
        let ax = Axis::new(nx, dx, -(nx as f64 - 1.0) * dx / 2.0, AxisLabel::X).unwrap();
        let az = Axis::new(51, 10.0, 0.0, AxisLabel::Z).unwrap();
        Grid2D::new([ax, az], GridValues::Real(vec![c; nx * 51])).unwrap()
    }

    fn rng_slice(axis: &Axis, omega: f64, z: f64, seed: u64) -> FreqSlice {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let u: Vec<C64> = (0..axis.n).map(|_| C64::new(next(), next())).collect();
        FreqSlice::new(omega, z, axis.clone(), u).unwrap()
    }

    #[test]
    fn symbol_propagating_values() {
        let taper = TaperConfig::default();
        let c = 2000.0;
        let omega = 2.0 * std::f64::consts::PI * 10.0;
        let b0 = vertical_slowness_symbol(c, omega, 0.0, &taper);
        assert!((b0.re - omega / c).abs() < 1e-15);
        assert_eq!(b0.im, 0.0);
        let b45 = vertical_slowness_symbol(c, omega, 0.8 * omega / c, &taper);
        assert!((b45.re - 0.6 * omega / c).abs() < 1e-15);
        // on the zero set of the unregularized symbol
        let b1 = vertical_slowness_symbol(c, omega, omega / c, &taper);
        assert!(b1.norm() > 0.0);
        assert!(b1.im < 0.0, "regularization must damp: Im b = {}", b1.im);
        // negative frequency: damping sign preserved
        let bneg = vertical_slowness_symbol(c, -omega, omega / c, &taper);
        assert!(bneg.im < 0.0);
        assert!((bneg.re + b1.re).abs() < 1e-15);
    }

    #[test]
    fn no_multiplier_amplifies() {
        let taper = TaperConfig::default();
        let axis = Axis::new(128, 15.0, 0.0, AxisLabel::S).unwrap();
        for &omega in &[20.0, 60.0, 150.0, -60.0] {
            for m in step_multipliers(&axis, omega, 2000.0, 5.0, &taper) {
                assert!(m.norm() <= 1.0 + 1e-12, "|m| = {}", m.norm());
            }
        }
    }

    #[test]
    fn constant_medium_step_is_analytic() {
        let c = 2000.0;
        let model = constant_model(c, 64, 20.0);
        let view = ModelView::new(&model).unwrap();
        let taper = TaperConfig::default();
        let axis = model.axes[0].clone();
        let omega = 2.0 * std::f64::consts::PI * 12.0;
        let dz = 10.0;
        let slice = rng_slice(&axis, omega, 200.0, 7);

        let stepped = ssr_step(&slice, dz, &view, &taper, Direction::Forward).unwrap();

        // independent analytic route: exact multiplier in the k domain
        let fft = Fft1::new(axis.n);
        let mut u = slice.u.clone();
        fft.forward(&mut u);
        for (v, k) in u.iter_mut().zip(wavenumbers(axis.n, axis.delta)) {
            let q = k.abs() * c / omega.abs();
            if q <= taper.q_lo {
                let b = omega.signum() * (omega * omega / (c * c) - k * k).sqrt();
                *v *= C64::new(0.0, -b * dz).exp();
            } else {
                *v = C64::new(0.0, 0.0);
            }
        }
        fft.inverse(&mut u);
        // compare on the propagating band only: filter the stepped slice too
        let mut u2 = stepped.u.clone();
        fft.forward(&mut u2);
        for (v, k) in u2.iter_mut().zip(wavenumbers(axis.n, axis.delta)) {
            if k.abs() * c / omega.abs() > taper.q_lo {
                *v = C64::new(0.0, 0.0);
            }
        }
        fft.inverse(&mut u2);
        let num = u
            .iter()
            .zip(&u2)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den = u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den < 1e-12, "analytic mismatch {}", num / den);
    }

    #[test]
    fn zero_dz_is_identity() {
        let model = constant_model(2000.0, 32, 20.0);
        let view = ModelView::new(&model).unwrap();
        let slice = rng_slice(&model.axes[0], 50.0, 100.0, 3);
        let out = ssr_step(&slice, 0.0, &view, &TaperConfig::default(), Direction::Forward).unwrap();
        assert_eq!(out.u, slice.u);
    }

    #[test]
    fn step_dot_test() {
        // laterally varying model so the space-domain factor is exercised
        let nx = 48;
        let ax = Axis::new(nx, 25.0, -600.0, AxisLabel::X).unwrap();
        let az = Axis::new(21, 25.0, 0.0, AxisLabel::Z).unwrap();
        let mut v = Vec::new();
        for i in 0..nx {
            for _ in 0..21 {
                v.push(1800.0 + 3.0 * i as f64);
            }
        }
        let model = Grid2D::new([ax.clone(), az], GridValues::Real(v)).unwrap();
        let view = ModelView::new(&model).unwrap();
        let taper = TaperConfig::default();
        let u = rng_slice(&ax, 70.0, 250.0, 11);
        let v = rng_slice(&ax, 70.0, 225.0, 12);
        let fu = ssr_step(&u, 25.0, &view, &taper, Direction::Forward).unwrap();
        let av = ssr_step(&v, 25.0, &view, &taper, Direction::Adjoint).unwrap();
        let lhs = fu.dot(&v);
        let rhs = u.dot(&av);
        let residual = (lhs - rhs).norm() / (u.norm() * v.norm());
        assert!(residual < 1e-12, "dot-test residual {residual}");
    }

    #[test]
    fn q_weight_values_and_inverse_pair() {
        let c = 2000.0;
        let model = constant_model(c, 64, 20.0);
        let view = ModelView::new(&model).unwrap();
        let taper = TaperConfig::default();
        let axis = model.axes[0].clone();
        let omega = 80.0;

        let mults = q_multipliers(&axis, omega, c, 1, &taper);
        assert!((mults[0] - omega.abs().powf(-0.5) * c.sqrt()).abs() < 1e-12);
        // 3-4-5 value at k = 0.8 omega / c, via the nearest grid bin
        let ks = wavenumbers(axis.n, axis.delta);
        let (bin, _) = ks
            .iter()
            .enumerate()
            .filter(|(_, k)| **k > 0.0)
            .min_by(|a, b| {
                let t = 0.8 * omega / c;
                (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap()
            })
            .unwrap();
        let q = ks[bin] * c / omega;
        let expect = omega.powf(-0.5) * ((1.0 - q * q) / (c * c)).powf(-0.25);
        assert!((mults[bin] - expect).abs() < 1e-12 * expect);

        let slice = rng_slice(&axis, omega, 100.0, 21);
        let up = q_weight(&slice, &view, 100.0, 1, &taper).unwrap();
        let back = q_weight(&up, &view, 100.0, -1, &taper).unwrap();
        let err = back
            .u
            .iter()
            .zip(&slice.u)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-12 * slice.norm(), "inverse pair error {err}");
    }

    #[test]
    fn propagation_semigroup_and_adjoint() {
        let c = 2000.0;
        let model = constant_model(c, 64, 20.0);
        let view = ModelView::new(&model).unwrap();
        let taper = TaperConfig::default();
        let axis = model.axes[0].clone();
        let slice = rng_slice(&axis, 90.0, 400.0, 5);

        // two steps of dz equal one step of 2 dz in a constant medium
        let two = propagate_ssr(&slice, 400.0, 360.0, 20.0, &view, &taper, Direction::Forward).unwrap();
        let one = propagate_ssr(&slice, 400.0, 360.0, 40.0, &view, &taper, Direction::Forward).unwrap();
        let err = two
            .u
            .iter()
            .zip(&one.u)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-12 * slice.norm(), "semigroup error {err}");

        let u = rng_slice(&axis, 90.0, 400.0, 31);
        let v = rng_slice(&axis, 90.0, 200.0, 32);
        let fu = propagate_ssr(&u, 400.0, 200.0, 10.0, &view, &taper, Direction::Forward).unwrap();
        let av = propagate_ssr(&v, 400.0, 200.0, 10.0, &view, &taper, Direction::Adjoint).unwrap();
        let residual = (fu.dot(&v) - u.dot(&av)).norm() / (u.norm() * v.norm());
        assert!(residual < 1e-10, "propagation dot-test residual {residual}");

        // non-integer step count
        assert!(propagate_ssr(&u, 400.0, 201.0, 10.0, &view, &taper, Direction::Forward).is_err());
    }
}
