//! Time/frequency transforms with the toolkit's fixed Fourier convention.
//!
//! Forward:  `F(omega) = sum_t f(t) exp(-i omega t) dt`
//! Inverse:  `f(t) = (1/pi) sum_omega Re[F(omega) exp(+i omega t)] domega`
//! over retained positive frequencies only; real signals come back through
//! Hermitian symmetry. Under this convention the operator `D_t = -i d/dt`
//! acts on spectra as multiplication by `omega`, and `D_x` as `xi`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft1;
use crate::grid::{Axis, AxisLabel, DataCube, SpectrumCube};
use crate::C64;

/// Index range of DFT bins retained for a band `[omega_min, omega_max]`
/// (rad/s) on an `nt`-sample, `dt`-spaced time axis. Bin 0 and the Nyquist
/// bin are never retained.
pub fn band_bins(nt: usize, dt: f64, omega_min: f64, omega_max: f64) -> Result<(usize, usize, f64)> {
    let nyquist = std::f64::consts::PI / dt;
    if !(omega_min > 0.0) || !(omega_max > omega_min) || omega_max > nyquist * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "frequency band [{omega_min}, {omega_max}] rad/s outside (0, {nyquist}]"
        )));
    }
    let domega = 2.0 * std::f64::consts::PI / (nt as f64 * dt);
    let m_lo = ((omega_min / domega - 1e-9).ceil() as usize).max(1);
    let m_hi = ((omega_max / domega + 1e-9).floor() as usize).min((nt - 1) / 2);
    if m_lo > m_hi {
        return Err(Error::Config(format!(
            "band [{omega_min}, {omega_max}] rad/s retains no DFT bins (domega = {domega})"
        )));
    }
    Ok((m_lo, m_hi, domega))
}

/// Transform a data cube to its retained positive-frequency spectrum.
pub fn time_to_freq(d: &DataCube, band: (f64, f64)) -> Result<SpectrumCube> {
    let nt = d.axes[2].n;
    let dt = d.axes[2].delta;
    let (m_lo, m_hi, domega) = band_bins(nt, dt, band.0, band.1)?;
    let nw = m_hi - m_lo + 1;

    let fft = Fft1::new(nt);
    let ntr = d.axes[0].n * d.axes[1].n;
    let mut out = vec![C64::default(); ntr * nw];

    out.par_chunks_exact_mut(nw)
        .zip(d.values.par_chunks_exact(nt))
        .for_each(|(spec, trace)| {
            let mut buf: Vec<C64> = trace.iter().map(|&x| C64::new(x, 0.0)).collect();
            fft.forward(&mut buf);
            for (k, s) in spec.iter_mut().enumerate() {
                *s = buf[m_lo + k] * dt;
            }
        });

    let omega_axis = Axis::new(nw, domega, m_lo as f64 * domega, AxisLabel::Omega)?;
    SpectrumCube::new([d.axes[0].clone(), d.axes[1].clone(), omega_axis], out)
}

/// Inverse of [`time_to_freq`] on its band: reconstruct a real cube of
/// `nt` samples at step `dt`.
pub fn freq_to_time(s: &SpectrumCube, nt: usize, dt: f64) -> Result<DataCube> {
    let domega = 2.0 * std::f64::consts::PI / (nt as f64 * dt);
    let omega = &s.axes[2];
    if (omega.delta - domega).abs() > 1e-9 * domega {
        return Err(Error::Axis(format!(
            "spectrum domega {} does not match 2*pi/(nt*dt) = {domega}",
            omega.delta
        )));
    }
    let m_lo_f = omega.origin / domega;
    let m_lo = m_lo_f.round() as usize;
    if (m_lo_f - m_lo as f64).abs() > 1e-6 || m_lo == 0 {
        return Err(Error::Axis("spectrum omega origin is not a positive DFT bin".into()));
    }
    let m_hi = m_lo + omega.n - 1;
    if m_hi > (nt - 1) / 2 {
        return Err(Error::Axis("spectrum band exceeds the Nyquist bin of the requested time axis".into()));
    }

    let fft = Fft1::new(nt);
    let ntr = s.axes[0].n * s.axes[1].n;
    let nw = omega.n;
    let scale = domega / std::f64::consts::PI;
    let mut out = vec![0.0f64; ntr * nt];

    out.par_chunks_exact_mut(nt)
        .zip(s.values.par_chunks_exact(nw))
        .for_each(|(trace, spec)| {
            let mut buf = vec![C64::default(); nt];
            for (k, v) in spec.iter().enumerate() {
                buf[m_lo + k] = *v;
            }
            fft.inverse_unnormalized(&mut buf);
            for (t, b) in trace.iter_mut().zip(&buf) {
                *t = scale * b.re;
            }
        });

    let t_axis = Axis::new(nt, dt, 0.0, AxisLabel::T)?;
    DataCube::new([s.axes[0].clone(), s.axes[1].clone(), t_axis], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisLabel;

    fn small_axes(nt: usize, dt: f64) -> [Axis; 3] {
        [
            Axis::new(2, 100.0, -100.0, AxisLabel::S).unwrap(),
            Axis::new(3, 100.0, -100.0, AxisLabel::R).unwrap(),
            Axis::new(nt, dt, 0.0, AxisLabel::T).unwrap(),
        ]
    }

    #[test]
    fn single_tone_hits_one_bin() {
        let (nt, dt) = (128, 0.004);
        let domega = 2.0 * std::f64::consts::PI / (nt as f64 * dt);
        let m0 = 10;
        let omega0 = m0 as f64 * domega;
        let axes = small_axes(nt, dt);
        let mut values = vec![0.0; 2 * 3 * nt];
        for it in 0..nt {
            values[it] = (omega0 * it as f64 * dt).cos(); // trace (0, 0) only
        }
        let d = DataCube::new(axes, values).unwrap();
        let spec = time_to_freq(&d, (domega * 0.5, domega * 20.0)).unwrap();
        let t_total = nt as f64 * dt;
        for iw in 0..spec.axes[2].n {
            let v = spec.values[spec.idx(0, 0, iw)];
            if (spec.omega(iw) - omega0).abs() < 1e-9 {
                assert!((v.re - t_total / 2.0).abs() < 1e-10, "peak bin value {v}");
                assert!(v.im.abs() < 1e-10);
            } else {
                assert!(v.norm() < 1e-10, "leakage at bin {iw}: {v}");
            }
        }
    }

    #[test]
    fn zero_cube_zero_spectrum_and_back() {
        let (nt, dt) = (64, 0.004);
        let d = DataCube::new(small_axes(nt, dt), vec![0.0; 6 * nt]).unwrap();
        let s = time_to_freq(&d, (20.0, 300.0)).unwrap();
        assert!(s.values.iter().all(|v| v.norm() == 0.0));
        let back = freq_to_time(&s, nt, dt).unwrap();
        assert!(back.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn roundtrip_is_identity_on_band_limited_data() {
        let (nt, dt) = (256, 0.004);
        let band = (one_hz(8.0), one_hz(40.0));
        // synthesize band-limited data from an arbitrary in-band spectrum
        let (m_lo, m_hi, domega) = band_bins(nt, dt, band.0, band.1).unwrap();
        let nw = m_hi - m_lo + 1;
        let axes = [
            Axis::new(3, 50.0, 0.0, AxisLabel::S).unwrap(),
            Axis::new(2, 50.0, 0.0, AxisLabel::R).unwrap(),
            Axis::new(nw, domega, m_lo as f64 * domega, AxisLabel::Omega).unwrap(),
        ];
        let values: Vec<C64> = (0..6 * nw)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()))
            .collect();
        let spec = SpectrumCube::new(axes, values).unwrap();
        let d = freq_to_time(&spec, nt, dt).unwrap();
        let d2 = freq_to_time(&time_to_freq(&d, band).unwrap(), nt, dt).unwrap();
        let max_err = d
            .values
            .iter()
            .zip(&d2.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-10, "round-trip error {max_err}");
    }

    #[test]
    fn parseval_on_band() {
        let (nt, dt) = (256, 0.004);
        let band = (one_hz(8.0), one_hz(40.0));
        let (m_lo, m_hi, domega) = band_bins(nt, dt, band.0, band.1).unwrap();
        let nw = m_hi - m_lo + 1;
        let axes = [
            Axis::new(2, 50.0, 0.0, AxisLabel::S).unwrap(),
            Axis::new(2, 50.0, 0.0, AxisLabel::R).unwrap(),
            Axis::new(nw, domega, m_lo as f64 * domega, AxisLabel::Omega).unwrap(),
        ];
        let mk = |seed: f64| -> SpectrumCube {
            let values: Vec<C64> = (0..4 * nw)
                .map(|i| C64::new((i as f64 * seed).sin(), (i as f64 * (seed + 0.3)).cos()))
                .collect();
            SpectrumCube::new(axes.clone(), values).unwrap()
        };
        let (sa, sb) = (mk(0.17), mk(0.53));
        let (da, db) = (freq_to_time(&sa, nt, dt).unwrap(), freq_to_time(&sb, nt, dt).unwrap());
        let time_dot = da.dot(&db).unwrap();
        let freq_dot = sa.dot(&sb).unwrap() / std::f64::consts::PI;
        let rel = (time_dot - freq_dot).abs() / freq_dot.abs();
        assert!(rel < 1e-10, "Parseval mismatch: {time_dot} vs {freq_dot}");
    }

    fn one_hz(f: f64) -> f64 {
        2.0 * std::f64::consts::PI * f
    }
}
