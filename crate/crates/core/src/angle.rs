//! Wave-equation angle transform: common-image-point gathers in the ray
//! parameter p.
//!
//! The gather at an image point is an offset integral of the downward
//! continued data evaluated on the slanted line `t = p h`, done spectrally
//! per frequency so no time interpolation enters the variable the
//! flatness property constrains. The ray-parameter range is guarded by the
//! bound `|p| < 1/(2 max c0)`; runs beyond it are refused outright.

use rayon::prelude::*;

use crate::dsr::{downward_continue, AcquisitionGeometry, MuteConfig, SurveyField};
use crate::error::{Error, Result};
use crate::fft::Fft1;
use crate::grid::{Axis, AxisLabel, DataCube, Grid2D};
use crate::model::ModelView;
use crate::recon::{weighted_continue, ReconWeights};
use crate::ssr::TaperConfig;
use crate::taper::build_taper;
use crate::C64;

/// Angle-gather configuration: the p grid and the offset cutoff chi.
#[derive(Debug, Clone)]
pub struct AngleConfig {
    pub p_axis: Axis,
    /// Maximum offset |h| admitted by chi (m). Zero keeps only h = 0.
    pub radius: f64,
    /// Flat fraction of the chi taper over the offset grid.
    pub chi_flat: f64,
}

impl AngleConfig {
    pub fn new(p_min: f64, p_max: f64, np: usize, radius: f64) -> Result<Self> {
        if np < 1 || !(p_max > p_min) {
            return Err(Error::Config("angle config requires np >= 1 and p_max > p_min".into()));
        }
        let delta = if np == 1 { 1.0 } else { (p_max - p_min) / (np - 1) as f64 };
        Ok(AngleConfig {
            p_axis: Axis::new(np, delta, p_min, AxisLabel::P)?,
            radius,
            chi_flat: 0.5,
        })
    }

    /// Offset sample count on one side of h = 0.
    fn half_offsets(&self, ds: f64) -> usize {
        if self.radius <= 0.0 {
            0
        } else {
            ((self.radius / ds) + 1e-9).floor() as usize
        }
    }
}

/// Common-image-point gathers over (x, z, p).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGather {
    pub axes: [Axis; 3],
    pub values: Vec<f64>,
}

impl AngleGather {
    pub fn new(axes: [Axis; 3], values: Vec<f64>) -> Result<Self> {
        let want = axes[0].n * axes[1].n * axes[2].n;
        if values.len() != want {
            return Err(Error::Length(format!(
                "gather payload has {} samples, axes require {want}",
                values.len()
            )));
        }
        let labels = [axes[0].label, axes[1].label, axes[2].label];
        if labels != [AxisLabel::X, AxisLabel::Z, AxisLabel::P] {
            return Err(Error::Axis("gather axes must be labeled x, z, p".into()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("gather contains non-finite samples".into()));
        }
        Ok(AngleGather { axes, values })
    }

    #[inline]
    pub fn idx(&self, ix: usize, iz: usize, ip: usize) -> usize {
        (ix * self.axes[1].n + iz) * self.axes[2].n + ip
    }

    pub fn norm(&self) -> f64 {
        let w = self.axes[0].delta * self.axes[1].delta * self.axes[2].delta;
        (w * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Outcome of the ray-parameter guard.
#[derive(Debug, Clone, Copy)]
pub struct PmaxGuard {
    /// The admissible bound `1/(2 max c0)` (s/m).
    pub bound: f64,
    pub c0_max: f64,
    /// Upper bound on |d(c0^-2)/dx|; the offset radius should keep
    /// `radius * c1_bound` small (warning heuristic only).
    pub c1_bound: f64,
}

/// Enforce `max |p| < 1/(2 max c0)` (strict). Violation is a hard config
/// error; the lateral-gradient proxy for the offset radius is reported for
/// warning purposes only.
pub fn guard_pmax(model: &Grid2D, p_axis: &Axis) -> Result<PmaxGuard> {
    let view = ModelView::new(model)?;
    let c0_max = view.c_max();
    let bound = 0.5 / c0_max;
    let p_abs_max = p_axis
        .coords()
        .map(f64::abs)
        .fold(0.0f64, f64::max);
    if p_abs_max >= bound {
        return Err(Error::Config(format!(
            "ray-parameter grid reaches |p| = {p_abs_max:.6e} s/m; the angle transform \
             requires |p| < 1/(2 max c0) = {bound:.6e} s/m strictly"
        )));
    }
    Ok(PmaxGuard { bound, c0_max, c1_bound: view.lateral_gradient_bound() })
}

/// Per-depth gather accumulator: evaluates the offset/slant sum on each
/// delivered depth slice, spectrally in omega.
pub struct AweAccumulator {
    config: AngleConfig,
    x_axis: Axis,
    z_axis: Axis,
    domega: f64,
    chi: Vec<f64>,
    half: usize,
    values: Vec<f64>,
}

impl AweAccumulator {
    pub fn new(config: &AngleConfig, geometry: &AcquisitionGeometry, domega: f64) -> Self {
        let half = config.half_offsets(geometry.s_axis.delta);
        let chi = build_taper(2 * half + 1, config.chi_flat);
        let x_axis = geometry.image_x_axis();
        let z_axis = geometry.depth_axis();
        let values = vec![0.0; x_axis.n * z_axis.n * config.p_axis.n];
        AweAccumulator { config: config.clone(), x_axis, z_axis, domega, chi, half, values }
    }

    /// Accumulate the slice at depth index `k` from the per-frequency
    /// fields of that depth.
    pub fn accumulate(&mut self, k: usize, fields: &[SurveyField]) {
        let np = self.config.p_axis.n;
        let nz = self.z_axis.n;
        let nx = self.x_axis.n;
        let half = self.half as i64;
        let ds = self.x_axis.delta;
        let scale = self.domega / std::f64::consts::PI;
        let p_axis = self.config.p_axis;
        let chi = &self.chi;

        // phase table e^{i omega p h} per (p, h, omega) is separable:
        // e^{i omega p h} with ph precomputed
        let mut rows: Vec<(usize, Vec<f64>)> = (0..nx).map(|i| (i, vec![0.0; np])).collect();
        rows.par_iter_mut().for_each(|(i, out)| {
            let i = *i as i64;
            for (ip, p) in p_axis.coords().enumerate() {
                let mut acc = 0.0f64;
                for j in -half..=half {
                    // sample U at (x - h/2, x + h/2); offsets are grid
                    // multiples so odd offsets land on half-grid points
                    let two_s = 2 * i - j; // twice the s index
                    let two_r = 2 * i + j;
                    if two_s < 0 || two_r < 0 {
                        continue;
                    }
                    let h = j as f64 * ds;
                    let ph = p * h;
                    let mut inner = 0.0f64;
                    if j.rem_euclid(2) == 0 {
                        let is = (two_s / 2) as usize;
                        let ir = (two_r / 2) as usize;
                        if is >= nx || ir >= nx {
                            continue;
                        }
                        for f in fields {
                            let u = f.u[(is, ir)];
                            let (sin, cos) = (f.omega * ph).sin_cos();
                            inner += u.re * cos - u.im * sin;
                        }
                    } else {
                        let is0 = ((two_s - 1) / 2) as usize;
                        let ir0 = ((two_r - 1) / 2) as usize;
                        if is0 + 1 >= nx || ir0 + 1 >= nx {
                            continue;
                        }
                        for f in fields {
                            let u = 0.25
                                * (f.u[(is0, ir0)]
                                    + f.u[(is0 + 1, ir0)]
                                    + f.u[(is0, ir0 + 1)]
                                    + f.u[(is0 + 1, ir0 + 1)]);
                            let (sin, cos) = (f.omega * ph).sin_cos();
                            inner += u.re * cos - u.im * sin;
                        }
                    }
                    acc += chi[(j + half) as usize] * inner;
                }
                out[ip] = acc * scale;
            }
        });
        for (i, row) in rows {
            let base = (i * nz + k) * np;
            self.values[base..base + np].copy_from_slice(&row);
        }
    }

    pub fn finish(self) -> Result<AngleGather> {
        AngleGather::new([self.x_axis, self.z_axis, self.config.p_axis], self.values)
    }
}

/// The plain angle transform: offset/slant evaluation of the downward
/// continued data. With radius 0 the gather is exactly p-independent and
/// equal to the zero-offset image trace.
pub fn awe_transform(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
    config: &AngleConfig,
) -> Result<AngleGather> {
    guard_pmax(model, &config.p_axis)?;
    let (_, _, domega) = crate::transform::band_bins(
        geometry.t_axis.n,
        geometry.t_axis.delta,
        mute.omega_min,
        mute.omega_max,
    )?;
    let mut acc = AweAccumulator::new(config, geometry, domega);
    downward_continue(data, model, geometry, mute, taper, |k, _z, fields| {
        acc.accumulate(k, fields);
        Ok(())
    })?;
    acc.finish()
}

/// The amplitude-corrected angle transform: the normalization-weighted
/// continuation (inverse Q weights, obliquity weight, double time
/// integration, 2 c0^3) feeding the same offset/slant evaluation.
pub fn awe_tilde_transform(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
    config: &AngleConfig,
) -> Result<AngleGather> {
    guard_pmax(model, &config.p_axis)?;
    let view = ModelView::new(model)?;
    let weights = ReconWeights::inverse_chain(mute);
    let (_, _, domega) = crate::transform::band_bins(
        geometry.t_axis.n,
        geometry.t_axis.delta,
        mute.omega_min,
        mute.omega_max,
    )?;
    let mut acc = AweAccumulator::new(config, geometry, domega);
    let x_axis = geometry.image_x_axis();
    weighted_continue(data, model, geometry, mute, taper, &weights, |k, z, fields| {
        acc.accumulate(k, fields);
        // the 2 c0(x, z)^3 factor acts at the image point, outside the
        // offset sum
        let np = config.p_axis.n;
        let nz = geometry.depth_axis().n;
        for i in 0..x_axis.n {
            let c = view.c_at(x_axis.at(i), z);
            let w = 2.0 * c * c * c;
            let base = (i * nz + k) * np;
            for v in &mut acc.values[base..base + np] {
                *v *= w;
            }
        }
        Ok(())
    })?;
    acc.finish()
}

/// Flatness measurement of a gather over an x-index window.
#[derive(Debug, Clone)]
pub struct FlatnessReport {
    /// max |z_peak(p) - z_peak(p_ref)| in depth cells, p_ref nearest 0.
    pub metric_cells: f64,
    /// Envelope-peak depth (fractional cells) per p sample.
    pub z_peak_cells: Vec<f64>,
    pub p: Vec<f64>,
}

/// Envelope of a real signal via the analytic-signal magnitude.
fn envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let fft = Fft1::new(n);
    let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            // keep
        } else if k < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = C64::new(0.0, 0.0);
        }
    }
    fft.inverse(&mut buf);
    buf.iter().map(|v| v.norm()).collect()
}

/// Peak position of a sampled curve with parabolic sub-cell refinement.
fn peak_position(e: &[f64]) -> f64 {
    let mut imax = 0;
    for (i, v) in e.iter().enumerate() {
        if *v > e[imax] {
            imax = i;
        }
    }
    if imax == 0 || imax + 1 >= e.len() {
        return imax as f64;
    }
    let (ym, y0, yp) = (e[imax - 1], e[imax], e[imax + 1]);
    let denom = ym - 2.0 * y0 + yp;
    if denom.abs() < 1e-300 {
        imax as f64
    } else {
        imax as f64 + 0.5 * (ym - yp) / denom
    }
}

/// Envelope-peak depth per p over the x window, and the worst deviation
/// from the p = 0 column in cells.
pub fn flatness_metric(gather: &AngleGather, x_window: std::ops::Range<usize>) -> Result<FlatnessReport> {
    let (nx, nz, np) = (gather.axes[0].n, gather.axes[1].n, gather.axes[2].n);
    if x_window.end > nx || x_window.is_empty() {
        return Err(Error::Config("x window outside the gather".into()));
    }
    let mut z_peak = Vec::with_capacity(np);
    for ip in 0..np {
        let mut stacked = vec![0.0f64; nz];
        for ix in x_window.clone() {
            let col: Vec<f64> = (0..nz).map(|iz| gather.values[gather.idx(ix, iz, ip)]).collect();
            let env = envelope(&col);
            for (s, e) in stacked.iter_mut().zip(&env) {
                *s += e * e;
            }
        }
        if stacked.iter().all(|&v| v == 0.0) {
            return Err(Error::Data("flatness metric undefined on an all-zero window".into()));
        }
        z_peak.push(peak_position(&stacked));
    }
    // reference column: p closest to zero
    let mut ref_ip = 0;
    for (ip, p) in gather.axes[2].coords().enumerate() {
        if p.abs() < gather.axes[2].at(ref_ip).abs() {
            ref_ip = ip;
        }
    }
    let metric = z_peak
        .iter()
        .map(|z| (z - z_peak[ref_ip]).abs())
        .fold(0.0f64, f64::max);
    Ok(FlatnessReport { metric_cells: metric, z_peak_cells: z_peak, p: gather.axes[2].coords().collect() })
}

/// Per-column artifact level: for each p, the largest envelope amplitude
/// outside `band_cells` of the column peak, relative to the peak.
pub fn offband_level(gather: &AngleGather, x_window: std::ops::Range<usize>, band_cells: usize) -> Result<Vec<f64>> {
    let (nx, nz, np) = (gather.axes[0].n, gather.axes[1].n, gather.axes[2].n);
    if x_window.end > nx || x_window.is_empty() {
        return Err(Error::Config("x window outside the gather".into()));
    }
    let mut out = Vec::with_capacity(np);
    for ip in 0..np {
        let mut stacked = vec![0.0f64; nz];
        for ix in x_window.clone() {
            let col: Vec<f64> = (0..nz).map(|iz| gather.values[gather.idx(ix, iz, ip)]).collect();
            let env = envelope(&col);
            for (s, e) in stacked.iter_mut().zip(&env) {
                *s += e * e;
            }
        }
        let peak_at = stacked
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let peak = stacked[peak_at].sqrt();
        let mut off = 0.0f64;
        for (iz, v) in stacked.iter().enumerate() {
            if iz.abs_diff(peak_at) > band_cells {
                off = off.max(v.sqrt());
            }
        }
        out.push(if peak > 0.0 { off / peak } else { 0.0 });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gather_axes(nx: usize, nz: usize, np: usize, p0: f64, dp: f64) -> [Axis; 3] {
        [
            Axis::new(nx, 25.0, 0.0, AxisLabel::X).unwrap(),
            Axis::new(nz, 10.0, 0.0, AxisLabel::Z).unwrap(),
            Axis::new(np, dp, p0, AxisLabel::P).unwrap(),
        ]
    }

    fn wavelet(z: f64, z0: f64) -> f64 {
        let u = (z - z0) / 30.0;
        (1.0 - 2.0 * u * u) * (-u * u).exp()
    }

    #[test]
    fn guard_values() {
        let ax = Axis::new(4, 100.0, 0.0, AxisLabel::X).unwrap();
        let az = Axis::new(4, 100.0, 0.0, AxisLabel::Z).unwrap();
        let model =
            Grid2D::new([ax, az], crate::grid::GridValues::Real(vec![2000.0; 16])).unwrap();
        let p_ok = Axis::new(5, 1e-4 / 4.0, -0.5e-4, AxisLabel::P).unwrap();
        let g = guard_pmax(&model, &p_ok).unwrap();
        assert!((g.bound - 2.5e-4).abs() < 1e-12);
        assert_eq!(g.c1_bound, 0.0);

        // touching the bound exactly fails (strict inequality)
        let p_bad = Axis::new(3, 2.5e-4, -2.5e-4, AxisLabel::P).unwrap();
        assert!(guard_pmax(&model, &p_bad).is_err());
    }

    #[test]
    fn flatness_on_synthetic_gathers() {
        let (nx, nz, np) = (8, 64, 5);
        let axes = gather_axes(nx, nz, np, 0.0, 2.5e-5);
        // perfectly flat gather
        let mut flat = vec![0.0; nx * nz * np];
        for ix in 0..nx {
            for iz in 0..nz {
                for ip in 0..np {
                    flat[(ix * nz + iz) * np + ip] = wavelet(iz as f64 * 10.0, 320.0);
                }
            }
        }
        let g = AngleGather::new(axes.clone(), flat).unwrap();
        let rep = flatness_metric(&g, 0..nx).unwrap();
        assert!(rep.metric_cells < 1e-9, "flat gather metric {}", rep.metric_cells);

        // shifted linearly by one cell across the p range
        let mut shifted = vec![0.0; nx * nz * np];
        for ix in 0..nx {
            for iz in 0..nz {
                for ip in 0..np {
                    let shift = 10.0 * ip as f64 / (np - 1) as f64;
                    shifted[(ix * nz + iz) * np + ip] = wavelet(iz as f64 * 10.0, 320.0 + shift);
                }
            }
        }
        let g = AngleGather::new(axes, shifted).unwrap();
        let rep = flatness_metric(&g, 0..nx).unwrap();
        assert!(
            (rep.metric_cells - 1.0).abs() < 0.05,
            "linear shift metric {}",
            rep.metric_cells
        );

        // all-zero window is rejected
        let zeros = AngleGather::new(gather_axes(4, 16, 3, -1e-5, 1e-5), vec![0.0; 4 * 16 * 3]).unwrap();
        assert!(flatness_metric(&zeros, 0..4).is_err());
    }

    #[test]
    fn dp_needs_enough_samples() {
        // belongs to the annihilator but uses the gather type; checked there
        let axes = gather_axes(2, 4, 2, 0.0, 1e-5);
        let g = AngleGather::new(axes, vec![0.0; 2 * 4 * 2]).unwrap();
        assert!(crate::annihilator::dp_annihilate(&g).is_err());
    }
}
