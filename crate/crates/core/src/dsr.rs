//! Survey sinking: the two-way depth continuation of surface data and the
//! Born modeling / migration operator pair built on it.
//!
//! The continuation generator is the tensorization of two one-way steps,
//! one acting in the source coordinate and one in the receiver coordinate.
//! Born modeling injects the scatterer distribution on the `s = r`
//! diagonal depth by depth while continuing upward; migration is its exact
//! discrete adjoint: downward continuation of the muted data spectrum
//! followed by the diagonal, zero-time imaging condition. Discrete Dirac
//! conventions (`delta(r - s) -> 1/ds` on the grid diagonal, `delta(t) -> 1`
//! per retained frequency) make the pair adjoint under the axis-weighted
//! inner products without any fudge factors.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{wavenumbers, Fft2};
use crate::grid::{Axis, AxisLabel, DataCube, Grid2D, GridValues, SpectrumCube};
use crate::model::ModelView;
use crate::ssr::{q_multipliers, space_multipliers, step_multipliers, Direction, TaperConfig};
use crate::taper::{band_weight, edge_weight};
use crate::transform::{band_bins, freq_to_time, time_to_freq};
use crate::C64;

/// Survey layout and depth range of a continuation run.
#[derive(Debug, Clone)]
pub struct AcquisitionGeometry {
    pub s_axis: Axis,
    pub r_axis: Axis,
    pub t_axis: Axis,
    /// Deepest image depth (m).
    pub z_max: f64,
    /// Continuation step (m); shared by modeling and migration.
    pub dz: f64,
}

impl AcquisitionGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.s_axis.label != AxisLabel::S
            || self.r_axis.label != AxisLabel::R
            || self.t_axis.label != AxisLabel::T
        {
            return Err(Error::Axis("geometry axes must be labeled s, r, t".into()));
        }
        if self.t_axis.origin != 0.0 {
            return Err(Error::Config("geometry t-axis must start at 0".into()));
        }
        if !(self.z_max > 0.0) || !(self.dz > 0.0) {
            return Err(Error::Config("geometry requires z_max > 0 and dz > 0".into()));
        }
        let steps = self.z_max / self.dz;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "dz = {} must divide z_max = {}",
                self.dz, self.z_max
            )));
        }
        Ok(())
    }

    /// Number of continuation steps K (depth samples are 0..=K).
    pub fn depth_steps(&self) -> usize {
        (self.z_max / self.dz).round() as usize
    }

    pub fn depth_axis(&self) -> Axis {
        Axis { n: self.depth_steps() + 1, delta: self.dz, origin: 0.0, label: AxisLabel::Z }
    }

    /// Lateral image axis: the source axis relabeled as x.
    pub fn image_x_axis(&self) -> Axis {
        Axis { label: AxisLabel::X, ..self.s_axis }
    }

    pub fn image_axes(&self) -> [Axis; 2] {
        [self.image_x_axis(), self.depth_axis()]
    }
}

/// Linear time mute `t_min(s, r) <= t <= t_max(s, r)` with
/// `t_lim = intercept + slope * |r - s|` and a cosine edge of `taper`
/// seconds on both lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMute {
    pub t_min_intercept: f64,
    pub t_min_slope: f64,
    pub t_max_intercept: f64,
    pub t_max_slope: f64,
    pub taper: f64,
}

/// The data-domain cutoff: band window in omega, dip windows in
/// `|k_s|/omega` and `|k_r|/omega`, optional time mutes.
#[derive(Debug, Clone)]
pub struct MuteConfig {
    /// Largest admitted `|k|/omega` (s/m).
    pub slowness_cut: f64,
    /// Retained band (rad/s).
    pub omega_min: f64,
    pub omega_max: f64,
    /// Cosine edge width as a fraction of the band width, per edge.
    pub band_taper: f64,
    /// Fraction of `slowness_cut` over which the dip window rolls off.
    pub dip_taper: f64,
    pub time_mute: Option<TimeMute>,
}

impl MuteConfig {
    pub fn new(slowness_cut: f64, omega_min: f64, omega_max: f64) -> Self {
        MuteConfig {
            slowness_cut,
            omega_min,
            omega_max,
            band_taper: 0.15,
            dip_taper: 0.25,
            time_mute: None,
        }
    }

    pub fn validate(&self, model: &ModelView) -> Result<()> {
        if !(self.slowness_cut > 0.0) {
            return Err(Error::Config("mute slowness_cut must be positive".into()));
        }
        if self.slowness_cut >= 1.0 / model.c_min() {
            return Err(Error::Config(format!(
                "mute slowness_cut = {} must stay below the maximum medium slowness {}",
                self.slowness_cut,
                1.0 / model.c_min()
            )));
        }
        if !(self.omega_min > 0.0 && self.omega_max > self.omega_min) {
            return Err(Error::Config("mute band must satisfy 0 < omega_min < omega_max".into()));
        }
        Ok(())
    }

    pub fn band(&self) -> (f64, f64) {
        (self.omega_min, self.omega_max)
    }

    /// Window value in omega.
    pub fn band_window(&self, omega: f64) -> f64 {
        band_weight(omega, self.omega_min, self.omega_max, self.band_taper)
    }

    /// Window value as a function of the dip `u = |k| / omega` (s/m).
    pub fn dip_window(&self, u: f64) -> f64 {
        if self.slowness_cut <= 0.0 {
            return 0.0;
        }
        let lo = self.slowness_cut * (1.0 - self.dip_taper.clamp(0.0, 1.0));
        edge_weight(u.abs(), lo, self.slowness_cut)
    }

    /// Time-domain part of the mute, if configured.
    pub fn apply_time_mutes(&self, data: &DataCube) -> Result<DataCube> {
        let Some(tm) = self.time_mute else {
            return Ok(data.clone());
        };
        let mut out = data.clone();
        let (ns, nr, nt) = (data.axes[0].n, data.axes[1].n, data.axes[2].n);
        let dt_axis = &data.axes[2];
        for is in 0..ns {
            for ir in 0..nr {
                let h = (data.axes[1].at(ir) - data.axes[0].at(is)).abs();
                let t_lo = tm.t_min_intercept + tm.t_min_slope * h;
                let t_hi = tm.t_max_intercept + tm.t_max_slope * h;
                for it in 0..nt {
                    let t = dt_axis.at(it);
                    let w = edge_weight(t_lo - t, 0.0, tm.taper)
                        * edge_weight(t - t_hi, 0.0, tm.taper);
                    let idx = out.idx(is, ir, it);
                    out.values[idx] *= w;
                }
            }
        }
        Ok(out)
    }
}

/// Complex survey field at one frequency and depth.
#[derive(Debug, Clone)]
pub struct SurveyField {
    pub omega: f64,
    pub z: f64,
    pub s_axis: Axis,
    pub r_axis: Axis,
    pub u: Array2<C64>,
}

impl SurveyField {
    pub fn zeros(omega: f64, z: f64, s_axis: Axis, r_axis: Axis) -> Self {
        let u = Array2::default((s_axis.n, r_axis.n));
        SurveyField { omega, z, s_axis, r_axis, u }
    }

    pub fn dot(&self, other: &SurveyField) -> C64 {
        self.u
            .iter()
            .zip(other.u.iter())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Split a spectrum cube into per-frequency survey fields at the surface.
pub fn split_fields(spec: &SpectrumCube) -> Vec<SurveyField> {
    let (ns, nr, nw) = (spec.axes[0].n, spec.axes[1].n, spec.axes[2].n);
    let s_axis = spec.axes[0];
    let r_axis = spec.axes[1];
    (0..nw)
        .map(|iw| {
            let mut u = Array2::default((ns, nr));
            for is in 0..ns {
                for ir in 0..nr {
                    u[(is, ir)] = spec.values[spec.idx(is, ir, iw)];
                }
            }
            SurveyField { omega: spec.omega(iw), z: 0.0, s_axis, r_axis, u }
        })
        .collect()
}

/// Reassemble per-frequency fields into a spectrum cube with the given
/// omega axis.
pub fn assemble_spectrum(fields: &[SurveyField], omega_axis: Axis) -> Result<SpectrumCube> {
    if fields.len() != omega_axis.n {
        return Err(Error::Axis("field count must match the omega axis".into()));
    }
    let (ns, nr) = (fields[0].s_axis.n, fields[0].r_axis.n);
    let mut values = vec![C64::default(); ns * nr * omega_axis.n];
    for (iw, f) in fields.iter().enumerate() {
        for is in 0..ns {
            for ir in 0..nr {
                values[(is * nr + ir) * omega_axis.n + iw] = f.u[(is, ir)];
            }
        }
    }
    SpectrumCube::new([fields[0].s_axis, fields[0].r_axis, omega_axis], values)
}

/// One survey-sinking step in place: wavenumber multipliers in k_s and k_r,
/// then the split-step space corrections in s and r. The adjoint applies
/// the conjugates in reverse order.
pub(crate) fn step_field_in_place(
    u: &mut Array2<C64>,
    s_axis: &Axis,
    r_axis: &Axis,
    omega: f64,
    z: f64,
    dz: f64,
    model: &ModelView,
    taper: &TaperConfig,
    direction: Direction,
    fft2: &Fft2,
) {
    if dz == 0.0 {
        return;
    }
    let z_mid = match direction {
        Direction::Forward => z - 0.5 * dz,
        Direction::Adjoint => z + 0.5 * dz,
    };
    let c_ref = model.c_ref_at(z_mid);
    let ms = step_multipliers(s_axis, omega, c_ref, dz, taper);
    let mr = step_multipliers(r_axis, omega, c_ref, dz, taper);
    let es = space_multipliers(s_axis, omega, z_mid, c_ref, dz, model);
    let er = space_multipliers(r_axis, omega, z_mid, c_ref, dz, model);

    match direction {
        Direction::Forward => {
            fft2.forward(u);
            for (i, row) in u.rows_mut().into_iter().enumerate() {
                for (j, v) in row.into_iter().enumerate() {
                    *v *= ms[i] * mr[j];
                }
            }
            fft2.inverse(u);
            for (i, row) in u.rows_mut().into_iter().enumerate() {
                for (j, v) in row.into_iter().enumerate() {
                    *v *= es[i] * er[j];
                }
            }
        }
        Direction::Adjoint => {
            for (i, row) in u.rows_mut().into_iter().enumerate() {
                for (j, v) in row.into_iter().enumerate() {
                    *v *= (es[i] * er[j]).conj();
                }
            }
            fft2.forward(u);
            for (i, row) in u.rows_mut().into_iter().enumerate() {
                for (j, v) in row.into_iter().enumerate() {
                    *v *= (ms[i] * mr[j]).conj();
                }
            }
            fft2.inverse(u);
        }
    }
}

/// One survey-sinking step. Forward continues upward (`z -> z - dz`), the
/// adjoint downward.
pub fn dsr_step(
    field: &SurveyField,
    dz: f64,
    model: &ModelView,
    taper: &TaperConfig,
    direction: Direction,
) -> Result<SurveyField> {
    if dz < 0.0 {
        return Err(Error::Config("dsr_step requires dz >= 0".into()));
    }
    taper.validate()?;
    let mut out = field.clone();
    if dz == 0.0 {
        return Ok(out);
    }
    let fft2 = Fft2::new(field.s_axis.n, field.r_axis.n);
    step_field_in_place(
        &mut out.u,
        &field.s_axis,
        &field.r_axis,
        field.omega,
        field.z,
        dz,
        model,
        taper,
        direction,
        &fft2,
    );
    out.z = match direction {
        Direction::Forward => field.z - dz,
        Direction::Adjoint => field.z + dz,
    };
    Ok(out)
}

/// Combined normalization weight in both coordinates:
/// multiplies the (k_s, k_r) spectrum by `Qs(k_s)^power * Qr(k_r)^power`.
pub(crate) fn q_weight_pair_in_place(
    u: &mut Array2<C64>,
    s_axis: &Axis,
    r_axis: &Axis,
    omega: f64,
    z: f64,
    power: i32,
    model: &ModelView,
    taper: &TaperConfig,
    fft2: &Fft2,
) {
    let c_ref = model.c_ref_at(z);
    let qs = q_multipliers(s_axis, omega, c_ref, power, taper);
    let qr = q_multipliers(r_axis, omega, c_ref, power, taper);
    fft2.forward(u);
    for (i, row) in u.rows_mut().into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            *v *= qs[i] * qr[j];
        }
    }
    fft2.inverse(u);
}

/// Dip/band windows of the mute applied in the spectral domain. Real,
/// separable and diagonal in `(k_s, k_r, omega)`, hence exactly
/// self-adjoint; applying it twice only squares the taper edges.
pub fn apply_mute_psi(spec: &SpectrumCube, mute: &MuteConfig) -> Result<SpectrumCube> {
    let mut fields = split_fields(spec);
    let fft2 = Fft2::new(spec.axes[0].n, spec.axes[1].n);
    let ks = wavenumbers(spec.axes[0].n, spec.axes[0].delta);
    let kr = wavenumbers(spec.axes[1].n, spec.axes[1].delta);
    fields.par_iter_mut().for_each(|f| {
        let wband = mute.band_window(f.omega);
        let ws: Vec<f64> = ks.iter().map(|k| mute.dip_window(k / f.omega)).collect();
        let wr: Vec<f64> = kr.iter().map(|k| mute.dip_window(k / f.omega)).collect();
        fft2.forward(&mut f.u);
        for (i, row) in f.u.rows_mut().into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                *v *= wband * ws[i] * wr[j];
            }
        }
        fft2.inverse(&mut f.u);
    });
    assemble_spectrum(&fields, spec.axes[2])
}

fn check_survey_matches(data: &DataCube, geometry: &AcquisitionGeometry) -> Result<()> {
    if !data.axes[0].approx_eq(&geometry.s_axis)
        || !data.axes[1].approx_eq(&geometry.r_axis)
        || !data.axes[2].approx_eq(&geometry.t_axis)
    {
        return Err(Error::Axis("data axes do not match the acquisition geometry".into()));
    }
    Ok(())
}

fn check_lateral_alignment(geometry: &AcquisitionGeometry) -> Result<()> {
    let s = &geometry.s_axis;
    let r = &geometry.r_axis;
    if s.n != r.n
        || (s.delta - r.delta).abs() > 1e-12 * s.delta
        || (s.origin - r.origin).abs() > 1e-9 * s.delta
    {
        return Err(Error::Axis(
            "diagonal injection requires identical source and receiver axes".into(),
        ));
    }
    Ok(())
}

fn check_image_grid(grid: &Grid2D, geometry: &AcquisitionGeometry) -> Result<()> {
    let x = &grid.axes[0];
    let s = &geometry.s_axis;
    if x.n != s.n
        || (x.delta - s.delta).abs() > 1e-12 * s.delta
        || (x.origin - s.origin).abs() > 1e-9 * s.delta
    {
        return Err(Error::Axis("image x-axis must coincide with the survey axes".into()));
    }
    let z = &grid.axes[1];
    let want = geometry.depth_axis();
    if z.n != want.n || (z.delta - want.delta).abs() > 1e-12 * want.delta || z.origin != 0.0 {
        return Err(Error::Axis(
            "image z-axis must be the continuation depth grid (origin 0, step dz)".into(),
        ));
    }
    Ok(())
}

/// Downward continuation of data through the depth grid, delivering the
/// per-frequency fields at every depth to `sink` in depth order. The chain
/// (band/dip mute, adjoint steps) is the exact adjoint of the upward
/// propagation inside [`born_model`], short of the normalization weights.
pub fn downward_continue<F>(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
    sink: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[SurveyField]) -> Result<()>,
{
    let view = ModelView::new(model)?;
    geometry.validate()?;
    mute.validate(&view)?;
    check_survey_matches(data, geometry)?;
    let muted = mute.apply_time_mutes(data)?;
    let spec = time_to_freq(&muted, mute.band())?;
    let spec = apply_mute_psi(&spec, mute)?;
    let fields = split_fields(&spec);
    continue_fields(fields, &view, geometry, taper, sink)
}

/// Core downward loop over already-prepared surface fields.
pub fn continue_fields<F>(
    mut fields: Vec<SurveyField>,
    model: &ModelView,
    geometry: &AcquisitionGeometry,
    taper: &TaperConfig,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[SurveyField]) -> Result<()>,
{
    taper.validate()?;
    let steps = geometry.depth_steps();
    let fft2 = Fft2::new(geometry.s_axis.n, geometry.r_axis.n);
    sink(0, 0.0, &fields)?;
    for k in 1..=steps {
        let z_prev = (k - 1) as f64 * geometry.dz;
        fields.par_iter_mut().for_each(|f| {
            step_field_in_place(
                &mut f.u,
                &f.s_axis,
                &f.r_axis,
                f.omega,
                z_prev,
                geometry.dz,
                model,
                taper,
                Direction::Adjoint,
                &fft2,
            );
            f.z = z_prev + geometry.dz;
        });
        sink(k, k as f64 * geometry.dz, &fields)?;
    }
    Ok(())
}

/// Zero-time, zero-offset imaging condition: one image row per depth,
/// `row(x) = (domega / pi) * sum_omega Re U_omega(x, x)`.
pub fn imaging_condition(fields: &[SurveyField], domega: f64) -> Vec<f64> {
    if fields.is_empty() {
        return Vec::new();
    }
    let n = fields[0].s_axis.n;
    let scale = domega / std::f64::consts::PI;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for f in fields {
                acc += f.u[(i, i)].re;
            }
            acc * scale
        })
        .collect()
}

/// The upward Born propagation shared by modeling and re-datuming: inject
/// per-depth sources (already carrying their own weights), continue upward
/// with survey-sinking steps and return the surface fields per frequency.
///
/// `inject(k, omega, buffer)` adds the depth-k source for frequency
/// `omega` into `buffer` and reports whether anything was added.
pub(crate) fn propagate_up<I>(
    omegas: &[f64],
    model: &ModelView,
    geometry: &AcquisitionGeometry,
    taper: &TaperConfig,
    inject: I,
) -> Vec<SurveyField>
where
    I: Fn(usize, f64, &mut Array2<C64>) -> bool + Sync,
{
    let steps = geometry.depth_steps();
    let fft2 = Fft2::new(geometry.s_axis.n, geometry.r_axis.n);
    let s_axis = geometry.s_axis;
    let r_axis = geometry.r_axis;
    omegas
        .par_iter()
        .map(|&omega| {
            let mut w = SurveyField::zeros(omega, geometry.z_max, s_axis, r_axis);
            for k in (1..=steps).rev() {
                let z_k = k as f64 * geometry.dz;
                inject(k, omega, &mut w.u);
                step_field_in_place(
                    &mut w.u,
                    &s_axis,
                    &r_axis,
                    omega,
                    z_k,
                    geometry.dz,
                    model,
                    taper,
                    Direction::Forward,
                    &fft2,
                );
                w.z = z_k - geometry.dz;
            }
            inject(0, omega, &mut w.u);
            w
        })
        .collect()
}

fn omega_axis_of(geometry: &AcquisitionGeometry, mute: &MuteConfig) -> Result<(Axis, Vec<f64>)> {
    let (m_lo, m_hi, domega) = band_bins(
        geometry.t_axis.n,
        geometry.t_axis.delta,
        mute.omega_min,
        mute.omega_max,
    )?;
    let axis = Axis::new(m_hi - m_lo + 1, domega, m_lo as f64 * domega, AxisLabel::Omega)?;
    let omegas: Vec<f64> = axis.coords().collect();
    Ok((axis, omegas))
}

/// Verify the clearance precondition: the perturbation must vanish on a
/// neighborhood of the surface (the two shallowest depth rows).
fn check_clearance(dc: &Grid2D) -> Result<()> {
    let v = dc.real()?;
    let nz = dc.axes[1].n;
    for i in 0..dc.axes[0].n {
        for j in 0..2.min(nz) {
            if v[i * nz + j] != 0.0 {
                return Err(Error::Contract(
                    "perturbation support touches the surface: dc must vanish near z = 0".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Born forward modeling: singular scattered data from a velocity
/// perturbation `dc` on the image grid.
pub fn born_model(
    model: &Grid2D,
    dc: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
) -> Result<DataCube> {
    let view = ModelView::new(model)?;
    geometry.validate()?;
    mute.validate(&view)?;
    check_lateral_alignment(geometry)?;
    check_image_grid(dc, geometry)?;
    check_clearance(dc)?;

    let (omega_axis, omegas) = omega_axis_of(geometry, mute)?;
    let dcv = dc.real()?;
    let nx = dc.axes[0].n;
    let nz = dc.axes[1].n;
    let ds = geometry.s_axis.delta;
    let dz = geometry.dz;

    // per-depth injection weights 0.5 c0^-3 dz / ds on the diagonal,
    // restricted to depths that actually carry perturbation
    let depth_axis = geometry.depth_axis();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; nz];
    for k in 0..nz {
        let z = depth_axis.at(k);
        let mut any = false;
        let mut row = vec![0.0; nx];
        for i in 0..nx {
            let v = dcv[i * nz + k];
            if v != 0.0 {
                any = true;
                let c = view.c_at(dc.axes[0].at(i), z);
                row[i] = 0.5 * v / (c * c * c) * dz / ds;
            }
        }
        rows[k] = if any { Some(row) } else { None };
    }

    let fft2 = Fft2::new(geometry.s_axis.n, geometry.r_axis.n);
    let s_axis = geometry.s_axis;
    let r_axis = geometry.r_axis;
    let view_ref = &view;
    let rows_ref = &rows;
    let fft2_ref = &fft2;

    let mut fields = propagate_up(&omegas, &view, geometry, taper, move |k, omega, u| {
        let Some(row) = &rows_ref[k] else {
            return false;
        };
        let z_k = k as f64 * dz;
        let mut g: Array2<C64> = Array2::default(u.dim());
        let w2 = omega * omega;
        for i in 0..row.len() {
            if row[i] != 0.0 {
                g[(i, i)] = C64::new(w2 * row[i], 0.0);
            }
        }
        q_weight_pair_in_place(&mut g, &s_axis, &r_axis, omega, z_k, 1, view_ref, taper, fft2_ref);
        *u += &g;
        true
    });

    // surface normalization factors, then the data-domain cutoff
    fields.par_iter_mut().for_each(|f| {
        q_weight_pair_in_place(&mut f.u, &s_axis, &r_axis, f.omega, 0.0, 1, &view, taper, &fft2);
    });
    let spec = assemble_spectrum(&fields, omega_axis)?;
    let spec = apply_mute_psi(&spec, mute)?;
    freq_to_time(&spec, geometry.t_axis.n, geometry.t_axis.delta)
}

/// Exact discrete adjoint of [`born_model`]: downward continuation with the
/// surface and depth normalization weights, the `omega^2 / 2` source-signature
/// weight and the diagonal imaging condition, assembled row by row.
pub fn migrate_adjoint(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
) -> Result<Grid2D> {
    let view = ModelView::new(model)?;
    geometry.validate()?;
    mute.validate(&view)?;
    check_lateral_alignment(geometry)?;
    check_survey_matches(data, geometry)?;

    let spec = time_to_freq(data, mute.band())?;
    let spec = apply_mute_psi(&spec, mute)?;
    let domega = spec.axes[2].delta;
    let mut fields = split_fields(&spec);

    let fft2 = Fft2::new(geometry.s_axis.n, geometry.r_axis.n);
    let s_axis = geometry.s_axis;
    let r_axis = geometry.r_axis;
    fields.par_iter_mut().for_each(|f| {
        q_weight_pair_in_place(&mut f.u, &s_axis, &r_axis, f.omega, 0.0, 1, &view, taper, &fft2);
    });

    let image_axes = geometry.image_axes();
    let nx = image_axes[0].n;
    let nz = image_axes[1].n;
    let mut image = vec![0.0; nx * nz];

    continue_fields(fields, &view, geometry, taper, |k, z, fields| {
        let mut weighted: Vec<SurveyField> = fields.to_vec();
        weighted.par_iter_mut().for_each(|f| {
            q_weight_pair_in_place(&mut f.u, &s_axis, &r_axis, f.omega, z, 1, &view, taper, &fft2);
            let w = C64::new(0.5 * f.omega * f.omega, 0.0);
            f.u.mapv_inplace(|v| v * w);
        });
        let row = imaging_condition(&weighted, domega);
        for i in 0..nx {
            let c = view.c_at(image_axes[0].at(i), z);
            image[i * nz + k] = row[i] / (c * c * c);
        }
        Ok(())
    })?;

    Grid2D::new(image_axes, GridValues::Real(image))
}

/// Replace samples outside the acquisition mask by zero, with a cosine
/// taper of `taper_cells` cells inward from every mask edge.
pub fn zero_pad_missing(data: &DataCube, mask: &Array2<bool>, taper_cells: usize) -> Result<DataCube> {
    let (ns, nr) = (data.axes[0].n, data.axes[1].n);
    if mask.dim() != (ns, nr) {
        return Err(Error::Axis("mask shape must match the (s, r) axes".into()));
    }
    // chamfer distance (in cells) to the nearest masked-out sample
    let big = (ns + nr) as i64 + 1;
    let mut dist = Array2::<i64>::from_elem((ns, nr), big);
    for i in 0..ns {
        for j in 0..nr {
            if !mask[(i, j)] {
                dist[(i, j)] = 0;
            }
        }
    }
    for i in 0..ns {
        for j in 0..nr {
            let mut d = dist[(i, j)];
            if i > 0 {
                d = d.min(dist[(i - 1, j)] + 1);
            }
            if j > 0 {
                d = d.min(dist[(i, j - 1)] + 1);
            }
            dist[(i, j)] = d;
        }
    }
    for i in (0..ns).rev() {
        for j in (0..nr).rev() {
            let mut d = dist[(i, j)];
            if i + 1 < ns {
                d = d.min(dist[(i + 1, j)] + 1);
            }
            if j + 1 < nr {
                d = d.min(dist[(i, j + 1)] + 1);
            }
            dist[(i, j)] = d;
        }
    }

    let mut out = data.clone();
    let nt = data.axes[2].n;
    for i in 0..ns {
        for j in 0..nr {
            let w = if taper_cells == 0 {
                if dist[(i, j)] > 0 { 1.0 } else { 0.0 }
            } else {
                let u = (dist[(i, j)] as f64 / taper_cells as f64).min(1.0);
                0.5 * (1.0 - (std::f64::consts::PI * u).cos())
            };
            if w != 1.0 {
                let base = (i * nr + j) * nt;
                for t in 0..nt {
                    out.values[base + t] *= w;
                }
            }
        }
    }
    Ok(out)
}
