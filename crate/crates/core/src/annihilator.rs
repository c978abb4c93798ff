//! Data-domain annihilators and the differential-semblance scan.
//!
//! The weighted sinking operator maps data to a function of (s, r, z); on
//! consistent data its output concentrates on the zero-offset diagonal, so
//! multiplication by `r - s` followed by re-propagation to the surface
//! nearly annihilates it. The annihilator residual norm, as a function of
//! a velocity-scale family, is the velocity-analysis objective: it dips at
//! the kinematically correct background.

use ndarray::Array2;

use crate::angle::AngleGather;
use crate::dsr::{
    apply_mute_psi, assemble_spectrum, downward_continue, propagate_up, AcquisitionGeometry,
    MuteConfig, SurveyField,
};
use crate::error::{Error, Result};
use crate::grid::{Axis, AxisLabel, DataCube, Grid2D, GridValues};
use crate::model::ModelView;
use crate::recon::{weighted_continue, ReconWeights};
use crate::ssr::TaperConfig;
use crate::transform::{band_bins, freq_to_time};
use crate::C64;

/// Real field over (s, r, z): data sunk to depth with the time axis
/// consumed by the zero-time restriction.
#[derive(Debug, Clone, PartialEq)]
pub struct SunkField {
    pub axes: [Axis; 3],
    pub values: Vec<f64>,
}

impl SunkField {
    pub fn new(axes: [Axis; 3], values: Vec<f64>) -> Result<Self> {
        let want = axes[0].n * axes[1].n * axes[2].n;
        if values.len() != want {
            return Err(Error::Length(format!(
                "sunk field payload has {} samples, axes require {want}",
                values.len()
            )));
        }
        let labels = [axes[0].label, axes[1].label, axes[2].label];
        if labels != [AxisLabel::S, AxisLabel::R, AxisLabel::Z] {
            return Err(Error::Axis("sunk field axes must be labeled s, r, z".into()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("sunk field contains non-finite samples".into()));
        }
        Ok(SunkField { axes, values })
    }

    pub fn zeros(axes: [Axis; 3]) -> Result<Self> {
        let n = axes[0].n * axes[1].n * axes[2].n;
        SunkField::new(axes, vec![0.0; n])
    }

    #[inline]
    pub fn idx(&self, is: usize, ir: usize, iz: usize) -> usize {
        (is * self.axes[1].n + ir) * self.axes[2].n + iz
    }

    pub fn dot(&self, other: &SunkField) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::Axis("sunk field size mismatch in dot".into()));
        }
        let w = self.axes[0].delta * self.axes[1].delta * self.axes[2].delta;
        Ok(w * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>())
    }

    pub fn norm(&self) -> f64 {
        let w = self.axes[0].delta * self.axes[1].delta * self.axes[2].delta;
        (w * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

fn sunk_axes(geometry: &AcquisitionGeometry) -> [Axis; 3] {
    [geometry.s_axis, geometry.r_axis, geometry.depth_axis()]
}

/// Zero-time restriction of one depth slice over the full (s, r) plane.
fn restrict_plane(fields: &[SurveyField], domega: f64) -> Array2<f64> {
    let (ns, nr) = (fields[0].s_axis.n, fields[0].r_axis.n);
    let scale = domega / std::f64::consts::PI;
    let mut plane = Array2::zeros((ns, nr));
    for f in fields {
        plane.zip_mut_with(&f.u, |p, u| *p += u.re);
    }
    plane.mapv_inplace(|v| v * scale);
    plane
}

/// Unweighted sinking restriction: downward continuation of the muted data
/// restricted to zero time at every depth, over the full (s, r) plane.
pub fn k_star(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
) -> Result<SunkField> {
    let axes = sunk_axes(geometry);
    let nz = axes[2].n;
    let (_, _, domega) = band_bins(
        geometry.t_axis.n,
        geometry.t_axis.delta,
        mute.omega_min,
        mute.omega_max,
    )?;
    let mut out = SunkField::zeros(axes)?;
    downward_continue(data, model, geometry, mute, taper, |k, _z, fields| {
        let plane = restrict_plane(fields, domega);
        for is in 0..plane.nrows() {
            for ir in 0..plane.ncols() {
                out.values[(is * plane.ncols() + ir) * nz + k] = plane[(is, ir)];
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Exact discrete adjoint of [`k_star`]: inject each depth plane at zero
/// time (uniformly over the retained frequencies), propagate everything up
/// to the surface, apply the data-domain cutoff and return to time.
pub fn k_forward(
    field: &SunkField,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
) -> Result<DataCube> {
    let view = ModelView::new(model)?;
    geometry.validate()?;
    mute.validate(&view)?;
    let want = sunk_axes(geometry);
    for (a, b) in field.axes.iter().zip(&want) {
        if !a.approx_eq(b) {
            return Err(Error::Axis("sunk field axes do not match the geometry".into()));
        }
    }
    let (m_lo, m_hi, domega) = band_bins(
        geometry.t_axis.n,
        geometry.t_axis.delta,
        mute.omega_min,
        mute.omega_max,
    )?;
    let omega_axis = Axis::new(m_hi - m_lo + 1, domega, m_lo as f64 * domega, AxisLabel::Omega)?;
    let omegas: Vec<f64> = omega_axis.coords().collect();

    let nz = field.axes[2].n;
    let dz = geometry.dz;
    let fields = propagate_up(&omegas, &view, geometry, taper, |k, _omega, u| {
        debug_assert!(k < nz);
        for is in 0..u.nrows() {
            for ir in 0..u.ncols() {
                let v = field.values[(is * u.ncols() + ir) * nz + k];
                if v != 0.0 {
                    u[(is, ir)] += C64::new(dz * v, 0.0);
                }
            }
        }
        true
    });
    let spec = assemble_spectrum(&fields, omega_axis)?;
    let spec = apply_mute_psi(&spec, mute)?;
    freq_to_time(&spec, geometry.t_axis.n, geometry.t_axis.delta)
}

/// The weighted sinking operator: the full inverse-weighted continuation
/// restricted to zero time (no diagonal restriction), scaled by
/// `2 c0((s+r)/2, z)^3`. On consistent data its output focuses on the
/// zero-offset diagonal.
pub fn ktilde_star(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
) -> Result<SunkField> {
    let view = ModelView::new(model)?;
    let weights = ReconWeights::inverse_chain(mute);
    let axes = sunk_axes(geometry);
    let nz = axes[2].n;
    let (_, _, domega) = band_bins(
        geometry.t_axis.n,
        geometry.t_axis.delta,
        mute.omega_min,
        mute.omega_max,
    )?;
    let mut out = SunkField::zeros(axes)?;
    let s_axis = geometry.s_axis;
    let r_axis = geometry.r_axis;
    weighted_continue(data, model, geometry, mute, taper, &weights, |k, z, fields| {
        let plane = restrict_plane(fields, domega);
        for is in 0..plane.nrows() {
            for ir in 0..plane.ncols() {
                let mid = 0.5 * (s_axis.at(is) + r_axis.at(ir));
                let c = view.c_at(mid, z);
                out.values[(is * plane.ncols() + ir) * nz + k] =
                    2.0 * c * c * c * plane[(is, ir)];
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Multiplication by the offset `r - s` (meters). Exactly zero on the
/// diagonal of a shared source/receiver axis.
pub fn apply_offset_mult(field: &SunkField) -> SunkField {
    let mut out = field.clone();
    let (nr, nz) = (field.axes[1].n, field.axes[2].n);
    for is in 0..field.axes[0].n {
        let s = field.axes[0].at(is);
        for ir in 0..nr {
            let offset = field.axes[1].at(ir) - s;
            let base = (is * nr + ir) * nz;
            for v in &mut out.values[base..base + nz] {
                *v *= offset;
            }
        }
    }
    out
}

/// The data-domain annihilator: weighted sinking, offset multiplication,
/// re-propagation to the surface. Output lives in the data domain; its
/// norm relative to the un-annihilated re-propagation measures how far the
/// background velocity is from kinematic consistency.
pub fn annihilate(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
) -> Result<DataCube> {
    let sunk = ktilde_star(data, model, geometry, mute, taper)?;
    let mulled = apply_offset_mult(&sunk);
    k_forward(&mulled, model, geometry, mute, taper)
}

/// One point of the velocity scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    pub scale: f64,
    pub objective: f64,
}

/// Differential-semblance scan over a family of scaled backgrounds:
/// `J(scale) = |W[c0 * scale] d|^2 / |d|^2`, reported with its argmin.
pub fn semblance_scan(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
    scales: &[f64],
) -> Result<(Vec<ScanPoint>, f64)> {
    if scales.is_empty() {
        return Err(Error::Config("semblance scan needs at least one scale".into()));
    }
    let d_norm2 = data.dot(data)?;
    if d_norm2 == 0.0 {
        return Err(Error::Data("semblance scan of zero data is undefined".into()));
    }
    let mut points = Vec::with_capacity(scales.len());
    for &scale in scales {
        if !(scale > 0.0) {
            return Err(Error::Config("velocity scales must be positive".into()));
        }
        let scaled = scale_model(model, scale)?;
        let w = annihilate(data, &scaled, geometry, mute, taper)?;
        points.push(ScanPoint { scale, objective: w.dot(&w)? / d_norm2 });
    }
    let argmin = points
        .iter()
        .min_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
        .map(|p| p.scale)
        .unwrap();
    Ok((points, argmin))
}

pub fn scale_model(model: &Grid2D, scale: f64) -> Result<Grid2D> {
    let v = model.real()?;
    Grid2D::new(
        model.axes.clone(),
        GridValues::Real(v.iter().map(|x| x * scale).collect()),
    )
}

/// Ray-parameter derivative of an angle gather: centered differences in
/// the interior, one-sided at the edges.
pub fn dp_annihilate(gather: &AngleGather) -> Result<AngleGather> {
    let np = gather.axes[2].n;
    if np < 3 {
        return Err(Error::Axis("p-derivative needs at least 3 ray-parameter samples".into()));
    }
    let dp = gather.axes[2].delta;
    let (nx, nz) = (gather.axes[0].n, gather.axes[1].n);
    let mut out = vec![0.0; gather.values.len()];
    for ix in 0..nx {
        for iz in 0..nz {
            let base = (ix * nz + iz) * np;
            let g = &gather.values[base..base + np];
            let o = &mut out[base..base + np];
            o[0] = (g[1] - g[0]) / dp;
            o[np - 1] = (g[np - 1] - g[np - 2]) / dp;
            for ip in 1..np - 1 {
                o[ip] = (g[ip + 1] - g[ip - 1]) / (2.0 * dp);
            }
        }
    }
    AngleGather::new(gather.axes.clone(), out)
}

/// Interior norm ratio `|d_p gather| / |gather|` used by the gather-domain
/// velocity check (edge columns excluded to avoid one-sided stencils).
pub fn dp_ratio(gather: &AngleGather) -> Result<f64> {
    let deriv = dp_annihilate(gather)?;
    let np = gather.axes[2].n;
    let (nx, nz) = (gather.axes[0].n, gather.axes[1].n);
    let mut num = 0.0;
    let mut den = 0.0;
    for ix in 0..nx {
        for iz in 0..nz {
            let base = (ix * nz + iz) * np;
            for ip in 1..np - 1 {
                num += deriv.values[base + ip] * deriv.values[base + ip];
                den += gather.values[base + ip] * gather.values[base + ip];
            }
        }
    }
    if den == 0.0 {
        return Err(Error::Data("gather is zero on the interior".into()));
    }
    // scale by dp so the ratio is dimensionless per unit relative moveout
    Ok((num / den).sqrt() * gather.axes[2].delta * (np as f64 - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes3(ns: usize, nr: usize, nz: usize) -> [Axis; 3] {
        [
            Axis::new(ns, 25.0, -100.0, AxisLabel::S).unwrap(),
            Axis::new(nr, 25.0, -100.0, AxisLabel::R).unwrap(),
            Axis::new(nz, 10.0, 0.0, AxisLabel::Z).unwrap(),
        ]
    }

    #[test]
    fn offset_multiplication_properties() {
        let axes = axes3(9, 9, 5);
        let mut f = SunkField::zeros(axes).unwrap();
        for i in 0..9 {
            for k in 0..5 {
                let idx = f.idx(i, i, k);
                f.values[idx] = 1.0 + i as f64;
            }
        }
        // diagonal input is annihilated exactly
        let m = apply_offset_mult(&f);
        assert!(m.values.iter().all(|&v| v == 0.0));

        // symmetric input becomes antisymmetric, doubling offsets doubles
        let mut g = SunkField::zeros(axes3(9, 9, 5)).unwrap();
        for is in 0..9 {
            for ir in 0..9 {
                for k in 0..5 {
                    let idx = g.idx(is, ir, k);
                    g.values[idx] = ((is + ir) as f64).cos();
                }
            }
        }
        let mg = apply_offset_mult(&g);
        for is in 0..9 {
            for ir in 0..9 {
                for k in 0..5 {
                    let a = mg.values[mg.idx(is, ir, k)];
                    let b = mg.values[mg.idx(ir, is, k)];
                    assert!((a + b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dp_of_constant_and_linear_gathers() {
        let axes = [
            Axis::new(3, 25.0, 0.0, AxisLabel::X).unwrap(),
            Axis::new(4, 10.0, 0.0, AxisLabel::Z).unwrap(),
            Axis::new(5, 2e-5, -4e-5, AxisLabel::P).unwrap(),
        ];
        let npts = 3 * 4 * 5;
        let constant = AngleGather::new(axes.clone(), vec![7.5; npts]).unwrap();
        let d = dp_annihilate(&constant).unwrap();
        for ix in 0..3 {
            for iz in 0..4 {
                for ip in 1..4 {
                    assert_eq!(d.values[d.idx(ix, iz, ip)], 0.0);
                }
            }
        }
        let mut linear = vec![0.0; npts];
        for ix in 0..3 {
            for iz in 0..4 {
                for ip in 0..5 {
                    linear[(ix * 4 + iz) * 5 + ip] = 3.0 * (axes[2].at(ip)) + 1.0;
                }
            }
        }
        let lg = AngleGather::new(axes, linear).unwrap();
        let ld = dp_annihilate(&lg).unwrap();
        for v in &ld.values {
            assert!((v - 3.0).abs() < 1e-9);
        }
    }
}
