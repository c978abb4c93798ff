//! Amplitude-true reconstruction: the inverse-weighted continuation chain
//! and the illumination normalization it needs.
//!
//! The weighted chain divides the data spectrum by `omega^2`, removes the
//! one-way normalization weights at the surface and at depth, applies the
//! obliquity weight (the frequency derivative of the two-way vertical
//! wavenumber) and restricts to zero time and zero offset; multiplying by
//! `2 c0^3` then leaves the perturbation filtered by a pseudodifferential
//! illumination factor. That factor is computable point by point from ray
//! fans and the mute windows, and dividing it out yields the
//! amplitude-true estimate.

use ndarray::Array2;
use rayon::prelude::*;

use crate::dsr::{
    continue_fields, imaging_condition, q_weight_pair_in_place, split_fields, AcquisitionGeometry,
    MuteConfig, SurveyField,
};
use crate::error::{Error, Result};
use crate::fft::{wavenumbers, Fft2};
use crate::grid::{Axis, DataCube, Grid2D, GridValues};
use crate::model::ModelView;
use crate::ray::{invert_gamma_view, trace_ray_depth_view};
use crate::ssr::TaperConfig;
use crate::transform::time_to_freq;
use crate::C64;

/// Which pieces of the inverse chain are active.
#[derive(Debug, Clone, Copy)]
pub struct ReconWeights {
    /// Apply the obliquity weight at each depth.
    pub xi_mode: bool,
    /// `true`: inverse normalization weights (the reconstruction chain);
    /// `false`: forward weights as in the plain adjoint.
    pub q_inverse_mode: bool,
    /// Power of the spectral time-derivative weight (default -2).
    pub dt_inverse_power: i32,
    /// Protected lower frequency for negative powers (rad/s).
    pub omega_floor: f64,
}

impl ReconWeights {
    /// The full inverse chain with the floor taken from the mute band.
    pub fn inverse_chain(mute: &MuteConfig) -> Self {
        ReconWeights {
            xi_mode: true,
            q_inverse_mode: true,
            dt_inverse_power: -2,
            omega_floor: mute.omega_min,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_floor > 0.0) {
            return Err(Error::Config("omega_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Frequency-derivative of the two-way vertical wavenumber at a point:
/// `|dGamma/dtau| = c_s^-2 (c_s^-2 - sigma^2/tau^2)^-1/2 + c_r^-2 (c_r^-2 - rho^2/tau^2)^-1/2`.
pub fn xi_symbol(
    s: f64,
    r: f64,
    sigma: f64,
    rho: f64,
    tau: f64,
    z: f64,
    model: &Grid2D,
) -> Result<f64> {
    let view = ModelView::new(model)?;
    let term = |pos: f64, k: f64| -> Result<f64> {
        let w = view.w_at(pos, z); // c^-2
        let g = w - k * k / (tau * tau);
        if g <= 0.0 {
            return Err(Error::Domain("obliquity weight requested in the evanescent regime".into()));
        }
        Ok(w / g.sqrt())
    };
    Ok(term(s, sigma)? + term(r, rho)?)
}

/// Per-bin factors of the obliquity weight with the reference velocity,
/// clamped at `q_lo` across the evanescent boundary. The full multiplier
/// is the sum `ts[i] + tr[j]`.
fn xi_terms(axis: &Axis, omega: f64, c_ref: f64, taper: &TaperConfig) -> Vec<f64> {
    wavenumbers(axis.n, axis.delta)
        .iter()
        .map(|&k| {
            let q = (k.abs() * c_ref / omega.abs()).min(taper.q_lo);
            1.0 / (c_ref * (1.0 - q * q).sqrt())
        })
        .collect()
}

pub(crate) fn xi_weight_in_place(
    u: &mut Array2<C64>,
    s_axis: &Axis,
    r_axis: &Axis,
    omega: f64,
    z: f64,
    model: &ModelView,
    taper: &TaperConfig,
    fft2: &Fft2,
) {
    let c_ref = model.c_ref_at(z);
    let ts = xi_terms(s_axis, omega, c_ref, taper);
    let tr = xi_terms(r_axis, omega, c_ref, taper);
    fft2.forward(u);
    for (i, row) in u.rows_mut().into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            *v *= ts[i] + tr[j];
        }
    }
    fft2.inverse(u);
}

/// The obliquity weight applied to one survey field at depth `z`.
pub fn xi_weight(
    field: &SurveyField,
    model: &ModelView,
    z: f64,
    taper: &TaperConfig,
) -> Result<SurveyField> {
    let mut out = field.clone();
    let fft2 = Fft2::new(field.s_axis.n, field.r_axis.n);
    xi_weight_in_place(&mut out.u, &field.s_axis, &field.r_axis, field.omega, z, model, taper, &fft2);
    Ok(out)
}

/// Drive the weighted continuation: data -> band/dip mute -> spectral
/// time-derivative power -> surface normalization weights -> downward
/// continuation, delivering per-depth fields that already carry the depth
/// weights (normalization and obliquity). The `2 c0^3` image-point factor
/// is left to the sink, whose placement convention differs per consumer.
pub fn weighted_continue<F>(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
    weights: &ReconWeights,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[SurveyField]) -> Result<()>,
{
    let view = ModelView::new(model)?;
    geometry.validate()?;
    mute.validate(&view)?;
    weights.validate()?;

    let spec = time_to_freq(data, mute.band())?;
    let spec = crate::dsr::apply_mute_psi(&spec, mute)?;
    let mut fields = split_fields(&spec);

    if weights.dt_inverse_power < 0 {
        for f in &fields {
            if f.omega < weights.omega_floor * (1.0 - 1e-12) {
                return Err(Error::Config(format!(
                    "retained frequency {} rad/s lies below the protected floor {}",
                    f.omega, weights.omega_floor
                )));
            }
        }
    }

    let q_power = if weights.q_inverse_mode { -1 } else { 1 };
    let fft2 = Fft2::new(geometry.s_axis.n, geometry.r_axis.n);
    let s_axis = geometry.s_axis;
    let r_axis = geometry.r_axis;
    fields.par_iter_mut().for_each(|f| {
        if weights.dt_inverse_power != 0 {
            let w = C64::new(f.omega.powi(weights.dt_inverse_power), 0.0);
            f.u.mapv_inplace(|v| v * w);
        }
        q_weight_pair_in_place(&mut f.u, &s_axis, &r_axis, f.omega, 0.0, q_power, &view, taper, &fft2);
    });

    let xi_on = weights.xi_mode;
    continue_fields(fields, &view, geometry, taper, |k, z, fields| {
        let mut weighted: Vec<SurveyField> = fields.to_vec();
        weighted.par_iter_mut().for_each(|f| {
            q_weight_pair_in_place(&mut f.u, &s_axis, &r_axis, f.omega, z, q_power, &view, taper, &fft2);
            if xi_on {
                xi_weight_in_place(&mut f.u, &s_axis, &r_axis, f.omega, z, &view, taper, &fft2);
            }
        });
        sink(k, z, &weighted)
    })
}

/// Amplitude-weighted reconstruction: the inverse chain restricted to zero
/// time and zero offset, scaled by `2 c0(x, z)^3`. The output is the
/// perturbation filtered by the illumination factor of [`phi_symbol`].
pub fn reconstruct(
    data: &DataCube,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    taper: &TaperConfig,
    weights: &ReconWeights,
) -> Result<Grid2D> {
    let view = ModelView::new(model)?;
    let image_axes = geometry.image_axes();
    let nx = image_axes[0].n;
    let nz = image_axes[1].n;
    let mut image = vec![0.0; nx * nz];
    let spec_domega = {
        let (_, _, domega) = crate::transform::band_bins(
            geometry.t_axis.n,
            geometry.t_axis.delta,
            mute.omega_min,
            mute.omega_max,
        )?;
        domega
    };

    weighted_continue(data, model, geometry, mute, taper, weights, |k, z, fields| {
        let row = imaging_condition(fields, spec_domega);
        for i in 0..nx {
            let c = view.c_at(image_axes[0].at(i), z);
            image[i * nz + k] = 2.0 * c * c * c * row[i];
        }
        Ok(())
    })?;

    Grid2D::new(image_axes, GridValues::Real(image))
}

/// Direction at which the illumination factor is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiDirection {
    /// Vertical wavenumber only (flat-structure assumption).
    VerticalOnly,
    /// Follow the local dip of the image.
    LocalDip,
}

/// Illumination factor at one image point and direction: the offset-
/// wavenumber integral of the mute windows pulled back along rays.
///
/// For each quadrature node `theta`, with one-way wavenumbers
/// `sigma = xi/2 - theta`, `rho = xi/2 + theta`, the frequency solving the
/// two-way dispersion is found, both legs are traced to the surface, and
/// the data-domain windows are evaluated at the arrival. Nodes whose
/// inversion or tracing fails lie outside the support and contribute zero.
pub fn phi_symbol(
    x: f64,
    z: f64,
    xi: f64,
    zeta: f64,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    n_theta: usize,
) -> Result<f64> {
    let view = ModelView::new(model)?;
    phi_symbol_view(x, z, xi, zeta, &view, geometry, mute, n_theta)
}

#[allow(clippy::too_many_arguments)]
fn phi_symbol_view(
    x: f64,
    z: f64,
    xi: f64,
    zeta: f64,
    view: &ModelView,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    n_theta: usize,
) -> Result<f64> {
    if xi == 0.0 && zeta == 0.0 {
        return Err(Error::Config("phi_symbol requires a nonzero direction".into()));
    }
    if n_theta < 2 {
        return Err(Error::Config("phi_symbol needs at least 2 quadrature nodes".into()));
    }
    let theta_hi = 1.5 * (zeta.abs() + xi.abs());
    let dtheta = 2.0 * theta_hi / (n_theta - 1) as f64;
    let dz_trace = view.grid().axes[1].delta * 0.5;
    let s_lo = geometry.s_axis.origin;
    let s_hi = geometry.s_axis.end();
    let r_lo = geometry.r_axis.origin;
    let r_hi = geometry.r_axis.end();
    let t_hi = geometry.t_axis.end();

    let node = |theta: f64| -> f64 {
        let sigma = 0.5 * xi - theta;
        let rho = 0.5 * xi + theta;
        let Ok(tau) = invert_gamma_view(view, x, x, sigma, rho, zeta, z) else {
            return 0.0;
        };
        if z <= 0.0 {
            // already at the surface: the arrival is the point itself
            let w = mute.band_window(tau.abs())
                * mute.dip_window(sigma / tau)
                * mute.dip_window(rho / tau);
            return if x >= s_lo && x <= s_hi && x >= r_lo && x <= r_hi { w } else { 0.0 };
        }
        let Ok(src) = trace_ray_depth_view(view, x, z, sigma, tau, dz_trace, 0.0) else {
            return 0.0;
        };
        let Ok(rcv) = trace_ray_depth_view(view, x, z, rho, tau, dz_trace, 0.0) else {
            return 0.0;
        };
        let (Some(se), Some(re)) = (src.last(), rcv.last()) else {
            return 0.0;
        };
        if se.z.abs() > 1e-9 || re.z.abs() > 1e-9 {
            return 0.0; // a leg left the aperture before surfacing
        }
        let t_total = se.t + re.t;
        if se.x < s_lo || se.x > s_hi || re.x < r_lo || re.x > r_hi || t_total > t_hi {
            return 0.0;
        }
        mute.band_window(tau.abs())
            * mute.dip_window(se.xi / tau)
            * mute.dip_window(re.xi / tau)
    };

    let mut sum = 0.0;
    for i in 0..n_theta {
        let theta = -theta_hi + dtheta * i as f64;
        let w = if i == 0 || i + 1 == n_theta { 0.5 } else { 1.0 };
        sum += w * node(theta);
    }
    Ok(sum * dtheta)
}

/// Indices of a stride lattice covering `0..n`, always including both ends.
fn lattice_nodes(n: usize, stride: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..n).step_by(stride.max(1)).collect();
    if *nodes.last().unwrap() != n - 1 {
        nodes.push(n - 1);
    }
    if nodes.len() < 2 {
        nodes.push(n - 1); // degenerate single-sample axis
    }
    nodes
}

/// Divide an image by the illumination factor evaluated at the band-center
/// scale, floored at `1e-3` of its maximum.
pub fn normalize_by_phi(
    image: &Grid2D,
    model: &Grid2D,
    geometry: &AcquisitionGeometry,
    mute: &MuteConfig,
    direction: PhiDirection,
    n_theta: usize,
) -> Result<Grid2D> {
    let view = ModelView::new(model)?;
    let img = image.real()?;
    let nx = image.axes[0].n;
    let nz = image.axes[1].n;
    let tau_c = 0.5 * (mute.omega_min + mute.omega_max);

    // local dip directions from the image gradient, if requested
    let dip_at = |i: usize, k: usize| -> (f64, f64) {
        let gx = if i == 0 || i + 1 == nx {
            0.0
        } else {
            (img[(i + 1) * nz + k] - img[(i - 1) * nz + k]) / (2.0 * image.axes[0].delta)
        };
        let gz = if k == 0 || k + 1 == nz {
            1.0
        } else {
            (img[i * nz + k + 1] - img[i * nz + k - 1]) / (2.0 * image.axes[1].delta)
        };
        let norm = (gx * gx + gz * gz).sqrt();
        if norm < 1e-300 {
            (0.0, 1.0)
        } else {
            (gx / norm, gz.abs() / norm)
        }
    };

    // the illumination factor is a smooth function of position: evaluate
    // it on a coarse lattice and interpolate bilinearly
    let stride = 4usize;
    let xi_nodes: Vec<usize> = lattice_nodes(nx, stride);
    let zi_nodes: Vec<usize> = lattice_nodes(nz, stride);
    let lattice: Vec<f64> = {
        let pairs: Vec<(usize, usize)> = xi_nodes
            .iter()
            .flat_map(|&i| zi_nodes.iter().map(move |&k| (i, k)))
            .collect();
        pairs
            .par_iter()
            .map(|&(i, k)| {
                let x = image.axes[0].at(i);
                let z = image.axes[1].at(k);
                let zeta_scale = 2.0 * tau_c / view.c_at(x, z);
                let (ex, ez) = match direction {
                    PhiDirection::VerticalOnly => (0.0, 1.0),
                    PhiDirection::LocalDip => dip_at(i, k),
                };
                phi_symbol_view(
                    x,
                    z,
                    zeta_scale * ex,
                    (zeta_scale * ez).max(1e-12),
                    &view,
                    geometry,
                    mute,
                    n_theta,
                )
                .unwrap_or(0.0)
            })
            .collect()
    };
    let nzl = zi_nodes.len();
    let lat_at = |li: usize, lk: usize| lattice[li * nzl + lk];
    let segment = |nodes: &[usize], idx: usize| -> (usize, f64) {
        // lattice segment containing idx and the interpolation weight
        let mut seg = 0;
        while seg + 2 < nodes.len() && nodes[seg + 1] <= idx {
            seg += 1;
        }
        let (a, b) = (nodes[seg], nodes[seg + 1]);
        if b == a {
            (seg, 0.0)
        } else {
            (seg, (idx - a) as f64 / (b - a) as f64)
        }
    };
    let phi: Vec<f64> = (0..nx * nz)
        .map(|idx| {
            let i = idx / nz;
            let k = idx % nz;
            let (si, u) = segment(&xi_nodes, i);
            let (sk, v) = segment(&zi_nodes, k);
            lat_at(si, sk) * (1.0 - u) * (1.0 - v)
                + lat_at(si + 1, sk) * u * (1.0 - v)
                + lat_at(si, sk + 1) * (1.0 - u) * v
                + lat_at(si + 1, sk + 1) * u * v
        })
        .collect();

    let phi_max = phi.iter().cloned().fold(0.0f64, f64::max);
    if phi_max == 0.0 {
        return Err(Error::Data("illumination factor vanishes everywhere".into()));
    }
    let floor = 1e-3 * phi_max;
    let out: Vec<f64> = img
        .iter()
        .zip(&phi)
        .map(|(v, p)| v / p.max(floor))
        .collect();
    Grid2D::new(image.axes.clone(), GridValues::Real(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisLabel;

    fn constant_setup() -> (Grid2D, AcquisitionGeometry, MuteConfig) {
        let nx = 41;
        let dx = 50.0;
        let x0 = -(nx as f64 - 1.0) * dx / 2.0;
        let nz = 41;
        let dz = 25.0;
        let model = Grid2D::new(
            [
                Axis::new(nx, dx, x0, AxisLabel::X).unwrap(),
                Axis::new(nz, dz, 0.0, AxisLabel::Z).unwrap(),
            ],
            GridValues::Real(vec![2000.0; nx * nz]),
        )
        .unwrap();
        let geometry = AcquisitionGeometry {
            s_axis: Axis::new(nx, dx, x0, AxisLabel::S).unwrap(),
            r_axis: Axis::new(nx, dx, x0, AxisLabel::R).unwrap(),
            t_axis: Axis::new(256, 0.004, 0.0, AxisLabel::T).unwrap(),
            z_max: (nz - 1) as f64 * dz,
            dz,
        };
        let mute = MuteConfig::new(3.5e-4, hz(6.0), hz(30.0));
        (model, geometry, mute)
    }

    fn hz(f: f64) -> f64 {
        2.0 * std::f64::consts::PI * f
    }

    #[test]
    fn xi_symbol_values_and_fd_oracle() {
        let (model, _, _) = constant_setup();
        let c = 2000.0;
        let tau = 60.0;
        let v0 = xi_symbol(0.0, 0.0, 0.0, 0.0, tau, 500.0, &model).unwrap();
        assert!((v0 - 2.0 / c).abs() < 1e-15);
        let v1 = xi_symbol(0.0, 0.0, 0.6 * tau / c, 0.0, tau, 500.0, &model).unwrap();
        assert!((v1 - 2.25 / c).abs() < 1e-12);

        // |dGamma/dtau| by centered differences at random propagating points
        let mut state = 42u64;
        let mut rand01 = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..30 {
            let tau = 30.0 + 90.0 * rand01();
            let sigma = (2.0 * rand01() - 1.0) * 0.8 * tau / c;
            let rho = (2.0 * rand01() - 1.0) * 0.8 * tau / c;
            let z = 100.0 + 800.0 * rand01();
            let h = tau * 1e-6;
            let gp = crate::ray::gamma_symbol(0.0, 0.0, sigma, rho, tau + h, z, &model).unwrap();
            let gm = crate::ray::gamma_symbol(0.0, 0.0, sigma, rho, tau - h, z, &model).unwrap();
            let fd = (gp - gm) / (2.0 * h);
            let xi = xi_symbol(0.0, 0.0, sigma, rho, tau, z, &model).unwrap();
            assert!(
                (fd - xi).abs() <= 1e-6 * xi.abs(),
                "fd {fd} vs symbol {xi}"
            );
        }
    }

    #[test]
    fn phi_support_behavior() {
        let (model, geometry, mute) = constant_setup();
        let tau_c = 0.5 * (mute.omega_min + mute.omega_max);
        let zeta = 2.0 * tau_c / 2000.0;
        // wide-open mute, vertical direction at a central point: illuminated
        let phi = phi_symbol(0.0, 500.0, 0.0, zeta, &model, &geometry, &mute, 129).unwrap();
        assert!(phi > 0.0, "expected illumination, phi = {phi}");

        // a vanishing dip cut empties the support
        let mut closed = mute.clone();
        closed.slowness_cut = 0.0;
        let phi0 = phi_symbol(0.0, 500.0, 0.0, zeta, &model, &geometry, &closed, 129).unwrap();
        assert_eq!(phi0, 0.0);

        // zero direction is rejected
        assert!(phi_symbol(0.0, 500.0, 0.0, 0.0, &model, &geometry, &mute, 65).is_err());
    }

    #[test]
    fn phi_matches_straight_ray_quadrature_in_constant_medium() {
        // independent oracle: in a constant medium the legs are straight
        // lines, so the pulled-back windows can be evaluated in closed
        // form; integrate over the take-off angle with its Jacobian
        let (model, geometry, mute) = constant_setup();
        let c = 2000.0;
        let (x, z) = (0.0, 600.0);
        let tau_c = 0.5 * (mute.omega_min + mute.omega_max);
        let zeta = 2.0 * tau_c / c;
        let phi = phi_symbol(x, z, 0.0, zeta, &model, &geometry, &mute, 513).unwrap();

        // theta parameterizes the offset wavenumber; with xi = 0 the legs
        // carry sigma = -theta, rho = +theta and tau^2 = c^2 (zeta^2/4 + theta^2)
        let n = 20001;
        let theta_hi = 1.5 * zeta;
        let dth = 2.0 * theta_hi / (n - 1) as f64;
        let mut oracle = 0.0;
        for i in 0..n {
            let theta = -theta_hi + dth * i as f64;
            let tau = c * (zeta * zeta / 4.0 + theta * theta).sqrt();
            // straight legs: horizontal slowness +-theta/tau, landing at
            // x +- z * tan(angle); vertical slowness per leg
            let b = (tau * tau / (c * c) - theta * theta).sqrt();
            let s_land = x - z * (-theta) / b; // leg with sigma = -theta
            let r_land = x - z * theta / b;
            let t_total = 2.0 * (tau / (c * c)) * z / b;
            let inside = s_land >= geometry.s_axis.origin
                && s_land <= geometry.s_axis.end()
                && r_land >= geometry.r_axis.origin
                && r_land <= geometry.r_axis.end()
                && t_total <= geometry.t_axis.end();
            if !inside {
                continue;
            }
            let w = mute.band_window(tau) * mute.dip_window(theta / tau) * mute.dip_window(theta / tau);
            let trap = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            oracle += trap * w;
        }
        oracle *= dth;
        let rel = (phi - oracle).abs() / oracle.abs();
        assert!(rel < 0.10, "phi {phi} vs oracle {oracle} (rel {rel})");
    }

    #[test]
    fn normalize_by_phi_uniform_scaling() {
        let (model, geometry, mute) = constant_setup();
        let axes = geometry.image_axes();
        let n = axes[0].n * axes[1].n;
        let image = Grid2D::new(axes.clone(), GridValues::Real(vec![3.0; n])).unwrap();
        let out = normalize_by_phi(&image, &model, &geometry, &mute, PhiDirection::VerticalOnly, 33)
            .unwrap();
        // zero image stays zero
        let zero = Grid2D::new(axes, GridValues::Real(vec![0.0; n])).unwrap();
        let z =
            normalize_by_phi(&zero, &model, &geometry, &mute, PhiDirection::VerticalOnly, 33).unwrap();
        assert!(z.real().unwrap().iter().all(|&v| v == 0.0));
        // interior points with comparable illumination scale comparably
        let v = out.real().unwrap();
        let nz = out.axes[1].n;
        let mid = v[(out.axes[0].n / 2) * nz + nz / 2];
        assert!(mid > 0.0);
    }
}
