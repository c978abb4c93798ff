//! Deterministic construction of background models, perturbations and
//! acquisition geometries for synthetic experiments.

use crate::dsr::AcquisitionGeometry;
use crate::error::{Error, Result};
use crate::grid::{Axis, AxisLabel, Grid2D, GridValues};

/// Smooth background velocity families.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Constant { c: f64 },
    /// `c(z) = a + b z`.
    Gradient { a: f64, b: f64 },
    /// Multiplicative Gaussian anomaly on a constant background:
    /// `c = background (1 + amplitude exp(-r^2 / (2 radius^2)))`.
    GaussianLens { background: f64, center: (f64, f64), radius: f64, amplitude: f64 },
}

/// Perturbation families, all tapered against grid ringing.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationKind {
    None,
    /// Tapered spikes at (x, z, amplitude).
    Points(Vec<(f64, f64, f64)>),
    /// Horizontal band centered at z0.
    Reflector { z0: f64, thickness: f64, amplitude: f64 },
    /// Dipping segment centered at the lateral midpoint.
    Dip { z0: f64, slope: f64, extent: f64, amplitude: f64 },
}

/// Everything needed to build one synthetic experiment.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub model: ModelKind,
    pub perturbation: PerturbationKind,
    pub x_axis: Axis,
    pub z_axis: Axis,
    pub nt: usize,
    pub dt: f64,
    /// Deepest continuation depth; defaults to the grid extent.
    pub z_max: Option<f64>,
    /// Minimum depth (m) that the perturbation support must respect.
    pub clearance: f64,
}

impl SceneSpec {
    pub fn new(model: ModelKind, perturbation: PerturbationKind, x_axis: Axis, z_axis: Axis, nt: usize, dt: f64) -> Self {
        let clearance = 2.0 * z_axis.delta;
        SceneSpec { model, perturbation, x_axis, z_axis, nt, dt, z_max: None, clearance }
    }
}

fn build_model(spec: &SceneSpec) -> Result<Grid2D> {
    let (nx, nz) = (spec.x_axis.n, spec.z_axis.n);
    let mut v = Vec::with_capacity(nx * nz);
    for i in 0..nx {
        let x = spec.x_axis.at(i);
        for j in 0..nz {
            let z = spec.z_axis.at(j);
            let c = match &spec.model {
                ModelKind::Constant { c } => *c,
                ModelKind::Gradient { a, b } => a + b * z,
                ModelKind::GaussianLens { background, center, radius, amplitude } => {
                    let dx = x - center.0;
                    let dz = z - center.1;
                    let g = (-(dx * dx + dz * dz) / (2.0 * radius * radius)).exp();
                    background * (1.0 + amplitude * g)
                }
            };
            if !(c > 0.0) {
                return Err(Error::Config(format!(
                    "model velocity must stay positive, got {c} at ({x}, {z})"
                )));
            }
            v.push(c);
        }
    }
    Grid2D::new([spec.x_axis, spec.z_axis], GridValues::Real(v))
}

/// Cosine bump of unit height and half-width `half` around 0.
fn bump(u: f64, half: f64) -> f64 {
    if half <= 0.0 || u.abs() >= half {
        0.0
    } else {
        let c = (std::f64::consts::FRAC_PI_2 * u / half).cos();
        c * c
    }
}

/// Band profile: 1 on the core, 2-cell cosine edges.
fn band_profile(u: f64, half_core: f64, edge: f64) -> f64 {
    let a = u.abs();
    if a <= half_core {
        1.0
    } else if a >= half_core + edge {
        0.0
    } else {
        let c = (std::f64::consts::FRAC_PI_2 * (a - half_core) / edge).cos();
        c * c
    }
}

fn build_perturbation(spec: &SceneSpec) -> Result<Grid2D> {
    let (nx, nz) = (spec.x_axis.n, spec.z_axis.n);
    let dx = spec.x_axis.delta;
    let dz = spec.z_axis.delta;
    let mut v = vec![0.0; nx * nz];
    let mut deposit = |i: usize, j: usize, val: f64| {
        v[i * nz + j] += val;
    };
    match &spec.perturbation {
        PerturbationKind::None => {}
        PerturbationKind::Points(points) => {
            for &(px, pz, amp) in points {
                if pz < spec.clearance {
                    return Err(Error::Contract(format!(
                        "point scatterer at z = {pz} violates the clearance depth {}",
                        spec.clearance
                    )));
                }
                if !spec.x_axis.contains(px) || !spec.z_axis.contains(pz) {
                    return Err(Error::Contract("scatterer outside the model grid".into()));
                }
                for i in 0..nx {
                    let wx = bump(spec.x_axis.at(i) - px, 2.0 * dx);
                    if wx == 0.0 {
                        continue;
                    }
                    for j in 0..nz {
                        let wz = bump(spec.z_axis.at(j) - pz, 2.0 * dz);
                        if wz != 0.0 {
                            deposit(i, j, amp * wx * wz);
                        }
                    }
                }
            }
        }
        PerturbationKind::Reflector { z0, thickness, amplitude } => {
            let half_core = (thickness / 2.0 - 2.0 * dz).max(0.0);
            let edge = (thickness / 2.0 - half_core).max(2.0 * dz);
            if z0 - half_core - edge < spec.clearance {
                return Err(Error::Contract(
                    "reflector support violates the clearance depth".into(),
                ));
            }
            for j in 0..nz {
                let w = band_profile(spec.z_axis.at(j) - z0, half_core, edge);
                if w != 0.0 {
                    for i in 0..nx {
                        deposit(i, j, amplitude * w);
                    }
                }
            }
        }
        PerturbationKind::Dip { z0, slope, extent, amplitude } => {
            let xc = 0.5 * (spec.x_axis.origin + spec.x_axis.end());
            for i in 0..nx {
                let x = spec.x_axis.at(i);
                let lateral = band_profile(x - xc, extent / 2.0 - 2.0 * dx, 2.0 * dx);
                if lateral == 0.0 {
                    continue;
                }
                let z_line = z0 + slope * (x - xc);
                if z_line - 2.0 * dz < spec.clearance {
                    return Err(Error::Contract(
                        "dipping segment support violates the clearance depth".into(),
                    ));
                }
                for j in 0..nz {
                    let w = bump(spec.z_axis.at(j) - z_line, 2.0 * dz);
                    if w != 0.0 {
                        deposit(i, j, amplitude * lateral * w);
                    }
                }
            }
        }
    }
    Grid2D::new([spec.x_axis, spec.z_axis], GridValues::Real(v))
}

/// Build (background, perturbation, geometry) from a scene description.
/// Identical specs produce bit-identical outputs.
pub fn build_scene(spec: &SceneSpec) -> Result<(Grid2D, Grid2D, AcquisitionGeometry)> {
    if spec.z_axis.origin != 0.0 {
        return Err(Error::Config("scene z-axis must start at the surface z = 0".into()));
    }
    if !(spec.clearance > 0.0) {
        return Err(Error::Config("scene clearance must be positive".into()));
    }
    let model = build_model(spec)?;
    let dc = build_perturbation(spec)?;
    let z_max = spec.z_max.unwrap_or_else(|| spec.z_axis.end());
    let geometry = AcquisitionGeometry {
        s_axis: Axis { label: AxisLabel::S, ..spec.x_axis },
        r_axis: Axis { label: AxisLabel::R, ..spec.x_axis },
        t_axis: Axis::new(spec.nt, spec.dt, 0.0, AxisLabel::T)?,
        z_max,
        dz: spec.z_axis.delta,
    };
    geometry.validate()?;
    Ok((model, dc, geometry))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> (Axis, Axis) {
        (
            Axis::new(61, 25.0, -750.0, AxisLabel::X).unwrap(),
            Axis::new(81, 12.5, 0.0, AxisLabel::Z).unwrap(),
        )
    }

    #[test]
    fn constant_point_scene() {
        let (ax, az) = axes();
        let spec = SceneSpec::new(
            ModelKind::Constant { c: 2000.0 },
            PerturbationKind::Points(vec![(0.0, 500.0, 1.0)]),
            ax,
            az,
            256,
            0.004,
        );
        let (model, dc, geometry) = build_scene(&spec).unwrap();
        assert!(model.real().unwrap().iter().all(|&c| c == 2000.0));
        let v = dc.real().unwrap();
        let nz = az.n;
        // single tapered spike centered at the scatterer
        let i0 = ax.index_of(0.0).round() as usize;
        let j0 = az.index_of(500.0).round() as usize;
        assert_eq!(v[i0 * nz + j0], 1.0);
        let support: usize = v.iter().filter(|&&x| x != 0.0).count();
        assert!(support > 1 && support < 100);
        assert_eq!(geometry.depth_axis().n, az.n);

        // reproducibility
        let (m2, d2, _) = build_scene(&spec).unwrap();
        assert_eq!(model, m2);
        assert_eq!(dc, d2);
    }

    #[test]
    fn gradient_and_lens_models() {
        let (ax, az) = axes();
        let spec = SceneSpec::new(
            ModelKind::Gradient { a: 1500.0, b: 0.5 },
            PerturbationKind::None,
            ax,
            az,
            128,
            0.004,
        );
        let (model, _, _) = build_scene(&spec).unwrap();
        let nz = az.n;
        for j in 0..nz {
            assert_eq!(model.real().unwrap()[j], 1500.0 + 0.5 * az.at(j));
        }

        let lens = SceneSpec::new(
            ModelKind::GaussianLens {
                background: 2000.0,
                center: (0.0, 500.0),
                radius: 150.0,
                amplitude: -0.10,
            },
            PerturbationKind::None,
            ax,
            az,
            128,
            0.004,
        );
        let (model, _, _) = build_scene(&lens).unwrap();
        let v = model.real().unwrap();
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((min - 1800.0).abs() < 1e-9);
        let i0 = ax.index_of(0.0).round() as usize;
        let j0 = az.index_of(500.0).round() as usize;
        assert_eq!(v[i0 * nz + j0], min);
    }

    #[test]
    fn clearance_is_enforced() {
        let (ax, az) = axes();
        let spec = SceneSpec::new(
            ModelKind::Constant { c: 2000.0 },
            PerturbationKind::Points(vec![(0.0, 10.0, 1.0)]),
            ax,
            az,
            128,
            0.004,
        );
        assert!(matches!(build_scene(&spec), Err(Error::Contract(_))));
    }
}
