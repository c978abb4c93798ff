//! Regularly sampled grid and cube types.
//!
//! Layout convention for all dense payloads: row-major, last axis fastest,
//! 64-bit floats (complex values interleaved re,im). The same convention is
//! used on disk by the `WEGRID01` container.

use crate::error::{Error, Result};
use crate::C64;

/// Axis labels admitted by the container format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisLabel {
    X,
    Z,
    T,
    S,
    R,
    P,
    Omega,
}

impl AxisLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisLabel::X => "x",
            AxisLabel::Z => "z",
            AxisLabel::T => "t",
            AxisLabel::S => "s",
            AxisLabel::R => "r",
            AxisLabel::P => "p",
            AxisLabel::Omega => "omega",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "x" => Ok(AxisLabel::X),
            "z" => Ok(AxisLabel::Z),
            "t" => Ok(AxisLabel::T),
            "s" => Ok(AxisLabel::S),
            "r" => Ok(AxisLabel::R),
            "p" => Ok(AxisLabel::P),
            "omega" => Ok(AxisLabel::Omega),
            other => Err(Error::Format(format!("unknown axis label {other:?}"))),
        }
    }
}

/// One regularly sampled coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub n: usize,
    pub delta: f64,
    pub origin: f64,
    pub label: AxisLabel,
}

impl Axis {
    pub fn new(n: usize, delta: f64, origin: f64, label: AxisLabel) -> Result<Self> {
        if n == 0 {
            return Err(Error::Data(format!("axis {}: n must be >= 1", label.as_str())));
        }
        if !(delta > 0.0) || !delta.is_finite() || !origin.is_finite() {
            return Err(Error::Data(format!(
                "axis {}: delta must be positive and finite",
                label.as_str()
            )));
        }
        Ok(Axis { n, delta, origin, label })
    }

    /// Coordinate of sample `i`.
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.origin + self.delta * i as f64
    }

    /// Coordinate of the last sample.
    pub fn end(&self) -> f64 {
        self.at(self.n - 1)
    }

    /// Fractional index of coordinate `v` (not clamped).
    #[inline]
    pub fn index_of(&self, v: f64) -> f64 {
        (v - self.origin) / self.delta
    }

    pub fn contains(&self, v: f64) -> bool {
        let i = self.index_of(v);
        i >= 0.0 && i <= (self.n - 1) as f64
    }

    pub fn coords(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.at(i))
    }

    /// Axes are compatible when sampling and label agree to round-off.
    pub fn approx_eq(&self, other: &Axis) -> bool {
        self.n == other.n
            && self.label == other.label
            && (self.delta - other.delta).abs() <= 1e-12 * self.delta.abs().max(1.0)
            && (self.origin - other.origin).abs() <= 1e-9 * self.delta
    }
}

/// Dense sample payload of a 2D grid.
#[derive(Debug, Clone, PartialEq)]
pub enum GridValues {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl GridValues {
    pub fn len(&self) -> usize {
        match self {
            GridValues::Real(v) => v.len(),
            GridValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_finite(&self) -> bool {
        match self {
            GridValues::Real(v) => v.iter().all(|x| x.is_finite()),
            GridValues::Complex(v) => v.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
        }
    }
}

/// Regular 2D field with axis metadata; carries velocity models,
/// perturbations and images.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub axes: [Axis; 2],
    pub values: GridValues,
}

impl Grid2D {
    pub fn new(axes: [Axis; 2], values: GridValues) -> Result<Self> {
        let want = axes[0].n * axes[1].n;
        if values.len() != want {
            return Err(Error::Length(format!(
                "grid payload has {} samples, axes require {}",
                values.len(),
                want
            )));
        }
        if !values.all_finite() {
            return Err(Error::Data("grid contains non-finite samples".into()));
        }
        Ok(Grid2D { axes, values })
    }

    pub fn zeros(axes: [Axis; 2]) -> Self {
        let n = axes[0].n * axes[1].n;
        Grid2D { axes, values: GridValues::Real(vec![0.0; n]) }
    }

    pub fn real(&self) -> Result<&[f64]> {
        match &self.values {
            GridValues::Real(v) => Ok(v),
            GridValues::Complex(_) => Err(Error::Data("expected a real-valued grid".into())),
        }
    }

    pub fn real_mut(&mut self) -> Result<&mut [f64]> {
        match &mut self.values {
            GridValues::Real(v) => Ok(v),
            GridValues::Complex(_) => Err(Error::Data("expected a real-valued grid".into())),
        }
    }

    /// Row-major sample index, last axis fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.axes[1].n + j
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        match &self.values {
            GridValues::Real(v) => v[self.idx(i, j)],
            GridValues::Complex(v) => v[self.idx(i, j)].re,
        }
    }

    /// Discrete L2 inner product with the axis measure.
    pub fn dot(&self, other: &Grid2D) -> Result<f64> {
        let a = self.real()?;
        let b = other.real()?;
        if a.len() != b.len() {
            return Err(Error::Axis("grid size mismatch in dot".into()));
        }
        let w = self.axes[0].delta * self.axes[1].delta;
        Ok(w * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
    }

    pub fn norm(&self) -> f64 {
        match &self.values {
            GridValues::Real(v) => {
                let w = self.axes[0].delta * self.axes[1].delta;
                (w * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
            }
            GridValues::Complex(v) => {
                let w = self.axes[0].delta * self.axes[1].delta;
                (w * v.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt()
            }
        }
    }
}

/// Reflection data d(s, r, t) on the acquisition grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    pub axes: [Axis; 3],
    pub values: Vec<f64>,
}

impl DataCube {
    pub fn new(axes: [Axis; 3], values: Vec<f64>) -> Result<Self> {
        let want = axes[0].n * axes[1].n * axes[2].n;
        if values.len() != want {
            return Err(Error::Length(format!(
                "cube payload has {} samples, axes require {}",
                values.len(),
                want
            )));
        }
        let labels = [axes[0].label, axes[1].label, axes[2].label];
        if labels != [AxisLabel::S, AxisLabel::R, AxisLabel::T] {
            return Err(Error::Axis("data cube axes must be labeled s, r, t".into()));
        }
        if axes[2].origin != 0.0 {
            return Err(Error::Data("data cube t-axis must start at 0".into()));
        }
        if !values.iter().all(|x| x.is_finite()) {
            return Err(Error::Data("data cube contains non-finite samples".into()));
        }
        Ok(DataCube { axes, values })
    }

    pub fn zeros(axes: [Axis; 3]) -> Result<Self> {
        let n = axes[0].n * axes[1].n * axes[2].n;
        DataCube::new(axes, vec![0.0; n])
    }

    #[inline]
    pub fn idx(&self, is: usize, ir: usize, it: usize) -> usize {
        (is * self.axes[1].n + ir) * self.axes[2].n + it
    }

    /// One (s, r) trace as a contiguous slice.
    pub fn trace(&self, is: usize, ir: usize) -> &[f64] {
        let nt = self.axes[2].n;
        let k = (is * self.axes[1].n + ir) * nt;
        &self.values[k..k + nt]
    }

    pub fn dot(&self, other: &DataCube) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::Axis("cube size mismatch in dot".into()));
        }
        let w = self.axes[0].delta * self.axes[1].delta * self.axes[2].delta;
        Ok(w * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .sum::<f64>())
    }

    pub fn norm(&self) -> f64 {
        let w = self.axes[0].delta * self.axes[1].delta * self.axes[2].delta;
        (w * self.values.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }
}

/// Frequency-domain data: complex samples over (s, r, omega), retained
/// positive frequencies only.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCube {
    pub axes: [Axis; 3],
    pub values: Vec<C64>,
}

impl SpectrumCube {
    pub fn new(axes: [Axis; 3], values: Vec<C64>) -> Result<Self> {
        let want = axes[0].n * axes[1].n * axes[2].n;
        if values.len() != want {
            return Err(Error::Length(format!(
                "spectrum payload has {} samples, axes require {}",
                values.len(),
                want
            )));
        }
        let labels = [axes[0].label, axes[1].label, axes[2].label];
        if labels != [AxisLabel::S, AxisLabel::R, AxisLabel::Omega] {
            return Err(Error::Axis("spectrum axes must be labeled s, r, omega".into()));
        }
        if !(axes[2].origin > 0.0) {
            return Err(Error::Data("spectrum omega samples must be positive".into()));
        }
        if !values
            .iter()
            .all(|x| x.re.is_finite() && x.im.is_finite())
        {
            return Err(Error::Data("spectrum contains non-finite samples".into()));
        }
        Ok(SpectrumCube { axes, values })
    }

    #[inline]
    pub fn idx(&self, is: usize, ir: usize, iw: usize) -> usize {
        (is * self.axes[1].n + ir) * self.axes[2].n + iw
    }

    pub fn omega(&self, iw: usize) -> f64 {
        self.axes[2].at(iw)
    }

    /// Real part of the weighted complex inner product
    /// sum Re(a conj b) ds dr domega.
    pub fn dot(&self, other: &SpectrumCube) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::Axis("spectrum size mismatch in dot".into()));
        }
        let w = self.axes[0].delta * self.axes[1].delta * self.axes[2].delta;
        Ok(w * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x * y.conj()).re)
            .sum::<f64>())
    }

    pub fn norm(&self) -> f64 {
        let w = self.axes[0].delta * self.axes[1].delta * self.axes[2].delta;
        (w * self.values.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ax(n: usize, d: f64, o: f64, l: AxisLabel) -> Axis {
        Axis::new(n, d, o, l).unwrap()
    }

    #[test]
    fn axis_rejects_degenerate() {
        assert!(Axis::new(0, 1.0, 0.0, AxisLabel::X).is_err());
        assert!(Axis::new(4, 0.0, 0.0, AxisLabel::X).is_err());
        assert!(Axis::new(4, -1.0, 0.0, AxisLabel::X).is_err());
    }

    #[test]
    fn grid_checks_length_and_finiteness() {
        let axes = [ax(2, 10.0, 0.0, AxisLabel::X), ax(3, 5.0, -100.0, AxisLabel::Z)];
        assert!(Grid2D::new(axes.clone(), GridValues::Real(vec![0.0; 5])).is_err());
        assert!(Grid2D::new(axes.clone(), GridValues::Real(vec![f64::NAN; 6])).is_err());
        let g = Grid2D::new(axes, GridValues::Real(vec![1.0; 6])).unwrap();
        assert_eq!(g.at(1, 2), 1.0);
        assert_eq!(g.axes[1].at(2), -90.0);
    }

    #[test]
    fn cube_requires_srt_labels_and_zero_t_origin() {
        let bad = [ax(2, 1.0, 0.0, AxisLabel::S), ax(2, 1.0, 0.0, AxisLabel::R), ax(2, 1.0, 1.0, AxisLabel::T)];
        assert!(DataCube::new(bad, vec![0.0; 8]).is_err());
        let good = [ax(2, 1.0, 0.0, AxisLabel::S), ax(2, 1.0, 0.0, AxisLabel::R), ax(2, 1.0, 0.0, AxisLabel::T)];
        assert!(DataCube::new(good, vec![0.0; 8]).is_ok());
    }
}
