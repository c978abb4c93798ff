//! `WEGRID01` binary container: the bit-exact on-disk form of every grid
//! and cube produced by the toolkit.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes ASCII "WEGRID01"
//! ndim     u32 (1..=4)
//! per dim: n u64, delta f64, origin f64, label 8 ASCII bytes space-padded
//! dtype    u32 (0 = real f64, 1 = complex f64 interleaved re,im)
//! payload  f64 samples, row-major, last dimension fastest
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::angle::AngleGather;
use crate::annihilator::SunkField;
use crate::error::{Error, Result};
use crate::grid::{Axis, AxisLabel, DataCube, Grid2D, GridValues, SpectrumCube};
use crate::C64;

pub const MAGIC: &[u8; 8] = b"WEGRID01";

/// Any value the container format can hold.
#[derive(Debug, Clone)]
pub enum Container {
    Grid(Grid2D),
    Data(DataCube),
    Spectrum(SpectrumCube),
    Gather(AngleGather),
    Sunk(SunkField),
}

impl Container {
    fn axes(&self) -> Vec<Axis> {
        match self {
            Container::Grid(g) => g.axes.to_vec(),
            Container::Data(d) => d.axes.to_vec(),
            Container::Spectrum(s) => s.axes.to_vec(),
            Container::Gather(g) => g.axes.to_vec(),
            Container::Sunk(s) => s.axes.to_vec(),
        }
    }

    fn values(&self) -> GridValues {
        match self {
            Container::Grid(g) => g.values.clone(),
            Container::Data(d) => GridValues::Real(d.values.clone()),
            Container::Spectrum(s) => GridValues::Complex(s.values.clone()),
            Container::Gather(g) => GridValues::Real(g.values.clone()),
            Container::Sunk(s) => GridValues::Real(s.values.clone()),
        }
    }

    pub fn into_grid(self) -> Result<Grid2D> {
        match self {
            Container::Grid(g) => Ok(g),
            other => Err(Error::Format(format!("expected a 2D grid, found {}", other.kind()))),
        }
    }

    pub fn into_data(self) -> Result<DataCube> {
        match self {
            Container::Data(d) => Ok(d),
            other => Err(Error::Format(format!("expected a data cube, found {}", other.kind()))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Container::Grid(_) => "grid",
            Container::Data(_) => "data cube",
            Container::Spectrum(_) => "spectrum cube",
            Container::Gather(_) => "angle gather",
            Container::Sunk(_) => "sunk field",
        }
    }
}

impl From<Grid2D> for Container {
    fn from(g: Grid2D) -> Self {
        Container::Grid(g)
    }
}
impl From<DataCube> for Container {
    fn from(d: DataCube) -> Self {
        Container::Data(d)
    }
}
impl From<SpectrumCube> for Container {
    fn from(s: SpectrumCube) -> Self {
        Container::Spectrum(s)
    }
}
impl From<AngleGather> for Container {
    fn from(g: AngleGather) -> Self {
        Container::Gather(g)
    }
}
impl From<SunkField> for Container {
    fn from(s: SunkField) -> Self {
        Container::Sunk(s)
    }
}

/// Write a value to `path`, bit-exact per the layout above.
pub fn write_container<P: AsRef<Path>>(value: &Container, path: P) -> Result<()> {
    let axes = value.axes();
    let values = value.values();
    if !values.all_finite() {
        return Err(Error::Data("refusing to write non-finite samples".into()));
    }
    let count: usize = axes.iter().map(|a| a.n).product();
    if values.len() != count {
        return Err(Error::Length(format!(
            "payload has {} samples, axes require {count}",
            values.len()
        )));
    }

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(axes.len() as u32)?;
    for a in &axes {
        w.write_u64::<LittleEndian>(a.n as u64)?;
        w.write_f64::<LittleEndian>(a.delta)?;
        w.write_f64::<LittleEndian>(a.origin)?;
        let mut label = [b' '; 8];
        let s = a.label.as_str().as_bytes();
        label[..s.len()].copy_from_slice(s);
        w.write_all(&label)?;
    }
    match &values {
        GridValues::Real(v) => {
            w.write_u32::<LittleEndian>(0)?;
            for x in v {
                w.write_f64::<LittleEndian>(*x)?;
            }
        }
        GridValues::Complex(v) => {
            w.write_u32::<LittleEndian>(1)?;
            for x in v {
                w.write_f64::<LittleEndian>(x.re)?;
                w.write_f64::<LittleEndian>(x.im)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a container and classify it by dimensionality, dtype and labels.
pub fn read_container<P: AsRef<Path>>(path: P) -> Result<Container> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for magic bytes".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(MAGIC)
        )));
    }

    let ndim = r
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::Format("truncated header (ndim)".into()))? as usize;
    if !(1..=4).contains(&ndim) {
        return Err(Error::Format(format!("ndim {ndim} outside 1..=4")));
    }

    let mut axes = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let n = r
            .read_u64::<LittleEndian>()
            .map_err(|_| Error::Format("truncated axis header".into()))? as usize;
        let delta = r
            .read_f64::<LittleEndian>()
            .map_err(|_| Error::Format("truncated axis header".into()))?;
        let origin = r
            .read_f64::<LittleEndian>()
            .map_err(|_| Error::Format("truncated axis header".into()))?;
        let mut label = [0u8; 8];
        r.read_exact(&mut label)
            .map_err(|_| Error::Format("truncated axis header".into()))?;
        let label = AxisLabel::parse(
            std::str::from_utf8(&label)
                .map_err(|_| Error::Format("axis label is not ASCII".into()))?,
        )?;
        axes.push(Axis::new(n, delta, origin, label)?);
    }

    let dtype = r
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::Format("truncated header (dtype)".into()))?;
    let count: usize = axes.iter().map(|a| a.n).product();

    let values = match dtype {
        0 => {
            let mut v = vec![0.0f64; count];
            r.read_f64_into::<LittleEndian>(&mut v)
                .map_err(|_| Error::Length(format!("payload shorter than {count} real samples")))?;
            GridValues::Real(v)
        }
        1 => {
            let mut raw = vec![0.0f64; 2 * count];
            r.read_f64_into::<LittleEndian>(&mut raw).map_err(|_| {
                Error::Length(format!("payload shorter than {count} complex samples"))
            })?;
            GridValues::Complex(
                raw.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect(),
            )
        }
        other => return Err(Error::Format(format!("unknown dtype tag {other}"))),
    };

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Length("trailing bytes after payload".into()));
    }
    if !values.all_finite() {
        return Err(Error::Data("container holds non-finite samples".into()));
    }

    classify(axes, values)
}

fn classify(axes: Vec<Axis>, values: GridValues) -> Result<Container> {
    let labels: Vec<AxisLabel> = axes.iter().map(|a| a.label).collect();
    match (axes.len(), &values) {
        (2, _) => {
            let axes: [Axis; 2] = [axes[0].clone(), axes[1].clone()];
            Ok(Container::Grid(Grid2D::new(axes, values)?))
        }
        (3, GridValues::Real(_)) => {
            let axes: [Axis; 3] = [axes[0].clone(), axes[1].clone(), axes[2].clone()];
            let v = match values {
                GridValues::Real(v) => v,
                _ => unreachable!(),
            };
            match labels.as_slice() {
                [AxisLabel::S, AxisLabel::R, AxisLabel::T] => {
                    Ok(Container::Data(DataCube::new(axes, v)?))
                }
                [AxisLabel::X, AxisLabel::Z, AxisLabel::P] => {
                    Ok(Container::Gather(AngleGather::new(axes, v)?))
                }
                [AxisLabel::S, AxisLabel::R, AxisLabel::Z] => {
                    Ok(Container::Sunk(SunkField::new(axes, v)?))
                }
                other => Err(Error::Format(format!(
                    "unsupported real 3D axis labels {:?}",
                    other.iter().map(|l| l.as_str()).collect::<Vec<_>>()
                ))),
            }
        }
        (3, GridValues::Complex(_)) => {
            let axes: [Axis; 3] = [axes[0].clone(), axes[1].clone(), axes[2].clone()];
            let v = match values {
                GridValues::Complex(v) => v,
                _ => unreachable!(),
            };
            Ok(Container::Spectrum(SpectrumCube::new(axes, v)?))
        }
        (n, _) => Err(Error::Format(format!("no in-memory type for ndim {n}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_size_is_fixed() {
        // magic + ndim + 2 axes * (8 + 8 + 8 + 8) + dtype
        let axes = [
            Axis::new(1, 1.0, 0.0, AxisLabel::X).unwrap(),
            Axis::new(1, 1.0, 0.0, AxisLabel::Z).unwrap(),
        ];
        let g = Grid2D::new(axes, GridValues::Real(vec![0.0])).unwrap();
        let dir = std::env::temp_dir().join("wemig_header_test.wegrid");
        write_container(&Container::Grid(g), &dir).unwrap();
        let bytes = std::fs::read(&dir).unwrap();
        assert_eq!(bytes.len(), 8 + 4 + 2 * 32 + 4 + 8);
        // 1x1 real grid of value 0: payload is 8 zero bytes after the header
        assert_eq!(&bytes[bytes.len() - 8..], &[0u8; 8]);
        std::fs::remove_file(&dir).unwrap();
    }
}
