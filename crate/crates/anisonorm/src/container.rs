//! Flat binary container for grid functions.
//!
//! Byte layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "AGF1"
//! 4       4     format version (u32, currently 1)
//! 8       1     flags (bit 0: complex samples)
//! 9       4     rank l (u32)
//! 13      8*l   axis lengths (u64 each)
//! ..      8*l   truncation radii (f64 each)
//! ..      ...   axis coordinate arrays, in axis order (f64 each)
//! ..      ...   samples, row-major; complex stores re then im per sample
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use thiserror::Error;

use crate::error::GridError;
use crate::grid::{Axis, GridFunction, Values};

const MAGIC: &[u8; 4] = b"AGF1";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic bytes; not a grid-function container")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u32),
    #[error("container is malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn write_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64(w: &mut impl Write, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    Ok(u32::from_le_bytes(read_exact::<4>(r)?))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<8>(r)?))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<8>(r)?))
}

pub fn write_grid_function(w: &mut impl Write, f: &GridFunction) -> Result<(), ContainerError> {
    w.write_all(MAGIC)?;
    write_u32(w, VERSION)?;
    let complex = f.is_complex();
    w.write_all(&[u8::from(complex)])?;
    write_u32(w, f.rank() as u32)?;
    for axis in f.axes() {
        write_u64(w, axis.len() as u64)?;
    }
    for &r in f.truncation_radii() {
        write_f64(w, r)?;
    }
    for axis in f.axes() {
        for &x in axis.points() {
            write_f64(w, x)?;
        }
    }
    match f.values() {
        Values::Real(a) => {
            for &v in a.iter() {
                write_f64(w, v)?;
            }
        }
        Values::Complex(a) => {
            for v in a.iter() {
                write_f64(w, v.re)?;
                write_f64(w, v.im)?;
            }
        }
    }
    Ok(())
}

pub fn read_grid_function(r: &mut impl Read) -> Result<GridFunction, ContainerError> {
    let magic = read_exact::<4>(r)?;
    if &magic != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(ContainerError::BadVersion(version));
    }
    let flags = read_exact::<1>(r)?[0];
    let complex = flags & 1 == 1;
    let rank = read_u32(r)? as usize;
    if rank == 0 || rank > 16 {
        return Err(ContainerError::Malformed(format!("rank {rank}")));
    }
    let mut lens = Vec::with_capacity(rank);
    for _ in 0..rank {
        let n = read_u64(r)? as usize;
        if !(2..=1 << 24).contains(&n) {
            return Err(ContainerError::Malformed(format!("axis length {n}")));
        }
        lens.push(n);
    }
    // truncation radii are re-derived from the axes on load
    for _ in 0..rank {
        read_f64(r)?;
    }
    let mut axes = Vec::with_capacity(rank);
    for (j, &n) in lens.iter().enumerate() {
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            pts.push(read_f64(r)?);
        }
        axes.push(
            Axis::new(pts)
                .map_err(|_| ContainerError::Malformed(format!("axis {j} not increasing")))?,
        );
    }
    let total: usize = lens.iter().product();
    let values = if complex {
        let mut v = Vec::with_capacity(total);
        for _ in 0..total {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            v.push(Complex64::new(re, im));
        }
        Values::Complex(
            ArrayD::from_shape_vec(IxDyn(&lens), v)
                .map_err(|e| ContainerError::Malformed(e.to_string()))?,
        )
    } else {
        let mut v = Vec::with_capacity(total);
        for _ in 0..total {
            v.push(read_f64(r)?);
        }
        Values::Real(
            ArrayD::from_shape_vec(IxDyn(&lens), v)
                .map_err(|e| ContainerError::Malformed(e.to_string()))?,
        )
    };
    Ok(GridFunction::new(axes, values)?)
}

pub fn save(path: impl AsRef<Path>, f: &GridFunction) -> Result<(), ContainerError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_grid_function(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<GridFunction, ContainerError> {
    let mut r = BufReader::new(File::open(path)?);
    read_grid_function(&mut r)
}
