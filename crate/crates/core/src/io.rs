//! Binary and JSON serialization of fields, paths and kernels.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::SolutionPath;
use crate::error::{Error, Result};
use crate::fockspace::{ModeKind, PolyFunctional};
use crate::spectral::{CauchyPair, SpectralField, SpectralGrid};

const MAGIC: &[u8; 4] = b"KGSF";
const VERSION: u32 = 1;

fn header(grid: &SpectralGrid, out: &mut Vec<u8>) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n as u32).to_le_bytes());
    out.extend_from_slice(&(grid.modes as u32).to_le_bytes());
    for x in [grid.length, grid.m, grid.s] {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// Grid header followed by `count: u64` and (re, im) f64 pairs, little endian.
pub fn field_to_bytes(f: &SpectralField) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + 16 * f.coeffs.len());
    header(&f.grid, &mut out);
    out.extend_from_slice(&(f.coeffs.len() as u64).to_le_bytes());
    for c in &f.coeffs {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.at + N;
        let slice = self.buf.get(self.at..end).ok_or_else(|| Error::Format("truncated field record".into()))?;
        self.at = end;
        Ok(slice.try_into().expect("length checked"))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

fn read_field(r: &mut Reader) -> Result<SpectralField> {
    if &r.take::<4>()? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    let modes = r.u32()? as usize;
    let (length, m, s) = (r.f64()?, r.f64()?, r.f64()?);
    let grid = SpectralGrid::new(n, modes, length, m, s)?;
    let count = r.u64()? as usize;
    if count != grid.len() {
        return Err(Error::Format(format!("{count} coefficients for a grid of {}", grid.len())));
    }
    let mut coeffs = Vec::with_capacity(count);
    for _ in 0..count {
        let re = r.f64()?;
        let im = r.f64()?;
        coeffs.push(Complex64::new(re, im));
    }
    SpectralField::from_coeffs(grid, coeffs)
}

pub fn field_from_bytes(buf: &[u8]) -> Result<SpectralField> {
    let mut r = Reader { buf, at: 0 };
    let f = read_field(&mut r)?;
    if r.at != buf.len() {
        return Err(Error::Format("trailing bytes after field".into()));
    }
    Ok(f)
}

pub fn write_field(path: &Path, f: &SpectralField) -> Result<()> {
    fs::File::create(path)?.write_all(&field_to_bytes(f))?;
    Ok(())
}

pub fn read_field_file(path: &Path) -> Result<SpectralField> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    field_from_bytes(&buf)
}

pub fn field_to_json(f: &SpectralField) -> Result<String> {
    Ok(serde_json::to_string(f)?)
}

pub fn field_from_json(s: &str) -> Result<SpectralField> {
    let f: SpectralField = serde_json::from_str(s)?;
    SpectralField::from_coeffs(f.grid, f.coeffs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathIndex {
    pub grid: SpectralGrid,
    pub data: String,
    pub times: Vec<f64>,
    /// Byte offset of each record (u0 then u1).
    pub offsets: Vec<u64>,
}

/// Writes `<stem>.bin` (concatenated field records) and `<stem>.json` (index).
pub fn write_path(dir: &Path, stem: &str, path: &SolutionPath) -> Result<PathIndex> {
    let grid = path.last().grid();
    let mut bytes = Vec::new();
    let mut offsets = Vec::with_capacity(path.states.len());
    for s in &path.states {
        offsets.push(bytes.len() as u64);
        bytes.extend(field_to_bytes(&s.u0));
        bytes.extend(field_to_bytes(&s.u1));
    }
    let data = format!("{stem}.bin");
    fs::write(dir.join(&data), bytes)?;
    let index = PathIndex { grid, data, times: path.times.clone(), offsets };
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&index)?)?;
    Ok(index)
}

pub fn read_path(dir: &Path, stem: &str) -> Result<SolutionPath> {
    let index: PathIndex = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let buf = fs::read(dir.join(&index.data))?;
    let mut states = Vec::with_capacity(index.offsets.len());
    for &off in &index.offsets {
        let mut r = Reader { buf: &buf, at: off as usize };
        let u0 = read_field(&mut r)?;
        let u1 = read_field(&mut r)?;
        u0.grid.check_same(&index.grid)?;
        states.push(CauchyPair::new(u0, u1)?);
    }
    if states.len() != index.times.len() {
        return Err(Error::Format("index times and records disagree".into()));
    }
    Ok(SolutionPath { times: index.times, states })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub grid: SpectralGrid,
    /// (wavenumber, const|cos|sin, position|velocity) per basis element.
    pub elements: Vec<([i32; 2], String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelRecord {
    pub degree: usize,
    pub shape: Vec<usize>,
    /// Dense symmetric tensor, lexicographic multi-index order.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelFile {
    pub basis: BasisDescriptor,
    pub kernels: Vec<KernelRecord>,
}

pub fn kernels_to_json(f: &PolyFunctional) -> KernelFile {
    let elements = (0..f.dim())
        .map(|x| {
            let mode = &f.basis.modes[x / 2];
            let kind = match mode.kind {
                ModeKind::Const => "const",
                ModeKind::Cos => "cos",
                ModeKind::Sin => "sin",
            };
            let slot = if x % 2 == 0 { "position" } else { "velocity" };
            (mode.k, kind.to_string(), slot.to_string())
        })
        .collect();
    let kernels = (0..=f.cap)
        .map(|p| KernelRecord { degree: p, shape: vec![f.dim(); p], data: f.dense_kernel(p) })
        .collect();
    KernelFile { basis: BasisDescriptor { grid: f.basis.grid, elements }, kernels }
}
