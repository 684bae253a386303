//! Uniform cell-centered grid on a rectangle, scalar fields, the five-point
//! Neumann Laplacian and the implicit diffusion solve.
//!
//! Cell `(i, j)` has center `((i + ½)·hx, (j + ½)·hy)` and lives at index
//! `j·nx + i`. The boundary closure mirrors the first interior cell into a
//! ghost cell, so constants are exact null vectors of the Laplacian and the
//! discrete flux through `∂Ω` vanishes identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};

/// Largest supported cell count.
pub const MAX_CELLS: usize = 4096 * 4096;

/// Relative residual target of [`NeumannSolver::solve`].
pub const HELMHOLTZ_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 cells per side, got {nx}x{ny}")));
        }
        if nx.saturating_mul(ny) > MAX_CELLS {
            return Err(Error::InvalidGrid(format!("{nx}x{ny} exceeds the {MAX_CELLS}-cell limit")));
        }
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            return Err(Error::InvalidGrid(format!("side lengths must be positive, got {lx} x {ly}")));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square `[0, side]²` with `n` cells per side.
    pub fn square(n: usize, side: f64) -> Result<Self> {
        Self::new(n, n, side, side)
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn max_spacing(&self) -> f64 {
        self.hx().max(self.hy())
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                spec.nx,
                spec.ny
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite field value at cell {k}")));
        }
        Ok(Self { spec, values })
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self { spec, values: vec![c; spec.len()] }
    }

    /// Samples `f(x, y)` at the cell centers.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let mut values = vec![0.0; spec.len()];
        values.par_chunks_mut(spec.nx).enumerate().for_each(|(j, row)| {
            let y = spec.y(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(spec.x(i), y);
            }
        });
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { spec: self.spec, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Compensated (Neumaier) sum, so mass bookkeeping is not limited by
    /// the summation order.
    pub fn sum(&self) -> f64 {
        compensated_sum(self.values.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    /// Discrete inner product `hx·hy·Σ uv`.
    pub fn dot(&self, other: &Field) -> f64 {
        self.spec.cell_area() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Midpoint rule `hx·hy·Σ u`.
pub fn integrate(u: &Field) -> f64 {
    u.spec.cell_area() * u.sum()
}

/// Five-point Laplacian with reflective closure.
pub fn laplacian(u: &Field) -> Field {
    let spec = u.spec;
    let (nx, ny) = (spec.nx, spec.ny);
    let ihx2 = 1.0 / (spec.hx() * spec.hx());
    let ihy2 = 1.0 / (spec.hy() * spec.hy());
    let src = &u.values;
    let mut out = vec![0.0; spec.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let base = j * nx;
        let up = if j + 1 < ny { base + nx } else { base };
        let down = if j > 0 { base - nx } else { base };
        for (i, o) in row.iter_mut().enumerate() {
            let c = src[base + i];
            let e = if i + 1 < nx { src[base + i + 1] } else { c };
            let w = if i > 0 { src[base + i - 1] } else { c };
            let n = src[up + i];
            let s = src[down + i];
            *o = (e - c - (c - w)) * ihx2 + (n - c - (c - s)) * ihy2;
        }
    });
    Field { spec, values: out }
}

/// Eigenvalues `(2 - 2cos(πk/n))/h²` of `-Δ_h` in one direction, for the
/// cosine modes `cos(πk(i + ½)/n)`.
pub fn neumann_eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| (2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos()) / (h * h))
        .collect()
}

/// Solves `(I - τΔ_h)v = g` by diagonalizing the Neumann Laplacian with
/// cosine transforms. Plans are reused across calls.
pub struct NeumannSolver {
    spec: GridSpec,
    dct_x: Arc<dyn TransformType2And3<f64>>,
    dct_y: Arc<dyn TransformType2And3<f64>>,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

impl std::fmt::Debug for NeumannSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NeumannSolver").field("spec", &self.spec).finish_non_exhaustive()
    }
}

impl NeumannSolver {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = DctPlanner::new();
        Self {
            spec,
            dct_x: planner.plan_dct2(spec.nx),
            dct_y: planner.plan_dct2(spec.ny),
            eig_x: neumann_eigenvalues(spec.nx, spec.hx()),
            eig_y: neumann_eigenvalues(spec.ny, spec.hy()),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn solve(&self, g: &Field, tau: f64) -> Result<Field> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        if g.spec != self.spec {
            return Err(Error::InvalidGrid("field does not match the solver grid".into()));
        }
        let (nx, ny) = (self.spec.nx, self.spec.ny);

        let mut rows = g.values.clone();
        rows.par_chunks_mut(nx).for_each(|r| self.dct_x.process_dct2(r));
        let mut cols = transpose(&rows, nx, ny);
        cols.par_chunks_mut(ny).enumerate().for_each(|(kx, col)| {
            self.dct_y.process_dct2(col);
            let ex = self.eig_x[kx];
            for (ky, c) in col.iter_mut().enumerate() {
                *c /= 1.0 + tau * (ex + self.eig_y[ky]);
            }
            self.dct_y.process_dct3(col);
        });
        let mut rows = transpose(&cols, ny, nx);
        // DCT-III∘DCT-II = (n/2)·I along each axis.
        let scale = 4.0 / (nx * ny) as f64;
        rows.par_chunks_mut(nx).for_each(|r| {
            self.dct_x.process_dct3(r);
            r.iter_mut().for_each(|v| *v *= scale);
        });

        let mut v = Field { spec: self.spec, values: rows };
        restore_sum(&mut v.values, g.sum());

        let lap = laplacian(&v);
        let residual = v
            .values
            .iter()
            .zip(&lap.values)
            .zip(&g.values)
            .fold(0.0f64, |m, ((&vi, &li), &gi)| m.max((vi - tau * li - gi).abs()));
        let target = HELMHOLTZ_RESIDUAL_TOL * g.max_abs();
        if residual > target {
            return Err(Error::SolverDivergence { residual, target });
        }
        Ok(v)
    }
}

pub fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() { (s - t) + v } else { (v - t) + s };
        s = t;
    }
    s + c
}

/// Shifts `values` so they sum to `target`. A uniform shift smaller than
/// half an ulp of the bulk values would be rounded away, so whatever is left
/// after it goes to the cells of smallest magnitude, where it is representable.
fn restore_sum(values: &mut [f64], target: f64) {
    let n = values.len() as f64;
    let shift = (target - compensated_sum(values.iter().copied())) / n;
    values.iter_mut().for_each(|x| *x += shift);
    for _ in 0..4 {
        let rest = target - compensated_sum(values.iter().copied());
        if rest == 0.0 {
            break;
        }
        let small = values.iter().filter(|x| x.abs() <= 0.5).count();
        if small == 0 {
            let d = rest / n;
            values.iter_mut().for_each(|x| *x += d);
        } else {
            let d = rest / small as f64;
            values.iter_mut().filter(|x| x.abs() <= 0.5).for_each(|x| *x += d);
        }
    }
}

/// One-shot `(I - τΔ_h)⁻¹ g`.
pub fn helmholtz_solve(g: &Field, tau: f64) -> Result<Field> {
    NeumannSolver::new(g.spec).solve(g, tau)
}

fn transpose(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut dst = vec![0.0; src.len()];
    for j in 0..height {
        for i in 0..width {
            dst[i * height + j] = src[j * width + i];
        }
    }
    dst
}

/// A field together with its time stamp and interface width, as stored in a
/// `PFS1` snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: Field,
    pub time: f64,
    pub eps: f64,
}

const PFS1_MAGIC: &[u8; 4] = b"PFS1";

impl Snapshot {
    /// `PFS1\n`, the header line `nx ny Lx Ly time eps\n`, then the values as
    /// little-endian f64 in row-major order.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let s = self.field.spec;
        w.write_all(PFS1_MAGIC)?;
        w.write_all(b"\n")?;
        writeln!(w, "{} {} {:?} {:?} {:?} {:?}", s.nx, s.ny, s.lx, s.ly, self.time, self.eps)?;
        let mut buf = Vec::with_capacity(8 * s.len());
        for v in &self.field.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read, origin: &Path) -> Result<Self> {
        let bad = |message: String| Error::Format { path: origin.to_path_buf(), message };
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 5 || &bytes[..4] != PFS1_MAGIC || bytes[4] != b'\n' {
            return Err(bad("missing PFS1 magic".into()));
        }
        let rest = &bytes[5..];
        let eol = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header line".into()))?;
        let header = std::str::from_utf8(&rest[..eol]).map_err(|_| bad("header is not ASCII".into()))?;
        let parts: Vec<&str> = header.split_ascii_whitespace().collect();
        if parts.len() != 6 {
            return Err(bad(format!("expected 6 header fields, found {}", parts.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("bad integer `{s}`: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("bad number `{s}`: {e}")));
        let spec = GridSpec::new(int(parts[0])?, int(parts[1])?, real(parts[2])?, real(parts[3])?)?;
        let time = real(parts[4])?;
        let eps = real(parts[5])?;
        let payload = &rest[eol + 1..];
        if payload.len() != 8 * spec.len() {
            return Err(bad(format!("expected {} payload bytes, found {}", 8 * spec.len(), payload.len())));
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self { field: Field::new(spec, values)?, time, eps })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?), path)
    }
}
