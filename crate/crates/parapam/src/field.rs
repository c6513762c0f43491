//! Scalar fields on the periodic n×n grid over the 2-torus [0,2π)².
//!
//! A [`RealField`] holds point values in row-major order, a [`SpectralField`]
//! holds the Fourier coefficients of a real field under the convention
//! `f(x) = Σ_k f̂(k) e^{i k·x}` with wavevectors `k ∈ {−n/2,…,n/2−1}²`.
//! Fields are immutable values; every operation in the crate builds new ones.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;
use thiserror::Error;

/// Period of the torus in each direction. Other periods are out of scope.
pub const TORUS_LENGTH: f64 = 2.0 * std::f64::consts::PI;

/// Magic bytes of the field snapshot format.
pub const PFLD_MAGIC: [u8; 4] = *b"PFLD";

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid size {0} is not a power of two >= 8")]
    BadGridSize(usize),
    #[error("value buffer has length {got}, grid needs {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("field contains a non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids: {0} vs {1} points per axis")]
    GridMismatch(usize, usize),
    #[error("snapshot i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad snapshot header: {0}")]
    BadHeader(String),
}

/// Discretization of the 2-torus: `n` points per axis, spacing `h = 2π/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    /// `n` must be a power of two and at least 8.
    pub fn new(n: usize) -> Result<Self, FieldError> {
        if n < 8 || !n.is_power_of_two() {
            return Err(FieldError::BadGridSize(n));
        }
        Ok(GridSpec { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of grid points `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `h = 2π/n`.
    pub fn spacing(&self) -> f64 {
        TORUS_LENGTH / self.n as f64
    }

    /// Signed wavevector component for a wrapped index `m ∈ [0, n)`.
    pub fn wavenumber(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// `|k|²` for the mode with wrapped indices `(m1, m2)`.
    pub fn k_sq(&self, m1: usize, m2: usize) -> f64 {
        let k1 = self.wavenumber(m1) as f64;
        let k2 = self.wavenumber(m2) as f64;
        k1 * k1 + k2 * k2
    }

    /// Largest |k_i| kept by the two-thirds dealiasing rule: modes with
    /// `|k_i| >= n/3` are truncated in pointwise products.
    pub fn dealias_cut(&self) -> f64 {
        self.n as f64 / 3.0
    }

    /// Whether a mode survives dealiasing.
    pub fn mode_retained(&self, m1: usize, m2: usize) -> bool {
        let cut = self.dealias_cut();
        (self.wavenumber(m1).abs() as f64) < cut && (self.wavenumber(m2).abs() as f64) < cut
    }

    /// Coordinates of the grid point with row-major flat index `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        let j1 = idx / self.n;
        let j2 = idx % self.n;
        (h * j1 as f64, h * j2 as f64)
    }
}

/// A real scalar field sampled on the grid, row-major: `values[j1 * n + j2]`
/// is the value at `x = (2π j1/n, 2π j2/n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                got: values.len(),
                want: grid.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(RealField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        RealField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        RealField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Sample a closed-form function of the point coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = grid.spacing();
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j1 in 0..n {
            for j2 in 0..n {
                values.push(f(h * j1 as f64, h * j2 as f64));
            }
        }
        RealField { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        RealField { grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Arithmetic mean over grid points (equals the k = 0 Fourier coefficient).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &RealField) -> RealField {
        assert_eq!(self.grid, other.grid, "axpy on mismatched grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        RealField {
            grid: self.grid,
            values,
        }
    }

    pub fn scale(&self, s: f64) -> RealField {
        self.map(|v| s * v)
    }

    /// Plain pointwise grid product, no dealiasing.
    pub fn pointwise_mul(&self, other: &RealField) -> RealField {
        assert_eq!(self.grid, other.grid, "product on mismatched grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        RealField {
            grid: self.grid,
            values,
        }
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        self.axpy(-1.0, other)
    }

    pub fn max_abs_diff(&self, other: &RealField) -> f64 {
        assert_eq!(self.grid, other.grid, "diff on mismatched grids");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    /// Write the field in the PFLD snapshot format: a 16-byte header
    /// (magic `PFLD`, little-endian u32 `n`, two reserved u32 zeros) followed
    /// by `n²` little-endian f64 point values in row-major order.
    pub fn write_pfld(&self, path: &Path) -> Result<(), FieldError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&PFLD_MAGIC)?;
        w.write_all(&(self.grid.n() as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_pfld(path: &Path) -> Result<Self, FieldError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if header[0..4] != PFLD_MAGIC {
            return Err(FieldError::BadHeader(format!(
                "bad magic {:?} in {}",
                &header[0..4],
                path.display()
            )));
        }
        let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let grid = GridSpec::new(n).map_err(|e| FieldError::BadHeader(e.to_string()))?;
        let mut buf = vec![0u8; grid.len() * 8];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        RealField::new(grid, values)
    }
}

/// Fourier coefficients of a real field; same row-major layout as the grid,
/// indexed by wrapped mode `(m1, m2)` with `k_i = m_i` for `m_i < n/2` and
/// `k_i = m_i − n` otherwise. Hermitian symmetry `f̂(−k) = conj(f̂(k))` holds
/// by construction for transforms of real fields.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub(crate) fn from_raw(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField { grid, coeffs }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at signed wavevector `(k1, k2)`.
    pub fn at(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        let m1 = k1.rem_euclid(n) as usize;
        let m2 = k2.rem_euclid(n) as usize;
        self.coeffs[m1 * self.grid.n() + m2]
    }

    /// Largest violation of `f̂(−k) = conj(f̂(k))` over all modes.
    pub fn max_hermitian_asymmetry(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for m1 in 0..n {
            for m2 in 0..n {
                let p1 = (n - m1) % n;
                let p2 = (n - m2) % n;
                let a = self.coeffs[m1 * n + m2];
                let b = self.coeffs[p1 * n + p2].conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} torus grid", self.n, self.n)
    }
}
