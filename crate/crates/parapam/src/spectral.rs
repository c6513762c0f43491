//! Discrete Fourier transforms and Fourier-multiplier operators on the torus.
//!
//! Convention: `f(x) = Σ_k f̂(k) e^{i k·x}`, so the forward transform is the
//! unnormalized DFT divided by `n²` and the inverse is the unnormalized
//! conjugate sum. One convention everywhere; the round-trip tests pin it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::field::{GridSpec, RealField, SpectralField};

#[derive(Debug, Error)]
pub enum MultiplierError {
    #[error("symbol is undefined (non-finite) at wavevector ({0}, {1})")]
    UndefinedSymbol(i64, i64),
    #[error("symbol is not real-field-preserving: |symbol(-k) - conj(symbol(k))| = {0:.3e}")]
    NotHermitian(f64),
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans_for(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// In-place 2D FFT over the row-major n×n buffer. `forward` selects the
/// transform direction; no normalization is applied here.
fn fft2(buf: &mut [Complex64], n: usize, forward: bool) {
    let plans = plans_for(n);
    let fft = if forward {
        &plans.forward
    } else {
        &plans.inverse
    };
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // Rows are contiguous.
    for row in buf.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    // Columns via transpose, row FFT, transpose back.
    transpose_square(buf, n);
    for row in buf.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    transpose_square(buf, n);
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Forward transform: coefficients of `f(x) = Σ_k f̂(k) e^{i k·x}`.
pub fn forward_transform(f: &RealField) -> SpectralField {
    let n = f.grid().n();
    let scale = 1.0 / (n * n) as f64;
    let mut buf: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2(&mut buf, n, true);
    for c in &mut buf {
        *c *= scale;
    }
    SpectralField::from_raw(f.grid(), buf)
}

/// Inverse transform; discards the O(machine-epsilon) imaginary residue left
/// by Hermitian-symmetric coefficients.
pub fn inverse_transform(f: &SpectralField) -> RealField {
    let (re, _) = inverse_transform_with_residue(f);
    re
}

/// Inverse transform returning the real part and the largest imaginary
/// residue, which is a direct measure of Hermitian-symmetry violation.
pub fn inverse_transform_with_residue(f: &SpectralField) -> (RealField, f64) {
    let n = f.grid().n();
    let mut buf = f.coeffs().to_vec();
    fft2(&mut buf, n, false);
    let mut residue = 0.0f64;
    let values = buf
        .iter()
        .map(|c| {
            residue = residue.max(c.im.abs());
            c.re
        })
        .collect();
    (RealField::from_raw(f.grid(), values), residue)
}

/// A diagonal Fourier-space operator, precomputed per mode on a given grid.
pub struct Multiplier {
    grid: GridSpec,
    factors: Vec<Complex64>,
}

impl Multiplier {
    /// Build from a symbol `k ↦ value`. Fails on non-finite values and on
    /// symbols that do not preserve real fields.
    pub fn from_symbol(
        grid: GridSpec,
        symbol: impl Fn(i64, i64) -> Complex64,
    ) -> Result<Self, MultiplierError> {
        let n = grid.n();
        let mut factors = Vec::with_capacity(grid.len());
        for m1 in 0..n {
            for m2 in 0..n {
                let k1 = grid.wavenumber(m1);
                let k2 = grid.wavenumber(m2);
                let v = symbol(k1, k2);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(MultiplierError::UndefinedSymbol(k1, k2));
                }
                factors.push(v);
            }
        }
        let m = Multiplier { grid, factors };
        let asym = m.max_hermitian_asymmetry();
        if asym > 1e-14 {
            return Err(MultiplierError::NotHermitian(asym));
        }
        Ok(m)
    }

    /// Real radial-ish symbols are always Hermitian; no failure path.
    pub fn from_real_symbol(grid: GridSpec, symbol: impl Fn(i64, i64) -> f64) -> Self {
        let n = grid.n();
        let mut factors = Vec::with_capacity(grid.len());
        for m1 in 0..n {
            for m2 in 0..n {
                let v = symbol(grid.wavenumber(m1), grid.wavenumber(m2));
                assert!(v.is_finite(), "multiplier symbol non-finite at ({m1},{m2})");
                factors.push(Complex64::new(v, 0.0));
            }
        }
        Multiplier { grid, factors }
    }

    /// Heat semigroup `P_t`, symbol `e^{−t|k|²}`.
    pub fn heat(grid: GridSpec, t: f64) -> Self {
        assert!(t >= 0.0, "heat semigroup needs t >= 0");
        Multiplier::from_real_symbol(grid, |k1, k2| {
            let ksq = (k1 * k1 + k2 * k2) as f64;
            (-t * ksq).exp()
        })
    }

    /// Laplacian, symbol `−|k|²`.
    pub fn laplacian(grid: GridSpec) -> Self {
        Multiplier::from_real_symbol(grid, |k1, k2| -((k1 * k1 + k2 * k2) as f64))
    }

    /// Zero-mean inverse of `−Δ`: symbol `1/|k|²` for `k ≠ 0`, `0` at `k = 0`.
    pub fn inv_neg_laplacian(grid: GridSpec) -> Self {
        Multiplier::from_real_symbol(grid, |k1, k2| {
            let ksq = (k1 * k1 + k2 * k2) as f64;
            if ksq == 0.0 {
                0.0
            } else {
                1.0 / ksq
            }
        })
    }

    /// Two-thirds-rule projector: zeroes every mode with `|k_i| >= n/3`.
    pub fn dealias_projector(grid: GridSpec) -> Self {
        let cut = grid.dealias_cut();
        Multiplier::from_real_symbol(grid, |k1, k2| {
            if (k1.abs() as f64) < cut && (k2.abs() as f64) < cut {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn max_hermitian_asymmetry(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for m1 in 0..n {
            for m2 in 0..n {
                let p1 = (n - m1) % n;
                let p2 = (n - m2) % n;
                let a = self.factors[m1 * n + m2];
                let b = self.factors[p1 * n + p2].conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    /// Apply in Fourier space: `f̂(k) ↦ symbol(k) f̂(k)`.
    pub fn apply_spectral(&self, f: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, f.grid(), "multiplier grid mismatch");
        let coeffs = self
            .factors
            .iter()
            .zip(f.coeffs())
            .map(|(m, c)| m * c)
            .collect();
        SpectralField::from_raw(self.grid, coeffs)
    }

    pub fn apply(&self, f: &RealField) -> RealField {
        inverse_transform(&self.apply_spectral(&forward_transform(f)))
    }
}

/// Apply a multiplier to a real field: inverse transform of `symbol · f̂`.
pub fn apply_multiplier(m: &Multiplier, f: &RealField) -> RealField {
    m.apply(f)
}

/// Zero-mean solution `X` of `−ΔX = f − mean(f)`:
/// `X̂(k) = f̂(k)/|k|²` for `k ≠ 0`, `X̂(0) = 0`.
pub fn inv_neg_laplacian_zero_mean(f: &RealField) -> RealField {
    Multiplier::inv_neg_laplacian(f.grid()).apply(f)
}

/// Truncate the modes killed by the two-thirds rule.
pub fn dealias(f: &RealField) -> RealField {
    let spec = forward_transform(f);
    inverse_transform(&dealias_spectral(&spec))
}

pub fn dealias_spectral(f: &SpectralField) -> SpectralField {
    let grid = f.grid();
    let n = grid.n();
    let mut out = f.clone();
    for m1 in 0..n {
        for m2 in 0..n {
            if !grid.mode_retained(m1, m2) {
                out.coeffs_mut()[m1 * n + m2] = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// Dealiased pointwise product `D(Df · Dg)` — the product every nonlinear
/// operation in the crate uses, exact on retained modes.
pub fn dealiased_product(f: &RealField, g: &RealField) -> RealField {
    assert_eq!(f.grid(), g.grid(), "product on mismatched grids");
    let df = dealias(f);
    let dg = dealias(g);
    dealias(&df.pointwise_mul(&dg))
}
