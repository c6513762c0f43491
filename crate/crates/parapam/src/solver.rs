//! Time integration of the renormalized regularized quasilinear equation
//! `∂_t u − a(u)Δu = g(u)ξ^ε − c^ε{(g'g/a)(u) − (a'g²/a²)(u)}`
//! plus the transformed scalar equation `∂_t v − Δ(b(v)) = f(v)ξ^ε − …`
//! as an independent cross-check.
//!
//! The workhorse is a stabilized IMEX step: the constant-coefficient operator
//! `a_max Δ` is treated implicitly by a diagonal Fourier solve, the remainder
//! `(a(u) − a_max)Δu` explicitly. The explicit symbol contribution is
//! non-positive, so the split is stable for any `dt`; `explicit-rk4` is kept
//! as a consistency cross-check under its CFL bound `dt ≤ h²/(4 a_max)`.

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::field::{GridSpec, RealField};
use crate::lp::Trajectory;
use crate::noise::EnhancedNoise;
use crate::spectral::{forward_transform, inverse_transform};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("solution blew up; last finite time t = {t}")]
    BlowUp { t: f64 },
    #[error("coefficient transform failed: {0}")]
    Transform(String),
}

/// The nonlinearities of the model with closed-form derivatives and
/// ellipticity bounds `0 < a_min ≤ a(u) ≤ a_max`.
#[derive(Clone, Copy)]
pub struct ModelCoefficients {
    pub name: &'static str,
    pub a: fn(f64) -> f64,
    pub a_prime: fn(f64) -> f64,
    pub g: fn(f64) -> f64,
    pub g_prime: fn(f64) -> f64,
    pub a_min: f64,
    pub a_max: f64,
    /// `‖g‖_{C¹} = sup|g| + sup|g'|`, used by the composition-bound suite.
    pub g_c1_norm: f64,
}

impl std::fmt::Debug for ModelCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelCoefficients")
            .field("name", &self.name)
            .field("a_min", &self.a_min)
            .field("a_max", &self.a_max)
            .finish()
    }
}

impl ModelCoefficients {
    /// Finite-difference consistency of the stated derivatives and the
    /// ellipticity bounds, sampled over a wide range of `u`.
    pub fn check_consistency(&self) -> Result<(), String> {
        let delta = 1e-5;
        for i in -300..=300 {
            let u = i as f64 / 30.0;
            let fd_a = ((self.a)(u + delta) - (self.a)(u - delta)) / (2.0 * delta);
            if (fd_a - (self.a_prime)(u)).abs() > 1e-6 {
                return Err(format!("a' inconsistent at u = {u}"));
            }
            let fd_g = ((self.g)(u + delta) - (self.g)(u - delta)) / (2.0 * delta);
            if (fd_g - (self.g_prime)(u)).abs() > 1e-6 {
                return Err(format!("g' inconsistent at u = {u}"));
            }
            let a = (self.a)(u);
            if !(self.a_min..=self.a_max).contains(&a) || self.a_min <= 0.0 {
                return Err(format!("ellipticity violated at u = {u}: a = {a}"));
            }
        }
        Ok(())
    }
}

/// Coefficient registry: `const` (a ≡ 1, g ≡ 1), `sin-cos` (a = 2 + sin u,
/// g = cos u) and `rational` (a = 1 + 1/(1+u²), g = 1/(1+u²)).
pub fn coefficient_registry(name: &str) -> Option<ModelCoefficients> {
    match name {
        "const" => Some(ModelCoefficients {
            name: "const",
            a: |_| 1.0,
            a_prime: |_| 0.0,
            g: |_| 1.0,
            g_prime: |_| 0.0,
            a_min: 1.0,
            a_max: 1.0,
            g_c1_norm: 1.0,
        }),
        "sin-cos" => Some(ModelCoefficients {
            name: "sin-cos",
            a: |u| 2.0 + u.sin(),
            a_prime: |u| u.cos(),
            g: |u| u.cos(),
            g_prime: |u| -u.sin(),
            a_min: 1.0,
            a_max: 3.0,
            g_c1_norm: 2.0,
        }),
        "rational" => Some(ModelCoefficients {
            name: "rational",
            a: |u| 1.0 + 1.0 / (1.0 + u * u),
            a_prime: |u| -2.0 * u / ((1.0 + u * u) * (1.0 + u * u)),
            g: |u| 1.0 / (1.0 + u * u),
            g_prime: |u| -2.0 * u / ((1.0 + u * u) * (1.0 + u * u)),
            a_min: 1.0,
            a_max: 2.0,
            // sup |g| = 1, sup |g'| = 3√3/8 at u = 1/√3
            g_c1_norm: 1.0 + 3.0 * 3f64.sqrt() / 8.0,
        }),
        _ => None,
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Imex,
    ExplicitRk4,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "imex" => Some(Scheme::Imex),
            "explicit-rk4" => Some(Scheme::ExplicitRk4),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Imex => "imex",
            Scheme::ExplicitRk4 => "explicit-rk4",
        }
    }
}

/// Run parameters of one integration.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub t_final: f64,
    pub dt: f64,
    pub eps: f64,
    pub renormalize: bool,
    pub scheme: Scheme,
    pub stride: usize,
}

impl SolverConfig {
    /// Harness default step: `min(ε/8, 0.9 h²/(4 a_max))`, so the time error
    /// stays subordinate both to the mollification scale and to the explicit
    /// remainder of the split.
    pub fn default_dt(eps: f64, grid: GridSpec, a_max: f64) -> f64 {
        let h = grid.spacing();
        (eps / 8.0).min(0.9 * h * h / (4.0 * a_max))
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self, grid: GridSpec, coeffs: &ModelCoefficients) -> Result<(), SolverError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SolverError::InvalidConfig(format!("dt = {} <= 0", self.dt)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "final time = {} <= 0",
                self.t_final
            )));
        }
        let steps = self.steps();
        if steps == 0 || (steps as f64 * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(SolverError::InvalidConfig(format!(
                "dt = {} does not divide the horizon {}",
                self.dt, self.t_final
            )));
        }
        if self.stride == 0 || steps % self.stride != 0 {
            return Err(SolverError::InvalidConfig(format!(
                "snapshot stride {} does not divide {} steps",
                self.stride, steps
            )));
        }
        if self.scheme == Scheme::ExplicitRk4 {
            let h = grid.spacing();
            let cfl = h * h / (4.0 * coeffs.a_max);
            if self.dt > cfl {
                return Err(SolverError::InvalidConfig(format!(
                    "explicit-rk4 needs dt <= h²/(4 a_max) = {cfl:.3e}, got {}",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

/// The renormalization drift
/// `c_eps · [ (g'g/a)(u) − (a' g²/a²)(u) ]`, evaluated pointwise.
pub fn counterterm(u: &RealField, coeffs: &ModelCoefficients, c_eps: f64) -> RealField {
    u.map(|v| {
        let a = (coeffs.a)(v);
        let g = (coeffs.g)(v);
        let gp = (coeffs.g_prime)(v);
        let ap = (coeffs.a_prime)(v);
        c_eps * (gp * g / a - ap * g * g / (a * a))
    })
}

struct ImexOp {
    lap_symbol: Vec<f64>,
    inv_implicit: Vec<f64>,
    retained: Vec<bool>,
}

impl ImexOp {
    fn new(grid: GridSpec, dt: f64, a_max: f64) -> Self {
        let n = grid.n();
        let mut lap_symbol = Vec::with_capacity(grid.len());
        let mut inv_implicit = Vec::with_capacity(grid.len());
        let mut retained = Vec::with_capacity(grid.len());
        for m1 in 0..n {
            for m2 in 0..n {
                let ksq = grid.k_sq(m1, m2);
                lap_symbol.push(-ksq);
                inv_implicit.push(1.0 / (1.0 + dt * a_max * ksq));
                retained.push(grid.mode_retained(m1, m2));
            }
        }
        ImexOp {
            lap_symbol,
            inv_implicit,
            retained,
        }
    }

    fn laplacian(&self, u: &RealField) -> RealField {
        let mut spec = forward_transform(u);
        for (c, s) in spec.coeffs_mut().iter_mut().zip(&self.lap_symbol) {
            *c *= *s;
        }
        inverse_transform(&spec)
    }

    /// Dealias the bracket and apply `(Id − dt a_max Δ)^{−1}`.
    fn implicit_solve(&self, rhs: &RealField) -> RealField {
        let mut spec = forward_transform(rhs);
        for ((c, s), keep) in spec
            .coeffs_mut()
            .iter_mut()
            .zip(&self.inv_implicit)
            .zip(&self.retained)
        {
            *c = if *keep {
                *c * *s
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        inverse_transform(&spec)
    }

    fn dealias_field(&self, f: &RealField) -> RealField {
        let mut spec = forward_transform(f);
        for (c, keep) in spec.coeffs_mut().iter_mut().zip(&self.retained) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        inverse_transform(&spec)
    }
}

/// Optional extra deterministic forcing `ζ(t)` for verification modes
/// (Duhamel and manufactured-solution oracles).
pub type Forcing<'a> = Option<&'a dyn Fn(f64) -> RealField>;

/// Integrate the renormalized regularized equation from `u0`. Snapshots are
/// kept every `stride` steps, beginning with `t = 0` and ending at `t = T`.
pub fn integrate(
    u0: &RealField,
    enhanced: &EnhancedNoise,
    coeffs: &ModelCoefficients,
    cfg: &SolverConfig,
) -> Result<Trajectory, SolverError> {
    integrate_forced(u0, enhanced, coeffs, cfg, None)
}

pub fn integrate_forced(
    u0: &RealField,
    enhanced: &EnhancedNoise,
    coeffs: &ModelCoefficients,
    cfg: &SolverConfig,
    forcing: Forcing,
) -> Result<Trajectory, SolverError> {
    let grid = u0.grid();
    cfg.validate(grid, coeffs)?;
    if enhanced.grid() != grid {
        return Err(SolverError::InvalidConfig(
            "noise and initial data live on different grids".into(),
        ));
    }
    let op = ImexOp::new(grid, cfg.dt, coeffs.a_max);
    let c_eps = if cfg.renormalize { enhanced.c_eps } else { 0.0 };
    let xi = &enhanced.xi_eps;

    let explicit_part = |u: &RealField, t: f64| -> RealField {
        let lap_u = op.laplacian(u);
        let mut drift = RealField::from_raw(
            grid,
            u.values()
                .iter()
                .zip(lap_u.values())
                .zip(xi.values())
                .map(|((&v, &lap), &noise)| {
                    let a = (coeffs.a)(v);
                    let g = (coeffs.g)(v);
                    ((a - coeffs.a_max) * lap) + g * noise
                })
                .collect(),
        );
        if c_eps != 0.0 {
            drift = drift.axpy(-1.0, &counterterm(u, coeffs, c_eps));
        }
        if let Some(f) = forcing {
            drift = drift.axpy(1.0, &f(t));
        }
        drift
    };

    match cfg.scheme {
        Scheme::Imex => {
            let mut u = op.dealias_field(u0);
            let mut snapshots = vec![u.clone()];
            let steps = cfg.steps();
            for step in 0..steps {
                let t = step as f64 * cfg.dt;
                let rhs = u.axpy(cfg.dt, &explicit_part(&u, t));
                u = op.implicit_solve(&rhs);
                if !u.is_finite() {
                    return Err(SolverError::BlowUp { t });
                }
                if (step + 1) % cfg.stride == 0 {
                    snapshots.push(u.clone());
                }
            }
            Trajectory::new(cfg.dt * cfg.stride as f64, snapshots)
                .map_err(|e| SolverError::InvalidConfig(e.to_string()))
        }
        Scheme::ExplicitRk4 => {
            // full right-hand side a(u)Δu + g(u)ξ − counterterm + ζ, dealiased
            let rhs_full = |u: &RealField, t: f64| -> RealField {
                let lap_u = op.laplacian(u);
                let mut drift = RealField::from_raw(
                    grid,
                    u.values()
                        .iter()
                        .zip(lap_u.values())
                        .zip(xi.values())
                        .map(|((&v, &lap), &noise)| (coeffs.a)(v) * lap + (coeffs.g)(v) * noise)
                        .collect(),
                );
                if c_eps != 0.0 {
                    drift = drift.axpy(-1.0, &counterterm(u, coeffs, c_eps));
                }
                if let Some(f) = forcing {
                    drift = drift.axpy(1.0, &f(t));
                }
                op.dealias_field(&drift)
            };
            let mut u = op.dealias_field(u0);
            let mut snapshots = vec![u.clone()];
            let steps = cfg.steps();
            let dt = cfg.dt;
            for step in 0..steps {
                let t = step as f64 * dt;
                let k1 = rhs_full(&u, t);
                let k2 = rhs_full(&u.axpy(dt / 2.0, &k1), t + dt / 2.0);
                let k3 = rhs_full(&u.axpy(dt / 2.0, &k2), t + dt / 2.0);
                let k4 = rhs_full(&u.axpy(dt, &k3), t + dt);
                u = u
                    .axpy(dt / 6.0, &k1)
                    .axpy(dt / 3.0, &k2)
                    .axpy(dt / 3.0, &k3)
                    .axpy(dt / 6.0, &k4);
                if !u.is_finite() {
                    return Err(SolverError::BlowUp { t });
                }
                if (step + 1) % cfg.stride == 0 {
                    snapshots.push(u.clone());
                }
            }
            Trajectory::new(dt * cfg.stride as f64, snapshots)
                .map_err(|e| SolverError::InvalidConfig(e.to_string()))
        }
    }
}

/// Numerical tables for the scalar transformation `v = A(u)` with `A` a
/// primitive of `1/a`, its inverse `b`, and `f = (g/a) ∘ b`.
pub struct TransformTables {
    coeffs: ModelCoefficients,
    u_lo: f64,
    du: f64,
    /// `A(u_i)` at the uniform nodes; strictly increasing.
    values: Vec<f64>,
}

const TRANSFORM_RANGE: f64 = 16.0;
const TRANSFORM_STEP: f64 = 1e-3;

fn adaptive_simpson(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (lo + hi);
    let simpson = |a: f64, b: f64| (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    let whole = simpson(lo, hi);
    let left = simpson(lo, mid);
    let right = simpson(mid, hi);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, lo, mid, tol / 2.0, depth - 1)
            + adaptive_simpson(f, mid, hi, tol / 2.0, depth - 1)
    }
}

impl TransformTables {
    pub fn new(coeffs: &ModelCoefficients) -> Result<Self, SolverError> {
        if coeffs.a_min <= 0.0 {
            return Err(SolverError::Transform("a is not bounded below".into()));
        }
        let half = (TRANSFORM_RANGE / TRANSFORM_STEP).round() as i64;
        let u_lo = -(half as f64) * TRANSFORM_STEP;
        let count = (2 * half + 1) as usize;
        let integrand = |u: f64| 1.0 / (coeffs.a)(u);
        let mut values = vec![0.0; count];
        // cumulative adaptive quadrature outward from u = 0
        let zero_idx = half as usize;
        for i in (zero_idx + 1)..count {
            let a = u_lo + (i - 1) as f64 * TRANSFORM_STEP;
            let b = u_lo + i as f64 * TRANSFORM_STEP;
            let inc = adaptive_simpson(&integrand, a, b, 1e-14, 20);
            if !inc.is_finite() || inc <= 0.0 {
                return Err(SolverError::Transform(format!(
                    "quadrature failed on [{a}, {b}]"
                )));
            }
            values[i] = values[i - 1] + inc;
        }
        for i in (0..zero_idx).rev() {
            let a = u_lo + i as f64 * TRANSFORM_STEP;
            let b = u_lo + (i + 1) as f64 * TRANSFORM_STEP;
            let inc = adaptive_simpson(&integrand, a, b, 1e-14, 20);
            if !inc.is_finite() || inc <= 0.0 {
                return Err(SolverError::Transform(format!(
                    "quadrature failed on [{a}, {b}]"
                )));
            }
            values[i] = values[i + 1] - inc;
        }
        Ok(TransformTables {
            coeffs: *coeffs,
            u_lo,
            du: TRANSFORM_STEP,
            values,
        })
    }

    fn in_range(&self, u: f64) -> bool {
        u >= self.u_lo && u <= self.u_lo + self.du * (self.values.len() - 1) as f64
    }

    /// `A(u)`, cubic Hermite between nodes with the exact slope `1/a`.
    pub fn forward(&self, u: f64) -> f64 {
        assert!(self.in_range(u), "u = {u} outside the transform table");
        let pos = (u - self.u_lo) / self.du;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        let u_i = self.u_lo + i as f64 * self.du;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (
            self.du / (self.coeffs.a)(u_i),
            self.du / (self.coeffs.a)(u_i + self.du),
        );
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// Slope `A'(u) = 1/a(u)`.
    fn forward_slope(&self, u: f64) -> f64 {
        1.0 / (self.coeffs.a)(u)
    }

    /// Inverse `b(v)`: bracketed Newton on the monotone table, |residual| in
    /// `v` below 1e−12 · max(1, |v|).
    pub fn inverse(&self, v: f64) -> f64 {
        let last = self.values.len() - 1;
        assert!(
            v >= self.values[0] && v <= self.values[last],
            "v = {v} outside the transform table"
        );
        let i = match self
            .values
            .binary_search_by(|w| w.partial_cmp(&v).unwrap())
        {
            Ok(i) => return self.u_lo + i as f64 * self.du,
            Err(i) => i.clamp(1, last) - 1,
        };
        let mut lo = self.u_lo + i as f64 * self.du;
        let mut hi = lo + self.du;
        let mut u = lo + (v - self.values[i]) / (self.values[i + 1] - self.values[i]) * self.du;
        for _ in 0..60 {
            let res = self.forward(u) - v;
            if res.abs() <= 1e-12 * v.abs().max(1.0) {
                return u;
            }
            if res > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let step = res / self.forward_slope(u);
            let next = u - step;
            u = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        u
    }

    /// `f(v) = (g/a)(b(v))`.
    pub fn f_of_v(&self, v: f64) -> f64 {
        let u = self.inverse(v);
        (self.coeffs.g)(u) / (self.coeffs.a)(u)
    }

    /// Largest round-trip defect `|b(A(u)) − u|` over a uniform u-grid.
    pub fn round_trip_error(&self, u_lo: f64, u_hi: f64, samples: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..=samples {
            let u = u_lo + (u_hi - u_lo) * i as f64 / samples as f64;
            worst = worst.max((self.inverse(self.forward(u)) - u).abs());
        }
        worst
    }
}

/// Solve the transformed equation `∂_t v − Δ(b(v)) = f(v)ξ^ε − c^ε (F/a)(b(v))`
/// from `v₀ = A(u₀)` with the same stabilized IMEX split, and map the
/// trajectory back through `u = b(v)`.
pub fn integrate_transformed(
    u0: &RealField,
    enhanced: &EnhancedNoise,
    coeffs: &ModelCoefficients,
    cfg: &SolverConfig,
) -> Result<Trajectory, SolverError> {
    let grid = u0.grid();
    cfg.validate(grid, coeffs)?;
    if cfg.scheme != Scheme::Imex {
        return Err(SolverError::InvalidConfig(
            "the transformed solver is IMEX-only".into(),
        ));
    }
    let tables = TransformTables::new(coeffs)?;
    let op = ImexOp::new(grid, cfg.dt, coeffs.a_max);
    let c_eps = if cfg.renormalize { enhanced.c_eps } else { 0.0 };
    let xi = &enhanced.xi_eps;

    let map_checked = |f: &RealField, map: &dyn Fn(f64) -> f64, t: f64| -> Result<RealField, SolverError> {
        let mut out = Vec::with_capacity(f.values().len());
        for &v in f.values() {
            if !v.is_finite() || !tables.in_range_v(v) {
                return Err(SolverError::BlowUp { t });
            }
            out.push(map(v));
        }
        Ok(RealField::from_raw(grid, out))
    };

    let mut v = op.dealias_field(&u0.map(|u| tables.forward(u)));
    let mut snapshots = vec![op.dealias_field(&v.map(|w| tables.inverse(w)))];
    let steps = cfg.steps();
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        let u_of_v = map_checked(&v, &|w| tables.inverse(w), t)?;
        // Δ(b(v) − a_max v) spectrally, then the zeroth-order terms pointwise.
        let z = RealField::from_raw(
            grid,
            u_of_v
                .values()
                .iter()
                .zip(v.values())
                .map(|(&u, &w)| u - coeffs.a_max * w)
                .collect(),
        );
        let lap_z = op.laplacian(&z);
        let drift = RealField::from_raw(
            grid,
            u_of_v
                .values()
                .iter()
                .zip(lap_z.values())
                .zip(xi.values())
                .map(|((&u, &lap), &noise)| {
                    let a = (coeffs.a)(u);
                    let g = (coeffs.g)(u);
                    let gp = (coeffs.g_prime)(u);
                    let ap = (coeffs.a_prime)(u);
                    let ct = c_eps * (gp * g / a - ap * g * g / (a * a)) / a;
                    lap + (g / a) * noise - ct
                })
                .collect(),
        );
        let rhs = v.axpy(cfg.dt, &drift);
        v = op.implicit_solve(&rhs);
        if !v.is_finite() {
            return Err(SolverError::BlowUp { t });
        }
        if (step + 1) % cfg.stride == 0 {
            snapshots.push(map_checked(&v, &|w| tables.inverse(w), t)?);
        }
    }
    Trajectory::new(cfg.dt * cfg.stride as f64, snapshots)
        .map_err(|e| SolverError::InvalidConfig(e.to_string()))
}

impl TransformTables {
    fn in_range_v(&self, v: f64) -> bool {
        v >= self.values[0] && v <= self.values[self.values.len() - 1]
    }
}
