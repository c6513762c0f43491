//! Command drivers behind the `parapam` CLI: enhanced-noise production,
//! solver runs with trajectory snapshots and manifests, ε-convergence sweeps,
//! paracontrolled diagnostics, and the property-test campaigns.
//!
//! Every lattice point `(seed, ε)` is an isolated pure computation, so the
//! sweeps parallelize over points; CSV merging happens sequentially in a
//! fixed order and reruns of the same config are byte-identical.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{NoiseMode, RunConfig};
use crate::diagnostics::{decompose, report, DiagnosticsReport};
use crate::field::{GridSpec, RealField};
use crate::lp::{estimated_parabolic_norm, DyadicPartition, Trajectory};
use crate::noise::{enhance, renorm_constant, sample_prescribed_regularity, sample_white_noise, EnhancedNoise};
use crate::para::{bony, commutator_para_para, corrector, intertwine_defect, para_swap_defect};
use crate::solver::{integrate, ModelCoefficients, Scheme, SolverConfig, SolverError};
use crate::spectral::{dealiased_product, inv_neg_laplacian_zero_mean, Multiplier};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("numerical blow-up at t = {t}")]
    BlowUp { t: f64 },
    #[error("suite '{suite}' failed: {details}")]
    SuiteFailed { suite: String, details: String },
    #[error("{0}")]
    Internal(String),
}

impl From<SolverError> for HarnessError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::BlowUp { t } => HarnessError::BlowUp { t },
            other => HarnessError::Internal(other.to_string()),
        }
    }
}

impl From<crate::field::FieldError> for HarnessError {
    fn from(e: crate::field::FieldError) -> Self {
        HarnessError::Internal(e.to_string())
    }
}

/// Exit codes of the CLI: validation errors are 2, a blow-up in a single-run
/// command is 3, a failing property suite is 1.
pub fn exit_code(err: &HarnessError) -> i32 {
    match err {
        HarnessError::Config(_) => 2,
        HarnessError::BlowUp { .. } => 3,
        HarnessError::SuiteFailed { .. } => 1,
        _ => 2,
    }
}

fn run_in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(job)
    }
}

fn eps_tag(eps: f64) -> String {
    format!("{eps:e}")
}

/// Initial condition of the solver scenarios: `u₀ = cos x₁`.
pub fn default_initial_condition(grid: GridSpec) -> RealField {
    RealField::from_fn(grid, |x, _| x.cos())
}

/// Fixed smooth stand-in for the noise in `noise = smooth` mode.
pub fn smooth_noise_field(grid: GridSpec) -> RealField {
    RealField::from_fn(grid, |x, _| x.cos())
}

fn make_enhanced(
    lp: &DyadicPartition,
    cfg: &RunConfig,
    seed: u64,
    eps: f64,
) -> Result<EnhancedNoise, HarnessError> {
    match cfg.noise_mode {
        NoiseMode::White => {
            let noise = sample_white_noise(seed, lp.grid());
            enhance(lp, &noise, eps).map_err(|e| HarnessError::Internal(e.to_string()))
        }
        NoiseMode::Smooth => Ok(EnhancedNoise::from_smooth_field(
            smooth_noise_field(lp.grid()),
            eps,
        )),
        NoiseMode::Zero => Ok(EnhancedNoise::from_smooth_field(
            RealField::zeros(lp.grid()),
            eps,
        )),
    }
}

/// Resolve the per-run solver parameters. With `dt = auto` the step is the
/// ε-coupled default rounded down so a whole number of stride blocks lands
/// exactly on the horizon. `dt_floor` lets a sweep share one step across ε.
fn resolve_solver_config(
    cfg: &RunConfig,
    coeffs: &ModelCoefficients,
    grid: GridSpec,
    eps: f64,
    dt_override: Option<f64>,
    renormalize: bool,
) -> Result<SolverConfig, HarnessError> {
    let dt_raw = dt_override
        .or(cfg.dt)
        .unwrap_or_else(|| SolverConfig::default_dt(eps, grid, coeffs.a_max));
    let blocks = (cfg.t_final / (dt_raw * cfg.stride as f64)).ceil().max(1.0);
    let dt = cfg.t_final / (blocks * cfg.stride as f64);
    let sc = SolverConfig {
        t_final: cfg.t_final,
        dt,
        eps,
        renormalize,
        scheme: cfg.scheme,
        stride: cfg.stride,
    };
    sc.validate(grid, coeffs)
        .map_err(|e| HarnessError::Config(crate::config::ConfigError::Invalid(e.to_string())))?;
    Ok(sc)
}

/// The dt a convergence sweep uses for every run: the default at the finest
/// ε of the sweep, so time error is subordinate across the whole sweep and
/// trajectories share their snapshot grid. In smooth/zero mode the step does
/// not depend on ε at all, which keeps the no-ε-dependence case exact.
fn sweep_dt(cfg: &RunConfig, coeffs: &ModelCoefficients, grid: GridSpec) -> Option<f64> {
    if cfg.dt.is_some() {
        return cfg.dt;
    }
    match cfg.noise_mode {
        NoiseMode::White => {
            let finest = cfg.eps_list.last().copied().unwrap_or(1.0) / 2.0;
            Some(SolverConfig::default_dt(finest, grid, coeffs.a_max))
        }
        _ => Some(SolverConfig::default_dt(f64::INFINITY, grid, coeffs.a_max)),
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

/// SHA-256 hex digest over the canonical little-endian serialization of the
/// run inputs; recorded in trajectory manifests.
pub fn content_hash(chunks: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for c in chunks {
        hasher.update(c);
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn input_hash(cfg: &RunConfig, sc: &SolverConfig, seed: u64, u0: &RealField) -> String {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"parapam-run-v1");
    bytes.extend_from_slice(&(cfg.n as u64).to_le_bytes());
    bytes.extend_from_slice(&seed.to_le_bytes());
    bytes.extend_from_slice(&sc.eps.to_le_bytes());
    bytes.extend_from_slice(&sc.t_final.to_le_bytes());
    bytes.extend_from_slice(&sc.dt.to_le_bytes());
    bytes.extend_from_slice(&(sc.stride as u64).to_le_bytes());
    bytes.push(u8::from(sc.renormalize));
    bytes.push(match sc.scheme {
        Scheme::Imex => 0,
        Scheme::ExplicitRk4 => 1,
    });
    bytes.extend_from_slice(cfg.model.as_bytes());
    bytes.push(0);
    bytes.extend_from_slice(cfg.noise_mode.as_str().as_bytes());
    let mut field_bytes = Vec::with_capacity(u0.values().len() * 8);
    for v in u0.values() {
        field_bytes.extend_from_slice(&v.to_le_bytes());
    }
    content_hash(&[&bytes, &field_bytes])
}

/// `parapam noise`: enhanced-noise fields in PFLD format for the whole
/// `(seed, ε)` lattice plus the `renorm.csv` table `(n, eps, c_eps)`.
pub fn cmd_noise(cfg: &RunConfig) -> Result<(), HarnessError> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    fs::create_dir_all(&cfg.outdir)?;
    let lp = DyadicPartition::new(grid);

    let mut rows = Vec::new();
    for &eps in &cfg.eps_list {
        let c = renorm_constant(&lp, eps).map_err(|e| HarnessError::Internal(e.to_string()))?;
        rows.push(format!("{},{},{}", cfg.n, eps_tag(eps), c));
    }
    write_csv(&cfg.outdir.join("renorm.csv"), "n,eps,c_eps", &rows)?;

    let lattice: Vec<(u64, f64)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.eps_list.iter().map(move |&e| (s, e)))
        .collect();
    run_in_pool(cfg.workers, || {
        lattice
            .par_iter()
            .map(|&(seed, eps)| -> Result<(), HarnessError> {
                let e = make_enhanced(&lp, cfg, seed, eps)?;
                let stem = format!("noise_s{seed}_n{}_eps{}", cfg.n, eps_tag(eps));
                e.xi_eps
                    .write_pfld(&cfg.outdir.join(format!("{stem}_xi.pfld")))?;
                e.x_eps
                    .write_pfld(&cfg.outdir.join(format!("{stem}_x.pfld")))?;
                e.resonant_ren
                    .write_pfld(&cfg.outdir.join(format!("{stem}_res.pfld")))?;
                Ok(())
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(())
}

fn write_trajectory(
    dir: &Path,
    traj: &Trajectory,
    sc: &SolverConfig,
    cfg: &RunConfig,
    seed: u64,
    c_eps: f64,
    hash: &str,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    for m in 0..traj.len() {
        traj.field(m)
            .write_pfld(&dir.join(format!("snap_{m:05}.pfld")))?;
    }
    let times: Vec<String> = (0..traj.len()).map(|m| format!("{:e}", traj.time(m))).collect();
    let mut w = BufWriter::new(File::create(dir.join("manifest.txt"))?);
    writeln!(w, "format = parapam-trajectory-v1")?;
    writeln!(w, "seed = {seed}")?;
    writeln!(w, "n = {}", cfg.n)?;
    writeln!(w, "eps = {}", eps_tag(sc.eps))?;
    writeln!(w, "dt = {:e}", sc.dt)?;
    writeln!(w, "stride = {}", sc.stride)?;
    writeln!(w, "scheme = {}", sc.scheme.as_str())?;
    writeln!(w, "renormalize = {}", if sc.renormalize { "on" } else { "off" })?;
    writeln!(w, "c_eps = {c_eps}")?;
    writeln!(w, "input_hash = {hash}")?;
    writeln!(w, "snapshots = {}", traj.len())?;
    writeln!(w, "times = {}", times.join(","))?;
    writeln!(w, "config_echo_begin")?;
    for line in cfg.echo().lines() {
        writeln!(w, "  {line}")?;
    }
    writeln!(w, "config_echo_end")?;
    w.flush()?;
    Ok(())
}

/// `parapam solve`: integrate every lattice point and write trajectory
/// directories with manifests. A blow-up aborts only single-point runs.
pub fn cmd_solve(cfg: &RunConfig) -> Result<(), HarnessError> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let coeffs = cfg.coefficients()?;
    fs::create_dir_all(&cfg.outdir)?;
    let lp = DyadicPartition::new(grid);
    let u0 = default_initial_condition(grid);
    let single_run = cfg.seeds.len() == 1 && cfg.eps_list.len() == 1;

    let lattice: Vec<(u64, f64)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.eps_list.iter().map(move |&e| (s, e)))
        .collect();
    let results = run_in_pool(cfg.workers, || {
        lattice
            .par_iter()
            .map(|&(seed, eps)| -> Result<(), HarnessError> {
                let sc = resolve_solver_config(cfg, &coeffs, grid, eps, None, cfg.renormalize)?;
                let enhanced = make_enhanced(&lp, cfg, seed, eps)?;
                let traj = integrate(&u0, &enhanced, &coeffs, &sc)?;
                let dir = cfg
                    .outdir
                    .join(format!("traj_s{seed}_n{}_eps{}", cfg.n, eps_tag(eps)));
                let hash = input_hash(cfg, &sc, seed, &u0);
                write_trajectory(&dir, &traj, &sc, cfg, seed, enhanced.c_eps, &hash)
            })
            .collect::<Vec<Result<(), HarnessError>>>()
    });

    let mut first_blowup = None;
    for (point, r) in lattice.iter().zip(results) {
        if let Err(e) = r {
            match e {
                HarnessError::BlowUp { t } => {
                    eprintln!(
                        "warning: blow-up at t = {t} for seed {} eps {}",
                        point.0, point.1
                    );
                    if first_blowup.is_none() {
                        first_blowup = Some(t);
                    }
                }
                other => return Err(other),
            }
        }
    }
    match first_blowup {
        Some(t) if single_run => Err(HarnessError::BlowUp { t }),
        _ => Ok(()),
    }
}

/// One `(seed, ε)` row of a convergence sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub seed: u64,
    pub eps: f64,
    /// `‖u^ε − u^{ε/2}‖_{C_T L∞}` between renormalized runs.
    pub d_sup: Option<f64>,
    /// The same difference in the estimated parabolic `𝒞^α` norm.
    pub d_parab: Option<f64>,
    /// `‖u^ε_renormalized − u^ε_naive‖_{C_T L∞}`.
    pub gap_unren: Option<f64>,
    pub diagnostics: Option<DiagnosticsReport>,
    pub blew_up: bool,
}

/// Run the ε-convergence experiment: for every seed, renormalized runs at
/// each ε of the sweep (plus the final ε/2 reference), naive runs for the
/// renormalized-vs-naive gap and, optionally, the paracontrolled diagnostics
/// of each renormalized run.
pub fn converge_sweep(cfg: &RunConfig, with_diagnostics: bool) -> Result<Vec<SweepRow>, HarnessError> {
    cfg.validate()?;
    if cfg.eps_list.len() < 3 {
        return Err(HarnessError::Config(crate::config::ConfigError::Invalid(
            format!("converge needs >= 3 eps values, got {}", cfg.eps_list.len()),
        )));
    }
    let grid = cfg.grid()?;
    let coeffs = cfg.coefficients()?;
    let lp = DyadicPartition::new(grid);
    let u0 = default_initial_condition(grid);
    let dt = sweep_dt(cfg, &coeffs, grid);

    let per_seed = |&seed: &u64| -> Result<Vec<SweepRow>, HarnessError> {
        let mut rows = Vec::new();
        let mut prev: Option<(Trajectory, f64)> = None; // (renormalized run, its eps)
        let mut eps_runs = cfg.eps_list.clone();
        eps_runs.push(cfg.eps_list.last().unwrap() / 2.0);
        let mut pending: Option<SweepRow> = None;
        for &eps in &eps_runs {
            let sc = resolve_solver_config(cfg, &coeffs, grid, eps, dt, true)?;
            let enhanced = make_enhanced(&lp, cfg, seed, eps)?;
            let ren = match integrate(&u0, &enhanced, &coeffs, &sc) {
                Ok(t) => t,
                Err(SolverError::BlowUp { .. }) => {
                    if let Some(row) = pending.take() {
                        rows.push(row);
                    }
                    rows.push(SweepRow {
                        seed,
                        eps,
                        d_sup: None,
                        d_parab: None,
                        gap_unren: None,
                        diagnostics: None,
                        blew_up: true,
                    });
                    prev = None;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            // finalize the previous row now that its ε/2 partner exists
            if let (Some(mut row), Some((prev_traj, _))) = (pending.take(), prev.as_ref()) {
                let diff = prev_traj.sub(&ren);
                row.d_sup = Some(prev_traj.sup_distance(&ren));
                row.d_parab = Some(estimated_parabolic_norm(&lp, &diff, cfg.alpha));
                rows.push(row);
            }
            if eps_runs.last() == Some(&eps) && cfg.eps_list.last() != Some(&eps) {
                // pure reference run for the last pair
                prev = Some((ren, eps));
                continue;
            }
            let sc_naive = resolve_solver_config(cfg, &coeffs, grid, eps, dt, false)?;
            let gap = match integrate(&u0, &enhanced, &coeffs, &sc_naive) {
                Ok(naive) => Some(ren.sup_distance(&naive)),
                Err(SolverError::BlowUp { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let diagnostics = if with_diagnostics {
                let pair = decompose(&lp, &ren, &enhanced, &coeffs, cfg.alpha, cfg.beta)
                    .map_err(|e| HarnessError::Internal(e.to_string()))?;
                Some(report(&lp, &pair))
            } else {
                None
            };
            pending = Some(SweepRow {
                seed,
                eps,
                d_sup: None,
                d_parab: None,
                gap_unren: gap,
                diagnostics,
                blew_up: false,
            });
            prev = Some((ren, eps));
        }
        if let Some(row) = pending.take() {
            rows.push(row);
        }
        Ok(rows)
    };

    let nested: Result<Vec<Vec<SweepRow>>, HarnessError> =
        run_in_pool(cfg.workers, || cfg.seeds.par_iter().map(per_seed).collect());
    Ok(nested?.into_iter().flatten().collect())
}

fn opt(v: Option<f64>) -> String {
    v.map_or("nan".to_string(), |x| format!("{x}"))
}

/// `parapam converge`: write `converge.csv` with columns
/// `(seed, n, eps, alpha, beta, d_sup, d_parab, gap_unren, status)`.
pub fn cmd_converge(cfg: &RunConfig) -> Result<(), HarnessError> {
    let rows = converge_sweep(cfg, false)?;
    fs::create_dir_all(&cfg.outdir)?;
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                r.seed,
                cfg.n,
                eps_tag(r.eps),
                cfg.alpha,
                cfg.beta,
                opt(r.d_sup),
                opt(r.d_parab),
                opt(r.gap_unren),
                if r.blew_up { "blowup" } else { "ok" }
            )
        })
        .collect();
    write_csv(
        &cfg.outdir.join("converge.csv"),
        "seed,n,eps,alpha,beta,d_sup,d_parab,gap_unren,status",
        &lines,
    )
}

/// One diagnostics row per `(seed, ε)`.
pub fn diagnostics_rows(cfg: &RunConfig) -> Result<Vec<(u64, f64, DiagnosticsReport)>, HarnessError> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let coeffs = cfg.coefficients()?;
    let lp = DyadicPartition::new(grid);
    let u0 = default_initial_condition(grid);
    let lattice: Vec<(u64, f64)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.eps_list.iter().map(move |&e| (s, e)))
        .collect();
    run_in_pool(cfg.workers, || {
        lattice
            .par_iter()
            .map(|&(seed, eps)| {
                let sc = resolve_solver_config(cfg, &coeffs, grid, eps, None, cfg.renormalize)?;
                let enhanced = make_enhanced(&lp, cfg, seed, eps)?;
                let traj = integrate(&u0, &enhanced, &coeffs, &sc)?;
                let pair = decompose(&lp, &traj, &enhanced, &coeffs, cfg.alpha, cfg.beta)
                    .map_err(|e| HarnessError::Internal(e.to_string()))?;
                Ok((seed, eps, report(&lp, &pair)))
            })
            .collect()
    })
}

/// `parapam diagnose`: write `diagnostics.csv` with columns
/// `(seed, n, eps, alpha, beta, triple_norm, weighted_sharp, raw_u_2beta,
/// sharp_over_raw)`.
pub fn cmd_diagnose(cfg: &RunConfig) -> Result<(), HarnessError> {
    let rows = diagnostics_rows(cfg)?;
    fs::create_dir_all(&cfg.outdir)?;
    let lines: Vec<String> = rows
        .iter()
        .map(|(seed, eps, rep)| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                seed,
                cfg.n,
                eps_tag(*eps),
                cfg.alpha,
                cfg.beta,
                rep.triple_norm,
                rep.weighted_sharp,
                rep.raw_u_2beta,
                rep.sharp_over_raw()
            )
        })
        .collect();
    write_csv(
        &cfg.outdir.join("diagnostics.csv"),
        "seed,n,eps,alpha,beta,triple_norm,weighted_sharp,raw_u_2beta,sharp_over_raw",
        &lines,
    )
}

/// One case of a property suite.
#[derive(Debug, Clone)]
pub struct SuiteCase {
    pub case: String,
    pub seed: u64,
    pub n: usize,
    pub value: f64,
    pub threshold: f64,
    /// Whether `value` is required to stay below (`true`) or above (`false`)
    /// the threshold.
    pub upper_bound: bool,
}

impl SuiteCase {
    pub fn passed(&self) -> bool {
        if self.upper_bound {
            self.value <= self.threshold
        } else {
            self.value >= self.threshold
        }
    }
}

/// Outcome of one `parapam proptest` suite.
#[derive(Debug)]
pub struct SuiteOutcome {
    pub suite: String,
    pub cases: Vec<SuiteCase>,
    pub passed: bool,
    pub summary: String,
}

/// Calibrated partition constant for the composition bound
/// `‖g(u)‖_{C^α} ≤ K ‖g‖_{C¹} (1 + ‖u‖_{C^α})`; measured maxima sit near 1.2
/// across the registry, the constant carries a 3x margin.
pub const COMPOSITION_CONSTANT: f64 = 4.0;

/// Calibrated constant for the heat-kernel bound
/// `‖P_t f‖_{L∞} ≤ K t^{−a/2} ‖f‖_{C^{−a}}` at `a = 1.1`; measured maxima
/// sit near 1.6, the constant carries a 3x margin.
pub const SCHAUDER_CONSTANT: f64 = 5.0;

/// Tolerance on fitted regularity exponents of the corrector-type defects.
pub const EXPONENT_TOLERANCE: f64 = 0.15;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Exponent suite shared by `corrector`, `commutator` and `paraswap`:
/// estimate the defect regularity on synthetic fields over 10 seeds and
/// compare the seed-mean against the continuity exponent minus the fit
/// tolerance.
fn exponent_suite(
    suite: &str,
    n: usize,
    threshold: f64,
    defect: impl Fn(&DyadicPartition, GridSpec, u64) -> RealField + Sync,
) -> Result<SuiteOutcome, HarnessError> {
    let grid = GridSpec::new(n).map_err(|e| HarnessError::Internal(e.to_string()))?;
    let lp = DyadicPartition::new(grid);
    let seeds: Vec<u64> = (0..10).collect();
    let estimates: Result<Vec<(u64, f64)>, HarnessError> = seeds
        .par_iter()
        .map(|&seed| {
            let d = defect(&lp, grid, seed);
            let est = lp
                .regularity_estimate(&d)
                .map_err(|e| HarnessError::Internal(e.to_string()))?;
            Ok((seed, est))
        })
        .collect();
    let estimates = estimates?;
    let cases: Vec<SuiteCase> = estimates
        .iter()
        .map(|&(seed, est)| SuiteCase {
            case: format!("{suite}-estimate"),
            seed,
            n,
            value: est,
            threshold: threshold - EXPONENT_TOLERANCE,
            upper_bound: false,
        })
        .collect();
    let m = mean(&estimates.iter().map(|&(_, e)| e).collect::<Vec<_>>());
    let passed = m >= threshold - EXPONENT_TOLERANCE;
    Ok(SuiteOutcome {
        suite: suite.to_string(),
        cases,
        passed,
        summary: format!(
            "mean estimate {m:.3} vs required {:.3}",
            threshold - EXPONENT_TOLERANCE
        ),
    })
}

const SUITE_ALPHA: f64 = 0.8;
const SUITE_BETA: f64 = 0.7;

/// Run one property-test battery and return its cases.
pub fn run_suite(suite: &str, _cfg: &RunConfig) -> Result<SuiteOutcome, HarnessError> {
    match suite {
        "bony" => {
            let mut cases = Vec::new();
            for n in [32usize, 64, 128] {
                let grid = GridSpec::new(n).unwrap();
                let lp = DyadicPartition::new(grid);
                for seed in 0..5u64 {
                    let f = sample_white_noise(seed, grid).into_xi();
                    let g = sample_white_noise(seed + 1000, grid).into_xi();
                    let d = bony(&lp, &f, &g);
                    let sum = d.para_fg.axpy(1.0, &d.para_gf).axpy(1.0, &d.resonant);
                    let product = dealiased_product(&f, &g);
                    let rel = sum.max_abs_diff(&product) / product.max_abs();
                    cases.push(SuiteCase {
                        case: "bony-exactness".into(),
                        seed,
                        n,
                        value: rel,
                        threshold: 1e-12,
                        upper_bound: true,
                    });
                }
            }
            let passed = cases.iter().all(SuiteCase::passed);
            let worst = cases.iter().map(|c| c.value).fold(0.0, f64::max);
            Ok(SuiteOutcome {
                suite: suite.into(),
                cases,
                passed,
                summary: format!("worst relative defect {worst:.3e}"),
            })
        }
        // regularities (α₁, α₂, α−2) = (0.7, 0.7, −1.1): continuity exponent 0.3
        "corrector" => exponent_suite(
            suite,
            512,
            0.7 + 0.7 - 1.1,
            |lp, grid, seed| {
                let a = sample_prescribed_regularity(3 * seed + 1, grid, 0.7);
                let b = sample_prescribed_regularity(3 * seed + 2, grid, 0.7);
                let xi = sample_prescribed_regularity(3 * seed + 3, grid, -1.1);
                corrector(lp, &a, &b, &xi)
            },
        ),
        // f, g ∈ C^β, a ∈ C^α, b ∈ C^{α−2}: continuity exponent 2α+β−2.
        // The grid is one step finer than the corrector's: the defect's
        // asymptotic decay needs one more clean block to dominate the fit.
        "commutator" => exponent_suite(
            suite,
            1024,
            2.0 * SUITE_ALPHA + SUITE_BETA - 2.0,
            |lp, grid, seed| {
                let f = sample_prescribed_regularity(4 * seed + 1, grid, 0.7);
                let g = sample_prescribed_regularity(4 * seed + 2, grid, 0.7);
                let a = sample_prescribed_regularity(4 * seed + 3, grid, 0.8);
                let b = sample_prescribed_regularity(4 * seed + 4, grid, -1.2);
                commutator_para_para(lp, &f, &g, &a, &b)
            },
        ),
        // f ∈ C^{2β}, g ∈ C^β, h ∈ C^{α−2}: continuity exponent α+β−2.
        "paraswap" => exponent_suite(
            suite,
            1024,
            SUITE_ALPHA + SUITE_BETA - 2.0,
            |lp, grid, seed| {
                let f = sample_prescribed_regularity(3 * seed + 1, grid, 1.4);
                let g = sample_prescribed_regularity(3 * seed + 2, grid, 0.7);
                let h = sample_prescribed_regularity(3 * seed + 3, grid, -1.2);
                para_swap_defect(lp, &f, &g, &h)
            },
        ),
        "intertwine" => {
            let n = 256;
            let grid = GridSpec::new(n).unwrap();
            let lp = DyadicPartition::new(grid);
            let coeffs = crate::solver::coefficient_registry("sin-cos").unwrap();
            let threshold = SUITE_ALPHA + SUITE_BETA - 2.0 - 0.2;
            let u0 = default_initial_condition(grid);
            let a0t = Multiplier::heat(grid, 0.01).apply(&u0).map(coeffs.a);
            let seeds: Vec<u64> = (0..5).collect();
            let run = |seed: u64, snapshots: usize| -> Result<f64, HarnessError> {
                let xi_eps = crate::noise::mollify(sample_white_noise(seed, grid).xi(), 1e-4)
                    .map_err(|e| HarnessError::Internal(e.to_string()))?;
                let x = inv_neg_laplacian_zero_mean(&xi_eps);
                let w = sample_prescribed_regularity(seed + 77, grid, 0.7);
                let dt = 0.02 / snapshots as f64;
                let fields = (0..=snapshots)
                    .map(|m| w.scale(1.0 + m as f64 * dt))
                    .collect();
                let u_prime = Trajectory::new(dt, fields).unwrap();
                let defect = intertwine_defect(&lp, &u_prime, &x, &a0t)
                    .map_err(|e| HarnessError::Internal(e.to_string()))?;
                let mid = defect.field(defect.len() / 2);
                lp.regularity_estimate(mid)
                    .map_err(|e| HarnessError::Internal(e.to_string()))
            };
            let results: Result<Vec<(u64, f64, f64)>, HarnessError> = seeds
                .par_iter()
                .map(|&s| Ok((s, run(s, 8)?, run(s, 16)?)))
                .collect();
            let results = results?;
            let mut cases = Vec::new();
            for &(seed, coarse, fine) in &results {
                cases.push(SuiteCase {
                    case: "intertwine-estimate-fine".into(),
                    seed,
                    n,
                    value: fine,
                    threshold,
                    upper_bound: false,
                });
                cases.push(SuiteCase {
                    case: "intertwine-dt-refinement".into(),
                    seed,
                    n,
                    value: fine - coarse,
                    threshold: -0.1,
                    upper_bound: false,
                });
            }
            let mean_fine = mean(&results.iter().map(|r| r.2).collect::<Vec<_>>());
            let passed = mean_fine >= threshold
                && results.iter().all(|r| r.2 - r.1 >= -0.1);
            Ok(SuiteOutcome {
                suite: suite.into(),
                cases,
                passed,
                summary: format!("mean mid-time estimate {mean_fine:.3} vs required {threshold:.3}"),
            })
        }
        "composition" => {
            let n = 256;
            let grid = GridSpec::new(n).unwrap();
            let lp = DyadicPartition::new(grid);
            let mut cases = Vec::new();
            for model in ["const", "sin-cos", "rational"] {
                let coeffs = crate::solver::coefficient_registry(model).unwrap();
                for seed in 0..5u64 {
                    for amp in [0.5, 2.0] {
                        let u = sample_prescribed_regularity(seed + 31, grid, SUITE_ALPHA);
                        let u = u.scale(amp / u.max_abs());
                        let gu = u.map(coeffs.g);
                        let ratio = lp.holder_norm(&gu, SUITE_ALPHA)
                            / (1.0 + lp.holder_norm(&u, SUITE_ALPHA));
                        cases.push(SuiteCase {
                            case: format!("composition-{model}-amp{amp}"),
                            seed,
                            n,
                            value: ratio,
                            threshold: coeffs.g_c1_norm * COMPOSITION_CONSTANT,
                            upper_bound: true,
                        });
                    }
                }
            }
            let passed = cases.iter().all(SuiteCase::passed);
            let worst = cases.iter().map(|c| c.value / c.threshold).fold(0.0, f64::max);
            Ok(SuiteOutcome {
                suite: suite.into(),
                cases,
                passed,
                summary: format!("worst ratio/threshold {worst:.3}"),
            })
        }
        "schauder" => {
            let n = 512;
            let grid = GridSpec::new(n).unwrap();
            let lp = DyadicPartition::new(grid);
            let deficit = 1.1;
            let mut cases = Vec::new();
            for seed in 0..5u64 {
                let f = sample_prescribed_regularity(seed + 11, grid, -deficit);
                let base = lp.holder_norm(&f, -deficit);
                let mut worst = 0.0f64;
                for k in 2..=10 {
                    let t = 0.5f64.powi(k);
                    let damped = Multiplier::heat(grid, t).apply(&f);
                    worst = worst.max(t.powf(deficit / 2.0) * damped.max_abs() / base);
                }
                cases.push(SuiteCase {
                    case: "schauder-heat-bound".into(),
                    seed,
                    n,
                    value: worst,
                    threshold: SCHAUDER_CONSTANT,
                    upper_bound: true,
                });
            }
            let passed = cases.iter().all(SuiteCase::passed);
            let worst = cases.iter().map(|c| c.value).fold(0.0, f64::max);
            Ok(SuiteOutcome {
                suite: suite.into(),
                cases,
                passed,
                summary: format!("worst weighted sup {worst:.3} vs K = {SCHAUDER_CONSTANT}"),
            })
        }
        other => Err(HarnessError::Config(crate::config::ConfigError::Invalid(
            format!("unknown proptest suite '{other}' (bony, corrector, commutator, paraswap, intertwine, composition, schauder)"),
        ))),
    }
}

/// `parapam proptest <suite>`: run the battery, write the per-case CSV and
/// fail (exit code 1) unless every case passes.
pub fn cmd_proptest(suite: &str, cfg: &RunConfig) -> Result<SuiteOutcome, HarnessError> {
    fs::create_dir_all(&cfg.outdir)?;
    let outcome = run_in_pool(cfg.workers, || run_suite(suite, cfg))?;
    let lines: Vec<String> = outcome
        .cases
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                c.seed,
                c.n,
                0.0,
                cfg.alpha,
                cfg.beta,
                c.case,
                c.value,
                c.threshold,
                if c.passed() { "pass" } else { "fail" }
            )
        })
        .collect();
    write_csv(
        &cfg.outdir.join(format!("proptest_{suite}.csv")),
        "seed,n,eps,alpha,beta,case,value,threshold,status",
        &lines,
    )?;
    if outcome.passed {
        Ok(outcome)
    } else {
        Err(HarnessError::SuiteFailed {
            suite: suite.to_string(),
            details: outcome.summary,
        })
    }
}
