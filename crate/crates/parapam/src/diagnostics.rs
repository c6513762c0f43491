//! Paracontrolled decomposition of a numerical solution: the Gubinelli
//! derivative `u' = g(u)/a(u)`, the remainder `u^♯ = u − Π̄_{u'} X^ε`, and the
//! weighted norms that measure how much roughness the decomposition removes.

use crate::lp::{parabolic_time_part, validate_exponents, DyadicPartition, ExponentError, Trajectory};
use crate::noise::EnhancedNoise;
use crate::para::modified_paraproduct;
use crate::solver::ModelCoefficients;

/// A trajectory together with its Gubinelli derivative and remainder,
/// `u = Π̄_{u'} X + u^♯` by construction.
#[derive(Debug, Clone)]
pub struct GubinelliPair {
    pub u: Trajectory,
    pub u_prime: Trajectory,
    pub u_sharp: Trajectory,
    pub alpha: f64,
    pub beta: f64,
}

/// The three-part paracontrolled norm and the weighted `C^{2β}` sups.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsReport {
    /// `‖u'‖_{𝒞^β} + ‖u^♯‖_{𝒞^α} + sup_{t>0} t^{(2β−α)/2} ‖u^♯(t)‖_{C^{2β}}`.
    pub triple_norm: f64,
    /// `sup_{t>0} t^{(2β−α)/2} ‖u^♯(t)‖_{C^{2β}}`.
    pub weighted_sharp: f64,
    /// The same weighted sup for `u` itself.
    pub raw_u_2beta: f64,
    pub u_prime_parabolic: f64,
    pub u_sharp_parabolic: f64,
}

impl DiagnosticsReport {
    pub fn sharp_over_raw(&self) -> f64 {
        if self.raw_u_2beta == 0.0 {
            if self.weighted_sharp == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.weighted_sharp / self.raw_u_2beta
        }
    }
}

/// The Gubinelli derivative of the solved equation, `u'(t) = g(u(t))/a(u(t))`
/// pointwise; this is the self-consistent value forced by the fixed-point
/// algebra, so no second evolution is carried.
pub fn gubinelli_derivative(u: &Trajectory, coeffs: &ModelCoefficients) -> Trajectory {
    u.map_fields(|f| f.map(|v| (coeffs.g)(v) / (coeffs.a)(v)))
}

/// Paracontrolled decomposition against the run's own mollified potential
/// `X^ε`: `u^♯(t) = u(t) − (Π̄_{u'} X^ε)(t)`.
pub fn decompose(
    lp: &DyadicPartition,
    u: &Trajectory,
    enhanced: &EnhancedNoise,
    coeffs: &ModelCoefficients,
    alpha: f64,
    beta: f64,
) -> Result<GubinelliPair, ExponentError> {
    validate_exponents(alpha, beta)?;
    let u_prime = gubinelli_derivative(u, coeffs);
    let rough = modified_paraproduct(lp, &u_prime, &enhanced.x_eps);
    let u_sharp = Trajectory::new(
        u.dt(),
        u.fields()
            .iter()
            .zip(rough.fields())
            .map(|(a, b)| a.sub(b))
            .collect(),
    )
    .expect("remainder keeps the time grid");
    Ok(GubinelliPair {
        u: u.clone(),
        u_prime,
        u_sharp,
        alpha,
        beta,
    })
}

fn weighted_2beta_sup(lp: &DyadicPartition, sups: &[Vec<f64>], u: &Trajectory, alpha: f64, beta: f64) -> f64 {
    let weight_exp = (2.0 * beta - alpha) / 2.0;
    sups.iter()
        .enumerate()
        .skip(1) // the weight vanishes at t = 0; the sup is over t > 0
        .map(|(m, s)| u.time(m).powf(weight_exp) * lp.holder_norm_from_sups(s, 2.0 * beta))
        .fold(0.0, f64::max)
}

/// Evaluate the paracontrolled norms of a decomposition.
pub fn report(lp: &DyadicPartition, pair: &GubinelliPair) -> DiagnosticsReport {
    let (alpha, beta) = (pair.alpha, pair.beta);
    let sups_of = |traj: &Trajectory| -> Vec<Vec<f64>> {
        traj.fields().iter().map(|f| lp.block_sup_norms(f)).collect()
    };

    let sups_prime = sups_of(&pair.u_prime);
    let sups_sharp = sups_of(&pair.u_sharp);
    let sups_u = sups_of(&pair.u);

    let spatial_max = |sups: &[Vec<f64>], gamma: f64| {
        sups.iter()
            .map(|s| lp.holder_norm_from_sups(s, gamma))
            .fold(0.0, f64::max)
    };

    let u_prime_parabolic =
        spatial_max(&sups_prime, beta) + parabolic_time_part(&pair.u_prime, beta);
    let u_sharp_parabolic =
        spatial_max(&sups_sharp, alpha) + parabolic_time_part(&pair.u_sharp, alpha);
    let weighted_sharp = weighted_2beta_sup(lp, &sups_sharp, &pair.u_sharp, alpha, beta);
    let raw_u_2beta = weighted_2beta_sup(lp, &sups_u, &pair.u, alpha, beta);

    DiagnosticsReport {
        triple_norm: u_prime_parabolic + u_sharp_parabolic + weighted_sharp,
        weighted_sharp,
        raw_u_2beta,
        u_prime_parabolic,
        u_sharp_parabolic,
    }
}
