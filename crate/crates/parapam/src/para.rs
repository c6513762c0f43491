//! Bony paraproducts, the resonant term, the time-smoothed modified
//! paraproduct and the corrector/commutator operators built from them.
//!
//! All pointwise products go through the two-thirds dealiasing rule, so the
//! Bony identity `Π_f g + Π_g f + Π(f,g) = fg` holds to machine precision on
//! the retained modes: the blocks reconstruct each factor exactly there, and
//! the block sums telescope pointwise on the grid.

use thiserror::Error;

use crate::field::RealField;
use crate::lp::{DyadicPartition, Trajectory};
use crate::spectral::{
    dealias, dealias_spectral, dealiased_product, forward_transform, inverse_transform, Multiplier,
};

#[derive(Debug, Error)]
pub enum ParaError {
    #[error("need at least {need} snapshots, got {got}")]
    TooFewSnapshots { need: usize, got: usize },
}

/// The three Bony pieces of a product: `para_fg = Π_f g`, `para_gf = Π_g f`
/// and the resonant part `Π(f, g)`. Their sum is the dealiased product.
#[derive(Debug, Clone)]
pub struct BonyDecomposition {
    pub para_fg: RealField,
    pub para_gf: RealField,
    pub resonant: RealField,
}

/// Dealias the input and return all its dyadic blocks.
fn dealiased_blocks(lp: &DyadicPartition, f: &RealField) -> Vec<RealField> {
    let spec = dealias_spectral(&forward_transform(f));
    lp.blocks(&inverse_transform(&spec))
}

fn accumulate_paraproduct(
    lp: &DyadicPartition,
    blocks_low: &[RealField],
    blocks_high: &[RealField],
) -> RealField {
    let grid = lp.grid();
    let mut low = blocks_low[0].clone(); // S_{-1} = Δ_{-1}
    let mut sum = RealField::zeros(grid);
    for j in 1..=lp.jmax() {
        // here `low` holds S_{j-2}
        let term = low.pointwise_mul(&blocks_high[(j + 1) as usize]);
        sum = sum.axpy(1.0, &term);
        low = low.axpy(1.0, &blocks_low[j as usize]); // S_{j-1} for the next j
    }
    dealias(&sum)
}

fn accumulate_resonant(
    lp: &DyadicPartition,
    blocks_f: &[RealField],
    blocks_g: &[RealField],
) -> RealField {
    let grid = lp.grid();
    let mut sum = RealField::zeros(grid);
    for i in -1..=lp.jmax() {
        for j in (i - 1).max(-1)..=(i + 1).min(lp.jmax()) {
            let term = blocks_f[(i + 1) as usize].pointwise_mul(&blocks_g[(j + 1) as usize]);
            sum = sum.axpy(1.0, &term);
        }
    }
    dealias(&sum)
}

/// Paraproduct `Π_f g = Σ_{j ≥ 1} (S_{j−1} f)(Δ_j g)`, dealiased.
pub fn paraproduct(lp: &DyadicPartition, f: &RealField, g: &RealField) -> RealField {
    assert_eq!(f.grid(), g.grid(), "paraproduct on mismatched grids");
    let bf = dealiased_blocks(lp, f);
    let bg = dealiased_blocks(lp, g);
    accumulate_paraproduct(lp, &bf, &bg)
}

/// Resonant term `Π(f, g) = Σ_{|i−j| ≤ 1} (Δ_i f)(Δ_j g)`, dealiased.
pub fn resonant(lp: &DyadicPartition, f: &RealField, g: &RealField) -> RealField {
    assert_eq!(f.grid(), g.grid(), "resonant on mismatched grids");
    let bf = dealiased_blocks(lp, f);
    let bg = dealiased_blocks(lp, g);
    accumulate_resonant(lp, &bf, &bg)
}

/// Full Bony decomposition with the block transforms shared between parts.
pub fn bony(lp: &DyadicPartition, f: &RealField, g: &RealField) -> BonyDecomposition {
    assert_eq!(f.grid(), g.grid(), "bony on mismatched grids");
    let bf = dealiased_blocks(lp, f);
    let bg = dealiased_blocks(lp, g);
    BonyDecomposition {
        para_fg: accumulate_paraproduct(lp, &bf, &bg),
        para_gf: accumulate_paraproduct(lp, &bg, &bf),
        resonant: accumulate_resonant(lp, &bf, &bg),
    }
}

/// Averaging kernel of the modified paraproduct: `φ(r) = 30 r²(1−r)²` on
/// `[0, 1]`, unit mass.
pub fn time_kernel(r: f64) -> f64 {
    if !(0.0..=1.0).contains(&r) {
        0.0
    } else {
        30.0 * r * r * (1.0 - r) * (1.0 - r)
    }
}

const KERNEL_NODES: usize = 256;

/// Sparse snapshot weights of the causal average
/// `(Q h)(t) = ∫₀^∞ φ(r) h(max(t − λ r, 0)) dr` discretized by the trapezoid
/// rule on the union of a uniform r-grid and the snapshot crossings, with
/// linear interpolation between snapshots. Weights are normalized to unit
/// mass so a time-constant h is averaged exactly.
fn time_average_weights(dt: f64, len: usize, t: f64, lambda: f64) -> Vec<(usize, f64)> {
    let t_last = dt * (len - 1) as f64;
    let mut nodes: Vec<f64> = (0..=KERNEL_NODES)
        .map(|i| i as f64 / KERNEL_NODES as f64)
        .collect();
    for m in 0..len {
        let r = (t - dt * m as f64) / lambda;
        if r > 0.0 && r < 1.0 {
            nodes.push(r);
        }
    }
    let r0 = t / lambda;
    if r0 > 0.0 && r0 < 1.0 {
        nodes.push(r0);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut weights = vec![0.0f64; len];
    let mut mass = 0.0;
    let mut deposit = |r: f64, w: f64| {
        let phi = time_kernel(r);
        if phi == 0.0 {
            return 0.0;
        }
        let s = (t - lambda * r).clamp(0.0, t_last);
        let pos = s / dt;
        let m = (pos.floor() as usize).min(len - 2);
        let frac = (pos - m as f64).clamp(0.0, 1.0);
        weights[m] += w * phi * (1.0 - frac);
        weights[m + 1] += w * phi * frac;
        w * phi
    };
    for w in nodes.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        mass += deposit(w[0], half);
        mass += deposit(w[1], half);
    }
    assert!(mass > 0.0, "kernel mass vanished");
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(m, w)| (m, w / mass))
        .collect()
}

/// Modified paraproduct on parabolic functions:
/// `(Π̄_f g)(t) = Σ_{j ≥ 1} (Q_j S_{j−1} f)(t) · Δ_j g`, where `Q_j` averages
/// the low-frequency factor over the causal window `2^{−2j}` at each scale.
/// For time-constant `f` this coincides with the plain paraproduct snapshot
/// by snapshot.
pub fn modified_paraproduct(lp: &DyadicPartition, f: &Trajectory, g: &RealField) -> Trajectory {
    assert_eq!(f.grid(), g.grid(), "modified paraproduct on mismatched grids");
    let grid = lp.grid();
    let blocks_g = dealiased_blocks(lp, g);
    let len = f.len();
    let dt = f.dt();

    // Dealiased snapshots of the low factor; the per-block low-pass cut is
    // applied after the time averaging, which commutes with it.
    let snaps: Vec<RealField> = f.fields().iter().map(dealias).collect();

    let mut out = Vec::with_capacity(len);
    for m_t in 0..len {
        let t = dt * m_t as f64;
        let mut acc = RealField::zeros(grid);
        for j in 1..=lp.jmax() {
            let lambda = 0.25f64.powi(j);
            let weights = time_average_weights(dt, len, t, lambda);
            let mut combined = RealField::zeros(grid);
            for (m, w) in weights {
                combined = combined.axpy(w, &snaps[m]);
            }
            let spec = forward_transform(&combined);
            let n = grid.n();
            let mut cut = spec.clone();
            for m1 in 0..n {
                for m2 in 0..n {
                    let ksq = grid.k_sq(m1, m2) as usize;
                    cut.coeffs_mut()[m1 * n + m2] *= lp.low_pass_symbol(j - 2, ksq);
                }
            }
            let low = inverse_transform(&cut);
            acc = acc.axpy(1.0, &low.pointwise_mul(&blocks_g[(j + 1) as usize]));
        }
        out.push(dealias(&acc));
    }
    Trajectory::new(dt, out).expect("modified paraproduct keeps the time grid")
}

/// Corrector `C(a, b, ξ) = Π(Π_a b, ξ) − a Π(b, ξ)`.
pub fn corrector(
    lp: &DyadicPartition,
    a: &RealField,
    b: &RealField,
    xi: &RealField,
) -> RealField {
    let inner = paraproduct(lp, a, b);
    let first = resonant(lp, &inner, xi);
    let second = dealiased_product(a, &resonant(lp, b, xi));
    first.sub(&second)
}

/// Para-para commutator defect `Π(Π_f a, Π_g b) − (fg) Π(a, b)`.
pub fn commutator_para_para(
    lp: &DyadicPartition,
    f: &RealField,
    g: &RealField,
    a: &RealField,
    b: &RealField,
) -> RealField {
    let lhs = resonant(lp, &paraproduct(lp, f, a), &paraproduct(lp, g, b));
    let fg = dealiased_product(f, g);
    let rhs = dealiased_product(&fg, &resonant(lp, a, b));
    lhs.sub(&rhs)
}

/// Para-swap defect `f Π_g h − Π_{fg} h`.
pub fn para_swap_defect(
    lp: &DyadicPartition,
    f: &RealField,
    g: &RealField,
    h: &RealField,
) -> RealField {
    let lhs = dealiased_product(f, &paraproduct(lp, g, h));
    let rhs = paraproduct(lp, &dealiased_product(f, g), h);
    lhs.sub(&rhs)
}

/// Intertwining defect `𝓛⁰(Π̄_{u'} X) − Π_{a(u₀^T)u'}(−ΔX)` with
/// `𝓛⁰ = ∂_t − a(u₀^T)Δ`; the time derivative uses second-order centered
/// differences, one-sided at the endpoints.
pub fn intertwine_defect(
    lp: &DyadicPartition,
    u_prime: &Trajectory,
    x: &RealField,
    a0t: &RealField,
) -> Result<Trajectory, ParaError> {
    if u_prime.len() < 3 {
        return Err(ParaError::TooFewSnapshots {
            need: 3,
            got: u_prime.len(),
        });
    }
    let dt = u_prime.dt();
    let modified = modified_paraproduct(lp, u_prime, x);
    let lap = Multiplier::laplacian(x.grid());
    let minus_lap_x = lap.apply(x).scale(-1.0);

    let len = modified.len();
    let ddt = |m: usize| -> RealField {
        let p = modified.fields();
        if m == 0 {
            p[0].scale(-3.0)
                .axpy(4.0, &p[1])
                .axpy(-1.0, &p[2])
                .scale(1.0 / (2.0 * dt))
        } else if m == len - 1 {
            p[len - 1]
                .scale(3.0)
                .axpy(-4.0, &p[len - 2])
                .axpy(1.0, &p[len - 3])
                .scale(1.0 / (2.0 * dt))
        } else {
            p[m + 1].sub(&p[m - 1]).scale(1.0 / (2.0 * dt))
        }
    };

    let mut out = Vec::with_capacity(len);
    for m in 0..len {
        let heat_part = dealiased_product(a0t, &lap.apply(modified.field(m)));
        let l0 = ddt(m).sub(&heat_part);
        let low = dealiased_product(a0t, u_prime.field(m));
        let para = paraproduct(lp, &low, &minus_lap_x);
        out.push(l0.sub(&para));
    }
    Trajectory::new(dt, out).map_err(|_| ParaError::TooFewSnapshots { need: 3, got: len })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use crate::noise::{sample_prescribed_regularity, sample_white_noise};

    fn setup(n: usize) -> (GridSpec, DyadicPartition) {
        let grid = GridSpec::new(n).unwrap();
        let lp = DyadicPartition::new(grid);
        (grid, lp)
    }

    #[test]
    fn paraproduct_with_constant_high_factor_vanishes() {
        let (grid, lp) = setup(64);
        let f = sample_white_noise(1, grid).into_xi();
        let g = RealField::constant(grid, 5.0);
        assert!(paraproduct(&lp, &f, &g).max_abs() < 1e-12 * f.max_abs());
    }

    #[test]
    fn paraproduct_of_separated_modes_is_the_product() {
        // f lives far below g's block, so Π_f g recovers the full product
        // on the retained modes.
        let (grid, lp) = setup(128);
        let f = RealField::from_fn(grid, |x, _| x.cos());
        let g = RealField::from_fn(grid, |x, _| (32.0 * x).cos());
        let para = paraproduct(&lp, &f, &g);
        let product = dealiased_product(&f, &g);
        assert!(para.max_abs_diff(&product) <= 1e-12 * product.max_abs());
    }

    #[test]
    fn bony_identity_reconstructs_the_product() {
        let (grid, lp) = setup(64);
        let f = sample_white_noise(2, grid).into_xi();
        let g = sample_white_noise(3, grid).into_xi();
        let d = bony(&lp, &f, &g);
        let sum = d.para_fg.axpy(1.0, &d.para_gf).axpy(1.0, &d.resonant);
        let product = dealiased_product(&f, &g);
        let err = sum.max_abs_diff(&product);
        assert!(err <= 1e-12 * product.max_abs(), "bony defect {err:.3e}");
    }

    #[test]
    fn resonant_with_constant_factor_completes_reconstruction() {
        let (grid, lp) = setup(64);
        let f = RealField::constant(grid, 2.0);
        let g = sample_white_noise(4, grid).into_xi();
        let d = bony(&lp, &f, &g);
        let sum = d.para_fg.axpy(1.0, &d.para_gf).axpy(1.0, &d.resonant);
        let product = dealiased_product(&f, &g);
        assert!(sum.max_abs_diff(&product) <= 1e-12 * product.max_abs());
    }

    #[test]
    fn resonant_of_separated_blocks_vanishes() {
        let (grid, lp) = setup(128);
        let f = RealField::from_fn(grid, |x, _| x.cos());
        let g = RealField::from_fn(grid, |x, _| (32.0 * x).cos());
        assert!(resonant(&lp, &f, &g).max_abs() < 1e-12);
    }

    #[test]
    fn modified_paraproduct_of_time_constant_equals_plain() {
        let (grid, lp) = setup(64);
        let f = sample_prescribed_regularity(5, grid, 0.8);
        let g = sample_white_noise(6, grid).into_xi();
        let traj = Trajectory::constant(f.clone(), 0.01, 6);
        let modified = modified_paraproduct(&lp, &traj, &g);
        let plain = paraproduct(&lp, &f, &g);
        for m in 0..modified.len() {
            let err = modified.field(m).max_abs_diff(&plain);
            assert!(
                err <= 1e-12 * plain.max_abs().max(1e-300),
                "snapshot {m}: {err:.3e}"
            );
        }
    }

    #[test]
    fn modified_paraproduct_with_constant_high_factor_vanishes() {
        let (grid, lp) = setup(64);
        let f = sample_prescribed_regularity(7, grid, 0.8);
        let g = RealField::constant(grid, 1.0);
        let traj = Trajectory::constant(f, 0.01, 4);
        let modified = modified_paraproduct(&lp, &traj, &g);
        for m in 0..modified.len() {
            assert!(modified.field(m).max_abs() < 1e-12);
        }
    }

    #[test]
    fn modified_paraproduct_linear_ramp_matches_quadrature() {
        // f(t) = t·1; for a single-block g the output at time t is
        // (∫ φ(r) max(t − 2^{−2j} r, 0) dr) · Δ_j g.
        let (grid, lp) = setup(64);
        let g = RealField::from_fn(grid, |x, _| (6.0 * x).cos());
        let active: Vec<i32> = (-1..=lp.jmax())
            .filter(|&j| lp.block(j, &g).unwrap().max_abs() > 1e-12)
            .collect();
        assert_eq!(active.len(), 1);
        let j = active[0];
        assert!(j >= 1, "need the block inside the paraproduct range");

        let steps = 32;
        let t_final = 0.2;
        let dt = t_final / steps as f64;
        let fields = (0..=steps)
            .map(|m| RealField::constant(grid, m as f64 * dt))
            .collect();
        let ramp = Trajectory::new(dt, fields).unwrap();
        let modified = modified_paraproduct(&lp, &ramp, &g);

        let lambda = 0.25f64.powi(j);
        let block_g = lp.block(j, &g).unwrap();
        for m_t in [steps / 2, steps] {
            let t = dt * m_t as f64;
            // dense trapezoid oracle for ∫ φ(r) max(t − λ r, 0) dr
            let nr = 200_000;
            let mut oracle = 0.0;
            for i in 0..=nr {
                let r = i as f64 / nr as f64;
                let w = if i == 0 || i == nr { 0.5 } else { 1.0 };
                oracle += w * time_kernel(r) * (t - lambda * r).max(0.0);
            }
            oracle /= nr as f64;
            let expected = block_g.scale(oracle);
            let err = modified.field(m_t).max_abs_diff(&expected);
            assert!(
                err <= 1e-4 * expected.max_abs().max(1e-12),
                "t={t}: {err:.3e}"
            );
        }
    }

    #[test]
    fn modified_vs_plain_gap_is_stable_under_time_refinement() {
        // For a Lipschitz-in-time low factor the gap Π̄_f g − Π_{f(t)} g at a
        // fixed time, measured in the C^{α+β−2} norm, stays bounded as the
        // snapshot grid refines.
        let (grid, lp) = setup(64);
        let w = sample_prescribed_regularity(40, grid, 0.7);
        let g = sample_white_noise(41, grid).into_xi();
        let t_final = 0.04;
        let gap_at = |steps: usize| {
            let dt = t_final / steps as f64;
            let fields = (0..=steps).map(|m| w.scale(1.0 + m as f64 * dt)).collect();
            let traj = Trajectory::new(dt, fields).unwrap();
            let modified = modified_paraproduct(&lp, &traj, &g);
            let mid = modified.len() / 2;
            let plain = paraproduct(&lp, traj.field(mid), &g);
            lp.holder_norm(&modified.field(mid).sub(&plain), 0.8 + 0.7 - 2.0)
        };
        let coarse = gap_at(8);
        let fine = gap_at(32);
        assert!(coarse.is_finite() && fine.is_finite());
        assert!(
            fine <= 1.2 * coarse + 1e-12,
            "gap should stay bounded under refinement: {coarse:.3e} -> {fine:.3e}"
        );
    }

    #[test]
    fn corrector_of_constant_low_factor_matches_definitional_oracle() {
        let (grid, lp) = setup(64);
        let c = 1.6;
        let a = RealField::constant(grid, c);
        let b = sample_prescribed_regularity(8, grid, 0.7);
        let xi = sample_prescribed_regularity(9, grid, -1.1);
        let got = corrector(&lp, &a, &b, &xi);
        // literal recomputation from the definition
        let expected = resonant(&lp, &paraproduct(&lp, &a, &b), &xi)
            .sub(&resonant(&lp, &b, &xi).scale(c));
        assert!(got.max_abs_diff(&expected) <= 1e-11 * expected.max_abs().max(1e-300));
    }

    #[test]
    fn corrector_with_zero_middle_argument_vanishes() {
        let (grid, lp) = setup(64);
        let a = sample_prescribed_regularity(10, grid, 0.7);
        let xi = sample_prescribed_regularity(11, grid, -1.1);
        let z = RealField::zeros(grid);
        assert_eq!(corrector(&lp, &a, &z, &xi).max_abs(), 0.0);
    }

    #[test]
    fn commutator_with_zero_argument_vanishes() {
        let (grid, lp) = setup(64);
        let f = sample_prescribed_regularity(12, grid, 0.7);
        let g = sample_prescribed_regularity(13, grid, 0.7);
        let b = sample_prescribed_regularity(14, grid, -1.2);
        let z = RealField::zeros(grid);
        assert_eq!(commutator_para_para(&lp, &f, &g, &z, &b).max_abs(), 0.0);
    }

    #[test]
    fn commutator_of_unit_low_factors_matches_definitional_oracle() {
        let (grid, lp) = setup(64);
        let one = RealField::constant(grid, 1.0);
        let a = sample_prescribed_regularity(15, grid, 0.8);
        let b = sample_prescribed_regularity(16, grid, -1.2);
        let got = commutator_para_para(&lp, &one, &one, &a, &b);
        let expected = resonant(&lp, &paraproduct(&lp, &one, &a), &paraproduct(&lp, &one, &b))
            .sub(&resonant(&lp, &a, &b));
        assert!(got.max_abs_diff(&expected) <= 1e-11 * expected.max_abs().max(1e-300));
    }

    #[test]
    fn para_swap_with_unit_f_vanishes() {
        let (grid, lp) = setup(64);
        let one = RealField::constant(grid, 1.0);
        let g = sample_prescribed_regularity(17, grid, 0.7);
        let h = sample_prescribed_regularity(18, grid, -1.2);
        let defect = para_swap_defect(&lp, &one, &g, &h);
        assert!(defect.max_abs() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn para_swap_with_zero_high_factor_vanishes() {
        let (grid, lp) = setup(64);
        let f = sample_prescribed_regularity(19, grid, 1.4);
        let g = sample_prescribed_regularity(20, grid, 0.7);
        let z = RealField::zeros(grid);
        assert_eq!(para_swap_defect(&lp, &f, &g, &z).max_abs(), 0.0);
    }

    #[test]
    fn intertwine_defect_of_zero_inputs_vanishes() {
        let (grid, lp) = setup(64);
        let x = sample_white_noise(21, grid).into_xi();
        let a0t = RealField::constant(grid, 2.0);
        let zeros = Trajectory::constant(RealField::zeros(grid), 0.01, 4);
        let d = intertwine_defect(&lp, &zeros, &x, &a0t).unwrap();
        for m in 0..d.len() {
            assert!(d.field(m).max_abs() < 1e-12);
        }
        let w = Trajectory::constant(RealField::constant(grid, 1.0), 0.01, 4);
        let d2 = intertwine_defect(&lp, &w, &RealField::zeros(grid), &a0t).unwrap();
        for m in 0..d2.len() {
            assert!(d2.field(m).max_abs() < 1e-12);
        }
    }

    #[test]
    fn intertwine_defect_needs_three_snapshots() {
        let (grid, lp) = setup(64);
        let x = RealField::zeros(grid);
        let a0t = RealField::constant(grid, 1.0);
        let two = Trajectory::new(0.01, vec![RealField::zeros(grid); 2]).unwrap();
        assert!(matches!(
            intertwine_defect(&lp, &two, &x, &a0t),
            Err(ParaError::TooFewSnapshots { .. })
        ));
    }
}
