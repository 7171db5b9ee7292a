//! The scaling symmetry of the flow and its norm bookkeeping.
//!
//! If `u` solves the equation on the domain with transverse period parameter
//! `λ₀`, then
//! `u_λ(x,y,t) = λ^{−2α/(α+2)} u(λ^{−2/(α+2)}x, λ^{−1}y, λ^{−2(α+1)/(α+2)}t)`
//! solves it on the domain with parameter `λ₀λ`.  On the dual lattice the map
//! is index-preserving: mode `m` keeps its index while the lattice spacing
//! shrinks, and every coefficient picks up the single factor `λ^{6/(α+2)}`
//! (amplitude times volume).  For dyadic `λ` this makes rescaling an exact
//! bijection with no interpolation error, which is what lets the
//! flow-commutation check isolate genuine integrator discrepancies.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::evolve::{simulate, DtPolicy, SolverConfig};
use crate::field::{is_dyadic, SpectralField};
use crate::scalar::Real;

/// Growth rate of the homogeneous anisotropic norm under rescaling:
/// `‖φ_λ‖/‖φ‖ = λ^{(3−α)/(α+2) − 2s1/(α+2) − s2}`.
///
/// Zero exponent marks the critical space; for `α=2, s2=0` that is
/// `s1 = 1/2`.
pub fn scaling_exponent<R: Real>(alpha: R, s1: R, s2: R) -> R {
    let denom = alpha + R::cst(2.0);
    (R::cst(3.0) - alpha) / denom - R::cst(2.0) * s1 / denom - s2
}

/// Time-dilation factor `λ^{2(α+1)/(α+2)}` between the original and the
/// rescaled flow.
pub fn time_dilation<R: Real>(alpha: R, lambda_f: R) -> R {
    lambda_f.powr(R::cst(2.0) * (alpha + R::one()) / (alpha + R::cst(2.0)))
}

/// Per-coefficient factor `λ^{6/(α+2)}` of the index-preserving rescaling.
fn coefficient_factor<R: Real>(alpha: R, lambda_f: R) -> R {
    lambda_f.powr(R::cst(6.0) / (alpha + R::cst(2.0)))
}

/// Rescale a field onto the domain with transverse parameter `λ₀·λ`.
///
/// Exact in Fourier space: coefficients keep their lattice indices and are
/// multiplied by `λ^{6/(α+2)}`; physical samples at corresponding grid points
/// are the original ones times `λ^{−2α/(α+2)}`.  `λ` must be dyadic (powers
/// of two in either direction) and the target domain must be valid.
pub fn rescale_field<R: Real>(phi: &SpectralField<R>, lambda_f: f64) -> Result<SpectralField<R>> {
    if !is_dyadic(lambda_f) {
        return Err(Error::InvalidConfig(format!(
            "rescaling factor must be dyadic, got {lambda_f}"
        )));
    }
    let grid = phi.grid();
    let spec0 = grid.spec();
    if lambda_f == 1.0 {
        return Ok(phi.clone());
    }
    let lf = R::cst(lambda_f);
    let target = DomainSpec::new(
        spec0.lambda * lf,
        spec0.alpha,
        spec0.nx,
        spec0.ny1,
        spec0.ny2,
    )?;
    let target_grid = crate::domain::Grid::new(target)?;
    let factor = coefficient_factor(grid.alpha(), lf);
    let coeffs = phi.coeffs().mapv(|c| c * factor);
    SpectralField::from_coeffs(&target_grid, coeffs)
}

/// Integrate `φ` to `t_end`, rescale the result, and compare with the
/// integration of the rescaled data over the dilated time `λ^{2(α+1)/(α+2)}
/// t_end` with the dilated step size (same step count).  Returns the relative
/// `L²` discrepancy between the two final states.
///
/// Requires a fixed-step policy and no Galerkin window: the two-thirds band
/// is index-based and commutes with the rescaling, whereas a radial frequency
/// window does not, and a frequency-scaled step policy would not keep the
/// step counts matched.
pub fn verify_flow_scaling<R: Real>(
    phi: &SpectralField<R>,
    lambda_f: f64,
    alpha: R,
    t_end: R,
    cfg: &SolverConfig<R>,
) -> Result<R> {
    if cfg.alpha != alpha {
        return Err(Error::InvalidConfig(format!(
            "flow-scaling check called with α = {alpha} but solver α = {}",
            cfg.alpha
        )));
    }
    if cfg.galerkin_m.is_some() {
        return Err(Error::InvalidConfig(
            "flow-scaling check needs the index-based truncation only; drop the Galerkin window"
                .into(),
        ));
    }
    let dt = match cfg.dt_policy {
        DtPolicy::Fixed { dt } => dt,
        DtPolicy::FreqScaled { .. } => {
            return Err(Error::InvalidConfig(
                "flow-scaling check needs a fixed step size to match step counts".into(),
            ))
        }
    };

    let mut base_cfg = cfg.clone();
    base_cfg.t_end = t_end;
    let (u_final, _) = simulate(phi, &base_cfg)?;
    let expected = rescale_field(&u_final, lambda_f)?;

    let tau = time_dilation(alpha, R::cst(lambda_f));
    let phi_scaled = rescale_field(phi, lambda_f)?;
    let mut scaled_cfg = cfg.clone();
    scaled_cfg.t_end = tau * t_end;
    scaled_cfg.dt_policy = DtPolicy::Fixed { dt: tau * dt };
    let (v_final, _) = simulate(&phi_scaled, &scaled_cfg)?;

    Ok(SpectralField::relative_l2_distance(&v_final, &expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use crate::field::random_band_field;
    use crate::norms::{norm, NormSpec};
    use approx::assert_relative_eq;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn grid(lambda: f64, alpha: f64, n: usize) -> Arc<Grid<f64>> {
        Grid::new(DomainSpec::<f64>::new(lambda, alpha, n, n, n).unwrap()).unwrap()
    }

    fn unit_pair(grid: &Arc<Grid<f64>>, mode: (i64, i64, i64)) -> SpectralField<f64> {
        let mut f = SpectralField::zeros(grid);
        let two_pi_cubed = (2.0 * std::f64::consts::PI).powi(3);
        let v = (two_pi_cubed / (2.0 * grid.dual_weight())).sqrt();
        f.set_mode_pair(mode, Complex::new(v, 0.0)).unwrap();
        f
    }

    #[test]
    fn exponent_examples() {
        assert_relative_eq!(scaling_exponent(2.0, 0.0, 0.0), 0.25);
        assert_relative_eq!(scaling_exponent(4.0, 0.0, 0.0), -1.0 / 6.0);
        assert_relative_eq!(scaling_exponent(2.0, 0.5, 0.0), 0.0);
        assert_relative_eq!(time_dilation(2.0, 2.0), 2.0_f64.powf(1.5));
    }

    #[test]
    fn identity_rescaling() {
        let g = grid(1.0, 2.0, 16);
        let f = random_band_field(&g, 2.0, 2.0, 9).unwrap();
        let r = rescale_field(&f, 1.0).unwrap();
        assert_eq!(f.coeffs(), r.coeffs());
        assert_eq!(g.spec(), r.grid().spec());
    }

    #[test]
    fn single_mode_relabeling() {
        // α = 2, λ = 4: the mode at (ξ, η) = (2, (4,0)) lands at (1, (1,0))
        // with coefficient factor 4^{3/2} = 8; physical samples shrink by
        // the amplitude factor 4^{−1} at corresponding grid points.
        let g = grid(1.0, 2.0, 16);
        let f = unit_pair(&g, (2, 4, 0));
        let r = rescale_field(&f, 4.0).unwrap();
        let tg = r.grid();
        assert_relative_eq!(tg.lambda(), 4.0);
        assert_relative_eq!(tg.nu(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(tg.xi(2), 1.0, max_relative = 1e-14);
        assert_relative_eq!(tg.eta1(4), 1.0, max_relative = 1e-14);
        let ratio = r.coeffs()[(2, 4, 0)].re / f.coeffs()[(2, 4, 0)].re;
        assert_relative_eq!(ratio, 8.0, max_relative = 1e-12);

        let phys0 = f.to_physical();
        let phys1 = r.to_physical();
        let mut max_diff: f64 = 0.0;
        for (a, b) in phys0.iter().zip(phys1.iter()) {
            max_diff = max_diff.max((0.25 * a - b).abs());
        }
        assert!(max_diff < 1e-12 * f.linf_physical());
    }

    #[test]
    fn homogeneous_norm_ratio_matches_exponent() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(77);
        for &alpha in &[2.0, 2.5, 4.0] {
            let g = grid(1.0, alpha, 16);
            for &lf in &[2.0, 4.0] {
                for _ in 0..20 {
                    let mode = (
                        rng.random_range(1..=5),
                        rng.random_range(-5..=5),
                        rng.random_range(-5..=5),
                    );
                    let (s1, s2) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
                    let f = unit_pair(&g, mode);
                    let r = rescale_field(&f, lf).unwrap();
                    let spec = NormSpec::SobolevHomogeneous { s1, s2 };
                    let n0 = norm(&f, &spec).unwrap();
                    let n1 = norm(&r, &spec).unwrap();
                    if n0 == 0.0 {
                        continue;
                    }
                    let expected = lf.powf(scaling_exponent(alpha, s1, s2));
                    assert_relative_eq!(n1 / n0, expected, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn l2_ratio_exact_for_any_field() {
        let g = grid(2.0, 3.0, 16);
        let f = random_band_field(&g, 2.0, 2.0, 41).unwrap();
        let r = rescale_field(&f, 2.0).unwrap();
        let expected = 2.0_f64.powf(scaling_exponent(3.0, 0.0, 0.0));
        assert_relative_eq!(r.l2_norm() / f.l2_norm(), expected, max_relative = 1e-12);
    }

    #[test]
    fn down_scaling_round_trips() {
        let g = grid(4.0, 2.0, 16);
        let f = random_band_field(&g, 2.0, 2.0, 12).unwrap();
        let down = rescale_field(&f, 0.5).unwrap();
        assert_relative_eq!(down.grid().lambda(), 2.0);
        let back = rescale_field(&down, 2.0).unwrap();
        assert_eq!(back.grid().spec(), g.spec());
        assert!(SpectralField::relative_l2_distance(&back, &f) < 1e-14);
    }

    #[test]
    fn rejections() {
        let g = grid(1.0, 2.0, 16);
        let f = random_band_field(&g, 2.0, 2.0, 1).unwrap();
        assert!(rescale_field(&f, 3.0).is_err());
        assert!(rescale_field(&f, 0.5).is_err()); // target λ = 1/2 < 1
        assert!(rescale_field(&f, -2.0).is_err());
    }

    fn base_cfg(alpha: f64, dt: f64) -> SolverConfig<f64> {
        SolverConfig {
            alpha,
            galerkin_m: None,
            dt_policy: DtPolicy::Fixed { dt },
            t_end: 0.0,
            diag_every: 1000,
            es_exponents: vec![],
            linear_only: false,
            blowup_factor: 1e6,
        }
    }

    #[test]
    fn flow_scaling_identity_factor() {
        let g = grid(1.0, 2.0, 16);
        let mut f = random_band_field(&g, 2.0, 2.0, 5).unwrap();
        f.scale(1e-2);
        let err = verify_flow_scaling(&f, 1.0, 2.0, 0.02, &base_cfg(2.0, 1e-3)).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn flow_scaling_linear_only() {
        let g = grid(1.0, 2.5, 16);
        let f = random_band_field(&g, 2.0, 2.0, 19).unwrap();
        let mut cfg = base_cfg(2.5, 2e-3);
        cfg.linear_only = true;
        let err = verify_flow_scaling(&f, 2.0, 2.5, 0.05, &cfg).unwrap();
        assert!(err < 1e-11, "linear flow-scaling discrepancy {err:.3e}");
    }

    #[test]
    fn flow_scaling_nonlinear_small_data() {
        let g = grid(1.0, 2.0, 16);
        let mut f = random_band_field(&g, 2.0, 2.0, 23).unwrap();
        f.scale(1e-2);
        let err = verify_flow_scaling(&f, 2.0, 2.0, 0.05, &base_cfg(2.0, 1e-3)).unwrap();
        assert!(err < 1e-6, "nonlinear flow-scaling discrepancy {err:.3e}");
    }

    #[test]
    fn flow_scaling_config_rejections() {
        let g = grid(1.0, 2.0, 16);
        let f = random_band_field(&g, 2.0, 2.0, 2).unwrap();
        let mut cfg = base_cfg(2.0, 1e-3);
        cfg.galerkin_m = Some(4.0);
        assert!(verify_flow_scaling(&f, 2.0, 2.0, 0.01, &cfg).is_err());
        let mut cfg = base_cfg(2.0, 1e-3);
        cfg.dt_policy = DtPolicy::FreqScaled { c: 0.1 };
        assert!(verify_flow_scaling(&f, 2.0, 2.0, 0.01, &cfg).is_err());
        let cfg = base_cfg(2.5, 1e-3);
        assert!(verify_flow_scaling(&f, 2.0, 2.0, 0.01, &cfg).is_err());
    }
}
