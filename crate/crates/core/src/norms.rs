//! Weighted Fourier-side norms, the conserved energy, and frequency envelopes.
//!
//! All norms are weighted `L²` sums over the dual lattice under the normalized
//! counting measure, scaled by `(2π)^{−3/2}` so that the plain `L²` case agrees
//! with the physical-space norm (Plancherel).  The anisotropic scale
//! `⟨ξ⟩^{s1}⟨η⟩^{s2}` and its homogeneous counterpart treat longitudinal and
//! transverse frequencies separately; the slope-weighted scale multiplies
//! `⟨ξ⟩^s` by `λ^{−1/2} + |η|/|ξ|`, which penalises energy travelling at a
//! steep transverse angle and therefore requires mean-zero fields.
//!
//! The energy functional pairs the spectral evaluation of its two quadratic
//! terms with a physical-space quadrature of `∫u³/3` on the dealiased grid;
//! for fields inside the two-thirds band the cubic quadrature is exact because
//! the integrand stays below the grid's Nyquist range.

use crate::bands::{band_project, inhomogeneous_levels, BandMask};
use crate::dispersion::DispersionParams;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::scalar::Real;

/// Relative tolerance (against the largest coefficient) below which the
/// zero-longitudinal-frequency plane is considered empty.
const MEAN_ZERO_REL_TOL: f64 = 1e-10;

/// Transverse-slope weight `λ^{−1/2} + |η|/|ξ|`.
///
/// At `λ = 1` the constant term is 1, recovering the unscaled weight
/// `1 + |η|/|ξ|`; larger `λ` shrinks it to `λ^{−1/2}`.
pub fn weight_p<R: Real>(lambda: R, xi: R, eta: (R, R)) -> Result<R> {
    if !(lambda >= R::one()) {
        return Err(Error::InvalidConfig(format!(
            "weight needs λ ≥ 1, got {lambda}"
        )));
    }
    if xi == R::zero() {
        return Err(Error::InvalidConfig(
            "slope weight is undefined at ξ = 0".into(),
        ));
    }
    let abs_eta = (eta.0 * eta.0 + eta.1 * eta.1).sqrt();
    Ok(lambda.powr(-R::cst(0.5)) + abs_eta / xi.abs())
}

/// Which weighted norm to evaluate.
///
/// Serialized with a `kind` tag so norm requests can live in config files,
/// e.g. `{ kind = "es", s = 0.5, lambda = 1.0 }`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec<R: Real> {
    /// Plain `L²`; equals the physical-space root-mean-square times volume.
    L2,
    /// `⟨ξ⟩^s (λ^{−1/2} + |η|/|ξ|)`-weighted norm.  Named after the `es`
    /// block of the diagnostics output.  Requires a mean-zero field.
    Es { s: R, lambda: R },
    /// Anisotropic Sobolev weight `⟨ξ⟩^{s1} ⟨η⟩^{s2}`.
    Sobolev { s1: R, s2: R },
    /// Homogeneous anisotropic weight `|ξ|^{s1} |η|^{s2}` (with `0⁰ = 1`).
    SobolevHomogeneous { s1: R, s2: R },
}

impl<R: Real> NormSpec<R> {
    /// Check exponent finiteness/sign and the λ range.
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: R| -> Result<()> {
            if !v.is_finite() || v < R::zero() {
                return Err(Error::InvalidConfig(format!(
                    "norm exponent {name} must be finite and ≥ 0, got {v}"
                )));
            }
            Ok(())
        };
        match *self {
            NormSpec::L2 => Ok(()),
            NormSpec::Es { s, lambda } => {
                check("s", s)?;
                if !(lambda.is_finite() && lambda >= R::one()) {
                    return Err(Error::InvalidConfig(format!(
                        "norm weight needs λ ≥ 1, got {lambda}"
                    )));
                }
                Ok(())
            }
            NormSpec::Sobolev { s1, s2 } | NormSpec::SobolevHomogeneous { s1, s2 } => {
                check("s1", s1)?;
                check("s2", s2)
            }
        }
    }

    /// Whether this norm's weight needs `ξ ≠ 0` (and hence a mean-zero field).
    fn needs_mean_zero(&self) -> bool {
        matches!(self, NormSpec::Es { .. })
    }

    /// Weight at one dual-lattice point.  For the slope-weighted kind the
    /// caller must skip the `ξ = 0` plane.
    fn weight(&self, xi: R, eta: (R, R)) -> R {
        let half = R::cst(0.5);
        let eta_sq = eta.0 * eta.0 + eta.1 * eta.1;
        match *self {
            NormSpec::L2 => R::one(),
            NormSpec::Es { s, lambda } => {
                let bracket = (R::one() + xi * xi).sqrt();
                bracket.powr(s) * (lambda.powr(-half) + eta_sq.sqrt() / xi.abs())
            }
            NormSpec::Sobolev { s1, s2 } => {
                (R::one() + xi * xi).sqrt().powr(s1) * (R::one() + eta_sq).sqrt().powr(s2)
            }
            NormSpec::SobolevHomogeneous { s1, s2 } => {
                xi.abs().powr(s1) * eta_sq.sqrt().powr(s2)
            }
        }
    }
}

fn ensure_mean_zero<R: Real>(f: &SpectralField<R>, what: &str) -> Result<()> {
    let tol = R::cst(MEAN_ZERO_REL_TOL) * R::one().max(f.max_coeff_modulus());
    if f.mean_zero_defect() > tol {
        return Err(Error::InvalidConfig(format!(
            "{what} needs a mean-zero field (zero ξ=0 plane); call project_mean_zero first"
        )));
    }
    Ok(())
}

/// Evaluate a weighted dual-lattice norm of `f`.
///
/// The sum runs in a fixed (memory) order so results are reproducible
/// bit-for-bit.  `Sobolev { 0, 0 }` agrees with [`SpectralField::l2_norm`].
pub fn norm<R: Real>(f: &SpectralField<R>, spec: &NormSpec<R>) -> Result<R> {
    spec.validate()?;
    if spec.needs_mean_zero() {
        ensure_mean_zero(f, "slope-weighted norm")?;
    }
    let grid = f.grid();
    let skip_zero_plane = spec.needs_mean_zero();
    let mut total = R::zero();
    for ((i, j, k), c) in f.coeffs().indexed_iter() {
        if skip_zero_plane && i == 0 {
            continue;
        }
        let (xi, eta) = grid.freq((i, j, k));
        let w = spec.weight(xi, eta);
        total += w * w * c.norm_sqr();
    }
    let two_pi_cubed = R::cst(2.0 * std::f64::consts::PI).powi(3);
    Ok((total * grid.dual_weight() / two_pi_cubed).sqrt())
}

/// Conserved energy `∫ ½|D_x^{α/2}u|² + ⅓u³ + ½|∂_x^{−1}∇_y u|²`.
///
/// The quadratic terms are evaluated spectrally with weights `|ξ|^α` and
/// `|η|²/ξ²`; the cubic term is a physical-space quadrature of the dealiased
/// field, which is exact whenever `u` lies in the two-thirds band.
pub fn energy<R: Real>(f: &SpectralField<R>, alpha: R) -> Result<R> {
    DispersionParams::new(alpha)?;
    ensure_mean_zero(f, "energy")?;
    let grid = f.grid();

    let mut quad = R::zero();
    for ((i, j, k), c) in f.coeffs().indexed_iter() {
        if i == 0 {
            continue;
        }
        let (xi, (eta1, eta2)) = grid.freq((i, j, k));
        let symbol = xi.abs().powr(alpha) + (eta1 * eta1 + eta2 * eta2) / (xi * xi);
        quad += symbol * c.norm_sqr();
    }
    let two_pi_cubed = R::cst(2.0 * std::f64::consts::PI).powi(3);
    let quadratic = R::cst(0.5) * quad * grid.dual_weight() / two_pi_cubed;

    let mut truncated = f.clone();
    truncated.apply_real_mask(grid.dealias_mask());
    let u = truncated.to_physical();
    let mut cubic_sum = R::zero();
    for &v in u.iter() {
        cubic_sum += v * v * v;
    }
    let cubic = cubic_sum * grid.cell_volume() / R::cst(3.0);

    Ok(quadratic + cubic)
}

/// Slowly varying dyadic envelope dominating the per-band slope-weighted
/// norms: `c_N = sup_J [N/J]^{−δ} ‖P_J f‖`, where `[r]` is `max(r, 1/r)` and
/// `P_J` is the inhomogeneous longitudinal band projection.
///
/// Returns `(N, c_N)` pairs over the grid's dyadic levels.  By construction
/// `c_N ≥ ‖P_N f‖` and `c_N / c_J ≤ [N/J]^δ` for every pair of levels.
pub fn frequency_envelope<R: Real>(
    f: &SpectralField<R>,
    s: R,
    delta: R,
) -> Result<Vec<(f64, R)>> {
    if !(delta > R::zero() && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "envelope exponent must be positive and finite, got {delta}"
        )));
    }
    let grid = f.grid();
    let spec = NormSpec::Es {
        s,
        lambda: grid.lambda(),
    };
    let levels = inhomogeneous_levels(grid.as_ref());
    let mut band_norms = Vec::with_capacity(levels.len());
    for &lv in &levels {
        let piece = band_project(f, BandMask::XiInhomogeneous { n: lv })?;
        band_norms.push(norm(&piece, &spec)?);
    }
    let mut out = Vec::with_capacity(levels.len());
    for &n in &levels {
        let mut c = R::zero();
        for (&j, &bn) in levels.iter().zip(&band_norms) {
            let ratio = R::cst((n / j).max(j / n));
            c = c.max(ratio.powr(-delta) * bn);
        }
        out.push((n, c));
    }
    Ok(out)
}

/// Convenience: evaluate several named norms of one field in a fixed order.
pub fn norm_table<R: Real>(
    f: &SpectralField<R>,
    specs: &[(String, NormSpec<R>)],
) -> Result<Vec<(String, R)>> {
    specs
        .iter()
        .map(|(name, spec)| Ok((name.clone(), norm(f, spec)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{signed_mode, DomainSpec, Grid};
    use crate::field::random_band_field;
    use approx::assert_relative_eq;
    use ndarray::Array3;
    use num_complex::Complex;
    use std::sync::Arc;

    fn grid(lambda: f64, alpha: f64, n: usize) -> Arc<Grid<f64>> {
        Grid::new(DomainSpec::<f64>::new(lambda, alpha, n, n, n).unwrap()).unwrap()
    }

    /// Field with a single Hermitian mode pair, normalized to unit L².
    fn unit_pair(grid: &Arc<Grid<f64>>, mode: (i64, i64, i64)) -> SpectralField<f64> {
        let mut f = SpectralField::zeros(grid);
        let two_pi_cubed = (2.0 * std::f64::consts::PI).powi(3);
        let v = (two_pi_cubed / (2.0 * grid.dual_weight())).sqrt();
        f.set_mode_pair(mode, Complex::new(v, 0.0)).unwrap();
        assert_relative_eq!(f.l2_norm(), 1.0, max_relative = 1e-12);
        f
    }

    fn physical_from(
        grid: &Arc<Grid<f64>>,
        func: impl Fn(f64, f64, f64) -> f64,
    ) -> SpectralField<f64> {
        let (nx, ny1, ny2) = grid.shape();
        let mut samples = Array3::zeros((nx, ny1, ny2));
        for ((i, j, k), v) in samples.indexed_iter_mut() {
            *v = func(grid.x(i), grid.y1(j), grid.y2(k));
        }
        SpectralField::from_physical(grid, &samples).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight_p(1.0, 1.0, (0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(weight_p(4.0, 2.0, (2.0, 0.0)).unwrap(), 1.5);
        assert_eq!(weight_p(1.0, 1.0, (3.0, 4.0)).unwrap(), 6.0);
        assert!(weight_p(1.0, 0.0, (1.0, 0.0)).is_err());
        assert!(weight_p(0.5, 1.0, (1.0, 0.0)).is_err());
    }

    #[test]
    fn h00_matches_l2() {
        let g = grid(1.0, 2.0, 16);
        let f = random_band_field(&g, 2.0, 2.0, 7).unwrap();
        let h00 = norm(&f, &NormSpec::Sobolev { s1: 0.0, s2: 0.0 }).unwrap();
        let l2 = norm(&f, &NormSpec::L2).unwrap();
        assert_relative_eq!(h00, f.l2_norm(), max_relative = 1e-12);
        assert_relative_eq!(l2, f.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn single_mode_norms() {
        let g = grid(1.0, 2.0, 16);
        let f = unit_pair(&g, (2, 0, 0));
        let h10 = norm(&f, &NormSpec::Sobolev { s1: 1.0, s2: 0.0 }).unwrap();
        assert_relative_eq!(h10, 5.0_f64.sqrt(), max_relative = 1e-12);
        let e0 = norm(
            &f,
            &NormSpec::Es {
                s: 0.0,
                lambda: 1.0,
            },
        )
        .unwrap();
        assert_relative_eq!(e0, 1.0, max_relative = 1e-12);
        let h20 = norm(&f, &NormSpec::Sobolev { s1: 2.0, s2: 0.0 }).unwrap();
        assert_relative_eq!(h20, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn es_brute_force_oracle() {
        // Independent direct summation recomputing frequencies from raw
        // indices, on a grid with irrational dual spacing.
        let g = grid(2.0, 2.0, 16);
        let f = random_band_field(&g, 2.0, 2.0, 21).unwrap();
        let (s, lambda) = (0.75, 2.0);
        let got = norm(&f, &NormSpec::Es { s, lambda }).unwrap();

        let nu = 2.0_f64.powf(2.0 / 4.0);
        let (nx, ny1, ny2) = g.shape();
        let mut sum = 0.0;
        for i in 0..nx {
            if i == 0 {
                continue;
            }
            for j in 0..ny1 {
                for k in 0..ny2 {
                    let xi = signed_mode(i, nx) as f64 / nu;
                    let e1 = signed_mode(j, ny1) as f64 / lambda;
                    let e2 = signed_mode(k, ny2) as f64 / lambda;
                    let p = lambda.powf(-0.5) + (e1 * e1 + e2 * e2).sqrt() / xi.abs();
                    let w = (1.0 + xi * xi).sqrt().powf(s) * p;
                    sum += w * w * f.coeffs()[(i, j, k)].norm_sqr();
                }
            }
        }
        let expected =
            (sum / (nu * lambda * lambda) / (2.0 * std::f64::consts::PI).powi(3)).sqrt();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn energy_zero_and_cosine() {
        let g = grid(1.0, 2.0, 16);
        assert_eq!(energy(&SpectralField::zeros(&g), 2.0).unwrap(), 0.0);
        let pi = std::f64::consts::PI;
        for alpha in [2.0, 3.0, 4.0] {
            let f = physical_from(&g, |x, _, _| x.cos());
            let e = energy(&f, alpha).unwrap();
            assert_relative_eq!(e, 2.0 * pi.powi(3), max_relative = 1e-12);
        }
    }

    #[test]
    fn energy_closed_form_with_cubic_term() {
        // u = cos x + ε cos 2x:
        //   quadratic  2π³(1 + 2^α ε²), cubic  2π³ ε, transverse 0.
        let pi = std::f64::consts::PI;
        let g = grid(1.0, 2.0, 16);
        let eps = 0.3;
        for alpha in [2.0, 3.5] {
            let f = physical_from(&g, |x, _, _| x.cos() + eps * (2.0 * x).cos());
            let expected = 2.0 * pi.powi(3) * (1.0 + 2.0_f64.powf(alpha) * eps * eps)
                + 2.0 * pi.powi(3) * eps;
            assert_relative_eq!(energy(&f, alpha).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn energy_cross_mode_closed_form() {
        // u = cos x + ε cos(x + y₁): both modes sit at |ξ| = 1, the oblique
        // one adds an equal transverse contribution: 2π³(1 + 2ε²); cubic 0.
        let pi = std::f64::consts::PI;
        let g = grid(1.0, 2.5, 16);
        let eps = 0.25;
        let f = physical_from(&g, |x, y1, _| x.cos() + eps * (x + y1).cos());
        let expected = 2.0 * pi.powi(3) * (1.0 + 2.0 * eps * eps);
        assert_relative_eq!(energy(&f, 2.5).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn energy_agrees_across_grid_refinement() {
        // Embed a dealiased coarse field into a finer grid by signed mode;
        // both quadratures are exact for band-limited data and must agree.
        let coarse = grid(4.0, 2.0, 16);
        let fine = grid(4.0, 2.0, 32);
        let mut f = random_band_field(&coarse, 2.0, 2.0, 5).unwrap();
        f.apply_real_mask(coarse.dealias_mask());

        let mut embedded = SpectralField::zeros(&fine);
        let (nx, ny1, ny2) = coarse.shape();
        for i in 0..nx {
            for j in 0..ny1 {
                for k in 0..ny2 {
                    let c = f.coeffs()[(i, j, k)];
                    if c.norm_sqr() > 0.0 {
                        let m = (
                            signed_mode(i, nx),
                            signed_mode(j, ny1),
                            signed_mode(k, ny2),
                        );
                        embedded.set_mode(m, c).unwrap();
                    }
                }
            }
        }
        let e_coarse = energy(&f, 2.0).unwrap();
        let e_fine = energy(&embedded, 2.0).unwrap();
        assert_relative_eq!(e_coarse, e_fine, max_relative = 1e-10);
        assert_relative_eq!(f.l2_norm(), embedded.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn envelope_single_band() {
        // A mode at exactly ξ = 4 projects onto the J = 4 band only, so the
        // envelope is the pure power law [N/4]^{−δ}·‖f‖.
        let g = grid(1.0, 2.0, 32);
        let f = unit_pair(&g, (4, 1, 0));
        let (s, delta) = (0.5, 0.3);
        let base = norm(
            &f,
            &NormSpec::Es {
                s,
                lambda: 1.0,
            },
        )
        .unwrap();
        let env = frequency_envelope(&f, s, delta).unwrap();
        assert_eq!(
            env.iter().map(|&(n, _)| n).collect::<Vec<_>>(),
            vec![1.0, 2.0, 4.0, 8.0, 16.0]
        );
        for &(n, c) in &env {
            let ratio: f64 = (n / 4.0).max(4.0 / n);
            assert_relative_eq!(c, ratio.powf(-delta) * base, max_relative = 1e-12);
        }
    }

    #[test]
    fn envelope_properties_random_field() {
        let g = grid(1.0, 2.0, 32);
        let f = random_band_field(&g, 4.0, 2.0, 11).unwrap();
        let (s, delta) = (0.5, 0.4);
        let env = frequency_envelope(&f, s, delta).unwrap();
        let spec = NormSpec::Es { s, lambda: 1.0 };
        for &(n, c) in &env {
            let band = band_project(&f, BandMask::XiInhomogeneous { n }).unwrap();
            let bn = norm(&band, &spec).unwrap();
            assert!(c >= bn * (1.0 - 1e-12), "envelope fails to dominate at {n}");
        }
        for &(n, cn) in &env {
            for &(j, cj) in &env {
                let bound = ((n / j).max(j / n)).powf(delta);
                assert!(
                    cn <= cj * bound * (1.0 + 1e-12),
                    "envelope varies too fast between {n} and {j}"
                );
            }
        }
        // Large δ pins the envelope to its own band norm where mass lives.
        let env_stiff = frequency_envelope(&f, s, 40.0).unwrap();
        let peak = env_stiff
            .iter()
            .cloned()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let band = band_project(&f, BandMask::XiInhomogeneous { n: peak.0 }).unwrap();
        assert_relative_eq!(peak.1, norm(&band, &spec).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn slope_weighted_comparable_to_sobolev_pair() {
        // For single modes with |ξ| ≥ 1 the slope-weighted norm matches
        // ‖·‖_{s,0} + ‖·‖_{s−1,1} within a factor of 4.
        use rand::{Rng, SeedableRng};
        let g = grid(1.0, 2.0, 32);
        let s = 1.5;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let m = (
                rng.random_range(1..=15),
                rng.random_range(-15..=15),
                rng.random_range(-15..=15),
            );
            let f = unit_pair(&g, m);
            let es = norm(
                &f,
                &NormSpec::Es {
                    s,
                    lambda: 1.0,
                },
            )
            .unwrap();
            let hs0 = norm(&f, &NormSpec::Sobolev { s1: s, s2: 0.0 }).unwrap();
            let hs1 = norm(
                &f,
                &NormSpec::Sobolev {
                    s1: s - 1.0,
                    s2: 1.0,
                },
            )
            .unwrap();
            let ratio = es / (hs0 + hs1);
            assert!(
                (0.25..=4.0).contains(&ratio),
                "equivalence ratio {ratio} out of range at mode {m:?}"
            );
        }
    }

    #[test]
    fn norms_monotone_in_exponents() {
        let g = grid(1.0, 2.0, 16);
        let f = random_band_field(&g, 2.0, 2.0, 33).unwrap();
        let h = |s1, s2| norm(&f, &NormSpec::Sobolev { s1, s2 }).unwrap();
        assert!(h(1.0, 0.0) <= h(2.0, 0.0));
        assert!(h(0.5, 0.25) <= h(1.0, 1.0));
        let es = |s| {
            norm(
                &f,
                &NormSpec::Es {
                    s,
                    lambda: 1.0,
                },
            )
            .unwrap()
        };
        assert!(es(0.5) <= es(1.0));
    }

    #[test]
    fn rejects_invalid_inputs() {
        let g = grid(1.0, 2.0, 16);
        let mut f = SpectralField::zeros(&g);
        f.set_mode_pair((0, 1, 0), Complex::new(1.0, 0.0)).unwrap();
        assert!(norm(
            &f,
            &NormSpec::Es {
                s: 0.5,
                lambda: 1.0
            }
        )
        .is_err());
        assert!(energy(&f, 2.0).is_err());
        assert!(frequency_envelope(&f, 0.5, 0.3).is_err());

        let ok = unit_pair(&g, (1, 0, 0));
        assert!(norm(
            &ok,
            &NormSpec::Es {
                s: -1.0,
                lambda: 1.0
            }
        )
        .is_err());
        assert!(norm(
            &ok,
            &NormSpec::Es {
                s: 0.5,
                lambda: 0.5
            }
        )
        .is_err());
        assert!(norm(&ok, &NormSpec::Sobolev { s1: -0.5, s2: 0.0 }).is_err());
        assert!(frequency_envelope(&ok, 0.5, 0.0).is_err());
        assert!(energy(&ok, 1.5).is_err());
    }

    #[test]
    fn homogeneous_norm_single_mode() {
        let g = grid(1.0, 2.0, 16);
        let f = unit_pair(&g, (2, 3, 0));
        let hdot = norm(
            &f,
            &NormSpec::SobolevHomogeneous { s1: 1.0, s2: 1.0 },
        )
        .unwrap();
        assert_relative_eq!(hdot, 6.0, max_relative = 1e-12);
        // s2 = 0 keeps the η = 0 plane via the 0⁰ = 1 convention.
        let f0 = unit_pair(&g, (2, 0, 0));
        let h10 = norm(&f0, &NormSpec::SobolevHomogeneous { s1: 1.0, s2: 0.0 }).unwrap();
        assert_relative_eq!(h10, 2.0, max_relative = 1e-12);
    }
}
