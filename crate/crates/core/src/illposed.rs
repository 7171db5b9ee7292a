//! Norm-inflation laboratory for the second Picard iterate.
//!
//! The experiment places Fourier-side indicator data on two frequency boxes —
//! a low box near `ξ ∼ β` and a high box near `ξ ∼ N` whose transverse centre
//! `√(α+1)N²` is tuned so that low–high interactions are near-resonant — and
//! measures the High×Low part `f₃` of the second Picard iterate against the
//! inflation scale `N·|D₁|^{1/2}`.
//!
//! Genuine configurations cannot be represented on a dense grid: resolving
//! the high box needs a transverse spacing `≤ β²` *and* an extent `≳ N²`,
//! i.e. millions of modes per axis.  The boxes are therefore kept analytic:
//! `f₃` is evaluated by nested Gauss–Legendre quadrature of the exact pair
//! integral (outer cells split at the kink positions of the box-overlap
//! geometry, inner rule over the exact box intersection).  A lattice-exact
//! pair sum over the same boxes provides a refinement path towards the
//! continuum value, and on small artificial boxes it is cross-checked against
//! the full time-quadrature evolver via bilinear polarization.
//!
//! Norms in this module are Fourier-side (`‖f‖² = ∫ weight²·|f̂|² dk`, no
//! `(2π)^{−3/2}`), matching the normalization in which the data has norm ∼ 1.

use num_complex::Complex;
use rayon::prelude::*;

use crate::dispersion::{resonance_direct, DispersionParams};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{is_dyadic, SpectralField};
use crate::norms::{norm, NormSpec};

/// Axis-aligned frequency box `[ξ]×[η₁]×[η₂]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FreqBox {
    pub xi: (f64, f64),
    pub eta1: (f64, f64),
    pub eta2: (f64, f64),
}

impl FreqBox {
    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.xi, self.eta1, self.eta2] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "degenerate frequency box edge [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        (self.xi.1 - self.xi.0) * (self.eta1.1 - self.eta1.0) * (self.eta2.1 - self.eta2.0)
    }

    pub fn contains(&self, xi: f64, eta1: f64, eta2: f64) -> bool {
        self.xi.0 <= xi
            && xi <= self.xi.1
            && self.eta1.0 <= eta1
            && eta1 <= self.eta1.1
            && self.eta2.0 <= eta2
            && eta2 <= self.eta2.1
    }

    /// The point-reflected box `−B`.
    pub fn mirrored(&self) -> FreqBox {
        let flip = |(lo, hi): (f64, f64)| (-hi, -lo);
        FreqBox {
            xi: flip(self.xi),
            eta1: flip(self.eta1),
            eta2: flip(self.eta2),
        }
    }

    pub fn intersect(&self, other: &FreqBox) -> Option<FreqBox> {
        let cut = |a: (f64, f64), b: (f64, f64)| {
            let lo = a.0.max(b.0);
            let hi = a.1.min(b.1);
            (hi > lo).then_some((lo, hi))
        };
        Some(FreqBox {
            xi: cut(self.xi, other.xi)?,
            eta1: cut(self.eta1, other.eta1)?,
            eta2: cut(self.eta2, other.eta2)?,
        })
    }

    /// The box `k − B` of partners completing a pair to total frequency `k`.
    pub fn complement_to(&self, k: (f64, f64, f64)) -> FreqBox {
        FreqBox {
            xi: (k.0 - self.xi.1, k.0 - self.xi.0),
            eta1: (k.1 - self.eta1.1, k.1 - self.eta1.0),
            eta2: (k.2 - self.eta2.1, k.2 - self.eta2.0),
        }
    }

    /// Integer mode ranges of the dual-lattice points inside the box, for
    /// spacings `1/ν` (ξ) and `1/λ` (both η axes).
    pub fn mode_ranges(
        &self,
        nu: f64,
        lambda: f64,
    ) -> (
        std::ops::RangeInclusive<i64>,
        std::ops::RangeInclusive<i64>,
        std::ops::RangeInclusive<i64>,
    ) {
        let range = |(lo, hi): (f64, f64), scale: f64| {
            ((lo * scale).ceil() as i64)..=((hi * scale).floor() as i64)
        };
        (
            range(self.xi, nu),
            range(self.eta1, lambda),
            range(self.eta2, lambda),
        )
    }

    /// Number of dual-lattice points inside the box.
    pub fn lattice_count(&self, nu: f64, lambda: f64) -> u64 {
        let (rx, r1, r2) = self.mode_ranges(nu, lambda);
        let len = |r: std::ops::RangeInclusive<i64>| (r.end() - r.start() + 1).max(0) as u64;
        len(rx) * len(r1) * len(r2)
    }

    /// Lattice measure: point count times the dual volume element `1/(νλ²)`.
    pub fn lattice_measure(&self, nu: f64, lambda: f64) -> f64 {
        self.lattice_count(nu, lambda) as f64 / (nu * lambda * lambda)
    }

    fn corners(&self) -> [(f64, f64, f64); 8] {
        let mut out = [(0.0, 0.0, 0.0); 8];
        let mut idx = 0;
        for &x in &[self.xi.0, self.xi.1] {
            for &a in &[self.eta1.0, self.eta1.1] {
                for &b in &[self.eta2.0, self.eta2.1] {
                    out[idx] = (x, a, b);
                    idx += 1;
                }
            }
        }
        out
    }
}

/// Parameters of one norm-inflation cell.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IllposedConfig {
    pub alpha: f64,
    /// High frequency `N`; dyadic and ≥ 16.
    pub n: f64,
    /// Sets the resonance depth: `β = N^{(1−α−θ)/2}`, `δ = θ/2`.
    pub theta: f64,
    /// Sobolev exponents `(s1, s2)` of the measured norm.
    #[serde(default)]
    pub sbar: (f64, f64),
    /// Grid whose frequency range must contain the boxes; only the lattice
    /// paths (materialization, counting) use it.
    pub domain: DomainSpec<f64>,
}

impl IllposedConfig {
    pub fn validate(&self) -> Result<()> {
        DispersionParams::new(self.alpha)?;
        if !is_dyadic(self.n) || self.n < 16.0 {
            return Err(Error::InvalidConfig(format!(
                "need dyadic N ≥ 16, got {}",
                self.n
            )));
        }
        if !(self.theta > 0.0 && self.theta < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "need θ ∈ (0, 1/2), got {}",
                self.theta
            )));
        }
        if !(self.beta() < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "construction needs β < 1, got β = {}",
                self.beta()
            )));
        }
        self.domain.validate()?;
        let (d1, d2) = self.boxes();
        let nu = self.domain.nu();
        let max_xi = (self.domain.nx as f64 / 2.0 - 1.0) / nu;
        let max_eta1 = (self.domain.ny1 as f64 / 2.0 - 1.0) / self.domain.lambda;
        let max_eta2 = (self.domain.ny2 as f64 / 2.0 - 1.0) / self.domain.lambda;
        for (name, b) in [("low box", &d1), ("high box", &d2)] {
            if b.xi.1 > max_xi || b.eta1.1.abs().max(b.eta1.0.abs()) > max_eta1
                || b.eta2.1.abs().max(b.eta2.0.abs()) > max_eta2
            {
                return Err(Error::BoxNotResolved(format!(
                    "{name} exceeds the grid's frequency range (needs |ξ| ≤ {max_xi:.3}, \
                     |η₁| ≤ {max_eta1:.3}, |η₂| ≤ {max_eta2:.3})"
                )));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.n.powf((1.0 - self.alpha - self.theta) / 2.0)
    }

    pub fn delta(&self) -> f64 {
        self.theta / 2.0
    }

    /// The low box `D₁` and high box `D₂`.
    pub fn boxes(&self) -> (FreqBox, FreqBox) {
        let (alpha, n) = (self.alpha, self.n);
        let beta = self.beta();
        let delta = self.delta();
        let root = (alpha + 1.0).sqrt();
        let d1 = FreqBox {
            xi: (beta / 2.0, beta),
            eta1: (-root * beta * beta, root * beta * beta),
            eta2: (-beta.powf(0.5 + 2.0 * delta), beta.powf(0.5 + 2.0 * delta)),
        };
        let d2 = FreqBox {
            xi: (n, n + beta),
            eta1: (root * n * n, root * n * n + beta * beta),
            eta2: (-n.powf(0.5 - delta), n.powf(0.5 - delta)),
        };
        (d1, d2)
    }

    /// Exponent of the high-box amplitude attenuation
    /// `σ̄ = s1 + (1 + α/2)·s2`.
    pub fn high_attenuation_exponent(&self) -> f64 {
        self.sbar.0 + (1.0 + self.alpha / 2.0) * self.sbar.1
    }

    /// A domain description just large and fine enough that both boxes
    /// carry lattice points, with the given refinement factor on top of the
    /// minimal spacing.  The resulting sizes are astronomically large for
    /// genuine `N`; the value is meant for counting, not materialization.
    pub fn auto_domain(alpha: f64, n: f64, theta: f64, refine: f64) -> Result<DomainSpec<f64>> {
        let beta = n.powf((1.0 - alpha - theta) / 2.0);
        let delta = theta / 2.0;
        // Finest structures: ξ-extent β/2 (low box), η₁-extent β² (high box),
        // η₂-extent 2β^{1/2+2δ} (low box).
        let nu_req = refine * 4.0 / beta;
        let lambda_req = (refine * 2.0 / (beta * beta))
            .max(refine / beta.powf(0.5 + 2.0 * delta))
            .max(nu_req.powf((alpha + 2.0) / 2.0));
        let lambda = lambda_req.max(1.0);
        let nu = lambda.powf(2.0 / (alpha + 2.0));
        let even_at_least = |v: f64| -> usize {
            let k = (v.ceil() as usize).max(8);
            k + k % 2
        };
        let root = (alpha + 1.0).sqrt();
        let nx = even_at_least(2.0 * (nu * (n + 2.0 * beta) + 2.0));
        let ny1 = even_at_least(2.0 * (lambda * (root * n * n + 2.0 * beta * beta) + 2.0));
        let ny2 = even_at_least(2.0 * (lambda * (n.powf(0.5 - delta) + 1.0) + 2.0));
        DomainSpec::new(lambda, alpha, nx, ny1, ny2)
    }
}

/// Log-`N` exponent of the inflation proxy `N·β^{7/4+δ}`:
/// `1 + (7/4 + δ)(1 − α − θ)/2`.  Positive below the critical dispersion,
/// zero at `α = 15/7` (as `θ → 0`), negative above.
pub fn proxy_exponent(alpha: f64, theta: f64) -> f64 {
    1.0 + (7.0 / 4.0 + theta / 2.0) * (1.0 - alpha - theta) / 2.0
}

/// Fourier-side Sobolev norm `(∫ ⟨ξ⟩^{2s1}⟨η⟩^{2s2}|f̂|² dk)^{1/2}`, the
/// normalization in which the two-box data has norm ∼ 1.
pub fn fourier_side_norm(f: &SpectralField<f64>, s1: f64, s2: f64) -> Result<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(norm(f, &NormSpec::Sobolev { s1, s2 })? * two_pi.powf(1.5))
}

/// Indicator data on two boxes (plus their mirrors, making the field real):
/// coefficient `amp1` on the lattice points of `box1 ∪ −box1` and `amp2` on
/// `box2 ∪ −box2`.
pub fn two_box_field(
    grid: &std::sync::Arc<crate::domain::Grid<f64>>,
    box1: &FreqBox,
    amp1: f64,
    box2: &FreqBox,
    amp2: f64,
) -> Result<SpectralField<f64>> {
    box1.validate()?;
    box2.validate()?;
    if box1.xi.0 <= 0.0 || box2.xi.0 <= 0.0 {
        return Err(Error::InvalidConfig(
            "two-box data needs boxes at positive ξ (mirrors are added automatically)".into(),
        ));
    }
    let mut f = SpectralField::zeros(grid);
    let nu = grid.nu();
    let lambda = grid.lambda();
    for (b, amp) in [(box1, amp1), (box2, amp2)] {
        let (rx, r1, r2) = b.mode_ranges(nu, lambda);
        let mut any = false;
        for mx in rx.clone() {
            for m1 in r1.clone() {
                for m2 in r2.clone() {
                    f.set_mode_pair((mx, m1, m2), Complex::new(amp, 0.0))?;
                    any = true;
                }
            }
        }
        if !any {
            return Err(Error::BoxNotResolved(format!(
                "no lattice point inside {b:?} at spacings 1/ν = {:.3e}, 1/λ = {:.3e}",
                1.0 / nu,
                1.0 / lambda
            )));
        }
    }
    Ok(f)
}

/// Materialize the two-box data on the configured grid:
/// `φ̂ = |D₁|^{−1/2} 𝟙_{D₁} + |D₂|^{−1/2} N^{−σ̄} 𝟙_{D₂}` (plus mirrors),
/// with the box measures taken on the lattice so that `‖φ‖ ∼ 1` exactly.
///
/// Only artificially small configurations fit in memory; genuine ones report
/// unresolvable boxes long before allocation is attempted.
pub fn build_illposed_data(cfg: &IllposedConfig) -> Result<SpectralField<f64>> {
    cfg.validate()?;
    let (d1, d2) = cfg.boxes();
    let nu = cfg.domain.nu();
    let lambda = cfg.domain.lambda;
    let m1 = d1.lattice_measure(nu, lambda);
    let m2 = d2.lattice_measure(nu, lambda);
    if m1 == 0.0 || m2 == 0.0 {
        return Err(Error::BoxNotResolved(
            "a construction box contains no lattice point at this resolution".into(),
        ));
    }
    let grid = crate::domain::Grid::new(cfg.domain)?;
    let amp1 = m1.powf(-0.5);
    let amp2 = m2.powf(-0.5) * cfg.n.powf(-cfg.high_attenuation_exponent());
    two_box_field(&grid, &d1, amp1, &d2, amp2)
}

/// Lattice count of the data norm without materializing anything:
/// `‖φ‖²_{s̄} = 2(a₁² Σ_{D₁} w² + a₂² Σ_{D₂} w²)·dual_weight` with the
/// lattice-measure amplitudes (the factor 2 counts the mirror boxes).
pub fn data_norm_from_counts(cfg: &IllposedConfig) -> Result<f64> {
    cfg.validate()?;
    let (d1, d2) = cfg.boxes();
    let nu = cfg.domain.nu();
    let lambda = cfg.domain.lambda;
    let (s1, s2) = cfg.sbar;
    let weight_sq_sum = |b: &FreqBox| -> f64 {
        let (rx, r1, r2) = b.mode_ranges(nu, lambda);
        let mut sum = 0.0;
        for mx in rx.clone() {
            let xi = mx as f64 / nu;
            for m1 in r1.clone() {
                let e1 = m1 as f64 / lambda;
                for m2 in r2.clone() {
                    let e2 = m2 as f64 / lambda;
                    let w = (1.0 + xi * xi).powf(s1) * (1.0 + e1 * e1 + e2 * e2).powf(s2);
                    sum += w;
                }
            }
        }
        sum
    };
    let dual_weight = 1.0 / (nu * lambda * lambda);
    let c1 = d1.lattice_count(nu, lambda) as f64;
    let c2 = d2.lattice_count(nu, lambda) as f64;
    if c1 == 0.0 || c2 == 0.0 {
        return Err(Error::BoxNotResolved(
            "a construction box contains no lattice point at this resolution".into(),
        ));
    }
    let a1_sq = 1.0 / (c1 * dual_weight);
    let a2_sq = cfg.n.powf(-2.0 * cfg.high_attenuation_exponent()) / (c2 * dual_weight);
    let total =
        2.0 * (a1_sq * weight_sq_sum(&d1) + a2_sq * weight_sq_sum(&d2)) * dual_weight;
    Ok(total.sqrt())
}

/// Duhamel kernel `g(Ω) = (e^{itΩ} − 1)/(iΩ) = e^{itΩ/2}·2 sin(tΩ/2)/Ω`,
/// with the `Ω → 0` limit `t·e^{itΩ/2}`.
fn duhamel_kernel(t: f64, omega: f64) -> Complex<f64> {
    let half = 0.5 * t * omega;
    let (s, c) = half.sin_cos();
    let phase = Complex::new(c, s);
    if half.abs() < 1e-8 {
        phase * t
    } else {
        phase * (2.0 * s / omega)
    }
}

const GL3_NODES: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
const GL4_NODES: [f64; 4] = [
    -0.8611363115940526,
    -0.3399810435848563,
    0.3399810435848563,
    0.8611363115940526,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.3478548451374538,
    0.6521451548625461,
    0.6521451548625461,
    0.3478548451374538,
];

fn map_node(node: f64, (lo, hi): (f64, f64)) -> f64 {
    0.5 * (hi + lo) + 0.5 * (hi - lo) * node
}

/// Inner pair integral `∫_I g(Ω(k₁, k−k₁)) dk₁` over an exact intersection
/// box, by a tensor Gauss–Legendre rule; also updates the running `max |Ω|`.
fn inner_integral(
    alpha: f64,
    t: f64,
    region: &FreqBox,
    k: (f64, f64, f64),
    max_abs_omega: &mut f64,
) -> Complex<f64> {
    let jac = region.volume() / 8.0;
    let mut acc = Complex::new(0.0, 0.0);
    for (&nx, &wx) in GL4_NODES.iter().zip(&GL4_WEIGHTS) {
        let xi1 = map_node(nx, region.xi);
        for (&n1, &w1) in GL4_NODES.iter().zip(&GL4_WEIGHTS) {
            let e1 = map_node(n1, region.eta1);
            for (&n2, &w2) in GL4_NODES.iter().zip(&GL4_WEIGHTS) {
                let e2 = map_node(n2, region.eta2);
                let omega = resonance_direct(
                    alpha,
                    (xi1, (e1, e2)),
                    (k.0 - xi1, (k.1 - e1, k.2 - e2)),
                );
                if omega.abs() > *max_abs_omega {
                    *max_abs_omega = omega.abs();
                }
                acc += duhamel_kernel(t, omega) * (wx * w1 * w2);
            }
        }
    }
    acc * jac
}

/// Sorted deduplicated kink positions of the overlap geometry on one axis.
fn axis_breakpoints(low_edges: &[(f64, f64)], high: (f64, f64)) -> Vec<f64> {
    let mut pts = Vec::new();
    for &(lo, hi) in low_edges {
        for a in [lo, hi] {
            for b in [high.0, high.1] {
                pts.push(a + b);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    let scale = pts.last().map(|v| v.abs()).unwrap_or(1.0).max(1.0);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * scale);
    pts
}

/// Continuum evaluation of `‖f₃‖_{s̄}` for indicator data of amplitudes
/// `amp1` on `±box1` and `amp2` on `±box2`, together with the largest `|Ω|`
/// seen over the sampled pairs.
///
/// `f̂₃(k) = iξ (2π)^{−3} a₁ a₂ e^{itω(k)} · 2 Σ_{σ=±} ∫_{σB₁ ∩ (k−B₂)}
/// g(Ω) dk₁` (the factor 2 counts the two pair orderings), and
/// `‖f₃‖² = 2 ∫_{O} w_{s̄}²(k) |f̂₃|² dk` over the positive-ξ output
/// envelope `O` (the factor 2 counts the mirror output).
pub fn f3_norm_quadrature(
    alpha: f64,
    t: f64,
    box1: &FreqBox,
    box2: &FreqBox,
    amp1: f64,
    amp2: f64,
    sbar: (f64, f64),
) -> Result<(f64, f64)> {
    box1.validate()?;
    box2.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(format!("need t ≥ 0, got {t}")));
    }
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mirror1 = box1.mirrored();
    let sources = [*box1, mirror1];

    let breaks_xi = axis_breakpoints(&[box1.xi, mirror1.xi], box2.xi);
    let breaks_e1 = axis_breakpoints(&[box1.eta1, mirror1.eta1], box2.eta1);
    let breaks_e2 = axis_breakpoints(&[box1.eta2, mirror1.eta2], box2.eta2);

    let (s1, s2) = sbar;
    let mut max_abs_omega: f64 = 0.0;
    let mut total = 0.0;
    for wx in breaks_xi.windows(2) {
        for w1 in breaks_e1.windows(2) {
            for w2 in breaks_e2.windows(2) {
                let cell = FreqBox {
                    xi: (wx[0], wx[1]),
                    eta1: (w1[0], w1[1]),
                    eta2: (w2[0], w2[1]),
                };
                if cell.volume() <= 0.0 {
                    continue;
                }
                let jac = cell.volume() / 8.0;
                for (&nx, &qx) in GL3_NODES.iter().zip(&GL3_WEIGHTS) {
                    let xi = map_node(nx, cell.xi);
                    for (&n1, &q1) in GL3_NODES.iter().zip(&GL3_WEIGHTS) {
                        let e1 = map_node(n1, cell.eta1);
                        for (&n2, &q2) in GL3_NODES.iter().zip(&GL3_WEIGHTS) {
                            let e2 = map_node(n2, cell.eta2);
                            let k = (xi, e1, e2);
                            let mut j = Complex::new(0.0, 0.0);
                            for src in &sources {
                                if let Some(region) = src.intersect(&box2.complement_to(k)) {
                                    j += inner_integral(
                                        alpha,
                                        t,
                                        &region,
                                        k,
                                        &mut max_abs_omega,
                                    );
                                }
                            }
                            if j.norm_sqr() == 0.0 {
                                continue;
                            }
                            let wsq = (1.0 + xi * xi).powf(s1)
                                * (1.0 + e1 * e1 + e2 * e2).powf(s2);
                            total += qx * q1 * q2 * jac * wsq * xi * xi
                                * (2.0 * j).norm_sqr();
                        }
                    }
                }
            }
        }
    }
    // Corner pairs give a deterministic stab at the extremes of Ω.
    for c1 in box1
        .corners()
        .iter()
        .chain(mirror1.corners().iter())
    {
        for c2 in box2.corners() {
            let omega = resonance_direct(
                alpha,
                (c1.0, (c1.1, c1.2)),
                (c2.0, (c2.1, c2.2)),
            );
            if omega.abs() > max_abs_omega {
                max_abs_omega = omega.abs();
            }
        }
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let norm_sq = 2.0 * (amp1 * amp2 / two_pi.powi(3)).powi(2) * total;
    Ok((norm_sq.sqrt(), max_abs_omega))
}

/// Lattice-exact evaluation of the same quantity: `f̂₃` accumulated over all
/// dual-lattice pairs `k₁ ∈ ±B₁`, `k₂ ∈ B₂` at spacings `1/ν`, `1/λ`.
/// Converges to [`f3_norm_quadrature`] under lattice refinement and, on a
/// grid that resolves the boxes inside its two-thirds band, agrees with the
/// polarized second Picard iterate of the evolver.
#[allow(clippy::too_many_arguments)]
pub fn f3_norm_lattice(
    nu: f64,
    lambda: f64,
    box1: &FreqBox,
    box2: &FreqBox,
    amp1: f64,
    amp2: f64,
    t: f64,
    alpha: f64,
    sbar: (f64, f64),
) -> Result<f64> {
    box1.validate()?;
    box2.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(format!("need t ≥ 0, got {t}")));
    }
    let dual_weight = 1.0 / (nu * lambda * lambda);
    let mut outputs: std::collections::BTreeMap<(i64, i64, i64), Complex<f64>> =
        std::collections::BTreeMap::new();
    for src in [*box1, box1.mirrored()] {
        let (rx1, r11, r21) = src.mode_ranges(nu, lambda);
        let (rx2, r12, r22) = box2.mode_ranges(nu, lambda);
        for ax in rx1.clone() {
            let xi1 = ax as f64 / nu;
            for a1 in r11.clone() {
                let e11 = a1 as f64 / lambda;
                for a2 in r21.clone() {
                    let e21 = a2 as f64 / lambda;
                    for bx in rx2.clone() {
                        let xi2 = bx as f64 / nu;
                        for b1 in r12.clone() {
                            let e12 = b1 as f64 / lambda;
                            for b2 in r22.clone() {
                                let e22 = b2 as f64 / lambda;
                                let omega = resonance_direct(
                                    alpha,
                                    (xi1, (e11, e21)),
                                    (xi2, (e12, e22)),
                                );
                                let g = duhamel_kernel(t, omega);
                                *outputs
                                    .entry((ax + bx, a1 + b1, a2 + b2))
                                    .or_insert(Complex::new(0.0, 0.0)) += g;
                            }
                        }
                    }
                }
            }
        }
    }
    if outputs.is_empty() {
        return Err(Error::BoxNotResolved(
            "no lattice pair inside the construction boxes at this resolution".into(),
        ));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let (s1, s2) = sbar;
    let mut norm_sq = 0.0;
    for (&(mx, m1, m2), j) in &outputs {
        let xi = mx as f64 / nu;
        let e1 = m1 as f64 / lambda;
        let e2 = m2 as f64 / lambda;
        let wsq = (1.0 + xi * xi).powf(s1) * (1.0 + e1 * e1 + e2 * e2).powf(s2);
        // prefactor: iξ (2π)^{−3} a₁a₂ Σ w·g, pair ordering ×2, mirror ×2.
        let modulus_sq =
            (xi * amp1 * amp2 * dual_weight / two_pi.powi(3)).powi(2) * (2.0 * j).norm_sqr();
        norm_sq += 2.0 * wsq * modulus_sq * dual_weight;
    }
    Ok(norm_sq.sqrt())
}

/// Result of one inflation measurement.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IllposedCell {
    pub alpha: f64,
    pub n: f64,
    pub theta: f64,
    pub t: f64,
    /// `‖f₃‖_{s̄} / (N·|D₁|^{1/2})` with continuum box measures.
    pub ratio: f64,
    pub proxy_exponent: f64,
    /// Largest sampled `|Ω|` divided by the predicted scale `N^{α−1}β²`.
    pub max_resonance_norm: f64,
}

/// Measure the inflation ratio of one configuration at time `t ∈ [0, 1]`.
pub fn illposed_ratio(cfg: &IllposedConfig, t: f64) -> Result<IllposedCell> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidConfig(format!("need t ∈ [0, 1], got {t}")));
    }
    let (d1, d2) = cfg.boxes();
    let amp1 = d1.volume().powf(-0.5);
    let amp2 = d2.volume().powf(-0.5) * cfg.n.powf(-cfg.high_attenuation_exponent());
    let (f3, max_omega) =
        f3_norm_quadrature(cfg.alpha, t, &d1, &d2, amp1, amp2, cfg.sbar)?;
    let beta = cfg.beta();
    let omega_scale = cfg.n.powf(cfg.alpha - 1.0) * beta * beta;
    Ok(IllposedCell {
        alpha: cfg.alpha,
        n: cfg.n,
        theta: cfg.theta,
        t,
        ratio: f3 / (cfg.n * d1.volume().sqrt()),
        proxy_exponent: proxy_exponent(cfg.alpha, cfg.theta),
        max_resonance_norm: max_omega / omega_scale,
    })
}

/// Sweep the inflation measurement over a grid of `(α, N)` cells.  Cells run
/// in parallel; failures are recorded per cell and do not stop the sweep.
/// The output order follows the input order (`α` outer, `N` inner).
pub fn illposed_sweep(
    alphas: &[f64],
    ns: &[f64],
    theta: f64,
    t: f64,
    sbar: (f64, f64),
) -> Vec<(f64, f64, Result<IllposedCell>)> {
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| ns.iter().map(move |&n| (a, n)))
        .collect();
    cells
        .into_par_iter()
        .map(|(alpha, n)| {
            let cell = IllposedConfig::auto_domain(alpha, n, theta, 1.0)
                .map(|domain| IllposedConfig {
                    alpha,
                    n,
                    theta,
                    sbar,
                    domain,
                })
                .and_then(|cfg| illposed_ratio(&cfg, t));
            (alpha, n, cell)
        })
        .collect()
}
