//! Empirical benches for the space-time estimates behind the well-posedness
//! machinery: the localized L⁴ bound for the linear propagator, the
//! transverse L² bilinear estimate, and the anisotropic Leibniz rule.
//!
//! Each bench evaluates the left- and right-hand sides on sampled data and
//! reports per-sample ratios, the maximum ratio, and — for one-parameter
//! dyadic sweeps — fitted log-log exponents.  The benches exercise the
//! *inequalities*; they do not reproduce any case-by-case proof bookkeeping.
//!
//! Approximations are deliberate and documented:
//! * modulation localization uses Gaussian time windows (sharp modulation
//!   cutoffs do not exist on a finite time horizon), so each factor carries
//!   a reported window bandwidth instead of an indicator in τ;
//! * sup-type norms are grid maxima, slightly undershooting the true
//!   supremum, so those ratios are conservative;
//! * the L⁴ time integral uses a midpoint rule with a configurable number
//!   of steps.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dispersion::{kdv_resonance, omega, DispersionParams, DEFAULT_SMALLNESS};
use crate::domain::{DomainSpec, Grid};
use crate::error::{Error, Result};
use crate::field::{is_dyadic, SpectralField};
use crate::norms::{norm, NormSpec};

/// One evaluated sample of an inequality.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchSample {
    /// Named dyadic parameters of the cell this sample belongs to.
    pub params: Vec<(String, f64)>,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Least-squares slope of `log2(value)` against `log2(parameter)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub std_error: f64,
    pub residual_rms: f64,
    pub levels: usize,
}

/// Outcome of one bench run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchReport {
    pub inequality: String,
    pub samples: Vec<BenchSample>,
    pub max_ratio: f64,
    /// Fits keyed by the swept parameter name; present only for sweeps with
    /// at least four dyadic levels.
    pub fits: Vec<(String, ExponentFit)>,
}

impl BenchReport {
    fn new(inequality: &str, samples: Vec<BenchSample>) -> Result<Self> {
        let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        if !max_ratio.is_finite() {
            return Err(Error::DidNotConverge {
                achieved: max_ratio,
                wanted: f64::MAX,
            });
        }
        Ok(BenchReport {
            inequality: inequality.to_string(),
            samples,
            max_ratio,
            fits: Vec::new(),
        })
    }
}

/// Fit `log2 y = e·log2 x + c` by least squares.  Requires at least four
/// distinct dyadic levels.
pub fn fit_log2_slope(xs: &[f64], ys: &[f64]) -> Result<ExponentFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidConfig("fit inputs of unequal length".into()));
    }
    let mut levels: Vec<f64> = xs.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "exponent fits need ≥ 4 dyadic levels, got {}",
            levels.len()
        )));
    }
    if xs.iter().any(|&x| x <= 0.0) || ys.iter().any(|&y| y <= 0.0) {
        return Err(Error::InvalidConfig(
            "exponent fits need positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - slope * x - intercept;
            r * r
        })
        .sum();
    let dof = (lx.len().max(3) - 2) as f64;
    Ok(ExponentFit {
        exponent: slope,
        std_error: (rss / dof / sxx).sqrt(),
        residual_rms: (rss / n).sqrt(),
        levels: levels.len(),
    })
}

fn sample_seed(base: u64, idx: u64) -> u64 {
    base.wrapping_add(idx.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn even_at_least(v: i64) -> usize {
    let k = v.max(8) as usize;
    k + k % 2
}

// ---------------------------------------------------------------------------
// Localized L⁴ bound for the propagator
// ---------------------------------------------------------------------------

/// Knobs of the L⁴ bench.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct L4Options {
    /// Transverse period of the working domain (dyadic).
    pub lambda: f64,
    /// Midpoint steps for the time integral over [0, 1]; at least 64.
    pub time_steps: usize,
    /// The ε in the large-M constant branch.
    pub epsilon: f64,
    /// Constant-coefficient (focusing) data instead of Gaussian data.  The
    /// focusing family drives the small-M branch: independent Gaussian
    /// signs average the quartic interaction out and hide the M-dependence.
    pub coherent: bool,
    pub seed: u64,
}

impl Default for L4Options {
    fn default() -> Self {
        L4Options {
            lambda: 4.0,
            time_steps: 64,
            epsilon: 0.01,
            coherent: false,
            seed: 0,
        }
    }
}

/// The constant `C(N, M)`: `M^{1/2}` for `M ≤ 1`, else
/// `λ^ε (N^{1/4} ∨ 1) M^ε`.
pub fn l4_constant(n: f64, m: f64, lambda: f64, epsilon: f64) -> f64 {
    if m <= 1.0 {
        m.sqrt()
    } else {
        lambda.powf(epsilon) * n.powf(0.25).max(1.0) * m.powf(epsilon)
    }
}

/// Data supported on `I × Q_M` with `I = [N, N+K]` and `Q_M` the origin cube
/// of side `M`, normalized to unit mass.
fn l4_field(
    grid: &Arc<Grid<f64>>,
    n: f64,
    k: f64,
    m: f64,
    coherent: bool,
    seed: u64,
) -> Result<SpectralField<f64>> {
    let nu = grid.nu();
    let lambda = grid.lambda();
    let xi_lo = (n * nu).ceil() as i64;
    let xi_hi = ((n + k) * nu).floor() as i64;
    let eta_max = (m * lambda / 2.0).floor() as i64;
    if xi_lo > xi_hi {
        return Err(Error::InvalidBand(format!(
            "no lattice frequency inside [{n}, {}] at spacing {}",
            n + k,
            1.0 / nu
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid);
    for mx in xi_lo..=xi_hi {
        for m1 in -eta_max..=eta_max {
            for m2 in -eta_max..=eta_max {
                let value = if coherent {
                    Complex::new(1.0, 0.0)
                } else {
                    Complex::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    )
                };
                f.set_mode_pair((mx, m1, m2), value)?;
            }
        }
    }
    let l2 = f.l2_norm();
    f.scale(1.0 / l2);
    Ok(f)
}

/// Space-time L⁴ norm of `S_α(t)u₀` over `[0, 1]` by a midpoint rule.  The
/// spatial integral is exact when the grid resolves the quartic products.
fn propagated_l4(u0: &SpectralField<f64>, steps: usize) -> Result<f64> {
    let grid = u0.grid();
    let cell = grid.cell_volume();
    let dt = 1.0 / steps as f64;
    let mut total = 0.0;
    for j in 0..steps {
        let t = (j as f64 + 0.5) * dt;
        let ut = crate::dispersion::propagated(u0, t)?;
        let phys = ut.to_physical();
        let quartic: f64 = phys.iter().map(|v| v * v * v * v).sum();
        total += quartic * cell * dt;
    }
    Ok(total.powf(0.25))
}

/// Bench one cell of the localized L⁴ estimate:
/// `‖S_α(t)u₀‖_{L⁴} ≤ K^{1/4} C(N,M) ‖u₀‖` for data on `I × Q_M`.
pub fn bench_l4_strichartz(
    alpha: f64,
    n: f64,
    k: f64,
    m: f64,
    samples: usize,
    opts: &L4Options,
) -> Result<BenchReport> {
    DispersionParams::new(alpha)?;
    validate_l4(n, k, m, samples, opts)?;
    let nu = opts.lambda.powf(2.0 / (alpha + 2.0));
    let m_xi = ((n + k) * nu).floor() as i64;
    let m_eta = (m * opts.lambda / 2.0).floor() as i64;
    // Quartic products are alias-free when the grid exceeds four times the
    // largest populated index.
    let grid = Grid::new(DomainSpec::new(
        opts.lambda,
        alpha,
        even_at_least(4 * m_xi + 6),
        even_at_least(4 * m_eta + 6),
        even_at_least(4 * m_eta + 6),
    )?)?;
    let rhs = k.powf(0.25) * l4_constant(n, m, opts.lambda, opts.epsilon); // unit-mass data
    let samples: Vec<BenchSample> = (0..samples)
        .into_par_iter()
        .map(|idx| -> Result<BenchSample> {
            let seed = sample_seed(opts.seed, idx as u64);
            let u0 = l4_field(&grid, n, k, m, opts.coherent, seed)?;
            let lhs = propagated_l4(&u0, opts.time_steps)?;
            Ok(BenchSample {
                params: vec![("n".into(), n), ("k".into(), k), ("m".into(), m)],
                seed,
                lhs,
                rhs,
                ratio: lhs / rhs,
            })
        })
        .collect::<Result<_>>()?;
    BenchReport::new("l4_strichartz", samples)
}

fn validate_l4(n: f64, k: f64, m: f64, samples: usize, opts: &L4Options) -> Result<()> {
    if !is_dyadic(opts.lambda) || opts.lambda < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "need dyadic λ ≥ 1, got {}",
            opts.lambda
        )));
    }
    for (name, v) in [("N", n), ("K", k), ("M", m)] {
        if !is_dyadic(v) {
            return Err(Error::InvalidConfig(format!(
                "{name} must be dyadic, got {v}"
            )));
        }
    }
    if k > n {
        return Err(Error::InvalidBand(format!(
            "interval length K = {k} exceeds its dyadic shell N = {n}"
        )));
    }
    if m < 1.0 / opts.lambda {
        return Err(Error::InvalidBand(format!(
            "transverse cube of side {m} is below the lattice spacing {}",
            1.0 / opts.lambda
        )));
    }
    if opts.time_steps < 64 {
        return Err(Error::InvalidConfig(format!(
            "the time integral needs ≥ 64 steps, got {}",
            opts.time_steps
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    Ok(())
}

/// Sweep `M` over dyadic levels at fixed `(N, K)` and fit the growth of the
/// L⁴ norm; the fitted exponent probes the `M^{1/2}` branch.
pub fn l4_exponent_sweep(
    alpha: f64,
    n: f64,
    k: f64,
    ms: &[f64],
    samples: usize,
    opts: &L4Options,
) -> Result<BenchReport> {
    let mut all = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &m in ms {
        let report = bench_l4_strichartz(alpha, n, k, m, samples, opts)?;
        let mean_lhs =
            report.samples.iter().map(|s| s.lhs).sum::<f64>() / report.samples.len() as f64;
        xs.push(m);
        ys.push(mean_lhs);
        all.extend(report.samples);
    }
    let fit = fit_log2_slope(&xs, &ys)?;
    let mut report = BenchReport::new("l4_strichartz", all)?;
    report.fits.push(("m".into(), fit));
    Ok(report)
}

// ---------------------------------------------------------------------------
// Transverse L² bilinear estimate
// ---------------------------------------------------------------------------

/// One dyadic space-time band: `|ξ| ∼ N`, `|η| ∼ M`, modulation `∼ L`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DyadicBand {
    pub n: f64,
    pub m: f64,
    pub l: f64,
}

/// Knobs of the bilinear bench.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BilinearOptions {
    /// Transverse period of the working lattice (dyadic).
    pub lambda: f64,
    /// Cap on the support size per factor (seeded subsampling beyond it).
    pub support_cap: usize,
    /// Attempts when searching for a resonant seed pair.
    pub seed_search_tries: usize,
    pub seed: u64,
}

impl Default for BilinearOptions {
    fn default() -> Self {
        BilinearOptions {
            lambda: 16.0,
            support_cap: 2000,
            seed_search_tries: 40_000,
            seed: 0,
        }
    }
}

type Mode = (i64, i64, i64);

fn mode_freq(m: Mode, nu: f64, lambda: f64) -> (f64, (f64, f64)) {
    (m.0 as f64 / nu, (m.1 as f64 / lambda, m.2 as f64 / lambda))
}

/// Gaussian-window correlation `∫ e^{-t²B̄²} e^{-itΔ} dt`.
fn window_correlation(delta: f64, bandwidth_sq: f64) -> f64 {
    PI.sqrt() / bandwidth_sq.sqrt() * (-delta * delta / (4.0 * bandwidth_sq)).exp()
}

/// Build slab supports around a resonant seed pair: ξ-intervals of length
/// `N_min`, transverse cubes of side `M_min` centred at the seed (clipped to
/// twice the dyadic shell), cut to the level set `|Ω − Ω*| ≤ L_max/2` so
/// that every retained mode stays within one modulation window of the seed
/// resonance.
fn resonant_supports(
    alpha: f64,
    band1: &DyadicBand,
    band2: &DyadicBand,
    opts: &BilinearOptions,
    rng: &mut ChaCha12Rng,
) -> Result<(Vec<Mode>, Vec<Mode>)> {
    let lambda = opts.lambda;
    let nu = lambda.powf(2.0 / (alpha + 2.0));
    let n_min = band1.n.min(band2.n);
    let m_min = band1.m.min(band2.m);
    let l_max = band1.l.max(band2.l);

    let draw = |rng: &mut ChaCha12Rng, band: &DyadicBand| -> Mode {
        let xi_lo = (band.n * nu).ceil() as i64;
        let xi_hi = (((2.0 * band.n - n_min).max(band.n)) * nu).floor() as i64;
        let e_lo = (band.m / 2.0 * lambda).ceil() as i64;
        let e_hi = (band.m * 2.0 * lambda).floor() as i64;
        let sgn = if rng.random::<bool>() { 1 } else { -1 };
        let mu_max = (m_min / 2.0 * lambda).floor() as i64;
        (
            rng.random_range(xi_lo..=xi_hi.max(xi_lo)),
            sgn * rng.random_range(e_lo..=e_hi.max(e_lo)),
            rng.random_range(-mu_max..=mu_max),
        )
    };
    let resonance = |k1: Mode, k2: Mode| -> Option<f64> {
        let (x1, e1) = mode_freq(k1, nu, lambda);
        let (x2, e2) = mode_freq(k2, nu, lambda);
        if x1 + x2 == 0.0 {
            return None;
        }
        let kdv = kdv_resonance(alpha, x1, x2);
        let om = omega(alpha, x1, e1) + omega(alpha, x2, e2)
            - omega(alpha, x1 + x2, (e1.0 + e2.0, e1.1 + e2.1));
        (kdv != 0.0 && om.abs() < DEFAULT_SMALLNESS * kdv.abs()).then_some(om)
    };

    let mut seed_pair = None;
    for _ in 0..opts.seed_search_tries {
        let k1 = draw(rng, band1);
        let k2 = draw(rng, band2);
        if let Some(om) = resonance(k1, k2) {
            seed_pair = Some((k1, k2, om));
            break;
        }
    }
    let Some((k1s, k2s, omega_star)) = seed_pair else {
        return Err(Error::EmptyResonantSupport(format!(
            "no resonant pair found in |ξ|∼({}, {}), |η|∼({}, {}) after {} draws",
            band1.n, band2.n, band1.m, band2.m, opts.seed_search_tries
        )));
    };

    let slab = |seed: Mode, partner: Mode, band: &DyadicBand| -> Vec<Mode> {
        let xi_len = (n_min * nu).ceil() as i64;
        let side = (m_min / 2.0 * lambda).floor() as i64;
        let (xp, ep) = mode_freq(partner, nu, lambda);
        let om_partner = omega(alpha, xp, ep);
        let mut keep = Vec::new();
        for dx in 0..=xi_len {
            for d1 in -side..=side {
                for d2 in -side..=side {
                    let k = (seed.0 + dx, seed.1 + d1, seed.2 + d2);
                    let (x, e) = mode_freq(k, nu, lambda);
                    let emod = e.0.abs().max(e.1.abs());
                    if x < band.n / 2.0 || x > 2.0 * band.n || emod > 2.0 * band.m {
                        continue;
                    }
                    let om = omega(alpha, x, e) + om_partner
                        - omega(alpha, x + xp, (e.0 + ep.0, e.1 + ep.1));
                    if (om - omega_star).abs() <= l_max / 2.0 {
                        keep.push(k);
                    }
                }
            }
        }
        keep
    };
    let mut s1 = slab(k1s, k2s, band1);
    let mut s2 = slab(k2s, k1s, band2);
    for s in [&mut s1, &mut s2] {
        if s.len() > opts.support_cap {
            // Seeded thinning keeps the run deterministic.
            for i in (1..s.len()).rev() {
                let j = rng.random_range(0..=i);
                s.swap(i, j);
            }
            s.truncate(opts.support_cap);
            s.sort_unstable();
        }
    }
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptyResonantSupport(
            "resonant slab contains no lattice mode at this resolution".into(),
        ));
    }
    Ok((s1, s2))
}

/// One sample of the bilinear bench; `amp_scale` multiplies both inputs and
/// must cancel from the reported ratio.
fn bilinear_sample(
    alpha: f64,
    band1: &DyadicBand,
    band2: &DyadicBand,
    opts: &BilinearOptions,
    seed: u64,
    amp_scale: f64,
) -> Result<BenchSample> {
    let lambda = opts.lambda;
    let nu = lambda.powf(2.0 / (alpha + 2.0));
    let dual_weight = 1.0 / (nu * lambda * lambda);
    let n_min = band1.n.min(band2.n);
    let m_min = band1.m.min(band2.m);
    let l_min = band1.l.min(band2.l);
    let l_max = band1.l.max(band2.l);
    let n_top = band1.n.max(band2.n);
    let bandwidth_sq = band1.l * band1.l + band2.l * band2.l;
    let bin_width = bandwidth_sq.sqrt() / 16.0;

    let rhs_shape = (m_min * n_min * l_min * (2.0 + l_max / n_top.powf(alpha / 2.0))).sqrt();
    let rhs_trivial_shape = (n_min * m_min * m_min * l_min).sqrt();
    // ‖u_i‖_{L²_{x,y,t}} = ‖w_i‖_{L²_t}·‖φ_i‖ with window bandwidth L_i.
    let window_l2 = |l: f64| (PI.sqrt() / l).sqrt();
    let input_norms = window_l2(band1.l) * window_l2(band2.l) * amp_scale * amp_scale;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (s1, s2) = resonant_supports(alpha, band1, band2, opts, &mut rng)?;
    // Positive amplitudes (the estimate is sharp for positive Fourier
    // data), normalized to spatial mass `amp_scale`.
    let two_pi_cubed = (2.0 * PI).powi(3);
    let mut amps = |len: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..len)
            .map(|_| rng.sample::<f64, _>(StandardNormal).abs().max(1e-3))
            .collect();
        let mass: f64 = raw.iter().map(|a| a * a).sum::<f64>() * dual_weight;
        let scale = amp_scale * (two_pi_cubed / mass).sqrt();
        raw.iter().map(|a| a * scale).collect()
    };
    let a1 = amps(s1.len());
    let a2 = amps(s2.len());
    let pre2: Vec<(f64, (f64, f64), f64)> = s2
        .iter()
        .map(|&k| {
            let (x, e) = mode_freq(k, nu, lambda);
            (x, e, omega(alpha, x, e))
        })
        .collect();

    // Accumulate pair contributions per (output mode, Ω-bin); the map order
    // groups output modes so flushing is single-pass.
    let smallness = DEFAULT_SMALLNESS;
    let mut bins: BTreeMap<(Mode, i64), f64> = BTreeMap::new();
    for (k1, v1) in s1.iter().zip(&a1) {
        let (x1, e1) = mode_freq(*k1, nu, lambda);
        let om1 = omega(alpha, x1, e1);
        for ((k2, v2), (x2, e2, om2)) in s2.iter().zip(&a2).zip(&pre2) {
            let xo = x1 + x2;
            if xo == 0.0 {
                continue;
            }
            // Output projection to |ξ| ∼ N.
            if xo.abs() < n_top / 2.0 || xo.abs() > 4.0 * n_top {
                continue;
            }
            // The estimate assumes the resonance condition on the support;
            // drop the stray pairs that escape the slab construction.
            let kdv = kdv_resonance(alpha, x1, *x2);
            let omo = omega(alpha, xo, (e1.0 + e2.0, e1.1 + e2.1));
            if kdv == 0.0 || (om1 + om2 - omo).abs() >= smallness * kdv.abs() {
                continue;
            }
            let key = (
                (k1.0 + k2.0, k1.1 + k2.1, k1.2 + k2.2),
                ((om1 + om2) / bin_width).round() as i64,
            );
            *bins.entry(key).or_insert(0.0) += v1 * v2;
        }
    }
    if bins.is_empty() {
        return Err(Error::EmptyResonantSupport(
            "all candidate pairs fell outside the resonant output band".into(),
        ));
    }
    // Correlate the Ω-bins of each output mode through the window overlap.
    let mut lhs_sq = 0.0;
    let mut current: Option<Mode> = None;
    let mut local: Vec<(i64, f64)> = Vec::new();
    let flush = |local: &mut Vec<(i64, f64)>, lhs_sq: &mut f64| {
        for &(b, z) in local.iter() {
            for &(b2, z2) in local.iter() {
                let delta = (b - b2) as f64 * bin_width;
                *lhs_sq += z * z2 * window_correlation(delta, bandwidth_sq);
            }
        }
        local.clear();
    };
    for ((k, b), z) in bins {
        if current != Some(k) {
            flush(&mut local, &mut lhs_sq);
            current = Some(k);
        }
        local.push((b, z));
    }
    flush(&mut local, &mut lhs_sq);
    // Each product coefficient carries (2π)^{-3}·w; the output norm sums
    // |·|² against another (2π)^{-3}·w.
    lhs_sq *= (dual_weight / two_pi_cubed).powi(3);
    let lhs = lhs_sq.sqrt();
    let rhs = rhs_shape * input_norms;
    Ok(BenchSample {
        params: vec![
            ("n1".into(), band1.n),
            ("m1".into(), band1.m),
            ("l1".into(), band1.l),
            ("n2".into(), band2.n),
            ("m2".into(), band2.m),
            ("l2".into(), band2.l),
            (
                "ratio_trivial".into(),
                lhs / (rhs_trivial_shape * input_norms),
            ),
        ],
        seed,
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// Bench one cell of the transverse bilinear estimate
/// `‖P_N(u₁u₂)‖ ≤ M_min^{1/2} N_min^{1/2} L_min^{1/2}
/// (2 + L_max/N^{α/2})^{1/2} ‖u₁‖ ‖u₂‖` for modulation-localized data
/// `u_i(t) = w_i(t)·S_α(t)φ_i` with Gaussian windows of bandwidth `L_i` and
/// supports restricted to resonant slabs.  The space-time norms are
/// evaluated exactly on the frequency side through the window correlation
/// `∫|w₁w₂|²(t) e^{-itΔ} dt = √π/B̄ · e^{-Δ²/(4B̄²)}`.
pub fn bench_bilinear_transverse(
    alpha: f64,
    band1: DyadicBand,
    band2: DyadicBand,
    samples: usize,
    opts: &BilinearOptions,
) -> Result<BenchReport> {
    DispersionParams::new(alpha)?;
    validate_bilinear(alpha, &band1, &band2, samples, opts)?;
    let results: Vec<BenchSample> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            bilinear_sample(
                alpha,
                &band1,
                &band2,
                opts,
                sample_seed(opts.seed, idx as u64),
                1.0,
            )
        })
        .collect::<Result<_>>()?;
    BenchReport::new("bilinear_transverse", results)
}

fn validate_bilinear(
    alpha: f64,
    band1: &DyadicBand,
    band2: &DyadicBand,
    samples: usize,
    opts: &BilinearOptions,
) -> Result<()> {
    if !is_dyadic(opts.lambda) || opts.lambda < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "need dyadic λ ≥ 1, got {}",
            opts.lambda
        )));
    }
    let nu = opts.lambda.powf(2.0 / (alpha + 2.0));
    for band in [band1, band2] {
        for (name, v) in [("N", band.n), ("M", band.m), ("L", band.l)] {
            if !is_dyadic(v) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be dyadic, got {v}"
                )));
            }
        }
        if band.l < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "modulation scales start at 1, got {}",
                band.l
            )));
        }
        if band.m < 1.0 / opts.lambda || band.n < 1.0 / nu {
            return Err(Error::InvalidBand(format!(
                "band (N={}, M={}) is below the lattice spacings (1/ν={}, 1/λ={})",
                band.n,
                band.m,
                1.0 / nu,
                1.0 / opts.lambda
            )));
        }
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    Ok(())
}

/// A `(band1, band2)` cell whose geometry admits resonant pairs: the low
/// side's transverse band sits at the slope where the transverse term of
/// the resonance cancels the one-dimensional part.
pub fn transverse_cell(
    alpha: f64,
    n_hi: f64,
    n_lo: f64,
    m_hi: f64,
    l: f64,
) -> (DyadicBand, DyadicBand) {
    let slope = (alpha + 1.0).sqrt() * (n_hi + n_lo).powf(alpha / 2.0);
    let target = slope * n_lo;
    let m_lo = 2.0_f64.powf(target.log2().floor());
    (
        DyadicBand {
            n: n_hi,
            m: m_hi,
            l,
        },
        DyadicBand {
            n: n_lo,
            m: m_lo,
            l,
        },
    )
}

/// Sweep one dyadic parameter over explicit cells and fit the growth of the
/// normalized interaction `LHS/(‖u₁‖‖u₂‖)` against it.
pub fn bilinear_exponent_sweep(
    alpha: f64,
    cells: &[(DyadicBand, DyadicBand)],
    parameter: &str,
    samples: usize,
    opts: &BilinearOptions,
) -> Result<BenchReport> {
    let mut all = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (band1, band2) in cells {
        let x = match parameter {
            "n_min" => band1.n.min(band2.n),
            "m_min" => band1.m.min(band2.m),
            "l_min" => band1.l.min(band2.l),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown sweep parameter {other:?} (expected n_min, m_min, or l_min)"
                )))
            }
        };
        let report = bench_bilinear_transverse(alpha, *band1, *band2, samples, opts)?;
        let window_l2 = |l: f64| (PI.sqrt() / l).sqrt();
        let input_norms = window_l2(band1.l) * window_l2(band2.l);
        let mean_lhs =
            report.samples.iter().map(|s| s.lhs).sum::<f64>() / report.samples.len() as f64;
        xs.push(x);
        ys.push(mean_lhs / input_norms);
        all.extend(report.samples);
    }
    let fit = fit_log2_slope(&xs, &ys)?;
    let mut report = BenchReport::new("bilinear_transverse", all)?;
    report.fits.push((parameter.to_string(), fit));
    Ok(report)
}

// ---------------------------------------------------------------------------
// Anisotropic Leibniz rule
// ---------------------------------------------------------------------------

/// Knobs of the Leibniz bench.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LeibnizOptions {
    /// Grid points per axis.
    pub grid_n: usize,
    pub lambda: f64,
    /// Polynomial decay rate of the sampled coefficients.
    pub decay: f64,
    /// Spectral band of the samples; defaults to the largest band whose
    /// squares are alias-free (`grid_n/4 − 1`).  Pin it when comparing runs
    /// across grid sizes.
    pub band_limit: Option<i64>,
    pub seed: u64,
}

impl Default for LeibnizOptions {
    fn default() -> Self {
        LeibnizOptions {
            grid_n: 48,
            lambda: 2.0,
            decay: 2.0,
            band_limit: None,
            seed: 0,
        }
    }
}

/// The transverse Hölder pairing `1/2 = 1/p + 1/q` supported by the
/// estimate.
fn leibniz_conjugate(p: usize) -> Result<usize> {
    match p {
        4 => Ok(4),
        6 => Ok(3),
        other => Err(Error::InvalidConfig(format!(
            "need p ∈ {{4, 6}} with conjugate 1/2 = 1/p + 1/q, got p = {other}"
        ))),
    }
}

/// Random real field with Gaussian coefficients decaying like
/// `⟨(ξ,η)⟩^{-decay}`, band-limited so that its square is alias-free.
fn decaying_field(
    grid: &Arc<Grid<f64>>,
    band: i64,
    decay: f64,
    seed: u64,
) -> Result<SpectralField<f64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid);
    let nu = grid.nu();
    let lambda = grid.lambda();
    for mx in 0..=band {
        for m1 in -band..=band {
            for m2 in -band..=band {
                // One representative per conjugate pair; no constant part.
                if mx == 0 && (m1 < 0 || (m1 == 0 && m2 <= 0)) {
                    continue;
                }
                let xi = mx as f64 / nu;
                let (e1, e2) = (m1 as f64 / lambda, m2 as f64 / lambda);
                let w = (1.0 + xi * xi + e1 * e1 + e2 * e2).powf(-decay / 2.0);
                let z = Complex::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ) * w;
                f.set_mode_pair((mx, m1, m2), z)?;
            }
        }
    }
    let l2 = f.l2_norm();
    f.scale(1.0 / l2);
    Ok(f)
}

/// Apply the Fourier multiplier `⟨ξ⟩^{sx}·⟨η⟩^{sy}`.
fn bessel_multiplier(f: &SpectralField<f64>, sx: f64, sy: f64) -> SpectralField<f64> {
    let grid = f.grid().clone();
    let mut g = f.clone();
    for ((i, j, k), c) in g.coeffs_mut().indexed_iter_mut() {
        let (xi, (e1, e2)) = grid.freq((i, j, k));
        let w = (1.0 + xi * xi).powf(sx / 2.0) * (1.0 + e1 * e1 + e2 * e2).powf(sy / 2.0);
        *c *= w;
    }
    g
}

/// Mixed norm of physical samples: inner `L^p` over the transverse plane of
/// every x-slice, then either `L²` (`outer_l2`) or a grid maximum over x.
fn mixed_norm(
    grid: &Arc<Grid<f64>>,
    phys: &ndarray::Array3<f64>,
    outer_l2: bool,
    p: usize,
) -> f64 {
    let (nx, ny1, ny2) = grid.shape();
    let cell_y = (2.0 * PI * grid.lambda()).powi(2) / (ny1 * ny2) as f64;
    let cell_x = 2.0 * PI * grid.nu() / nx as f64;
    let mut acc: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for i in 0..nx {
        let mut plane = 0.0;
        for j in 0..ny1 {
            for k in 0..ny2 {
                plane += phys[(i, j, k)].abs().powi(p as i32) * cell_y;
            }
        }
        let slice_norm = plane.powf(1.0 / p as f64);
        acc += slice_norm * slice_norm * cell_x;
        sup = sup.max(slice_norm);
    }
    if outer_l2 {
        acc.sqrt()
    } else {
        sup
    }
}

/// Left side and two-term right side of the Leibniz inequality for one
/// field whose square is alias-free on its grid.
fn leibniz_sides(
    u: &SpectralField<f64>,
    ax: f64,
    by: f64,
    delta: f64,
    p: usize,
    q: usize,
) -> Result<(f64, f64)> {
    let grid = u.grid().clone();
    let phys = u.to_physical();
    let squared = &phys * &phys;
    let usq = SpectralField::from_physical(&grid, &squared)?;
    let lhs = norm(&usq, &NormSpec::Sobolev { s1: ax, s2: by })?;
    let linf = phys.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let rhs1 = norm(u, &NormSpec::Sobolev { s1: ax, s2: by })? * linf;
    let g1 = bessel_multiplier(u, ax + delta, 0.0).to_physical();
    let g2 = bessel_multiplier(u, 0.0, by).to_physical();
    let rhs2 = mixed_norm(&grid, &g1, true, p) * mixed_norm(&grid, &g2, false, q);
    Ok((lhs, rhs1 + rhs2))
}

/// Bench the anisotropic Leibniz rule
/// `‖⟨∂_x⟩^a⟨∂_y⟩^b(u²)‖ ≤ ‖⟨∂_x⟩^a⟨∂_y⟩^b u‖·‖u‖_∞ +
/// ‖⟨∂_x⟩^{a+δ}u‖_{L²_xL^p_y}·‖⟨∂_y⟩^b u‖_{L^∞_xL^q_y}`.
pub fn bench_leibniz(
    ax: f64,
    by: f64,
    delta: f64,
    p: usize,
    samples: usize,
    opts: &LeibnizOptions,
) -> Result<BenchReport> {
    let q = leibniz_conjugate(p)?;
    if ax < 0.0 || by < 0.0 || delta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "need exponents a, b ≥ 0 and δ > 0, got ({ax}, {by}, {delta})"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    let grid = Grid::new(DomainSpec::new(
        opts.lambda,
        2.0,
        opts.grid_n,
        opts.grid_n,
        opts.grid_n,
    )?)?;
    let band = opts.band_limit.unwrap_or(opts.grid_n as i64 / 4 - 1).max(1);
    if 4 * band + 2 > opts.grid_n as i64 {
        return Err(Error::InvalidBand(format!(
            "band {band} squares alias on a grid of {} points per axis",
            opts.grid_n
        )));
    }
    let results: Vec<BenchSample> = (0..samples)
        .into_par_iter()
        .map(|idx| -> Result<BenchSample> {
            let seed = sample_seed(opts.seed, idx as u64);
            let u = decaying_field(&grid, band, opts.decay, seed)?;
            let (lhs, rhs) = leibniz_sides(&u, ax, by, delta, p, q)?;
            Ok(BenchSample {
                params: vec![
                    ("ax".into(), ax),
                    ("by".into(), by),
                    ("delta".into(), delta),
                    ("p".into(), p as f64),
                    ("grid_n".into(), opts.grid_n as f64),
                ],
                seed,
                lhs,
                rhs,
                ratio: lhs / rhs,
            })
        })
        .collect::<Result<_>>()?;
    BenchReport::new("anisotropic_leibniz", results)
}
