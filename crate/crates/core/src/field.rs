//! Real scalar fields on the torus, stored by their Fourier coefficients.
//!
//! Coefficients approximate the continuum transform
//! `û(ξ,η) = ∫ e^{−i(xξ + y·η)} u(x,y) dx dy`:
//! a coefficient equals the grid cell volume times the unnormalized DFT of
//! the physical samples. Under the normalized counting measure on the dual
//! lattice this makes Plancherel hold with the λ-independent constant
//! `‖u‖_{L²} = (2π)^{−3/2} ‖û‖`.

use std::sync::Arc;

use ndarray::{Array3, Axis, Zip};
use num_complex::Complex;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A real field in spectral representation on a shared [`Grid`].
#[derive(Debug, Clone)]
pub struct SpectralField<R: Real> {
    grid: Arc<Grid<R>>,
    coeffs: Array3<Complex<R>>,
}

impl<R: Real> SpectralField<R> {
    /// The zero field.
    pub fn zeros(grid: &Arc<Grid<R>>) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: Array3::zeros(grid.shape()),
        }
    }

    /// Forward transform of physical samples (shape must match the grid).
    pub fn from_physical(grid: &Arc<Grid<R>>, samples: &Array3<R>) -> Result<Self> {
        if samples.dim() != grid.shape() {
            return Err(Error::GridMismatch(format!(
                "sample shape {:?} vs grid {:?}",
                samples.dim(),
                grid.shape()
            )));
        }
        let mut coeffs = samples.mapv(|v| Complex::new(v, R::zero()));
        transform_in_place(grid, &mut coeffs, true);
        let cv = grid.cell_volume();
        coeffs.mapv_inplace(|c| c * cv);
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Wrap an existing coefficient array (shape must match the grid).
    pub fn from_coeffs(grid: &Arc<Grid<R>>, coeffs: Array3<Complex<R>>) -> Result<Self> {
        if coeffs.dim() != grid.shape() {
            return Err(Error::GridMismatch(format!(
                "coefficient shape {:?} vs grid {:?}",
                coeffs.dim(),
                grid.shape()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Inverse transform to physical samples (real part; the imaginary part
    /// is zero for Hermitian-symmetric coefficients).
    pub fn to_physical(&self) -> Array3<R> {
        let mut work = self.coeffs.clone();
        transform_in_place(&self.grid, &mut work, false);
        let scale = (self.grid.cell_volume() * R::of_usize(self.grid.n_total())).recip();
        work.mapv(|c| c.re * scale)
    }

    pub fn grid(&self) -> &Arc<Grid<R>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array3<Complex<R>> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array3<Complex<R>> {
        &mut self.coeffs
    }

    /// Physical L² norm via Plancherel (fixed summation order).
    pub fn l2_norm(&self) -> R {
        let sum = self
            .coeffs
            .iter()
            .fold(R::zero(), |acc, c| acc + c.norm_sqr());
        let two_pi = R::cst(2.0) * R::PI();
        (sum * self.grid.dual_weight() / (two_pi * two_pi * two_pi)).sqrt()
    }

    /// Maximum |coefficient|.
    pub fn max_coeff_modulus(&self) -> R {
        self.coeffs
            .iter()
            .fold(R::zero(), |acc, c| acc.max(c.norm()))
    }

    /// Maximum |u| over the physical grid (one inverse transform).
    pub fn linf_physical(&self) -> R {
        self.to_physical()
            .iter()
            .fold(R::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Zero the ξ=0 plane (the x-average of every transverse line).
    pub fn project_mean_zero(&mut self) {
        for c in self.coeffs.index_axis_mut(Axis(0), 0).iter_mut() {
            *c = Complex::zero();
        }
    }

    /// Largest |coefficient| on the ξ=0 plane.
    pub fn mean_zero_defect(&self) -> R {
        self.coeffs
            .index_axis(Axis(0), 0)
            .iter()
            .fold(R::zero(), |acc, c| acc.max(c.norm()))
    }

    /// Largest |c(k) − conj(c(−k))| over the lattice (0 for real fields).
    pub fn hermitian_defect(&self) -> R {
        let (nx, ny1, ny2) = self.grid.shape();
        let mut worst = R::zero();
        for ((i, j, k), c) in self.coeffs.indexed_iter() {
            let mi = (nx - i) % nx;
            let mj = (ny1 - j) % ny1;
            let mk = (ny2 - k) % ny2;
            let mirror = self.coeffs[(mi, mj, mk)];
            worst = worst.max((*c - mirror.conj()).norm());
        }
        worst
    }

    /// Multiply in place by `s`.
    pub fn scale(&mut self, s: R) {
        self.coeffs.mapv_inplace(|c| c * s);
    }

    /// `self += s · other` (grids must match).
    pub fn add_scaled(&mut self, other: &SpectralField<R>, s: R) {
        debug_assert!(self.grid.same_grid(&other.grid));
        Zip::from(&mut self.coeffs)
            .and(&other.coeffs)
            .for_each(|a, &b| *a += b * s);
    }

    /// Pointwise multiply coefficients by a real mask array.
    pub fn apply_real_mask(&mut self, mask: &Array3<R>) {
        debug_assert_eq!(self.coeffs.dim(), mask.dim());
        Zip::from(&mut self.coeffs)
            .and(mask)
            .for_each(|c, &m| *c *= m);
    }

    /// Relative L² distance ‖a−b‖/max(‖a‖,‖b‖); 0 if both vanish.
    pub fn relative_l2_distance(a: &SpectralField<R>, b: &SpectralField<R>) -> R {
        debug_assert!(a.grid.same_grid(&b.grid));
        let mut diff = R::zero();
        let mut na = R::zero();
        let mut nb = R::zero();
        Zip::from(&a.coeffs).and(&b.coeffs).for_each(|&x, &y| {
            diff += (x - y).norm_sqr();
            na += x.norm_sqr();
            nb += y.norm_sqr();
        });
        let denom = na.max(nb).sqrt();
        if denom == R::zero() {
            R::zero()
        } else {
            diff.sqrt() / denom
        }
    }

    /// Set the coefficient of the signed mode `(mx, my1, my2)`.
    ///
    /// Returns an error if the mode is off the grid. Does not touch the
    /// mirror mode; see [`SpectralField::set_mode_pair`] for real fields.
    pub fn set_mode(&mut self, mode: (i64, i64, i64), value: Complex<R>) -> Result<()> {
        let idx = self.mode_to_index(mode)?;
        self.coeffs[idx] = value;
        Ok(())
    }

    /// Set a conjugate pair of modes, keeping the field real:
    /// `c(m) = value`, `c(−m) = conj(value)`.
    pub fn set_mode_pair(&mut self, mode: (i64, i64, i64), value: Complex<R>) -> Result<()> {
        self.set_mode(mode, value)?;
        self.set_mode((-mode.0, -mode.1, -mode.2), value.conj())
    }

    fn mode_to_index(&self, mode: (i64, i64, i64)) -> Result<(usize, usize, usize)> {
        let (nx, ny1, ny2) = self.grid.shape();
        let err = || {
            Error::InvalidBand(format!(
                "mode {:?} not representable on grid {:?}",
                mode,
                self.grid.shape()
            ))
        };
        let i = crate::domain::mode_index(mode.0, nx).ok_or_else(err)?;
        let j = crate::domain::mode_index(mode.1, ny1).ok_or_else(err)?;
        let k = crate::domain::mode_index(mode.2, ny2).ok_or_else(err)?;
        Ok((i, j, k))
    }
}

/// Hermitian Gaussian field with unit L², supported in the sharp annuli
/// `|ξ| ∈ [N/2, 2N]`, `|η| ∈ [M/2, 2M]`; deterministic per seed.
///
/// `n` and `m` must be powers of two (2^k, k possibly negative). Modes on a
/// Nyquist index are excluded so the field stays well inside the grid.
pub fn random_band_field<R: Real>(
    grid: &Arc<Grid<R>>,
    n: f64,
    m: f64,
    seed: u64,
) -> Result<SpectralField<R>>
where
    StandardNormal: Distribution<R>,
{
    if !is_dyadic(n) || !is_dyadic(m) {
        return Err(Error::InvalidBand(format!(
            "band parameters must be powers of two, got N={n}, M={m}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut field = SpectralField::zeros(grid);
    let (nx, ny1, ny2) = grid.shape();
    let (n_lo, n_hi) = (R::cst(n / 2.0), R::cst(2.0 * n));
    let (m_lo, m_hi) = (R::cst(m / 2.0), R::cst(2.0 * m));

    let mut in_band = 0usize;
    for ((i, j, k), c) in field.coeffs.indexed_iter_mut() {
        if i == nx / 2 || j == ny1 / 2 || k == ny2 / 2 {
            continue; // Nyquist excluded
        }
        let xi = grid.xi(i).abs();
        let eta = (grid.eta1(j).powi(2) + grid.eta2(k).powi(2)).sqrt();
        if xi >= n_lo && xi <= n_hi && eta >= m_lo && eta <= m_hi {
            let re: R = StandardNormal.sample(&mut rng);
            let im: R = StandardNormal.sample(&mut rng);
            *c = Complex::new(re, im);
            in_band += 1;
        }
    }
    if in_band == 0 {
        return Err(Error::InvalidBand(format!(
            "annulus |ξ|∈[{n}/2,2·{n}], |η|∈[{m}/2,2·{m}] contains no lattice point on grid {:?} (λ={})",
            grid.shape(),
            grid.lambda(),
        )));
    }

    symmetrize_hermitian(&mut field);
    let norm = field.l2_norm();
    field.scale(norm.recip());
    Ok(field)
}

/// Overwrite the mirror half of the lattice with conjugates so the physical
/// field is real; self-conjugate modes keep only their real part.
pub fn symmetrize_hermitian<R: Real>(field: &mut SpectralField<R>) {
    let (nx, ny1, ny2) = field.grid.shape();
    for i in 0..nx {
        let mi = (nx - i) % nx;
        for j in 0..ny1 {
            let mj = (ny1 - j) % ny1;
            for k in 0..ny2 {
                let mk = (ny2 - k) % ny2;
                let src = (i, j, k);
                let dst = (mi, mj, mk);
                if src < dst {
                    field.coeffs[dst] = field.coeffs[src].conj();
                } else if src == dst {
                    field.coeffs[src] = Complex::new(field.coeffs[src].re, R::zero());
                }
            }
        }
    }
}

/// True for finite powers of two (positive or negative exponent).
pub fn is_dyadic(v: f64) -> bool {
    v.is_finite() && v > 0.0 && {
        let mantissa_bits = v.to_bits() & ((1u64 << 52) - 1);
        mantissa_bits == 0
    }
}

/// In-place 3-axis (I)FFT; forward is unnormalized, inverse carries the
/// 1/n factor at the call site. Lanes are processed in a fixed order so
/// results are bit-reproducible.
fn transform_in_place<R: Real>(grid: &Grid<R>, data: &mut Array3<Complex<R>>, forward: bool) {
    let plans = [
        grid.plan_x(forward).clone(),
        grid.plan_y1(forward).clone(),
        grid.plan_y2(forward).clone(),
    ];
    for (axis, plan) in plans.iter().enumerate() {
        let mut scratch = vec![Complex::zero(); plan.get_inplace_scratch_len()];
        let lane_len = data.shape()[axis];
        let mut buf: Vec<Complex<R>> = vec![Complex::zero(); lane_len];
        for mut lane in data.lanes_mut(Axis(axis)) {
            if let Some(slice) = lane.as_slice_mut() {
                plan.process_with_scratch(slice, &mut scratch);
            } else {
                for (b, &src) in buf.iter_mut().zip(lane.iter()) {
                    *b = src;
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for (dst, &b) in lane.iter_mut().zip(buf.iter()) {
                    *dst = b;
                }
            }
        }
    }
}
