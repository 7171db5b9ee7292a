//! Domain geometry and the discrete dual lattice.
//!
//! The spatial domain is an anisotropic torus: circumference `2πν` in the
//! main (`x`) direction and `2πλ` in each of the two transverse (`y`)
//! directions, with `ν = λ^{2/(α+2)}` tied to the dispersion strength `α`.
//! Directions flagged as non-periodic are still realized as (large) tori;
//! the flags record which continuum regime a run approximates and feed the
//! constants of recorded estimates, nothing else.
//!
//! Dual lattice: `ξ ∈ (1/ν)ℤ`, `η ∈ (1/λ)ℤ²`, with the normalized counting
//! measure (weight `1/ν` per ξ-point and `1/λ` per η-point), which keeps
//! Plancherel's identity λ-independent.

use std::sync::Arc;

use ndarray::Array3;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Geometry of the (possibly rescaled) spatial domain and its discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec<R> {
    /// Transverse period scale λ ≥ 1; the y-periods are 2πλ.
    pub lambda: R,
    /// Dispersion exponent α ∈ [2, 4]; also fixes ν = λ^{2/(α+2)}.
    pub alpha: R,
    /// Grid size in x (even, ≥ 8).
    pub nx: usize,
    /// Grid size in the first y-direction (even, ≥ 8).
    pub ny1: usize,
    /// Grid size in the second y-direction (even, ≥ 8).
    pub ny2: usize,
    /// Whether x models 𝕋_ν (true) or a truncated ℝ (false). Reporting only.
    #[serde(default = "default_true")]
    pub x_periodic: bool,
    /// Whether y₁ models 𝕋_λ or a truncated ℝ. Affects only recorded
    /// estimate constants (the periodic-direction count d₂).
    #[serde(default = "default_true")]
    pub y1_periodic: bool,
    /// Same for y₂.
    #[serde(default = "default_true")]
    pub y2_periodic: bool,
}

fn default_true() -> bool {
    true
}

impl<R: Real> DomainSpec<R> {
    /// Fully periodic domain with the given scale, dispersion and sizes.
    pub fn new(lambda: R, alpha: R, nx: usize, ny1: usize, ny2: usize) -> Result<Self> {
        let spec = DomainSpec {
            lambda,
            alpha,
            nx,
            ny1,
            ny2,
            x_periodic: true,
            y1_periodic: true,
            y2_periodic: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Check all invariants (α and λ ranges, grid sizes even and ≥ 8).
    pub fn validate(&self) -> Result<()> {
        let two = R::cst(2.0);
        let four = R::cst(4.0);
        if !(self.alpha >= two && self.alpha <= four) {
            return Err(Error::InvalidDomain(format!(
                "alpha = {} outside [2, 4]",
                self.alpha
            )));
        }
        if !(self.lambda >= R::one()) || !self.lambda.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "lambda = {} must be finite and ≥ 1",
                self.lambda
            )));
        }
        for (name, n) in [("nx", self.nx), ("ny1", self.ny1), ("ny2", self.ny2)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidDomain(format!(
                    "{name} = {n} must be even and ≥ 8"
                )));
            }
        }
        Ok(())
    }

    /// Main-direction period scale ν = λ^{2/(α+2)}.
    pub fn nu(&self) -> R {
        self.lambda.powr(R::cst(2.0) / (self.alpha + R::cst(2.0)))
    }

    /// Total number of grid points.
    pub fn n_total(&self) -> usize {
        self.nx * self.ny1 * self.ny2
    }

    /// Array shape `(nx, ny1, ny2)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nx, self.ny1, self.ny2)
    }

    /// Number of periodic transverse directions (the `d₂` of recorded
    /// estimates; 2 on the fully periodic domain).
    pub fn periodic_y_count(&self) -> usize {
        usize::from(self.y1_periodic) + usize::from(self.y2_periodic)
    }
}

/// Signed FFT mode index: `0, 1, …, n/2−1, −n/2, …, −1`.
#[inline]
pub fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Inverse of [`signed_mode`]: array index of a signed mode, if on the grid.
#[inline]
pub fn mode_index(m: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if m >= -half && m < half {
        Some(m.rem_euclid(n as i64) as usize)
    } else {
        None
    }
}

/// FFT plans for one axis length.
struct AxisPlans<R: Real> {
    forward: Arc<dyn Fft<R>>,
    inverse: Arc<dyn Fft<R>>,
}

/// Precomputed dual-lattice tables, quadrature weights and FFT plans for a
/// [`DomainSpec`]. Immutable after construction; share via [`Arc`].
pub struct Grid<R: Real> {
    spec: DomainSpec<R>,
    nu: R,
    /// ξ value per x-index, FFT layout.
    xi: Vec<R>,
    /// η₁ value per y₁-index, FFT layout.
    eta1: Vec<R>,
    /// η₂ value per y₂-index, FFT layout.
    eta2: Vec<R>,
    /// Physical volume of one grid cell: (2π)³νλ²/(nx·ny1·ny2).
    cell_volume: R,
    /// Dual-measure weight per lattice point: 1/(νλ²).
    dual_weight: R,
    /// 2/3-rule dealias mask (1 inside the kept band, 0 outside).
    dealias: Array3<R>,
    plans_x: AxisPlans<R>,
    plans_y1: AxisPlans<R>,
    plans_y2: AxisPlans<R>,
}

impl<R: Real> std::fmt::Debug for Grid<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl<R: Real> Grid<R> {
    /// Build dual-lattice tables and FFT plans for a validated spec.
    pub fn new(spec: DomainSpec<R>) -> Result<Arc<Self>> {
        spec.validate()?;
        let nu = spec.nu();
        let lambda = spec.lambda;

        let freq_axis = |n: usize, scale: R| -> Vec<R> {
            (0..n)
                .map(|i| R::from_i64(signed_mode(i, n)).unwrap() / scale)
                .collect()
        };
        let xi = freq_axis(spec.nx, nu);
        let eta1 = freq_axis(spec.ny1, lambda);
        let eta2 = freq_axis(spec.ny2, lambda);

        let two_pi = R::cst(2.0) * R::PI();
        let cell_volume =
            two_pi * two_pi * two_pi * nu * lambda * lambda / R::of_usize(spec.n_total());
        let dual_weight = (nu * lambda * lambda).recip();

        let mut dealias = Array3::zeros(spec.shape());
        let keep = |i: usize, n: usize| 3 * signed_mode(i, n).unsigned_abs() < n as u64;
        for ((i, j, k), v) in dealias.indexed_iter_mut() {
            if keep(i, spec.nx) && keep(j, spec.ny1) && keep(k, spec.ny2) {
                *v = R::one();
            }
        }

        let mut planner = FftPlanner::new();
        let mut axis_plans = |n: usize| AxisPlans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        let plans_x = axis_plans(spec.nx);
        let plans_y1 = axis_plans(spec.ny1);
        let plans_y2 = axis_plans(spec.ny2);

        Ok(Arc::new(Grid {
            spec,
            nu,
            xi,
            eta1,
            eta2,
            cell_volume,
            dual_weight,
            dealias,
            plans_x,
            plans_y1,
            plans_y2,
        }))
    }

    pub fn spec(&self) -> &DomainSpec<R> {
        &self.spec
    }

    pub fn nu(&self) -> R {
        self.nu
    }

    pub fn lambda(&self) -> R {
        self.spec.lambda
    }

    pub fn alpha(&self) -> R {
        self.spec.alpha
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.spec.shape()
    }

    pub fn n_total(&self) -> usize {
        self.spec.n_total()
    }

    /// ξ of the x-index `i`.
    #[inline]
    pub fn xi(&self, i: usize) -> R {
        self.xi[i]
    }

    /// η₁ of the y₁-index `j`.
    #[inline]
    pub fn eta1(&self, j: usize) -> R {
        self.eta1[j]
    }

    /// η₂ of the y₂-index `k`.
    #[inline]
    pub fn eta2(&self, k: usize) -> R {
        self.eta2[k]
    }

    /// Frequency pair (ξ, η) of an array index.
    #[inline]
    pub fn freq(&self, idx: (usize, usize, usize)) -> (R, (R, R)) {
        (self.xi[idx.0], (self.eta1[idx.1], self.eta2[idx.2]))
    }

    /// All ξ values in FFT layout.
    pub fn xi_values(&self) -> &[R] {
        &self.xi
    }

    pub fn eta1_values(&self) -> &[R] {
        &self.eta1
    }

    pub fn eta2_values(&self) -> &[R] {
        &self.eta2
    }

    /// Physical x-coordinate of grid index `i`: `2πν i / nx`.
    pub fn x(&self, i: usize) -> R {
        R::cst(2.0) * R::PI() * self.nu * R::of_usize(i) / R::of_usize(self.spec.nx)
    }

    /// Physical y₁-coordinate of grid index `j`.
    pub fn y1(&self, j: usize) -> R {
        R::cst(2.0) * R::PI() * self.spec.lambda * R::of_usize(j) / R::of_usize(self.spec.ny1)
    }

    /// Physical y₂-coordinate of grid index `k`.
    pub fn y2(&self, k: usize) -> R {
        R::cst(2.0) * R::PI() * self.spec.lambda * R::of_usize(k) / R::of_usize(self.spec.ny2)
    }

    /// Physical volume of one grid cell.
    pub fn cell_volume(&self) -> R {
        self.cell_volume
    }

    /// Dual-measure weight of one lattice point (normalized counting measure).
    pub fn dual_weight(&self) -> R {
        self.dual_weight
    }

    /// Physical volume of the whole domain, (2π)³νλ².
    pub fn volume(&self) -> R {
        self.cell_volume * R::of_usize(self.n_total())
    }

    /// The 2/3-rule dealias mask (quadratic nonlinearity), all three axes.
    pub fn dealias_mask(&self) -> &Array3<R> {
        &self.dealias
    }

    /// True if the two grids discretize the same domain.
    pub fn same_grid(&self, other: &Grid<R>) -> bool {
        self.spec == other.spec
    }

    pub(crate) fn plan_x(&self, forward: bool) -> &Arc<dyn Fft<R>> {
        if forward {
            &self.plans_x.forward
        } else {
            &self.plans_x.inverse
        }
    }

    pub(crate) fn plan_y1(&self, forward: bool) -> &Arc<dyn Fft<R>> {
        if forward {
            &self.plans_y1.forward
        } else {
            &self.plans_y1.inverse
        }
    }

    pub(crate) fn plan_y2(&self, forward: bool) -> &Arc<dyn Fft<R>> {
        if forward {
            &self.plans_y2.forward
        } else {
            &self.plans_y2.inverse
        }
    }
}
