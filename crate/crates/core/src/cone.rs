//! The conically constrained problem: objective, feasibility test, and
//! closed-form repair by projection.
//!
//! The feasible region is the second-order cone
//! `x_1 >= 0`, `x_1^2 - xi * sum_{k>=2} x_k^2 >= 0`; its boundary in the
//! `(x, r)` reduction is the line `r = x / sqrt(xi)`. The objective is the
//! first coordinate, minimized.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// The feasible region: dimension `n` and the cone-opening parameter `xi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeSpec {
    n: usize,
    xi: f64,
}

/// Position of a point in the `(x, r)` reduction: distance along the cone
/// axis and distance from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisCoords {
    /// Distance along the cone axis (the fitness value).
    pub x: f64,
    /// Distance from the cone axis, always `>= 0`.
    pub r: f64,
}

/// Errors from cone-geometry operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConeError {
    #[error("expected a vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("argument out of domain: {0}")]
    Domain(&'static str),
    #[error("invalid cone parameters: {0}")]
    InvalidSpec(&'static str),
}

impl ConeSpec {
    /// Creates a cone with dimension `n >= 2` and opening parameter `xi > 0`.
    pub fn new(n: usize, xi: f64) -> Result<Self, ConeError> {
        if n < 2 {
            return Err(ConeError::InvalidSpec("dimension must be at least 2"));
        }
        if !xi.is_finite() || xi <= 0.0 {
            return Err(ConeError::InvalidSpec("xi must be positive and finite"));
        }
        Ok(Self { n, xi })
    }

    /// Problem dimension `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cone-opening parameter `xi`.
    #[inline]
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `sqrt(xi)`, the boundary slope in the `(x, r)` plane.
    #[inline]
    pub fn sqrt_xi(&self) -> f64 {
        sqrt(self.xi)
    }

    /// Absolute tolerance used by the feasibility test to absorb
    /// floating-point noise in the quadratic constraint: the test accepts
    /// `x_1^2 - xi * ||tail||^2 >= -1e-12 * max(1, ||point||^2)`.
    #[inline]
    pub fn feasibility_tolerance(&self, point: &[f64]) -> f64 {
        let norm_sq: f64 = point.iter().map(|v| v * v).sum();
        1e-12 * norm_sq.max(1.0)
    }

    /// Tests membership in the feasible cone.
    pub fn is_feasible(&self, point: &[f64]) -> Result<bool, ConeError> {
        self.check_len(point)?;
        Ok(self.is_feasible_unchecked(point))
    }

    #[inline]
    pub(crate) fn is_feasible_unchecked(&self, point: &[f64]) -> bool {
        let x1 = point[0];
        if x1 < 0.0 {
            return false;
        }
        let tail_sq: f64 = point[1..].iter().map(|v| v * v).sum();
        let norm_sq = x1 * x1 + tail_sq;
        x1 * x1 - self.xi * tail_sq >= -1e-12 * norm_sq.max(1.0)
    }

    /// Returns the Euclidean-nearest feasible point.
    ///
    /// Feasible inputs are returned unchanged. Infeasible inputs are mapped
    /// onto the cone boundary, or to the apex (the zero vector) when the
    /// whole cone lies behind the point. A point on the negative axis
    /// (`||tail|| = 0`, `x_1 < 0`) falls into the apex branch naturally.
    pub fn project_onto_cone(&self, point: &[f64]) -> Result<Vec<f64>, ConeError> {
        self.check_len(point)?;
        let mut out = point.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// In-place variant of [`Self::project_onto_cone`] for hot loops; `point`
    /// must already have length `n`.
    pub(crate) fn project_in_place(&self, point: &mut [f64]) {
        if self.is_feasible_unchecked(point) {
            return;
        }
        let x1 = point[0];
        let tail_norm = sqrt(point[1..].iter().map(|v| v * v).sum());
        let sq = self.sqrt_xi();
        let height = x1 + tail_norm / sq;
        if sqrt(self.xi / (self.xi + 1.0)) * height <= 0.0 {
            point.fill(0.0);
            return;
        }
        let beta = self.xi / (self.xi + 1.0) * height;
        // tail_norm > 0 here: an infeasible point with tail_norm == 0 has
        // x_1 < 0 and was caught by the apex branch above.
        let scale = beta / (sq * tail_norm);
        point[0] = beta;
        for v in &mut point[1..] {
            *v *= scale;
        }
    }

    /// Distance from the axis at which the boundary sits for a given `x >= 0`:
    /// `r = x / sqrt(xi)`.
    pub fn boundary_r(&self, x: f64) -> Result<f64, ConeError> {
        if x < 0.0 {
            return Err(ConeError::Domain("boundary_r requires x >= 0"));
        }
        Ok(x / self.sqrt_xi())
    }

    /// Embeds `(x, r)` coordinates as the full-dimensional point
    /// `(x, r, 0, ..., 0)` (w.l.o.g. by rotational symmetry).
    pub fn embed(&self, x: f64, r: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        v[0] = x;
        v[1] = r;
        v
    }

    fn check_len(&self, point: &[f64]) -> Result<(), ConeError> {
        if point.len() != self.n {
            return Err(ConeError::Dimension {
                expected: self.n,
                got: point.len(),
            });
        }
        Ok(())
    }
}

/// Reduces a full-dimensional point to its `(x, r)` coordinates:
/// `x = point_1`, `r = ||point_{2..N}||`.
pub fn axis_coords(point: &[f64]) -> Result<AxisCoords, ConeError> {
    if point.len() < 2 {
        return Err(ConeError::Dimension {
            expected: 2,
            got: point.len(),
        });
    }
    Ok(AxisCoords {
        x: point[0],
        r: sqrt(point[1..].iter().map(|v| v * v).sum()),
    })
}
