//! Structural margin: can observed active-good prices be represented as
//! characteristic shadow prices at all?
//!
//! The spanning condition requires ρ_t⁺ to lie in the column space of the
//! augmented technology matrix B̃_t. Because the habit blocks of B̃_t are rows
//! of B_t, col(B̃_t) = col(B_t'), so all diagnostics here are computed from
//! the contemporaneous block alone; this keeps the statistic identical across
//! habit partitions sharing the same A.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::hedonic::ActiveSlice;

/// Singular values below `rank_tol`·σ_max count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// A date passes the spanning check when its relative residual is below this.
pub const DEFAULT_NC_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum StructuralError {
    #[error("active price vector is zero; distance undefined")]
    DegeneratePrices,
    #[error("no exact shadow-price solution: prices lie outside the technology span")]
    NoExactSolution,
}

fn svd_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Rank condition (NC): rank([B̃_t | ρ_t⁺]) = rank(B̃_t).
pub fn rank_condition(slice: &ActiveSlice, tol: f64) -> bool {
    let r_b = svd_rank(&slice.b_tilde, tol);
    let mut augmented = DMatrix::zeros(slice.k_plus(), slice.b_tilde.ncols() + 1);
    augmented
        .view_mut((0, 0), (slice.k_plus(), slice.b_tilde.ncols()))
        .copy_from(&slice.b_tilde);
    augmented
        .view_mut((0, slice.b_tilde.ncols()), (slice.k_plus(), 1))
        .copy_from(&slice.rho_plus);
    svd_rank(&augmented, tol) == r_b
}

/// Orthonormal basis for the column space of `m`, via SVD at `tol`·σ_max.
/// Returns `None` when the column space is all of R^rows (residuals are then
/// identically zero).
fn column_space_basis(m: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let rows = m.nrows();
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return Some(DMatrix::zeros(rows, 0));
    }
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax)
        .collect();
    if cols.len() == rows {
        return None;
    }
    let mut basis = DMatrix::zeros(rows, cols.len());
    for (out, &i) in cols.iter().enumerate() {
        basis.set_column(out, &u.column(i));
    }
    Some(basis)
}

/// Relative residual of ρ_t⁺ after orthogonal projection onto the hedonic
/// price span: d_t = ‖ρ⁺ − Pρ⁺‖₂ / ‖ρ⁺‖₂ ∈ [0, 1]. Zero exactly on the
/// manifold; projection is onto col(B_t'), which equals col(B̃_t).
pub fn distance_to_manifold(slice: &ActiveSlice) -> Result<f64, StructuralError> {
    let norm = slice.rho_plus.norm();
    if norm == 0.0 {
        return Err(StructuralError::DegeneratePrices);
    }
    let basis = match column_space_basis(&slice.b.transpose(), DEFAULT_RANK_TOL) {
        None => return Ok(0.0),
        Some(b) => b,
    };
    Ok(residual_distance(&basis, &slice.rho_plus))
}

/// Distance given a precomputed orthonormal basis (`None` means full span).
/// Used by the simulation pipeline, which evaluates many price draws against
/// the same active set.
pub fn distance_with_basis(
    basis: Option<&DMatrix<f64>>,
    rho_plus: &DVector<f64>,
) -> Result<f64, StructuralError> {
    let norm = rho_plus.norm();
    if norm == 0.0 {
        return Err(StructuralError::DegeneratePrices);
    }
    match basis {
        None => Ok(0.0),
        Some(b) => Ok(residual_distance(b, rho_plus)),
    }
}

/// Basis of col(B_t') suitable for `distance_with_basis`.
pub fn projection_basis(slice: &ActiveSlice) -> Option<DMatrix<f64>> {
    column_space_basis(&slice.b.transpose(), DEFAULT_RANK_TOL)
}

fn residual_distance(basis: &DMatrix<f64>, rho: &DVector<f64>) -> f64 {
    let coeffs = basis.transpose() * rho;
    let residual = rho - basis * coeffs;
    (residual.norm() / rho.norm()).clamp(0.0, 1.0)
}

/// Minimum-norm solution θ of B̃_t·θ = ρ_t⁺ (the stacked shadow-price
/// candidate [π_t^0; π_{t+1}^1; ...]). Any other solution differs by an
/// element of the null space of B̃_t.
pub fn solve_shadow_prices(slice: &ActiveSlice, tol: f64) -> Result<DVector<f64>, StructuralError> {
    if !rank_condition(slice, tol) {
        return Err(StructuralError::NoExactSolution);
    }
    let svd = slice.b_tilde.clone().svd(true, true);
    let theta = svd
        .solve(&slice.rho_plus, tol * svd.singular_values.max())
        .map_err(|_| StructuralError::NoExactSolution)?;
    Ok(theta)
}

/// Per-date spanning outcome for one household.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StructuralVerdict {
    /// 1-based evaluated dates (the interior dates t = 2..T-1).
    pub dates: Vec<usize>,
    pub distances: Vec<f64>,
    pub nc_pass: Vec<bool>,
    /// Equal-weight mean of the per-date distances.
    pub household_distance: f64,
}

impl StructuralVerdict {
    pub fn all_pass(&self) -> bool {
        self.nc_pass.iter().all(|&b| b)
    }

    pub fn from_distances(dates: Vec<usize>, distances: Vec<f64>, nc_tol: f64) -> Self {
        let nc_pass = distances.iter().map(|&d| d <= nc_tol).collect();
        let mean = if distances.is_empty() {
            0.0
        } else {
            distances.iter().sum::<f64>() / distances.len() as f64
        };
        StructuralVerdict {
            dates,
            distances,
            nc_pass,
            household_distance: mean,
        }
    }
}
