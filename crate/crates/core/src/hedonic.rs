//! Goods-to-characteristics technology and the augmented objects used by the
//! dynamic tests.
//!
//! A `Technology` holds the J×K loading matrix `A`, an ordered subset of rows
//! that are habit forming, and the habit memory length `L`. From it we build
//! the augmented block matrix, augmented bundles (current characteristics plus
//! lagged habit components), and per-period active-good slices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HedonicError {
    #[error("technology must have at least one attribute row and one good column")]
    EmptyTechnology,
    #[error("habit row index {0} out of range (J = {1})")]
    HabitRowOutOfRange(usize, usize),
    #[error("habit rows must be distinct (row {0} repeated)")]
    DuplicateHabitRow(usize),
    #[error("lag count must be at least 1")]
    ZeroLags,
    #[error("technology matrix contains a non-finite entry at ({0}, {1})")]
    NonFiniteEntry(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no good is purchased in this period")]
    EmptyActiveSet,
    #[error("price missing for purchased good {0}")]
    MissingActivePrice(usize),
    #[error("attribute '{0}' not found in technology")]
    UnknownAttribute(String),
}

/// Time-invariant linear technology mapping K goods into J characteristics,
/// with `habit_rows` selecting the habit-forming characteristics (in the order
/// given, which fixes the coordinate convention for all augmented objects).
#[derive(Debug, Clone)]
pub struct Technology {
    a: DMatrix<f64>,
    a_habit: DMatrix<f64>,
    habit_rows: Vec<usize>,
    lags: usize,
    attribute_names: Vec<String>,
}

impl Technology {
    pub fn new(a: DMatrix<f64>, habit_rows: Vec<usize>, lags: usize) -> Result<Self, HedonicError> {
        let names = (0..a.nrows()).map(|j| format!("attr{j}")).collect();
        Self::with_names(a, habit_rows, lags, names)
    }

    pub fn with_names(
        a: DMatrix<f64>,
        habit_rows: Vec<usize>,
        lags: usize,
        attribute_names: Vec<String>,
    ) -> Result<Self, HedonicError> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(HedonicError::EmptyTechnology);
        }
        if lags == 0 {
            return Err(HedonicError::ZeroLags);
        }
        if attribute_names.len() != a.nrows() {
            return Err(HedonicError::DimensionMismatch {
                expected: a.nrows(),
                got: attribute_names.len(),
            });
        }
        for (j, row) in habit_rows.iter().enumerate() {
            if *row >= a.nrows() {
                return Err(HedonicError::HabitRowOutOfRange(*row, a.nrows()));
            }
            if habit_rows[..j].contains(row) {
                return Err(HedonicError::DuplicateHabitRow(*row));
            }
        }
        for j in 0..a.nrows() {
            for k in 0..a.ncols() {
                if !a[(j, k)].is_finite() {
                    return Err(HedonicError::NonFiniteEntry(j, k));
                }
            }
        }
        let a_habit = DMatrix::from_fn(habit_rows.len(), a.ncols(), |i, k| a[(habit_rows[i], k)]);
        Ok(Self {
            a,
            a_habit,
            habit_rows,
            lags,
            attribute_names,
        })
    }

    /// Identity technology over K goods (the goods-space models). `habit_goods`
    /// lists the goods treated as habit forming.
    pub fn identity(k: usize, habit_goods: Vec<usize>, lags: usize) -> Result<Self, HedonicError> {
        let names = (0..k).map(|i| format!("good{i}")).collect();
        Self::with_names(DMatrix::identity(k, k), habit_goods, lags, names)
    }

    pub fn j(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.a.ncols()
    }

    pub fn j2(&self) -> usize {
        self.habit_rows.len()
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    /// Dimension of the augmented characteristics space, J + L·J2.
    pub fn augmented_dim(&self) -> usize {
        self.j() + self.lags * self.j2()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The J2×K habit block A^a (rows of A selected by `habit_rows`).
    pub fn habit_matrix(&self) -> &DMatrix<f64> {
        &self.a_habit
    }

    pub fn habit_rows(&self) -> &[usize] {
        &self.habit_rows
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn is_identity(&self) -> bool {
        self.j() == self.k() && self.a == DMatrix::identity(self.j(), self.k())
    }

    /// z = A·x.
    pub fn characteristics(&self, x: &DVector<f64>) -> Result<DVector<f64>, HedonicError> {
        if x.len() != self.k() {
            return Err(HedonicError::DimensionMismatch {
                expected: self.k(),
                got: x.len(),
            });
        }
        Ok(&self.a * x)
    }

    /// Habit components z^a = A^a·x.
    pub fn habit_characteristics(&self, x: &DVector<f64>) -> Result<DVector<f64>, HedonicError> {
        if x.len() != self.k() {
            return Err(HedonicError::DimensionMismatch {
                expected: self.k(),
                got: x.len(),
            });
        }
        Ok(&self.a_habit * x)
    }

    /// The (J + L·J2) × ((L+1)·K) block matrix: `A` in the top-left corner and
    /// one `A^a` block per lag on the block diagonal below it.
    pub fn augmented_matrix(&self) -> DMatrix<f64> {
        let (j, k, j2, l) = (self.j(), self.k(), self.j2(), self.lags);
        let mut m = DMatrix::zeros(j + l * j2, (l + 1) * k);
        m.view_mut((0, 0), (j, k)).copy_from(&self.a);
        for lag in 1..=l {
            m.view_mut((j + (lag - 1) * j2, lag * k), (j2, k))
                .copy_from(&self.a_habit);
        }
        m
    }

    /// Augmented bundle from the current quantity vector and its L lags
    /// (`lagged[0]` is x_{t-1}, `lagged[L-1]` is x_{t-L}).
    pub fn augmented_bundle(
        &self,
        current: &DVector<f64>,
        lagged: &[DVector<f64>],
    ) -> Result<AugmentedBundle, HedonicError> {
        if lagged.len() != self.lags {
            return Err(HedonicError::DimensionMismatch {
                expected: self.lags,
                got: lagged.len(),
            });
        }
        let z = self.characteristics(current)?;
        let lags = lagged
            .iter()
            .map(|x| self.habit_characteristics(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AugmentedBundle { z, lags })
    }

    /// Active-good slice: the columns of A (and A^a) for goods purchased in
    /// strictly positive quantity, together with their prices. `prices[k]`
    /// must be `Some` for every active good.
    pub fn active_slice(
        &self,
        x: &DVector<f64>,
        prices: &[Option<f64>],
    ) -> Result<ActiveSlice, HedonicError> {
        if x.len() != self.k() {
            return Err(HedonicError::DimensionMismatch {
                expected: self.k(),
                got: x.len(),
            });
        }
        if prices.len() != self.k() {
            return Err(HedonicError::DimensionMismatch {
                expected: self.k(),
                got: prices.len(),
            });
        }
        let active: Vec<usize> = (0..self.k()).filter(|&k| x[k] > 0.0).collect();
        if active.is_empty() {
            return Err(HedonicError::EmptyActiveSet);
        }
        let mut rho = DVector::zeros(active.len());
        for (i, &k) in active.iter().enumerate() {
            rho[i] = prices[k].ok_or(HedonicError::MissingActivePrice(k))?;
        }
        Ok(self.slice_for(active, rho))
    }

    /// Build the slice directly from an active set and its price vector.
    pub fn slice_for(&self, active: Vec<usize>, rho_plus: DVector<f64>) -> ActiveSlice {
        let (j, j2, l) = (self.j(), self.j2(), self.lags);
        let kp = active.len();
        let b = DMatrix::from_fn(j, kp, |r, c| self.a[(r, active[c])]);
        let b_a = DMatrix::from_fn(j2, kp, |r, c| self.a_habit[(r, active[c])]);
        // B̃ = [B' | (B^a)' | ... | (B^a)'], one habit block per lag.
        let mut b_tilde = DMatrix::zeros(kp, j + l * j2);
        b_tilde.view_mut((0, 0), (kp, j)).copy_from(&b.transpose());
        let b_a_t = b_a.transpose();
        for lag in 1..=l {
            b_tilde
                .view_mut((0, j + (lag - 1) * j2), (kp, j2))
                .copy_from(&b_a_t);
        }
        ActiveSlice {
            active,
            b,
            b_a,
            b_tilde,
            rho_plus,
        }
    }
}

/// Current characteristics plus L lagged habit-component vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBundle {
    /// z_t = A·x_t in the natural row order of A.
    pub z: DVector<f64>,
    /// Lagged habit components, most recent lag first.
    pub lags: Vec<DVector<f64>>,
}

impl AugmentedBundle {
    pub fn dim(&self) -> usize {
        self.z.len() + self.lags.iter().map(DVector::len).sum::<usize>()
    }

    /// The stacked vector z̃ = (z_t, z^a_{t-1}, ..., z^a_{t-L}).
    pub fn stacked(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, self.z.len()).copy_from(&self.z);
        let mut offset = self.z.len();
        for lag in &self.lags {
            out.rows_mut(offset, lag.len()).copy_from(lag);
            offset += lag.len();
        }
        out
    }
}

/// Per-period selection of technology columns for purchased goods.
#[derive(Debug, Clone)]
pub struct ActiveSlice {
    /// Good indices with strictly positive demand, ascending.
    pub active: Vec<usize>,
    /// J × K⁺ contemporaneous block.
    pub b: DMatrix<f64>,
    /// J2 × K⁺ habit block.
    pub b_a: DMatrix<f64>,
    /// K⁺ × (J + L·J2) augmented technology matrix [B' | (B^a)' | ...].
    pub b_tilde: DMatrix<f64>,
    /// Prices of the active goods, in `active` order.
    pub rho_plus: DVector<f64>,
}

impl ActiveSlice {
    pub fn k_plus(&self) -> usize {
        self.active.len()
    }
}

/// On-disk description of a technology: which attribute columns of the
/// characteristics file to use and which of them are habit forming.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TechnologyConfig {
    pub attributes: Vec<String>,
    #[serde(default)]
    pub habit_attributes: Vec<String>,
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default)]
    pub matrix_source: Option<String>,
}

fn default_lags() -> usize {
    1
}

impl TechnologyConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Assemble the technology from a full attribute table (one row per
    /// attribute as named in `table_names`, K columns).
    pub fn build(
        &self,
        table_names: &[String],
        table: &DMatrix<f64>,
    ) -> Result<Technology, HedonicError> {
        let mut rows = Vec::with_capacity(self.attributes.len());
        for name in &self.attributes {
            let idx = table_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| HedonicError::UnknownAttribute(name.clone()))?;
            rows.push(idx);
        }
        let a = DMatrix::from_fn(rows.len(), table.ncols(), |r, c| table[(rows[r], c)]);
        let mut habit_rows = Vec::with_capacity(self.habit_attributes.len());
        for name in &self.habit_attributes {
            let idx = self
                .attributes
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| HedonicError::UnknownAttribute(name.clone()))?;
            habit_rows.push(idx);
        }
        Technology::with_names(a, habit_rows, self.lags, self.attributes.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tech_2x2_identity() -> Technology {
        Technology::new(DMatrix::identity(2, 2), vec![1], 1).unwrap()
    }

    #[test]
    fn augmented_matrix_one_lag_identity() {
        let tech = tech_2x2_identity();
        let m = tech.augmented_matrix();
        assert_eq!(m.shape(), (3, 4));
        let expected = DMatrix::from_row_slice(
            3,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        );
        assert_eq!(m, expected);
    }

    #[test]
    fn augmented_matrix_no_habits() {
        let tech = Technology::new(DMatrix::identity(2, 2), vec![], 1).unwrap();
        let m = tech.augmented_matrix();
        assert_eq!(m.shape(), (2, 4));
        assert_eq!(m.view((0, 0), (2, 2)), DMatrix::identity(2, 2));
        assert!(m.view((0, 2), (2, 2)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn augmented_bundle_stacks_current_and_lagged() {
        let tech = tech_2x2_identity();
        let z = tech
            .augmented_bundle(
                &DVector::from_vec(vec![1.0, 2.0]),
                &[DVector::from_vec(vec![3.0, 4.0])],
            )
            .unwrap();
        assert_eq!(z.stacked(), DVector::from_vec(vec![1.0, 2.0, 4.0]));
    }

    #[test]
    fn characteristics_matches_direct_product() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let tech = Technology::new(a, vec![], 1).unwrap();
        let z = tech
            .characteristics(&DVector::from_vec(vec![2.0, 3.0]))
            .unwrap();
        assert_relative_eq!(z[0], 5.0);
        let z0 = tech.characteristics(&DVector::zeros(2)).unwrap();
        assert_eq!(z0[0], 0.0);
    }

    #[test]
    fn characteristics_rejects_dimension_mismatch() {
        let tech = tech_2x2_identity();
        assert!(tech.characteristics(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn active_slice_selects_columns_in_order() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let tech = Technology::new(a, vec![1], 1).unwrap();
        let slice = tech
            .active_slice(
                &DVector::from_vec(vec![0.0, 5.0]),
                &[None, Some(7.0)],
            )
            .unwrap();
        assert_eq!(slice.active, vec![1]);
        assert_eq!(slice.b, DMatrix::from_column_slice(2, 1, &[2.0, 4.0]));
        assert_eq!(slice.b_a, DMatrix::from_column_slice(1, 1, &[4.0]));
        assert_eq!(slice.b_tilde, DMatrix::from_row_slice(1, 3, &[2.0, 4.0, 4.0]));
        assert_eq!(slice.rho_plus, DVector::from_vec(vec![7.0]));
    }

    #[test]
    fn active_slice_identity_no_habits_is_identity() {
        let tech = Technology::new(DMatrix::identity(2, 2), vec![], 1).unwrap();
        let slice = tech
            .active_slice(
                &DVector::from_vec(vec![1.0, 1.0]),
                &[Some(1.0), Some(2.0)],
            )
            .unwrap();
        assert_eq!(slice.b_tilde, DMatrix::identity(2, 2));
    }

    #[test]
    fn active_slice_missing_price_is_an_error() {
        let tech = tech_2x2_identity();
        let err = tech
            .active_slice(&DVector::from_vec(vec![1.0, 0.0]), &[None, Some(1.0)])
            .unwrap_err();
        assert!(matches!(err, HedonicError::MissingActivePrice(0)));
    }

    #[test]
    fn habit_rows_validation() {
        assert!(Technology::new(DMatrix::identity(2, 2), vec![2], 1).is_err());
        assert!(Technology::new(DMatrix::identity(2, 2), vec![0, 0], 1).is_err());
        assert!(Technology::new(DMatrix::identity(2, 2), vec![0], 0).is_err());
    }

    #[test]
    fn technology_config_builds_subset() {
        let table_names = vec!["sugar".to_string(), "sodium".to_string(), "fat".to_string()];
        let table = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let cfg = TechnologyConfig {
            attributes: vec!["sugar".into(), "fat".into()],
            habit_attributes: vec!["fat".into()],
            lags: 1,
            matrix_source: None,
        };
        let tech = cfg.build(&table_names, &table).unwrap();
        assert_eq!(tech.j(), 2);
        assert_eq!(tech.habit_rows(), &[1]);
        assert_eq!(tech.matrix()[(1, 1)], 6.0);
    }
}
