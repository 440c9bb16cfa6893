use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisRole {
    Space,
    Frequency,
}

impl AxisRole {
    pub fn flipped(self) -> Self {
        match self {
            AxisRole::Space => AxisRole::Frequency,
            AxisRole::Frequency => AxisRole::Space,
        }
    }
}

/// Complex samples over a grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: GridSpec,
    values: Vec<Complex64>,
    roles: Vec<AxisRole>,
}

impl SampledField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, roles: Vec<AxisRole>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if roles.len() != grid.rank() {
            return Err(Error::InvalidField(format!(
                "expected {} axis roles, got {}",
                grid.rank(),
                roles.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidField(format!("non-finite sample at flat index {pos}")));
        }
        Ok(SampledField { grid, values, roles })
    }

    pub(crate) fn from_parts_unchecked(
        grid: GridSpec,
        values: Vec<Complex64>,
        roles: Vec<AxisRole>,
    ) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        SampledField { grid, values, roles }
    }

    pub fn zeros(grid: GridSpec, roles: Vec<AxisRole>) -> Self {
        let n = grid.len();
        SampledField::from_parts_unchecked(grid, vec![Complex64::new(0.0, 0.0); n], roles)
    }

    /// Samples all axes as space axes.
    pub fn from_fn(grid: GridSpec, f: impl FnMut(&[f64]) -> Complex64) -> Result<Self> {
        let roles = vec![AxisRole::Space; grid.rank()];
        SampledField::from_fn_with_roles(grid, roles, f)
    }

    pub fn from_fn_with_roles(
        grid: GridSpec,
        roles: Vec<AxisRole>,
        mut f: impl FnMut(&[f64]) -> Complex64,
    ) -> Result<Self> {
        let rank = grid.rank();
        let mut idx = vec![0usize; rank];
        let mut x = vec![0.0; rank];
        let mut values = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            grid.unravel(flat, &mut idx);
            grid.coordinates_of(&idx, &mut x);
            values.push(f(&x));
        }
        SampledField::new(grid, values, roles)
    }

    /// A symbol grid field: axis 0 is space, the others frequency.
    pub fn symbol_from_fn(
        grid: GridSpec,
        mut f: impl FnMut(f64, f64, f64) -> Complex64,
    ) -> Result<Self> {
        if grid.rank() != 3 {
            return Err(Error::InvalidField(format!(
                "symbols need 3 axes, got {}",
                grid.rank()
            )));
        }
        let roles = vec![AxisRole::Space, AxisRole::Frequency, AxisRole::Frequency];
        SampledField::from_fn_with_roles(grid, roles, |c| f(c[0], c[1], c[2]))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.grid.rank()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn roles(&self) -> &[AxisRole] {
        &self.roles
    }

    pub fn with_roles(mut self, roles: Vec<AxisRole>) -> Result<Self> {
        if roles.len() != self.rank() {
            return Err(Error::InvalidField("role count does not match rank".into()));
        }
        self.roles = roles;
        Ok(self)
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.values[self.grid.ravel(idx)]
    }

    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> SampledField {
        let values = self.values.iter().map(|&v| f(v)).collect();
        SampledField::from_parts_unchecked(self.grid.clone(), values, self.roles.clone())
    }

    pub fn scaled(&self, c: Complex64) -> SampledField {
        self.map(|v| v * c)
    }

    pub fn zip_with(
        &self,
        other: &SampledField,
        mut f: impl FnMut(Complex64, Complex64) -> Complex64,
    ) -> Result<SampledField> {
        self.grid.ensure_same(&other.grid, "pointwise combination")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(SampledField::from_parts_unchecked(
            self.grid.clone(),
            values,
            self.roles.clone(),
        ))
    }

    pub fn add(&self, other: &SampledField) -> Result<SampledField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledField) -> Result<SampledField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &SampledField) -> Result<SampledField> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Discrete inner product weighted by the cell volume, conjugate-linear in `other`.
    pub fn inner(&self, other: &SampledField) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid, "inner product")?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Relative discrete l2 distance `|self - reference| / |reference|`.
    pub fn rel_l2_error(&self, reference: &SampledField) -> Result<f64> {
        let diff = self.sub(reference)?.norm_l2();
        let r = reference.norm_l2();
        Ok(if r > 0.0 { diff / r } else { diff })
    }

    pub fn max_abs_diff(&self, other: &SampledField) -> Result<f64> {
        self.grid.ensure_same(&other.grid, "comparison")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}
