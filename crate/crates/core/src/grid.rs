//! Centered periodized lattices and their duals.
//!
//! An axis with half-width `L` and `N` points samples `[-L, L)` at
//! `x_j = -L + j*2L/N`. Its dual lattice is `xi_k = (k - N/2) * pi / L`,
//! which is again a centered axis with half-width `N*pi/(2L)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of axes a field may carry.
pub const MAX_RANK: usize = 6;

const SAME_GRID_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub half_width: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        let axis = AxisSpec { half_width, points };
        axis.validate()?;
        Ok(axis)
    }

    /// The axis whose dual has the same half-width, `L = sqrt(N pi / 2)`.
    pub fn balanced(points: usize) -> Result<Self> {
        AxisSpec::new((points as f64 * PI / 2.0).sqrt(), points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive and finite, got {}",
                self.half_width
            )));
        }
        if self.points < 2 || !self.points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "point count must be even and at least 2, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn dual(&self) -> AxisSpec {
        AxisSpec {
            half_width: self.points as f64 * PI / (2.0 * self.half_width),
            points: self.points,
        }
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coordinate(j)).collect()
    }

    /// Index of the sample at the origin.
    pub fn center(&self) -> usize {
        self.points / 2
    }

    /// Nearest sample index to `x`, clamped to the axis.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x + self.half_width) / self.spacing()).round();
        j.clamp(0.0, (self.points - 1) as f64) as usize
    }

    pub fn same_as(&self, other: &AxisSpec) -> bool {
        self.points == other.points
            && (self.half_width - other.half_width).abs()
                <= SAME_GRID_RTOL * self.half_width.max(other.half_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
}

impl GridSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_RANK {
            return Err(Error::InvalidGrid(format!(
                "rank must be between 1 and {MAX_RANK}, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(GridSpec { axes })
    }

    pub fn uniform(half_width: f64, points: usize, rank: usize) -> Result<Self> {
        let axis = AxisSpec::new(half_width, points)?;
        GridSpec::new(vec![axis; rank])
    }

    /// Grid for symbols a(x, xi, eta) of a function grid with one axis.
    pub fn symbol_grid(function_axis: AxisSpec) -> Result<Self> {
        let d = function_axis.dual();
        GridSpec::new(vec![function_axis, d, d])
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.rank()];
        for k in (0..self.rank().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].points;
        }
        s
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.rank() == other.rank() && self.axes.iter().zip(&other.axes).all(|(a, b)| a.same_as(b))
    }

    pub fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape_summary(),
                other.shape_summary()
            )))
        }
    }

    pub fn shape_summary(&self) -> Vec<(f64, usize)> {
        self.axes.iter().map(|a| (a.half_width, a.points)).collect()
    }

    /// The grid with the selected axes replaced by their duals.
    pub fn dual_on(&self, sel: &AxisSelection) -> GridSpec {
        let mut axes = self.axes.clone();
        for &k in sel.indices() {
            axes[k] = axes[k].dual();
        }
        GridSpec { axes }
    }

    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for k in (0..self.rank()).rev() {
            let n = self.axes[k].points;
            out[k] = flat % n;
            flat /= n;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.axes[k].points + i;
        }
        flat
    }

    pub fn coordinates_of(&self, idx: &[usize], out: &mut [f64]) {
        for (k, &i) in idx.iter().enumerate() {
            out[k] = self.axes[k].coordinate(i);
        }
    }
}

/// A nonempty strictly increasing list of axis positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisSelection {
    indices: Vec<usize>,
}

impl AxisSelection {
    pub fn new(indices: Vec<usize>, rank: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty axis selection".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "axis selection must be strictly increasing: {indices:?}"
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= rank) {
            return Err(Error::AxisOutOfRange { axis: bad, rank });
        }
        Ok(AxisSelection { indices })
    }

    pub fn all(rank: usize) -> Self {
        AxisSelection {
            indices: (0..rank).collect(),
        }
    }

    pub fn single(axis: usize, rank: usize) -> Result<Self> {
        AxisSelection::new(vec![axis], rank)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, axis: usize) -> bool {
        self.indices.contains(&axis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_spacing_product_is_two_pi_over_n() {
        let a = AxisSpec::new(12.0, 256).unwrap();
        let d = a.dual();
        assert!((a.spacing() * d.spacing() * 256.0 - 2.0 * PI).abs() < 1e-12);
        assert!((d.spacing() - PI / 12.0).abs() < 1e-15);
        assert!(d.dual().same_as(&a));
        assert_eq!(a.coordinate(a.center()), 0.0);
    }

    #[test]
    fn odd_points_rejected() {
        assert!(AxisSpec::new(1.0, 7).is_err());
        assert!(AxisSpec::new(0.0, 8).is_err());
        assert!(GridSpec::new(vec![]).is_err());
    }

    #[test]
    fn ravel_roundtrip() {
        let g = GridSpec::new(vec![
            AxisSpec::new(1.0, 4).unwrap(),
            AxisSpec::new(2.0, 6).unwrap(),
            AxisSpec::new(3.0, 2).unwrap(),
        ])
        .unwrap();
        let mut idx = [0; 3];
        for flat in 0..g.len() {
            g.unravel(flat, &mut idx);
            assert_eq!(g.ravel(&idx), flat);
        }
        assert_eq!(g.strides(), vec![12, 2, 1]);
    }

    #[test]
    fn selection_validation() {
        assert!(AxisSelection::new(vec![1, 0], 3).is_err());
        assert!(AxisSelection::new(vec![0, 3], 3).is_err());
        assert!(AxisSelection::new(vec![], 3).is_err());
        assert!(AxisSelection::new(vec![0, 2], 3).is_ok());
    }
}
