use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform position grid symmetric about the origin, in units of the
/// ground-state width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionGrid {
    extent: f64,
    spacing: f64,
    points: Vec<f64>,
}

impl PositionGrid {
    /// Grid covering `[-extent, extent]` with the given spacing. The extent is
    /// rounded to a whole number of steps so that `0` is a grid point.
    pub fn new(extent: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {spacing}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid extent must be positive, got {extent}")));
        }
        let half = (extent / spacing).round().max(1.0) as usize;
        let points = (0..=2 * half).map(|i| (i as f64 - half as f64) * spacing).collect();
        Ok(Self { extent: half as f64 * spacing, spacing, points })
    }

    /// Default reconstruction grid for an `n_steps` walk with outer step `step`:
    /// extent `step * n_steps + 6`, spacing 0.1.
    pub fn for_walk(step: f64, n_steps: usize) -> Result<Self> {
        Self::new(step.abs() * n_steps as f64 + 6.0, 0.1)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point at the origin.
    pub fn center(&self) -> usize {
        self.points.len() / 2
    }

    /// Riemann sum of `values` over the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.spacing
    }

    pub fn moment(&self, density: &[f64], order: i32) -> f64 {
        self.points.iter().zip(density).map(|(x, p)| x.powi(order) * p).sum::<f64>() * self.spacing
    }
}

/// Total-variation distance `1/2 * integral |p - q|` between two densities on the same grid.
pub fn total_variation(grid: &PositionGrid, p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() * grid.spacing()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_symmetric_and_contains_origin() {
        let g = PositionGrid::new(3.0, 0.1).unwrap();
        assert_eq!(g.len(), 61);
        assert_eq!(g.points()[g.center()], 0.0);
        assert!((g.points()[0] + g.points()[60]).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(PositionGrid::new(3.0, 0.0).is_err());
        assert!(PositionGrid::new(-1.0, 0.1).is_err());
    }
}
