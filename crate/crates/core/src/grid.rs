//! Uniform grids in log-velocity and the quadratures that run on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n_points` equally spaced nodes on `[y_min, y_max]`, `y = ln v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDoc", into = "GridDoc")]
pub struct YGrid {
    pub y_min: f64,
    pub y_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    pub y_min: f64,
    pub y_max: f64,
    pub n_points: usize,
}

impl TryFrom<GridDoc> for YGrid {
    type Error = Error;

    fn try_from(d: GridDoc) -> Result<Self> {
        YGrid::new(d.y_min, d.y_max, d.n_points)
    }
}

impl From<YGrid> for GridDoc {
    fn from(g: YGrid) -> Self {
        GridDoc {
            y_min: g.y_min,
            y_max: g.y_max,
            n_points: g.n_points,
        }
    }
}

impl YGrid {
    pub fn new(y_min: f64, y_max: f64, n_points: usize) -> Result<Self> {
        if !y_min.is_finite() || !y_max.is_finite() || !(y_max > y_min) {
            return Err(Error::Invalid(format!(
                "grid bounds must be finite with y_min < y_max, got [{y_min}, {y_max}]"
            )));
        }
        if n_points < 2 {
            return Err(Error::Invalid(format!(
                "grid needs >= 2 points, got {n_points}"
            )));
        }
        Ok(YGrid {
            y_min,
            y_max,
            n_points,
        })
    }

    pub fn step(&self) -> f64 {
        (self.y_max - self.y_min) / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.y_max
        } else {
            self.y_min + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.node(i))
    }

    /// The same grid translated by `shift`.
    pub fn shifted(&self, shift: f64) -> YGrid {
        YGrid {
            y_min: self.y_min + shift,
            y_max: self.y_max + shift,
            n_points: self.n_points,
        }
    }
}

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * step * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_hit_both_ends() {
        let g = YGrid::new(-1.0, 2.0, 7).unwrap();
        assert_eq!(g.node(0), -1.0);
        assert_eq!(g.node(6), 2.0);
        assert!((g.step() - 0.5).abs() < 1e-15);
        assert_eq!(g.nodes().count(), 7);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(YGrid::new(1.0, 1.0, 10).is_err());
        assert!(YGrid::new(0.0, 1.0, 1).is_err());
        assert!(YGrid::new(f64::NAN, 1.0, 10).is_err());
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = YGrid::new(0.0, 2.0, 11).unwrap();
        let v: Vec<f64> = g.nodes().map(|y| 3.0 * y + 1.0).collect();
        assert!((trapezoid(&v, g.step()) - 8.0).abs() < 1e-14);
        let c = cumulative_trapezoid(&v, g.step());
        assert!((c[10] - 8.0).abs() < 1e-14);
        assert_eq!(c[0], 0.0);
    }
}
