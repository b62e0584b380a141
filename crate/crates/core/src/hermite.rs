//! Gauss–Hermite rules for `∫ e^{-t²} f(t) dt` over the real line.
//!
//! Nodes start as eigenvalues of the Jacobi matrix and are polished by Newton
//! iteration on the orthonormal Hermite recurrence; weights follow from the
//! derivative at each root, which keeps the tiny outer weights accurate to
//! full relative precision.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest supported order; the unscaled recurrence overflows beyond it.
pub const MAX_ORDER: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Invalid(format!(
                "Gauss-Hermite order must be in 1..={MAX_ORDER}, got {order}"
            )));
        }
        let n = order;
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        // Jacobi matrix eigenvalues as starting points, then Newton polish
        let mut nodes = jacobi_eigenvalues(n)?;
        let mut weights = vec![0.0; n];
        for (z, w) in nodes.iter_mut().zip(weights.iter_mut()) {
            for _ in 0..20 {
                let (p1, p2) = hermite_pair(n, *z, pim4);
                let dz = p1 / ((2.0 * nf).sqrt() * p2);
                *z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let pp = (2.0 * nf).sqrt() * hermite_pair(n, *z, pim4).1;
            *w = 2.0 / (pp * pp);
        }
        // exact symmetry
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let z = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -z;
            nodes[j] = z;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussHermite { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ e^{-t²} f(t) dt`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Ascending eigenvalues of the symmetric tridiagonal Hermite Jacobi matrix
/// (zero diagonal, off-diagonal `√(k/2)`), by implicit QL.
fn jacobi_eigenvalues(n: usize) -> Result<Vec<f64>> {
    let mut d = vec![0.0_f64; n];
    let mut e: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Invalid(format!(
                    "Gauss-Hermite eigenvalue iteration did not converge for order {n}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Orthonormal Hermite values `(h_n(z), h_{n-1}(z))`.
fn hermite_pair(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}
