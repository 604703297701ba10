//! Piecewise-Chebyshev tabulation of matrix-valued functions along a ray.
//!
//! Kernel synthesis evaluates E_alpha(w * A) or exp(w * A) for one fixed
//! matrix direction A and a large set of nonnegative scalars w (one per
//! frequency node and time). Tabulating each matrix entry on dyadic panels
//! with a degree-`DEG` Chebyshev fit turns every evaluation into a short
//! Clenshaw sum while keeping absolute accuracy near machine precision.

use super::linalg::{C64, CMatrix};

const DEG: usize = 24;

pub struct RayTable {
    n: usize,
    /// left edge of the first dyadic panel; [0, first_edge] is panel 0
    first_edge: f64,
    edges: Vec<f64>,
    /// coeffs[panel][k] is the k-th Chebyshev coefficient matrix on that panel
    coeffs: Vec<Vec<CMatrix>>,
    /// closure fallback beyond the last edge
    tail: Box<dyn Fn(f64) -> CMatrix + Sync + Send>,
}

fn cheb_nodes() -> Vec<f64> {
    (0..=DEG)
        .map(|j| (std::f64::consts::PI * j as f64 / DEG as f64).cos())
        .collect()
}

/// Chebyshev coefficients from values at the DEG+1 extrema nodes (type-1 fit).
fn cheb_fit(values: &[CMatrix]) -> Vec<CMatrix> {
    let m = DEG;
    let n = values[0].nrows();
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let mut acc = CMatrix::zeros(n, values[0].ncols());
        for (j, v) in values.iter().enumerate() {
            let mut w = (std::f64::consts::PI * (j * k) as f64 / m as f64).cos();
            if j == 0 || j == m {
                w *= 0.5;
            }
            acc += v * C64::new(w, 0.0);
        }
        let scale = if k == 0 || k == m { 1.0 / m as f64 } else { 2.0 / m as f64 };
        out.push(acc * C64::new(scale, 0.0));
    }
    out
}

fn clenshaw(coeffs: &[CMatrix], x: f64, n: usize, ncols: usize) -> CMatrix {
    let mut b1 = CMatrix::zeros(n, ncols);
    let mut b2 = CMatrix::zeros(n, ncols);
    for k in (1..coeffs.len()).rev() {
        let b0 = &coeffs[k] + &b1 * C64::new(2.0 * x, 0.0) - &b2;
        b2 = std::mem::replace(&mut b1, b0);
    }
    &coeffs[0] + &b1 * C64::new(x, 0.0) - &b2
}

impl RayTable {
    /// Tabulate `f` on [0, w_max]; `tail` is used for w > w_max.
    pub fn build<F>(
        f: F,
        first_edge: f64,
        w_max: f64,
        tail: Box<dyn Fn(f64) -> CMatrix + Sync + Send>,
    ) -> Self
    where
        F: Fn(f64) -> CMatrix,
    {
        assert!(first_edge > 0.0 && w_max > first_edge);
        let mut edges = vec![first_edge];
        while *edges.last().unwrap() < w_max {
            let next = edges.last().unwrap() * 2.0;
            edges.push(next);
        }
        let nodes = cheb_nodes();
        let mut coeffs = Vec::with_capacity(edges.len());
        let mut n = 0;
        for (p, hi) in edges.iter().enumerate() {
            let lo = if p == 0 { 0.0 } else { edges[p - 1] };
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let values: Vec<CMatrix> = nodes.iter().map(|&t| f(mid + half * t)).collect();
            n = values[0].nrows();
            coeffs.push(cheb_fit(&values));
        }
        RayTable {
            n,
            first_edge,
            edges,
            coeffs,
            tail,
        }
    }

    pub fn eval(&self, w: f64) -> CMatrix {
        assert!(w >= 0.0);
        let last = *self.edges.last().unwrap();
        if w > last {
            return (self.tail)(w);
        }
        let p = if w <= self.first_edge {
            0
        } else {
            // dyadic panels: index from log2 of w / first_edge
            let idx = (w / self.first_edge).log2().ceil() as usize;
            idx.min(self.edges.len() - 1)
        };
        let lo = if p == 0 { 0.0 } else { self.edges[p - 1] };
        let hi = self.edges[p];
        let x = ((w - lo) / (hi - lo)) * 2.0 - 1.0;
        clenshaw(&self.coeffs[p], x, self.n, self.coeffs[p][0].ncols())
    }
}
