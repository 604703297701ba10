//! Gauss-Legendre rules and composite panel quadrature.
//!
//! Nodes and weights are generated by Newton iteration on the Legendre
//! recurrence; the rule on [-1,1] is then mapped affinely onto each panel.

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_and_derivative(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let d = n as f64 * (p0 - x * p1) / (1.0 - x * x);
    (p1, d)
}

/// Composite Gauss-Legendre rule: `points` panels given by consecutive
/// breakpoints, `n` nodes per panel. Returns (nodes, weights) on the union.
pub fn composite_gl(breakpoints: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n * (breakpoints.len() - 1));
    let mut weights = Vec::with_capacity(n * (breakpoints.len() - 1));
    for pair in breakpoints.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for i in 0..n {
            nodes.push(mid + half * xs[i]);
            weights.push(half * ws[i]);
        }
    }
    (nodes, weights)
}

/// Geometric breakpoints a * ratio^k covering [a, b] (last point clamped to b).
pub fn geometric_breakpoints(a: f64, b: f64, ratio: f64) -> Vec<f64> {
    assert!(a > 0.0 && b > a && ratio > 1.0);
    let mut pts = vec![a];
    let mut x = a;
    while x * ratio < b {
        x *= ratio;
        pts.push(x);
    }
    pts.push(b);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [2usize, 5, 8, 16] {
            let (xs, ws) = gauss_legendre(n);
            // degree 2n-1 is integrated exactly on [-1,1]
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                let got: f64 = xs
                    .iter()
                    .zip(&ws)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                assert!(
                    (got - exact).abs() < 1e-13,
                    "n={n} deg={deg} got={got} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn nodes_finite_and_weights_sum_to_two() {
        for n in 1..=80 {
            let (xs, ws) = gauss_legendre(n);
            assert!(xs.iter().all(|x| x.is_finite() && x.abs() < 1.0), "n={n}");
            assert!(ws.iter().all(|w| w.is_finite() && *w > 0.0), "n={n}");
            let total: f64 = ws.iter().sum();
            assert!((total - 2.0).abs() < 1e-12, "n={n} total={total}");
        }
    }

    #[test]
    fn composite_matches_exp_integral() {
        let bp = geometric_breakpoints(1e-3, 20.0, 2.0);
        let (xs, ws) = composite_gl(&bp, 12);
        let got: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (-x).exp()).sum();
        let exact = (-1e-3f64).exp() - (-20.0f64).exp();
        assert!((got - exact).abs() < 1e-12);
    }
}
