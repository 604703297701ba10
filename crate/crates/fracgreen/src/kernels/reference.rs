//! Classical kernel at unit time, reusable at every time by exact scaling.
//!
//! For a constant-coefficient homogeneous operator of order 2b,
//!   D^beta Z(s, x) = s^{-(n+|beta|)/2b} (D^beta Z)(1, x s^{-1/2b})
//! holds exactly, so one fine lattice of F_beta = D^beta Z(1, .) serves all
//! (s, x): evaluation is a cubic Lagrange interpolation (O(h^4)) at the
//! rescaled point plus the homogeneity prefactor. The box half-width is
//! doubled until the kernel has decayed below 1e-13 of its peak at the
//! boundary, so truncating to zero outside the box is lossless at the
//! working accuracy.

use crate::error::{Error, Result};
use crate::kernels::grid::GridSpec;
use crate::operators::{
    unit_sphere_samples, ConstantOperator, MultiIndex, DEFAULT_SPHERE_SAMPLES,
};
use crate::util::linalg::{op_norm_2, CMatrix, C64};

pub struct ClassicalReference {
    n: usize,
    size: usize,
    b: u32,
    derivative: MultiIndex,
    half_width: f64,
    m: usize,
    spacing: f64,
    /// comps[i*size + j][lattice point], lattice of D^beta Z(1, .)
    comps: Vec<Vec<C64>>,
    sup: f64,
}

impl ClassicalReference {
    pub fn build(op: &ConstantOperator, derivative: &MultiIndex) -> Result<Self> {
        if op.dim() > 2 {
            return Err(Error::UnsupportedRegion(format!(
                "classical reference lattice is implemented for n <= 2, got n = {}",
                op.dim()
            )));
        }
        if derivative.dim() != op.dim() {
            return Err(Error::Config(format!(
                "derivative multi-index has dimension {}, operator has {}",
                derivative.dim(),
                op.dim()
            )));
        }
        let delta = op.parabolicity_delta(DEFAULT_SPHERE_SAMPLES)?;
        // Kernel width scales like (coefficient size)^{1/2b}; resolve the
        // narrow direction and cover the wide one.
        let amax = unit_sphere_samples(op.dim(), DEFAULT_SPHERE_SAMPLES.max(2 * op.dim()))
            .iter()
            .map(|w| op_norm_2(&op.symbol(w)))
            .fold(0.0f64, f64::max);
        let base_h = if op.dim() == 1 { 0.01 } else { 0.025 };
        let h_target = base_h * delta.powf(1.0 / (2.0 * op.half_order() as f64)).min(1.0);
        let mut half_width = 16.0 * amax.powf(1.0 / (2.0 * op.half_order() as f64)).max(1.0);

        for _attempt in 0..4 {
            let mut m = (2.0 * half_width / h_target).ceil() as usize;
            if m % 2 == 1 {
                m += 1;
            }
            let cap = if op.dim() == 1 { 1 << 21 } else { 4096 };
            if m > cap {
                return Err(Error::UnsupportedRegion(format!(
                    "classical reference lattice would need {m} points per axis (cap {cap})"
                )));
            }
            let grid = GridSpec::new(op.dim(), half_width, m)?;
            let comps = super::fourier::synthesize_flat(&grid, op.size(), |xi| {
                let mono = C64::new(derivative.monomial(xi), 0.0);
                if op.size() == 1 {
                    let a = op.symbol(xi)[(0, 0)];
                    CMatrix::from_element(1, 1, a.exp() * mono)
                } else {
                    crate::util::linalg::expm(&op.symbol(xi)) * mono
                }
            });
            let sup = comps
                .iter()
                .flat_map(|c| c.iter())
                .map(|v| v.norm())
                .fold(0.0f64, f64::max);
            // Largest magnitude within three cells of the box boundary.
            let shell = 3;
            let mut boundary: f64 = 0.0;
            for p in 0..grid.point_count() {
                let idx = grid.multi_of(p);
                if idx
                    .iter()
                    .any(|&j| j < shell || j >= grid.points_per_axis - shell)
                {
                    for comp in &comps {
                        boundary = boundary.max(comp[p].norm());
                    }
                }
            }
            if boundary <= 1e-13 * sup {
                return Ok(ClassicalReference {
                    n: op.dim(),
                    size: op.size(),
                    b: op.half_order(),
                    derivative: derivative.clone(),
                    half_width,
                    m,
                    spacing: grid.spacing(),
                    comps,
                    sup,
                });
            }
            half_width *= 2.0;
        }
        Err(Error::Divergence(
            "classical reference box kept growing without capturing the kernel decay".into(),
        ))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn derivative(&self) -> &MultiIndex {
        &self.derivative
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup
    }

    /// Cubic Lagrange weights for the fractional offset u in [0, 1) between
    /// nodes i0 and i0+1, over the window i0-1 .. i0+2.
    fn cubic_weights(u: f64) -> [f64; 4] {
        [
            -u * (u - 1.0) * (u - 2.0) / 6.0,
            (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
            -(u + 1.0) * u * (u - 2.0) / 2.0,
            (u + 1.0) * u * (u - 1.0) / 6.0,
        ]
    }

    /// Per-axis interpolation window: base node and weights, or None when
    /// the point is outside the covered box (kernel treated as zero there).
    fn window(&self, y: f64) -> Option<(usize, [f64; 4])> {
        let t = (y + self.half_width) / self.spacing;
        if !t.is_finite() {
            return None;
        }
        let i0 = t.floor();
        let u = t - i0;
        let i0 = i0 as i64;
        if i0 < 1 || i0 + 2 > self.m as i64 - 1 {
            return None;
        }
        Some((i0 as usize - 1, Self::cubic_weights(u)))
    }

    /// D^beta Z(1, y) by tensor-product cubic interpolation; zero outside
    /// the reference box.
    pub fn eval(&self, y: &[f64]) -> CMatrix {
        assert_eq!(y.len(), self.n);
        let zeros = || CMatrix::zeros(self.size, self.size);
        match self.n {
            1 => {
                let Some((base, w)) = self.window(y[0]) else {
                    return zeros();
                };
                CMatrix::from_fn(self.size, self.size, |i, j| {
                    let c = &self.comps[i * self.size + j];
                    (0..4)
                        .map(|k| c[base + k] * C64::new(w[k], 0.0))
                        .sum::<C64>()
                })
            }
            2 => {
                let (Some((b0, w0)), Some((b1, w1))) = (self.window(y[0]), self.window(y[1]))
                else {
                    return zeros();
                };
                CMatrix::from_fn(self.size, self.size, |i, j| {
                    let c = &self.comps[i * self.size + j];
                    let mut acc = C64::new(0.0, 0.0);
                    for k0 in 0..4 {
                        let row = (b0 + k0) * self.m + b1;
                        for k1 in 0..4 {
                            acc += c[row + k1] * C64::new(w0[k0] * w1[k1], 0.0);
                        }
                    }
                    acc
                })
            }
            _ => unreachable!("build caps n at 2"),
        }
    }

    /// D^beta Z(s, x) = s^{-(n+|beta|)/2b} (D^beta Z)(1, x s^{-1/2b}).
    pub fn eval_scaled(&self, s: f64, x: &[f64]) -> CMatrix {
        debug_assert!(s > 0.0);
        let inv = s.powf(-1.0 / (2.0 * self.b as f64));
        let y: Vec<f64> = x.iter().map(|&c| c * inv).collect();
        self.eval(&y) * C64::new(s.powf(self.scaling_power()), 0.0)
    }

    /// Homogeneity exponent: Z kernels scale as s^{-(n+|beta|)/2b}.
    pub fn scaling_power(&self) -> f64 {
        -((self.n as u32 + self.derivative.order()) as f64) / (2.0 * self.b as f64)
    }

    pub fn inverse_length_scale(&self, s: f64) -> f64 {
        s.powf(-1.0 / (2.0 * self.b as f64))
    }

    /// acc += amp * (D^beta Z)(1, x * inv), allocation-free inner loop for
    /// quadratures that sum many rescaled evaluations per output point.
    pub(crate) fn accumulate(&self, x: &[f64], inv: f64, amp: f64, acc: &mut CMatrix) {
        match self.n {
            1 => {
                let Some((base, w)) = self.window(x[0] * inv) else {
                    return;
                };
                for i in 0..self.size {
                    for j in 0..self.size {
                        let c = &self.comps[i * self.size + j];
                        let mut v = C64::new(0.0, 0.0);
                        for k in 0..4 {
                            v += c[base + k] * w[k];
                        }
                        acc[(i, j)] += v * amp;
                    }
                }
            }
            2 => {
                let (Some((b0, w0)), Some((b1, w1))) =
                    (self.window(x[0] * inv), self.window(x[1] * inv))
                else {
                    return;
                };
                for i in 0..self.size {
                    for j in 0..self.size {
                        let c = &self.comps[i * self.size + j];
                        let mut v = C64::new(0.0, 0.0);
                        for k0 in 0..4 {
                            let row = (b0 + k0) * self.m + b1;
                            for k1 in 0..4 {
                                v += c[row + k1] * (w0[k0] * w1[k1]);
                            }
                        }
                        acc[(i, j)] += v * amp;
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}
