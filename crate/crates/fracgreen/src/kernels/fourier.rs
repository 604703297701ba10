//! Lattice synthesis of matrix symbols.
//!
//! F(x) = (2pi)^{-n} \int e^{i x.xi} Fhat(xi) dxi is approximated by the
//! trapezoid rule on the dual lattice of a `GridSpec`, which reduces to one
//! unnormalized inverse DFT per axis after pulling the half-lattice shifts
//! into sign flips: with k' = k + M/2,
//!   F(x_j) = (2L)^{-n} (-1)^{nM/2} (-1)^{sum_a j_a}
//!            * IDFT[ (-1)^{sum_a k'_a} Fhat(xi_{k'-M/2}) ](j).
//! Aliasing and truncation control is the caller's job (pick L and M so the
//! symbol is negligible at |xi_a| = pi M / 2L and the field at |x_a| = L).

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::grid::GridSpec;
use crate::util::linalg::{CMatrix, C64};

/// Unnormalized inverse DFT along every axis of a row-major lattice
/// (last axis contiguous).
pub(crate) fn nd_idft(data: &mut [C64], shape: &[usize]) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::<f64>::new();
    for (axis, &len) in shape.iter().enumerate() {
        let fft = planner.plan_fft_inverse(len);
        let inner: usize = shape[axis + 1..].iter().product();
        if inner == 1 {
            fft.process(data);
            continue;
        }
        let outer = total / (len * inner);
        let mut line = vec![Complex::new(0.0, 0.0); len];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                for k in 0..len {
                    line[k] = data[base + k * inner];
                }
                fft.process(&mut line);
                for k in 0..len {
                    data[base + k * inner] = line[k];
                }
            }
        }
    }
}

/// Synthesize a matrix symbol on the lattice; returns one flat component
/// per matrix entry, indexed comps[i * size + j][point].
pub(crate) fn synthesize_flat<F>(grid: &GridSpec, size: usize, fhat: F) -> Vec<Vec<C64>>
where
    F: Fn(&[f64]) -> CMatrix + Sync,
{
    let samples: Vec<CMatrix> = (0..grid.point_count())
        .into_par_iter()
        .map(|p| fhat(&grid.freq_of(&grid.multi_of(p))))
        .collect();
    synthesize_samples_flat(grid, size, samples)
}

/// Same synthesis from precomputed symbol samples, samples[p] = Fhat(xi(p))
/// on the shifted frequency lattice (`GridSpec::freq_of` of the point's
/// multi-index). Lets callers with fallible symbol evaluation collect errors
/// before committing to the transform.
pub(crate) fn synthesize_samples_flat(
    grid: &GridSpec,
    size: usize,
    mut samples: Vec<CMatrix>,
) -> Vec<Vec<C64>> {
    let points = grid.point_count();
    let m = grid.points_per_axis;
    let shape = vec![m; grid.n];
    assert_eq!(samples.len(), points);

    // Fold the input sign (-1)^{sum k'_a} into the samples.
    samples.par_iter_mut().enumerate().for_each(|(p, s)| {
        if grid.multi_of(p).iter().sum::<usize>() % 2 == 1 {
            *s *= C64::new(-1.0, 0.0);
        }
    });

    let base_scale = (2.0 * grid.half_width).powi(-(grid.n as i32))
        * if (grid.n * (m / 2)) % 2 == 0 { 1.0 } else { -1.0 };

    let mut comps = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let mut comp: Vec<C64> = samples.iter().map(|s| s[(i, j)]).collect();
            nd_idft(&mut comp, &shape);
            for (p, v) in comp.iter_mut().enumerate() {
                let jsum: usize = grid.multi_of(p).iter().sum();
                let sign = if jsum % 2 == 0 { 1.0 } else { -1.0 };
                *v *= base_scale * sign;
            }
            comps.push(comp);
        }
    }
    comps
}

pub(crate) fn to_matrices(size: usize, comps: &[Vec<C64>]) -> Vec<CMatrix> {
    let points = comps[0].len();
    (0..points)
        .map(|p| CMatrix::from_fn(size, size, |i, j| comps[i * size + j][p]))
        .collect()
}

/// Convenience wrapper returning per-point matrices.
pub(crate) fn synthesize<F>(grid: &GridSpec, size: usize, fhat: F) -> Vec<CMatrix>
where
    F: Fn(&[f64]) -> CMatrix + Sync,
{
    let comps = synthesize_flat(grid, size, fhat);
    to_matrices(size, &comps)
}

/// Synthesis from precomputed samples, returning per-point matrices.
pub(crate) fn synthesize_samples(
    grid: &GridSpec,
    size: usize,
    samples: Vec<CMatrix>,
) -> Vec<CMatrix> {
    let comps = synthesize_samples_flat(grid, size, samples);
    to_matrices(size, &comps)
}
