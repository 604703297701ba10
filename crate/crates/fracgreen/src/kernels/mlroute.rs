//! Fourier route for the fractional kernels.
//!
//! The symbols are matrix Mittag-Leffler functions of t^alpha A0(xi):
//!   Z_alpha   <->  E_alpha(t^alpha A0),
//!   Y_alpha   <->  t^{alpha-1} E_{alpha,alpha}(t^alpha A0),
//!   dZ/dt     <->  t^{-1} E_{alpha,0}(t^alpha A0),
//! synthesized on the lattice by `fourier::synthesize_samples`. Isotropic
//! symbols (always in one dimension, detected by sphere sampling otherwise)
//! reduce every node to one scalar argument w = t^alpha |xi|^{2b} along a
//! single matrix ray, served by a Chebyshev ray table; anisotropic systems
//! fall back to a per-node Mittag-Leffler evaluation.
//!
//! The large-argument expansion E ~ -sum_k z^{-k}/Gamma(beta'-alpha k)
//! decides what is representable: with k0 the first index whose Gamma
//! coefficient does not vanish, xi^beta E is absolutely integrable iff
//! n + |beta| < 2b k0, and plain synthesis is accurate. For the k0 = 1
//! families (Z_alpha and dZ_alpha/dt) with |beta| = 0 and 2b <= n < 4b the
//! symbol is repaired by subtraction: E = [E - chi P] + chi P with
//! P = c1 t^{-alpha} (-A0)^{-1} and chi a C^3 radial cutoff vanishing for
//! |xi| <= 1. The bracket is integrable and synthesized on the lattice;
//! chi P is transformed through the elliptic Green matrix,
//!   F[chi (-A0)^{-1}] = G_I + F[chi (-A0)^{-1} - (I - A0)^{-1}],
//! whose second argument is smooth and O(|xi|^{-4b}), so its own synthesis
//! is benign. The origin stays excluded (G_I is singular there when
//! n >= 2b). Everything else is reported as an unsupported region instead
//! of synthesizing a divergent integral.

use rayon::prelude::*;

use super::elliptic::EllipticGreen;
use super::grid::GridSpec;
use super::{fourier, KernelField, KernelKind};
use crate::error::{Error, Result};
use crate::operators::{unit_sphere_samples, ConstantOperator, MultiIndex};
use crate::specfun::gamma::recip_gamma;
use crate::specfun::mittag::{mittag_leffler_matrix, MLFamily, MittagRayTable};
use crate::types::FractionalOrder;
use crate::util::linalg::{op_norm_2, CMatrix, C64};

const RAY_W_MAX: f64 = 64.0;

/// C^3 transition from 0 (r <= 1) to 1 (r >= 2).
fn chi(r: f64) -> f64 {
    if r <= 1.0 {
        0.0
    } else if r >= 2.0 {
        1.0
    } else {
        let u = r - 1.0;
        ((((-20.0 * u + 70.0) * u - 84.0) * u + 35.0) * u.powi(4)).clamp(0.0, 1.0)
    }
}

/// If A0(xi) = |xi|^{2b} d for a fixed matrix d, return d.
fn isotropic_direction(op: &ConstantOperator) -> Option<CMatrix> {
    let dirs = unit_sphere_samples(op.dim(), (8 * op.dim()).max(2));
    let d0 = op.symbol(&dirs[0]);
    let scale = op_norm_2(&d0).max(f64::MIN_POSITIVE);
    for w in &dirs[1..] {
        if op_norm_2(&(op.symbol(w) - &d0)) > 1e-12 * scale {
            return None;
        }
    }
    Some(d0)
}

enum SymbolEval {
    Ray { table: MittagRayTable, b: i32 },
    General,
}

impl SymbolEval {
    /// E_family(t^alpha A0(xi)); exact at xi = 0.
    fn eval(
        &self,
        op: &ConstantOperator,
        alpha: FractionalOrder,
        family: MLFamily,
        ta: f64,
        xi: &[f64],
    ) -> Result<CMatrix> {
        let r2: f64 = xi.iter().map(|c| c * c).sum();
        if r2 == 0.0 {
            return Ok(CMatrix::identity(op.size(), op.size())
                * C64::new(recip_gamma(family.beta_prime(alpha.get())), 0.0));
        }
        match self {
            SymbolEval::Ray { table, b } => Ok(table.eval(ta * r2.powi(*b))),
            SymbolEval::General => {
                mittag_leffler_matrix(alpha, family, &(op.symbol(xi) * C64::new(ta, 0.0)))
            }
        }
    }
}

fn time_prefactor(family: MLFamily, alpha: f64, t: f64) -> f64 {
    match family {
        MLFamily::One => 1.0,
        MLFamily::Alpha => t.powf(alpha - 1.0),
        MLFamily::Zero => t.recip(),
    }
}

pub(crate) fn ml_field(
    op: &ConstantOperator,
    alpha: FractionalOrder,
    family: MLFamily,
    kind: KernelKind,
    times: &[f64],
    grid: &GridSpec,
    derivative: &MultiIndex,
) -> Result<KernelField> {
    let a = alpha.get();
    let c1 = recip_gamma(family.beta_prime(a) - a);
    // First surviving power of the asymptotic expansion: 1/Gamma(beta'-alpha)
    // vanishes exactly for the Y_alpha family, whose symbol decays one power
    // of A0 faster.
    let k0: u32 = if c1 != 0.0 { 1 } else { 2 };
    let growth = op.dim() as u32 + derivative.order();
    let needs_reg = growth >= 2 * op.half_order() * k0;
    if needs_reg {
        let repairable =
            k0 == 1 && derivative.order() == 0 && (op.dim() as u32) < 4 * op.half_order();
        if !repairable {
            return Err(Error::UnsupportedRegion(format!(
                "symbol xi^beta E_family is not absolutely integrable \
                 (n + |beta| = {growth} >= 2b k0 = {}) and one-term subtraction \
                 does not apply; use the subordination route",
                2 * op.half_order() * k0
            )));
        }
        if grid.xi_max() <= 4.0 {
            return Err(Error::Config(format!(
                "regularized synthesis needs the cutoff transition |xi| in [1,2] \
                 well inside the lattice; xi_max = {:.2} is too small",
                grid.xi_max()
            )));
        }
    }

    let eval = build_eval(op, alpha, family)?;
    let points = grid.point_count();
    let origin = grid.origin_index();

    // Time-independent pieces of the regularization.
    let reg = if needs_reg {
        let green = EllipticGreen::new(op)?;
        let greens: Result<Vec<Option<CMatrix>>> = (0..points)
            .into_par_iter()
            .map(|p| {
                if p == origin {
                    return Ok(None);
                }
                green.eval(&grid.coords(p)).map(Some)
            })
            .collect();
        let bracket = fourier::synthesize(grid, op.size(), |xi| {
            let a0 = op.symbol(xi);
            let resolvent = (CMatrix::identity(op.size(), op.size()) - &a0)
                .try_inverse()
                .expect("I - A0(xi) is invertible for parabolic symbols");
            let r = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
            let c = chi(r);
            if c == 0.0 {
                -resolvent
            } else {
                let neg_inv = (-a0)
                    .try_inverse()
                    .expect("A0(xi) is invertible away from xi = 0");
                neg_inv * C64::new(c, 0.0) - resolvent
            }
        });
        Some((greens?, bracket))
    } else {
        None
    };

    let mut values = Vec::with_capacity(times.len() * points);
    for &t in times {
        let ta = t.powf(a);
        let pref = C64::new(time_prefactor(family, a, t), 0.0);
        let ct = c1 / ta;
        let samples: Result<Vec<CMatrix>> = (0..points)
            .into_par_iter()
            .map(|p| {
                let xi = grid.freq_of(&grid.multi_of(p));
                let e = eval.eval(op, alpha, family, ta, &xi)?;
                if reg.is_none() {
                    let mono = C64::new(derivative.monomial(&xi), 0.0);
                    return Ok(e * mono);
                }
                let r = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
                let c = chi(r);
                if c == 0.0 {
                    Ok(e)
                } else {
                    let neg_inv = (-op.symbol(&xi))
                        .try_inverse()
                        .expect("A0(xi) is invertible away from xi = 0");
                    Ok(e - neg_inv * C64::new(c * ct, 0.0))
                }
            })
            .collect();
        let mut slice = fourier::synthesize_samples(grid, op.size(), samples?);
        if let Some((greens, bracket)) = &reg {
            for p in 0..points {
                if let Some(g) = &greens[p] {
                    slice[p] += (g + &bracket[p]) * C64::new(ct, 0.0);
                } else {
                    slice[p] = CMatrix::zeros(op.size(), op.size());
                }
            }
        }
        for v in &mut slice {
            *v *= pref;
        }
        values.extend(slice);
    }
    Ok(KernelField::new(
        grid.clone(),
        kind,
        derivative.clone(),
        times.to_vec(),
        op.size(),
        values,
        needs_reg,
    ))
}

fn build_eval(
    op: &ConstantOperator,
    alpha: FractionalOrder,
    family: MLFamily,
) -> Result<SymbolEval> {
    if let Some(d) = isotropic_direction(op) {
        Ok(SymbolEval::Ray {
            table: MittagRayTable::build(alpha, family, &d, RAY_W_MAX)?,
            b: op.half_order() as i32,
        })
    } else {
        Ok(SymbolEval::General)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{dt_z_kernel, y_kernel, z_kernel, Route};
    use crate::specfun::gamma::gamma;

    fn heat() -> ConstantOperator {
        ConstantOperator::scalar_1d(1, -1.0)
    }

    fn fo(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    /// Relative local disagreement over lattice points whose similarity
    /// variable R = |x| t^{-alpha/2b} lies in [0.1, r_max]. The window top
    /// is set per test: near R = 10 the kernels sit at ~1e-5 of their sup,
    /// and holding a locally-relative 1e-5 there demands frequency cutoffs
    /// ~2.5e4 for the xi^-2 symbol tails (exercised at acceptance scale,
    /// not here) plus boxes large enough that the wrap-around image of the
    /// synthesis stays below the window-edge values.
    fn route_disagreement(
        sub: &KernelField,
        ml: &KernelField,
        t_index: usize,
        alpha: f64,
        b: u32,
        r_max: f64,
    ) -> f64 {
        let t = sub.times[t_index];
        let sup = sub.sup_abs(t_index);
        let mut worst: f64 = 0.0;
        let mut seen = 0;
        for p in 0..sub.points() {
            let x = sub.grid.coords(p);
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt()
                * t.powf(-alpha / (2.0 * b as f64));
            if !(0.1..=r_max).contains(&r) {
                continue;
            }
            seen += 1;
            let (a, m) = (sub.value(t_index, p), ml.value(t_index, p));
            for (va, vb) in a.iter().zip(m.iter()) {
                worst = worst.max((va - vb).norm() / (va.norm() + 1e-12 * sup));
            }
        }
        assert!(seen > 100, "comparison region unexpectedly empty");
        worst
    }

    #[test]
    fn z_routes_agree_for_heat() {
        let grid = GridSpec::new(1, 12.0, 32768).unwrap();
        let alpha = 0.5;
        let times = [0.7];
        let beta = MultiIndex::zero(1);
        let sub =
            z_kernel(&heat(), fo(alpha), &times, &grid, &beta, Route::Subordination).unwrap();
        let ml = z_kernel(&heat(), fo(alpha), &times, &grid, &beta, Route::Fourier).unwrap();
        let dis = route_disagreement(&sub, &ml, 0, alpha, 1, 6.0);
        assert!(dis < 1e-5, "route disagreement {dis:.3e}");
    }

    #[test]
    fn y_routes_agree_and_fourier_normalization_is_exact() {
        // the Y_alpha symbol decays like xi^-4, so the full R window is
        // attainable at a moderate cutoff
        let grid = GridSpec::new(1, 16.0, 4096).unwrap();
        let alpha = 0.6;
        let times = [0.5, 1.0];
        let beta = MultiIndex::zero(1);
        let sub =
            y_kernel(&heat(), fo(alpha), &times, &grid, &beta, Route::Subordination).unwrap();
        let ml = y_kernel(&heat(), fo(alpha), &times, &grid, &beta, Route::Fourier).unwrap();
        for ti in 0..times.len() {
            let dis = route_disagreement(&sub, &ml, ti, alpha, 1, 10.0);
            assert!(dis < 1e-5, "t index {ti}: route disagreement {dis:.3e}");
            // lattice sum of a synthesized field telescopes to the DC bin
            let want = times[ti].powf(alpha - 1.0) / gamma(alpha);
            let got = ml.spatial_integral(ti)[(0, 0)];
            assert!(
                (got.re - want).abs() < 1e-12 * want && got.im.abs() < 1e-13,
                "integral {got} want {want}"
            );
        }
    }

    #[test]
    fn z_fourier_integral_is_exactly_identity() {
        let grid = GridSpec::new(1, 10.0, 1024).unwrap();
        let ml = z_kernel(
            &heat(),
            fo(0.3),
            &[0.25, 4.0],
            &grid,
            &MultiIndex::zero(1),
            Route::Fourier,
        )
        .unwrap();
        for ti in 0..2 {
            let got = ml.spatial_integral(ti)[(0, 0)];
            assert!((got.re - 1.0).abs() < 1e-12 && got.im.abs() < 1e-13);
        }
    }

    #[test]
    fn dt_routes_agree_and_match_finite_differences() {
        let grid = GridSpec::new(1, 12.0, 32768).unwrap();
        let alpha = 0.5;
        let beta = MultiIndex::zero(1);
        let t = 1.0;
        let sub =
            dt_z_kernel(&heat(), fo(alpha), &[t], &grid, &beta, Route::Subordination).unwrap();
        let ml = dt_z_kernel(&heat(), fo(alpha), &[t], &grid, &beta, Route::Fourier).unwrap();
        let dis = route_disagreement(&sub, &ml, 0, alpha, 1, 6.0);
        assert!(dis < 1e-5, "route disagreement {dis:.3e}");

        // fourth-order central difference of Z_alpha in t at a few points
        let h = 0.02;
        let probe = GridSpec::new(1, 2.0, 4).unwrap();
        let zs = z_kernel(
            &heat(),
            fo(alpha),
            &[t - 2.0 * h, t - h, t + h, t + 2.0 * h],
            &probe,
            &beta,
            Route::Subordination,
        )
        .unwrap();
        let dt =
            dt_z_kernel(&heat(), fo(alpha), &[t], &probe, &beta, Route::Subordination).unwrap();
        for p in 0..probe.point_count() {
            let f = |ti: usize| zs.value(ti, p)[(0, 0)].re;
            let fd = (-f(3) + 8.0 * f(2) - 8.0 * f(1) + f(0)) / (12.0 * h);
            let got = dt.value(0, p)[(0, 0)].re;
            assert!(
                (got - fd).abs() < 1e-4 * got.abs().max(1e-3),
                "x={:?}: dt {got}, fd {fd}",
                probe.coords(p)
            );
        }
    }

    #[test]
    fn coupled_nondiagonal_system_routes_agree() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(-1.0, 0.0);
        m[(1, 1)] = C64::new(-1.2, 0.0);
        m[(0, 1)] = C64::new(0.3, 0.05);
        m[(1, 0)] = C64::new(0.2, -0.05);
        let op = ConstantOperator::new(
            1,
            2,
            1,
            [(MultiIndex::new(vec![2]), m)].into_iter().collect(),
        )
        .unwrap();
        let grid = GridSpec::new(1, 12.0, 32768).unwrap();
        let alpha = 0.5;
        let beta = MultiIndex::zero(1);
        let sub = z_kernel(&op, fo(alpha), &[0.8], &grid, &beta, Route::Subordination).unwrap();
        let ml = z_kernel(&op, fo(alpha), &[0.8], &grid, &beta, Route::Fourier).unwrap();
        let dis = route_disagreement(&sub, &ml, 0, alpha, 1, 6.0);
        assert!(dis < 1e-5, "route disagreement {dis:.3e}");
    }

    #[test]
    fn fourth_order_operator_routes_agree() {
        // the b = 2 kernel envelope decays only like exp(-c R^{8/7}), so the
        // box must be generous before wrap-around clears the window edge
        let op = ConstantOperator::scalar_1d(2, -1.0);
        let grid = GridSpec::new(1, 18.0, 8192).unwrap();
        let alpha = 0.5;
        let beta = MultiIndex::zero(1);
        let sub = z_kernel(&op, fo(alpha), &[0.5], &grid, &beta, Route::Subordination).unwrap();
        let ml = z_kernel(&op, fo(alpha), &[0.5], &grid, &beta, Route::Fourier).unwrap();
        let dis = route_disagreement(&sub, &ml, 0, alpha, 2, 6.0);
        assert!(dis < 1e-5, "route disagreement {dis:.3e}");
    }

    fn planar_laplacian() -> ConstantOperator {
        let lap = |i: usize| {
            let mut idx = vec![0u32; 2];
            idx[i] = 2;
            (
                MultiIndex::new(idx),
                CMatrix::from_element(1, 1, C64::new(-1.0, 0.0)),
            )
        };
        ConstantOperator::new(2, 1, 1, [lap(0), lap(1)].into_iter().collect()).unwrap()
    }

    #[test]
    fn planar_regularized_synthesis_matches_subordination() {
        // n = 2 = 2b: E_alpha(t^alpha A0) is not integrable and the kernel
        // has a logarithmic origin singularity; the chi-split synthesis must
        // agree with the subordination route away from the origin. Bracket
        // symbol truncation limits the match to ~1e-4 at this lattice size.
        let op = planar_laplacian();
        let alpha = 0.6;
        let t = 0.8;
        let grid = GridSpec::new(2, 8.0, 192).unwrap();
        let beta = MultiIndex::zero(2);
        let ml = z_kernel(&op, fo(alpha), &[t], &grid, &beta, Route::Fourier).unwrap();
        assert!(ml.origin_excluded);
        let sub = z_kernel(&op, fo(alpha), &[t], &grid, &beta, Route::Subordination).unwrap();
        assert!(sub.origin_excluded);
        let sup = sub.sup_abs(0);
        let mut worst: f64 = 0.0;
        let mut seen = 0;
        for p in 0..grid.point_count() {
            if !ml.admissible(p) {
                continue;
            }
            let x = grid.coords(p);
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(0.2..=4.0).contains(&r) {
                continue;
            }
            seen += 1;
            let d = (ml.value(0, p) - sub.value(0, p))
                .iter()
                .map(|v| v.norm())
                .fold(0.0f64, f64::max);
            worst = worst.max(d / (sub.value(0, p)[(0, 0)].norm() + 1e-9 * sup));
        }
        assert!(seen > 1000, "comparison region unexpectedly small: {seen}");
        assert!(worst < 1e-3, "regularized route disagreement {worst:.3e}");
    }

    #[test]
    fn non_integrable_requests_are_rejected() {
        // derivative field in the regularized regime
        let op = planar_laplacian();
        let grid2 = GridSpec::new(2, 8.0, 64).unwrap();
        let err = z_kernel(
            &op,
            fo(0.5),
            &[1.0],
            &grid2,
            &MultiIndex::new(vec![1, 0]),
            Route::Fourier,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnsupportedRegion(_)));

        // 1-D gradient of Z_alpha: n + |beta| = 2b, symbol not integrable
        let grid1 = GridSpec::new(1, 8.0, 64).unwrap();
        let err = z_kernel(
            &heat(),
            fo(0.5),
            &[1.0],
            &grid1,
            &MultiIndex::new(vec![1]),
            Route::Fourier,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnsupportedRegion(_)));

        // but the faster-decaying Y_alpha symbol admits the same derivative
        let ok = y_kernel(
            &heat(),
            fo(0.5),
            &[1.0],
            &grid1,
            &MultiIndex::new(vec![1]),
            Route::Fourier,
        );
        assert!(ok.is_ok());
    }
}
