//! Certification of the variable-coefficient parametrix estimates.
//!
//! Freezing a variable system at two parameter points y', y'' gives two
//! constant-coefficient kernels; their difference obeys the same envelope
//! taxonomy as the kernels themselves with one extra constant factor
//! |y' - y''|^gamma. Dividing that factor out before the fit makes the
//! fitted constant comparable across freeze pairs, which is how the Hoelder
//! exponent itself becomes checkable: a wrong gamma makes the normalized
//! constant drift with the pair separation.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::fit::certify_samples;
use super::{BoundCase, BoundForm, EstimateReport, Regime, Sample};
use crate::error::{Error, Result};
use crate::kernels::{dt_z_kernel, y_kernel, z_kernel, GridSpec, KernelField, KernelKind, Route};
use crate::operators::{MultiIndex, VariableSystem};
use crate::types::FractionalOrder;

/// Matches the per-slice noise floor of the envelope fits.
const NOISE_FLOOR: f64 = 1e-7;
/// A difference whose sup stays below this multiple of the kernel scale is
/// treated as identically zero (constant coefficients).
const ZERO_TOL: f64 = 1e-9;
const RATIO_SLACK: f64 = 1e-9;

fn frozen_field(
    system: &VariableSystem,
    alpha: FractionalOrder,
    case: &BoundCase,
    y: &[f64],
    times: &[f64],
    grid: &GridSpec,
) -> Result<KernelField> {
    let op = system.freeze(y)?;
    match case.kernel_kind {
        KernelKind::ZAlpha => z_kernel(&op, alpha, times, grid, &case.derivative, Route::Subordination),
        KernelKind::YAlpha => y_kernel(&op, alpha, times, grid, &case.derivative, Route::Subordination),
        KernelKind::DtZAlpha => {
            dt_z_kernel(&op, alpha, times, grid, &case.derivative, Route::Subordination)
        }
        KernelKind::Z => Err(Error::Config(
            "the classical kernel has no fractional envelope to certify".into(),
        )),
    }
}

fn trivial_report(case: &BoundCase, sample_count: usize) -> EstimateReport {
    EstimateReport {
        case: case.clone(),
        fitted_c: 0.0,
        fitted_sigma: 0.0,
        sup_ratio: 0.0,
        sample_count,
        pass: true,
    }
}

/// Certify |K(t, x; y') - K(t, x; y'')| / |y' - y''|^gamma against the
/// given envelope case, K being the kernel the case names. A difference
/// that vanishes to quadrature accuracy (constant coefficients) passes
/// trivially with C = 0.
pub fn certify_difference_bound(
    system: &VariableSystem,
    alpha: FractionalOrder,
    case: &BoundCase,
    y1: &[f64],
    y2: &[f64],
    times: &[f64],
    grid: &GridSpec,
) -> Result<EstimateReport> {
    let f1 = frozen_field(system, alpha, case, y1, times, grid)?;
    let f2 = frozen_field(system, alpha, case, y2, times, grid)?;
    let dist = y1
        .iter()
        .zip(y2)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let hol = dist.powf(system.holder_exponent());

    let mut scale = 0f64;
    for ti in 0..times.len() {
        scale = scale.max(f1.sup_abs(ti)).max(f2.sup_abs(ti));
    }
    let mut samples = Vec::new();
    let mut diff_sup = 0f64;
    let mut total = 0usize;
    for (ti, &t) in times.iter().enumerate() {
        let floor = NOISE_FLOOR * f1.sup_abs(ti).max(f2.sup_abs(ti));
        for p in 0..f1.points() {
            if !f1.admissible(p) {
                continue;
            }
            total += 1;
            let d: DMatrix<_> = f1.value(ti, p) - f2.value(ti, p);
            let value = d.iter().fold(0f64, |m, v| m.max(v.norm()));
            diff_sup = diff_sup.max(value);
            if value >= floor && value.is_finite() {
                let x_norm = grid.coords(p).iter().map(|c| c * c).sum::<f64>().sqrt();
                samples.push(Sample { t, x_norm, value });
            }
        }
    }
    if diff_sup <= ZERO_TOL * scale {
        return Ok(trivial_report(case, total));
    }
    if hol == 0.0 {
        return Err(Error::Precondition(
            "freeze points coincide but the kernels differ".into(),
        ));
    }
    for s in &mut samples {
        s.value /= hol;
    }
    certify_samples(&samples, case)
}

/// Certify the time-power envelope of the parametrix mass derivative:
/// sup_x | integral of dtZ(t, x - xi; xi) d xi | <= C t^{gamma-weakened
/// power}, the cancellation law behind the parametrix construction. The
/// constant is anchored on every time except the earliest and the earliest
/// slice must stay under the same envelope: a decay slower than claimed
/// pushes the earliest time above any later-anchored constant as the
/// window extends toward zero. (Anchoring on a single late time is too
/// brittle: the integral inherits the zero crossings of d/dz E_{alpha,0}
/// along -t^alpha A0, so late slices can sit in an accidental dip.)
///
/// One-dimensional systems only: the xi integral runs over a lattice of
/// frozen Fourier-route kernels with periodic wrap-around, so the lattice
/// sum telescopes to the symbol's DC bin. For constant coefficients that
/// bin is exactly zero (conserved mass), and for coefficients whose period
/// divides 2 * half_width the wrapped sum carries no window-truncation
/// error at all.
pub fn certify_mass_derivative(
    system: &VariableSystem,
    alpha: FractionalOrder,
    times: &[f64],
    half_width: f64,
    points: usize,
) -> Result<EstimateReport> {
    if system.dim() != 1 {
        return Err(Error::Config(
            "mass-derivative certification integrates over a one-dimensional lattice".into(),
        ));
    }
    if times.len() < 2 {
        return Err(Error::Config("need at least two times to anchor the envelope".into()));
    }
    let grid = GridSpec::new(1, half_width, points)?;
    let h = grid.spacing();
    let zero = MultiIndex::zero(1);
    let b = system.half_order();
    let claimed = -1.0 + alpha.get() * system.holder_exponent() / (2.0 * b as f64);
    let case = BoundCase {
        label: "mass-derivative".into(),
        kernel_kind: KernelKind::DtZAlpha,
        derivative: zero.clone(),
        regime: Regime::AllR,
        form: BoundForm {
            alpha,
            half_order: b,
            t_pow: claimed,
            x_pow: 0.0,
            log_r_factor: false,
            exp_rho: false,
        },
    };

    let fields: Result<Vec<KernelField>> = (0..points)
        .into_par_iter()
        .map(|j| {
            let op = system.freeze(&grid.coords(j))?;
            dt_z_kernel(&op, alpha, times, &grid, &zero, Route::Fourier)
        })
        .collect();
    let fields = fields?;
    let mut kernel_scale = 0f64;
    for f in &fields {
        for ti in 0..times.len() {
            kernel_scale = kernel_scale.max(f.sup_abs(ti));
        }
    }

    let stride = (points / 16).max(1);
    let probes: Vec<usize> = (0..points).step_by(stride).collect();
    let size = system.size();
    let half = points / 2;
    let mut worst = vec![0f64; times.len()];
    for (ti, w) in worst.iter_mut().enumerate() {
        for &a in &probes {
            let mut acc = crate::util::linalg::CMatrix::zeros(size, size);
            for (j, f) in fields.iter().enumerate() {
                // lattice point of (x_a - xi_j) wrapped into the box
                acc += f.value(ti, (a + points + half - j) % points);
            }
            let mag = acc.iter().fold(0f64, |m, v| m.max(v.norm())) * h;
            *w = w.max(mag);
        }
    }

    let sup_h = worst.iter().fold(0f64, |m, &v| m.max(v));
    if sup_h <= ZERO_TOL * kernel_scale * 2.0 * half_width {
        // constant coefficients: the integral is d/dt of conserved mass
        return Ok(trivial_report(&case, times.len() * probes.len()));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
    let anchor = &order[1..];
    let c = anchor
        .iter()
        .map(|&ti| worst[ti] / times[ti].powf(claimed))
        .fold(0f64, f64::max);
    let ratio = (0..times.len())
        .map(|ti| worst[ti] / (c * times[ti].powf(claimed)))
        .fold(0f64, f64::max);
    Ok(EstimateReport {
        case,
        fitted_c: c,
        fitted_sigma: 0.0,
        sup_ratio: ratio,
        sample_count: times.len() * probes.len(),
        pass: c.is_finite() && ratio <= 1.0 + RATIO_SLACK,
    })
}
