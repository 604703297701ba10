//! Green matrices of fractional-parabolic systems on uniform lattices.
//!
//! A `KernelField` holds one matrix kernel sampled on a time list and a
//! spatial lattice. Constant-coefficient fields come from two independent
//! routes: subordination against the classical kernel (an integral in the
//! time-like subordination variable) and direct Fourier synthesis of a
//! matrix Mittag-Leffler symbol. The two routes share no analytic machinery
//! past the symbol itself, which is what makes their agreement a real check.

mod fourier;
pub mod elliptic;
pub mod grid;
mod mlroute;
mod reference;
mod subordination;

pub use elliptic::{elliptic_green, EllipticGreen};
pub use grid::GridSpec;
pub use reference::ClassicalReference;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{ConstantOperator, MultiIndex, DEFAULT_SPHERE_SAMPLES};
use crate::specfun::mittag::MLFamily;
use crate::specfun::wright::WrightKernel;
use crate::util::artifact::fmt_f64;
use crate::util::linalg::{CMatrix, C64};

/// Which kernel a field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// Classical kernel Z(s, x) of the first-order-in-time system.
    Z,
    /// Fractional kernel Z_alpha(t, x).
    ZAlpha,
    /// Fractional kernel Y_alpha(t, x).
    YAlpha,
    /// Time derivative of Z_alpha.
    DtZAlpha,
}

impl KernelKind {
    pub fn label(&self) -> &'static str {
        match self {
            KernelKind::Z => "Z",
            KernelKind::ZAlpha => "Z_alpha",
            KernelKind::YAlpha => "Y_alpha",
            KernelKind::DtZAlpha => "dtZ_alpha",
        }
    }
}

/// Evaluation route for the fractional kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Subordination,
    Fourier,
}

/// A matrix kernel sampled on `times` x lattice, stored time-major.
#[derive(Debug, Clone)]
pub struct KernelField {
    pub grid: GridSpec,
    pub kind: KernelKind,
    pub derivative: MultiIndex,
    pub times: Vec<f64>,
    pub size: usize,
    /// values[t_index * grid.point_count() + point]
    pub values: Vec<CMatrix>,
    /// True when the lattice origin x = 0 was skipped because the kernel
    /// (or the requested derivative) is singular there; its stored value
    /// is an exact zero placeholder.
    pub origin_excluded: bool,
}

impl KernelField {
    pub(crate) fn new(
        grid: GridSpec,
        kind: KernelKind,
        derivative: MultiIndex,
        times: Vec<f64>,
        size: usize,
        values: Vec<CMatrix>,
        origin_excluded: bool,
    ) -> Self {
        assert_eq!(values.len(), times.len() * grid.point_count());
        KernelField {
            grid,
            kind,
            derivative,
            times,
            size,
            values,
            origin_excluded,
        }
    }

    pub fn points(&self) -> usize {
        self.grid.point_count()
    }

    pub fn value(&self, time_index: usize, point: usize) -> &CMatrix {
        &self.values[time_index * self.points() + point]
    }

    /// True unless the point is the excluded origin.
    pub fn admissible(&self, point: usize) -> bool {
        !(self.origin_excluded && point == self.grid.origin_index())
    }

    /// Lattice approximation of the spatial integral at one time
    /// (exact for Fourier-route fields: it telescopes to the DC bin).
    pub fn spatial_integral(&self, time_index: usize) -> CMatrix {
        let h = C64::new(self.grid.cell_volume(), 0.0);
        let mut sum = CMatrix::zeros(self.size, self.size);
        for p in 0..self.points() {
            sum += self.value(time_index, p);
        }
        sum * h
    }

    /// Largest entry magnitude at one time.
    pub fn sup_abs(&self, time_index: usize) -> f64 {
        let mut sup: f64 = 0.0;
        for p in 0..self.points() {
            for v in self.value(time_index, p).iter() {
                sup = sup.max(v.norm());
            }
        }
        sup
    }

    /// CSV body: header line, then one row per (time, point, entry).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for a in 1..=self.grid.n {
            out.push_str(&format!(",x{a}"));
        }
        out.push_str(",i,j,re,im\n");
        for (ti, &t) in self.times.iter().enumerate() {
            for p in 0..self.points() {
                let x = self.grid.coords(p);
                let m = self.value(ti, p);
                for i in 0..self.size {
                    for j in 0..self.size {
                        out.push_str(&fmt_f64(t));
                        for &c in &x {
                            out.push(',');
                            out.push_str(&fmt_f64(c));
                        }
                        let v = m[(i, j)];
                        out.push_str(&format!(
                            ",{i},{j},{},{}\n",
                            fmt_f64(v.re),
                            fmt_f64(v.im)
                        ));
                    }
                }
            }
        }
        out
    }

    /// Companion JSON header describing the field (written next to the CSV).
    pub fn header_json(&self, config_digest: Option<&str>) -> Result<String> {
        #[derive(Serialize)]
        struct Header<'a> {
            kind: &'a str,
            derivative: String,
            size: usize,
            origin_excluded: bool,
            times: &'a [f64],
            grid: &'a GridSpec,
            #[serde(skip_serializing_if = "Option::is_none")]
            config_digest: Option<&'a str>,
        }
        let h = Header {
            kind: self.kind.label(),
            derivative: self.derivative.to_string(),
            size: self.size,
            origin_excluded: self.origin_excluded,
            times: &self.times,
            grid: &self.grid,
            config_digest,
        };
        Ok(serde_json::to_string_pretty(&h)?)
    }
}

fn validate_request(
    op: &ConstantOperator,
    times: &[f64],
    grid: &GridSpec,
    derivative: &MultiIndex,
) -> Result<()> {
    grid.validate()?;
    if grid.n != op.dim() {
        return Err(Error::Config(format!(
            "grid dimension {} does not match operator dimension {}",
            grid.n, op.dim()
        )));
    }
    if derivative.dim() != op.dim() {
        return Err(Error::Config(format!(
            "derivative multi-index has dimension {}, operator has {}",
            derivative.dim(),
            op.dim()
        )));
    }
    if times.is_empty() {
        return Err(Error::Config("time list is empty".into()));
    }
    for &t in times {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Config(format!("times must be positive, got {t}")));
        }
    }
    Ok(())
}

/// Classical kernel D^beta Z(s, x) of dZ/ds = A0(D) Z, synthesized from the
/// symbol exp(s A0(xi)) xi^beta.
///
/// Refuses grids whose frequency cutoff does not resolve the symbol: the
/// truncated mass is exp(-delta s Xi^2b), so we require
/// delta * s * Xi^{2b} >= 28 at every requested s.
pub fn classical_kernel(
    op: &ConstantOperator,
    times: &[f64],
    grid: &GridSpec,
    derivative: &MultiIndex,
) -> Result<KernelField> {
    validate_request(op, times, grid, derivative)?;
    let delta = op.parabolicity_delta(DEFAULT_SPHERE_SAMPLES)?;
    let xi_max = grid.xi_max();
    for &s in times {
        let q = delta * s * xi_max.powi(2 * op.half_order() as i32);
        if q < 28.0 {
            return Err(Error::Precondition(format!(
                "frequency cutoff too low for classical kernel at s = {s}: \
                 delta*s*Xi^(2b) = {q:.3} < 28; refine the grid or enlarge s"
            )));
        }
    }
    let mut values = Vec::with_capacity(times.len() * grid.point_count());
    for &s in times {
        let field = fourier::synthesize(grid, op.size(), |xi| {
            let mono = C64::new(derivative.monomial(xi), 0.0);
            if op.size() == 1 {
                let a = op.symbol(xi)[(0, 0)];
                CMatrix::from_element(1, 1, (a * s).exp() * mono)
            } else {
                crate::util::linalg::expm(&(op.symbol(xi) * C64::new(s, 0.0))) * mono
            }
        });
        values.extend(field);
    }
    Ok(KernelField::new(
        grid.clone(),
        KernelKind::Z,
        derivative.clone(),
        times.to_vec(),
        op.size(),
        values,
        false,
    ))
}

/// Fractional kernel D^beta Z_alpha(t, x) by the requested route.
pub fn z_kernel(
    op: &ConstantOperator,
    alpha: crate::types::FractionalOrder,
    times: &[f64],
    grid: &GridSpec,
    derivative: &MultiIndex,
    route: Route,
) -> Result<KernelField> {
    validate_request(op, times, grid, derivative)?;
    match route {
        Route::Subordination => subordination::subordinated_field(
            op,
            alpha,
            WrightKernel::Phi,
            KernelKind::ZAlpha,
            times,
            grid,
            derivative,
        ),
        Route::Fourier => mlroute::ml_field(
            op,
            alpha,
            MLFamily::One,
            KernelKind::ZAlpha,
            times,
            grid,
            derivative,
        ),
    }
}

/// Fractional kernel D^beta Y_alpha(t, x) by the requested route.
pub fn y_kernel(
    op: &ConstantOperator,
    alpha: crate::types::FractionalOrder,
    times: &[f64],
    grid: &GridSpec,
    derivative: &MultiIndex,
    route: Route,
) -> Result<KernelField> {
    validate_request(op, times, grid, derivative)?;
    match route {
        Route::Subordination => subordination::subordinated_field(
            op,
            alpha,
            WrightKernel::Psi,
            KernelKind::YAlpha,
            times,
            grid,
            derivative,
        ),
        Route::Fourier => mlroute::ml_field(
            op,
            alpha,
            MLFamily::Alpha,
            KernelKind::YAlpha,
            times,
            grid,
            derivative,
        ),
    }
}

/// Time derivative d/dt Z_alpha(t, x) by the requested route.
pub fn dt_z_kernel(
    op: &ConstantOperator,
    alpha: crate::types::FractionalOrder,
    times: &[f64],
    grid: &GridSpec,
    derivative: &MultiIndex,
    route: Route,
) -> Result<KernelField> {
    validate_request(op, times, grid, derivative)?;
    match route {
        Route::Subordination => subordination::subordinated_field(
            op,
            alpha,
            WrightKernel::Nu,
            KernelKind::DtZAlpha,
            times,
            grid,
            derivative,
        ),
        Route::Fourier => mlroute::ml_field(
            op,
            alpha,
            MLFamily::Zero,
            KernelKind::DtZAlpha,
            times,
            grid,
            derivative,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::ConstantOperator;

    fn heat() -> ConstantOperator {
        ConstantOperator::scalar_1d(1, -1.0)
    }

    #[test]
    fn classical_heat_kernel_is_gaussian() {
        // a2 = -1 gives dZ/ds = Z_xx, so Z(s,x) = exp(-x^2/4s)/sqrt(4 pi s).
        let grid = GridSpec::new(1, 12.0, 512).unwrap();
        let field = classical_kernel(&heat(), &[0.5, 1.0], &grid, &MultiIndex::zero(1)).unwrap();
        for (ti, &s) in field.times.iter().enumerate() {
            for p in 0..field.points() {
                let x = field.grid.coords(p)[0];
                let exact = (-x * x / (4.0 * s)).exp() / (4.0 * std::f64::consts::PI * s).sqrt();
                let got = field.value(ti, p)[(0, 0)];
                assert!(
                    (got.re - exact).abs() < 1e-8 && got.im.abs() < 1e-10,
                    "s={s} x={x}: got {got}, want {exact}"
                );
            }
        }
    }

    #[test]
    fn classical_kernel_integral_is_identity() {
        let grid = GridSpec::new(1, 12.0, 512).unwrap();
        let field = classical_kernel(&heat(), &[0.25, 2.0], &grid, &MultiIndex::zero(1)).unwrap();
        for ti in 0..field.times.len() {
            let total = field.spatial_integral(ti);
            assert!((total[(0, 0)].re - 1.0).abs() < 1e-12);
            assert!(total[(0, 0)].im.abs() < 1e-13);
        }
    }

    #[test]
    fn classical_first_derivative_matches_gaussian_gradient() {
        // D^1 = (1/i) d/dx, so D Z(s,x) = i x/(2s) * Gaussian.
        let grid = GridSpec::new(1, 12.0, 512).unwrap();
        let field =
            classical_kernel(&heat(), &[1.0], &grid, &MultiIndex::new(vec![1])).unwrap();
        for p in (0..field.points()).step_by(13) {
            let x = field.grid.coords(p)[0];
            let g = (-x * x / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
            let exact = x / 2.0 * g;
            let got = field.value(0, p)[(0, 0)];
            assert!(
                (got.im - exact).abs() < 1e-8 && got.re.abs() < 1e-10,
                "x={x}: got {got}, want {exact} i"
            );
        }
    }

    #[test]
    fn classical_coupled_diagonal_system_decouples() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(-1.0, 0.0),
            C64::new(-3.0, 0.0),
        ]));
        let op = ConstantOperator::new(
            1,
            2,
            1,
            [(MultiIndex::new(vec![2]), a)].into_iter().collect(),
        )
        .unwrap();
        // synthesis periodizes over the box, and at the seam x = -L the two
        // nearest images add equally; L = 18 pushes that below tolerance for
        // the wide component
        let grid = GridSpec::new(1, 18.0, 512).unwrap();
        let field = classical_kernel(&op, &[1.0], &grid, &MultiIndex::zero(1)).unwrap();
        for p in (0..field.points()).step_by(11) {
            let x = field.grid.coords(p)[0];
            let m = field.value(0, p);
            for (k, c) in [1.0f64, 3.0].iter().enumerate() {
                let exact = (-x * x / (4.0 * c)).exp() / (4.0 * std::f64::consts::PI * c).sqrt();
                assert!(
                    (m[(k, k)].re - exact).abs() < 1e-8,
                    "x={x} k={k} got={} want={exact}",
                    m[(k, k)].re
                );
            }
            assert!(m[(0, 1)].norm() < 1e-12 && m[(1, 0)].norm() < 1e-12);
        }
    }

    #[test]
    fn classical_kernel_refuses_unresolved_grid() {
        let grid = GridSpec::new(1, 12.0, 16).unwrap();
        let err = classical_kernel(&heat(), &[0.05], &grid, &MultiIndex::zero(1)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(err.to_string().contains("28"));
    }

    #[test]
    fn csv_and_header_are_deterministic() {
        let grid = GridSpec::new(1, 12.0, 64).unwrap();
        let f1 = classical_kernel(&heat(), &[2.0], &grid, &MultiIndex::zero(1)).unwrap();
        let f2 = classical_kernel(&heat(), &[2.0], &grid, &MultiIndex::zero(1)).unwrap();
        assert_eq!(f1.to_csv(), f2.to_csv());
        assert!(f1.to_csv().starts_with("t,x1,i,j,re,im\n"));
        let h = f1.header_json(Some("abc123")).unwrap();
        assert!(h.contains("\"kind\": \"Z\"") && h.contains("abc123"));
        assert_eq!(h, f2.header_json(Some("abc123")).unwrap());
    }

    #[test]
    fn rejects_mismatched_requests() {
        let grid = GridSpec::new(2, 12.0, 64).unwrap();
        assert!(classical_kernel(&heat(), &[1.0], &grid, &MultiIndex::zero(2)).is_err());
        let grid1 = GridSpec::new(1, 12.0, 64).unwrap();
        assert!(classical_kernel(&heat(), &[], &grid1, &MultiIndex::zero(1)).is_err());
        assert!(classical_kernel(&heat(), &[-1.0], &grid1, &MultiIndex::zero(1)).is_err());
        assert!(classical_kernel(&heat(), &[1.0], &grid1, &MultiIndex::zero(2)).is_err());
    }
}
