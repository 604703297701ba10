//! Hankel-type contour gamma(r, beta) used by the matrix Mittag-Leffler
//! representations: the circular arc |eta| = r, |arg eta| <= beta, continued
//! by the two rays arg eta = +-beta out to infinity. The admissible window
//!   pi alpha / 2 < beta < min(pi/2, pi alpha)
//! keeps the contour in the right half-plane (so resolvents of dissipative
//! matrices stay bounded) while cos(beta/alpha) < 0 makes e^{eta^{1/alpha}}
//! decay along the rays.

use crate::error::{Error, Result};
use crate::types::FractionalOrder;
use crate::util::quad::{composite_gl, gauss_legendre};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct HankelContour {
    pub radius: f64,
    pub angle: f64,
    /// Gauss nodes per ray panel (a panel is a few radians of phase).
    pub nodes_per_ray: usize,
    pub nodes_on_arc: usize,
}

impl HankelContour {
    pub fn new(
        alpha: FractionalOrder,
        radius: f64,
        angle: f64,
        nodes_per_ray: usize,
        nodes_on_arc: usize,
    ) -> Result<Self> {
        let a = alpha.get();
        let lo = std::f64::consts::FRAC_PI_2 * a;
        let hi = (std::f64::consts::FRAC_PI_2).min(std::f64::consts::PI * a);
        if !(angle > lo && angle < hi) {
            return Err(Error::Config(format!(
                "contour angle {angle} outside admissible window ({lo}, {hi}) for alpha={a}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::Config(format!("contour radius must be > 0, got {radius}")));
        }
        if nodes_per_ray < 8 || nodes_on_arc < 8 {
            return Err(Error::Config(
                "contour needs at least 8 nodes per ray and on the arc".into(),
            ));
        }
        // cos(beta/alpha) < 0 follows from angle > pi alpha / 2; assert anyway
        debug_assert!((angle / a).cos() < 0.0);
        Ok(HankelContour {
            radius,
            angle,
            nodes_per_ray,
            nodes_on_arc,
        })
    }

    /// Midpoint of the admissible angle window; the default contour.
    pub fn standard(alpha: FractionalOrder) -> Self {
        let a = alpha.get();
        let lo = std::f64::consts::FRAC_PI_2 * a;
        let hi = (std::f64::consts::FRAC_PI_2).min(std::f64::consts::PI * a);
        // 16 Gauss-Legendre nodes per <=4-radian ray panel leave ~1e-13
        // quadrature error; 12 were measurably short of the 1e-10 target
        HankelContour::new(alpha, 1.0, 0.5 * (lo + hi), 16, 32).expect("midpoint angle admissible")
    }

    fn with_nodes(&self, nodes_per_ray: usize, nodes_on_arc: usize) -> Self {
        HankelContour {
            radius: self.radius,
            angle: self.angle,
            nodes_per_ray,
            nodes_on_arc,
        }
    }

    /// Quadrature nodes (eta, w) so that contour integrals of f are
    /// approximated by sum w_k f(eta_k); orientation is counterclockwise
    /// (lower ray inward, arc, upper ray outward). `pow` is the magnitude of
    /// the algebraic weight carried by the integrand, used for truncation.
    ///
    /// The rays are parametrised by v = t^{1/alpha} (eta = v^alpha e^{+-i
    /// beta}), which turns the ray integrand into exp(v cos(beta/alpha)) times
    /// a fixed-frequency oscillation exp(i v sin(beta/alpha)); panels of a few
    /// radians of phase with a moderate Gauss rule then resolve it to machine
    /// precision uniformly in alpha.
    pub fn quadrature(&self, alpha: FractionalOrder, pow: f64) -> Vec<(Complex64, Complex64)> {
        let a = alpha.get();
        let cos_ba = (self.angle / a).cos(); // < 0 inside the angle window
        let sin_ba = (self.angle / a).sin().abs();
        let v0 = self.radius.powf(1.0 / a);
        // endpoint: exp(v cos) v^{alpha pow} below e^-48 of the arc level
        let mag = |v: f64| v * cos_ba + a * pow.max(0.0) * v.ln();
        let mut v_max = (v0 + 48.0 / cos_ba.abs()).max(2.0 * v0);
        for _ in 0..200 {
            if mag(v_max) < mag(v0) - 48.0 {
                break;
            }
            v_max *= 1.25;
        }
        // a panel spans <= 4 radians of phase and <= 4 e-foldings of decay
        let width = 4.0 / sin_ba.max(cos_ba.abs());
        let panels = ((v_max - v0) / width).ceil() as usize;
        let mut breakpoints = Vec::with_capacity(panels + 1);
        for i in 0..=panels {
            breakpoints.push(v0 + (v_max - v0) * i as f64 / panels as f64);
        }
        let (ray_v, ray_w) = composite_gl(&breakpoints, self.nodes_per_ray);

        let mut out = Vec::with_capacity(2 * ray_v.len() + self.nodes_on_arc);
        let e_lower = Complex64::from_polar(1.0, -self.angle);
        // lower ray traversed from v_max toward the arc: minus sign; the
        // substitution contributes d eta = alpha v^{alpha-1} e^{-i beta} dv
        for (v, w) in ray_v.iter().zip(&ray_w) {
            let jac = a * v.powf(a - 1.0) * w;
            out.push((e_lower * v.powf(a), -e_lower * jac));
        }
        // arc theta in [-beta, beta], d eta = i r e^{i theta} d theta
        let (arc_x, arc_w) = gauss_legendre(self.nodes_on_arc);
        for (x, w) in arc_x.iter().zip(&arc_w) {
            let theta = self.angle * x;
            let eta = Complex64::from_polar(self.radius, theta);
            out.push((eta, Complex64::i() * eta * (self.angle * w)));
        }
        let e_upper = Complex64::from_polar(1.0, self.angle);
        for (v, w) in ray_v.iter().zip(&ray_w) {
            let jac = a * v.powf(a - 1.0) * w;
            out.push((e_upper * v.powf(a), e_upper * jac));
        }
        out
    }

    /// Refined copy (doubled node counts) for convergence control.
    pub fn refined(&self) -> Self {
        self.with_nodes(self.nodes_per_ray * 2, self.nodes_on_arc * 2)
    }
}

/// e^{eta^{1/alpha}} on the principal branch; |arg eta| < pi/2 on our contours
/// so arg(eta)/alpha stays inside (-pi, pi).
pub fn exp_eta_root(eta: Complex64, alpha: f64) -> Complex64 {
    let (r, th) = eta.to_polar();
    Complex64::from_polar(r.powf(1.0 / alpha), th / alpha).exp()
}

/// eta^{pow} on the principal branch.
pub fn eta_pow(eta: Complex64, pow: f64) -> Complex64 {
    if pow == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let (r, th) = eta.to_polar();
    Complex64::from_polar(r.powf(pow), th * pow)
}
