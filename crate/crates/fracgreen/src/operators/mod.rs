//! Differential operators A(x,D) = A0 + A1 for strongly parabolic systems.
//!
//! The principal part A0 is homogeneous of order 2b, the lower part A1 has
//! order < 2b, and D = (1/i) d/dx throughout, so a plane wave e^{ix.xi} z is
//! an eigenfunction of the constant-coefficient operator with matrix
//! eigenvalue A0(xi) = sum a_mu xi^mu. Strong parabolicity is the
//! quadratic-form condition Re<A0(eta)z, z> <= -delta |eta|^{2b} |z|^2,
//! certified here by sampling the unit sphere (homogeneity reduces the
//! check to |eta| = 1).

mod expr;

pub use expr::Expr;

use crate::error::{Error, Result};
use crate::specfun::mittag::dissipativity_constant;
use crate::util::linalg::{C64, CMatrix, CVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Default number of unit-sphere samples for parabolicity certification.
pub const DEFAULT_SPHERE_SAMPLES: usize = 256;

/// Powers of (1/i) = -i, exact: used for the D = (1/i) d/dx convention.
const INV_I_POW: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, -1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, 1.0),
];

/// Derivative multi-index beta = (beta_1, ..., beta_n), |beta| = sum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// Monomial xi^beta = prod xi_a^{beta_a}.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(xi)
            .map(|(&m, &x)| x.powi(m as i32))
            .product()
    }

    /// Parse the comma-separated form used as JSON map keys: "2", "1,0,3".
    pub fn parse(text: &str) -> Result<Self> {
        let comps: Result<Vec<u32>> = text
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Config(format!("bad multi-index component {p:?} in {text:?}")))
            })
            .collect();
        let comps = comps?;
        if comps.is_empty() {
            return Err(Error::Config(format!("empty multi-index {text:?}")));
        }
        Ok(MultiIndex(comps))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl serde::Serialize for MultiIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        MultiIndex::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Deterministic unit-sphere sample set; n = 1 gives the two signs, n = 2 a
/// uniform angle lattice, n = 3 a Fibonacci spiral, higher n seeded
/// normalized Gaussians. All choices are reproducible across runs.
pub fn unit_sphere_samples(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        3 => {
            // golden-angle spiral: z marches uniformly, longitude steps by
            // the golden angle, giving a near-uniform point set
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_5EED);
            (0..count)
                .map(|_| {
                    loop {
                        // Box-Muller pairs give an isotropic Gaussian; reject
                        // the (measure-zero) near-origin draws before normalizing
                        let v: Vec<f64> = (0..n.div_ceil(2))
                            .flat_map(|_| {
                                let u1: f64 = rng.gen_range(1e-12..1.0);
                                let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                                let r = (-2.0 * u1.ln()).sqrt();
                                [r * u2.cos(), r * u2.sin()]
                            })
                            .take(n)
                            .collect();
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if norm > 1e-6 {
                            return v.iter().map(|x| x / norm).collect();
                        }
                    }
                })
                .collect()
        }
    }
}

/// Homogeneous constant-coefficient operator A0(D) of order 2b.
#[derive(Debug, Clone)]
pub struct ConstantOperator {
    n: usize,
    size: usize,
    b: u32,
    coeffs: BTreeMap<MultiIndex, CMatrix>,
}

impl ConstantOperator {
    pub fn new(
        n: usize,
        size: usize,
        b: u32,
        coeffs: BTreeMap<MultiIndex, CMatrix>,
    ) -> Result<Self> {
        if n == 0 || size == 0 || b == 0 {
            return Err(Error::Config(format!(
                "operator needs n, size, b positive; got n={n}, size={size}, b={b}"
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::Config("operator has no coefficients".into()));
        }
        for (mu, a) in &coeffs {
            if mu.dim() != n {
                return Err(Error::Config(format!(
                    "multi-index {mu} has dimension {}, operator has n={n}",
                    mu.dim()
                )));
            }
            if mu.order() != 2 * b {
                return Err(Error::Config(format!(
                    "constant operator is homogeneous of order {}, got key {mu} of order {}",
                    2 * b,
                    mu.order()
                )));
            }
            if a.nrows() != size || a.ncols() != size {
                return Err(Error::Config(format!(
                    "coefficient {mu} is {}x{}, system size is {size}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Config(format!("coefficient {mu} has non-finite entries")));
            }
        }
        Ok(ConstantOperator { n, size, b, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn half_order(&self) -> u32 {
        self.b
    }

    pub fn order(&self) -> u32 {
        2 * self.b
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, CMatrix> {
        &self.coeffs
    }

    /// Matrix symbol A0(xi) = sum_{|mu|=2b} a_mu xi^mu; homogeneous of
    /// degree 2b, and the plane-wave eigenvalue under D = (1/i) d/dx.
    pub fn symbol(&self, xi: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.size, self.size);
        for (mu, a) in &self.coeffs {
            let m = mu.monomial(xi);
            if m != 0.0 {
                out += a * C64::new(m, 0.0);
            }
        }
        out
    }

    /// Best delta with Re<A0(eta)z, z> <= -delta |z|^2 over the sampled
    /// unit sphere; a positive value certifies strong parabolicity on the
    /// sample, a nonpositive one is the rejection signal.
    pub fn parabolicity_delta(&self, sphere_samples: usize) -> Result<f64> {
        if sphere_samples < 2 * self.n {
            return Err(Error::Precondition(format!(
                "need at least {} sphere samples for n={}, got {sphere_samples}",
                2 * self.n,
                self.n
            )));
        }
        let samples = unit_sphere_samples(self.n, sphere_samples);
        let delta = samples
            .iter()
            .map(|eta| dissipativity_constant(&self.symbol(eta)))
            .fold(f64::INFINITY, f64::min);
        Ok(delta)
    }

    /// Convenience scalar 1-D constructor: A0 = a * D^{2b}.
    pub fn scalar_1d(b: u32, a: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::new(vec![2 * b]), CMatrix::from_element(1, 1, C64::new(a, 0.0)));
        ConstantOperator::new(1, 1, b, coeffs).expect("scalar operator is well-formed")
    }
}

/// Coefficient function x -> N x N matrix.
pub type CoeffFn = Arc<dyn Fn(&[f64]) -> CMatrix + Send + Sync>;

/// Which part of A(x,D) an `apply` call realizes.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorPart {
    Full,
    Principal,
    Lower,
    FrozenAt(Vec<f64>),
}

/// Variable-coefficient system A(x,D) = A0(x,D) + A1(x,D) with declared
/// Holder regularity of the coefficients.
#[derive(Clone)]
pub struct VariableSystem {
    n: usize,
    size: usize,
    b: u32,
    principal: BTreeMap<MultiIndex, CoeffFn>,
    lower: BTreeMap<MultiIndex, CoeffFn>,
    holder_exponent: f64,
    holder_constant: f64,
    bound: f64,
}

impl fmt::Debug for VariableSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VariableSystem")
            .field("n", &self.n)
            .field("size", &self.size)
            .field("b", &self.b)
            .field("principal", &self.principal.keys().collect::<Vec<_>>())
            .field("lower", &self.lower.keys().collect::<Vec<_>>())
            .field("holder_exponent", &self.holder_exponent)
            .field("holder_constant", &self.holder_constant)
            .field("bound", &self.bound)
            .finish()
    }
}

impl VariableSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        size: usize,
        b: u32,
        principal: BTreeMap<MultiIndex, CoeffFn>,
        lower: BTreeMap<MultiIndex, CoeffFn>,
        holder_exponent: f64,
        holder_constant: f64,
        bound: f64,
    ) -> Result<Self> {
        if n == 0 || size == 0 || b == 0 {
            return Err(Error::Config(format!(
                "system needs n, size, b positive; got n={n}, size={size}, b={b}"
            )));
        }
        if !(holder_exponent > 0.0 && holder_exponent <= 1.0) {
            return Err(Error::Config(format!(
                "Holder exponent must lie in (0, 1], got {holder_exponent}"
            )));
        }
        if !(holder_constant >= 0.0 && holder_constant.is_finite()) {
            return Err(Error::Config(format!("bad Holder constant {holder_constant}")));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::Config(format!("bad coefficient bound {bound}")));
        }
        if principal.is_empty() {
            return Err(Error::Config("system has no principal coefficients".into()));
        }
        for beta in principal.keys() {
            if beta.dim() != n || beta.order() != 2 * b {
                return Err(Error::Config(format!(
                    "principal key {beta} must have dimension {n} and order {}",
                    2 * b
                )));
            }
        }
        for beta in lower.keys() {
            if beta.dim() != n || beta.order() >= 2 * b {
                return Err(Error::Config(format!(
                    "lower-order key {beta} must have dimension {n} and order < {}",
                    2 * b
                )));
            }
        }
        Ok(VariableSystem {
            n,
            size,
            b,
            principal,
            lower,
            holder_exponent,
            holder_constant,
            bound,
        })
    }

    /// Wrap a constant operator as a (trivially Holder) variable system.
    pub fn from_constant(op: &ConstantOperator, bound: f64) -> Self {
        let principal: BTreeMap<MultiIndex, CoeffFn> = op
            .coeffs()
            .iter()
            .map(|(mu, a)| {
                let a = a.clone();
                let f: CoeffFn = Arc::new(move |_: &[f64]| a.clone());
                (mu.clone(), f)
            })
            .collect();
        VariableSystem::new(
            op.dim(),
            op.size(),
            op.half_order(),
            principal,
            BTreeMap::new(),
            1.0,
            0.0,
            bound,
        )
        .expect("constant wrap is well-formed")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn half_order(&self) -> u32 {
        self.b
    }

    pub fn holder_exponent(&self) -> f64 {
        self.holder_exponent
    }

    pub fn holder_constant(&self) -> f64 {
        self.holder_constant
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn principal(&self) -> &BTreeMap<MultiIndex, CoeffFn> {
        &self.principal
    }

    pub fn lower(&self) -> &BTreeMap<MultiIndex, CoeffFn> {
        &self.lower
    }

    /// Constant operator with the principal coefficients frozen at y and
    /// all lower-order terms set to zero; rejects a frozen operator that
    /// is not strongly parabolic.
    pub fn freeze(&self, y: &[f64]) -> Result<ConstantOperator> {
        if y.len() != self.n {
            return Err(Error::Precondition(format!(
                "freeze point has dimension {}, system has n={}",
                y.len(),
                self.n
            )));
        }
        let coeffs: BTreeMap<MultiIndex, CMatrix> = self
            .principal
            .iter()
            .map(|(beta, f)| (beta.clone(), f(y)))
            .collect();
        let op = ConstantOperator::new(self.n, self.size, self.b, coeffs)?;
        let delta = op.parabolicity_delta(DEFAULT_SPHERE_SAMPLES.max(2 * self.n))?;
        if delta <= 0.0 {
            return Err(Error::Precondition(format!(
                "operator frozen at {y:?} is not strongly parabolic (delta = {delta:.6e})"
            )));
        }
        Ok(op)
    }

    /// Spot-verify the declared Holder constant, the coefficient bound, and
    /// uniform parabolicity of the frozen family on random points of the box
    /// [lo, hi]^n. Declared metadata is checked, never inferred.
    pub fn spot_check(&self, lo: f64, hi: f64, pairs: usize, seed: u64) -> Result<SpotCheck> {
        if !(hi > lo) {
            return Err(Error::Precondition(format!("empty box [{lo}, {hi}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..self.n).map(|_| rng.gen_range(lo..hi)).collect()
        };
        let mut report = SpotCheck {
            max_holder_quotient: 0.0,
            max_coeff_norm: 0.0,
            min_frozen_delta: f64::INFINITY,
            pairs,
        };
        let all_terms: Vec<(&MultiIndex, &CoeffFn)> =
            self.principal.iter().chain(self.lower.iter()).collect();
        for _ in 0..pairs {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let dist = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            for (beta, f) in &all_terms {
                let ax = f(&x);
                let ay = f(&y);
                let norm = crate::util::linalg::op_norm_2(&ax);
                report.max_coeff_norm = report.max_coeff_norm.max(norm);
                if norm > self.bound * (1.0 + 1e-9) {
                    return Err(Error::Precondition(format!(
                        "coefficient {beta} has norm {norm:.6e} at {x:?}, declared bound {}",
                        self.bound
                    )));
                }
                if dist > 1e-12 {
                    let quot = crate::util::linalg::op_norm_2(&(&ax - &ay))
                        / dist.powf(self.holder_exponent);
                    report.max_holder_quotient = report.max_holder_quotient.max(quot);
                    if quot > self.holder_constant * (1.0 + 1e-9) + 1e-12 {
                        return Err(Error::Precondition(format!(
                            "coefficient {beta} has Holder quotient {quot:.6e} between {x:?} and {y:?}, declared constant {}",
                            self.holder_constant
                        )));
                    }
                }
            }
            let op = self.freeze(&x)?;
            let delta = op.parabolicity_delta(DEFAULT_SPHERE_SAMPLES.max(2 * self.n))?;
            report.min_frozen_delta = report.min_frozen_delta.min(delta);
        }
        Ok(report)
    }

    /// Apply the requested part of A(x,D) to a sampled field at one grid
    /// point, by centered finite differences of accuracy order 2.
    pub fn apply(&self, part: &OperatorPart, field: &SampledField, idx: &[usize]) -> Result<CVector> {
        if field.shape.len() != self.n || idx.len() != self.n {
            return Err(Error::Precondition(format!(
                "field/index dimension mismatch: system n={}, field n={}, index n={}",
                self.n,
                field.shape.len(),
                idx.len()
            )));
        }
        if field.component_count() != self.size {
            return Err(Error::Precondition(format!(
                "field has {} components, system size is {}",
                field.component_count(),
                self.size
            )));
        }
        let x = field.point(idx);
        let mut out = CVector::zeros(self.size);
        let mut add_terms = |terms: &BTreeMap<MultiIndex, CoeffFn>, at: &[f64]| -> Result<()> {
            for (beta, f) in terms {
                let a = f(at);
                let d = field.centered_derivative(beta, idx)?;
                let factor = INV_I_POW[(beta.order() % 4) as usize];
                out += a * d * factor;
            }
            Ok(())
        };
        match part {
            OperatorPart::Full => {
                add_terms(&self.principal, &x)?;
                add_terms(&self.lower, &x)?;
            }
            OperatorPart::Principal => add_terms(&self.principal, &x)?,
            OperatorPart::Lower => add_terms(&self.lower, &x)?,
            OperatorPart::FrozenAt(y) => {
                if y.len() != self.n {
                    return Err(Error::Precondition(format!(
                        "frozen point has dimension {}, system has n={}",
                        y.len(),
                        self.n
                    )));
                }
                add_terms(&self.principal, y)?;
            }
        }
        Ok(out)
    }

    /// Dense matrix of the requested part on a periodic grid, acting on the
    /// row-major field vector (grid-point blocks of length `size`). Built
    /// once and LU-factored by implicit time steppers.
    pub fn operator_matrix(&self, part: &OperatorPart, field: &SampledField) -> Result<CMatrix> {
        if !field.periodic {
            return Err(Error::Precondition(
                "operator_matrix requires a periodic grid".into(),
            ));
        }
        if field.shape.len() != self.n || field.component_count() != self.size {
            return Err(Error::Precondition(
                "operator_matrix grid does not match the system".into(),
            ));
        }
        let points = field.point_count();
        let dim = points * self.size;
        let mut m = CMatrix::zeros(dim, dim);
        for p in 0..points {
            let idx = field.multi_of(p);
            let x = field.point(&idx);
            let mut add_terms = |terms: &BTreeMap<MultiIndex, CoeffFn>, at: &[f64], m: &mut CMatrix| -> Result<()> {
                for (beta, f) in terms {
                    let a = f(at);
                    let factor = INV_I_POW[(beta.order() % 4) as usize];
                    let taps = field.stencil_taps(beta, &idx)?;
                    for (q, w) in taps {
                        let scale = factor * C64::new(w, 0.0);
                        for i in 0..self.size {
                            for j in 0..self.size {
                                m[(p * self.size + i, q * self.size + j)] += a[(i, j)] * scale;
                            }
                        }
                    }
                }
                Ok(())
            };
            match part {
                OperatorPart::Full => {
                    add_terms(&self.principal, &x, &mut m)?;
                    add_terms(&self.lower, &x, &mut m)?;
                }
                OperatorPart::Principal => add_terms(&self.principal, &x, &mut m)?,
                OperatorPart::Lower => add_terms(&self.lower, &x, &mut m)?,
                OperatorPart::FrozenAt(y) => add_terms(&self.principal, y, &mut m)?,
            }
        }
        Ok(m)
    }
}

/// Result of `VariableSystem::spot_check`.
#[derive(Debug, Clone)]
pub struct SpotCheck {
    pub max_holder_quotient: f64,
    pub max_coeff_norm: f64,
    pub min_frozen_delta: f64,
    pub pairs: usize,
}

/// Vector field sampled on a uniform rectangular grid, row-major over
/// `shape`; `periodic` selects wrap-around stencils, otherwise stencils
/// must fit inside the grid.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub periodic: bool,
    pub values: Vec<CVector>,
}

impl SampledField {
    pub fn zeros(
        shape: Vec<usize>,
        origin: Vec<f64>,
        spacing: Vec<f64>,
        periodic: bool,
        components: usize,
    ) -> Self {
        let points: usize = shape.iter().product();
        SampledField {
            shape,
            origin,
            spacing,
            periodic,
            values: vec![CVector::zeros(components); points],
        }
    }

    pub fn from_fn(
        shape: Vec<usize>,
        origin: Vec<f64>,
        spacing: Vec<f64>,
        periodic: bool,
        f: impl Fn(&[f64]) -> CVector,
    ) -> Self {
        let points: usize = shape.iter().product();
        let mut field = SampledField {
            shape,
            origin,
            spacing,
            periodic,
            values: Vec::with_capacity(points),
        };
        for p in 0..points {
            let idx = field.multi_of(p);
            let x = field.point(&idx);
            field.values.push(f(&x));
        }
        field
    }

    /// Uniform periodic grid on [-L, L)^n with M points per axis.
    pub fn periodic_box(n: usize, half_width: f64, points_per_axis: usize, components: usize) -> Self {
        let spacing = 2.0 * half_width / points_per_axis as f64;
        SampledField::zeros(
            vec![points_per_axis; n],
            vec![-half_width; n],
            vec![spacing; n],
            true,
            components,
        )
    }

    pub fn point_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn component_count(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(self.origin.iter().zip(&self.spacing))
            .map(|(&i, (&o, &h))| o + i as f64 * h)
            .collect()
    }

    pub fn linear_of(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for (a, &i) in idx.iter().enumerate() {
            lin = lin * self.shape[a] + i;
        }
        lin
    }

    pub fn multi_of(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for a in (0..self.shape.len()).rev() {
            idx[a] = lin % self.shape[a];
            lin /= self.shape[a];
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> &CVector {
        &self.values[self.linear_of(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: CVector) {
        let lin = self.linear_of(idx);
        self.values[lin] = v;
    }

    /// Linear indices and weights of the tensor-product centered stencil for
    /// d^beta at `idx`, weights including the 1/h^|beta| scaling.
    fn stencil_taps(&self, beta: &MultiIndex, idx: &[usize]) -> Result<Vec<(usize, f64)>> {
        let mut taps: Vec<(usize, f64)> = vec![(self.linear_of(idx), 1.0)];
        for (axis, &m) in beta.components().iter().enumerate() {
            if m == 0 {
                continue;
            }
            let st = centered_stencil(m);
            let radius = (st.len() / 2) as i64;
            let scale = self.spacing[axis].powi(m as i32);
            let len = self.shape[axis] as i64;
            let mut next: Vec<(usize, f64)> = Vec::with_capacity(taps.len() * st.len());
            for &(lin, w) in &taps {
                let base = self.multi_of(lin);
                for (k, &c) in st.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let off = k as i64 - radius;
                    let raw = base[axis] as i64 + off;
                    let wrapped = if self.periodic {
                        raw.rem_euclid(len)
                    } else if (0..len).contains(&raw) {
                        raw
                    } else {
                        return Err(Error::Precondition(format!(
                            "stencil for derivative {beta} leaves the grid at index {base:?} (axis {axis}); pad or restrict the domain"
                        )));
                    };
                    let mut shifted = base.clone();
                    shifted[axis] = wrapped as usize;
                    next.push((self.linear_of(&shifted), w * c / scale));
                }
            }
            taps = merge_taps(next);
        }
        Ok(taps)
    }

    /// Centered finite-difference d^beta u at `idx` (accuracy order 2).
    pub fn centered_derivative(&self, beta: &MultiIndex, idx: &[usize]) -> Result<CVector> {
        let taps = self.stencil_taps(beta, idx)?;
        let mut out = CVector::zeros(self.component_count());
        for (lin, w) in taps {
            out += &self.values[lin] * C64::new(w, 0.0);
        }
        Ok(out)
    }
}

/// Centered second-order stencil for d^m/dx^m, radius ceil(m/2), without
/// the 1/h^m scaling: built by convolving the three-point first- and
/// second-derivative stencils, so composed accuracy stays O(h^2).
fn centered_stencil(m: u32) -> Vec<f64> {
    let d1 = [-0.5, 0.0, 0.5];
    let d2 = [1.0, -2.0, 1.0];
    let mut st = vec![1.0];
    let mut remaining = m;
    while remaining >= 2 {
        st = convolve(&st, &d2);
        remaining -= 2;
    }
    if remaining == 1 {
        st = convolve(&st, &d1);
    }
    st
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn merge_taps(mut taps: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    taps.sort_by_key(|&(lin, _)| lin);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(taps.len());
    for (lin, w) in taps {
        match out.last_mut() {
            Some((l, acc)) if *l == lin => *acc += w,
            _ => out.push((lin, w)),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// JSON system files
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(untagged)]
enum EntrySpec {
    Num(f64),
    Expr(String),
    Pair([f64; 2]),
    ExprPair([String; 2]),
}

#[derive(Deserialize)]
struct ConstantOperatorSpec {
    n: usize,
    size: usize,
    b: u32,
    coeffs: BTreeMap<String, Vec<Vec<EntrySpec>>>,
}

#[derive(Deserialize)]
struct VariableSystemSpec {
    n: usize,
    size: usize,
    b: u32,
    holder_exponent: f64,
    holder_constant: f64,
    bound: f64,
    principal: BTreeMap<String, Vec<Vec<EntrySpec>>>,
    #[serde(default)]
    lower: BTreeMap<String, Vec<Vec<EntrySpec>>>,
}

fn constant_matrix(key: &str, rows: &[Vec<EntrySpec>], size: usize) -> Result<CMatrix> {
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(Error::Config(format!(
            "coefficient {key:?} must be a {size}x{size} matrix"
        )));
    }
    let mut m = CMatrix::zeros(size, size);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = match e {
                EntrySpec::Num(v) => C64::new(*v, 0.0),
                EntrySpec::Pair([re, im]) => C64::new(*re, *im),
                EntrySpec::Expr(_) | EntrySpec::ExprPair(_) => {
                    return Err(Error::Config(format!(
                        "coefficient {key:?} entry ({i},{j}) is an expression; a constant operator needs numbers"
                    )))
                }
            };
        }
    }
    Ok(m)
}

enum CompiledEntry {
    Const(C64),
    Var { re: Option<Expr>, im: Option<Expr> },
}

impl CompiledEntry {
    fn eval(&self, x: &[f64]) -> Result<C64> {
        Ok(match self {
            CompiledEntry::Const(z) => *z,
            CompiledEntry::Var { re, im } => {
                let r = re.as_ref().map_or(Ok(0.0), |e| e.eval(x))?;
                let i = im.as_ref().map_or(Ok(0.0), |e| e.eval(x))?;
                C64::new(r, i)
            }
        })
    }
}

fn compile_matrix(key: &str, rows: &[Vec<EntrySpec>], size: usize) -> Result<CoeffFn> {
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(Error::Config(format!(
            "coefficient {key:?} must be a {size}x{size} matrix"
        )));
    }
    let mut compiled: Vec<Vec<CompiledEntry>> = Vec::with_capacity(size);
    for row in rows {
        let mut out_row = Vec::with_capacity(size);
        for e in row {
            out_row.push(match e {
                EntrySpec::Num(v) => CompiledEntry::Const(C64::new(*v, 0.0)),
                EntrySpec::Pair([re, im]) => CompiledEntry::Const(C64::new(*re, *im)),
                EntrySpec::Expr(src) => CompiledEntry::Var {
                    re: Some(Expr::parse(src)?),
                    im: None,
                },
                EntrySpec::ExprPair([re, im]) => CompiledEntry::Var {
                    re: Some(Expr::parse(re)?),
                    im: Some(Expr::parse(im)?),
                },
            });
        }
        compiled.push(out_row);
    }
    let key = key.to_string();
    Ok(Arc::new(move |x: &[f64]| {
        CMatrix::from_fn(compiled.len(), compiled.len(), |i, j| {
            compiled[i][j]
                .eval(x)
                .unwrap_or_else(|e| panic!("coefficient {key:?} entry ({i},{j}): {e}"))
        })
    }))
}

fn parse_keyed<T>(
    map: &BTreeMap<String, Vec<Vec<EntrySpec>>>,
    n: usize,
    mut build: impl FnMut(&str, &[Vec<EntrySpec>]) -> Result<T>,
) -> Result<BTreeMap<MultiIndex, T>> {
    let mut out = BTreeMap::new();
    for (key, rows) in map {
        let mu = MultiIndex::parse(key)?;
        if mu.dim() != n {
            return Err(Error::Config(format!(
                "multi-index {key:?} has dimension {}, system has n={n}",
                mu.dim()
            )));
        }
        out.insert(mu, build(key, rows)?);
    }
    Ok(out)
}

/// Load a constant-coefficient operator from its JSON document.
pub fn constant_from_json(doc: &str) -> Result<ConstantOperator> {
    let spec: ConstantOperatorSpec = serde_json::from_str(doc)?;
    let coeffs = parse_keyed(&spec.coeffs, spec.n, |k, rows| {
        constant_matrix(k, rows, spec.size)
    })?;
    ConstantOperator::new(spec.n, spec.size, spec.b, coeffs)
}

/// Load a variable-coefficient system from its JSON document. Matrix
/// entries are numbers, [re, im] pairs, expression strings in x1..xn, or
/// [re_expr, im_expr] pairs.
pub fn system_from_json(doc: &str) -> Result<VariableSystem> {
    let spec: VariableSystemSpec = serde_json::from_str(doc)?;
    let principal = parse_keyed(&spec.principal, spec.n, |k, rows| {
        compile_matrix(k, rows, spec.size)
    })?;
    let lower = parse_keyed(&spec.lower, spec.n, |k, rows| {
        compile_matrix(k, rows, spec.size)
    })?;
    VariableSystem::new(
        spec.n,
        spec.size,
        spec.b,
        principal,
        lower,
        spec.holder_exponent,
        spec.holder_constant,
        spec.bound,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::linalg::op_norm_2;

    fn heat_1d() -> ConstantOperator {
        ConstantOperator::scalar_1d(1, -1.0)
    }

    fn sin_system() -> VariableSystem {
        // a2(x) = -(1 + 0.5 sin x): gamma = 1, Holder constant 0.5, bound 1.5
        let mut principal: BTreeMap<MultiIndex, CoeffFn> = BTreeMap::new();
        principal.insert(
            MultiIndex::new(vec![2]),
            Arc::new(|x: &[f64]| {
                CMatrix::from_element(1, 1, C64::new(-(1.0 + 0.5 * x[0].sin()), 0.0))
            }),
        );
        VariableSystem::new(1, 1, 1, principal, BTreeMap::new(), 1.0, 0.5, 1.5).unwrap()
    }

    #[test]
    fn multi_index_order_parse_display() {
        let mu = MultiIndex::parse("1,0,3").unwrap();
        assert_eq!(mu.components(), &[1, 0, 3]);
        assert_eq!(mu.order(), 4);
        assert_eq!(mu.dim(), 3);
        assert_eq!(mu.to_string(), "1,0,3");
        assert_eq!(MultiIndex::parse("2").unwrap(), MultiIndex::new(vec![2]));
        assert_eq!(mu.monomial(&[2.0, 7.0, 2.0]), 16.0);
        assert!(MultiIndex::parse("").is_err());
        assert!(MultiIndex::parse("1,-2").is_err());
        assert!(MultiIndex::parse("a").is_err());
    }

    #[test]
    fn heat_symbol_values() {
        let op = heat_1d();
        assert_eq!(op.symbol(&[2.0])[(0, 0)], C64::new(-4.0, 0.0));
        assert_eq!(op.symbol(&[0.0])[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn coupled_symbol_scales_coefficient() {
        let a2 = CMatrix::from_row_slice(2, 2, &[
            C64::new(-1.0, 0.0),
            C64::new(0.3, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-2.0, 0.0),
        ]);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::new(vec![2]), a2.clone());
        let op = ConstantOperator::new(1, 2, 1, coeffs).unwrap();
        let sym = op.symbol(&[2.0_f64.sqrt()]);
        let want = &a2 * C64::new(2.0, 0.0);
        assert!(op_norm_2(&(&sym - &want)) < 1e-14);
    }

    #[test]
    fn symbol_homogeneity() {
        // anisotropic 2-D system exercising mixed monomials
        let mut coeffs = BTreeMap::new();
        coeffs.insert(
            MultiIndex::new(vec![2, 0]),
            CMatrix::from_row_slice(2, 2, &[
                C64::new(-1.0, 0.0),
                C64::new(0.2, 0.1),
                C64::new(0.0, -0.1),
                C64::new(-2.0, 0.0),
            ]),
        );
        coeffs.insert(
            MultiIndex::new(vec![0, 2]),
            CMatrix::from_row_slice(2, 2, &[
                C64::new(-1.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.1, 0.0),
                C64::new(-1.0, 0.0),
            ]),
        );
        coeffs.insert(
            MultiIndex::new(vec![1, 1]),
            CMatrix::from_element(2, 2, C64::new(0.05, 0.02)),
        );
        let op = ConstantOperator::new(2, 2, 1, coeffs).unwrap();
        for &s in &[0.5, 2.0, 3.7, 11.0] {
            for xi in [[1.0, 0.0], [0.3, -0.8], [-1.2, 2.5]] {
                let scaled = op.symbol(&[s * xi[0], s * xi[1]]);
                let want = op.symbol(&xi) * C64::new(s * s, 0.0);
                let rel = op_norm_2(&(&scaled - &want)) / op_norm_2(&want).max(1e-300);
                assert!(rel < 1e-12, "homogeneity broke: rel={rel:.3e}");
            }
        }
    }

    #[test]
    fn parabolicity_delta_examples() {
        assert!((heat_1d().parabolicity_delta(4).unwrap() - 1.0).abs() < 1e-15);

        let mut coeffs = BTreeMap::new();
        coeffs.insert(
            MultiIndex::new(vec![2]),
            CMatrix::from_row_slice(2, 2, &[
                C64::new(-1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-3.0, 0.0),
            ]),
        );
        let diag = ConstantOperator::new(1, 2, 1, coeffs).unwrap();
        assert!((diag.parabolicity_delta(4).unwrap() - 1.0).abs() < 1e-15);

        // rotational symmetry: -(xi_1^2 + xi_2^2) has delta = 1 at every angle
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::new(vec![2, 0]), CMatrix::from_element(1, 1, C64::new(-1.0, 0.0)));
        coeffs.insert(MultiIndex::new(vec![0, 2]), CMatrix::from_element(1, 1, C64::new(-1.0, 0.0)));
        let lap = ConstantOperator::new(2, 1, 1, coeffs).unwrap();
        assert!((lap.parabolicity_delta(DEFAULT_SPHERE_SAMPLES).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parabolicity_rejects_short_sample_and_flags_nonparabolic() {
        assert!(heat_1d().parabolicity_delta(1).is_err());
        let backwards = ConstantOperator::scalar_1d(1, 1.0);
        assert!(backwards.parabolicity_delta(4).unwrap() <= -1.0 + 1e-15);
    }

    #[test]
    fn parabolicity_invariant_under_unitary_conjugation() {
        // non-normal principal coefficient; delta depends on the Hermitian
        // part whose spectrum is preserved by U . U^*
        let a2 = CMatrix::from_row_slice(2, 2, &[
            C64::new(-1.0, 0.0),
            C64::new(0.8, 0.3),
            C64::new(0.0, 0.0),
            C64::new(-2.0, 0.2),
        ]);
        let (c, s) = (0.6_f64, 0.8_f64);
        let phase = C64::new(0.0, 0.7).exp();
        let u = CMatrix::from_row_slice(2, 2, &[
            C64::new(c, 0.0),
            -phase * C64::new(s, 0.0),
            phase.conj() * C64::new(s, 0.0),
            C64::new(c, 0.0),
        ]);
        let id = CMatrix::identity(2, 2);
        assert!(op_norm_2(&(&u * u.adjoint() - &id)) < 1e-15);

        let make = |a: CMatrix| {
            let mut coeffs = BTreeMap::new();
            coeffs.insert(MultiIndex::new(vec![2]), a);
            ConstantOperator::new(1, 2, 1, coeffs).unwrap()
        };
        let d0 = make(a2.clone()).parabolicity_delta(8).unwrap();
        let d1 = make(&u * &a2 * u.adjoint()).parabolicity_delta(8).unwrap();
        assert!((d0 - d1).abs() < 1e-12);
    }

    #[test]
    fn freeze_reads_principal_pointwise() {
        let sys = sin_system();
        let op = sys.freeze(&[std::f64::consts::FRAC_PI_2]).unwrap();
        let a = op.coeffs()[&MultiIndex::new(vec![2])][(0, 0)];
        assert!((a.re + 1.5).abs() < 1e-15 && a.im == 0.0);

        // freeze of a constant wrap returns the original coefficients at any y
        let heat = heat_1d();
        let wrapped = VariableSystem::from_constant(&heat, 1.0);
        for y in [[-3.0], [0.0], [17.5]] {
            let frozen = wrapped.freeze(&y).unwrap();
            assert_eq!(frozen.coeffs(), heat.coeffs());
        }

        // frozen coefficients inherit the declared Holder continuity
        let pairs = [([0.1], [0.9]), ([-2.0], [1.3]), ([3.0], [3.5])];
        for (y1, y2) in pairs {
            let d = op_norm_2(
                &(&sys.freeze(&y1).unwrap().coeffs()[&MultiIndex::new(vec![2])]
                    - &sys.freeze(&y2).unwrap().coeffs()[&MultiIndex::new(vec![2])]),
            );
            let allowed = sys.holder_constant() * (y1[0] - y2[0]).abs().powf(sys.holder_exponent());
            assert!(d <= allowed * (1.0 + 1e-12));
        }
    }

    #[test]
    fn freeze_rejects_nonparabolic_point() {
        // a2(x) = -cos x loses parabolicity past pi/2
        let mut principal: BTreeMap<MultiIndex, CoeffFn> = BTreeMap::new();
        principal.insert(
            MultiIndex::new(vec![2]),
            Arc::new(|x: &[f64]| CMatrix::from_element(1, 1, C64::new(-x[0].cos(), 0.0))),
        );
        let sys =
            VariableSystem::new(1, 1, 1, principal, BTreeMap::new(), 1.0, 1.0, 1.0).unwrap();
        assert!(sys.freeze(&[0.0]).is_ok());
        assert!(sys.freeze(&[std::f64::consts::PI]).is_err());
    }

    #[test]
    fn spot_check_accepts_declared_metadata_and_rejects_understated() {
        let sys = sin_system();
        let report = sys.spot_check(-10.0, 10.0, 40, 7).unwrap();
        assert!(report.max_holder_quotient <= 0.5 + 1e-9);
        assert!(report.max_coeff_norm <= 1.5 + 1e-9);
        assert!(report.min_frozen_delta >= 0.5 - 1e-9);

        let mut principal: BTreeMap<MultiIndex, CoeffFn> = BTreeMap::new();
        principal.insert(
            MultiIndex::new(vec![2]),
            Arc::new(|x: &[f64]| {
                CMatrix::from_element(1, 1, C64::new(-(1.0 + 0.5 * x[0].sin()), 0.0))
            }),
        );
        let understated =
            VariableSystem::new(1, 1, 1, principal, BTreeMap::new(), 1.0, 0.01, 1.5).unwrap();
        assert!(understated.spot_check(-10.0, 10.0, 40, 7).is_err());
    }

    #[test]
    fn apply_kills_constant_fields() {
        let sys = sin_system();
        let field = SampledField::from_fn(vec![32], vec![-4.0], vec![0.25], true, |_| {
            CVector::from_element(1, C64::new(3.25, -1.0))
        });
        let v = sys.apply(&OperatorPart::Principal, &field, &[11]).unwrap();
        assert!(v[0].norm() < 1e-13);
    }

    #[test]
    fn apply_heat_matches_analytic_second_derivative() {
        // A0 = a2 D^2 = (-1)(-d^2/dx^2) = d^2/dx^2, so A0 sin = -sin with
        // O(h^2) error that drops ~4x under one refinement
        let heat = VariableSystem::from_constant(&heat_1d(), 1.0);
        let err_at = |m: usize| -> f64 {
            let field = SampledField::from_fn(
                vec![m],
                vec![-std::f64::consts::PI],
                vec![2.0 * std::f64::consts::PI / m as f64],
                true,
                |x| CVector::from_element(1, C64::new(x[0].sin(), 0.0)),
            );
            let mut worst = 0.0_f64;
            for i in 0..m {
                let x = field.point(&[i])[0];
                let got = heat.apply(&OperatorPart::Principal, &field, &[i]).unwrap()[0];
                worst = worst.max((got - C64::new(-x.sin(), 0.0)).norm());
            }
            worst
        };
        let (e1, e2) = (err_at(64), err_at(128));
        assert!(e1 < 1e-2);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "refinement ratio {ratio:.2}");
    }

    #[test]
    fn apply_full_is_principal_plus_lower() {
        let mut principal: BTreeMap<MultiIndex, CoeffFn> = BTreeMap::new();
        principal.insert(
            MultiIndex::new(vec![2]),
            Arc::new(|x: &[f64]| {
                CMatrix::from_element(1, 1, C64::new(-(1.0 + 0.5 * x[0].sin()), 0.0))
            }),
        );
        let mut lower: BTreeMap<MultiIndex, CoeffFn> = BTreeMap::new();
        lower.insert(
            MultiIndex::new(vec![1]),
            Arc::new(|x: &[f64]| CMatrix::from_element(1, 1, C64::new(0.3 * x[0].cos(), 0.1))),
        );
        lower.insert(
            MultiIndex::new(vec![0]),
            Arc::new(|_: &[f64]| CMatrix::from_element(1, 1, C64::new(0.7, 0.0))),
        );
        let sys = VariableSystem::new(1, 1, 1, principal, lower, 1.0, 0.6, 1.5).unwrap();
        let field = SampledField::from_fn(
            vec![48],
            vec![-std::f64::consts::PI],
            vec![2.0 * std::f64::consts::PI / 48.0],
            true,
            |x| CVector::from_element(1, C64::new((2.0 * x[0]).sin(), x[0].cos())),
        );
        for i in [0, 7, 23, 47] {
            let full = sys.apply(&OperatorPart::Full, &field, &[i]).unwrap();
            let p = sys.apply(&OperatorPart::Principal, &field, &[i]).unwrap();
            let l = sys.apply(&OperatorPart::Lower, &field, &[i]).unwrap();
            assert!((full[0] - (p[0] + l[0])).norm() < 1e-15);
        }
    }

    #[test]
    fn apply_plane_wave_converges_to_symbol() {
        // fourth-order coupled operator: exercises the composed D^4 stencil;
        // xi is a Fourier mode of the box so periodic wrap is exact
        let a4 = CMatrix::from_row_slice(2, 2, &[
            C64::new(-1.0, 0.0),
            C64::new(0.2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.3, 0.0),
        ]);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::new(vec![4]), a4);
        let op = ConstantOperator::new(1, 2, 2, coeffs).unwrap();
        let sys = VariableSystem::from_constant(&op, 1.5);
        let xi = 3.0;
        let z = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.5, -0.25)]);
        let want_mat = op.symbol(&[xi]);

        let err_at = |m: usize| -> f64 {
            let field = SampledField::from_fn(
                vec![m],
                vec![-std::f64::consts::PI],
                vec![2.0 * std::f64::consts::PI / m as f64],
                true,
                |x| &z * C64::new(0.0, xi * x[0]).exp(),
            );
            let mut worst = 0.0_f64;
            for i in (0..m).step_by(m / 16) {
                let x = field.point(&[i])[0];
                let got = sys.apply(&OperatorPart::Principal, &field, &[i]).unwrap();
                let want = &want_mat * &z * C64::new(0.0, xi * x).exp();
                worst = worst.max((got - want).norm());
            }
            worst
        };
        let (e1, e2) = (err_at(128), err_at(256));
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "refinement ratio {ratio:.2}");
    }

    #[test]
    fn apply_frozen_uses_coefficients_at_y() {
        let sys = sin_system();
        let field = SampledField::from_fn(
            vec![64],
            vec![-std::f64::consts::PI],
            vec![2.0 * std::f64::consts::PI / 64.0],
            true,
            |x| CVector::from_element(1, C64::new(x[0].sin(), 0.0)),
        );
        let y = std::f64::consts::FRAC_PI_2;
        let got = sys
            .apply(&OperatorPart::FrozenAt(vec![y]), &field, &[20])
            .unwrap()[0];
        // frozen a2 = -1.5, so the operator is 1.5 d^2/dx^2
        let x = field.point(&[20])[0];
        assert!((got - C64::new(-1.5 * x.sin(), 0.0)).norm() < 3e-3);
    }

    #[test]
    fn apply_errors_when_stencil_leaves_nonperiodic_grid() {
        let sys = sin_system();
        let field = SampledField::from_fn(vec![16], vec![0.0], vec![0.1], false, |x| {
            CVector::from_element(1, C64::new(x[0], 0.0))
        });
        assert!(sys.apply(&OperatorPart::Principal, &field, &[0]).is_err());
        assert!(sys.apply(&OperatorPart::Principal, &field, &[8]).is_ok());
        assert!(sys.apply(&OperatorPart::Principal, &field, &[15]).is_err());
    }

    #[test]
    fn operator_matrix_agrees_with_pointwise_apply() {
        let mut principal: BTreeMap<MultiIndex, CoeffFn> = BTreeMap::new();
        principal.insert(
            MultiIndex::new(vec![2]),
            Arc::new(|x: &[f64]| {
                CMatrix::from_element(1, 1, C64::new(-(1.0 + 0.5 * x[0].sin()), 0.0))
            }),
        );
        let mut lower: BTreeMap<MultiIndex, CoeffFn> = BTreeMap::new();
        lower.insert(
            MultiIndex::new(vec![1]),
            Arc::new(|_: &[f64]| CMatrix::from_element(1, 1, C64::new(0.2, 0.0))),
        );
        let sys = VariableSystem::new(1, 1, 1, principal, lower, 1.0, 0.5, 1.5).unwrap();
        let field = SampledField::from_fn(
            vec![24],
            vec![-std::f64::consts::PI],
            vec![2.0 * std::f64::consts::PI / 24.0],
            true,
            |x| CVector::from_element(1, C64::new(x[0].cos(), 0.3 * x[0].sin())),
        );
        let m = sys.operator_matrix(&OperatorPart::Full, &field).unwrap();
        let u = CVector::from_vec(field.values.iter().map(|v| v[0]).collect::<Vec<_>>());
        let mu = &m * &u;
        for i in 0..24 {
            let want = sys.apply(&OperatorPart::Full, &field, &[i]).unwrap()[0];
            assert!((mu[i] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn centered_stencils_are_the_classical_ones() {
        assert_eq!(centered_stencil(1), vec![-0.5, 0.0, 0.5]);
        assert_eq!(centered_stencil(2), vec![1.0, -2.0, 1.0]);
        assert_eq!(centered_stencil(3), vec![-0.5, 1.0, 0.0, -1.0, 0.5]);
        assert_eq!(centered_stencil(4), vec![1.0, -4.0, 6.0, -4.0, 1.0]);
    }

    #[test]
    fn json_constant_operator_round_trip() {
        let doc = r#"{
            "n": 1, "size": 2, "b": 1,
            "coeffs": { "2": [[-1.0, [0.0, 0.3]], [0.0, -2.0]] }
        }"#;
        let op = constant_from_json(doc).unwrap();
        assert_eq!(op.dim(), 1);
        assert_eq!(op.size(), 2);
        assert_eq!(op.half_order(), 1);
        let a = &op.coeffs()[&MultiIndex::new(vec![2])];
        assert_eq!(a[(0, 1)], C64::new(0.0, 0.3));
        assert_eq!(a[(1, 1)], C64::new(-2.0, 0.0));

        // expressions are rejected in the constant document
        let bad = r#"{ "n": 1, "size": 1, "b": 1, "coeffs": { "2": [["-1"]] } }"#;
        assert!(constant_from_json(bad).is_err());
        // wrong key order is rejected
        let bad = r#"{ "n": 1, "size": 1, "b": 1, "coeffs": { "1": [[-1.0]] } }"#;
        assert!(constant_from_json(bad).is_err());
    }

    #[test]
    fn json_variable_system_round_trip() {
        let doc = r#"{
            "n": 1, "size": 1, "b": 1,
            "holder_exponent": 1.0, "holder_constant": 0.5, "bound": 1.5,
            "principal": { "2": [["-(1 + 0.5*sin(x1))"]] },
            "lower": { "0": [[0.25]] }
        }"#;
        let sys = system_from_json(doc).unwrap();
        let op = sys.freeze(&[std::f64::consts::FRAC_PI_2]).unwrap();
        let a = op.coeffs()[&MultiIndex::new(vec![2])][(0, 0)];
        assert!((a.re + 1.5).abs() < 1e-15);
        let low = sys.lower()[&MultiIndex::new(vec![0])](&[0.0]);
        assert_eq!(low[(0, 0)], C64::new(0.25, 0.0));

        // lower-order key at principal order is rejected
        let bad = r#"{
            "n": 1, "size": 1, "b": 1,
            "holder_exponent": 1.0, "holder_constant": 0.5, "bound": 1.5,
            "principal": { "2": [["-1"]] },
            "lower": { "2": [[0.25]] }
        }"#;
        assert!(system_from_json(bad).is_err());
    }
}
