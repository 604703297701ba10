//! Small dense complex linear algebra helpers shared across the crate.
//!
//! Matrices here are tiny (system size N is 1..4 at desk scale), so
//! everything favours robustness over asymptotics. The Hermitian eigenvalue
//! path goes through the standard real embedding [[A,-B],[B,A]] of H = A+iB,
//! which keeps the decomposition on the well-trodden real-symmetric code path.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest eigenvalue of a Hermitian matrix (input must be Hermitian).
pub fn hermitian_eigen_max(h: &CMatrix) -> f64 {
    let n = h.nrows();
    assert_eq!(n, h.ncols());
    let mut e = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let a = h[(i, j)].re;
            let b = h[(i, j)].im;
            e[(i, j)] = a;
            e[(n + i, n + j)] = a;
            e[(i, n + j)] = -b;
            e[(n + i, j)] = b;
        }
    }
    let eig = e.symmetric_eigen();
    eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
}

/// Hermitian part (M + M^*)/2.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Operator 2-norm: sqrt of the largest eigenvalue of M^* M.
pub fn op_norm_2(m: &CMatrix) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    let g = m.adjoint() * m;
    hermitian_eigen_max(&g).max(0.0).sqrt()
}

/// Matrix exponential by Pade-13 scaling and squaring (Higham's constants).
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 1 {
        return CMatrix::from_element(1, 1, a[(0, 0)].exp());
    }
    // 1-norm controls the scaling step count.
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm1 > theta13 {
        (norm1 / theta13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * C64::new(0.5f64.powi(s), 0.0);

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let cb = |k: usize| C64::new(B[k], 0.0);
    let u_inner = &a6 * (&a6 * cb(13) + &a4 * cb(11) + &a2 * cb(9))
        + &a6 * cb(7)
        + &a4 * cb(5)
        + &a2 * cb(3)
        + &id * cb(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * cb(12) + &a4 * cb(10) + &a2 * cb(8))
        + &a6 * cb(6)
        + &a4 * cb(4)
        + &a2 * cb(2)
        + &id * cb(0);
    let denom = &v - &u;
    let numer = &v + &u;
    let lu = denom.lu();
    let mut r = lu.solve(&numer).expect("expm: Pade denominator singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Solve (m - shift*I) x = rhs by LU; returns None if singular.
pub fn shifted_solve(m: &CMatrix, shift: C64, rhs: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    if n == 1 {
        let d = m[(0, 0)] - shift;
        if d.norm() == 0.0 {
            return None;
        }
        return Some(rhs.map(|v| v / d));
    }
    if n == 2 {
        // closed-form 2x2 inverse; this sits on the hot path of the contour
        let a = m[(0, 0)] - shift;
        let b = m[(0, 1)];
        let c = m[(1, 0)];
        let d = m[(1, 1)] - shift;
        let det = a * d - b * c;
        if det.norm() == 0.0 {
            return None;
        }
        let mut out = CMatrix::zeros(2, rhs.ncols());
        for j in 0..rhs.ncols() {
            let r0 = rhs[(0, j)];
            let r1 = rhs[(1, j)];
            out[(0, j)] = (d * r0 - b * r1) / det;
            out[(1, j)] = (-c * r0 + a * r1) / det;
        }
        return Some(out);
    }
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    shifted.lu().solve(rhs)
}
