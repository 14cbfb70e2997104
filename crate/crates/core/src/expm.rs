//! Matrix exponential by Padé(13) scaling and squaring.

use faer::linalg::solvers::Solve;
use faer::{Mat, Scale};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const B13: [f64; 14] = [
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
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &Mat<C64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn scaled(a: &Mat<C64>, s: f64) -> Mat<C64> {
    a * Scale(C64::new(s, 0.0))
}

/// e^{tA}.
pub fn expm(a: &Mat<C64>, t: f64) -> Result<Mat<C64>> {
    let n = a.nrows();
    let norm = one_norm(a) * t.abs();
    if !norm.is_finite() {
        return Err(Error::Propagation("non-finite matrix in expm".into()));
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = scaled(a, t / 2f64.powi(s));
    let id = Mat::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::new(B13[k], 0.0);
    let mut w = &a6 * Scale(b(13)) + &a4 * Scale(b(11)) + &a2 * Scale(b(9));
    w = &a6 * &w;
    w = w + &a6 * Scale(b(7)) + &a4 * Scale(b(5)) + &a2 * Scale(b(3)) + &id * Scale(b(1));
    let u = &a * &w;
    let mut z = &a6 * Scale(b(12)) + &a4 * Scale(b(10)) + &a2 * Scale(b(8));
    z = &a6 * &z;
    let v = z + &a6 * Scale(b(6)) + &a4 * Scale(b(4)) + &a2 * Scale(b(2)) + &id * Scale(b(0));
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if (0..n).any(|i| (0..n).any(|j| !r[(i, j)].is_finite())) {
        return Err(Error::Propagation("expm produced non-finite entries".into()));
    }
    Ok(r)
}
