//! The conjugated linearized operator e^{αz}𝓛(η)e^{−αz} as a dense matrix on
//! stacked (Φ, Ψ) grid values, with spectra, eigenpairs and resolvent probes.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd;
use faer::{Col, Mat, Par};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::ModelParams;
use crate::profile::eval_profiles;

const I: C64 = C64::new(0.0, 1.0);

/// Largest accepted ‖(M−λ)v‖/‖v‖ for a returned eigenpair.
pub const EIG_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct OperatorMatrix<'g> {
    pub eta: f64,
    /// 2n×2n, rows and columns ordered (Φ_0..Φ_{n−1}, Ψ_0..Ψ_{n−1})
    pub entries: Mat<C64>,
    pub params: ModelParams,
    pub grid: &'g Grid1D,
    pub potentials: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenPairLR {
    pub lambda: C64,
    pub right: Vec<C64>,
    /// adjoint eigenvector: M^H·left = conj(λ)·left
    pub left: Vec<C64>,
    pub residual: f64,
}

#[allow(non_snake_case)]
pub fn assemble_L<'g>(p: &ModelParams, grid: &'g Grid1D, eta: f64) -> Result<OperatorMatrix<'g>> {
    assemble(p, grid, eta, true)
}

/// The free part 𝓛₀(η) alone.
pub fn assemble_free<'g>(p: &ModelParams, grid: &'g Grid1D, eta: f64) -> Result<OperatorMatrix<'g>> {
    assemble(p, grid, eta, false)
}

pub fn assemble<'g>(p: &ModelParams, grid: &'g Grid1D, eta: f64, potentials: bool) -> Result<OperatorMatrix<'g>> {
    if (grid.alpha - p.alpha).abs() > 1e-15 * p.alpha {
        return Err(Error::Grid(format!("grid built for alpha = {} but params carry alpha = {}", grid.alpha, p.alpha)));
    }
    let n = grid.n;
    let (a, b, c) = (p.a, p.b, p.c);
    let e2 = eta * eta;
    let sh = grid.alpha;
    let d = grid.circulant(sh, |z| I * z);
    let k21 = grid.circulant(sh, |z| -(1.0 + a * e2 + a * z * z) * (z * z + e2) / (1.0 + b * e2 + b * z * z));
    let mut m = Mat::<C64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for l in 0..n {
            let dc = d[(j, l)] * c;
            m[(j, l)] = dc;
            m[(n + j, n + l)] = dc;
            m[(n + j, l)] = k21[(j, l)];
        }
        m[(j, n + j)] = C64::new(1.0, 0.0);
    }
    if potentials {
        let binv = grid.circulant(sh, |z| 1.0 / (1.0 + b * e2 + b * z * z));
        let d2 = grid.circulant(sh, |z| -z * z);
        let pr = eval_profiles(p, &grid.nodes);
        // X = [v₁ | v₂] with v₁ = 2r′D + r(D²−η²), v₂ = 2qD + q′
        let x = Mat::<C64>::from_fn(n, 2 * n, |j, l| {
            let pj = &pr[j];
            if l < n {
                let diag = if l == j { -pj.r * e2 } else { 0.0 };
                2.0 * pj.rp * d[(j, l)] + pj.r * d2[(j, l)] + diag
            } else {
                let l = l - n;
                let diag = if l == j { pj.qp } else { 0.0 };
                2.0 * pj.q * d[(j, l)] + diag
            }
        });
        let v = &binv * &x;
        for j in 0..n {
            for l in 0..2 * n {
                m[(n + j, l)] -= v[(j, l)];
            }
        }
    }
    // the conjugated operator is real; drop rounding-level imaginary parts
    for j in 0..2 * n {
        for l in 0..2 * n {
            m[(j, l)].im = 0.0;
        }
    }
    Ok(OperatorMatrix { eta, entries: m, params: *p, grid, potentials })
}

impl<'g> OperatorMatrix<'g> {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        matvec(&self.entries, v)
    }

    pub fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        let col = Col::from_fn(v.len(), |i| v[i]);
        let out = self.entries.adjoint() * &col;
        (0..out.nrows()).map(|i| out[i]).collect()
    }
}

pub fn matvec(m: &Mat<C64>, v: &[C64]) -> Vec<C64> {
    let col = Col::from_fn(v.len(), |i| v[i]);
    let out = m * &col;
    (0..out.nrows()).map(|i| out[i]).collect()
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Full dense decomposition with right and adjoint eigenvectors.
#[derive(Clone, Debug)]
pub struct DenseEig {
    pub values: Vec<C64>,
    pub right: Mat<C64>,
    pub left: Mat<C64>,
}

impl DenseEig {
    pub fn compute(m: &Mat<C64>) -> Result<Self> {
        let n = m.nrows();
        let par = Par::Seq;
        let mut s = faer::diag::Diag::<C64>::zeros(n);
        let mut ul = Mat::<C64>::zeros(n, n);
        let mut ur = Mat::<C64>::zeros(n, n);
        let scratch =
            evd::evd_scratch::<C64>(n, evd::ComputeEigenvectors::Yes, evd::ComputeEigenvectors::Yes, par, Default::default());
        evd::evd_cplx(
            m.as_ref(),
            s.as_mut(),
            Some(ul.as_mut()),
            Some(ur.as_mut()),
            par,
            MemStack::new(&mut MemBuffer::new(scratch)),
            Default::default(),
        )
        .map_err(|e| Error::Eig(format!("dense eigendecomposition failed: {e:?}")))?;
        let values = (0..n).map(|i| s[i]).collect::<Vec<_>>();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eig("non-finite eigenvalue".into()));
        }
        Ok(DenseEig { values, right: ur, left: ul })
    }

    /// Index of the eigenvalue closest to `target`.
    pub fn nearest(&self, target: C64) -> usize {
        self.nearest_k(target, 1)[0]
    }

    pub fn nearest_k(&self, target: C64, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&i, &j| (self.values[i] - target).norm().total_cmp(&(self.values[j] - target).norm()));
        idx.truncate(k);
        idx
    }

    pub fn pair(&self, m: &Mat<C64>, k: usize) -> EigenPairLR {
        let n = m.nrows();
        let right: Vec<C64> = (0..n).map(|i| self.right[(i, k)]).collect();
        let left: Vec<C64> = (0..n).map(|i| self.left[(i, k)]).collect();
        let lambda = self.values[k];
        let mv = matvec(m, &right);
        let res: Vec<C64> = mv.iter().zip(&right).map(|(a, b)| a - lambda * b).collect();
        let residual = norm2(&res) / norm2(&right);
        EigenPairLR { lambda, right, left, residual }
    }

    /// max_k ‖r_k‖‖l_k‖/|⟨r_k, l_k⟩|, the eigenvalue condition numbers.
    pub fn condition(&self) -> f64 {
        let n = self.values.len();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let (mut rr, mut ll, mut rl) = (0.0, 0.0, C64::new(0.0, 0.0));
            for i in 0..n {
                let (r, l) = (self.right[(i, k)], self.left[(i, k)]);
                rr += r.norm_sqr();
                ll += l.norm_sqr();
                rl += r * l.conj();
            }
            worst = worst.max((rr * ll).sqrt() / rl.norm());
        }
        worst
    }
}

/// Eigenvalues with Re λ > `re_threshold`, sorted by real part descending.
pub fn spectrum_slice(m: &OperatorMatrix, re_threshold: f64) -> Result<Vec<C64>> {
    let vals = m.entries.eigenvalues().map_err(|e| Error::Eig(format!("dense eigenvalue solver failed: {e:?}")))?;
    let mut out: Vec<C64> = vals.into_iter().filter(|v| v.re > re_threshold).collect();
    out.sort_by(|x, y| y.re.total_cmp(&x.re));
    Ok(out)
}

/// The `k` eigenpairs closest to `target`, nearest first.
pub fn eigs_near(m: &OperatorMatrix, target: C64, k: usize) -> Result<Vec<EigenPairLR>> {
    if k == 0 {
        return Err(Error::Domain("eigs_near needs k >= 1".into()));
    }
    let dec = DenseEig::compute(&m.entries)?;
    pairs_near(&dec, m, target, k)
}

pub fn pairs_near(dec: &DenseEig, m: &OperatorMatrix, target: C64, k: usize) -> Result<Vec<EigenPairLR>> {
    dec.nearest_k(target, k)
        .into_iter()
        .map(|i| {
            let pair = dec.pair(&m.entries, i);
            if pair.residual > EIG_RESIDUAL_TOL {
                Err(Error::Eig(format!(
                    "eigenpair residual {:.3e} at lambda = {} exceeds {EIG_RESIDUAL_TOL:e}",
                    pair.residual, pair.lambda
                )))
            } else {
                Ok(pair)
            }
        })
        .collect()
}

/// Weight √(1+ξ_k²+η²) applied to the Φ block in frequency.
fn h1_symbol(eta: f64) -> impl Fn(C64) -> C64 {
    move |z: C64| C64::new((1.0 + z.re * z.re + eta * eta).sqrt(), 0.0)
}

/// ‖v‖_X with X = H¹_α × L²_α on conjugated grid values.
pub fn norm_x(grid: &Grid1D, eta: f64, v: &[C64]) -> f64 {
    let n = grid.n;
    let w1 = grid.apply_shifted(0.0, &v[..n], h1_symbol(eta));
    let s: f64 = w1.iter().chain(&v[n..]).map(|x| x.norm_sqr()).sum();
    (s * grid.dz).sqrt()
}

/// 1/σ_min(M − λ) measured in the X norm; +∞ when M − λ is numerically
/// singular.
pub fn resolvent_norm_probe(m: &OperatorMatrix, lambda: C64) -> Result<f64> {
    let n = m.grid.n;
    let g = m.grid;
    let w = g.circulant(0.0, h1_symbol(m.eta));
    let winv = g.circulant(0.0, |z| 1.0 / h1_symbol(m.eta)(z));
    let mut shifted = m.entries.clone();
    for i in 0..2 * n {
        shifted[(i, i)] -= lambda;
    }
    // W(M−λ)W⁻¹ with W = diag(w, 1)
    let a11 = &w * (shifted.as_ref().submatrix(0, 0, n, n) * &winv);
    let a12 = &w * shifted.as_ref().submatrix(0, n, n, n);
    let a21 = shifted.as_ref().submatrix(n, 0, n, n) * &winv;
    let b = Mat::<C64>::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a11[(i, j)],
        (true, false) => a12[(i, j - n)],
        (false, true) => a21[(i - n, j)],
        (false, false) => shifted[(i, j)],
    });
    let sv = b.singular_values().map_err(|e| Error::Eig(format!("singular value solver failed: {e:?}")))?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 1e-15 * smax {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / smin)
}
