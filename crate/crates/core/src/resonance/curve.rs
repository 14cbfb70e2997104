use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{closed_form_constants, pair_stacked, pairing_matrix_complex, zeta_quadruple, ClosedForm, ZetaQuadruple};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fit::lstsq;
use crate::grid::Grid1D;
use crate::linop::{assemble_L, matvec, norm2, pairs_near, DenseEig, EigenPairLR, OperatorMatrix};
use crate::params::ModelParams;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurveFit {
    /// Im λ ≈ λ₁η + λ₃η³
    pub lambda1: f64,
    pub lambda3: f64,
    /// Re λ ≈ −λ₂η²
    pub lambda2: f64,
    pub rms_im: f64,
    pub rms_re: f64,
}

#[derive(Clone, Debug)]
pub struct EigenCurve {
    /// sorted ascending, symmetric about 0
    pub etas: Vec<f64>,
    pub lambdas: Vec<C64>,
    /// eigenpair per sample, present when requested
    pub vectors: Option<Vec<EigenPairLR>>,
    pub fit: CurveFit,
}

impl EigenCurve {
    /// max |λ(−η) − conj λ(η)| over the sampled pairs.
    pub fn conjugation_defect(&self) -> f64 {
        let n = self.etas.len();
        (0..n / 2).map(|i| (self.lambdas[n - 1 - i] - self.lambdas[i].conj()).norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CurveOptions {
    pub exec: Exec,
    /// fraction of η_max used by the fit
    pub fit_fraction: f64,
    /// smallest continuation step as a fraction of η_max
    pub min_step: f64,
    pub keep_vectors: bool,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { exec: Exec::default(), fit_fraction: 0.5, min_step: 1.0 / 1024.0, keep_vectors: false }
    }
}

/// Eigenpairs λ(η) and λ(−η) = conj λ(η) of the same matrix M(|η|),
/// normalized against the generalized kernel (see [`normalize_pair`]).
#[derive(Clone, Debug)]
pub struct ResonantPair {
    pub eta: f64,
    pub plus: EigenPairLR,
    pub minus: EigenPairLR,
}

pub fn resonant_curve(p: &ModelParams, grid: &Grid1D, eta_max: f64, n_eta: usize) -> Result<EigenCurve> {
    resonant_curve_with(p, grid, eta_max, n_eta, CurveOptions::default())
}

/// Distinct |η| values of a symmetric sample of `n_eta` points.
fn abs_etas(eta_max: f64, n_eta: usize) -> Vec<f64> {
    let half = n_eta / 2;
    if n_eta % 2 == 1 {
        (0..=half).map(|k| eta_max * k as f64 / half as f64).collect()
    } else {
        (0..half).map(|k| eta_max * (k as f64 + 0.5) / (half as f64 - 0.5)).collect()
    }
}

pub fn resonant_curve_with(p: &ModelParams, grid: &Grid1D, eta_max: f64, n_eta: usize, opts: CurveOptions) -> Result<EigenCurve> {
    if !(eta_max > 0.0) || n_eta < 5 {
        return Err(Error::Domain(format!("need eta_max > 0 and n_eta >= 5, got {eta_max}, {n_eta}")));
    }
    let cf = closed_form_constants(p)?;
    let zq = zeta_quadruple(p, grid);
    let abs = abs_etas(eta_max, n_eta);
    let targets = warm_start(p, grid, &zq, &abs, eta_max * opts.min_step, &cf)?;

    let zq_ref = &zq;
    let pairs: Vec<Result<ResonantPair>> = opts.exec.map_range(abs.len(), |k| {
        let m = assemble_L(p, grid, abs[k])?;
        let dec = DenseEig::compute(&m.entries)?;
        resonant_pair_from(&dec, &m, zq_ref, targets[k])
    });
    let pairs = pairs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut etas = Vec::with_capacity(n_eta);
    let mut lambdas = Vec::with_capacity(n_eta);
    let mut vecs = Vec::with_capacity(n_eta);
    for pr in pairs.iter().rev() {
        if pr.eta > 0.0 {
            etas.push(-pr.eta);
            lambdas.push(pr.minus.lambda);
            vecs.push(pr.minus.clone());
        }
    }
    for pr in &pairs {
        etas.push(pr.eta);
        lambdas.push(pr.plus.lambda);
        vecs.push(pr.plus.clone());
    }
    let fit = fit_curve(&etas, &lambdas, opts.fit_fraction * eta_max)?;
    Ok(EigenCurve { etas, lambdas, vectors: opts.keep_vectors.then_some(vecs), fit })
}

/// Least-squares model of the curve over |η| ≤ `window`.
pub fn fit_curve(etas: &[f64], lambdas: &[C64], window: f64) -> Result<CurveFit> {
    let (mut xs, mut im, mut re) = (vec![], vec![], vec![]);
    for (&e, l) in etas.iter().zip(lambdas) {
        if e.abs() <= window * (1.0 + 1e-12) && e != 0.0 {
            xs.push(e);
            im.push(l.im);
            re.push(l.re);
        }
    }
    let fi = lstsq(&xs, &im, &[&|x| x, &|x| x.powi(3)])?;
    let fr = lstsq(&xs, &re, &[&|x| -x * x])?;
    Ok(CurveFit { lambda1: fi.coef[0], lambda3: fi.coef[1], lambda2: fr.coef[0], rms_im: fi.rms, rms_re: fr.rms })
}

/// Eigenvalue nearest σ by shifted inverse iteration from `start`.
fn inverse_iteration(m: &Mat<C64>, sigma: C64, start: &[C64]) -> Result<(C64, Vec<C64>)> {
    let n = m.nrows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= sigma;
    }
    let lu = shifted.partial_piv_lu();
    let mut x = Mat::<C64>::from_fn(n, 1, |i, _| start[i]);
    let scale = m.norm_max().max(1.0);
    for _ in 0..60 {
        let nx = (0..n).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        x *= faer::Scale(C64::new(1.0 / nx, 0.0));
        let y = lu.solve(&x);
        let xy: C64 = (0..n).map(|i| x[(i, 0)].conj() * y[(i, 0)]).sum();
        let lambda = sigma + 1.0 / xy;
        x = y;
        let v: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
        let mv = matvec(m, &v);
        let res: Vec<C64> = mv.iter().zip(&v).map(|(a, b)| a - lambda * b).collect();
        if norm2(&res) <= 1e-11 * scale * norm2(&v) {
            return Ok((lambda, v));
        }
    }
    Err(Error::Continuation(format!("inverse iteration at sigma = {sigma} did not converge")))
}

/// Serial continuation in η from the kernel; returns λ at every |η| sample.
fn warm_start(
    p: &ModelParams,
    grid: &Grid1D,
    zq: &ZetaQuadruple,
    abs: &[f64],
    min_step: f64,
    cf: &ClosedForm,
) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(abs.len());
    // (η, λ) history for extrapolation and the current vector
    let mut hist: Vec<(f64, C64)> = vec![(0.0, C64::new(0.0, 0.0))];
    let mut vec = zq.zeta1.clone();
    for &target_eta in abs {
        if target_eta == 0.0 {
            out.push(C64::new(0.0, 0.0));
            continue;
        }
        let mut eta = hist.last().unwrap().0;
        let mut step = target_eta - eta;
        while eta < target_eta {
            let next = (eta + step).min(target_eta);
            let h = next - eta;
            let (e1, l1) = *hist.last().unwrap();
            let pred = if hist.len() >= 2 {
                let (e0, l0) = hist[hist.len() - 2];
                l1 + (l1 - l0) * ((next - e1) / (e1 - e0))
            } else {
                C64::new(-cf.lambda2_0 * h * h, cf.lambda1_0 * h)
            };
            let m = assemble_L(p, grid, next)?;
            let attempt = inverse_iteration(&m.entries, pred, &vec);
            let ok = match &attempt {
                Ok((l, _)) => (l - l1).norm() <= 10.0 * (pred - l1).norm(),
                Err(_) => false,
            };
            if ok {
                let (l, v) = attempt.unwrap();
                hist.push((next, l));
                vec = v;
                eta = next;
            } else {
                step *= 0.5;
                if step < min_step {
                    return Err(Error::Continuation(format!(
                        "eigenvalue tracking jumped near eta = {next:.6e}; step fell below {min_step:.3e}"
                    )));
                }
            }
        }
        out.push(hist.last().unwrap().1);
    }
    Ok(out)
}

/// Continuation from the kernel to a single η > 0; returns λ(η).
pub(crate) fn warm_start_to(p: &ModelParams, grid: &Grid1D, eta: f64) -> Result<C64> {
    let cf = closed_form_constants(p)?;
    let zq = zeta_quadruple(p, grid);
    Ok(warm_start(p, grid, &zq, &[eta], eta / 1024.0, &cf)?[0])
}

/// Picks λ(η) nearest `target` and λ(−η) nearest its conjugate from one
/// decomposition of M(|η|), then normalizes both pairs.
pub fn resonant_pair_from(dec: &DenseEig, m: &OperatorMatrix, zq: &ZetaQuadruple, target: C64) -> Result<ResonantPair> {
    let g = m.grid;
    let mut plus = pairs_near(dec, m, target, 1)?.remove(0);
    let mut minus = if m.eta == 0.0 { plus.clone() } else { pairs_near(dec, m, target.conj(), 1)?.remove(0) };
    if m.eta != 0.0 && (plus.lambda - minus.lambda).norm() == 0.0 {
        return Err(Error::DegenerateMode(format!("resonant pair collapsed at eta = {}", m.eta)));
    }
    normalize_pair(g, zq, &mut plus);
    normalize_pair(g, zq, &mut minus);
    Ok(ResonantPair { eta: m.eta, plus, minus })
}

/// Fixes eigenvector scale and phase: the ζ₁-coordinate of the right vector
/// and the ζ₂*-coordinate of the left vector are set to 1, the coordinates
/// being read through the biorthogonal duals of the kernel pair.
pub fn normalize_pair(g: &Grid1D, zq: &ZetaQuadruple, pair: &mut EigenPairLR) {
    let gm = pairing_matrix_complex(zq, g);
    let (g11, g21, g22) = (gm[0][0].re, gm[1][0].re, gm[1][1].re);
    let w1: Vec<C64> = zq.zeta1_star.iter().zip(&zq.zeta2_star).map(|(a, b)| a - (g21 / g22) * b).collect();
    let w2: Vec<C64> = zq.zeta2.iter().zip(&zq.zeta1).map(|(a, b)| a - (g21 / g11) * b).collect();
    let s = g11 / pair_stacked(g, &pair.right, &w1);
    pair.right.iter_mut().for_each(|v| *v *= s);
    let t = (g22 / pair_stacked(g, &w2, &pair.left)).conj();
    pair.left.iter_mut().for_each(|v| *v *= t);
}

/// Resonant pair at a single η using the closed-form seed iλ₁,₀η − λ₂,₀η².
pub fn basis_at(p: &ModelParams, grid: &Grid1D, eta: f64) -> Result<(ResonantPair, DenseEig)> {
    let cf = closed_form_constants(p)?;
    let zq = zeta_quadruple(p, grid);
    let m = assemble_L(p, grid, eta.abs())?;
    let dec = DenseEig::compute(&m.entries)?;
    let target = C64::new(-cf.lambda2_0 * eta * eta, cf.lambda1_0 * eta.abs());
    let pair = resonant_pair_from(&dec, &m, &zq, target)?;
    Ok((pair, dec))
}
