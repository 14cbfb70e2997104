//! Resonant constants of the line solitary wave: the generalized kernel at
//! η = 0, its pairings, the closed-form λ₁,₀, λ₂,₀, κ₁, the numerical
//! eigenvalue curve λ(η) and the KP-II reference.

mod curve;
pub mod kp;

pub use curve::{
    basis_at, fit_curve, normalize_pair, resonant_curve, resonant_curve_with, resonant_pair_from, CurveFit, CurveOptions,
    EigenCurve, ResonantPair,
};
pub use kp::{
    kp_convergence_study, kp_modes, lambda_kp, scaled_resonant_eigenvalue, KPConstants, KPModes, KpOptions, KpRow, KpStudy,
};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::ModelParams;
use crate::profile::{energy_and_derivative, eval_profiles};

/// Generalized kernel and adjoint kernel in conjugated coordinates: right
/// vectors carry e^{αz}, adjoint vectors e^{−αz}, each stacked (Φ, Ψ).
#[derive(Clone, Debug)]
pub struct ZetaQuadruple {
    pub zeta1: Vec<C64>,
    pub zeta2: Vec<C64>,
    pub zeta1_star: Vec<C64>,
    pub zeta2_star: Vec<C64>,
}

fn real(v: impl Iterator<Item = f64>) -> Vec<C64> {
    v.map(|x| C64::new(x, 0.0)).collect()
}

fn stack(top: Vec<C64>, bottom: Vec<C64>) -> Vec<C64> {
    let mut v = top;
    v.extend(bottom);
    v
}

pub fn zeta_quadruple(p: &ModelParams, grid: &Grid1D) -> ZetaQuadruple {
    let (a, b, c) = (p.a, p.b, p.c);
    let pr = eval_profiles(p, &grid.nodes);
    let wp = grid.weight(1.0);
    let wm = grid.weight(-1.0);
    let sh = -grid.alpha;
    let a0 = |f: &[C64]| grid.apply_shifted(sh, f, |z| 1.0 + a * z * z);
    let b0 = |f: &[C64]| grid.apply_shifted(sh, f, |z| 1.0 + b * z * z);

    let zeta1 = stack(real(pr.iter().zip(&wp).map(|(x, w)| w * x.q)), real(pr.iter().zip(&wp).map(|(x, w)| w * x.rp)));
    let zeta2 = stack(real(pr.iter().zip(&wp).map(|(x, w)| w * x.tail_int)), real(pr.iter().zip(&wp).map(|(x, w)| -w * x.dr_dc)));

    let bdr = b0(&real(pr.iter().zip(&wm).map(|(x, w)| w * x.dr_dc)));
    let top: Vec<C64> =
        pr.iter().zip(&wm).zip(&bdr).map(|((x, w), bd)| c * (-bd - w * (2.0 * x.q * x.dq_dc + x.qp * x.head_int))).collect();
    let bottom: Vec<C64> = b0(&real(pr.iter().zip(&wm).map(|(x, w)| w * x.head_int))).into_iter().map(|v| c * v).collect();
    let zeta1_star = stack(top, bottom);

    let zeta2_star = stack(
        a0(&real(pr.iter().zip(&wm).map(|(x, w)| w * x.qp))),
        b0(&real(pr.iter().zip(&wm).map(|(x, w)| w * x.r))).into_iter().map(|v| -v).collect(),
    );
    ZetaQuadruple { zeta1, zeta2, zeta1_star, zeta2_star }
}

/// ⟨f, g⟩ on stacked vectors.
pub fn pair_stacked(grid: &Grid1D, f: &[C64], g: &[C64]) -> C64 {
    f.iter().zip(g).map(|(x, y)| x * y.conj()).sum::<C64>() * grid.dz
}

/// G_ij = ⟨ζ_i, ζ_j*⟩ as complex numbers.
pub fn pairing_matrix_complex(zq: &ZetaQuadruple, grid: &Grid1D) -> [[C64; 2]; 2] {
    let r = [&zq.zeta1, &zq.zeta2];
    let l = [&zq.zeta1_star, &zq.zeta2_star];
    let mut g = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = pair_stacked(grid, r[i], l[j]);
        }
    }
    g
}

/// Real parts of the pairing matrix; the imaginary parts are rounding only.
pub fn pairing_matrix(zq: &ZetaQuadruple, grid: &Grid1D) -> [[f64; 2]; 2] {
    let g = pairing_matrix_complex(zq, grid);
    [[g[0][0].re, g[0][1].re], [g[1][0].re, g[1][1].re]]
}

/// (n(c), d(c)).
pub fn nd_polynomials(a: f64, b: f64, c: f64) -> (f64, f64) {
    let r = c * c;
    let n = 7.0 * a * a - b * a
        + (4.0 * a * a - 10.0 * b * a) * r
        + (3.0 * b * b + 4.0 * a * a - 7.0 * a * b) * r * r
        + 6.0 * b * (b - 2.0 * a) * r.powi(3)
        + 6.0 * b * b * r.powi(4);
    let d = 6.0 * a * a
        + (3.0 * a * a - 9.0 * a * b) * r
        + (6.0 * a * a + 2.0 * b * b - 2.0 * a * b) * r * r
        + (b * b - 19.0 * a * b) * r.powi(3)
        + 12.0 * b * b * r.powi(4);
    (n, d)
}

/// ρ-derivatives (n′(ρ), d′(ρ)) at ρ = c².
pub fn nd_derivatives(a: f64, b: f64, rho: f64) -> (f64, f64) {
    let n = 4.0 * a * a - 10.0 * a * b
        + 2.0 * (3.0 * b * b + 4.0 * a * a - 7.0 * a * b) * rho
        + 18.0 * (b * b - 2.0 * a * b) * rho * rho
        + 24.0 * b * b * rho.powi(3);
    let d = 3.0 * a * a - 9.0 * a * b
        + 2.0 * (6.0 * a * a + 2.0 * b * b - 2.0 * a * b) * rho
        + 3.0 * (b * b - 19.0 * a * b) * rho * rho
        + 48.0 * b * b * rho.powi(3);
    (n, d)
}

/// Closed form of ⟨ζ₂, ζ₁*⟩.
pub fn g21_closed_form(p: &ModelParams) -> f64 {
    let (a, b, c) = (p.a, p.b, p.c);
    let c2 = c * c;
    let c4 = c2 * c2;
    let bracket = a * (c2 - 1.0) + (b * c2 - a) + 2.0 * c4 * (2.0 * b * c2 - b - a);
    16.0 / (3.0 * c4) * (b * c4 - a) / (c2 - 1.0) * bracket / (b * c2 - a)
}

/// Closed form of ⟨𝓛₁(0)ζ₁, ζ₂*⟩.
pub fn l1_pairing_closed_form(p: &ModelParams) -> f64 {
    let (a, b, c) = (p.a, p.b, p.c);
    let c2 = c * c;
    -8.0 / 15.0 * (c2 - 1.0) / c * p.alpha_c * (2.0 * c2 * (b - a) + 3.0 * (b * c2 * c2 - a))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClosedForm {
    pub lambda1_0: f64,
    pub lambda2_0: f64,
    pub kappa1: f64,
}

pub fn closed_form_constants(p: &ModelParams) -> Result<ClosedForm> {
    let de = energy_and_derivative(p).de_dc;
    let g22 = 0.5 * de;
    if g22.abs() < 1e-12 {
        return Err(Error::Domain(format!("degenerate pairing <zeta2, zeta2*> = {g22:e}")));
    }
    let ratio = l1_pairing_closed_form(p) / -g22;
    if !(ratio > 0.0) {
        return Err(Error::Domain(format!("lambda1^2 = {ratio:e} is not positive")));
    }
    let lambda1_0 = ratio.sqrt();
    let (n, d) = nd_polynomials(p.a, p.b, p.c);
    let c4 = p.c.powi(4);
    let lambda2_0 = 32.0 * (p.b * c4 - p.a) * n / (3.0 * d * de);
    Ok(ClosedForm { lambda1_0, lambda2_0, kappa1: 0.5 * lambda1_0 * de })
}

/// 𝓛₁(0), the η² coefficient of 𝓛(η), applied to a conjugated stacked
/// vector. Assembled from its multiplier/potential expression, independently
/// of `linop::assemble`.
pub fn apply_l1(p: &ModelParams, grid: &Grid1D, v: &[C64]) -> Vec<C64> {
    let n = grid.n;
    let (a, b) = (p.a, p.b);
    let sh = grid.alpha;
    let pr = eval_profiles(p, &grid.nodes);
    let (phi, psi) = v.split_at(n);
    let binv = |f: &[C64]| grid.apply_shifted(sh, f, |z| 1.0 / (1.0 + b * z * z));
    let a0 = |f: &[C64]| grid.apply_shifted(sh, f, |z| 1.0 + a * z * z);
    let d1 = |f: &[C64]| grid.apply_shifted(sh, f, |z| C64::new(0.0, 1.0) * z);
    let d2 = |f: &[C64]| grid.apply_shifted(sh, f, |z| -z * z);

    // B₀⁻¹(I − A₀ − B₀⁻¹A₀ + r)Φ
    let a0phi = a0(phi);
    let ba0phi = binv(&a0phi);
    let inner: Vec<C64> = (0..n).map(|j| phi[j] - a0phi[j] - ba0phi[j] + pr[j].r * phi[j]).collect();
    let mut lower = binv(&inner);

    // bB₀⁻²(v₁(0)Φ + v₂Ψ)
    let dphi = d1(phi);
    let ddphi = d2(phi);
    let dpsi = d1(psi);
    let pot: Vec<C64> = (0..n)
        .map(|j| {
            let x = &pr[j];
            2.0 * x.rp * dphi[j] + x.r * ddphi[j] + 2.0 * x.q * dpsi[j] + x.qp * psi[j]
        })
        .collect();
    let pot = binv(&binv(&pot));
    for j in 0..n {
        lower[j] += b * pot[j];
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    out.extend(lower);
    out
}

/// ⟨𝓛₁(0)ζ₁, ζ₂*⟩ evaluated on the grid.
pub fn l1_pairing_quadrature(p: &ModelParams, grid: &Grid1D) -> f64 {
    let zq = zeta_quadruple(p, grid);
    pair_stacked(grid, &apply_l1(p, grid, &zq.zeta1), &zq.zeta2_star).re
}
