//! Linearized KP-II reference: λ_KP(η), the resonant modes around the
//! line soliton θ₀ = sech²(α̂₀x/2), and the small-amplitude convergence study.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::curve::warm_start_to;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::build_grid;
use crate::linop::{assemble_L, eigs_near};
use crate::params::{params_from_eps, ModelParams};
use crate::profile::sech_tanh;
use crate::quad;
use crate::symbols::csqrt;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KPConstants {
    pub gamma1: f64,
    pub alpha_hat0: f64,
    pub lambda1_limit: f64,
    pub lambda2_limit: f64,
}

impl KPConstants {
    pub fn new(p: &ModelParams) -> Self {
        KPConstants {
            gamma1: 4.0 * ((p.b - p.a) / 3.0).sqrt(),
            alpha_hat0: p.alpha_hat0,
            lambda1_limit: 1.0 / 3f64.sqrt(),
            lambda2_limit: 2.0 / (3.0 * p.alpha_hat0),
        }
    }
}

/// λ_KP(η) = (iη/√3)·√(1+iγ₁η), principal branch.
pub fn lambda_kp(eta: f64, p: &ModelParams) -> C64 {
    let g1 = KPConstants::new(p).gamma1;
    I * eta / 3f64.sqrt() * csqrt(C64::new(1.0, g1 * eta))
}

/// e^{−s x̂}·sech x̂ without overflow.
fn exp_sech(s: C64, xh: f64) -> C64 {
    let e = (-2.0 * xh.abs()).exp();
    2.0 * (-s * xh - xh.abs()).exp() / (1.0 + e)
}

/// Pointwise values of the KP modes at unscaled x.
#[derive(Clone, Copy, Debug, Default)]
pub struct KPPoint {
    pub g0: C64,
    pub g0_star: C64,
}

fn singular_point(eta: f64, p: &ModelParams, x: f64) -> KPPoint {
    let k = KPConstants::new(p);
    let xh = 0.5 * p.alpha_hat0 * x;
    let (sh, th, ..) = sech_tanh(xh);
    let s = csqrt(C64::new(1.0, k.gamma1 * eta));
    let ss = csqrt(C64::new(1.0, -k.gamma1 * eta));
    let f = exp_sech(s, xh);
    let g = exp_sech(-ss, xh);
    KPPoint { g0: f * ((s + th) * (s + th) - sh) / (2.0 * k.gamma1 * s), g0_star: I / eta * (0.5 * p.alpha_hat0) * g * (ss - th) }
}

/// (g₀,₁, g₀,₂, g*₀,₁, g*₀,₂) at x; the η = 0 limits are used at η = 0.
pub fn regular_point(eta: f64, p: &ModelParams, x: f64) -> [C64; 4] {
    if eta == 0.0 {
        let ah = p.alpha_hat0;
        let xh = 0.5 * ah * x;
        let (sh, th, _, one_plus_t) = sech_tanh(xh);
        let dtheta = -ah * sh * th;
        return [
            C64::new(-0.5 * 3f64.sqrt() * dtheta, 0.0),
            C64::new(sh - (1.0 + xh) * sh * th, 0.0),
            C64::new((xh * sh + one_plus_t) / 3f64.sqrt(), 0.0),
            C64::new(0.5 * ah * sh, 0.0),
        ];
    }
    let a = singular_point(eta, p, x);
    let b = singular_point(-eta, p, x);
    [a.g0 + b.g0, (a.g0 - b.g0) / (I * eta), 0.5 * (a.g0_star + b.g0_star), eta / (2.0 * I) * (a.g0_star - b.g0_star)]
}

#[derive(Clone, Debug)]
pub struct KPModes {
    pub x: Vec<f64>,
    pub g0: Vec<C64>,
    pub g0_star: Vec<C64>,
    pub g01: Vec<C64>,
    pub g02: Vec<C64>,
    pub g01_star: Vec<C64>,
    pub g02_star: Vec<C64>,
}

/// Closed-form KP modes on the abscissae `xs`. The pair g₀, g₀* is
/// singular at η = 0.
pub fn kp_modes(eta: f64, p: &ModelParams, xs: &[f64]) -> Result<KPModes> {
    if eta == 0.0 {
        return Err(Error::Domain("g0 and g0* are singular at eta = 0; use the regularized modes".into()));
    }
    let mut m =
        KPModes { x: xs.to_vec(), g0: vec![], g0_star: vec![], g01: vec![], g02: vec![], g01_star: vec![], g02_star: vec![] };
    for &x in xs {
        let s = singular_point(eta, p, x);
        let r = regular_point(eta, p, x);
        m.g0.push(s.g0);
        m.g0_star.push(s.g0_star);
        m.g01.push(r[0]);
        m.g02.push(r[1]);
        m.g01_star.push(r[2]);
        m.g02_star.push(r[3]);
    }
    Ok(m)
}

/// ∫ f·conj(g) dx by adaptive Gauss–Kronrod over |α̂₀x/2| ≤ 40.
pub fn kp_pairing<F, G>(p: &ModelParams, f: F, g: G) -> C64
where
    F: Fn(f64) -> C64,
    G: Fn(f64) -> C64,
{
    let l = 80.0 / p.alpha_hat0;
    let prod = |x: f64| f(x) * g(x).conj();
    let breaks = quad::centred_breaks(l, 2.0 / p.alpha_hat0);
    let re = quad::integrate_panels(|x| prod(x).re, &breaks, 1e-14, 1e-12).value;
    let im = quad::integrate_panels(|x| prod(x).im, &breaks, 1e-14, 1e-12).value;
    C64::new(re, im)
}

/// [[∫g₀,ⱼ conj g*₀,ₖ]] for j, k ∈ {1, 2}.
pub fn regular_gram(eta: f64, p: &ModelParams) -> [[C64; 2]; 2] {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (j, row) in out.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = kp_pairing(p, |x| regular_point(eta, p, x)[j], |x| regular_point(eta, p, x)[2 + k]);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KpRow {
    pub eps: f64,
    /// ε⁻³λ_ε(ε²η)
    pub re_scaled: f64,
    pub im_scaled: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KpStudy {
    pub eta: f64,
    pub re_kp: f64,
    pub im_kp: f64,
    pub rows: Vec<KpRow>,
    /// error(ε_k)/error(ε_{k+1})
    pub ratios: Vec<f64>,
    pub non_increasing: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct KpOptions {
    pub n: usize,
    pub alpha_fraction: f64,
    pub exec: Exec,
}

impl Default for KpOptions {
    fn default() -> Self {
        KpOptions { n: 512, alpha_fraction: 0.5, exec: Exec::default() }
    }
}

/// Half-length 40/(α_c−α) without the default cap.
fn uncapped_half_length(p: &ModelParams) -> f64 {
    40.0 / (p.alpha_c - p.alpha)
}

/// ε⁻³λ_ε(ε²η) from continuation plus a dense refinement.
pub fn scaled_resonant_eigenvalue(a: f64, b: f64, eps: f64, eta: f64, opts: KpOptions) -> Result<C64> {
    let p = params_from_eps(a, b, eps, opts.alpha_fraction)?;
    if eta == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let grid = build_grid(&p, opts.n, Some(uncapped_half_length(&p)))?;
    let e2 = eps * eps * eta.abs();
    let warm = warm_start_to(&p, &grid, e2)?;
    let m = assemble_L(&p, &grid, e2)?;
    let lam = eigs_near(&m, warm, 1)?[0].lambda;
    let lam = if eta < 0.0 { lam.conj() } else { lam };
    Ok(lam / eps.powi(3))
}

pub fn kp_convergence_study(a: f64, b: f64, eps_list: &[f64], eta: f64, opts: KpOptions) -> Result<KpStudy> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("eps_list must be strictly descending".into()));
    }
    let p0 = params_from_eps(a, b, eps_list[0], opts.alpha_fraction)?;
    let kp = lambda_kp(eta, &p0);
    let vals: Vec<Result<C64>> =
        opts.exec.map(eps_list, |&e| scaled_resonant_eigenvalue(a, b, e, eta, KpOptions { exec: Exec::Sequential, ..opts }));
    let mut rows = Vec::with_capacity(eps_list.len());
    for (&eps, v) in eps_list.iter().zip(vals) {
        let v = v?;
        rows.push(KpRow { eps, re_scaled: v.re, im_scaled: v.im, error: (v - kp).norm() });
    }
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].error / w[1].error).collect();
    let non_increasing = rows.windows(2).all(|w| w[1].error <= w[0].error);
    Ok(KpStudy { eta, re_kp: kp.re, im_kp: kp.im, rows, ratios, non_increasing })
}
