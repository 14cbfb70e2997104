//! Fourier symbols of the free linearized operator at complex wavenumber
//! ξ+iα, and sampled falsification of their bounds.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::params::ModelParams;

const I: C64 = C64::new(0.0, 1.0);

/// All symbol values at one (ξ+iα, η).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolPoint {
    pub xi: f64,
    pub alpha: f64,
    pub eta: f64,
    pub mu: C64,
    #[serde(rename = "S")]
    pub s: C64,
    pub lam_plus: C64,
    pub lam_minus: C64,
    #[serde(rename = "A")]
    pub a_sym: C64,
    #[serde(rename = "B")]
    pub b_sym: C64,
}

/// Principal square root computed so that a tiny imaginary part keeps full
/// relative accuracy.
pub fn csqrt(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    if x == 0.0 && y == 0.0 {
        return C64::new(0.0, y);
    }
    let r = x.hypot(y);
    if x >= 0.0 {
        let s = (0.5 * (r + x)).sqrt();
        C64::new(s, y / (2.0 * s))
    } else {
        let t = (0.5 * (r - x)).sqrt();
        C64::new(y.abs() / (2.0 * t), if y.is_sign_negative() { -t } else { t })
    }
}

/// μ(ξ+iα, η) = sgn(ξ)·√((ξ+iα)²+η²), taking Im μ ≥ 0 at ξ = 0.
pub fn mu(xi: f64, alpha: f64, eta: f64) -> C64 {
    if xi == 0.0 {
        let w = eta * eta - alpha * alpha;
        return if w >= 0.0 { C64::new(w.sqrt(), 0.0) } else { C64::new(0.0, (-w).sqrt()) };
    }
    let w = C64::new((xi * xi + eta * eta) - alpha * alpha, 2.0 * xi * alpha);
    let root = csqrt(w);
    if xi > 0.0 {
        root
    } else {
        -root
    }
}

/// S(ξ+iα, η) = √((1+a((ξ+iα)²+η²))/(1+b((ξ+iα)²+η²))), principal branch.
pub fn big_s(xi: f64, alpha: f64, eta: f64, p: &ModelParams) -> Result<C64> {
    if 1.0 - p.b * alpha * alpha <= 0.0 {
        return Err(Error::Domain(format!("1 - b*alpha^2 <= 0 at alpha = {alpha}")));
    }
    Ok(s_unchecked(xi, alpha, eta, p))
}

fn s_unchecked(xi: f64, alpha: f64, eta: f64, p: &ModelParams) -> C64 {
    // S² = a/b + ((b−a)/b)/(1+bw) keeps Im S² accurate when |w| is large
    let w = C64::new((xi * xi + eta * eta) - alpha * alpha, 2.0 * xi * alpha);
    let s2 = p.a / p.b + ((p.b - p.a) / p.b) / (1.0 + p.b * w);
    csqrt(s2)
}

/// (λ₊, λ₋) at ξ+iα with α = p.alpha.
pub fn lambda_pm(xi: f64, eta: f64, p: &ModelParams) -> (C64, C64) {
    let pt = symbol_point(xi, eta, p);
    (pt.lam_plus, pt.lam_minus)
}

pub fn symbol_point(xi: f64, eta: f64, p: &ModelParams) -> SymbolPoint {
    let alpha = p.alpha;
    let zeta = C64::new(xi, alpha);
    let w = zeta * zeta + eta * eta;
    let m = mu(xi, alpha, eta);
    let s = s_unchecked(xi, alpha, eta, p);
    let drift = I * p.c * zeta;
    let split = I * m * s;
    SymbolPoint {
        xi,
        alpha,
        eta,
        mu: m,
        s,
        lam_plus: drift + split,
        lam_minus: drift - split,
        a_sym: 1.0 + p.a * w,
        b_sym: 1.0 + p.b * w,
    }
}

/// β̂₀ = (α̂/2)(1−(b−a)α̂²)
pub fn beta_hat0(alpha_hat: f64, p: &ModelParams) -> f64 {
    0.5 * alpha_hat * (1.0 - (p.b - p.a) * alpha_hat * alpha_hat)
}

/// Free KP-II symbol (i/2){(b−a)ζ³ + ζ − η²/ζ} at ζ = ξ+iα̂.
pub fn kp_free_symbol(xi: f64, alpha_hat: f64, eta: f64, p: &ModelParams) -> C64 {
    let z = C64::new(xi, alpha_hat);
    0.5 * I * ((p.b - p.a) * z * z * z + z - eta * eta / z)
}

/// Closed real part −½{3(b−a)α̂ξ² + 2β̂₀ + α̂η²/(ξ²+α̂²)}, regular at ξ = 0.
pub fn kp_free_symbol_re(xi: f64, alpha_hat: f64, eta: f64, p: &ModelParams) -> f64 {
    -0.5 * (3.0 * (p.b - p.a) * alpha_hat * xi * xi
        + 2.0 * beta_hat0(alpha_hat, p)
        + alpha_hat * eta * eta / (xi * xi + alpha_hat * alpha_hat))
}

/// Region of the frequency plane used by the low/middle/high frequency
/// bounds, with δ = ε^{1/20} and K = δ⁻³ by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Low,
    XiMid,
    EtaMid,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScales {
    pub delta: f64,
    pub k: f64,
}

impl RegionScales {
    pub fn standard(p: &ModelParams) -> Self {
        let delta = p.eps.powf(0.05);
        RegionScales { delta, k: delta.powi(-3) }
    }

    pub fn classify(&self, xi: f64, eta: f64, p: &ModelParams) -> Region {
        let modz = xi.hypot(p.alpha);
        let ke = self.k * p.eps;
        if xi.abs() >= self.delta || eta.abs() >= self.delta * modz {
            Region::High
        } else if xi.abs() >= ke {
            Region::XiMid
        } else if eta.abs() >= ke * modz {
            Region::EtaMid
        } else {
            Region::Low
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// min over samples of (bound − value); negative means violated
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub checks: Vec<CheckResult>,
    pub delta: f64,
    pub k: f64,
    /// constant in Re λ₋ ≤ −Cδ²ε on the high region, half the dense-grid minimum
    pub c_high: f64,
    /// sup over samples of 1/|λ₋| (resolvent symbol at λ = 0)
    pub sup_inv_lambda_minus_at_zero: f64,
    /// sup of 1/|λ−λ₋| over the line Re λ = −β̂ε³
    pub sup_inv_lambda_minus_on_line: f64,
    /// sup of 1/|λ−λ₊| over the line Re λ = −β̂ε³
    pub sup_inv_lambda_plus_on_line: f64,
    pub beta_hat: f64,
}

impl BoundReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundOptions {
    pub scales: Option<RegionScales>,
    /// β̂ as a fraction of α̂ for the resolvent line
    pub beta_fraction: f64,
    pub exec: Exec,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions { scales: None, beta_fraction: 1.0 / 16.0, exec: Exec::default() }
    }
}

struct Tally {
    name: &'static str,
    samples: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, samples: 0, violations: 0, worst: f64::INFINITY }
    }

    /// Records `value ≤ bound` with a relative slack of `tol·scale`.
    fn le(&mut self, value: f64, bound: f64, scale: f64, tol: f64) {
        let margin = bound - value;
        self.samples += 1;
        if margin < -tol * scale.max(1e-300) || margin.is_nan() {
            self.violations += 1;
        }
        if margin < self.worst || margin.is_nan() {
            self.worst = margin;
        }
    }

    /// Records the strict inequality `value > 0`.
    fn positive(&mut self, value: f64) {
        self.samples += 1;
        if !(value > 0.0) {
            self.violations += 1;
        }
        if value < self.worst || value.is_nan() {
            self.worst = value;
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.samples += other.samples;
        self.violations += other.violations;
        if other.worst < self.worst || other.worst.is_nan() {
            self.worst = other.worst;
        }
    }

    fn result(&self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            samples: self.samples,
            violations: self.violations,
            worst_margin: if self.samples == 0 { f64::NAN } else { self.worst },
        }
    }
}

const TOL: f64 = 1e-12;

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn signed<R: Rng>(v: f64, rng: &mut R) -> f64 {
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Draws (ξ, η) from the requested region: half log-uniform, half uniform.
fn draw_in<R: Rng>(rng: &mut R, region: Option<Region>, sc: &RegionScales, p: &ModelParams) -> (f64, f64) {
    let big = 1e6;
    let ke = sc.k * p.eps;
    let log = rng.random_bool(0.5);
    let pick = |rng: &mut R, lo: f64, hi: f64| {
        if hi <= lo {
            lo
        } else if log && lo > 0.0 {
            log_uniform(rng, lo, hi)
        } else {
            rng.random_range(lo..hi)
        }
    };
    match region {
        None => {
            if log {
                (signed(log_uniform(rng, 1e-6, big), rng), signed(log_uniform(rng, 1e-6, big), rng))
            } else {
                (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
            }
        }
        Some(Region::High) => {
            if rng.random_bool(0.5) {
                let xi = signed(pick(rng, sc.delta, if log { big } else { 5.0 }), rng);
                let eta = signed(if log { log_uniform(rng, 1e-6, big) } else { rng.random_range(0.0..5.0) }, rng);
                (xi, eta)
            } else {
                let xi = rng.random_range(-sc.delta..sc.delta);
                let lo = sc.delta * xi.hypot(p.alpha);
                (xi, signed(pick(rng, lo, if log { big } else { lo + 5.0 }), rng))
            }
        }
        Some(Region::XiMid) => {
            let xi = signed(pick(rng, ke, sc.delta), rng);
            let hi = sc.delta * xi.hypot(p.alpha);
            (xi, signed(pick(rng, hi * 1e-6, hi), rng))
        }
        Some(Region::EtaMid) => {
            let xi = signed(pick(rng, ke * 1e-6, ke), rng);
            let m = xi.hypot(p.alpha);
            (xi, signed(pick(rng, ke * m, sc.delta * m), rng))
        }
        Some(Region::Low) => {
            let xi = signed(pick(rng, ke * 1e-6, ke), rng);
            let m = xi.hypot(p.alpha);
            (xi, signed(pick(rng, ke * m * 1e-6, ke * m), rng))
        }
    }
}

/// Dense-grid minimum of −Re λ₋/(δ²ε) over the high region.
fn calibrate_high(p: &ModelParams, sc: &RegionScales) -> f64 {
    let scale = sc.delta * sc.delta * p.eps;
    let mut best = f64::INFINITY;
    let n = 400;
    for i in 0..=n {
        // |ξ| from δ to 1e6, log spaced
        let xi = sc.delta * (1e6 / sc.delta).powf(i as f64 / n as f64);
        for j in 0..=n {
            let eta = if j == 0 { 0.0 } else { 1e-6 * (1e12f64).powf(j as f64 / n as f64) };
            best = best.min(-lambda_pm(xi, eta, p).1.re / scale);
        }
    }
    for i in 0..=n {
        let xi = sc.delta * i as f64 / n as f64;
        let lo = sc.delta * xi.hypot(p.alpha);
        for j in 0..=n {
            let eta = lo * (1e6 / lo).powf(j as f64 / n as f64);
            best = best.min(-lambda_pm(xi, eta, p).1.re / scale);
        }
    }
    best
}

/// Samples each bound `n_samples` times and tallies violations.
pub fn verify_symbol_bounds(p: &ModelParams, n_samples: usize, rng_seed: u64) -> BoundReport {
    verify_symbol_bounds_with(p, n_samples, rng_seed, &BoundOptions::default())
}

pub fn verify_symbol_bounds_with(p: &ModelParams, n_samples: usize, rng_seed: u64, opts: &BoundOptions) -> BoundReport {
    let sc = opts.scales.unwrap_or_else(|| RegionScales::standard(p));
    let c_high = 0.5 * calibrate_high(p, &sc);
    let (a, b, c, alpha, eps) = (p.a, p.b, p.c, p.alpha, p.eps);
    let alpha_hat = p.alpha_hat();
    let bh0 = beta_hat0(alpha_hat, p);
    let beta_hat = opts.beta_fraction * alpha_hat;
    let s0 = s_unchecked(0.0, alpha, 0.0, p).re;

    // generate sample sets deterministically, evaluate in chunks
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let regions = [None, Some(Region::High), Some(Region::XiMid), Some(Region::EtaMid), Some(Region::Low)];
    let mut samples: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(n_samples * regions.len());
    for reg in regions {
        for _ in 0..n_samples {
            let (xi, eta) = draw_in(&mut rng, reg, &sc, p);
            let eta2 = eta * rng.random_range(1.0..4.0);
            let im_l = rng.random_range(-5.0..5.0);
            samples.push((xi, eta, eta2, im_l));
        }
    }
    let chunks: Vec<&[(f64, f64, f64, f64)]> = samples.chunks(4096).collect();
    let names = [
        "im_mu",
        "im_mu_eta0",
        "sign_mu",
        "im_mu_monotone",
        "re_S",
        "xi_im_S",
        "S_chain",
        "S_majorant",
        "lambda_plus",
        "lambda_minus",
        "lambda_minus_refined",
        "identities",
        "lemma45_xi_m",
        "lemma45_eta_m",
        "lemma45_high",
        "kp_beta0",
        "kp_resolvent",
    ];
    let partial = opts.exec.map(&chunks, |chunk| {
        let mut t: Vec<Tally> = names.iter().map(|n| Tally::new(n)).collect();
        let mut sup0: f64 = 0.0;
        let mut sup_minus: f64 = 0.0;
        let mut sup_plus: f64 = 0.0;
        for &(xi, eta, eta2, im_l) in chunk.iter() {
            let pt = symbol_point(xi, eta, p);
            let (m, s) = (pt.mu, pt.s);
            let (lp, lm) = (pt.lam_plus, pt.lam_minus);
            t[0].le(-m.im, 0.0, alpha, TOL);
            t[0].le(m.im, alpha, alpha, TOL);
            let m0 = mu(xi, alpha, 0.0);
            t[1].le((m0.im - alpha).abs(), 0.0, alpha, TOL);
            if xi != 0.0 {
                t[2].positive(xi * m.re);
                t[2].positive(m.im);
                let m2 = mu(xi, alpha, eta2);
                t[3].le(m2.im, m.im, alpha, TOL);
                t[5].positive(-xi * s.im);
            }
            t[4].positive(s.re);
            let at_origin = xi == 0.0 && eta == 0.0;
            let sn = s.norm();
            t[6].le((a / b).sqrt(), sn, sn, TOL);
            if !at_origin {
                t[6].le(sn, s0, s0, TOL);
            }
            t[6].le(s0, c, c, 0.0);
            let x = xi * xi + eta * eta - alpha * alpha;
            let maj = 1.0 - 0.5 * (b - a) * x / (1.0 + b * x);
            t[7].le(sn, maj, 1.0, TOL);
            let scale = lp.norm() + lm.norm() + alpha * c;
            t[8].positive(lp.re + 2.0 * alpha * c);
            t[8].le(lp.re, -alpha * c, scale, TOL);
            t[9].le(-alpha * c, lm.re, scale, TOL);
            t[9].le(lm.re, -0.5 * alpha * (c - 1.0), scale, TOL);
            t[10].le(lm.re, -alpha * (c - 1.0 + 0.5 * (b - a) * x / (1.0 + b * x)), scale, TOL);
            let zeta = C64::new(xi, alpha);
            let e1 = (lp + lm - 2.0 * I * c * zeta).norm();
            let e2 = (lp - lm - 2.0 * I * m * s).norm();
            t[11].le(e1.max(e2), 0.0, lp.norm() + lm.norm(), TOL);
            let (xh, eh) = (xi / eps, eta / (eps * eps));
            match sc.classify(xi, eta, p) {
                Region::XiMid => {
                    let bound = -alpha_hat * eps.powi(3) / 4.0 * (1.0 + (b - a) * xh * xh);
                    t[12].le(lm.re, bound, scale, TOL);
                }
                Region::EtaMid => {
                    let bound = -alpha * eps.powi(3) / 4.0 * eh * eh / (xh * xh + alpha_hat * alpha_hat);
                    t[13].le(lm.re, bound, scale, TOL);
                }
                Region::High => {
                    t[14].le(lm.re, -c_high * sc.delta * sc.delta * eps, scale, TOL);
                }
                Region::Low => {}
            }
            // KP symbol at the scaled frequencies (ξ, η) themselves
            let kre = kp_free_symbol(xi, alpha_hat, eta, p).re;
            let kre_closed = kp_free_symbol_re(xi, alpha_hat, eta, p);
            let kscale = kre.abs().max(kre_closed.abs()).max(1.0);
            t[15].le(kre_closed, -bh0, kscale, TOL);
            t[15].le((kre - kre_closed).abs(), 0.0, kscale, 1e-9);
            // resolvent of the KP symbol at Λ with Re Λ > −β̂₀
            let re_l = -bh0 + (im_l.abs() + 1e-3) * 0.1;
            let lam = C64::new(re_l, im_l);
            let ks = kp_free_symbol(xi, alpha_hat, eta, p);
            let inv = 1.0 / (lam - ks).norm();
            let bound = (1.0 / (re_l + bh0)) * (1.0 + 1e-9);
            t[16].le(inv, bound, bound, 0.0);

            sup0 = sup0.max(1.0 / lm.norm());
            let line = -beta_hat * eps.powi(3);
            sup_minus = sup_minus.max(1.0 / (lm.re - line).abs());
            sup_plus = sup_plus.max(1.0 / (lp.re - line).abs());
        }
        (t, sup0, sup_minus, sup_plus)
    });
    let mut total: Vec<Tally> = names.iter().map(|n| Tally::new(n)).collect();
    let (mut sup0, mut sup_minus, mut sup_plus) = (0.0f64, 0.0f64, 0.0f64);
    for (t, a0, a1, a2) in &partial {
        for (acc, x) in total.iter_mut().zip(t) {
            acc.merge(x);
        }
        sup0 = sup0.max(*a0);
        sup_minus = sup_minus.max(*a1);
        sup_plus = sup_plus.max(*a2);
    }
    BoundReport {
        checks: total.iter().map(Tally::result).collect(),
        delta: sc.delta,
        k: sc.k,
        c_high,
        sup_inv_lambda_minus_at_zero: sup0,
        sup_inv_lambda_minus_on_line: sup_minus,
        sup_inv_lambda_plus_on_line: sup_plus,
        beta_hat,
    }
}

/// Dense-grid infimum of |λ₋(ξ+iα, η)|, the oracle for the sampled
/// resolvent supremum at λ = 0.
pub fn inf_abs_lambda_minus_grid(p: &ModelParams, n: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let xi = if i == 0 { 0.0 } else { 1e-6 * (1e10f64).powf(i as f64 / n as f64) };
        for j in 0..=n {
            let eta = if j == 0 { 0.0 } else { 1e-6 * (1e10f64).powf(j as f64 / n as f64) };
            for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0)] {
                best = best.min(lambda_pm(sx * xi, sy * eta, p).1.norm());
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn mu_examples() {
        assert!(close(mu(1.0, 0.5, 0.0), C64::new(1.0, 0.5), 1e-15));
        assert!((mu(0.0, 0.5, 0.3).im - 0.4).abs() < 1e-15);
        let m = mu(-1.0, 0.5, 0.0);
        assert!(close(m, C64::new(-1.0, 0.5), 1e-15));
        assert!(m.re < 0.0);
        // continuity across ξ = 0
        assert!(close(mu(1e-12, 0.5, 0.3), mu(0.0, 0.5, 0.3), 1e-10));
        assert!(close(mu(-1e-12, 0.5, 0.3), mu(0.0, 0.5, 0.3), 1e-10));
    }

    #[test]
    fn s_examples() {
        let p = make_params(1.0, 2.0, 2f64.sqrt(), 0.5).unwrap();
        assert!(close(big_s(0.0, 0.0, 0.0, &p).unwrap(), C64::new(1.0, 0.0), 1e-15));
        let s = big_s(0.0, 0.2, 0.0, &p).unwrap();
        assert!((s.re - (0.96f64 / 0.92).sqrt()).abs() < 1e-14 && s.im.abs() < 1e-15);
        assert!((big_s(0.0, 0.2, 0.0, &p).unwrap().re - 1.021508).abs() < 1e-6);
        assert!((big_s(1e3, 0.2, 0.0, &p).unwrap().norm() - 0.5f64.sqrt()).abs() < 1e-6);
        assert!(matches!(big_s(0.0, 0.8, 0.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn lambda_at_origin() {
        let p = make_params(1.0, 2.0, 2f64.sqrt(), 0.5).unwrap().with_alpha(0.2).unwrap();
        let (lp, lm) = lambda_pm(0.0, 0.0, &p);
        assert!((lm.re + 0.0785410).abs() < 1e-6 && lm.im.abs() < 1e-15);
        assert!((lp.re + 0.4871447).abs() < 1e-6);
        assert!(lm.re <= -0.2 * (p.c - 1.0) / 2.0);
    }

    #[test]
    fn kp_symbol_example() {
        let p = make_params(1.0, 2.0, 1.05, 0.5).unwrap();
        let v = kp_free_symbol(1.0, 0.4, 0.0, &p);
        assert!((v.re + 0.768).abs() < 1e-12);
        assert!((kp_free_symbol_re(0.0, 0.4, 0.0, &p) + beta_hat0(0.4, &p)).abs() < 1e-15);
    }
}
