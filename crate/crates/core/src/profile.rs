//! The sech² solitary-wave family, its z- and c-derivatives, primitives and
//! conserved-quantity closed forms.

use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::quad;

/// Profile quantities at one abscissa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileBundle {
    pub x: f64,
    pub phi: f64,
    pub q: f64,
    pub qp: f64,
    pub qpp: f64,
    pub r: f64,
    pub rp: f64,
    pub dq_dc: f64,
    pub dr_dc: f64,
    /// z-derivative of ∂_c q_c
    pub dqp_dc: f64,
    /// ∫_x^∞ ∂_c q_c
    pub tail_int: f64,
    /// ∫_{−∞}^x ∂_c q_c
    pub head_int: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub e: f64,
    pub de_dc: f64,
}

/// Amplitude A = (c²−1)/c and its c-derivative.
fn amplitude(p: &ModelParams) -> (f64, f64) {
    let c = p.c;
    (c - 1.0 / c, 1.0 + 1.0 / (c * c))
}

/// dα_c/dc
fn dalpha_c(p: &ModelParams) -> f64 {
    let m = p.b * p.c * p.c - p.a;
    p.c * (p.b - p.a) / (p.alpha_c * m * m)
}

/// (sech²u, tanh u, 1 − tanh u, 1 + tanh u) without overflow.
pub(crate) fn sech_tanh(u: f64) -> (f64, f64, f64, f64) {
    let e = (-2.0 * u.abs()).exp();
    let s = 4.0 * e / ((1.0 + e) * (1.0 + e));
    let t = u.signum() * (1.0 - e) / (1.0 + e);
    let (small, big) = (2.0 * e / (1.0 + e), 2.0 / (1.0 + e));
    if u >= 0.0 {
        (s, t, small, big)
    } else {
        (s, t, big, small)
    }
}

pub fn eval_profile(p: &ModelParams, x: f64) -> ProfileBundle {
    let c = p.c;
    let k = p.alpha_c;
    let (amp, damp) = amplitude(p);
    let dk = dalpha_c(p);
    let (s, t, one_minus_t, one_plus_t) = sech_tanh(0.5 * k * x);
    let q = amp * s;
    let qp = -amp * k * s * t;
    let qpp = amp * k * k * s * (t * t - 0.5 * s);
    let dq_dc = damp * s - amp * dk * x * s * t;
    let dqp_dc = -damp * k * s * t - amp * dk * (s * t - k * x * s * t * t + 0.5 * k * x * s * s);
    let edge = 2.0 * damp / k - 2.0 * amp * dk / (k * k);
    let xs = amp * dk / k * x * s;
    ProfileBundle {
        x,
        phi: 2.0 * amp / k * t,
        q,
        qp,
        qpp,
        r: -c * q,
        rp: -c * qp,
        dq_dc,
        dr_dc: -q - c * dq_dc,
        dqp_dc,
        tail_int: edge * one_minus_t - xs,
        head_int: edge * one_plus_t + xs,
    }
}

/// Profiles at every abscissa of `xs`.
pub fn eval_profiles(p: &ModelParams, xs: &[f64]) -> Vec<ProfileBundle> {
    xs.iter().map(|&x| eval_profile(p, x)).collect()
}

pub fn closed_form_integrals(p: &ModelParams) -> Integrals {
    let (amp, _) = amplitude(p);
    let k = p.alpha_c;
    Integrals { i1: 4.0 * amp / k, i2: 8.0 * amp * amp / (3.0 * k), i3: 8.0 * k * amp * amp / 15.0 }
}

/// Gauss–Kronrod evaluation of the same three integrals over the tail
/// half-length.
pub fn quadrature_integrals(p: &ModelParams) -> Integrals {
    let l = tail_half_length(p);
    let breaks = quad::centred_breaks(l, 1.0 / p.alpha_c);
    let go = |f: &dyn Fn(f64) -> f64| quad::integrate_panels(f, &breaks, 1e-15, 1e-13).value;
    Integrals {
        i1: go(&|x| eval_profile(p, x).q),
        i2: go(&|x| eval_profile(p, x).q.powi(2)),
        i3: go(&|x| eval_profile(p, x).qp.powi(2)),
    }
}

/// E(φ_c, r_c) per unit transverse length and its exact c-derivative.
pub fn energy_and_derivative(p: &ModelParams) -> Energy {
    let (a, b, c) = (p.a, p.b, p.c);
    let k = p.alpha_c;
    let dk = dalpha_c(p);
    let (amp, damp) = amplitude(p);
    let ints = closed_form_integrals(p);
    let di2 = 8.0 / 3.0 * (2.0 * amp * damp / k - amp * amp * dk / (k * k));
    let di3 = 8.0 / 15.0 * (dk * amp * amp + 2.0 * k * amp * damp);
    Energy {
        e: (1.0 + c * c) * ints.i2 + (a + b * c * c) * ints.i3,
        de_dc: 2.0 * c * ints.i2 + (1.0 + c * c) * di2 + 2.0 * b * c * ints.i3 + (a + b * c * c) * di3,
    }
}

/// Central difference of E in c, the oracle for the analytic derivative.
pub fn energy_derivative_fd(p: &ModelParams, h: f64) -> f64 {
    let at = |c: f64| {
        let mut q = *p;
        q.c = c;
        q.alpha_c = ((c * c - 1.0) / (q.b * c * c - q.a)).sqrt();
        energy_and_derivative(&q).e
    };
    (at(p.c + h) - at(p.c - h)) / (2.0 * h)
}

/// Default half-length 40/(α_c−α), capped at 400.
pub fn tail_half_length(p: &ModelParams) -> f64 {
    (40.0 / (p.alpha_c - p.alpha)).min(400.0)
}

/// q_c(L)·e^{αL}/q_c(0).
pub fn weighted_tail(p: &ModelParams, l: f64) -> f64 {
    let (s, ..) = sech_tanh(0.5 * p.alpha_c * l);
    s * (p.alpha * l).exp()
}

/// ODE residual (bc²−a)q″ − (c²−1)q + (3c/2)q².
pub fn ode_residual(p: &ModelParams, pb: &ProfileBundle) -> f64 {
    let c = p.c;
    (p.b * c * c - p.a) * pb.qpp - (c * c - 1.0) * pb.q + 1.5 * c * pb.q * pb.q
}

/// sup over `xs` of |∂_z^i ∂_c^j q_c|·e^{αx}, for i, j ∈ {0, 1}.
pub fn weighted_sup(p: &ModelParams, i: u32, j: u32, xs: &[f64]) -> f64 {
    xs.iter()
        .map(|&x| {
            let pb = eval_profile(p, x);
            let v = match (i, j) {
                (0, 0) => pb.q,
                (1, 0) => pb.qp,
                (0, 1) => pb.dq_dc,
                (1, 1) => pb.dqp_dc,
                _ => panic!("weighted_sup supports i, j in {{0, 1}}"),
            };
            v.abs() * (p.alpha * x).exp()
        })
        .fold(0.0, f64::max)
}
