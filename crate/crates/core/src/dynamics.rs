//! Linearized evolution per transverse mode, resonant coefficients, the
//! modulation prediction H_t∗W_t∗f and decay-rate measurements.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::expm::expm;
use crate::fit::{line, loglog_slope};
use crate::grid::Grid1D;
use crate::linop::{assemble_L, matvec, norm_x, DenseEig, OperatorMatrix};
use crate::params::ModelParams;
use crate::profile::eval_profiles;
use crate::resonance::{basis_at, closed_form_constants, pair_stacked, zeta_quadruple, ClosedForm, ResonantPair};

const I: C64 = C64::new(0.0, 1.0);

/// Largest eigenvector condition number trusted by the spectral propagator.
pub const CONDITION_LIMIT: f64 = 1e8;

/// e^{tM} on vectors, by eigen-expansion or, for an ill-conditioned
/// eigenbasis, by scaling and squaring.
pub enum Propagator {
    Spectral {
        dec: DenseEig,
        /// ⟨r_k, l_k⟩
        norms: Vec<C64>,
    },
    Expm {
        m: Mat<C64>,
    },
}

impl Propagator {
    pub fn new(m: &OperatorMatrix) -> Result<Self> {
        match DenseEig::compute(&m.entries) {
            Ok(dec) => Ok(Self::from_decomposition(m, dec)),
            Err(_) => Ok(Propagator::Expm { m: m.entries.clone() }),
        }
    }

    /// Reuses a decomposition already computed for `m`.
    pub fn from_decomposition(m: &OperatorMatrix, dec: DenseEig) -> Self {
        if dec.condition() > CONDITION_LIMIT {
            return Propagator::Expm { m: m.entries.clone() };
        }
        let n = dec.values.len();
        let norms = (0..n).map(|k| (0..n).map(|i| dec.right[(i, k)] * dec.left[(i, k)].conj()).sum()).collect();
        Propagator::Spectral { dec, norms }
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self, Propagator::Spectral { .. })
    }

    pub fn propagate(&self, state0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
        if times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Propagation("times must be nonnegative".into()));
        }
        match self {
            Propagator::Spectral { dec, norms } => {
                let n = dec.values.len();
                let coef: Vec<C64> =
                    (0..n).map(|k| (0..n).map(|i| state0[i] * dec.left[(i, k)].conj()).sum::<C64>() / norms[k]).collect();
                let out: Vec<Vec<C64>> = times
                    .iter()
                    .map(|&t| {
                        if t == 0.0 {
                            return state0.to_vec();
                        }
                        let w: Vec<C64> = coef.iter().zip(&dec.values).map(|(c, l)| c * (l * t).exp()).collect();
                        matvec(&dec.right, &w)
                    })
                    .collect();
                if out.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Propagation("spectral propagation produced non-finite values".into()));
                }
                Ok(out)
            }
            Propagator::Expm { m } => {
                times.iter().map(|&t| if t == 0.0 { Ok(state0.to_vec()) } else { Ok(matvec(&expm(m, t)?, state0)) }).collect()
            }
        }
    }
}

/// State at each time under the flow of M.
pub fn evolve_mode(m: &OperatorMatrix, state0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
    let prop = Propagator::new(m)?;
    match prop.propagate(state0, times) {
        Ok(v) => Ok(v),
        Err(e) if prop.is_spectral() => Propagator::Expm { m: m.entries.clone() }
            .propagate(state0, times)
            .map_err(|f| Error::Propagation(format!("spectral path failed ({e}); fallback failed ({f})"))),
        Err(e) => Err(e),
    }
}

/// Real resonant basis g₁, g₂ and its dual g₁*, g₂* at η ≠ 0.
#[derive(Clone, Debug)]
pub struct ResonantBasis {
    pub eta: f64,
    pub lambda: C64,
    pub kappa: f64,
    pub g1: Vec<C64>,
    pub g2: Vec<C64>,
    pub g1_star: Vec<C64>,
    pub g2_star: Vec<C64>,
    dz: f64,
}

impl ResonantBasis {
    pub fn from_pair(grid: &Grid1D, pair: &ResonantPair) -> Result<Self> {
        // g = (1 + iR/I)ζ where ⟨ζ, ζ*⟩ = R + iI, so that ⟨g, g*⟩ = 2iκ
        let lift = |r: &[C64], l: &[C64]| -> (Vec<C64>, f64) {
            let z = pair_stacked(grid, r, l);
            let f = C64::new(1.0, z.re / z.im);
            (r.iter().map(|v| v * f).collect(), 0.5 * (z.im + z.re * z.re / z.im))
        };
        let (gp, kappa) = lift(&pair.plus.right, &pair.plus.left);
        let (gm, _) = lift(&pair.minus.right, &pair.minus.left);
        if pair.eta == 0.0 || !(kappa.abs() >= 1e-12) {
            return Err(Error::DegenerateMode(format!(
                "kappa = {kappa:e} at eta = {}; use the Jordan basis zeta1, zeta2",
                pair.eta
            )));
        }
        let (sp, sm) = (&pair.plus.left, &pair.minus.left);
        let half =
            |a: &[C64], b: &[C64], fa: C64, fb: C64| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| fa * x + fb * y).collect() };
        let ik = 1.0 / (2.0 * I * kappa);
        Ok(ResonantBasis {
            eta: pair.eta,
            lambda: pair.plus.lambda,
            kappa,
            g1: half(&gp, &gm, 0.5.into(), 0.5.into()),
            g2: half(&gp, &gm, ik, -ik),
            g1_star: half(sp, sm, I / (2.0 * kappa), -I / (2.0 * kappa)),
            g2_star: half(sp, sm, 0.5.into(), 0.5.into()),
            dz: grid.dz,
        })
    }

    fn pair(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<C64>() * self.dz
    }

    /// (c₁, c₂) = (⟨u, g₁*⟩, ⟨u, g₂*⟩)
    pub fn project(&self, state: &[C64]) -> (C64, C64) {
        (self.pair(state, &self.g1_star), self.pair(state, &self.g2_star))
    }

    /// c₁g₁ + c₂g₂
    pub fn synthesize(&self, c1: C64, c2: C64) -> Vec<C64> {
        self.g1.iter().zip(&self.g2).map(|(a, b)| c1 * a + c2 * b).collect()
    }

    /// 𝒜(η) = [[Re λ, Im λ/κ], [−κ Im λ, Re λ]]
    pub fn coefficient_matrix(&self) -> [[f64; 2]; 2] {
        let (re, im, k) = (self.lambda.re, self.lambda.im, self.kappa);
        [[re, im / k], [-k * im, re]]
    }

    /// |κc₁|² + |c₂|²
    pub fn energy(&self, c1: C64, c2: C64) -> f64 {
        (self.kappa * c1).norm_sqr() + c2.norm_sqr()
    }

    /// [[⟨g_i, g_j*⟩]]
    pub fn gram(&self) -> [[C64; 2]; 2] {
        [
            [self.pair(&self.g1, &self.g1_star), self.pair(&self.g1, &self.g2_star)],
            [self.pair(&self.g2, &self.g1_star), self.pair(&self.g2, &self.g2_star)],
        ]
    }
}

/// Resonant coefficients of `state` at η, computing the basis from scratch.
pub fn project_resonant(p: &ModelParams, grid: &Grid1D, eta: f64, state: &[C64]) -> Result<(C64, C64)> {
    let (pair, _) = basis_at(p, grid, eta)?;
    Ok(ResonantBasis::from_pair(grid, &pair)?.project(state))
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeCoefficients {
    pub eta: f64,
    pub times: Vec<f64>,
    pub c1: Vec<C64>,
    pub c2: Vec<C64>,
    pub e: Vec<f64>,
}

pub fn track_mode(basis: &ResonantBasis, prop: &Propagator, state0: &[C64], times: &[f64]) -> Result<ModeCoefficients> {
    let states = prop.propagate(state0, times)?;
    let (mut c1, mut c2, mut e) = (vec![], vec![], vec![]);
    for s in &states {
        let (a, b) = basis.project(s);
        c1.push(a);
        c2.push(b);
        e.push(basis.energy(a, b));
    }
    Ok(ModeCoefficients { eta: basis.eta, times: times.to_vec(), c1, c2, e })
}

/// Frequency-domain factor of H_t∗W_t: e^{−λ₂η²t}·sin(λ₁ηt)/(κ₁η).
pub fn modulation_multiplier(cf: &ClosedForm, eta: f64, t: f64) -> f64 {
    let heat = (-cf.lambda2_0 * eta * eta * t).exp();
    let x = cf.lambda1_0 * eta * t;
    let box_ = if x.abs() < 1e-8 { cf.lambda1_0 * t / cf.kappa1 * (1.0 - x * x / 6.0) } else { x.sin() / (cf.kappa1 * eta) };
    heat * box_
}

/// Periodic transverse grid y_j = −L_y + j·dy with FFT-ordered η_j.
#[derive(Clone)]
pub struct YGrid {
    pub half_length: f64,
    pub m: usize,
    pub dy: f64,
    pub nodes: Vec<f64>,
    pub wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for YGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("YGrid").field("half_length", &self.half_length).field("m", &self.m).finish()
    }
}

impl YGrid {
    pub fn new(half_length: f64, m: usize) -> Result<Self> {
        if m < 4 || !m.is_multiple_of(2) || !(half_length > 0.0) {
            return Err(Error::Grid(format!("y grid needs even m >= 4 and L_y > 0, got m={m}, L_y={half_length}")));
        }
        let g = Grid1D::periodic(half_length, m, 0.0);
        let mut planner = FftPlanner::new();
        Ok(YGrid {
            half_length,
            m,
            dy: g.dz,
            nodes: g.nodes,
            wavenumbers: g.wavenumbers,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        })
    }

    pub fn fft(&self, v: &mut [C64]) {
        self.fwd.process(v);
    }

    pub fn ifft(&self, v: &mut [C64]) {
        self.inv.process(v);
        let s = 1.0 / self.m as f64;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// H_t∗W_t∗f on the periodic y grid via the frequency multiplier.
pub fn modulation_prediction(cf: &ClosedForm, y: &YGrid, f: &[f64], t: f64) -> Vec<f64> {
    let mut buf: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
    y.fft(&mut buf);
    for (v, &eta) in buf.iter_mut().zip(&y.wavenumbers) {
        *v *= modulation_multiplier(cf, eta, t);
    }
    y.ifft(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

/// Same prediction by direct summation against the real-space kernel
/// (H_t∗W_t)(s) = [erf((s+λ₁t)/(2√(λ₂t))) − erf((s−λ₁t)/(2√(λ₂t)))]/(4κ₁),
/// with periodic images.
pub fn modulation_prediction_direct(cf: &ClosedForm, y: &YGrid, f: &[f64], t: f64) -> Vec<f64> {
    let w = 2.0 * (cf.lambda2_0 * t).sqrt();
    let a = cf.lambda1_0 * t;
    let period = 2.0 * y.half_length;
    let images = ((a + 12.0 * w) / period).ceil() as i64 + 1;
    let kernel = |s: f64| (libm::erf((s + a) / w) - libm::erf((s - a) / w)) / (4.0 * cf.kappa1);
    y.nodes
        .iter()
        .map(|&yi| {
            let mut acc = 0.0;
            for (&yj, &fj) in y.nodes.iter().zip(f) {
                let d = yi - yj;
                for k in -images..=images {
                    acc += kernel(d + k as f64 * period) * fj;
                }
            }
            acc * y.dy
        })
        .collect()
}

/// Two-dimensional field in conjugated z-coordinates; `phi[j*n + i]` is the
/// value at (y_j, z_i).
#[derive(Clone, Debug)]
pub struct Field2D {
    pub z_grid: Grid1D,
    pub y_grid: YGrid,
    pub phi: Vec<C64>,
    pub psi: Vec<C64>,
}

impl Field2D {
    pub fn zeros(z_grid: Grid1D, y_grid: YGrid) -> Self {
        let len = z_grid.n * y_grid.m;
        Field2D { z_grid, y_grid, phi: vec![C64::new(0.0, 0.0); len], psi: vec![C64::new(0.0, 0.0); len] }
    }

    /// Stacked (Φ, Ψ) slice at y_j.
    pub fn slice(&self, j: usize) -> Vec<C64> {
        let n = self.z_grid.n;
        let mut v = self.phi[j * n..(j + 1) * n].to_vec();
        v.extend_from_slice(&self.psi[j * n..(j + 1) * n]);
        v
    }

    pub fn is_real(&self) -> bool {
        self.phi.iter().chain(&self.psi).all(|v| v.im == 0.0)
    }
}

/// Named initial data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Preset {
    /// γ(y)·ζ₁ with γ Gaussian: a localized shift of the crest line
    GaussianPhaseBump,
    /// Gaussian in y times a Gaussian in z centred at 1/α_c, placed on Φ
    GaussianBump,
    /// y-independent ζ₁
    KernelMode,
    /// seeded random smooth data with the resonant part removed mode by mode
    ProjectedNoise { seed: u64 },
}

impl Preset {
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        match name {
            "gaussian-phase-bump" => Ok(Preset::GaussianPhaseBump),
            "gaussian-bump" => Ok(Preset::GaussianBump),
            "kernel-mode" => Ok(Preset::KernelMode),
            "projected-noise" => Ok(Preset::ProjectedNoise { seed }),
            _ => Err(Error::Config(format!(
                "unknown preset '{name}' (expected gaussian-phase-bump, gaussian-bump, kernel-mode, projected-noise)"
            ))),
        }
    }
}

/// Transverse width 1/ε² of the KP modulation scale.
pub fn natural_width(p: &ModelParams) -> f64 {
    1.0 / (p.eps * p.eps)
}

pub fn preset_field(p: &ModelParams, z_grid: Grid1D, y_grid: YGrid, preset: Preset) -> Result<Field2D> {
    let n = z_grid.n;
    let mut f = Field2D::zeros(z_grid, y_grid);
    let wp = f.z_grid.weight(1.0);
    let w = natural_width(p);
    let bump: Vec<f64> = f.y_grid.nodes.iter().map(|&y| (-(y / w).powi(2)).exp()).collect();
    match preset {
        Preset::GaussianPhaseBump | Preset::KernelMode => {
            let z1 = zeta_quadruple(p, &f.z_grid).zeta1;
            for j in 0..f.y_grid.m {
                let amp = if preset == Preset::KernelMode { 1.0 } else { bump[j] };
                for i in 0..n {
                    f.phi[j * n + i] = C64::new(amp * z1[i].re, 0.0);
                    f.psi[j * n + i] = C64::new(amp * z1[n + i].re, 0.0);
                }
            }
        }
        Preset::GaussianBump => {
            let lz = 1.0 / p.alpha_c;
            for j in 0..f.y_grid.m {
                for i in 0..n {
                    let z = f.z_grid.nodes[i];
                    f.phi[j * n + i] = C64::new(bump[j] * wp[i] * (-((z - lz) / lz).powi(2)).exp(), 0.0);
                }
            }
        }
        Preset::ProjectedNoise { seed } => {
            // smooth random data: a few random Gaussians in (z, y)
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lz = 1.0 / p.alpha_c;
            for _ in 0..6 {
                let (z0, y0) = (rng.random_range(-3.0..3.0) * lz, rng.random_range(-1.0..1.0) * w);
                let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                for j in 0..f.y_grid.m {
                    let gy = (-((f.y_grid.nodes[j] - y0) / w).powi(2)).exp();
                    for i in 0..n {
                        let gz = (-((f.z_grid.nodes[i] - z0) / lz).powi(2)).exp() * wp[i];
                        f.phi[j * n + i] += a * gy * gz;
                        f.psi[j * n + i] += b * gy * gz;
                    }
                }
            }
        }
    }
    Ok(f)
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    /// max_y ‖(∂_zΦ, Ψ) − P(t, y)·e^{αz}(q_c′, r_c′)‖_{L²(z)}
    pub residual: Vec<f64>,
    /// ‖(Φ, Ψ)‖ in L²(y; X)
    pub norm_x: Vec<f64>,
    /// max |P(t, ±L_y)| / max_y |P(t, y)|
    pub boundary_ratio: Vec<f64>,
    /// f(y) = ⟨(Φ₀, Ψ₀)(y), ζ₂*⟩
    pub f_values: Vec<f64>,
    pub decay_fit: Option<f64>,
    /// snapshots of the conjugated fields e^{αz}(Φ, Ψ) when requested
    #[serde(skip)]
    pub snapshots: Option<Vec<(Vec<C64>, Vec<C64>)>>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvolveOptions {
    pub exec: Exec,
    /// log-log fit window
    pub fit_window: Option<(f64, f64)>,
    pub keep_snapshots: bool,
}

/// y-Fourier coefficients of each z-column, as stacked (Φ̂, Ψ̂) per η_j.
fn to_modes(field: &Field2D) -> Vec<Vec<C64>> {
    let (n, m) = (field.z_grid.n, field.y_grid.m);
    let mut modes = vec![vec![C64::new(0.0, 0.0); 2 * n]; m];
    let mut col = vec![C64::new(0.0, 0.0); m];
    for (comp, data) in [&field.phi, &field.psi].into_iter().enumerate() {
        for i in 0..n {
            for j in 0..m {
                col[j] = data[j * n + i];
            }
            field.y_grid.fft(&mut col);
            for j in 0..m {
                modes[j][comp * n + i] = col[j];
            }
        }
    }
    modes
}

/// Inverse of [`to_modes`] for one component block.
fn from_modes(y: &YGrid, n: usize, modes: &[Vec<C64>], offset: usize) -> Vec<C64> {
    let m = y.m;
    let mut out = vec![C64::new(0.0, 0.0); n * m];
    let mut col = vec![C64::new(0.0, 0.0); m];
    for i in 0..n {
        for j in 0..m {
            col[j] = modes[j][offset + i];
        }
        y.ifft(&mut col);
        for j in 0..m {
            out[j * n + i] = col[j];
        }
    }
    out
}

pub fn evolve_field(p: &ModelParams, field0: &Field2D, times: &[f64], opts: EvolveOptions) -> Result<EvolutionRecord> {
    let zg = &field0.z_grid;
    let yg = &field0.y_grid;
    let (n, m) = (zg.n, yg.m);
    let cf = closed_form_constants(p)?;
    let modes0 = to_modes(field0);
    // Nyquist decay of the y-spectrum
    let peak = modes0.iter().map(|v| v.iter().map(|x| x.norm()).fold(0.0, f64::max)).fold(0.0, f64::max);
    let nyq = modes0[m / 2].iter().map(|x| x.norm()).fold(0.0, f64::max);
    if peak > 0.0 && nyq > 1e-10 * peak {
        return Err(Error::Grid(format!("initial y-spectrum not resolved: Nyquist/peak = {:.3e}", nyq / peak)));
    }
    let real = field0.is_real();
    let todo: Vec<usize> = if real { (0..=m / 2).collect() } else { (0..m).collect() };
    let evolved: Vec<Result<Vec<Vec<C64>>>> = opts.exec.map(&todo, |&j| {
        let eta = yg.wavenumbers[j].abs();
        let state = &modes0[j];
        if state.iter().all(|v| *v == C64::new(0.0, 0.0)) {
            return Ok(vec![state.clone(); times.len()]);
        }
        let op = assemble_L(p, zg, eta)?;
        evolve_mode(&op, state, times)
    });
    let mut per_mode: Vec<Option<Vec<Vec<C64>>>> = vec![None; m];
    for (&j, r) in todo.iter().zip(evolved) {
        per_mode[j] = Some(r?);
    }
    if real {
        for j in m / 2 + 1..m {
            let src = per_mode[m - j].as_ref().unwrap();
            per_mode[j] = Some(src.iter().map(|v| v.iter().map(|x| x.conj()).collect()).collect());
        }
    }
    let per_mode: Vec<Vec<Vec<C64>>> = per_mode.into_iter().map(Option::unwrap).collect();

    let zq = zeta_quadruple(p, zg);
    let f_values: Vec<f64> = (0..m).map(|j| pair_stacked(zg, &field0.slice(j), &zq.zeta2_star).re).collect();
    let pr = eval_profiles(p, &zg.nodes);
    let wp = zg.weight(1.0);
    let shape_phi: Vec<f64> = (0..n).map(|i| wp[i] * pr[i].qp).collect();
    let shape_psi: Vec<f64> = (0..n).map(|i| wp[i] * pr[i].rp).collect();

    let mut rec = EvolutionRecord {
        times: times.to_vec(),
        residual: vec![],
        norm_x: vec![],
        boundary_ratio: vec![],
        f_values: f_values.clone(),
        decay_fit: None,
        snapshots: opts.keep_snapshots.then(Vec::new),
    };
    for (k, &t) in times.iter().enumerate() {
        let modes_t: Vec<Vec<C64>> = (0..m).map(|j| per_mode[j][k].clone()).collect();
        let nx2: f64 = (0..m).map(|j| norm_x(zg, yg.wavenumbers[j], &modes_t[j]).powi(2)).sum();
        rec.norm_x.push((nx2 * yg.dy / m as f64).sqrt());
        // ∂_zΦ per mode, then back to y
        let dmodes: Vec<Vec<C64>> = modes_t
            .iter()
            .map(|v| {
                let mut d = zg.apply_shifted(zg.alpha, &v[..n], |z| I * z);
                d.extend_from_slice(&v[n..]);
                d
            })
            .collect();
        let dphi = from_modes(yg, n, &dmodes, 0);
        let psi = from_modes(yg, n, &dmodes, n);
        let pred = if t > 0.0 { modulation_prediction(&cf, yg, &f_values, t) } else { vec![0.0; m] };
        let pmax = pred.iter().map(|v| v.abs()).fold(0.0, f64::max);
        rec.boundary_ratio.push(if pmax > 0.0 { pred[0].abs().max(pred[m - 1].abs()) / pmax } else { 0.0 });
        let mut worst: f64 = 0.0;
        for j in 0..m {
            let s: f64 = (0..n)
                .map(|i| {
                    (dphi[j * n + i] - pred[j] * shape_phi[i]).norm_sqr() + (psi[j * n + i] - pred[j] * shape_psi[i]).norm_sqr()
                })
                .sum();
            worst = worst.max((s * zg.dz).sqrt());
        }
        rec.residual.push(worst);
        if let Some(snaps) = rec.snapshots.as_mut() {
            snaps.push((from_modes(yg, n, &modes_t, 0), from_modes(yg, n, &modes_t, n)));
        }
    }
    if let Some((lo, hi)) = opts.fit_window {
        let (ts, rs): (Vec<f64>, Vec<f64>) =
            times.iter().zip(&rec.residual).filter(|(t, _)| **t >= lo && **t <= hi).map(|(a, b)| (*a, *b)).unzip();
        if ts.len() >= 2 {
            rec.decay_fit = Some(loglog_slope(&ts, &rs)?);
        }
    }
    Ok(rec)
}

/// Geometric times t₀·r^k, k = 0..count.
pub fn geometric_times(t0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * ratio.powi(k as i32)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub eta: f64,
    pub rate: f64,
    /// −β̂ε³ with β̂ = α̂/16
    pub bound: f64,
    pub meets_bound: bool,
    /// max |c_k|/‖state0‖ of the initial data
    pub resonant_content: f64,
    /// set when the data was not projected off the resonant modes
    pub resonant_flag: bool,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
}

/// −β̂ε³ for β̂ = α̂/16.
pub fn decay_bound(p: &ModelParams) -> f64 {
    -(p.alpha_hat() / 16.0) * p.eps.powi(3)
}

/// Removes the resonant part c₁g₁ + c₂g₂.
pub fn project_out(basis: &ResonantBasis, state: &[C64]) -> Vec<C64> {
    let (c1, c2) = basis.project(state);
    let r = basis.synthesize(c1, c2);
    state.iter().zip(&r).map(|(a, b)| a - b).collect()
}

/// Fitted exponential rate of ‖e^{tM(η₀)}u₀‖_X over the tail half of `times`.
pub fn offresonant_decay(p: &ModelParams, grid: &Grid1D, eta0: f64, state0: &[C64], times: &[f64]) -> Result<DecayReport> {
    let (pair, dec) = basis_at(p, grid, eta0)?;
    let basis = ResonantBasis::from_pair(grid, &pair)?;
    let op = assemble_L(p, grid, eta0.abs())?;
    let prop = Propagator::from_decomposition(&op, dec);
    decay_with(p, grid, &basis, &prop, state0, times)
}

pub fn decay_with(
    p: &ModelParams,
    grid: &Grid1D,
    basis: &ResonantBasis,
    prop: &Propagator,
    state0: &[C64],
    times: &[f64],
) -> Result<DecayReport> {
    let eta = basis.eta;
    let (c1, c2) = basis.project(state0);
    let scale = norm_x(grid, eta, state0);
    let content = c1.norm().max(c2.norm()) / scale;
    let states = prop.propagate(state0, times)?;
    let norms: Vec<f64> = states.iter().map(|s| norm_x(grid, eta, s)).collect();
    let half = times.len() / 2;
    let tail = &norms[half..];
    if tail.len() < 2 || tail.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Fit(format!("norm is not monotone on the fit window at eta = {eta}")));
    }
    let logs: Vec<f64> = tail.iter().map(|v| v.ln()).collect();
    let (rate, _) = line(&times[half..], &logs)?;
    let bound = decay_bound(p);
    Ok(DecayReport {
        eta,
        rate,
        bound,
        meets_bound: rate <= bound,
        resonant_content: content,
        resonant_flag: content > 1e-10,
        times: times.to_vec(),
        norms,
    })
}

/// Seeded smooth random state on the grid: a sum of random Gaussians.
pub fn random_state(p: &ModelParams, grid: &Grid1D, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n;
    let wp = grid.weight(1.0);
    let lz = 1.0 / p.alpha_c;
    let mut v = vec![C64::new(0.0, 0.0); 2 * n];
    for _ in 0..8 {
        let z0 = rng.random_range(-4.0..4.0) * lz;
        let w = rng.random_range(0.3..1.5) * lz;
        let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for i in 0..n {
            let g = (-((grid.nodes[i] - z0) / w).powi(2)).exp() * wp[i];
            v[i] += a * g;
            v[n + i] += b * g;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_limit_at_zero() {
        let cf = ClosedForm { lambda1_0: 0.2, lambda2_0: 2.0, kappa1: 0.5 };
        let t = 10.0;
        assert!((modulation_multiplier(&cf, 0.0, t) - 0.2 * t / 0.5).abs() < 1e-15);
        let h = 1e-7;
        assert!((modulation_multiplier(&cf, h, t) - 0.2 * t / 0.5).abs() < 1e-9);
    }

    #[test]
    fn prediction_matches_direct_convolution() {
        let cf = ClosedForm { lambda1_0: 0.18, lambda2_0: 2.4, kappa1: 0.54 };
        let y = YGrid::new(200.0, 256).unwrap();
        let f: Vec<f64> = y.nodes.iter().map(|&s| (-(s / 10.0).powi(2)).exp()).collect();
        for &t in &[5.0, 50.0, 300.0] {
            let a = modulation_prediction(&cf, &y, &f, t);
            let b = modulation_prediction_direct(&cf, &y, &f, t);
            let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let err = a.iter().zip(&b).map(|(x, z)| (x - z).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8 * scale, "t = {t}: {err:e}");
        }
    }

    #[test]
    fn prediction_plateau() {
        let cf = ClosedForm { lambda1_0: 0.18, lambda2_0: 2.4, kappa1: 0.54 };
        let y = YGrid::new(8000.0, 8192).unwrap();
        let f: Vec<f64> = y.nodes.iter().map(|&s| (-(s / 5.0).powi(2)).exp()).collect();
        let mass: f64 = f.iter().sum::<f64>() * y.dy;
        // window [−20, 20], λ₁t = 50·40
        let t = 2000.0 / cf.lambda1_0;
        let pred = modulation_prediction(&cf, &y, &f, t);
        let want = mass / (2.0 * cf.kappa1);
        for (s, v) in y.nodes.iter().zip(&pred) {
            if s.abs() <= 20.0 {
                assert!((v - want).abs() < 0.01 * want);
            }
        }
    }
}
