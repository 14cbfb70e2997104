//! Truncated periodic z-grid and Fourier multipliers on it.

use std::fmt;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::profile::{tail_half_length, weighted_tail};

/// Largest admissible q_c(L)e^{αL}/q_c(0).
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Collocation grid z_j = −L + j·dz on the periodic box [−L, L).
///
/// `wavenumbers` holds ξ_k = πk/L in FFT order: k = 0, 1, …, n/2−1, −n/2, …, −1.
#[derive(Clone)]
pub struct Grid1D {
    pub half_length: f64,
    pub n: usize,
    pub dz: f64,
    /// weight exponent the grid was built for
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .field("dz", &self.dz)
            .field("alpha", &self.alpha)
            .finish()
    }
}

pub fn build_grid(p: &ModelParams, n: usize, l_override: Option<f64>) -> Result<Grid1D> {
    if n < 64 || !n.is_multiple_of(2) {
        return Err(Error::Grid(format!("n must be even and at least 64, got {n}")));
    }
    let l = l_override.unwrap_or_else(|| tail_half_length(p));
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::Grid(format!("half-length must be positive, got {l}")));
    }
    let tail = weighted_tail(p, l);
    if tail > TAIL_TOLERANCE {
        return Err(Error::Grid(format!(
            "weighted tail q_c(L)e^(alpha L)/q_c(0) = {tail:.3e} exceeds {TAIL_TOLERANCE:e} at L = {l}"
        )));
    }
    Ok(Grid1D::periodic(l, n, p.alpha))
}

impl Grid1D {
    /// Periodic grid without the profile tail check.
    pub fn periodic(half_length: f64, n: usize, alpha: f64) -> Self {
        let dz = 2.0 * half_length / n as f64;
        let nodes = (0..n).map(|j| -half_length + j as f64 * dz).collect();
        let wavenumbers = (0..n)
            .map(|j| {
                let k = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                std::f64::consts::PI * k / half_length
            })
            .collect();
        let mut planner = FftPlanner::new();
        Grid1D {
            half_length,
            n,
            dz,
            alpha,
            nodes,
            wavenumbers,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized forward transform.
    pub fn fft(&self, data: &mut [C64]) {
        self.fwd.process(data);
    }

    /// Inverse transform including the 1/n factor.
    pub fn ifft(&self, data: &mut [C64]) {
        self.inv.process(data);
        let s = 1.0 / self.n as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// m(D) applied with the symbol evaluated at ξ_k + i·shift.
    pub fn apply_shifted<F: Fn(C64) -> C64>(&self, shift: f64, field: &[C64], symbol: F) -> Vec<C64> {
        assert_eq!(field.len(), self.n, "field length must equal the grid size");
        let mut buf = field.to_vec();
        self.fft(&mut buf);
        for (v, s) in buf.iter_mut().zip(self.symbol_values(shift, &symbol)) {
            *v *= s;
        }
        self.ifft(&mut buf);
        buf
    }

    /// Symbol samples in FFT order. The Nyquist entry averages ±ξ_{n/2}, so a
    /// symbol of a real operator yields a real matrix.
    pub fn symbol_values<F: Fn(C64) -> C64>(&self, shift: f64, symbol: &F) -> Vec<C64> {
        let mut out: Vec<C64> = self.wavenumbers.iter().map(|&xi| symbol(C64::new(xi, shift))).collect();
        let k = self.n / 2;
        let xn = self.wavenumbers[k];
        out[k] = 0.5 * (symbol(C64::new(xn, shift)) + symbol(C64::new(-xn, shift)));
        out
    }

    /// Dense matrix of the multiplier with symbol at ξ_k + i·shift (circulant).
    pub fn circulant<F: Fn(C64) -> C64>(&self, shift: f64, symbol: F) -> Mat<C64> {
        let mut col = self.symbol_values(shift, &symbol);
        self.ifft(&mut col);
        let n = self.n;
        Mat::from_fn(n, n, |j, l| col[(j + n - l) % n])
    }

    /// ⟨f, g⟩ = dz·Σ f·conj(g)
    pub fn pair(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<C64>() * self.dz
    }

    /// e^{sign·α z_j}
    pub fn weight(&self, sign: f64) -> Vec<f64> {
        self.nodes.iter().map(|&z| (sign * self.alpha * z).exp()).collect()
    }
}

/// Conjugated multiplier m(D) with symbol evaluated at ξ_k + iα.
pub fn multiplier_apply<F: Fn(C64) -> C64>(grid: &Grid1D, symbol: F, field: &[C64]) -> Vec<C64> {
    grid.apply_shifted(grid.alpha, field, symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn parity_and_tail_errors() {
        let p = make_params(1.0, 2.0, 1.05, 0.5).unwrap();
        assert!(matches!(build_grid(&p, 63, None), Err(Error::Grid(_))));
        assert!(matches!(build_grid(&p, 512, Some(5.0)), Err(Error::Grid(_))));
        let p = make_params(1.0, 2.0, 1.1, 0.5).unwrap();
        let g = build_grid(&p, 512, None).unwrap();
        assert!((g.half_length - 40.0 / (p.alpha_c - p.alpha)).abs() < 1e-12);
    }

    #[test]
    fn identity_and_inverse_pair() {
        let g = Grid1D::periodic(20.0, 128, 0.3);
        let f: Vec<C64> = g.nodes.iter().map(|&z| C64::new((-z * z).exp(), z.sin() * (-0.1 * z * z).exp())).collect();
        let same = multiplier_apply(&g, |_| C64::new(1.0, 0.0), &f);
        assert!(same.iter().zip(&f).all(|(a, b)| (a - b).norm() < 1e-13));
        let b = 2.0;
        let there = multiplier_apply(&g, |z| 1.0 / (1.0 + b * (z * z + 0.09)), &f);
        let back = multiplier_apply(&g, |z| 1.0 + b * (z * z + 0.09), &there);
        assert!(back.iter().zip(&f).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn circulant_matches_apply() {
        let g = Grid1D::periodic(10.0, 64, 0.2);
        let f: Vec<C64> = g.nodes.iter().map(|&z| C64::new((-0.3 * z * z).exp(), 0.1 * z)).collect();
        let sym = |z: C64| C64::new(0.0, 1.0) * z / (1.0 + z * z);
        let direct = multiplier_apply(&g, sym, &f);
        let m = g.circulant(g.alpha, sym);
        for j in 0..g.n {
            let v: C64 = (0..g.n).map(|l| m[(j, l)] * f[l]).sum();
            assert!((v - direct[j]).norm() < 1e-13);
        }
    }
}
