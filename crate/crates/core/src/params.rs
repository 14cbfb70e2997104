use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and weight parameters with their derived constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// ε = √(c²−1)
    pub eps: f64,
    /// weight exponent of L²_α
    pub alpha: f64,
    /// α_c = √((c²−1)/(bc²−a)), decay rate of the profile
    pub alpha_c: f64,
    /// α_c′ = √((c−1)/(bc−a))
    pub alpha_c_prime: f64,
    /// α̂₀ = (b−a)^(−1/2)
    pub alpha_hat0: f64,
}

pub fn make_params(a: f64, b: f64, c: f64, alpha_fraction: f64) -> Result<ModelParams> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && alpha_fraction.is_finite()) {
        return Err(Error::Domain("parameters must be finite".into()));
    }
    if !(a > 0.0 && a < b) {
        return Err(Error::Domain(format!("need 0 < a < b, got a={a}, b={b}")));
    }
    if c <= 1.0 {
        return Err(Error::Domain(format!("need c > 1, got c={c}")));
    }
    if !(alpha_fraction > 0.0 && alpha_fraction < 1.0) {
        return Err(Error::Domain(format!("need 0 < alpha_fraction < 1, got {alpha_fraction}")));
    }
    let alpha_c_prime = ((c - 1.0) / (b * c - a)).sqrt();
    Ok(ModelParams {
        a,
        b,
        c,
        eps: (c * c - 1.0).sqrt(),
        alpha: alpha_fraction * alpha_c_prime,
        alpha_c: ((c * c - 1.0) / (b * c * c - a)).sqrt(),
        alpha_c_prime,
        alpha_hat0: 1.0 / (b - a).sqrt(),
    })
}

/// Parameters at c = √(1+ε²).
pub fn params_from_eps(a: f64, b: f64, eps: f64, alpha_fraction: f64) -> Result<ModelParams> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("need eps > 0, got {eps}")));
    }
    let mut p = make_params(a, b, (1.0 + eps * eps).sqrt(), alpha_fraction)?;
    p.eps = eps;
    Ok(p)
}

impl ModelParams {
    /// α̂ = α/ε
    pub fn alpha_hat(&self) -> f64 {
        self.alpha / self.eps
    }

    /// α̂_ε = 1/√(bc²−a)
    pub fn alpha_hat_eps(&self) -> f64 {
        1.0 / (self.b * self.c * self.c - self.a).sqrt()
    }

    /// Same parameters with another weight.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < self.alpha_c_prime) {
            return Err(Error::Domain(format!("need 0 < alpha < alpha_c' = {}, got {alpha}", self.alpha_c_prime)));
        }
        self.alpha = alpha;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants() {
        let p = make_params(1.0, 2.0, 2f64.sqrt(), 0.5).unwrap();
        assert!((p.alpha_c - 0.5773502691896257).abs() < 1e-12);
        assert!((p.alpha_c_prime - 0.4759631494).abs() < 1e-9);
        assert!((p.alpha - 0.2379815747).abs() < 1e-9);
        assert!((p.eps * p.eps - (p.c * p.c - 1.0)).abs() < 1e-15);
        assert!(p.alpha < p.alpha_c_prime && p.alpha_c_prime <= p.alpha_c);
    }

    #[test]
    fn rejects_inadmissible() {
        assert!(matches!(make_params(1.0, 2.0, 1.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(make_params(2.0, 1.0, 2f64.sqrt(), 0.5), Err(Error::Domain(_))));
        assert!(matches!(make_params(1.0, 2.0, 1.2, 1.0), Err(Error::Domain(_))));
        assert!(matches!(make_params(1.0, 2.0, 1.2, 0.0), Err(Error::Domain(_))));
    }
}
