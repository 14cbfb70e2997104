use blsw::grid::{build_grid, multiplier_apply, Grid1D};
use blsw::linop::*;
use blsw::profile::{eval_profiles, tail_half_length};
use blsw::resonance::zeta_quadruple;
use blsw::symbols::lambda_pm;
use blsw::{make_params, Error, ModelParams, C64};

fn params(c: f64) -> ModelParams {
    make_params(1.0, 2.0, c, 0.5).unwrap()
}

/// Greedy nearest matching of two multisets; returns the largest distance.
fn set_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|u, v| u.1.total_cmp(&v.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

#[test]
fn grid_construction() {
    let p = params(1.1);
    let g = build_grid(&p, 512, None).unwrap();
    assert!((g.half_length - 40.0 / (p.alpha_c - p.alpha)).abs() < 1e-12);
    assert!((g.dz - 2.0 * g.half_length / 512.0).abs() < 1e-15);
    assert!(matches!(build_grid(&p, 63, None), Err(Error::Grid(_))));
    assert!(matches!(build_grid(&params(1.05), 128, Some(5.0)), Err(Error::Grid(_))));
    assert_eq!(tail_half_length(&params(1.0001)), 400.0);
}

#[test]
fn conjugated_derivative_multiplier() {
    let p = params(1.1);
    let g = Grid1D::periodic(30.0, 256, p.alpha);
    let w: Vec<C64> = g.nodes.iter().map(|&z| C64::new((-z * z / 8.0).exp() * z.sin(), 0.0)).collect();
    let got = multiplier_apply(&g, |z| C64::new(0.0, 1.0) * z, &w);
    for (j, &z) in g.nodes.iter().enumerate() {
        let e = (-z * z / 8.0).exp();
        let want = e * (z.cos() - z / 4.0 * z.sin()) - p.alpha * e * z.sin();
        assert!((got[j] - want).norm() < 1e-8, "z = {z}");
    }
}

fn free_spectrum_matches(eta: f64) {
    let p = params(1.1);
    let g = build_grid(&p, 128, None).unwrap();
    let m = assemble_free(&p, &g, eta).unwrap();
    let dec = DenseEig::compute(&m.entries).unwrap();
    let nyq = g.wavenumbers[g.n / 2];
    let mut want = vec![];
    for &xi in &g.wavenumbers {
        if xi != nyq {
            let (lp, lm) = lambda_pm(xi, eta, &p);
            want.push(lp);
            want.push(lm);
        }
    }
    // the Nyquist block carries symbols averaged over ±ξ_N
    let e2 = eta * eta;
    let k21 = |z: C64| -(1.0 + p.a * e2 + p.a * z * z) * (z * z + e2) / (1.0 + p.b * e2 + p.b * z * z);
    let (zp, zm) = (C64::new(nyq, p.alpha), C64::new(-nyq, p.alpha));
    let d = 0.5 * C64::new(0.0, 1.0) * (zp + zm) * p.c;
    let root = (0.5 * (k21(zp) + k21(zm))).sqrt();
    want.push(d + root);
    want.push(d - root);
    let got = dec.values.clone();
    let d = set_distance(&want, &got);
    assert!(d < 1e-10, "eta = {eta}: distance {d:e}");
}

#[test]
fn free_spectrum_is_symbol_set() {
    free_spectrum_matches(0.0);
    free_spectrum_matches(0.3);
}

#[test]
fn free_spectrum_left_of_line() {
    let p = params(1.1);
    let g = build_grid(&p, 128, None).unwrap();
    for &eta in &[0.0, 0.1, 0.7] {
        let m = assemble_free(&p, &g, eta).unwrap();
        let s = spectrum_slice(&m, -p.alpha * (p.c - 1.0) / 2.0).unwrap();
        assert!(s.is_empty(), "eta = {eta}: {s:?}");
    }
}

#[test]
fn kernel_pair_and_spectral_symmetry() {
    let p = params(1.2);
    let g = build_grid(&p, 512, None).unwrap();
    let zq = zeta_quadruple(&p, &g);
    let m = assemble_L(&p, &g, 0.0).unwrap();
    let n1 = norm2(&zq.zeta1);
    assert!(norm2(&m.apply(&zq.zeta1)) <= 1e-6 * n1);
    let r: Vec<C64> = m.apply(&zq.zeta2).iter().zip(&zq.zeta1).map(|(a, b)| a - b).collect();
    assert!(norm2(&r) <= 1e-5 * n1);
    // adjoint pair
    let a1 = m.apply_adjoint(&zq.zeta2_star);
    assert!(norm2(&a1) <= 1e-5 * norm2(&zq.zeta2_star));

    // analytic first row: c∂_zΦ + Ψ = c q′ + r′ = 0 on ζ₁ since r′ = −c q′
    let pr = eval_profiles(&p, &g.nodes);
    let wp = g.weight(1.0);
    for j in 0..g.n {
        assert!((p.c * pr[j].qp + pr[j].rp).abs() * wp[j] < 1e-12);
    }

    let eps3 = p.eps.powi(3);
    let pairs = eigs_near(&m, C64::new(0.0, 0.0), 2).unwrap();
    for e in &pairs {
        assert!(e.lambda.norm() <= 1e-6 * eps3, "{}", e.lambda);
    }
    let eta = 0.05;
    let a = spectrum_slice(&assemble_L(&p, &g, eta).unwrap(), -0.05).unwrap();
    let b: Vec<C64> = spectrum_slice(&assemble_L(&p, &g, -eta).unwrap(), -0.05).unwrap().iter().map(|v| v.conj()).collect();
    assert!(!a.is_empty());
    assert!(set_distance(&a, &b) < 1e-8);
}

#[test]
fn eigs_near_far_target_returns_genuine_eigenvalues() {
    let p = params(1.2);
    let g = build_grid(&p, 128, None).unwrap();
    let m = assemble_L(&p, &g, 0.2).unwrap();
    let target = C64::new(5.0, 40.0);
    let near = eigs_near(&m, target, 3).unwrap();
    let all = spectrum_slice(&m, f64::NEG_INFINITY).unwrap();
    let best = all.iter().map(|v| (v - target).norm()).fold(f64::INFINITY, f64::min);
    assert!(((near[0].lambda - target).norm() - best).abs() < 1e-9);
    for e in &near {
        assert!(e.residual <= EIG_RESIDUAL_TOL);
        assert!(all.iter().any(|v| (v - e.lambda).norm() < 1e-8));
        let pairing: C64 = e.right.iter().zip(&e.left).map(|(r, l)| r * l.conj()).sum();
        assert!(pairing.norm() > 0.0);
    }
}

#[test]
fn resolvent_probe_behaviour() {
    let p = params(1.05);
    let g = build_grid(&p, 128, None).unwrap();
    let m = assemble_L(&p, &g, 0.02).unwrap();
    let far = resolvent_norm_probe(&m, C64::new(1.0, 0.0)).unwrap();
    assert!(far.is_finite() && far < 1e2, "{far}");
    let lam = eigs_near(&m, C64::new(0.0, 0.004), 1).unwrap()[0].lambda;
    let at = resolvent_norm_probe(&m, lam).unwrap();
    assert!(at >= 1e12, "{at:e}");
    // monotone growth along the ray from 1 to λ
    let mut last = 0.0;
    for k in 0..6 {
        let s = 1.0 - 10f64.powi(-k);
        let z = C64::new(1.0, 0.0) * (1.0 - s) + lam * s;
        let r = resolvent_norm_probe(&m, z).unwrap();
        assert!(r > last, "step {k}: {r} <= {last}");
        last = r;
    }
}

#[test]
fn rightmost_pair_is_resonant() {
    let p = params(1.05);
    let g = build_grid(&p, 256, None).unwrap();
    let eta = 0.5 * p.eps * p.eps;
    let m = assemble_L(&p, &g, eta).unwrap();
    let all = spectrum_slice(&m, f64::NEG_INFINITY).unwrap();
    let (pair, _) = blsw::resonance::basis_at(&p, &g, eta).unwrap();
    let top = [all[0], all[1]];
    for want in [pair.plus.lambda, pair.minus.lambda] {
        assert!(top.iter().any(|v| (v - want).norm() < 1e-10), "{want} not in {top:?}");
    }
    assert!(all[2].re < all[1].re);
    // below the decay line, so the −β̂ε³ slice is empty at this speed
    let line = -(p.alpha_hat() / 16.0) * p.eps.powi(3);
    assert!(top[0].re < line);
    assert!(spectrum_slice(&m, line).unwrap().is_empty());
}
