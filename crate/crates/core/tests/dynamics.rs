use blsw::dynamics::*;
use blsw::exec::Exec;
use blsw::grid::{build_grid, Grid1D};
use blsw::linop::*;
use blsw::resonance::{basis_at, zeta_quadruple};
use blsw::{make_params, Error, ModelParams, C64};

fn params() -> ModelParams {
    make_params(1.0, 2.0, 1.2, 0.5).unwrap()
}

fn grid(p: &ModelParams) -> Grid1D {
    build_grid(p, 256, None).unwrap()
}

/// Coarse grid for structural checks that do not depend on resolution.
fn coarse(p: &ModelParams) -> Grid1D {
    build_grid(p, 64, None).unwrap()
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn propagation_identity_and_group_law() {
    let p = params();
    let g = grid(&p);
    let op = assemble_L(&p, &g, 0.1).unwrap();
    let prop = Propagator::new(&op).unwrap();
    assert!(prop.is_spectral());
    let u = random_state(&p, &g, 3);
    let out = prop.propagate(&u, &[0.0, 7.0, 12.0, 19.0]).unwrap();
    assert_eq!(out[0], u);
    let chained = prop.propagate(&out[1], &[12.0]).unwrap().remove(0);
    assert!(dist(&chained, &out[3]) <= 1e-10 * norm2(&out[3]));
    assert!(matches!(prop.propagate(&u, &[1.0, -1.0]), Err(Error::Propagation(_))));
}

#[test]
fn eigenvector_evolves_by_its_eigenvalue() {
    let p = params();
    let g = grid(&p);
    let op = assemble_L(&p, &g, 0.1).unwrap();
    let e = eigs_near(&op, C64::new(0.0, 0.0), 3).unwrap();
    for pair in &e {
        let t = 15.0;
        let got = evolve_mode(&op, &pair.right, &[t]).unwrap().remove(0);
        let want: Vec<C64> = pair.right.iter().map(|v| v * (pair.lambda * t).exp()).collect();
        assert!(dist(&got, &want) <= 1e-9 * norm2(&want), "{}", pair.lambda);
    }
}

#[test]
fn expm_route_agrees_with_spectral_route() {
    let p = params();
    let g = coarse(&p);
    let op = assemble_L(&p, &g, 0.2).unwrap();
    let u = random_state(&p, &g, 11);
    let times = [0.5, 4.0, 20.0];
    let a = Propagator::new(&op).unwrap().propagate(&u, &times).unwrap();
    let b = Propagator::Expm { m: op.entries.clone() }.propagate(&u, &times).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(dist(x, y) <= 1e-8 * norm2(y));
    }
}

#[test]
fn resonant_basis_is_biorthogonal_and_projection_idempotent() {
    let p = params();
    let g = grid(&p);
    let (pair, _) = basis_at(&p, &g, 0.08).unwrap();
    let basis = ResonantBasis::from_pair(&g, &pair).unwrap();
    let gm = basis.gram();
    for (i, row) in gm.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-10, "G[{i}][{j}] = {v}");
        }
    }
    let (c1, c2) = basis.project(&basis.g1);
    assert!((c1 - 1.0).norm() < 1e-10 && c2.norm() < 1e-10);

    let u = random_state(&p, &g, 5);
    let (a, b) = basis.project(&u);
    let r = basis.synthesize(a, b);
    let (a2, b2) = basis.project(&r);
    assert!((a2 - a).norm() <= 1e-10 * a.norm().max(b.norm()));
    assert!((b2 - b).norm() <= 1e-10 * a.norm().max(b.norm()));
    let w = project_out(&basis, &u);
    let (z1, z2) = basis.project(&w);
    assert!(z1.norm().max(z2.norm()) <= 1e-10 * norm2(&u));

    // g₁, g₂ are real combinations, so the matrix is real and κ > 0 near η = 0
    assert!(basis.kappa > 0.0);
    let k1 = blsw::resonance::closed_form_constants(&p).unwrap().kappa1;
    assert!((basis.kappa / 0.08 - k1).abs() < 0.05 * k1);
}

#[test]
fn coefficients_follow_the_two_by_two_system() {
    let p = params();
    let g = grid(&p);
    let eta = 0.08;
    let (pair, dec) = basis_at(&p, &g, eta).unwrap();
    let basis = ResonantBasis::from_pair(&g, &pair).unwrap();
    let op = assemble_L(&p, &g, eta).unwrap();
    let prop = Propagator::from_decomposition(&op, dec);
    let u = random_state(&p, &g, 9);
    let (t, h) = (10.0, 1e-2);
    let c = track_mode(&basis, &prop, &u, &[t - h, t, t + h]).unwrap();
    let a = basis.coefficient_matrix();
    let d1 = (c.c1[2] - c.c1[0]) / (2.0 * h);
    let d2 = (c.c2[2] - c.c2[0]) / (2.0 * h);
    let r1 = a[0][0] * c.c1[1] + a[0][1] * c.c2[1];
    let r2 = a[1][0] * c.c1[1] + a[1][1] * c.c2[1];
    let scale = c.c1[1].norm().max(c.c2[1].norm());
    assert!((d1 - r1).norm() <= 1e-6 * scale && (d2 - r2).norm() <= 1e-6 * scale);

    // e(t) = e^{2 Re λ t} e(0)
    let times: Vec<f64> = (0..6).map(|k| 20.0 * k as f64).collect();
    let c = track_mode(&basis, &prop, &u, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let want = (2.0 * basis.lambda.re * t).exp() * c.e[0];
        assert!((c.e[k] - want).abs() <= 1e-10 * c.e[0]);
    }
}

#[test]
fn negative_controls_for_decay() {
    let p = params();
    let g = grid(&p);
    let eta = 0.08;
    let (pair, dec) = basis_at(&p, &g, eta).unwrap();
    let basis = ResonantBasis::from_pair(&g, &pair).unwrap();
    let op = assemble_L(&p, &g, eta).unwrap();
    let times: Vec<f64> = (0..21).map(|k| 10.0 * k as f64).collect();

    // a non-resonant eigenvector decays at its own rate
    let mut order: Vec<usize> = (0..dec.values.len()).collect();
    order.sort_by(|&i, &j| dec.values[j].re.total_cmp(&dec.values[i].re));
    let k = order
        .iter()
        .copied()
        .find(|&k| (dec.values[k] - pair.plus.lambda).norm() > 1e-6 && (dec.values[k] - pair.minus.lambda).norm() > 1e-6)
        .unwrap();
    let lam = dec.values[k];
    let v = dec.pair(&op.entries, k).right;
    let prop = Propagator::from_decomposition(&op, dec);
    let rep = decay_with(&p, &g, &basis, &prop, &v, &times).unwrap();
    assert!((rep.rate - lam.re).abs() <= 0.02 * lam.re.abs(), "{} vs {}", rep.rate, lam.re);
    assert!(!rep.resonant_flag);

    // the unprojected resonant eigenvector is flagged and decays at Re λ(η)
    let rep = decay_with(&p, &g, &basis, &prop, &pair.plus.right, &times).unwrap();
    assert!(rep.resonant_flag && rep.resonant_content > 0.1);
    let want = pair.plus.lambda.re;
    assert!((rep.rate - want).abs() <= 0.02 * want.abs(), "{} vs {want}", rep.rate);
}

#[test]
fn degenerate_and_bad_presets_are_reported() {
    assert!(matches!(Preset::parse("plane-wave", 0), Err(Error::Config(_))));
    assert_eq!(Preset::parse("projected-noise", 4).unwrap(), Preset::ProjectedNoise { seed: 4 });
    assert!(matches!(YGrid::new(10.0, 7), Err(Error::Grid(_))));
    let p = params();
    let g = grid(&p);
    let (pair, _) = basis_at(&p, &g, 0.0).unwrap();
    assert!(matches!(ResonantBasis::from_pair(&g, &pair), Err(Error::DegenerateMode(_))));
}

fn small_field(p: &ModelParams, preset: Preset) -> Field2D {
    let g = coarse(p);
    preset_field(p, g, YGrid::new(20.0, 64).unwrap(), preset).unwrap()
}

#[test]
fn zero_data_gives_zero_residual() {
    let p = params();
    let g = coarse(&p);
    let f = Field2D::zeros(g, YGrid::new(20.0, 16).unwrap());
    let rec = evolve_field(&p, &f, &[0.0, 5.0], EvolveOptions::default()).unwrap();
    assert!(rec.residual.iter().chain(&rec.norm_x).all(|v| *v == 0.0));
}

#[test]
fn unresolved_transverse_spectrum_is_rejected() {
    let p = params();
    let f = preset_field(&p, coarse(&p), YGrid::new(400.0, 16).unwrap(), Preset::GaussianBump).unwrap();
    assert!(matches!(evolve_field(&p, &f, &[1.0], EvolveOptions::default()), Err(Error::Grid(_))));
}

#[test]
fn real_data_stays_real_and_policies_agree() {
    let p = params();
    let f = small_field(&p, Preset::GaussianBump);
    assert!(f.is_real());
    let times = [0.0, 3.0, 10.0];
    let run = |exec| evolve_field(&p, &f, &times, EvolveOptions { exec, keep_snapshots: true, ..Default::default() }).unwrap();
    let a = run(Exec::Sequential);
    let b = run(Exec::Parallel);
    assert_eq!(a.residual, b.residual);
    assert_eq!(a.norm_x, b.norm_x);
    for (phi, psi) in a.snapshots.as_ref().unwrap() {
        let scale = phi.iter().chain(psi).map(|v| v.norm()).fold(0.0, f64::max);
        assert!(phi.iter().chain(psi).all(|v| v.im.abs() <= 1e-12 * scale));
    }
    // t = 0 returns the data and the norm matches Parseval
    let (phi0, _) = &a.snapshots.as_ref().unwrap()[0];
    assert!(dist(phi0, &f.phi) <= 1e-12 * norm2(&f.phi));
}

#[test]
fn transversely_uniform_data_is_the_zero_mode_flow() {
    let p = params();
    let g = coarse(&p);
    let n = g.n;
    let u = random_state(&p, &g, 21);
    let mut f = Field2D::zeros(g.clone(), YGrid::new(20.0, 16).unwrap());
    for j in 0..16 {
        f.phi[j * n..(j + 1) * n].copy_from_slice(&u[..n]);
        f.psi[j * n..(j + 1) * n].copy_from_slice(&u[n..]);
    }
    let times = [4.0, 30.0];
    let rec = evolve_field(&p, &f, &times, EvolveOptions { keep_snapshots: true, ..Default::default() }).unwrap();
    let op = assemble_L(&p, &g, 0.0).unwrap();
    let want = evolve_mode(&op, &u, &times).unwrap();
    for (k, (phi, psi)) in rec.snapshots.unwrap().iter().enumerate() {
        for j in [0, 7, 15] {
            let mut got = phi[j * n..(j + 1) * n].to_vec();
            got.extend_from_slice(&psi[j * n..(j + 1) * n]);
            assert!(dist(&got, &want[k]) <= 1e-10 * norm2(&want[k]));
        }
    }
}

#[test]
fn kernel_mode_is_stationary() {
    let p = params();
    let g = grid(&p);
    let n = g.n;
    let z1 = zeta_quadruple(&p, &g).zeta1;
    let op = assemble_L(&p, &g, 0.0).unwrap();
    let defect = norm2(&op.apply(&z1));
    let f = preset_field(&p, g.clone(), YGrid::new(20.0, 16).unwrap(), Preset::KernelMode).unwrap();
    let t = 50.0;
    let rec = evolve_field(&p, &f, &[t], EvolveOptions { keep_snapshots: true, ..Default::default() }).unwrap();
    let (phi, psi) = &rec.snapshots.unwrap()[0];
    let mut got = phi[..n].to_vec();
    got.extend_from_slice(&psi[..n]);
    let z1r: Vec<C64> = z1.iter().map(|v| C64::new(v.re, 0.0)).collect();
    // the drift is bounded by t‖Mζ₁‖ up to the flow's growth
    assert!(dist(&got, &z1r) <= 2.0 * t * defect + 1e-10 * norm2(&z1), "{:e}", dist(&got, &z1r));
    let scale = norm2(&z1) * norm2(&zeta_quadruple(&p, &g).zeta2_star) * g.dz;
    assert!(rec.f_values.iter().all(|v| v.abs() < 1e-10 * scale));
}
