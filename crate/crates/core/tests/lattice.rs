use std::f64::consts::PI;

use antichiral_core::lattice::*;
use antichiral_core::linalg::eigh;
use antichiral_core::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn samples(n: usize, seed: u64) -> Vec<Momentum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Momentum::new(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))).collect()
}

fn close(a: &M4, b: &M4, tol: f64) -> bool {
    (a - b).norm() < tol
}

#[test]
fn clifford_relations() {
    let g = gamma_algebra();
    for i in 1..=4 {
        for j in 1..=4 {
            let want = if i == j { M4::identity() * C64::new(2.0, 0.0) } else { M4::zeros() };
            assert_eq!(anticommutator(g.g(i), g.g(j)), want);
        }
        assert_eq!(g.g(i).adjoint(), *g.g(i));
        assert_eq!(g.g(i).trace(), C64::new(0.0, 0.0));
    }
    assert_eq!(g.g(4) * g.g(4), M4::identity());
}

#[test]
fn i_gamma1_gamma2_is_tau_z() {
    let g = gamma_algebra();
    let m = g.g(1) * g.g(2) * C64::new(0.0, 1.0);
    let d = [1.0, -1.0, 1.0, -1.0];
    for r in 0..4 {
        for c in 0..4 {
            let want = if r == c { d[r] } else { 0.0 };
            assert_eq!(m[(r, c)], C64::new(want, 0.0));
        }
    }
}

#[test]
fn symmetry_operators_are_unitary() {
    let g = gamma_algebra();
    for m in [&g.mx, &g.my, &g.xi] {
        assert!(close(&(m * m), &M4::identity(), 1e-15));
        assert_eq!(m.adjoint(), *m);
    }
    assert!(close(&(g.c4 * g.c4.adjoint()), &M4::identity(), 1e-15));
    let c4_4 = g.c4 * g.c4 * g.c4 * g.c4;
    assert!(close(&c4_4, &(M4::identity() * C64::new(C4_FOURTH_POWER, 0.0)), 1e-15));
}

#[test]
fn projectors_select_sublattices() {
    let (px, py) = (projector_x0(), projector_y0());
    for p in [&px, &py] {
        assert!(close(&(p * p), p, 1e-15));
        assert!((p.trace() - C64::new(2.0, 0.0)).norm() < 1e-15);
    }
    let diag = |m: &M4| (0..4).map(|i| m[(i, i)].re).collect::<Vec<_>>();
    assert_eq!(diag(&px), [1.0, 0.0, 1.0, 0.0]);
    assert_eq!(diag(&py), [1.0, 1.0, 0.0, 0.0]);
    let pa = px * py;
    assert_eq!(diag(&pa), [1.0, 0.0, 0.0, 0.0]);
    assert!(close(&pa, &(py * px), 1e-15));
}

#[test]
fn bloch_2d_at_gamma_point() {
    let e = eigvals4(&bloch_2d(&ModelParams::default(), 0.0, 0.0));
    let r = 0.5f64.hypot(0.5);
    for (v, w) in e.iter().zip([-r, -r, r, r]) {
        assert!((v - w).abs() < 1e-12);
    }
}

#[test]
fn bloch_is_hermitian_and_periodic() {
    let p = ModelParams { j_p: 0.7, tilt: Tilt::new(0.1, -0.3, 0.4, 0.2), ..Default::default() };
    for k in samples(100, 1) {
        let h = bloch_3d(&p, k);
        assert!(close(&h, &h.adjoint(), 1e-15));
        for shift in [(2.0 * PI, 0.0, 0.0), (0.0, 2.0 * PI, 0.0), (0.0, 0.0, -2.0 * PI)] {
            let k2 = Momentum::new(k.kx + shift.0, k.ky + shift.1, k.kz + shift.2);
            assert!(close(&h, &bloch_3d(&p, k2), 1e-12));
        }
        let h2 = bloch_2d(&p, k.kx, k.ky);
        assert!(close(&h2, &bloch_2d(&p, k.kx + 2.0 * PI, k.ky - 2.0 * PI), 1e-12));
    }
}

#[test]
fn bloch_3d_examples() {
    let p = ModelParams { j_p: 1.0, tilt: Tilt::uniform(0.5), ..Default::default() };
    let e = eigvals4(&bloch_3d(&p, Momentum::new(0.0, 0.0, 0.0)));
    let r = 0.5f64.hypot(0.5);
    for (v, w) in e.iter().zip([-r, -r, r, r]) {
        assert!((v - w).abs() < 1e-12);
    }
    let e = eigvals4(&bloch_3d(&p, Momentum::new(0.0, 0.0, PI / 3.0)));
    for v in e {
        assert!((v - 0.5 * (PI / 3.0).sin()).abs() < 1e-12);
    }
}

#[test]
fn uniform_tilt_spectrum_and_eigenvectors() {
    let u = 0.37;
    let p0 = ModelParams { j_p: 0.4, ..Default::default() };
    let pu = p0.with_tilt(Tilt::uniform(u));
    for k in samples(100, 2) {
        let h = h_vector(&p0, k);
        let r = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = u * k.kz.sin();
        let e = eigvals4(&bloch_3d(&pu, k));
        for (v, w) in e.iter().zip([-r, -r, r, r]) {
            assert!((v - (w + s)).abs() < 1e-10);
        }
        // eigenvectors of the untilted matrix stay eigenvectors
        let (e0, v0) = eigh4(&bloch_3d(&p0, k));
        let hu = bloch_3d(&pu, k);
        for c in 0..4 {
            let v = v0.column(c);
            let hv = hu * v;
            let overlap = (v.adjoint() * hv)[(0, 0)] / C64::new(e0[c] + s, 0.0);
            let res = (hv - v * C64::new(e0[c] + s, 0.0)).norm();
            assert!(res < 1e-12, "residual {res}, overlap {overlap}");
        }
    }
}

#[test]
fn chiral_spectrum_symmetry() {
    let p = ModelParams { j_p: 1.0, ..Default::default() };
    for k in samples(100, 3) {
        let e = eigvals4(&bloch_3d(&p, k));
        for i in 0..4 {
            assert!((e[i] + e[3 - i]).abs() < 1e-12);
        }
    }
    let pu = p.with_tilt(Tilt::uniform(0.5));
    for k in samples(100, 4) {
        let e = eigvals4(&bloch_3d(&pu, k));
        let f = eigvals4(&bloch_3d(&pu, k.neg()));
        for i in 0..4 {
            assert!((e[i] + f[3 - i]).abs() < 1e-10);
        }
    }
}

#[test]
fn symmetry_residuals() {
    let ks = samples(100, 5);
    let p0 = ModelParams::default().untilted();
    for op in SymmetryOp::ALL {
        if op != SymmetryOp::C4 {
            assert!(symmetry_residual(&p0, op, &ks) < 1e-12, "{op:?}");
        }
    }
    let pc = ModelParams { j_p: 1.0, tilt: Tilt::uniform(0.5), ..Default::default() };
    assert!(symmetry_residual(&pc, SymmetryOp::C4, &ks) < 1e-12);
    assert!(symmetry_residual(&pc, SymmetryOp::ChiralTrs, &ks) < 1e-12);
    assert!(symmetry_residual(&pc, SymmetryOp::Mx, &ks) < 1e-12);
    assert!(symmetry_residual(&pc, SymmetryOp::My, &ks) < 1e-12);
    // C4 needs J' = J
    assert!(symmetry_residual(&ModelParams::default(), SymmetryOp::C4, &ks) > 0.1);
    // Mx with a tilt that is not A↔B symmetric
    let ph = pc.with_tilt(Tilt::new(-0.5, 0.5, 0.4, 0.5));
    assert!(symmetry_residual(&ph, SymmetryOp::Mx, &ks) > 0.1);
}

#[test]
fn trs_residual_with_uniform_tilt() {
    let u = 0.5;
    let p = ModelParams::default().with_tilt(Tilt::uniform(u));
    let ks = samples(100, 6);
    let max_sin = ks.iter().map(|k| k.kz.sin().abs()).fold(0.0, f64::max);
    let r = symmetry_residual(&p, SymmetryOp::Trs, &ks);
    // Frobenius norm of 2u sin k_z · I₄
    assert!((r - 4.0 * u * max_sin).abs() < 1e-12);
    assert!(symmetry_residual(&p, SymmetryOp::Chiral, &ks) > 0.0);
}

#[test]
fn c4_rotates_momentum_counterclockwise() {
    let g = gamma_algebra();
    let p = ModelParams { j_p: 1.0, ..Default::default() };
    let k = Momentum::new(0.3, 1.1, 0.7);
    let rotated = g.c4 * bloch_3d(&p, k) * g.c4.adjoint();
    assert!(close(&rotated, &bloch_3d(&p, Momentum::new(-1.1, 0.3, 0.7)), 1e-12));
    assert!(!close(&rotated, &bloch_3d(&p, Momentum::new(1.1, -0.3, 0.7)), 1e-3));
}

#[test]
fn periodic_real_space_matches_bloch() {
    let p = ModelParams { j_p: 0.8, tilt: Tilt::new(0.5, -0.2, 0.4, 0.1), ..Default::default() };
    let n = 8;
    let b = BoundarySpec::all_periodic(n);
    let blocks = real_space(&p, &b).unwrap();
    assert_eq!(blocks.len(), n * n * n);
    let mut real: Vec<f64> = Vec::new();
    for op in &blocks {
        assert_eq!(op.dim(), 4);
        real.extend(eigh(&op.matrix, false, 0.0).unwrap().values);
    }
    let mut bloch: Vec<f64> = Vec::new();
    let g = momentum_grid(n);
    for &kx in &g {
        for &ky in &g {
            for &kz in &g {
                bloch.extend(eigvals4(&bloch_3d(&p, Momentum::new(kx, ky, kz))));
            }
        }
    }
    for (a, b) in real.iter().zip(&bloch) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn ring_supercell_matches_bloch() {
    let p = ModelParams { j_p: 1.0, tilt: Tilt::uniform(0.3), ..Default::default() };
    let n = 4;
    let op = supercell(&p, &BoundarySpec::all_periodic(n), &BuildOptions::default()).unwrap();
    assert_eq!(op.dim(), 4 * n * n * n);
    let mut real = eigh(&op.matrix, false, 0.0).unwrap().values;
    let g = momentum_grid(n);
    let mut bloch = Vec::new();
    for &kx in &g {
        for &ky in &g {
            for &kz in &g {
                bloch.extend(eigvals4(&bloch_3d(&p, Momentum::new(kx, ky, kz))));
            }
        }
    }
    real.sort_by(f64::total_cmp);
    bloch.sort_by(f64::total_cmp);
    for (a, b) in real.iter().zip(&bloch) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn hinge_geometry_block_dimension_and_hermiticity() {
    let p = ModelParams { j_p: 1.0, tilt: Tilt::uniform(0.5), ..Default::default() };
    let b = BoundarySpec::hinge_geometry(24, 24, 60);
    let op = real_space_block(&p, &b, Momentum::new(0.0, 0.0, 1.3), &BuildOptions::default()).unwrap();
    assert_eq!(op.dim(), 2304);
    assert!(op.matrix.hermiticity_error() < 1e-12);
    assert_eq!(op.momentum, [None, None, Some(1.3)]);
}

#[test]
fn open_chain_hopping_matches_explicit_form() {
    // γ₁ + λ(|y+1⟩⟨y| + h.c.)/2 on Γ₄ and ±iλ/2 on Γ₃
    let p = ModelParams::default();
    let b = BoundarySpec { x: Axis::Open(2), y: Axis::Open(3), z: Axis::Periodic(4) };
    let kz = 0.9;
    let op = real_space_block(&p, &b, Momentum::new(0.0, 0.0, kz), &BuildOptions::default()).unwrap();
    let g = gamma_algebra();
    let l = op.layout;
    let want = g.g(4) * C64::new(p.lambda / 2.0, 0.0) + g.g(3) * C64::new(0.0, p.lambda / 2.0);
    for r in 0..4 {
        for c in 0..4 {
            assert!((op.matrix.get(l.index(1, 2, 0, r), l.index(1, 1, 0, c)) - want[(r, c)]).norm() < 1e-15);
        }
    }
    let onsite = g.g(4) * C64::new(p.gamma1(kz), 0.0) + g.g(2) * C64::new(p.gamma2(kz), 0.0);
    for r in 0..4 {
        for c in 0..4 {
            assert!((op.matrix.get(l.index(0, 1, 0, r), l.index(0, 1, 0, c)) - onsite[(r, c)]).norm() < 1e-15);
        }
    }
}

#[test]
fn corner_modes_in_open_2d() {
    let p = ModelParams::two_d(0.5, 0.5, -1.0, -1.0);
    let b = BoundarySpec { x: Axis::Open(24), y: Axis::Open(24), z: Axis::Periodic(2) };
    let op = real_space_block(&p, &b, Momentum::default(), &BuildOptions::default()).unwrap();
    let e = eigh(&op.matrix, false, 0.0).unwrap().values;
    assert_eq!(e.iter().filter(|v| v.abs() < 1e-6).count(), 4);
}

#[test]
fn memory_cap_is_enforced() {
    let p = ModelParams::default();
    let b = BoundarySpec { x: Axis::Open(40), y: Axis::Open(40), z: Axis::Periodic(60) };
    let small = BuildOptions { memory_cap_bytes: 1 << 20, dense_equivalent: true };
    let err = supercell(&p, &b, &small).unwrap_err();
    assert!(matches!(err, Error::SizeLimit { .. }));
    assert_eq!(err.code(), "size_limit");
    assert!(real_space_block(&p, &b, Momentum::default(), &BuildOptions::default()).is_ok());
}

#[test]
fn invalid_inputs_are_rejected() {
    let bad = ModelParams { gamma: f64::NAN, ..Default::default() };
    assert!(matches!(real_space(&bad, &BoundarySpec::all_periodic(4)), Err(Error::InvalidInput { .. })));
    let b = BoundarySpec { x: Axis::Open(1), y: Axis::Open(4), z: Axis::Periodic(4) };
    assert!(matches!(real_space(&ModelParams::default(), &b), Err(Error::InvalidInput { .. })));
}
