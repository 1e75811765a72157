use minres_npc::minres::{krylov_lsq_oracle, minres_npc, minres_npc_observed, MinresFlag};
use minres_npc::operator::Vector;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng))
}

fn random_system(rng: &mut ChaCha8Rng, definite: bool) -> (DMatrix<f64>, Vector) {
    let n = rng.random_range(2..=8);
    let g = gaussian_matrix(rng, n);
    let a = if definite {
        g.transpose() * &g + DMatrix::identity(n, n) * 0.1
    } else {
        (&g + g.transpose()) * 0.5
    };
    let b = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
    (a, b)
}

fn descending_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

#[test]
fn recurrences_match_direct_computation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let (a, b) = random_system(&mut rng, case % 2 == 0);
        let n = b.len();
        let beta1 = b.norm();
        let a_norm = a.norm();
        let mut lanczos: Vec<Vector> = Vec::new();
        let mut last_phi = beta1;
        let out = minres_npc_observed(&a, &b, 0.0, 4 * n, |step| {
            let v = step.lanczos.clone();
            assert!((v.norm() - 1.0).abs() <= 1e-10, "case {case}: |v_t| != 1");
            if let Some(prev) = lanczos.last() {
                assert!(
                    v.dot(prev).abs() <= 1e-8,
                    "case {case} t {}: local orthogonality {} beta {}",
                    step.t,
                    v.dot(prev),
                    step.beta_next
                );
            }
            lanczos.push(v);

            // r_{t-1}'A r_{t-1} = -φ² c γ
            let r = step.prev_residual;
            let lhs = r.dot(&(&a * r));
            let rhs = -step.prev_phi * step.prev_phi * step.curvature_product;
            assert!(
                (lhs - rhs).abs() <= 1e-8 * a_norm * beta1 * beta1,
                "case {case} t {}: curvature identity {lhs} vs {rhs}",
                step.t
            );

            if let (Some(x), Some(r), Some(phi)) = (step.iterate, step.residual, step.phi) {
                let direct = &b - &a * x;
                assert!((direct.norm() - phi).abs() <= 1e-8 * beta1);
                assert!((direct - r).norm() <= 1e-8 * beta1);
                assert!((r.dot(&b) - r.norm_squared()).abs() <= 1e-8 * beta1 * beta1);
                assert!(phi <= last_phi * (1.0 + 1e-14));
                last_phi = phi;

                let t = lanczos.len();
                let v = DMatrix::from_columns(&lanczos);
                let tt = v.transpose() * &a * &v;
                let mu_t = descending_eigenvalues(tt);
                let mu_a = descending_eigenvalues(a.clone());
                for i in 0..t {
                    assert!(mu_t[i] <= mu_a[i] + 1e-8, "case {case}: interlacing");
                }
            }
        })
        .unwrap();
        assert_ne!(out.flag, MinresFlag::MaxIter, "case {case}");
    }
}

#[test]
fn residual_norm_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..60 {
        let (a, b) = random_system(&mut rng, case % 3 == 0);
        let beta1 = b.norm();
        let mut phis = Vec::new();
        minres_npc_observed(&a, &b, 0.0, 32, |step| {
            if let Some(phi) = step.phi {
                phis.push((step.t, phi));
            }
        })
        .unwrap();
        for (t, phi) in phis {
            let oracle = krylov_lsq_oracle(&a, &b, t).unwrap();
            assert!(
                (phi - oracle).abs() <= 1e-8 * beta1,
                "case {case} t {t}: {phi} vs {oracle}"
            );
        }
    }
}

#[test]
fn sol_path_iterates_satisfy_descent_inequalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..100 {
        let (a, b) = random_system(&mut rng, case % 2 == 1);
        let ab = &a * &b;
        let p1_closed = &b * (b.dot(&ab) / ab.norm_squared());
        let mut p1_b = None;
        minres_npc_observed(&a, &b, 0.0, 32, |step| {
            let Some(p) = step.iterate else { return };
            if step.t == 1 {
                assert!((p - &p1_closed).norm() <= 1e-10 * p1_closed.norm().max(1.0));
                p1_b = Some(p.dot(&b));
            }
            let pb = p.dot(&b);
            let pap = p.dot(&(&a * p));
            assert!(pb > pap - 1e-10, "case {case} t {}: {pb} vs {pap}", step.t);
            assert!(pb >= p1_b.unwrap() - 1e-10);
        })
        .unwrap();
    }
}

#[test]
fn npc_directions_are_certified_descent_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut npc_seen = 0;
    for _ in 0..100 {
        let (a, b) = random_system(&mut rng, false);
        let out = minres_npc(&a, &b, 0.0, 32).unwrap();
        let beta1 = b.norm();
        match out.flag {
            MinresFlag::Npc => {
                npc_seen += 1;
                let d = &out.direction;
                assert!(d.dot(&(&a * d)) <= 1e-10 * beta1 * beta1);
                assert!((d.norm() - beta1).abs() <= 1e-10 * beta1.max(1.0));
                let expected = beta1 * out.residual.norm();
                assert!(d.dot(&b) > 0.0);
                assert!((d.dot(&b) - expected).abs() <= 1e-8 * beta1 * beta1);
                assert!(
                    (out.curvature_value - d.dot(&(&a * d))).abs()
                        <= 1e-8 * beta1 * beta1 * a.norm()
                );
            }
            MinresFlag::Sol => {
                assert!((&a * &out.direction - &b).norm() <= 1e-8 * beta1);
            }
            MinresFlag::MaxIter => panic!("grade bound violated"),
        }
    }
    assert!(
        npc_seen > 50,
        "only {npc_seen} NPC outcomes on indefinite systems"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_definite_solves_within_n_steps(seed in any::<u64>(), n in 1usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gaussian_matrix(&mut rng, n);
        let a = g.transpose() * &g + DMatrix::identity(n, n);
        let b = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let out = minres_npc(&a, &b, 0.0, n).unwrap();
        prop_assert_eq!(out.flag, MinresFlag::Sol);
        prop_assert!(out.inner_iters <= n);
        prop_assert!((&a * &out.direction - &b).norm() <= 1e-8 * b.norm());
    }

    #[test]
    fn sol_outcome_meets_tolerance(seed in any::<u64>(), theta in 1e-6f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_system(&mut rng, true);
        let out = minres_npc(&a, &b, theta, 64).unwrap();
        prop_assert_eq!(out.flag, MinresFlag::Sol);
        let beta1 = b.norm();
        prop_assert!((&a * &out.direction - &b).norm() <= theta * beta1 + 1e-10 * beta1);
    }
}
