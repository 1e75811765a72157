use minres_npc::linesearch::{armijo_backtrack, npc_linesearch, LinesearchConfig};
use minres_npc::minres::{minres_npc, MinresFlag};
use minres_npc::objective::{Counted, Objective};
use minres_npc::operator::Vector;
use nalgebra::{dvector, DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// f(x) = -a x²/2 + c x³/3 + x⁴/4 along the first coordinate.
struct Polynomial {
    a: f64,
    c: f64,
}

impl Objective for Polynomial {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &Vector) -> f64 {
        let t = x[0];
        -0.5 * self.a * t * t + self.c * t * t * t / 3.0 + 0.25 * t.powi(4)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let t = x[0];
        dvector![-self.a * t + self.c * t * t + t * t * t]
    }
    fn hessian_vector_product(&self, x: &Vector, v: &Vector) -> Option<Vector> {
        let t = x[0];
        Some(v * (-self.a + 2.0 * self.c * t + 3.0 * t * t))
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

struct Quadratic(DMatrix<f64>);

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.0 * x))
    }
    fn gradient(&self, x: &Vector) -> Vector {
        &self.0 * x
    }
}

/// Merit Φ(λ) = f(x+λd) - f(x) - σλ g'd - (σ/2)λ² d'Bd.
fn merit(
    obj: &dyn Objective,
    x: &Vector,
    d: &Vector,
    slope: f64,
    curv: f64,
    sigma: f64,
    lambda: f64,
) -> f64 {
    obj.value(&(x + d * lambda))
        - obj.value(x)
        - sigma * lambda * slope
        - 0.5 * sigma * lambda * lambda * curv
}

/// Enumerates the step grid and picks the step the NPC search must return.
fn grid_scan(
    obj: &dyn Objective,
    x: &Vector,
    d: &Vector,
    slope: f64,
    curv: f64,
    cfg: &LinesearchConfig,
) -> f64 {
    let phi = |l: f64| merit(obj, x, d, slope, curv, cfg.sigma, l);
    if phi(cfg.initial) <= 0.0 {
        let grid: Vec<f64> = (0..64).map(|j| cfg.initial / cfg.shrink.powi(j)).collect();
        let first_fail = grid
            .iter()
            .position(|&l| l > cfg.max_step || phi(l) > 0.0)
            .unwrap();
        grid[first_fail - 1]
    } else {
        (1..64)
            .map(|j| cfg.initial * cfg.shrink.powi(j))
            .find(|&l| phi(l) <= 0.0)
            .unwrap()
    }
}

#[test]
fn forward_search_matches_grid_scan() {
    let obj = Polynomial { a: 1.0, c: 0.0 };
    let cfg = LinesearchConfig::default();
    let x = dvector![0.1];
    let g = obj.gradient(&x);
    let h = obj.hessian_vector_product(&x, &dvector![1.0]).unwrap()[0];
    let mut grew = 0;
    for scale in [0.05, 0.1, 0.3, 1.0] {
        let d = dvector![scale];
        let slope = g.dot(&d);
        let curv = h * scale * scale;
        assert!(slope < 0.0 && curv < 0.0);
        let step = npc_linesearch(&obj, &x, &d, slope, curv, obj.value(&x), &cfg).unwrap();
        grew += step.forward as usize;
        assert_eq!(
            step.lambda,
            grid_scan(&obj, &x, &d, slope, curv, &cfg),
            "scale {scale}"
        );
    }
    assert!(grew >= 2);
}

#[test]
fn steep_cubic_backtracks_like_armijo_on_merit() {
    // The cubic term makes Φ(1) > 0 along d = 1 from x = 0.01.
    let obj = Polynomial { a: 1.0, c: 40.0 };
    let cfg = LinesearchConfig::default();
    let x = dvector![0.01];
    let g = obj.gradient(&x);
    let h = obj.hessian_vector_product(&x, &dvector![1.0]).unwrap()[0];
    let d = dvector![1.0];
    let (slope, curv) = (g[0], h);
    assert!(slope < 0.0 && curv <= 0.0, "slope {slope} curv {curv}");
    assert!(merit(&obj, &x, &d, slope, curv, cfg.sigma, 1.0) > 0.0);
    let step = npc_linesearch(&obj, &x, &d, slope, curv, obj.value(&x), &cfg).unwrap();
    assert!(!step.forward);
    assert!(step.lambda < 1.0);
    assert_eq!(step.lambda, grid_scan(&obj, &x, &d, slope, curv, &cfg));
}

#[test]
fn concave_quadratic_npc_steps_are_capped() {
    struct Concave;
    impl Objective for Concave {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &Vector) -> f64 {
            -0.5 * x[0] * x[0]
        }
        fn gradient(&self, x: &Vector) -> Vector {
            -x
        }
    }
    let cfg = LinesearchConfig::default();
    for x0 in [1e-6_f64, 0.3, -2.0] {
        let x = dvector![x0];
        let d = dvector![x0.signum()];
        let slope = -x0.abs();
        let curv = -1.0;
        // Φ(λ) = (1-σ)(λ g'd + λ² d'Bd / 2) ≤ 0 for every λ > 0.
        for l in [1.0, 1e3, 1e9] {
            let phi = merit(&Concave, &x, &d, slope, curv, cfg.sigma, l);
            let identity = (1.0 - cfg.sigma) * (l * slope + 0.5 * l * l * curv);
            assert!((phi - identity).abs() <= 1e-12 * identity.abs().max(1.0));
        }
        let step = npc_linesearch(&Concave, &x, &d, slope, curv, Concave.value(&x), &cfg).unwrap();
        assert_eq!(step.lambda, cfg.max_step);
        assert!(step.capped);
    }
}

#[test]
fn armijo_steps_respect_smoothness_lower_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = LinesearchConfig::default();
    for case in 0..50 {
        let n = 6;
        let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let a: DMatrix<f64> = g.transpose() * &g + DMatrix::identity(n, n) * 0.1;
        let lipschitz = SymmetricEigen::new(a.clone()).eigenvalues.max();
        let obj = Quadratic(a.clone());
        let x = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let grad = obj.gradient(&x);

        // Gradient step: -g'd = |d|², so c = 1.
        let step = armijo_backtrack(
            &obj,
            &x,
            &(-&grad),
            -grad.norm_squared(),
            obj.value(&x),
            &cfg,
        )
        .unwrap();
        let bound = cfg
            .initial
            .min(2.0 * cfg.shrink * (1.0 - cfg.sigma) / lipschitz);
        assert!(step.lambda >= bound - 1e-12, "case {case}");

        // Inexact MINRES step: -g'p > p'Ap = c |p|².
        let out = minres_npc(&a, &(-&grad), 0.3, 100).unwrap();
        assert_eq!(out.flag, MinresFlag::Sol);
        let p = out.direction;
        let c = p.dot(&(&a * &p)) / p.norm_squared();
        let step = armijo_backtrack(&obj, &x, &p, grad.dot(&p), obj.value(&x), &cfg).unwrap();
        let bound = cfg
            .initial
            .min(2.0 * cfg.shrink * (1.0 - cfg.sigma) * c / lipschitz);
        assert!(step.lambda >= bound - 1e-12, "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn armijo_result_satisfies_condition_with_exact_evaluation_count(
        x0 in -3.0f64..3.0, a in 0.1f64..2.0, c in -5.0f64..5.0, scale in 0.1f64..20.0,
    ) {
        let obj = Counted::new(Polynomial { a, c });
        let x = dvector![x0];
        let g = obj.gradient(&x)[0];
        prop_assume!(g.abs() > 1e-8);
        let d = dvector![-g.signum() * scale];
        let slope = g * d[0];
        let fx = obj.value(&x);
        let before = obj.tally().values;
        let cfg = LinesearchConfig::default();
        let step = armijo_backtrack(&obj, &x, &d, slope, fx, &cfg).unwrap();
        let used = obj.tally().values - before;
        prop_assert!(step.value - fx <= cfg.sigma * step.lambda * slope);
        prop_assert_eq!(step.value, obj.inner().value(&(&x + &d * step.lambda)));
        let j = (step.lambda / cfg.initial).log2().abs().round() as u64;
        prop_assert_eq!(step.lambda, cfg.initial * cfg.shrink.powi(j as i32));
        prop_assert_eq!(used, j + 1);
        prop_assert_eq!(step.evaluations as u64, used);
    }

    #[test]
    fn npc_result_satisfies_condition_and_grid_property(
        x0 in -0.5f64..0.5, c in -3.0f64..3.0, scale in 0.01f64..5.0,
    ) {
        let obj = Polynomial { a: 1.0, c };
        let x = dvector![x0];
        let g = obj.gradient(&x)[0];
        let h = obj.hessian_vector_product(&x, &dvector![1.0]).unwrap()[0];
        prop_assume!(g.abs() > 1e-8 && h <= 0.0);
        let d = dvector![-g.signum() * scale];
        let slope = g * d[0];
        let curv = h * scale * scale;
        let cfg = LinesearchConfig::default();
        let step = npc_linesearch(&obj, &x, &d, slope, curv, obj.value(&x), &cfg).unwrap();
        let phi = |l: f64| merit(&obj, &x, &d, slope, curv, cfg.sigma, l);
        prop_assert!(phi(step.lambda) <= 0.0);
        if step.forward && !step.capped {
            prop_assert!(phi(step.lambda / cfg.shrink) > 0.0);
        }
        prop_assert_eq!(step.lambda, grid_scan(&obj, &x, &d, slope, curv, &cfg));
    }
}
