//! Built-in test problems with analytic gradients and Hessian-vector
//! products, and a name registry for the benchmark harness.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fd::{fd_grad_check, fd_hvp_check};
use crate::objective::Objective;
use crate::operator::Vector;

/// How a run picks its starting point.
#[derive(Debug, Clone, PartialEq)]
pub enum StartRule {
    /// Independent uniform coordinates on `[0, 1]`.
    UnitCube,
    /// `center + radius u` with `u` uniform on the unit sphere.
    Perturbation { center: Vector, radius: f64 },
}

impl StartRule {
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vector {
        match self {
            StartRule::UnitCube => Vector::from_fn(dim, |_, _| rng.random::<f64>()),
            StartRule::Perturbation { center, radius } => {
                let u = loop {
                    let u = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
                    let norm = u.norm();
                    if norm > 0.0 {
                        break u / norm;
                    }
                };
                center + u * *radius
            }
        }
    }
}

pub struct ProblemSpec {
    pub name: String,
    pub objective: Box<dyn Objective + Send + Sync>,
    /// Known optimal value, when there is one.
    pub optimum: Option<f64>,
    pub start: StartRule,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn start_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        self.start.sample(self.dim(), rng)
    }

    /// Worst finite-difference gradient and Hessian-vector mismatch over
    /// `points` draws from the start rule.
    pub fn self_test<R: Rng + ?Sized>(&self, points: usize, rng: &mut R) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for _ in 0..points {
            let x = StartRule::UnitCube.sample(self.dim(), rng);
            let v = Vector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
            worst = worst.max(fd_grad_check(&*self.objective, &x, 1e-6)?);
            worst = worst.max(fd_hvp_check(&*self.objective, &x, &v, 1e-6)?);
        }
        Ok(worst)
    }
}

/// `f(x, y) = ½ |y - sin(x)|²` over `(x, y) ∈ R^n × R^n`, stored as `[x; y]`.
/// Every point with `y = sin(x)` is a global minimizer.
#[derive(Debug, Clone, Copy)]
pub struct ToySine {
    pub n: usize,
}

impl Objective for ToySine {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn value(&self, z: &Vector) -> f64 {
        let (x, y) = (z.rows(0, self.n), z.rows(self.n, self.n));
        0.5 * x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (b - a.sin()).powi(2))
            .sum::<f64>()
    }

    fn gradient(&self, z: &Vector) -> Vector {
        let n = self.n;
        let mut g = Vector::zeros(2 * n);
        for i in 0..n {
            let r = z[n + i] - z[i].sin();
            g[i] = -z[i].cos() * r;
            g[n + i] = r;
        }
        g
    }

    fn hessian_vector_product(&self, z: &Vector, v: &Vector) -> Option<Vector> {
        let n = self.n;
        let mut hv = Vector::zeros(2 * n);
        for i in 0..n {
            let (s, c) = z[i].sin_cos();
            let r = z[n + i] - s;
            let hxx = s * r + c * c;
            hv[i] = hxx * v[i] - c * v[n + i];
            hv[n + i] = -c * v[i] + v[n + i];
        }
        Some(hv)
    }

    fn has_hessian(&self) -> bool {
        true
    }
}

/// `f(x) = ½ x'Ax + ¼ |x|⁴` with diagonal `A`. With a negative entry the
/// origin is a strict saddle; the quartic term keeps `f` bounded below.
#[derive(Debug, Clone)]
pub struct QuarticSaddle {
    pub spectrum: Vector,
}

impl Objective for QuarticSaddle {
    fn dim(&self) -> usize {
        self.spectrum.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let r2 = x.norm_squared();
        0.5 * x.component_mul(&self.spectrum).dot(x) + 0.25 * r2 * r2
    }

    fn gradient(&self, x: &Vector) -> Vector {
        x.component_mul(&self.spectrum) + x * x.norm_squared()
    }

    fn hessian_vector_product(&self, x: &Vector, v: &Vector) -> Option<Vector> {
        Some(v.component_mul(&self.spectrum) + v * x.norm_squared() + x * (2.0 * x.dot(v)))
    }

    fn has_hessian(&self) -> bool {
        true
    }
}

/// Chained Rosenbrock `Σ 100(x_{i+1} - x_i²)² + (1 - x_i)²`.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock {
    pub n: usize,
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &Vector) -> f64 {
        (0..self.n - 1)
            .map(|i| 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.n);
        for i in 0..self.n - 1 {
            let t = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * t;
        }
        g
    }

    fn hessian_vector_product(&self, x: &Vector, v: &Vector) -> Option<Vector> {
        let mut hv = Vector::zeros(self.n);
        for i in 0..self.n - 1 {
            let dii = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            let off = -400.0 * x[i];
            hv[i] += dii * v[i] + off * v[i + 1];
            hv[i + 1] += off * v[i] + 200.0 * v[i + 1];
        }
        Some(hv)
    }

    fn has_hessian(&self) -> bool {
        true
    }
}

/// `½ x' diag(spectrum) x`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub spectrum: Vector,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.spectrum.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.component_mul(&self.spectrum).dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        x.component_mul(&self.spectrum)
    }

    fn hessian_vector_product(&self, _x: &Vector, v: &Vector) -> Option<Vector> {
        Some(v.component_mul(&self.spectrum))
    }

    fn has_hessian(&self) -> bool {
        true
    }
}

/// Toy sine problem of total dimension `2n`.
pub fn toy_sine(n: usize) -> Result<ProblemSpec> {
    if n == 0 {
        return Err(Error::InvalidConfig("toy_sine needs n ≥ 1".into()));
    }
    Ok(ProblemSpec {
        name: "toy_sine".into(),
        objective: Box::new(ToySine { n }),
        optimum: Some(0.0),
        start: StartRule::UnitCube,
    })
}

/// Quartic saddle with the given diagonal. Starts are `10⁻³`-perturbations
/// of the origin. The known optimum is `-λ_min² / 4`.
pub fn quartic_saddle(spectrum: Vector) -> Result<ProblemSpec> {
    let lowest = spectrum.min();
    if spectrum.is_empty() || !(lowest < 0.0) {
        return Err(Error::InvalidConfig(
            "quartic_saddle needs a negative spectrum entry".into(),
        ));
    }
    let n = spectrum.len();
    Ok(ProblemSpec {
        name: "quartic_saddle".into(),
        objective: Box::new(QuarticSaddle { spectrum }),
        optimum: Some(-0.25 * lowest * lowest),
        start: StartRule::Perturbation {
            center: Vector::zeros(n),
            radius: 1e-3,
        },
    })
}

/// `diag(1, -1, 1, 1, ...)`.
pub fn alternating_saddle_spectrum(n: usize) -> Vector {
    Vector::from_fn(n, |i, _| if i == 1 { -1.0 } else { 1.0 })
}

pub fn rosenbrock(n: usize) -> Result<ProblemSpec> {
    if n < 2 {
        return Err(Error::InvalidConfig("rosenbrock needs n ≥ 2".into()));
    }
    Ok(ProblemSpec {
        name: "rosenbrock".into(),
        objective: Box::new(Rosenbrock { n }),
        optimum: Some(0.0),
        start: StartRule::UnitCube,
    })
}

pub fn quadratic(spectrum: Vector) -> Result<ProblemSpec> {
    if spectrum.is_empty() || !spectrum.iter().all(|&s| s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidConfig(
            "quadratic needs a positive finite spectrum".into(),
        ));
    }
    Ok(ProblemSpec {
        name: "quadratic".into(),
        objective: Box::new(Quadratic { spectrum }),
        optimum: Some(0.0),
        start: StartRule::UnitCube,
    })
}

/// Names accepted by [`lookup`].
pub const REGISTERED: [&str; 4] = ["toy_sine", "quartic_saddle", "rosenbrock", "quadratic"];

/// Registry lookup. `quartic_saddle` uses `diag(1, -1, 1, ...)`; `quadratic`
/// uses a log-spaced spectrum from 1 to 1000.
pub fn lookup(name: &str, n: usize) -> Result<ProblemSpec> {
    match name {
        "toy_sine" => toy_sine(n),
        "quartic_saddle" if n >= 2 => quartic_saddle(alternating_saddle_spectrum(n)),
        "quartic_saddle" => Err(Error::InvalidConfig("quartic_saddle needs n ≥ 2".into())),
        "rosenbrock" => rosenbrock(n),
        "quadratic" if n >= 1 => {
            let step = if n > 1 { 3.0 / (n - 1) as f64 } else { 0.0 };
            quadratic(Vector::from_fn(n, |i, _| 10f64.powf(step * i as f64)))
        }
        _ => Err(Error::InvalidConfig(format!(
            "unknown problem `{name}` (n = {n})"
        ))),
    }
}
