//! Concrete test problems with known regularity constants and optima.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{axpy, dot, sub, DualVector, PrimalPoint, Regularizer};
use crate::oracle::{derive_stream, GradientField, Stream};
use crate::symlinalg::{matmul, matrix_fn, sym_eig, sym_logdet, sym_logdet_grad, transpose, SymMatrix};

/// Stream index reserved for problem generation, kept apart from run streams.
const PROBLEM_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
enum Objective {
    /// `⟨c, x⟩`
    Linear { cost: Vec<f64> },
    /// `½‖x − p‖²`
    QuadraticSimplex { target: Vec<f64> },
    /// `−log det(I + S Q S)` with `S = M^{1/2}`
    Capacity { root: SymMatrix },
    /// `½ (x − b)ᵀ A (x − b)`
    QuadraticUnbounded { a: SymMatrix, b: Vec<f64> },
}

/// An objective with its gradient selection, domain and reference constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    name: String,
    objective: Objective,
    regularizer: Regularizer,
    lipschitz: f64,
    smoothness: f64,
    f_min: f64,
    x_star: Option<PrimalPoint>,
}

impl Problem {
    /// Linear loss on the simplex with the entropic regularizer.
    pub fn linear_simplex(cost: Vec<f64>) -> Result<Self> {
        let d = cost.len();
        if d < 2 {
            return Err(Error::invalid("linear simplex problem needs d >= 2"));
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("costs must be finite"));
        }
        let (argmin, f_min) = cost
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, c)| if c < best.1 { (i, c) } else { best });
        let mut star = vec![0.0; d];
        star[argmin] = 1.0;
        Ok(Problem {
            name: "linear_simplex".into(),
            lipschitz: cost.iter().fold(0.0, |m, c| m.max(c.abs())),
            smoothness: 0.0,
            f_min,
            x_star: Some(PrimalPoint::vector(star)),
            regularizer: Regularizer::entropic_simplex(d)?,
            objective: Objective::Linear { cost },
        })
    }

    /// Linear loss with costs drawn uniformly from `[0, 1]`.
    pub fn linear_simplex_random(d: usize, seed: u64) -> Result<Self> {
        let mut rng = problem_stream(seed);
        let cost = (0..d).map(|_| rng.random::<f64>()).collect();
        Self::linear_simplex(cost)
    }

    /// `½‖x − p‖₂²` on the entropic simplex with an interior target `p`.
    pub fn quadratic_simplex(target: Vec<f64>) -> Result<Self> {
        let d = target.len();
        if d < 2 {
            return Err(Error::invalid("quadratic simplex problem needs d >= 2"));
        }
        let regularizer = Regularizer::entropic_simplex(d)?;
        let p = PrimalPoint::vector(target.clone());
        regularizer.check_point(&p)?;
        Ok(Problem {
            name: "quadratic_simplex".into(),
            // ‖x − p‖_∞ ≤ 1 on the simplex, and ‖·‖_∞ ≤ ‖·‖₁ gives L = 1
            lipschitz: 1.0,
            smoothness: 1.0,
            f_min: 0.0,
            x_star: Some(p),
            regularizer,
            objective: Objective::QuadraticSimplex { target },
        })
    }

    /// Quadratic simplex problem with target weights drawn from `U[0.5, 1.5]`.
    pub fn quadratic_simplex_random(d: usize, seed: u64) -> Result<Self> {
        let mut rng = problem_stream(seed);
        let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
        let z: f64 = raw.iter().sum();
        Self::quadratic_simplex(raw.into_iter().map(|v| v / z).collect())
    }

    /// Deterministic-channel capacity `−log det(I + M^{1/2} Q M^{1/2})` over
    /// the spectrahedron `{Q ⪰ 0, tr Q ≤ 1}`, for a PSD channel Gram matrix `M`.
    ///
    /// The optimum is obtained by water-filling on the spectrum of `M`.
    pub fn capacity_from_channel(gram: SymMatrix) -> Result<Self> {
        let n = gram.side();
        let eig = sym_eig(&gram).map_err(as_numerical)?;
        if *eig.eigenvalues.last().unwrap() < -1e-10 * gram.frobenius().max(1.0) {
            return Err(Error::invalid("channel Gram matrix must be positive semidefinite"));
        }
        let root = eig.recompose(
            &eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect::<Vec<_>>(),
        );
        let lmax = eig.eigenvalues[0].max(0.0);
        let (powers, f_min) = water_fill(&eig.eigenvalues);
        let x_star = PrimalPoint::matrix(eig.recompose(&powers));
        Ok(Problem {
            name: "capacity".into(),
            lipschitz: lmax,
            smoothness: lmax * lmax,
            f_min,
            x_star: Some(x_star),
            regularizer: Regularizer::von_neumann(n)?,
            objective: Objective::Capacity { root },
        })
    }

    /// Capacity problem for a random real channel `H` (`n × n`, entries
    /// `N(0, 1/n)`), with `M = HᵀH`.
    pub fn capacity(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("capacity problem needs n >= 2"));
        }
        let mut rng = problem_stream(seed);
        let scale = 1.0 / (n as f64).sqrt();
        let h: Vec<f64> = (0..n * n)
            .map(|_| { let z: f64 = StandardNormal.sample(&mut rng); scale * z })
            .collect();
        let gram = matmul(n, &transpose(n, &h), &h);
        Self::capacity_from_channel(SymMatrix::symmetrized(n, gram)?)
    }

    /// `½ (x − b)ᵀ A (x − b)` on `R^d` with the Euclidean regularizer.
    pub fn quadratic_unbounded_from(a: SymMatrix, b: Vec<f64>) -> Result<Self> {
        let d = a.side();
        if b.len() != d {
            return Err(Error::invalid("center has the wrong dimension"));
        }
        let eig = sym_eig(&a)?;
        if *eig.eigenvalues.last().unwrap() <= 0.0 {
            return Err(Error::invalid("quadratic form must be positive definite"));
        }
        Ok(Problem {
            name: "quadratic_unbounded".into(),
            lipschitz: f64::INFINITY,
            smoothness: eig.eigenvalues[0],
            f_min: 0.0,
            x_star: Some(PrimalPoint::vector(b.clone())),
            regularizer: Regularizer::euclidean_unbounded(d)?,
            objective: Objective::QuadraticUnbounded { a, b },
        })
    }

    /// Random unbounded quadratic: spectrum evenly spaced in `[scale, 10·scale]`
    /// (condition number 10) in a random orthogonal basis, center `b ~ N(0, I)`.
    pub fn quadratic_unbounded(d: usize, seed: u64, scale: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("curvature scale must be positive"));
        }
        let mut rng = problem_stream(seed);
        let spectrum: Vec<f64> = (0..d)
            .map(|i| {
                let frac = if d == 1 { 0.0 } else { i as f64 / (d - 1) as f64 };
                scale * (1.0 + 9.0 * frac)
            })
            .collect();
        let basis = crate::geometry::random_orthogonal(d, &mut rng);
        let a = basis.recompose(&spectrum);
        let b = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self::quadratic_unbounded_from(a, b)
    }

    /// The same simplex objective with the Euclidean regularizer and L2 norms.
    pub fn on_euclidean_simplex(&self) -> Result<Self> {
        let lipschitz = match &self.objective {
            Objective::Linear { cost } => dot(cost, cost).sqrt(),
            // ‖x − p‖₂ ≤ √2 between two simplex points
            Objective::QuadraticSimplex { .. } => 2f64.sqrt(),
            _ => return Err(Error::invalid("only simplex objectives can switch to the Euclidean simplex")),
        };
        Ok(Problem {
            name: format!("{}_euclidean", self.name),
            lipschitz,
            regularizer: Regularizer::euclidean_simplex(self.regularizer.dim())?,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    /// Gradient bound G in the dual norm (`∞` if unknown).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Gradient Lipschitz constant L (`∞` if unknown).
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn x_star(&self) -> Option<&PrimalPoint> {
        self.x_star.as_ref()
    }

    pub fn objective(&self, x: &PrimalPoint) -> Result<f64> {
        match &self.objective {
            Objective::Linear { cost } => Ok(dot(cost, x.as_slice())),
            Objective::QuadraticSimplex { target } => {
                let r = sub(x.as_slice(), target);
                Ok(0.5 * dot(&r, &r))
            }
            Objective::Capacity { root } => {
                let inner = capacity_inner(root, x)?;
                Ok(-sym_logdet(&inner)?)
            }
            Objective::QuadraticUnbounded { a, b } => {
                let r = sub(x.as_slice(), b);
                Ok(0.5 * dot(&r, &matvec(a, &r)))
            }
        }
    }

    pub fn gradient(&self, x: &PrimalPoint) -> Result<DualVector> {
        match &self.objective {
            Objective::Linear { cost } => Ok(DualVector::vector(cost.clone())),
            Objective::QuadraticSimplex { target } => {
                Ok(DualVector::vector(sub(x.as_slice(), target)))
            }
            Objective::Capacity { root } => {
                let n = root.side();
                let inv = sym_logdet_grad(&capacity_inner(root, x)?)?;
                let g = matmul(n, root.as_slice(), &matmul(n, inv.as_slice(), root.as_slice()));
                let neg: Vec<f64> = g.into_iter().map(|v| -v).collect();
                Ok(DualVector::matrix(SymMatrix::symmetrized(n, neg)?))
            }
            Objective::QuadraticUnbounded { a, b } => {
                Ok(DualVector::vector(matvec(a, &sub(x.as_slice(), b))))
            }
        }
    }

    /// `f(x) − f_min`.
    pub fn gap(&self, x: &PrimalPoint) -> Result<f64> {
        Ok(self.objective(x)? - self.f_min)
    }

    /// Runs the invariant battery: finite-difference gradients, the lower bound
    /// `f ≥ f_min`, and the G and L bounds where finite.
    pub fn self_test(&self, seed: u64, samples: usize) -> SelfTestReport {
        let mut rng = derive_stream(seed, 0);
        let reg = &self.regularizer;
        let mut report = SelfTestReport::default();

        for _ in 0..samples.min(100) {
            let x = reg.random_point(&mut rng);
            let dir = tangent_direction(reg, &mut rng);
            let (fd, analytic) = match self.directional_pair(&x, &dir) {
                Ok(v) => v,
                Err(e) => {
                    report.failures.push(format!("gradient check errored: {e}"));
                    continue;
                }
            };
            let err = (fd - analytic).abs() / analytic.abs().max(1.0);
            report.worst_fd_error = report.worst_fd_error.max(err);
            if err > 1e-5 {
                report.failures.push(format!("finite-difference mismatch {fd} vs {analytic}"));
            }
        }

        for _ in 0..samples {
            let x = reg.random_point(&mut rng);
            let f = match self.objective(&x) {
                Ok(f) => f,
                Err(e) => {
                    report.failures.push(format!("objective errored: {e}"));
                    continue;
                }
            };
            if f < self.f_min - 1e-9 {
                report.failures.push(format!("objective {f} below reference optimum {}", self.f_min));
            }
            let g = self.gradient(&x).expect("objective evaluated");
            if self.lipschitz.is_finite() {
                let gn = reg.dual_norm(g.as_slice());
                report.worst_g_ratio = report.worst_g_ratio.max(gn / self.lipschitz.max(f64::MIN_POSITIVE));
                if gn > self.lipschitz * (1.0 + 1e-12) + 1e-12 {
                    report.failures.push(format!("gradient norm {gn} exceeds G = {}", self.lipschitz));
                }
            }
            if self.smoothness.is_finite() {
                let x2 = reg.random_point(&mut rng);
                let g2 = self.gradient(&x2).expect("objective evaluated");
                let lhs = reg.dual_norm(&sub(g.as_slice(), g2.as_slice()));
                let rhs = self.smoothness * reg.primal_norm(&sub(x.as_slice(), x2.as_slice()));
                if lhs > rhs * (1.0 + 1e-12) + 1e-12 {
                    report.failures.push(format!("gradient difference {lhs} exceeds L·‖Δx‖ = {rhs}"));
                }
            }
        }
        report
    }

    fn directional_pair(&self, x: &PrimalPoint, dir: &[f64]) -> Result<(f64, f64)> {
        let h = 1e-6;
        let at = |s: f64| -> Result<f64> {
            self.objective(&PrimalPoint::new(x.shape(), axpy(x.as_slice(), s * h, dir))?)
        };
        let fd = (at(1.0)? - at(-1.0)?) / (2.0 * h);
        Ok((fd, dot(self.gradient(x)?.as_slice(), dir)))
    }
}

impl GradientField for Problem {
    fn gradient(&self, x: &PrimalPoint) -> Result<DualVector> {
        Problem::gradient(self, x)
    }

    fn domain(&self) -> &Regularizer {
        &self.regularizer
    }
}

#[derive(Debug, Clone, Default)]
pub struct SelfTestReport {
    pub failures: Vec<String>,
    pub worst_fd_error: f64,
    pub worst_g_ratio: f64,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn problem_stream(seed: u64) -> Stream {
    derive_stream(seed, PROBLEM_STREAM)
}

fn as_numerical(e: Error) -> Error {
    match e {
        Error::NumericalFailure { .. } => e,
        other => Error::numerical(other.to_string()),
    }
}

fn matvec(a: &SymMatrix, x: &[f64]) -> Vec<f64> {
    let n = a.side();
    (0..n).map(|i| dot(&a.as_slice()[i * n..(i + 1) * n], x)).collect()
}

fn capacity_inner(root: &SymMatrix, x: &PrimalPoint) -> Result<SymMatrix> {
    let n = root.side();
    let q = x.to_sym()?;
    let mut m = matmul(n, root.as_slice(), &matmul(n, q.as_slice(), root.as_slice()));
    for i in 0..n {
        m[i * n + i] += 1.0;
    }
    SymMatrix::symmetrized(n, m)
}

/// Optimal power allocation `qᵢ = (μ − 1/λᵢ)⁺` with `Σ qᵢ = 1`, and the
/// resulting minimum of `−Σ log(1 + λᵢ qᵢ)`. Input is sorted descending.
fn water_fill(eigenvalues: &[f64]) -> (Vec<f64>, f64) {
    let n = eigenvalues.len();
    let positive: Vec<f64> = eigenvalues.iter().cloned().filter(|&l| l > 1e-300).collect();
    if positive.is_empty() {
        return (vec![0.0; n], 0.0);
    }
    let mut level = 0.0;
    let mut inv_sum = 0.0;
    for (k, &l) in positive.iter().enumerate() {
        inv_sum += 1.0 / l;
        let mu = (1.0 + inv_sum) / (k as f64 + 1.0);
        if mu > 1.0 / l {
            level = mu;
        } else {
            break;
        }
    }
    let powers: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| if l > 1e-300 { (level - 1.0 / l).max(0.0) } else { 0.0 })
        .collect();
    let f_min = -eigenvalues
        .iter()
        .zip(&powers)
        .map(|(l, q)| (1.0 + l.max(0.0) * q).ln())
        .sum::<f64>();
    (powers, f_min)
}

/// Random direction in the tangent space of the domain (zero-sum on the simplex,
/// symmetric on the spectrahedron).
fn tangent_direction<R: Rng + ?Sized>(reg: &Regularizer, rng: &mut R) -> Vec<f64> {
    let mut dir = reg.random_dual(rng, 1.0).into_vec();
    if matches!(
        reg.geometry(),
        crate::geometry::Geometry::EntropicSimplex | crate::geometry::Geometry::EuclideanSimplex
    ) {
        let mean = dir.iter().sum::<f64>() / dir.len() as f64;
        dir.iter_mut().for_each(|v| *v -= mean);
    }
    dir
}

/// Matrix square root helper, exposed for callers building channels.
pub fn psd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    matrix_fn(m, |l| l.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_examples() {
        let p = Problem::linear_simplex(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.f_min(), 1.0);
        assert_eq!(p.x_star().unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(p.lipschitz(), 3.0);
        assert_eq!(p.smoothness(), 0.0);

        let z = Problem::linear_simplex(vec![0.0; 4]).unwrap();
        assert_eq!(z.f_min(), 0.0);
        let mut rng = derive_stream(0, 0);
        for _ in 0..10 {
            let x = z.regularizer().random_point(&mut rng);
            assert_eq!(z.gap(&x).unwrap(), 0.0);
        }

        let r = Problem::linear_simplex_random(100, 7).unwrap();
        let mut rng = problem_stream(7);
        let c: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(r.f_min(), min);

        assert!(matches!(Problem::linear_simplex(vec![1.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn quadratic_simplex_examples() {
        let p = Problem::quadratic_simplex(vec![0.25; 4]).unwrap();
        assert_eq!(p.objective(&PrimalPoint::vector(vec![0.25; 4])).unwrap(), 0.0);
        let q = Problem::quadratic_simplex(vec![0.5, 0.5]).unwrap();
        let v = q.objective(&PrimalPoint::vector(vec![1.0, 0.0])).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn capacity_examples() {
        let zero = Problem::capacity_from_channel(SymMatrix::zeros(3)).unwrap();
        let mut rng = derive_stream(1, 0);
        let x = zero.regularizer().random_point(&mut rng);
        assert_eq!(zero.objective(&x).unwrap(), 0.0);
        assert!(zero.gradient(&x).unwrap().as_slice().iter().all(|v| *v == 0.0));
        assert_eq!(zero.f_min(), 0.0);

        // n = 1: f(q) = −log(1 + m q) is minimized at q = 1
        let m = 2.5;
        let scalar = Problem::capacity_from_channel(SymMatrix::diag(&[m])).unwrap();
        assert!((scalar.f_min() - (-(1.0 + m).ln())).abs() < 1e-15);
        let grid_min = (0..=1000)
            .map(|k| -(1.0 + m * k as f64 / 1000.0).ln())
            .fold(f64::INFINITY, f64::min);
        assert!((grid_min - scalar.f_min()).abs() < 1e-12);
    }

    #[test]
    fn water_filling_beats_random_feasible_points() {
        let p = Problem::capacity(4, 3).unwrap();
        let star = p.x_star().unwrap().clone();
        p.regularizer().check_point(&star).unwrap();
        assert!((p.objective(&star).unwrap() - p.f_min()).abs() < 1e-12);
        let mut rng = derive_stream(3, 1);
        for _ in 0..2000 {
            let x = p.regularizer().random_point(&mut rng);
            assert!(p.objective(&x).unwrap() >= p.f_min() - 1e-12);
        }
    }

    #[test]
    fn unbounded_examples() {
        let a = SymMatrix::identity(3);
        let p = Problem::quadratic_unbounded_from(a, vec![0.0; 3]).unwrap();
        assert_eq!(p.objective(&PrimalPoint::vector(vec![1.0, 0.0, 0.0])).unwrap(), 0.5);
        let r = Problem::quadratic_unbounded(6, 2, 1.0).unwrap();
        let b = r.x_star().unwrap().clone();
        assert!(r.objective(&b).unwrap().abs() < 1e-15);
        assert!((r.smoothness() - 10.0).abs() < 1e-9);
        assert!(r.lipschitz().is_infinite());
    }

    #[test]
    fn self_tests_pass_for_every_family() {
        let problems = vec![
            Problem::linear_simplex_random(20, 1).unwrap(),
            Problem::quadratic_simplex_random(20, 2).unwrap(),
            Problem::capacity(3, 3).unwrap(),
            Problem::quadratic_unbounded(5, 4, 0.5).unwrap(),
        ];
        for p in problems {
            let report = p.self_test(17, 2000);
            assert!(report.passed(), "{}: {:?}", p.name(), report.failures);
            assert!(report.worst_fd_error <= 1e-5);
        }
    }
}
