//! Bregman regularizers and the maps they induce.
//!
//! Four setups are supported:
//!
//! | geometry                  | h(x)                                   | norm pair        | K | Ω              | D   |
//! |---------------------------|----------------------------------------|------------------|---|----------------|-----|
//! | entropic simplex          | Σ xᵢ log xᵢ                            | L1 / L∞          | 1 | log d          | 1   |
//! | von Neumann spectrahedron | tr X log X + (1 − tr X) log(1 − tr X)  | nuclear/spectral | 1 | log n          | 1   |
//! | Euclidean simplex         | ‖x‖²/2                                 | L2 / L2          | 1 | (1 − 1/d)/2    | √2  |
//! | Euclidean unbounded       | ‖x‖²/2                                 | L2 / L2          | 1 | ∞              | ∞   |
//!
//! The diameters of the two entropic setups are the conventional closed-form
//! constants used with these regularizers; they are stored, not computed.

mod norms;
mod point;

pub use norms::NormPair;
pub use point::{axpy, dot, pairing, scaled, sub, DualVector, PrimalPoint, Shape};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symlinalg::{sym_eig, EigDecomposition, SymMatrix};

/// Smallest entry an entropic base point may carry before prox-steps refuse it.
pub const PROX_DOMAIN_FLOOR: f64 = 1e-300;

const SIMPLEX_TOL: f64 = 1e-12;
const SPECTRAHEDRON_EIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    EntropicSimplex,
    VonNeumannSpectrahedron,
    EuclideanSimplex,
    EuclideanUnbounded,
}

impl Geometry {
    /// Whether the mirror map always lands in the interior, so prox-steps can
    /// be chained through a dual representative.
    pub fn is_legendre(&self) -> bool {
        matches!(
            self,
            Geometry::EntropicSimplex | Geometry::VonNeumannSpectrahedron | Geometry::EuclideanUnbounded
        )
    }
}

/// A Bregman regularizer bundle: h, its constants and its norm pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    geometry: Geometry,
    shape: Shape,
    strong_convexity: f64,
    range: f64,
    diameter: f64,
    norms: NormPair,
    prox_center: PrimalPoint,
}

impl Regularizer {
    /// Negative entropy on the `d`-simplex.
    pub fn entropic_simplex(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("simplex dimension must be at least 2"));
        }
        Ok(Regularizer {
            geometry: Geometry::EntropicSimplex,
            shape: Shape::Vector(d),
            strong_convexity: 1.0,
            range: (d as f64).ln(),
            diameter: 1.0,
            norms: NormPair::L1Linf,
            prox_center: PrimalPoint::vector(vec![1.0 / d as f64; d]),
        })
    }

    /// Von Neumann entropy on `{X ⪰ 0, tr X ≤ 1}` with side `n`.
    ///
    /// The stored range is `log n`, i.e. `(1/2) log d` with `d = n²`.
    pub fn von_neumann(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("matrix side must be positive"));
        }
        let center = SymMatrix::diag(&vec![1.0 / (n as f64 + 1.0); n]);
        Ok(Regularizer {
            geometry: Geometry::VonNeumannSpectrahedron,
            shape: Shape::Symmetric(n),
            strong_convexity: 1.0,
            range: (n as f64).ln(),
            diameter: 1.0,
            norms: NormPair::NuclearSpectral,
            prox_center: PrimalPoint::matrix(center),
        })
    }

    /// Squared Euclidean norm restricted to the `d`-simplex.
    pub fn euclidean_simplex(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("simplex dimension must be at least 2"));
        }
        Ok(Regularizer {
            geometry: Geometry::EuclideanSimplex,
            shape: Shape::Vector(d),
            strong_convexity: 1.0,
            range: 0.5 * (1.0 - 1.0 / d as f64),
            diameter: std::f64::consts::SQRT_2,
            norms: NormPair::L2L2,
            prox_center: PrimalPoint::vector(vec![1.0 / d as f64; d]),
        })
    }

    /// Squared Euclidean norm on all of `R^d`.
    pub fn euclidean_unbounded(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(Regularizer {
            geometry: Geometry::EuclideanUnbounded,
            shape: Shape::Vector(d),
            strong_convexity: 1.0,
            range: f64::INFINITY,
            diameter: f64::INFINITY,
            norms: NormPair::L2L2,
            prox_center: PrimalPoint::zeros(Shape::Vector(d)),
        })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Ambient dimension (`n²` for the spectrahedron).
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    /// Strong-convexity modulus K.
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    /// Range Ω = max h − min h.
    pub fn range(&self) -> f64 {
        self.range
    }

    /// Norm diameter D of the domain.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn norms(&self) -> NormPair {
        self.norms
    }

    pub fn prox_center(&self) -> &PrimalPoint {
        &self.prox_center
    }

    /// `H = √(Ω + K·D²)`, the constant that sets UnderGrad's initial learning rate.
    pub fn h_constant(&self) -> f64 {
        (self.range + self.strong_convexity * self.diameter * self.diameter).sqrt()
    }

    pub fn primal_norm(&self, x: &[f64]) -> f64 {
        self.norms.primal_norm(x)
    }

    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        self.norms.dual_norm(v)
    }

    fn check_shape(&self, shape: Shape) -> Result<()> {
        if shape != self.shape {
            return Err(Error::invalid(format!(
                "element shape {shape:?} does not match regularizer shape {:?}",
                self.shape
            )));
        }
        Ok(())
    }

    fn check_dual(&self, y: &DualVector) -> Result<()> {
        self.check_shape(y.shape())?;
        if !y.is_finite() {
            return Err(Error::invalid("dual vector has non-finite entries"));
        }
        Ok(())
    }

    /// Checks the domain invariants of `x`.
    pub fn check_point(&self, x: &PrimalPoint) -> Result<()> {
        self.check_shape(x.shape())?;
        if !x.is_finite() {
            return Err(Error::invalid("point has non-finite entries"));
        }
        match self.geometry {
            Geometry::EntropicSimplex | Geometry::EuclideanSimplex => {
                let s = x.as_slice();
                if let Some(v) = s.iter().find(|&&v| v < 0.0) {
                    return Err(Error::domain(format!("negative simplex entry {v:e}")));
                }
                let sum: f64 = s.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL * s.len().max(1) as f64 {
                    return Err(Error::domain(format!("simplex entries sum to {sum}")));
                }
            }
            Geometry::VonNeumannSpectrahedron => {
                let m = SymMatrix::from_row_major(self.side(), x.as_slice().to_vec())
                    .map_err(|e| Error::domain(e.to_string()))?;
                let eig = sym_eig(&m)?;
                let min = *eig.eigenvalues.last().unwrap();
                if min < -SPECTRAHEDRON_EIG_TOL {
                    return Err(Error::domain(format!("negative eigenvalue {min:e}")));
                }
                if m.trace() > 1.0 + SIMPLEX_TOL {
                    return Err(Error::domain(format!("trace {} exceeds 1", m.trace())));
                }
            }
            Geometry::EuclideanUnbounded => {}
        }
        Ok(())
    }

    pub fn contains(&self, x: &PrimalPoint) -> bool {
        self.check_point(x).is_ok()
    }

    fn side(&self) -> usize {
        match self.shape {
            Shape::Symmetric(n) => n,
            Shape::Vector(d) => d,
        }
    }

    /// h(x).
    pub fn value(&self, x: &PrimalPoint) -> Result<f64> {
        self.check_shape(x.shape())?;
        match self.geometry {
            Geometry::EntropicSimplex => {
                let mut acc = 0.0;
                for &v in x.as_slice() {
                    if v < 0.0 {
                        return Err(Error::domain("entropy of a negative entry"));
                    }
                    if v > 0.0 {
                        acc += v * v.ln();
                    }
                }
                Ok(acc)
            }
            Geometry::VonNeumannSpectrahedron => {
                let eig = sym_eig(&x.to_sym()?)?;
                Ok(von_neumann_value(&eig.eigenvalues))
            }
            Geometry::EuclideanSimplex | Geometry::EuclideanUnbounded => {
                Ok(0.5 * dot(x.as_slice(), x.as_slice()))
            }
        }
    }

    /// min h, attained at the prox-center.
    pub fn min_value(&self) -> f64 {
        match self.geometry {
            Geometry::EntropicSimplex => -(self.dim() as f64).ln(),
            Geometry::VonNeumannSpectrahedron => -((self.side() + 1) as f64).ln(),
            Geometry::EuclideanSimplex => 0.5 / self.dim() as f64,
            Geometry::EuclideanUnbounded => 0.0,
        }
    }

    /// Mirror map `Q(y) = argmax_x {⟨y, x⟩ − h(x)}`.
    pub fn mirror_map(&self, y: &DualVector) -> Result<PrimalPoint> {
        self.check_dual(y)?;
        match self.geometry {
            Geometry::EntropicSimplex => Ok(PrimalPoint::vector(softmax(y.as_slice()))),
            Geometry::VonNeumannSpectrahedron => {
                let eig = sym_eig(&y.to_sym()?)?;
                let (weights, _) = von_neumann_weights(&eig.eigenvalues);
                Ok(PrimalPoint::matrix(eig.recompose(&weights)))
            }
            Geometry::EuclideanSimplex => Ok(PrimalPoint::vector(project_simplex(y.as_slice()))),
            Geometry::EuclideanUnbounded => Ok(PrimalPoint::vector(y.as_slice().to_vec())),
        }
    }

    /// Whether `x` is in the region where h is differentiable.
    pub fn check_prox_domain(&self, x: &PrimalPoint) -> Result<()> {
        self.check_shape(x.shape())?;
        match self.geometry {
            Geometry::EntropicSimplex => {
                let min = x.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
                if !(min >= PROX_DOMAIN_FLOOR) {
                    return Err(Error::domain(format!(
                        "entropic base point has entry {min:e} below the prox-domain floor"
                    )));
                }
                Ok(())
            }
            Geometry::VonNeumannSpectrahedron => {
                let eig = sym_eig(&x.to_sym()?)?;
                von_neumann_prox_domain(&eig).map(|_| ())
            }
            Geometry::EuclideanSimplex => self.check_point(x),
            Geometry::EuclideanUnbounded => {
                if x.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("point has non-finite entries"))
                }
            }
        }
    }

    /// Continuous selection `∇h(x)` on the prox-domain.
    pub fn reg_grad(&self, x: &PrimalPoint) -> Result<DualVector> {
        self.check_prox_domain(x)?;
        match self.geometry {
            Geometry::EntropicSimplex => Ok(DualVector::vector(
                x.as_slice().iter().map(|v| 1.0 + v.ln()).collect(),
            )),
            Geometry::VonNeumannSpectrahedron => {
                let eig = sym_eig(&x.to_sym()?)?;
                let slack = von_neumann_prox_domain(&eig)?;
                let shift = slack.ln();
                let logs: Vec<f64> = eig.eigenvalues.iter().map(|l| l.ln() - shift).collect();
                Ok(DualVector::matrix(eig.recompose(&logs)))
            }
            Geometry::EuclideanSimplex | Geometry::EuclideanUnbounded => {
                Ok(DualVector::new(x.shape(), x.as_slice().to_vec())?)
            }
        }
    }

    /// Prox-mapping `P_x(v) = argmin_{x'} {⟨v, x − x'⟩ + D(x', x)}`.
    pub fn prox_map(&self, x: &PrimalPoint, v: &DualVector) -> Result<PrimalPoint> {
        self.check_dual(v)?;
        self.check_prox_domain(x)?;
        match self.geometry {
            Geometry::EntropicSimplex => {
                // x'ᵢ ∝ xᵢ·exp(vᵢ), evaluated in the log domain
                let logits: Vec<f64> = x
                    .as_slice()
                    .iter()
                    .zip(v.as_slice())
                    .map(|(xi, vi)| xi.ln() + vi)
                    .collect();
                Ok(PrimalPoint::vector(softmax(&logits)))
            }
            Geometry::VonNeumannSpectrahedron => {
                let grad = self.reg_grad(x)?;
                self.mirror_map(&DualVector::matrix(SymMatrix::symmetrized(
                    self.side(),
                    axpy(grad.as_slice(), 1.0, v.as_slice()),
                )?))
            }
            Geometry::EuclideanSimplex => Ok(PrimalPoint::vector(project_simplex(&axpy(
                x.as_slice(),
                1.0,
                v.as_slice(),
            )))),
            Geometry::EuclideanUnbounded => Ok(PrimalPoint::vector(axpy(
                x.as_slice(),
                1.0,
                v.as_slice(),
            ))),
        }
    }

    /// Bregman divergence `D(p, x) = h(p) − h(x) − ⟨∇h(x), p − x⟩`.
    pub fn bregman_div(&self, p: &PrimalPoint, x: &PrimalPoint) -> Result<f64> {
        self.check_shape(p.shape())?;
        self.check_prox_domain(x)?;
        match self.geometry {
            Geometry::EntropicSimplex => {
                // KL form plus the mass-mismatch term, which vanishes on the simplex
                let mut acc = 0.0;
                for (&pi, &xi) in p.as_slice().iter().zip(x.as_slice()) {
                    if pi < 0.0 {
                        return Err(Error::domain("negative entry in divergence argument"));
                    }
                    if pi > 0.0 {
                        acc += pi * (pi / xi).ln();
                    }
                    acc += xi - pi;
                }
                Ok(acc)
            }
            Geometry::VonNeumannSpectrahedron => {
                let grad = self.reg_grad(x)?;
                let diff = sub(p.as_slice(), x.as_slice());
                Ok(self.value(p)? - self.value(x)? - dot(grad.as_slice(), &diff))
            }
            Geometry::EuclideanSimplex | Geometry::EuclideanUnbounded => {
                let diff = sub(p.as_slice(), x.as_slice());
                Ok(0.5 * dot(&diff, &diff))
            }
        }
    }

    /// Convex conjugate `h*(y) = ⟨y, Q(y)⟩ − h(Q(y))`.
    pub fn conjugate_value(&self, y: &DualVector) -> Result<f64> {
        self.check_dual(y)?;
        match self.geometry {
            Geometry::EntropicSimplex => Ok(log_sum_exp(y.as_slice())),
            Geometry::VonNeumannSpectrahedron => {
                let eig = sym_eig(&y.to_sym()?)?;
                Ok(von_neumann_weights(&eig.eigenvalues).1)
            }
            Geometry::EuclideanSimplex => {
                let q = project_simplex(y.as_slice());
                Ok(dot(y.as_slice(), &q) - 0.5 * dot(&q, &q))
            }
            Geometry::EuclideanUnbounded => Ok(0.5 * dot(y.as_slice(), y.as_slice())),
        }
    }

    /// Fenchel coupling `F(p, y) = h(p) + h*(y) − ⟨y, p⟩`.
    ///
    /// Evaluated as `h(p) − h(Q(y)) − ⟨y, p − Q(y)⟩`, which avoids cancelling
    /// two large terms when `y` is large. On the simplex `y` is first shifted
    /// by its maximum (the coupling is invariant to that shift).
    pub fn fenchel_coupling(&self, p: &PrimalPoint, y: &DualVector) -> Result<f64> {
        self.check_shape(p.shape())?;
        self.check_dual(y)?;
        let y = match self.geometry {
            Geometry::EntropicSimplex | Geometry::EuclideanSimplex => {
                let m = y.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                y.with_data(y.as_slice().iter().map(|v| v - m).collect())
            }
            _ => y.clone(),
        };
        let q = self.mirror_map(&y)?;
        let diff = sub(p.as_slice(), q.as_slice());
        Ok(self.value(p)? - self.value(&q)? - dot(y.as_slice(), &diff))
    }

    /// A dual vector whose mirror image is `x`, when `x` is interior.
    pub fn dual_representative(&self, x: &PrimalPoint) -> Result<DualVector> {
        self.reg_grad(x)
    }

    /// Uniformly spread random domain point (Dirichlet(1) spectrum on the simplex
    /// and spectrahedron, standard Gaussian when unbounded).
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> PrimalPoint {
        match self.geometry {
            Geometry::EntropicSimplex | Geometry::EuclideanSimplex => {
                PrimalPoint::vector(dirichlet_flat(self.dim(), rng))
            }
            Geometry::VonNeumannSpectrahedron => {
                let n = self.side();
                let mut spectrum = dirichlet_flat(n + 1, rng);
                spectrum.truncate(n);
                let basis = random_orthogonal(n, rng);
                PrimalPoint::matrix(basis.recompose(&spectrum))
            }
            Geometry::EuclideanUnbounded => PrimalPoint::vector(
                (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect(),
            ),
        }
    }

    /// Random dual vector with entries of the given scale.
    pub fn random_dual<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> DualVector {
        match self.shape {
            Shape::Vector(d) => DualVector::vector(
                (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect(),
            ),
            Shape::Symmetric(n) => {
                let raw: Vec<f64> = (0..n * n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
                DualVector::matrix(SymMatrix::symmetrized(n, raw).expect("square storage"))
            }
        }
    }
}

/// Max-shifted softmax.
pub fn softmax(y: &[f64]) -> Vec<f64> {
    let m = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

pub fn log_sum_exp(y: &[f64]) -> f64 {
    let m = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + y.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            tau = t;
        }
    }
    y.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Eigenvalues of `exp(Y)/(1 + tr exp Y)` and `log(1 + tr exp Y)`, shifted by
/// `max(0, λ_max)` to keep the exponentials bounded.
fn von_neumann_weights(eigenvalues: &[f64]) -> (Vec<f64>, f64) {
    let shift = eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let e: Vec<f64> = eigenvalues.iter().map(|l| (l - shift).exp()).collect();
    let z = (-shift).exp() + e.iter().sum::<f64>();
    (e.iter().map(|v| v / z).collect(), shift + z.ln())
}

fn von_neumann_value(eigenvalues: &[f64]) -> f64 {
    let xlogx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
    let trace: f64 = eigenvalues.iter().sum();
    eigenvalues.iter().map(|&l| xlogx(l)).sum::<f64>() + xlogx(1.0 - trace)
}

/// Returns the slack `1 − tr X` if `X ≻ 0` and `tr X < 1`.
fn von_neumann_prox_domain(eig: &EigDecomposition) -> Result<f64> {
    let min = *eig.eigenvalues.last().unwrap();
    if !(min > 0.0) {
        return Err(Error::domain(format!(
            "spectrahedron base point is not positive definite (min eigenvalue {min:e})"
        )));
    }
    let slack = 1.0 - eig.eigenvalues.iter().sum::<f64>();
    if !(slack > 0.0) {
        return Err(Error::domain("spectrahedron base point has unit trace"));
    }
    Ok(slack)
}

fn dirichlet_flat<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v: f64| v / z).collect()
}

/// Haar-ish random orthogonal basis: the eigenvectors of a random symmetric
/// Gaussian matrix.
pub(crate) fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> EigDecomposition {
    let raw: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(rng)).collect();
    let g = SymMatrix::symmetrized(n, raw).expect("square storage");
    sym_eig(&g).expect("Gaussian symmetric matrices are well conditioned for Jacobi")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::derive_stream;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn all_geometries() -> Vec<Regularizer> {
        vec![
            Regularizer::entropic_simplex(5).unwrap(),
            Regularizer::von_neumann(3).unwrap(),
            Regularizer::euclidean_simplex(5).unwrap(),
            Regularizer::euclidean_unbounded(5).unwrap(),
        ]
    }

    #[test]
    fn table_constants() {
        let e = Regularizer::entropic_simplex(100).unwrap();
        assert_eq!(e.strong_convexity(), 1.0);
        assert!(approx(e.range(), 100f64.ln(), 1e-15));
        assert_eq!(e.diameter(), 1.0);
        let v = Regularizer::von_neumann(4).unwrap();
        assert!(approx(v.range(), 0.5 * 16f64.ln(), 1e-15));
        assert_eq!(v.diameter(), 1.0);
        assert!(Regularizer::entropic_simplex(1).is_err());
    }

    #[test]
    fn prox_center_minimizes_h() {
        for reg in all_geometries() {
            let c = reg.prox_center().clone();
            reg.check_point(&c).unwrap();
            assert!(approx(reg.value(&c).unwrap(), reg.min_value(), 1e-12));
            // first-order condition: ∇h(c) is orthogonal to the tangent space
            let g = reg.reg_grad(&c).unwrap();
            let mut rng = derive_stream(1, 0);
            for _ in 0..20 {
                let x = reg.random_point(&mut rng);
                let diff = sub(x.as_slice(), c.as_slice());
                assert!(dot(g.as_slice(), &diff) >= -1e-12);
            }
        }
    }

    #[test]
    fn entropic_mirror_examples() {
        let reg = Regularizer::entropic_simplex(3).unwrap();
        let x = reg.mirror_map(&DualVector::vector(vec![0.0; 3])).unwrap();
        for v in x.as_slice() {
            assert!(approx(*v, 1.0 / 3.0, 1e-15));
        }
        let reg2 = Regularizer::entropic_simplex(2).unwrap();
        let y = DualVector::vector(vec![3f64.ln(), 0.0]);
        let x = reg2.mirror_map(&y).unwrap();
        // grid-search argmax of ⟨y,x⟩ − h(x) over the 2-simplex
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 1..100_000 {
            let a = k as f64 / 100_000.0;
            let obj = y.as_slice()[0] * a - (a * a.ln() + (1.0 - a) * (1.0 - a).ln());
            if obj > best.0 {
                best = (obj, a);
            }
        }
        assert!(approx(best.1, 0.75, 1e-3));
        assert!(approx(x.as_slice()[0], 0.75, 1e-15));
        assert!(approx(x.as_slice()[1], 0.25, 1e-15));
    }

    #[test]
    fn von_neumann_mirror_at_zero() {
        let reg = Regularizer::von_neumann(2).unwrap();
        let x = reg.mirror_map(&DualVector::zeros(Shape::Symmetric(2))).unwrap();
        // scalar formula e⁰/(1 + 2e⁰)
        let want = 1.0 / 3.0;
        // 1-D check: maximize -(2 l log l + (1-2l) log(1-2l)) over l
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 1..50_000 {
            let l = k as f64 / 100_000.0;
            let obj = -(2.0 * l * l.ln() + (1.0 - 2.0 * l) * (1.0 - 2.0 * l).ln());
            if obj > best.0 {
                best = (obj, l);
            }
        }
        assert!(approx(best.1, want, 1e-4));
        assert!(approx(x.as_slice()[0], want, 1e-15));
        assert!(approx(x.as_slice()[3], want, 1e-15));
        assert!(x.as_slice()[1].abs() < 1e-15);
    }

    #[test]
    fn von_neumann_mirror_handles_large_input() {
        let reg = Regularizer::von_neumann(3).unwrap();
        let y = DualVector::matrix(SymMatrix::diag(&[800.0, -800.0, 10.0]));
        let x = reg.mirror_map(&y).unwrap();
        reg.check_point(&x).unwrap();
        assert!(approx(x.as_slice()[0], 1.0, 1e-12));
    }

    #[test]
    fn euclidean_unbounded_mirror_is_identity() {
        let reg = Regularizer::euclidean_unbounded(4).unwrap();
        let y = DualVector::vector(vec![1.5, -2.0, 0.0, 7.0]);
        assert_eq!(reg.mirror_map(&y).unwrap().as_slice(), y.as_slice());
    }

    #[test]
    fn mirror_rejects_non_finite() {
        let reg = Regularizer::entropic_simplex(2).unwrap();
        let y = DualVector::vector(vec![f64::NAN, 0.0]);
        assert!(matches!(reg.mirror_map(&y), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn prox_examples() {
        let reg = Regularizer::entropic_simplex(2).unwrap();
        let x = PrimalPoint::vector(vec![0.5, 0.5]);
        let same = reg.prox_map(&x, &DualVector::vector(vec![0.0, 0.0])).unwrap();
        assert_eq!(same, x);
        let v = DualVector::vector(vec![3f64.ln(), 0.0]);
        let p = reg.prox_map(&x, &v).unwrap();
        assert!(approx(p.as_slice()[0], 0.75, 1e-15));
        // numeric argmin of ⟨v, x − x'⟩ + D(x', x)
        let mut best = (f64::INFINITY, 0.0);
        for k in 1..100_000 {
            let a = k as f64 / 100_000.0;
            let xp = PrimalPoint::vector(vec![a, 1.0 - a]);
            let obj = -dot(v.as_slice(), &sub(xp.as_slice(), x.as_slice()))
                + reg.bregman_div(&xp, &x).unwrap();
            if obj < best.0 {
                best = (obj, a);
            }
        }
        assert!(approx(best.1, 0.75, 1e-3));

        let eu = Regularizer::euclidean_simplex(4).unwrap();
        let c = eu.prox_center().clone();
        let p = eu
            .prox_map(&c, &DualVector::vector(vec![50.0, 0.0, 0.0, 0.0]))
            .unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn prox_domain_guard() {
        let reg = Regularizer::entropic_simplex(2).unwrap();
        let edge = PrimalPoint::vector(vec![1.0, 0.0]);
        assert!(matches!(
            reg.prox_map(&edge, &DualVector::vector(vec![0.0, 0.0])),
            Err(Error::Domain(_))
        ));
        let tiny = PrimalPoint::vector(vec![1.0, 1e-301]);
        assert!(matches!(reg.reg_grad(&tiny), Err(Error::Domain(_))));
        let vn = Regularizer::von_neumann(2).unwrap();
        let singular = PrimalPoint::matrix(SymMatrix::diag(&[0.5, 0.0]));
        assert!(matches!(vn.reg_grad(&singular), Err(Error::Domain(_))));
    }

    #[test]
    fn divergence_examples() {
        let reg = Regularizer::entropic_simplex(2).unwrap();
        let half = PrimalPoint::vector(vec![0.5, 0.5]);
        let vertex = PrimalPoint::vector(vec![1.0, 0.0]);
        assert_eq!(reg.bregman_div(&half, &half).unwrap(), 0.0);
        assert!(approx(reg.bregman_div(&vertex, &half).unwrap(), 2f64.ln(), 1e-15));
        for eps in [1e-2, 1e-5, 1e-9, 1e-14] {
            let x = PrimalPoint::vector(vec![1.0 - eps, eps]);
            let want = -(1.0 - eps).ln();
            assert!(approx(reg.bregman_div(&vertex, &x).unwrap(), want, 1e-12));
            // against the edge coordinate the divergence grows like −log ε
            let flipped = PrimalPoint::vector(vec![eps, 1.0 - eps]);
            let kl = -eps.ln();
            assert!(approx(reg.bregman_div(&vertex, &flipped).unwrap(), kl, 1e-9 * kl));
        }
        for reg in all_geometries() {
            let c = reg.prox_center().clone();
            assert!(reg.bregman_div(&c, &c).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn conjugate_examples() {
        let reg = Regularizer::entropic_simplex(2).unwrap();
        assert!(approx(
            reg.conjugate_value(&DualVector::vector(vec![0.0, 0.0])).unwrap(),
            2f64.ln(),
            1e-15
        ));
        let eu = Regularizer::euclidean_unbounded(3).unwrap();
        let y = DualVector::vector(vec![1.0, -2.0, 0.5]);
        assert!(approx(eu.conjugate_value(&y).unwrap(), 0.5 * 5.25, 1e-15));
        let r3 = Regularizer::entropic_simplex(3).unwrap();
        let mut rng = derive_stream(5, 0);
        for _ in 0..100 {
            let y = r3.random_dual(&mut rng, 5.0);
            let q = r3.mirror_map(&y).unwrap();
            let by_def = pairing(&y, &q) - r3.value(&q).unwrap();
            let lse = y.as_slice().iter().map(|v| v.exp()).sum::<f64>().ln();
            assert!(approx(r3.conjugate_value(&y).unwrap(), lse, 1e-12));
            assert!(approx(by_def, lse, 1e-12));
        }
        // von Neumann closed form against the definition
        let vn = Regularizer::von_neumann(3).unwrap();
        for _ in 0..50 {
            let y = vn.random_dual(&mut rng, 2.0);
            let q = vn.mirror_map(&y).unwrap();
            let by_def = pairing(&y, &q) - vn.value(&q).unwrap();
            assert!(approx(vn.conjugate_value(&y).unwrap(), by_def, 1e-12));
        }
    }

    #[test]
    fn fenchel_examples() {
        let reg = Regularizer::entropic_simplex(2).unwrap();
        let p = PrimalPoint::vector(vec![1.0, 0.0]);
        assert!(approx(
            reg.fenchel_coupling(&p, &DualVector::vector(vec![0.0, 0.0])).unwrap(),
            2f64.ln(),
            1e-15
        ));
        let mut rng = derive_stream(9, 0);
        for reg in all_geometries() {
            for _ in 0..50 {
                let y = reg.random_dual(&mut rng, 3.0);
                let q = reg.mirror_map(&y).unwrap();
                assert!(reg.fenchel_coupling(&q, &y).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reg_grad_examples() {
        let eu = Regularizer::euclidean_simplex(3).unwrap();
        let x = PrimalPoint::vector(vec![0.2, 0.3, 0.5]);
        assert_eq!(eu.reg_grad(&x).unwrap().as_slice(), x.as_slice());
        let reg = Regularizer::entropic_simplex(2).unwrap();
        let g = reg.reg_grad(&PrimalPoint::vector(vec![0.5, 0.5])).unwrap();
        for v in g.as_slice() {
            assert!(approx(*v, 1.0 - 2f64.ln(), 1e-15));
        }
    }

    #[test]
    fn reg_grad_matches_finite_differences() {
        let mut rng = derive_stream(13, 0);
        let reg = Regularizer::entropic_simplex(6).unwrap();
        for _ in 0..20 {
            let x = reg.random_point(&mut rng);
            let g = reg.reg_grad(&x).unwrap();
            for i in 0..6 {
                let h = 1e-6 * x.as_slice()[i];
                let f = |s: f64| {
                    let mut d = x.as_slice().to_vec();
                    d[i] += s * h;
                    d.iter().map(|v| v * v.ln()).sum::<f64>()
                };
                let fd = (f(1.0) - f(-1.0)) / (2.0 * h);
                let a = g.as_slice()[i];
                assert!((fd - a).abs() <= 1e-5 * a.abs().max(1.0), "{fd} vs {a}");
            }
        }
        // von Neumann: directional derivative along a symmetric direction
        let vn = Regularizer::von_neumann(3).unwrap();
        for _ in 0..10 {
            let x = vn.random_point(&mut rng);
            let g = vn.reg_grad(&x).unwrap();
            let dir = vn.random_dual(&mut rng, 1.0);
            let h = 1e-6;
            let f = |s: f64| {
                let p = PrimalPoint::new(x.shape(), axpy(x.as_slice(), s * h, dir.as_slice())).unwrap();
                vn.value(&p).unwrap()
            };
            let fd = (f(1.0) - f(-1.0)) / (2.0 * h);
            let a = dot(g.as_slice(), dir.as_slice());
            assert!((fd - a).abs() <= 1e-5 * a.abs().max(1.0), "{fd} vs {a}");
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let reg = Regularizer::entropic_simplex(7).unwrap();
        let mut rng = derive_stream(17, 0);
        for _ in 0..200 {
            let y = reg.random_dual(&mut rng, 10.0);
            let c: f64 = rng.random_range(-100.0..100.0);
            let shifted = DualVector::vector(y.as_slice().iter().map(|v| v + c).collect());
            let a = reg.mirror_map(&y).unwrap();
            let b = reg.mirror_map(&shifted).unwrap();
            for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn mirror_optimality_variational_form() {
        let mut rng = derive_stream(19, 0);
        for reg in all_geometries() {
            for _ in 0..100 {
                let y = reg.random_dual(&mut rng, 4.0);
                let q = reg.mirror_map(&y).unwrap();
                let sel = match reg.reg_grad(&q) {
                    Ok(g) => g,
                    // boundary output of the projection: use the selection x itself
                    Err(_) => DualVector::vector(q.as_slice().to_vec()),
                };
                let lhs = sub(y.as_slice(), sel.as_slice());
                for _ in 0..10 {
                    let x = reg.random_point(&mut rng);
                    let v = dot(&lhs, &sub(x.as_slice(), q.as_slice()));
                    assert!(v <= 1e-8, "{:?}: {v}", reg.geometry());
                }
            }
        }
    }

    #[test]
    fn simplex_projection_matches_brute_force_on_small_inputs() {
        let mut rng = derive_stream(23, 0);
        for _ in 0..200 {
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = project_simplex(&y);
            let dist = |x: &[f64]| sub(x, &y).iter().map(|v| v * v).sum::<f64>();
            let mut best = f64::INFINITY;
            let steps = 400;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let a = i as f64 / steps as f64;
                    let b = j as f64 / steps as f64;
                    best = best.min(dist(&[a, b, 1.0 - a - b]));
                }
            }
            assert!(dist(&p) <= best + 1e-12);
            assert!(approx(p.iter().sum::<f64>(), 1.0, 1e-12));
        }
    }
}
