//! Stochastic first-order oracles with hard-bounded noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{random_orthogonal, DualVector, NormPair, PrimalPoint, Regularizer, Shape};
use crate::symlinalg::SymMatrix;

/// Generator used for every stochastic component.
pub type Stream = ChaCha8Rng;

/// Independent, reproducible generator for run `run_index` under `base_seed`.
///
/// Distinct run indices select distinct ChaCha streams of the same key, so
/// they never overlap.
pub fn derive_stream(base_seed: u64, run_index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run_index);
    rng
}

/// A gradient selection on a domain.
pub trait GradientField: Sync {
    fn gradient(&self, x: &PrimalPoint) -> Result<DualVector>;
    fn domain(&self) -> &Regularizer;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Perfect oracle.
    None,
    /// Independent ±σ per coordinate; saturates the L∞ bound.
    CoordinateRademacher,
    /// Uniform direction with radius σ·u, u ~ U[0,1]; bounded in L2.
    SphericalUniform,
    /// `R diag(±σ) Rᵀ` for a random orthogonal R; spectral norm exactly σ.
    SpectralRademacher,
    /// Gaussian noise rejected outside the dual-norm ball of radius σ.
    TruncatedNormal,
}

impl NoiseModel {
    /// Hard-bounded default for a given norm pair.
    pub fn default_for(norms: NormPair) -> Self {
        match norms {
            NormPair::L1Linf => NoiseModel::CoordinateRademacher,
            NormPair::L2L2 => NoiseModel::SphericalUniform,
            NormPair::NuclearSpectral => NoiseModel::SpectralRademacher,
        }
    }

    /// Draws one noise vector with dual norm at most `sigma`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        shape: Shape,
        norms: NormPair,
        sigma: f64,
        rng: &mut R,
    ) -> Vec<f64> {
        let d = shape.len();
        match self {
            NoiseModel::None => vec![0.0; d],
            NoiseModel::CoordinateRademacher => match shape {
                Shape::Vector(_) => (0..d)
                    .map(|_| if rng.random::<bool>() { sigma } else { -sigma })
                    .collect(),
                Shape::Symmetric(n) => {
                    // symmetric ±σ/n entries keep the spectral norm below σ
                    let mut out = vec![0.0; d];
                    for i in 0..n {
                        for j in i..n {
                            let v = if rng.random::<bool>() { sigma } else { -sigma } / n as f64;
                            out[i * n + j] = v;
                            out[j * n + i] = v;
                        }
                    }
                    out
                }
            },
            NoiseModel::SphericalUniform => {
                let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let norm = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
                let radius = sigma * rng.random::<f64>();
                let mut out: Vec<f64> = g.iter().map(|v| radius * v / norm).collect();
                if let Shape::Symmetric(n) = shape {
                    symmetrize_in_place(n, &mut out);
                }
                out
            }
            NoiseModel::SpectralRademacher => {
                let n = match shape {
                    Shape::Symmetric(n) => n,
                    Shape::Vector(d) => {
                        // vector analogue: ±σ along a random orthonormal frame would
                        // break the L∞ bound, so fall back to Rademacher coordinates
                        return NoiseModel::CoordinateRademacher.sample(
                            Shape::Vector(d),
                            norms,
                            sigma,
                            rng,
                        );
                    }
                };
                let basis = random_orthogonal(n, rng);
                let signs: Vec<f64> = (0..n)
                    .map(|_| if rng.random::<bool>() { sigma } else { -sigma })
                    .collect();
                basis.recompose(&signs).into_vec()
            }
            NoiseModel::TruncatedNormal => {
                let scale = match norms {
                    NormPair::L1Linf => 0.5,
                    NormPair::L2L2 => 0.5 / (d as f64).sqrt(),
                    NormPair::NuclearSpectral => 0.25 / (d as f64).sqrt().sqrt(),
                };
                let normal = Normal::new(0.0, scale * sigma).expect("finite scale");
                loop {
                    let mut out: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
                    if let Shape::Symmetric(n) = shape {
                        symmetrize_in_place(n, &mut out);
                    }
                    if norms.dual_norm(&out) <= sigma {
                        return out;
                    }
                }
            }
        }
    }
}

fn symmetrize_in_place(n: usize, out: &mut [f64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[i * n + j] + out[j * n + i]);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
}

/// A stochastic first-order oracle `g = ∇f(x) + U`, with `‖U‖_* ≤ σ`.
///
/// Single-consumer: it owns its generator and query counter.
pub struct Oracle<'a> {
    field: &'a dyn GradientField,
    noise: NoiseModel,
    sigma: f64,
    queries: u64,
    rng: Stream,
}

impl<'a> Oracle<'a> {
    pub fn new(
        field: &'a dyn GradientField,
        noise: NoiseModel,
        sigma: f64,
        rng: Stream,
    ) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("noise level must be finite and nonnegative, got {sigma}")));
        }
        if (noise == NoiseModel::None) != (sigma == 0.0) {
            return Err(Error::invalid(
                "noise model `none` must be paired with sigma = 0 and vice versa",
            ));
        }
        Ok(Oracle {
            field,
            noise,
            sigma,
            queries: 0,
            rng,
        })
    }

    /// Noiseless oracle.
    pub fn perfect(field: &'a dyn GradientField) -> Self {
        Oracle {
            field,
            noise: NoiseModel::None,
            sigma: 0.0,
            queries: 0,
            rng: derive_stream(0, 0),
        }
    }

    /// Oracle with the default hard-bounded noise for the domain's norm pair.
    pub fn with_default_noise(field: &'a dyn GradientField, sigma: f64, rng: Stream) -> Result<Self> {
        let noise = if sigma == 0.0 {
            NoiseModel::None
        } else {
            NoiseModel::default_for(field.domain().norms())
        };
        Self::new(field, noise, sigma, rng)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    pub fn is_perfect(&self) -> bool {
        self.sigma == 0.0
    }

    pub fn field(&self) -> &'a dyn GradientField {
        self.field
    }

    /// Returns a fresh gradient signal at `x`.
    pub fn query(&mut self, x: &PrimalPoint) -> Result<DualVector> {
        let domain = self.field.domain();
        domain.check_point(x)?;
        let mut g = self.field.gradient(x)?;
        self.queries += 1;
        if self.noise != NoiseModel::None {
            let u = self
                .noise
                .sample(g.shape(), domain.norms(), self.sigma, &mut self.rng);
            for (gi, ui) in g.as_mut_slice().iter_mut().zip(&u) {
                *gi += ui;
            }
        }
        Ok(g)
    }
}

/// Symmetric noise matrix helper for tests and callers that work on matrices.
pub fn sample_symmetric_noise<R: Rng + ?Sized>(
    model: NoiseModel,
    n: usize,
    sigma: f64,
    rng: &mut R,
) -> SymMatrix {
    let raw = model.sample(Shape::Symmetric(n), NormPair::NuclearSpectral, sigma, rng);
    SymMatrix::symmetrized(n, raw).expect("square storage")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dot;

    struct Linear {
        reg: Regularizer,
        c: Vec<f64>,
    }

    impl GradientField for Linear {
        fn gradient(&self, _x: &PrimalPoint) -> Result<DualVector> {
            Ok(DualVector::vector(self.c.clone()))
        }
        fn domain(&self) -> &Regularizer {
            &self.reg
        }
    }

    fn linear(d: usize) -> Linear {
        Linear {
            reg: Regularizer::entropic_simplex(d).unwrap(),
            c: (0..d).map(|i| i as f64 * 0.1).collect(),
        }
    }

    #[test]
    fn perfect_oracle_is_exact_and_counts() {
        let f = linear(4);
        let mut o = Oracle::perfect(&f);
        let x = f.reg.prox_center().clone();
        let a = o.query(&x).unwrap();
        let b = o.query(&x).unwrap();
        assert_eq!(a.as_slice(), f.c.as_slice());
        assert_eq!(a, b);
        assert_eq!(o.query_count(), 2);
    }

    #[test]
    fn rademacher_noise_saturates_bound() {
        let f = linear(10);
        let mut o = Oracle::with_default_noise(&f, 0.1, derive_stream(3, 0)).unwrap();
        let x = f.reg.prox_center().clone();
        for _ in 0..1000 {
            let g = o.query(&x).unwrap();
            let u: Vec<f64> = g.as_slice().iter().zip(&f.c).map(|(a, b)| a - b).collect();
            let sup = NormPair::L1Linf.dual_norm(&u);
            assert!((sup - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn monte_carlo_mean_is_unbiased() {
        let f = linear(5);
        let mut o = Oracle::with_default_noise(&f, 0.1, derive_stream(4, 0)).unwrap();
        let x = f.reg.prox_center().clone();
        let n = 100_000;
        let mut mean = vec![0.0; 5];
        for _ in 0..n {
            let g = o.query(&x).unwrap();
            for (m, v) in mean.iter_mut().zip(g.as_slice()) {
                *m += v / n as f64;
            }
        }
        // 5·σ/√N
        let tol = 5.0 * 0.1 / (n as f64).sqrt();
        assert!(tol <= 0.002);
        for (m, c) in mean.iter().zip(&f.c) {
            assert!((m - c).abs() <= tol, "{m} vs {c}");
        }
    }

    #[test]
    fn every_model_respects_hard_bound_and_is_centered() {
        let cases = [
            (NoiseModel::CoordinateRademacher, Shape::Vector(8), NormPair::L1Linf),
            (NoiseModel::TruncatedNormal, Shape::Vector(8), NormPair::L1Linf),
            (NoiseModel::SphericalUniform, Shape::Vector(8), NormPair::L2L2),
            (NoiseModel::TruncatedNormal, Shape::Vector(8), NormPair::L2L2),
            (NoiseModel::SpectralRademacher, Shape::Symmetric(3), NormPair::NuclearSpectral),
            (NoiseModel::CoordinateRademacher, Shape::Symmetric(3), NormPair::NuclearSpectral),
            (NoiseModel::TruncatedNormal, Shape::Symmetric(3), NormPair::NuclearSpectral),
        ];
        let sigma = 0.3;
        for (k, (model, shape, norms)) in cases.into_iter().enumerate() {
            let mut rng = derive_stream(11, k as u64);
            let n = 100_000;
            let mut mean = vec![0.0; shape.len()];
            for _ in 0..n {
                let u = model.sample(shape, norms, sigma, &mut rng);
                assert!(norms.dual_norm(&u) <= sigma * (1.0 + 1e-12), "{model:?}");
                for (m, v) in mean.iter_mut().zip(&u) {
                    *m += v / n as f64;
                }
            }
            assert!(norms.dual_norm(&mean) <= 0.02 * sigma, "{model:?} mean {mean:?}");
        }
    }

    #[test]
    fn none_iff_zero_sigma() {
        let f = linear(3);
        assert!(Oracle::new(&f, NoiseModel::None, 0.1, derive_stream(0, 0)).is_err());
        assert!(Oracle::new(&f, NoiseModel::CoordinateRademacher, 0.0, derive_stream(0, 0)).is_err());
        assert!(Oracle::new(&f, NoiseModel::CoordinateRademacher, -1.0, derive_stream(0, 0)).is_err());
    }

    #[test]
    fn query_outside_domain_fails() {
        let f = linear(3);
        let mut o = Oracle::perfect(&f);
        let bad = PrimalPoint::vector(vec![0.7, 0.7, -0.4]);
        assert!(matches!(o.query(&bad), Err(Error::Domain(_))));
        assert_eq!(o.query_count(), 0);
    }

    #[test]
    fn streams_are_reproducible_and_separated() {
        let draw = |s: u64, r: u64| {
            let mut rng = derive_stream(s, r);
            (0..100).map(|_| rng.random::<u64>()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42, 0), draw(42, 0));
        assert_ne!(draw(42, 0), draw(42, 1));
        assert_ne!(draw(42, 0), draw(43, 0));
        let a = draw(42, 0);
        let b = draw(42, 1);
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn spectral_noise_is_symmetric() {
        let mut rng = derive_stream(2, 2);
        let m = sample_symmetric_noise(NoiseModel::SpectralRademacher, 4, 0.5, &mut rng);
        assert!(m.asymmetry() <= 1e-15);
        let u = m.as_slice();
        assert!((NormPair::NuclearSpectral.dual_norm(u) - 0.5).abs() < 1e-10);
        assert!(dot(u, u) > 0.0);
    }
}
