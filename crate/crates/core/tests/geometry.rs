use proptest::prelude::*;
use undergrad::geometry::{DualVector, Geometry, NormPair, PrimalPoint, Regularizer};
use undergrad::oracle::derive_stream;
use undergrad::symlinalg::SymMatrix;

fn vec_point(v: &[f64]) -> PrimalPoint {
    PrimalPoint::vector(v.to_vec())
}

fn vec_dual(v: &[f64]) -> DualVector {
    DualVector::vector(v.to_vec())
}

fn entropy(x: &[f64]) -> f64 {
    x.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum()
}

/// Brute-force argmax of ⟨y,x⟩ − h(x) over a grid of the 2-simplex.
fn grid_argmax_2(y: &[f64; 2]) -> f64 {
    let n = 200_000;
    (1..n)
        .map(|i| i as f64 / n as f64)
        .map(|a| (a, y[0] * a + y[1] * (1.0 - a) - entropy(&[a, 1.0 - a])))
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
        .0
}

#[test]
fn table_constants() {
    let e = Regularizer::entropic_simplex(100).unwrap();
    assert_eq!(e.strong_convexity(), 1.0);
    assert!((e.range() - 100f64.ln()).abs() < 1e-15);
    assert_eq!(e.diameter(), 1.0);
    assert!((e.h_constant() - (100f64.ln() + 1.0).sqrt()).abs() < 1e-15);

    let v = Regularizer::von_neumann(4).unwrap();
    assert_eq!(v.dim(), 16);
    assert!((v.range() - 4f64.ln()).abs() < 1e-15);
    assert_eq!(v.diameter(), 1.0);

    let u = Regularizer::euclidean_unbounded(3).unwrap();
    assert!(u.range().is_infinite() && u.diameter().is_infinite());
    assert!(u.h_constant().is_infinite());
}

#[test]
fn prox_center_minimizes_h() {
    for reg in [
        Regularizer::entropic_simplex(5).unwrap(),
        Regularizer::von_neumann(3).unwrap(),
        Regularizer::euclidean_simplex(4).unwrap(),
        Regularizer::euclidean_unbounded(4).unwrap(),
    ] {
        let c = reg.prox_center();
        assert!(reg.contains(c));
        let hc = reg.value(c).unwrap();
        assert!((hc - reg.min_value()).abs() < 1e-12);
        let mut rng = derive_stream(1, 0);
        for _ in 0..200 {
            let x = reg.random_point(&mut rng);
            assert!(reg.value(&x).unwrap() >= hc - 1e-12);
        }
    }
}

#[test]
fn entropic_mirror_map_examples() {
    let reg = Regularizer::entropic_simplex(3).unwrap();
    let q = reg.mirror_map(&vec_dual(&[0.0; 3])).unwrap();
    for v in q.as_slice() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    let reg = Regularizer::entropic_simplex(2).unwrap();
    let y = [3f64.ln(), 0.0];
    let q = reg.mirror_map(&vec_dual(&y)).unwrap();
    let a = grid_argmax_2(&y);
    assert!((q.as_slice()[0] - a).abs() < 1e-3);
    assert!((q.as_slice()[0] - 0.75).abs() < 1e-12);
}

#[test]
fn entropic_mirror_map_survives_huge_inputs() {
    let reg = Regularizer::entropic_simplex(3).unwrap();
    let q = reg.mirror_map(&vec_dual(&[1e4, 0.0, -1e4])).unwrap();
    assert!(reg.contains(&q));
    assert!((q.as_slice()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn von_neumann_mirror_map_at_zero() {
    let reg = Regularizer::von_neumann(2).unwrap();
    let q = reg.mirror_map(&DualVector::matrix(SymMatrix::zeros(2))).unwrap();
    // scalar problem per eigenvalue: maximize −q log q − ... numerically for
    // the two-eigenvalue symmetric case q1 = q2 = q
    let obj = |q: f64| -(2.0 * q * q.ln() + (1.0 - 2.0 * q) * (1.0 - 2.0 * q).ln());
    let n = 100_000;
    let best = (1..n / 2)
        .map(|i| i as f64 / n as f64)
        .fold((0.0, f64::NEG_INFINITY), |b, q| if obj(q) > b.1 { (q, obj(q)) } else { b })
        .0;
    let s = q.as_slice();
    assert!((s[0] - 1.0 / 3.0).abs() < 1e-14 && (s[3] - 1.0 / 3.0).abs() < 1e-14);
    assert!(s[1].abs() < 1e-15 && s[2].abs() < 1e-15);
    assert!((s[0] - best).abs() < 1e-4);
}

#[test]
fn von_neumann_mirror_map_is_rotation_equivariant() {
    let reg = Regularizer::von_neumann(2).unwrap();
    let (c, s) = (0.6f64, 0.8f64);
    let lam = [1.0, -0.5];
    // Y = R diag(lam) Rᵀ
    let y = [
        c * c * lam[0] + s * s * lam[1],
        c * s * (lam[0] - lam[1]),
        c * s * (lam[0] - lam[1]),
        s * s * lam[0] + c * c * lam[1],
    ];
    let q = reg
        .mirror_map(&DualVector::matrix(SymMatrix::from_row_major(2, y.to_vec()).unwrap()))
        .unwrap();
    let z = 1.0 + lam[0].exp() + lam[1].exp();
    let mu = [lam[0].exp() / z, lam[1].exp() / z];
    let expect = [
        c * c * mu[0] + s * s * mu[1],
        c * s * (mu[0] - mu[1]),
        c * s * (mu[0] - mu[1]),
        s * s * mu[0] + c * c * mu[1],
    ];
    for (a, b) in q.as_slice().iter().zip(expect) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn euclidean_unbounded_mirror_map_is_identity() {
    let reg = Regularizer::euclidean_unbounded(3).unwrap();
    let y = vec_dual(&[1.5, -2.0, 7.0]);
    assert_eq!(reg.mirror_map(&y).unwrap().as_slice(), y.as_slice());
    assert!((reg.conjugate_value(&y).unwrap() - 0.5 * (2.25 + 4.0 + 49.0)).abs() < 1e-12);
}

#[test]
fn prox_map_examples() {
    let reg = Regularizer::entropic_simplex(2).unwrap();
    let x = vec_point(&[0.5, 0.5]);
    assert_eq!(reg.prox_map(&x, &vec_dual(&[0.0, 0.0])).unwrap(), x);
    let out = reg.prox_map(&x, &vec_dual(&[3f64.ln(), 0.0])).unwrap();
    // multiplicative weights: x_i e^{v_i} / Σ
    assert!((out.as_slice()[0] - 0.75).abs() < 1e-12);
    // direct argmin of ⟨-v, p⟩ + D(p, x) over a grid
    let n = 100_000;
    let best = (1..n)
        .map(|i| i as f64 / n as f64)
        .map(|a| {
            let p = [a, 1.0 - a];
            let div = p[0] * (p[0] / 0.5).ln() + p[1] * (p[1] / 0.5).ln();
            (a, -3f64.ln() * a + div)
        })
        .fold((0.0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
        .0;
    assert!((out.as_slice()[0] - best).abs() < 1e-3);

    let reg = Regularizer::euclidean_simplex(4).unwrap();
    let out = reg
        .prox_map(reg.prox_center(), &vec_dual(&[100.0, 0.0, 0.0, 0.0]))
        .unwrap();
    assert_eq!(out.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn bregman_divergence_examples() {
    let reg = Regularizer::entropic_simplex(2).unwrap();
    let x = vec_point(&[0.5, 0.5]);
    assert!(reg.bregman_div(&x, &x).unwrap().abs() < 1e-15);
    let p = vec_point(&[1.0, 0.0]);
    assert!((reg.bregman_div(&p, &x).unwrap() - 2f64.ln()).abs() < 1e-12);
    for eps in [1e-2, 1e-5, 1e-9] {
        let x = vec_point(&[1.0 - eps, eps]);
        let kl = -(1.0 - eps).ln();
        assert!((reg.bregman_div(&p, &x).unwrap() - kl).abs() < 1e-12);
    }
}

#[test]
fn conjugate_examples() {
    let reg = Regularizer::entropic_simplex(2).unwrap();
    assert!((reg.conjugate_value(&vec_dual(&[0.0, 0.0])).unwrap() - 2f64.ln()).abs() < 1e-15);

    let reg = Regularizer::entropic_simplex(3).unwrap();
    let mut rng = derive_stream(3, 0);
    for _ in 0..100 {
        let y = reg.random_dual(&mut rng, 5.0);
        let lse = y.as_slice().iter().map(|v| v.exp()).sum::<f64>().ln();
        assert!((reg.conjugate_value(&y).unwrap() - lse).abs() < 1e-12);
    }
}

#[test]
fn fenchel_coupling_examples() {
    let reg = Regularizer::entropic_simplex(2).unwrap();
    let f = reg.fenchel_coupling(&vec_point(&[1.0, 0.0]), &vec_dual(&[0.0, 0.0])).unwrap();
    assert!((f - 2f64.ln()).abs() < 1e-15);

    let reg = Regularizer::entropic_simplex(5).unwrap();
    let mut rng = derive_stream(4, 0);
    for _ in 0..10_000 {
        let y = reg.random_dual(&mut rng, 4.0);
        let q = reg.mirror_map(&y).unwrap();
        assert!(reg.fenchel_coupling(&q, &y).unwrap().abs() < 1e-12);
        let p = reg.random_point(&mut rng);
        let l1: f64 = q.as_slice().iter().zip(p.as_slice()).map(|(a, b)| (a - b).abs()).sum();
        assert!(reg.fenchel_coupling(&p, &y).unwrap() - 0.5 * l1 * l1 >= -1e-12);
    }
}

#[test]
fn regularizer_gradient_examples() {
    let reg = Regularizer::euclidean_unbounded(3).unwrap();
    let x = vec_point(&[1.0, -2.0, 0.5]);
    assert_eq!(reg.reg_grad(&x).unwrap().as_slice(), x.as_slice());

    let reg = Regularizer::entropic_simplex(2).unwrap();
    let g = reg.reg_grad(&vec_point(&[0.5, 0.5])).unwrap();
    for v in g.as_slice() {
        assert!((v - (1.0 - 2f64.ln())).abs() < 1e-15);
    }

    let reg = Regularizer::entropic_simplex(6).unwrap();
    let mut rng = derive_stream(5, 0);
    for _ in 0..100 {
        let x = reg.random_point(&mut rng);
        if x.as_slice().iter().any(|v| *v < 1e-3) {
            continue;
        }
        let g = reg.reg_grad(&x).unwrap();
        let h = 1e-6;
        for i in 0..6 {
            let mut a = x.as_slice().to_vec();
            let mut b = a.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (entropy(&a) - entropy(&b)) / (2.0 * h);
            assert!((fd - g.as_slice()[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn domain_checks_reject_bad_points() {
    let reg = Regularizer::entropic_simplex(3).unwrap();
    assert!(!reg.contains(&vec_point(&[0.5, 0.6, -0.1])));
    assert!(!reg.contains(&vec_point(&[0.5, 0.5, 0.1])));
    assert!(!reg.contains(&vec_point(&[f64::NAN, 0.5, 0.5])));
    assert!(reg.check_point(&vec_point(&[0.2, 0.3, 0.5])).is_ok());
    assert!(reg.reg_grad(&vec_point(&[1.0, 0.0, 0.0])).is_err());

    let reg = Regularizer::von_neumann(2).unwrap();
    let over = PrimalPoint::matrix(SymMatrix::diag(&[0.7, 0.6]));
    assert!(!reg.contains(&over));
    assert!(reg.contains(&PrimalPoint::matrix(SymMatrix::diag(&[0.3, 0.3]))));
    assert!(Regularizer::entropic_simplex(0).is_err());
}

#[test]
fn norm_pairs_are_dual() {
    // dual norm = max over the primal unit-ball vertices, for L1/L∞
    let v = [0.3, -1.7, 0.9];
    let l1 = NormPair::L1Linf;
    let vertex_max = (0..3)
        .flat_map(|i| [1.0, -1.0].map(|s| s * v[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((l1.dual_norm(&v) - vertex_max).abs() < 1e-15);

    // L2 is self-dual: sup over a fine circle grid
    let w = [0.6, -0.8];
    let grid = (0..100_000)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / 100_000.0)
        .map(|a| w[0] * a.cos() + w[1] * a.sin())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((NormPair::L2L2.dual_norm(&w) - grid).abs() < 1e-8);
}

#[test]
fn geometry_tags() {
    assert!(Geometry::EntropicSimplex.is_legendre());
    assert!(Geometry::VonNeumannSpectrahedron.is_legendre());
    assert!(!Geometry::EuclideanSimplex.is_legendre());
}

proptest! {
    #[test]
    fn mirror_map_stays_in_simplex(y in proptest::collection::vec(-50.0f64..50.0, 2..12)) {
        let reg = Regularizer::entropic_simplex(y.len()).unwrap();
        let q = reg.mirror_map(&vec_dual(&y)).unwrap();
        prop_assert!(reg.contains(&q));
        let e = Regularizer::euclidean_simplex(y.len()).unwrap();
        prop_assert!(e.contains(&e.mirror_map(&vec_dual(&y)).unwrap()));
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive(
        a in proptest::collection::vec(-10.0f64..10.0, 4),
        b in proptest::collection::vec(-10.0f64..10.0, 4),
        s in -5.0f64..5.0,
    ) {
        for n in [NormPair::L1Linf, NormPair::L2L2] {
            let sa: Vec<f64> = a.iter().map(|v| s * v).collect();
            let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert!((n.primal_norm(&sa) - s.abs() * n.primal_norm(&a)).abs() < 1e-9);
            prop_assert!((n.dual_norm(&sa) - s.abs() * n.dual_norm(&a)).abs() < 1e-9);
            prop_assert!(n.primal_norm(&ab) <= n.primal_norm(&a) + n.primal_norm(&b) + 1e-12);
            prop_assert!(n.dual_norm(&ab) <= n.dual_norm(&a) + n.dual_norm(&b) + 1e-12);
        }
    }

    #[test]
    fn mirror_map_matches_prox_from_center(seed in 0u64..1000) {
        let mut rng = derive_stream(seed, 0);
        for reg in [Regularizer::entropic_simplex(5).unwrap(), Regularizer::von_neumann(3).unwrap()] {
            let y = reg.random_dual(&mut rng, 3.0);
            let c = reg.prox_center();
            let v: Vec<f64> = y.as_slice().iter().zip(reg.reg_grad(c).unwrap().as_slice()).map(|(a, b)| a - b).collect();
            let via_prox = reg.prox_map(c, &DualVector::new(reg.shape(), v).unwrap()).unwrap();
            let direct = reg.mirror_map(&y).unwrap();
            for (a, b) in via_prox.as_slice().iter().zip(direct.as_slice()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
