use serde::{Deserialize, Serialize};

use crate::symlinalg::{sym_eig, SymMatrix};

/// A primal norm together with its dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormPair {
    /// `‖·‖₁` on the primal side, `‖·‖_∞` on the dual side.
    L1Linf,
    L2L2,
    /// Nuclear norm (sum of absolute eigenvalues) / spectral norm.
    NuclearSpectral,
}

impl NormPair {
    pub fn primal_norm(&self, x: &[f64]) -> f64 {
        match self {
            NormPair::L1Linf => x.iter().map(|v| v.abs()).sum(),
            NormPair::L2L2 => l2(x),
            NormPair::NuclearSpectral => spectrum(x).iter().map(|l| l.abs()).sum(),
        }
    }

    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self {
            NormPair::L1Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormPair::L2L2 => l2(v),
            NormPair::NuclearSpectral => spectrum(v).iter().fold(0.0, |m, l| m.max(l.abs())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NormPair::L1Linf => "L1/Linf",
            NormPair::L2L2 => "L2/L2",
            NormPair::NuclearSpectral => "nuclear/spectral",
        }
    }
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn spectrum(x: &[f64]) -> Vec<f64> {
    let n = (x.len() as f64).sqrt().round() as usize;
    assert_eq!(n * n, x.len(), "matrix norm needs a square element");
    let m = SymMatrix::symmetrized(n, x.to_vec()).expect("square storage");
    sym_eig(&m).map(|e| e.eigenvalues).unwrap_or_else(|_| vec![f64::NAN])
}
