//! Dense real-symmetric eigendecomposition and spectral matrix functions.
//!
//! Everything here works on small (n ≤ 64) row-major matrices. The
//! eigensolver is a cyclic Jacobi sweep, which is unconditionally stable on
//! symmetric input and needs no external linear algebra.

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-14;

/// A dense real symmetric `n × n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Wraps row-major storage, checking shape, finiteness and symmetry.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("matrix side must be positive"));
        }
        if data.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let m = SymMatrix { n, data };
        let asym = m.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::invalid(format!(
                "matrix is not symmetric (residual {asym:e})"
            )));
        }
        Ok(m)
    }

    /// Builds `(A + Aᵀ)/2` from an arbitrary square row-major array.
    pub fn symmetrized(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::invalid("storage does not match side"));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::from_row_major(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        SymMatrix { n, data }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    /// `Rᵀ A R` for a square `r` (row-major). Result is re-symmetrized.
    pub fn congruence(&self, r: &[f64]) -> SymMatrix {
        let n = self.n;
        let ar = matmul(n, &self.data, r);
        let rt = transpose(n, r);
        let out = matmul(n, &rt, &ar);
        SymMatrix::symmetrized(n, out).expect("congruence preserves shape")
    }
}

/// Spectral decomposition `A = V Λ Vᵀ` with eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomposition {
    /// Eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns of a row-major `n × n` orthogonal matrix.
    pub eigenvectors: Vec<f64>,
}

impl EigDecomposition {
    pub fn side(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.side();
        (0..n).map(|i| self.eigenvectors[i * n + k]).collect()
    }

    /// `V diag(values) Vᵀ` for an arbitrary spectrum.
    pub fn recompose(&self, values: &[f64]) -> SymMatrix {
        let n = self.side();
        let v = &self.eigenvectors;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += v[i * n + k] * values[k] * v[j * n + k];
                }
                out[i * n + j] = acc;
                out[j * n + i] = acc;
            }
        }
        SymMatrix { n, data: out }
    }

    /// `‖VᵀV − I‖_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.side();
        let vt = transpose(n, &self.eigenvectors);
        let g = matmul(n, &vt, &self.eigenvectors);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                acc += (g[i * n + j] - target).powi(2);
            }
        }
        acc.sqrt()
    }

    /// `‖A − VΛVᵀ‖_F`.
    pub fn reconstruction_residual(&self, a: &SymMatrix) -> f64 {
        let r = self.recompose(&self.eigenvalues);
        a.data
            .iter()
            .zip(&r.data)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Stops once the off-diagonal Frobenius norm drops below `1e-14·‖A‖_F`.
/// Output ordering is descending and each eigenvector is signed so that its
/// largest-magnitude component is positive.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomposition> {
    let n = a.n;
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if a.asymmetry() > SYMMETRY_TOL {
        return Err(Error::invalid("matrix is not symmetric"));
    }
    let mut m = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.frobenius();
    let target = OFF_DIAGONAL_TOL * scale;

    let off_norm = |m: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += m[i * n + j] * m[i * n + j];
                }
            }
        }
        acc.sqrt()
    };

    let mut converged = off_norm(&m) <= target;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::numerical(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        sweep += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // skip rotations that would not change the diagonal
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = !rotated || off_norm(&m) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[k * n + k]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        let mut best = 0usize;
        for i in 0..n {
            if v[i * n + k].abs() > v[best * n + k].abs() {
                best = i;
            }
        }
        let sign = if v[best * n + k] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[i * n + col] = sign * v[i * n + k];
        }
    }
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `V f(Λ) Vᵀ`. Fails with a domain error if `f` is not finite on the spectrum.
pub fn matrix_fn(a: &SymMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    spectral_map(&eig, f)
}

/// Applies `f` to an existing decomposition.
pub fn spectral_map(eig: &EigDecomposition, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    let mapped: Vec<f64> = eig.eigenvalues.iter().map(|&l| f(l)).collect();
    if let Some((k, _)) = mapped.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::domain(format!(
            "matrix function undefined at eigenvalue {:e}",
            eig.eigenvalues[k]
        )));
    }
    Ok(eig.recompose(&mapped))
}

/// Gradient of `log det A`, i.e. `A⁻¹`, for symmetric positive definite `A`.
pub fn sym_logdet_grad(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        return Err(Error::domain(format!(
            "matrix is not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    spectral_map(&eig, |l| 1.0 / l)
}

/// `log det A` for symmetric positive definite `A`.
pub fn sym_logdet(a: &SymMatrix) -> Result<f64> {
    let eig = sym_eig(a)?;
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::domain("matrix is not positive definite"));
    }
    Ok(eig.eigenvalues.iter().map(|l| l.ln()).sum())
}

/// Row-major square product.
pub fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}
