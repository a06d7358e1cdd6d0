use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symlinalg::SymMatrix;

/// Layout of an element of the primal space or its dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    /// Dense vector of the given length.
    Vector(usize),
    /// Dense symmetric matrix of the given side, stored row-major (`n²` entries).
    Symmetric(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(d) => d,
            Shape::Symmetric(n) => n * n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

macro_rules! dense_element {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            shape: Shape,
            data: Vec<f64>,
        }

        impl $name {
            pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
                if data.len() != shape.len() {
                    return Err(Error::invalid(format!(
                        "{} expects {} entries, got {}",
                        stringify!($name),
                        shape.len(),
                        data.len()
                    )));
                }
                Ok($name { shape, data })
            }

            pub fn vector(data: Vec<f64>) -> Self {
                $name {
                    shape: Shape::Vector(data.len()),
                    data,
                }
            }

            pub fn matrix(m: SymMatrix) -> Self {
                let n = m.side();
                $name {
                    shape: Shape::Symmetric(n),
                    data: m.into_vec(),
                }
            }

            pub fn zeros(shape: Shape) -> Self {
                $name {
                    shape,
                    data: vec![0.0; shape.len()],
                }
            }

            pub fn shape(&self) -> Shape {
                self.shape
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.data
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.data
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.data
            }

            pub fn is_finite(&self) -> bool {
                self.data.iter().all(|v| v.is_finite())
            }

            /// Matrix view; fails for vector-shaped elements.
            pub fn to_sym(&self) -> Result<SymMatrix> {
                match self.shape {
                    Shape::Symmetric(n) => SymMatrix::symmetrized(n, self.data.clone()),
                    Shape::Vector(_) => Err(Error::invalid("element is not matrix-valued")),
                }
            }

            #[allow(dead_code)]
            pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
                debug_assert_eq!(data.len(), self.data.len());
                $name {
                    shape: self.shape,
                    data,
                }
            }
        }
    };
}

dense_element!(PrimalPoint);
dense_element!(DualVector);

/// `⟨y, x⟩` (Frobenius pairing for matrices).
pub fn pairing(y: &DualVector, x: &PrimalPoint) -> f64 {
    dot(y.as_slice(), x.as_slice())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s·b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}
