//! Hybrid quadrature over interior nodal values and the discrete norms.
//!
//! For `V = (V_1, ..., V_{M-1})` with `M = 2(M' + 3)`:
//!
//! ```text
//! Q_h(V) = 4h/3 (2V_1 - V_2 + 2V_3)
//!        + h/3 Σ_{i=2}^{M'} (V_{2i} + 4V_{2i+1} + V_{2i+2})
//!        + 4h/3 (2V_{2M'+3} - V_{2M'+4} + 2V_{2M'+5})
//! ```
//!
//! The two end pieces are Milne's open rule over four cells, so `V_0` and
//! `V_M` never enter. The rule is exact for cubics.

use crate::error::{Error, Result};

/// Nodal values at `x_1, ..., x_{M-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorVector {
    values: Vec<f64>,
    h: f64,
}

impl InteriorVector {
    /// Fails unless `values.len() == 2(M' + 3) - 1` for some `M' >= 1`.
    pub fn new(values: Vec<f64>, h: f64) -> Result<Self> {
        m_prime_for_len(values.len())?;
        Ok(Self { values, h })
    }

    /// Samples `f` at the interior nodes `x_i = i h`.
    pub fn from_fn(len: usize, h: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((1..=len).map(|i| f(i as f64 * h)).collect(), h)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn m_prime(&self) -> usize {
        (self.values.len() - 5) / 2
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            h: self.h,
        }
    }
}

fn m_prime_for_len(len: usize) -> Result<usize> {
    if len < 7 || len.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "interior vector length {len} is not 2(M'+3)-1 for any M' >= 1"
        )));
    }
    Ok((len - 5) / 2)
}

/// `Q_h(v)`.
pub fn qh(v: &InteriorVector) -> f64 {
    qh_slice(&v.values, v.h)
}

/// `Q_h` on a raw slice; checks the length.
pub fn qh_values(values: &[f64], h: f64) -> Result<f64> {
    m_prime_for_len(values.len())?;
    Ok(qh_slice(values, h))
}

// Summation order is fixed: left Milne piece, Simpson panels left to right,
// right Milne piece.
pub(crate) fn qh_slice(v: &[f64], h: f64) -> f64 {
    debug_assert!(v.len() >= 7 && v.len() % 2 == 1);
    let n = v.len();
    let m_prime = (n - 5) / 2;
    // v[j] holds V_{j+1}
    let left = 4.0 * h / 3.0 * (2.0 * v[0] - v[1] + 2.0 * v[2]);
    let mut middle = 0.0;
    for i in 2..=m_prime {
        middle += v[2 * i - 1] + 4.0 * v[2 * i] + v[2 * i + 1];
    }
    let right = 4.0 * h / 3.0 * (2.0 * v[n - 3] - v[n - 2] + 2.0 * v[n - 1]);
    left + h / 3.0 * middle + right
}

/// `Q_h(u · w)` without allocating the product.
pub(crate) fn qh_product(u: &[f64], w: &[f64], h: f64) -> f64 {
    debug_assert_eq!(u.len(), w.len());
    let n = u.len();
    let m_prime = (n - 5) / 2;
    let p = |j: usize| u[j] * w[j];
    let left = 4.0 * h / 3.0 * (2.0 * p(0) - p(1) + 2.0 * p(2));
    let mut middle = 0.0;
    for i in 2..=m_prime {
        middle += p(2 * i - 1) + 4.0 * p(2 * i) + p(2 * i + 1);
    }
    let right = 4.0 * h / 3.0 * (2.0 * p(n - 3) - p(n - 2) + 2.0 * p(n - 1));
    left + h / 3.0 * middle + right
}

/// Weights `w` with `Q_h(V) = Σ w_i V_i` (up to rounding).
pub fn qh_weights(len: usize, h: f64) -> Result<Vec<f64>> {
    let m_prime = m_prime_for_len(len)?;
    let mut w = vec![0.0; len];
    let milne = [8.0 * h / 3.0, -4.0 * h / 3.0, 8.0 * h / 3.0];
    w[..3].copy_from_slice(&milne);
    w[len - 3..].copy_from_slice(&milne);
    for i in 2..=m_prime {
        w[2 * i - 1] += h / 3.0;
        w[2 * i] += 4.0 * h / 3.0;
        w[2 * i + 1] += h / 3.0;
    }
    Ok(w)
}

/// Componentwise product `U · V`.
pub fn pointwise_product(u: &InteriorVector, v: &InteriorVector) -> Result<InteriorVector> {
    if u.len() != v.len() || u.h != v.h {
        return Err(Error::DimensionMismatch(format!(
            "pointwise product of lengths {} and {} (h = {} vs {})",
            u.len(),
            v.len(),
            u.h,
            v.h
        )));
    }
    Ok(InteriorVector {
        values: u.values.iter().zip(&v.values).map(|(a, b)| a * b).collect(),
        h: u.h,
    })
}

/// Discrete inner product `Σ_{i=1}^{M-1} h V_i W_i`.
pub fn inner_product(u: &InteriorVector, v: &InteriorVector) -> Result<f64> {
    Ok(pointwise_product(u, v)?.values.iter().sum::<f64>() * u.h)
}

/// `(Σ h V_i^2)^{1/2}`.
pub fn l2_norm(v: &InteriorVector) -> f64 {
    l2_slice(&v.values, v.h)
}

pub(crate) fn l2_slice(v: &[f64], h: f64) -> f64 {
    (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// `max_i |V_i|`.
pub fn inf_norm(v: &InteriorVector) -> f64 {
    inf_slice(&v.values)
}

pub(crate) fn inf_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Norm of a time trace, `(Σ_{n=0}^{N} k z_n^2)^{1/2}`.
pub fn star_norm(z: &[f64], k: f64) -> f64 {
    (k * z.iter().map(|x| x * x).sum::<f64>()).sqrt()
}
