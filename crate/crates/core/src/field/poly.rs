use std::ops::{Deref, DerefMut};

use super::{FieldError, PrimeField};

/// Polynomial in coefficient form, low degree first. Leading zeros are kept
/// so that fixed-length representations survive arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly<F> {
    pub coeffs: Vec<F>,
}

impl<F: PrimeField> Poly<F> {
    pub fn new(coeffs: Vec<F>) -> Self {
        Poly { coeffs }
    }

    pub fn zero(len: usize) -> Self {
        Poly {
            coeffs: vec![F::zero(); len],
        }
    }

    /// Degree of the polynomial, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn evaluate(&self, x: F) -> F {
        self.coeffs
            .iter()
            .rev()
            .fold(F::zero(), |acc, &c| acc * x + c)
    }

    pub fn evaluate_many(&self, xs: &[F]) -> Vec<F> {
        xs.iter().map(|&x| self.evaluate(x)).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::new(Vec::new());
        }
        let mut out = vec![F::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Monic polynomial vanishing exactly on `roots`.
    pub fn vanishing(roots: &[F]) -> Self {
        let mut coeffs = vec![F::one()];
        for &r in roots {
            let mut next = vec![F::zero(); coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            coeffs = next;
        }
        Poly::new(coeffs)
    }
}

impl<F> Deref for Poly<F> {
    type Target = [F];
    fn deref(&self) -> &[F] {
        &self.coeffs
    }
}

impl<F> DerefMut for Poly<F> {
    fn deref_mut(&mut self) -> &mut [F] {
        &mut self.coeffs
    }
}

fn check_distinct<F: PrimeField>(xs: &[F]) -> Result<(), FieldError> {
    let mut sorted: Vec<u64> = xs.iter().map(|x| x.to_canonical()).collect();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(FieldError::DuplicatePoint(w[0]));
    }
    Ok(())
}

/// Lagrange basis values `lambda_i(at)` for the nodes `xs`, so that any
/// polynomial `P` of degree `< xs.len()` satisfies `P(at) = sum_i lambda_i * P(xs[i])`.
pub fn lagrange_coefficients<F: PrimeField>(xs: &[F], at: F) -> Result<Vec<F>, FieldError> {
    if xs.is_empty() {
        return Err(FieldError::NoPoints);
    }
    check_distinct(xs)?;
    if let Some(hit) = xs.iter().position(|&x| x == at) {
        let mut out = vec![F::zero(); xs.len()];
        out[hit] = F::one();
        return Ok(out);
    }
    // Barycentric form: lambda_i = M(at) / ((at - x_i) * prod_{j != i}(x_i - x_j)).
    let m_at: F = xs.iter().map(|&x| at - x).product();
    let mut out = Vec::with_capacity(xs.len());
    for (i, &xi) in xs.iter().enumerate() {
        let mut denom = at - xi;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                denom *= xi - xj;
            }
        }
        out.push(m_at / denom);
    }
    Ok(out)
}

/// General-position Lagrange interpolation; the result has exactly
/// `points.len()` coefficients.
pub fn interpolate<F: PrimeField>(points: &[(F, F)]) -> Result<Poly<F>, FieldError> {
    if points.is_empty() {
        return Err(FieldError::NoPoints);
    }
    let xs: Vec<F> = points.iter().map(|p| p.0).collect();
    check_distinct(&xs)?;
    let n = points.len();
    let master = Poly::vanishing(&xs);
    let mut out = vec![F::zero(); n];
    for &(xi, yi) in points {
        // quotient q = master / (X - xi) by synthetic division
        let mut q = vec![F::zero(); n];
        let mut carry = F::zero();
        for d in (1..=n).rev() {
            carry = master.coeffs[d] + carry * xi;
            q[d - 1] = carry;
        }
        let denom = Poly::new(q.clone()).evaluate(xi);
        let scale = yi / denom;
        for (o, c) in out.iter_mut().zip(&q) {
            *o += *c * scale;
        }
    }
    Ok(Poly::new(out))
}
