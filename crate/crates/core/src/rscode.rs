//! Reed-Solomon codes and packed secret sharing.
//!
//! Shares live at `eta_c = omega_N^c` for `c < n`, where `N` is the next power
//! of two `>= n`. A block of `w` secrets is packed at the first `w` points of
//! the odd coset `g_{2M} * H_k` (with `M = max(N, k)`); the remaining `k - w`
//! points of that coset carry the encoding randomness. Because the coset only
//! contains odd powers of `omega_{2M}` it never meets the share domain.

use std::collections::HashMap;
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{coset_ifft, fft, lagrange_coefficients, FieldError, Poly, PrimeField};

/// Largest number of `k`-subsets `distance_to_code` is willing to enumerate.
pub const MAX_DISTANCE_SEARCH: u128 = 250_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("invalid code parameters: {0}")]
    BadParameters(String),
    #[error("expected a vector of length {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("need at least {need} shares, got {got}")]
    TooFewShares { need: usize, got: usize },
    #[error("degree reduction needs n >= 2k (n = {n}, k = {k})")]
    NeedTwoK { n: usize, k: usize },
    #[error("exhaustive search over {combinations} subsets refused")]
    SearchTooLarge { combinations: u128 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Secret block of width `w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block<F> {
    pub secrets: Vec<F>,
}

/// Length-`n` vector of shares. Membership in a code is checked, not assumed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codeword<F> {
    pub shares: Vec<F>,
}

impl<F> Block<F> {
    pub fn new(secrets: Vec<F>) -> Self {
        Block { secrets }
    }
}

impl<F> Codeword<F> {
    pub fn new(shares: Vec<F>) -> Self {
        Codeword { shares }
    }
}

impl<F> Deref for Block<F> {
    type Target = [F];
    fn deref(&self) -> &[F] {
        &self.secrets
    }
}

impl<F> Deref for Codeword<F> {
    type Target = [F];
    fn deref(&self) -> &[F] {
        &self.shares
    }
}

impl<F> From<Vec<F>> for Codeword<F> {
    fn from(shares: Vec<F>) -> Self {
        Codeword { shares }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: PrimeField> Matrix<F> {
    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        let data: Vec<F> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), n * cols, "ragged matrix");
        Matrix {
            rows: n,
            cols,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    /// `self * v`, using only the first `cols` entries of `v`.
    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert!(v.len() >= self.cols, "vector shorter than matrix width");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }
}

#[inline]
pub(crate) fn dot<F: PrimeField>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[derive(Debug, Clone)]
struct BoundTables<F> {
    /// `w x bound`: values at the secret points from the first `bound` shares.
    decode: Matrix<F>,
    /// `(n - bound) x bound`: the remaining shares of the unique interpolant.
    extend: Matrix<F>,
}

/// An RS code `RS_{F,n,k,eta}` together with the packing points.
#[derive(Debug, Clone)]
pub struct CodeSpec<F> {
    n: usize,
    k: usize,
    w: usize,
    domain: usize,
    eta: Vec<F>,
    /// All `k` packing points; the first `w` are the secret points.
    zeta_full: Vec<F>,
    shift: F,
    /// `n x k` encoding matrix, only kept when `k` is not a power of two.
    enc_matrix: Option<Matrix<F>>,
    tables: HashMap<usize, BoundTables<F>>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

impl<F: PrimeField> CodeSpec<F> {
    pub fn new(n: usize, k: usize, w: usize) -> Result<Self, CodeError> {
        if w == 0 || w > k || k > n {
            return Err(CodeError::BadParameters(format!(
                "need 1 <= w <= k <= n, got n = {n}, k = {k}, w = {w}"
            )));
        }
        let domain = n.next_power_of_two();
        let k_pow = k.next_power_of_two();
        let big = 2 * domain.max(k_pow);
        let log_big = big.trailing_zeros();
        if log_big > F::TWO_ADICITY {
            return Err(FieldError::SizeExceedsTwoAdicity {
                log_size: log_big,
                two_adicity: F::TWO_ADICITY,
            }
            .into());
        }
        let omega_n = F::root_of_unity(domain.trailing_zeros())?;
        let eta: Vec<F> = (0..n).map(|c| omega_n.pow(c as u64)).collect();
        let shift = F::root_of_unity(log_big)?;
        let omega_k = F::root_of_unity(k_pow.trailing_zeros())?;
        let zeta_full: Vec<F> = (0..k).map(|s| shift * omega_k.pow(s as u64)).collect();

        let enc_matrix = if k.is_power_of_two() {
            None
        } else {
            let rows = eta
                .iter()
                .map(|&x| lagrange_coefficients(&zeta_full, x))
                .collect::<Result<Vec<_>, _>>()?;
            Some(Matrix::from_rows(rows))
        };

        let mut spec = CodeSpec {
            n,
            k,
            w,
            domain,
            eta,
            zeta_full,
            shift,
            enc_matrix,
            tables: HashMap::new(),
        };
        for bound in [k, k + w, 2 * k] {
            if bound <= n && !spec.tables.contains_key(&bound) {
                let t = spec.build_tables(bound)?;
                spec.tables.insert(bound, t);
            }
        }
        Ok(spec)
    }

    fn build_tables(&self, bound: usize) -> Result<BoundTables<F>, CodeError> {
        let nodes = &self.eta[..bound];
        let decode = self.zeta_full[..self.w]
            .iter()
            .map(|&z| lagrange_coefficients(nodes, z))
            .collect::<Result<Vec<_>, _>>()?;
        let extend = self.eta[bound..]
            .iter()
            .map(|&x| lagrange_coefficients(nodes, x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoundTables {
            decode: Matrix::from_rows(decode),
            extend: if extend.is_empty() {
                Matrix {
                    rows: 0,
                    cols: bound,
                    data: Vec::new(),
                }
            } else {
                Matrix::from_rows(extend)
            },
        })
    }

    fn with_tables<T>(&self, bound: usize, f: impl FnOnce(&BoundTables<F>) -> T) -> Result<T, CodeError> {
        if let Some(t) = self.tables.get(&bound) {
            return Ok(f(t));
        }
        let t = self.build_tables(bound)?;
        Ok(f(&t))
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn w(&self) -> usize {
        self.w
    }
    /// Share evaluation points.
    pub fn eta(&self) -> &[F] {
        &self.eta
    }
    /// Secret points.
    pub fn zeta(&self) -> &[F] {
        &self.zeta_full[..self.w]
    }
    /// Secret points followed by the `k - w` auxiliary packing points.
    pub fn packing_points(&self) -> &[F] {
        &self.zeta_full
    }

    /// Encodes with explicit values at the auxiliary points.
    pub fn encode_with(&self, block: &[F], aux: &[F]) -> Result<Codeword<F>, CodeError> {
        if block.len() != self.w {
            return Err(CodeError::WidthMismatch {
                expected: self.w,
                got: block.len(),
            });
        }
        if aux.len() != self.k - self.w {
            return Err(CodeError::WidthMismatch {
                expected: self.k - self.w,
                got: aux.len(),
            });
        }
        let mut values = Vec::with_capacity(self.k);
        values.extend_from_slice(block);
        values.extend_from_slice(aux);
        self.encode_values(&values)
    }

    fn encode_values(&self, values: &[F]) -> Result<Codeword<F>, CodeError> {
        if let Some(m) = &self.enc_matrix {
            return Ok(Codeword::new(m.mul_vec(values)));
        }
        let poly = coset_ifft(values, self.shift)?;
        let mut shares = fft(&poly.coeffs, self.domain)?;
        shares.truncate(self.n);
        Ok(Codeword::new(shares))
    }

    /// Random encoding of `block`: the `k - w` free values are uniform.
    pub fn encode<R: Rng + ?Sized>(&self, block: &[F], rng: &mut R) -> Result<Codeword<F>, CodeError> {
        let aux: Vec<F> = (0..self.k - self.w).map(|_| F::random(rng)).collect();
        self.encode_with(block, &aux)
    }

    /// Deterministic encoding with all auxiliary values zero.
    pub fn encode_deterministic(&self, block: &[F]) -> Result<Codeword<F>, CodeError> {
        let aux = vec![F::zero(); self.k - self.w];
        self.encode_with(block, &aux)
    }

    /// Uniformly random codeword of `L` encoding the all-zero block.
    pub fn random_zero_encoding<R: Rng + ?Sized>(&self, rng: &mut R) -> Codeword<F> {
        let zeros = vec![F::zero(); self.w];
        self.encode(&zeros, rng).expect("width matches")
    }

    /// Uniformly random codeword of `L`.
    pub fn random_codeword<R: Rng + ?Sized>(&self, rng: &mut R) -> Codeword<F> {
        let values: Vec<F> = (0..self.k).map(|_| F::random(rng)).collect();
        self.encode_values(&values).expect("sizes are fixed")
    }

    /// Evaluations at the share points of a polynomial of degree `< N`.
    pub fn evaluate_poly(&self, poly: &Poly<F>) -> Result<Codeword<F>, CodeError> {
        if poly.len() > self.domain {
            return Ok(Codeword::new(poly.evaluate_many(&self.eta)));
        }
        let mut shares = fft(&poly.coeffs, self.domain)?;
        shares.truncate(self.n);
        Ok(Codeword::new(shares))
    }

    /// Decodes at the standard bound `k`.
    pub fn decode(&self, cw: &[F]) -> Result<Block<F>, CodeError> {
        self.decode_bound(cw, self.k)
    }

    /// Interpolates the first `bound` shares and evaluates at the secret points.
    pub fn decode_bound(&self, cw: &[F], bound: usize) -> Result<Block<F>, CodeError> {
        if cw.len() < bound || bound == 0 {
            return Err(CodeError::TooFewShares {
                need: bound.max(1),
                got: cw.len(),
            });
        }
        if bound > self.n {
            return Err(CodeError::BadParameters(format!(
                "bound {bound} exceeds n = {}",
                self.n
            )));
        }
        self.with_tables(bound, |t| Block::new(t.decode.mul_vec(&cw[..bound])))
    }

    /// Decodes from an arbitrary set of `(position, share)` pairs, interpolating
    /// all of them.
    pub fn decode_from(&self, shares: &[(usize, F)]) -> Result<Block<F>, CodeError> {
        if shares.is_empty() {
            return Err(CodeError::TooFewShares { need: 1, got: 0 });
        }
        let xs: Vec<F> = shares.iter().map(|&(i, _)| self.eta[i]).collect();
        let mut out = Vec::with_capacity(self.w);
        for &z in self.zeta() {
            let lam = lagrange_coefficients(&xs, z)?;
            out.push(lam.iter().zip(shares).map(|(&l, &(_, y))| l * y).sum());
        }
        Ok(Block::new(out))
    }

    /// Whether `cw` agrees with a polynomial of degree `< bound` on all `n` points.
    pub fn is_codeword(&self, cw: &[F], bound: usize) -> bool {
        if cw.len() != self.n {
            return false;
        }
        if bound >= self.n {
            return true;
        }
        if bound == 0 {
            return cw.iter().all(|x| x.is_zero());
        }
        self.with_tables(bound, |t| {
            (0..t.extend.rows).all(|i| dot(t.extend.row(i), &cw[..bound]) == cw[bound + i])
        })
        .unwrap_or(false)
    }

    /// Degree reduction `A = Enc0 . Dec_{2k}` applied to `l` without
    /// materializing the matrix.
    pub fn reduce_degree(&self, l: &[F]) -> Result<Codeword<F>, CodeError> {
        if self.n < 2 * self.k {
            return Err(CodeError::NeedTwoK { n: self.n, k: self.k });
        }
        let block = self.decode_bound(l, 2 * self.k)?;
        self.encode_deterministic(&block)
    }

    /// Distance to the code `L` by enumeration of `k`-subsets. Returns the
    /// distance and the positions where `v` differs from the lexicographically
    /// first closest codeword.
    pub fn distance_to_code(&self, v: &[F]) -> Result<(usize, Vec<usize>), CodeError> {
        if v.len() != self.n {
            return Err(CodeError::WidthMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let combos = binomial(self.n, self.k);
        if combos > MAX_DISTANCE_SEARCH {
            return Err(CodeError::SearchTooLarge {
                combinations: combos,
            });
        }
        let mut best: Option<Vec<F>> = None;
        let mut best_agree = 0usize;
        let mut subset: Vec<usize> = (0..self.k).collect();
        loop {
            let xs: Vec<F> = subset.iter().map(|&i| self.eta[i]).collect();
            let ys: Vec<F> = subset.iter().map(|&i| v[i]).collect();
            let cand: Vec<F> = self
                .eta
                .iter()
                .map(|&x| {
                    let lam = lagrange_coefficients(&xs, x).expect("distinct points");
                    dot(&lam, &ys)
                })
                .collect();
            let agree = cand.iter().zip(v).filter(|(a, b)| a == b).count();
            let better = match &best {
                None => true,
                Some(b) => agree > best_agree || (agree == best_agree && cand < *b),
            };
            if better {
                best_agree = agree;
                best = Some(cand);
            }
            if !next_subset(&mut subset, self.n) {
                break;
            }
        }
        let best = best.expect("at least one subset");
        let delta: Vec<usize> = (0..self.n).filter(|&i| best[i] != v[i]).collect();
        Ok((delta.len(), delta))
    }
}

fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Materialized degree-reduction matrix `A` (`n x n`): for `l` of degree
/// `< 2k`, `A l` lies in `L` and decodes to the same block.
pub fn degree_reduce_matrix<F: PrimeField>(spec: &CodeSpec<F>) -> Result<Matrix<F>, CodeError> {
    let (n, k) = (spec.n, spec.k);
    if n < 2 * k {
        return Err(CodeError::NeedTwoK { n, k });
    }
    // column j of A is A e_j
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![F::zero(); n];
        e[j] = F::one();
        cols.push(spec.reduce_degree(&e)?.shares);
    }
    let rows = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Ok(Matrix::from_rows(rows))
}

/// Random polynomial of degree `< bound` vanishing on the secret points,
/// evaluated on the share domain.
pub fn random_zero_block_row<F: PrimeField, R: Rng + ?Sized>(
    spec: &CodeSpec<F>,
    bound: usize,
    rng: &mut R,
) -> Result<Codeword<F>, CodeError> {
    let w = spec.w();
    if bound < w {
        return Err(CodeError::BadParameters(format!(
            "bound {bound} below block width {w}"
        )));
    }
    let z = Poly::vanishing(spec.zeta());
    let h = Poly::new((0..bound - w).map(|_| F::random(rng)).collect());
    spec.evaluate_poly(&z.mul(&h))
}

/// Random polynomial of degree `< bound` whose values on the secret points
/// sum to zero, evaluated on the share domain.
pub fn random_sum_zero_row<F: PrimeField, R: Rng + ?Sized>(
    spec: &CodeSpec<F>,
    bound: usize,
    rng: &mut R,
) -> Result<Codeword<F>, CodeError> {
    if bound == 0 {
        return Err(CodeError::BadParameters("bound must be positive".into()));
    }
    let mut coeffs: Vec<F> = (0..bound).map(|_| F::random(rng)).collect();
    // adjust the constant term: sum_s P(zeta_s) = w * c0 + rest
    let rest: F = spec
        .zeta()
        .iter()
        .map(|&z| Poly::new(coeffs.clone()).evaluate(z) - coeffs[0])
        .sum();
    let w_inv = F::from_u64(spec.w() as u64)
        .inverse()
        .ok_or_else(|| CodeError::BadParameters("block width divisible by p".into()))?;
    coeffs[0] = -rest * w_inv;
    spec.evaluate_poly(&Poly::new(coeffs))
}
