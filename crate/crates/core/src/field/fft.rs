use super::{FieldError, Poly, PrimeField};

fn log2_exact(size: usize) -> Result<u32, FieldError> {
    if size == 0 || !size.is_power_of_two() {
        return Err(FieldError::NotPowerOfTwo(size));
    }
    Ok(size.trailing_zeros())
}

fn bit_reverse_permute<F>(values: &mut [F]) {
    let n = values.len();
    let bits = n.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            values.swap(i, j);
        }
    }
}

/// In-place radix-2 transform with primitive root `root` of order `values.len()`.
fn ntt_in_place<F: PrimeField>(values: &mut [F], root: F) {
    let n = values.len();
    bit_reverse_permute(values);
    let mut half = 1;
    while half < n {
        let step = root.pow((n / (2 * half)) as u64);
        let mut twiddles = Vec::with_capacity(half);
        let mut t = F::one();
        for _ in 0..half {
            twiddles.push(t);
            t *= step;
        }
        for chunk in values.chunks_exact_mut(2 * half) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((a, b), &tw) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let u = *a;
                let v = *b * tw;
                *a = u + v;
                *b = u - v;
            }
        }
        half *= 2;
    }
}

/// Evaluates the polynomial with coefficients `coeffs` (zero padded) at all
/// `size`-th roots of unity: `out[i] = P(omega^i)` with `omega = g^(2^L / size)`.
pub fn fft<F: PrimeField>(coeffs: &[F], size: usize) -> Result<Vec<F>, FieldError> {
    let log = log2_exact(size)?;
    let root = F::root_of_unity(log)?;
    if coeffs.len() > size {
        return Err(FieldError::TooManyCoefficients {
            len: coeffs.len(),
            size,
        });
    }
    let mut values = coeffs.to_vec();
    values.resize(size, F::zero());
    ntt_in_place(&mut values, root);
    Ok(values)
}

/// Inverse of [`fft`]: the unique polynomial of degree `< evals.len()`
/// taking the given values on the roots of unity.
pub fn ifft<F: PrimeField>(evals: &[F]) -> Result<Poly<F>, FieldError> {
    let size = evals.len();
    let log = log2_exact(size)?;
    let root = F::root_of_unity(log)?;
    let inv_root = root.inverse().expect("root of unity is nonzero");
    let mut values = evals.to_vec();
    ntt_in_place(&mut values, inv_root);
    let inv_n = F::from_u64(size as u64)
        .inverse()
        .expect("domain size is invertible");
    for v in &mut values {
        *v *= inv_n;
    }
    Ok(Poly::new(values))
}

/// Evaluates at `shift * omega^i` for `i < size`.
pub fn coset_fft<F: PrimeField>(coeffs: &[F], size: usize, shift: F) -> Result<Vec<F>, FieldError> {
    let mut scaled = coeffs.to_vec();
    let mut s = F::one();
    for c in &mut scaled {
        *c *= s;
        s *= shift;
    }
    fft(&scaled, size)
}

/// Interpolates values given on the coset `shift * <omega>`.
pub fn coset_ifft<F: PrimeField>(evals: &[F], shift: F) -> Result<Poly<F>, FieldError> {
    let mut poly = ifft(evals)?;
    let inv_shift = shift.inverse().expect("coset shift must be nonzero");
    let mut s = F::one();
    for c in poly.coeffs.iter_mut() {
        *c *= s;
        s *= inv_shift;
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Goldilocks, Toy257};
    use num_traits::{One, Zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn naive_eval<F: PrimeField>(coeffs: &[F], size: usize) -> Vec<F> {
        let omega = F::root_of_unity(size.trailing_zeros()).unwrap();
        (0..size)
            .map(|i| {
                let x = omega.pow(i as u64);
                let mut acc = F::zero();
                let mut xp = F::one();
                for &c in coeffs {
                    acc += c * xp;
                    xp *= x;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn constant_polynomial_evaluates_to_constant() {
        let c = Toy257::from_u64(42);
        let out = fft(&[c, Toy257::zero(), Toy257::zero(), Toy257::zero()], 4).unwrap();
        assert_eq!(out, vec![c; 4]);
        let back = ifft(&out).unwrap();
        assert_eq!(back.coeffs, vec![c, Toy257::zero(), Toy257::zero(), Toy257::zero()]);
    }

    #[test]
    fn identity_polynomial_gives_fourth_roots_of_unity() {
        // The 4th roots of unity mod 257 are the roots of x^4 = 1: {1, 16, 256, 241}.
        let out = fft(&[Toy257::zero(), Toy257::one()], 4).unwrap();
        let mut got: Vec<u64> = out.iter().map(|v| v.to_canonical()).collect();
        got.sort();
        assert_eq!(got, vec![1, 16, 241, 256]);
        for v in &out {
            assert_eq!(v.pow(4), Toy257::one());
        }
    }

    #[test]
    fn size_two_inverse_matches_hand_solution() {
        let (a, b) = (Toy257::from_u64(10), Toy257::from_u64(3));
        let p = ifft(&[a, b]).unwrap();
        let two = Toy257::from_u64(2);
        assert_eq!(p.coeffs, vec![(a + b) / two, (a - b) / two]);
    }

    #[test]
    fn fft_matches_naive_evaluation_for_all_small_sizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for log in 0..=5 {
            let size = 1usize << log;
            for len in 0..=size {
                let coeffs: Vec<Toy257> = (0..len).map(|_| Toy257::random(&mut rng)).collect();
                assert_eq!(fft(&coeffs, size).unwrap(), naive_eval(&coeffs, size));
            }
        }
    }

    #[test]
    fn roundtrip_on_random_vectors() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let v: Vec<Goldilocks> = (0..64).map(|_| Goldilocks::random(&mut rng)).collect();
            let p = ifft(&v).unwrap();
            assert_eq!(fft(&p.coeffs, 64).unwrap(), v);
            assert_eq!(ifft(&fft(&v, 64).unwrap()).unwrap().coeffs, v);
        }
    }

    #[test]
    fn coset_transforms_roundtrip_and_match_direct_evaluation() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let shift = Toy257::from_u64(3);
        let coeffs: Vec<Toy257> = (0..8).map(|_| Toy257::random(&mut rng)).collect();
        let evals = coset_fft(&coeffs, 8, shift).unwrap();
        let omega = Toy257::root_of_unity(3).unwrap();
        let poly = Poly::new(coeffs.clone());
        for (i, e) in evals.iter().enumerate() {
            assert_eq!(*e, poly.evaluate(shift * omega.pow(i as u64)));
        }
        assert_eq!(coset_ifft(&evals, shift).unwrap().coeffs, coeffs);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(fft::<Toy257>(&[], 3), Err(FieldError::NotPowerOfTwo(3)));
        assert!(matches!(
            fft::<Toy257>(&[], 512),
            Err(FieldError::SizeExceedsTwoAdicity { .. })
        ));
        assert!(matches!(
            fft(&[Toy257::one(); 5], 4),
            Err(FieldError::TooManyCoefficients { .. })
        ));
        assert!(ifft::<Toy257>(&[Toy257::one(); 6]).is_err());
    }
}
