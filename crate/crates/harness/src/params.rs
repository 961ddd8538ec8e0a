//! Parameter selection.
//!
//! Search order, fixed so results are reproducible:
//! 1. `k` runs over powers of two from 4 while `2k < n`.
//! 2. For each `k` the largest feasible `w` is found by bisection.
//!    Feasibility is monotone in `w`: a witness `(t, e)` for `w` also serves
//!    `w - 1`.
//! 3. At that `w`, every `(t, e)` with `t` ascending then `e` ascending is
//!    scored, and the smallest soundness bound wins. The first one found
//!    wins ties.
//! 4. Across `k`, the larger `w` wins, with ties going to the smaller `k`.
//!
//! `sigma` is the smallest value with `(e+2)/|F|^sigma <= 2^-s`. It is
//! raised further while that alone keeps the total above `2^-s`.

use sac_core::outer::ProtocolParams;
use thiserror::Error;

pub const DEFAULT_KAPPA: usize = 128;
pub const DEFAULT_S: usize = 40;
const MAX_SIGMA: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("n={n} admits no power-of-two k with 4 <= k and 2k < n (binding: n >= 2k + e with k > t + e + w)")]
    TooFewServers { n: usize },
    #[error("no (w, t, e) at n={n} reaches soundness 2^-{s} (binding: the watchlist terms of the soundness bound; best found 2^{best_log2:.2})")]
    Soundness { n: usize, s: usize, best_log2: f64 },
}

/// Smallest `sigma` with `(e+2)/p^sigma <= 2^-s`.
pub fn default_sigma(e: usize, s: usize, modulus: u64) -> usize {
    let per = (modulus as f64).log2();
    let need = ((e + 2) as f64).log2() + s as f64;
    ((need / per).ceil() as usize).max(1)
}

fn with_sigma(mut p: ProtocolParams, s: usize, modulus: u64) -> Option<ProtocolParams> {
    p.sigma = default_sigma(p.e, s, modulus);
    if s == 0 {
        return Some(p);
    }
    let target = -(s as f64);
    while p.sigma <= MAX_SIGMA {
        if p.soundness_bound_log2(modulus) <= target {
            return Some(p);
        }
        // raising sigma only helps once the first term dominates
        if p.outer_soundness_log2(modulus) < p.soundness_bound_log2(modulus) - 1.0 {
            return None;
        }
        p.sigma += 1;
    }
    None
}

fn best_for(n: usize, k: usize, w: usize, s: usize, modulus: u64, best_log2: &mut f64) -> Option<ProtocolParams> {
    let mut best: Option<ProtocolParams> = None;
    for t in 1..k.saturating_sub(w) {
        for e in 0..k - w - t {
            let p = ProtocolParams {
                n,
                w,
                t,
                e,
                k,
                sigma: 1,
                kappa: DEFAULT_KAPPA,
                s,
            };
            if p.validate().is_err() {
                continue;
            }
            let log2 = p.soundness_bound_log2(modulus);
            *best_log2 = best_log2.min(log2);
            let Some(p) = with_sigma(p, s, modulus) else { continue };
            let better = match &best {
                None => true,
                Some(b) => p.soundness_bound(modulus) < b.soundness_bound(modulus),
            };
            if better {
                best = Some(p);
            }
        }
    }
    best
}

/// Parameters for `n` servers reaching statistical security `2^-s` over a
/// field of size `modulus`.
pub fn select_params(n: usize, s: usize, modulus: u64) -> Result<ProtocolParams, SelectError> {
    let ks: Vec<usize> = (2..usize::BITS).map(|i| 1usize << i).take_while(|&k| 2 * k < n).collect();
    if ks.is_empty() {
        return Err(SelectError::TooFewServers { n });
    }
    let mut best_log2 = f64::INFINITY;
    let mut chosen: Option<ProtocolParams> = None;
    for &k in &ks {
        let (mut lo, mut hi) = (0usize, k - 2);
        let mut found = None;
        // invariant: w = lo is feasible (or lo = 0), w > hi is not
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            match best_for(n, k, mid, s, modulus, &mut best_log2) {
                Some(p) => {
                    lo = mid;
                    found = Some(p);
                }
                None => hi = mid - 1,
            }
        }
        if lo > 0 && found.is_none_or(|p| p.w != lo) {
            found = best_for(n, k, lo, s, modulus, &mut best_log2);
        }
        if let Some(p) = found {
            if chosen.is_none_or(|c| p.w > c.w) {
                chosen = Some(p);
            }
        }
    }
    chosen.ok_or(SelectError::Soundness { n, s, best_log2 })
}
