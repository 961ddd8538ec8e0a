use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("need k > t + e + w, got k={k}, t+e+w={sum}")]
    PrivacyBound { k: usize, sum: usize },
    #[error("need 3e < n - k, got e={e}, n={n}, k={k}")]
    ErrorBound { e: usize, n: usize, k: usize },
    #[error("k={0} is not a power of two")]
    KNotPowerOfTwo(usize),
    #[error("need n >= 2k + e for degree reduction and the equality test, got n={n}, k={k}, e={e}")]
    TooFewServers { n: usize, k: usize, e: usize },
    #[error("{0} must be positive")]
    Zero(&'static str),
    #[error("watchlist size t={t} exceeds n={n}")]
    WatchlistTooLarge { t: usize, n: usize },
}

/// Parameters of the outer protocol and its compilation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n: usize,
    pub w: usize,
    pub t: usize,
    pub e: usize,
    pub k: usize,
    /// Repetitions of each correctness test.
    pub sigma: usize,
    /// Computational security in bits.
    pub kappa: usize,
    /// Statistical security in bits.
    pub s: usize,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let ProtocolParams { n, w, t, e, k, sigma, .. } = *self;
        for (v, name) in [(n, "n"), (w, "w"), (t, "t"), (k, "k"), (sigma, "sigma")] {
            if v == 0 {
                return Err(ParamsError::Zero(name));
            }
        }
        if !k.is_power_of_two() {
            return Err(ParamsError::KNotPowerOfTwo(k));
        }
        if k <= t + e + w {
            return Err(ParamsError::PrivacyBound { k, sum: t + e + w });
        }
        if n < 2 * k + e {
            return Err(ParamsError::TooFewServers { n, k, e });
        }
        if 3 * e >= n - k {
            return Err(ParamsError::ErrorBound { e, n, k });
        }
        if t > n {
            return Err(ParamsError::WatchlistTooLarge { t, n });
        }
        Ok(())
    }

    /// Small parameters that fit the toy field: `n=20, k=8, w=2, t=2, e=2`.
    pub fn toy() -> Self {
        ProtocolParams {
            n: 20,
            w: 2,
            t: 2,
            e: 2,
            k: 8,
            sigma: 2,
            kappa: 128,
            s: 8,
        }
    }

    /// The smallest useful setting: `n=8, k=4, w=1, t=2, e=0`.
    pub fn tiny() -> Self {
        ProtocolParams {
            n: 8,
            w: 1,
            t: 2,
            e: 0,
            k: 4,
            sigma: 1,
            kappa: 128,
            s: 2,
        }
    }

    /// Outer-protocol soundness error `(e+2)/|F|^sigma`.
    pub fn outer_soundness(&self, modulus: u64) -> f64 {
        2f64.powf(self.outer_soundness_log2(modulus))
    }

    pub fn outer_soundness_log2(&self, modulus: u64) -> f64 {
        ((self.e + 2) as f64).log2() - self.sigma as f64 * (modulus as f64).log2()
    }

    /// Soundness error of the compiled protocol:
    /// `(e+2)/|F|^sigma + (1-e/n)^t + ((3e+2w+2t)/n)^t`.
    pub fn soundness_bound(&self, modulus: u64) -> f64 {
        let (n, t) = (self.n as f64, self.t as i32);
        let watch_miss = (1.0 - self.e as f64 / n).powi(t);
        let privacy = ((3 * self.e + 2 * self.w + 2 * self.t) as f64 / n).powi(t);
        self.outer_soundness(modulus) + watch_miss + privacy
    }

    pub fn soundness_bound_log2(&self, modulus: u64) -> f64 {
        self.soundness_bound(modulus).log2()
    }
}
