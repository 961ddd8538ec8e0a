use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use rand::seq::index::sample;
use rand::Rng;

use super::{CryptoError, WatchKey};

/// Distinct indices of the watched servers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WatchlistSelection {
    n: usize,
    indices: Vec<usize>,
}

impl WatchlistSelection {
    pub fn new(n: usize, t: usize, mut indices: Vec<usize>) -> Result<Self, CryptoError> {
        let bad = || CryptoError::BadSelection {
            expected: t,
            n,
            got: indices.clone(),
        };
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != t || indices.len() != t || sorted.iter().any(|&i| i >= n) {
            return Err(bad());
        }
        indices.sort_unstable();
        Ok(WatchlistSelection { n, indices })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Self {
        assert!(t <= n);
        let mut indices = sample(rng, n, t).into_vec();
        indices.sort_unstable();
        WatchlistSelection { n, indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.indices.len()
    }
}

/// Ideal t-out-of-n OT as a local function.
pub fn ot_t_of_n(keys: &[WatchKey], sel: &WatchlistSelection) -> Result<Vec<WatchKey>, CryptoError> {
    if sel.n() != keys.len() {
        return Err(CryptoError::BadSelection {
            expected: sel.t(),
            n: keys.len(),
            got: sel.indices().to_vec(),
        });
    }
    Ok(sel.indices().iter().map(|&i| keys[i]).collect())
}

/// A party's interface to t-out-of-n OT. Instances are numbered; in each
/// instance one party plays sender and the other receiver.
pub trait ObliviousTransfer: Send {
    fn send(&mut self, instance: u32, keys: &[WatchKey]) -> Result<(), CryptoError>;
    fn receive(&mut self, instance: u32, sel: &WatchlistSelection) -> Result<Vec<WatchKey>, CryptoError>;
}

#[derive(Default)]
struct Hub {
    keys: Mutex<HashMap<u32, Vec<WatchKey>>>,
    ready: Condvar,
}

/// In-process trusted OT functionality shared by two endpoints. The sender
/// side never sees the selection.
pub struct IdealOtEndpoint {
    hub: Arc<Hub>,
    timeout: Duration,
}

pub fn ideal_ot_pair() -> (IdealOtEndpoint, IdealOtEndpoint) {
    let hub = Arc::new(Hub::default());
    let mk = || IdealOtEndpoint {
        hub: hub.clone(),
        timeout: Duration::from_secs(60),
    };
    (mk(), mk())
}

impl ObliviousTransfer for IdealOtEndpoint {
    fn send(&mut self, instance: u32, keys: &[WatchKey]) -> Result<(), CryptoError> {
        let mut g = self.hub.keys.lock().map_err(|_| CryptoError::OtUnavailable("poisoned".into()))?;
        g.insert(instance, keys.to_vec());
        self.hub.ready.notify_all();
        Ok(())
    }

    fn receive(&mut self, instance: u32, sel: &WatchlistSelection) -> Result<Vec<WatchKey>, CryptoError> {
        let g = self.hub.keys.lock().map_err(|_| CryptoError::OtUnavailable("poisoned".into()))?;
        let (mut g, res) = self
            .hub
            .ready
            .wait_timeout_while(g, self.timeout, |m| !m.contains_key(&instance))
            .map_err(|_| CryptoError::OtUnavailable("poisoned".into()))?;
        if res.timed_out() {
            return Err(CryptoError::OtUnavailable(format!("instance {instance} never sent")));
        }
        let keys = g.remove(&instance).expect("present");
        ot_t_of_n(&keys, sel)
    }
}
