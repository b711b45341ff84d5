//! Deterministic work splitting. Every parallel loop in the crate maps an
//! index range through a pure function and collects results in index order,
//! so the parallel and sequential paths produce bit-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// stream-id domains, one per independent sampling context
pub const DOMAIN_AREA: u64 = 1;
pub const DOMAIN_LIOUVILLE: u64 = 2;
pub const DOMAIN_BIRKHOFF_STARTS: u64 = 3;
pub const DOMAIN_DECAY_STARTS: u64 = 4;
pub const DOMAIN_GENERIC: u64 = 7;

/// Counter-mode generator for task `index` within `domain`, derived from one
/// master seed. Tasks never share streams, so the split order cannot matter.
pub fn task_rng(master: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((domain << 32) | index);
    rng
}

#[cfg(feature = "parallel")]
fn configure_pool() {
    use std::sync::Once;
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Ok(v) = std::env::var("MAGFLOW_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    // a second global-pool build (e.g. by the host program) is fine
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}

/// Evaluate `f` on 0..n and return the results in index order.
pub fn run_indexed<T, F>(n: usize, f: F, force_sequential: bool) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !force_sequential {
            configure_pool();
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = force_sequential;
    (0..n).map(f).collect()
}
