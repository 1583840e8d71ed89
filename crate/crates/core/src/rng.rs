//! Seeded randomness.
//!
//! Every randomized routine takes an explicit `u64` seed. Streams are drawn
//! from ChaCha8, a counter-based generator whose output is identical on every
//! platform; independent sub-streams (per trial, per restart) are selected
//! with [`ChaCha8Rng::set_stream`] rather than by reseeding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand::Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Sample an index from a discrete distribution given by cumulative weights.
pub(crate) fn sample_cumulative<R: Rng + ?Sized>(rng: &mut R, cumulative: &[f64]) -> usize {
    let total = *cumulative.last().expect("non-empty distribution");
    let u = rng.gen::<f64>() * total;
    match cumulative.binary_search_by(|c| c.partial_cmp(&u).expect("finite weights")) {
        Ok(i) => (i + 1).min(cumulative.len() - 1),
        Err(i) => i.min(cumulative.len() - 1),
    }
}

pub(crate) fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Map `f` over `0..count` on up to `threads` workers; results come back in
/// index order, so output never depends on the worker count.
pub fn par_map<T, F>(count: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(count.max(1));
    if threads == 1 {
        return (0..count).map(&f).collect();
    }
    let chunk = count.div_ceil(threads);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(count);
                scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Worker count used when callers do not specify one.
pub fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
