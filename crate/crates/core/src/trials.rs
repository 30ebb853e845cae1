//! Deterministic fan-out of independent Monte Carlo trials.
//!
//! Trials are grouped into fixed blocks; each block folds its trials into an
//! accumulator and blocks are merged with an associative, commutative
//! operation. Every trial draws from its own counter-based stream, so the
//! result does not depend on how blocks are scheduled across threads.

const BLOCK: u64 = 512;

pub(crate) trait Accumulator: Send + Sized {
    fn merge(self, other: Self) -> Self;
}

pub(crate) fn run<A, I, F>(trials: u64, init: I, trial: F) -> A
where
    A: Accumulator,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, u64) + Sync + Send,
{
    let blocks = trials.div_ceil(BLOCK);
    let block = |b: u64| {
        let mut acc = init();
        for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
            trial(&mut acc, t);
        }
        acc
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..blocks)
            .into_par_iter()
            .map(block)
            .reduce(&init, Accumulator::merge)
    }

    #[cfg(not(feature = "parallel"))]
    {
        (0..blocks).map(block).fold(init(), Accumulator::merge)
    }
}

/// Runs `f` on a pool of `workers` threads (ignored without the `parallel` feature).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }

    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

impl Accumulator for u64 {
    fn merge(self, other: Self) -> Self {
        self + other
    }
}

impl<A: Accumulator, B: Accumulator> Accumulator for (A, B) {
    fn merge(self, other: Self) -> Self {
        (self.0.merge(other.0), self.1.merge(other.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_every_trial_once() {
        for trials in [0, 1, 511, 512, 513, 5000] {
            let total = run(trials, || 0u64, |acc, _| *acc += 1);
            assert_eq!(total, trials);
            let sum = run(trials, || 0u64, |acc, t| *acc += t);
            assert_eq!(sum, trials * trials.saturating_sub(1) / 2);
        }
    }

    #[test]
    fn independent_of_worker_count() {
        let f = || run(10_000, || 0u64, |acc, t| *acc += t.wrapping_mul(0x9e37_79b9) % 97);
        assert_eq!(with_workers(1, f), with_workers(4, f));
    }
}
