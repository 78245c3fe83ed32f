//! Chebyshev theta accumulation.
//!
//! `theta(x) = sum of ln p over primes p <= x` is accumulated with
//! error-compensated summation at `digits + 10` guard digits. Consecutive
//! primes are first folded into exact `u128` chunk products, chunks into an
//! extended-precision running product, and one logarithm is taken per
//! product batch: `sum ln p = ln(prod p)` exactly, so the only rounding is
//! one representation rounding per chunk, one per product step, and one per
//! logarithm. This keeps the cost of a 10^8-term accumulation dominated by
//! a few tens of thousands of log evaluations instead of one per prime.

use super::Engine;
use crate::wide::{KahanWide, WideReal};
use crate::Result;
use rayon::prelude::*;

const GUARD_DIGITS: u32 = 10;
const FLOATS_PER_LOG: u32 = 64;

/// Streaming accumulator: exact chunk products -> product batches -> logs.
pub(crate) struct ThetaBatcher {
    digits: u32,
    chunk: u128,
    product: WideReal,
    floats_in_product: u32,
    acc: KahanWide,
}

impl ThetaBatcher {
    pub fn new(guard_digits: u32) -> Self {
        ThetaBatcher {
            digits: guard_digits,
            chunk: 1,
            product: WideReal::one(guard_digits),
            floats_in_product: 0,
            acc: KahanWide::new(guard_digits),
        }
    }

    pub fn push(&mut self, p: u64) {
        debug_assert!(p >= 2);
        if self.chunk > u128::MAX / p as u128 {
            self.flush_chunk();
        }
        self.chunk *= p as u128;
    }

    fn flush_chunk(&mut self) {
        if self.chunk == 1 {
            return;
        }
        let w = WideReal::from_u128(self.chunk, self.digits);
        self.chunk = 1;
        self.product = &self.product * &w;
        self.floats_in_product += 1;
        if self.floats_in_product >= FLOATS_PER_LOG {
            self.flush_product();
        }
    }

    fn flush_product(&mut self) {
        if self.floats_in_product == 0 {
            return;
        }
        self.acc.add(&self.product.ln());
        self.product = WideReal::one(self.digits);
        self.floats_in_product = 0;
    }

    pub fn finish(mut self) -> WideReal {
        self.flush_chunk();
        self.flush_product();
        self.acc.total()
    }
}

/// Chain of `(pi, theta)` seeds at the absolute segment boundaries covering
/// `[2, hi)`: entry `k` holds the sums over all primes below the start of
/// span `k`, so range walkers can start at any segment independently and
/// partition-independence holds by construction.
pub struct ThetaChain {
    spans: Vec<(u64, u64)>,
    pi_at: Vec<u64>,
    theta_at: Vec<WideReal>,
    total_pi: u64,
    total_theta: WideReal,
    guard_digits: u32,
}

impl ThetaChain {
    /// Builds the chain over `[2, hi)` at `digits + 10` guard digits.
    /// Per-segment sums are independent (and parallel); the prefix merge is
    /// sequential in segment order, so the result does not depend on the
    /// worker count.
    pub fn build(engine: &Engine, hi: u64, digits: u32) -> Result<Self> {
        let guard = digits + GUARD_DIGITS;
        let spans = engine.segment_grid(2, hi);
        let partials: Vec<(u64, WideReal)> = spans
            .par_iter()
            .map(|&(a, b)| -> Result<(u64, WideReal)> {
                let blk = engine.sieve_block_raw(a, b)?;
                let mut batch = ThetaBatcher::new(guard);
                let mut count = 0u64;
                for p in blk.primes() {
                    batch.push(p);
                    count += 1;
                }
                Ok((count, batch.finish()))
            })
            .collect::<Result<_>>()?;

        let mut pi_at = Vec::with_capacity(spans.len());
        let mut theta_at = Vec::with_capacity(spans.len());
        let mut pi_run = 0u64;
        let mut theta_run = KahanWide::new(guard);
        for (count, theta_sum) in &partials {
            pi_at.push(pi_run);
            theta_at.push(theta_run.total());
            pi_run += count;
            theta_run.add(theta_sum);
        }
        Ok(ThetaChain {
            spans,
            pi_at,
            theta_at,
            total_pi: pi_run,
            total_theta: theta_run.total(),
            guard_digits: guard,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.spans.len()
    }

    pub fn span(&self, k: usize) -> (u64, u64) {
        self.spans[k]
    }

    /// `(pi, theta)` over all primes below the start of span `k`.
    pub fn seed(&self, k: usize) -> (u64, &WideReal) {
        (self.pi_at[k], &self.theta_at[k])
    }

    pub fn total(&self) -> (u64, &WideReal) {
        (self.total_pi, &self.total_theta)
    }

    pub fn guard_digits(&self) -> u32 {
        self.guard_digits
    }
}

/// `theta(x)` via a full chain build over `[2, x]`.
pub(crate) fn theta_streaming(engine: &Engine, x: u64, digits: u32) -> Result<WideReal> {
    let chain = ThetaChain::build(engine, x + 1, digits)?;
    Ok(chain.total().1.with_digits(digits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;

    #[test]
    fn chain_seeds_are_consistent() {
        let mut cfg = crate::engine::EngineConfig::default();
        cfg.segment_size = 1 << 14;
        let engine = Engine::new(cfg);
        let chain = ThetaChain::build(&engine, 100_000, 30).unwrap();
        assert!(chain.n_segments() > 3);
        // pi seeds match the sublinear counter at every boundary
        for k in 1..chain.n_segments() {
            let (lo, _) = chain.span(k);
            let (pi, theta) = chain.seed(k);
            assert_eq!(pi, crate::engine::pi_lucy(lo - 1), "pi below {lo}");
            let direct = engine.theta_exact(lo - 1, 30).unwrap();
            let err = (theta - &direct).abs();
            assert!(
                err < WideReal::parse("1e-25", 40).unwrap(),
                "theta seed at {lo}: {}",
                err.to_sci(5)
            );
        }
    }

    #[test]
    fn batcher_equals_term_by_term() {
        let engine = Engine::with_defaults();
        let blk = engine.sieve_range(2, 10_000).unwrap();
        let mut batch = ThetaBatcher::new(40);
        let mut naive = KahanWide::new(45);
        for p in blk.primes() {
            batch.push(p);
            naive.add(&WideReal::from_u64(p, 45).ln());
        }
        let a = batch.finish();
        let b = naive.total();
        assert!((&a - &b).abs() < WideReal::parse("1e-32", 45).unwrap());
    }
}
