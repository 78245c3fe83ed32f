//! Exact computation of primes, `pi(x)`, `theta(x)` and `p_n`.
//!
//! Everything here is exact integer / certified-precision arithmetic; this
//! module is the ground-truth oracle the verification modules consume.

mod count;
mod sieve;
mod theta;

pub use count::LucyTable;
pub use sieve::BasePrimes;
pub use theta::ThetaChain;

use crate::wide::WideReal;
use crate::{Error, Result};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

/// How an exact `pi(x)` value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PiMethod {
    Sieve,
    Sublinear,
}

/// An exact prime count at a point, tagged with the method that produced it.
#[derive(Clone, Debug)]
pub struct PiSnapshot {
    pub x: u64,
    pub pi: u64,
    pub method: PiMethod,
}

/// A sieved segment `[lo, hi)` with chain data.
///
/// The bitset stores odd numbers only; 2 is handled positionally. The chain
/// fields `pi_at_lo` and `theta_at_lo` hold the sums over all primes `< lo`,
/// so adjacent blocks chain exactly.
pub struct PrimeBlock {
    pub lo: u64,
    pub hi: u64,
    bits: Vec<u64>,
    pub pi_at_lo: u64,
    pub theta_at_lo: Option<WideReal>,
}

impl PrimeBlock {
    fn idx(&self, n: u64) -> Option<usize> {
        if n < self.lo || n >= self.hi || n % 2 == 0 {
            return None;
        }
        let first_odd = self.lo | 1;
        Some(((n - first_odd) / 2) as usize)
    }

    pub fn is_prime(&self, n: u64) -> bool {
        if n == 2 {
            return self.lo <= 2 && 2 < self.hi;
        }
        match self.idx(n) {
            Some(i) => self.bits[i / 64] >> (i % 64) & 1 == 1,
            None => false,
        }
    }

    /// Number of primes in `[lo, hi)`.
    pub fn count(&self) -> u64 {
        let mut c: u64 = self.bits.iter().map(|w| w.count_ones() as u64).sum();
        if self.lo <= 2 && 2 < self.hi {
            c += 1;
        }
        c
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        let two = if self.lo <= 2 && 2 < self.hi {
            Some(2u64)
        } else {
            None
        };
        let first_odd = self.lo | 1;
        let n_odd = if self.hi > first_odd {
            ((self.hi - first_odd) + 1) / 2
        } else {
            0
        };
        two.into_iter().chain(
            (0..n_odd as usize)
                .filter(move |&i| self.bits[i / 64] >> (i % 64) & 1 == 1)
                .map(move |i| first_odd + 2 * i as u64),
        )
    }
}

/// Engine configuration.
#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Upper bound for sieve-based operations.
    pub sieve_limit: u64,
    /// Upper bound for the sublinear counting method.
    pub sublinear_limit: u64,
    /// Segment span in integers (absolute grid granularity).
    pub segment_size: u64,
    /// Optional disk cache for the base-prime bitset.
    pub cache_path: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            sieve_limit: 1_000_000_000,
            sublinear_limit: 1_000_000_000_000,
            segment_size: 1 << 22,
            cache_path: None,
        }
    }
}

/// The prime engine: sieve segments, exact counts, theta sums.
///
/// Operations are pure given the configuration; the base-prime cache is
/// built once on demand and read-shared afterwards.
pub struct Engine {
    config: EngineConfig,
    base: Mutex<Option<Arc<BasePrimes>>>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Engine {
            config,
            base: Mutex::new(None),
        }
    }

    pub fn with_defaults() -> Self {
        Self::new(EngineConfig::default())
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Base primes up to at least `limit`, building (and caching to disk if
    /// configured) as needed.
    pub fn base_primes(&self, limit: u64) -> Result<Arc<BasePrimes>> {
        let mut guard = self.base.lock().expect("base cache lock");
        if let Some(b) = guard.as_ref() {
            if b.limit() >= limit {
                return Ok(Arc::clone(b));
            }
        }
        let built = Arc::new(sieve::BasePrimes::obtain(
            limit.max(1 << 16),
            self.config.cache_path.as_deref(),
        )?);
        *guard = Some(Arc::clone(&built));
        Ok(built)
    }

    /// Sieves one segment `[lo, hi)` and seeds its chain fields.
    ///
    /// `pi_at_lo` is seeded from the sublinear counter, which doubles as a
    /// cross-method consistency point; `theta_at_lo` is left unset (theta
    /// chains are built by [`ThetaChain`]).
    pub fn sieve_range(&self, lo: u64, hi: u64) -> Result<PrimeBlock> {
        if !(2 <= lo && lo < hi) {
            return Err(Error::Usage(format!("sieve_range requires 2 <= lo < hi, got [{lo}, {hi})")));
        }
        if hi - lo > self.config.segment_size {
            return Err(Error::Capacity {
                what: "sieve_range span",
                requested: hi - lo,
                limit: self.config.segment_size,
            });
        }
        if hi - 1 > self.config.sieve_limit {
            return Err(Error::Capacity {
                what: "sieve_range bound",
                requested: hi - 1,
                limit: self.config.sieve_limit,
            });
        }
        let mut block = self.sieve_block_raw(lo, hi)?;
        block.pi_at_lo = if lo <= 2 { 0 } else { count::pi_lucy(lo - 1) };
        Ok(block)
    }

    /// Sieve bits for `[lo, hi)` without chain seeding (internal building
    /// block; no span cap so chain builders can use larger strides).
    pub(crate) fn sieve_block_raw(&self, lo: u64, hi: u64) -> Result<PrimeBlock> {
        let base = self.base_primes(sieve::isqrt(hi.saturating_sub(1)))?;
        let bits = sieve::sieve_segment(&base, lo, hi);
        Ok(PrimeBlock {
            lo,
            hi,
            bits,
            pi_at_lo: 0,
            theta_at_lo: None,
        })
    }

    /// Exact `pi(x)` by segmented sieving.
    pub fn pi_exact_sieve(&self, x: u64) -> Result<PiSnapshot> {
        if x > self.config.sieve_limit {
            return Err(Error::Capacity {
                what: "pi_exact_sieve (use the sublinear method above the sieve limit)",
                requested: x,
                limit: self.config.sieve_limit,
            });
        }
        let pi = if x < 2 {
            0
        } else {
            use rayon::prelude::*;
            let spans = self.segment_grid(2, x + 1);
            let counts: Vec<u64> = spans
                .par_iter()
                .map(|&(a, b)| self.sieve_block_raw(a, b).map(|blk| blk.count()))
                .collect::<Result<_>>()?;
            counts.iter().sum()
        };
        Ok(PiSnapshot {
            x,
            pi,
            method: PiMethod::Sieve,
        })
    }

    /// Exact `pi(x)` by the sublinear divisor-set recurrence.
    pub fn pi_exact_sublinear(&self, x: u64) -> Result<PiSnapshot> {
        if x > self.config.sublinear_limit {
            return Err(Error::Capacity {
                what: "pi_exact_sublinear",
                requested: x,
                limit: self.config.sublinear_limit,
            });
        }
        Ok(PiSnapshot {
            x,
            pi: if x < 2 { 0 } else { count::pi_lucy(x) },
            method: PiMethod::Sublinear,
        })
    }

    /// Exact `pi(x)`, choosing the cheaper method.
    pub fn pi(&self, x: u64) -> Result<u64> {
        if x < 2 {
            return Ok(0);
        }
        if x <= 1 << 16 {
            Ok(self.base_primes(x)?.count_up_to(x))
        } else if x <= self.config.sublinear_limit {
            Ok(count::pi_lucy(x))
        } else {
            Err(Error::Capacity {
                what: "pi",
                requested: x,
                limit: self.config.sublinear_limit,
            })
        }
    }

    /// Chebyshev `theta(x)` with total relative error below
    /// `10^-(digits-10)`.
    pub fn theta_exact(&self, x: u64, digits: u32) -> Result<WideReal> {
        if x > self.config.sieve_limit {
            return Err(Error::Capacity {
                what: "theta_exact",
                requested: x,
                limit: self.config.sieve_limit,
            });
        }
        if x < 2 {
            return Ok(WideReal::zero(digits));
        }
        theta::theta_streaming(self, x, digits)
    }

    /// The n-th prime (1-based: `nth_prime(1) = 2`).
    pub fn nth_prime(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::Usage("nth_prime index is 1-based".into()));
        }
        let mut seen = 0u64;
        let mut lo = 2u64;
        loop {
            let hi = (lo + self.config.segment_size).min(self.config.sieve_limit + 1);
            if lo >= hi {
                return Err(Error::Capacity {
                    what: "nth_prime",
                    requested: n,
                    limit: self.config.sieve_limit,
                });
            }
            let blk = self.sieve_block_raw(lo, hi)?;
            let c = blk.count();
            if seen + c >= n {
                for p in blk.primes() {
                    seen += 1;
                    if seen == n {
                        return Ok(p);
                    }
                }
                unreachable!("count/iterate mismatch");
            }
            seen += c;
            lo = hi;
        }
    }

    /// Absolute segment grid covering `[lo, hi)`: spans aligned to
    /// `segment_size` boundaries regardless of the requested range, so any
    /// partitioning of a larger range reproduces identical per-point values.
    pub fn segment_grid(&self, lo: u64, hi: u64) -> Vec<(u64, u64)> {
        let s = self.config.segment_size;
        let mut spans = Vec::new();
        let mut a = lo;
        while a < hi {
            let boundary = (a / s + 1) * s;
            let b = boundary.min(hi);
            spans.push((a, b));
            a = b;
        }
        spans
    }
}

pub(crate) use count::pi_lucy;
