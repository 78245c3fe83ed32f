//! Base-prime sieve, disk cache, and segment sieving.
//!
//! The base sieve covers `[2, limit]` with an odd-only bitset; segments are
//! sieved against it. The bitset is cached on disk in a versioned binary
//! format so repeated CLI invocations do not re-sieve:
//! magic `PGATE1`, little-endian u64 limit, then the packed odd-only bitset
//! (bit `i` set iff `2i + 1` is prime).

use crate::{Error, Result};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 6] = b"PGATE1";

/// Exact integer square root.
pub(crate) fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// Primes up to a limit: packed odd-only bitset plus an extracted list.
pub struct BasePrimes {
    limit: u64,
    odd_bits: Vec<u64>,
    primes: Vec<u32>,
}

impl BasePrimes {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Count of primes `<= x` (requires `x <= limit`).
    pub fn count_up_to(&self, x: u64) -> u64 {
        assert!(x <= self.limit);
        self.primes.iter().take_while(|&&p| p as u64 <= x).count() as u64
    }

    /// Loads from cache when possible, else sieves and writes the cache.
    pub fn obtain(limit: u64, cache_path: Option<&Path>) -> Result<Self> {
        if let Some(path) = cache_path {
            match Self::load(path) {
                Ok(Some(b)) if b.limit >= limit => return Ok(b),
                Ok(_) => {}
                Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e),
            }
        }
        let built = Self::sieve(limit);
        if let Some(path) = cache_path {
            built.store(path)?;
        }
        Ok(built)
    }

    /// Simple odd-only sieve of `[2, limit]`.
    pub fn sieve(limit: u64) -> Self {
        assert!(limit >= 2 && limit < (1 << 33), "base sieve limit out of range");
        let n_odd = (limit as usize + 1) / 2; // odds 1,3,...,<=limit
        let mut bits = vec![!0u64; (n_odd + 63) / 64];
        set_bit(&mut bits, 0, false); // 1 is not prime
        let mut p = 3u64;
        while p * p <= limit {
            if get_bit(&bits, ((p - 1) / 2) as usize) {
                let mut m = p * p;
                while m <= limit {
                    set_bit(&mut bits, ((m - 1) / 2) as usize, false);
                    m += 2 * p;
                }
            }
            p += 2;
        }
        // clear tail bits beyond the last odd <= limit
        for i in n_odd..bits.len() * 64 {
            set_bit(&mut bits, i, false);
        }
        let mut primes = vec![2u32];
        for i in 1..n_odd {
            if get_bit(&bits, i) {
                primes.push((2 * i + 1) as u32);
            }
        }
        BasePrimes {
            limit,
            odd_bits: bits,
            primes,
        }
    }

    fn load(path: &Path) -> Result<Option<Self>> {
        let mut f = fs::File::open(path)?;
        let mut magic = [0u8; 6];
        f.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::CacheFormat(format!(
                "bad magic in {}",
                path.display()
            )));
        }
        let mut lim = [0u8; 8];
        f.read_exact(&mut lim)?;
        let limit = u64::from_le_bytes(lim);
        let n_odd = (limit as usize + 1) / 2;
        let n_words = (n_odd + 63) / 64;
        let mut raw = vec![0u8; n_words * 8];
        f.read_exact(&mut raw)?;
        let odd_bits: Vec<u64> = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut primes = vec![2u32];
        for i in 1..n_odd {
            if get_bit(&odd_bits, i) {
                primes.push((2 * i + 1) as u32);
            }
        }
        Ok(Some(BasePrimes {
            limit,
            odd_bits,
            primes,
        }))
    }

    fn store(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(MAGIC)?;
            f.write_all(&self.limit.to_le_bytes())?;
            for w in &self.odd_bits {
                f.write_all(&w.to_le_bytes())?;
            }
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn get_bit(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(bits: &mut [u64], i: usize, v: bool) {
    if v {
        bits[i / 64] |= 1 << (i % 64);
    } else {
        bits[i / 64] &= !(1 << (i % 64));
    }
}

/// Sieve the odd-only bitset for `[lo, hi)` against the base primes.
pub(crate) fn sieve_segment(base: &BasePrimes, lo: u64, hi: u64) -> Vec<u64> {
    debug_assert!(base.limit() >= isqrt(hi.saturating_sub(1)));
    let first_odd = lo | 1;
    let n_odd = if hi > first_odd {
        ((hi - first_odd + 1) / 2) as usize
    } else {
        0
    };
    let mut bits = vec![!0u64; (n_odd + 63) / 64];
    for i in n_odd..bits.len() * 64 {
        set_bit(&mut bits, i, false);
    }
    if first_odd == 1 && n_odd > 0 {
        set_bit(&mut bits, 0, false);
    }
    let root = isqrt(hi.saturating_sub(1));
    for &p32 in base.primes().iter().skip(1) {
        let p = p32 as u64;
        if p > root {
            break;
        }
        // first odd multiple of p in [max(p^2, lo), hi)
        let mut m = p * p;
        if m < lo {
            m = lo.div_ceil(p) * p;
            if m % 2 == 0 {
                m += p;
            }
        }
        // in-range primes below the base list's own primes stay set because
        // marking starts at p^2
        let mut i = ((m.max(first_odd) - first_odd) / 2) as usize;
        if m < first_odd {
            i = 0;
        }
        while i < n_odd {
            set_bit(&mut bits, i, false);
            i += p as usize;
        }
    }
    bits
}
