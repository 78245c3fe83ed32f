//! Sublinear exact prime counting.
//!
//! Computes `pi(x)` with the divisor-set recurrence: for every value
//! `v = floor(x / i)` maintain `S(v)`, the count of integers in `[2, v]`
//! not struck by any prime `<= p`, and update all keys for each sieving
//! prime. Runs in `O(x^{3/4})` time and `O(sqrt x)` space, and never
//! estimates: every intermediate is an exact integer.

use super::sieve::isqrt;

/// `pi(x)` for `x >= 2`.
pub(crate) fn pi_lucy(x: u64) -> u64 {
    LucyTable::build(x).pi()
}

/// The full divisor-set table, kept for consistency checks: after the
/// sieve completes, `small[v] = pi(v)` and `large[i] = pi(x/i)`.
pub struct LucyTable {
    x: u64,
    root: u64,
    small: Vec<u64>,
    large: Vec<u64>,
}

impl LucyTable {
    pub fn build(x: u64) -> Self {
        assert!(x >= 2);
        let r = isqrt(x);
        let mut small: Vec<u64> = (0..=r).map(|v| v.saturating_sub(1)).collect();
        let mut large: Vec<u64> = (0..=r)
            .map(|i| if i == 0 { 0 } else { x / i - 1 })
            .collect();
        let mut p = 2u64;
        while p <= r {
            if small[p as usize] != small[(p - 1) as usize] {
                let sp = small[(p - 1) as usize];
                let p2 = p * p;
                let imax = (x / p2).min(r);
                for i in 1..=imax {
                    let d = i * p;
                    let sub = if d <= r {
                        large[d as usize]
                    } else {
                        small[(x / d) as usize]
                    };
                    large[i as usize] -= sub - sp;
                }
                let mut v = r;
                while v >= p2 {
                    small[v as usize] -= small[(v / p) as usize] - sp;
                    v -= 1;
                }
            }
            p += 1;
        }
        LucyTable {
            x,
            root: r,
            small,
            large,
        }
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn pi(&self) -> u64 {
        self.large[1]
    }

    /// `pi(v)` for any `v` in the divisor set `{ floor(x/i) }`.
    pub fn pi_at(&self, v: u64) -> Option<u64> {
        if v <= self.root {
            return Some(self.small[v as usize]);
        }
        let i = self.x / v;
        if self.x / i == v {
            Some(self.large[i as usize])
        } else {
            None
        }
    }

    /// Keys of the divisor set in increasing order (used by the internal
    /// consistency checks: two tables built at different `x` must agree on
    /// every shared key).
    pub fn keys(&self) -> Vec<u64> {
        let mut ks: Vec<u64> = (1..=self.root).collect();
        let mut i = self.root;
        while i >= 1 {
            let v = self.x / i;
            if v > self.root {
                ks.push(v);
            }
            i -= 1;
        }
        ks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        for (x, want) in [
            (2u64, 1u64),
            (3, 2),
            (4, 2),
            (10, 4),
            (100, 25),
            (1000, 168),
            (6400, 834),
        ] {
            assert_eq!(pi_lucy(x), want, "pi({x})");
        }
    }

    #[test]
    fn matches_published_benchmarks() {
        assert_eq!(pi_lucy(1_000_000), 78_498);
        assert_eq!(pi_lucy(10_000_000), 664_579);
        assert_eq!(pi_lucy(100_000_000), 5_761_455);
        assert_eq!(pi_lucy(485_165_195), 25_614_562); // floor(e^20)
        assert_eq!(pi_lucy(1_000_000_000), 50_847_534);
    }

    #[test]
    fn table_keys_self_consistent() {
        // every shared divisor-set key of two runs agrees
        let a = LucyTable::build(2_000_000);
        let b = LucyTable::build(1_000_000);
        for k in b.keys() {
            if let (Some(pa), Some(pb)) = (a.pi_at(k), b.pi_at(k)) {
                assert_eq!(pa, pb, "tables disagree at key {k}");
            }
        }
        // and the small-side values match a direct sieve count
        let base = crate::engine::sieve::BasePrimes::sieve(1_414);
        for v in [2u64, 59, 100, 757, 1_414] {
            assert_eq!(a.pi_at(v).unwrap(), base.count_up_to(v), "pi({v})");
        }
    }
}
