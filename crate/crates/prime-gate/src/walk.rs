//! Breakpoint walks over prime step functions.
//!
//! `pi` and `theta` are right-continuous step functions jumping only at
//! primes, and every verified bound compares such a step function against a
//! smooth envelope whose margin is monotone or concave on each constancy
//! interval `[p, p')`. It therefore suffices to check, per interval, the
//! one-sided extremes: at `p` just after the jump, at the integer `p' - 1`,
//! and at `p'` with the pre-jump value (left limit). This module streams
//! those checkpoints over a range, carrying exact `pi` and high-precision
//! `theta` from the segment chain.
//!
//! Work is partitioned on the absolute segment grid, so any split of a
//! range reproduces identical per-point values and the merged report does
//! not depend on the partitioning or the worker count.

use crate::engine::{Engine, ThetaChain};
use crate::report::{CheckSide, WorstTracker};
use crate::wide::{rsqrt, LnStepper, WideReal};
use crate::Result;
use rayon::prelude::*;
use std::sync::Arc;

/// One evaluated checkpoint.
pub struct PointCtx<'a> {
    pub x: u64,
    pub side: CheckSide,
    /// Exact prime count at this evaluation (side-dependent).
    pub pi: u64,
    /// `x` at guard precision.
    pub x_wide: &'a WideReal,
    /// `theta` at this evaluation, at chain guard precision.
    pub theta: &'a WideReal,
    pub ln_x: &'a WideReal,
    /// `sqrt(x)`, present when the walk was configured to track it.
    pub sqrt_x: Option<&'a WideReal>,
    /// `(ln x)^{-1/2}`, present when configured.
    pub rsqrt_ln_x: Option<&'a WideReal>,
}

/// A named margin function checked during a walk. The walk keeps, per item,
/// the minimum margin over all checkpoints with `x >= min_x`.
pub struct MarginItem {
    pub name: &'static str,
    /// Smallest x the item's stated domain covers.
    pub min_x: u64,
    pub eval: Box<dyn Fn(&PointCtx) -> WideReal + Send + Sync>,
}

pub struct WalkConfig {
    pub lo: u64,
    pub hi: u64,
    pub digits: u32,
    pub track_sqrt_x: bool,
    pub track_rsqrt_ln: bool,
}

pub struct WalkOutcome {
    pub trackers: Vec<WorstTracker>,
}

/// Streams all checkpoints of `[lo, hi]` through the margin items.
pub fn walk_range(engine: &Engine, cfg: &WalkConfig, items: &[MarginItem]) -> Result<WalkOutcome> {
    assert!(cfg.lo >= 2 && cfg.lo <= cfg.hi);
    let chain = Arc::new(ThetaChain::build(engine, cfg.hi + 1, cfg.digits)?);
    walk_range_with_chain(engine, cfg, items, &chain)
}

/// Same as [`walk_range`] but reusing a prebuilt chain covering
/// `[2, hi + 1)` or more.
pub fn walk_range_with_chain(
    engine: &Engine,
    cfg: &WalkConfig,
    items: &[MarginItem],
    chain: &Arc<ThetaChain>,
) -> Result<WalkOutcome> {
    let seg = engine.config().segment_size;
    let first_cell = (cfg.lo / seg) as usize;
    let last_cell = (cfg.hi / seg) as usize;
    assert!(
        last_cell < chain.n_segments() || chain.span(chain.n_segments() - 1).1 > cfg.hi,
        "chain does not cover the walk range"
    );

    let partials: Vec<(Vec<WorstTracker>, bool)> = (first_cell..=last_cell)
        .into_par_iter()
        .map(|k| walk_cell(engine, cfg, items, chain, k))
        .collect::<Result<_>>()?;

    let mut trackers: Vec<WorstTracker> = (0..items.len()).map(|_| WorstTracker::default()).collect();
    for (cell_trackers, _saw_points) in partials {
        for (t, c) in trackers.iter_mut().zip(cell_trackers) {
            t.merge_after(c);
        }
    }
    Ok(WalkOutcome { trackers })
}

fn walk_cell(
    engine: &Engine,
    cfg: &WalkConfig,
    items: &[MarginItem],
    chain: &Arc<ThetaChain>,
    k: usize,
) -> Result<(Vec<WorstTracker>, bool)> {
    let (cell_lo, cell_hi) = chain.span(k);
    let blk_hi = cell_hi.min(cfg.hi + 1);
    let blk = engine.sieve_block_raw(cell_lo, blk_hi)?;
    let (mut pi_run, theta_seed) = chain.seed(k);
    let mut theta_run = theta_seed.clone();
    let guard = chain.guard_digits();

    let mut trackers: Vec<WorstTracker> = (0..items.len()).map(|_| WorstTracker::default()).collect();
    let mut stepper = LnStepper::new(cell_lo.max(2), guard);
    let mut warm_sqrt_x: Option<WideReal> = None;
    let mut warm_rsqrt_ln: Option<WideReal> = None;
    let mut saw = false;

    let emit = |x: u64,
                    side: CheckSide,
                    pi: u64,
                    theta: &WideReal,
                    ln_x: &WideReal,
                    warm_sqrt_x: &mut Option<WideReal>,
                    warm_rsqrt_ln: &mut Option<WideReal>,
                    trackers: &mut Vec<WorstTracker>| {
        let bits = ln_x.bits();
        let x_wide = WideReal::from_u64(x, guard);
        let sqrt_x = if cfg.track_sqrt_x {
            let r = rsqrt(x_wide.raw(), warm_sqrt_x.as_ref().map(|w| w.raw()), bits);
            let rw = WideReal::from_raw(r, guard);
            let s = &x_wide * &rw;
            *warm_sqrt_x = Some(rw);
            Some(s)
        } else {
            None
        };
        let rsqrt_ln = if cfg.track_rsqrt_ln {
            let r = rsqrt(ln_x.raw(), warm_rsqrt_ln.as_ref().map(|w| w.raw()), bits);
            let rw = WideReal::from_raw(r, guard);
            *warm_rsqrt_ln = Some(rw.clone());
            Some(rw)
        } else {
            None
        };
        let ctx = PointCtx {
            x,
            side,
            pi,
            x_wide: &x_wide,
            theta,
            ln_x,
            sqrt_x: sqrt_x.as_ref(),
            rsqrt_ln_x: rsqrt_ln.as_ref(),
        };
        for (item, tracker) in items.iter().zip(trackers.iter_mut()) {
            // a Before point carries the pre-jump value, which is attained
            // only for x strictly below the jump; at the domain minimum that
            // lies outside the stated validity
            let in_domain = match side {
                CheckSide::Before => x > item.min_x,
                _ => x >= item.min_x,
            };
            if in_domain {
                tracker.observe((item.eval)(&ctx), x, side);
            }
        }
    };

    // synthetic start checkpoint when the range begins inside this cell at a
    // non-prime (covers the left end of the first constancy interval)
    let mut pending_start = k == (cfg.lo / engine.config().segment_size) as usize;

    // item-domain entry points falling inside this cell at a non-prime: the
    // first constancy piece of an item's domain starts there, and for
    // margins that worsen leftwards that is the piece extremum
    let mut entries: Vec<u64> = items
        .iter()
        .map(|it| it.min_x)
        .filter(|&e| e > cfg.lo && e <= cfg.hi && e >= cell_lo && e < blk_hi && !blk.is_prime(e))
        .collect();
    entries.sort_unstable();
    entries.dedup();
    let mut next_entry = 0usize;

    for p in blk.primes() {
        if pending_start && cfg.lo < p {
            // lo is not a prime (a prime lo is handled by its own At point)
            let ln_lo = WideReal::from_raw(stepper.ln_at(cfg.lo), guard);
            emit(
                cfg.lo,
                CheckSide::At,
                pi_run,
                &theta_run,
                &ln_lo,
                &mut warm_sqrt_x,
                &mut warm_rsqrt_ln,
                &mut trackers,
            );
            saw = true;
            pending_start = false;
        }
        if p >= cfg.lo {
            pending_start = false;
            saw = true;
            // integer just before the jump; p - 1 is composite except p = 3,
            // where it coincides with the previous At point
            if p > cfg.lo && p != 3 && p - 1 >= cfg.lo {
                let ln_xm1 = WideReal::from_raw(stepper.step_to(p - 1).clone(), guard);
                emit(
                    p - 1,
                    CheckSide::IntBefore,
                    pi_run,
                    &theta_run,
                    &ln_xm1,
                    &mut warm_sqrt_x,
                    &mut warm_rsqrt_ln,
                    &mut trackers,
                );
            }
            let ln_p = WideReal::from_raw(stepper.step_to(p).clone(), guard);
            if p > cfg.lo {
                // left limit at the jump
                emit(
                    p,
                    CheckSide::Before,
                    pi_run,
                    &theta_run,
                    &ln_p,
                    &mut warm_sqrt_x,
                    &mut warm_rsqrt_ln,
                    &mut trackers,
                );
            }
            let theta_after = &theta_run + &ln_p;
            emit(
                p,
                CheckSide::At,
                pi_run + 1,
                &theta_after,
                &ln_p,
                &mut warm_sqrt_x,
                &mut warm_rsqrt_ln,
                &mut trackers,
            );
            theta_run = theta_after;
            pi_run += 1;
        } else {
            let ln_p = WideReal::from_raw(stepper.step_to(p).clone(), guard);
            theta_run = &theta_run + &ln_p;
            pi_run += 1;
        }
    }

    // entry points past the last prime of the cell
    while next_entry < entries.len() {
        let e = entries[next_entry];
        next_entry += 1;
        let ln_e = WideReal::from_raw(stepper.ln_at(e), guard);
        emit(
            e,
            CheckSide::At,
            pi_run,
            &theta_run,
            &ln_e,
            &mut warm_sqrt_x,
            &mut warm_rsqrt_ln,
            &mut trackers,
        );
        saw = true;
    }

    // range-end checkpoint in the last cell, unless hi itself is a prime
    // (then its At point already covers the right extreme)
    if blk_hi == cfg.hi + 1 && !blk.is_prime(cfg.hi) {
        let ln_hi = WideReal::from_raw(stepper.ln_at(cfg.hi), guard);
        emit(
            cfg.hi,
            CheckSide::RangeEnd,
            pi_run,
            &theta_run,
            &ln_hi,
            &mut warm_sqrt_x,
            &mut warm_rsqrt_ln,
            &mut trackers,
        );
        saw = true;
        if pending_start {
            // degenerate: no prime in [lo, hi]; the single RangeEnd point
            // covers the constant piece
        }
    }

    Ok((trackers, saw))
}

/// Explicit checkpoint list for a modest range: the `At`/`Before` points of
/// every prime in `(lo, hi]`, the entry point `lo`, and the range end.
///
/// `(2, 6)` yields `At 2, Before 3, At 3, Before 5, At 5, RangeEnd 6`.
pub fn breakpoints(engine: &Engine, lo: u64, hi: u64) -> Result<Vec<(u64, CheckSide)>> {
    if !(2 <= lo && lo <= hi) {
        return Err(crate::Error::Usage(format!(
            "breakpoints requires 2 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let mut out = Vec::new();
    let spans = engine.segment_grid(lo, hi + 1);
    let mut first = true;
    let mut last_was_prime = false;
    for (a, b) in spans {
        let blk = engine.sieve_block_raw(a, b)?;
        for p in blk.primes() {
            if first {
                if p == lo {
                    out.push((lo, CheckSide::At));
                } else {
                    out.push((lo, CheckSide::At));
                    out.push((p, CheckSide::Before));
                    out.push((p, CheckSide::At));
                }
                first = false;
            } else {
                out.push((p, CheckSide::Before));
                out.push((p, CheckSide::At));
            }
            last_was_prime = p == hi;
        }
    }
    if first {
        out.push((lo, CheckSide::At));
    }
    if !last_was_prime && hi > lo {
        out.push((hi, CheckSide::RangeEnd));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineConfig;

    fn engine() -> Engine {
        Engine::with_defaults()
    }

    #[test]
    fn breakpoints_small_examples() {
        let e = engine();
        let bps = breakpoints(&e, 2, 6).unwrap();
        assert_eq!(
            bps,
            vec![
                (2, CheckSide::At),
                (3, CheckSide::Before),
                (3, CheckSide::At),
                (5, CheckSide::Before),
                (5, CheckSide::At),
                (6, CheckSide::RangeEnd),
            ]
        );
        let bps = breakpoints(&e, 24, 29).unwrap();
        assert_eq!(
            bps,
            vec![
                (24, CheckSide::At),
                (29, CheckSide::Before),
                (29, CheckSide::At),
            ]
        );
    }

    #[test]
    fn breakpoints_match_block_primes_in_window() {
        let e = engine();
        let lo = 1_000_000;
        let hi = 1_000_100;
        let bps = breakpoints(&e, lo, hi).unwrap();
        let blk = e.sieve_range(lo, hi + 1).unwrap();
        let primes: Vec<u64> = blk.primes().collect();
        let at_points: Vec<u64> = bps
            .iter()
            .filter(|(x, s)| *s == CheckSide::At && *x != lo)
            .map(|(x, _)| *x)
            .collect();
        assert_eq!(at_points, primes);
    }

    /// Endpoint sufficiency: a margin that holds at both returned checkpoints
    /// of a constancy interval holds at random interior integers.
    #[test]
    fn endpoint_sufficiency_spot_check() {
        let e = engine();
        // interval [89, 97): x - theta(x) with theta constant
        let blk = e.sieve_range(2, 100).unwrap();
        let theta_89: f64 = blk
            .primes()
            .filter(|&p| p <= 89)
            .map(|p| (p as f64).ln())
            .sum();
        let margin = |x: f64| x - theta_89;
        let m_left = margin(89.0);
        let m_right = margin(96.0);
        let lo_bound = m_left.min(m_right);
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..10 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = 89 + (state >> 33) % 8;
            assert!(margin(x as f64) >= lo_bound - 1e-9);
        }
    }

    #[test]
    fn walk_counts_points_and_is_partition_independent() {
        // run the same walk with two segment sizes; the margin/witness must
        // agree (values are computed per point, merging only takes minima)
        let items = || {
            vec![MarginItem {
                name: "x_minus_theta",
                min_x: 2,
                eval: Box::new(|ctx: &PointCtx| {
                    &WideReal::from_u64(ctx.x, 40) - ctx.theta
                }),
            }]
        };
        let run = |seg: u64| {
            let e = Engine::new(EngineConfig {
                segment_size: seg,
                ..EngineConfig::default()
            });
            let cfg = WalkConfig {
                lo: 2,
                hi: 50_000,
                digits: 30,
                track_sqrt_x: false,
                track_rsqrt_ln: false,
            };
            let out = walk_range(&e, &cfg, &items()).unwrap();
            let t = &out.trackers[0];
            let (m, x, s) = t.worst.clone().unwrap();
            (m, x, s, t.points)
        };
        let (m1, x1, s1, p1) = run(1 << 22);
        let (m2, x2, s2, p2) = run(1 << 12);
        assert_eq!(x1, x2);
        assert_eq!(s1, s2);
        assert_eq!(p1, p2);
        let err = (&m1 - &m2).abs();
        assert!(err < WideReal::parse("1e-30", 40).unwrap());
        // worst margin of x - theta(x) over [2, N] is at the At point of 3
        assert_eq!(x1, 3);
        assert_eq!(s1, crate::report::CheckSide::At);
    }
}
