//! Explicit bounds on the Chebyshev theta function, verified exhaustively
//! at step-function breakpoints.
//!
//! Seven bound items are supported: five absolute-error envelopes for
//! `|theta(x) - x|` with their stated validity domains, and the two sides
//! of the sandwich
//! `x (1 - 2/(3 ln^1.5 x)) < theta(x) < x (1 + 1/(3 ln^1.5 x))` for
//! `x >= 6400`.

use crate::engine::{Engine, ThetaChain};
use crate::report::InequalityReport;
use crate::walk::{self, MarginItem, PointCtx, WalkConfig};
use crate::wide::WideReal;
use crate::{Error, Result};
use std::sync::Arc;

pub use crate::walk::breakpoints;

/// Bound items, in the order they are stated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaBoundItem {
    /// `theta(x) < x` for `x < 10^8`.
    P1_1,
    /// `|theta(x) - x| < 2.05282 sqrt(x)` for `x < 10^8`.
    P1_2,
    /// `|theta(x) - x| < 0.0239922 x / ln x` for `x >= 758711`.
    P1_3,
    /// `|theta(x) - x| < 0.0077629 x / ln x` for `x >= exp(22)`.
    P1_4,
    /// `|theta(x) - x| < 8.072 x / ln^2 x` for `x > 1`.
    P1_5,
    /// `theta(x) > x (1 - 2/(3 ln^1.5 x))` for `x >= 6400`.
    Lemma1Lower,
    /// `theta(x) < x (1 + 1/(3 ln^1.5 x))` for `x >= 6400`.
    Lemma1Upper,
}

/// Whether a `x < 10^8`-style stated domain admits its right endpoint.
///
/// The stated inequalities are strict in `x < 10^8` and the source text does
/// not say whether the endpoint itself was checked; both conventions are
/// supported and the one used is recorded in the report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EndpointConvention {
    /// Allow `hi = 10^8` and check the endpoint too.
    #[default]
    Inclusive,
    /// Demand `hi < 10^8`.
    Exclusive,
}

const TEN_POW_8: u64 = 100_000_000;
/// Smallest integer `>= exp(22) = 3584912846.13...`
const EXP22_CEIL: u64 = 3_584_912_847;

impl ThetaBoundItem {
    pub fn name(&self) -> &'static str {
        match self {
            ThetaBoundItem::P1_1 => "prop1.1",
            ThetaBoundItem::P1_2 => "prop1.2",
            ThetaBoundItem::P1_3 => "prop1.3",
            ThetaBoundItem::P1_4 => "prop1.4",
            ThetaBoundItem::P1_5 => "prop1.5",
            ThetaBoundItem::Lemma1Lower => "lemma1.lower",
            ThetaBoundItem::Lemma1Upper => "lemma1.upper",
        }
    }

    /// Smallest x in the stated validity domain.
    pub fn min_x(&self) -> u64 {
        match self {
            ThetaBoundItem::P1_1 | ThetaBoundItem::P1_2 | ThetaBoundItem::P1_5 => 2,
            ThetaBoundItem::P1_3 => 758_711,
            ThetaBoundItem::P1_4 => EXP22_CEIL,
            ThetaBoundItem::Lemma1Lower | ThetaBoundItem::Lemma1Upper => 6_400,
        }
    }

    /// Largest admissible hi under the given endpoint convention, if the
    /// stated domain is bounded.
    pub fn max_hi(&self, convention: EndpointConvention) -> Option<u64> {
        match self {
            ThetaBoundItem::P1_1 | ThetaBoundItem::P1_2 => Some(match convention {
                EndpointConvention::Inclusive => TEN_POW_8,
                EndpointConvention::Exclusive => TEN_POW_8 - 1,
            }),
            _ => None,
        }
    }

    pub fn requirement(&self) -> String {
        match self {
            ThetaBoundItem::P1_1 | ThetaBoundItem::P1_2 => "2 <= lo <= hi < 10^8 (or hi = 10^8 inclusive)".into(),
            ThetaBoundItem::P1_3 => "lo >= 758711".into(),
            ThetaBoundItem::P1_4 => format!("lo >= {EXP22_CEIL} (= ceil(exp 22))"),
            ThetaBoundItem::P1_5 => "lo >= 2".into(),
            ThetaBoundItem::Lemma1Lower | ThetaBoundItem::Lemma1Upper => "lo >= 6400".into(),
        }
    }

    fn needs_sqrt_x(&self) -> bool {
        matches!(self, ThetaBoundItem::P1_2)
    }

    fn needs_rsqrt_ln(&self) -> bool {
        matches!(self, ThetaBoundItem::Lemma1Lower | ThetaBoundItem::Lemma1Upper)
    }

    /// Margin function (bound minus quantity) at guard precision.
    fn margin_item(&self, digits: u32) -> MarginItem {
        let guard = digits + 10;
        let name = self.name();
        let min_x = self.min_x();
        let eval: Box<dyn Fn(&PointCtx) -> WideReal + Send + Sync> = match self {
            ThetaBoundItem::P1_1 => Box::new(move |ctx| {
                &WideReal::from_u64(ctx.x, guard) - ctx.theta
            }),
            ThetaBoundItem::P1_2 => {
                let c = WideReal::parse("2.05282", guard).unwrap();
                Box::new(move |ctx| {
                    let x = WideReal::from_u64(ctx.x, guard);
                    let dev = (&x - ctx.theta).abs();
                    &(&c * ctx.sqrt_x.expect("sqrt tracked")) - &dev
                })
            }
            ThetaBoundItem::P1_3 | ThetaBoundItem::P1_4 => {
                let c = WideReal::parse(
                    if matches!(self, ThetaBoundItem::P1_3) {
                        "0.0239922"
                    } else {
                        "0.0077629"
                    },
                    guard,
                )
                .unwrap();
                Box::new(move |ctx| {
                    let x = WideReal::from_u64(ctx.x, guard);
                    let dev = (&x - ctx.theta).abs();
                    &(&(&c * &x) / ctx.ln_x) - &dev
                })
            }
            ThetaBoundItem::P1_5 => {
                let c = WideReal::parse("8.072", guard).unwrap();
                Box::new(move |ctx| {
                    let x = WideReal::from_u64(ctx.x, guard);
                    let dev = (&x - ctx.theta).abs();
                    &(&(&c * &x) / &(ctx.ln_x * ctx.ln_x)) - &dev
                })
            }
            ThetaBoundItem::Lemma1Lower => {
                let two_thirds = &WideReal::from_u64(2, guard) / &WideReal::from_u64(3, guard);
                Box::new(move |ctx| {
                    // theta - x + (2/3) x / ln^1.5 x
                    let x = WideReal::from_u64(ctx.x, guard);
                    let r = ctx.rsqrt_ln_x.expect("rsqrt ln tracked");
                    let envelope = &(&(&two_thirds * &x) * r) / ctx.ln_x;
                    &(ctx.theta - &x) + &envelope
                })
            }
            ThetaBoundItem::Lemma1Upper => {
                let third = &WideReal::from_u64(1, guard) / &WideReal::from_u64(3, guard);
                Box::new(move |ctx| {
                    let x = WideReal::from_u64(ctx.x, guard);
                    let r = ctx.rsqrt_ln_x.expect("rsqrt ln tracked");
                    let envelope = &(&(&third * &x) * r) / ctx.ln_x;
                    &(&x + &envelope) - ctx.theta
                })
            }
        };
        MarginItem { name, min_x, eval }
    }
}

/// Verifies one bound item at every breakpoint in `[lo, hi]`.
pub fn check_theta_bound(
    engine: &Engine,
    item: ThetaBoundItem,
    lo: u64,
    hi: u64,
    digits: u32,
    convention: EndpointConvention,
) -> Result<InequalityReport> {
    validate_range(item, lo, hi, convention)?;
    let mut reports = check_theta_items(engine, &[item], lo, hi, digits, convention, None)?;
    Ok(reports.pop().expect("one item one report"))
}

/// Verifies several items in a single breakpoint walk over `[lo, hi]`
/// (items whose stated domain starts above `lo` are clipped to it).
/// Domain validation against the *requested* range applies per item only at
/// the top (`hi` side); use [`check_theta_bound`] for strict single-item
/// domain handling.
pub fn check_theta_items(
    engine: &Engine,
    items: &[ThetaBoundItem],
    lo: u64,
    hi: u64,
    digits: u32,
    convention: EndpointConvention,
    shared_chain: Option<&Arc<ThetaChain>>,
) -> Result<Vec<InequalityReport>> {
    for item in items {
        if let Some(mx) = item.max_hi(convention) {
            if hi > mx {
                return Err(Error::Domain {
                    check: item.name().into(),
                    requirement: item.requirement(),
                });
            }
        }
    }
    if lo < 2 || lo > hi {
        return Err(Error::Usage(format!("invalid range [{lo}, {hi}]")));
    }
    if hi > engine.config().sieve_limit {
        return Err(Error::Capacity {
            what: "theta bound check",
            requested: hi,
            limit: engine.config().sieve_limit,
        });
    }
    let cfg = WalkConfig {
        lo,
        hi,
        digits,
        track_sqrt_x: items.iter().any(|i| i.needs_sqrt_x()),
        track_rsqrt_ln: items.iter().any(|i| i.needs_rsqrt_ln()),
    };
    let margin_items: Vec<MarginItem> = items.iter().map(|i| i.margin_item(digits)).collect();
    let outcome = match shared_chain {
        Some(chain) => walk::walk_range_with_chain(engine, &cfg, &margin_items, chain)?,
        None => walk::walk_range(engine, &cfg, &margin_items)?,
    };
    Ok(outcome
        .trackers
        .into_iter()
        .zip(items)
        .map(|(t, item)| {
            let eff_lo = lo.max(item.min_x());
            t.into_report(item.name(), eff_lo, hi)
                .with_notes(format!(
                    "endpoint convention: {:?}; margins at {} digits",
                    convention, digits
                ))
        })
        .collect())
}

fn validate_range(
    item: ThetaBoundItem,
    lo: u64,
    hi: u64,
    convention: EndpointConvention,
) -> Result<()> {
    if lo < item.min_x() {
        return Err(Error::Domain {
            check: item.name().into(),
            requirement: item.requirement(),
        });
    }
    if lo > hi {
        return Err(Error::Usage(format!("invalid range [{lo}, {hi}]")));
    }
    if let Some(mx) = item.max_hi(convention) {
        if hi > mx {
            return Err(Error::Domain {
                check: item.name().into(),
                requirement: item.requirement(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine() -> Engine {
        Engine::with_defaults()
    }

    #[test]
    fn p1_1_holds_to_desk_range() {
        let e = engine();
        let r = check_theta_bound(
            &e,
            ThetaBoundItem::P1_1,
            2,
            1_000_000,
            30,
            EndpointConvention::Inclusive,
        )
        .unwrap();
        assert!(r.holds);
        // worst margin of x - theta(x) sits just after the jump at 3
        assert_eq!(r.witness, 3);
        assert!(r.worst_margin > WideReal::parse("1.2", 30).unwrap());
        assert!(r.worst_margin < WideReal::parse("1.3", 30).unwrap());
    }

    #[test]
    fn p1_5_at_smallest_prime() {
        let e = engine();
        let r = check_theta_bound(
            &e,
            ThetaBoundItem::P1_5,
            2,
            3,
            30,
            EndpointConvention::Inclusive,
        )
        .unwrap();
        assert!(r.holds);
        // |theta(2) - 2| = 2 - ln 2 = 1.3069; envelope 8.072*2/ln^2 2 = 33.6
        // worst margin in [2,3] is at the At point of 3
        assert!(r.points_checked >= 3);
    }

    #[test]
    fn lemma_holds_at_single_point_6400() {
        let e = engine();
        for item in [ThetaBoundItem::Lemma1Lower, ThetaBoundItem::Lemma1Upper] {
            let r = check_theta_bound(&e, item, 6400, 6400, 30, EndpointConvention::Inclusive)
                .unwrap();
            assert!(r.holds, "{} at 6400", r.name);
            assert_eq!(r.witness, 6400);
            assert_eq!(r.points_checked, 1);
        }
    }

    #[test]
    fn lemma_margins_match_direct_evaluation() {
        // direct: theta(6400) = 6338.7231303...; lower margin =
        // theta - 6400(1 - 2/(3 ln^1.5 6400))
        let e = engine();
        let r = check_theta_bound(
            &e,
            ThetaBoundItem::Lemma1Lower,
            6400,
            6400,
            35,
            EndpointConvention::Inclusive,
        )
        .unwrap();
        let d = 45u32;
        let theta = e.theta_exact(6400, d).unwrap();
        let x = WideReal::from_u64(6400, d);
        let u = x.ln();
        let envelope = &(&(&WideReal::from_u64(2, d) * &x)
            / &(&WideReal::from_u64(3, d) * &(&u * &u.sqrt())))
            - &x;
        let want = &theta + &envelope;
        let err = (&r.worst_margin - &want).abs();
        assert!(err < WideReal::parse("1e-20", d).unwrap(), "err {}", err.to_sci(5));
    }

    #[test]
    fn domain_violations_are_reported() {
        let e = engine();
        let err = check_theta_bound(
            &e,
            ThetaBoundItem::P1_3,
            2,
            100,
            30,
            EndpointConvention::Inclusive,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        assert!(err.to_string().contains("758711"));

        let err = check_theta_bound(
            &e,
            ThetaBoundItem::P1_1,
            2,
            TEN_POW_8,
            30,
            EndpointConvention::Exclusive,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn combined_walk_matches_single_walks() {
        let e = engine();
        let combined = check_theta_items(
            &e,
            &[ThetaBoundItem::P1_1, ThetaBoundItem::P1_2, ThetaBoundItem::P1_5],
            2,
            200_000,
            30,
            EndpointConvention::Inclusive,
            None,
        )
        .unwrap();
        for (item, got) in [
            ThetaBoundItem::P1_1,
            ThetaBoundItem::P1_2,
            ThetaBoundItem::P1_5,
        ]
        .iter()
        .zip(&combined)
        {
            let single = check_theta_bound(
                &e,
                *item,
                2,
                200_000,
                30,
                EndpointConvention::Inclusive,
            )
            .unwrap();
            assert_eq!(single.witness, got.witness, "{}", single.name);
            assert_eq!(single.points_checked, got.points_checked);
            assert_eq!(
                single.worst_margin, got.worst_margin,
                "margins differ for {}",
                single.name
            );
        }
    }

    #[test]
    fn p1_3_on_its_domain() {
        let e = engine();
        let r = check_theta_bound(
            &e,
            ThetaBoundItem::P1_3,
            758_711,
            1_200_000,
            30,
            EndpointConvention::Inclusive,
        )
        .unwrap();
        assert!(r.holds);
        assert_eq!(r.lo, 758_711);
    }
}
