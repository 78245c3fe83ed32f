use prime_gate::engine::{Engine, ThetaChain};
use prime_gate::theta_bounds::{check_theta_items, EndpointConvention, ThetaBoundItem};
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let engine = Engine::with_defaults();
    let hi: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000_000);
    let t0 = Instant::now();
    let chain = Arc::new(ThetaChain::build(&engine, hi + 1, 30).unwrap());
    println!("chain build to {hi}: {:.1} s ({} segments)", t0.elapsed().as_secs_f64(), chain.n_segments());
    let t0 = Instant::now();
    let reports = check_theta_items(
        &engine,
        &[ThetaBoundItem::P1_1, ThetaBoundItem::P1_2, ThetaBoundItem::P1_3, ThetaBoundItem::P1_5],
        2, hi, 30, EndpointConvention::Inclusive, Some(&chain),
    ).unwrap();
    println!("combined walk 4 items: {:.1} s", t0.elapsed().as_secs_f64());
    for r in &reports {
        println!("  {}: holds={} worst={} at {} ({:?}) points={}", r.name, r.holds, r.worst_margin.to_sci(8), r.witness, r.witness_side, r.points_checked);
    }
}
