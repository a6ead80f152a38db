//! One relay-side block: map the observation to bit constraints, quantize,
//! take the syndrome, and serialize the payload.
//!
//!     cargo run --release --example compress_block

use cf_relay::channel::{broadcast_transmit, ChannelParams};
use cf_relay::compress::{compress, map_constraints, BitConstraint, DitherSequence};
use cf_relay::design::{design_all, OptimizerConfig};
use cf_relay::graph::instantiate_c2;
use cf_relay::rng::Rng;

fn main() {
    let cfg = OptimizerConfig { grid_size: 201, ..OptimizerConfig::default() };
    let set = design_all(0.5, &cfg).unwrap();
    let n = 10_000;
    let c2 = instantiate_c2(&set.ldgm.dist, set.cfg.d_b, &set.c2_ldpc.v_bd, &set.c2_ldpc.v_pd,
                            set.ldgm.rate, set.c2_ldpc.rate, n, 11, 12).unwrap();

    let mut rng = Rng::from_seed(3);
    let x_s: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let (y_r, _) = broadcast_transmit(&x_s, ChannelParams::new(0.5, 21).unwrap());

    let v = DitherSequence::generate(33, 2 * n);
    let constraints = map_constraints(&y_r, &v);
    let forced = constraints.iter().filter(|c| !matches!(c, BitConstraint::DontCare)).count();
    println!("mapped bits: {} ({} forced, {} free)", constraints.len(), forced,
             constraints.len() - forced);

    let (payload, stats) = compress(&c2, &y_r, 33).unwrap();
    println!("quantized onto {} b-bits with {} decimations", payload.m, stats.decimations);
    println!("flipped constraints: {} ({:.4}% of mapped bits)", stats.flips,
             100.0 * stats.flips as f64 / (2.0 * n as f64));
    println!("syndrome bits: {} (rate {:.4} per source symbol)", payload.t,
             payload.t as f64 / n as f64);
    let wire = payload.to_bytes();
    println!("payload on the wire: {} bytes", wire.len());
}
