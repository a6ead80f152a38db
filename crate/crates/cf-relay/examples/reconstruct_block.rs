//! A full compress-and-forward round trip for one block: relay compression,
//! destination-side reconstruction, and source decoding.
//!
//!     cargo run --release --example reconstruct_block

use cf_relay::channel::{broadcast_transmit, ChannelParams};
use cf_relay::compress::{compress, reconstruct_yr, DitherSequence, ReconstructOutcome};
use cf_relay::design::{design_all, OptimizerConfig};
use cf_relay::graph::{instantiate_c1, instantiate_c2};
use cf_relay::ldpc::{build_systematic_encoder, destination_decode, DecodeOutcome, MessageWord};
use cf_relay::rng::Rng;

fn main() {
    let cfg = OptimizerConfig { grid_size: 201, ..OptimizerConfig::default() };
    let set = design_all(0.5, &cfg).unwrap();
    let n = 10_000;
    let c1 = instantiate_c1(&set.c1.dist, set.cfg.d_s, set.c1.rate, n, 31).unwrap();
    let encoder = build_systematic_encoder(&c1).unwrap();
    let c2 = instantiate_c2(&set.ldgm.dist, set.cfg.d_b, &set.c2_ldpc.v_bd, &set.c2_ldpc.v_pd,
                            set.ldgm.rate, set.c2_ldpc.rate, n, 32, 33).unwrap();

    let mut rng = Rng::from_seed(5);
    let message = MessageWord { bits: (0..encoder.message_len()).map(|_| rng.gen_bool(0.5)).collect() };
    let x_s = encoder.encode(&c1.as_c1().unwrap().graph, &message).unwrap();
    let (y_r, y_d) = broadcast_transmit(&x_s.bits, ChannelParams::new(0.5, 77).unwrap());
    println!("sent {} message bits over both links", message.bits.len());

    let (payload, qstats) = compress(&c2, &y_r, 99).unwrap();
    println!("relay: {} syndrome bits, {} flips", payload.t, qstats.flips);

    let v = DitherSequence::generate(99, 2 * n);
    let (outcome, rstats) = reconstruct_yr(&c2, &payload, &y_d, &v).unwrap();
    match outcome {
        ReconstructOutcome::Recovered(y_hat) => {
            println!("destination: relay observation reconstructed in {} rounds (exact: {})",
                     rstats.rounds, y_hat == y_r);
            let (decode, pstats) = destination_decode(&c1, &encoder, &y_d, &y_hat).unwrap();
            match decode {
                DecodeOutcome::Message(m) => println!(
                    "message decode: {} rounds, errors {}",
                    pstats.rounds,
                    m.bits.iter().zip(&message.bits).filter(|(a, b)| a != b).count()
                ),
                DecodeOutcome::Failed { residual, .. } => {
                    println!("message decode stalled with {residual} unresolved positions")
                }
            }
        }
        ReconstructOutcome::Failed { residual_b } => {
            println!("reconstruction stalled ({residual_b} undecided); block would fall back to y_d only")
        }
    }
}
