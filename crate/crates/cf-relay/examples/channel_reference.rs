//! Prints the conditional law of the erasure broadcast channel and the
//! information-theoretic reference rates across erasure probabilities.
//!
//!     cargo run --release --example channel_reference

use cf_relay::channel::{joint_table, reference_rates, ChannelParams, TernarySymbol};

fn main() {
    let params = ChannelParams::new(0.5, 0).unwrap();
    let table = joint_table(params);
    let symbols = [TernarySymbol::Zero, TernarySymbol::One, TernarySymbol::Erased];
    let label = |s: TernarySymbol| match s {
        TernarySymbol::Zero => "0",
        TernarySymbol::One => "1",
        TernarySymbol::Erased => "E",
    };

    println!("p(y_d, y_r | x_s = 0) at erasure probability 0.5");
    println!("  y_d\\y_r     0       1       E");
    for d in symbols {
        print!("    {}     ", label(d));
        for r in symbols {
            print!("{:7.4} ", table.prob(false, d, r));
        }
        println!();
    }

    println!("\nreference quantities per erasure probability:");
    println!("  eps    relay-decode  merged   H(y_r)  H(y_r|y_d)  quantizer floor");
    for eps in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let r = reference_rates(ChannelParams::new(eps, 0).unwrap());
        println!(
            "  {eps:.1}    {:>12.4} {:>8.4} {:>8.4} {:>11.4} {:>16.4}",
            r.df_bound, r.cutset_bound, r.h_yr, r.h_yr_given_yd, r.ldgm_rate_floor
        );
    }
}
