//! Desk-scale Monte Carlo comparison of the two relay protocols.
//!
//!     cargo run --release --example simulate_cf_vs_df

use cf_relay::design::{design_all, design_df, OptimizerConfig};
use cf_relay::graph::{instantiate_c1, instantiate_c2};
use cf_relay::ldpc::build_systematic_encoder;
use cf_relay::sim::{monte_carlo, CfCodes, CodeSet, DfCodes, Mode, SimConfig};

fn main() {
    let epsilon = 0.5;
    let opt = OptimizerConfig { grid_size: 201, ..OptimizerConfig::default() };
    let n = 4000;
    let trials = 10;

    let set = design_all(epsilon, &opt).unwrap();
    let c1 = instantiate_c1(&set.c1.dist, set.cfg.d_s, set.c1.rate, n, 51).unwrap();
    let c1_encoder = build_systematic_encoder(&c1).unwrap();
    let c2 = instantiate_c2(&set.ldgm.dist, set.cfg.d_b, &set.c2_ldpc.v_bd, &set.c2_ldpc.v_pd,
                            set.ldgm.rate, set.c2_ldpc.rate, n, 52, 53).unwrap();
    let cf_rate = set.c1.rate;
    let cf = CodeSet::Cf(CfCodes { c1, c1_encoder, c2 });

    let df_design = design_df(epsilon, &opt).unwrap();
    let c1 = instantiate_c1(&df_design.dist, df_design.d_s, df_design.rate, n, 54).unwrap();
    let c1_encoder = build_systematic_encoder(&c1).unwrap();
    let df = CodeSet::Df(DfCodes { c1, c1_encoder });

    println!("protocol  rate     success  zero-err  mean BER");
    for (name, rate, mode, codes) in [
        ("CF", cf_rate, Mode::Cf, &cf),
        ("DF", df_design.rate, Mode::Df, &df),
    ] {
        let cfg = SimConfig {
            epsilon, n, trials, mode, master_seed: 99, jobs: 4, iter_cap: 1_000_000,
        };
        let agg = monte_carlo(&cfg, codes).unwrap();
        println!("{name:<9} {rate:<8.4} {:<8.2} {:<9.2} {:.3e}",
                 agg.success_fraction, agg.zero_error_fraction, agg.mean_ber);
    }
    println!("\nthe compress-and-forward source rate beats the decode-and-forward bound of {:.2}",
             1.0 - epsilon);
}
