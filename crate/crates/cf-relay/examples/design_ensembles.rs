//! Runs the three degree-distribution optimizations at one operating point
//! and prints the achieved rates against their limits.
//!
//!     cargo run --release --example design_ensembles

use cf_relay::channel::{reference_rates, ChannelParams};
use cf_relay::design::{design_all, design_df, OptimizerConfig};

fn main() {
    let epsilon = 0.5;
    let cfg = OptimizerConfig::default();
    let refs = reference_rates(ChannelParams::new(epsilon, 0).unwrap());

    let set = design_all(epsilon, &cfg).unwrap();
    println!("source code      R0  = {:.6}  (bound {:.4})", set.c1.rate, refs.cutset_bound);
    println!("quantizer        R_b = {:.6}  (floor {:.4})", set.ldgm.rate, refs.ldgm_rate_floor);
    println!("syndrome code    R_p = {:.6}  (limit {:.4})", set.c2_ldpc.rate, refs.h_yr_given_yd);

    println!("\nsource-code edge distribution:");
    for (d, v) in set.c1.dist.iter() {
        println!("  degree {d:>3}  {v:.6}");
    }
    println!("\nquantizer edge distribution (first entries):");
    for (d, v) in set.ldgm.dist.iter().take(8) {
        println!("  degree {d:>3}  {v:.6}");
    }
    println!("  ... up to degree {}", set.ldgm.dist.max_degree());
    println!("\nsyndrome-code pair:");
    println!("  b side: {}", set.c2_ldpc.v_bd);
    println!("  check side: {}", set.c2_ldpc.v_pd);

    let df = design_df(epsilon, &cfg).unwrap();
    println!("\ndecode-and-forward baseline: R = {:.6} at check degree {} (bound {:.4})",
             df.rate, df.d_s, refs.df_bound);
}
