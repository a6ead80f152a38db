use cf_relay::design::{design_all, OptimizerConfig};
use cf_relay::graph::{instantiate_c1, instantiate_c2};
use cf_relay::ldpc::build_systematic_encoder;
use cf_relay::sim::{monte_carlo, CfCodes, CodeSet, Mode, SimConfig};

fn main() {
    let set = design_all(0.5, &OptimizerConfig::default()).unwrap();
    println!("R0={:.5} Rb={:.5} Rp={:.5}", set.c1.rate, set.ldgm.rate, set.c2_ldpc.rate);
    let n = 10_000;
    let c1 = instantiate_c1(&set.c1.dist, set.cfg.d_s, set.c1.rate, n, 101).unwrap();
    let c1_encoder = build_systematic_encoder(&c1).unwrap();
    let c2 = instantiate_c2(&set.ldgm.dist, set.cfg.d_b, &set.c2_ldpc.v_bd, &set.c2_ldpc.v_pd,
                            set.ldgm.rate, set.c2_ldpc.rate, n, 102, 103).unwrap();
    let codes = CodeSet::Cf(CfCodes { c1, c1_encoder, c2 });
    let cfg = SimConfig { epsilon: 0.5, n, trials: 50, mode: Mode::Cf, master_seed: 2024, jobs: 8, iter_cap: 1_000_000 };
    let agg = monte_carlo(&cfg, &codes).unwrap();
    println!("success {:.2} zero-err {:.2} decode {:.2} mean_ber {:.3e}",
             agg.success_fraction, agg.zero_error_fraction, agg.decode_fraction, agg.mean_ber);
    // stats among recovered blocks only
    let rec: Vec<_> = agg.blocks.iter().filter(|b| b.yr_recovered).collect();
    let zero = rec.iter().filter(|b| b.ber == 0.0).count();
    let mean: f64 = rec.iter().map(|b| b.ber).sum::<f64>() / rec.len() as f64;
    println!("recovered {}: zero-ber {} mean-ber {:.3e} iters_ldpc {:.0}",
             rec.len(), zero, mean,
             rec.iter().map(|b| b.iters_ldpc as f64).sum::<f64>() / rec.len() as f64);
    let errs = agg.blocks.iter().filter(|b| b.error.is_some()).count();
    println!("blocks with stage errors: {errs}");
    for b in agg.blocks.iter().filter(|b| b.error.is_some()).take(4) {
        println!("  block {}: {}", b.block, b.error.as_ref().unwrap());
    }
    let fails = agg.blocks.iter().filter(|b| !b.yr_recovered && b.error.is_none()).count();
    println!("plain reconstruction failures: {fails}");
}
