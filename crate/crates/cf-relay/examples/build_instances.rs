//! Samples concrete code graphs from a fresh design, persists them, and
//! loads them back.
//!
//!     cargo run --release --example build_instances

use cf_relay::design::{design_all, OptimizerConfig};
use cf_relay::graph::{instantiate_c1, instantiate_c2, load_instance, save_instance};

fn main() {
    let cfg = OptimizerConfig { grid_size: 201, ..OptimizerConfig::default() };
    let set = design_all(0.5, &cfg).unwrap();
    let n = 5000;

    let c1 = instantiate_c1(&set.c1.dist, set.cfg.d_s, set.c1.rate, n, 7).unwrap();
    println!("source code: n {} checks {} edges {}", c1.n, c1.m(),
             c1.as_c1().unwrap().graph.edge_count());

    let c2 = instantiate_c2(&set.ldgm.dist, set.cfg.d_b, &set.c2_ldpc.v_bd, &set.c2_ldpc.v_pd,
                            set.ldgm.rate, set.c2_ldpc.rate, n, 8, 9).unwrap();
    let body = c2.as_c2().unwrap();
    println!("compression code: b-bits {} mapped bits {} syndrome bits {}",
             c2.m(), body.ldgm.n_right, c2.t());
    println!("  realized m/n = {:.4} (designed {:.4})", c2.m() as f64 / n as f64, set.ldgm.rate);
    println!("  realized t/n = {:.4} (designed {:.4})", c2.t() as f64 / n as f64, set.c2_ldpc.rate);

    let mut buf = Vec::new();
    save_instance(&c2, &mut buf).unwrap();
    println!("serialized instance: {} bytes", buf.len());
    let loaded = load_instance(&mut &buf[..]).unwrap();
    assert_eq!(loaded, c2);
    println!("round trip: identical");
}
