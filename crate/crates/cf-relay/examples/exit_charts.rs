//! Exports the curve bundle (the two compression-code curves and the source
//! code's pair) as CSV files for plotting.
//!
//!     cargo run --release --example exit_charts [out-dir]

use cf_relay::cli::{bundle_curves, DesignBundle};
use cf_relay::design::{design_all, dominance_margin, OptimizerConfig};
use cf_relay::exit::export_curve;
use std::io::Write;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "charts".into());
    std::fs::create_dir_all(&out).unwrap();

    let cfg = OptimizerConfig { grid_size: 201, ..OptimizerConfig::default() };
    let set = design_all(0.5, &cfg).unwrap();
    let bundle = DesignBundle {
        epsilon: 0.5,
        d_s: cfg.d_s,
        d_b: cfg.d_b,
        c1: set.c1.clone(),
        ldgm: set.ldgm.clone(),
        c2_ldpc: set.c2_ldpc.clone(),
        df: None,
    };
    let curves = bundle_curves(&bundle, 1001).unwrap();
    for (name, curve) in &curves {
        let path = format!("{out}/{name}");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
        export_curve(curve, &mut f).unwrap();
        f.flush().unwrap();
        println!("wrote {path} ({} points)", curve.len());
    }
    let (margin, at) = dominance_margin(&curves[0].1, &curves[1].1, cfg.gap_pb, 10_001);
    println!("curve separation: minimum margin {margin:.5} at abscissa {at:.4}");
}
