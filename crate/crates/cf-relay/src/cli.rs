//! Command entry points: design, build, simulate, chart.
//!
//! Each command is a pure function of the config file and the files on disk;
//! rerunning one rewrites byte-identical artifacts. Every output file starts
//! with a `# config <fingerprint>` comment naming the configuration that
//! produced it. Timing is printed to stderr and kept out of the files.

use crate::channel::{reference_rates, ChannelParams};
use crate::config::ExperimentConfig;
use crate::design::{
    design_all, design_df, ldpc_part_ebp_curve, C1Design, C2LdpcDesign, LdgmDesign,
};
use crate::dist::EdgeDegreeDistribution;
use crate::error::{Error, Result};
use crate::exit::{
    exit_q, exit_s, export_curve, ldgm_decoder_ebp, side_info_mi, uniform_grid, ExitCurve,
};
use crate::graph::{instantiate_c1, instantiate_c2, load_instance, save_instance, CodeInstance};
use crate::ldpc::build_systematic_encoder;
use crate::rng::derive_seed;
use crate::sim::{monte_carlo, AggregateReport, CfCodes, CodeSet, DfCodes, Mode, SimConfig};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

const ENSEMBLES_MAGIC: &str = "cfrelay-ensembles";
const ENSEMBLES_VERSION: &str = "v1";

/// Everything cmd_design produces and the later stages consume.
#[derive(Debug, Clone)]
pub struct DesignBundle {
    pub epsilon: f64,
    pub d_s: usize,
    pub d_b: usize,
    pub c1: C1Design,
    pub ldgm: LdgmDesign,
    pub c2_ldpc: C2LdpcDesign,
    pub df: Option<C1Design>,
}

pub fn ensembles_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("ensembles.txt")
}

fn instance_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(format!("{name}.inst"))
}

fn save_ensembles(cfg: &ExperimentConfig, bundle: &DesignBundle) -> Result<PathBuf> {
    let path = ensembles_path(cfg);
    let file = std::fs::File::create(&path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{ENSEMBLES_MAGIC} {ENSEMBLES_VERSION}")?;
    writeln!(w, "# config {}", cfg.fingerprint())?;
    writeln!(
        w,
        "epsilon {} d_s {} d_b {}",
        bundle.epsilon, bundle.d_s, bundle.d_b
    )?;
    writeln!(
        w,
        "rates r0 {} rb {} rp {}",
        bundle.c1.rate, bundle.ldgm.rate, bundle.c2_ldpc.rate
    )?;
    crate::graph::write_dist(&mut w, "v_qd", &bundle.c1.dist)?;
    crate::graph::write_dist(&mut w, "v_cd", &bundle.ldgm.dist)?;
    crate::graph::write_dist(&mut w, "v_bd", &bundle.c2_ldpc.v_bd)?;
    crate::graph::write_dist(&mut w, "v_pd", &bundle.c2_ldpc.v_pd)?;
    if let Some(df) = &bundle.df {
        writeln!(w, "df d_s {} rate {}", df.d_s, df.rate)?;
        crate::graph::write_dist(&mut w, "v_qd_df", &df.dist)?;
    }
    w.flush()?;
    Ok(path)
}

/// Loads an ensembles file written by [`cmd_design`].
pub fn load_ensembles(path: &Path) -> Result<DesignBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!(
            "missing ensembles at {} (run design first): {e}",
            path.display()
        ))
    })?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let mut next = |what: &str| {
        lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("unexpected end of ensembles file, expected {what}"),
        })
    };

    let (ln, magic) = next("the magic line")?;
    let mut it = magic.split_whitespace();
    if it.next() != Some(ENSEMBLES_MAGIC) {
        return Err(Error::Parse {
            line: ln,
            msg: "not an ensembles file".into(),
        });
    }
    let version = it.next().unwrap_or("");
    if version != ENSEMBLES_VERSION {
        return Err(Error::VersionMismatch {
            found: version.into(),
            expected: ENSEMBLES_VERSION.into(),
        });
    }

    let (ln, header) = next("the header line")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let lookup = |key: &str| -> Result<&str> {
        fields
            .iter()
            .position(|&f| f == key)
            .and_then(|i| fields.get(i + 1).copied())
            .ok_or(Error::Parse {
                line: ln,
                msg: format!("missing field {key}"),
            })
    };
    let epsilon: f64 = lookup("epsilon")?.parse().map_err(|_| Error::Parse {
        line: ln,
        msg: "bad epsilon".into(),
    })?;
    let d_s: usize = lookup("d_s")?.parse().map_err(|_| Error::Parse {
        line: ln,
        msg: "bad d_s".into(),
    })?;
    let d_b: usize = lookup("d_b")?.parse().map_err(|_| Error::Parse {
        line: ln,
        msg: "bad d_b".into(),
    })?;

    let (ln2, rates_line) = next("the rates line")?;
    let rfields: Vec<&str> = rates_line.split_whitespace().collect();
    let rlookup = |key: &str| -> Result<f64> {
        rfields
            .iter()
            .position(|&f| f == key)
            .and_then(|i| rfields.get(i + 1))
            .and_then(|s| s.parse().ok())
            .ok_or(Error::Parse {
                line: ln2,
                msg: format!("missing rate {key}"),
            })
    };
    let r0 = rlookup("r0")?;
    let rb = rlookup("rb")?;
    let rp = rlookup("rp")?;

    let mut dist_for = |name: &str| -> Result<EdgeDegreeDistribution> {
        let (ln, line) = next(name)?;
        crate::graph::parse_dist(ln, line, name)
    };
    let v_qd = dist_for("v_qd")?;
    let v_cd = dist_for("v_cd")?;
    let v_bd = dist_for("v_bd")?;
    let v_pd = dist_for("v_pd")?;

    let df = match lines.next() {
        Some((ln, line)) if line.starts_with("df ") => {
            let f: Vec<&str> = line.split_whitespace().collect();
            let pos = |key: &str| -> Result<&str> {
                f.iter()
                    .position(|&x| x == key)
                    .and_then(|i| f.get(i + 1).copied())
                    .ok_or(Error::Parse {
                        line: ln,
                        msg: format!("missing df field {key}"),
                    })
            };
            let d_s_df: usize = pos("d_s")?.parse().map_err(|_| Error::Parse {
                line: ln,
                msg: "bad df d_s".into(),
            })?;
            let rate: f64 = pos("rate")?.parse().map_err(|_| Error::Parse {
                line: ln,
                msg: "bad df rate".into(),
            })?;
            let (ln3, dline) = lines.next().ok_or(Error::Parse {
                line: ln,
                msg: "missing v_qd_df ensemble".into(),
            })?;
            let dist = crate::graph::parse_dist(ln3, dline, "v_qd_df")?;
            Some(C1Design {
                dist,
                rate,
                prior: 1.0 - epsilon,
                d_s: d_s_df,
            })
        }
        _ => None,
    };

    Ok(DesignBundle {
        epsilon,
        d_s,
        d_b,
        c1: C1Design {
            dist: v_qd,
            rate: r0,
            prior: 1.0 - epsilon * epsilon,
            d_s,
        },
        ldgm: LdgmDesign {
            dist: v_cd,
            rate: rb,
            i_yc: 1.0 - 0.5 * epsilon,
        },
        c2_ldpc: C2LdpcDesign {
            v_bd,
            v_pd,
            rate: rp,
        },
        df,
    })
}

fn write_curve_file(cfg: &ExperimentConfig, name: &str, curve: &ExitCurve) -> Result<PathBuf> {
    let path = cfg.out_dir.join(name);
    let file = std::fs::File::create(&path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# config {}", cfg.fingerprint())?;
    export_curve(curve, &mut w)?;
    w.flush()?;
    Ok(path)
}

/// The four Fig-4-style curves of a bundle: the two EBP curves of the
/// compression code and the source code's curve pair.
pub fn bundle_curves(
    bundle: &DesignBundle,
    grid_size: usize,
) -> Result<[(String, ExitCurve); 4]> {
    if grid_size < 2 {
        return Err(Error::Domain("curve grid must have at least 2 points".into()));
    }
    let grid = uniform_grid(grid_size);
    let si = side_info_mi(bundle.epsilon)?;
    let ldgm_curve = ldgm_decoder_ebp(&bundle.ldgm.dist, bundle.d_b, &si, &grid)?;
    let ldpc_curve = ldpc_part_ebp_curve(&bundle.c2_ldpc.v_bd, &bundle.c2_ldpc.v_pd, &grid)?;
    let q_curve = ExitCurve::new(
        grid.clone(),
        grid.iter()
            .map(|&x| exit_q(&bundle.c1.dist, bundle.c1.prior, x).clamp(0.0, 1.0))
            .collect(),
        "c1_exit_q",
    )?;
    let s_curve = ExitCurve::new(
        grid.clone(),
        grid.iter().map(|&x| exit_s(x, bundle.d_s)).collect(),
        "c1_exit_s",
    )?;
    Ok([
        ("curve_ldgm_ebp.csv".into(), ldgm_curve),
        ("curve_c2_ldpc_ebp.csv".into(), ldpc_curve),
        ("curve_c1_exit_q.csv".into(), q_curve),
        ("curve_c1_exit_s.csv".into(), s_curve),
    ])
}

/// Runs the three optimizations (plus the decode-and-forward baseline when
/// asked), writes the ensembles file and the curve bundle, and prints the
/// achieved rates against their information-theoretic references.
pub fn cmd_design(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let opt = cfg.optimizer_config();
    let set = design_all(cfg.epsilon, &opt)?;
    let df = if cfg.design_df {
        Some(design_df(cfg.epsilon, &opt)?)
    } else {
        None
    };
    let bundle = DesignBundle {
        epsilon: cfg.epsilon,
        d_s: cfg.d_s,
        d_b: cfg.d_b,
        c1: set.c1.clone(),
        ldgm: set.ldgm.clone(),
        c2_ldpc: set.c2_ldpc.clone(),
        df,
    };

    let refs = reference_rates(ChannelParams::new(cfg.epsilon, 0)?);
    println!(
        "R0  = {:.6}   (merged-channel bound {:.6})",
        bundle.c1.rate, refs.cutset_bound
    );
    println!(
        "R_b = {:.6}   (lossless floor {:.6})",
        bundle.ldgm.rate, refs.ldgm_rate_floor
    );
    println!(
        "R_p = {:.6}   (side-information limit {:.6})",
        bundle.c2_ldpc.rate, refs.h_yr_given_yd
    );
    if let Some(df) = &bundle.df {
        println!(
            "R_df = {:.6}  (relay-decode bound {:.6}, d_s {})",
            df.rate, refs.df_bound, df.d_s
        );
    }

    let path = save_ensembles(cfg, &bundle)?;
    println!("wrote {}", path.display());
    for (name, curve) in bundle_curves(&bundle, cfg.grid_size)? {
        let p = write_curve_file(cfg, &name, &curve)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// Instantiates concrete code graphs from the designed ensembles and saves
/// them, one file per code.
pub fn cmd_build(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let bundle = load_ensembles(&ensembles_path(cfg))?;
    if bundle.d_s != cfg.d_s || bundle.d_b != cfg.d_b || bundle.epsilon != cfg.epsilon {
        return Err(Error::Config(format!(
            "ensembles were designed for epsilon {} d_s {} d_b {}, config asks {} {} {}",
            bundle.epsilon, bundle.d_s, bundle.d_b, cfg.epsilon, cfg.d_s, cfg.d_b
        )));
    }

    let save = |name: &str, inst: &CodeInstance| -> Result<()> {
        let path = instance_path(cfg, name);
        let file = std::fs::File::create(&path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "# config {}", cfg.fingerprint())?;
        save_instance(inst, &mut w)?;
        w.flush()?;
        println!(
            "wrote {} (n {}, m {}, t {})",
            path.display(),
            inst.n,
            inst.m(),
            inst.t()
        );
        Ok(())
    };

    let c1 = instantiate_c1(
        &bundle.c1.dist,
        bundle.c1.d_s,
        bundle.c1.rate,
        cfg.n,
        derive_seed(cfg.seed, "graph-c1", 0),
    )?;
    save("c1", &c1)?;
    let c2 = instantiate_c2(
        &bundle.ldgm.dist,
        bundle.d_b,
        &bundle.c2_ldpc.v_bd,
        &bundle.c2_ldpc.v_pd,
        bundle.ldgm.rate,
        bundle.c2_ldpc.rate,
        cfg.n,
        derive_seed(cfg.seed, "graph-c2", 0),
        derive_seed(cfg.seed, "dither-id", 0),
    )?;
    save("c2", &c2)?;
    if let Some(df) = &bundle.df {
        let inst = instantiate_c1(
            &df.dist,
            df.d_s,
            df.rate,
            cfg.n,
            derive_seed(cfg.seed, "graph-df", 0),
        )?;
        save("c1_df", &inst)?;
    }
    Ok(())
}

fn load_instance_file(cfg: &ExperimentConfig, name: &str) -> Result<CodeInstance> {
    let path = instance_path(cfg, name);
    let file = std::fs::File::open(&path).map_err(|e| {
        Error::Config(format!(
            "missing instance {} (run build first): {e}",
            path.display()
        ))
    })?;
    load_instance(&mut BufReader::new(file))
}

fn write_aggregate_json(
    cfg: &ExperimentConfig,
    name: &str,
    designed_rate: f64,
    agg: &AggregateReport,
) -> Result<PathBuf> {
    let path = cfg.out_dir.join(name);
    let file = std::fs::File::create(&path)?;
    let mut w = BufWriter::new(file);
    // wall-clock time is deliberately omitted: reruns must be byte-identical
    writeln!(w, "{{")?;
    writeln!(w, "  \"config\": \"{}\",", cfg.fingerprint())?;
    writeln!(w, "  \"protocol\": \"{}\",", agg.mode.name())?;
    writeln!(w, "  \"epsilon\": {},", cfg.epsilon)?;
    writeln!(w, "  \"n\": {},", cfg.n)?;
    writeln!(w, "  \"trials\": {},", agg.trials)?;
    writeln!(w, "  \"designed_rate\": {},", designed_rate)?;
    writeln!(w, "  \"mean_ber\": {},", agg.mean_ber)?;
    writeln!(w, "  \"max_ber\": {},", agg.max_ber)?;
    writeln!(w, "  \"zero_error_fraction\": {},", agg.zero_error_fraction)?;
    writeln!(w, "  \"success_fraction\": {},", agg.success_fraction)?;
    writeln!(w, "  \"decode_fraction\": {},", agg.decode_fraction)?;
    writeln!(w, "  \"mean_flips\": {},", agg.mean_flips)?;
    writeln!(w, "  \"mean_crd_required\": {},", agg.mean_crd_required)?;
    writeln!(w, "  \"mean_iters_ldgm\": {},", agg.mean_iters_ldgm)?;
    writeln!(w, "  \"mean_iters_ldpc\": {}", agg.mean_iters_ldpc)?;
    writeln!(w, "}}")?;
    w.flush()?;
    Ok(path)
}

/// Runs the Monte Carlo experiments the config asks for and writes the
/// structured reports plus a combined summary table.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut rows: Vec<(String, f64, AggregateReport)> = Vec::new();

    if cfg.mode.wants_cf() {
        let c1 = load_instance_file(cfg, "c1")?;
        let c2 = load_instance_file(cfg, "c2")?;
        if c1.n != cfg.n || c2.n != cfg.n {
            return Err(Error::Config(format!(
                "instances were built for n {} but the config asks n {}",
                c1.n, cfg.n
            )));
        }
        let designed_rate = c1.as_c1()?.rate;
        let c1_encoder = build_systematic_encoder(&c1)?;
        let codes = CodeSet::Cf(CfCodes {
            c1,
            c1_encoder,
            c2,
        });
        let sim = SimConfig {
            epsilon: cfg.epsilon,
            n: cfg.n,
            trials: cfg.trials,
            mode: Mode::Cf,
            master_seed: cfg.seed,
            jobs: cfg.jobs,
            iter_cap: 1_000_000,
        };
        let agg = monte_carlo(&sim, &codes)?;
        eprintln!("CF: {} blocks in {:.1}s", agg.trials, agg.wall_clock);
        let path = write_aggregate_json(cfg, "report_cf.json", designed_rate, &agg)?;
        println!("wrote {}", path.display());
        rows.push(("CF".into(), designed_rate, agg));
    }

    if cfg.mode.wants_df() {
        let c1 = load_instance_file(cfg, "c1_df")?;
        if c1.n != cfg.n {
            return Err(Error::Config(format!(
                "DF instance was built for n {} but the config asks n {}",
                c1.n, cfg.n
            )));
        }
        let designed_rate = c1.as_c1()?.rate;
        let c1_encoder = build_systematic_encoder(&c1)?;
        let codes = CodeSet::Df(DfCodes { c1, c1_encoder });
        let sim = SimConfig {
            epsilon: cfg.epsilon,
            n: cfg.n,
            trials: cfg.trials,
            mode: Mode::Df,
            master_seed: cfg.seed,
            jobs: cfg.jobs,
            iter_cap: 1_000_000,
        };
        let agg = monte_carlo(&sim, &codes)?;
        eprintln!("DF: {} blocks in {:.1}s", agg.trials, agg.wall_clock);
        let path = write_aggregate_json(cfg, "report_df.json", designed_rate, &agg)?;
        println!("wrote {}", path.display());
        rows.push(("DF".into(), designed_rate, agg));
    }

    // combined summary, one row per protocol
    let path = cfg.out_dir.join("summary.csv");
    let file = std::fs::File::create(&path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# config {}", cfg.fingerprint())?;
    writeln!(
        w,
        "protocol,designed_rate,n,trials,mean_ber,zero_error_fraction,success_fraction,mean_flips,mean_crd_required"
    )?;
    for (name, rate, agg) in &rows {
        writeln!(
            w,
            "{name},{rate},{},{},{},{},{},{},{}",
            cfg.n,
            agg.trials,
            agg.mean_ber,
            agg.zero_error_fraction,
            agg.success_fraction,
            agg.mean_flips,
            agg.mean_crd_required
        )?;
    }
    w.flush()?;
    println!("wrote {}", path.display());

    println!("protocol  rate      mean BER    zero-err  success  flips    C_rd");
    for (name, rate, agg) in &rows {
        println!(
            "{name:<9} {rate:<9.4} {:<11.3e} {:<9.2} {:<8.2} {:<8.1} {:.4}",
            agg.mean_ber,
            agg.zero_error_fraction,
            agg.success_fraction,
            agg.mean_flips,
            agg.mean_crd_required
        );
    }
    Ok(())
}

/// Recomputes and exports the curve bundle from the saved ensembles.
pub fn cmd_chart(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let bundle = load_ensembles(&ensembles_path(cfg))?;
    for (name, curve) in bundle_curves(&bundle, cfg.grid_size)? {
        let p = write_curve_file(cfg, &name, &curve)?;
        println!("wrote {} ({} points)", p.display(), curve.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::parse(
            "n = 1200\ntrials = 2\ngrid_size = 201\nmode = cf\ndesign_df = true\n",
        )
        .unwrap();
        cfg.out_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn design_build_simulate_chart_pipeline() {
        let dir = std::env::temp_dir().join(format!("cfrelay-cli-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = tiny_cfg(&dir);

        cmd_design(&cfg).unwrap();
        let bundle = load_ensembles(&ensembles_path(&cfg)).unwrap();
        assert!(bundle.df.is_some());
        assert!(bundle.c1.rate > 0.7);

        cmd_build(&cfg).unwrap();
        cmd_simulate(&cfg).unwrap();
        cmd_chart(&cfg).unwrap();

        for f in [
            "ensembles.txt",
            "c1.inst",
            "c2.inst",
            "c1_df.inst",
            "report_cf.json",
            "summary.csv",
            "curve_ldgm_ebp.csv",
            "curve_c2_ldpc_ebp.csv",
        ] {
            assert!(dir.join(f).exists(), "{f} missing");
        }
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = std::env::temp_dir().join(format!("cfrelay-cli2-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = tiny_cfg(&dir);
        cmd_design(&cfg).unwrap();
        let first = std::fs::read(ensembles_path(&cfg)).unwrap();
        let first_curve = std::fs::read(dir.join("curve_ldgm_ebp.csv")).unwrap();
        cmd_design(&cfg).unwrap();
        assert_eq!(first, std::fs::read(ensembles_path(&cfg)).unwrap());
        assert_eq!(
            first_curve,
            std::fs::read(dir.join("curve_ldgm_ebp.csv")).unwrap()
        );
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn simulate_without_build_is_a_config_error() {
        let dir = std::env::temp_dir().join(format!("cfrelay-cli3-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = tiny_cfg(&dir);
        assert!(matches!(cmd_simulate(&cfg), Err(Error::Config(_))));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn build_refuses_mismatched_parameters() {
        let dir = std::env::temp_dir().join(format!("cfrelay-cli4-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = tiny_cfg(&dir);
        cmd_design(&cfg).unwrap();
        let mut other = cfg.clone();
        other.epsilon = 0.4;
        assert!(matches!(cmd_build(&other), Err(Error::Config(_))));
        let _ = std::fs::remove_dir_all(&dir);
    }
}
