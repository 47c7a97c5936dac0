use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use superpos::search::SweepConfig;
use superpos::theorem::strictness_demo;

use crate::config::{self, Loaded};
use crate::error::Result;
use crate::region::write_outputs;

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Config file with an optional [sweep] table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Region document.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct DemoConfig {
    #[serde(default)]
    sweep: SweepConfig,
    #[serde(default)]
    output: crate::region::Output,
}

pub fn run(args: DemoArgs) -> Result<bool> {
    let cfg: Loaded<DemoConfig> = config::load(args.config.as_deref())?;
    let c = &cfg.value;
    c.sweep.validate()?;
    let out = args.out.clone().or_else(|| c.output.document.as_ref().map(|p| cfg.resolve(p)));
    let svg = args.svg.clone().or_else(|| c.output.svg.as_ref().map(|p| cfg.resolve(p)));

    let r = strictness_demo(&c.sweep)?;
    println!("max sum rate over UX and VX: {:.9}", r.max_sum_rate);
    println!("sum rate bounded by 1: {}", r.sum_rate_bounded);
    println!("(1,1) achievable with U = X1, V = X2: {}", r.unit_pair_achievable);
    println!("area between the UV hull and the UX/VX hull: {:.6}", r.gap_area);
    println!("homogeneous strictly larger: {}", r.holds());
    let regions = [("uv-hull", &r.uv_hull), ("ux+vx-hull", &r.ux_vx_hull), ("uv-witness", &r.witness_region)];
    write_outputs("Vector broadcast channel", &regions, out.as_deref(), svg.as_deref())?;
    Ok(r.holds())
}
