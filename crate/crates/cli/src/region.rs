use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use superpos::geom::{save_regions, Region2D};
use superpos::scheme::{region_uv, region_ux, region_vx, Dist};
use superpos::search::{sweep_uv_report, sweep_ux_report, SweepConfig};

use crate::config::{self, Loaded};
use crate::error::Result;
use crate::svg;

#[derive(Args, Debug)]
pub struct RegionArgs {
    /// Config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel document.
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Distribution document; repeatable.
    #[arg(long = "dist")]
    dists: Vec<PathBuf>,
    /// Also sweep both schemes (default sweep settings unless the config has a [sweep] table).
    #[arg(long)]
    sweep: bool,
    /// Region document; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Vertex table, one row per vertex.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct RegionConfig {
    channel: Option<PathBuf>,
    #[serde(default)]
    dists: Vec<PathBuf>,
    sweep: Option<SweepConfig>,
    #[serde(default)]
    output: Output,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub document: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub fn run(args: RegionArgs) -> Result<bool> {
    let cfg: Loaded<RegionConfig> = config::load(args.config.as_deref())?;
    let c = &cfg.value;
    let channel_path = match (&args.channel, &c.channel) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => return Err(crate::error::CliError::Usage("no channel given (--channel or `channel` in the config)".into())),
    };
    let dists: Vec<PathBuf> =
        if args.dists.is_empty() { c.dists.iter().map(|p| cfg.resolve(p)).collect() } else { args.dists.clone() };
    let sweep = match (&c.sweep, args.sweep) {
        (Some(s), _) => Some(s.clone()),
        (None, true) => Some(SweepConfig::default()),
        (None, false) => None,
    };
    let pick = |flag: &Option<PathBuf>, key: &Option<PathBuf>| flag.clone().or_else(|| key.as_ref().map(|p| cfg.resolve(p)));
    let out = pick(&args.out, &c.output.document);
    let svg_path = pick(&args.svg, &c.output.svg);
    let csv_path = pick(&args.csv, &c.output.csv);

    let ch = config::channel(&channel_path)?;
    let mut named: Vec<(String, Region2D)> = Vec::new();
    for p in &dists {
        let name = config::stem(p);
        match config::dist(p)? {
            Dist::Uv(d) => named.push((format!("uv:{name}"), region_uv(&ch, &d)?)),
            Dist::Ux(d) => {
                named.push((format!("ux:{name}"), region_ux(&ch, &d)?));
                named.push((format!("vx:{name}"), region_vx(&ch, &d)?));
            }
        }
    }
    let mut provenance = String::new();
    if let Some(s) = &sweep {
        s.validate()?;
        let uv = sweep_uv_report(&ch, s, &[])?;
        let ux = sweep_ux_report(&ch, s, &[])?;
        let vx = sweep_ux_report(&ch.swapped(), s, &[])?;
        let vx_region = vx.region.swap_axes();
        let het = Region2D::convex_hull(&[&ux.region, &vx_region]);
        named.push(("uv-hull".into(), uv.region));
        named.push(("ux+vx-hull".into(), het));
        let _ = writeln!(provenance, "\n[provenance]");
        let _ = writeln!(
            provenance,
            "rng_seed = {}\nu_size = {}\nv_size = {}\ngrid_steps = {}\nrandom_samples = {}\nrefine_iters = {}",
            s.rng_seed, s.u_size, s.v_size, s.grid_steps, s.random_samples, s.refine_iters
        );
        let _ = writeln!(
            provenance,
            "uv_candidates = {}\nux_candidates = {}\nvx_candidates = {}\nuv_maps_enumerated = {}",
            uv.candidates, ux.candidates, vx.candidates, uv.maps_enumerated
        );
    }

    let refs: Vec<(&str, &Region2D)> = named.iter().map(|(n, r)| (n.as_str(), r)).collect();
    let mut doc = save_regions(&refs);
    doc.push_str(&provenance);
    config::emit(out.as_deref(), &doc)?;
    if let Some(p) = &svg_path {
        config::write(p, &svg::render(&format!("Rate regions: {}", config::stem(&channel_path)), &refs))?;
    }
    if let Some(p) = &csv_path {
        config::write(p, &vertex_csv(&refs))?;
    }
    Ok(true)
}

pub fn vertex_csv(regions: &[(&str, &Region2D)]) -> String {
    let mut s = String::from("region,part,vertex,r1,r2\n");
    for (name, r) in regions {
        for (k, part) in r.parts().iter().enumerate() {
            for (i, v) in part.vertices().iter().enumerate() {
                let _ = writeln!(s, "{name},{k},{i},{:?},{:?}", v.0, v.1);
            }
        }
    }
    s
}

/// Writes the document and optional figure for a fixed set of regions.
pub fn write_outputs(title: &str, regions: &[(&str, &Region2D)], document: Option<&Path>, svg_path: Option<&Path>) -> Result<()> {
    if let Some(p) = document {
        config::write(p, &save_regions(regions))?;
    }
    if let Some(p) = svg_path {
        config::write(p, &svg::render(title, regions))?;
    }
    Ok(())
}
