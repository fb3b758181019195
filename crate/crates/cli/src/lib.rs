//! Batch front-end for the `rdsecrecy` library.
//!
//! Each command reads one TOML config, runs a library computation and writes
//! its artifacts into an output directory. Every CSV starts with a
//! `# meta: ...` line carrying the command, crate version, the SHA-256 of the
//! config bytes and the seed, followed by the column header.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 schema error, 3 infeasible,
//! 4 resource limit, 5 simulate acceptance threshold missed.

pub mod config;
pub mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use rdsecrecy::becbsc::{curve_header, sweep_curve_with, write_curve_rows, SolveOptions};
use rdsecrecy::codesim::{
    run_trials, softcover_tv, superposition_softcover_tv, LayeredSource, SchemeInformation,
    SchemeRates, TrialOptions, SUMMARY_HEADER,
};
use rdsecrecy::info::{
    conditional_entropy, conditional_mutual_information, entropy, is_degraded, mutual_information,
    Verdict,
};
use rdsecrecy::region::{
    eavesdropper_cap, lossless_inner_with, optimize_inner, write_frontier_rows, AuxScheme,
    FrontierPoint, OptimizeOptions, SystemSpec, FRONTIER_HEADER,
};

pub use config::*;
pub use error::{CliError, Result};

/// The five commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Info,
    BecbscCurve,
    Region,
    Simulate,
    Softcover,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Info => "info",
            Command::BecbscCurve => "becbsc-curve",
            Command::Region => "region",
            Command::Simulate => "simulate",
            Command::Softcover => "softcover",
        }
    }
}

/// Arguments shared by every command.
#[derive(Clone, Debug)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Output directory, created if missing.
    pub out: PathBuf,
    /// Overrides the config's seed.
    pub seed: Option<u64>,
    /// Proceed with simulate rates that violate the scheme's constraints.
    pub force: bool,
}

impl RunArgs {
    pub fn new(config: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            config: config.into(),
            out: out.into(),
            seed: None,
            force: false,
        }
    }
}

/// Files written by a run. A failing run may still have written some.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
}

pub fn run(command: Command, args: &RunArgs) -> Result<Outcome> {
    match command {
        Command::Info => cmd_info(args),
        Command::BecbscCurve => cmd_becbsc_curve(args),
        Command::Region => cmd_region(args),
        Command::Simulate => cmd_simulate(args),
        Command::Softcover => cmd_softcover(args),
    }
}

/// Contents of the `# meta:` line.
struct Meta {
    command: Command,
    config_sha256: String,
    seed: u64,
    extra: Vec<(&'static str, String)>,
}

impl Meta {
    fn new(command: Command, bytes: &[u8], seed: u64) -> Self {
        Self {
            command,
            config_sha256: hex::encode(Sha256::digest(bytes)),
            seed,
            extra: Vec::new(),
        }
    }

    fn with(mut self, key: &'static str, value: impl ToString) -> Self {
        self.extra.push((key, value.to_string()));
        self
    }

    fn line(&self) -> String {
        let mut s = format!(
            "# meta: command={} version={} config_sha256={} seed={}",
            self.command.name(),
            env!("CARGO_PKG_VERSION"),
            self.config_sha256,
            self.seed
        );
        for (k, v) in &self.extra {
            if v.contains(char::is_whitespace) || v.contains('"') {
                s.push_str(&format!(" {k}={v:?}"));
            } else {
                s.push_str(&format!(" {k}={v}"));
            }
        }
        s
    }
}

struct OutDir<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl<'a> OutDir<'a> {
    fn open(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir,
            outcome: Outcome::default(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let result = File::create(&path).and_then(|f| {
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()
        });
        result.map_err(|e| CliError::io(&path, e))?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn csv(
        &mut self,
        name: &str,
        meta: &Meta,
        header: &str,
        rows: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<()> {
        self.write(name, |w| {
            writeln!(w, "{}", meta.line())?;
            writeln!(w, "{header}")?;
            rows(w)
        })
    }

    fn jsonl<T: Serialize>(
        &mut self,
        name: &str,
        items: impl IntoIterator<Item = T>,
    ) -> Result<()> {
        self.write(name, |w| {
            for item in items {
                serde_json::to_writer(&mut *w, &item)?;
                writeln!(w)?;
            }
            Ok(())
        })
    }
}

fn name_or<'a>(name: &'a Option<String>, default: &'a str) -> &'a str {
    name.as_deref().unwrap_or(default)
}

fn capability_label(v: Verdict) -> &'static str {
    match v {
        Verdict::StrictYes => "B-more-capable",
        Verdict::StrictNo => "W-more-capable",
        Verdict::WithinMargin => "within-margin",
    }
}

/// Single-letter quantities of a system, in bits.
pub fn info_rows(spec: &SystemSpec, margin: f64) -> Result<Vec<(String, String)>> {
    const X: usize = 0;
    const B: usize = 1;
    const W: usize = 2;
    let j = spec.joint();
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut num = |name: &str, v: f64| rows.push((name.to_string(), v.to_string()));
    num("H(X)", entropy(j, &[X])?);
    num("H(B)", entropy(j, &[B])?);
    num("H(W)", entropy(j, &[W])?);
    num("H(X|B)", conditional_entropy(j, &[X], &[B])?);
    num("H(X|W)", conditional_entropy(j, &[X], &[W])?);
    num("H(X|B,W)", conditional_entropy(j, &[X], &[B, W])?);
    let i_xb = mutual_information(j, &[X], &[B])?;
    let i_xw = mutual_information(j, &[X], &[W])?;
    num("I(X;B)", i_xb);
    num("I(X;W)", i_xw);
    num("I(B;W)", mutual_information(j, &[B], &[W])?);
    num(
        "I(X;B|W)",
        conditional_mutual_information(j, &[X], &[B], &[W])?,
    );
    num(
        "I(X;W|B)",
        conditional_mutual_information(j, &[X], &[W], &[B])?,
    );
    num("Dw_cap", eavesdropper_cap(spec)?);
    let capability = capability_label(Verdict::from_difference(i_xb - i_xw, margin));
    let swapped = j.marginal(&[X, W, B])?;
    rows.push(("capability".into(), capability.into()));
    rows.push(("degraded_X-B-W".into(), is_degraded(j)?.to_string()));
    rows.push(("degraded_X-W-B".into(), is_degraded(&swapped)?.to_string()));
    Ok(rows)
}

pub fn cmd_info(args: &RunArgs) -> Result<Outcome> {
    let cfg = config::load::<InfoConfig>(&args.config)?;
    let spec = cfg.value.system.build()?;
    let rows = info_rows(&spec, cfg.value.margin)?;
    let meta = Meta::new(Command::Info, &cfg.bytes, args.seed.unwrap_or(0))
        .with("margin", cfg.value.margin);
    let mut out = OutDir::open(&args.out)?;
    out.csv(
        name_or(&cfg.value.output.csv, "info.csv"),
        &meta,
        "quantity,value",
        |w| {
            for (k, v) in &rows {
                writeln!(w, "{k},{v}")?;
            }
            Ok(())
        },
    )?;
    Ok(out.outcome)
}

pub fn cmd_becbsc_curve(args: &RunArgs) -> Result<Outcome> {
    let cfg = config::load::<CurveConfig>(&args.config)?;
    let c = &cfg.value;
    let grid = c.p_grid.values()?;
    let options = SolveOptions {
        grid_resolution: c.solver.grid_resolution,
        refine_iters: c.solver.refine_iters,
        atoms: c.solver.atoms,
    };
    let rows = sweep_curve_with(c.alpha, c.beta, &grid, &options)?;
    let meta = Meta::new(Command::BecbscCurve, &cfg.bytes, args.seed.unwrap_or(0))
        .with("alpha", c.alpha)
        .with("beta", c.beta);
    let mut out = OutDir::open(&args.out)?;
    out.csv(
        name_or(&c.output.csv, "curve.csv"),
        &meta,
        &curve_header(options.atoms),
        |w| write_curve_rows(w, &rows),
    )?;
    if c.svg {
        let svg = rdsecrecy::svg::curve_chart(&rows, c.alpha, c.beta);
        out.write(name_or(&c.output.svg, "curve.svg"), |w| {
            w.write_all(svg.as_bytes())
        })?;
    }
    Ok(out.outcome)
}

fn search_options(
    spec: &SystemSpec,
    mode: RegionMode,
    s: &SearchConfig,
    seed: u64,
) -> OptimizeOptions {
    let mut o = OptimizeOptions::for_spec(spec);
    if mode == RegionMode::Lossless {
        o.card_v = spec.x_size();
        o.max_lattice_points = 100_000;
    }
    o.seed = seed;
    o.card_u = s.card_u.unwrap_or(o.card_u);
    o.card_v = s.card_v.unwrap_or(o.card_v);
    o.grid_resolution = s.grid_resolution.unwrap_or(o.grid_resolution);
    o.refine_iters = s.refine_iters.unwrap_or(o.refine_iters);
    o.max_lattice_points = s.max_lattice_points.unwrap_or(o.max_lattice_points);
    o.margin = s.margin.unwrap_or(o.margin);
    o.db_max = s.db_max.or(o.db_max);
    o
}

#[derive(Serialize)]
struct SchemeDump<'a> {
    scheme_id: usize,
    scheme: &'a AuxScheme,
}

#[derive(Serialize)]
struct LosslessDump<'a> {
    scheme_id: usize,
    u_given_x: &'a rdsecrecy::Channel,
}

pub fn cmd_region(args: &RunArgs) -> Result<Outcome> {
    let cfg = config::load::<RegionConfig>(&args.config)?;
    let c = &cfg.value;
    let spec = c.system.build()?;
    let seed = args.seed.or(c.seed).unwrap_or(0);
    let options = search_options(&spec, c.mode, &c.search, seed);
    if options.card_u == 0 || options.card_v == 0 || options.grid_resolution == 0 {
        return Err(CliError::Schema(
            "search: card_u, card_v and grid_resolution must be positive".into(),
        ));
    }
    let mode = match c.mode {
        RegionMode::Lossy => "lossy",
        RegionMode::Lossless => "lossless",
    };
    let meta = Meta::new(Command::Region, &cfg.bytes, seed)
        .with("mode", mode)
        .with("card_u", options.card_u)
        .with("card_v", options.card_v)
        .with(
            "note",
            "bounded-cardinality search; frontier is a lower estimate of the inner region",
        );
    let csv_name = name_or(&c.output.csv, "frontier.csv");
    let schemes_name = name_or(&c.output.schemes, "schemes.jsonl");
    let mut out = OutDir::open(&args.out)?;

    let (frontier, diagnostic) = match c.mode {
        RegionMode::Lossy => {
            let found = optimize_inner(&spec, &options)?;
            let dumps: Vec<SchemeDump> = found
                .frontier
                .iter()
                .filter_map(|f| {
                    found.scheme(f.scheme_id).map(|scheme| SchemeDump {
                        scheme_id: f.scheme_id,
                        scheme,
                    })
                })
                .collect();
            out.jsonl(schemes_name, &dumps)?;
            (found.frontier.clone(), found.diagnostic)
        }
        RegionMode::Lossless => {
            let found = lossless_inner_with(&spec, &options)?;
            let point = match (found.dw_max, found.slack, &found.best_u) {
                (Some(dw), Some(slack), Some(u)) => {
                    out.jsonl(
                        schemes_name,
                        [LosslessDump {
                            scheme_id: 0,
                            u_given_x: u,
                        }],
                    )?;
                    vec![FrontierPoint {
                        rate: found.rate_min,
                        db: 0.0,
                        dw,
                        slack,
                        scheme_id: 0,
                    }]
                }
                _ => {
                    out.jsonl::<LosslessDump>(schemes_name, [])?;
                    Vec::new()
                }
            };
            (point, found.diagnostic)
        }
    };
    out.csv(csv_name, &meta, FRONTIER_HEADER, |w| {
        write_frontier_rows(w, &frontier)
    })?;
    if frontier.is_empty() {
        let why = diagnostic
            .unwrap_or_else(|| "no auxiliary choice satisfies the secrecy condition".into());
        return Err(CliError::Infeasible(why));
    }
    Ok(out.outcome)
}

fn scheme_rates(c: &RatesConfig, info: &SchemeInformation, n: usize) -> Result<SchemeRates> {
    let explicit = [c.rp, c.rpp, c.rs, c.rsp];
    match (c.margin, explicit) {
        (Some(_), e) if e.iter().any(Option::is_some) => Err(CliError::Schema(
            "rates: give `margin` or explicit rates, not both".into(),
        )),
        (margin, [None, None, None, None]) => {
            Ok(SchemeRates::with_margin(info, n, margin.unwrap_or(0.1))?)
        }
        (None, [Some(rp), Some(rpp), Some(rs), Some(rsp)]) => {
            Ok(SchemeRates::new(rp, rpp, rs, rsp, n)?)
        }
        _ => Err(CliError::Schema(
            "rates: explicit rates need all of `rp`, `rpp`, `rs`, `rsp`".into(),
        )),
    }
}

pub fn cmd_simulate(args: &RunArgs) -> Result<Outcome> {
    let cfg = config::load::<SimulateConfig>(&args.config)?;
    let c = &cfg.value;
    if c.n == 0 || c.trials == 0 {
        return Err(CliError::Schema(
            "simulate: `n` and `trials` must be positive".into(),
        ));
    }
    let spec = c.system.build()?;
    let aux = AuxScheme::new(
        c.scheme.v_given_x.clone(),
        c.scheme.u_given_v.clone(),
        c.scheme.phi(&spec)?,
    );
    let info = SchemeInformation::of(&spec, &aux)?;
    let rates = scheme_rates(&c.rates, &info, c.n)?;
    let warnings = rates.violations(&info);
    if !warnings.is_empty() && !args.force {
        return Err(CliError::Infeasible(format!(
            "rates violate the scheme constraints ({}); rerun with --force to simulate anyway",
            warnings.join("; ")
        )));
    }
    let seed = args.seed.or(c.seed).unwrap_or(0);
    let options = TrialOptions {
        joint_decoder: c.joint_decoder,
        ..TrialOptions::new(c.trials, seed)
    };
    let (summary, records) = run_trials(&spec, &aux, &rates, &options)?;
    let s = summary.sizes;
    let r = &summary.realized_rates;
    let mut meta = Meta::new(Command::Simulate, &cfg.bytes, seed)
        .with("sizes", format!("{}x{}x{}x{}", s.np, s.npp, s.ns, s.nsp))
        .with(
            "realized_rates",
            format!("rp={};rpp={};rs={};rsp={}", r.rp, r.rpp, r.rs, r.rsp),
        )
        .with(
            "decoder",
            if c.joint_decoder { "joint" } else { "marginal" },
        )
        .with("dw_inner", summary.dw_inner);
    if !warnings.is_empty() {
        meta = meta.with("warnings", warnings.join("; "));
    }
    let mut out = OutDir::open(&args.out)?;
    out.csv(
        name_or(&c.output.csv, "simulate.csv"),
        &meta,
        SUMMARY_HEADER,
        |w| writeln!(w, "{}", summary.csv_row()),
    )?;
    if c.records {
        out.jsonl(name_or(&c.output.records, "records.jsonl"), &records)?;
    }
    if let Some(target) = c.db_target {
        if summary.mean_db > target + summary.ci_db {
            return Err(CliError::Acceptance(format!(
                "mean d_b {} exceeds target {} by more than the half-width {}",
                summary.mean_db, target, summary.ci_db
            )));
        }
    }
    Ok(out.outcome)
}

/// One row of a soft-covering sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverRow {
    pub rate: f64,
    pub realized_rate: f64,
    pub n: usize,
    pub codebooks: usize,
    pub mean_tv: f64,
    /// Standard error over codebooks; `None` for a single codebook.
    pub std: Option<f64>,
}

pub const COVER_HEADER: &str = "rate,realized_rate,n,codebooks,mean_tv,std";

pub fn cmd_softcover(args: &RunArgs) -> Result<Outcome> {
    let cfg = config::load::<SoftcoverConfig>(&args.config)?;
    let c = &cfg.value;
    let seed = args.seed.or(c.seed).unwrap_or(0);
    if c.n == 0 || c.codebooks == 0 {
        return Err(CliError::Schema(
            "softcover: `n` and `codebooks` must be positive".into(),
        ));
    }
    let (threshold, mode) = match (&c.basic, &c.superposition) {
        (Some(b), None) => {
            let j = b.p_v.to_joint().attach(&[0], &b.x_given_v)?;
            (mutual_information(&j, &[0], &[1])?, "basic")
        }
        (None, Some(l)) => (layered(l)?.i_xv_given_u()?, "superposition"),
        _ => {
            return Err(CliError::Schema(
                "softcover: give exactly one of `basic` or `superposition`".into(),
            ))
        }
    };
    let rates: Vec<f64> = match (&c.rates, &c.rate_offsets) {
        (Some(r), None) => r.clone(),
        (None, Some(o)) => o.iter().map(|d| threshold + d).collect(),
        _ => {
            return Err(CliError::Schema(
                "softcover: give exactly one of `rates` or `rate_offsets`".into(),
            ))
        }
    };
    if rates.is_empty() || rates.iter().any(|r| r.is_nan() || *r < 0.0) {
        return Err(CliError::Schema(
            "softcover: rates must be nonempty and nonnegative".into(),
        ));
    }
    let rows = rates
        .iter()
        .map(|&rate| {
            let res = match (&c.basic, &c.superposition) {
                (Some(b), _) => {
                    let target = b.x_given_v.output_pmf(&b.p_v)?;
                    softcover_tv(&target, &b.x_given_v, &b.p_v, rate, c.n, c.codebooks, seed)?
                }
                (_, Some(l)) => superposition_softcover_tv(
                    &layered(l)?,
                    l.r1,
                    rate,
                    c.n,
                    l.k,
                    c.codebooks,
                    seed,
                )?,
                _ => unreachable!("mode checked above"),
            };
            Ok(CoverRow {
                rate,
                realized_rate: (res.codebook_size as f64).log2() / c.n as f64,
                n: c.n,
                codebooks: c.codebooks,
                mean_tv: res.mean_tv,
                std: (c.codebooks > 1).then_some(res.std_err),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = Meta::new(Command::Softcover, &cfg.bytes, seed)
        .with("mode", mode)
        .with("threshold_bits", threshold);
    let mut out = OutDir::open(&args.out)?;
    out.csv(
        name_or(&c.output.csv, "softcover.csv"),
        &meta,
        COVER_HEADER,
        |w| {
            for r in &rows {
                let std = r.std.map(|s| s.to_string()).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    r.rate, r.realized_rate, r.n, r.codebooks, r.mean_tv, std
                )?;
            }
            Ok(())
        },
    )?;
    Ok(out.outcome)
}

fn layered(l: &LayeredCover) -> Result<LayeredSource> {
    Ok(LayeredSource::new(
        l.p_u.clone(),
        l.v_given_u.clone(),
        l.x_given_uv.clone(),
        l.z_given_xuv.clone(),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_line_quotes_values_with_spaces() {
        let m = Meta::new(Command::Info, b"x", 7)
            .with("note", "a b")
            .with("k", 1);
        let line = m.line();
        assert!(line.starts_with("# meta: command=info version="));
        assert!(line.contains("seed=7"));
        assert!(line.contains(r#"note="a b""#));
        assert!(line.contains(" k=1"));
        assert!(line.contains(
            "config_sha256=2d711642b726b04401627ca9fbac32f5c8530fb1903cc4db02258717921a4881"
        ));
    }

    #[test]
    fn identity_side_information_leaves_no_uncertainty() {
        let spec = SystemConfig {
            source: Some(rdsecrecy::Pmf::new(vec![0.3, 0.7]).unwrap()),
            b_given_x: Some(rdsecrecy::Channel::identity(2).unwrap()),
            w_given_x: Some(rdsecrecy::Channel::bsc(0.2).unwrap()),
            ..Default::default()
        }
        .build()
        .unwrap();
        let rows = info_rows(&spec, 1e-9).unwrap();
        let get = |k: &str| rows.iter().find(|(q, _)| q == k).unwrap().1.clone();
        assert_eq!(get("H(X|B)").parse::<f64>().unwrap(), 0.0);
        assert_eq!(get("capability"), "B-more-capable");
        assert_eq!(get("degraded_X-B-W"), "true");
    }

    #[test]
    fn rates_forms() {
        let info = SchemeInformation {
            i_ux: 0.5,
            i_ub: 0.4,
            i_xv_given_u: 0.6,
            i_vw_given_u: 0.1,
            i_vb_given_u: 0.3,
        };
        assert!(scheme_rates(&RatesConfig::default(), &info, 4).is_ok());
        let partial = RatesConfig {
            rp: Some(0.1),
            ..Default::default()
        };
        assert!(matches!(
            scheme_rates(&partial, &info, 4),
            Err(CliError::Schema(_))
        ));
        let both = RatesConfig {
            margin: Some(0.1),
            rs: Some(0.2),
            ..Default::default()
        };
        assert!(matches!(
            scheme_rates(&both, &info, 4),
            Err(CliError::Schema(_))
        ));
    }
}
