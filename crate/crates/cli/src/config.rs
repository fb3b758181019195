//! Run configurations, one TOML file per run. Unknown keys are rejected and
//! every pmf, channel row and joint is checked for normalization while
//! parsing, before any computation starts.

use std::path::Path;

use serde::Deserialize;

use rdsecrecy::region::{DecisionMap, SystemSpec};
use rdsecrecy::{Channel, DistortionMeasure, JointPmf, Pmf};

use crate::error::{CliError, Result};

/// Raw bytes plus the parsed value, so outputs can carry a config hash.
pub struct Loaded<T> {
    pub value: T,
    pub bytes: Vec<u8>,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Loaded<T>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let value = parse(text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok(Loaded { value, bytes })
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> std::result::Result<T, String> {
    toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())
}

/// The source and both side-information channels, in one of three forms:
/// the BEC/BSC family, a source with two channels, or a full joint.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub bec_bsc: Option<BecBscConfig>,
    pub source: Option<Pmf>,
    pub b_given_x: Option<Channel>,
    pub w_given_x: Option<Channel>,
    /// `P(x, b, w)` as a nested array.
    pub joint: Option<JointPmf>,
    pub d_b: Option<DistortionMeasure>,
    pub d_w: Option<DistortionMeasure>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BecBscConfig {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemSpec> {
        let forms = [
            self.bec_bsc.is_some(),
            self.source.is_some() || self.b_given_x.is_some() || self.w_given_x.is_some(),
            self.joint.is_some(),
        ];
        if forms.iter().filter(|&&f| f).count() != 1 {
            return Err(CliError::Schema(
                "system: give exactly one of `bec_bsc`, `source` with `b_given_x` and `w_given_x`, or `joint`".into(),
            ));
        }
        if let Some(b) = self.bec_bsc {
            if self.d_b.is_some() || self.d_w.is_some() {
                return Err(CliError::Schema(
                    "system.bec_bsc uses Hamming distortion; remove d_b and d_w".into(),
                ));
            }
            return SystemSpec::bec_bsc(b.p, b.alpha, b.beta)
                .map_err(|e| CliError::Schema(format!("system.bec_bsc: {e}")));
        }
        if let Some(joint) = &self.joint {
            let x = joint.dims().first().copied().unwrap_or(0);
            let (d_b, d_w) = self.distortions(x)?;
            return SystemSpec::new(joint.clone(), d_b, d_w)
                .map_err(|e| CliError::Schema(format!("system.joint: {e}")));
        }
        let missing = |name: &str| CliError::Schema(format!("system: missing field `{name}`"));
        let source = self.source.as_ref().ok_or_else(|| missing("source"))?;
        let b = self
            .b_given_x
            .as_ref()
            .ok_or_else(|| missing("b_given_x"))?;
        let w = self
            .w_given_x
            .as_ref()
            .ok_or_else(|| missing("w_given_x"))?;
        let (d_b, d_w) = self.distortions(source.len())?;
        SystemSpec::from_channels(source, b, w, d_b, d_w)
            .map_err(|e| CliError::Schema(format!("system: {e}")))
    }

    fn distortions(&self, x: usize) -> Result<(DistortionMeasure, DistortionMeasure)> {
        let hamming =
            || DistortionMeasure::hamming(x).map_err(|e| CliError::Schema(format!("system: {e}")));
        Ok((
            self.d_b.clone().map_or_else(hamming, Ok)?,
            self.d_w.clone().map_or_else(hamming, Ok)?,
        ))
    }
}

fn default_margin() -> f64 {
    rdsecrecy::info::DEFAULT_MARGIN
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoConfig {
    pub system: SystemConfig,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub output: OutputNames,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub p_grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "yes")]
    pub svg: bool,
    #[serde(default)]
    pub output: OutputNames,
}

fn yes() -> bool {
    true
}

/// Either `points` evenly spaced values on `[0, 1]` or explicit `values`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: Option<usize>,
    pub values: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        let grid = match (self.points, &self.values) {
            (Some(_), Some(_)) => {
                return Err(CliError::Schema(
                    "p_grid: give `points` or `values`, not both".into(),
                ))
            }
            (None, Some(v)) => v.clone(),
            (Some(n), None) if n >= 2 => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
            (Some(n), None) => {
                return Err(CliError::Schema(format!(
                    "p_grid.points = {n}: need at least 2"
                )))
            }
            (None, None) => rdsecrecy::becbsc::default_p_grid(),
        };
        if grid.is_empty() || grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(CliError::Schema(
                "p_grid.values must be nonempty and within [0, 1]".into(),
            ));
        }
        Ok(grid)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub grid_resolution: usize,
    pub refine_iters: usize,
    pub atoms: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = rdsecrecy::becbsc::SolveOptions::default();
        Self {
            grid_resolution: d.grid_resolution,
            refine_iters: d.refine_iters,
            atoms: d.atoms,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionMode {
    #[default]
    Lossy,
    Lossless,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub mode: RegionMode,
    #[serde(default)]
    pub search: SearchConfig,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputNames,
}

/// Overrides for the auxiliary search; unset fields take the library
/// defaults for the given system.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub card_u: Option<usize>,
    pub card_v: Option<usize>,
    pub grid_resolution: Option<usize>,
    pub refine_iters: Option<usize>,
    pub max_lattice_points: Option<usize>,
    pub margin: Option<f64>,
    pub db_max: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub system: SystemConfig,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    pub n: usize,
    pub trials: usize,
    pub seed: Option<u64>,
    /// Decode with `P(b|u,v)` instead of `P(b|v)`.
    #[serde(default)]
    pub joint_decoder: bool,
    /// Target receiver distortion; the run fails (exit 5) when the measured
    /// mean exceeds it by more than the confidence half-width.
    pub db_target: Option<f64>,
    #[serde(default = "yes")]
    pub records: bool,
    #[serde(default)]
    pub output: OutputNames,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub v_given_x: Channel,
    pub u_given_v: Channel,
    /// Receiver map `phi[v][b]`; the pointwise optimum when omitted.
    pub phi: Option<Vec<Vec<usize>>>,
}

impl SchemeConfig {
    pub fn phi(&self, spec: &SystemSpec) -> Result<DecisionMap> {
        match &self.phi {
            Some(table) => DecisionMap::new(spec.y_size(), table.clone())
                .map_err(|e| CliError::Schema(format!("scheme.phi: {e}"))),
            None => Ok(rdsecrecy::region::optimal_phi(spec, &self.v_given_x)?),
        }
    }
}

/// Either a margin inside the scheme's rate constraints or four explicit
/// rates.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub margin: Option<f64>,
    pub rp: Option<f64>,
    pub rpp: Option<f64>,
    pub rs: Option<f64>,
    pub rsp: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftcoverConfig {
    pub n: usize,
    pub codebooks: usize,
    pub seed: Option<u64>,
    /// Absolute rates in bits.
    pub rates: Option<Vec<f64>>,
    /// Rates relative to the covering threshold.
    pub rate_offsets: Option<Vec<f64>>,
    pub basic: Option<BasicCover>,
    pub superposition: Option<LayeredCover>,
    #[serde(default)]
    pub output: OutputNames,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasicCover {
    pub p_v: Pmf,
    pub x_given_v: Channel,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredCover {
    pub p_u: Pmf,
    pub v_given_u: Channel,
    /// Input index `u·|V| + v`.
    pub x_given_uv: Channel,
    /// Input index `(x·|U| + u)·|V| + v`.
    pub z_given_xuv: Channel,
    pub r1: f64,
    #[serde(default)]
    pub k: usize,
}

/// File names, relative to the output directory.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputNames {
    pub csv: Option<String>,
    pub svg: Option<String>,
    pub records: Option<String>,
    pub schemes: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_beta_is_named() {
        let e = parse::<InfoConfig>("[system.bec_bsc]\np = 0.5\nalpha = 0.4\n").unwrap_err();
        assert!(e.contains("beta"), "{e}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = parse::<CurveConfig>("alpha = 0.4\nbeta = 0.1\ngamma = 1\n").unwrap_err();
        assert!(e.contains("gamma"), "{e}");
    }

    #[test]
    fn unnormalized_pmf_rejected_while_parsing() {
        let text = "[system]\nsource = [0.5, 0.4]\nb_given_x = [[1, 0], [0, 1]]\nw_given_x = [[1, 0], [0, 1]]\n";
        let e = parse::<InfoConfig>(text).unwrap_err();
        assert!(e.contains("source"), "{e}");
    }

    #[test]
    fn system_forms_are_exclusive() {
        let both = SystemConfig {
            bec_bsc: Some(BecBscConfig {
                p: 0.5,
                alpha: 0.4,
                beta: 0.1,
            }),
            source: Some(Pmf::uniform(2).unwrap()),
            ..Default::default()
        };
        assert!(matches!(both.build(), Err(CliError::Schema(_))));
        let partial = SystemConfig {
            source: Some(Pmf::uniform(2).unwrap()),
            ..Default::default()
        };
        let e = partial.build().unwrap_err().to_string();
        assert!(e.contains("b_given_x"), "{e}");
    }

    #[test]
    fn grid_forms() {
        assert_eq!(GridConfig::default().values().unwrap().len(), 101);
        let g = GridConfig {
            points: Some(3),
            values: None,
        };
        assert_eq!(g.values().unwrap(), vec![0.0, 0.5, 1.0]);
        let bad = GridConfig {
            points: None,
            values: Some(vec![1.5]),
        };
        assert!(bad.values().is_err());
    }
}
