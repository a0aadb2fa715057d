//! Run configuration: TOML (primary) or JSON, schema-versioned, with unknown
//! keys rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

pub const SPEC_VERSION: u32 = 1;

/// A sparse element of so(n) keyed by wedge coordinates, e.g. `e_23 = 0.5`.
pub type CoeffMap = BTreeMap<String, f64>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec_version: u32,
    pub filtration: Option<FiltrationSpec>,
    pub field: Option<FieldSpec>,
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    pub hull: Option<HullSection>,
    pub search: Option<SearchSection>,
}

/// Either a catalog name or an explicit chain of levels, each level a list
/// of spanning vectors given as coefficient maps.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationSpec {
    pub catalog: Option<String>,
    pub n: Option<usize>,
    pub levels: Option<Vec<Vec<CoeffMap>>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    /// Decomposed Euler field for a chain of subalgebras.
    Chain { s: Option<Vec<f64>> },
    /// The rank-2 system on so(4) with metric parameters `nu1`, `nu2`.
    Rank2 { nu1: f64, nu2: f64 },
    /// Manakov field `omega_ij = ((b_i - b_j)/(a_i - a_j)) x_ij`.
    Manakov {
        a: Vec<f64>,
        b: Vec<f64>,
        mode: Option<ManakovMode>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManakovMode {
    Regular,
    Singular,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// Initial momentum; drawn from the seeded generator when omitted.
    pub x: Option<CoeffMap>,
    /// Initial group element, row-major; identity when omitted.
    pub g: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    pub tol: Option<f64>,
    pub monitors: Option<Vec<String>>,
}

fn default_t_end() -> f64 {
    1.0
}

fn default_step() -> f64 {
    1e-3
}

fn default_record_every() -> usize {
    1
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            t_end: default_t_end(),
            step: default_step(),
            record_every: default_record_every(),
            tol: None,
            monitors: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    #[serde(default)]
    pub include_g: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullSection {
    pub n: usize,
    pub seeds: Vec<CoeffMap>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub degree: usize,
    /// Coordinate names spanning an invariant subspace to restrict to.
    pub restrict: Option<Vec<String>>,
    /// Built-in integrals to seed as known: `i1`, `i2`, `hamiltonian`.
    pub known: Option<Vec<String>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        } else {
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        };
        if cfg.spec_version != SPEC_VERSION {
            return Err(format!(
                "unsupported spec_version {} (expected {SPEC_VERSION})",
                cfg.spec_version
            ));
        }
        Ok(cfg)
    }
}

/// Parses a wedge-coordinate key: `e_23`, `x_23` or `e_2_13`.
pub fn parse_coord(key: &str) -> Result<(usize, usize), String> {
    let body = key
        .strip_prefix("e_")
        .or_else(|| key.strip_prefix("x_"))
        .ok_or_else(|| format!("bad coordinate `{key}` (expected e_ij)"))?;
    let (i, j) = if let Some((a, b)) = body.split_once('_') {
        (a.parse().ok(), b.parse().ok())
    } else if body.len() == 2 {
        (body[..1].parse().ok(), body[1..].parse().ok())
    } else {
        (None, None)
    };
    match (i, j) {
        (Some(i), Some(j)) if 0 < i && i < j => Ok((i, j)),
        _ => Err(format!("bad coordinate `{key}` (expected e_ij with i < j)")),
    }
}
