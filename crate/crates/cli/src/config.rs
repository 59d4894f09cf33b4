//! Declarative run configuration.
//!
//! ```toml
//! group = [2, 2]            # cyclic factor orders, paired as Z_q x Z_q
//! cocycle = "weyl"          # "weyl", "trivial", or an explicit table below
//! cocycle_table = [[0, 1], [0, 1]]   # [num, den] per (a, b), row-major
//! characters = "all"        # or a list of exponent vectors
//! kappa = 1
//! seed = 7
//!
//! [tolerances]
//! closure = 1e-9
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spt_mbqc::cohomology::{Character, Cocycle, FiniteAbelianGroup, Phase};
use spt_mbqc::{Error, Result};

pub const DEFAULT_CLOSURE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle_table: Option<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characters: Option<CharacterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CharacterSpec {
    Keyword(String),
    List(Vec<Vec<u32>>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

/// Resolved symmetry data.
pub enum Preset {
    Aklt,
    Weyl(u32),
}

impl RunConfig {
    pub fn parse(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn closure_tol(&self) -> f64 {
        self.tolerances.closure.unwrap_or(DEFAULT_CLOSURE_TOL)
    }

    pub fn kappa(&self) -> usize {
        self.kappa.unwrap_or(1)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn preset(&self) -> Result<Option<Preset>> {
        let Some(p) = &self.preset else { return Ok(None) };
        if p == "aklt" {
            return Ok(Some(Preset::Aklt));
        }
        match p.strip_prefix("weyl-").and_then(|d| d.parse::<u32>().ok()) {
            Some(d) if d >= 2 => Ok(Some(Preset::Weyl(d))),
            _ => Err(Error::InvalidInput(format!("unknown preset '{p}' (expected aklt or weyl-D)"))),
        }
    }

    pub fn group(&self) -> Result<FiniteAbelianGroup> {
        match (self.preset()?, &self.group) {
            (_, Some(orders)) => FiniteAbelianGroup::new(orders.clone()),
            (Some(Preset::Aklt), None) => Ok(FiniteAbelianGroup::weyl(2)),
            (Some(Preset::Weyl(d)), None) => Ok(FiniteAbelianGroup::weyl(d)),
            (None, None) => Err(Error::InvalidInput("no group given (use --group, --preset or a config file)".into())),
        }
    }

    pub fn cocycle(&self, group: &FiniteAbelianGroup) -> Result<Cocycle> {
        if let Some(table) = &self.cocycle_table {
            if self.cocycle.as_deref().is_some_and(|c| c != "table") {
                return Err(Error::InvalidInput("cocycle_table given together with a named cocycle".into()));
            }
            if table.iter().any(|p| p[1] <= 0) {
                return Err(Error::InvalidInput("cocycle_table denominators must be positive".into()));
            }
            let phases = table.iter().map(|p| Phase::new(p[0], p[1])).collect();
            return Cocycle::new(group.clone(), phases);
        }
        match self.cocycle.as_deref().unwrap_or("weyl") {
            "weyl" => Cocycle::weyl_product(group.clone()),
            "trivial" => Ok(Cocycle::trivial(group.clone())),
            other => Err(Error::InvalidInput(format!("unknown cocycle '{other}' (expected weyl, trivial or a table)"))),
        }
    }

    /// Physical characters in lexicographic exponent order for "all".
    pub fn characters(&self, group: &FiniteAbelianGroup) -> Result<Vec<Character>> {
        match &self.characters {
            None => Ok(group.characters()),
            Some(CharacterSpec::Keyword(k)) if k == "all" => Ok(group.characters()),
            Some(CharacterSpec::Keyword(k)) if k == "nontrivial" => {
                Ok(group.characters().into_iter().filter(|c| !c.is_trivial()).collect())
            }
            Some(CharacterSpec::Keyword(k)) => Err(Error::InvalidInput(format!("unknown character keyword '{k}'"))),
            Some(CharacterSpec::List(list)) => {
                if list.is_empty() {
                    return Err(Error::InvalidInput("empty character list".into()));
                }
                list.iter().map(|e| Character::new(group, e.clone())).collect()
            }
        }
    }
}

/// `"1,0;1,1"` style lists, or a keyword.
pub fn parse_characters(s: &str) -> CharacterSpec {
    let s = s.trim();
    if s.chars().all(|c| c.is_ascii_alphabetic()) {
        return CharacterSpec::Keyword(s.to_string());
    }
    CharacterSpec::List(
        s.split(';')
            .map(|c| c.split(',').filter_map(|x| x.trim().parse().ok()).collect())
            .collect(),
    )
}
