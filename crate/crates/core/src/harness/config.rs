use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::corpus::{DEFAULT_CORPUS_SEED, DEFAULT_CORPUS_SIZE};
use crate::error::{Error, Result};
use crate::graph::{build_lattice, load_graph, Boundary, CouplingGraph, LatticeSpec};
use crate::worm_mc::Observable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VerifyIdentities,
    VerifySwitching,
    VerifyPfaffian,
    GsMatch,
    McRun,
    ScanRl,
    LocateBetac,
    S2Diagnostics,
    IntersectionScan,
    EmergentPlanarity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::VerifyIdentities,
        ExperimentKind::VerifySwitching,
        ExperimentKind::VerifyPfaffian,
        ExperimentKind::GsMatch,
        ExperimentKind::McRun,
        ExperimentKind::ScanRl,
        ExperimentKind::LocateBetac,
        ExperimentKind::S2Diagnostics,
        ExperimentKind::IntersectionScan,
        ExperimentKind::EmergentPlanarity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::VerifyIdentities => "verify-identities",
            ExperimentKind::VerifySwitching => "verify-switching",
            ExperimentKind::VerifyPfaffian => "verify-pfaffian",
            ExperimentKind::GsMatch => "gs-match",
            ExperimentKind::McRun => "mc-run",
            ExperimentKind::ScanRl => "scan-rl",
            ExperimentKind::LocateBetac => "locate-betac",
            ExperimentKind::S2Diagnostics => "s2-diagnostics",
            ExperimentKind::IntersectionScan => "intersection-scan",
            ExperimentKind::EmergentPlanarity => "emergent-planarity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Fields that must be present in the config file.
    pub fn required_fields(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::VerifyIdentities | ExperimentKind::VerifySwitching => &[],
            ExperimentKind::VerifyPfaffian => &["sizes", "betas"],
            ExperimentKind::GsMatch => &["block_sizes"],
            ExperimentKind::McRun => &["graph", "betas", "seeds", "observables"],
            ExperimentKind::ScanRl | ExperimentKind::S2Diagnostics | ExperimentKind::IntersectionScan => {
                &["dimension", "sizes", "betas", "seeds"]
            }
            ExperimentKind::LocateBetac => &["dimension", "sizes", "bracket", "seeds"],
            ExperimentKind::EmergentPlanarity => &["separations", "betas", "seeds"],
        }
    }

    pub fn is_verification(self) -> bool {
        matches!(
            self,
            ExperimentKind::VerifyIdentities | ExperimentKind::VerifySwitching | ExperimentKind::VerifyPfaffian
        )
    }

    pub fn is_monte_carlo(self) -> bool {
        !self.is_verification() && self != ExperimentKind::GsMatch
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Nearest-neighbour lattice as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub d: usize,
    pub l: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "periodic")]
    pub bc: Boundary,
}

fn one() -> f64 {
    1.0
}

fn periodic() -> Boundary {
    Boundary::Periodic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSource {
    Lattice(LatticeConfig),
    /// JSON graph file, relative paths resolved against the config file.
    File(PathBuf),
}

impl GraphSource {
    pub fn build(&self) -> Result<CouplingGraph> {
        match self {
            GraphSource::Lattice(c) => build_lattice(LatticeSpec::new(c.d, c.l, c.j, c.bc)),
            GraphSource::File(p) => load_graph(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Wolff,
    Metropolis,
    Worm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub sweeps: u64,
    pub bins: usize,
    pub thermalization: Option<u64>,
    /// Bisection steps for Binder crossings.
    pub iterations: usize,
    /// Wall-clock limit for the whole experiment.
    pub wall_clock_secs: Option<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { sweeps: 20_000, bins: 16, thermalization: None, iterations: 10, wall_clock_secs: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub seed: u64,
    pub count: usize,
    /// Tuples of each shape checked per graph.
    pub tuples: usize,
    /// Vertex sets per pair in the box-hitting check.
    pub subsets: usize,
    /// Switching cases per graph.
    pub switching_cases: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { seed: DEFAULT_CORPUS_SEED, count: DEFAULT_CORPUS_SIZE, tuples: 16, subsets: 4, switching_cases: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    pub lambda: f64,
    pub b: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig { lambda: 1.0, b: 0.0 }
    }
}

/// Default verification wall-clock limit.
pub const DEFAULT_VERIFY_SECS: u64 = 600;

/// One experiment. Unused fields are ignored by kinds that do not need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub betas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(f64, f64)>,
    /// Side of the centred block `Lambda`; the whole torus when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_side: Option<usize>,
    /// `(r_min, r_max)` for distance fits; `(1, L/2)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_range: Option<(f64, f64)>,
    #[serde(default = "default_boundary_points")]
    pub boundary_points: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub separations: Vec<usize>,
    #[serde(default = "default_nnn")]
    pub nnn_coupling: f64,
    #[serde(default)]
    pub algorithm: Algorithm,
    /// Worm source set; empty samples the closed sector.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<usize>,
    #[serde(default)]
    pub charts: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSource>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<Observable>,
}

fn default_boundary_points() -> Vec<usize> {
    vec![4, 6]
}

fn default_nnn() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            id: None,
            dimension: None,
            sizes: Vec::new(),
            betas: Vec::new(),
            seeds: Vec::new(),
            bracket: None,
            block_side: None,
            distance_range: None,
            boundary_points: default_boundary_points(),
            block_sizes: Vec::new(),
            separations: Vec::new(),
            nnn_coupling: default_nnn(),
            algorithm: Algorithm::default(),
            sources: Vec::new(),
            charts: false,
            out: None,
            budget: Budget::default(),
            corpus: CorpusConfig::default(),
            target: TargetConfig::default(),
            graph: None,
            observables: Vec::new(),
        }
    }

    /// Parses and validates TOML. `kind` may be supplied by the caller when
    /// the file omits it; a conflicting value is an error.
    pub fn from_toml(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let cfg = Self::parse_toml(text, kind)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Like [`from_toml`](Self::from_toml) but leaves validation to the
    /// caller, so command-line overrides can be applied first.
    pub fn parse_toml(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        if let Some(k) = kind {
            match table.get("kind") {
                None => {
                    table.insert("kind".into(), toml::Value::String(k.name().into()));
                }
                Some(toml::Value::String(s)) if s == k.name() => {}
                Some(other) => {
                    return Err(Error::Config(format!("config kind {other} does not match subcommand {k}")));
                }
            }
        }
        table.try_into().map_err(|e| Error::Config(format!("{e}")))
    }

    /// Reads a config file without validating it; graph paths are resolved
    /// against its directory and made absolute.
    pub fn load(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse_toml(&text, kind)?;
        if let Some(GraphSource::File(p)) = &mut cfg.graph {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
            // Absolute paths keep the stored config replayable from its result directory.
            if let Ok(abs) = std::fs::canonicalize(&*p) {
                *p = abs;
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// `id` if set, otherwise the kind followed by a hash prefix.
    pub fn experiment_id(&self) -> String {
        match &self.id {
            Some(id) => id.clone(),
            None => format!("{}-{}", self.kind, &self.input_hash()[..12]),
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn input_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.out = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind;
        let missing = |field: &str| Error::Config(format!("{kind} requires `{field}`"));
        for &field in kind.required_fields() {
            let present = match field {
                "sizes" => !self.sizes.is_empty(),
                "betas" => !self.betas.is_empty(),
                "seeds" => !self.seeds.is_empty(),
                "graph" => self.graph.is_some(),
                "observables" => !self.observables.is_empty(),
                "dimension" => self.dimension.is_some(),
                "bracket" => self.bracket.is_some(),
                "block_sizes" => !self.block_sizes.is_empty(),
                "separations" => !self.separations.is_empty(),
                _ => true,
            };
            if !present {
                return Err(missing(field));
            }
        }
        if let Some(id) = &self.id {
            if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
                return Err(Error::Config(format!("invalid experiment id {id:?}")));
            }
        }
        // TOML integers are signed; larger seeds could not be read back for replay.
        if let Some(s) = self.seeds.iter().chain([&self.corpus.seed]).find(|&&s| s > i64::MAX as u64) {
            return Err(Error::Config(format!("seed {s} exceeds the TOML integer range (max {})", i64::MAX)));
        }
        if let Some(b) = self.betas.iter().find(|b| !b.is_finite() || **b < 0.0) {
            return Err(Error::Config(format!("beta must be finite and non-negative, got {b}")));
        }
        if self.dimension == Some(0) {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if kind.is_monte_carlo() {
            let b = &self.budget;
            if b.bins < 8 {
                return Err(Error::Config(format!("budget.bins must be at least 8, got {}", b.bins)));
            }
            if let Some(t) = b.thermalization {
                if t >= b.sweeps {
                    return Err(Error::Config(format!("budget.thermalization {t} must be below sweeps {}", b.sweeps)));
                }
            }
            if self.sizes.iter().any(|&l| l < 3) {
                return Err(Error::Config("periodic sizes must be at least 3".into()));
            }
        }
        match kind {
            ExperimentKind::VerifyIdentities | ExperimentKind::VerifySwitching => {
                if self.corpus.count == 0 {
                    return Err(Error::Config("corpus.count must be positive".into()));
                }
            }
            ExperimentKind::VerifyPfaffian => {
                if self.sizes.iter().any(|&l| !(2..=4).contains(&l)) {
                    return Err(Error::Config("verify-pfaffian grid sides must lie in 2..=4".into()));
                }
                if self.boundary_points.iter().any(|&k| k < 2 || k % 2 == 1) {
                    return Err(Error::Config("boundary_points must be even and at least 2".into()));
                }
            }
            ExperimentKind::GsMatch => {
                if self.block_sizes.iter().any(|&n| n < 2) {
                    return Err(Error::Config("block_sizes must be at least 2".into()));
                }
            }
            ExperimentKind::LocateBetac => {
                if self.sizes.len() < 2 {
                    return Err(Error::Config("locate-betac needs at least two sizes".into()));
                }
                let (lo, hi) = self.bracket.unwrap();
                if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                    return Err(Error::Config(format!("invalid bracket ({lo}, {hi})")));
                }
            }
            ExperimentKind::ScanRl | ExperimentKind::S2Diagnostics | ExperimentKind::IntersectionScan => {
                if let Some(side) = self.block_side {
                    if side == 0 || self.sizes.iter().any(|&l| side > l) {
                        return Err(Error::Config(format!("block_side {side} must lie in 1..=L")));
                    }
                }
                if kind == ExperimentKind::IntersectionScan && (self.dimension.unwrap() < 2 || self.sizes.iter().any(|&l| l < 4)) {
                    return Err(Error::Config("intersection-scan needs d >= 2 and L >= 4".into()));
                }
            }
            ExperimentKind::EmergentPlanarity => {
                if self.separations.iter().any(|&s| s < 1) {
                    return Err(Error::Config("separations must be positive".into()));
                }
                if !(self.nnn_coupling >= 0.0) || !self.nnn_coupling.is_finite() {
                    return Err(Error::Config("nnn_coupling must be finite and non-negative".into()));
                }
            }
            ExperimentKind::McRun => {
                if self.algorithm != Algorithm::Worm && !self.sources.is_empty() {
                    return Err(Error::Config("sources are only used by the worm algorithm".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_verification_config() {
        let cfg = ExperimentConfig::from_toml("kind = \"verify-identities\"", None).unwrap();
        assert_eq!(cfg.corpus.count, DEFAULT_CORPUS_SIZE);
        let cfg2 = ExperimentConfig::from_toml("", Some(ExperimentKind::VerifyIdentities)).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn mc_run_config_parses() {
        let text = r#"
            kind = "mc-run"
            betas = [0.2, 0.4]
            seeds = [1, 2]
            [graph.lattice]
            d = 2
            l = 4
            [budget]
            sweeps = 4000
            [[observables]]
            kind = "s2-pairs"
            pairs = [[0, 1]]
            [[observables]]
            kind = "magnetization"
        "#;
        let cfg = ExperimentConfig::from_toml(text, Some(ExperimentKind::McRun)).unwrap();
        assert_eq!(cfg.observables.len(), 2);
        assert_eq!(cfg.graph.as_ref().unwrap().build().unwrap().n_vertices(), 16);
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap(), None).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.input_hash(), cfg.input_hash());
    }

    #[test]
    fn rejects_malformed_configs() {
        for text in [
            "kind = \"mc-run\"",
            "kind = \"nonsense\"",
            "kind = \"scan-rl\"\ndimension = 2\nsizes = [8]\nbetas = [0.4]",
            "kind = \"verify-identities\"\nunknown = 3",
            "kind = \"locate-betac\"\ndimension = 2\nsizes = [8, 16]\nbracket = [0.5, 0.4]\nseeds = [1]",
            "kind = \"scan-rl\"\ndimension = 2\nsizes = [8]\nbetas = [0.4]\nseeds = [1]\n[budget]\nbins = 4",
            "kind = [",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text, None), Err(Error::Config(_))), "{text}");
        }
        assert!(ExperimentConfig::from_toml("kind = \"gs-match\"", Some(ExperimentKind::McRun)).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = ExperimentConfig::new(ExperimentKind::VerifySwitching);
        let h = a.input_hash();
        a.out = Some("elsewhere".into());
        assert_eq!(a.input_hash(), h);
        a.corpus.seed += 1;
        assert_ne!(a.input_hash(), h);
        assert!(a.experiment_id().starts_with("verify-switching-"));
    }
}
