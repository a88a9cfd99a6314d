//! Config files: TOML with `[run]`, `[problem]`, `[output]` and, for
//! sweeps, `[sweep]`. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qfw_core::fw_engine::Variant;
use qfw_core::lmo_matrix::DEFAULT_C0;
use qfw_core::NoiseMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable that overrides `[output] dir`.
pub const OUTPUT_DIR_ENV: &str = "OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub run: RunSection,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub variant: String,
    pub epsilon: f64,
    #[serde(default = "default_p_fail")]
    pub p_fail: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_error_model")]
    pub error_model: NoiseMode,
    #[serde(default = "default_c0")]
    pub c0: f64,
    /// Overrides the round count derived from `epsilon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

fn default_p_fail() -> f64 {
    0.05
}

fn default_error_model() -> NoiseMode {
    NoiseMode::Uniform
}

fn default_c0() -> f64 {
    DEFAULT_C0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    LeastSquaresL1,
    L1Quadratic,
    SimplexQuadratic,
    GroupQuadratic,
    MatrixCompletion,
    PlantedSpectrum,
}

impl ProblemKind {
    pub fn is_matrix(&self) -> bool {
        matches!(self, ProblemKind::MatrixCompletion | ProblemKind::PlantedSpectrum)
    }
}

/// Problem parameters. Each kind reads the keys it needs; the rest must be
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub d: usize,
    /// Seed of the generator. Defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_norms: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Grid axes of a sweep. Every listed axis replaces the matching `[run]`
/// or `[problem]` value; the cells are the cross product.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<Vec<usize>>,
}

fn bad<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn forbid<T>(field: &Option<T>, name: &str, kind: ProblemKind) -> Result<(), CliError> {
    if field.is_some() {
        return bad(format!("problem key `{name}` does not apply to kind {kind:?}"));
    }
    Ok(())
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn variant(&self) -> Result<Variant, CliError> {
        Variant::parse(&self.run.variant)
            .ok_or_else(|| CliError::Config(format!("unknown variant `{}`", self.run.variant)))
    }

    pub fn problem_seed(&self) -> u64 {
        self.problem.seed.unwrap_or(self.run.seed)
    }

    /// Checks everything that can be checked without building the problem.
    pub fn validate(&self) -> Result<(), CliError> {
        let variant = self.variant()?;
        let r = &self.run;
        if !(r.epsilon > 0.0 && r.epsilon.is_finite()) {
            return bad(format!("epsilon must be finite and > 0, got {}", r.epsilon));
        }
        if !(r.p_fail > 0.0 && r.p_fail < 1.0) {
            return bad(format!("p_fail must be in (0, 1), got {}", r.p_fail));
        }
        if !(r.c0 > 0.0 && r.c0.is_finite()) {
            return bad(format!("c0 must be finite and > 0, got {}", r.c0));
        }
        if r.iterations == Some(0) {
            return bad("iterations must be >= 1");
        }
        let p = &self.problem;
        if p.d == 0 {
            return bad("problem d must be >= 1");
        }
        if let Some(rad) = p.radius {
            if !(rad > 0.0 && rad.is_finite()) {
                return bad(format!("radius must be finite and > 0, got {rad}"));
            }
        }
        let kind = p.kind;
        match variant.domain() {
            Some(true) if !kind.is_matrix() => {
                return bad(format!("variant {} needs a matrix problem", variant.name()))
            }
            Some(false) if kind.is_matrix() => {
                return bad(format!("variant {} needs a vector problem", variant.name()))
            }
            _ => {}
        }
        let vector_only = [
            (p.n_rows.is_some(), "n_rows"),
            (p.sparsity.is_some(), "sparsity"),
            (p.noise.is_some(), "noise"),
        ];
        match kind {
            ProblemKind::LeastSquaresL1 => {}
            _ => {
                for (set, name) in vector_only {
                    if set {
                        return bad(format!("problem key `{name}` does not apply to kind {kind:?}"));
                    }
                }
            }
        }
        if kind != ProblemKind::GroupQuadratic {
            forbid(&p.groups, "groups", kind)?;
            forbid(&p.p_norms, "p_norms", kind)?;
            forbid(&p.scale, "scale", kind)?;
        }
        if kind != ProblemKind::MatrixCompletion {
            forbid(&p.rank, "rank", kind)?;
            forbid(&p.obs_fraction, "obs_fraction", kind)?;
        }
        if kind != ProblemKind::PlantedSpectrum {
            forbid(&p.sigmas, "sigmas", kind)?;
        }
        if kind == ProblemKind::SimplexQuadratic {
            forbid(&p.radius, "radius", kind)?;
        }
        match (variant, kind) {
            (Variant::QfwGroup, k) if k != ProblemKind::GroupQuadratic => {
                return bad("qfw_group needs a group_quadratic problem")
            }
            (Variant::QfwMaxfind | Variant::QfwJordan | Variant::ClassicalFw, ProblemKind::GroupQuadratic) => {
                return bad(format!("{} does not run on latent group balls", variant.name()))
            }
            _ => {}
        }
        if kind == ProblemKind::GroupQuadratic && (p.groups.is_none() || p.p_norms.is_none()) {
            return bad("group_quadratic needs `groups` and `p_norms`");
        }
        if kind == ProblemKind::PlantedSpectrum && p.sigmas.is_none() {
            return bad("planted_spectrum needs `sigmas`");
        }
        if let Some(s) = &self.sweep {
            if let Some(vs) = &s.variant {
                for v in vs {
                    if Variant::parse(v).is_none() {
                        return bad(format!("unknown variant `{v}` in sweep"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Output directory: the explicit override, then `OUTPUT_DIR`, then the
    /// config value.
    pub fn output_dir(&self, cli_override: Option<&Path>) -> PathBuf {
        if let Some(p) = cli_override {
            return p.to_path_buf();
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.dir.clone(),
        }
    }

    /// Key/value echo of the run parameters, used in manifests.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("variant".into(), self.run.variant.clone());
        m.insert("epsilon".into(), format!("{:e}", self.run.epsilon));
        m.insert("p_fail".into(), format!("{:e}", self.run.p_fail));
        m.insert("seed".into(), self.run.seed.to_string());
        m.insert("error_model".into(), self.run.error_model.to_string());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[run]
variant = "qfw_maxfind"
epsilon = 0.1
seed = 3

[problem]
kind = "least_squares_l1"
d = 20
"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let c = Config::parse(MINIMAL).unwrap();
        assert_eq!(c.run.p_fail, 0.05);
        assert_eq!(c.run.error_model, NoiseMode::Uniform);
        assert_eq!(c.output.dir, PathBuf::from("out"));
        assert_eq!(c.problem_seed(), 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("seed = 3", "seed = 3\nbogus = 1");
        assert!(matches!(Config::parse(&text), Err(CliError::Config(_))));
        let text = MINIMAL.replace("d = 20", "d = 20\nrank = 2");
        assert!(matches!(Config::parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn variant_domain_checked() {
        let text = MINIMAL.replace("qfw_maxfind", "qfw_qtsve");
        assert!(Config::parse(&text).is_err());
        let text = MINIMAL.replace("qfw_maxfind", "nope");
        assert!(Config::parse(&text).is_err());
        let text = MINIMAL.replace("epsilon = 0.1", "epsilon = -1.0");
        assert!(Config::parse(&text).is_err());
    }
}
