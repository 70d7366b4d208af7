//! Experiment configuration (TOML) and its content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measurement::Strategy;
use crate::mitigation::{ConfusionMode, CorrectionOrder, Mitigation};
use crate::simulator::NoiseModel;

pub const DEFAULT_SHOTS: u64 = 24_000;
pub const DEFAULT_SEED: u64 = 2021;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    Vqe,
    Transqse,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Files {
    pub hamiltonian: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetries: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Rotosolve,
    Sgd,
    /// Evaluate the initial point only.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    /// Starting parameters; defaults to zeros (or the screened amplitudes).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    pub max_sweeps: usize,
    pub tol: f64,
    pub learning_rate: f64,
    pub steps: usize,
    /// Rotosolve angular frequency; 2 suits unit-scale `exp(−iθP)` generators.
    pub frequency: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Rotosolve,
            initial: None,
            max_sweeps: 10,
            tol: 1e-3,
            learning_rate: 0.01,
            steps: 50,
            frequency: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Statevector,
    Shots,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "statevector" | "state_vector" | "sv" => Ok(BackendKind::Statevector),
            "shots" | "shot" => Ok(BackendKind::Shots),
            other => Err(Error::input(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub shots: u64,
    pub seed: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Statevector,
            shots: DEFAULT_SHOTS,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationConfig {
    #[serde(with = "display_fromstr")]
    pub selected: Mitigation,
    pub order: CorrectionOrder,
    #[serde(with = "display_fromstr")]
    pub strategy: Strategy,
    pub confusion_mode: ConfusionMode,
    pub calibration_shots: u64,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig {
            selected: Mitigation::SpamPmsv,
            order: CorrectionOrder::SpamThenPmsv,
            strategy: Strategy::General,
            confusion_mode: ConfusionMode::PerQubit,
            calibration_shots: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransQseConfig {
    /// 0 for the rational form, 1 for the first-order expansion.
    pub taylor_order: u32,
}

impl Default for TransQseConfig {
    fn default() -> Self {
        TransQseConfig { taylor_order: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: ProblemKind,
    /// Mean-field energy in kJ/mol; `delta_e = E − e_hf_reference`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_hf_reference: Option<f64>,
    /// Reference occupation on the input register, qubit 0 leftmost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// Sector signs, one per symmetry in file order; overrides the file.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sector: Vec<i8>,
    /// Screening ratio applied to the amplitude table.
    #[serde(default = "default_ratio")]
    pub screening_ratio: f64,
    pub files: Files,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub mitigation: MitigationConfig,
    #[serde(default)]
    pub transqse: TransQseConfig,
}

fn default_ratio() -> f64 {
    5.0
}

mod display_fromstr {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};
    use std::fmt::Display;
    use std::str::FromStr;

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Command-line values that replace configuration entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub backend: Option<BackendKind>,
    pub mitigation: Option<Mitigation>,
    pub strategy: Option<Strategy>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let loc = match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    format!("{source}:{line}")
                }
                None => source.to_string(),
            };
            Error::parse(loc, e.message())
        })?;
        Ok(cfg)
    }

    /// Read a config and make its file paths absolute relative to the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = super::io::read_text(path)?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.files.hamiltonian);
        for p in [
            &mut self.files.symmetries,
            &mut self.files.ansatz,
            &mut self.files.amplitudes,
            &mut self.files.confusion,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.backend.seed = s;
        }
        if let Some(s) = o.shots {
            self.backend.shots = s;
        }
        if let Some(b) = o.backend {
            self.backend.kind = b;
        }
        if let Some(m) = o.mitigation {
            self.mitigation.selected = m;
        }
        if let Some(s) = o.strategy {
            self.mitigation.strategy = s;
        }
    }

    /// Existence of referenced files and range checks.
    pub fn validate(&self) -> Result<()> {
        for (name, p) in self.referenced_files() {
            if !p.is_file() {
                return Err(Error::validation(
                    format!("files.{name}"),
                    format!("{} does not exist", p.display()),
                ));
            }
        }
        if self.backend.kind == BackendKind::Shots && self.backend.shots == 0 {
            return Err(Error::validation("backend.shots", "must be positive for the shot backend"));
        }
        if let Some(r) = &self.reference {
            crate::bitstring::parse_bits(r).map_err(|e| Error::validation("reference", e.to_string()))?;
        }
        if self.sector.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::validation("sector", "signs must be +1 or -1"));
        }
        self.noise.validate().map_err(|e| Error::validation("noise", e.to_string()))?;
        if self.transqse.taylor_order > 1 {
            return Err(Error::validation("transqse.taylor_order", "must be 0 or 1"));
        }
        if self.screening_ratio.is_nan() || self.screening_ratio <= 0.0 {
            return Err(Error::validation("screening_ratio", "must be positive"));
        }
        Ok(())
    }

    pub fn referenced_files(&self) -> Vec<(&'static str, &Path)> {
        let mut out = vec![("hamiltonian", self.files.hamiltonian.as_path())];
        let opt = [
            ("symmetries", &self.files.symmetries),
            ("ansatz", &self.files.ansatz),
            ("amplitudes", &self.files.amplitudes),
            ("confusion", &self.files.confusion),
        ];
        for (name, p) in opt {
            if let Some(p) = p {
                out.push((name, p.as_path()));
            }
        }
        out
    }

    pub fn reference_bits(&self) -> Result<Option<u64>> {
        self.reference
            .as_deref()
            .map(crate::bitstring::parse_bits)
            .transpose()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("serializing config: {e}")))
    }

    /// SHA-256 over the serialized config with file names only, followed by
    /// each referenced file's name and bytes. Independent of where the files live.
    pub fn hash(&self) -> Result<String> {
        let mut portable = self.clone();
        portable.strip_dirs();
        let mut h = Sha256::new();
        h.update(portable.to_toml()?.as_bytes());
        for (name, p) in self.referenced_files() {
            h.update(name.as_bytes());
            h.update(std::fs::read(p)?);
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Replace every path by its file name.
    pub fn strip_dirs(&mut self) {
        let strip = |p: &mut PathBuf| {
            if let Some(n) = p.file_name() {
                *p = PathBuf::from(n);
            }
        };
        strip(&mut self.files.hamiltonian);
        for p in [
            &mut self.files.symmetries,
            &mut self.files.ansatz,
            &mut self.files.amplitudes,
            &mut self.files.confusion,
        ]
        .into_iter()
        .flatten()
        {
            strip(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[files]
hamiltonian = "h.json"
"#;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::parse(MINIMAL, "inline").unwrap();
        assert_eq!(c.backend.shots, 24_000);
        assert_eq!(c.problem, ProblemKind::Vqe);
        assert_eq!(c.mitigation.selected, Mitigation::SpamPmsv);
        assert_eq!(c.noise, NoiseModel::default());
    }

    #[test]
    fn unknown_key_names_line() {
        let text = "[files]\nhamiltonian = \"h.json\"\n\n[backend]\nshotz = 3\n";
        let err = ExperimentConfig::parse(text, "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("cfg.toml:5"), "{err}");
    }

    #[test]
    fn overrides_and_roundtrip() {
        let mut c = ExperimentConfig::parse(MINIMAL, "inline").unwrap();
        c.apply(&Overrides {
            shots: Some(10),
            backend: Some(BackendKind::Shots),
            mitigation: Some(Mitigation::Raw),
            ..Default::default()
        });
        let back = ExperimentConfig::parse(&c.to_toml().unwrap(), "again").unwrap();
        assert_eq!(back, c);
        assert_eq!(back.backend.shots, 10);
    }

    #[test]
    fn zero_shots_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("h.json"), "{}").unwrap();
        let mut c = ExperimentConfig::parse(MINIMAL, "inline").unwrap();
        c.resolve_paths(dir.path());
        c.backend.kind = BackendKind::Shots;
        c.backend.shots = 0;
        assert!(c.validate().unwrap_err().is_validation());
        c.files.ansatz = Some(dir.path().join("missing.json"));
        c.backend.shots = 5;
        assert!(c.validate().unwrap_err().to_string().contains("files.ansatz"));
    }
}
