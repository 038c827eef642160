use std::path::{Path, PathBuf};

use hybridqm::{EvolutionConfig, HybridParams};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub params: HybridParams,
    pub grid: GridConfig,
    pub state: StateConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default)]
    pub analysis: Vec<Analysis>,
    #[serde(default)]
    pub p_ref: PRef,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    Gaussian {
        center_x: f64,
        center_k: f64,
        sigma: f64,
    },
    TwoMode {
        k1_index: usize,
        k2_index: usize,
        phase: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    None,
    Harmonic {
        omega: f64,
    },
    Quartic {
        lambda: f64,
    },
    Well {
        depth: f64,
        width: f64,
    },
    /// Two-column `x V` text file, relative to the config file.
    Table {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Q,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Uncertainty,
    Qsl,
    Ehrenfest,
    AutocorrFit,
    LimitsSuite,
    Propagator,
    Sweep { axis: SweepAxis, values: Vec<f64> },
}

impl Analysis {
    fn needs_evolution(&self) -> bool {
        matches!(
            self,
            Analysis::Qsl | Analysis::Ehrenfest | Analysis::AutocorrFit
        )
    }

    fn name(&self) -> &'static str {
        match self {
            Analysis::Uncertainty => "uncertainty",
            Analysis::Qsl => "qsl",
            Analysis::Ehrenfest => "ehrenfest",
            Analysis::AutocorrFit => "autocorr_fit",
            Analysis::LimitsSuite => "limits_suite",
            Analysis::Propagator => "propagator",
            Analysis::Sweep { .. } => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PRefKeyword {
    Auto,
}

/// Reference momentum for log moments: a number, or `"auto"` for the
/// canonical momentum spread of the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PRef {
    Value(f64),
    Keyword(PRefKeyword),
}

impl Default for PRef {
    fn default() -> Self {
        PRef::Keyword(PRefKeyword::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default)]
    pub format: TableFormat,
}

/// A parsed config and the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub base_dir: PathBuf,
    pub raw: Vec<u8>,
}

pub fn load(path: &Path) -> Result<LoadedConfig, Failure> {
    let raw = std::fs::read(path)
        .map_err(|e| Failure::config("config", format!("cannot read {}: {e}", path.display())))?;
    let config = parse(&raw)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    config.check(&base_dir)?;
    Ok(LoadedConfig {
        config,
        base_dir,
        raw,
    })
}

/// Parses JSON, reporting the dotted path of the first offending field.
/// Externally tagged twins of the `type`-tagged sections. Serde buffers
/// internally tagged input, which hides the failing field from the path
/// tracker; re-reading the section through these recovers it.
#[derive(Deserialize)]
#[serde(remote = "StateConfig", rename_all = "snake_case", deny_unknown_fields)]
enum StateShape {
    Gaussian {
        center_x: f64,
        center_k: f64,
        sigma: f64,
    },
    TwoMode {
        k1_index: usize,
        k2_index: usize,
        phase: f64,
    },
}

#[derive(Deserialize)]
#[serde(
    remote = "PotentialConfig",
    rename_all = "snake_case",
    deny_unknown_fields
)]
enum PotentialShape {
    None,
    Harmonic { omega: f64 },
    Quartic { lambda: f64 },
    Well { depth: f64, width: f64 },
    Table { file: PathBuf },
}

fn tagged_field(raw: &[u8], section: &str) -> Option<String> {
    let root: serde_json::Value = serde_json::from_slice(raw).ok()?;
    let mut body = root.get(section)?.as_object()?.clone();
    let tag = body.remove("type")?.as_str()?.to_string();
    let external = if body.is_empty() && tag == "none" {
        serde_json::Value::String(tag)
    } else {
        serde_json::json!({ tag: body })
    };
    let mut track = serde_path_to_error::Track::new();
    let de = serde_path_to_error::Deserializer::new(external, &mut track);
    let failed = match section {
        "state" => StateShape::deserialize(de).is_err(),
        _ => PotentialShape::deserialize(de).is_err(),
    };
    if !failed {
        return None;
    }
    let path = track.path().to_string();
    let inner = path
        .split_once('.')
        .map(|(_, rest)| rest)
        .filter(|r| !r.is_empty())?;
    Some(format!("{section}.{inner}"))
}

pub fn parse(raw: &[u8]) -> Result<ScenarioConfig, Failure> {
    let mut de = serde_json::Deserializer::from_slice(raw);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = match path.as_str() {
            "." => "config".to_string(),
            "state" | "potential" => tagged_field(raw, &path).unwrap_or(path),
            _ => path,
        };
        Failure::config(field, e.into_inner().to_string())
    })
}

impl ScenarioConfig {
    /// Checks everything that can be checked before any numerics run.
    pub fn check(&self, base_dir: &Path) -> Result<(), Failure> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Failure::config(
                "schema_version",
                format!(
                    "unsupported version {}; this build reads {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        self.params.validate()?;
        if let Some(evolution) = &self.evolution {
            evolution.validate()?;
        }
        if let PRef::Value(p) = self.p_ref {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Failure::config(
                    "p_ref",
                    format!("{p} must be positive or \"auto\""),
                ));
            }
        }
        if let PotentialConfig::Table { file } = &self.potential {
            let full = base_dir.join(file);
            if !full.is_file() {
                return Err(Failure::config(
                    "potential.file",
                    format!("{} does not exist", full.display()),
                ));
            }
        }
        for (i, a) in self.analysis.iter().enumerate() {
            if a.needs_evolution() && self.evolution.is_none() {
                return Err(Failure::config(
                    format!("analysis[{i}]"),
                    format!("{} needs an evolution section", a.name()),
                ));
            }
            if let Analysis::Sweep { axis, values } = a {
                if values.is_empty() {
                    return Err(Failure::config(
                        format!("analysis[{i}].sweep.values"),
                        "empty sweep",
                    ));
                }
                for (j, &v) in values.iter().enumerate() {
                    let p = self.swept(*axis, v);
                    if let Err(e) = p.validate() {
                        return Err(Failure::config(
                            format!("analysis[{i}].sweep.values[{j}]"),
                            e.to_string(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn swept(&self, axis: SweepAxis, value: f64) -> HybridParams {
        let mut p = self.params;
        match axis {
            SweepAxis::Q => p.q = value,
            SweepAxis::Alpha => p.alpha = value,
        }
        p
    }
}

/// Reads a two-column `x V` table. Blank lines and `#` comments are skipped;
/// columns may be separated by whitespace or commas.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::config(
            "potential.file",
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    let (mut xs, mut vs) = (vec![], vec![]);
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
        match parsed.as_deref() {
            Some([x, v]) => {
                xs.push(*x);
                vs.push(*v);
            }
            _ => {
                return Err(Failure::config(
                    "potential.file",
                    format!("{}:{}: expected two numbers", path.display(), n + 1),
                ))
            }
        }
    }
    Ok((xs, vs))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "params": {"q": 1.3, "alpha": 1.7},
        "grid": {"n_points": 256, "x_min": -20, "x_max": 20},
        "state": {"type": "gaussian", "center_x": 0, "center_k": 0, "sigma": 1},
        "output": {"directory": "out"}
    }"#;

    #[test]
    fn defaults() {
        let c = parse(MINIMAL.as_bytes()).unwrap();
        assert_eq!(c.potential, PotentialConfig::None);
        assert_eq!(c.p_ref, PRef::Keyword(PRefKeyword::Auto));
        assert_eq!(c.output.format, TableFormat::Csv);
        assert_eq!(c.params.hbar, 1.0);
        c.check(Path::new(".")).unwrap();
    }

    #[test]
    fn analyses_and_reference() {
        let text = MINIMAL.replace(
            r#""output""#,
            r#""analysis": ["uncertainty", {"sweep": {"axis": "alpha", "values": [1.5, 2.0]}}], "p_ref": 0.5, "output""#,
        );
        let c = parse(text.as_bytes()).unwrap();
        assert_eq!(c.p_ref, PRef::Value(0.5));
        assert_eq!(c.analysis.len(), 2);
        assert_eq!(c.swept(SweepAxis::Alpha, 1.5).alpha, 1.5);
    }

    #[test]
    fn errors_name_the_field() {
        let text = MINIMAL.replace(r#""sigma": 1"#, r#""sigma": "wide""#);
        let Failure::Config { field, .. } = parse(text.as_bytes()).unwrap_err() else {
            panic!()
        };
        assert_eq!(field, "state.sigma");

        let text = MINIMAL.replace(r#""q": 1.3"#, r#""q": 1.0"#);
        let Failure::Config { field, .. } = parse(text.as_bytes())
            .unwrap()
            .check(Path::new("."))
            .unwrap_err()
        else {
            panic!()
        };
        assert_eq!(field, "params.q");

        let text = MINIMAL.replace(r#""output""#, r#""analysis": ["qsl"], "output""#);
        let Failure::Config { field, .. } = parse(text.as_bytes())
            .unwrap()
            .check(Path::new("."))
            .unwrap_err()
        else {
            panic!()
        };
        assert_eq!(field, "analysis[0]");

        let text = MINIMAL.replace(
            r#""output""#,
            r#""analysis": [{"sweep": {"axis": "alpha", "values": [1.5, 2.5]}}], "output""#,
        );
        let Failure::Config { field, .. } = parse(text.as_bytes())
            .unwrap()
            .check(Path::new("."))
            .unwrap_err()
        else {
            panic!()
        };
        assert_eq!(field, "analysis[0].sweep.values[1]");
    }

    #[test]
    fn table_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "# x V\n-1, 2\n0 0\n\n1\t2 # right\n").unwrap();
        assert_eq!(
            read_table(&path).unwrap(),
            (vec![-1.0, 0.0, 1.0], vec![2.0, 0.0, 2.0])
        );
        std::fs::write(&path, "1 2 3\n").unwrap();
        assert!(read_table(&path).is_err());
    }
}
