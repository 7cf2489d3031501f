use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;
use crate::runtime::RunConfig;
use crate::stl::{parse_spec, Formula};
use crate::surrogate::{Instruction, SurrogateConfig};
use crate::synthesis::SynthesisConfig;
use crate::world::{load_scene, Scene};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotConfig {
    /// Pixels per meter.
    pub scale: f64,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self { scale: 80.0 }
    }
}

fn default_n_runs() -> usize {
    200
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Experiment file. `scene` and `out` are relative to the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: PathBuf,
    pub spec: String,
    pub instruction: Instruction,
    #[serde(default)]
    pub surrogate: SurrogateConfig,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub plot: PlotConfig,
}

/// A loaded experiment: config plus the parsed scene and formula.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub scene: Scene,
    pub spec: Formula,
    base: PathBuf,
}

impl Experiment {
    /// Validate a config whose relative paths resolve against `base`.
    pub fn from_config(config: ExperimentConfig, base: impl Into<PathBuf>) -> Result<Self, HarnessError> {
        let base = base.into();
        if config.n_runs == 0 {
            return Err(HarnessError::Usage("n_runs must be at least 1".into()));
        }
        let scene_path = base.join(&config.scene);
        if !scene_path.is_file() {
            return Err(HarnessError::io(
                &scene_path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "scene file not found"),
            ));
        }
        let scene = load_scene(&scene_path)?;
        let spec = parse_spec(&config.spec)?;
        scene.check_formula(&spec)?;
        if scene.region(&config.instruction.goal_region).is_none() {
            return Err(HarnessError::Domain(format!(
                "instruction goal region '{}' is not defined in the scene",
                config.instruction.goal_region
            )));
        }
        config.surrogate.validate()?;
        config
            .synthesis
            .validate()
            .map_err(|e| HarnessError::Usage(e.to_string()))?;
        Ok(Self {
            config,
            scene,
            spec,
            base,
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.base.join(&self.config.out)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base
    }
}

/// Set the value at a dotted path. The right-hand side is parsed as JSON
/// and falls back to a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), HarnessError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Usage(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(HarnessError::Usage(format!("override '{assignment}' has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            HarnessError::Usage(format!("override '{key}': '{}' is not an object", parts[..i].join(".")))
        })?;
        if i + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        node = obj
            .entry((*part).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

/// Read an experiment file, apply overrides in order and validate.
pub fn load_experiment(path: impl AsRef<Path>, overrides: &[String]) -> Result<Experiment, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut root: Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let config: ExperimentConfig =
        serde_json::from_value(root).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Experiment::from_config(config, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_set_nested_values() {
        let mut v = json!({"run": {"seed": 1}, "spec": "x"});
        apply_override(&mut v, "run.seed=7").unwrap();
        apply_override(&mut v, "synthesis.episodes=10").unwrap();
        apply_override(&mut v, "spec=F[0,3] a").unwrap();
        assert_eq!(v["run"]["seed"], 7);
        assert_eq!(v["synthesis"]["episodes"], 10);
        assert_eq!(v["spec"], "F[0,3] a");
    }

    #[test]
    fn malformed_override_is_usage_error() {
        let mut v = json!({"spec": "x"});
        assert_eq!(apply_override(&mut v, "novalue").unwrap_err().exit_code(), 1);
        assert_eq!(apply_override(&mut v, "spec.inner=1").unwrap_err().exit_code(), 1);
    }

    #[test]
    fn missing_config_is_io_error() {
        let err = load_experiment("/nonexistent/experiment.json", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
