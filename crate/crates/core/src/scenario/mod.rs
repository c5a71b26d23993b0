//! Named, configurable simulation scenarios.
//!
//! A config is a TOML document:
//!
//! ```toml
//! scenario = "fig7-impeded-string"
//! oversample = 1.0
//!
//! [output]
//! audio = false
//!
//! [params]
//! barrier = -0.001
//! ```
//!
//! Every field is optional except `scenario`; missing ones take the
//! scenario's defaults and unknown ones are rejected. `--set a.b=value`
//! overrides are applied to the document before it is parsed.

mod lumped_runs;
mod output;
mod string_runs;
mod tanpura_runs;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

pub use lumped_runs::{
    AliasingExperiment, AliasingOutcome, BallOutcome, BouncingBall, ComparisonOutcome,
    LumpedComparison, OscillatorBarrier, OscillatorOutcome, PreservationPoint, PreservationSweep,
};
pub use output::{format_value, strided, NewtonStats, OutputDir};
pub use string_runs::{
    Cantilever, CantileverOutcome, ImpededOutcome, ImpededString, StiffStringObstacle,
    StiffStringOutcome,
};
pub use tanpura_runs::{Mode1Outcome, PluckOutcome, TanpuraMode1, TanpuraPluck};

/// What a scenario produces besides its files.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    /// Dimensionless scheme constants.
    pub derived: Map<String, Value>,
    /// Newton statistics per run.
    pub newton: Map<String, Value>,
    /// Energy-error maxima per run.
    pub energy: Map<String, Value>,
    /// Scenario-specific measurements.
    pub results: Map<String, Value>,
}

/// Which artifacts to write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    /// Output directory; `--out-dir` takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub trajectory: bool,
    pub energy: bool,
    pub spectra: bool,
    pub audio: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            dir: None,
            trajectory: true,
            energy: true,
            spectra: true,
            audio: true,
        }
    }
}

/// A scenario's parameter block.
pub trait Scenario: Serialize + DeserializeOwned + Default + Clone {
    /// Multiply the sample rate by `factor` (and refine the grid where the
    /// scenario asks for it).
    fn oversample(&mut self, factor: f64);

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report>;
}

macro_rules! scenarios {
    ($($variant:ident => $name:literal, $ty:ty, $desc:literal;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum ScenarioKind {
            $($variant,)*
        }

        impl ScenarioKind {
            /// All scenarios, sorted by name.
            pub const ALL: &'static [ScenarioKind] = &[$(ScenarioKind::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(ScenarioKind::$variant => $name,)*
                }
            }

            pub fn description(self) -> &'static str {
                match self {
                    $(ScenarioKind::$variant => $desc,)*
                }
            }

            fn default_params(self) -> ScenarioParams {
                match self {
                    $(ScenarioKind::$variant => ScenarioParams::$variant(<$ty>::default()),)*
                }
            }

            fn parse_params(self, table: toml::Table) -> Result<ScenarioParams> {
                let value = toml::Value::Table(table);
                match self {
                    $(ScenarioKind::$variant => value
                        .try_into::<$ty>()
                        .map(ScenarioParams::$variant),)*
                }
                .map_err(|e| Error::Config(format!("[params] of {}: {e}", self.name())))
            }
        }

        /// Parameters of one of the built-in scenarios.
        #[derive(Debug, Clone, PartialEq, Serialize)]
        #[serde(untagged)]
        pub enum ScenarioParams {
            $($variant($ty),)*
        }

        impl ScenarioParams {
            pub fn kind(&self) -> ScenarioKind {
                match self {
                    $(ScenarioParams::$variant(_) => ScenarioKind::$variant,)*
                }
            }

            pub fn oversample(&mut self, factor: f64) {
                match self {
                    $(ScenarioParams::$variant(p) => p.oversample(factor),)*
                }
            }

            fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
                match self {
                    $(ScenarioParams::$variant(p) => p.execute(out, options),)*
                }
            }
        }
    };
}

scenarios! {
    Fig2LumpedComparison => "fig2-lumped-comparison", LumpedComparison,
        "Mass hitting a one-sided barrier: energy error of EC, TR, MR and PSE";
    Fig3PreservationSweep => "fig3-preservation-sweep", PreservationSweep,
        "Energy preservation metric over contact exponent and stiffness";
    Fig4BouncingBall => "fig4-bouncing-ball", BouncingBall,
        "Ball bouncing on a stiff floor under gravity";
    Fig4OscillatorBarrier => "fig4-oscillator-barrier", OscillatorBarrier,
        "Linear oscillator striking a barrier for ten seconds";
    Fig5AliasingSweep => "fig5-aliasing-sweep", AliasingExperiment,
        "Spring-stiffness sweep at two sample rates, aliased spectral energy";
    Fig7ImpededString => "fig7-impeded-string", ImpededString,
        "Ideal string with and without a flat obstacle, fundamental ratio";
    Fig8StiffStringObstacle => "fig8-stiff-string-obstacle", StiffStringObstacle,
        "Stiff string bouncing on a curved obstacle near one end";
    Fig9Cantilever => "fig9-cantilever", Cantilever,
        "Damped cantilever beam striking the edge of a table";
    TanpuraMode1 => "tanpura-mode1", TanpuraMode1,
        "Tanpura string released in its first mode: nut force and snapshots";
    TanpuraPluck => "tanpura-pluck", TanpuraPluck,
        "Tanpura string plucked at mid-point, with and without the bridge";
}

impl ScenarioKind {
    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|k| k.name().to_string()).collect()
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownScenario {
                name: s.to_string(),
                valid: Self::names(),
            })
    }
}

impl Serialize for ScenarioKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ScenarioKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// A fully resolved scenario configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Recorded for reproducibility; the built-in scenarios are deterministic.
    pub seed: u64,
    /// Sample-rate multiplier applied when the scenario runs.
    pub oversample: f64,
    pub output: OutputOptions,
    pub params: ScenarioParams,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ScenarioKind,
    #[serde(default)]
    seed: u64,
    #[serde(default = "one")]
    oversample: f64,
    #[serde(default)]
    output: OutputOptions,
}

fn one() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn defaults(kind: ScenarioKind) -> Self {
        Self {
            scenario: kind,
            seed: 0,
            oversample: 1.0,
            output: OutputOptions::default(),
            params: kind.default_params(),
        }
    }

    /// Parse a TOML document after applying `key=value` overrides.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        Self::from_table(table)
    }

    pub fn from_table(mut table: toml::Table) -> Result<Self> {
        // Resolve the name first so an unknown scenario gets its own error.
        match table.get("scenario") {
            Some(toml::Value::String(name)) => {
                name.parse::<ScenarioKind>()?;
            }
            Some(other) => {
                return Err(Error::Config(format!(
                    "`scenario` must be a string, got {other}"
                )))
            }
            None => return Err(Error::Config("missing `scenario` key".into())),
        }
        let params = match table.remove("params") {
            None => toml::Table::new(),
            Some(toml::Value::Table(t)) => t,
            Some(other) => {
                return Err(Error::Config(format!("`params` must be a table, got {other}")))
            }
        };
        let raw: RawConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if !(raw.oversample >= 1.0 && raw.oversample.is_finite()) {
            return Err(Error::Config(format!(
                "oversample must be a finite factor >= 1, got {}",
                raw.oversample
            )));
        }
        Ok(Self {
            scenario: raw.scenario,
            seed: raw.seed,
            oversample: raw.oversample,
            output: raw.output,
            params: raw.scenario.parse_params(params)?,
        })
    }

    /// Load a config file, or a bare scenario name for its defaults.
    pub fn load(source: &str, overrides: &[String]) -> Result<Self> {
        let path = Path::new(source);
        if path.is_file() {
            let text = std::fs::read_to_string(path)?;
            return Self::from_toml(&text, overrides);
        }
        if let Ok(kind) = source.parse::<ScenarioKind>() {
            return Self::from_toml(&format!("scenario = \"{}\"", kind.name()), overrides);
        }
        if source.ends_with(".toml") || source.contains(std::path::MAIN_SEPARATOR) {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("config file `{source}` not found"),
            )));
        }
        Err(Error::UnknownScenario {
            name: source.to_string(),
            valid: ScenarioKind::names(),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parameters as they will actually run.
    pub fn effective_params(&self) -> ScenarioParams {
        let mut params = self.params.clone();
        if self.oversample != 1.0 {
            params.oversample(self.oversample);
        }
        params
    }
}

/// Set `dotted.key` to `value`, parsing `value` as a TOML value and falling
/// back to a plain string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut cursor = table;
    for part in parts {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Value,
}

/// Run a scenario, writing its artifacts, `config.toml` and
/// `manifest.json` to `out_dir`.
pub fn run(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary> {
    let start = Instant::now();
    let mut out = OutputDir::create(out_dir)?;
    out.write_text("config.toml", &config.to_toml()?)?;
    let params = config.effective_params();
    let report = params.execute(&mut out, &config.output)?;
    let manifest = json!({
        "scenario": config.scenario.name(),
        "description": config.scenario.description(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "oversample": config.oversample,
        "config": config,
        "effective_params": params,
        "derived": report.derived,
        "newton": report.newton,
        "energy": report.energy,
        "results": report.results,
        "outputs": out.files(),
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest: {e}")))?;
    std::fs::write(out.root().join("manifest.json"), text + "\n")?;
    Ok(RunSummary {
        out_dir: out.root().to_path_buf(),
        manifest,
    })
}

/// Insert `value` under `key`, serialized to JSON.
pub(crate) fn put<T: Serialize>(map: &mut Map<String, Value>, key: &str, value: T) {
    map.insert(
        key.to_string(),
        serde_json::to_value(value).unwrap_or(Value::Null),
    );
}

/// Largest absolute entry, or 0.
pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_sorted_and_unique() {
        let names = ScenarioKind::names();
        assert_eq!(names.len(), 10);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names, sorted);
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), *k);
            assert_eq!(ScenarioConfig::defaults(*k).params.kind(), *k);
        }
    }

    #[test]
    fn unknown_scenario_lists_valid_names() {
        match ScenarioConfig::from_toml("scenario = \"fig6\"", &[]) {
            Err(Error::UnknownScenario { name, valid }) => {
                assert_eq!(name, "fig6");
                assert_eq!(valid.len(), 10);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ScenarioConfig::load("no-such-thing", &[]),
            Err(Error::UnknownScenario { .. })
        ));
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg = ScenarioConfig::from_toml("scenario = \"fig7-impeded-string\"", &[]).unwrap();
        assert_eq!(cfg, ScenarioConfig::defaults(ScenarioKind::Fig7ImpededString));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "scenario = \"fig2-lumped-comparison\"\ncolour = 1",
            "scenario = \"fig2-lumped-comparison\"\n[params]\nmas = 1.0",
            "scenario = \"fig2-lumped-comparison\"\n[output]\nwav = true",
            "params = {}",
        ] {
            assert!(
                matches!(ScenarioConfig::from_toml(text, &[]), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn overrides_apply_before_parsing() {
        let cfg = ScenarioConfig::from_toml(
            "scenario = \"fig7-impeded-string\"",
            &[
                "params.contact_stiffness=1e9".into(),
                "output.audio=false".into(),
                "oversample = 2".into(),
            ],
        )
        .unwrap();
        match &cfg.params {
            ScenarioParams::Fig7ImpededString(p) => assert_eq!(p.contact_stiffness, 1e9),
            other => panic!("{other:?}"),
        }
        assert!(!cfg.output.audio);
        assert_eq!(cfg.oversample, 2.0);
        assert!(ScenarioConfig::from_toml("scenario = \"fig7-impeded-string\"", &["nonsense".into()]).is_err());
        assert!(ScenarioConfig::from_toml(
            "scenario = \"fig7-impeded-string\"",
            &["params.bogus=1".into()]
        )
        .is_err());
    }

    #[test]
    fn every_default_round_trips() {
        for k in ScenarioKind::ALL {
            let cfg = ScenarioConfig::defaults(*k);
            let text = cfg.to_toml().unwrap();
            assert_eq!(ScenarioConfig::from_toml(&text, &[]).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn override_values_fall_back_to_strings() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "a.b=hello world").unwrap();
        apply_override(&mut t, "a.c=[1, 2]").unwrap();
        assert_eq!(t["a"]["b"].as_str(), Some("hello world"));
        assert_eq!(t["a"]["c"].as_array().map(|a| a.len()), Some(2));
        assert!(apply_override(&mut t, "a.b.c=1").is_err());
        assert!(apply_override(&mut t, ".x=1").is_err());
    }
}
