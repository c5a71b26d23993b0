//! Load a scenario from TOML with overrides and write its artifacts.

use vibroimpact::scenario::{run, ScenarioConfig};

const CONFIG: &str = r#"
scenario = "fig2-lumped-comparison"

[output]
trajectory = false

[params]
duration = 0.2
"#;

fn main() -> vibroimpact::Result<()> {
    let config = ScenarioConfig::from_toml(CONFIG, &["params.contact_stiffness=2e4".to_string()])?;
    let dir = std::env::temp_dir().join("vibro-scenario-config");
    let summary = run(&config, &dir)?;
    println!("wrote {}", summary.out_dir.display());
    println!("{}", serde_json::to_string_pretty(&summary.manifest["results"]).unwrap_or_default());
    Ok(())
}
