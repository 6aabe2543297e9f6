//! Resolving a TOML run configuration: omitted keys take the defaults of the
//! chosen problem and unknown keys are rejected.

use viscous_hji::config::RunConfig;

const TOML: &str = r#"
seed = 3
deterministic = true

[problem]
kind = "pubsub"
dimension = 5

[training]
epochs = 200
outer_iterations = 10

[training.selector]
mode = "numeric"
step = 0.05
max_iterations = 100
tolerance = 1e-6
"#;

fn main() -> viscous_hji::Result<()> {
    let config = RunConfig::parse(TOML)?;
    println!(
        "pub-sub N=5: {} collocation points, hidden {:?}, E = {}, M = {}, seed {}",
        config.training.n_collocation, config.training.hidden, config.training.epochs, config.training.outer_iterations, config.training.seed
    );
    println!("fdm n_x = {}, stored slices {}", config.fdm.n_x, config.fdm.stored_slices);
    println!("--- resolved ---\n{}", config.to_toml()?);
    match RunConfig::parse("[training]\nlearning_rate = 0.1\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
