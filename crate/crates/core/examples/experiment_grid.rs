//! A small experiment grid written to a temporary directory.

use decoupled_saddle::cli::{emit_outputs, run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
seed = 1
epsilons = [0.2, 0.1, 0.05]
check_bounds = true

[[instance]]
id = "bilinear"
kind = "random_bilinear"
dims = [4, 6]
l_xy = 1.0
d = [1.0, 1.0]

[[instance]]
id = "mixed"
kind = "random_mixed"
n = 6
l_x = 10.0
l_xy = 1.0
l_y = 1.0
d = [1.0, 1.0]

[[solver]]
kind = "dm"

[[solver]]
kind = "eg"
"#;

fn main() {
    let cfg = ExperimentConfig::parse(CONFIG).unwrap();
    let rows = run_experiment(&cfg).unwrap();
    for r in &rows {
        println!(
            "{:<9} {:<6} eps={:<5} rounds={:<4} bound={:<6.1} compliant={:?}",
            r.instance_id,
            r.solver,
            r.epsilon,
            r.rounds,
            r.bound_comm.unwrap_or(f64::NAN),
            r.compliant
        );
    }
    let dir = std::env::temp_dir().join("dsp-experiment-grid");
    for path in emit_outputs(&rows, &dir).unwrap() {
        println!("wrote {}", path.display());
    }
}
