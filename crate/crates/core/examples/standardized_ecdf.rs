//! A small cover-time experiment: replicate the restricted and
//! unrestricted growth processes at one intensity, standardize the cover
//! times with the common map, and report the KS distance of each arm to
//! the two candidate limit laws.
//!
//! The restricted times sit close to the two-component limit while the
//! unrestricted ones sit close to the pure Gumbel form: boundary effects
//! move the whole distribution.
//!
//! ```bash
//! cargo run --release --example standardized_ecdf
//! ```

use covertimes::geom::Window;
use covertimes::montecarlo::{run_cover_time_experiment, Engine, ExperimentConfig, ExperimentModel};
use covertimes::processes::RngSpec;

fn main() {
    let base = ExperimentConfig {
        model: ExperimentModel::JmRestricted,
        window: Window::unit_square(),
        scales: vec![2000.0],
        k: 1,
        law: None,
        replications: 400,
        master_seed: 2024,
        tol: 1e-6,
        engine: Engine::Exact,
    };
    for model in [ExperimentModel::JmRestricted, ExperimentModel::JmUnrestricted] {
        let cfg = ExperimentConfig { model, ..base.clone() };
        let out = run_cover_time_experiment(&cfg).unwrap();
        let s = &out[0];
        let ks: Vec<String> = s.ks_to_limit.iter().map(|(l, v)| format!("{l}: {v:.4}")).collect();
        println!(
            "{model:?}: {} reps at intensity {}, KS {{{}}} in {:.1}s",
            s.rows.len(),
            s.scale,
            ks.join(", "),
            s.wall_seconds
        );
    }
    let _ = RngSpec::new(0, 0); // streams are derived inside the runner
}
