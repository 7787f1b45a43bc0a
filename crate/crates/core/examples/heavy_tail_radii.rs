//! Heavy-tailed radii: with Pareto shape 1.5 the second moment is
//! infinite, yet every finite realization still has a finite coverage
//! threshold, and at a fixed scale the coverage probability climbs to one
//! as the intensity grows.
//!
//! ```bash
//! cargo run --release --example heavy_tail_radii
//! ```

use covertimes::coverage::{coverage_probability_estimate, coverage_threshold, CoverageModel};
use covertimes::geom::Window;
use covertimes::processes::{sample_marked_poisson, RadiusLaw, RngSpec};

fn main() {
    let window = Window::unit_square();
    let law = RadiusLaw::pareto(1.5, 1.0);
    println!("law {law}: E[Y] = {}, E[Y^2] = {}", law.moment(1), law.moment(2));

    for seed in 0..4u64 {
        let pts = sample_marked_poisson(&window, 40.0, &law, &RngSpec::new(seed, 0)).unwrap();
        let r = coverage_threshold(&window, &pts, 1, 1e-9).unwrap();
        println!("  realization {seed}: {} points, finite threshold R = {:.6}", pts.len(), r.value);
    }

    let r = 0.05;
    println!("coverage probability at fixed scale r = {r}:");
    for n in [20.0, 60.0, 180.0, 540.0] {
        let est = coverage_probability_estimate(
            &window,
            &CoverageModel::Spbm { n, law, r, k: 1 },
            true,
            400,
            &RngSpec::new(99, 0),
        )
        .unwrap();
        println!("  n = {n:>5}: p = {:.3} [{:.3}, {:.3}]", est.p_hat, est.wilson_low, est.wilson_high);
    }
}
