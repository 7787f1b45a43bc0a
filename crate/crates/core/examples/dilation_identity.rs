//! The dilation identity: L * T_rho at rho = L^(d+1) has the same law as
//! the cover time of the L-times-larger window at unit intensity. Run a
//! two-sample KS test between the two simulated arms.
//!
//! ```bash
//! cargo run --release --example dilation_identity
//! ```

use covertimes::geom::Window;
use covertimes::montecarlo::scaling_lemma_test;
use covertimes::processes::RngSpec;

fn main() {
    let report = scaling_lemma_test(3.0, &Window::unit_square(), 2000, &RngSpec::new(11, 0)).unwrap();
    println!(
        "L = {}: {} + {} reps, KS = {:.5}, 1% critical = {:.5} -> {}",
        report.l,
        report.reps,
        report.reps,
        report.ks,
        report.critical_value_1pct,
        if report.pass { "consistent with equality in law" } else { "rejected" }
    );
}
