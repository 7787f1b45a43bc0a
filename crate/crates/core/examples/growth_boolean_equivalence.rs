//! The marking identity: coverage of the window by time t under the
//! restricted growth process equals coverage by a Boolean model with
//! intensity rho*t and radii uniform on [0, t]. Compare the two Monte
//! Carlo estimates.
//!
//! ```bash
//! cargo run --release --example growth_boolean_equivalence
//! ```

use covertimes::geom::Window;
use covertimes::montecarlo::jm_spbm_equivalence_test;
use covertimes::processes::RngSpec;

fn main() {
    let window = Window::unit_square();
    for (rho, t) in [(500.0, 0.22), (1000.0, 0.18)] {
        let r = jm_spbm_equivalence_test(rho, t, &window, 3000, &RngSpec::new(3, 0)).unwrap();
        println!(
            "rho = {rho}, t = {t}: growth {:.4} vs boolean {:.4} (z = {:+.2}) -> {}",
            r.p_growth,
            r.p_boolean,
            r.z_score,
            if r.pass { "equal within noise" } else { "rejected" }
        );
    }
}
