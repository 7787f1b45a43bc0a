//! The unrestricted dilation-scale limit against the classical
//! cube-window statement: the standardized thresholds agree in the
//! large-dilation limit, and the gap between the two parameterizations
//! shrinks visibly along a dilation grid.
//!
//! ```bash
//! cargo run --example classical_consistency
//! ```

use covertimes::limits::{chiu_f, chiu_gap};

fn main() {
    println!("{:>3} {:>6} {:>10} {:>14} {:>12}", "d", "u", "L", "gap", "F(u)");
    for d in [2u32, 3] {
        for u in [-2.0, 0.0, 2.0] {
            for l in [1e3, 1e4, 1e6, 1e8] {
                let gap = chiu_gap(l, u, d).unwrap();
                println!("{d:>3} {u:>6} {l:>10.0e} {gap:>14.8} {:>12.8}", chiu_f(u, d));
            }
        }
    }
}
