//! Evaluate the limiting cover-time CDFs for the unit square and dump
//! them as CSV, one column per law, ready for plotting.
//!
//! ```bash
//! cargo run --example limit_curves > curves.csv
//! ```

use covertimes::limits::{limit_cdf, ModelSpec, TheoremId};

fn main() {
    let spec = ModelSpec::new(2, 1, 1.0, 4.0, None);
    let restricted = limit_cdf(TheoremId::RestrictedJm2d, &spec).unwrap();
    let unrestricted = limit_cdf(TheoremId::UnrestrictedJm, &spec).unwrap();
    println!("beta,restricted_2d,unrestricted");
    let mut beta = -8.0;
    while beta <= 25.0 {
        println!("{beta:.2},{:.12},{:.12}", restricted.cdf(beta), unrestricted.cdf(beta));
        beta += 0.25;
    }
    eprintln!(
        "medians: restricted {:.4}, unrestricted {:.4}",
        restricted.quantile(0.5),
        unrestricted.quantile(0.5)
    );
}
