//! Sample one restricted growth process on the unit square, compute its
//! cover time exactly, locate the last covered point, and cross-check the
//! answer against the certified grid oracle.
//!
//! ```bash
//! cargo run --release --example growth_cover_time
//! ```

use covertimes::coverage::{
    grid_oracle_max, jm_cover_time, last_covered_point, Field, GrowthConfiguration,
    LastCoveredQuery,
};
use covertimes::geom::Window;
use covertimes::processes::{sample_spacetime_poisson, RngSpec};

fn main() {
    let window = Window::unit_square();
    let rho = 500.0;
    let horizon = 0.6;
    let seeds = sample_spacetime_poisson(&window, rho, horizon, &RngSpec::new(42, 0)).unwrap();
    println!("{} seeds at intensity {rho} up to time {horizon}", seeds.len());

    let g = GrowthConfiguration::new(seeds, true, Some(horizon));
    let tol = 1e-9;
    let t = jm_cover_time(&window, &g, tol).unwrap();
    println!("cover time T = {:.9} (sandwich {})", t.value, t.sandwich_ok);

    let (argmax, xi) = last_covered_point(&window, &LastCoveredQuery::Jm(&g), tol).unwrap();
    println!("last covered point ({:.6}, {:.6}) with field value {:.9}", argmax.x(), argmax.y(), xi);

    let oracle = grid_oracle_max(&Field::Jm(&g), &window, 1e-3).unwrap();
    println!(
        "certified bracket [{:.9}, {:.9}] (width {:.2e}) {} the bisection value",
        oracle.lower,
        oracle.upper,
        oracle.width(),
        if oracle.contains(t.value) { "contains" } else { "MISSES" }
    );
}
