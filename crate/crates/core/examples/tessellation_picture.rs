//! Render the two styles of cell picture: a growth tessellation of a disc
//! (seeds fading with later birth) and a scaled-distance tessellation with
//! exponential radii (dot area tracks the mark), both with the last
//! covered point starred.
//!
//! ```bash
//! cargo run --release --example tessellation_picture
//! ```

use covertimes::coverage::{last_covered_point, GrowthConfiguration, LastCoveredQuery};
use covertimes::geom::Window;
use covertimes::processes::{sample_marked_poisson, sample_spacetime_poisson, RadiusLaw, RngSpec};
use covertimes::tessellation::{assign_cells, render, CellMode};
use std::path::Path;

fn main() {
    let window = Window::disc([0.0, 0.0], 0.45).unwrap();
    let tol = 1e-9 * window.diameter();

    // Growth process at intensity ~125 on a disc of diameter 0.9.
    let horizon = 2.0 * window.diameter();
    let seeds = sample_spacetime_poisson(&window, 125.0, horizon, &RngSpec::new(1, 0)).unwrap();
    let g = GrowthConfiguration::new(seeds, true, Some(horizon));
    let (star, _) = last_covered_point(&window, &LastCoveredQuery::Jm(&g), tol).unwrap();
    let raster = assign_cells(&window, &g.seeds, CellMode::Jm, 600).unwrap();
    render(&raster, &window, &g.seeds, Some(star), Path::new("growth_cells.ppm")).unwrap();
    println!("growth tessellation: growth_cells.ppm / .svg ({} cells)", g.seeds.len());

    // Boolean model with exponential radii; cells need not be connected.
    let pts =
        sample_marked_poisson(&window, 125.0, &RadiusLaw::exponential(3.0), &RngSpec::new(1, 1))
            .unwrap();
    let (star, _) =
        last_covered_point(&window, &LastCoveredQuery::Spbm { pts: &pts, k: 1 }, tol).unwrap();
    let raster = assign_cells(&window, &pts, CellMode::Spbm, 600).unwrap();
    render(&raster, &window, &pts, Some(star), Path::new("scaled_cells.ppm")).unwrap();
    println!("scaled tessellation: scaled_cells.ppm / .svg ({} cells)", pts.len());
}
