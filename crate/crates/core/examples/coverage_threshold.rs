//! k-coverage thresholds of a Boolean model with random radii: sample
//! marked points, compute the smallest scale at which the window is
//! covered once, twice and three times, and show the scale equivariance.
//!
//! ```bash
//! cargo run --release --example coverage_threshold
//! ```

use covertimes::coverage::coverage_threshold;
use covertimes::geom::Window;
use covertimes::processes::{sample_marked_poisson, RadiusLaw, RngSpec};

fn main() {
    let window = Window::unit_square();
    let law = RadiusLaw::exponential(2.0);
    let pts = sample_marked_poisson(&window, 150.0, &law, &RngSpec::new(7, 0)).unwrap();
    println!("{} marked points, law {law}", pts.len());

    let tol = 1e-9;
    for k in 1..=3u32 {
        let r = coverage_threshold(&window, &pts, k, tol).unwrap();
        println!("k = {k}: threshold R = {:.9} (sandwich {})", r.value, r.sandwich_ok);
    }

    // Doubling every mark halves the threshold exactly.
    let r1 = coverage_threshold(&window, &pts, 1, tol).unwrap().value;
    let mut doubled = pts.clone();
    for m in &mut doubled.marks {
        *m *= 2.0;
    }
    let r2 = coverage_threshold(&window, &doubled, 1, tol).unwrap().value;
    println!("scale equivariance: R = {r1:.9}, R(2Y) = {r2:.9}, ratio {:.6}", r1 / r2);
}
