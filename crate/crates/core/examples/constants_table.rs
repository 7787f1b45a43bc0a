//! Print the dimensional constants of the limit laws for a range of
//! dimensions and coverage multiplicities.
//!
//! ```bash
//! cargo run --example constants_table
//! ```

use covertimes::limits::{c_d, c_dk, c_prime_d, omega};

fn main() {
    println!("{:>3} {:>3} {:>14} {:>14} {:>14} {:>14}", "d", "k", "omega_d", "c_d", "c_dk", "c'_d");
    for d in 1..=6u32 {
        for k in 1..=3u32 {
            let cdk = if d >= 2 { format!("{:14.9}", c_dk(d, k).unwrap()) } else { " ".repeat(14) };
            let cpd = if d >= 2 && k == 1 {
                format!("{:14.9}", c_prime_d(d).unwrap())
            } else {
                " ".repeat(14)
            };
            println!("{d:>3} {k:>3} {:14.9} {:14.9} {cdk} {cpd}", omega(d), c_d(d));
        }
    }
    println!();
    println!("checks: c_3 = 3 pi^2 / 32 = {:.12}", 3.0 * std::f64::consts::PI.powi(2) / 32.0);
    println!("        c_31 = pi^(5/3)/16 = {:.12}", std::f64::consts::PI.powf(5.0 / 3.0) / 16.0);
}
