//! Traveling waves of the tilted reaction: speed as a function of the
//! offset, the slope at zero against the surface-tension constant, and the
//! shifted equilibria.
//!
//! Run with: cargo run --release --example traveling_wave

use mcac::profile::{sigma_bar, solve_standing, solve_traveling, DEFAULT_H, DEFAULT_R};
use mcac::reaction::make_cubic;

fn main() {
    let b = make_cubic();
    let m = solve_standing(&b, DEFAULT_R, DEFAULT_H).expect("standing profile");
    let (sigma, _) = sigma_bar(&b, &m);

    println!("offset a      speed c(a)     m-*(a)        m+*(a)");
    for &a in &[-0.05, -0.02, -0.005, 0.0, 0.005, 0.02, 0.05] {
        let tw = solve_traveling(&b, a).expect("traveling wave");
        println!(
            "{a:+.3}      {:+.9}   {:+.9}  {:+.9}",
            tw.c, tw.m_star_minus, tw.m_star_plus
        );
    }

    let plus = solve_traveling(&b, 1e-3).unwrap();
    let minus = solve_traveling(&b, -1e-3).unwrap();
    let slope = (plus.c - minus.c) / 2e-3;
    println!("\ncentered slope of c at 0: {slope:.8}");
    println!("surface-tension constant: {sigma:.8}");
    println!("difference:               {:.2e}", (slope - sigma).abs());

    // The offset cannot grow past the fold where the zeros merge.
    match solve_traveling(&b, 0.5) {
        Err(e) => println!("offset 0.5 rejected as expected: {e}"),
        Ok(_) => println!("unexpected: offset 0.5 accepted"),
    }
}
