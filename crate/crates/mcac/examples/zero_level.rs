//! Zero-level extraction: marching squares on radial and annular fields,
//! with the vertices landing on the true curves.
//!
//! Run with: cargo run --release --example zero_level

use mcac::acpde::{extract_zero_level, PhaseField};
use mcac::geom::polygon_area;
use mcac::harness::ProfileLab;

fn radial_field(lab: &ProfileLab, n: usize, eps: f64, shape: &dyn Fn(f64) -> f64) -> PhaseField {
    let mut u = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let x = (ix as f64 + 0.5) / n as f64;
            let y = (iy as f64 + 0.5) / n as f64;
            let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
            u[iy * n + ix] = lab.standing.eval(shape(r) / eps);
        }
    }
    PhaseField {
        n,
        l: 1.0,
        dx: 1.0 / n as f64,
        eps,
        t: 0.0,
        alpha: 0.0,
        u,
        mass0: 0.0,
    }
}

fn main() {
    let lab = ProfileLab::cubic();

    let field = radial_field(&lab, 192, 0.03, &|r| r - 0.25);
    let loops = extract_zero_level(&field).expect("interface");
    let worst = loops[0]
        .iter()
        .map(|p| (((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt() - 0.25).abs())
        .fold(0.0f64, f64::max);
    println!(
        "circle field: {} loop(s), {} vertices, max radial error {:.2e} (dx = {:.2e})",
        loops.len(),
        loops[0].len(),
        worst,
        field.dx
    );
    println!(
        "enclosed area {:.6} vs pi R^2 = {:.6}",
        polygon_area(&loops[0]),
        std::f64::consts::PI * 0.0625
    );

    let field = radial_field(&lab, 192, 0.02, &|r| (r - 0.3).abs() - 0.1);
    let loops = extract_zero_level(&field).expect("interface");
    println!("annulus field: {} loops (inner and outer ring)", loops.len());
    for (i, l) in loops.iter().enumerate() {
        let mean_r = l
            .iter()
            .map(|p| ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt())
            .sum::<f64>()
            / l.len() as f64;
        println!("  loop {i}: mean radius {mean_r:.4}");
    }

    let flat = PhaseField {
        u: vec![1.0; 64 * 64],
        n: 64,
        l: 1.0,
        dx: 1.0 / 64.0,
        eps: 0.1,
        t: 0.0,
        alpha: 0.0,
        mass0: 1.0,
    };
    match extract_zero_level(&flat) {
        Err(e) => println!("single-signed field rejected: {e}"),
        Ok(_) => println!("unexpected interface in a constant field"),
    }
}
