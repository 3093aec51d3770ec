//! The 1-D wave toolbox: standing profile, the surface-tension constant by
//! two independent routes, tail decay, the first corrector, and the
//! principal-eigenvalue probe of the linearized operator.
//!
//! Run with: cargo run --release --example standing_wave

use mcac::profile::{
    principal_eigenvalue, sigma_bar, solve_standing, solve_theta1, DEFAULT_H, DEFAULT_R,
};
use mcac::reaction::{make_cubic, potential_v, validate};

fn main() {
    let b = make_cubic();
    let report = validate(&b).expect("the cubic satisfies all structural conditions");
    println!(
        "reaction check: {} zeros, balance residual {:.1e}, slopes ({:.1}, {:.1})",
        report.zero_count, report.balance_residual, report.slope_minus, report.slope_plus
    );
    println!("potential at 0: {:.12} (closed form 1/4)", potential_v(&b, 0.0));

    let m = solve_standing(&b, DEFAULT_R, DEFAULT_H).expect("standing profile");
    let mid = m.center_index();
    println!(
        "standing wave: {} nodes, m(0) = {}, m(R) = {:.15}",
        m.n(),
        m.values[mid],
        m.values[m.n() - 1]
    );
    println!(
        "tail decay slope {:.6} vs -zeta = {:.6}",
        m.tail_decay_slope(),
        -m.decay_rate
    );

    let (sigma_profile, sigma_potential) = sigma_bar(&b, &m);
    println!("surface-tension constant, profile route:   {sigma_profile:.10}");
    println!("surface-tension constant, potential route: {sigma_potential:.10}");
    println!("closed form 3/sqrt(2):                     {:.10}", 3.0 / 2f64.sqrt());

    let theta1 = solve_theta1(&b, &m, sigma_profile).expect("corrector");
    println!(
        "corrector: theta1(0) = {}, theta1(+-R) = ({:.6}, {:.6}) [limit 1/2]",
        theta1.values[mid],
        theta1.values[0],
        theta1.values[theta1.n() - 1]
    );

    for eps in [0.2, 0.1] {
        let probe = principal_eigenvalue(&b, &m, eps).expect("eigen probe");
        println!(
            "eigen probe eps = {eps}: lambda = {:.3e}, cosine with m' = {:.7}",
            probe.lambda, probe.cosine_with_m_prime
        );
    }
}
