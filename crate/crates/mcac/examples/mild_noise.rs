//! The two mild-noise families: smooth paths with certified derivative
//! bounds, the slowly diverging rate psi, the budget certificate G, and the
//! binary cache.
//!
//! Run with: cargo run --release --example mild_noise

use mcac::harness::{cache_noise, load_noise, NoiseKey};
use mcac::noise::{
    self, ck_norm, ck_norm_of_derivative, g_eps, holder_norm, psi, NoiseConfig, NoiseFamily,
    PsiVariant,
};

fn main() {
    let cfg = NoiseConfig::default();
    let raw = NoiseConfig {
        psi_variant: PsiVariant::Raw,
        ..cfg
    };
    println!("eps        psi (safe)      psi (raw)");
    for &eps in &[1e-2, 1e-8, 1e-32, 1e-128] {
        let safe = psi(eps, &cfg).unwrap();
        let bare = psi(eps, &raw)
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|_| "undefined".into());
        println!("{eps:8.0e}   {safe:.10}   {bare}");
    }

    let bump = mcac::bump::Bump::get();
    for (name, path) in [
        ("mollified", noise::mollified_bm(1e-4, 1.0, 1e-3, 5, &cfg)),
        ("mixing", noise::mixing_noise(1e-4, 1.0, 1e-3, 5, &cfg)),
    ] {
        println!("\n{name}: w(0) = {}, H = {:.4e}", path.w[0], path.h_eps);
        for k in 0..=2usize {
            let lhs = ck_norm_of_derivative(&path, k).unwrap();
            let bound = match path.family {
                NoiseFamily::MollifiedBm => {
                    k.max(1) as f64 * bump.ck_norm(k + 2) * path.psi.powi(k as i32 + 2)
                }
                NoiseFamily::Mixing => {
                    let m_const = (0..=4)
                        .map(|i| 0.1f64.powi(-(i as i32)) * bump.l1_norm(i))
                        .fold(0.0f64, f64::max);
                    m_const * k.max(1) as f64 * path.psi.powi(2 * k as i32 + 1)
                }
            };
            println!("  |dw/dt|_{k} = {lhs:10.4e}   certified bound {bound:10.4e}");
        }
        println!("  C^2 norm of w: {:.4e}", ck_norm(&path, 2).unwrap());
        println!("  Holder(0.4) norm: {:.4e}", holder_norm(&path, 0.4));
        let g = g_eps(path.h_eps, cfg.n1);
        println!(
            "  certificate G = {:.4e}{}",
            g.value,
            if g.overflowed { " (overflow sentinel)" } else { "" }
        );
    }

    // Cache round trip is bit exact.
    let dir = std::env::temp_dir().join("mcac-noise-demo");
    let key = NoiseKey {
        family: NoiseFamily::Mixing,
        eps: 1e-4,
        t_end: 1.0,
        dt: 1e-3,
        seed: 5,
        cfg,
    };
    let path = noise::mixing_noise(key.eps, key.t_end, key.dt, key.seed, &cfg);
    let file = cache_noise(&dir, &key, &path).expect("cache write");
    let again = load_noise(&dir, &key).expect("cache read");
    println!(
        "\ncache round trip at {}: bit-identical = {}",
        file.display(),
        again.w == path.w && again.derivs == path.derivs
    );
    let _ = std::fs::remove_dir_all(&dir);
}
