//! Smooth-in-time noise paths approximating Brownian motion.
//!
//! Two families are implemented. The first mollifies a stopped Brownian path
//! with the bump kernel at scale psi(eps); the second rescales a mollified
//! two-state telegraph signal (stationary, bounded, strongly mixing, mean
//! zero). Both produce paths with certified derivative bounds; derivatives
//! are evaluated exactly from the piecewise-linear (resp. piecewise-constant)
//! driving signal and the closed-form kernel antiderivatives, so stored
//! derivative samples are consistent with the values to rounding.

use crate::bump::Bump;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;

/// Scale e^(e^e) used by the shifted psi variant.
fn triple_exp() -> f64 {
    std::f64::consts::E.exp().exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    MollifiedBm,
    Mixing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiVariant {
    /// log log log(|log eps| + e^(e^e)), defined and >= 1 on all of (0,1).
    Safe,
    /// The bare nested logarithm; needs |log eps| > e^e to be positive.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub beta_tilde: f64,
    /// Opaque positive integer entering the derivative-budget exponent.
    pub n1: u32,
    pub k_max: usize,
    pub psi_variant: PsiVariant,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            beta_tilde: 1.0,
            n1: 1,
            k_max: 4,
            psi_variant: PsiVariant::Safe,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseError {
    /// Raw psi undefined or non-positive at this eps.
    DomainError { eps: f64 },
    OrderUnavailable { requested: usize, k_max: usize },
}

impl fmt::Display for NoiseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseError::DomainError { eps } => {
                write!(f, "raw psi is not defined/positive at eps = {eps:e}")
            }
            NoiseError::OrderUnavailable { requested, k_max } => {
                write!(f, "derivative order {requested} exceeds stored k_max {k_max}")
            }
        }
    }
}

impl std::error::Error for NoiseError {}

/// Slowly diverging mollification rate psi(eps).
pub fn psi(eps: f64, cfg: &NoiseConfig) -> Result<f64, NoiseError> {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
    let x = -eps.ln();
    let base = match cfg.psi_variant {
        PsiVariant::Safe => (x + triple_exp()).ln().ln().ln(),
        PsiVariant::Raw => {
            if x <= std::f64::consts::E.exp() {
                return Err(NoiseError::DomainError { eps });
            }
            x.ln().ln().ln()
        }
    };
    Ok(base.powf(cfg.beta_tilde))
}

/// Driving Brownian record kept for convergence diagnostics.
#[derive(Debug, Clone)]
pub struct BmRecord {
    pub dt: f64,
    /// Raw (unstopped) samples, starting at 0.
    pub raw: Vec<f64>,
    /// First index at which |raw| reached the stopping level, if any.
    pub stop_index: Option<usize>,
    /// Sign of the stopped value.
    pub stop_sign: f64,
}

impl BmRecord {
    /// Stopped sample: the raw path frozen at +-psi from the exit on.
    pub fn stopped(&self, j: usize, psi: f64) -> f64 {
        match self.stop_index {
            Some(idx) if j >= idx => self.stop_sign * psi,
            _ => self.raw[j.min(self.raw.len() - 1)],
        }
    }
}

/// One realization of a smooth noise path on a uniform time grid.
#[derive(Debug, Clone)]
pub struct NoisePath {
    pub family: NoiseFamily,
    pub eps: f64,
    pub seed: u64,
    pub dt: f64,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    /// derivs[k-1][i] = d^k w / dt^k at t_i, k = 1..=k_max.
    pub derivs: Vec<Vec<f64>>,
    pub psi: f64,
    /// Certified sup bound over all stored derivative orders.
    pub h_eps: f64,
    pub underlying_bm: Option<BmRecord>,
}

impl NoisePath {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn k_max(&self) -> usize {
        self.derivs.len()
    }

    /// Exact increment w(t_j) - w(t_i) from the stored samples.
    pub fn increment(&self, i: usize, j: usize) -> f64 {
        self.w[j] - self.w[i]
    }

    pub fn wdot(&self, i: usize) -> f64 {
        self.derivs[0][i]
    }
}

/// Sum_{i<=k} sup |d^i w/dt^i| with the zeroth term being w itself.
pub fn ck_norm(path: &NoisePath, k: usize) -> Result<f64, NoiseError> {
    if k > path.k_max() {
        return Err(NoiseError::OrderUnavailable {
            requested: k,
            k_max: path.k_max(),
        });
    }
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut total = sup(&path.w);
    for i in 0..k {
        total += sup(&path.derivs[i]);
    }
    Ok(total)
}

/// Same norm applied to the derivative path (so the zeroth term is dw/dt).
pub fn ck_norm_of_derivative(path: &NoisePath, k: usize) -> Result<f64, NoiseError> {
    if k + 1 > path.k_max() {
        return Err(NoiseError::OrderUnavailable {
            requested: k + 1,
            k_max: path.k_max(),
        });
    }
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    Ok((0..=k).map(|i| sup(&path.derivs[i])).sum())
}

/// Holder norm sup|w| + sup |w(t)-w(s)|/|t-s|^theta over the sample grid.
/// Small strides are scanned densely, larger ones geometrically, and the
/// full separation is always included.
pub fn holder_norm(path: &NoisePath, theta: f64) -> f64 {
    let n = path.len();
    let sup = path.w.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut strides: Vec<usize> = (1..=64.min(n - 1)).collect();
    let mut s = 128;
    while s < n - 1 {
        strides.push(s);
        s *= 2;
    }
    strides.push(n - 1);
    let mut quot = 0.0f64;
    for &stride in &strides {
        let gap = (stride as f64 * path.dt).powf(theta);
        for i in 0..n - stride {
            let d = (path.w[i + stride] - path.w[i]).abs() / gap;
            if d > quot {
                quot = d;
            }
        }
    }
    sup + quot
}

/// Derivative-budget certificate G = exp(exp(H^(2 n1))).
#[derive(Debug, Clone, Copy)]
pub struct GEps {
    pub value: f64,
    pub overflowed: bool,
}

pub fn g_eps(h_eps: f64, n1: u32) -> GEps {
    // G >= e^e is enforced by clamping the inner exponent at 1.
    let inner = h_eps.max(1.0).powi(2 * n1 as i32);
    if inner > 700.0 {
        return GEps {
            value: f64::INFINITY,
            overflowed: true,
        };
    }
    let mid = inner.exp();
    if mid > 700.0 {
        return GEps {
            value: f64::INFINITY,
            overflowed: true,
        };
    }
    GEps {
        value: mid.exp(),
        overflowed: false,
    }
}

const BM_DT: f64 = 2e-3;
const TELEGRAPH_SCALE: f64 = 0.1;

/// Mollified stopped Brownian motion evaluated on the grid i*dt, i=0..=n.
pub fn mollified_bm(eps: f64, t_end: f64, dt: f64, seed: u64, cfg: &NoiseConfig) -> NoisePath {
    assert!(t_end > 0.0 && dt > 0.0);
    let psi_val = psi(eps, cfg).expect("psi undefined at this eps");
    let bump = Bump::get();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Raw Brownian samples on [0, t_end] at BM_DT, independent of eps so the
    // same seed drives every eps in a convergence study.
    let n_bm = (t_end / BM_DT).ceil() as usize + 1;
    let mut raw = vec![0.0; n_bm + 1];
    let sqrt_dt = BM_DT.sqrt();
    for j in 1..=n_bm {
        let z: f64 = StandardNormal.sample(&mut rng);
        raw[j] = raw[j - 1] + sqrt_dt * z;
    }
    let mut stop_index = None;
    let mut stop_sign = 0.0;
    for (j, &v) in raw.iter().enumerate() {
        if v.abs() >= psi_val {
            stop_index = Some(j);
            stop_sign = v.signum();
            break;
        }
    }
    let record = BmRecord {
        dt: BM_DT,
        raw,
        stop_index,
        stop_sign,
    };

    let n = (t_end / dt).round() as usize;
    let t: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let k_max = cfg.k_max.max(1);
    let mut w = vec![0.0; n + 1];
    let mut derivs = vec![vec![0.0; n + 1]; k_max];

    // w(t) = int eta(u) W(t - u/psi) du over u in (0, min(1, psi t)); the
    // stopped path is piecewise linear, so each Brownian segment contributes
    // through the kernel antiderivative and first-moment antiderivative.
    let mut psi_pow = vec![1.0; k_max + 1];
    for k in 1..=k_max {
        psi_pow[k] = psi_pow[k - 1] * psi_val;
    }
    let mut acc = vec![0.0; k_max + 1];
    for (i, &ti) in t.iter().enumerate() {
        if ti <= 0.0 {
            continue;
        }
        let u_max = (psi_val * ti).min(1.0);
        let s_lo = ti - u_max / psi_val;
        let j_lo = (s_lo / BM_DT).floor().max(0.0) as usize;
        let j_hi = ((ti / BM_DT).ceil() as usize).min(record.raw.len() - 1);
        acc.iter_mut().for_each(|a| *a = 0.0);
        for j in j_lo..j_hi {
            let sa = (j as f64 * BM_DT).max(s_lo);
            let sb = ((j + 1) as f64 * BM_DT).min(ti);
            if sb <= sa {
                continue;
            }
            let w0 = record.stopped(j, psi_val);
            let w1 = record.stopped(j + 1, psi_val);
            let slope = (w1 - w0) / BM_DT;
            // W(s) = alpha + beta u along s = ti - u/psi.
            let alpha = w0 + slope * (ti - j as f64 * BM_DT);
            let beta = -slope / psi_val;
            let ua = psi_val * (ti - sb);
            let ub = psi_val * (ti - sa);
            for (k, a) in acc.iter_mut().enumerate() {
                let da = bump.antideriv(k, ub) - bump.antideriv(k, ua);
                let dm = bump.moment_antideriv(k, ub) - bump.moment_antideriv(k, ua);
                *a += alpha * da + beta * dm;
            }
        }
        w[i] = acc[0];
        for k in 1..=k_max {
            derivs[k - 1][i] = psi_pow[k] * acc[k];
        }
    }

    let h_eps = certified_bound(&derivs);
    NoisePath {
        family: NoiseFamily::MollifiedBm,
        eps,
        seed,
        dt,
        t,
        w,
        derivs,
        psi: psi_val,
        h_eps,
        underlying_bm: Some(record),
    }
}

fn certified_bound(derivs: &[Vec<f64>]) -> f64 {
    derivs
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Stationary two-state telegraph switcher with unit rate.
struct Telegraph {
    /// Jump times, increasing, covering [tau_start, tau_end].
    jumps: Vec<f64>,
    start_state: f64,
    tau_start: f64,
}

impl Telegraph {
    fn sample(rng: &mut ChaCha8Rng, tau_start: f64, tau_end: f64) -> Telegraph {
        let start_state = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let mut jumps = Vec::new();
        let mut tau = tau_start;
        loop {
            let gap: f64 = -rng.random::<f64>().max(1e-300).ln();
            tau += gap;
            if tau > tau_end {
                break;
            }
            jumps.push(tau);
        }
        Telegraph {
            jumps,
            start_state,
            tau_start,
        }
    }

    fn state_after(&self, njumps: usize) -> f64 {
        if njumps % 2 == 0 {
            self.start_state
        } else {
            -self.start_state
        }
    }

    /// k-th derivative of the mollified signal xi at tau (exact segment sum).
    fn xi(&self, bump: &Bump, k: usize, tau: f64) -> f64 {
        // xi(tau) = int_0^1 eta(u) sigma(tau - SCALE u) du.
        let lo = tau - TELEGRAPH_SCALE;
        debug_assert!(lo >= self.tau_start - 1e-9);
        let first = self.jumps.partition_point(|&j| j <= lo);
        let last = self.jumps.partition_point(|&j| j < tau);
        let mut acc = 0.0;
        let mut s_hi = tau;
        let mut idx = last;
        loop {
            let s_lo = if idx > first { self.jumps[idx - 1] } else { lo };
            let sigma = self.state_after(idx);
            let ua = (tau - s_hi) / TELEGRAPH_SCALE;
            let ub = (tau - s_lo) / TELEGRAPH_SCALE;
            acc += sigma * (bump.antideriv(k, ub) - bump.antideriv(k, ua));
            if idx == first {
                break;
            }
            idx -= 1;
            s_hi = s_lo;
        }
        acc * TELEGRAPH_SCALE.powi(-(k as i32))
    }
}

/// Rescaled mollified telegraph noise: dw/dt = psi * xi(psi^2 t) / A.
///
/// The normalization A equals 1 exactly: convolving with a unit-mass kernel
/// leaves the integrated covariance 2 int_0^inf E[xi(0) xi(t)] dt of the
/// unit-rate switcher (= 1) unchanged.
pub fn mixing_noise(eps: f64, t_end: f64, dt: f64, seed: u64, cfg: &NoiseConfig) -> NoisePath {
    assert!(t_end > 0.0 && dt > 0.0);
    let psi_val = psi(eps, cfg).expect("psi undefined at this eps");
    let bump = Bump::get();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let a_norm = 1.0;

    let tau_end = psi_val * psi_val * t_end;
    let tele = Telegraph::sample(&mut rng, -TELEGRAPH_SCALE - 1e-9, tau_end + 1e-9);

    let n = (t_end / dt).round() as usize;
    let t: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let k_max = cfg.k_max.max(1);
    let mut derivs = vec![vec![0.0; n + 1]; k_max];
    let psi2 = psi_val * psi_val;
    for i in 0..=n {
        let tau = psi2 * t[i];
        for k in 0..k_max {
            // d^k/dt^k (dw/dt) = psi^(2k+1) xi^(k)(psi^2 t) / A.
            derivs[k][i] = psi_val.powi(2 * k as i32 + 1) * tele.xi(bump, k, tau) / a_norm;
        }
    }
    // w by per-interval Simpson on the exactly evaluable derivative.
    let mut w = vec![0.0; n + 1];
    for i in 0..n {
        let tm = psi2 * (t[i] + 0.5 * dt);
        let mid = psi_val * tele.xi(bump, 0, tm) / a_norm;
        w[i + 1] = w[i] + dt / 6.0 * (derivs[0][i] + 4.0 * mid + derivs[0][i + 1]);
    }

    let h_eps = certified_bound(&derivs);
    NoisePath {
        family: NoiseFamily::Mixing,
        eps,
        seed,
        dt,
        t,
        w,
        derivs,
        psi: psi_val,
        h_eps,
        underlying_bm: None,
    }
}

/// Generate a path of the given family.
pub fn generate(
    family: NoiseFamily,
    eps: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
    cfg: &NoiseConfig,
) -> NoisePath {
    match family {
        NoiseFamily::MollifiedBm => mollified_bm(eps, t_end, dt, seed, cfg),
        NoiseFamily::Mixing => mixing_noise(eps, t_end, dt, seed, cfg),
    }
}

/// Deterministic path with prescribed derivative: w' = f(t), w(0) = 0,
/// integrated per interval with Simpson. Useful for forced runs.
pub fn forced_path(t_end: f64, dt: f64, f: &dyn Fn(f64) -> f64) -> NoisePath {
    let n = (t_end / dt).round() as usize;
    let t: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let deriv: Vec<f64> = t.iter().map(|&ti| f(ti)).collect();
    let mut w = vec![0.0; n + 1];
    for i in 0..n {
        let mid = f(t[i] + 0.5 * dt);
        w[i + 1] = w[i] + dt / 6.0 * (deriv[i] + 4.0 * mid + deriv[i + 1]);
    }
    let h_eps = deriv.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    NoisePath {
        family: NoiseFamily::MollifiedBm,
        eps: 1e-2,
        seed: 0,
        dt,
        t,
        w,
        derivs: vec![deriv],
        psi: 1.0,
        h_eps,
        underlying_bm: None,
    }
}

/// A constant-zero path for the deterministic variants.
pub fn zero_path(t_end: f64, dt: f64, k_max: usize) -> NoisePath {
    let n = (t_end / dt).round() as usize;
    NoisePath {
        family: NoiseFamily::MollifiedBm,
        eps: 1e-2,
        seed: 0,
        dt,
        t: (0..=n).map(|i| i as f64 * dt).collect(),
        w: vec![0.0; n + 1],
        derivs: vec![vec![0.0; n + 1]; k_max],
        psi: 1.0,
        h_eps: 0.0,
        underlying_bm: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NoiseConfig {
        NoiseConfig::default()
    }

    #[test]
    fn psi_raw_value_and_domain() {
        let raw = NoiseConfig {
            psi_variant: PsiVariant::Raw,
            ..cfg()
        };
        // Nested logs of |ln 1e-8| = 18.4206807: 0.0670474, re-derived by hand.
        let v = psi(1e-8, &raw).unwrap();
        assert!((v - 0.0670474).abs() < 1e-5, "psi = {v}");
        assert!(matches!(psi(0.1, &raw), Err(NoiseError::DomainError { .. })));
        assert!(psi(1e-12, &raw).unwrap() > psi(1e-8, &raw).unwrap());
    }

    #[test]
    fn psi_safe_defined_everywhere() {
        let v = psi(0.1, &cfg()).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(psi(1e-12, &cfg()).unwrap() > psi(1e-8, &cfg()).unwrap());
        assert!(psi(1e-8, &cfg()).unwrap() >= 1.0);
    }

    #[test]
    fn g_eps_values() {
        let g = g_eps(1.0, 3);
        assert!((g.value - std::f64::consts::E.exp()).abs() < 1e-10);
        assert!(!g.overflowed);
        // exp(exp(1.21)) = 28.6022, re-derived.
        let g = g_eps(1.1, 1);
        assert!((g.value - 28.6022).abs() < 1e-3, "g = {}", g.value);
        let g = g_eps(10.0, 3);
        assert!(g.overflowed && g.value.is_infinite());
    }

    #[test]
    fn g_eps_over_log_eps_decreases_along_schedule() {
        let raw = NoiseConfig {
            psi_variant: PsiVariant::Raw,
            ..cfg()
        };
        let mut prev = f64::INFINITY;
        for &eps in &[1e-8, 1e-16, 1e-32, 1e-64, 1e-128] {
            let p = psi(eps, &raw).unwrap();
            let h = 3.0 * p.powi(3); // n1 = 1: H ~ const * psi^(n1+2)
            let ratio = g_eps(h, 1).value / eps.ln().abs();
            assert!(ratio < prev, "ratio {ratio} at eps {eps:e}");
            prev = ratio;
        }
    }

    #[test]
    fn mollified_path_basics() {
        let path = mollified_bm(1e-4, 1.0, 1e-3, 7, &cfg());
        assert_eq!(path.w[0], 0.0);
        assert_eq!(path.k_max(), 4);
        let again = mollified_bm(1e-4, 1.0, 1e-3, 7, &cfg());
        assert_eq!(path.w, again.w);
        assert_eq!(path.derivs[3], again.derivs[3]);
        let other = mollified_bm(1e-4, 1.0, 1e-3, 8, &cfg());
        assert_ne!(path.w, other.w);
    }

    #[test]
    fn stopped_bm_never_exceeds_psi() {
        for seed in 0..20 {
            let path = mollified_bm(1e-6, 2.0, 1e-2, seed, &cfg());
            let rec = path.underlying_bm.as_ref().unwrap();
            let mut sup = 0.0f64;
            for j in 0..rec.raw.len() {
                sup = sup.max(rec.stopped(j, path.psi).abs());
            }
            assert!(sup <= path.psi + 1e-15, "seed {seed}: sup {sup} psi {}", path.psi);
        }
    }

    #[test]
    fn derivative_consistency_with_finite_differences() {
        for (name, path) in [
            ("mollified", mollified_bm(1e-4, 1.0, 5e-4, 3, &cfg())),
            ("mixing", mixing_noise(1e-4, 1.0, 5e-4, 3, &cfg())),
        ] {
            let n = path.len();
            let dt = path.dt;
            let sup3 = path.derivs[2]
                .iter()
                .fold(0.0f64, |acc, x| acc.max(x.abs()));
            let tol = dt * dt / 6.0 * sup3 * 1.5 + 1e-12;
            for i in (1..n - 1).step_by(7) {
                let fd = (path.w[i + 1] - path.w[i - 1]) / (2.0 * dt);
                assert!(
                    (fd - path.derivs[0][i]).abs() <= tol,
                    "{name} i={i}: fd {fd} vs {}",
                    path.derivs[0][i]
                );
            }
        }
    }

    #[test]
    fn mollified_derivative_bounds_hold() {
        let bump = Bump::get();
        for seed in 0..25 {
            let path = mollified_bm(1e-3, 1.0, 2e-3, seed, &cfg());
            for k in 1..=3usize {
                let lhs = ck_norm_of_derivative(&path, k).unwrap();
                let rhs = k as f64 * bump.ck_norm(k + 2) * path.psi.powi(k as i32 + 2);
                assert!(lhs <= rhs, "seed {seed} k {k}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn mixing_derivative_bounds_hold() {
        let bump = Bump::get();
        // One constant dominates every telegraph derivative order in use.
        let m_const = (0..=4)
            .map(|i| TELEGRAPH_SCALE.powi(-(i as i32)) * bump.l1_norm(i))
            .fold(0.0f64, f64::max);
        for seed in 0..25 {
            let path = mixing_noise(1e-3, 1.0, 2e-3, seed, &cfg());
            for k in 1..=2usize {
                let lhs = ck_norm_of_derivative(&path, k).unwrap();
                let rhs = m_const * k as f64 * path.psi.powi(2 * k as i32 + 1);
                assert!(lhs <= rhs, "seed {seed} k {k}: {lhs} > {rhs}");
            }
            // Per-order structural bounds on the signal itself.
            for k in 0..=2usize {
                let sup = path.derivs[k]
                    .iter()
                    .fold(0.0f64, |acc, x| acc.max(x.abs()));
                let bound = path.psi.powi(2 * k as i32 + 1)
                    * TELEGRAPH_SCALE.powi(-(k as i32))
                    * bump.l1_norm(k);
                assert!(sup <= bound * (1.0 + 1e-9), "k {k}: {sup} > {bound}");
            }
        }
    }

    #[test]
    fn mixing_mean_is_small() {
        // Time average of the signal over a long window; the mean of xi is
        // w(T) / (psi T) since dw/dt = psi xi(psi^2 t).
        let path = mixing_noise(1e-3, 100.0, 0.05, 11, &cfg());
        let psi2 = path.psi * path.psi;
        let mean_xi = path.w[path.len() - 1] / (path.psi * 100.0);
        let tol = 3.0 / (psi2 * 100.0).sqrt();
        assert!(mean_xi.abs() <= tol, "mean {mean_xi} tol {tol}");
    }

    #[test]
    fn mixing_long_time_variance_is_brownian() {
        // Var[w(T)] ~ T - O(1)/psi^2 for T much longer than the correlation
        // time, by the normalization built into A.
        let t_end = 20.0;
        let n_seeds = 600;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for seed in 0..n_seeds {
            let path = mixing_noise(1e-8, t_end, 0.02, 1000 + seed, &cfg());
            let v = path.w[path.len() - 1];
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n_seeds as f64;
        let var = sumsq / n_seeds as f64 - mean * mean;
        let ratio = var / t_end;
        assert!(
            (0.85..1.15).contains(&ratio),
            "Var[w(T)]/T = {ratio} at T = {t_end}"
        );
    }

    #[test]
    fn mollified_converges_to_brownian_in_sup() {
        // Raw-psi schedule where the mollification window actually shrinks;
        // the same seed drives the same Brownian path at every eps.
        let raw = NoiseConfig {
            psi_variant: PsiVariant::Raw,
            ..cfg()
        };
        let eps_list = [1e-8, 1e-32, 1e-128];
        let n_seeds = 24usize;
        let mut medians = Vec::new();
        for &eps in &eps_list {
            let mut sups: Vec<f64> = (0..n_seeds)
                .map(|seed| {
                    let path = mollified_bm(eps, 1.0, 2e-3, 500 + seed as u64, &raw);
                    let rec = path.underlying_bm.as_ref().unwrap();
                    let mut sup = 0.0f64;
                    for (i, &ti) in path.t.iter().enumerate() {
                        let j = (ti / rec.dt).round() as usize;
                        sup = sup.max((path.w[i] - rec.raw[j.min(rec.raw.len() - 1)]).abs());
                    }
                    sup
                })
                .collect();
            sups.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(0.5 * (sups[n_seeds / 2 - 1] + sups[n_seeds / 2]));
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "medians not decreasing: {medians:?}"
        );
    }

    #[test]
    fn ck_and_holder_norms() {
        let mut path = zero_path(1.0, 1e-2, 3);
        for k in 0..=3 {
            assert_eq!(ck_norm(&path, k).unwrap(), 0.0);
        }
        assert!(matches!(
            ck_norm(&path, 9),
            Err(NoiseError::OrderUnavailable { .. })
        ));
        // Linear ramp w = t on [0,1]: the quotient at theta = 0.4 is
        // |t-s|^0.6, maximal at full separation, so the norm is 1 + 1 = 2.
        for (i, w) in path.w.iter_mut().enumerate() {
            *w = i as f64 * 1e-2;
        }
        let h = holder_norm(&path, 0.4);
        assert!((h - 2.0).abs() < 1e-12, "holder {h}");
        assert_eq!(ck_norm(&path, 0).unwrap(), 1.0);
    }

    #[test]
    fn h_eps_certifies_all_orders() {
        let path = mixing_noise(1e-4, 1.0, 1e-3, 5, &cfg());
        for k in 0..path.k_max() {
            for &v in &path.derivs[k] {
                assert!(v.abs() <= path.h_eps);
            }
        }
    }
}
