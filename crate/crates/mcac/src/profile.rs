//! 1-D profiles in the stretched variable: the standing wave, traveling
//! waves with their speed, the first corrector, the inverse surface tension
//! by two independent routes, and a principal-eigenvalue probe of the
//! linearized operator.

use crate::linalg::{gl64, solve_tridiag, trapz};
use crate::reaction::{potential_v, validate, Bistable, ReactionError};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    Standing,
    Traveling { a: f64 },
    Corrector,
}

/// Discretized profile on a uniform grid over [-r, r].
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub r: f64,
    pub h: f64,
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
    pub decay_rate: f64,
    pub kind: ProfileKind,
}

impl WaveProfile {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn rho(&self, i: usize) -> f64 {
        -self.r + i as f64 * self.h
    }

    pub fn center_index(&self) -> usize {
        (self.n() - 1) / 2
    }

    /// Cubic Hermite evaluation; clamps to the end values outside [-r, r].
    pub fn eval(&self, rho: f64) -> f64 {
        if rho <= -self.r {
            return self.values[0];
        }
        if rho >= self.r {
            return *self.values.last().unwrap();
        }
        let x = (rho + self.r) / self.h;
        let i = (x as usize).min(self.n() - 2);
        let t = x - i as f64;
        hermite(
            self.values[i],
            self.values[i + 1],
            self.derivative[i],
            self.derivative[i + 1],
            self.h,
            t,
        )
    }

    pub fn eval_derivative(&self, rho: f64) -> f64 {
        if rho <= -self.r || rho >= self.r {
            return 0.0;
        }
        let x = (rho + self.r) / self.h;
        let i = (x as usize).min(self.n() - 2);
        let t = x - i as f64;
        hermite_deriv(
            self.values[i],
            self.values[i + 1],
            self.derivative[i],
            self.derivative[i + 1],
            self.h,
            t,
        )
    }

    /// Least-squares slope of log|derivative| over rho in [r-6, r-2];
    /// the profile decays like exp(-zeta * rho) there.
    pub fn tail_decay_slope(&self) -> f64 {
        let lo = self.r - 6.0;
        let hi = self.r - 2.0;
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut count = 0.0;
        for i in 0..self.n() {
            let rho = self.rho(i);
            if rho < lo || rho > hi {
                continue;
            }
            let d = self.derivative[i].abs();
            if d <= 0.0 {
                continue;
            }
            let y = d.ln();
            sx += rho;
            sy += y;
            sxx += rho * rho;
            sxy += rho * y;
            count += 1.0;
        }
        (count * sxy - sx * sy) / (count * sxx - sx * sx)
    }
}

fn hermite(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    f0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + h * d0 * (t3 - 2.0 * t2 + t)
        + f1 * (-2.0 * t3 + 3.0 * t2)
        + h * d1 * (t3 - t2)
}

fn hermite_deriv(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    (f0 * (6.0 * t2 - 6.0 * t)
        + h * d0 * (3.0 * t2 - 4.0 * t + 1.0)
        + f1 * (-6.0 * t2 + 6.0 * t)
        + h * d1 * (3.0 * t2 - 2.0 * t))
        / h
}

/// Traveling wave with its speed and shifted equilibria.
#[derive(Debug, Clone)]
pub struct TravelingWave {
    pub profile: WaveProfile,
    pub a: f64,
    pub c: f64,
    pub m_star_plus: f64,
    pub m_star_minus: f64,
}

/// Principal-eigenvalue probe result.
#[derive(Debug, Clone, Copy)]
pub struct EigenProbe {
    pub lambda: f64,
    /// Cosine similarity of the eigenfunction with the profile derivative.
    pub cosine_with_m_prime: f64,
}

#[derive(Debug)]
pub enum ProfileError {
    InvalidReaction(ReactionError),
    NoConvergence(String),
    NonMonotone,
    NoThreeZeros { a: f64 },
    SingularSystem,
}

impl fmt::Display for ProfileError {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileError::InvalidReaction(e) => write!(fm, "invalid reaction: {e}"),
            ProfileError::NoConvergence(what) => write!(fm, "no convergence: {what}"),
            ProfileError::NonMonotone => write!(fm, "profile is not monotone"),
            ProfileError::NoThreeZeros { a } => {
                write!(fm, "f - {a} does not keep three zeros")
            }
            ProfileError::SingularSystem => write!(fm, "linear system is singular"),
        }
    }
}

impl std::error::Error for ProfileError {}

pub const DEFAULT_R: f64 = 20.0;
pub const DEFAULT_H: f64 = 2.5e-4;

/// Standing profile: second-order centered discretization with mirror
/// (Neumann) ends, phase pinned by replacing the center row with m(0) = 0,
/// solved by Newton iteration.
pub fn solve_standing(b: &Bistable, r: f64, h: f64) -> Result<WaveProfile, ProfileError> {
    validate(b).map_err(ProfileError::InvalidReaction)?;
    assert!(r >= 10.0, "domain half-width must be at least 10");
    assert!(h <= 0.05, "grid spacing must be at most 0.05");

    let n_half = (r / h).round() as usize;
    let h = r / n_half as f64;
    let n = 2 * n_half + 1;
    let i0 = n_half;
    let inv_h2 = 1.0 / (h * h);

    let mut m: Vec<f64> = (0..n)
        .map(|i| ((-r + i as f64 * h) / std::f64::consts::SQRT_2).tanh())
        .collect();

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    let mut converged = false;
    for _iter in 0..40 {
        let mut fmax = 0.0f64;
        for i in 0..n {
            let (lo, hi) = neighbor_values(&m, i);
            let res = (lo - 2.0 * m[i] + hi) * inv_h2 + b.f(m[i]);
            rhs[i] = -res;
            fmax = fmax.max(res.abs());
            sub[i] = if i == 0 { 0.0 } else { inv_h2 };
            sup[i] = if i + 1 == n { 0.0 } else { inv_h2 };
            if i == 0 {
                sup[i] = 2.0 * inv_h2;
            }
            if i + 1 == n {
                sub[i] = 2.0 * inv_h2;
            }
            diag[i] = -2.0 * inv_h2 + b.df(m[i]);
        }
        // Phase condition replaces the center equation.
        sub[i0] = 0.0;
        sup[i0] = 0.0;
        diag[i0] = 1.0;
        rhs[i0] = -m[i0];
        fmax = fmax.max(m[i0].abs());

        let delta = solve_tridiag(&sub, &diag, &sup, &rhs)
            .ok_or(ProfileError::SingularSystem)?;
        let dmax = delta.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
        for i in 0..n {
            m[i] += delta[i];
        }
        // The residual floor is set by rounding in the 1/h^2 differences.
        if fmax < 5e-9 || dmax < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ProfileError::NoConvergence("standing-wave Newton".into()));
    }
    // Strictly increasing up to rounding in the saturated tails.
    for i in 1..n {
        if m[i] < m[i - 1] - 1e-14 {
            return Err(ProfileError::NonMonotone);
        }
    }
    if m[n - 1] <= m[0] {
        return Err(ProfileError::NonMonotone);
    }

    // Centered differences with mirror ends; the trapezoid sum of this
    // derivative telescopes to m(R) - m(-R), which keeps the solvability
    // integral of the corrector problem at rounding level.
    let mut derivative = vec![0.0; n];
    for i in 1..n - 1 {
        derivative[i] = (m[i + 1] - m[i - 1]) / (2.0 * h);
    }

    Ok(WaveProfile {
        r,
        h,
        values: m,
        derivative,
        decay_rate: b.zeta(),
        kind: ProfileKind::Standing,
    })
}

fn neighbor_values(m: &[f64], i: usize) -> (f64, f64) {
    let n = m.len();
    let lo = if i == 0 { m[1] } else { m[i - 1] };
    let hi = if i + 1 == n { m[n - 2] } else { m[i + 1] };
    (lo, hi)
}

/// Inverse surface tension two ways: from the profile derivative and from
/// the potential. Both discretize the same constant.
pub fn sigma_bar(b: &Bistable, p: &WaveProfile) -> (f64, f64) {
    assert_eq!(p.kind, ProfileKind::Standing, "sigma_bar needs a standing profile");
    let sq: Vec<f64> = p.derivative.iter().map(|d| d * d).collect();
    let from_profile = 2.0 / trapz(&sq, p.h);
    let mut integral = 0.0;
    let pieces = 8;
    for k in 0..pieces {
        let a = -1.0 + 2.0 * k as f64 / pieces as f64;
        let c = -1.0 + 2.0 * (k + 1) as f64 / pieces as f64;
        integral += gl64(&|u| potential_v(b, u).max(0.0).sqrt(), a, c);
    }
    let from_potential = std::f64::consts::SQRT_2 / integral;
    (from_profile, from_potential)
}

const SHOOT_STEP: f64 = 1e-3;
const TRAVELING_R: f64 = 12.0;

#[derive(Clone, Copy, PartialEq)]
enum ShotOutcome {
    Overshoot,
    Undershoot,
}

struct ShotTrace {
    /// (m, m') at every RK step, step SHOOT_STEP starting at rho = 0.
    states: Vec<(f64, f64)>,
}

fn rk4_shot(
    b: &Bistable,
    a: f64,
    c: f64,
    m_minus: f64,
    m_plus: f64,
    keep: bool,
) -> (ShotOutcome, ShotTrace) {
    let delta0 = 1e-10 * (m_plus - m_minus);
    let fp = b.df(m_minus);
    let mu = 0.5 * (-c + (c * c - 4.0 * fp).sqrt());
    let mut y = (m_minus + delta0, mu * delta0);
    let rhs = |state: (f64, f64)| -> (f64, f64) {
        (state.1, -c * state.1 - (b.f(state.0) - a))
    };
    let mut states = Vec::new();
    if keep {
        states.push(y);
    }
    let max_steps = 60_000;
    let over_band = 1e-9 * (m_plus - m_minus).abs();
    let mut outcome = ShotOutcome::Undershoot;
    for _ in 0..max_steps {
        let k1 = rhs(y);
        let y2 = (y.0 + 0.5 * SHOOT_STEP * k1.0, y.1 + 0.5 * SHOOT_STEP * k1.1);
        let k2 = rhs(y2);
        let y3 = (y.0 + 0.5 * SHOOT_STEP * k2.0, y.1 + 0.5 * SHOOT_STEP * k2.1);
        let k3 = rhs(y3);
        let y4 = (y.0 + SHOOT_STEP * k3.0, y.1 + SHOOT_STEP * k3.1);
        let k4 = rhs(y4);
        y = (
            y.0 + SHOOT_STEP / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y.1 + SHOOT_STEP / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
        if keep {
            states.push(y);
        }
        if y.0 > m_plus + over_band {
            outcome = ShotOutcome::Overshoot;
            break;
        }
        if y.1 < 0.0 {
            outcome = ShotOutcome::Undershoot;
            break;
        }
    }
    (outcome, ShotTrace { states })
}

fn newton_root(b: &Bistable, a: f64, start: f64) -> Option<f64> {
    let mut u = start;
    for _ in 0..60 {
        let g = b.f(u) - a;
        let dg = b.df(u);
        if dg == 0.0 {
            return None;
        }
        let step = g / dg;
        u -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if (b.f(u) - a).abs() <= 1e-12 {
        Some(u)
    } else {
        None
    }
}

/// Traveling wave for reaction offset `a`, solved by shooting with bisection
/// on the speed. The phase is normalized afterwards so that m(0) = 0.
pub fn solve_traveling(b: &Bistable, a: f64) -> Result<TravelingWave, ProfileError> {
    // f - a must keep the three-zero structure.
    let mut count = 0;
    let grid = 10_000;
    let mut prev = b.f(-1.5) - a;
    for i in 1..=grid {
        let u = -1.5 + 3.0 * i as f64 / grid as f64;
        let cur = b.f(u) - a;
        if prev == 0.0 || prev * cur < 0.0 {
            count += 1;
        }
        prev = cur;
    }
    if count != 3 {
        return Err(ProfileError::NoThreeZeros { a });
    }
    let m_plus = newton_root(b, a, 1.0).ok_or(ProfileError::NoThreeZeros { a })?;
    let m_minus = newton_root(b, a, -1.0).ok_or(ProfileError::NoThreeZeros { a })?;

    // More friction stalls the connection (undershoot), less overshoots.
    let mut c_lo = -1.0;
    let mut c_hi = 1.0;
    let (out_lo, _) = rk4_shot(b, a, c_lo, m_minus, m_plus, false);
    let (out_hi, _) = rk4_shot(b, a, c_hi, m_minus, m_plus, false);
    if out_lo != ShotOutcome::Overshoot || out_hi != ShotOutcome::Undershoot {
        return Err(ProfileError::NoConvergence(
            "speed bracket does not separate outcomes".into(),
        ));
    }
    for _ in 0..80 {
        let c_mid = 0.5 * (c_lo + c_hi);
        let (out, _) = rk4_shot(b, a, c_mid, m_minus, m_plus, false);
        match out {
            ShotOutcome::Overshoot => c_lo = c_mid,
            ShotOutcome::Undershoot => c_hi = c_mid,
        }
        if c_hi - c_lo < 1e-15 {
            break;
        }
    }
    let c = 0.5 * (c_lo + c_hi);

    let (_, trace) = rk4_shot(b, a, c, m_minus, m_plus, true);
    // Zero crossing of m, refined by Newton on the Hermite interpolant.
    let mut cross = None;
    for i in 1..trace.states.len() {
        let (m0, _) = trace.states[i - 1];
        let (m1, _) = trace.states[i];
        if m0 < 0.0 && m1 >= 0.0 {
            cross = Some((i - 1) as f64 + (-m0 / (m1 - m0)));
            break;
        }
    }
    let cross = cross.ok_or_else(|| {
        ProfileError::NoConvergence("traveling wave never crosses zero".into())
    })?;
    let eval_trace = |x: f64| -> (f64, f64) {
        let i = (x as usize).min(trace.states.len() - 2);
        let t = x - i as f64;
        let (m0, d0) = trace.states[i];
        let (m1, d1) = trace.states[i + 1];
        (
            hermite(m0, m1, d0, d1, SHOOT_STEP, t),
            hermite_deriv(m0, m1, d0, d1, SHOOT_STEP, t),
        )
    };
    let mut cross = cross;
    for _ in 0..6 {
        let (mv, dv) = eval_trace(cross);
        cross -= mv / (dv * SHOOT_STEP);
    }
    let rho_c = cross * SHOOT_STEP;
    let span = trace.states.len() as f64 * SHOOT_STEP;
    if rho_c < TRAVELING_R + 0.5 || rho_c + TRAVELING_R + 0.5 > span {
        return Err(ProfileError::NoConvergence(
            "zero crossing too close to the integration ends".into(),
        ));
    }

    // Resample on [-R, R] around the crossing with Hermite interpolation.
    let h = 1e-3;
    let n = (2.0 * TRAVELING_R / h).round() as usize + 1;
    let mut values = vec![0.0; n];
    let mut derivative = vec![0.0; n];
    for j in 0..n {
        let rho = -TRAVELING_R + j as f64 * h + rho_c;
        let x = rho / SHOOT_STEP;
        let i = (x as usize).min(trace.states.len() - 2);
        let t = x - i as f64;
        let (m0, d0) = trace.states[i];
        let (m1, d1) = trace.states[i + 1];
        values[j] = hermite(m0, m1, d0, d1, SHOOT_STEP, t);
        derivative[j] = hermite_deriv(m0, m1, d0, d1, SHOOT_STEP, t);
    }

    let zeta = (-b.df(m_minus)).sqrt().min((-b.df(m_plus)).sqrt());
    Ok(TravelingWave {
        profile: WaveProfile {
            r: TRAVELING_R,
            h,
            values,
            derivative,
            decay_rate: zeta,
            kind: ProfileKind::Traveling { a },
        },
        a,
        c,
        m_star_plus: m_plus,
        m_star_minus: m_minus,
    })
}

/// Apply -d^2/drho^2 - f'(m) with mirror ends to `x`.
fn apply_operator(diag_f: &[f64], inv_h2: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let lo = if i == 0 { x[1] } else { x[i - 1] };
        let hi = if i + 1 == n { x[n - 2] } else { x[i + 1] };
        out[i] = -(lo - 2.0 * x[i] + hi) * inv_h2 - diag_f[i] * x[i];
    }
    out
}

struct Linearized {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    inv_h2: f64,
    fprime: Vec<f64>,
}

impl Linearized {
    fn new(b: &Bistable, m: &[f64], h: f64, shift: f64) -> Linearized {
        let n = m.len();
        let inv_h2 = 1.0 / (h * h);
        let fprime: Vec<f64> = m.iter().map(|&mi| b.df(mi)).collect();
        let mut sub = vec![-inv_h2; n];
        let mut sup = vec![-inv_h2; n];
        sub[0] = 0.0;
        sup[0] = -2.0 * inv_h2;
        sup[n - 1] = 0.0;
        sub[n - 1] = -2.0 * inv_h2;
        let diag: Vec<f64> = fprime
            .iter()
            .map(|fp| 2.0 * inv_h2 - fp + shift)
            .collect();
        Linearized {
            sub,
            diag,
            sup,
            inv_h2,
            fprime,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        solve_tridiag(&self.sub, &self.diag, &self.sup, rhs)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        apply_operator(&self.fprime, self.inv_h2, x)
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Near-kernel vector of the linearized operator by inverse iteration.
fn near_kernel(lin: &Linearized, seed: &[f64]) -> Result<(Vec<f64>, f64), ProfileError> {
    let mut v = seed.to_vec();
    normalize(&mut v);
    for _ in 0..3 {
        let mut y = lin.solve(&v).ok_or(ProfileError::SingularSystem)?;
        normalize(&mut y);
        v = y;
    }
    let av = lin.apply(&v);
    let lambda = dot(&v, &av);
    Ok((v, lambda))
}

/// First corrector: the linearized problem with source 1 - sigma * m' on the
/// profile grid. The operator has a near-kernel along m', so the solve runs
/// a shifted fixed-point iteration with explicit deflation, then pins
/// theta(0) = 0 along the computed kernel direction (which costs only a
/// kernel-eigenvalue-sized residual).
pub fn solve_theta1(
    b: &Bistable,
    p: &WaveProfile,
    sigma: f64,
) -> Result<WaveProfile, ProfileError> {
    assert_eq!(p.kind, ProfileKind::Standing, "corrector needs the standing profile");
    let n = p.n();
    let lin = Linearized::new(b, &p.values, p.h, 0.0);
    let lin_shift = Linearized::new(b, &p.values, p.h, 1.0);
    let (kernel, _lambda) = near_kernel(&lin, &p.derivative)?;

    let rhs: Vec<f64> = p.derivative.iter().map(|&d| 1.0 - sigma * d).collect();
    let mut theta = vec![0.0; n];
    let mut source = vec![0.0; n];
    for _ in 0..80 {
        for i in 0..n {
            source[i] = rhs[i] + theta[i];
        }
        let mut next = lin_shift.solve(&source).ok_or(ProfileError::SingularSystem)?;
        let proj = dot(&kernel, &next);
        for i in 0..n {
            next[i] -= proj * kernel[i];
        }
        let diff = next
            .iter()
            .zip(theta.iter())
            .fold(0.0f64, |acc, (a, c)| acc.max((a - c).abs()));
        theta = next;
        if diff < 1e-14 {
            break;
        }
    }
    let i0 = (n - 1) / 2;
    if kernel[i0] == 0.0 {
        return Err(ProfileError::SingularSystem);
    }
    let shift = theta[i0] / kernel[i0];
    for i in 0..n {
        theta[i] -= shift * kernel[i];
    }
    theta[i0] = 0.0;

    let mut derivative = vec![0.0; n];
    for i in 1..n - 1 {
        derivative[i] = (theta[i + 1] - theta[i - 1]) / (2.0 * p.h);
    }
    Ok(WaveProfile {
        r: p.r,
        h: p.h,
        values: theta,
        derivative,
        decay_rate: p.decay_rate,
        kind: ProfileKind::Corrector,
    })
}

/// Smallest eigenvalue of the linearized operator on (-1/eps, 1/eps) with
/// mirror ends, by inverse iteration, plus the cosine similarity of the
/// eigenfunction with m'.
pub fn principal_eigenvalue(
    b: &Bistable,
    p: &WaveProfile,
    eps: f64,
) -> Result<EigenProbe, ProfileError> {
    assert!(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    let half = 1.0 / eps;
    let h = 1e-3;
    let n_half = (half / h).round() as usize;
    let h = half / n_half as f64;
    let n = 2 * n_half + 1;
    let m: Vec<f64> = (0..n).map(|i| p.eval(-half + i as f64 * h)).collect();
    let mp: Vec<f64> = (0..n)
        .map(|i| p.eval_derivative(-half + i as f64 * h).max(1e-300))
        .collect();

    let lin = Linearized::new(b, &m, h, 0.0);
    let mut v = mp.clone();
    normalize(&mut v);
    let mut lambda_prev = f64::INFINITY;
    let mut lambda = 0.0;
    let mut ok = false;
    for _ in 0..12 {
        let mut y = lin.solve(&v).ok_or(ProfileError::SingularSystem)?;
        if normalize(&mut y) == 0.0 {
            return Err(ProfileError::NoConvergence("inverse iteration collapsed".into()));
        }
        v = y;
        let av = lin.apply(&v);
        lambda = dot(&v, &av);
        if (lambda - lambda_prev).abs() <= 1e-6 * lambda.abs() + 1e-18 {
            ok = true;
            break;
        }
        lambda_prev = lambda;
    }
    if !ok {
        return Err(ProfileError::NoConvergence("inverse iteration".into()));
    }
    let mut mhat = mp;
    normalize(&mut mhat);
    let cosine = dot(&v, &mhat).abs();
    Ok(EigenProbe {
        lambda,
        cosine_with_m_prime: cosine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::make_cubic;

    fn standing() -> WaveProfile {
        solve_standing(&make_cubic(), DEFAULT_R, DEFAULT_H).unwrap()
    }

    #[test]
    fn standing_matches_tanh() {
        let p = standing();
        assert_eq!(p.values[p.center_index()], 0.0);
        let mut worst = 0.0f64;
        for i in 0..p.n() {
            let rho = p.rho(i);
            if rho.abs() <= 10.0 {
                worst = worst.max((p.values[i] - (rho / std::f64::consts::SQRT_2).tanh()).abs());
            }
        }
        assert!(worst < 1e-6, "sup deviation from tanh: {worst:e}");
    }

    #[test]
    fn standing_is_monotone_with_positive_derivative() {
        let p = standing();
        // Strict increase except where the tails sit at rounding level.
        for i in 1..p.n() {
            assert!(p.values[i] >= p.values[i - 1] - 1e-14);
        }
        let i0 = p.center_index();
        for i in (i0 - 2000)..(i0 + 2000) {
            assert!(p.values[i + 1] > p.values[i]);
        }
        for i in 0..p.n() {
            assert!(p.derivative[i] >= 0.0);
        }
        assert!((p.values[p.n() - 1] - 1.0).abs() < 10.0 * (-p.decay_rate * p.r).exp());
    }

    #[test]
    fn standing_discrete_residual() {
        let p = standing();
        let b = make_cubic();
        let inv_h2 = 1.0 / (p.h * p.h);
        let mut worst = 0.0f64;
        for i in 1..p.n() - 1 {
            let res =
                (p.values[i - 1] - 2.0 * p.values[i] + p.values[i + 1]) * inv_h2 + b.f(p.values[i]);
            worst = worst.max(res.abs());
        }
        assert!(worst < 1e-8, "residual {worst:e}");
    }

    #[test]
    fn decay_rate_fits_zeta() {
        let p = standing();
        let slope = p.tail_decay_slope();
        let zeta = std::f64::consts::SQRT_2;
        assert!(
            (slope + zeta).abs() < 0.05 * zeta,
            "tail slope {slope} vs -zeta {}",
            -zeta
        );
    }

    #[test]
    fn sigma_bar_two_routes() {
        let b = make_cubic();
        let p = standing();
        let (sa, sb) = sigma_bar(&b, &p);
        let exact = 3.0 / std::f64::consts::SQRT_2;
        assert!((sa - exact).abs() < 1e-6, "sa={sa}");
        assert!((sb - exact).abs() < 1e-6, "sb={sb}");
        assert!((sa - sb).abs() < 1e-5);
    }

    #[test]
    fn traveling_at_zero_offset_is_standing() {
        let b = make_cubic();
        let tw = solve_traveling(&b, 0.0).unwrap();
        assert!(tw.c.abs() < 1e-8, "c = {}", tw.c);
        let p = standing();
        let mut worst = 0.0f64;
        for i in 0..tw.profile.n() {
            let rho = tw.profile.rho(i);
            worst = worst.max((tw.profile.values[i] - p.eval(rho)).abs());
        }
        assert!(worst < 1e-6, "profile deviation {worst:e}");
    }

    #[test]
    fn traveling_equilibria_and_residual() {
        let b = make_cubic();
        let tw = solve_traveling(&b, 0.05).unwrap();
        // Newton oracle for the root of u - u^3 = 0.05 near +1.
        let mut u = 1.0f64;
        for _ in 0..50 {
            u -= (u - u * u * u - 0.05) / (1.0 - 3.0 * u * u);
        }
        assert!((tw.m_star_plus - u).abs() < 1e-12, "m+*={}", tw.m_star_plus);
        assert!((b.f(tw.m_star_plus) - 0.05).abs() < 1e-10);
        assert!((b.f(tw.m_star_minus) - 0.05).abs() < 1e-10);
        // Discrete ODE residual.
        let p = &tw.profile;
        let inv_h2 = 1.0 / (p.h * p.h);
        let mut worst = 0.0f64;
        for i in 1..p.n() - 1 {
            let m2 = (p.values[i - 1] - 2.0 * p.values[i] + p.values[i + 1]) * inv_h2;
            let m1 = (p.values[i + 1] - p.values[i - 1]) / (2.0 * p.h);
            let res = m2 + tw.c * m1 + b.f(p.values[i]) - 0.05;
            worst = worst.max(res.abs());
        }
        assert!(worst < 1e-6, "traveling residual {worst:e}");
        assert!(p.values[(p.n() - 1) / 2].abs() < 1e-9);
    }

    #[test]
    fn speed_slope_matches_sigma_bar() {
        let b = make_cubic();
        let plus = solve_traveling(&b, 1e-3).unwrap();
        let minus = solve_traveling(&b, -1e-3).unwrap();
        let slope = (plus.c - minus.c) / 2e-3;
        let p = standing();
        let (sa, _) = sigma_bar(&b, &p);
        assert!((slope - sa).abs() < 1e-3, "slope {slope} vs sigma {sa}");
        // Sign convention, frozen: c(a) and a share their sign for the cubic.
        assert!(plus.c > 0.0 && minus.c < 0.0);
    }

    #[test]
    fn speed_monotone_in_offset() {
        let b = make_cubic();
        let mut prev = f64::NEG_INFINITY;
        for &a in &[-0.05, -0.02, 0.0, 0.02, 0.05] {
            let tw = solve_traveling(&b, a).unwrap();
            assert!(tw.c > prev, "c({a}) = {} not increasing", tw.c);
            prev = tw.c;
        }
    }

    #[test]
    fn traveling_rejects_large_offset() {
        let b = make_cubic();
        // The three-zero structure dies at |a| = 2/(3 sqrt(3)) ~ 0.385.
        match solve_traveling(&b, 0.5) {
            Err(ProfileError::NoThreeZeros { .. }) => {}
            other => panic!("expected NoThreeZeros, got {:?}", other.map(|t| t.c)),
        }
    }

    #[test]
    fn scaled_bistables_keep_the_contracts() {
        // Any valid reaction must give a monotone profile with small
        // residual and matching surface-tension routes. The scaled cubic
        // c(u - u^3) has closed forms: m = tanh(rho sqrt(c/2)) and
        // sigma = 3/sqrt(2c).
        fn scaled(c: f64) -> Bistable {
            // fn pointers cannot capture, so the family is enumerated.
            match (c * 100.0) as i32 {
                70 => Bistable {
                    f: |u| 0.7 * (u - u * u * u),
                    f_prime: |u| 0.7 * (1.0 - 3.0 * u * u),
                    f_double_prime: |u| 0.7 * (-6.0 * u),
                    c_bar_1: 0.7,
                    zeros: [-1.0, 0.0, 1.0],
                },
                _ => Bistable {
                    f: |u| 1.5 * (u - u * u * u),
                    f_prime: |u| 1.5 * (1.0 - 3.0 * u * u),
                    f_double_prime: |u| 1.5 * (-6.0 * u),
                    c_bar_1: 1.5,
                    zeros: [-1.0, 0.0, 1.0],
                },
            }
        }
        for &c in &[0.7, 1.5] {
            let b = scaled(c);
            let p = solve_standing(&b, 14.0, 5e-4).unwrap();
            for i in 1..p.n() {
                assert!(p.values[i] >= p.values[i - 1] - 1e-14);
            }
            let inv_h2 = 1.0 / (p.h * p.h);
            let mut worst = 0.0f64;
            for i in 1..p.n() - 1 {
                let res = (p.values[i - 1] - 2.0 * p.values[i] + p.values[i + 1]) * inv_h2
                    + b.f(p.values[i]);
                worst = worst.max(res.abs());
            }
            assert!(worst < 1e-8, "c={c}: residual {worst:e}");
            let (sa, sb) = sigma_bar(&b, &p);
            let exact = 3.0 / (2.0 * c).sqrt();
            assert!((sa - sb).abs() < 1e-5, "c={c}: {sa} vs {sb}");
            assert!((sa - exact).abs() < 1e-5, "c={c}: sa {sa} vs {exact}");
            let zeta = (2.0 * c).sqrt();
            assert!((p.tail_decay_slope() + zeta).abs() < 0.05 * zeta);
        }
    }

    #[test]
    fn theta1_contract() {
        let b = make_cubic();
        let p = standing();
        let (sigma, _) = sigma_bar(&b, &p);
        let th = solve_theta1(&b, &p, sigma).unwrap();
        let i0 = th.center_index();
        assert_eq!(th.values[i0], 0.0);
        // Ends approach -1/f'(+-1) = 1/2.
        assert!((th.values[0] - 0.5).abs() < 1e-3, "left end {}", th.values[0]);
        assert!(
            (th.values[th.n() - 1] - 0.5).abs() < 1e-3,
            "right end {}",
            th.values[th.n() - 1]
        );
        // Discrete residual of -theta'' - f'(m) theta = 1 - sigma m'.
        let inv_h2 = 1.0 / (th.h * th.h);
        let mut worst = 0.0f64;
        let mut orth = vec![0.0; th.n()];
        for i in 0..th.n() {
            let (lo, hi) = if i == 0 {
                (th.values[1], th.values[1])
            } else if i + 1 == th.n() {
                (th.values[th.n() - 2], th.values[th.n() - 2])
            } else {
                (th.values[i - 1], th.values[i + 1])
            };
            let lhs = -(lo - 2.0 * th.values[i] + hi) * inv_h2 - b.df(p.values[i]) * th.values[i];
            let res = lhs - (1.0 - sigma * p.derivative[i]);
            if i > 0 && i + 1 < th.n() {
                worst = worst.max(res.abs());
            }
            orth[i] = res * p.derivative[i];
        }
        assert!(worst < 1e-6, "theta1 residual {worst:e}");
        let orth_integral = trapz(&orth, th.h);
        assert!(orth_integral.abs() < 1e-8, "orthogonality {orth_integral:e}");
    }

    #[test]
    fn theta1_solvability_integral() {
        let b = make_cubic();
        let p = standing();
        let (sigma, _) = sigma_bar(&b, &p);
        let integrand: Vec<f64> = p
            .derivative
            .iter()
            .map(|&d| (1.0 - sigma * d) * d)
            .collect();
        let val = trapz(&integrand, p.h);
        assert!(val.abs() < 1e-8, "solvability integral {val:e}");
    }

    #[test]
    fn eigen_probe_small_and_aligned() {
        let b = make_cubic();
        let p = standing();
        let probe = principal_eigenvalue(&b, &p, 0.1).unwrap();
        let envelope = (-p.decay_rate / 0.1).exp();
        assert!(
            probe.lambda.abs() <= envelope,
            "lambda {} vs envelope {envelope:e}",
            probe.lambda
        );
        assert!(probe.cosine_with_m_prime >= 0.999);
        // eps = 1 stays finite.
        let probe1 = principal_eigenvalue(&b, &p, 1.0).unwrap();
        assert!(probe1.lambda.is_finite());
    }
}
