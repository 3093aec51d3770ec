//! Volume-preserving curvature flow of a strictly convex closed plane curve
//! with a nonlocal noise term, in normal-angle (Gauss map) coordinates.
//!
//! The curve is the function theta -> kappa(theta) on [0, 2*pi) plus one
//! anchor point; the evolution is
//!
//!   d kappa/dt = a(kappa) kappa_theta_theta + b(theta, kappa)
//!                + c * chi^2(kappa) / |gamma|_L * v(t),      c = |D|/2,
//!
//! where a = chi_L^2, b = chi_L^3 - 2*pi*chi_L^2/|gamma|_L and chi_L is a
//! smooth cutoff equal to the identity on [1/L, L]. For smooth forcing the
//! equation is a random ODE and one Heun step per dt is the
//! Stratonovich-consistent integrator; the Ito variant steps with true
//! Brownian increments and carries the quadratic-variation drift `g`.

use crate::bump::Bump;
use crate::geom::Point;
use crate::noise::NoisePath;
use crate::spectral::PeriodicSpectral;
use std::f64::consts::PI;
use std::fmt;

/// Convex curve in normal-angle coordinates.
#[derive(Debug, Clone)]
pub struct CurveState {
    pub kappa: Vec<f64>,
    /// Position of the point with normal angle 0.
    pub anchor: Point,
    pub t: f64,
}

impl CurveState {
    pub fn m(&self) -> usize {
        self.kappa.len()
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.m() as f64
    }

    /// Circle of radius `r`; the anchor sits left of the center.
    pub fn circle(m: usize, r: f64, center: Point) -> CurveState {
        CurveState {
            kappa: vec![1.0 / r; m],
            anchor: [center[0] - r, center[1]],
            t: 0.0,
        }
    }

    /// Ellipse with semi-axes a, b: curvature h(theta)^3/(a b)^2 with the
    /// support function h = sqrt(a^2 cos^2 + b^2 sin^2).
    pub fn ellipse(m: usize, a: f64, b: f64, center: Point) -> CurveState {
        let kappa = (0..m)
            .map(|j| {
                let th = 2.0 * PI * j as f64 / m as f64;
                let h2 = a * a * th.cos().powi(2) + b * b * th.sin().powi(2);
                h2.powf(1.5) / (a * a * b * b)
            })
            .collect();
        CurveState {
            kappa,
            anchor: [center[0] - a, center[1]],
            t: 0.0,
        }
    }

    /// Closure defect: modulus of the integral of (cos, sin)/kappa.
    pub fn closure_defect(&self) -> f64 {
        let m = self.m();
        let dth = self.dtheta();
        let mut cx = 0.0;
        let mut cy = 0.0;
        for j in 0..m {
            let th = j as f64 * dth;
            cx += th.cos() / self.kappa[j];
            cy += th.sin() / self.kappa[j];
        }
        (cx * cx + cy * cy).sqrt() * dth
    }
}

/// Smooth cutoff chi_L: identity on [1/L, L], C-infinity, with values in
/// [1/(2L), 2L] (flat at 3/(4L) below and 3L/2 above).
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    pub level: f64,
}

impl Cutoff {
    pub fn new(level: f64) -> Cutoff {
        assert!(level >= 1.0);
        Cutoff { level }
    }

    pub fn chi(&self, x: f64) -> f64 {
        let l = self.level;
        let lo = 1.0 / l;
        if (lo..=l).contains(&x) {
            return x;
        }
        let bump = Bump::get();
        if x < lo {
            let half = 0.5 * lo;
            if x <= half {
                return 0.75 * lo;
            }
            let s = (x - half) / half;
            lo - half * (0.5 - step_integral(bump, s))
        } else {
            let hi = 2.0 * l;
            if x >= hi {
                return 1.5 * l;
            }
            let s = (hi - x) / l;
            l + l * (0.5 - step_integral(bump, s))
        }
    }

    pub fn chi_prime(&self, x: f64) -> f64 {
        let l = self.level;
        let lo = 1.0 / l;
        if (lo..=l).contains(&x) {
            return 1.0;
        }
        let bump = Bump::get();
        if x < lo {
            let half = 0.5 * lo;
            if x <= half {
                return 0.0;
            }
            bump.smooth_step((x - half) / half)
        } else {
            let hi = 2.0 * l;
            if x >= hi {
                return 0.0;
            }
            bump.smooth_step((hi - x) / l)
        }
    }
}

/// int_0^s S(u) du for the smooth step S, by parts on the bump tables.
fn step_integral(bump: &Bump, s: f64) -> f64 {
    let sc = s.clamp(0.0, 1.0);
    sc * bump.smooth_step(sc) - bump.moment_antideriv(0, sc) + (s - 1.0).max(0.0)
}

#[derive(Debug)]
pub enum FlowError {
    CutoffExit {
        t: f64,
        kappa_min: f64,
        kappa_max: f64,
    },
    StepRejected {
        dt: f64,
        budget: f64,
    },
    NonConvex,
    ClosureViolation {
        gap: f64,
    },
    PathMismatch(String),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::CutoffExit {
                t,
                kappa_min,
                kappa_max,
            } => write!(
                f,
                "curvature left the cutoff band at t = {t} (min {kappa_min}, max {kappa_max})"
            ),
            FlowError::StepRejected { dt, budget } => {
                write!(f, "dt = {dt} exceeds the parabolic budget {budget}")
            }
            FlowError::NonConvex => write!(f, "curvature is not positive"),
            FlowError::ClosureViolation { gap } => write!(f, "curve does not close, gap {gap}"),
            FlowError::PathMismatch(s) => write!(f, "path mismatch: {s}"),
        }
    }
}

impl std::error::Error for FlowError {}

#[derive(Debug, Clone, Copy)]
pub struct CurveGeometry {
    pub length: f64,
    pub kappa_bar: f64,
    pub area: f64,
}

/// Length, average curvature, and enclosed area.
///
/// The area is the shoelace integral (1/2) |oint (x dy - y dx)| evaluated
/// with the exact tangent (sin, -cos)/kappa, which keeps spectral accuracy
/// (a plain polygon shoelace loses O(dtheta^2)).
pub fn geometry(state: &CurveState, sp: &PeriodicSpectral) -> Result<CurveGeometry, FlowError> {
    if state.kappa.iter().any(|&k| k <= 0.0) {
        return Err(FlowError::NonConvex);
    }
    let dth = state.dtheta();
    let length: f64 = state.kappa.iter().map(|&k| 1.0 / k).sum::<f64>() * dth;
    let kappa_bar = 2.0 * PI / length;
    let pts = reconstruct(state, sp)?;
    let mut twice_area = 0.0;
    for (j, p) in pts.iter().enumerate() {
        let th = j as f64 * dth;
        twice_area += (-p[0] * th.cos() - p[1] * th.sin()) / state.kappa[j];
    }
    Ok(CurveGeometry {
        length,
        kappa_bar,
        area: (0.5 * twice_area * dth).abs(),
    })
}

/// Curve from curvature and anchor: spectral antiderivative of
/// (sin(theta), -cos(theta)) / kappa starting at the anchor.
pub fn reconstruct(state: &CurveState, sp: &PeriodicSpectral) -> Result<Vec<Point>, FlowError> {
    let m = state.m();
    assert_eq!(sp.len(), m, "spectral plan size mismatch");
    let dth = state.dtheta();
    let length: f64 = state.kappa.iter().map(|&k| 1.0 / k).sum::<f64>() * dth;
    let gap = state.closure_defect();
    if gap > 1e-6 * length {
        return Err(FlowError::ClosureViolation { gap });
    }
    let fx: Vec<f64> = (0..m)
        .map(|j| (j as f64 * dth).sin() / state.kappa[j])
        .collect();
    let fy: Vec<f64> = (0..m)
        .map(|j| -(j as f64 * dth).cos() / state.kappa[j])
        .collect();
    let ix = sp.cumulative(&fx);
    let iy = sp.cumulative(&fy);
    Ok((0..m)
        .map(|j| [state.anchor[0] + ix[j], state.anchor[1] + iy[j]])
        .collect())
}

/// Flow solver bound to one grid size and cutoff.
pub struct FlowEngine {
    pub sp: PeriodicSpectral,
    pub cutoff: Cutoff,
    /// Area of the ambient domain |D|; the coupling constant is |D|/2.
    pub area_d: f64,
}

impl FlowEngine {
    pub fn new(m: usize, cutoff: Cutoff, area_d: f64) -> FlowEngine {
        FlowEngine {
            sp: PeriodicSpectral::new(m),
            cutoff,
            area_d,
        }
    }

    fn cut_forms(&self, kappa: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let m = kappa.len();
        let dth = 2.0 * PI / m as f64;
        let chi: Vec<f64> = kappa.iter().map(|&k| self.cutoff.chi(k)).collect();
        let len_cut: f64 = chi.iter().map(|&c| 1.0 / c).sum::<f64>() * dth;
        let chi2: Vec<f64> = chi.iter().map(|&c| c * c).collect();
        (chi, chi2, len_cut)
    }

    /// Right-hand side of the cut equation with forcing value `v`.
    pub fn drift_rhs(&self, kappa: &[f64], v: f64) -> Vec<f64> {
        let (chi, chi2, len_cut) = self.cut_forms(kappa);
        let ktt = self.sp.deriv2(kappa);
        let c_half = 0.5 * self.area_d;
        let mut out = vec![0.0; kappa.len()];
        for j in 0..kappa.len() {
            let b = chi[j] * chi2[j] - 2.0 * PI * chi2[j] / len_cut;
            out[j] = chi2[j] * ktt[j] + b + c_half * chi2[j] * v / len_cut;
        }
        out
    }

    fn check_band(&self, state: &CurveState) -> Result<(), FlowError> {
        let (lo, hi) = state
            .kappa
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
                (lo.min(k), hi.max(k))
            });
        if lo < 1.0 / self.cutoff.level || hi > self.cutoff.level {
            return Err(FlowError::CutoffExit {
                t: state.t,
                kappa_min: lo,
                kappa_max: hi,
            });
        }
        Ok(())
    }

    fn check_budget(&self, kappa: &[f64], dt: f64) -> Result<(), FlowError> {
        let dth = 2.0 * PI / kappa.len() as f64;
        let amax = kappa
            .iter()
            .map(|&k| self.cutoff.chi(k).powi(2))
            .fold(0.0f64, f64::max);
        let budget = 0.2 * dth * dth / amax;
        if dt > budget {
            return Err(FlowError::StepRejected { dt, budget });
        }
        Ok(())
    }

    /// Anchor velocity. The anchor is the point with normal angle zero; it
    /// moves with the inward normal speed V(0) plus the tangential
    /// relabeling -V_theta, which at angle zero is
    /// (V(0), V_theta(0)) = (kappa(0) - kappa_bar + c v / |gamma|,
    /// kappa_theta(0)). A stationary circle therefore keeps its anchor
    /// fixed, which is what aligns reconstructed curves with the
    /// phase-field interface.
    fn anchor_velocity(&self, kappa: &[f64], v: f64) -> Point {
        let m = kappa.len();
        let dth = 2.0 * PI / m as f64;
        let length: f64 = kappa.iter().map(|&k| 1.0 / k).sum::<f64>() * dth;
        let kappa_bar = 2.0 * PI / length;
        let ktheta = self.sp.deriv(kappa);
        [
            kappa[0] - kappa_bar + 0.5 * self.area_d * v / length,
            ktheta[0],
        ]
    }

    /// One Heun step with forcing v0 at t and v1 at t + dt.
    pub fn step_stratonovich(
        &self,
        state: &mut CurveState,
        v0: f64,
        v1: f64,
        dt: f64,
    ) -> Result<(), FlowError> {
        self.check_band(state)?;
        self.check_budget(&state.kappa, dt)?;
        let m = state.m();
        let k1 = self.drift_rhs(&state.kappa, v0);
        let a1 = self.anchor_velocity(&state.kappa, v0);
        let mut mid = vec![0.0; m];
        for j in 0..m {
            mid[j] = state.kappa[j] + dt * k1[j];
        }
        let k2 = self.drift_rhs(&mid, v1);
        let a2 = self.anchor_velocity(&mid, v1);
        for j in 0..m {
            state.kappa[j] += 0.5 * dt * (k1[j] + k2[j]);
        }
        state.anchor[0] += 0.5 * dt * (a1[0] + a2[0]);
        state.anchor[1] += 0.5 * dt * (a1[1] + a2[1]);
        state.t += dt;
        self.check_band(state)
    }

    /// Quadratic-variation drift of the Ito form at the given curvature;
    /// vanishes when alpha = 0.
    pub fn ito_correction(&self, kappa: &[f64], alpha: f64) -> Vec<f64> {
        let m = kappa.len();
        let dth = 2.0 * PI / m as f64;
        let (chi, chi2, len_cut) = self.cut_forms(kappa);
        let ca = 0.5 * self.area_d * alpha;
        let h: Vec<f64> = chi2.iter().map(|&c2| ca * c2 / len_cut).collect();
        let mut nonlocal = 0.0;
        for j in 0..m {
            nonlocal += self.cutoff.chi_prime(kappa[j]) * h[j] / chi2[j];
        }
        nonlocal *= dth;
        (0..m)
            .map(|j| {
                let cp = self.cutoff.chi_prime(kappa[j]);
                ca / len_cut * chi[j] * cp * h[j]
                    + ca / (2.0 * len_cut * len_cut) * chi2[j] * nonlocal
            })
            .collect()
    }

    /// One Euler-Maruyama step of the Ito form driven by a true Brownian
    /// increment dw ~ Normal(0, dt).
    pub fn step_ito(
        &self,
        state: &mut CurveState,
        alpha: f64,
        dw: f64,
        dt: f64,
    ) -> Result<(), FlowError> {
        self.check_band(state)?;
        self.check_budget(&state.kappa, dt)?;
        let m = state.m();
        let drift = self.drift_rhs(&state.kappa, 0.0);
        let g = self.ito_correction(&state.kappa, alpha);
        let (_, chi2, len_cut) = self.cut_forms(&state.kappa);
        let ca = 0.5 * self.area_d * alpha;
        for j in 0..m {
            let h = ca * chi2[j] / len_cut;
            state.kappa[j] += dt * (drift[j] + g[j]) + h * dw;
        }
        state.t += dt;
        self.check_band(state)
    }
}

/// Sampled trajectory of a flow run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub m: usize,
    /// Spacing of stored samples.
    pub dt: f64,
    pub area_d: f64,
    pub alpha: f64,
    pub times: Vec<f64>,
    pub kappas: Vec<Vec<f64>>,
    pub anchors: Vec<Point>,
    /// Forcing value v = alpha * dw/dt at each sample.
    pub vs: Vec<f64>,
    /// Driving path value w at each sample.
    pub ws: Vec<f64>,
    pub lengths: Vec<f64>,
    pub areas: Vec<f64>,
}

/// Evolve with Heun under the smooth noise path; samples are stored every
/// `store_every` steps (the initial state always is).
pub fn run_stratonovich(
    engine: &FlowEngine,
    state0: &CurveState,
    path: &NoisePath,
    alpha: f64,
    t_end: f64,
    dt: f64,
    store_every: usize,
) -> Result<Trajectory, FlowError> {
    let stride_f = dt / path.dt;
    let stride = stride_f.round() as usize;
    if stride == 0 || (stride_f - stride as f64).abs() > 1e-9 * stride_f {
        return Err(FlowError::PathMismatch(format!(
            "dt = {dt} is not a multiple of the path resolution {}",
            path.dt
        )));
    }
    let n_steps = (t_end / dt).round() as usize;
    if n_steps * stride + 1 > path.len() {
        return Err(FlowError::PathMismatch(format!(
            "path covers {} samples, run needs {}",
            path.len(),
            n_steps * stride + 1
        )));
    }
    let mut state = state0.clone();
    let mut traj = Trajectory {
        m: state.m(),
        dt: dt * store_every as f64,
        area_d: engine.area_d,
        alpha,
        times: Vec::new(),
        kappas: Vec::new(),
        anchors: Vec::new(),
        vs: Vec::new(),
        ws: Vec::new(),
        lengths: Vec::new(),
        areas: Vec::new(),
    };
    store_sample(engine, &mut traj, &state, alpha * path.wdot(0), path.w[0])?;
    for n in 0..n_steps {
        let i0 = n * stride;
        let i1 = (n + 1) * stride;
        let v0 = alpha * path.wdot(i0);
        let v1 = alpha * path.wdot(i1);
        engine.step_stratonovich(&mut state, v0, v1, dt)?;
        if (n + 1) % store_every == 0 || n + 1 == n_steps {
            store_sample(engine, &mut traj, &state, v1, path.w[i1])?;
        }
    }
    Ok(traj)
}

fn store_sample(
    engine: &FlowEngine,
    traj: &mut Trajectory,
    state: &CurveState,
    v: f64,
    w: f64,
) -> Result<(), FlowError> {
    let geo = geometry(state, &engine.sp)?;
    traj.times.push(state.t);
    traj.kappas.push(state.kappa.clone());
    traj.anchors.push(state.anchor);
    traj.vs.push(v);
    traj.ws.push(w);
    traj.lengths.push(geo.length);
    traj.areas.push(geo.area);
    Ok(())
}

/// sup_t |A(t) - A(0) + (alpha |D| / 2)(w(t) - w(0))| along a trajectory:
/// the curvature terms integrate to zero around a closed curve, so the
/// enclosed area moves exactly with the driving path.
pub fn area_identity_check(traj: &Trajectory) -> f64 {
    let a0 = traj.areas[0];
    let w0 = traj.ws[0];
    let c = 0.5 * traj.area_d * traj.alpha;
    traj.areas
        .iter()
        .zip(traj.ws.iter())
        .fold(0.0f64, |acc, (&a, &w)| {
            acc.max((a - a0 + c * (w - w0)).abs())
        })
}
