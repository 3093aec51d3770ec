//! Mass-conserving bistable phase field on the square [0, L]^2 with mirror
//! (Neumann) boundaries.
//!
//! One step treats diffusion implicitly in the cosine basis and the
//! mean-subtracted reaction plus forcing explicitly. Both the subtracted
//! average and the mirrored Laplacian have exactly zero discrete mean, so
//! the mean of the field advances by exactly v*dt per step: the discrete
//! form of the stochastic mass law.

use crate::geom::{signed_distance, Point};
use crate::noise::NoisePath;
use crate::profile::WaveProfile;
use crate::reaction::Bistable;
use crate::spectral::NeumannSolver;
use std::fmt;

#[derive(Debug, Clone)]
pub struct PhaseField {
    pub n: usize,
    pub l: f64,
    pub dx: f64,
    pub eps: f64,
    pub t: f64,
    pub alpha: f64,
    /// Cell-centered values, row-major: u[iy * n + ix].
    pub u: Vec<f64>,
    /// Initial mean (the conserved constant when alpha = 0).
    pub mass0: f64,
}

impl PhaseField {
    pub fn mean(&self) -> f64 {
        self.u.iter().sum::<f64>() / (self.n * self.n) as f64
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point {
        [(ix as f64 + 0.5) * self.dx, (iy as f64 + 0.5) * self.dx]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LedgerSample {
    pub t: f64,
    pub mean_u: f64,
    pub alpha_w: f64,
    pub residual: f64,
}

/// Time series of the stochastic mass law mean_u(t) = mass0 + alpha*w(t).
#[derive(Debug, Clone, Default)]
pub struct MassLedger {
    pub samples: Vec<LedgerSample>,
}

impl MassLedger {
    pub fn max_residual(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0f64, |acc, s| acc.max(s.residual.abs()))
    }
}

#[derive(Debug)]
pub enum AcError {
    CurveTooCloseToBoundary { clearance: f64, required: f64 },
    SolverDiverged { t: f64 },
    FieldBlowup { t: f64, max_abs: f64 },
    NoInterface,
    GridMismatch(String),
}

impl fmt::Display for AcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcError::CurveTooCloseToBoundary { clearance, required } => {
                write!(f, "curve clearance {clearance} below required {required}")
            }
            AcError::SolverDiverged { t } => write!(f, "solver diverged at t = {t}"),
            AcError::FieldBlowup { t, max_abs } => {
                write!(f, "field reached |u| = {max_abs} at t = {t}")
            }
            AcError::NoInterface => write!(f, "field has no sign change"),
            AcError::GridMismatch(s) => write!(f, "grid mismatch: {s}"),
        }
    }
}

impl std::error::Error for AcError {}

/// Largest reaction-stable step: 0.2 eps^2 / max |f'| over the phase range.
pub fn reaction_dt_budget(b: &Bistable, eps: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..=400 {
        let u = -1.0 + 2.0 * i as f64 / 400.0;
        worst = worst.max(b.df(u).abs());
    }
    0.2 * eps * eps / worst
}

/// Phase field from a closed curve: u = m(d/eps) with d the signed distance
/// (negative inside). The curve must keep 3*delta clearance from the walls.
pub fn init_from_curve(
    curve: &[Point],
    m: &WaveProfile,
    eps: f64,
    n: usize,
    l: f64,
    delta: f64,
    alpha: f64,
) -> Result<PhaseField, AcError> {
    assert!(eps > 0.0 && n >= 16);
    let mut clearance = f64::INFINITY;
    for p in curve {
        let d = p[0].min(p[1]).min(l - p[0]).min(l - p[1]);
        clearance = clearance.min(d);
    }
    if clearance < 3.0 * delta {
        return Err(AcError::CurveTooCloseToBoundary {
            clearance,
            required: 3.0 * delta,
        });
    }
    let dx = l / n as f64;
    let mut u = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let p = [(ix as f64 + 0.5) * dx, (iy as f64 + 0.5) * dx];
            let d = signed_distance(p, curve);
            u[iy * n + ix] = m.eval(d / eps);
        }
    }
    let mass0 = u.iter().sum::<f64>() / (n * n) as f64;
    Ok(PhaseField {
        n,
        l,
        dx,
        eps,
        t: 0.0,
        alpha,
        u,
        mass0,
    })
}

/// Mean reaction value scaled by 1/eps.
pub fn lambda_eps(field: &PhaseField, b: &Bistable) -> f64 {
    let n2 = (field.n * field.n) as f64;
    let mean_f = field.u.iter().map(|&v| b.f(v)).sum::<f64>() / n2;
    mean_f / field.eps
}

/// Discrete free energy sum( |grad u|^2/2 + V(u)/eps^2 ) dx^2 with the
/// gradient on interior faces.
pub fn energy(field: &PhaseField, v_of_u: &dyn Fn(f64) -> f64) -> f64 {
    let n = field.n;
    let dx = field.dx;
    let mut grad = 0.0;
    for iy in 0..n {
        for ix in 0..n - 1 {
            let d = (field.u[iy * n + ix + 1] - field.u[iy * n + ix]) / dx;
            grad += d * d;
        }
    }
    for iy in 0..n - 1 {
        for ix in 0..n {
            let d = (field.u[(iy + 1) * n + ix] - field.u[iy * n + ix]) / dx;
            grad += d * d;
        }
    }
    let mut pot = 0.0;
    for &v in &field.u {
        pot += v_of_u(v);
    }
    (0.5 * grad + pot / (field.eps * field.eps)) * dx * dx
}

/// Reusable stepper holding the cosine-basis solver for one grid size.
pub struct AcStepper {
    solver: NeumannSolver,
    n: usize,
    scratch: Vec<f64>,
}

impl AcStepper {
    pub fn new(n: usize, l: f64) -> AcStepper {
        AcStepper {
            solver: NeumannSolver::new(n, l / n as f64),
            n,
            scratch: vec![0.0; n * n],
        }
    }

    /// One IMEX step with forcing value `v` held over the step.
    pub fn step(
        &mut self,
        field: &mut PhaseField,
        b: &Bistable,
        v: f64,
        dt: f64,
    ) -> Result<(), AcError> {
        if field.n != self.n {
            return Err(AcError::GridMismatch(format!(
                "stepper built for n = {}, field has n = {}",
                self.n, field.n
            )));
        }
        let n2 = self.n * self.n;
        let inv_eps2 = 1.0 / (field.eps * field.eps);
        let mut mean_f = 0.0;
        for (dst, &u) in self.scratch.iter_mut().zip(field.u.iter()) {
            let fu = b.f(u);
            *dst = fu;
            mean_f += fu;
        }
        mean_f /= n2 as f64;
        for (dst, &u) in self.scratch.iter_mut().zip(field.u.iter()) {
            *dst = u + dt * (inv_eps2 * (*dst - mean_f) + v);
        }
        self.solver.solve_identity_minus(&mut self.scratch, dt);
        std::mem::swap(&mut field.u, &mut self.scratch);
        field.t += dt;

        let mut max_abs = 0.0f64;
        for &u in &field.u {
            if !u.is_finite() {
                return Err(AcError::SolverDiverged { t: field.t });
            }
            max_abs = max_abs.max(u.abs());
        }
        if max_abs > 2.0 {
            return Err(AcError::FieldBlowup {
                t: field.t,
                max_abs,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub ledger: MassLedger,
    pub snapshots: Vec<Snapshot>,
}

/// Sampling strides for `run`.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Ledger sampling stride in steps.
    pub ledger_every: usize,
    /// Snapshot stride in steps (None: no snapshots).
    pub snapshot_every: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            ledger_every: 1,
            snapshot_every: None,
        }
    }
}

/// Evolve the field to `t_end`, forcing each step with the exact increment
/// of alpha * w over the step, so the ledger residual stays at solver
/// tolerance. `dt` must be an integer multiple of the path resolution.
pub fn run(
    field: &mut PhaseField,
    b: &Bistable,
    path: &NoisePath,
    t_end: f64,
    dt: f64,
    opts: RunOptions,
) -> Result<RunOutput, AcError> {
    let stride_f = dt / path.dt;
    let stride = stride_f.round() as usize;
    if stride == 0 || (stride_f - stride as f64).abs() > 1e-9 * stride_f {
        return Err(AcError::GridMismatch(format!(
            "dt = {dt} is not a multiple of the path resolution {}",
            path.dt
        )));
    }
    let n_steps = (t_end / dt).round() as usize;
    if n_steps * stride + 1 > path.len() {
        return Err(AcError::GridMismatch(format!(
            "path covers {} samples, run needs {}",
            path.len(),
            n_steps * stride + 1
        )));
    }
    let mut stepper = AcStepper::new(field.n, field.l);
    let mut out = RunOutput::default();
    let w0 = path.w[0];
    push_ledger(&mut out.ledger, field, field.alpha * (path.w[0] - w0));
    for step_idx in 0..n_steps {
        let i0 = step_idx * stride;
        let i1 = (step_idx + 1) * stride;
        let v = field.alpha * path.increment(i0, i1) / dt;
        stepper.step(field, b, v, dt)?;
        if (step_idx + 1) % opts.ledger_every == 0 || step_idx + 1 == n_steps {
            push_ledger(&mut out.ledger, field, field.alpha * (path.w[i1] - w0));
        }
        if let Some(every) = opts.snapshot_every {
            if (step_idx + 1) % every == 0 {
                out.snapshots.push(Snapshot {
                    t: field.t,
                    u: field.u.clone(),
                });
            }
        }
    }
    Ok(out)
}

fn push_ledger(ledger: &mut MassLedger, field: &PhaseField, alpha_w: f64) {
    let mean_u = field.mean();
    ledger.samples.push(LedgerSample {
        t: field.t,
        mean_u,
        alpha_w,
        residual: mean_u - field.mass0 - alpha_w,
    });
}

// ---------------------------------------------------------------------------
// Zero-level extraction: marching squares over the dual grid of cell centers.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeId {
    H(usize, usize),
    V(usize, usize),
}

/// Ordered closed polylines of the zero level set of `field`.
pub fn extract_zero_level(field: &PhaseField) -> Result<Vec<Vec<Point>>, AcError> {
    let n = field.n;
    let u = &field.u;
    let has_pos = u.iter().any(|&v| v > 0.0);
    let has_neg = u.iter().any(|&v| v < 0.0);
    if !has_pos || !has_neg {
        return Err(AcError::NoInterface);
    }
    let at = |ix: usize, iy: usize| u[iy * n + ix];
    let pos = |ix: usize, iy: usize| at(ix, iy) > 0.0;
    let vertex = |ea: (usize, usize), eb: (usize, usize)| -> Point {
        let va = at(ea.0, ea.1);
        let vb = at(eb.0, eb.1);
        let t = va / (va - vb);
        let pa = field.cell_center(ea.0, ea.1);
        let pb = field.cell_center(eb.0, eb.1);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    // Segments between crossing edges of each dual cell.
    let mut segments: Vec<(EdgeId, EdgeId, Point, Point)> = Vec::new();
    for iy in 0..n - 1 {
        for ix in 0..n - 1 {
            let p00 = pos(ix, iy);
            let p10 = pos(ix + 1, iy);
            let p01 = pos(ix, iy + 1);
            let p11 = pos(ix + 1, iy + 1);
            let code = (p00 as u8) | (p10 as u8) << 1 | (p11 as u8) << 2 | (p01 as u8) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            let bottom = (EdgeId::H(ix, iy), (ix, iy), (ix + 1, iy));
            let top = (EdgeId::H(ix, iy + 1), (ix, iy + 1), (ix + 1, iy + 1));
            let left = (EdgeId::V(ix, iy), (ix, iy), (ix, iy + 1));
            let right = (EdgeId::V(ix + 1, iy), (ix + 1, iy), (ix + 1, iy + 1));
            let mut push = |a: &(EdgeId, (usize, usize), (usize, usize)),
                            b: &(EdgeId, (usize, usize), (usize, usize))| {
                segments.push((a.0, b.0, vertex(a.1, a.2), vertex(b.1, b.2)));
            };
            match code {
                1 | 14 => push(&left, &bottom),
                2 | 13 => push(&bottom, &right),
                4 | 11 => push(&right, &top),
                8 | 7 => push(&top, &left),
                3 | 12 => push(&left, &right),
                6 | 9 => push(&bottom, &top),
                5 | 10 => {
                    // Saddle: the center average picks the pairing.
                    let center =
                        0.25 * (at(ix, iy) + at(ix + 1, iy) + at(ix, iy + 1) + at(ix + 1, iy + 1));
                    let center_pos = center > 0.0;
                    if (code == 5) == center_pos {
                        push(&left, &top);
                        push(&bottom, &right);
                    } else {
                        push(&left, &bottom);
                        push(&right, &top);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // Stitch segments into closed loops via shared edges.
    use std::collections::HashMap;
    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (i, seg) in segments.iter().enumerate() {
        by_edge.entry(seg.0).or_default().push(i);
        by_edge.entry(seg.1).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        let mut pts = Vec::new();
        let mut cur = start;
        let mut entry_edge = segments[start].0;
        loop {
            used[cur] = true;
            let (ea, _eb, pa, pb) = segments[cur];
            let (exit_edge, p_in, p_out) = if ea == entry_edge {
                (segments[cur].1, pa, pb)
            } else {
                (ea, pb, pa)
            };
            if pts.is_empty() {
                pts.push(p_in);
            }
            pts.push(p_out);
            let next = by_edge
                .get(&exit_edge)
                .and_then(|list| list.iter().find(|&&i| !used[i]).copied());
            match next {
                Some(i) => {
                    entry_edge = exit_edge;
                    cur = i;
                }
                None => break,
            }
        }
        if pts.len() >= 3 {
            // Drop the duplicated closing vertex if the loop closed cleanly.
            let first = pts[0];
            let last = *pts.last().unwrap();
            if (first[0] - last[0]).abs() < 1e-12 && (first[1] - last[1]).abs() < 1e-12 {
                pts.pop();
            }
            loops.push(pts);
        }
    }
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{mixing_noise, zero_path, NoiseConfig};
    use crate::profile::{solve_standing, DEFAULT_H, DEFAULT_R};
    use crate::reaction::make_cubic;

    fn circle(n: usize, r: f64, cx: f64, cy: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [cx + r * t.cos(), cy + r * t.sin()]
            })
            .collect()
    }

    fn profile() -> WaveProfile {
        solve_standing(&make_cubic(), DEFAULT_R, DEFAULT_H).unwrap()
    }

    #[test]
    fn init_values_and_mass() {
        let m = profile();
        let curve = circle(256, 0.25, 0.5, 0.5);
        let f = init_from_curve(&curve, &m, 0.04, 128, 1.0, 0.08, 0.0).unwrap();
        let zeta = std::f64::consts::SQRT_2;
        // Far corner is outside (distance ~ 0.45), center inside (0.25);
        // saturation follows the profile tail decay.
        let corner_d = (2.0f64.sqrt() * (0.5 - 0.5 / 128.0) - 0.25).abs();
        assert!((f.u[0] - 1.0).abs() < 10.0 * (-zeta * corner_d / 0.04).exp());
        let mid = f.n / 2;
        assert!((f.u[mid * f.n + mid] + 1.0).abs() < 10.0 * (-zeta * 0.25 / 0.04).exp());
        // Sharp-interface mass: (|D| - 2 area)/|D| with O(eps) smearing.
        let expect = 1.0 - 2.0 * std::f64::consts::PI * 0.0625;
        assert!((f.mass0 - expect).abs() < 0.05, "mass {}", f.mass0);
        // A cell sitting on the curve is near zero.
        let ix = ((0.75 / f.dx) as usize).min(f.n - 1);
        let iy = ((0.5 / f.dx) as usize).min(f.n - 1);
        assert!(f.u[iy * f.n + ix].abs() < 0.3);
    }

    #[test]
    fn init_rejects_tight_clearance() {
        let m = profile();
        let curve = circle(128, 0.45, 0.5, 0.5);
        match init_from_curve(&curve, &m, 0.04, 64, 1.0, 0.1, 0.0) {
            Err(AcError::CurveTooCloseToBoundary { .. }) => {}
            other => panic!("expected clearance error, got {other:?}"),
        }
    }

    #[test]
    fn lambda_eps_point_values() {
        let b = make_cubic();
        let mut f = PhaseField {
            n: 16,
            l: 1.0,
            dx: 1.0 / 16.0,
            eps: 0.05,
            t: 0.0,
            alpha: 0.0,
            u: vec![1.0; 256],
            mass0: 1.0,
        };
        assert_eq!(lambda_eps(&f, &b), 0.0);
        f.u = vec![0.5; 256];
        assert!((lambda_eps(&f, &b) - 0.375 / 0.05).abs() < 1e-12);
    }

    #[test]
    fn constant_field_is_equilibrium_and_mean_tracks_forcing() {
        let b = make_cubic();
        let mut f = PhaseField {
            n: 32,
            l: 1.0,
            dx: 1.0 / 32.0,
            eps: 0.1,
            t: 0.0,
            alpha: 0.0,
            u: vec![1.0; 32 * 32],
            mass0: 1.0,
        };
        let mut stepper = AcStepper::new(32, 1.0);
        let dt = 1e-4;
        stepper.step(&mut f, &b, 0.0, dt).unwrap();
        for &u in &f.u {
            assert!((u - 1.0).abs() < 1e-13);
        }
        // Forced constant field stays spatially constant, mean moves by v dt.
        let before = f.mean();
        stepper.step(&mut f, &b, 0.3, dt).unwrap();
        assert!((f.mean() - before - 0.3 * dt).abs() < 1e-13);
        let (lo, hi) = f
            .u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        assert!(hi - lo < 1e-12);
    }

    #[test]
    fn mean_drift_is_exact_per_step() {
        let b = make_cubic();
        let m = profile();
        let curve = circle(128, 0.25, 0.5, 0.5);
        let mut f = init_from_curve(&curve, &m, 0.06, 64, 1.0, 0.08, 0.5).unwrap();
        let mut stepper = AcStepper::new(64, 1.0);
        let dt = 3e-4;
        for k in 0..20 {
            let v = 0.1 * (k as f64 * 0.7).sin();
            let before = f.mean();
            stepper.step(&mut f, &b, v, dt).unwrap();
            assert!(
                (f.mean() - before - v * dt).abs() < 1e-12,
                "step {k} drift off"
            );
        }
    }

    #[test]
    fn ledger_conservation_without_noise() {
        let b = make_cubic();
        let m = profile();
        let curve = circle(128, 0.25, 0.5, 0.5);
        let mut f = init_from_curve(&curve, &m, 0.06, 64, 1.0, 0.08, 0.0).unwrap();
        let dt = reaction_dt_budget(&b, 0.06);
        let path = zero_path(0.06, dt, 1);
        let out = run(&mut f, &b, &path, 0.05, dt, RunOptions::default()).unwrap();
        assert!(out.ledger.max_residual() < 1e-10);
    }

    #[test]
    fn ledger_tracks_noise_increments() {
        let b = make_cubic();
        let m = profile();
        let curve = circle(128, 0.25, 0.5, 0.5);
        let mut f = init_from_curve(&curve, &m, 0.06, 64, 1.0, 0.08, 0.5).unwrap();
        let dt = 3.2e-4;
        let path = mixing_noise(1e-4, 0.06, dt / 4.0, 3, &NoiseConfig::default());
        let out = run(&mut f, &b, &path, 0.05, dt, RunOptions::default()).unwrap();
        assert!(
            out.ledger.max_residual() < 1e-10,
            "{}",
            out.ledger.max_residual()
        );
        // The noise really moved the mass.
        let moved = out
            .ledger
            .samples
            .iter()
            .fold(0.0f64, |acc, s| acc.max(s.alpha_w.abs()));
        assert!(moved > 1e-4, "noise displacement {moved}");
    }

    #[test]
    fn energy_decreases_without_noise() {
        let b = make_cubic();
        let m = profile();
        let curve = circle(128, 0.25, 0.5, 0.5);
        let mut f = init_from_curve(&curve, &m, 0.08, 64, 1.0, 0.08, 0.0).unwrap();
        let mut stepper = AcStepper::new(64, 1.0);
        let dt = reaction_dt_budget(&b, 0.08);
        let v = |u: f64| (1.0 - u * u) * (1.0 - u * u) / 4.0;
        let mut prev = energy(&f, &v);
        for _ in 0..200 {
            stepper.step(&mut f, &b, 0.0, dt).unwrap();
            let e = energy(&f, &v);
            assert!(
                e <= prev + 1e-9 * (1.0 + prev.abs()),
                "energy rose: {prev} -> {e}"
            );
            prev = e;
        }
    }

    #[test]
    fn extract_circle_contour() {
        let m = profile();
        let n = 128;
        let eps = 0.03;
        let mut u = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let x = (ix as f64 + 0.5) / n as f64;
                let y = (iy as f64 + 0.5) / n as f64;
                let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
                u[iy * n + ix] = m.eval((r - 0.25) / eps);
            }
        }
        let f = PhaseField {
            n,
            l: 1.0,
            dx: 1.0 / n as f64,
            eps,
            t: 0.0,
            alpha: 0.0,
            u,
            mass0: 0.0,
        };
        let loops = extract_zero_level(&f).unwrap();
        assert_eq!(loops.len(), 1);
        for p in &loops[0] {
            let r = ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt();
            assert!((r - 0.25).abs() < f.dx, "vertex off circle: r = {r}");
        }
        assert!(loops[0].len() > 60);
    }

    #[test]
    fn extract_two_nested_contours() {
        let m = profile();
        let n = 192;
        let eps = 0.02;
        let mut u = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let x = (ix as f64 + 0.5) / n as f64;
                let y = (iy as f64 + 0.5) / n as f64;
                let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
                u[iy * n + ix] = m.eval(((r - 0.3).abs() - 0.1) / eps);
            }
        }
        let f = PhaseField {
            n,
            l: 1.0,
            dx: 1.0 / n as f64,
            eps,
            t: 0.0,
            alpha: 0.0,
            u,
            mass0: 0.0,
        };
        let loops = extract_zero_level(&f).unwrap();
        assert_eq!(loops.len(), 2, "expected the two rings of the annulus");
    }

    #[test]
    fn extract_rejects_single_signed() {
        let f = PhaseField {
            n: 16,
            l: 1.0,
            dx: 1.0 / 16.0,
            eps: 0.1,
            t: 0.0,
            alpha: 0.0,
            u: vec![1.0; 256],
            mass0: 1.0,
        };
        assert!(matches!(extract_zero_level(&f), Err(AcError::NoInterface)));
    }

    #[test]
    fn lambda_eps_settles_to_limit_rate() {
        // From bare circle data the mean reaction starts at the O(eps)
        // geometric value (the leading layer integral vanishes) and settles
        // to the limit rate 1/(sigma R) once the layer relaxes, a transient
        // of a few eps^2.
        let b = make_cubic();
        let m = profile();
        let (sigma, _) = crate::profile::sigma_bar(&b, &m);
        let eps = 0.02;
        let r = 0.25;
        let curve = circle(512, r, 0.5, 0.5);
        let mut f = init_from_curve(&curve, &m, eps, 256, 1.0, 0.08, 0.0).unwrap();
        let expect = 1.0 / (sigma * r);
        let at_init = lambda_eps(&f, &b);
        assert!(at_init.abs() < 0.5 * expect, "bare data rate {at_init}");
        let dt = reaction_dt_budget(&b, eps);
        let t_end = 5e-3;
        let path = zero_path(t_end + 2.0 * dt, dt, 1);
        run(&mut f, &b, &path, t_end, dt, RunOptions::default()).unwrap();
        let settled = lambda_eps(&f, &b);
        assert!(
            (settled - expect).abs() <= 0.2 * expect,
            "lambda_eps {settled} vs limit {expect}"
        );
    }

    #[test]
    fn circle_radius_steady_without_noise() {
        let b = make_cubic();
        let m = profile();
        let curve = circle(256, 0.25, 0.5, 0.5);
        let eps = 0.06;
        let mut f = init_from_curve(&curve, &m, eps, 96, 1.0, 0.08, 0.0).unwrap();
        let r0 = mean_radius(&f);
        let dt = reaction_dt_budget(&b, eps);
        let path = zero_path(0.06, dt, 1);
        run(&mut f, &b, &path, 0.05, dt, RunOptions::default()).unwrap();
        let r1 = mean_radius(&f);
        assert!((r1 - r0).abs() <= eps + f.dx, "radius drifted {r0} -> {r1}");
    }

    fn mean_radius(f: &PhaseField) -> f64 {
        let loops = extract_zero_level(f).unwrap();
        let main = loops.iter().max_by_key(|l| l.len()).unwrap();
        main.iter()
            .map(|p| ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt())
            .sum::<f64>()
            / main.len() as f64
    }
}
