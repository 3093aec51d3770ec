//! Experiment front-end: content-addressed noise cache, the coupled
//! phase-field / limit-flow convergence study, and CSV / raster reporting.

use crate::acpde::{self, AcError, PhaseField, RunOptions};
use crate::expansion;
use crate::geom::{self, Point};
use crate::limitflow::{
    self, geometry, reconstruct, CurveState, Cutoff, FlowEngine, FlowError, Trajectory,
};
use crate::noise::{self, BmRecord, NoiseConfig, NoiseFamily, NoisePath, PsiVariant};
use crate::profile::{sigma_bar, solve_standing, solve_theta1, WaveProfile, DEFAULT_H, DEFAULT_R};
use crate::reaction::{make_cubic, Bistable};
use crate::spectral::PeriodicSpectral;
use rayon::prelude::*;
use std::fmt;
use std::fs;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum HarnessError {
    CacheMiss(PathBuf),
    ChecksumMismatch(PathBuf),
    Malformed(String),
    Io(std::io::Error),
    Ac(AcError),
    Flow(FlowError),
    Config(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::CacheMiss(p) => write!(f, "cache miss: {}", p.display()),
            HarnessError::ChecksumMismatch(p) => {
                write!(f, "checksum mismatch: {}", p.display())
            }
            HarnessError::Malformed(s) => write!(f, "malformed cache entry: {s}"),
            HarnessError::Io(e) => write!(f, "io error: {e}"),
            HarnessError::Ac(e) => write!(f, "phase field: {e}"),
            HarnessError::Flow(e) => write!(f, "limit flow: {e}"),
            HarnessError::Config(s) => write!(f, "bad config: {s}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

// ---------------------------------------------------------------------------
// Binary cache with checksums. Paths are content-addressed by their key.

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

struct ByteSink(Vec<u8>);

impl ByteSink {
    fn new(magic: &[u8; 4]) -> ByteSink {
        ByteSink(magic.to_vec())
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn slice(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.f64(x);
        }
    }
    fn finish(mut self) -> Vec<u8> {
        let sum = fnv1a(&self.0);
        self.u64(sum);
        self.0
    }
}

struct ByteSource<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteSource<'a> {
    fn open(data: &'a [u8], magic: &[u8; 4], from: &Path) -> Result<ByteSource<'a>, HarnessError> {
        if data.len() < 12 || &data[..4] != magic {
            return Err(HarnessError::Malformed(format!(
                "{}: bad magic",
                from.display()
            )));
        }
        let body = &data[..data.len() - 8];
        let stored = u64::from_le_bytes(data[data.len() - 8..].try_into().unwrap());
        if fnv1a(body) != stored {
            return Err(HarnessError::ChecksumMismatch(from.to_path_buf()));
        }
        Ok(ByteSource { data: body, pos: 4 })
    }
    fn u64(&mut self) -> Result<u64, HarnessError> {
        if self.pos + 8 > self.data.len() {
            return Err(HarnessError::Malformed("truncated".into()));
        }
        let v = u64::from_le_bytes(self.data[self.pos..self.pos + 8].try_into().unwrap());
        self.pos += 8;
        Ok(v)
    }
    fn f64(&mut self) -> Result<f64, HarnessError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn slice(&mut self) -> Result<Vec<f64>, HarnessError> {
        let n = self.u64()? as usize;
        if n > (1 << 32) {
            return Err(HarnessError::Malformed("oversized slice".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Cache key for one noise realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseKey {
    pub family: NoiseFamily,
    pub eps: f64,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub cfg: NoiseConfig,
}

impl NoiseKey {
    fn file_name(&self) -> String {
        let tag = match self.family {
            NoiseFamily::MollifiedBm => "mbm",
            NoiseFamily::Mixing => "mix",
        };
        let variant = match self.cfg.psi_variant {
            PsiVariant::Safe => "s",
            PsiVariant::Raw => "r",
        };
        let key = format!(
            "{tag}-{:e}-{:e}-{:e}-{}-{}-{}-{}-{variant}",
            self.eps, self.t_end, self.dt, self.seed, self.cfg.beta_tilde, self.cfg.n1,
            self.cfg.k_max
        );
        format!("{tag}-{:016x}.noise", fnv1a(key.as_bytes()))
    }
}

/// Store a path (atomic write: temp file then rename).
pub fn cache_noise(dir: &Path, key: &NoiseKey, path: &NoisePath) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut sink = ByteSink::new(b"MCN1");
    sink.u64(match path.family {
        NoiseFamily::MollifiedBm => 0,
        NoiseFamily::Mixing => 1,
    });
    sink.f64(path.eps);
    sink.u64(path.seed);
    sink.f64(path.dt);
    sink.f64(path.psi);
    sink.f64(path.h_eps);
    sink.slice(&path.t);
    sink.slice(&path.w);
    sink.u64(path.derivs.len() as u64);
    for d in &path.derivs {
        sink.slice(d);
    }
    match &path.underlying_bm {
        Some(rec) => {
            sink.u64(1);
            sink.f64(rec.dt);
            sink.slice(&rec.raw);
            sink.u64(match rec.stop_index {
                Some(i) => i as u64 + 1,
                None => 0,
            });
            sink.f64(rec.stop_sign);
        }
        None => sink.u64(0),
    }
    let bytes = sink.finish();
    let target = dir.join(key.file_name());
    let tmp = dir.join(format!("{}.tmp-{}", key.file_name(), std::process::id()));
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, &target)?;
    Ok(target)
}

/// Load a previously cached path.
pub fn load_noise(dir: &Path, key: &NoiseKey) -> Result<NoisePath, HarnessError> {
    let target = dir.join(key.file_name());
    let data = match fs::read(&target) {
        Ok(d) => d,
        Err(_) => return Err(HarnessError::CacheMiss(target)),
    };
    let mut src = ByteSource::open(&data, b"MCN1", &target)?;
    let family = match src.u64()? {
        0 => NoiseFamily::MollifiedBm,
        1 => NoiseFamily::Mixing,
        other => {
            return Err(HarnessError::Malformed(format!("family tag {other}")));
        }
    };
    let eps = src.f64()?;
    let seed = src.u64()?;
    let dt = src.f64()?;
    let psi = src.f64()?;
    let h_eps = src.f64()?;
    let t = src.slice()?;
    let w = src.slice()?;
    let n_derivs = src.u64()? as usize;
    let mut derivs = Vec::with_capacity(n_derivs);
    for _ in 0..n_derivs {
        derivs.push(src.slice()?);
    }
    let underlying_bm = if src.u64()? == 1 {
        let bdt = src.f64()?;
        let raw = src.slice()?;
        let stop = src.u64()?;
        let stop_sign = src.f64()?;
        Some(BmRecord {
            dt: bdt,
            raw,
            stop_index: if stop == 0 { None } else { Some(stop as usize - 1) },
            stop_sign,
        })
    } else {
        None
    };
    Ok(NoisePath {
        family,
        eps,
        seed,
        dt,
        t,
        w,
        derivs,
        psi,
        h_eps,
        underlying_bm,
    })
}

/// Fetch from the cache or generate and store.
pub fn noise_cached(dir: &Path, key: &NoiseKey) -> Result<NoisePath, HarnessError> {
    match load_noise(dir, key) {
        Ok(p) => Ok(p),
        Err(HarnessError::CacheMiss(_)) => {
            let p = noise::generate(key.family, key.eps, key.t_end, key.dt, key.seed, &key.cfg);
            cache_noise(dir, key, &p)?;
            Ok(p)
        }
        Err(e) => Err(e),
    }
}

/// Store a flow trajectory for the expansion stage.
pub fn cache_trajectory(path: &Path, traj: &Trajectory) -> Result<(), HarnessError> {
    let mut sink = ByteSink::new(b"MCT1");
    sink.u64(traj.m as u64);
    sink.f64(traj.dt);
    sink.f64(traj.area_d);
    sink.f64(traj.alpha);
    sink.slice(&traj.times);
    sink.u64(traj.kappas.len() as u64);
    for k in &traj.kappas {
        sink.slice(k);
    }
    let ax: Vec<f64> = traj.anchors.iter().map(|a| a[0]).collect();
    let ay: Vec<f64> = traj.anchors.iter().map(|a| a[1]).collect();
    sink.slice(&ax);
    sink.slice(&ay);
    sink.slice(&traj.vs);
    sink.slice(&traj.ws);
    sink.slice(&traj.lengths);
    sink.slice(&traj.areas);
    let bytes = sink.finish();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, HarnessError> {
    let data = fs::read(path).map_err(|_| HarnessError::CacheMiss(path.to_path_buf()))?;
    let mut src = ByteSource::open(&data, b"MCT1", path)?;
    let m = src.u64()? as usize;
    let dt = src.f64()?;
    let area_d = src.f64()?;
    let alpha = src.f64()?;
    let times = src.slice()?;
    let nk = src.u64()? as usize;
    let mut kappas = Vec::with_capacity(nk);
    for _ in 0..nk {
        kappas.push(src.slice()?);
    }
    let ax = src.slice()?;
    let ay = src.slice()?;
    let anchors = ax
        .iter()
        .zip(ay.iter())
        .map(|(&x, &y)| [x, y])
        .collect();
    Ok(Trajectory {
        m,
        dt,
        area_d,
        alpha,
        times,
        kappas,
        anchors,
        vs: src.slice()?,
        ws: src.slice()?,
        lengths: src.slice()?,
        areas: src.slice()?,
    })
}

// ---------------------------------------------------------------------------
// Convergence study: phase field and limit flow on the same realization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Circle { r: f64 },
    Ellipse { a: f64, b: f64 },
}

impl Shape {
    pub fn curve(&self, m: usize, center: Point) -> CurveState {
        match *self {
            Shape::Circle { r } => CurveState::circle(m, r, center),
            Shape::Ellipse { a, b } => CurveState::ellipse(m, a, b, center),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Strictly decreasing interface widths.
    pub eps_list: Vec<f64>,
    /// Matched grid sizes, one per eps.
    pub n_per_eps: Vec<usize>,
    pub alpha: f64,
    pub family: NoiseFamily,
    pub noise: NoiseConfig,
    pub seeds: Vec<u64>,
    pub l: f64,
    pub shape: Shape,
    pub t_end: f64,
    /// Interface clearance parameter; the curve must stay 3*delta from walls.
    pub delta: f64,
    pub m_flow: usize,
    pub cutoff_level: f64,
    /// Target number of comparison samples over [0, t_end].
    pub samples: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            eps_list: vec![0.08, 0.04, 0.02],
            n_per_eps: vec![128, 256, 512],
            alpha: 0.5,
            family: NoiseFamily::Mixing,
            noise: NoiseConfig {
                k_max: 1,
                ..NoiseConfig::default()
            },
            seeds: (1..=8).collect(),
            l: 1.0,
            shape: Shape::Circle { r: 0.25 },
            t_end: 0.05,
            delta: 0.05,
            m_flow: 256,
            cutoff_level: 12.0,
            samples: 10,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.eps_list.len() != self.n_per_eps.len() {
            return Err(HarnessError::Config(
                "eps_list and n_per_eps lengths differ".into(),
            ));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(HarnessError::Config("eps_list must strictly decrease".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("need at least one seed".into()));
        }
        Ok(())
    }

    /// Parse a flat key = value text (comments with '#'), applied on top of
    /// the defaults; `overrides` are extra pairs of the same syntax.
    pub fn from_kv(text: &str, overrides: &[(String, String)]) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        let mut apply = |key: &str, value: &str| -> Result<(), HarnessError> {
            let bad = |what: &str| HarnessError::Config(format!("bad {what}: {value}"));
            match key {
                "eps_list" => {
                    cfg.eps_list = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("eps_list"))?;
                }
                "n_per_eps" => {
                    cfg.n_per_eps = value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("n_per_eps"))?;
                }
                "alpha" => cfg.alpha = value.parse().map_err(|_| bad("alpha"))?,
                "family" => {
                    cfg.family = match value {
                        "mollified" | "mollified_bm" => NoiseFamily::MollifiedBm,
                        "mixing" => NoiseFamily::Mixing,
                        _ => return Err(bad("family")),
                    };
                }
                "seeds" => {
                    cfg.seeds = value
                        .split(',')
                        .map(|s| s.trim().parse::<u64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("seeds"))?;
                }
                "L" | "l" => cfg.l = value.parse().map_err(|_| bad("L"))?,
                "shape" => {
                    cfg.shape = parse_shape(value).ok_or_else(|| bad("shape"))?;
                }
                "T" | "t_end" => cfg.t_end = value.parse().map_err(|_| bad("T"))?,
                "delta" => cfg.delta = value.parse().map_err(|_| bad("delta"))?,
                "m_flow" => cfg.m_flow = value.parse().map_err(|_| bad("m_flow"))?,
                "cutoff" => cfg.cutoff_level = value.parse().map_err(|_| bad("cutoff"))?,
                "samples" => cfg.samples = value.parse().map_err(|_| bad("samples"))?,
                "beta_tilde" => {
                    cfg.noise.beta_tilde = value.parse().map_err(|_| bad("beta_tilde"))?
                }
                "out" => cfg.out_dir = Some(PathBuf::from(value)),
                other => {
                    return Err(HarnessError::Config(format!("unknown key {other}")));
                }
            }
            Ok(())
        };
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("expected key = value: {line}")))?;
            apply(k.trim(), v.trim())?;
        }
        for (k, v) in overrides {
            apply(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_shape(value: &str) -> Option<Shape> {
    let (kind, params) = value.split_once(':')?;
    let nums: Vec<f64> = params
        .split(',')
        .map(|s| s.trim().parse::<f64>().ok())
        .collect::<Option<_>>()?;
    match (kind.trim(), nums.as_slice()) {
        ("circle", [r]) => Some(Shape::Circle { r: *r }),
        ("ellipse", [a, b]) => Some(Shape::Ellipse { a: *a, b: *b }),
        _ => None,
    }
}

/// One (eps, seed) cell of the study.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub eps: f64,
    pub n: usize,
    pub seed: u64,
    pub max_ledger_residual: f64,
    /// (t, Hausdorff distance) at the shared sample times.
    pub hausdorff: Vec<(f64, f64)>,
    pub sup_hausdorff: f64,
    /// L2 distance between the field and the sharp indicator at t_end.
    pub l2_final: f64,
    pub max_area_residual: f64,
    /// Max over samples of |(1 - 2 A / |D|) - mean_u|: the two mass ledgers.
    pub mass_cross_check: f64,
    pub stopped_at: Option<f64>,
    pub wall_ms: u128,
}

#[derive(Debug)]
pub struct ConvergeOutcome {
    pub records: Vec<RunRecord>,
    /// (eps, median over seeds of sup_t Hausdorff), ordered as eps_list.
    pub medians: Vec<(f64, f64)>,
    pub monotone: bool,
    pub any_stopped: bool,
}

/// Run the full study: for each eps and seed, drive the phase field and the
/// limit flow with the same realization and compare interfaces.
pub fn converge(cfg: &ExperimentConfig) -> Result<ConvergeOutcome, HarnessError> {
    cfg.validate()?;
    let b = make_cubic();
    let m_profile = solve_standing(&b, DEFAULT_R, DEFAULT_H)
        .map_err(|e| HarnessError::Config(format!("profile: {e}")))?;

    let mut cells: Vec<(usize, u64)> = Vec::new();
    for eps_idx in 0..cfg.eps_list.len() {
        for &seed in &cfg.seeds {
            cells.push((eps_idx, seed));
        }
    }
    let records: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(eps_idx, seed)| converge_cell(cfg, &b, &m_profile, eps_idx, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let mut medians = Vec::new();
    for (eps_idx, &eps) in cfg.eps_list.iter().enumerate() {
        let mut sups: Vec<f64> = records
            .iter()
            .filter(|r| (r.eps - eps).abs() < 1e-12 && cfg.n_per_eps[eps_idx] == r.n)
            .map(|r| r.sup_hausdorff)
            .collect();
        sups.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if sups.is_empty() {
            f64::NAN
        } else if sups.len() % 2 == 1 {
            sups[sups.len() / 2]
        } else {
            0.5 * (sups[sups.len() / 2 - 1] + sups[sups.len() / 2])
        };
        medians.push((eps, median));
    }
    let monotone = medians.windows(2).all(|w| w[1].1 < w[0].1);
    let any_stopped = records.iter().any(|r| r.stopped_at.is_some());

    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        write_records_csv(&dir.join("records.csv"), &records)?;
        write_medians_csv(&dir.join("summary.csv"), &medians)?;
    }
    Ok(ConvergeOutcome {
        records,
        medians,
        monotone,
        any_stopped,
    })
}

fn converge_cell(
    cfg: &ExperimentConfig,
    b: &Bistable,
    m_profile: &WaveProfile,
    eps_idx: usize,
    seed: u64,
) -> Result<RunRecord, HarnessError> {
    let start = std::time::Instant::now();
    let eps = cfg.eps_list[eps_idx];
    let n = cfg.n_per_eps[eps_idx];
    let center = [0.5 * cfg.l, 0.5 * cfg.l];

    // Step sizes: the phase-field budget, subdivided for the flow, with the
    // path generated at the finest grid so both consume one realization.
    let t_end = cfg.t_end;
    let budget_pde = acpde::reaction_dt_budget(b, eps);
    let n_steps_pde = (t_end / budget_pde).ceil() as usize;
    let dt_pde = t_end / n_steps_pde as f64;
    let state0 = cfg.shape.curve(cfg.m_flow, center);
    let amax = state0
        .kappa
        .iter()
        .fold(0.0f64, |acc, &k| acc.max(k * k));
    let dth = state0.dtheta();
    let budget_flow = 0.1 * dth * dth / amax;
    let n_sub = (dt_pde / budget_flow).ceil() as usize;
    let dt_flow = dt_pde / n_sub as f64;

    let path = noise::generate(cfg.family, eps, t_end + 2.0 * dt_pde, dt_flow, seed, &cfg.noise);

    // Shared sampling stride.
    let snapshot_every = (n_steps_pde / cfg.samples).max(1);

    // Limit flow.
    let engine = FlowEngine::new(cfg.m_flow, Cutoff::new(cfg.cutoff_level), cfg.l * cfg.l);
    let flow_res = limitflow::run_stratonovich(
        &engine,
        &state0,
        &path,
        cfg.alpha,
        t_end,
        dt_flow,
        snapshot_every * n_sub,
    );
    let (traj, mut stopped_at) = match flow_res {
        Ok(t) => (t, None),
        Err(FlowError::CutoffExit { t, .. }) => {
            // Truncate the cell at the last completed sample before t.
            let t_trunc = (t / dt_pde).floor() * dt_pde - dt_pde;
            if t_trunc <= 0.0 {
                return Err(HarnessError::Flow(FlowError::CutoffExit {
                    t,
                    kappa_min: 0.0,
                    kappa_max: 0.0,
                }));
            }
            let traj = limitflow::run_stratonovich(
                &engine,
                &state0,
                &path,
                cfg.alpha,
                t_trunc,
                dt_flow,
                snapshot_every * n_sub,
            )
            .map_err(HarnessError::Flow)?;
            (traj, Some(t))
        }
        Err(e) => return Err(HarnessError::Flow(e)),
    };
    let mut t_cell = *traj.times.last().unwrap();

    // Phase field on the same realization. A blow-up truncates the cell at
    // the last completed sample, mirroring the flow-side stopping time.
    let poly0 = reconstruct(&state0, &engine.sp).map_err(HarnessError::Flow)?;
    let opts = RunOptions {
        ledger_every: snapshot_every,
        snapshot_every: Some(snapshot_every),
    };
    let mut field;
    let ac_out = loop {
        field = acpde::init_from_curve(&poly0, m_profile, eps, n, cfg.l, cfg.delta, cfg.alpha)
            .map_err(HarnessError::Ac)?;
        match acpde::run(&mut field, b, &path, t_cell, dt_pde, opts) {
            Ok(o) => break o,
            Err(AcError::FieldBlowup { t, .. }) => {
                stopped_at = Some(stopped_at.map_or(t, |s| s.min(t)));
                let sample_dt = snapshot_every as f64 * dt_pde;
                t_cell = ((t - dt_pde) / sample_dt).floor() * sample_dt;
                if t_cell <= 0.0 {
                    return Err(HarnessError::Ac(AcError::FieldBlowup { t, max_abs: 0.0 }));
                }
            }
            Err(e) => return Err(HarnessError::Ac(e)),
        }
    };

    // Compare interfaces at the shared samples; watch the remaining
    // stopping triggers (wall clearance and the tube nondegeneracy bound)
    // alongside the curvature band handled inside the stepper.
    let mut hausdorff = Vec::new();
    let mut sup_h = 0.0f64;
    let mut mass_cross = 0.0f64;
    let mut l2_final = 0.0;
    let resample_n = 1024;
    let trigger = 1.0 / cfg.cutoff_level;
    for (si, snap) in ac_out.snapshots.iter().enumerate() {
        let traj_idx = si + 1; // trajectory stores the initial state first
        if traj_idx >= traj.times.len() {
            break;
        }
        let kappa_max = traj.kappas[traj_idx]
            .iter()
            .fold(0.0f64, |acc, &k| acc.max(k));
        let tube = 1.0 - 3.0 * cfg.delta * kappa_max;
        if tube < trigger {
            stopped_at = Some(stopped_at.map_or(snap.t, |s| s.min(snap.t)));
            break;
        }
        let snap_field = PhaseField {
            n,
            l: cfg.l,
            dx: cfg.l / n as f64,
            eps,
            t: snap.t,
            alpha: cfg.alpha,
            u: snap.u.clone(),
            mass0: field.mass0,
        };
        let loops = acpde::extract_zero_level(&snap_field).map_err(HarnessError::Ac)?;
        let main_loop = loops
            .iter()
            .max_by_key(|l| l.len())
            .ok_or(HarnessError::Ac(AcError::NoInterface))?;
        let curve = CurveState {
            kappa: traj.kappas[traj_idx].clone(),
            anchor: traj.anchors[traj_idx],
            t: traj.times[traj_idx],
        };
        let flow_poly = reconstruct(&curve, &engine.sp).map_err(HarnessError::Flow)?;
        let wall = flow_poly.iter().fold(f64::INFINITY, |acc, p| {
            acc.min(p[0].min(p[1]).min(cfg.l - p[0]).min(cfg.l - p[1]))
        });
        if wall < trigger {
            stopped_at = Some(stopped_at.map_or(snap.t, |s| s.min(snap.t)));
            break;
        }
        let a = geom::resample_closed(main_loop, resample_n);
        let bpts = geom::resample_closed(&flow_poly, resample_n);
        let d = geom::hausdorff(&a, &bpts);
        hausdorff.push((snap.t, d));
        sup_h = sup_h.max(d);

        let area = traj.areas[traj_idx];
        let mean_u = snap_field.mean();
        let sharp_mass = 1.0 - 2.0 * area / (cfg.l * cfg.l);
        mass_cross = mass_cross.max((sharp_mass - mean_u).abs());

        if si + 1 == ac_out.snapshots.len() {
            l2_final = l2_against_indicator(&snap_field, &flow_poly);
        }
    }

    let max_area_residual = limitflow::area_identity_check(&traj);

    Ok(RunRecord {
        eps,
        n,
        seed,
        max_ledger_residual: ac_out.ledger.max_residual(),
        hausdorff,
        sup_hausdorff: sup_h,
        l2_final,
        max_area_residual,
        mass_cross_check: mass_cross,
        stopped_at,
        wall_ms: start.elapsed().as_millis(),
    })
}

/// L2 norm of u minus the sharp indicator (+1 outside, -1 inside the curve).
pub fn l2_against_indicator(field: &PhaseField, curve: &[Point]) -> f64 {
    let n = field.n;
    let mut sum = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let p = field.cell_center(ix, iy);
            let chi = if geom::point_in_polygon(p, curve) {
                -1.0
            } else {
                1.0
            };
            let d = field.u[iy * n + ix] - chi;
            sum += d * d;
        }
    }
    (sum * field.dx * field.dx).sqrt()
}

// ---------------------------------------------------------------------------
// Reporting.

pub fn write_records_csv(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut out = String::from(
        "eps,n,seed,sup_hausdorff,l2_final,max_ledger_residual,max_area_residual,mass_cross_check,stopped_at,wall_ms\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{:.6e},{:.6e},{:.3e},{:.3e},{:.3e},{},{}\n",
            r.eps,
            r.n,
            r.seed,
            r.sup_hausdorff,
            r.l2_final,
            r.max_ledger_residual,
            r.max_area_residual,
            r.mass_cross_check,
            r.stopped_at.map_or(String::from(""), |t| format!("{t}")),
            r.wall_ms
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_medians_csv(path: &Path, medians: &[(f64, f64)]) -> Result<(), HarnessError> {
    let mut out = String::from("eps,median_sup_hausdorff\n");
    for (eps, med) in medians {
        out.push_str(&format!("{eps},{med:.6e}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write a ledger CSV: t, mean_u, alpha_w, residual.
pub fn write_ledger_csv(path: &Path, ledger: &acpde::MassLedger) -> Result<(), HarnessError> {
    let mut out = String::from("t,mean_u,alpha_w,residual\n");
    for s in &ledger.samples {
        out.push_str(&format!(
            "{:.9},{:.12e},{:.12e},{:.3e}\n",
            s.t, s.mean_u, s.alpha_w, s.residual
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write a closed polyline CSV: t, x, y.
pub fn write_polyline_csv(path: &Path, t: f64, pts: &[Point]) -> Result<(), HarnessError> {
    let mut out = String::from("t,x,y\n");
    for p in pts {
        out.push_str(&format!("{t:.9},{:.9},{:.9}\n", p[0], p[1]));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Render the field as a binary PPM with polylines overlaid in red.
pub fn write_field_ppm(
    path: &Path,
    field: &PhaseField,
    overlays: &[Vec<Point>],
) -> Result<(), HarnessError> {
    let n = field.n;
    let mut rgb = vec![0u8; 3 * n * n];
    for iy in 0..n {
        for ix in 0..n {
            // Flip vertically so y grows upward in the image.
            let u = field.u[(n - 1 - iy) * n + ix];
            let g = (255.0 * (u + 1.2) / 2.4).clamp(0.0, 255.0) as u8;
            let at = 3 * (iy * n + ix);
            rgb[at] = g;
            rgb[at + 1] = g;
            rgb[at + 2] = g;
        }
    }
    for poly in overlays {
        let dense = geom::resample_closed(poly, 8 * n);
        for p in dense {
            let ix = (p[0] / field.dx) as isize;
            let iy = (p[1] / field.dx) as isize;
            if ix >= 0 && iy >= 0 && (ix as usize) < n && (iy as usize) < n {
                let at = 3 * ((n - 1 - iy as usize) * n + ix as usize);
                rgb[at] = 220;
                rgb[at + 1] = 30;
                rgb[at + 2] = 30;
            }
        }
    }
    let mut f = fs::File::create(path)?;
    write!(f, "P6\n{n} {n}\n255\n")?;
    f.write_all(&rgb)?;
    Ok(())
}

/// Expansion products along a cached trajectory, as CSV rows.
pub fn expansion_csv(
    traj: &Trajectory,
    bundle: &expansion::ProfileBundle,
) -> Result<String, HarnessError> {
    let sol = expansion::solve_h1(traj, bundle)
        .map_err(|e| HarnessError::Config(format!("h1 solve: {e}")))?;
    let mut out = String::from("t,lambda0,lambda1,h1_min,h1_max,theta_variance_flag\n");
    for i in 0..sol.times.len() {
        let lam0 = expansion::lambda0(
            &traj.kappas[i],
            bundle.sigma_bar,
            traj.vs[i],
            traj.area_d,
        );
        let (lo, hi) = sol.h1[i]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        out.push_str(&format!(
            "{:.9},{:.9e},{:.9e},{:.6e},{:.6e},{}\n",
            sol.times[i],
            lam0,
            sol.lambda1[i],
            lo,
            hi,
            if sol.theta_variance[i].sqrt() > 1e-6 { 1 } else { 0 }
        ));
    }
    Ok(out)
}

/// Convenience bundle of the 1-D profile objects used across stages.
pub struct ProfileLab {
    pub bistable: Bistable,
    pub standing: WaveProfile,
    pub sigma: f64,
    pub sigma_potential: f64,
    pub theta1: WaveProfile,
}

impl ProfileLab {
    pub fn cubic() -> ProfileLab {
        let bistable = make_cubic();
        let standing = solve_standing(&bistable, DEFAULT_R, DEFAULT_H).expect("standing profile");
        let (sigma, sigma_potential) = sigma_bar(&bistable, &standing);
        let theta1 = solve_theta1(&bistable, &standing, sigma).expect("corrector");
        ProfileLab {
            bistable,
            standing,
            sigma,
            sigma_potential,
            theta1,
        }
    }
}

/// Reconstruct with a freshly planned transform (one-off contexts).
pub fn reconstruct_fresh(state: &CurveState) -> Result<Vec<Point>, HarnessError> {
    let sp = PeriodicSpectral::new(state.m());
    reconstruct(state, &sp).map_err(HarnessError::Flow)
}

/// Geometry with a freshly planned transform.
pub fn geometry_fresh(state: &CurveState) -> Result<limitflow::CurveGeometry, HarnessError> {
    let sp = PeriodicSpectral::new(state.m());
    geometry(state, &sp).map_err(HarnessError::Flow)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("mcac-test-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn noise_cache_round_trip_is_bit_exact() {
        let dir = temp_dir("cache");
        let key = NoiseKey {
            family: NoiseFamily::Mixing,
            eps: 1e-4,
            t_end: 0.5,
            dt: 1e-3,
            seed: 42,
            cfg: NoiseConfig::default(),
        };
        let path = noise::generate(key.family, key.eps, key.t_end, key.dt, key.seed, &key.cfg);
        cache_noise(&dir, &key, &path).unwrap();
        let loaded = load_noise(&dir, &key).unwrap();
        assert_eq!(path.w, loaded.w);
        assert_eq!(path.derivs, loaded.derivs);
        assert_eq!(path.t, loaded.t);
        assert_eq!(path.seed, loaded.seed);
        // Same key from a second call hits the cache and stays identical.
        let again = noise_cached(&dir, &key).unwrap();
        assert_eq!(again.w, path.w);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn noise_cache_detects_corruption() {
        let dir = temp_dir("corrupt");
        let key = NoiseKey {
            family: NoiseFamily::MollifiedBm,
            eps: 1e-3,
            t_end: 0.2,
            dt: 1e-3,
            seed: 7,
            cfg: NoiseConfig::default(),
        };
        let path = noise::generate(key.family, key.eps, key.t_end, key.dt, key.seed, &key.cfg);
        let file = cache_noise(&dir, &key, &path).unwrap();
        let mut bytes = fs::read(&file).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        fs::write(&file, &bytes).unwrap();
        match load_noise(&dir, &key) {
            Err(HarnessError::ChecksumMismatch(_)) => {}
            other => panic!("expected checksum mismatch, got {other:?}"),
        }
        match load_noise(&dir, &NoiseKey { seed: 8, ..key }) {
            Err(HarnessError::CacheMiss(_)) => {}
            other => panic!("expected cache miss, got {other:?}"),
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn trajectory_cache_round_trip() {
        let dir = temp_dir("traj");
        let engine = FlowEngine::new(64, Cutoff::new(8.0), 1.0);
        let state = CurveState::circle(64, 0.5, [0.5, 0.5]);
        let path = noise::zero_path(0.01, 1e-4, 1);
        let traj =
            limitflow::run_stratonovich(&engine, &state, &path, 0.0, 0.01, 1e-4, 10).unwrap();
        let file = dir.join("t.traj");
        cache_trajectory(&file, &traj).unwrap();
        let loaded = load_trajectory(&file).unwrap();
        assert_eq!(traj.kappas, loaded.kappas);
        assert_eq!(traj.times, loaded.times);
        assert_eq!(traj.areas, loaded.areas);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn config_parsing_and_validation() {
        let text = "
            # study setup
            eps_list = 0.08, 0.04
            n_per_eps = 64, 128
            alpha = 0.25
            family = mixing
            seeds = 1,2,3
            shape = circle:0.2
            T = 0.01
        ";
        let cfg = ExperimentConfig::from_kv(text, &[]).unwrap();
        assert_eq!(cfg.eps_list, vec![0.08, 0.04]);
        assert_eq!(cfg.n_per_eps, vec![64, 128]);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.shape, Shape::Circle { r: 0.2 });
        // Overrides win.
        let cfg = ExperimentConfig::from_kv(
            text,
            &[("alpha".into(), "0.9".into())],
        )
        .unwrap();
        assert_eq!(cfg.alpha, 0.9);
        // Non-decreasing eps rejected.
        assert!(ExperimentConfig::from_kv("eps_list = 0.04, 0.08", &[]).is_err());
        assert!(ExperimentConfig::from_kv("nonsense = 1", &[]).is_err());
    }

    #[test]
    fn converge_smoke() {
        let cfg = ExperimentConfig {
            eps_list: vec![0.1, 0.07],
            n_per_eps: vec![48, 64],
            alpha: 0.3,
            seeds: vec![5],
            t_end: 4e-3,
            samples: 2,
            m_flow: 64,
            ..ExperimentConfig::default()
        };
        let out = converge(&cfg).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.medians.len(), 2);
        for r in &out.records {
            assert!(r.max_ledger_residual < 1e-9);
            assert!(r.sup_hausdorff.is_finite() && r.sup_hausdorff > 0.0);
            assert!(r.stopped_at.is_none());
            assert!(!r.hausdorff.is_empty());
        }
    }

    #[test]
    fn converge_is_deterministic() {
        let cfg = ExperimentConfig {
            eps_list: vec![0.09],
            n_per_eps: vec![48],
            seeds: vec![2],
            t_end: 2e-3,
            samples: 2,
            m_flow: 64,
            ..ExperimentConfig::default()
        };
        let a = converge(&cfg).unwrap();
        let b = converge(&cfg).unwrap();
        assert_eq!(
            a.records[0].sup_hausdorff.to_bits(),
            b.records[0].sup_hausdorff.to_bits()
        );
        assert_eq!(
            a.records[0].max_ledger_residual.to_bits(),
            b.records[0].max_ledger_residual.to_bits()
        );
    }

    #[test]
    fn report_rows() {
        let dir = temp_dir("report");
        // Empty set still produces a header.
        write_records_csv(&dir.join("empty.csv"), &[]).unwrap();
        let text = fs::read_to_string(dir.join("empty.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
        let record = RunRecord {
            eps: 0.05,
            n: 64,
            seed: 1,
            max_ledger_residual: 1e-11,
            hausdorff: vec![(0.01, 0.002)],
            sup_hausdorff: 0.002,
            l2_final: 0.08,
            max_area_residual: 1e-5,
            mass_cross_check: 0.01,
            stopped_at: None,
            wall_ms: 12,
        };
        write_records_csv(&dir.join("one.csv"), &[record]).unwrap();
        let text = fs::read_to_string(dir.join("one.csv")).unwrap();
        assert_eq!(text.lines().count(), 2);
        // Medians sorted by eps descending come straight from the input.
        write_medians_csv(&dir.join("m.csv"), &[(0.08, 0.01), (0.04, 0.005)]).unwrap();
        let text = fs::read_to_string(dir.join("m.csv")).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("0.08"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn ppm_has_header_and_size() {
        let dir = temp_dir("ppm");
        let field = PhaseField {
            n: 32,
            l: 1.0,
            dx: 1.0 / 32.0,
            eps: 0.1,
            t: 0.0,
            alpha: 0.0,
            u: vec![0.5; 32 * 32],
            mass0: 0.5,
        };
        let curve: Vec<Point> = (0..32)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 32.0;
                [0.5 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin()]
            })
            .collect();
        let file = dir.join("f.ppm");
        write_field_ppm(&file, &field, &[curve]).unwrap();
        let bytes = fs::read(&file).unwrap();
        assert!(bytes.starts_with(b"P6\n32 32\n255\n"));
        assert_eq!(bytes.len(), "P6\n32 32\n255\n".len() + 3 * 32 * 32);
        let _ = fs::remove_dir_all(&dir);
    }
}
