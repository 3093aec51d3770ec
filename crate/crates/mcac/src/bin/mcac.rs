// Command-line front end.
//
// Subcommands:
//   profile    1-D wave toolbox: standing/traveling waves, corrector,
//              surface-tension constant, eigenvalue probe
//   noise      generate one mild-noise realization, CSV + cache
//   ac         phase-field run with mass ledger and interface snapshots
//   flow       limit curvature flow (strat | ito | det)
//   expansion  first-order corrections along a cached flow trajectory
//   converge   coupled convergence study (exit 0 pass, 2 fail, 3 truncated)
//   report     per-eps medians from a records.csv
//
// Output root defaults to $MCAC_OUT or ./out.

use mcac::acpde;
use mcac::expansion::ProfileBundle;
use mcac::harness::{
    self, cache_trajectory, expansion_csv, load_trajectory, noise_cached, parse_shape,
    ExperimentConfig, NoiseKey, ProfileLab,
};
use mcac::limitflow::{self, geometry, reconstruct, CurveState, Cutoff, FlowEngine};
use mcac::noise::{self, NoiseConfig, NoiseFamily, PsiVariant};
use mcac::profile::{principal_eigenvalue, solve_traveling};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some((cmd, rest)) = args.split_first() else {
        eprintln!("{USAGE}");
        return ExitCode::from(1);
    };
    let result = match cmd.as_str() {
        "profile" => cmd_profile(rest),
        "noise" => cmd_noise(rest),
        "ac" => cmd_ac(rest),
        "flow" => cmd_flow(rest),
        "expansion" => cmd_expansion(rest),
        "converge" => return cmd_converge(rest),
        "report" => cmd_report(rest),
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(format!("unknown subcommand: {other}\n{USAGE}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

const USAGE: &str = "\
usage: mcac <subcommand> [flags]

  profile    --reaction cubic [--R 20] [--h 2.5e-4] [--a 0.05] [--eps 0.1] [--out FILE]
  noise      --family mollified|mixing --eps E --T T --dt DT --seed S
             [--k-max 4] [--raw-psi] [--cache DIR] [--out FILE]
  ac         --eps E --N N --alpha A --T T [--L 1] [--dt DT] [--seed S]
             [--noise-family mixing] [--shape circle:0.25] [--delta 0.08]
             [--snapshot-every DT] [--out DIR]
  flow       --shape circle:R|ellipse:A,B --T T [--M 256] [--alpha A]
             [--areaD 1] [--L-cut 8] [--dt DT] [--mode strat|ito|det]
             [--seed S] [--noise-family mixing] [--eps E] [--out DIR]
             [--traj-cache FILE]
  expansion  --traj FILE [--out FILE]
  converge   [--config FILE] [key=value ...]
  report     --records FILE [--out FILE]

Environment: MCAC_OUT sets the default output root (default ./out).";

fn out_root() -> PathBuf {
    std::env::var_os("MCAC_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Flat flag parser: --key value pairs plus bare key=value tokens.
struct Flags {
    map: HashMap<String, String>,
    extras: Vec<(String, String)>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Flags, String> {
        let mut map = HashMap::new();
        let mut extras = Vec::new();
        let mut it = args.iter().peekable();
        while let Some(tok) = it.next() {
            if let Some(name) = tok.strip_prefix("--") {
                if name == "raw-psi" {
                    map.insert("raw-psi".into(), "1".into());
                    continue;
                }
                let value = it
                    .next()
                    .ok_or_else(|| format!("flag --{name} needs a value"))?;
                map.insert(name.to_string(), value.clone());
            } else if let Some((k, v)) = tok.split_once('=') {
                extras.push((k.trim().to_string(), v.trim().to_string()));
            } else {
                return Err(format!("unexpected argument: {tok}"));
            }
        }
        Ok(Flags { map, extras })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, String> {
        match self.get(key) {
            Some(v) => v.parse().map_err(|_| format!("bad --{key}: {v}")),
            None => Ok(default),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, String> {
        match self.get(key) {
            Some(v) => v.parse().map_err(|_| format!("bad --{key}: {v}")),
            None => Ok(default),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, String> {
        match self.get(key) {
            Some(v) => v.parse().map_err(|_| format!("bad --{key}: {v}")),
            None => Ok(default),
        }
    }
}

fn noise_family(flags: &Flags, key: &str) -> Result<NoiseFamily, String> {
    match flags.get(key).unwrap_or("mixing") {
        "mollified" | "mollified_bm" | "mbm" => Ok(NoiseFamily::MollifiedBm),
        "mixing" | "telegraph" => Ok(NoiseFamily::Mixing),
        other => Err(format!("unknown noise family: {other}")),
    }
}

fn noise_config(flags: &Flags) -> Result<NoiseConfig, String> {
    Ok(NoiseConfig {
        beta_tilde: flags.f64_or("beta-tilde", 1.0)?,
        n1: flags.u64_or("n1", 1)? as u32,
        k_max: flags.usize_or("k-max", 4)?,
        psi_variant: if flags.get("raw-psi").is_some() {
            PsiVariant::Raw
        } else {
            PsiVariant::Safe
        },
    })
}

fn cmd_profile(args: &[String]) -> Result<(), String> {
    let flags = Flags::parse(args)?;
    match flags.get("reaction").unwrap_or("cubic") {
        "cubic" => {}
        other => return Err(format!("only the cubic reaction is built in, got {other}")),
    }
    let lab = ProfileLab::cubic();
    let a_off = flags.f64_or("a", 0.05)?;
    let eps = flags.f64_or("eps", 0.1)?;

    println!(
        "standing profile: {} nodes, h = {}",
        lab.standing.n(),
        lab.standing.h
    );
    println!("sigma (profile route)   = {:.9}", lab.sigma);
    println!("sigma (potential route) = {:.9}", lab.sigma_potential);
    println!("tail decay rate zeta    = {:.9}", lab.standing.decay_rate);
    let tw = solve_traveling(&lab.bistable, a_off).map_err(|e| e.to_string())?;
    println!(
        "traveling wave at a = {a_off}: c = {:.9}, equilibria ({:.9}, {:.9})",
        tw.c, tw.m_star_minus, tw.m_star_plus
    );
    let probe =
        principal_eigenvalue(&lab.bistable, &lab.standing, eps).map_err(|e| e.to_string())?;
    println!(
        "eigen probe at eps = {eps}: lambda = {:.3e}, cosine with m' = {:.6}",
        probe.lambda, probe.cosine_with_m_prime
    );

    let out = flags
        .get("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| out_root().join("profile.csv"));
    ensure_parent(&out)?;
    let stride = (lab.standing.n() / 4000).max(1);
    let mut csv = String::from("rho,m,m_prime,theta1\n");
    for i in (0..lab.standing.n()).step_by(stride) {
        csv.push_str(&format!(
            "{:.6},{:.12e},{:.12e},{:.12e}\n",
            lab.standing.rho(i),
            lab.standing.values[i],
            lab.standing.derivative[i],
            lab.theta1.values[i]
        ));
    }
    std::fs::write(&out, csv).map_err(|e| e.to_string())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_noise(args: &[String]) -> Result<(), String> {
    let flags = Flags::parse(args)?;
    let family = noise_family(&flags, "family")?;
    let cfg = noise_config(&flags)?;
    let eps = flags.f64_or("eps", 1e-4)?;
    let t_end = flags.f64_or("T", 1.0)?;
    let dt = flags.f64_or("dt", 1e-3)?;
    let seed = flags.u64_or("seed", 1)?;

    let key = NoiseKey {
        family,
        eps,
        t_end,
        dt,
        seed,
        cfg,
    };
    let path = match flags.get("cache") {
        Some(dir) => noise_cached(Path::new(dir), &key).map_err(|e| e.to_string())?,
        None => noise::generate(family, eps, t_end, dt, seed, &cfg),
    };
    println!(
        "psi = {:.6e}, certified derivative bound H = {:.6e}",
        path.psi, path.h_eps
    );
    for k in 0..path.k_max().min(3) {
        let nrm = noise::ck_norm_of_derivative(&path, k).map_err(|e| e.to_string())?;
        println!("|dw/dt|_{k} = {nrm:.6e}");
    }
    let g = noise::g_eps(path.h_eps, cfg.n1);
    println!(
        "certificate G = {}{}",
        g.value,
        if g.overflowed { " (overflowed)" } else { "" }
    );

    let out = flags
        .get("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| out_root().join("noise.csv"));
    ensure_parent(&out)?;
    let mut csv = String::from("t,w");
    for k in 1..=path.k_max() {
        csv.push_str(&format!(",dw{k}"));
    }
    csv.push('\n');
    for i in 0..path.len() {
        csv.push_str(&format!("{:.9},{:.12e}", path.t[i], path.w[i]));
        for d in &path.derivs {
            csv.push_str(&format!(",{:.12e}", d[i]));
        }
        csv.push('\n');
    }
    std::fs::write(&out, csv).map_err(|e| e.to_string())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_ac(args: &[String]) -> Result<(), String> {
    let flags = Flags::parse(args)?;
    let lab = ProfileLab::cubic();
    let eps = flags.f64_or("eps", 0.04)?;
    let n = flags.usize_or("N", 128)?;
    let l = flags.f64_or("L", 1.0)?;
    let alpha = flags.f64_or("alpha", 0.5)?;
    let t_end = flags.f64_or("T", 0.25)?;
    let seed = flags.u64_or("seed", 1)?;
    let delta = flags.f64_or("delta", 0.05 * l)?;
    let shape =
        parse_shape(flags.get("shape").unwrap_or("circle:0.25")).ok_or("bad --shape")?;
    let family = noise_family(&flags, "noise-family")?;
    let cfg = NoiseConfig {
        k_max: 1,
        ..noise_config(&flags)?
    };

    let budget = acpde::reaction_dt_budget(&lab.bistable, eps);
    let dt = match flags.get("dt") {
        Some("auto") | None => t_end / (t_end / budget).ceil(),
        Some(v) => v.parse().map_err(|_| format!("bad --dt: {v}"))?,
    };
    let n_steps = (t_end / dt).round() as usize;
    let snap_dt = flags.f64_or("snapshot-every", t_end / 5.0)?;
    let snapshot_every = ((snap_dt / dt).round() as usize).max(1);

    let curve = shape.curve(256, [0.5 * l, 0.5 * l]);
    let poly = harness::reconstruct_fresh(&curve).map_err(|e| e.to_string())?;
    let mut field = acpde::init_from_curve(&poly, &lab.standing, eps, n, l, delta, alpha)
        .map_err(|e| e.to_string())?;
    let path = noise::generate(family, eps, t_end + 2.0 * dt, dt, seed, &cfg);
    println!(
        "running {n_steps} steps at dt = {dt:.3e} (budget {budget:.3e}), mass0 = {:.6}",
        field.mass0
    );
    let out_dir = flags
        .get("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| out_root().join("ac"));
    std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
    let opts = acpde::RunOptions {
        ledger_every: 1,
        snapshot_every: Some(snapshot_every),
    };
    let run = acpde::run(&mut field, &lab.bistable, &path, t_end, dt, opts)
        .map_err(|e| e.to_string())?;
    println!(
        "ledger max residual = {:.3e} over {} samples",
        run.ledger.max_residual(),
        run.ledger.samples.len()
    );
    harness::write_ledger_csv(&out_dir.join("ledger.csv"), &run.ledger)
        .map_err(|e| e.to_string())?;
    for (i, snap) in run.snapshots.iter().enumerate() {
        let snap_field = acpde::PhaseField {
            u: snap.u.clone(),
            t: snap.t,
            ..field.clone()
        };
        match acpde::extract_zero_level(&snap_field) {
            Ok(loops) => {
                for (li, poly) in loops.iter().enumerate() {
                    harness::write_polyline_csv(
                        &out_dir.join(format!("interface_{i:03}_{li}.csv")),
                        snap.t,
                        poly,
                    )
                    .map_err(|e| e.to_string())?;
                }
                harness::write_field_ppm(
                    &out_dir.join(format!("u_{i:03}.ppm")),
                    &snap_field,
                    &loops,
                )
                .map_err(|e| e.to_string())?;
            }
            Err(_) => println!("snapshot {i}: no interface"),
        }
    }
    println!("wrote outputs under {}", out_dir.display());
    Ok(())
}

fn cmd_flow(args: &[String]) -> Result<(), String> {
    let flags = Flags::parse(args)?;
    let shape =
        parse_shape(flags.get("shape").unwrap_or("circle:1.0")).ok_or("bad --shape")?;
    let m = flags.usize_or("M", 256)?;
    let alpha = flags.f64_or("alpha", 0.5)?;
    let area_d = flags.f64_or("areaD", 1.0)?;
    let l_cut = flags.f64_or("L-cut", 8.0)?;
    let t_end = flags.f64_or("T", 0.1)?;
    let seed = flags.u64_or("seed", 1)?;
    let eps = flags.f64_or("eps", 1e-4)?;
    let mode = flags.get("mode").unwrap_or("strat");
    let family = noise_family(&flags, "noise-family")?;
    let cfg = NoiseConfig {
        k_max: 1,
        ..noise_config(&flags)?
    };

    let state0 = shape.curve(m, [0.0, 0.0]);
    let engine = FlowEngine::new(m, Cutoff::new(l_cut), area_d);
    let dth = state0.dtheta();
    let amax = state0.kappa.iter().fold(0.0f64, |a, &k| a.max(k * k));
    let budget = 0.2 * dth * dth / amax;
    let dt = flags.f64_or("dt", (0.5 * budget).min(1e-4))?;
    let n_steps = (t_end / dt).round() as usize;
    let store_every = (n_steps / 400).max(1);

    let out_dir = flags
        .get("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| out_root().join("flow"));
    std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;

    let traj = match mode {
        "strat" => {
            let path = noise::generate(family, eps, t_end + 2.0 * dt, dt, seed, &cfg);
            limitflow::run_stratonovich(&engine, &state0, &path, alpha, t_end, dt, store_every)
                .map_err(|e| e.to_string())?
        }
        "det" => {
            let path = noise::zero_path(t_end + 2.0 * dt, dt, 1);
            limitflow::run_stratonovich(&engine, &state0, &path, 0.0, t_end, dt, store_every)
                .map_err(|e| e.to_string())?
        }
        "ito" => {
            let mut state = state0.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let geo0 = geometry(&state, &engine.sp).map_err(|e| e.to_string())?;
            let mut traj = limitflow::Trajectory {
                m,
                dt: dt * store_every as f64,
                area_d,
                alpha,
                times: vec![0.0],
                kappas: vec![state.kappa.clone()],
                anchors: vec![state.anchor],
                vs: vec![0.0],
                ws: vec![0.0],
                lengths: vec![geo0.length],
                areas: vec![geo0.area],
            };
            let mut w = 0.0;
            for k in 0..n_steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let dw = dt.sqrt() * z;
                w += dw;
                engine
                    .step_ito(&mut state, alpha, dw, dt)
                    .map_err(|e| e.to_string())?;
                if (k + 1) % store_every == 0 || k + 1 == n_steps {
                    let geo = geometry(&state, &engine.sp).map_err(|e| e.to_string())?;
                    traj.times.push(state.t);
                    traj.kappas.push(state.kappa.clone());
                    traj.anchors.push(state.anchor);
                    traj.vs.push(0.0);
                    traj.ws.push(w);
                    traj.lengths.push(geo.length);
                    traj.areas.push(geo.area);
                }
            }
            traj
        }
        other => return Err(format!("unknown mode: {other}")),
    };

    let mut csv = String::from("t,length,area,kappa_min,kappa_max,area_residual\n");
    let a0 = traj.areas[0];
    let w0 = traj.ws[0];
    for i in 0..traj.times.len() {
        let (lo, hi) = traj.kappas[i]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
                (lo.min(k), hi.max(k))
            });
        let resid = traj.areas[i] - a0 + 0.5 * traj.area_d * traj.alpha * (traj.ws[i] - w0);
        csv.push_str(&format!(
            "{:.9},{:.9},{:.9},{:.6},{:.6},{:.3e}\n",
            traj.times[i], traj.lengths[i], traj.areas[i], lo, hi, resid
        ));
    }
    std::fs::write(out_dir.join("trajectory.csv"), csv).map_err(|e| e.to_string())?;

    let picks = [0, traj.times.len() / 2, traj.times.len() - 1];
    for &i in &picks {
        let state = CurveState {
            kappa: traj.kappas[i].clone(),
            anchor: traj.anchors[i],
            t: traj.times[i],
        };
        let poly = reconstruct(&state, &engine.sp).map_err(|e| e.to_string())?;
        harness::write_polyline_csv(
            &out_dir.join(format!("curve_{i:04}.csv")),
            traj.times[i],
            &poly,
        )
        .map_err(|e| e.to_string())?;
    }
    if let Some(cache) = flags.get("traj-cache") {
        cache_trajectory(Path::new(cache), &traj).map_err(|e| e.to_string())?;
        println!("cached trajectory at {cache}");
    }
    println!(
        "flow run complete: {} samples, area residual sup = {:.3e}",
        traj.times.len(),
        limitflow::area_identity_check(&traj)
    );
    println!("wrote outputs under {}", out_dir.display());
    Ok(())
}

fn cmd_expansion(args: &[String]) -> Result<(), String> {
    let flags = Flags::parse(args)?;
    let traj_file = flags.get("traj").ok_or("--traj FILE is required")?;
    let traj = load_trajectory(Path::new(traj_file)).map_err(|e| e.to_string())?;
    let lab = ProfileLab::cubic();
    let bundle = ProfileBundle::new(&lab.bistable, &lab.standing, &lab.theta1, lab.sigma)
        .map_err(|e| e.to_string())?;
    let csv = expansion_csv(&traj, &bundle).map_err(|e| e.to_string())?;
    let out = flags
        .get("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| out_root().join("expansion.csv"));
    ensure_parent(&out)?;
    std::fs::write(&out, csv).map_err(|e| e.to_string())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_converge(args: &[String]) -> ExitCode {
    let flags = match Flags::parse(args) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let text = match flags.get("config") {
        Some(file) => match std::fs::read_to_string(file) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error reading {file}: {e}");
                return ExitCode::from(1);
            }
        },
        None => String::new(),
    };
    let mut cfg = match ExperimentConfig::from_kv(&text, &flags.extras) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if cfg.out_dir.is_none() {
        cfg.out_dir = Some(out_root().join("converge"));
    }
    println!(
        "convergence study: eps {:?}, N {:?}, {} seeds, T = {}",
        cfg.eps_list,
        cfg.n_per_eps,
        cfg.seeds.len(),
        cfg.t_end
    );
    let outcome = match harness::converge(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for (eps, med) in &outcome.medians {
        println!("eps = {eps}: median sup Hausdorff = {med:.6e}");
    }
    if outcome.any_stopped {
        println!("stopping time hit in at least one cell (truncated)");
        return ExitCode::from(3);
    }
    if !outcome.monotone {
        println!("FAIL: medians are not strictly decreasing");
        return ExitCode::from(2);
    }
    println!("PASS: medians strictly decreasing");
    ExitCode::SUCCESS
}

fn cmd_report(args: &[String]) -> Result<(), String> {
    let flags = Flags::parse(args)?;
    let file = flags.get("records").ok_or("--records FILE is required")?;
    let text = std::fs::read_to_string(file).map_err(|e| e.to_string())?;
    let mut by_eps: Vec<(f64, Vec<f64>)> = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 4 {
            continue;
        }
        let eps: f64 = cols[0].parse().map_err(|_| "bad eps column")?;
        let sup: f64 = cols[3].parse().map_err(|_| "bad hausdorff column")?;
        match by_eps.iter_mut().find(|(e, _)| (*e - eps).abs() < 1e-12) {
            Some((_, v)) => v.push(sup),
            None => by_eps.push((eps, vec![sup])),
        }
    }
    by_eps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!("eps,median_sup_hausdorff,n_runs");
    let mut medians = Vec::new();
    for (eps, mut sups) in by_eps {
        sups.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = if sups.len() % 2 == 1 {
            sups[sups.len() / 2]
        } else {
            0.5 * (sups[sups.len() / 2 - 1] + sups[sups.len() / 2])
        };
        println!("{eps},{med:.6e},{}", sups.len());
        medians.push((eps, med));
    }
    if let Some(out) = flags.get("out") {
        harness::write_medians_csv(Path::new(out), &medians).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}
