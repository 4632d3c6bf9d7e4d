use std::f64::consts::PI;

use clap::{Args, ValueEnum};
use dephasing_core::bath::{
    argmax_g, default_k_max, discretize_equally_spaced, spectral_g, total_weight, SPACING_FRACTION, STANDARD_MODE_COUNT,
};
use dephasing_core::oracle::{build_fock, overall_minimum, seed_minimum, OracleBackend, TheoremKind, Witness};
use dephasing_core::params::units::{ev_to_mev, HBAR_MEV_PS};
use dephasing_core::params::SchemeConfig;
use dephasing_core::scheme::{envelopes, scheme_point, special_tau, Deviations, SchemePoint, SpecialKind};
use dephasing_core::weyl::{BathRef, WeylBackend};
use rayon::prelude::*;
use serde::Serialize;

use crate::backend;
use crate::output::{flag, num, opt, OutDir};
use crate::CliError;

/// Largest deviation between the two backends still accepted.
pub const ORACLE_TOLERANCE: f64 = 1e-8;
/// Lowest minimum gain accepted for commuting families.
pub const COMMUTING_FLOOR: f64 = -1e-10;
/// A generic search passes once it finds a gain below this.
pub const GENERIC_WITNESS: f64 = -1e-4;
/// Invariant tolerance applied to every evaluated scheme point.
pub const INVARIANT_TOL: f64 = 1e-12;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

// ---------------------------------------------------------------- gk

#[derive(Debug, Args, Serialize)]
pub struct GkArgs {
    /// Upper end of the k grid in nm⁻¹ [default: 16 × argmax G].
    #[arg(long)]
    pub k_max: Option<f64>,
    /// Number of k points, endpoints included.
    #[arg(long, default_value_t = 401)]
    pub n: usize,
    /// Also write the equally spaced discretization with this many modes.
    #[arg(long, value_name = "COUNT")]
    pub discretize: Option<usize>,
}

#[derive(Serialize)]
struct GkReport {
    argmax_nm_inv: f64,
    delta_k_nm_inv: f64,
    mode_count: usize,
    total_weight: f64,
    discrete_weight: f64,
    ratio: f64,
}

pub fn gk(cfg: &SchemeConfig, args: &GkArgs, mut out: OutDir) -> Result<(), CliError> {
    let m = &cfg.material;
    if args.n < 2 {
        return Err(usage(format!("--n must be at least 2, got {}", args.n)));
    }
    let k_max = args.k_max.unwrap_or_else(|| default_k_max(m));
    if !(k_max > 0.0 && k_max.is_finite()) {
        return Err(usage(format!("--k-max must be positive, got {k_max}")));
    }
    let rows = (0..args.n)
        .map(|i| {
            let k = k_max * i as f64 / (args.n - 1) as f64;
            spectral_g(k, m).map(|g| vec![num(k), num(g)]).map_err(usage)
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.write_csv("gk.csv", &["k_nm_inv", "G_nm"], &rows)?;

    let count = args.discretize.unwrap_or(STANDARD_MODE_COUNT);
    let spec = discretize_equally_spaced::<f64>(m, cfg.temperature_k, count);
    if args.discretize.is_some() {
        let rows: Vec<Vec<String>> = spec
            .modes
            .iter()
            .enumerate()
            .map(|(i, md)| vec![i.to_string(), num(md.k), num(md.omega), num(md.weight)])
            .collect();
        out.write_csv("modes.csv", &["i", "k_nm_inv", "omega_rad_ps", "H_i"], &rows)?;
    }
    let argmax = argmax_g(m);
    let h = total_weight(m);
    let discrete = spec.total_weight();
    let report = GkReport {
        argmax_nm_inv: argmax,
        delta_k_nm_inv: SPACING_FRACTION * argmax,
        mode_count: count,
        total_weight: h,
        discrete_weight: discrete,
        ratio: h / discrete,
    };
    out.finish("gk", cfg, args, report)
}

// ---------------------------------------------------------------- gain-tau

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    /// Extrema over the fast phase, on the configured τ grid.
    Envelope,
    /// Resolved fast oscillation in a narrow τ window.
    Oscillation,
}

#[derive(Debug, Args, Serialize)]
pub struct GainTauArgs {
    /// Post-measurement time in ps.
    #[arg(long, default_value_t = 20.0)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = GainMode::Envelope)]
    pub mode: GainMode,
    /// Window centre in ps (oscillation mode).
    #[arg(long, default_value_t = 0.42)]
    pub tau_center: f64,
    /// Window width in ps (oscillation mode).
    #[arg(long, default_value_t = 0.01)]
    pub window: f64,
    /// Points across the window (oscillation mode).
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Serialize)]
struct EnvelopeReport {
    t: f64,
    rows: usize,
    g_min: f64,
    tau_at_g_min: f64,
    gnorm_min: Option<f64>,
    tau_at_gnorm_min: Option<f64>,
    g_max: f64,
    tau_at_g_max: f64,
}

#[derive(Serialize)]
struct OscillationReport {
    t: f64,
    rows: usize,
    step_ps: f64,
    max_step_ps: f64,
    g_av_min: f64,
    g_av_max: f64,
    invariant_violations: usize,
}

/// Finest τ step that still resolves the fast oscillation.
pub fn max_oscillation_step(delta_eps_ev: f64) -> f64 {
    PI / 20.0 * HBAR_MEV_PS / ev_to_mev(delta_eps_ev)
}

fn point_row(p: &SchemePoint<f64>) -> Vec<String> {
    vec![
        num(p.tau),
        num(p.t),
        num(p.theta),
        num(p.coherence),
        num(p.p_plus),
        num(p.p_minus),
        num(p.d_plus),
        num(p.d_minus),
        num(p.g_plus),
        num(p.g_minus),
        num(p.g_av),
        opt(p.g_av_norm),
        flag(p.plus_degenerate),
        flag(p.minus_degenerate),
    ]
}

const POINT_HEADER: [&str; 14] = [
    "tau_ps",
    "t_ps",
    "theta",
    "D",
    "p_plus",
    "p_minus",
    "D_plus",
    "D_minus",
    "g_plus",
    "g_minus",
    "g_av",
    "g_av_norm",
    "plus_degenerate",
    "minus_degenerate",
];

pub fn gain_tau(cfg: &SchemeConfig, args: &GainTauArgs, mut out: OutDir) -> Result<(), CliError> {
    if !(args.t >= 0.0 && args.t.is_finite()) {
        return Err(usage(format!("--t must be non-negative, got {}", args.t)));
    }
    let de = cfg.material.delta_eps_ev;
    match args.mode {
        GainMode::Envelope => {
            let b = backend::from_config(cfg)?;
            let taus = cfg.tau_grid.points();
            let env = taus
                .par_iter()
                .map(|&tau| envelopes(&b, tau, args.t, cfg.envelope_points))
                .collect::<Result<Vec<_>, _>>()
                .map_err(usage)?;
            let rows: Vec<Vec<String>> = env
                .iter()
                .map(|e| {
                    vec![
                        num(e.tau),
                        num(e.t),
                        num(e.coherence),
                        num(e.dav_min),
                        num(e.dav_max),
                        num(e.g_min),
                        num(e.g_max),
                        opt(e.gnorm_min),
                        opt(e.gnorm_max),
                        num(e.dplus_min),
                        num(e.dplus_max),
                        num(e.dminus_min),
                        num(e.dminus_max),
                        num(e.theta_at_min),
                        num(e.theta_at_max),
                    ]
                })
                .collect();
            let header = [
                "tau_ps",
                "t_ps",
                "D",
                "Dav_min",
                "Dav_max",
                "g_min",
                "g_max",
                "gnorm_min",
                "gnorm_max",
                "Dplus_min",
                "Dplus_max",
                "Dminus_min",
                "Dminus_max",
                "theta_at_min",
                "theta_at_max",
            ];
            out.write_csv("gain_tau_envelope.csv", &header, &rows)?;
            let lo = env.iter().min_by(|a, b| a.g_min.total_cmp(&b.g_min)).expect("non-empty grid");
            let hi = env.iter().max_by(|a, b| a.g_max.total_cmp(&b.g_max)).expect("non-empty grid");
            let norm = env.iter().filter_map(|e| e.gnorm_min.map(|g| (e.tau, g))).min_by(|a, b| a.1.total_cmp(&b.1));
            let report = EnvelopeReport {
                t: args.t,
                rows: env.len(),
                g_min: lo.g_min,
                tau_at_g_min: lo.tau,
                gnorm_min: norm.map(|n| n.1),
                tau_at_gnorm_min: norm.map(|n| n.0),
                g_max: hi.g_max,
                tau_at_g_max: hi.tau,
            };
            out.finish("gain-tau", cfg, args, report)
        }
        GainMode::Oscillation => {
            if args.points < 2 || !(args.window > 0.0) {
                return Err(usage("oscillation mode needs --window > 0 and --points >= 2"));
            }
            let step = args.window / (args.points - 1) as f64;
            let max_step = max_oscillation_step(de);
            if step > max_step {
                return Err(usage(format!(
                    "τ step {step:e} ps does not resolve the fast oscillation (need <= {max_step:e} ps; raise --points)"
                )));
            }
            let start = args.tau_center - 0.5 * args.window;
            if start < 0.0 {
                return Err(usage("oscillation window extends below τ = 0"));
            }
            let b = backend::from_config(cfg)?;
            let taus: Vec<f64> = (0..args.points).map(|i| start + step * i as f64).collect();
            let pts = taus
                .par_iter()
                .map(|&tau| scheme_point(&b, de, tau, args.t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(usage)?;
            let rows: Vec<Vec<String>> = pts.iter().map(point_row).collect();
            out.write_csv("gain_tau_oscillation.csv", &POINT_HEADER, &rows)?;
            let violations = pts.iter().map(|p| p.invariant_violations(INVARIANT_TOL).len()).sum();
            let report = OscillationReport {
                t: args.t,
                rows: pts.len(),
                step_ps: step,
                max_step_ps: max_step,
                g_av_min: pts.iter().map(|p| p.g_av).fold(f64::INFINITY, f64::min),
                g_av_max: pts.iter().map(|p| p.g_av).fold(f64::NEG_INFINITY, f64::max),
                invariant_violations: violations,
            };
            out.finish("gain-tau", cfg, args, report)
        }
    }
}

// ---------------------------------------------------------------- coherence-t

#[derive(Debug, Args, Serialize)]
pub struct CoherenceTArgs {
    /// Delay in ps near which each special point is chosen.
    #[arg(long, default_value_t = 4.0)]
    pub tau_target: f64,
    /// Special points to follow.
    #[arg(long, value_delimiter = ',', default_value = "min,max,equal")]
    pub kinds: Vec<String>,
}

#[derive(Serialize)]
struct KindReport {
    kind: &'static str,
    tau_ps: f64,
    theta: f64,
    p_plus: f64,
    invariant_violations: usize,
}

pub fn coherence_t(cfg: &SchemeConfig, args: &CoherenceTArgs, mut out: OutDir) -> Result<(), CliError> {
    let kinds = args.kinds.iter().map(|k| k.parse::<SpecialKind>().map_err(usage)).collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        return Err(usage("--kinds is empty"));
    }
    let de = cfg.material.delta_eps_ev;
    let b = backend::from_config(cfg)?;
    let ts = cfg.t_grid.points();
    let mut header = vec!["t_ps".to_owned(), "D".to_owned()];
    let mut columns = Vec::new();
    let mut report = Vec::new();
    for kind in kinds {
        let tau = special_tau(de, args.tau_target, kind).map_err(usage)?;
        let pts = ts.par_iter().map(|&t| scheme_point(&b, de, tau, t)).collect::<Result<Vec<_>, _>>().map_err(usage)?;
        for q in ["D_plus", "D_minus", "D_av", "g_av"] {
            header.push(format!("{q}_{}", kind.name()));
        }
        report.push(KindReport {
            kind: kind.name(),
            tau_ps: tau,
            theta: pts[0].theta,
            p_plus: pts[0].p_plus,
            invariant_violations: pts.iter().map(|p| p.invariant_violations(INVARIANT_TOL).len()).sum(),
        });
        columns.push(pts);
    }
    let rows: Vec<Vec<String>> = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = vec![num(t), num(columns[0][i].coherence)];
            for col in &columns {
                let p = &col[i];
                row.extend([num(p.d_plus), num(p.d_minus), num(p.d_av()), num(p.g_av)]);
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("coherence_t.csv", &header, &rows)?;
    out.finish("coherence-t", cfg, args, report)
}

// ---------------------------------------------------------------- oracle-compare

fn parse_mode(s: &str) -> Result<(f64, f64), String> {
    let (w, r) = s.split_once(':').ok_or_else(|| format!("expected OMEGA:R, got {s:?}"))?;
    let w: f64 = w.trim().parse().map_err(|e| format!("bad frequency {w:?}: {e}"))?;
    let r: f64 = r.trim().parse().map_err(|e| format!("bad coupling {r:?}: {e}"))?;
    Ok((w, r))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("expected NTAUxNT, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("bad τ count {a:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("bad t count {b:?}: {e}"))?;
    if a == 0 || b == 0 {
        return Err("grid counts must be positive".into());
    }
    Ok((a, b))
}

#[derive(Debug, Args, Serialize)]
pub struct OracleCompareArgs {
    /// Mode as angular frequency (rad/ps) and dimensionless coupling. One or two.
    #[arg(long = "mode", value_name = "OMEGA:R", value_parser = parse_mode, default_value = "1.0:0.3")]
    pub modes: Vec<(f64, f64)>,
    /// Highest Fock level kept per mode [default: automatic].
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Evaluation grid as NTAUxNT, τ and t each from 0 to their maxima.
    #[arg(long, value_parser = parse_grid, default_value = "5x10")]
    pub grid: (usize, usize),
    #[arg(long, default_value_t = 6.0)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 6.0)]
    pub t_max: f64,
}

#[derive(Serialize)]
struct CompareReport {
    dimension: usize,
    n_max: Vec<usize>,
    points: usize,
    tolerance: f64,
    max_deviation: f64,
    deviations: Deviations,
}

fn axis(n: usize, max: f64) -> Vec<f64> {
    if n == 1 {
        return vec![max];
    }
    (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect()
}

pub fn oracle_compare(cfg: &SchemeConfig, args: &OracleCompareArgs, mut out: OutDir) -> Result<(), CliError> {
    if args.modes.is_empty() || args.modes.len() > 2 {
        return Err(usage(format!("oracle-compare takes one or two modes, got {}", args.modes.len())));
    }
    let bath = BathRef::new(args.modes.iter().copied(), cfg.temperature_k).map_err(usage)?;
    let n_max = match args.n_max {
        Some(n) => vec![n; bath.n_modes()],
        None => dephasing_core::oracle::auto_truncation(&bath),
    };
    let env = build_fock(&bath, &n_max, dephasing_core::oracle::DEFAULT_DIMENSION_CAP).map_err(usage)?;
    let dimension = env.dimension();
    let oracle = OracleBackend::new(env);
    let weyl = WeylBackend::new(bath);
    let de = cfg.material.delta_eps_ev;

    let mut rows = Vec::new();
    let mut worst = Deviations::default();
    for &tau in &axis(args.grid.0, args.tau_max) {
        for &t in &axis(args.grid.1, args.t_max) {
            let w = scheme_point(&weyl, de, tau, t).map_err(usage)?;
            let o = scheme_point(&oracle, de, tau, t).map_err(usage)?;
            let d = Deviations::between(&w, &o);
            rows.push(vec![
                num(tau),
                num(t),
                num(d.coherence),
                num(d.p_plus),
                num(d.p_minus),
                num(d.d_plus),
                num(d.d_minus),
                num(d.g_av),
            ]);
            worst = worst.merge(d);
        }
    }
    out.write_csv(
        "oracle_compare.csv",
        &["tau_ps", "t_ps", "dev_D", "dev_p_plus", "dev_p_minus", "dev_D_plus", "dev_D_minus", "dev_g_av"],
        &rows,
    )?;
    let max_deviation = worst.max();
    let report = CompareReport {
        dimension,
        n_max,
        points: rows.len(),
        tolerance: ORACLE_TOLERANCE,
        max_deviation,
        deviations: worst,
    };
    out.finish("oracle-compare", cfg, args, report)?;
    if !(max_deviation <= ORACLE_TOLERANCE) {
        return Err(CliError::Validation(format!(
            "backends differ by {max_deviation:e} (tolerance {ORACLE_TOLERANCE:e})"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- theorem-check

#[derive(Debug, Args, Serialize)]
pub struct TheoremCheckArgs {
    #[arg(long, value_parser = |s: &str| s.parse::<TheoremKind>())]
    pub kind: TheoremKind,
    /// Seeds 0..SEEDS.
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// Environment dimension.
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    /// Points per axis of the (τ, t) grid; the grid excludes zero.
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    #[arg(long, default_value_t = 5.0)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 5.0)]
    pub t_max: f64,
}

#[derive(Serialize)]
struct TheoremReport {
    kind: &'static str,
    seeds: u64,
    dim: usize,
    min_g_av: f64,
    witness: Witness,
    threshold: f64,
    passed: bool,
}

pub fn theorem_check(cfg: &SchemeConfig, args: &TheoremCheckArgs, mut out: OutDir) -> Result<(), CliError> {
    if args.dim < 2 || args.seeds == 0 || args.grid == 0 {
        return Err(usage("theorem-check needs --dim >= 2, --seeds >= 1 and --grid >= 1"));
    }
    let grid = |max: f64| -> Vec<f64> { (1..=args.grid).map(|i| max * i as f64 / args.grid as f64).collect() };
    let (taus, ts) = (grid(args.tau_max), grid(args.t_max));
    let found = (0..args.seeds)
        .into_par_iter()
        .map(|seed| seed_minimum(args.kind, seed, args.dim, &taus, &ts, cfg.envelope_points))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let rows: Vec<Vec<String>> =
        found.iter().map(|w| vec![w.seed.to_string(), num(w.tau), num(w.t), num(w.theta), num(w.g_av)]).collect();
    out.write_csv("theorem_check.csv", &["seed", "tau_ps", "t_ps", "theta", "g_av_min"], &rows)?;
    let witness = overall_minimum(&found).expect("at least one seed");
    let (threshold, passed) = match args.kind {
        TheoremKind::Generic => (GENERIC_WITNESS, witness.g_av < GENERIC_WITNESS),
        _ => (COMMUTING_FLOOR, witness.g_av >= COMMUTING_FLOOR),
    };
    let report = TheoremReport {
        kind: args.kind.name(),
        seeds: args.seeds,
        dim: args.dim,
        min_g_av: witness.g_av,
        witness,
        threshold,
        passed,
    };
    out.finish("theorem-check", cfg, args, report)?;
    if !passed {
        return Err(CliError::Validation(match args.kind {
            TheoremKind::Generic => format!("no gain below {GENERIC_WITNESS:e} found (min {:e})", witness.g_av),
            _ => format!("gain {:e} below {COMMUTING_FLOOR:e} at {witness:?}", witness.g_av),
        }));
    }
    Ok(())
}
