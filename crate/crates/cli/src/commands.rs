//! Command implementations. Each validates its config, computes, writes the
//! CSV/JSON artifacts atomically, and maps outcomes onto the exit codes:
//! 0 pass, 1 bound violation, 2 numerical non-convergence, 3 config error.

use std::path::Path;

use serde_json::json;

use torusns::diagnostics::{
    beta_quadrature, smoothing_profile, stability_base_window, stability_trial_against, BetaRule,
    ChatProvenance, StabilityConfig, StabilityReport,
};
use torusns::field::{to_physical, PhysicalTensorField};
use torusns::lorentz::{embedding_ratio_check, indicator_field, lorentz_norm, product_l1_check};
use torusns::norms::l2_norm;
use torusns::ops::{divergence_of_tensor, heat_semigroup, leray_project};
use torusns::oseen::{apply_oseen, kernel_norm_profile, log_spaced, ResolutionPolicy};
use torusns::solver::{
    evolve, nonlinear_term, random_divfree, restart_consistency, taylor_green, write_state,
    SolverConfig, Trajectory,
};
use torusns::TorusGrid;

use crate::config::{
    KernelBoundsConfig, LorentzConfig, SimulateConfig, SmoothingConfig, StabilityCliConfig,
};
use crate::output::OutDir;
use crate::Failure;

fn map_core(e: torusns::Error) -> Failure {
    use torusns::Error::*;
    match e {
        PicardNonConvergence { .. } | StepFailed { .. } | NoConvergedEntry
        | DeltaUnderflow { .. } => Failure::nonconverged(&e.to_string()),
        _ => Failure::config(&e.to_string()),
    }
}

pub fn kernel_bounds(cfg: &KernelBoundsConfig, out: &mut OutDir) -> Result<(), Failure> {
    let times = cfg.times()?;
    let policy = ResolutionPolicy {
        n_min: cfg.n_min,
        n_max: cfg.n_max,
        tolerance: cfg.tolerance,
    };
    let profile = kernel_norm_profile(&times, &policy).map_err(map_core)?;
    out.csv(
        "kernel_profile.csv",
        torusns::oseen::KernelNormProfile::CSV_HEADER,
        &profile.csv_rows(),
    )?;
    let c_hat = profile
        .entries
        .iter()
        .filter(|e| e.converged && e.t <= cfg.c_hat_t_max * (1.0 + 1e-12))
        .map(|e| e.sqrt_t_l1())
        .fold(f64::NEG_INFINITY, f64::max);
    let converged = profile.entries.iter().filter(|e| e.converged).count();
    out.json(
        "kernel_bounds.json",
        json!({
            "c_hat": if c_hat.is_finite() { Some(c_hat) } else { None },
            "c_hat_t_range": [times[0], cfg.c_hat_t_max.min(*times.last().unwrap())],
            "c_hat_provenance": "estimated",
            "t_range": [times[0], times.last().unwrap()],
            "entries": profile.entries.len(),
            "converged_entries": converged,
            "tolerance": cfg.tolerance,
        }),
    )?;
    if converged < profile.entries.len() {
        return Err(Failure::nonconverged(&format!(
            "{} of {} kernel profile entries not grid-converged to {} by n = {}",
            profile.entries.len() - converged,
            profile.entries.len(),
            cfg.tolerance,
            cfg.n_max
        )));
    }
    println!(
        "kernel-bounds: {} entries converged, C_hat = {:.6}",
        profile.entries.len(),
        c_hat
    );
    Ok(())
}

pub fn lorentz(cfg: &LorentzConfig, out: &mut OutDir, seed_override: Option<u64>) -> Result<(), Failure> {
    cfg.validate()?;
    let seed0 = seed_override.unwrap_or(cfg.seed);
    let mut rows = Vec::new();
    let mut summary_per_n = Vec::new();
    let mut all_pass = true;
    for &n in &cfg.n_list {
        let grid = TorusGrid::new(n).unwrap();
        let sigma = |i: u64| {
            cfg.sigma_min + (cfg.sigma_max - cfg.sigma_min) * ((i % 17) as f64 / 16.0)
        };
        let mut max_embedding_ratio = 0.0_f64;
        for i in 0..cfg.fields as u64 {
            let f = to_physical(&random_divfree(grid, seed0 + i, sigma(i)).map_err(map_core)?)
                .magnitude();
            for &q in &cfg.q_list {
                let check = embedding_ratio_check(&f, q).map_err(map_core)?;
                let norm = lorentz_norm(&f, 2.0, q).map_err(map_core)?;
                all_pass &= check.pass;
                max_embedding_ratio = max_embedding_ratio.max(check.ratio);
                rows.push(format!(
                    "n{n}_s{i},2,{q},{:.16e},{:.16e},{:.16e},{}",
                    norm,
                    check.ratio,
                    check.bound,
                    u8::from(check.pass)
                ));
            }
        }
        let mut oneil = 0.0_f64;
        let mut lemma_pass = true;
        for i in 0..cfg.pairs as u64 {
            let base = seed0 + 100_000 + 2 * i;
            let w = to_physical(&random_divfree(grid, base, sigma(i)).map_err(map_core)?)
                .magnitude();
            let z = to_physical(&random_divfree(grid, base + 1, sigma(i + 7)).map_err(map_core)?)
                .magnitude();
            let check = product_l1_check(&w, &z).map_err(map_core)?;
            lemma_pass &= check.l2_pass;
            oneil = oneil.max(check.ratio);
        }
        all_pass &= lemma_pass && oneil <= 1.0 + 1e-12;
        summary_per_n.push(json!({
            "n": n,
            "max_embedding_ratio": max_embedding_ratio,
            "empirical_product_constant": oneil,
            "product_l2_estimate_pass": lemma_pass,
        }));
    }
    out.csv("lorentz_corpus.csv", "field_id,p,r,norm,ratio,bound,pass", &rows)?;
    out.json(
        "lorentz_summary.json",
        json!({
            "per_resolution": summary_per_n,
            "q_list": cfg.q_list,
            "fields_per_resolution": cfg.fields,
            "pairs_per_resolution": cfg.pairs,
            "all_pass": all_pass,
        }),
    )?;
    if !all_pass {
        return Err(Failure::violation("a Lorentz inequality check failed; see lorentz_summary.json"));
    }
    println!("lorentz: corpus checks passed on n = {:?}", cfg.n_list);
    Ok(())
}

pub fn simulate(cfg: &SimulateConfig, out: &mut OutDir, seed_override: Option<u64>) -> Result<(), Failure> {
    cfg.validate()?;
    let grid = TorusGrid::new(cfg.solver.n).unwrap();
    let v0 = cfg.preset.build(grid, seed_override)?;
    let traj = evolve(&v0, cfg.t0, cfg.t_end, &cfg.solver).map_err(map_core)?;
    out.csv("trajectory.csv", Trajectory::CSV_HEADER, &traj.csv_rows())?;
    for &t in &cfg.dump_times {
        let idx = traj.index_of_time(t).map_err(map_core)?;
        let mut bytes = Vec::new();
        write_state(&mut bytes, &traj.states[idx], traj.times[idx]).map_err(map_core)?;
        out.bin(&format!("state_{idx:06}.bin", idx = idx), &bytes)?;
    }
    let invariants = traj.validate();
    out.json(
        "simulate_summary.json",
        json!({
            "preset": cfg.preset,
            "solver": cfg.solver,
            "t0": cfg.t0,
            "t_end": cfg.t_end,
            "samples": traj.len(),
            "final_l2": traj.diagnostics.last().unwrap().l2,
            "final_linf": traj.diagnostics.last().unwrap().linf,
            "invariants_ok": invariants.is_ok(),
        }),
    )?;
    if let Err(e) = invariants {
        return Err(Failure::violation(&format!("trajectory invariant violated: {e}")));
    }
    println!(
        "simulate: {} samples to t = {}, final l2 = {:.6e}",
        traj.len(),
        cfg.t_end,
        traj.diagnostics.last().unwrap().l2
    );
    Ok(())
}

pub fn smoothing(cfg: &SmoothingConfig, out: &mut OutDir, seed_override: Option<u64>) -> Result<(), Failure> {
    cfg.validate()?;
    let grid = TorusGrid::new(cfg.solver.n).unwrap();
    let v0 = cfg.preset.build(grid, seed_override)?;
    let traj = evolve(&v0, 0.0, cfg.t0 + cfg.delta_max, &cfg.solver).map_err(map_core)?;
    let deltas = log_spaced(cfg.delta_min, cfg.delta_max, cfg.delta_count);
    let profile = smoothing_profile(&traj, cfg.t0, &deltas).map_err(map_core)?;
    let rows: Vec<String> = profile
        .m_of_delta
        .iter()
        .map(|(d, m)| format!("{d:.16e},{m:.16e}"))
        .collect();
    out.csv("smoothing.csv", "delta,m_delta", &rows)?;
    let slope = profile.log_log_slope();
    let monotone = profile.is_monotone();
    let slope_ok = cfg
        .expected_slope
        .map(|[lo, hi]| slope >= lo && slope <= hi)
        .unwrap_or(true);
    out.json(
        "smoothing_summary.json",
        json!({
            "t0": cfg.t0,
            "delta_range": [cfg.delta_min, cfg.delta_max],
            "m_min": profile.m_of_delta.first().map(|p| p.1),
            "m_max": profile.m_of_delta.last().map(|p| p.1),
            "slope": slope,
            "monotone": monotone,
            "expected_slope": cfg.expected_slope,
            "pass": monotone && slope_ok,
        }),
    )?;
    if !monotone {
        return Err(Failure::violation("M(delta) is not monotone in delta"));
    }
    if !slope_ok {
        return Err(Failure::violation(&format!(
            "fitted slope {slope:.4} outside expected {:?}",
            cfg.expected_slope.unwrap()
        )));
    }
    println!("smoothing: slope = {slope:.4}, monotone = {monotone}");
    Ok(())
}

pub fn stability(cfg: &StabilityCliConfig, out: &mut OutDir, seed_override: Option<u64>) -> Result<(), Failure> {
    cfg.validate()?;
    let seed0 = seed_override.unwrap_or(cfg.seed0);
    let grid = TorusGrid::new(cfg.solver.n).unwrap();
    let v_base = cfg.preset.build(grid, None)?;

    let (c_hat, provenance) = match cfg.c_hat {
        Some(c) => (c, ChatProvenance::UserSupplied),
        None => {
            let policy = ResolutionPolicy {
                n_min: cfg.c_hat_policy.n_min,
                n_max: cfg.c_hat_policy.n_max,
                tolerance: cfg.c_hat_policy.tolerance,
            };
            let estimate = torusns::oseen::estimate_kernel_constant(
                cfg.c_hat_policy.t_min,
                cfg.c_hat_policy.t_max,
                cfg.c_hat_policy.samples,
                &policy,
            )
            .map_err(map_core)?;
            (estimate.c_hat, ChatProvenance::Estimated)
        }
    };

    let mut rows = Vec::new();
    let mut trials_json = Vec::new();
    let mut pass_count = 0usize;
    let mut volterra_all = true;
    let total = cfg.trials * cfg.t0_list.len();
    for &t0 in &cfg.t0_list {
        let base_cfg = StabilityConfig {
            t0,
            delta0: cfg.delta0,
            eps: cfg.eps,
            seed: seed0,
            kappa_target: cfg.kappa_target,
            c_hat,
            c_hat_provenance: provenance,
            perturbation_sigma: cfg.perturbation_sigma,
        };
        let traj1 = stability_base_window(&v_base, &base_cfg, &cfg.solver).map_err(map_core)?;
        // Parallel over seeds, aggregated in seed order for stable output.
        let seeds: Vec<u64> = (0..cfg.trials as u64).map(|i| seed0 + i).collect();
        let results: Vec<_> = {
            use rayon::prelude::*;
            let mut r: Vec<_> = seeds
                .par_iter()
                .map(|&seed| {
                    let tc = StabilityConfig { seed, ..base_cfg.clone() };
                    (seed, stability_trial_against(&traj1, &tc, &cfg.solver))
                })
                .collect();
            r.sort_by_key(|(seed, _)| *seed);
            r
        };
        for (seed, res) in results {
            let trial = res.map_err(map_core)?;
            pass_count += usize::from(trial.report.pass);
            volterra_all &= trial.volterra_all_pass;
            rows.push(trial.report.csv_row());
            let name = format!("trial_t{t0}_s{seed}.json");
            out.json(
                &name,
                json!({
                    "report": trial.report,
                    "volterra_all_pass": trial.volterra_all_pass,
                    "volterra_worst_ratio": trial.volterra_worst_ratio,
                }),
            )?;
            trials_json.push(name);
        }
    }
    out.csv("campaign.csv", StabilityReport::CSV_HEADER, &rows)?;
    out.json(
        "stability_summary.json",
        json!({
            "trials": total,
            "pass_count": pass_count,
            "volterra_all_pass": volterra_all,
            "c_hat": c_hat,
            "c_hat_provenance": provenance,
            "eps": cfg.eps,
            "t0_list": cfg.t0_list,
            "trial_files": trials_json,
        }),
    )?;
    if pass_count < total || !volterra_all {
        return Err(Failure::violation(&format!(
            "stability bound violated in {} of {total} trials (volterra pass: {volterra_all})",
            total - pass_count
        )));
    }
    println!("stability: {pass_count}/{total} trials passed, C_hat = {c_hat:.6}");
    Ok(())
}

/// Quick end-to-end sanity pass over every module; prints one line per check.
pub fn selftest() -> Result<(), Failure> {
    let mut failed = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("selftest {name}: {}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    };

    let beta = beta_quadrature(0.3, 0.7, BetaRule::SubstitutionExact { nodes: 16 }).unwrap();
    check("beta-substitution", (beta - std::f64::consts::PI).abs() <= 1e-12);

    let grid = TorusGrid::new(32).unwrap();
    let v = to_physical(&random_divfree(grid, 5, 1.8).unwrap());
    let f = PhysicalTensorField::outer(&v);
    let direct = apply_oseen(0.02, &f).unwrap();
    let composite =
        heat_semigroup(0.02, &leray_project(&divergence_of_tensor(&f))).unwrap();
    let rel = direct.sub(&composite).parseval_l2() / direct.parseval_l2();
    check("oseen-dual-path", rel <= 1e-13);

    let ind = indicator_field(16, 64);
    let got = lorentz_norm(&ind, 2.0, 1.5).unwrap();
    let expected = (2.0_f64 / 1.5).powf(1.0 / 1.5) * 0.25_f64.sqrt();
    check("lorentz-closed-form", (got - expected).abs() <= 1e-12 * expected);

    let tg = taylor_green(grid, 1.0);
    check("taylor-green-gradient", nonlinear_term(&tg, true).parseval_l2() <= 1e-12);

    let cfg = SolverConfig {
        n: 32,
        dt: 1e-3,
        ..Default::default()
    };
    let traj = evolve(&tg, 0.0, 0.01, &cfg).unwrap();
    let exact = tg.scaled((-8.0 * std::f64::consts::PI.powi(2) * 0.01).exp());
    let err = traj.states.last().unwrap().sub(&exact).parseval_l2() / exact.parseval_l2();
    check("taylor-green-decay", err <= 1e-8);
    check("restart-identity", restart_consistency(&traj, 0.005).unwrap() <= 1e-12);
    check(
        "product-estimate",
        product_l1_check(&v.magnitude(), &to_physical(&tg).magnitude())
            .unwrap()
            .l2_pass,
    );
    check("l2-parseval", {
        let a = l2_norm(&to_physical(&tg));
        (a - tg.parseval_l2()).abs() <= 1e-12 * a
    });

    if failed > 0 {
        return Err(Failure::violation(&format!("{failed} selftest checks failed")));
    }
    Ok(())
}

pub fn write_effective_config<T: serde::Serialize>(
    out: &mut OutDir,
    cfg: &T,
    name: &str,
) -> Result<(), Failure> {
    out.json(name, serde_json::to_value(cfg).map_err(|e| Failure::io(&e.to_string()))?)?;
    Ok(())
}

pub fn outputs_line(out: &OutDir, dir: &Path) -> String {
    format!("wrote {} files to {}", out.written.len(), dir.display())
}
