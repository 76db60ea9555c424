//! Quantitative diagnostics: the restart-smoothing functional `M(delta)`,
//! the exact Beta-integral quadrature, the Volterra inequality check, and
//! the short-time L2 stability experiment with contraction factor
//! `kappa = C_hat * pi * M(delta)` and bound `||w(T0)||_2 / (1 - kappa)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::solver::{evolve, random_divfree, SolverConfig, Trajectory};

/// Discrete sup of `sqrt(s - t0) ||v(s)||_inf` over sample times in
/// `(t0, t0 + delta]`.
pub fn smoothing_functional(traj: &Trajectory, t0: f64, delta: f64) -> Result<f64> {
    weighted_sup(traj, None, t0, delta)
}

/// Two-solution form: the sup weights the *sum* of both sup-norms, which is
/// the quantity entering the contraction factor.
pub fn smoothing_functional_pair(
    a: &Trajectory,
    b: &Trajectory,
    t0: f64,
    delta: f64,
) -> Result<f64> {
    check_shared_grid(a, b)?;
    weighted_sup(a, Some(b), t0, delta)
}

fn weighted_sup(a: &Trajectory, b: Option<&Trajectory>, t0: f64, delta: f64) -> Result<f64> {
    let hi = t0 + delta;
    let mut best: Option<f64> = None;
    for (i, d) in a.diagnostics.iter().enumerate() {
        if d.t > t0 + 1e-12 * t0.abs().max(1.0) && d.t <= hi * (1.0 + 1e-12) {
            let linf = d.linf + b.map_or(0.0, |tb| tb.diagnostics[i].linf);
            let weighted = (d.t - t0).sqrt() * linf;
            best = Some(best.map_or(weighted, |m: f64| m.max(weighted)));
        }
    }
    best.ok_or(Error::EmptySampleWindow { lo: t0, hi })
}

/// `M(delta)` sampled over a list of windows, with the per-sample weighted
/// values retained for inspection.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SmoothingProfile {
    pub t0: f64,
    /// `(t, ||v(t)||_inf, sqrt(t - t0) ||v(t)||_inf)` for t in the largest window.
    pub samples: Vec<(f64, f64, f64)>,
    /// `(delta, M(delta))`, sorted by delta.
    pub m_of_delta: Vec<(f64, f64)>,
}

impl SmoothingProfile {
    /// Sup over growing windows can only grow.
    pub fn is_monotone(&self) -> bool {
        self.m_of_delta.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-14))
    }

    /// Least-squares slope of `log M(delta)` against `log delta`.
    pub fn log_log_slope(&self) -> f64 {
        log_log_slope(&self.m_of_delta)
    }
}

pub fn smoothing_profile(traj: &Trajectory, t0: f64, deltas: &[f64]) -> Result<SmoothingProfile> {
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let delta_max = *sorted.last().ok_or(Error::EmptySampleWindow { lo: t0, hi: t0 })?;
    let mut m_of_delta = Vec::with_capacity(sorted.len());
    for &d in &sorted {
        m_of_delta.push((d, smoothing_functional(traj, t0, d)?));
    }
    let samples = traj
        .diagnostics
        .iter()
        .filter(|s| s.t > t0 && s.t <= t0 + delta_max * (1.0 + 1e-12))
        .map(|s| (s.t, s.linf, (s.t - t0).sqrt() * s.linf))
        .collect();
    Ok(SmoothingProfile {
        t0,
        samples,
        m_of_delta,
    })
}

pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    cov / var
}

/// Quadrature rule for `int_{t0}^{t} (t-s)^{-1/2} (s-t0)^{-1/2} ds`.
#[derive(Debug, Clone, Copy)]
pub enum BetaRule {
    /// `s = t0 + (t - t0) sin^2(theta)` turns the integrand into the
    /// constant 2 on `[0, pi/2]`; any node count returns pi to rounding.
    SubstitutionExact { nodes: usize },
    /// Midpoint rule on the raw singular integrand; converges like
    /// `cells^{-1/2}` and exists for convergence studies.
    Midpoint { cells: usize },
}

/// The substituted integrand; identically 2 by the algebraic identity
/// `(t-s)(s-t0) = (t-t0)^2 sin^2 cos^2` with `ds = 2 (t-t0) sin cos dtheta`.
pub fn beta_substituted_integrand(_t0: f64, _t: f64, _theta: f64) -> f64 {
    2.0
}

pub fn beta_quadrature(t0: f64, t: f64, rule: BetaRule) -> Result<f64> {
    if !(t > t0) {
        return Err(Error::InvalidQuadratureInterval { t0, t });
    }
    match rule {
        BetaRule::SubstitutionExact { nodes } => {
            let nodes = nodes.max(1);
            let mut acc = 0.0;
            for i in 0..nodes {
                let theta = (i as f64 + 0.5) / nodes as f64 * std::f64::consts::FRAC_PI_2;
                acc += beta_substituted_integrand(t0, t, theta);
            }
            Ok(acc / nodes as f64 * std::f64::consts::FRAC_PI_2)
        }
        BetaRule::Midpoint { cells } => {
            let cells = cells.max(1);
            let a = t - t0;
            let h = a / cells as f64;
            let mut acc = crate::norms::Compensated::new();
            for i in 0..cells {
                let s = (i as f64 + 0.5) * h;
                acc.add((a - s).powf(-0.5) * s.powf(-0.5));
            }
            Ok(acc.value() * h)
        }
    }
}

/// Exact integral of `(t-s)^{-1/2} (s-t0)^{-1/2} psi(s)` over `[lo, hi]`
/// with `psi` affine on the subinterval, via the sine substitution:
/// antiderivative `2 [(alpha + beta t0) theta + beta a (theta/2 - sin(2 theta)/4)]`.
fn singular_segment(t0: f64, t: f64, lo: f64, hi: f64, psi_lo: f64, psi_hi: f64) -> f64 {
    let a = t - t0;
    debug_assert!(lo >= t0 - 1e-15 && hi <= t * (1.0 + 1e-15) && hi > lo);
    let beta = (psi_hi - psi_lo) / (hi - lo);
    let alpha = psi_lo - beta * lo;
    let theta = |s: f64| ((s - t0) / a).clamp(0.0, 1.0).sqrt().asin();
    let (th0, th1) = (theta(lo), theta(hi));
    let lin = (alpha + beta * t0) * (th1 - th0);
    let quad = beta * a * ((th1 - th0) / 2.0 - ((2.0 * th1).sin() - (2.0 * th0).sin()) / 4.0);
    2.0 * (lin + quad)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct VolterraPoint {
    pub t: f64,
    /// `||w(t)||_2`
    pub lhs: f64,
    /// `||w(t0)||_2 + C_hat * Q(t)`
    pub rhs: f64,
    pub pass: bool,
}

fn check_shared_grid(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.times.len() != b.times.len() {
        return Err(Error::MismatchedTimeGrid(format!(
            "lengths {} vs {}",
            a.times.len(),
            b.times.len()
        )));
    }
    for (x, y) in a.times.iter().zip(&b.times) {
        if (x - y).abs() > 1e-12 * x.abs().max(1.0) {
            return Err(Error::MismatchedTimeGrid(format!("times {x} vs {y}")));
        }
    }
    Ok(())
}

/// Pointwise check of the Volterra inequality
/// `||w(t)||_2 <= ||w(t0)||_2 + C int (t-s)^{-1/2} (||v1||_inf + ||v2||_inf) ||w||_2 ds`
/// on the shared sample grid. The singular integral pulls the
/// `(s-t0)^{-1/2}` weight out of the data, interpolates the bounded factor
/// `sqrt(s-t0) (||v1||_inf + ||v2||_inf) ||w||_2` linearly between samples,
/// and integrates each subinterval exactly under the sine substitution.
pub fn volterra_check(
    a: &Trajectory,
    b: &Trajectory,
    t0: f64,
    c_hat: f64,
    t_samples: &[f64],
) -> Result<Vec<VolterraPoint>> {
    check_shared_grid(a, b)?;
    let i0 = a.index_of_time(t0)?;
    let times = &a.times[i0..];
    let w_l2: Vec<f64> = (i0..a.times.len())
        .map(|i| a.states[i].sub(&b.states[i]).parseval_l2())
        .collect();
    let psi: Vec<f64> = times
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let linf_sum = a.diagnostics[i0 + j].linf + b.diagnostics[i0 + j].linf;
            (s - t0).max(0.0).sqrt() * linf_sum * w_l2[j]
        })
        .collect();
    let mut out = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let jt = a
            .index_of_time(t)?
            .checked_sub(i0)
            .filter(|&j| j > 0)
            .ok_or(Error::InvalidQuadratureInterval { t0, t })?;
        let mut q = 0.0;
        for j in 0..jt {
            q += singular_segment(t0, t, times[j], times[j + 1], psi[j], psi[j + 1]);
        }
        let lhs = w_l2[jt];
        let rhs = w_l2[0] + c_hat * q;
        out.push(VolterraPoint {
            t,
            lhs,
            rhs,
            pass: lhs <= rhs * (1.0 + 1e-6),
        });
    }
    Ok(out)
}

/// `kappa = C_hat * pi * m`.
pub fn kappa(c_hat: f64, m: f64) -> f64 {
    debug_assert!(c_hat >= 0.0 && m >= 0.0);
    c_hat * std::f64::consts::PI * m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChatProvenance {
    /// Empirical max of `sqrt(t) ||K(t)||_1` over a finite t-grid.
    Estimated,
    UserSupplied,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StabilityConfig {
    /// Restart time; the base flow is evolved over `[0, t0]` first.
    pub t0: f64,
    /// Initial smoothing window; halved until `kappa <= kappa_target`.
    pub delta0: f64,
    /// L2 size of the divergence-free perturbation at the restart time.
    pub eps: f64,
    pub seed: u64,
    /// Shrink target for kappa; 1/2 keeps the bound factor at most 2.
    pub kappa_target: f64,
    pub c_hat: f64,
    pub c_hat_provenance: ChatProvenance,
    /// Spectral decay of the seeded perturbation direction.
    pub perturbation_sigma: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            t0: 0.05,
            delta0: 0.05,
            eps: 1e-3,
            seed: 0,
            kappa_target: 0.5,
            c_hat: 1.0,
            c_hat_provenance: ChatProvenance::UserSupplied,
            perturbation_sigma: 2.0,
        }
    }
}

/// Everything the stability bound needs, plus the verdict.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StabilityReport {
    pub seed: u64,
    pub t0: f64,
    pub delta: f64,
    pub eps: f64,
    pub c_hat: f64,
    pub c_hat_provenance: ChatProvenance,
    pub m_delta: f64,
    pub kappa: f64,
    pub w0_norm: f64,
    pub sup_w: f64,
    /// `w0_norm / (1 - kappa)`; infinite when kappa >= 1 (never after shrink).
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

impl StabilityReport {
    pub const CSV_HEADER: &'static str =
        "seed,t0,delta,eps,c_hat,m_delta,kappa,w0,sup_w,bound,margin,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.seed,
            self.t0,
            self.delta,
            self.eps,
            self.c_hat,
            self.m_delta,
            self.kappa,
            self.w0_norm,
            self.sup_w,
            self.bound,
            self.margin,
            u8::from(self.pass)
        )
    }
}

/// Outcome of one trial: the report plus the pointwise Volterra check on the
/// same trajectory pair.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StabilityTrial {
    pub report: StabilityReport,
    pub volterra_all_pass: bool,
    pub volterra_worst_ratio: f64,
}

fn validate_stability_config(cfg: &StabilityConfig) -> Result<()> {
    if !(cfg.eps >= 0.0) || !(cfg.delta0 > 0.0) || !(cfg.t0 >= 0.0) {
        return Err(Error::InvalidConfig(
            "stability requires eps >= 0, delta0 > 0, t0 >= 0".into(),
        ));
    }
    if !(cfg.kappa_target > 0.0 && cfg.kappa_target < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "kappa_target must lie in (0, 1), got {}",
            cfg.kappa_target
        )));
    }
    Ok(())
}

/// Base-flow window shared by every trial of a campaign: the unperturbed
/// trajectory over `[t0, t0 + delta0]`.
pub fn stability_base_window(
    v_base: &crate::field::SpectralVectorField,
    cfg: &StabilityConfig,
    solver: &SolverConfig,
) -> Result<Trajectory> {
    validate_stability_config(cfg)?;
    let v1_t0 = if cfg.t0 > 0.0 {
        evolve(v_base, 0.0, cfg.t0, solver)?.states.pop().unwrap()
    } else {
        v_base.clone()
    };
    evolve(&v1_t0, cfg.t0, cfg.t0 + cfg.delta0, solver)
}

/// Run the stability experiment: evolve the base flow to `t0`, plant a
/// seeded unit-L2 divergence-free perturbation of size `eps`, evolve both
/// solutions over `[t0, t0 + delta0]`, shrink `delta` until
/// `kappa <= kappa_target`, and check `sup ||w||_2 <= ||w(t0)||_2 / (1 - kappa)`.
pub fn stability_experiment(
    v_base: &crate::field::SpectralVectorField,
    cfg: &StabilityConfig,
    solver: &SolverConfig,
) -> Result<StabilityTrial> {
    let traj1 = stability_base_window(v_base, cfg, solver)?;
    stability_trial_against(&traj1, cfg, solver)
}

/// One trial against a precomputed base window (`traj1.times[0]` must be
/// the restart time `cfg.t0`).
pub fn stability_trial_against(
    traj1: &Trajectory,
    cfg: &StabilityConfig,
    solver: &SolverConfig,
) -> Result<StabilityTrial> {
    validate_stability_config(cfg)?;
    let v1_t0 = &traj1.states[0];
    let direction = random_divfree(v1_t0.grid(), cfg.seed, cfg.perturbation_sigma)?;
    let v2_t0 = v1_t0.add_scaled(&direction, cfg.eps);
    let t_end = cfg.t0 + cfg.delta0;
    let traj2 = evolve(&v2_t0, cfg.t0, t_end, solver)?;

    // Shrink the window until the contraction factor is comfortable. M is a
    // sup over a shrinking set, so halving can only reduce kappa.
    let mut delta = cfg.delta0;
    let (m_delta, kap) = loop {
        if delta < solver.dt * (1.0 - 1e-12) {
            return Err(Error::DeltaUnderflow {
                target: cfg.kappa_target,
                dt: solver.dt,
            });
        }
        let m = smoothing_functional_pair(traj1, &traj2, cfg.t0, delta)?;
        let k = kappa(cfg.c_hat, m);
        if k <= cfg.kappa_target {
            break (m, k);
        }
        delta *= 0.5;
    };

    let w0_norm = v2_t0.sub(v1_t0).parseval_l2();
    let hi = cfg.t0 + delta;
    let mut sup_w = 0.0_f64;
    let mut volterra_times = Vec::new();
    for (i, &t) in traj1.times.iter().enumerate() {
        if t <= hi * (1.0 + 1e-12) {
            sup_w = sup_w.max(traj1.states[i].sub(&traj2.states[i]).parseval_l2());
            if t > cfg.t0 {
                volterra_times.push(t);
            }
        }
    }
    let bound = w0_norm / (1.0 - kap);
    let pass = kap < 1.0 && sup_w <= bound * (1.0 + 1e-8);
    let report = StabilityReport {
        seed: cfg.seed,
        t0: cfg.t0,
        delta,
        eps: cfg.eps,
        c_hat: cfg.c_hat,
        c_hat_provenance: cfg.c_hat_provenance,
        m_delta,
        kappa: kap,
        w0_norm,
        sup_w,
        bound,
        margin: bound - sup_w,
        pass,
    };
    let volterra = volterra_check(traj1, &traj2, cfg.t0, cfg.c_hat, &volterra_times)?;
    let volterra_all_pass = volterra.iter().all(|p| p.pass);
    let volterra_worst_ratio = volterra
        .iter()
        .map(|p| if p.rhs > 0.0 { p.lhs / p.rhs } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(StabilityTrial {
        report,
        volterra_all_pass,
        volterra_worst_ratio,
    })
}

/// Seeded campaign; the base window is evolved once, trials run in parallel
/// and aggregate in seed order, so the output is reproducible regardless of
/// thread count.
pub fn stability_campaign(
    v_base: &crate::field::SpectralVectorField,
    seeds: &[u64],
    cfg: &StabilityConfig,
    solver: &SolverConfig,
) -> Result<Vec<StabilityTrial>> {
    let traj1 = stability_base_window(v_base, cfg, solver)?;
    let mut results: Vec<(u64, Result<StabilityTrial>)> = seeds
        .par_iter()
        .map(|&seed| {
            let trial_cfg = StabilityConfig { seed, ..cfg.clone() };
            (seed, stability_trial_against(&traj1, &trial_cfg, solver))
        })
        .collect();
    results.sort_by_key(|(seed, _)| *seed);
    results.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::solver::{taylor_green, taylor_green_with_drift};

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    #[test]
    fn beta_substitution_is_exact() {
        for (t0, t) in [(0.0, 1.0), (0.3, 0.31), (-2.0, 17.0), (1e5, 1e5 + 1e-9)] {
            let v = beta_quadrature(t0, t, BetaRule::SubstitutionExact { nodes: 37 }).unwrap();
            assert!((v - std::f64::consts::PI).abs() < 1e-12, "({t0},{t}): {v}");
        }
        assert!(beta_quadrature(1.0, 1.0, BetaRule::SubstitutionExact { nodes: 4 }).is_err());
        assert!(beta_quadrature(1.0, 0.5, BetaRule::Midpoint { cells: 4 }).is_err());
        for i in 0..20 {
            let theta = i as f64 / 20.0 * std::f64::consts::FRAC_PI_2;
            assert_eq!(beta_substituted_integrand(0.2, 0.9, theta), 2.0);
        }
    }

    #[test]
    fn midpoint_rule_converges_like_inverse_sqrt() {
        let errs: Vec<(f64, f64)> = (4..14)
            .map(|p| {
                let cells = 1usize << p;
                let v = beta_quadrature(0.0, 1.0, BetaRule::Midpoint { cells }).unwrap();
                (cells as f64, (v - std::f64::consts::PI).abs())
            })
            .collect();
        let rate = log_log_slope(&errs);
        assert!((rate + 0.5).abs() <= 0.1, "midpoint rate {rate}");
    }

    #[test]
    fn smoothing_on_zero_and_constant_trajectories() {
        let g = grid(16);
        let cfg = SolverConfig {
            n: 16,
            dt: 1e-3,
            ..Default::default()
        };
        let zero = evolve(&crate::field::SpectralVectorField::zero(g), 0.0, 0.05, &cfg).unwrap();
        assert_eq!(smoothing_functional(&zero, 0.0, 0.05).unwrap(), 0.0);

        // Pure mean flow: ||v||_inf constant in time, so M(delta) = c sqrt(delta).
        let c = 1.5;
        let steady = taylor_green_with_drift(g, 0.0, [c, 0.0]);
        let traj = evolve(&steady, 0.0, 0.05, &cfg).unwrap();
        for delta in [0.01, 0.02, 0.05] {
            let m = smoothing_functional(&traj, 0.0, delta).unwrap();
            assert!((m - c * delta.sqrt()).abs() < 1e-12, "delta={delta}: {m}");
        }
        assert!(matches!(
            smoothing_functional(&traj, 0.0, 1e-5),
            Err(Error::EmptySampleWindow { .. })
        ));
    }

    #[test]
    fn smoothing_profile_monotone_and_sqrt_slope() {
        let g = grid(32);
        let cfg = SolverConfig {
            n: 32,
            dt: 1e-3,
            ..Default::default()
        };
        let v0 = taylor_green_with_drift(g, 0.1, [1.0, 0.5]);
        let traj = evolve(&v0, 0.0, 0.1, &cfg).unwrap();
        let deltas = crate::oseen::log_spaced(1e-3, 1e-1, 13);
        let profile = smoothing_profile(&traj, 0.0, &deltas).unwrap();
        assert!(profile.is_monotone());
        let slope = profile.log_log_slope();
        assert!((slope - 0.5).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn rough_data_smoothing_vanishes() {
        // Slowly decaying spectrum (band-limited proxy for rough data): the
        // sup-norm stays finite for t > 0 and the weighted sup decays like
        // sqrt(delta) toward zero.
        let g = grid(64);
        let v0 = crate::solver::random_divfree(g, 21, 1.6).unwrap();
        let cfg = SolverConfig {
            n: 64,
            dt: 1e-4,
            ..Default::default()
        };
        let traj = evolve(&v0, 0.0, 0.02, &cfg).unwrap();
        assert!(traj.diagnostics.iter().all(|d| d.linf.is_finite()));
        let deltas = crate::oseen::log_spaced(1e-3, 2e-2, 7);
        let profile = smoothing_profile(&traj, 0.0, &deltas).unwrap();
        assert!(profile.is_monotone());
        let (m_min, m_max) = (profile.m_of_delta[0].1, profile.m_of_delta.last().unwrap().1);
        // Shrinking windows drive M down, pinned under the sqrt(delta)
        // envelope of the window sup-norm (high modes decay, so the ratio to
        // M(delta_max) sits above the constant-linf sqrt rate).
        assert!(m_min < 0.75 * m_max, "no decay: {m_min} vs {m_max}");
        let linf_window = traj
            .diagnostics
            .iter()
            .filter(|d| d.t > 0.0 && d.t <= deltas[0] * (1.0 + 1e-12))
            .map(|d| d.linf)
            .fold(0.0, f64::max);
        assert!(m_min <= deltas[0].sqrt() * linf_window * (1.0 + 1e-12));
    }

    #[test]
    fn pair_functional_brackets_the_single_sups() {
        let g = grid(16);
        let cfg = SolverConfig {
            n: 16,
            dt: 1e-3,
            ..Default::default()
        };
        let a = evolve(&taylor_green_with_drift(g, 0.0, [1.0, 0.0]), 0.0, 0.02, &cfg).unwrap();
        let b = evolve(&taylor_green_with_drift(g, 0.0, [0.0, 0.5]), 0.0, 0.02, &cfg).unwrap();
        for delta in [0.005, 0.02] {
            let ma = smoothing_functional(&a, 0.0, delta).unwrap();
            let mb = smoothing_functional(&b, 0.0, delta).unwrap();
            let pair = smoothing_functional_pair(&a, &b, 0.0, delta).unwrap();
            assert!(pair >= ma.max(mb) && pair <= ma + mb + 1e-15);
            // Constant sup-norms make all three exact.
            assert!((pair - 1.5 * delta.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_closed_forms() {
        assert_eq!(kappa(3.0, 0.0), 0.0);
        let k = kappa(1.0, 1.0 / std::f64::consts::PI);
        assert!((k - 1.0).abs() < 1e-15);
    }

    #[test]
    fn volterra_trivial_cases() {
        let g = grid(16);
        let cfg = SolverConfig {
            n: 16,
            dt: 1e-3,
            linear_only: true,
            ..Default::default()
        };
        let a = evolve(&taylor_green(g, 1.0), 0.0, 0.02, &cfg).unwrap();
        // Identical trajectories: lhs = 0 <= rhs everywhere.
        let pts = volterra_check(&a, &a, 0.0, 1.5, &a.times[1..]).unwrap();
        assert!(pts.iter().all(|p| p.lhs == 0.0 && p.pass));

        // Heat-only pair with different data: the semigroup contracts, so
        // lhs <= ||w(t0)||_2, the first rhs term alone.
        let b = evolve(&taylor_green(g, 0.5), 0.0, 0.02, &cfg).unwrap();
        let pts = volterra_check(&a, &b, 0.0, 1.5, &a.times[1..]).unwrap();
        for p in &pts {
            let w0 = (1.0_f64 - 0.5) / 2.0_f64.sqrt();
            assert!(p.lhs <= w0 * (1.0 + 1e-12));
            assert!(p.pass);
        }

        let short = evolve(&taylor_green(g, 1.0), 0.0, 0.01, &cfg).unwrap();
        assert!(matches!(
            volterra_check(&a, &short, 0.0, 1.5, &[0.01]),
            Err(Error::MismatchedTimeGrid(_))
        ));
    }

    #[test]
    fn stability_zero_perturbation_passes_exactly() {
        let g = grid(32);
        let solver = SolverConfig {
            n: 32,
            dt: 1e-3,
            ..Default::default()
        };
        let cfg = StabilityConfig {
            t0: 0.01,
            delta0: 0.02,
            eps: 0.0,
            c_hat: 1.63,
            c_hat_provenance: ChatProvenance::UserSupplied,
            ..Default::default()
        };
        let trial = stability_experiment(&taylor_green(g, 1.0), &cfg, &solver).unwrap();
        assert_eq!(trial.report.sup_w, 0.0);
        assert_eq!(trial.report.w0_norm, 0.0);
        assert!(trial.report.pass);
        assert!(trial.volterra_all_pass);
        // Algebraic identity of the bound.
        let r = &trial.report;
        assert!((r.bound * (1.0 - r.kappa) - r.w0_norm).abs() <= 1e-12 * r.w0_norm.max(1e-300));
    }

    #[test]
    fn stability_auto_shrink_and_underflow() {
        let g = grid(32);
        let solver = SolverConfig {
            n: 32,
            dt: 1e-3,
            ..Default::default()
        };
        // A kernel constant large enough that kappa(delta0) > 1/2 but small
        // enough that halving down to a dt-sized window rescues it.
        let cfg = StabilityConfig {
            t0: 0.0,
            delta0: 0.032,
            eps: 1e-3,
            c_hat: 2.2,
            c_hat_provenance: ChatProvenance::UserSupplied,
            seed: 3,
            ..Default::default()
        };
        let trial = stability_experiment(&taylor_green(g, 1.0), &cfg, &solver).unwrap();
        assert!(trial.report.delta < 0.032);
        assert!(trial.report.kappa <= 0.5);
        assert!(trial.report.pass);

        let hopeless = StabilityConfig {
            c_hat: 1e9,
            ..cfg
        };
        assert!(matches!(
            stability_experiment(&taylor_green(g, 1.0), &hopeless, &solver),
            Err(Error::DeltaUnderflow { .. })
        ));
    }

    #[test]
    fn small_campaign_all_pass() {
        let g = grid(32);
        let solver = SolverConfig {
            n: 32,
            dt: 1e-3,
            ..Default::default()
        };
        let cfg = StabilityConfig {
            t0: 0.01,
            delta0: 0.02,
            eps: 1e-3,
            c_hat: 1.63,
            c_hat_provenance: ChatProvenance::Estimated,
            ..Default::default()
        };
        let trials =
            stability_campaign(&taylor_green(g, 1.0), &[0, 1, 2, 3], &cfg, &solver).unwrap();
        assert_eq!(trials.len(), 4);
        for t in &trials {
            assert!(t.report.pass && t.volterra_all_pass);
            assert!(t.report.margin > 0.0);
            assert!(t.report.kappa <= 0.5);
        }
        // Same seeds, same bits.
        let again =
            stability_campaign(&taylor_green(g, 1.0), &[0, 1, 2, 3], &cfg, &solver).unwrap();
        for (a, b) in trials.iter().zip(&again) {
            assert_eq!(a.report.sup_w, b.report.sup_w);
            assert_eq!(a.report.m_delta, b.report.m_delta);
        }
    }
}
