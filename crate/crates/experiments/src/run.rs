//! Scenario runners: one per exhibit, each producing [`Artifacts`].

use aft_core::distributions::PositiveLaw;
use aft_core::estimators::{
    adjusted_survival, adjusted_theta, cox_fit, kaplan_meier, observed_theta, quantile_ratio_summary, AdjustMethod,
    SUMMARY_LEVELS,
};
use aft_core::oracle::{self, SmoothSurvival, SurvivalFunction};
use aft_core::parallel::{map_indexed, map_slice};
use aft_core::scm::{apply_censoring, generate_cohort, presets};
use aft_core::{AccelCurve, AccelPoint, CensoringSpec, EffectLaw, FrailtyLaw, Grid, Provenance, ScmConfig, StreamSeed};
use log::info;

use crate::artifacts::{Artifacts, SummaryRow};
use crate::error::CliResult;
use crate::scenario::{Exhibit, Scenario};

/// Time-scale factor of a hazard ratio under the σ = 1/3 Weibull baseline.
pub fn theta_of_hazard_ratio(hr: f64) -> f64 {
    hr.powf(presets::TABLE1_SIGMA)
}

pub fn theta_high() -> f64 {
    theta_of_hazard_ratio(3.0)
}

pub fn theta_low() -> f64 {
    theta_of_hazard_ratio(1.0 / 3.0)
}

/// Frailty laws of the replication table, in row order.
pub fn table1_frailties() -> Vec<(String, FrailtyLaw)> {
    let mut v = vec![];
    for v0 in [0.5, 1.0, 2.0] {
        v.push((format!("gamma_rho{v0}"), FrailtyLaw::Gamma { variance: v0 }));
    }
    for v0 in [0.5, 1.0, 2.0] {
        v.push((format!("ig_rho{v0}"), FrailtyLaw::InverseGaussian { variance: v0 }));
    }
    v
}

pub fn table1_hazard_ratio(exhibit: Exhibit) -> f64 {
    if exhibit == Exhibit::Table1a {
        1.0 / 3.0
    } else {
        3.0
    }
}

/// Heterogeneous effect laws of the two BHN panels.
pub fn bhn_laws() -> Vec<(&'static str, EffectLaw, f64)> {
    vec![("bhn_high", presets::bhn_high(), theta_high()), ("bhn_low", presets::bhn_low(), theta_low())]
}

pub const GAMMA_EFFECT_VARIANCES: [f64; 3] = [0.5, 1.0, 2.0];

pub fn gamma_effect_laws() -> Vec<(String, EffectLaw)> {
    let mut v = vec![];
    for (tag, mean) in [("high", theta_high()), ("low", theta_low())] {
        for var in GAMMA_EFFECT_VARIANCES {
            v.push((format!("gamma_{tag}_var{var}"), presets::gamma_effect(mean, var)));
        }
    }
    v
}

/// Named copula settings `(β_LA, τ0, τ1)` of the three-panel confounding figure
/// plus two null controls.
pub fn fig5_panels() -> Vec<(&'static str, f64, f64, f64)> {
    vec![
        ("left", 0.25, 0.5, 0.0),
        ("middle", 0.25, 0.0, 0.5),
        ("right", 0.25, 0.5, 0.5),
        ("null_slope", 0.0, 0.5, 0.5),
        ("null_copula", 0.25, 0.0, 0.0),
    ]
}

pub const GRID_LEVELS: [f64; 3] = [0.0, 0.25, 0.45];

/// Cells of a 3 × 3 confounding grid as `(series, β_LA, τ0, τ1)`.
pub fn appendix_cells(exhibit: Exhibit) -> Vec<(String, f64, f64, f64)> {
    let mut v = vec![];
    for b in GRID_LEVELS {
        for t in GRID_LEVELS {
            let (t0, t1) = match exhibit {
                Exhibit::FigA1 => (t, 0.0),
                Exhibit::FigA2 => (0.0, t),
                _ => (t, t),
            };
            v.push((format!("beta{b}_tau{t}"), b, t0, t1));
        }
    }
    v
}

/// Control-arm median of the Gamma(1) frailty Weibull baseline, `60^{1/3}`.
pub fn fig1_median() -> f64 {
    60f64.powf(1.0 / 3.0)
}

/// Follow-up horizon label and value; `None` means unlimited follow-up.
pub fn fig1_follow_ups(s: &Scenario) -> Vec<(String, Option<f64>)> {
    let mut v: Vec<(String, Option<f64>)> = s.follow_up_times.iter().map(|&t| (format!("t{t}"), Some(t))).collect();
    for &m in &s.follow_up_multiples {
        if m == 0.0 {
            v.push(("inf".to_owned(), None));
        } else {
            v.push((format!("m{m}"), Some(m * fig1_median())));
        }
    }
    v
}

pub fn fig1_censoring(s: &Scenario) -> Vec<(String, Option<f64>)> {
    s.censoring_means
        .iter()
        .map(|&m| if m == 0.0 { ("none".to_owned(), None) } else { (format!("c{m}"), Some(m)) })
        .collect()
}

pub fn fig1_series(fu: &str, cm: &str) -> String {
    format!("fu_{fu}_{cm}")
}

/// Supplementary-table rows: series name, configuration and the published
/// (mean ratio, log contrast) pair.
pub fn supp_rows() -> Vec<(String, ScmConfig, f64, f64)> {
    let mut v = vec![];
    for (hr, tag) in [(1.0 / 3.0, "low"), (3.0, "high")] {
        let th = (1000.0 * theta_of_hazard_ratio(hr)).round() / 1000.0;
        for (name, f) in table1_frailties() {
            v.push((format!("homogeneous_{tag}_{name}"), presets::table1(f, hr), th, th));
        }
    }
    v.push(("fig2L_bhn_high".into(), presets::fig2_left(presets::bhn_high()), 1.090, 1.477));
    v.push(("fig2L_bhn_low".into(), presets::fig2_left(presets::bhn_low()), 0.385, 0.001));
    v.push(("fig2R_bhn_high".into(), presets::fig2_right(presets::bhn_high()), 1.090, 1.572));
    v.push(("fig2R_bhn_low".into(), presets::fig2_right(presets::bhn_low()), 0.385, 0.000));
    let published = [(1.096, 1.513), (0.750, 0.206), (0.128, 0.000), (0.023, 0.000), (0.000, 0.000), (0.000, 0.000)];
    for ((name, law), (mr, lc)) in gamma_effect_laws().into_iter().zip(published) {
        v.push((format!("fig3_{name}"), presets::fig2_left(law), mr, lc));
    }
    v
}

/// Treated-CDF grid with `n` points from `lo` to `hi`, rounded to 1e-12.
pub fn cdf_grid(lo: f64, hi: f64, n: usize) -> Grid {
    match Grid::cdf_levels(lo, hi, n) {
        Grid::TreatedCdf(p) => Grid::TreatedCdf(p.into_iter().map(|x| (x * 1e12).round() / 1e12).collect()),
        g => g,
    }
}

pub fn run_scenario(s: &Scenario) -> CliResult<Artifacts> {
    s.validate()?;
    info!("running {} (n_obs = {}, n_sim = {}, seed = {})", s.name, s.n_obs, s.n_sim, s.seed);
    match s.exhibit {
        Exhibit::Table1a | Exhibit::Table1b => table1(s),
        Exhibit::Fig1 => fig1(s),
        Exhibit::Fig2L | Exhibit::Fig2R | Exhibit::Fig3 => heterogeneity(s),
        Exhibit::Fig5 => {
            let cells = fig5_panels().into_iter().map(|(n, b, t0, t1)| (n.to_owned(), b, t0, t1)).collect();
            confounding(s, cells)
        }
        Exhibit::FigA1 | Exhibit::FigA2 | Exhibit::FigA3 => confounding(s, appendix_cells(s.exhibit)),
        Exhibit::SuppTable => supp_table(s),
        Exhibit::CaseMixture => case_mixture(),
    }
}

fn mean_ci(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 { (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    let h = 1.959_963_984_540_054 * sd / n.sqrt();
    (m, m - h, m + h)
}

/// Type-7 percentile of sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (i, f) = (h.floor() as usize, h - h.floor());
    if i + 1 < sorted.len() {
        sorted[i] + f * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

struct Replicate {
    theta_m: Option<f64>,
    cox_hr: Option<f64>,
    curve: Vec<Option<f64>>,
}

fn table1(s: &Scenario) -> CliResult<Artifacts> {
    let hr = table1_hazard_ratio(s.exhibit);
    let theta = theta_of_hazard_ratio(hr);
    let grid = cdf_grid(0.1, 0.9, 9);
    let mut out = Artifacts::default();
    for (k, (series, frailty)) in table1_frailties().into_iter().enumerate() {
        let cfg = presets::table1(frailty, hr);
        let base = StreamSeed(s.seed).derive(k as u64);
        let reps: Vec<CliResult<Replicate>> = map_indexed(s.n_sim, |i| {
            let ds = generate_cohort(&cfg, s.n_obs, base.derive(i as u64))?;
            let (km0, km1) = (kaplan_meier(&ds, 0)?, kaplan_meier(&ds, 1)?);
            let cox = cox_fit(&ds).ok().filter(|f| f.converged).map(|f| f.hazard_ratio());
            let curve = observed_theta(&km0, &km1, &grid).map(|c| c.values()).unwrap_or_else(|_| vec![None; grid.points().len()]);
            Ok(Replicate { theta_m: quantile_ratio_summary(&km0, &km1, &SUMMARY_LEVELS), cox_hr: cox, curve })
        });
        let reps = reps.into_iter().collect::<CliResult<Vec<_>>>()?;

        let th: Vec<f64> = reps.iter().filter_map(|r| r.theta_m).collect();
        let (m, lo, hi) = mean_ci(&th);
        out.summary.push(
            SummaryRow::new(&series, "theta_m", Some(m)).with_interval(lo, hi).with_reference(theta).with_replicates(th.len()),
        );
        let cx: Vec<f64> = reps.iter().filter_map(|r| r.cox_hr).collect();
        let (m, lo, hi) = mean_ci(&cx);
        out.summary.push(SummaryRow::new(&series, "cox_hr", Some(m)).with_interval(lo, hi).with_replicates(cx.len()));

        let oracle_curve = oracle::causal_theta(&cfg, &grid)?;
        let points = oracle_curve
            .points
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let mut v: Vec<f64> = reps.iter().filter_map(|r| r.curve[j]).collect();
                v.sort_by(f64::total_cmp);
                let value = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
                let band = (!v.is_empty()).then(|| (percentile(&v, 0.025), percentile(&v, 0.975)));
                AccelPoint { t: p.t, treated_cdf: p.treated_cdf, value, band }
            })
            .collect();
        out.push_estimate(&series, "theta_m", &AccelCurve { axis: oracle_curve.axis, provenance: Provenance::Estimated, points });
        out.push_oracle(&series, &oracle_curve);
    }
    Ok(out)
}

struct CellResult {
    series: String,
    follow_up: Option<f64>,
    censoring_mean: Option<f64>,
    censored_share: f64,
    theta_m: Option<f64>,
    cox_hr: Option<f64>,
    curve: Option<AccelCurve>,
}

fn fig1(s: &Scenario) -> CliResult<Artifacts> {
    let cfg = presets::table1(FrailtyLaw::Gamma { variance: 1.0 }, 3.0);
    let seed = StreamSeed(s.seed);
    let cohort = generate_cohort(&cfg, s.n_obs, seed)?;
    let grid = cdf_grid(0.01, 0.99, 99);
    let mut cells = vec![];
    for (fu, t_max) in fig1_follow_ups(s) {
        for (cm, mean) in fig1_censoring(s) {
            cells.push((fig1_series(&fu, &cm), t_max, mean));
        }
    }
    let results: Vec<CliResult<CellResult>> = map_slice(&cells, |(series, t_max, mean)| {
        let spec = CensoringSpec { follow_up: *t_max, exponential_mean: *mean };
        let ds = apply_censoring(&cohort, &spec, seed)?;
        let (km0, km1) = (kaplan_meier(&ds, 0)?, kaplan_meier(&ds, 1)?);
        let cox = cox_fit(&ds).ok().filter(|f| f.converged).map(|f| f.hazard_ratio());
        Ok(CellResult {
            series: series.clone(),
            follow_up: *t_max,
            censoring_mean: *mean,
            censored_share: ds.censored_count() as f64 / ds.len() as f64,
            theta_m: quantile_ratio_summary(&km0, &km1, &SUMMARY_LEVELS),
            cox_hr: cox,
            curve: observed_theta(&km0, &km1, &grid).ok(),
        })
    });
    let oracle_curve = oracle::causal_theta(&cfg, &grid)?;
    let mut out = Artifacts::default();
    out.push_oracle("homogeneous", &oracle_curve);
    for r in results {
        let r = r?;
        out.summary.push(SummaryRow::new(&r.series, "follow_up", r.follow_up));
        out.summary.push(SummaryRow::new(&r.series, "censoring_mean", r.censoring_mean));
        out.summary.push(SummaryRow::new(&r.series, "censored_share", Some(r.censored_share)));
        out.summary.push(SummaryRow::new(&r.series, "theta_m", r.theta_m).with_reference(theta_high()));
        out.summary.push(SummaryRow::new(&r.series, "cox_hr", r.cox_hr));
        if let Some(c) = &r.curve {
            out.push_estimate(&r.series, "theta_m", c);
        }
    }
    Ok(out)
}

fn heterogeneity(s: &Scenario) -> CliResult<Artifacts> {
    let series: Vec<(String, ScmConfig, f64)> = match s.exhibit {
        Exhibit::Fig2L => bhn_laws().into_iter().map(|(n, l, t)| (n.to_owned(), presets::fig2_left(l), t)).collect(),
        Exhibit::Fig2R => bhn_laws().into_iter().map(|(n, l, t)| (n.to_owned(), presets::fig2_right(l), t)).collect(),
        _ => gamma_effect_laws()
            .into_iter()
            .map(|(n, l)| {
                let m = l.mean();
                (n, presets::fig2_left(l), if m > 1.0 { theta_high() } else { theta_low() })
            })
            .collect(),
    };
    let grid = cdf_grid(0.01, 0.99, 99);
    let mut out = Artifacts::default();
    for (k, (name, cfg, target)) in series.iter().enumerate() {
        let oracle_curve = oracle::causal_theta(cfg, &grid)?;
        out.push_oracle(name, &oracle_curve);
        let ds = generate_cohort(cfg, s.n_obs, StreamSeed(s.seed).derive(k as u64))?;
        let (km0, km1) = (kaplan_meier(&ds, 0)?, kaplan_meier(&ds, 1)?);
        drop(ds);
        out.push_estimate(name, "theta_m", &observed_theta(&km0, &km1, &grid)?);
        out.summary.push(SummaryRow::new(name, "mean_u1", Some(cfg.effect.mean())).with_reference(*target));
        let v = oracle_curve.values();
        let (lo, hi) = (v[4], v[94]);
        out.summary.push(SummaryRow::new(name, "theta_cdf0.05", lo));
        out.summary.push(SummaryRow::new(name, "theta_cdf0.95", hi));
    }
    Ok(out)
}

fn confounding(s: &Scenario, cells: Vec<(String, f64, f64, f64)>) -> CliResult<Artifacts> {
    let grid = cdf_grid(0.1, 0.9, 17);
    let mut out = Artifacts::default();
    let oracle_curve = oracle::causal_theta(&presets::fig5(0.0, 0.0, 0.0), &grid)?;
    out.push_oracle("marginal", &oracle_curve);
    for (k, (name, b, t0, t1)) in cells.iter().enumerate() {
        let cfg = presets::fig5(*b, *t0, *t1);
        let ds = generate_cohort(&cfg, s.n_obs, StreamSeed(s.seed).derive(k as u64))?;
        let (km0, km1) = (kaplan_meier(&ds, 0)?, kaplan_meier(&ds, 1)?);
        out.push_estimate(name, "theta_m", &observed_theta(&km0, &km1, &grid)?);
        for (label, method) in [("theta_adj_ipw", AdjustMethod::Ipw), ("theta_adj_strat", AdjustMethod::Stratify(s.strata))] {
            let a0 = adjusted_survival(&ds, 0, method, &cfg.treatment)?;
            let a1 = adjusted_survival(&ds, 1, method, &cfg.treatment)?;
            out.push_estimate(name, label, &adjusted_theta(&a0, &a1, &grid)?);
        }
        out.summary.push(SummaryRow::new(name, "beta_la", Some(*b)));
        out.summary.push(SummaryRow::new(name, "tau0", Some(*t0)));
        out.summary.push(SummaryRow::new(name, "tau1", Some(*t1)));
        let treated = ds.records.iter().filter(|r| r.a == 1).count() as f64 / ds.len() as f64;
        out.summary.push(SummaryRow::new(name, "treated_share", Some(treated)));
    }
    Ok(out)
}

fn supp_table(s: &Scenario) -> CliResult<Artifacts> {
    let rows = supp_rows();
    let mut out = Artifacts::default();
    for (k, (name, cfg, pub_mr, pub_lc)) in rows.iter().enumerate() {
        let c = oracle::lemma1_contrasts(cfg)?;
        let ds = generate_cohort(cfg, s.n_obs, StreamSeed(s.seed).derive(k as u64))?;
        let n = ds.len() as f64;
        let (mut s0, mut sa) = (0.0, 0.0);
        let mut d: Vec<f64> = Vec::with_capacity(ds.len());
        for r in &ds.records {
            s0 += r.t0;
            sa += r.ta;
            d.push(r.t0.ln() - r.ta.ln());
        }
        let (md, lo, hi) = mean_ci(&d);
        let th = match cfg.effect {
            EffectLaw::Degenerate { factor } => Some(factor),
            _ => None,
        };
        let mean_ratio = (!c.mean_ratio_divergent).then(|| c.inverse_mean_ratio());
        out.summary.push(SummaryRow::new(name, "mean_ratio", mean_ratio).with_reference(*pub_mr));
        out.summary.push(SummaryRow::new(name, "mean_ratio_mc", Some(s0 / sa)).with_replicates(n as usize));
        out.summary.push(SummaryRow::new(name, "mean_ratio_divergent", Some(f64::from(u8::from(c.mean_ratio_divergent)))));
        out.summary.push(SummaryRow::new(name, "log_contrast", (!c.log_diff_divergent).then(|| c.log_contrast())).with_reference(*pub_lc));
        out.summary.push(
            SummaryRow::new(name, "log_contrast_mc", Some(md.exp()))
                .with_interval(lo.exp(), hi.exp())
                .with_replicates(n as usize),
        );
        out.summary.push(SummaryRow::new(name, "log_contrast_divergent", Some(f64::from(u8::from(c.log_diff_divergent)))));
        out.summary.push(SummaryRow::new(name, "theta", th));
        out.summary.push(SummaryRow::new(name, "mean_reciprocal_u1", Some(1.0 / cfg.effect.mean_reciprocal())));
    }
    Ok(out)
}

/// Named control-arm survival function with a support hint.
pub type NamedSurvival = (&'static str, fn(f64) -> f64, f64);

/// Control-arm survival curves used to exercise the scale mixture.
pub fn mixture_baselines() -> Vec<NamedSurvival> {
    vec![
        ("gaussian_tail", |t| (-(t / 200.0).powi(2)).exp(), 200.0),
        ("exponential", |t| (-t / 100.0).exp(), 100.0),
        ("weibull_half", |t| (-(t / 50.0).sqrt()).exp(), 50.0),
        ("log_logistic", |t| 1.0 / (1.0 + (t / 100.0).powi(3)), 100.0),
    ]
}

pub const MIXTURE_FACTORS: [(f64, f64); 2] = [(0.5, 0.9), (0.5, 0.45)];

/// θ(t) by scanning 10⁵ points of `[0.4 t, t]` for the first one where the
/// control curve drops to the treated level.
pub fn brute_force_theta(s0: fn(f64) -> f64, t: f64) -> Option<f64> {
    let level: f64 = MIXTURE_FACTORS.iter().map(|(w, c)| w * s0(c * t)).sum();
    let n = 100_000;
    let (a, b) = (0.4 * t, t);
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).find(|&x| s0(x) <= level).map(|x| x / t)
}

fn case_mixture() -> CliResult<Artifacts> {
    let times: Vec<f64> = (1..=120).map(|k| 5.0 * k as f64).collect();
    let grid = Grid::Times(times.clone());
    let mut out = Artifacts::default();
    for (name, f, scale) in mixture_baselines() {
        let s0 = SmoothSurvival::custom(f, scale)?;
        let curve = oracle::mixture_theta(&s0, &MIXTURE_FACTORS, &grid)?;
        out.push_oracle(name, &curve);
        let points = curve
            .points
            .iter()
            .map(|p| AccelPoint { value: brute_force_theta(f, p.t), band: None, ..*p })
            .collect();
        out.push_estimate(name, "brute_force", &AccelCurve { axis: curve.axis, provenance: Provenance::Estimated, points });
        let s1 = SmoothSurvival::scaled(&s0, MIXTURE_FACTORS.to_vec())?;
        out.summary.push(SummaryRow::new(name, "median_t0", Some(s0.quantile(0.5)?)));
        out.summary.push(SummaryRow::new(name, "median_t1", Some(s1.quantile(0.5)?)));
        let v: Vec<f64> = curve.identified().filter_map(|p| p.value).collect();
        out.summary.push(SummaryRow::new(name, "theta_min", v.iter().copied().reduce(f64::min)));
        out.summary.push(SummaryRow::new(name, "theta_max", v.iter().copied().reduce(f64::max)));
    }
    Ok(out)
}
