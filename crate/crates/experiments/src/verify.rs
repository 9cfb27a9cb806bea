//! Verification rules: every exhibit has one rule that turns its artifacts
//! into a list of checks, each tagged with the criterion it belongs to.

use std::fmt::Write as _;
use std::path::Path;

use crate::artifacts::{read_artifacts, Artifacts};
use crate::error::CliResult;
use crate::run::{
    appendix_cells, bhn_laws, fig1_censoring, fig1_follow_ups, fig1_series, fig5_panels, gamma_effect_laws,
    mixture_baselines, supp_rows, table1_frailties, GAMMA_EFFECT_VARIANCES,
};
use crate::scenario::{Exhibit, Scenario};

/// Registered marginal Cox intervals `(estimate, lo, hi)` in frailty row order.
pub const COX_INTERVALS_LOW: [(f64, f64, f64); 6] = [
    (0.471, 0.461, 0.482),
    (0.574, 0.554, 0.594),
    (0.689, 0.658, 0.722),
    (0.419, 0.413, 0.426),
    (0.458, 0.448, 0.468),
    (0.494, 0.482, 0.507),
];
pub const COX_INTERVALS_HIGH: [(f64, f64, f64); 6] = [
    (2.102, 2.053, 2.151),
    (1.746, 1.687, 1.808),
    (1.451, 1.386, 1.520),
    (2.372, 2.335, 2.411),
    (2.189, 2.144, 2.236),
    (2.022, 1.971, 2.075),
];

pub const THETA_TOLERANCE: f64 = 0.01;
pub const COX_WIDENING: f64 = 0.01;
pub const IDENTITY_TOLERANCE: f64 = 0.02;
pub const CENSORING_TOLERANCE: f64 = 0.03;
pub const COX_MOVEMENT: f64 = 0.1;
pub const CONFOUNDING_TOLERANCE: f64 = 0.03;
/// Treated-CDF range compared in the confounding designs. Below 0.2 the
/// sampling SD of θ̂ at n = 10⁵ exceeds 0.0115.
pub const CONFOUNDING_RANGE: (f64, f64) = (0.2, 0.9);
pub const MOMENT_TOLERANCE: f64 = 1e-6;
pub const MOMENT_MC_TOLERANCE: f64 = 0.01;
pub const SUPP_TOLERANCE: f64 = 0.02;
pub const MIXTURE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: String,
    pub label: String,
    pub observed: String,
    pub expected: String,
    pub pass: bool,
    /// Informative checks are reported but do not affect the verdict.
    pub binding: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub exhibit: Exhibit,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.binding).all(|c| c.pass)
    }

    pub fn for_criterion<'a>(&'a self, criterion: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.criterion == criterion)
    }

    pub fn render(&self) -> String {
        let mut s = format!("verify {} ({})\n", self.scenario, self.exhibit);
        for c in &self.checks {
            let tag = match (c.binding, c.pass) {
                (true, true) => "PASS",
                (true, false) => "FAIL",
                (false, true) => "info",
                (false, false) => "info!",
            };
            let _ = writeln!(s, "  [{tag:>5}] {:<3} {}: observed {}, expected {}", c.criterion, c.label, c.observed, c.expected);
        }
        let _ = writeln!(s, "{}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, criterion: &str, label: impl Into<String>, observed: impl Into<String>, expected: impl Into<String>, pass: bool) {
        self.0.push(Check {
            criterion: criterion.to_owned(),
            label: label.into(),
            observed: observed.into(),
            expected: expected.into(),
            pass,
            binding: true,
        });
    }

    fn info(&mut self, criterion: &str, label: impl Into<String>, observed: impl Into<String>, expected: impl Into<String>, pass: bool) {
        self.push(criterion, label, observed, expected, pass);
        self.0.last_mut().unwrap().binding = false;
    }

    fn missing(&mut self, criterion: &str, label: impl Into<String>) {
        self.push(criterion, label, "missing", "present", false);
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("NA".to_owned(), |x| format!("{x:.4}"))
}

/// Largest `|estimate - oracle|` over gridpoints with treated CDF in
/// `[lo, hi]` where both are identified.
pub fn curve_gap(a: &Artifacts, series: &str, estimator: &str, oracle_series: &str, lo: f64, hi: f64) -> Option<f64> {
    let oracle: Vec<_> = a.oracle_of(oracle_series).collect();
    a.estimates_of(series, estimator)
        .filter(|e| e.treated_cdf >= lo - 1e-12 && e.treated_cdf <= hi + 1e-12)
        .filter_map(|e| {
            let o = oracle.iter().find(|o| (o.treated_cdf - e.treated_cdf).abs() < 1e-9)?;
            Some((e.estimate? - o.theta?).abs())
        })
        .reduce(f64::max)
}

/// Largest difference between two estimated curves on their jointly identified points.
pub fn estimate_gap(a: &Artifacts, s1: &str, s2: &str, estimator: &str) -> Option<f64> {
    let other: Vec<_> = a.estimates_of(s2, estimator).collect();
    a.estimates_of(s1, estimator)
        .filter_map(|e| {
            let o = other.iter().find(|o| (o.treated_cdf - e.treated_cdf).abs() < 1e-9)?;
            Some((e.estimate? - o.estimate?).abs())
        })
        .reduce(f64::max)
}

fn value(a: &Artifacts, series: &str, metric: &str) -> Option<f64> {
    a.summary_value(series, metric).and_then(|r| r.value)
}

fn oracle_at(a: &Artifacts, series: &str, cdf: f64) -> Option<f64> {
    a.oracle_of(series).find(|o| (o.treated_cdf - cdf).abs() < 1e-9).and_then(|o| o.theta)
}

/// Loads `<dir>` and applies the rule registered for its exhibit.
pub fn verify_dir(dir: &Path) -> CliResult<Report> {
    let (manifest, artifacts) = read_artifacts(dir)?;
    Ok(verify_artifacts(&manifest.config, &artifacts))
}

pub fn verify_artifacts(s: &Scenario, a: &Artifacts) -> Report {
    let mut c = Checks(vec![]);
    match s.exhibit {
        Exhibit::Table1a | Exhibit::Table1b => table1(s.exhibit, a, &mut c),
        Exhibit::Fig1 => fig1(s, a, &mut c),
        Exhibit::Fig2L | Exhibit::Fig2R => fig2(a, &mut c),
        Exhibit::Fig3 => fig3(a, &mut c),
        Exhibit::Fig5 => fig5(a, &mut c),
        Exhibit::FigA1 | Exhibit::FigA2 | Exhibit::FigA3 => appendix(s.exhibit, a, &mut c),
        Exhibit::SuppTable => supp(a, &mut c),
        Exhibit::CaseMixture => mixture(a, &mut c),
    }
    Report { scenario: s.name.clone(), exhibit: s.exhibit, checks: c.0 }
}

fn table1(exhibit: Exhibit, a: &Artifacts, c: &mut Checks) {
    let cox = if exhibit == Exhibit::Table1a { COX_INTERVALS_LOW } else { COX_INTERVALS_HIGH };
    for ((series, _), (est, lo, hi)) in table1_frailties().iter().zip(cox) {
        match a.summary_value(series, "theta_m") {
            Some(r) => {
                let (v, t) = (r.value.unwrap_or(f64::NAN), r.reference.unwrap_or(f64::NAN));
                c.push("1", format!("{series} mean theta_m"), format!("{v:.4}"), format!("{t:.3} ± {THETA_TOLERANCE}"), (v - t).abs() <= THETA_TOLERANCE);
            }
            None => c.missing("1", format!("{series} theta_m")),
        }
        match value(a, series, "cox_hr") {
            Some(v) => c.push(
                "1",
                format!("{series} mean Cox exp(beta)"),
                format!("{v:.4}"),
                format!("{est:.3} in [{:.3}, {:.3}]", lo - COX_WIDENING, hi + COX_WIDENING),
                v >= lo - COX_WIDENING && v <= hi + COX_WIDENING,
            ),
            None => c.missing("1", format!("{series} cox_hr")),
        }
    }
}

fn fig1(s: &Scenario, a: &Artifacts, c: &mut Checks) {
    let fus = fig1_follow_ups(s);
    let cms = fig1_censoring(s);
    let base = fig1_series("inf", "none");
    match curve_gap(a, &base, "theta_m", "homogeneous", 0.05, 0.95) {
        Some(g) => c.push("2", "homogeneous effect, uncensored", format!("{g:.4}"), format!("< {IDENTITY_TOLERANCE}"), g < IDENTITY_TOLERANCE),
        None => c.missing("2", base.clone()),
    }
    let has = |name: &str| cms.iter().any(|(n, _)| n == name);
    if !has("none") || !has("c100") {
        c.missing("3a", "uncensored and mean-100 dropout cells");
    }
    for (fu, _) in &fus {
        if !(has("none") && has("c100")) {
            break;
        }
        let (s1, s2) = (fig1_series(fu, "c100"), fig1_series(fu, "none"));
        match estimate_gap(a, &s1, &s2, "theta_m") {
            Some(g) => c.push("3a", format!("theta_m change from dropout (mean 100), follow-up {fu}"), format!("{g:.4}"), format!("< {CENSORING_TOLERANCE}"), g < CENSORING_TOLERANCE),
            None => c.info("3a", format!("follow-up {fu}: no jointly identified points"), "none", "vacuous", true),
        }
    }

    let means = ["c50", "c100", "c200"];
    if means.iter().all(|m| has(m)) {
        let mut best: Option<(String, f64)> = None;
        let mut parts = vec![];
        for (fu, _) in &fus {
            let v: Vec<f64> = means.iter().filter_map(|m| value(a, &fig1_series(fu, m), "cox_hr")).collect();
            if v.len() == means.len() {
                let r = v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min);
                parts.push(format!("{fu}:{r:.3}"));
                if best.as_ref().is_none_or(|b| r > b.1) {
                    best = Some((fu.clone(), r));
                }
            }
        }
        match best {
            Some((fu, r)) => c.push(
                "3b",
                format!("Cox exp(beta) range across dropout means 50/100/200 (largest at follow-up {fu}; {})", parts.join(" ")),
                format!("{r:.4}"),
                format!("> {COX_MOVEMENT}"),
                r > COX_MOVEMENT,
            ),
            None => c.missing("3b", "Cox estimates"),
        }
    } else {
        c.missing("3b", "dropout means 50, 100 and 200");
    }

    if has("none") {
        let v: Vec<(String, f64)> =
            fus.iter().filter_map(|(fu, _)| Some((fu.clone(), value(a, &fig1_series(fu, "none"), "cox_hr")?))).collect();
        if v.len() > 1 {
            let hi = v.iter().map(|x| x.1).fold(f64::MIN, f64::max);
            let lo = v.iter().map(|x| x.1).fold(f64::MAX, f64::min);
            let detail: Vec<String> = v.iter().map(|(f, x)| format!("{f}:{x:.3}")).collect();
            c.info("3", format!("Cox exp(beta) range across follow-up horizons ({})", detail.join(" ")), format!("{:.4}", hi - lo), format!("> {COX_MOVEMENT}"), hi - lo > COX_MOVEMENT);
            let th: Vec<f64> = fus.iter().filter_map(|(fu, _)| value(a, &fig1_series(fu, "none"), "theta_m")).collect();
            let r = th.iter().copied().fold(f64::MIN, f64::max) - th.iter().copied().fold(f64::MAX, f64::min);
            c.info("3", "summary theta_m range across follow-up horizons", format!("{r:.4}"), format!("< {CENSORING_TOLERANCE}"), r < CENSORING_TOLERANCE);
        }
    }
}

fn identity_checks(a: &Artifacts, names: &[String], c: &mut Checks) {
    for name in names {
        match curve_gap(a, name, "theta_m", name, 0.05, 0.95) {
            Some(g) => c.push("2", format!("{name} sup |theta_m - theta| on [0.05, 0.95]"), format!("{g:.4}"), format!("< {IDENTITY_TOLERANCE}"), g < IDENTITY_TOLERANCE),
            None => c.missing("2", name.clone()),
        }
    }
}

fn fig2(a: &Artifacts, c: &mut Checks) {
    let names: Vec<String> = bhn_laws().iter().map(|l| l.0.to_owned()).collect();
    identity_checks(a, &names, c);
    match (oracle_at(a, "bhn_high", 0.05), oracle_at(a, "bhn_high", 0.95)) {
        (Some(lo), Some(hi)) => {
            c.push("6", "bhn_high theta(0.05) > theta(0.95)", format!("{lo:.4} vs {hi:.4}"), "strictly greater", lo > hi);
            let inside = |x: f64| (0.5..=3.53).contains(&x);
            c.push("6", "bhn_high theta(0.05), theta(0.95) within [0.5, 3.53]", format!("{lo:.4}, {hi:.4}"), "[0.5, 3.53]", inside(lo) && inside(hi));
        }
        _ => c.missing("6", "bhn_high oracle at 0.05 and 0.95"),
    }
    for (name, _, target) in bhn_laws() {
        let m = value(a, name, "mean_u1");
        c.info("6", format!("{name} E[U1]"), fmt_opt(m), format!("{target:.3} ± 0.025"), m.is_some_and(|m| (m - target).abs() <= 0.025));
    }
}

/// Spread `max - min` of the oracle curve over treated CDF `[0.05, 0.95]`.
pub fn oracle_range(a: &Artifacts, series: &str) -> Option<f64> {
    let v: Vec<f64> = a
        .oracle_of(series)
        .filter(|o| o.treated_cdf >= 0.05 - 1e-12 && o.treated_cdf <= 0.95 + 1e-12)
        .filter_map(|o| o.theta)
        .collect();
    Some(v.iter().copied().reduce(f64::max)? - v.iter().copied().reduce(f64::min)?)
}

fn fig3(a: &Artifacts, c: &mut Checks) {
    let names: Vec<String> = gamma_effect_laws().into_iter().map(|l| l.0).collect();
    identity_checks(a, &names, c);
    for tag in ["high", "low"] {
        let ranges: Vec<Option<f64>> =
            GAMMA_EFFECT_VARIANCES.iter().map(|v| oracle_range(a, &format!("gamma_{tag}_var{v}"))).collect();
        let shown: Vec<String> = ranges.iter().map(|r| fmt_opt(*r)).collect();
        let ok = ranges.iter().all(Option::is_some) && ranges.windows(2).all(|w| w[1].unwrap() > w[0].unwrap());
        c.push("6", format!("gamma_{tag}: range of theta increases with var(U1) 0.5 < 1 < 2"), shown.join(" < "), "strictly increasing", ok);
    }
}

struct Gaps {
    m: Option<f64>,
    ipw: Option<f64>,
    strat: Option<f64>,
}

fn gaps(a: &Artifacts, series: &str) -> Gaps {
    let (lo, hi) = CONFOUNDING_RANGE;
    Gaps {
        m: curve_gap(a, series, "theta_m", "marginal", lo, hi),
        ipw: curve_gap(a, series, "theta_adj_ipw", "marginal", lo, hi),
        strat: curve_gap(a, series, "theta_adj_strat", "marginal", lo, hi),
    }
}

fn null_check(a: &Artifacts, series: &str, c: &mut Checks) {
    let g = gaps(a, series).m;
    c.push("7", format!("{series}: no confounding, max |theta_m - theta|"), fmt_opt(g), format!("< {CONFOUNDING_TOLERANCE}"), g.is_some_and(|g| g < CONFOUNDING_TOLERANCE));
}

fn adjusted_checks(a: &Artifacts, series: &str, dominance: bool, c: &mut Checks) -> Option<f64> {
    let g = gaps(a, series);
    c.push("7", format!("{series}: max |theta_adj - theta|"), fmt_opt(g.ipw), format!("< {CONFOUNDING_TOLERANCE}"), g.ipw.is_some_and(|x| x < CONFOUNDING_TOLERANCE));
    c.info("7", format!("{series}: stratified max |theta_adj - theta|"), fmt_opt(g.strat), format!("< {CONFOUNDING_TOLERANCE}"), g.strat.is_some_and(|x| x < CONFOUNDING_TOLERANCE));
    if dominance {
        let ok = matches!((g.m, g.ipw), (Some(m), Some(i)) if m > i);
        c.push("7", format!("{series}: max |theta_m - theta| exceeds adjusted gap"), format!("{} vs {}", fmt_opt(g.m), fmt_opt(g.ipw)), "greater", ok);
    }
    g.m
}

fn fig5(a: &Artifacts, c: &mut Checks) {
    let mut m = std::collections::HashMap::new();
    for (name, b, t0, t1) in fig5_panels() {
        if b == 0.0 || (t0 == 0.0 && t1 == 0.0) {
            null_check(a, name, c);
        } else {
            m.insert(name, adjusted_checks(a, name, true, c));
        }
    }
    let (l, mid, r) = (m["left"], m["middle"], m["right"]);
    let ok = matches!((l, mid, r), (Some(l), Some(mid), Some(r)) if r >= l && r >= mid);
    c.push("7", "theta_m gap: right >= left and right >= middle", format!("{} vs {}, {}", fmt_opt(r), fmt_opt(l), fmt_opt(mid)), "right largest", ok);
}

fn appendix(exhibit: Exhibit, a: &Artifacts, c: &mut Checks) {
    for (name, b, t0, t1) in appendix_cells(exhibit) {
        if b == 0.0 || (t0 == 0.0 && t1 == 0.0) {
            null_check(a, &name, c);
        } else {
            adjusted_checks(a, &name, false, c);
        }
    }
}

fn supp(a: &Artifacts, c: &mut Checks) {
    for (name, _, pub_mr, pub_lc) in supp_rows() {
        let theta = value(a, &name, "theta");
        let mr = value(a, &name, "mean_ratio");
        let lc = value(a, &name, "log_contrast");
        let mr_mc = value(a, &name, "mean_ratio_mc");
        let lc_mc = value(a, &name, "log_contrast_mc");
        let mr_div = value(a, &name, "mean_ratio_divergent") == Some(1.0);
        let lc_div = value(a, &name, "log_contrast_divergent") == Some(1.0);
        if let Some(th) = theta {
            let rel = |x: Option<f64>, tol: f64| x.is_some_and(|x| ((x - th) / th).abs() <= tol);
            c.push("4", format!("{name}: oracle E[T0]/E[T1] = theta"), fmt_opt(mr), format!("{th:.6} (rel {MOMENT_TOLERANCE})"), rel(mr, MOMENT_TOLERANCE));
            c.push("4", format!("{name}: oracle exp(E log T0 - E log T1) = theta"), fmt_opt(lc), format!("{th:.6} (rel {MOMENT_TOLERANCE})"), rel(lc, MOMENT_TOLERANCE));
            c.push("4", format!("{name}: Monte Carlo mean ratio"), fmt_opt(mr_mc), format!("{th:.4} within 1%"), rel(mr_mc, MOMENT_MC_TOLERANCE));
            c.push("4", format!("{name}: Monte Carlo log contrast"), fmt_opt(lc_mc), format!("{th:.4} within 1%"), rel(lc_mc, MOMENT_MC_TOLERANCE));
            let near = |x: Option<f64>, r: f64| x.is_some_and(|x| (x - r).abs() <= THETA_TOLERANCE);
            c.push("5a", format!("{name}: mean ratio"), fmt_opt(mr), format!("{pub_mr:.3} ± {THETA_TOLERANCE}"), near(mr, pub_mr));
            c.push("5a", format!("{name}: log contrast"), fmt_opt(lc), format!("{pub_lc:.3} ± {THETA_TOLERANCE}"), near(lc, pub_lc));
            continue;
        }
        let heavy_mr = pub_mr < 0.0015;
        let heavy_lc = pub_lc < 0.0015;
        if name.ends_with("bhn_high") {
            let near = |x: Option<f64>, r: f64| x.is_some_and(|x| (x - r).abs() <= SUPP_TOLERANCE);
            c.push("5a", format!("{name}: mean ratio (Monte Carlo {})", fmt_opt(mr_mc)), fmt_opt(mr), format!("{pub_mr:.3} ± {SUPP_TOLERANCE}"), near(mr, pub_mr));
            c.push("5b", format!("{name}: log contrast (Monte Carlo {})", fmt_opt(lc_mc)), fmt_opt(lc), format!("{pub_lc:.3} ± {SUPP_TOLERANCE}"), near(lc, pub_lc));
        } else {
            c.info("5", format!("{name}: mean ratio (Monte Carlo {})", fmt_opt(mr_mc)), fmt_opt(mr), format!("{pub_mr:.3}"), mr.map_or(heavy_mr, |x| (x - pub_mr).abs() <= SUPP_TOLERANCE));
            c.info("5", format!("{name}: log contrast (Monte Carlo {})", fmt_opt(lc_mc)), fmt_opt(lc), format!("{pub_lc:.3}"), lc.map_or(heavy_lc, |x| (x - pub_lc).abs() <= SUPP_TOLERANCE));
        }
        if heavy_mr {
            c.push("5a", format!("{name}: E[T1] flagged divergent"), mr_div.to_string(), "true", mr_div);
        }
        if heavy_lc {
            c.push("5b", format!("{name}: E[log T1] flagged divergent"), lc_div.to_string(), "true", lc_div);
        }
    }
}

fn mixture(a: &Artifacts, c: &mut Checks) {
    for (name, _, _) in mixture_baselines() {
        let v: Vec<f64> = a.oracle_of(name).filter_map(|o| o.theta).collect();
        if v.is_empty() {
            c.missing("8", name);
            continue;
        }
        let lo = v.iter().copied().fold(f64::MAX, f64::min);
        let hi = v.iter().copied().fold(f64::MIN, f64::max);
        c.push("8", format!("{name}: theta range"), format!("[{lo:.6}, {hi:.6}]"), "within [0.45, 0.9]", lo >= 0.45 - 1e-9 && hi <= 0.9 + 1e-9);
        let g = curve_gap_time(a, name);
        c.push("8", format!("{name}: max |oracle - brute force|"), g.map_or("NA".into(), |g| format!("{g:.2e}")), format!("< {MIXTURE_TOLERANCE}"), g.is_some_and(|g| g < MIXTURE_TOLERANCE));
    }
}

fn curve_gap_time(a: &Artifacts, series: &str) -> Option<f64> {
    let oracle: Vec<_> = a.oracle_of(series).collect();
    a.estimates_of(series, "brute_force")
        .filter_map(|e| {
            let o = oracle.iter().find(|o| o.t == e.t)?;
            Some((e.estimate? - o.theta?).abs())
        })
        .reduce(f64::max)
}
