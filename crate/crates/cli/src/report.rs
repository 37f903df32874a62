//! Runs a scenario and writes its CSV files and `summary.txt`.
//!
//! Files (all with a header row):
//! - `curves.csv`: `agent,curve,q,value` for `p`, `hull` and, once the
//!   ex-ante curves are built, `r`.
//! - `ap.csv`: `agent,price,accept_probability,revenue`; the `all` row holds
//!   the overall sale probability and revenue.
//! - `ear.csv`: `agent,quantile,revenue`; the `all` row holds the totals.
//! - `closeness.csv`: `agent,model,source,alpha@β...,zeta,eta,p_concave,class_bound,violation`.
//! - `verify.csv`: one summary row `ap,ear,ratio,transfer_bound,class_bound,slack,pass`.
//! - `fixtures.csv`: `fixture,label,actual,check,target,origin,pass,note`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use revcurve_core::closeness::{verify_instance, Bidder, ClosenessReport};
use revcurve_core::curves::offer_curve;
use revcurve_core::mechanisms::{ap_optimize, ear_optimize};
use revcurve_core::{Agent, AgentModel, RevenueCurve};

use crate::fixtures::Outcome;
use crate::scenario::{Analysis, Resolved, Scenario};
use crate::{CliError, Result};

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// Some requested bound verification did not hold.
    pub verification_failed: bool,
    pub fixture_failures: usize,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        !self.verification_failed && self.fixture_failures == 0
    }
}

/// Writes every requested analysis of `scenario` into `out`. On a module
/// error the summary records it before the error is returned.
pub fn run_scenario(scenario: &Scenario, out: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_path_buf(), source })?;
    let mut summary = String::new();
    let _ = writeln!(summary, "scenario: {}", scenario.name);
    let _ = writeln!(summary, "seed: {}", scenario.seed);
    let o = &scenario.oracle;
    let _ = writeln!(
        summary,
        "oracle: value_points={} budget_points={} quantile_grid={} price_grid={} kappa_max={}",
        o.value_points, o.budget_points, o.quantile_grid, o.price_grid, o.kappa_max
    );
    let result = scenario.resolve().and_then(|resolved| run_resolved(scenario, &resolved, out, &mut summary));
    let summary_path = out.join("summary.txt");
    match result {
        Ok((mut files, verification_failed, fixture_failures)) => {
            let status = if verification_failed || fixture_failures > 0 { "fail" } else { "pass" };
            let _ = writeln!(summary, "status: {status}");
            write_text(&summary_path, &summary)?;
            files.push(summary_path);
            Ok(RunOutcome { files, summary, verification_failed, fixture_failures })
        }
        Err(e) => {
            let _ = writeln!(summary, "error: {e}");
            let _ = writeln!(summary, "status: error");
            write_text(&summary_path, &summary)?;
            Err(e)
        }
    }
}

fn run_resolved(
    scenario: &Scenario,
    resolved: &Resolved,
    out: &Path,
    summary: &mut String,
) -> Result<(Vec<PathBuf>, bool, usize)> {
    let wants = |a: Analysis| scenario.analyses.contains(&a);
    let needs_report = wants(Analysis::Ear) || wants(Analysis::Closeness) || wants(Analysis::Verify);
    let report = if needs_report { Some(verify_instance(&resolved.agents, &resolved.config)?) } else { None };
    let _ = writeln!(summary, "agents: {}", resolved.agents.len());

    let mut files = Vec::new();
    let mut verification_failed = false;
    if wants(Analysis::Curves) {
        let path = out.join("curves.csv");
        write_curves(&path, &resolved.agents, report.as_ref(), scenario.grid, resolved.config.price_grid)?;
        files.push(path);
    }
    if wants(Analysis::Ap) {
        let path = out.join("ap.csv");
        let (price, revenue) = write_ap(&path, &resolved.agents)?;
        let _ = writeln!(summary, "anonymous pricing: price {price} revenue {revenue}");
        files.push(path);
    }
    if let Some(rep) = &report {
        if wants(Analysis::Ear) {
            let path = out.join("ear.csv");
            write_ear(&path, rep)?;
            let _ = writeln!(summary, "ex-ante relaxation: {}", rep.ear_r);
            files.push(path);
        }
        if wants(Analysis::Closeness) {
            let path = out.join("closeness.csv");
            write_closeness(&path, rep)?;
            let _ = writeln!(summary, "closeness: zeta {} eta {} alpha {:?}", rep.zeta, rep.eta, rep.alpha);
            files.push(path);
        }
        if wants(Analysis::Verify) {
            let path = out.join("verify.csv");
            write_verify(&path, rep)?;
            files.push(path);
            let bound = rep.table1_bound.map_or("none".to_string(), |b| b.to_string());
            let _ = writeln!(
                summary,
                "verify: AP {} EAR {} ratio {} transfer bound {} class bound {} slack {}",
                rep.ap, rep.ear_r, rep.ratio, rep.transfer_bound, bound, rep.slack
            );
            for v in &rep.assumption_violations {
                let _ = writeln!(summary, "assumption violated: {v}");
            }
            let checks = [
                ("ratio within transfer bound", rep.pass_transfer),
                ("ratio within class bound", rep.pass_table1),
                ("AP transfer inequality", rep.ap_transfer_holds),
                ("EAR transfer inequality", rep.ear_transfer_holds),
            ];
            for (label, ok) in checks {
                let _ = writeln!(summary, "{} {label}", if ok { "PASS" } else { "FAIL" });
                verification_failed |= !ok;
            }
        }
    }

    let mut fixture_failures = 0;
    if !resolved.fixtures.is_empty() && (wants(Analysis::Verify) || wants(Analysis::Closeness)) {
        let path = out.join("fixtures.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["fixture", "label", "actual", "check", "target", "origin", "pass", "note"])?;
        for f in &resolved.fixtures {
            for o in f.evaluate(&resolved.config)? {
                write_outcome(&mut w, &f.reference, &o)?;
                let _ = writeln!(
                    summary,
                    "{} {}: {} = {} ({} {}, {})",
                    if o.pass { "PASS" } else { "FAIL" },
                    f.reference,
                    o.label,
                    o.actual,
                    o.check,
                    o.target,
                    o.origin
                );
                fixture_failures += usize::from(!o.pass);
            }
        }
        w.flush().map_err(|source| CliError::Io { path: path.clone(), source })?;
        files.push(path);
    }
    Ok((files, verification_failed, fixture_failures))
}

fn write_outcome(w: &mut csv::Writer<fs::File>, fixture: &str, o: &Outcome) -> Result<()> {
    w.write_record([
        fixture.to_string(),
        o.label.clone(),
        o.actual.to_string(),
        o.check.to_string(),
        o.target.to_string(),
        o.origin.to_string(),
        o.pass.to_string(),
        o.note.clone(),
    ])?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(file))
}

/// Rows to plot: the knots when there are at most `grid` of them after
/// dropping collinear ones, else `grid` equally spaced samples.
pub fn curve_rows(curve: &RevenueCurve, grid: usize) -> Vec<(f64, f64)> {
    let simple = curve.simplified();
    if simple.knots().len() <= grid {
        simple.knots().to_vec()
    } else {
        curve.sample(grid.max(2) - 1)
    }
}

/// Writes `p`, `hull` and (with a report) `r` rows for every agent.
pub fn write_curves(
    path: &Path,
    agents: &[Agent],
    report: Option<&ClosenessReport>,
    grid: usize,
    price_grid: usize,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["agent", "curve", "q", "value"])?;
    for (i, agent) in agents.iter().enumerate() {
        let p = match report {
            Some(rep) => rep.agents[i].p.clone(),
            None => agent.price_posting_curve(price_grid)?,
        };
        let mut curves = vec![("p", p.clone()), ("hull", p.hull())];
        if let Some(rep) = report {
            curves.push(("r", rep.agents[i].r.clone()));
        }
        for (name, c) in curves {
            for (q, v) in curve_rows(&c, grid) {
                w.write_record([agent.id.as_str(), name, &q.to_string(), &v.to_string()])?;
            }
        }
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Offers for real agents, the given curve for synthetic ones.
pub fn bidders(agents: &[Agent]) -> Result<Vec<Bidder>> {
    agents
        .iter()
        .map(|a| match &a.model {
            AgentModel::Synthetic { p, .. } => Ok(Bidder::Curve(RevenueCurve::from_pairs(p)?)),
            _ => Ok(Bidder::Offer(offer_curve(a)?)),
        })
        .collect()
}

fn write_ap(path: &Path, agents: &[Agent]) -> Result<(f64, f64)> {
    let bidders = bidders(agents)?;
    let ap = ap_optimize(&bidders)?;
    let mut w = csv_writer(path)?;
    w.write_record(["agent", "price", "accept_probability", "revenue"])?;
    for (a, q) in agents.iter().zip(&ap.win_probabilities) {
        w.write_record([a.id.as_str(), &ap.price.to_string(), &q.to_string(), ""])?;
    }
    let sold = 1.0 - ap.win_probabilities.iter().map(|q| 1.0 - q).product::<f64>();
    w.write_record(["all", &ap.price.to_string(), &sold.to_string(), &ap.revenue.to_string()])?;
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok((ap.price, ap.revenue))
}

fn write_ear(path: &Path, rep: &ClosenessReport) -> Result<()> {
    let rs: Vec<RevenueCurve> = rep.agents.iter().map(|a| a.r.clone()).collect();
    let ear = ear_optimize(&rs)?;
    let mut w = csv_writer(path)?;
    w.write_record(["agent", "quantile", "revenue"])?;
    for ((a, q), r) in rep.agents.iter().zip(&ear.quantiles).zip(&rs) {
        w.write_record([a.id.as_str(), &q.to_string(), &r.eval(*q).to_string()])?;
    }
    let total: f64 = ear.quantiles.iter().sum();
    w.write_record(["all", &total.to_string(), &ear.revenue.to_string()])?;
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_closeness(path: &Path, rep: &ClosenessReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["agent".to_string(), "model".to_string(), "source".to_string()];
    header.extend(rep.betas.iter().map(|b| format!("alpha@{b}")));
    header.extend(["zeta", "eta", "p_concave", "class_bound", "violation"].map(String::from));
    w.write_record(&header)?;
    for a in &rep.agents {
        let mut row = vec![a.id.clone(), a.model.to_string(), a.source.label().to_string()];
        row.extend(a.alphas.iter().map(|x| x.1.to_string()));
        row.push(a.zeta.to_string());
        row.push(a.eta.to_string());
        row.push(a.p_concave.to_string());
        row.push(a.table1.map_or(String::new(), |b| b.to_string()));
        row.push(a.assumption_violation.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_verify(path: &Path, rep: &ClosenessReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["ap", "ear", "ratio", "transfer_bound", "class_bound", "slack", "pass"])?;
    w.write_record([
        rep.ap.to_string(),
        rep.ear_r.to_string(),
        rep.ratio.to_string(),
        rep.transfer_bound.to_string(),
        rep.table1_bound.map_or(String::new(), |b| b.to_string()),
        rep.slack.to_string(),
        rep.pass().to_string(),
    ])?;
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use revcurve_core::Distribution;

    #[test]
    fn uniform_curve_rows_on_five_points() {
        let p =
            Agent::linear("u", Distribution::uniform(0.0, 1.0).unwrap()).unwrap().price_posting_curve(4096).unwrap();
        let rows = curve_rows(&p, 5);
        let expected = [(0.0, 0.0), (0.25, 0.1875), (0.5, 0.25), (0.75, 0.1875), (1.0, 0.0)];
        assert_eq!(rows.len(), 5);
        for (r, e) in rows.iter().zip(expected) {
            assert!((r.0 - e.0).abs() < 1e-12 && (r.1 - e.1).abs() < 1e-6, "{r:?} vs {e:?}");
        }
    }

    #[test]
    fn equal_revenue_and_synthetic_curves_keep_their_knots() {
        let p =
            Agent::linear("e", Distribution::equal_revenue(10.0).unwrap()).unwrap().price_posting_curve(4096).unwrap();
        assert_eq!(curve_rows(&p, 33).len(), 3);
        let t = RevenueCurve::new(vec![(0.0, 0.0), (0.25, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(curve_rows(&t, 33), t.knots().to_vec());
    }

    #[test]
    fn two_uniform_verify_passes_and_reruns_identically() {
        let mut s = Scenario::from_fixture("uniform-linear:n=2");
        s.analyses = vec![Analysis::Curves, Analysis::Ap, Analysis::Ear, Analysis::Closeness, Analysis::Verify];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let first = run_scenario(&s, a.path()).unwrap();
        assert!(first.passed(), "{}", first.summary);
        assert!(first.summary.contains("ratio 1.299"), "{}", first.summary);
        run_scenario(&s, b.path()).unwrap();
        for f in &first.files {
            let name = f.file_name().unwrap();
            assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?} differs");
        }
        let verify = fs::read_to_string(a.path().join("verify.csv")).unwrap();
        assert!(verify.lines().nth(1).unwrap().ends_with(",true"));
    }

    #[test]
    fn module_errors_land_in_the_summary() {
        let mut s = Scenario::from_fixture("uniform-linear");
        s.oracle.price_grid = 10;
        let dir = tempfile::tempdir().unwrap();
        assert!(run_scenario(&s, dir.path()).is_err());
        let text = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(text.contains("status: error"), "{text}");
    }
}
