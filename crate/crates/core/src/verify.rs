//! Self-check suites behind the `verify` command.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{chsh_formula, chsh_from_state, threshold};
use crate::bases::Basis;
use crate::bounds::{concavity_check, info_bound, info_bound_folded, small_d_slope_check};
use crate::measurement::{equality_conditions, mutual_information, optimal_povm, outcome_stats, second_qubit_povm};
use crate::probe::{build_optimal, verify_constraints, PostInteraction, Strategy};
use crate::symmetry::{average_information, damneq_check, symmetrize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Bounds,
    Equality,
    Symmetry,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bounds" => Ok(Suite::Bounds),
            "equality" => Ok(Suite::Equality),
            "symmetry" => Ok(Suite::Symmetry),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite `{s}`")),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, suite: &'static str, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { suite, name: name.into(), passed, detail: detail.into() });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark}  {:<9} {:<width$}  {}", c.suite, c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn info(s: &(impl PostInteraction + ?Sized), b: Basis, m: &crate::measurement::Povm) -> f64 {
    outcome_stats(s, b, m).map(|st| mutual_information(&st)).unwrap_or(f64::NAN)
}

fn bounds_suite(r: &mut VerifyReport) {
    const S: &str = "bounds";
    match concavity_check(1e-3) {
        Ok(c) => r.push(S, "concavity", c.passed(), format!(
            "max second difference {:.3e}, max closed form {:.3e}",
            c.max_second_difference, c.max_closed_form
        )),
        Err(e) => r.push(S, "concavity", false, e.to_string()),
    }
    let slope = small_d_slope_check();
    r.push(S, "small-d slope", slope.passed(), format!("{} ratios, monotone {}", slope.ratios.len(), slope.monotone));

    let t = threshold();
    r.push(S, "threshold", t.max_disagreement() < 1e-10, format!(
        "closed {:.10}, bisection {:.10}, chsh {:.10}",
        t.closed_form, t.bisection, t.chsh_root
    ));

    let mut worst = f64::NEG_INFINITY;
    for d in [0.01, 0.05, 0.1, 0.146447, 0.25, 0.4, 0.5] {
        let p = build_optimal(d, d).expect("valid d");
        let i = info(&p, Basis::XY, &optimal_povm(Basis::XY));
        worst = worst.max((i - info_bound(d).expect("valid d")).abs());
    }
    r.push(S, "saturation", worst < 1e-10, format!("max |I − bound| {worst:.3e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut excess = f64::NEG_INFINITY;
    for k in 0..100 {
        let s = Strategy::random(if k % 2 == 0 { 2 } else { 4 }, 4, &mut rng);
        for b in Basis::ALL {
            let d = s.disturbance(b.conjugate());
            excess = excess.max(info(&s, b, s.measurement(b)) - info_bound_folded(d));
        }
    }
    r.push(S, "random strategies", excess <= 1e-10, format!("max I − bound {excess:.3e} over 100"));

    let mut chsh = 0.0f64;
    for k in 0..=50 {
        let d = k as f64 / 100.0;
        chsh = chsh.max((chsh_from_state(d).expect("valid d") - chsh_formula(d).expect("valid d")).abs());
    }
    r.push(S, "chsh", chsh < 1e-10, format!("max |S_state − S_formula| {chsh:.3e}"));
}

fn equality_suite(r: &mut VerifyReport) {
    const S: &str = "equality";
    for (dxy, duv) in [(0.1, 0.1), (0.05, 0.3), (0.2, 0.1)] {
        let p = build_optimal(dxy, duv).expect("valid d");
        let c = verify_constraints(&p);
        r.push(S, format!("constraints ({dxy}, {duv})"), c.passed(), format!("{} failures", c.failures().len()));
        for b in Basis::ALL {
            match equality_conditions(&p, &optimal_povm(b), b) {
                Ok(rep) => {
                    let ok = rep.attained() && rep.epsilon == [1, 1, -1, -1];
                    r.push(S, format!("signs ({dxy}, {duv}) {b:?}"), ok, format!(
                        "ε = {:?}, max residual {:.3e}",
                        rep.epsilon,
                        rep.max_residual()
                    ));
                }
                Err(e) => r.push(S, format!("signs ({dxy}, {duv}) {b:?}"), false, e.to_string()),
            }
        }
    }

    let grid: Vec<f64> = (0..6).map(|k| 0.08 * k as f64).collect();
    let mut worst = 0.0f64;
    for &dxy in &grid {
        for &duv in &grid {
            let p = build_optimal(dxy, duv).expect("valid d");
            let ixy = info(&p, Basis::XY, &optimal_povm(Basis::XY));
            let iuv = info(&p, Basis::UV, &optimal_povm(Basis::UV));
            worst = worst.max((ixy - info_bound(duv).expect("valid")).abs());
            worst = worst.max((iuv - info_bound(dxy).expect("valid")).abs());
        }
    }
    r.push(S, "asymmetric saturation", worst < 1e-10, format!("6×6 grid, max deviation {worst:.3e}"));

    let mut worst = 0.0f64;
    for k in 0..=10 {
        let d = 0.05 * k as f64;
        let p = build_optimal(d, d).expect("valid d");
        for b in Basis::ALL {
            worst = worst.max((info(&p, b, &second_qubit_povm(b)) - info(&p, b, &optimal_povm(b))).abs());
        }
    }
    r.push(S, "second qubit", worst < 1e-10, format!("max deviation {worst:.3e}"));
}

fn symmetry_suite(r: &mut VerifyReport) {
    const S: &str = "symmetry";
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut di, mut dd, mut iso) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    for k in 0..20 {
        let s = Strategy::random(if k % 2 == 0 { 2 } else { 4 }, 4, &mut rng);
        let sym = symmetrize(&s);
        let rep = sym.report();
        di = di.max((rep.i_avg - average_information(&s)).abs());
        dd = dd.max(rep.d_avg - s.average_disturbance());
        iso = iso.max(rep.isotropy_residual);
    }
    r.push(S, "information kept", di < 1e-10, format!("max |ΔI| {di:.3e} over 20"));
    r.push(S, "disturbance not raised", dd <= 1e-12, format!("max ΔD {dd:.3e}"));
    r.push(S, "isotropy", iso < 1e-10, format!("max residual {iso:.3e}"));

    let sym = symmetrize(&build_optimal(0.2, 0.1).expect("valid").optimal_strategy());
    let (d, res) = damneq_check(&sym);
    r.push(S, "optimal (0.2, 0.1)", (d - 0.15).abs() < 1e-12 && res < 1e-10, format!("D = {d:.12}, residual {res:.3e}"));
}

pub fn run_suite(suite: Suite) -> VerifyReport {
    let mut r = VerifyReport::default();
    if matches!(suite, Suite::Bounds | Suite::All) {
        bounds_suite(&mut r);
    }
    if matches!(suite, Suite::Equality | Suite::All) {
        equality_suite(&mut r);
    }
    if matches!(suite, Suite::Symmetry | Suite::All) {
        symmetry_suite(&mut r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let r = run_suite(Suite::All);
        assert!(r.passed(), "{r}");
        assert!(r.to_string().contains("ε = [1, 1, -1, -1]"));
    }

    #[test]
    fn suite_names() {
        assert_eq!("equality".parse::<Suite>(), Ok(Suite::Equality));
        assert!("nope".parse::<Suite>().is_err());
    }
}
