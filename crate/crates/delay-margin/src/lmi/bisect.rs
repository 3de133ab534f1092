//! Margin computation: bisection over `mu` on LMI feasibility verdicts.

use nalgebra::DVector;

use crate::bounds::f_of_p;
use crate::error::Result;
use crate::lmi::assemble::{build_problem, ColumnAlignment};
use crate::lmi::solve::{feasibility_solve, FeasibilityCertificate, SolveOptions, Verdict};
use crate::system::{DerivParam, LtiDelaySystem};

#[derive(Debug, Clone)]
pub struct BisectStep {
    pub mu: f64,
    pub verdict: Verdict,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct BisectOutcome {
    /// Largest `mu` whose LMI was verified strictly feasible.
    pub mu_max: f64,
    pub steps: Vec<BisectStep>,
    pub inconclusive: usize,
    pub tol_mu: f64,
    pub alignment: ColumnAlignment,
    pub f_value: f64,
    /// Certificate at the last feasible point (absent when `mu_max = 0`).
    pub certificate: Option<FeasibilityCertificate>,
}

/// Largest uncertainty radius certified by the time-domain LMI, located
/// by bisection over `[0, h]`.
///
/// Feasible solves warm-start the next one (the feasible sets shrink
/// continuously in `mu`). Inconclusive verdicts count as infeasible for
/// the bracket — the result is the largest *verified* feasible radius —
/// and are reported separately.
pub fn mu_max_bisect(
    sys: &LtiDelaySystem,
    p: DerivParam,
    tol_mu: f64,
    alignment: ColumnAlignment,
    seed: u64,
) -> Result<BisectOutcome> {
    let f = f_of_p(p)?;
    let opts = SolveOptions {
        seed,
        ..Default::default()
    };
    let mut steps = Vec::new();
    let mut inconclusive = 0usize;
    let mut warm: Option<DVector<f64>> = None;
    let mut certificate: Option<FeasibilityCertificate> = None;

    let solve_at = |mu: f64,
                        warm: &mut Option<DVector<f64>>,
                        steps: &mut Vec<BisectStep>,
                        inconclusive: &mut usize,
                        certificate: &mut Option<FeasibilityCertificate>|
     -> Result<bool> {
        let problem = build_problem(sys, mu, f, alignment)?;
        let cert = feasibility_solve(&problem, &opts, warm.as_ref());
        steps.push(BisectStep {
            mu,
            verdict: cert.verdict,
            margin: cert.margin,
        });
        match cert.verdict {
            Verdict::Feasible => {
                *warm = Some(cert.variables.clone());
                *certificate = Some(cert);
                Ok(true)
            }
            Verdict::Infeasible => Ok(false),
            Verdict::Inconclusive => {
                *inconclusive += 1;
                Ok(false)
            }
        }
    };

    // nominal check: without it no positive radius can be certified
    if !solve_at(0.0, &mut warm, &mut steps, &mut inconclusive, &mut certificate)? {
        return Ok(BisectOutcome {
            mu_max: 0.0,
            steps,
            inconclusive,
            tol_mu,
            alignment,
            f_value: f,
            certificate: None,
        });
    }

    let mut lo = 0.0;
    let mut hi = sys.h();
    if solve_at(hi, &mut warm, &mut steps, &mut inconclusive, &mut certificate)? {
        // the delay term never destabilizes; the radius is capped at h
        return Ok(BisectOutcome {
            mu_max: hi,
            steps,
            inconclusive,
            tol_mu,
            alignment,
            f_value: f,
            certificate,
        });
    }
    while hi - lo > tol_mu {
        let mid = 0.5 * (lo + hi);
        if solve_at(mid, &mut warm, &mut steps, &mut inconclusive, &mut certificate)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BisectOutcome {
        mu_max: lo,
        steps,
        inconclusive,
        tol_mu,
        alignment,
        f_value: f,
        certificate,
    })
}

impl BisectOutcome {
    pub fn to_json(&self, p: DerivParam) -> serde_json::Value {
        let d = match p {
            DerivParam::Finite(p) => serde_json::json!(1.0 + p),
            DerivParam::Infinite => serde_json::json!("inf"),
        };
        serde_json::json!({
            "method": "lmi",
            "d": d,
            "F": self.f_value,
            "mu_max": self.mu_max,
            "tol": self.tol_mu,
            "bisection_steps": self.steps.len(),
            "inconclusive": self.inconclusive,
            "alignment": self.alignment.to_string(),
            "solver": self.certificate.as_ref().map(|c| serde_json::json!({
                "iterations": c.iterations,
                "final_margin": c.margin,
            })),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::assemble::build_problem;
    use nalgebra::DMatrix;

    #[test]
    fn nominal_lmi_is_feasible_for_the_benchmark() {
        // mu = 0 reduces to the descriptor certificate of the constant
        // delay system, which must exist at h = 1
        let sys = LtiDelaySystem::benchmark_2d();
        let problem = build_problem(&sys, 0.0, 1.0, ColumnAlignment::XdotRow).unwrap();
        let cert = feasibility_solve(&problem, &SolveOptions::default(), None);
        assert_eq!(cert.verdict, Verdict::Feasible, "margin = {}", cert.margin);
    }

    #[test]
    fn zero_delay_matrix_caps_margin_at_h() {
        let sys = LtiDelaySystem::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -2.0]),
            DMatrix::zeros(2, 2),
            0.8,
        )
        .unwrap();
        let out = mu_max_bisect(&sys, DerivParam::Finite(0.0), 1e-3, ColumnAlignment::XdotRow, 0)
            .unwrap();
        assert_eq!(out.mu_max, 0.8);
    }

    #[test]
    fn unstable_nominal_returns_zero() {
        let sys = LtiDelaySystem::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DMatrix::from_row_slice(1, 1, &[0.1]),
            0.5,
        )
        .unwrap();
        let out = mu_max_bisect(&sys, DerivParam::Finite(0.0), 1e-3, ColumnAlignment::XdotRow, 0)
            .unwrap();
        assert_eq!(out.mu_max, 0.0);
    }

    #[test]
    fn verdicts_are_monotone_along_a_mu_grid() {
        let sys = LtiDelaySystem::benchmark_2d();
        let mut last_feasible = true;
        let mut switches = 0;
        for i in 0..=10 {
            let mu = 0.05 * i as f64;
            let problem = build_problem(&sys, mu, 1.0, ColumnAlignment::XdotRow).unwrap();
            let cert = feasibility_solve(&problem, &SolveOptions::default(), None);
            let feas = cert.verdict == Verdict::Feasible;
            if feas != last_feasible {
                switches += 1;
                assert!(last_feasible && !feas, "feasibility must not reappear as mu grows");
            }
            last_feasible = feas;
        }
        assert!(switches <= 1, "verdict pattern switched {switches} times");
    }
}
