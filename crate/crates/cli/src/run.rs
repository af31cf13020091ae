use std::collections::BTreeMap;
use std::io::Write;

use finsec::catalog::worked_error_bound;
use finsec::fsm::DEFAULT_MODULI;
use finsec::report::fmt_real;
use finsec::rfsm::{reference_tail_oracle, SearchLimits, StudyOptions};
use finsec::{
    choose_parameters, classify_subsequences, convergence_study, expected_outcomes, fsm_solve, lattice_section,
    qmapn_norm, rfsm_solve, solution_bound, stability_scan, CheckResult, ExampleId, FsmError, IndexSet, LatticePoint,
    RfsmParameters, RfsmReport, StabilityReport, Vector, Verdict,
};
use serde::{Deserialize, Serialize};

use crate::config::{Format, Problem, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Scan,
    SolveFsm,
    SolveRfsm,
    Study,
    Example,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutput {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub example: Option<ExampleId>,
    pub report: StabilityReport,
    /// modulus -> residue -> verdict
    pub verdicts: BTreeMap<u64, BTreeMap<u64, Verdict>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub expectations: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionEntry {
    pub at: LatticePoint,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionOutput {
    pub domain: String,
    pub operator: String,
    pub n: u64,
    pub m: Option<u64>,
    /// `‖P_m A P_n u − P_m b‖_2`, for rectangular solves.
    pub residual: Option<f64>,
    /// Solution norm bound `M`, when `‖A^{-1}‖` is known and its hypothesis holds.
    pub bound: Option<f64>,
    pub parameters: Option<RfsmParameters>,
    pub solution: Vec<SolutionEntry>,
}

/// Runs one command and returns the report bytes.
pub fn run(command: Command, config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let format = config.format.unwrap_or_default();
    match command {
        Command::Scan | Command::Example => {
            let out = scan(command, config)?;
            match format {
                Format::Csv => csv(|w| out.report.write_csv(w)),
                Format::Json => json(&out),
            }
        }
        Command::SolveFsm | Command::SolveRfsm => {
            let out = if command == Command::SolveFsm { solve_fsm(config)? } else { solve_rfsm(config)? };
            match format {
                Format::Csv => csv(|w| write_solution(&out, w)),
                Format::Json => json(&out),
            }
        }
        Command::Study => {
            let out = study(config)?;
            match format {
                Format::Csv => csv(|w| out.write_csv(w)),
                Format::Json => json(&out),
            }
        }
    }
}

fn csv(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}

fn scan(command: Command, config: &RunConfig) -> Result<ScanOutput, CliError> {
    if command == Command::Example && config.example.is_none() {
        return Err(CliError::Validation("example needs an id".into()));
    }
    let ns = config.n_range(40)?;
    let n_max = *ns.last().expect("non-empty");
    let tau = config.tau()?;
    let norm_cap = config.norm_cap()?;
    let problem = config.problem(n_max)?;
    let report = stability_scan(&problem.operator, &problem.domain, &ns, tau)?
        .labeled(problem.domain_label.clone(), problem.operator_label.clone());

    let mut verdicts = BTreeMap::new();
    if config.modulus.is_empty() {
        // default moduli, kept only where every class has enough samples
        for modulus in DEFAULT_MODULI {
            match classify_subsequences(&report, modulus, norm_cap) {
                Ok(v) => {
                    verdicts.insert(modulus, v);
                }
                Err(FsmError::InsufficientData { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
    } else {
        for &modulus in &config.modulus {
            verdicts.insert(modulus, classify_subsequences(&report, modulus, norm_cap)?);
        }
    }

    let expectations = match command {
        Command::Example => {
            let case = config.example_case(n_max)?.expect("checked above");
            expected_outcomes(&case, n_max)?
        }
        _ => Vec::new(),
    };
    Ok(ScanOutput { example: problem.example.filter(|_| command == Command::Example), report, verdicts, expectations })
}

fn required(name: &str, value: Option<u64>) -> Result<u64, CliError> {
    match value {
        Some(v) if v > 0 => Ok(v),
        Some(_) => Err(CliError::Validation(format!("--{name} must be at least 1"))),
        None => Err(CliError::Validation(format!("--{name} is required"))),
    }
}

/// Every point of `Ω_n`, zeros included, in lattice order.
fn entries(u: &Vector, omega: &IndexSet) -> Vec<SolutionEntry> {
    omega
        .iter()
        .map(|p| {
            let z = u.get(p);
            SolutionEntry { at: p.clone(), re: z.re, im: z.im }
        })
        .collect()
}

fn solve_fsm(config: &RunConfig) -> Result<SolutionOutput, CliError> {
    let n = required("n", config.n)?;
    let tau = config.tau()?;
    let problem = config.problem(n)?;
    let omega = lattice_section(&problem.domain, n);
    let b = Vector::from_dense(&omega, &problem.rhs.to_dense(&omega));
    let u = fsm_solve(&problem.operator, &b, &problem.domain, n, tau)?;
    Ok(SolutionOutput {
        domain: problem.domain_label,
        operator: problem.operator_label,
        n,
        m: None,
        residual: None,
        bound: None,
        parameters: None,
        solution: entries(&u, &omega),
    })
}

fn solve_rfsm(config: &RunConfig) -> Result<SolutionOutput, CliError> {
    let tau = config.tau()?;
    let reference_n = required("reference-n", Some(config.reference_n.unwrap_or(64)))?;
    let problem = config.problem(config.n.unwrap_or(1).max(reference_n))?;
    let w = problem.operator.band_width() as u64;
    let (n, m, parameters) = match config.epsilon {
        Some(epsilon) => {
            let (a_norm, a_inv_norm) = certified(&problem)?;
            let reference = rfsm_solve(&problem.operator, &problem.rhs, &problem.domain, reference_n + w, reference_n, tau)?;
            let p = choose_parameters(
                epsilon,
                a_norm,
                a_inv_norm,
                &problem.rhs,
                reference_tail_oracle(&reference.u, &problem.domain),
                &problem.operator,
                &problem.domain,
                SearchLimits::default(),
            )?;
            (p.n, p.m, Some(p))
        }
        None => {
            let n = required("n", config.n)?;
            let m = match config.m {
                Some(m) if m < n => return Err(CliError::Validation(format!("--m {m} is smaller than --n {n}"))),
                Some(m) => m,
                None => config.coupling()?.rows_for(n, 0, w as usize)?,
            };
            (n, m, None)
        }
    };
    let sol = rfsm_solve(&problem.operator, &problem.rhs, &problem.domain, m, n, tau)?;
    let delta = match (config.delta, &parameters) {
        (Some(d), _) if d > 0.0 => d,
        (Some(d), _) => return Err(CliError::Validation(format!("--delta must be positive, got {d}"))),
        (None, Some(p)) => p.delta,
        (None, None) => sol.residual,
    };
    let bound = match problem.a_inv_norm {
        Some(inv) => {
            let q = qmapn_norm(&problem.operator, &problem.domain, m, n)?;
            solution_bound(inv, problem.rhs.norm2(), delta, q).ok()
        }
        None => None,
    };
    Ok(SolutionOutput {
        domain: problem.domain_label,
        operator: problem.operator_label,
        n,
        m: Some(m),
        residual: Some(sol.residual),
        bound,
        parameters,
        solution: entries(&sol.u, &lattice_section(&problem.domain, n)),
    })
}

fn certified(problem: &Problem) -> Result<(f64, f64), CliError> {
    match (problem.a_norm, problem.a_inv_norm) {
        (Some(a), Some(inv)) if a > 0.0 && inv > 0.0 => Ok((a, inv)),
        (Some(_), Some(_)) => Err(CliError::Validation("operator norms must be positive".into())),
        _ => Err(CliError::Validation("--epsilon needs --a-norm and --a-inv-norm (or an example that certifies them)".into())),
    }
}

fn study(config: &RunConfig) -> Result<RfsmReport, CliError> {
    let ns = config.n_range(20)?;
    let tau = config.tau()?;
    let reference_n = required("reference-n", Some(config.reference_n.unwrap_or(64)))?;
    let n_max = *ns.last().expect("non-empty");
    if reference_n <= n_max {
        return Err(CliError::Validation(format!("--reference-n {reference_n} must exceed --nmax {n_max}")));
    }
    let problem = config.problem(reference_n)?;
    let coupling = config.coupling()?;
    // the closed-form error bound belongs to the unmodified worked example
    let closed_form = problem.example == Some(ExampleId::WorkedA) && config.operator.is_none() && config.precondition.is_none();
    let bound = worked_error_bound;
    let options = StudyOptions {
        tau,
        a_inv_norm: problem.a_inv_norm,
        error_bound: if closed_form { Some(&bound) } else { None },
    };
    let report = convergence_study(&problem.operator, &problem.rhs, &problem.domain, &coupling, &ns, reference_n, options)?;
    Ok(report.labeled(problem.domain_label, problem.operator_label))
}

fn write_solution(out: &SolutionOutput, w: &mut Vec<u8>) -> std::io::Result<()> {
    let dimension = out.solution.first().map_or(1, |e| e.at.dimension());
    let header: Vec<String> = (1..=dimension).map(|k| format!("x{k}")).collect();
    writeln!(w, "{},re,im", header.join(","))?;
    for e in &out.solution {
        let coords: Vec<String> = e.at.coords().iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{},{}", coords.join(","), fmt_real(e.re), fmt_real(e.im))?;
    }
    Ok(())
}
