//! Convergence traces of the parametric estimators and runtime benchmarks.

use std::fs;
use std::path::Path;
use std::time::Instant;

use super::output::format_float;
use super::plan::{ExperimentPlan, Sweep};
use super::trial::TrialSetup;
use crate::error::{JcmError, Result};
use crate::estimators::Method;

/// Iteration-indexed objective values, one column per method. Shorter
/// traces are padded with their final value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub methods: Vec<Method>,
    pub traces: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    pub fn num_rows(&self) -> usize {
        self.traces.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn value(&self, column: usize, row: usize) -> f64 {
        let t = &self.traces[column];
        t.get(row).copied().or_else(|| t.last().copied()).unwrap_or(f64::NAN)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::from("iteration");
        for m in &self.methods {
            text.push(',');
            text.push_str(m.label());
        }
        text.push('\n');
        for row in 0..self.num_rows() {
            text.push_str(&row.to_string());
            for col in 0..self.methods.len() {
                text.push(',');
                text.push_str(&format_float(self.value(col, row)));
            }
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| JcmError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

fn check_methods(plan: &ExperimentPlan) -> Result<()> {
    if plan.methods.is_empty() || plan.methods.iter().any(|m| !matches!(m, Method::PemGd | Method::PemAo)) {
        return Err(JcmError::InvalidConfig("convergence traces need PEM_GD and/or PEM_AO".into()));
    }
    Ok(())
}

/// Objective traces for one seeded instance: the first sweep value and
/// trial `trial` of the plan.
pub fn convergence_trace(plan: &ExperimentPlan, trial: usize) -> Result<ConvergenceTable> {
    check_methods(plan)?;
    let value = *plan
        .sweep_values
        .first()
        .ok_or_else(|| JcmError::InvalidConfig("sweep_values must not be empty".into()))?;
    let setup = TrialSetup::new(plan, value, trial)?;
    let mut traces = Vec::new();
    for &m in &plan.methods {
        traces.push(setup.estimate(m, &plan.estimators)?.objective_trace);
    }
    Ok(ConvergenceTable { methods: plan.methods.clone(), traces })
}

/// First iteration whose objective is within `rel` of the final value.
pub fn iterations_to_floor(trace: &[f64], rel: f64) -> usize {
    let Some(&floor) = trace.last() else { return 0 };
    trace
        .iter()
        .position(|&f| f - floor <= rel * floor.abs())
        .unwrap_or(trace.len() - 1)
}

/// Iterations to reach within 1% of the floor, per trial and method, for
/// trials `0..plan.trials` at the first sweep value.
pub fn convergence_study(plan: &ExperimentPlan) -> Result<Vec<Vec<usize>>> {
    check_methods(plan)?;
    (0..plan.trials)
        .map(|t| {
            let table = convergence_trace(plan, t)?;
            Ok(table.traces.iter().map(|tr| iterations_to_floor(tr, 0.01)).collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub n_b: usize,
    pub method: Method,
    pub median_runtime_s: f64,
    pub total_runtime_s: f64,
    pub trials: usize,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Serial wall-clock timing of every method at each array size of the plan
/// (the sweep values for an `n_b` sweep, otherwise the scenario's own).
pub fn benchmark(plan: &ExperimentPlan) -> Result<Vec<BenchmarkRow>> {
    let sizes: Vec<f64> = if plan.sweep == Sweep::NB {
        plan.sweep_values.clone()
    } else {
        vec![plan.scenario.bob.num_antennas as f64]
    };
    let mut bench = plan.clone();
    bench.sweep = Sweep::NB;
    bench.sweep_values = sizes.clone();
    bench.validate()?;
    let mut rows = Vec::new();
    for &size in &sizes {
        let setups: Vec<TrialSetup> = (0..plan.trials).map(|t| TrialSetup::new(&bench, size, t)).collect::<Result<_>>()?;
        for &m in &plan.methods {
            let mut times = Vec::with_capacity(setups.len());
            for setup in &setups {
                let start = Instant::now();
                let est = setup.estimate(m, &plan.estimators);
                times.push(start.elapsed().as_secs_f64());
                std::hint::black_box(est.ok());
            }
            let total = times.iter().sum();
            rows.push(BenchmarkRow {
                n_b: size as usize,
                method: m,
                median_runtime_s: median(&mut times),
                total_runtime_s: total,
                trials: setups.len(),
            });
        }
    }
    Ok(rows)
}

/// `EVD <= PEM_AO <= PEM_GD` in median runtime at array size `n_b`.
pub fn runtime_ordering_holds(rows: &[BenchmarkRow], n_b: usize) -> Option<bool> {
    let get = |m: Method| rows.iter().find(|r| r.n_b == n_b && r.method == m).map(|r| r.median_runtime_s);
    Some(get(Method::Evd)? <= get(Method::PemAo)? && get(Method::PemAo)? <= get(Method::PemGd)?)
}

pub fn write_benchmark_csv(rows: &[BenchmarkRow], path: &Path) -> Result<()> {
    let mut text = String::from("n_b,method,median_runtime_s,total_runtime_s,trials\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n_b,
            r.method.label(),
            format_float(r.median_runtime_s),
            format_float(r.total_runtime_s),
            r.trials
        ));
    }
    fs::write(path, text).map_err(|e| JcmError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ScenarioConfig;

    fn plan() -> ExperimentPlan {
        let mut plan = ExperimentPlan::new(ScenarioConfig::default(), Sweep::Convergence);
        plan.methods = vec![Method::PemGd, Method::PemAo];
        plan.sweep_values = vec![5.0];
        plan.trials = 2;
        plan
    }

    #[test]
    fn traces_are_nonincreasing_and_tabulated() {
        let table = convergence_trace(&plan(), 0).unwrap();
        assert_eq!(table.methods.len() + 1, 3);
        for tr in &table.traces {
            assert!(tr.windows(2).all(|w| w[1] <= w[0]));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        table.write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "iteration,PEM_GD,PEM_AO");
        assert_eq!(text.lines().count(), table.num_rows() + 1);
    }

    #[test]
    fn floor_detection() {
        assert_eq!(iterations_to_floor(&[10.0, 5.0, 1.005, 1.0], 0.01), 2);
        assert_eq!(iterations_to_floor(&[1.0], 0.01), 0);
        assert_eq!(iterations_to_floor(&[], 0.01), 0);
    }

    #[test]
    fn study_rejects_other_methods() {
        let mut p = plan();
        p.methods.push(Method::Scm);
        assert!(convergence_study(&p).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn benchmark_reports_positive_runtimes() {
        let mut p = ExperimentPlan::new(ScenarioConfig::default(), Sweep::Jnr);
        p.trials = 3;
        let rows = benchmark(&p).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.median_runtime_s > 0.0 && r.n_b == 8));
        assert!(runtime_ordering_holds(&rows, 8).is_some());
    }
}
