//! Gain-grid sweeps. The cartesian product of the four gain axes is run in
//! parallel; results come back in grid order and failed runs are recorded
//! as failures, never dropped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::ControllerGains;
use crate::metrics::{compute_metrics, Metrics};
use crate::simulator::Simulation;

/// Value lists for each gain. Empty axes fall back to the base gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub c: Vec<f64>,
    pub rho: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
}

impl SweepSpec {
    /// Grid points in row-major order (c outermost, k2 innermost).
    pub fn grid(&self, base: &ControllerGains) -> Vec<ControllerGains> {
        let axis = |values: &Vec<f64>, fallback: f64| -> Vec<f64> {
            if values.is_empty() {
                vec![fallback]
            } else {
                values.clone()
            }
        };
        let cs = axis(&self.c, base.c);
        let rhos = axis(&self.rho, base.rho);
        let k1s = axis(&self.k1, base.k1);
        let k2s = axis(&self.k2, base.k2);
        let mut out = Vec::with_capacity(cs.len() * rhos.len() * k1s.len() * k2s.len());
        for &c in &cs {
            for &rho in &rhos {
                for &k1 in &k1s {
                    for &k2 in &k2s {
                        out.push(ControllerGains { c, rho, k1, k2 });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SweepOutcome {
    Ok { metrics: Metrics },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub gains: ControllerGains,
    #[serde(flatten)]
    pub outcome: SweepOutcome,
}

/// Runs the grid. `jobs = 0` uses all cores. Output order equals
/// [`SweepSpec::grid`] order regardless of scheduling.
pub fn gain_sweep(base: &Simulation, spec: &SweepSpec, jobs: usize) -> Vec<SweepRecord> {
    let grid = spec.grid(&base.gains);
    let run_one = |gains: &ControllerGains| -> SweepRecord {
        let mut sim = base.clone();
        sim.gains = *gains;
        let outcome = match sim.run() {
            Ok(trace) => SweepOutcome::Ok {
                metrics: compute_metrics(&trace),
            },
            Err(e) => SweepOutcome::Failed {
                error: e.to_string(),
            },
        };
        SweepRecord {
            gains: *gains,
            outcome,
        }
    };
    if jobs == 1 {
        return grid.iter().map(run_one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs) // 0 means "all cores" to rayon as well
        .build()
        .expect("thread pool construction cannot fail with these settings");
    pool.install(|| grid.par_iter().map(run_one).collect())
}

/// CSV rendering of sweep results; one row per grid point.
pub fn sweep_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(
        "c,rho,k1,k2,status,transient_time,steady_state_error,overshoot_fraction,\
         sigma_rms_steady,max_abs_e1,error\n",
    );
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for r in records {
        let g = &r.gains;
        match &r.outcome {
            SweepOutcome::Ok { metrics } => {
                out.push_str(&format!(
                    "{},{},{},{},ok,{},{:.16e},{},{:.16e},{:.16e},\n",
                    g.c,
                    g.rho,
                    g.k1,
                    g.k2,
                    fmt_opt(metrics.transient_time),
                    metrics.steady_state_error,
                    fmt_opt(metrics.overshoot_fraction),
                    metrics.sigma_rms_steady,
                    metrics.max_abs_e1,
                ));
            }
            SweepOutcome::Failed { error } => {
                out.push_str(&format!(
                    "{},{},{},{},failed,,,,,,\"{}\"\n",
                    g.c,
                    g.rho,
                    g.k1,
                    g.k2,
                    error.replace('"', "'")
                ));
            }
        }
    }
    out
}
