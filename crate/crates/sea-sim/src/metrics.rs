//! Tracking-quality summaries computed over a finished trace.

use serde::Serialize;

use crate::simulator::TraceRecord;

/// Error band and hold time that define "settled", plus the slice of the
/// trace the steady-state statistics were taken from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsWindow {
    /// |e1| band counted as settled, rad.
    pub settle_band: f64,
    /// Time the error must stay inside the band, s.
    pub settle_hold: f64,
    /// Steady-state statistics start here, s.
    pub steady_start: f64,
    /// ... and end here (end of trace), s.
    pub steady_end: f64,
}

/// Summary statistics for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// First time after which |e1| stays inside the band for at least the
    /// hold time. None if the error never settles within the trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transient_time: Option<f64>,
    /// Mean |e1| over the steady window, rad.
    pub steady_state_error: f64,
    /// max(phi - phi_final) / |phi_final - phi_initial|; None when the net
    /// excursion is too small to normalize by.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overshoot_fraction: Option<f64>,
    /// RMS of sigma over the steady window.
    pub sigma_rms_steady: f64,
    /// Largest |e1| anywhere in the trace, rad.
    pub max_abs_e1: f64,
    pub window: MetricsWindow,
}

/// Fraction of the trace tail used for steady-state statistics.
pub const STEADY_FRACTION: f64 = 0.2;

/// Default settle band, rad.
pub const SETTLE_BAND: f64 = 0.02;

/// Default settle hold, s.
pub const SETTLE_HOLD: f64 = 0.2;

/// Net excursions below this are not normalized into an overshoot fraction.
const MIN_STEP_FOR_OVERSHOOT: f64 = 1e-9;

pub fn compute_metrics(trace: &[TraceRecord]) -> Metrics {
    compute_metrics_with(trace, SETTLE_BAND, SETTLE_HOLD)
}

pub fn compute_metrics_with(trace: &[TraceRecord], band: f64, hold: f64) -> Metrics {
    assert!(!trace.is_empty(), "metrics need a non-empty trace");
    let t_end = trace.last().unwrap().t;
    let steady_start = trace[0].t + (t_end - trace[0].t) * (1.0 - STEADY_FRACTION);

    let mut transient_time = None;
    // Earliest sample from which the error stays inside the band for the
    // full hold window. Scan with a moving exit pointer; both indices only
    // move forward so the pass is linear.
    let mut j = 0usize;
    for (i, rec) in trace.iter().enumerate() {
        if rec.e1.abs() >= band {
            continue;
        }
        if rec.t + hold > t_end {
            break;
        }
        if j < i {
            j = i;
        }
        let mut ok = true;
        while j < trace.len() && trace[j].t <= rec.t + hold {
            if trace[j].e1.abs() >= band {
                ok = false;
                break;
            }
            j += 1;
        }
        if ok {
            transient_time = Some(rec.t);
            break;
        }
        // j stops on the offending sample; restart the entry scan past it.
    }

    let steady: Vec<&TraceRecord> = trace.iter().filter(|r| r.t >= steady_start).collect();
    let n = steady.len().max(1) as f64;
    let steady_state_error = steady.iter().map(|r| r.e1.abs()).sum::<f64>() / n;
    let sigma_rms_steady =
        (steady.iter().map(|r| r.sigma * r.sigma).sum::<f64>() / n).sqrt();

    let phi_initial = trace[0].phi;
    let phi_final = trace.last().unwrap().phi;
    let step = phi_final - phi_initial;
    let overshoot_fraction = if step.abs() < MIN_STEP_FOR_OVERSHOOT {
        None
    } else {
        let peak = trace
            .iter()
            .map(|r| (r.phi - phi_final) * step.signum())
            .fold(f64::NEG_INFINITY, f64::max);
        Some(peak.max(0.0) / step.abs())
    };

    let max_abs_e1 = trace.iter().map(|r| r.e1.abs()).fold(0.0_f64, f64::max);

    Metrics {
        transient_time,
        steady_state_error,
        overshoot_fraction,
        sigma_rms_steady,
        max_abs_e1,
        window: MetricsWindow {
            settle_band: band,
            settle_hold: hold,
            steady_start,
            steady_end: t_end,
        },
    }
}
