//! Desired-trajectory sources.
//!
//! Every source yields position, velocity, and acceleration analytically
//! (the controller consumes all three), so each variant carries its own
//! derivative chain rather than differencing numerically.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, IngestError};

/// Largest commanded angle magnitude accepted at compile time, rad.
/// Keeps references inside the linkage's validated operating range.
pub const AMPLITUDE_LIMIT: f64 = 1.0;

/// Default rise time for smoothed steps, s.
pub const DEFAULT_STEP_SMOOTHING: f64 = 0.05;

/// One point of the desired trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub phi_d: f64,
    pub phi_d_dot: f64,
    pub phi_d_ddot: f64,
}

/// Declarative description of a trajectory, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSource {
    /// Sum of period-locked harmonics:
    /// phi_d(t) = sum_i A_i sin(2 pi i t / period + psi_i),
    /// with `harmonics[i-1] = [A_i, psi_i]`.
    SyntheticWalk {
        period: f64,
        harmonics: Vec<[f64; 2]>,
    },
    /// Natural cubic spline through samples read from a CSV file.
    File { path: String },
    /// Step from `from` to `to` at time `at`, shaped by a quintic ramp of
    /// width `smoothing` (0 keeps the raw discontinuity).
    Step {
        #[serde(default)]
        from: f64,
        to: f64,
        #[serde(default)]
        at: f64,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
    Sine {
        amplitude: f64,
        frequency_hz: f64,
        #[serde(default)]
        phase: f64,
    },
    Constant { value: f64 },
}

fn default_smoothing() -> f64 {
    DEFAULT_STEP_SMOOTHING
}

impl Default for ReferenceSource {
    /// Gait-like default: two harmonics, zero position/velocity/acceleration
    /// at t = 0, peak angle exactly 0.4 rad, period 1.6 s.
    fn default() -> Self {
        // Peak of 2A sin(w t) - A sin(2 w t) is (3 sqrt(3)/2) A at w t = 2 pi/3.
        let a = 0.4 / (1.5 * 3.0_f64.sqrt());
        ReferenceSource::SyntheticWalk {
            period: 1.6,
            harmonics: vec![[2.0 * a, 0.0], [a, std::f64::consts::PI]],
        }
    }
}

/// A compiled, samplable trajectory.
#[derive(Debug, Clone)]
pub enum Reference {
    Walk {
        omega: f64,
        harmonics: Vec<[f64; 2]>,
    },
    Spline(CubicSpline),
    Step {
        from: f64,
        to: f64,
        at: f64,
        smoothing: f64,
    },
    Sine {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    Constant(f64),
}

impl Reference {
    /// Validates and compiles a source description. File sources are read
    /// and splined here; amplitude is checked against [`AMPLITUDE_LIMIT`].
    pub fn compile(source: &ReferenceSource) -> Result<Self, ConfigError> {
        let invalid = |message: String| ConfigError::Invalid {
            location: "reference".into(),
            message,
        };
        let check_amplitude = |peak: f64| {
            if peak.abs() > AMPLITUDE_LIMIT {
                Err(invalid(format!(
                    "peak commanded angle {peak:.4} rad exceeds the {AMPLITUDE_LIMIT} rad \
                     operating limit"
                )))
            } else {
                Ok(())
            }
        };
        match source {
            ReferenceSource::SyntheticWalk { period, harmonics } => {
                if !(*period > 0.0) {
                    return Err(invalid(format!("period must be positive, got {period}")));
                }
                if harmonics.is_empty() {
                    return Err(invalid("harmonics must not be empty".into()));
                }
                let bound: f64 = harmonics.iter().map(|h| h[0].abs()).sum();
                check_amplitude(bound)?;
                Ok(Reference::Walk {
                    omega: 2.0 * std::f64::consts::PI / period,
                    harmonics: harmonics.clone(),
                })
            }
            ReferenceSource::File { path } => {
                let points = load_trajectory_file(path)?;
                let peak = points
                    .iter()
                    .map(|p| p.1.abs())
                    .fold(0.0_f64, f64::max);
                check_amplitude(peak)?;
                let spline = CubicSpline::new(points).map_err(|e| match e {
                    SplineBuildError::TooFewPoints(n) => IngestError::File {
                        path: path.clone(),
                        message: format!("need at least 4 samples, got {n}"),
                    },
                    SplineBuildError::NonIncreasing(i) => IngestError::File {
                        path: path.clone(),
                        message: format!("timestamps must be strictly increasing at sample {i}"),
                    },
                })?;
                Ok(Reference::Spline(spline))
            }
            ReferenceSource::Step {
                from,
                to,
                at,
                smoothing,
            } => {
                if *smoothing < 0.0 {
                    return Err(invalid(format!(
                        "smoothing must be non-negative, got {smoothing}"
                    )));
                }
                check_amplitude(from.abs().max(to.abs()))?;
                Ok(Reference::Step {
                    from: *from,
                    to: *to,
                    at: *at,
                    smoothing: *smoothing,
                })
            }
            ReferenceSource::Sine {
                amplitude,
                frequency_hz,
                phase,
            } => {
                if !(*frequency_hz > 0.0) {
                    return Err(invalid(format!(
                        "frequency_hz must be positive, got {frequency_hz}"
                    )));
                }
                check_amplitude(*amplitude)?;
                Ok(Reference::Sine {
                    amplitude: *amplitude,
                    omega: 2.0 * std::f64::consts::PI * frequency_hz,
                    phase: *phase,
                })
            }
            ReferenceSource::Constant { value } => {
                check_amplitude(*value)?;
                Ok(Reference::Constant(*value))
            }
        }
    }

    /// Fundamental period of a periodic reference, if it has one.
    pub fn period(&self) -> Option<f64> {
        match self {
            Reference::Walk { omega, .. } | Reference::Sine { omega, .. } => {
                Some(2.0 * std::f64::consts::PI / omega)
            }
            _ => None,
        }
    }

    pub fn sample(&self, t: f64) -> TrajectorySample {
        match self {
            Reference::Walk { omega, harmonics } => {
                let (mut p, mut v, mut a) = (0.0, 0.0, 0.0);
                for (i, h) in harmonics.iter().enumerate() {
                    let w = omega * (i as f64 + 1.0);
                    let arg = w * t + h[1];
                    p += h[0] * arg.sin();
                    v += h[0] * w * arg.cos();
                    a -= h[0] * w * w * arg.sin();
                }
                TrajectorySample {
                    t,
                    phi_d: p,
                    phi_d_dot: v,
                    phi_d_ddot: a,
                }
            }
            Reference::Spline(s) => {
                let (p, v, a) = s.eval(t);
                TrajectorySample {
                    t,
                    phi_d: p,
                    phi_d_dot: v,
                    phi_d_ddot: a,
                }
            }
            Reference::Step {
                from,
                to,
                at,
                smoothing,
            } => {
                let (p, v, a) = if *smoothing == 0.0 {
                    (if t < *at { *from } else { *to }, 0.0, 0.0)
                } else {
                    let x = (t - at) / smoothing;
                    if x <= 0.0 {
                        (*from, 0.0, 0.0)
                    } else if x >= 1.0 {
                        (*to, 0.0, 0.0)
                    } else {
                        // Quintic ramp: zero velocity and acceleration at both ends.
                        let s = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
                        let ds = 30.0 * x * x * (1.0 - x) * (1.0 - x) / smoothing;
                        let dds =
                            60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (smoothing * smoothing);
                        let span = to - from;
                        (from + span * s, span * ds, span * dds)
                    }
                };
                TrajectorySample {
                    t,
                    phi_d: p,
                    phi_d_dot: v,
                    phi_d_ddot: a,
                }
            }
            Reference::Sine {
                amplitude,
                omega,
                phase,
            } => {
                let arg = omega * t + phase;
                TrajectorySample {
                    t,
                    phi_d: amplitude * arg.sin(),
                    phi_d_dot: amplitude * omega * arg.cos(),
                    phi_d_ddot: -amplitude * omega * omega * arg.sin(),
                }
            }
            Reference::Constant(v) => TrajectorySample {
                t,
                phi_d: *v,
                phi_d_dot: 0.0,
                phi_d_ddot: 0.0,
            },
        }
    }
}

#[derive(Debug)]
pub enum SplineBuildError {
    TooFewPoints(usize),
    /// Index of the sample whose timestamp does not increase.
    NonIncreasing(usize),
}

/// Natural cubic spline (zero curvature at both ends) with clamp-hold
/// extrapolation: outside the knot span the value freezes at the boundary
/// sample and both derivatives are zero.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, SplineBuildError> {
        let n = points.len();
        if n < 4 {
            return Err(SplineBuildError::TooFewPoints(n));
        }
        for i in 1..n {
            if points[i].0 <= points[i - 1].0 {
                return Err(SplineBuildError::NonIncreasing(i));
            }
        }
        let t: Vec<f64> = points.iter().map(|p| p.0).collect();
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();

        // Tridiagonal system for interior second derivatives, natural ends.
        // Thomas sweep; the system is strictly diagonally dominant.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = t[i] - t[i - 1];
            let h1 = t[i + 1] - t[i];
            sub[i] = h0;
            diag[i] = 2.0 * (h0 + h1);
            sup[i] = h1;
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { t, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    /// (value, first derivative, second derivative) at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.t.len();
        if x <= self.t[0] {
            return (self.y[0], 0.0, 0.0);
        }
        if x >= self.t[n - 1] {
            return (self.y[n - 1], 0.0, 0.0);
        }
        // partition_point returns the first knot strictly greater than x.
        let j = self.t.partition_point(|&k| k <= x).min(n - 1);
        let (i0, i1) = (j - 1, j);
        let h = self.t[i1] - self.t[i0];
        let a = (self.t[i1] - x) / h;
        let b = (x - self.t[i0]) / h;
        let value = a * self.y[i0]
            + b * self.y[i1]
            + ((a * a * a - a) * self.m[i0] + (b * b * b - b) * self.m[i1]) * h * h / 6.0;
        let deriv = (self.y[i1] - self.y[i0]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i0] + (3.0 * b * b - 1.0) * self.m[i1]) * h / 6.0;
        let second = a * self.m[i0] + b * self.m[i1];
        (value, deriv, second)
    }
}

/// Reads `t,phi_d` samples from a CSV file. `#` starts a comment, blank
/// lines are skipped, and the first data line must be the literal header.
pub fn load_trajectory_file(path: &str) -> Result<Vec<(f64, f64)>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_string(),
        source,
    })?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let row = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != "t,phi_d" {
                return Err(IngestError::Row {
                    path: path.to_string(),
                    row,
                    message: format!("expected header `t,phi_d`, got `{line}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let mut fields = line.split(',');
        let (t_str, y_str) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => {
                return Err(IngestError::Row {
                    path: path.to_string(),
                    row,
                    message: format!("expected two comma-separated fields, got `{line}`"),
                })
            }
        };
        let parse = |s: &str, what: &str| -> Result<f64, IngestError> {
            let v: f64 = s.parse().map_err(|_| IngestError::Row {
                path: path.to_string(),
                row,
                message: format!("cannot parse {what} `{s}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(IngestError::Row {
                    path: path.to_string(),
                    row,
                    message: format!("{what} `{s}` is not finite"),
                });
            }
            Ok(v)
        };
        let t = parse(t_str, "timestamp")?;
        let y = parse(y_str, "angle")?;
        if let Some(last) = points.last() {
            if t == last.0 {
                return Err(IngestError::Row {
                    path: path.to_string(),
                    row,
                    message: format!("duplicated timestamp {t}"),
                });
            }
            if t < last.0 {
                return Err(IngestError::Row {
                    path: path.to_string(),
                    row,
                    message: format!("timestamp {t} not increasing (previous {})", last.0),
                });
            }
        }
        points.push((t, y));
    }
    if !header_seen {
        return Err(IngestError::File {
            path: path.to_string(),
            message: "file has no header line `t,phi_d`".into(),
        });
    }
    Ok(points)
}
