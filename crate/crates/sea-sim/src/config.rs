//! Layered run configuration.
//!
//! Precedence: built-in defaults, then the `--config` file, then each
//! `--set` expression in order. Both the file and the overrides parse into
//! the same partial structure, so a `--set` accepts exactly the dotted TOML
//! paths that the file accepts (`plant.k = 18000`). Unknown keys are
//! rejected with the key name and the source location.
//!
//! Every run directory gets exactly one `manifest.toml`: the fully resolved
//! configuration plus a `[run]` table (version, digest, wall clock,
//! termination). Manifests re-ingest as config files and resolve to the
//! identical configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::{ControllerConfig, ControllerGains};
use crate::error::ConfigError;
use crate::geometry::LinkGeometry;
use crate::plant::{DisturbanceProfile, MotorParams, PlantParams};
use crate::reference::{Reference, ReferenceSource};
use crate::simulator::{Mode, Realization, SimConfig, Simulation};
use crate::sweep::SweepSpec;

macro_rules! overlay {
    ($dst:expr, $src:expr, $($f:ident),+ $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )+
    };
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub d4: Option<f64>,
    pub d5: Option<f64>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSection {
    pub m: Option<f64>,
    pub b_damp: Option<f64>,
    pub k: Option<f64>,
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotorSection {
    pub r: Option<f64>,
    pub l_ind: Option<f64>,
    pub k_t: Option<f64>,
    pub k_emf: Option<f64>,
    pub j_m: Option<f64>,
    pub b_m: Option<f64>,
    pub j_s: Option<f64>,
    pub m0: Option<f64>,
    pub n: Option<f64>,
    pub l_lead: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub j_eq: Option<f64>,
    pub characteristic_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainsSection {
    pub c: Option<f64>,
    pub rho: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub update_period: Option<f64>,
    pub deriv_filter_tau: Option<f64>,
    pub boundary_layer: Option<f64>,
    pub nominal_tau_d: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt_plant: Option<f64>,
    pub duration: Option<f64>,
    pub decimation: Option<usize>,
    pub divergence_limit: Option<f64>,
    pub initial_phi: Option<f64>,
    pub initial_phi_dot: Option<f64>,
    pub initial_delta: Option<f64>,
    pub initial_delta_dot: Option<f64>,
    pub realization: Option<Realization>,
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub trace: Option<bool>,
    pub svg: Option<bool>,
}

/// Partial configuration: what a file or a `--set` expression provides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub geometry: GeometrySection,
    pub plant: PlantSection,
    pub motor: MotorSection,
    pub gains: GainsSection,
    pub controller: ControllerSection,
    pub sim: SimSection,
    pub output: OutputSection,
    pub reference: Option<ReferenceSource>,
    pub disturbance: Option<DisturbanceProfile>,
    pub sweep: Option<SweepSpec>,
    /// Present when re-ingesting a manifest; carries run metadata and is
    /// ignored by resolution.
    pub run: Option<toml::Table>,
}

impl FileConfig {
    /// Applies `other` on top of `self` (leaf-wise for scalar sections,
    /// whole-section for the tagged tables).
    pub fn apply(&mut self, other: &FileConfig) {
        overlay!(self.geometry, other.geometry, d1, d2, d3, d4, d5, theta_min, theta_max);
        overlay!(self.plant, other.plant, m, b_damp, k, g);
        overlay!(
            self.motor, other.motor, r, l_ind, k_t, k_emf, j_m, b_m, j_s, m0, n, l_lead, eta1,
            eta2, j_eq, characteristic_rate
        );
        overlay!(self.gains, other.gains, c, rho, k1, k2);
        overlay!(
            self.controller,
            other.controller,
            update_period,
            deriv_filter_tau,
            boundary_layer,
            nominal_tau_d
        );
        overlay!(
            self.sim, other.sim, dt_plant, duration, decimation, divergence_limit, initial_phi,
            initial_phi_dot, initial_delta, initial_delta_dot, realization, mode
        );
        overlay!(self.output, other.output, trace, svg);
        if other.reference.is_some() {
            self.reference = other.reference.clone();
        }
        if other.disturbance.is_some() {
            self.disturbance = other.disturbance.clone();
        }
        if let Some(theirs) = &other.sweep {
            // Sweep axes merge per axis so several --set flags compose.
            let ours = self.sweep.get_or_insert_with(SweepSpec::default);
            if !theirs.c.is_empty() {
                ours.c = theirs.c.clone();
            }
            if !theirs.rho.is_empty() {
                ours.rho = theirs.rho.clone();
            }
            if !theirs.k1.is_empty() {
                ours.k1 = theirs.k1.clone();
            }
            if !theirs.k2.is_empty() {
                ours.k2 = theirs.k2.clone();
            }
        }
    }
}

/// Parses config TOML from an in-memory string. `location` names the
/// source in error messages.
pub fn parse_toml(text: &str, location: &str) -> Result<FileConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        location: location.to_string(),
        message: e.to_string(),
    })
}

/// Reads and parses a config file.
pub fn load_file_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_toml(&text, &path.display().to_string())
}

/// Parses one `--set` expression. Dotted TOML keys make `a.b.c = v` a
/// complete document, so the expression goes through the same parser and
/// the same unknown-key rejection as a file.
pub fn parse_set(expr: &str) -> Result<FileConfig, ConfigError> {
    parse_toml(expr, &format!("--set '{expr}'"))
}

/// Fully resolved, concrete configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub geometry: ResolvedGeometry,
    pub plant: ResolvedPlant,
    pub motor: ResolvedMotor,
    pub gains: ControllerGains,
    pub controller: ControllerConfig,
    pub sim: ResolvedSim,
    pub output: ResolvedOutput,
    pub reference: ReferenceSource,
    pub disturbance: DisturbanceProfile,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedGeometry {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedPlant {
    pub m: f64,
    pub b_damp: f64,
    pub k: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedMotor {
    pub r: f64,
    pub l_ind: f64,
    pub k_t: f64,
    pub k_emf: f64,
    pub j_m: f64,
    pub b_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_lead: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_eq: Option<f64>,
    pub characteristic_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedSim {
    pub dt_plant: f64,
    pub duration: f64,
    pub decimation: usize,
    pub divergence_limit: f64,
    pub initial_phi: f64,
    pub initial_phi_dot: f64,
    pub initial_delta: f64,
    pub initial_delta_dot: f64,
    pub realization: Realization,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedOutput {
    pub trace: bool,
    pub svg: bool,
}

/// Merges the layers and fills every gap with the built-in defaults.
pub fn resolve(
    file: Option<FileConfig>,
    sets: &[FileConfig],
) -> Result<ResolvedConfig, ConfigError> {
    let mut merged = FileConfig::default();
    if let Some(f) = file {
        merged.apply(&f);
    }
    for s in sets {
        merged.apply(s);
    }

    let ctrl_default = ControllerConfig::default();
    let gains_default = ControllerGains::default();
    let sim_default = SimConfig::default();

    Ok(ResolvedConfig {
        geometry: ResolvedGeometry {
            d1: merged.geometry.d1.unwrap_or(0.028),
            d2: merged.geometry.d2.unwrap_or(0.0525),
            d3: merged.geometry.d3.unwrap_or(0.0525),
            d4: merged.geometry.d4.unwrap_or(0.035),
            d5: merged.geometry.d5.unwrap_or(0.118),
            theta_min: merged.geometry.theta_min.unwrap_or(sim_default.theta_min),
            theta_max: merged.geometry.theta_max.unwrap_or(sim_default.theta_max),
        },
        plant: ResolvedPlant {
            m: merged.plant.m.unwrap_or(2.0),
            b_damp: merged.plant.b_damp.unwrap_or(0.5),
            k: merged.plant.k.unwrap_or(20_000.0),
            g: merged.plant.g.unwrap_or(9.81),
        },
        motor: ResolvedMotor {
            r: merged.motor.r.unwrap_or(5.56),
            l_ind: merged.motor.l_ind.unwrap_or(4.6e-3),
            k_t: merged.motor.k_t.unwrap_or(0.202),
            k_emf: merged.motor.k_emf.unwrap_or(0.202),
            j_m: merged.motor.j_m.unwrap_or(1.574e-4),
            b_m: merged.motor.b_m.unwrap_or(16.5e-5),
            j_s: merged.motor.j_s,
            m0: merged.motor.m0,
            n: merged.motor.n,
            l_lead: merged.motor.l_lead,
            eta1: merged.motor.eta1,
            eta2: merged.motor.eta2,
            j_eq: Some(merged.motor.j_eq.unwrap_or(1.574e-4)),
            characteristic_rate: merged.motor.characteristic_rate.unwrap_or(10.0),
        },
        gains: ControllerGains {
            c: merged.gains.c.unwrap_or(gains_default.c),
            rho: merged.gains.rho.unwrap_or(gains_default.rho),
            k1: merged.gains.k1.unwrap_or(gains_default.k1),
            k2: merged.gains.k2.unwrap_or(gains_default.k2),
        },
        controller: ControllerConfig {
            update_period: merged
                .controller
                .update_period
                .unwrap_or(ctrl_default.update_period),
            deriv_filter_tau: merged
                .controller
                .deriv_filter_tau
                .unwrap_or(ctrl_default.deriv_filter_tau),
            boundary_layer: merged
                .controller
                .boundary_layer
                .unwrap_or(ctrl_default.boundary_layer),
            nominal_tau_d: merged
                .controller
                .nominal_tau_d
                .unwrap_or(ctrl_default.nominal_tau_d),
        },
        sim: ResolvedSim {
            dt_plant: merged.sim.dt_plant.unwrap_or(sim_default.dt_plant),
            duration: merged.sim.duration.unwrap_or(sim_default.duration),
            decimation: merged.sim.decimation.unwrap_or(sim_default.decimation),
            divergence_limit: merged
                .sim
                .divergence_limit
                .unwrap_or(sim_default.divergence_limit),
            initial_phi: merged.sim.initial_phi.unwrap_or(0.0),
            initial_phi_dot: merged.sim.initial_phi_dot.unwrap_or(0.0),
            initial_delta: merged.sim.initial_delta.unwrap_or(0.0),
            initial_delta_dot: merged.sim.initial_delta_dot.unwrap_or(0.0),
            realization: merged.sim.realization.unwrap_or_default(),
            mode: merged.sim.mode.unwrap_or_default(),
        },
        output: ResolvedOutput {
            trace: merged.output.trace.unwrap_or(true),
            svg: merged.output.svg.unwrap_or(true),
        },
        reference: merged.reference.unwrap_or_default(),
        disturbance: merged.disturbance.unwrap_or_default(),
        sweep: merged.sweep.unwrap_or_default(),
    })
}

impl ResolvedConfig {
    /// Canonical TOML rendering; the digest and the manifest body both use
    /// this exact text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("resolved config always serializes")
    }

    /// SHA-256 of the canonical TOML, hex-encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn plant_params(&self) -> Result<PlantParams, ConfigError> {
        Ok(PlantParams::new(
            self.plant.m,
            self.plant.b_damp,
            self.plant.k,
            self.plant.g,
        )?)
    }

    pub fn link_geometry(&self) -> Result<LinkGeometry, ConfigError> {
        Ok(LinkGeometry::derive(
            self.geometry.d1,
            self.geometry.d2,
            self.geometry.d3,
            self.geometry.d4,
            self.geometry.d5,
        )?)
    }

    pub fn motor_params(&self) -> MotorParams {
        MotorParams {
            r: self.motor.r,
            l_ind: self.motor.l_ind,
            k_t: self.motor.k_t,
            k_emf: self.motor.k_emf,
            j_m: self.motor.j_m,
            b_m: self.motor.b_m,
            j_s: self.motor.j_s,
            m0: self.motor.m0,
            n: self.motor.n,
            l_lead: self.motor.l_lead,
            eta1: self.motor.eta1,
            eta2: self.motor.eta2,
            j_eq: self.motor.j_eq,
        }
    }

    /// Validates everything and assembles a runnable scenario.
    pub fn build_simulation(&self) -> Result<Simulation, ConfigError> {
        let params = self.plant_params()?;
        let geom = self.link_geometry()?;
        let gains = ControllerGains::new(self.gains.c, self.gains.rho, self.gains.k1, self.gains.k2)?;
        self.controller.validate()?;
        let reference = Reference::compile(&self.reference)?;
        let sim = SimConfig {
            dt_plant: self.sim.dt_plant,
            duration: self.sim.duration,
            decimation: self.sim.decimation,
            divergence_limit: self.sim.divergence_limit,
            theta_min: self.geometry.theta_min,
            theta_max: self.geometry.theta_max,
            initial_phi: self.sim.initial_phi,
            initial_phi_dot: self.sim.initial_phi_dot,
            initial_delta: self.sim.initial_delta,
            initial_delta_dot: self.sim.initial_delta_dot,
            realization: self.sim.realization,
            mode: self.sim.mode,
        };
        let simulation = Simulation {
            params,
            geom,
            gains,
            ctrl: self.controller,
            sim,
            reference,
            disturbance: self.disturbance,
        };
        simulation
            .sim
            .validate(&simulation.ctrl)
            .map_err(|e| ConfigError::Invalid {
                location: "sim".into(),
                message: e.to_string(),
            })?;
        geom.validate_operating_range(sim.theta_min, sim.theta_max)?;
        Ok(simulation)
    }
}

/// The `[run]` table of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config_digest: String,
    pub wall_clock_unix: u64,
    pub wall_clock_utc: String,
    pub termination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Civil UTC timestamp from an epoch second count (proleptic Gregorian).
fn utc_string(secs: u64) -> String {
    let days = (secs / 86_400) as i64;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1_460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}

/// Writes `manifest.toml` into `dir`. Refuses to clobber an existing one:
/// a run directory documents exactly one run.
pub fn write_manifest(
    dir: &Path,
    resolved: &ResolvedConfig,
    command: &str,
    termination: &str,
    seed: Option<u64>,
) -> Result<PathBuf, ConfigError> {
    let path = dir.join("manifest.toml");
    if path.exists() {
        return Err(ConfigError::Invalid {
            location: path.display().to_string(),
            message: "output directory already holds a manifest; \
                      use a fresh directory per run"
                .into(),
        });
    }
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let run = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config_digest: resolved.digest(),
        wall_clock_unix: now,
        wall_clock_utc: utc_string(now),
        termination: termination.to_string(),
        seed,
    };
    let mut body = resolved.to_toml();
    body.push_str("\n[run]\n");
    body.push_str(&toml::to_string(&run).expect("run table serializes"));
    std::fs::write(&path, body).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_and_build() {
        let resolved = resolve(None, &[]).unwrap();
        assert_eq!(resolved.plant.k, 20_000.0);
        assert_eq!(resolved.gains.c, 10.0);
        assert_eq!(resolved.sim.dt_plant, 5e-6);
        let sim = resolved.build_simulation().unwrap();
        assert_eq!(sim.params.omega_sq, 10_000.0);
    }

    #[test]
    fn file_then_set_precedence() {
        let file = parse_toml("[plant]\nk = 18000\nm = 2.5\n", "test").unwrap();
        let set = parse_set("plant.k = 15000").unwrap();
        let resolved = resolve(Some(file), &[set]).unwrap();
        assert_eq!(resolved.plant.k, 15_000.0); // --set wins
        assert_eq!(resolved.plant.m, 2.5); // file survives where not overridden
        assert_eq!(resolved.plant.b_damp, 0.5); // default fills the rest
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_toml("[plant]\nstiffness = 1.0\n", "bad.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("stiffness"), "{msg}");
        assert!(msg.contains("bad.toml"), "{msg}");
        let err = parse_set("plant.q = 3").unwrap_err();
        assert!(err.to_string().contains("--set"), "{err}");
        assert!(err.to_string().contains('q'), "{err}");
    }

    #[test]
    fn digest_changes_with_content() {
        let a = resolve(None, &[]).unwrap();
        let b = resolve(None, &[parse_set("plant.k = 18000").unwrap()]).unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn resolved_toml_reingests_identically() {
        let sets = [
            parse_set("gains.k2 = 50").unwrap(),
            parse_set("sim.realization = \"sampled\"").unwrap(),
            parse_set("disturbance = { kind = \"sinusoid\", amplitude = 0.2, frequency_hz = 2.0 }")
                .unwrap(),
        ];
        let original = resolve(None, &sets).unwrap();
        let text = original.to_toml();
        let reread = parse_toml(&text, "roundtrip").unwrap();
        let resolved_again = resolve(Some(reread), &[]).unwrap();
        assert_eq!(original, resolved_again);
        assert_eq!(original.digest(), resolved_again.digest());
    }

    #[test]
    fn manifest_roundtrips_through_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let original = resolve(None, &[parse_set("plant.k = 21000").unwrap()]).unwrap();
        let path = write_manifest(dir.path(), &original, "simulate", "completed", None).unwrap();
        // Second manifest in the same dir is refused.
        assert!(write_manifest(dir.path(), &original, "simulate", "completed", None).is_err());
        let reread = load_file_config(&path).unwrap();
        assert!(reread.run.is_some());
        let resolved_again = resolve(Some(reread), &[]).unwrap();
        assert_eq!(original, resolved_again);
        assert_eq!(original.digest(), resolved_again.digest());
    }

    #[test]
    fn utc_formatting() {
        assert_eq!(utc_string(0), "1970-01-01T00:00:00Z");
        // 2026-08-19 00:00:00 UTC
        assert_eq!(utc_string(1_787_097_600), "2026-08-19T00:00:00Z");
    }

    #[test]
    fn mode_and_reference_parse_from_toml() {
        let text = r#"
            [sim.mode]
            kind = "unforced"
            freeze_spring = true

            [reference]
            kind = "step"
            to = 0.3
            at = 0.5
        "#;
        let cfg = parse_toml(text, "test").unwrap();
        let resolved = resolve(Some(cfg), &[]).unwrap();
        assert_eq!(
            resolved.sim.mode,
            Mode::Unforced {
                freeze_spring: true
            }
        );
        match resolved.reference {
            ReferenceSource::Step { to, at, smoothing, .. } => {
                assert_eq!(to, 0.3);
                assert_eq!(at, 0.5);
                assert_eq!(smoothing, crate::reference::DEFAULT_STEP_SMOOTHING);
            }
            other => panic!("unexpected reference {other:?}"),
        }
    }
}
