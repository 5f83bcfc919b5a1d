//! Experiment configuration: JSON schema, defaults, preset catalog, layered
//! overrides, and the content hash stamped onto every output row.
//!
//! Resolution order is defaults → preset (`--experiment`) → config file
//! (`--config`) → individual flags; later layers win field-by-field (JSON
//! objects merge recursively, everything else replaces).

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use rislink_core::arrays::AnglePair;
use rislink_core::chanstats::RicianHop;
use rislink_core::montecarlo::{LinkAngles, Precoder, SimConfig};
use rislink_core::ris::{AmplitudeModel, PhasePolicy};
use rislink_core::{ModelError, Result};

/// Which artifact an invocation produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    /// Outage-probability sweep (CSV + plot script).
    Outage,
    /// PDF/CDF table on an SNR grid (CSV).
    Distribution,
}

/// Phase policy in configuration form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhasePolicyConfig {
    /// Uniformly random quantized phases.
    Random {
        /// Phase resolution in bits.
        bits: u32,
    },
    /// Continuous per-element alignment.
    OptimalContinuous,
    /// Quantized per-element alignment.
    OptimalDiscrete {
        /// Phase resolution in bits.
        bits: u32,
    },
}

impl PhasePolicyConfig {
    /// The core-model policy.
    pub fn to_policy(self) -> PhasePolicy {
        match self {
            PhasePolicyConfig::Random { bits } => PhasePolicy::Random { bits },
            PhasePolicyConfig::OptimalContinuous => PhasePolicy::OptimalContinuous,
            PhasePolicyConfig::OptimalDiscrete { bits } => PhasePolicy::OptimalDiscrete { bits },
        }
    }

    /// Current bit depth, if the policy is quantized.
    pub fn bits(self) -> Option<u32> {
        match self {
            PhasePolicyConfig::Random { bits } | PhasePolicyConfig::OptimalDiscrete { bits } => {
                Some(bits)
            }
            PhasePolicyConfig::OptimalContinuous => None,
        }
    }

    /// Same policy with a different bit depth (error for the continuous
    /// policy, which has none).
    pub fn with_bits(self, bits: u32) -> Result<Self> {
        match self {
            PhasePolicyConfig::Random { .. } => Ok(PhasePolicyConfig::Random { bits }),
            PhasePolicyConfig::OptimalDiscrete { .. } => {
                Ok(PhasePolicyConfig::OptimalDiscrete { bits })
            }
            PhasePolicyConfig::OptimalContinuous => Err(ModelError::InvalidConfig {
                message: "cannot sweep bits with the optimal-continuous phase policy".to_string(),
            }),
        }
    }
}

/// Amplitude response in configuration form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AmplitudeConfig {
    /// Unit amplitude regardless of phase.
    Ideal,
    /// Phase-dependent hardware response with floor `zeta_min`, offset `c`
    /// (radians), and exponent `kappa`.
    Hardware {
        /// Minimum amplitude `ζ_min ∈ (0, 1]`.
        zeta_min: f64,
        /// Phase offset `c` in radians.
        c: f64,
        /// Steepness exponent `κ ≥ 0`.
        kappa: f64,
    },
}

impl AmplitudeConfig {
    /// The core-model amplitude.
    pub fn to_model(self) -> Result<AmplitudeModel> {
        match self {
            AmplitudeConfig::Ideal => Ok(AmplitudeModel::ideal()),
            AmplitudeConfig::Hardware { zeta_min, c, kappa } => {
                AmplitudeModel::new(zeta_min, c, kappa)
            }
        }
    }
}

/// Link directions in configuration form (all radians).  A missing `tx`
/// follows the alignment rule: the transmit steering direction defaults to
/// the RIS input direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnglesConfig {
    /// RIS steering toward the transmitter `(φ_H, θ_H)`.
    pub ris_in: [f64; 2],
    /// RIS steering toward the receiver `(φ_r, θ_r)`.
    pub ris_out: [f64; 2],
    /// Transmit URA steering `(φ_t, θ_t)`; `null` aligns with `ris_in`.
    pub tx: Option<[f64; 2]>,
    /// Receive ULA steering `ϑ_r`.
    pub rx: f64,
}

impl AnglesConfig {
    /// Resolves to the simulator's angle set.
    pub fn to_angles(self) -> LinkAngles {
        let tx = self.tx.unwrap_or(self.ris_in);
        LinkAngles {
            tx: AnglePair::new(tx[0], tx[1]),
            ris_in: AnglePair::new(self.ris_in[0], self.ris_in[1]),
            ris_out: AnglePair::new(self.ris_out[0], self.ris_out[1]),
            rx: self.rx,
        }
    }
}

/// Sweep variable of an outage run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Average SNR in dB.
    RhoBarDb,
    /// RIS element count.
    NRis,
    /// Phase resolution in bits.
    Bits,
}

impl SweepVariable {
    /// Column name used in CSV headers.
    pub fn column_name(self) -> &'static str {
        match self {
            SweepVariable::RhoBarDb => "rho_bar_db",
            SweepVariable::NRis => "n_ris",
            SweepVariable::Bits => "bits",
        }
    }

    /// Parses the `--sweep` flag's variable part.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "rho_bar_db" => Ok(SweepVariable::RhoBarDb),
            "n_ris" => Ok(SweepVariable::NRis),
            "bits" => Ok(SweepVariable::Bits),
            other => Err(ModelError::InvalidConfig {
                message: format!(
                    "unknown sweep variable `{other}` (expected rho_bar_db, n_ris, or bits)"
                ),
            }),
        }
    }
}

/// One sweep axis: either an inclusive arithmetic range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// What to vary.
    pub variable: SweepVariable,
    /// Range start (with `stop`/`step`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    /// Inclusive range end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    /// Range increment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Explicit sweep values (mutually exclusive with the range fields).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SweepSpec {
    /// Expands to the concrete nonempty list of sweep values.
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let values = match (&self.values, self.start, self.stop, self.step) {
            (Some(values), None, None, None) => values.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if !start.is_finite() || !stop.is_finite() || !step.is_finite() || step <= 0.0 {
                    return Err(ModelError::InvalidConfig {
                        message: format!(
                            "sweep range needs finite start/stop and positive step, \
                             got {start}:{step}:{stop}"
                        ),
                    });
                }
                if stop < start {
                    return Err(ModelError::InvalidConfig {
                        message: format!("sweep stop {stop} precedes start {start}"),
                    });
                }
                // Half-step slack keeps the endpoint inclusive under
                // floating-point accumulation.
                let count = ((stop - start) / step + 0.5).floor() as usize + 1;
                (0..count).map(|i| start + step * i as f64).collect()
            }
            _ => {
                return Err(ModelError::InvalidConfig {
                    message: "sweep needs either values or all of start/stop/step".to_string(),
                })
            }
        };
        if values.is_empty() {
            return Err(ModelError::InvalidConfig {
                message: "sweep resolves to no points".to_string(),
            });
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(ModelError::InvalidConfig {
                    message: format!("sweep value {v} is not finite"),
                });
            }
            if matches!(self.variable, SweepVariable::NRis | SweepVariable::Bits)
                && (v.fract() != 0.0 || v < 1.0)
            {
                return Err(ModelError::InvalidConfig {
                    message: format!(
                        "{} sweep values must be positive integers, got {v}",
                        self.variable.column_name()
                    ),
                });
            }
        }
        Ok(values)
    }

    /// Parses a `--sweep` flag: `var=start:step:stop` or `var=v1,v2,...`.
    pub fn parse_flag(flag: &str) -> Result<Self> {
        let (name, rest) = flag
            .split_once('=')
            .ok_or_else(|| ModelError::InvalidConfig {
                message: format!("sweep flag `{flag}` is missing `=` (use var=start:step:stop)"),
            })?;
        let variable = SweepVariable::parse(name.trim())?;
        let parse_num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ModelError::InvalidConfig {
                    message: format!("cannot parse `{s}` in sweep flag `{flag}` as a number"),
                })
        };
        if rest.contains(':') {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(ModelError::InvalidConfig {
                    message: format!("sweep range `{rest}` must be start:step:stop"),
                });
            }
            Ok(SweepSpec {
                variable,
                start: Some(parse_num(parts[0])?),
                step: Some(parse_num(parts[1])?),
                stop: Some(parse_num(parts[2])?),
                values: None,
            })
        } else {
            let values = rest
                .split(',')
                .map(parse_num)
                .collect::<Result<Vec<f64>>>()?;
            Ok(SweepSpec {
                variable,
                start: None,
                stop: None,
                step: None,
                values: Some(values),
            })
        }
    }
}

/// Which analysis columns get computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisToggles {
    /// Saddle-point columns.
    pub spa: bool,
    /// Monte Carlo columns.
    pub monte_carlo: bool,
    /// Characteristic-function inversion column (distribution report).
    pub gil_pelaez: bool,
}

impl Default for AnalysisToggles {
    fn default() -> Self {
        AnalysisToggles {
            spa: true,
            monte_carlo: true,
            gil_pelaez: true,
        }
    }
}

/// The complete, resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Output file stem and legend label.
    pub scenario: String,
    /// Artifact kind.
    pub report: ReportKind,
    /// Carrier frequency metadata in GHz (spacings are normalized to the
    /// half wavelength, so this only documents the scenario).
    pub carrier_ghz: f64,
    /// Transmit antennas.
    pub n_t: usize,
    /// Receive antennas.
    pub n_r: usize,
    /// RIS elements.
    pub n_ris: usize,
    /// Rician K-factor of the transmitter-RIS hop.
    pub k_h: f64,
    /// Rician K-factor of the RIS-receiver hop.
    pub k_g: f64,
    /// RIS phase policy.
    pub phase_policy: PhasePolicyConfig,
    /// RIS amplitude response.
    pub amplitude: AmplitudeConfig,
    /// Link directions.
    pub angles: AnglesConfig,
    /// Transmit beamformer: `los-aligned` or `max-eigenvector`.
    pub precoder: PrecoderConfig,
    /// Average SNR in dB (the sweep overrides this on its axis).
    pub rho_bar_db: f64,
    /// Outage threshold ρ_th (linear).
    pub rho_th: f64,
    /// Monte Carlo trials.
    pub trials: usize,
    /// Base RNG seed.
    pub seed: u64,
    /// Distribution-report grid size.
    pub grid_points: usize,
    /// Sweep axis (outage report); absent means a single point at
    /// `rho_bar_db`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Column toggles.
    pub analyses: AnalysisToggles,
    /// Output directory.
    pub out_dir: String,
}

/// Transmit beamformer choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderConfig {
    /// Statistical beamformer aligned with the LoS direction.
    LosAligned,
    /// Instantaneous optimal benchmark.
    MaxEigenvector,
}

impl PrecoderConfig {
    /// The simulator's precoder.
    pub fn to_precoder(self) -> Precoder {
        match self {
            PrecoderConfig::LosAligned => Precoder::LosAligned,
            PrecoderConfig::MaxEigenvector => Precoder::MaxEigenvector,
        }
    }
}

impl Default for ExperimentConfig {
    /// The reference scenario: 4×4 MIMO through a 100-element surface with
    /// 2-bit aligned phases, hardware amplitude floor 0.8, offset 0.43π,
    /// exponent 1.6, K-factors 3, threshold 15, and the standard angle set.
    fn default() -> Self {
        ExperimentConfig {
            scenario: "outage-sweep".to_string(),
            report: ReportKind::Outage,
            carrier_ghz: 3.6,
            n_t: 4,
            n_r: 4,
            n_ris: 100,
            k_h: 3.0,
            k_g: 3.0,
            phase_policy: PhasePolicyConfig::OptimalDiscrete { bits: 2 },
            amplitude: AmplitudeConfig::Hardware {
                zeta_min: 0.8,
                c: 0.43 * PI,
                kappa: 1.6,
            },
            angles: AnglesConfig {
                ris_in: [PI / 6.0, PI / 4.0],
                ris_out: [PI / 3.0, PI / 5.0],
                tx: None,
                rx: PI / 4.0,
            },
            precoder: PrecoderConfig::LosAligned,
            rho_bar_db: -35.2,
            rho_th: 15.0,
            trials: 100_000,
            seed: 2024,
            grid_points: 200,
            sweep: None,
            analyses: AnalysisToggles::default(),
            out_dir: "out".to_string(),
        }
    }
}

impl ExperimentConfig {
    /// Validates fields the type system cannot.
    pub fn validate(&self) -> Result<()> {
        if self.scenario.is_empty()
            || self
                .scenario
                .contains(|c: char| c == '/' || c == '\\' || c.is_whitespace())
        {
            return Err(ModelError::InvalidConfig {
                message: format!(
                    "scenario `{}` must be a non-empty token without separators",
                    self.scenario
                ),
            });
        }
        if !self.rho_th.is_finite() || self.rho_th <= 0.0 {
            return Err(ModelError::InvalidConfig {
                message: format!("rho_th must be finite and positive, got {}", self.rho_th),
            });
        }
        if self.grid_points < 2 {
            return Err(ModelError::InvalidConfig {
                message: format!("grid_points must be at least 2, got {}", self.grid_points),
            });
        }
        if let Some(sweep) = &self.sweep {
            sweep.resolve()?;
        }
        // The rest is validated by the simulator config.
        self.sim_config(1.0, self.precoder.to_precoder())?
            .validate()
    }

    /// Average SNR on the linear scale.
    pub fn rho_bar_linear(&self) -> f64 {
        10f64.powf(self.rho_bar_db / 10.0)
    }

    /// Builds the simulator configuration at an explicit linear `ρ̄`.
    pub fn sim_config(&self, rho_bar: f64, precoder: Precoder) -> Result<SimConfig> {
        Ok(SimConfig {
            n_t: self.n_t,
            n_r: self.n_r,
            n_ris: self.n_ris,
            hop_h: RicianHop::unit(self.k_h)?,
            hop_g: RicianHop::unit(self.k_g)?,
            policy: self.phase_policy.to_policy(),
            amplitude: self.amplitude.to_model()?,
            angles: self.angles.to_angles(),
            precoder,
            rho_bar,
            trials: self.trials,
            seed: self.seed,
        })
    }

    /// SHA-256 over the canonical JSON serialization, truncated to 16 hex
    /// characters; stamped on every CSV row.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialization cannot fail");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// Recursively merges `overlay` onto `base`: objects merge key-by-key,
/// everything else replaces.
pub fn merge_json(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(base_map), Value::Object(overlay_map)) => {
            for (key, value) in overlay_map {
                match base_map.get_mut(&key) {
                    Some(slot) => merge_json(slot, value),
                    None => {
                        base_map.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

/// Named preset experiments.
pub const PRESETS: [&str; 4] = [
    "optimum-phase",
    "random-phase",
    "size-sweep",
    "distribution",
];

/// Overlay for a named preset.
pub fn preset_overlay(name: &str) -> Result<Value> {
    let overlay = match name {
        // The reference outage waterfall: 2-bit aligned phases swept through
        // the threshold region.
        "optimum-phase" => serde_json::json!({
            "scenario": "optimum-phase",
            "report": "outage",
            "phase_policy": {"kind": "optimal-discrete", "bits": 2},
            "trials": 1_000_000,
            "sweep": {"variable": "rho_bar_db", "start": -36.4, "step": 0.2, "stop": -34.4},
        }),
        // Same link with uniformly random phases; the waterfall sits ~20 dB
        // to the right.
        "random-phase" => serde_json::json!({
            "scenario": "random-phase",
            "report": "outage",
            "phase_policy": {"kind": "random", "bits": 2},
            "trials": 200_000,
            "sweep": {"variable": "rho_bar_db", "start": -16.0, "step": 0.5, "stop": -11.0},
        }),
        // Outage versus surface size at fixed average SNR.
        "size-sweep" => serde_json::json!({
            "scenario": "size-sweep",
            "report": "outage",
            "trials": 200_000,
            "sweep": {"variable": "n_ris", "values": [64.0, 100.0, 144.0]},
        }),
        // PDF/CDF table on the reference configuration.
        "distribution" => serde_json::json!({
            "scenario": "distribution",
            "report": "distribution",
            "trials": 200_000,
        }),
        other => {
            return Err(ModelError::InvalidConfig {
                message: format!(
                    "unknown experiment `{other}` (available: {})",
                    PRESETS.join(", ")
                ),
            })
        }
    };
    Ok(overlay)
}

/// Flag-level overrides (each maps to one config field).
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    /// `--out`.
    pub out_dir: Option<String>,
    /// `--trials`.
    pub trials: Option<usize>,
    /// `--seed`.
    pub seed: Option<u64>,
    /// `--sweep`.
    pub sweep: Option<String>,
}

/// Resolves the four layers into a validated configuration.
pub fn resolve_config(
    preset: Option<&str>,
    config_path: Option<&Path>,
    flags: &FlagOverrides,
) -> Result<ExperimentConfig> {
    let mut merged = serde_json::to_value(ExperimentConfig::default())
        .expect("default config serialization cannot fail");
    if let Some(name) = preset {
        merge_json(&mut merged, preset_overlay(name)?);
    }
    if let Some(path) = config_path {
        let text = fs::read_to_string(path).map_err(|e| ModelError::Io {
            message: format!("reading {}: {e}", path.display()),
        })?;
        let overlay: Value =
            serde_json::from_str(&text).map_err(|e| ModelError::InvalidConfig {
                message: format!("{} is not valid JSON: {e}", path.display()),
            })?;
        merge_json(&mut merged, overlay);
    }
    if let Some(out_dir) = &flags.out_dir {
        merge_json(&mut merged, serde_json::json!({ "out_dir": out_dir }));
    }
    if let Some(trials) = flags.trials {
        merge_json(&mut merged, serde_json::json!({ "trials": trials }));
    }
    if let Some(seed) = flags.seed {
        merge_json(&mut merged, serde_json::json!({ "seed": seed }));
    }
    if let Some(sweep_flag) = &flags.sweep {
        let sweep = SweepSpec::parse_flag(sweep_flag)?;
        let sweep_value = serde_json::to_value(&sweep).expect("sweep serialization cannot fail");
        // Replace rather than merge: a flag sweep fully overrides any
        // file-level sweep (mixing range and list fields would be invalid).
        if let Value::Object(map) = &mut merged {
            map.insert("sweep".to_string(), sweep_value);
        }
    }
    let config: ExperimentConfig =
        serde_json::from_value(merged).map_err(|e| ModelError::InvalidConfig {
            message: format!("configuration does not match the schema: {e}"),
        })?;
    config.validate()?;
    Ok(config)
}
