//! Seeded scenario generation and lossless JSON files for scenarios and schedules.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DelayModel, ModelError, Provenance, Scenario, Schedule, Task};

pub const FILE_VERSION: u32 = 1;
pub const PRNG_NAME: &str = "chacha8";
const MAX_DEADLINE_DRAWS: usize = 64;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error at line {line}, column {column}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: unsupported file version {found}")]
    Version { path: PathBuf, found: u32 },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
}

/// Closed interval `[lo, hi]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Reference point for the deadline draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlineAnchor {
    /// Deadline is the task's arrival plus the draw: the draw is a delay budget.
    #[default]
    Arrival,
    /// Deadline is the draw itself, measured from time zero.
    Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub num_tasks: usize,
    pub arrival_window: Window,
    pub deadline_window: Window,
    pub deadline_anchor: DeadlineAnchor,
    pub payload_bits: f64,
    pub tx_snr_db: f64,
    pub mean_path_loss: f64,
    pub total_bandwidth: f64,
    pub delay_model: DelayModel,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            num_tasks: 100,
            arrival_window: Window::new(0.0, 1.0),
            deadline_window: Window::new(0.05, 2.0),
            deadline_anchor: DeadlineAnchor::Arrival,
            payload_bits: 80_000.0,
            tx_snr_db: 20.0,
            mean_path_loss: 1e-3,
            total_bandwidth: 10e6,
            delay_model: DelayModel::default(),
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |msg: &str| Err(ScenarioError::Config(msg.to_string()));
        if !self.arrival_window.is_valid() || self.arrival_window.lo < 0.0 {
            return err("arrival window must be finite, non-negative and non-degenerate");
        }
        if !self.deadline_window.is_valid() {
            return err("deadline window must be finite and non-degenerate");
        }
        if !(self.payload_bits.is_finite() && self.payload_bits > 0.0) {
            return err("payload must be positive");
        }
        if !self.tx_snr_db.is_finite() {
            return err("transmit SNR must be finite");
        }
        if !(self.mean_path_loss.is_finite() && self.mean_path_loss > 0.0) {
            return err("mean path loss must be positive");
        }
        if !(self.total_bandwidth.is_finite() && self.total_bandwidth > 0.0) {
            return err("total bandwidth must be positive");
        }
        self.delay_model
            .validate()
            .map_err(|e| ScenarioError::Config(e.to_string()))?;
        let floor = self.delay_model.min_service();
        let reachable = match self.deadline_anchor {
            DeadlineAnchor::Arrival => self.deadline_window.hi > floor,
            DeadlineAnchor::Origin => self.deadline_window.hi > self.arrival_window.lo + floor,
        };
        if !reachable {
            return err("deadline window ends before any task could be served");
        }
        Ok(())
    }
}

/// Draws a scenario. Noise power is fixed to 1 so transmit power carries the SNR.
///
/// Deadlines are resampled until they exceed arrival plus the single-task
/// service time; after a bounded number of draws they are clamped to just
/// above that floor.
pub fn generate(config: &GenConfig) -> Result<Scenario, ScenarioError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tx_power = 10f64.powf(config.tx_snr_db / 10.0);
    let floor = config.delay_model.min_service();
    let aw = config.arrival_window;
    let dw = config.deadline_window;

    let mut tasks = Vec::with_capacity(config.num_tasks);
    for id in 0..config.num_tasks {
        let arrival = rng.random_range(aw.lo..aw.hi);
        let base = match config.deadline_anchor {
            DeadlineAnchor::Arrival => arrival,
            DeadlineAnchor::Origin => 0.0,
        };
        let min_deadline = arrival + floor;
        let mut deadline = f64::NAN;
        for _ in 0..MAX_DEADLINE_DRAWS {
            let candidate = base + rng.random_range(dw.lo..dw.hi);
            if candidate > min_deadline {
                deadline = candidate;
                break;
            }
        }
        if deadline.is_nan() {
            deadline = min_deadline + floor * 1e-6;
        }
        let fading: f64 = rng.sample(Exp1);
        tasks.push(Task {
            id,
            arrival,
            deadline,
            payload_bits: config.payload_bits,
            tx_power,
            channel_gain: config.mean_path_loss * fading.max(f64::MIN_POSITIVE),
        });
    }

    let mut scenario = Scenario::new(tasks, config.total_bandwidth, 1.0, config.delay_model);
    scenario.provenance = Some(Provenance {
        seed: config.seed,
        prng: PRNG_NAME.to_string(),
    });
    Ok(scenario)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    seed: Option<u64>,
    prng: Option<String>,
    sigma2: f64,
    total_bandwidth: f64,
    delay_model: DelayModel,
    tasks: Vec<Task>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    version: u32,
    #[serde(flatten)]
    schedule: Schedule,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        Self {
            version: FILE_VERSION,
            seed: s.provenance.as_ref().map(|p| p.seed),
            prng: s.provenance.as_ref().map(|p| p.prng.clone()),
            sigma2: s.noise_power,
            total_bandwidth: s.total_bandwidth,
            delay_model: s.delay_model,
            tasks: s.tasks.clone(),
        }
    }
}

impl From<ScenarioFile> for Scenario {
    fn from(f: ScenarioFile) -> Self {
        let provenance = match (f.seed, f.prng) {
            (Some(seed), Some(prng)) => Some(Provenance { seed, prng }),
            _ => None,
        };
        Scenario {
            tasks: f.tasks,
            total_bandwidth: f.total_bandwidth,
            noise_power: f.sigma2,
            delay_model: f.delay_model,
            provenance,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, source: serde_json::Error) -> ScenarioError {
    ScenarioError::Parse {
        path: path.to_path_buf(),
        line: source.line(),
        column: source.column(),
        source,
    }
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from(scenario)).expect("scenario serializes")
}

pub fn schedule_to_json(schedule: &Schedule) -> String {
    let file = ScheduleFile {
        version: FILE_VERSION,
        schedule: schedule.clone(),
    };
    serde_json::to_string_pretty(&file).expect("schedule serializes")
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    fs::write(path, scenario_to_json(scenario) + "\n").map_err(io_err(path))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    if file.version != FILE_VERSION {
        return Err(ScenarioError::Version {
            path: path.to_path_buf(),
            found: file.version,
        });
    }
    let scenario = Scenario::from(file);
    scenario.validate().map_err(|source| ScenarioError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(scenario)
}

pub fn save_schedule(schedule: &Schedule, path: &Path) -> Result<(), ScenarioError> {
    fs::write(path, schedule_to_json(schedule) + "\n").map_err(io_err(path))
}

pub fn load_schedule(path: &Path) -> Result<Schedule, ScenarioError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: ScheduleFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    if file.version != FILE_VERSION {
        return Err(ScenarioError::Version {
            path: path.to_path_buf(),
            found: file.version,
        });
    }
    Ok(file.schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Allocation, Assignment, Grant, Segment};

    fn config(num_tasks: usize, seed: u64) -> GenConfig {
        GenConfig {
            num_tasks,
            seed,
            ..GenConfig::default()
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let a = generate(&config(50, 7)).unwrap();
        let b = generate(&config(50, 7)).unwrap();
        assert_eq!(a, b);
        let c = generate(&config(50, 8)).unwrap();
        assert_ne!(a.tasks, c.tasks);
    }

    #[test]
    fn zero_tasks() {
        let s = generate(&config(0, 1)).unwrap();
        assert!(s.tasks.is_empty());
        s.validate().unwrap();
    }

    #[test]
    fn sample_means_near_midpoints() {
        let cfg = config(10_000, 3);
        let s = generate(&cfg).unwrap();
        let n = s.tasks.len() as f64;
        let arrival = s.tasks.iter().map(|t| t.arrival).sum::<f64>() / n;
        let budget = s.tasks.iter().map(|t| t.deadline - t.arrival).sum::<f64>() / n;
        let am = cfg.arrival_window.midpoint();
        let dm = cfg.deadline_window.midpoint();
        assert!((arrival - am).abs() < 0.05 * am, "arrival mean {arrival}");
        assert!((budget - dm).abs() < 0.05 * dm, "delay budget mean {budget}");
    }

    #[test]
    fn channel_gain_mean_converges() {
        let cfg = config(100_000, 11);
        let s = generate(&cfg).unwrap();
        let mean = s.tasks.iter().map(|t| t.channel_gain).sum::<f64>() / s.tasks.len() as f64;
        assert!((mean / cfg.mean_path_loss - 1.0).abs() < 0.02, "mean gain {mean}");
    }

    #[test]
    fn every_task_can_be_served_in_isolation() {
        for anchor in [DeadlineAnchor::Arrival, DeadlineAnchor::Origin] {
            let cfg = GenConfig {
                deadline_anchor: anchor,
                ..config(2_000, 5)
            };
            let s = generate(&cfg).unwrap();
            s.validate().unwrap();
            for t in &s.tasks {
                assert!(t.deadline > t.arrival + cfg.delay_model.min_service());
            }
        }
    }

    #[test]
    fn tx_power_carries_snr() {
        let s = generate(&GenConfig {
            tx_snr_db: 30.0,
            ..config(3, 0)
        })
        .unwrap();
        for t in &s.tasks {
            assert!((t.tx_power - 1000.0).abs() < 1e-9);
        }
        assert_eq!(s.noise_power, 1.0);
    }

    #[test]
    fn unreachable_deadlines_are_rejected() {
        let cfg = GenConfig {
            deadline_anchor: DeadlineAnchor::Origin,
            arrival_window: Window::new(5.0, 6.0),
            deadline_window: Window::new(0.05, 2.0),
            ..GenConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(ScenarioError::Config(_))));
        let degenerate = GenConfig {
            arrival_window: Window::new(1.0, 1.0),
            ..GenConfig::default()
        };
        assert!(generate(&degenerate).is_err());
    }

    #[test]
    fn scenario_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = generate(&config(100, 42)).unwrap();
        save_scenario(&s, &path).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(s, back);
        let text = fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["tasks"].as_array().unwrap().len(), 100);
        assert_eq!(value["prng"], PRNG_NAME);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = generate(&config(5, 1)).unwrap();
        let text = scenario_to_json(&s);
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        let err = load_scenario(&path).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line, .. } if line > 1), "{err}");
    }

    #[test]
    fn schedule_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let schedule = Schedule {
            batch_starts: vec![0.1 + 0.2, 1.0 / 3.0],
            assignments: vec![Assignment { task_id: 0, batch: 0 }, Assignment { task_id: 2, batch: 1 }],
            bandwidths: vec![
                Allocation {
                    task_id: 0,
                    grant: Grant::Dedicated { hz: 12345.678901234567 },
                },
                Allocation {
                    task_id: 2,
                    grant: Grant::Timed {
                        segments: vec![Segment {
                            start: 0.1,
                            end: 1.0 / 3.0,
                            hz: std::f64::consts::PI,
                        }],
                    },
                },
            ],
        };
        save_schedule(&schedule, &path).unwrap();
        assert_eq!(load_schedule(&path).unwrap(), schedule);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"hz\""));
    }
}
