#![allow(dead_code)]

use edgebatch::scenario::{generate, GenConfig};
use edgebatch::{Grant, Scenario, Schedule};

pub fn draw(num_tasks: usize, seed: u64) -> Scenario {
    draw_with(num_tasks, seed, |_| {})
}

pub fn draw_with(num_tasks: usize, seed: u64, tweak: impl FnOnce(&mut GenConfig)) -> Scenario {
    let mut config = GenConfig {
        num_tasks,
        seed,
        ..GenConfig::default()
    };
    tweak(&mut config);
    generate(&config).expect("generator config is valid")
}

/// Bits a grant delivers to task `k` between its arrival and `until`.
pub fn delivered_bits(scenario: &Scenario, k: usize, grant: &Grant, until: f64) -> f64 {
    let task = &scenario.tasks[k];
    let rate = (task.tx_power * task.channel_gain / scenario.noise_power).log2_1p();
    match grant {
        Grant::Dedicated { hz } => hz * rate * (until - task.arrival).max(0.0),
        Grant::Timed { segments } => segments
            .iter()
            .map(|s| s.hz * rate * (s.end.min(until) - s.start.max(task.arrival)).max(0.0))
            .sum(),
    }
}

pub fn batch_sizes(schedule: &Schedule) -> Vec<usize> {
    let mut sizes = vec![0; schedule.batch_starts.len()];
    for a in &schedule.assignments {
        sizes[a.batch] += 1;
    }
    sizes
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

pub struct CheckpointCase {
    pub scenario: Scenario,
    pub state: edgebatch::holes::Checkpoint,
    pub next_fixed_start: f64,
}

/// A checkpoint with random committed members, pool size and predecessor,
/// drawn on a contended scenario.
pub fn random_checkpoint(seed: u64) -> CheckpointCase {
    use edgebatch::holes::{Checkpoint, Member};
    use edgebatch::{batch_delay, required_bandwidth};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let num_tasks = rng.random_range(4..16);
    let bandwidth = rng.random_range(2e5..4e6);
    let scenario = draw_with(num_tasks, seed, |c| c.total_bandwidth = bandwidth);
    let model = scenario.delay_model;

    let (current_start, current_size) = if rng.random_bool(0.3) {
        (f64::NEG_INFINITY, 0)
    } else {
        (rng.random_range(0.0..1.2), rng.random_range(1..5))
    };
    let earliest = if current_start.is_finite() {
        current_start + batch_delay(current_size, &model)
    } else {
        0.0
    };
    let next_start = earliest + rng.random_range(0.02..1.5);

    let mut ids: Vec<usize> = (0..num_tasks).collect();
    ids.shuffle(&mut rng);
    let want = rng.random_range(0..4);
    let mut members: Vec<usize> = Vec::new();
    for &k in &ids {
        let task = &scenario.tasks[k];
        let fits =
            task.arrival + 1e-6 < next_start && task.deadline >= next_start + batch_delay(members.len() + 1, &model);
        if members.len() < want && fits {
            members.push(k);
        }
    }
    let unscheduled: Vec<usize> = ids
        .iter()
        .copied()
        .filter(|k| !members.contains(k) && rng.random_bool(0.8))
        .collect();
    let mut unscheduled = unscheduled;
    unscheduled.sort_unstable();
    let next_members = members
        .iter()
        .map(|&k| Member {
            task_id: k,
            hz: required_bandwidth(&scenario.tasks[k], next_start, scenario.noise_power).unwrap(),
        })
        .collect();
    let next_fixed_start = if rng.random_bool(0.5) {
        scenario.big_m()
    } else {
        next_start + batch_delay(members.len(), &model) + rng.random_range(0.0..0.5)
    };
    let freed_bandwidth = rng.random_range(0.0..bandwidth);
    CheckpointCase {
        state: Checkpoint {
            index: 0,
            current_start,
            current_size,
            unscheduled,
            next_members,
            next_start,
            freed_bandwidth,
        },
        scenario,
        next_fixed_start,
    }
}
