//! Shared helpers for the integration suites.

use std::path::PathBuf;

use rand::Rng;

use platoon_sim::itsg5::Cam;
use platoon_sim::scenario::{load_config, ScenarioConfig};
use platoon_sim::time::SimTime;

/// Loads the scenario shipped with the repository.
pub fn default_config() -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    load_config(&path).expect("shipped default config is valid")
}

/// Uniformly random CAM with all fields in their valid ranges.
pub fn random_valid_cam(rng: &mut impl Rng) -> Cam {
    Cam {
        station_id: rng.random(),
        generation_delta_time: rng.random(),
        x_cm: rng.random(),
        y_cm: rng.random(),
        heading_value: rng.random_range(0..3600),
        speed_value: rng.random(),
    }
}

/// Naive reference scheduler: a flat list scanned linearly for the minimum
/// `(fire_at, seq)` on every pop. Deliberately independent of the kernel's
/// binary heap.
pub struct ListScanScheduler {
    pub items: Vec<(SimTime, u64, usize)>,
}

impl ListScanScheduler {
    pub fn new() -> Self {
        ListScanScheduler { items: Vec::new() }
    }

    pub fn push(&mut self, fire_at: SimTime, seq: u64, target: usize) {
        self.items.push((fire_at, seq, target));
    }

    pub fn pop_min(&mut self) -> Option<(SimTime, u64, usize)> {
        let idx = self
            .items
            .iter()
            .enumerate()
            .min_by_key(|(_, it)| (it.0, it.1))?
            .0;
        // (fire_at, seq) is a total order, so the minimum is unique and
        // swap_remove cannot disturb later picks.
        Some(self.items.swap_remove(idx))
    }
}

pub fn announce(criterion: u32, name: &str) {
    println!("acceptance {criterion:02} {name}: PASS");
}
