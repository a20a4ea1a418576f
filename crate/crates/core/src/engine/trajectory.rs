//! Recorded trajectory samples and their CSV form.

use std::io::{self, Write};

use crate::csv::{num, Table};
use crate::model::Vec3;

pub const TRAJECTORY_HEADER: [&str; 9] = [
    "pulse_index",
    "time_s",
    "x_m",
    "y_m",
    "z_m",
    "vx_mps",
    "vy_mps",
    "vz_mps",
    "scatters",
];

/// State at the start of pulse `pulse_index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub pulse_index: u64,
    pub time: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub scatters: u64,
}

impl TrajectorySample {
    /// ½m|v|² + ½mΣω²x², J.
    pub fn energy(&self, mass: f64, omega: &Vec3) -> f64 {
        (0..3)
            .map(|i| {
                0.5 * mass * (self.velocity[i].powi(2) + (omega[i] * self.position[i]).powi(2))
            })
            .sum()
    }
}

pub fn trajectory_table(samples: &[TrajectorySample]) -> Table {
    let mut t = Table::new(&TRAJECTORY_HEADER);
    for s in samples {
        let mut row = vec![s.pulse_index.to_string(), num(s.time)];
        row.extend(s.position.iter().map(|&x| num(x)));
        row.extend(s.velocity.iter().map(|&v| num(v)));
        row.push(s.scatters.to_string());
        t.push(row);
    }
    t
}

pub fn write_trajectory_csv<W: Write>(samples: &[TrajectorySample], w: W) -> io::Result<()> {
    trajectory_table(samples).write_to(w)
}
