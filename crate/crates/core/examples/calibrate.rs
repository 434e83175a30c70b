//! Finds the noise figure at which the mean client throughput of a full
//! cell matches a target, averaged over many placements.
//!
//! Usage: cargo run --release --example calibrate -- [target_mbps] [seeds]

use fedcs_core::channel::{mean_throughput, place_clients, CellConfig};
use fedcs_core::rng::{labels, RngStream};

const CLIENTS: usize = 1000;

fn population_mean(noise_figure_db: f64, seeds: u64) -> f64 {
    let cell = CellConfig {
        noise_figure_db,
        ..CellConfig::default()
    };
    let total: f64 = (0..seeds)
        .map(|seed| {
            let positions =
                place_clients(CLIENTS, &cell, &mut RngStream::new(seed, labels::PLACEMENT))
                    .unwrap();
            positions
                .iter()
                .map(|p| mean_throughput(p, &cell).value())
                .sum::<f64>()
                / CLIENTS as f64
        })
        .sum();
    total / seeds as f64
}

fn main() {
    let mut args = std::env::args().skip(1);
    let target: f64 = args
        .next()
        .map_or(1.4, |a| a.parse().expect("target must be a number"));
    let seeds: u64 = args
        .next()
        .map_or(200, |a| a.parse().expect("seeds must be an integer"));

    // Throughput falls as the noise figure rises.
    let (mut lo, mut hi) = (-40.0, 20.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if population_mean(mid, seeds) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nf = 0.5 * (lo + hi);
    println!(
        "noise figure {nf:.2} dB -> mean throughput {:.4} Mbit/s over {seeds} seeds",
        population_mean(nf, seeds)
    );
    println!(
        "default ({:.2} dB) -> {:.4} Mbit/s",
        CellConfig::default().noise_figure_db,
        population_mean(CellConfig::default().noise_figure_db, seeds)
    );
    println!("9 dB -> {:.4} Mbit/s", population_mean(9.0, seeds));
}
