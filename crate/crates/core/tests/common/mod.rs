#![allow(dead_code)]

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use streamgov::ingest::{Collection, State, StationMeta, StationSeries};

pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).unwrap()
}

pub fn meta(i: usize) -> StationMeta {
    StationMeta {
        station_id: format!("S{i:03}"),
        name: format!("station {i}"),
        latitude: -30.0 + i as f64 * 0.1,
        longitude: 140.0 + i as f64 * 0.1,
        state: State::ALL[i % State::ALL.len()],
    }
}

pub fn collection(rows: Vec<Vec<f64>>) -> Collection<f64> {
    let stations = rows
        .into_iter()
        .enumerate()
        .map(|(i, flow)| StationSeries { meta: meta(i), flow })
        .collect();
    Collection::new(stations, epoch()).unwrap()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, days: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..days).map(|_| rng.random_range(0.0..10.0)).collect())
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
