#![allow(dead_code)]

use std::path::PathBuf;

use deblur::{read_pgm, Image};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

/// 8-bit grayscale photograph, 128x128 or 512x512.
pub fn test_image(side: usize) -> Image {
    let path = data_path(&format!("astronaut{side}.pgm"));
    read_pgm(&std::fs::read(&path).expect("fixture present")).expect("fixture decodes")
}

pub fn random_image(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(rows, cols, |_, _| rng.gen_range(lo..hi)).unwrap()
}

/// Parses a CSV with a header row into (header, rows of fields).
pub fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

pub fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[idx].parse().unwrap()).collect()
}

pub fn argmin(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |b, (i, &x)| if x < v[b] { i } else { b })
}
