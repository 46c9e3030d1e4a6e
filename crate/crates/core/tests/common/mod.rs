#![allow(dead_code)]

use std::path::Path;

use tissuelens::image_store::{generate_synthetic, SyntheticConfig, SyntheticDataset};
use tissuelens::render::{ChannelRenderSetting, ChannelSet};

pub const PALETTE: [[u8; 3]; 4] = [[0, 0, 255], [0, 255, 0], [255, 0, 0], [255, 255, 0]];

/// Small multi-tile dataset: 300x220 pixels, 64-px tiles, 3 channels.
pub fn small_config(seed: u64) -> SyntheticConfig {
    let mut cfg = SyntheticConfig::new(seed, 300, 220, 3, 40, 2);
    cfg.tile_size = 64;
    cfg.pattern_size = 48;
    cfg
}

pub fn small_dataset(dir: &Path, seed: u64) -> SyntheticDataset {
    generate_synthetic(&small_config(seed), dir).expect("synthetic dataset")
}

pub fn channel_set(label: &str, names: &[String]) -> ChannelSet {
    ChannelSet::new(
        label,
        names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                ChannelRenderSetting::new(n.clone(), PALETTE[i % PALETTE.len()], 500, 40000)
            })
            .collect(),
    )
}

pub fn walk_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
