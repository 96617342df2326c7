//! Window-based label smoothing baselines.

use crate::data::{mirror_index, LabelMap};
use crate::error::{Error, Result};

/// Odd square window side, at least 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec(usize);

impl WindowSpec {
    pub fn new(side: usize) -> Result<Self> {
        if side < 3 || side.is_multiple_of(2) {
            return Err(Error::invalid(format!("window side must be odd and >= 3, got {side}")));
        }
        Ok(Self(side))
    }

    pub fn side(self) -> usize {
        self.0
    }
}

fn require_full(labels: &LabelMap) -> Result<()> {
    if let Some(i) = labels.labels().iter().position(|&l| l == 0) {
        return Err(Error::invalid(format!("pixel {i} is unlabeled")));
    }
    Ok(())
}

/// Calls `f(center, window)` for every pixel with its mirror-padded window.
fn for_each_window(labels: &LabelMap, win: WindowSpec, mut f: impl FnMut(u32, &[u32]) -> u32) -> LabelMap {
    let (h, w) = (labels.height(), labels.width());
    let r = (win.side() / 2) as isize;
    let mut window = Vec::with_capacity(win.side() * win.side());
    let mut out = Vec::with_capacity(h * w);
    for row in 0..h as isize {
        for col in 0..w as isize {
            window.clear();
            for dr in -r..=r {
                let rr = mirror_index(row + dr, h);
                for dc in -r..=r {
                    window.push(labels.get(rr, mirror_index(col + dc, w)));
                }
            }
            out.push(f(labels.get(row as usize, col as usize), &window));
        }
    }
    LabelMap::new(h, w, labels.num_classes(), out).expect("window outputs are drawn from input labels")
}

/// Replaces each label by the (lower) median label index of its window.
pub fn median_filter_labels(labels: &LabelMap, win: WindowSpec) -> Result<LabelMap> {
    require_full(labels)?;
    Ok(for_each_window(labels, win, |_, window| {
        let mut sorted = window.to_vec();
        sorted.sort_unstable();
        sorted[(sorted.len() - 1) / 2]
    }))
}

/// Replaces each label by the most frequent label of its window. Ties keep
/// the current label when it is a mode, otherwise take the smallest mode.
pub fn majority_vote_labels(labels: &LabelMap, win: WindowSpec) -> Result<LabelMap> {
    require_full(labels)?;
    let mut counts = vec![0usize; labels.num_classes() + 1];
    Ok(for_each_window(labels, win, |center, window| {
        counts.iter_mut().for_each(|c| *c = 0);
        for &l in window {
            counts[l as usize] += 1;
        }
        let top = *counts.iter().max().unwrap();
        if counts[center as usize] == top {
            center
        } else {
            counts.iter().position(|&c| c == top).unwrap() as u32
        }
    }))
}
