use rand::Rng;

use crate::data::Patch;
use crate::rng::{rng_for, tags};

/// The eight symmetries of the square, acting on the two spatial axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dihedral {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    Flip,
    FlipRot90,
    FlipRot180,
    FlipRot270,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rot90,
        Dihedral::Rot180,
        Dihedral::Rot270,
        Dihedral::Flip,
        Dihedral::FlipRot90,
        Dihedral::FlipRot180,
        Dihedral::FlipRot270,
    ];

    fn quarter_turns(self) -> usize {
        match self {
            Dihedral::Identity | Dihedral::Flip => 0,
            Dihedral::Rot90 | Dihedral::FlipRot90 => 1,
            Dihedral::Rot180 | Dihedral::FlipRot180 => 2,
            Dihedral::Rot270 | Dihedral::FlipRot270 => 3,
        }
    }

    fn flips(self) -> bool {
        matches!(
            self,
            Dihedral::Flip | Dihedral::FlipRot90 | Dihedral::FlipRot180 | Dihedral::FlipRot270
        )
    }

    /// Source pixel `(row, col)` of destination `(r, c)`: rotate clockwise,
    /// then mirror left-right.
    fn source(self, r: usize, c: usize, k: usize) -> (usize, usize) {
        let c = if self.flips() { k - 1 - c } else { c };
        let (mut r, mut c) = (r, c);
        for _ in 0..self.quarter_turns() {
            // clockwise quarter turn: out[r][c] = in[k-1-c][r]
            (r, c) = (k - 1 - c, r);
        }
        (r, c)
    }

    /// Applies the transform to a flattened `k × k × d` buffer.
    pub fn apply_flat(self, values: &[f64], k: usize, d: usize, out: &mut [f64]) {
        for r in 0..k {
            for c in 0..k {
                let (sr, sc) = self.source(r, c, k);
                let dst = (r * k + c) * d;
                let src = (sr * k + sc) * d;
                out[dst..dst + d].copy_from_slice(&values[src..src + d]);
            }
        }
    }

    pub fn apply(self, patch: &Patch) -> Patch {
        let mut values = vec![0.0; patch.values.len()];
        self.apply_flat(&patch.values, patch.size, patch.bands, &mut values);
        Patch {
            values,
            ..patch.clone()
        }
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Self::ALL[rng.random_range(0..8)]
    }
}

/// A uniformly chosen dihedral transform of the patch; spectra are untouched.
pub fn augment_patch(patch: &Patch, seed: u64) -> Patch {
    let mut rng = rng_for(seed, tags::AUGMENT);
    Dihedral::random(&mut rng).apply(patch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(k: usize, d: usize) -> Patch {
        Patch {
            size: k,
            bands: d,
            center: (0, 0),
            values: (0..k * k * d).map(|v| v as f64).collect(),
        }
    }

    #[test]
    fn identity_and_rotation_order() {
        let p = patch(3, 2);
        assert_eq!(Dihedral::Identity.apply(&p), p);
        let mut q = p.clone();
        for _ in 0..4 {
            q = Dihedral::Rot90.apply(&q);
        }
        assert_eq!(q, p);
        assert_ne!(Dihedral::Rot90.apply(&p), p);
    }

    #[test]
    fn rot90_is_clockwise() {
        let p = patch(2, 1); // [[0, 1], [2, 3]]
        assert_eq!(Dihedral::Rot90.apply(&p).values, vec![2.0, 0.0, 3.0, 1.0]);
        assert_eq!(Dihedral::Flip.apply(&p).values, vec![1.0, 0.0, 3.0, 2.0]);
    }

    #[test]
    fn all_transforms_are_distinct_and_keep_spectra() {
        let p = patch(3, 2);
        let outs: Vec<Patch> = Dihedral::ALL.iter().map(|t| t.apply(&p)).collect();
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(outs[i], outs[j]);
            }
            // centre pixel and its spectrum stay in place
            assert_eq!(outs[i].values[8..10], p.values[8..10]);
            let mut sorted = outs[i].values.clone();
            sorted.sort_by(f64::total_cmp);
            assert_eq!(sorted, p.values);
        }
    }

    #[test]
    fn seeded_choice_is_deterministic() {
        let p = patch(5, 3);
        assert_eq!(augment_patch(&p, 17), augment_patch(&p, 17));
    }
}
