use crate::data::LabelMap;
use crate::error::{Error, Result};

use super::energy::EnergyModel;

/// Largest search space the brute-force minimizer accepts.
pub const MAX_LABELINGS: u64 = 1 << 20;

/// Global minimizer by enumeration; ties go to the lexicographically
/// smallest labeling in row-major pixel order.
pub fn exhaustive_map(model: &EnergyModel) -> Result<LabelMap> {
    let n = model.pixels();
    let k = model.classes() as u32;
    let space = (k as u64).checked_pow(n as u32).filter(|&s| s <= MAX_LABELINGS);
    if space.is_none() {
        return Err(Error::invalid(format!(
            "{k}^{n} labelings exceed the exhaustive search limit of {MAX_LABELINGS}"
        )));
    }
    let mut labels = vec![1u32; n];
    let mut best = labels.clone();
    let mut best_cost = model.cost_unchecked(&labels);
    loop {
        // odometer with the last pixel varying fastest keeps lexicographic order
        let mut pos = n;
        loop {
            if pos == 0 {
                return LabelMap::new(model.height(), model.width(), model.classes(), best);
            }
            pos -= 1;
            if labels[pos] < k {
                labels[pos] += 1;
                break;
            }
            labels[pos] = 1;
        }
        let cost = model.cost_unchecked(&labels);
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&labels);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ProbMap;
    use crate::mrf::{build_energy, Neighborhood};

    #[test]
    fn single_pixel() {
        let m = EnergyModel::from_unary(1, 1, 3, vec![2.0, 0.5, 1.0], 1.0, Neighborhood::Four).unwrap();
        assert_eq!(exhaustive_map(&m).unwrap().labels(), &[2]);
    }

    #[test]
    fn two_pixel_instance() {
        let p = ProbMap::new(2, 2, vec![0.9, 0.1, 0.6, 0.4]).unwrap();
        let m = build_energy(&p, 1, 2, 20.0).unwrap();
        assert_eq!(exhaustive_map(&m).unwrap().labels(), &[1, 1]);
    }

    #[test]
    fn decoupled_and_ties() {
        let m = EnergyModel::from_unary(1, 2, 2, vec![1.0, 0.0, 0.5, 0.5], 0.0, Neighborhood::Four).unwrap();
        assert_eq!(exhaustive_map(&m).unwrap().labels(), &[2, 1]);
    }

    #[test]
    fn too_large() {
        let m = EnergyModel::from_unary(3, 7, 2, vec![0.0; 42], 0.0, Neighborhood::Four).unwrap();
        assert!(exhaustive_map(&m).is_err());
    }
}
