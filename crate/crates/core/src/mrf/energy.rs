use crate::data::{LabelMap, ProbMap};
use crate::error::{Error, Result};

/// Probability floor applied before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-10;

/// Pixel adjacency used for the pairwise terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Neighborhood {
    #[default]
    Four,
    Eight,
}

impl Neighborhood {
    /// Unordered neighbour pairs `(i, j)` with `i < j`, row-major.
    pub fn edges(self, height: usize, width: usize) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for r in 0..height {
            for c in 0..width {
                let i = r * width + c;
                if c + 1 < width {
                    edges.push((i, i + 1));
                }
                if r + 1 < height {
                    edges.push((i, i + width));
                    if self == Neighborhood::Eight {
                        if c + 1 < width {
                            edges.push((i, i + width + 1));
                        }
                        if c > 0 {
                            edges.push((i, i + width - 1));
                        }
                    }
                }
            }
        }
        edges
    }
}

/// Potts energy in cost form: per-pixel negative log-probabilities plus a
/// constant penalty for every unordered neighbour pair with differing labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    height: usize,
    width: usize,
    classes: usize,
    unary: Vec<f64>,
    edges: Vec<(usize, usize)>,
    potts_weight: f64,
}

impl EnergyModel {
    /// Builds a model directly from unary costs (n×K, row-major) and a Potts weight.
    pub fn from_unary(
        height: usize,
        width: usize,
        classes: usize,
        unary: Vec<f64>,
        potts_weight: f64,
        neighborhood: Neighborhood,
    ) -> Result<Self> {
        if classes == 0 {
            return Err(Error::invalid("energy model needs at least one class"));
        }
        if unary.len() != height * width * classes {
            return Err(Error::shape(format!(
                "unary table has {} entries, expected {}×{}×{}",
                unary.len(),
                height,
                width,
                classes
            )));
        }
        if let Some(i) = unary.iter().position(|u| !u.is_finite()) {
            return Err(Error::invalid(format!("unary cost {i} is not finite")));
        }
        if !(potts_weight.is_finite() && potts_weight >= 0.0) {
            return Err(Error::invalid(format!("Potts weight must be >= 0, got {potts_weight}")));
        }
        Ok(Self {
            height,
            width,
            classes,
            unary,
            edges: neighborhood.edges(height, width),
            potts_weight,
        })
    }

    /// Unary costs `-ln(max(score, 1e-10))` from any non-negative per-class
    /// scores; `smoothness` is the per-ordered-pair weight and becomes a Potts
    /// weight of `4 * smoothness` per unordered pair.
    pub fn from_scores(
        height: usize,
        width: usize,
        classes: usize,
        scores: &[f64],
        smoothness: f64,
        neighborhood: Neighborhood,
    ) -> Result<Self> {
        if !(smoothness.is_finite() && smoothness >= 0.0) {
            return Err(Error::invalid(format!("smoothness must be >= 0, got {smoothness}")));
        }
        let unary = scores.iter().map(|&p| -p.max(LOG_FLOOR).ln()).collect();
        Self::from_unary(height, width, classes, unary, 4.0 * smoothness, neighborhood)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn potts_weight(&self) -> f64 {
        self.potts_weight
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Cost of giving pixel `i` the 1-based label `label`.
    pub fn unary(&self, i: usize, label: u32) -> f64 {
        self.unary[i * self.classes + label as usize - 1]
    }

    pub(crate) fn check_labels(&self, labels: &[u32]) -> Result<()> {
        if labels.len() != self.pixels() {
            return Err(Error::shape(format!(
                "labeling has {} pixels, model has {}",
                labels.len(),
                self.pixels()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l == 0 || l as usize > self.classes) {
            return Err(Error::invalid(format!(
                "pixel {i} has label {} outside 1..={}",
                labels[i], self.classes
            )));
        }
        Ok(())
    }

    /// Total cost of a 1-based labeling.
    pub fn cost(&self, labels: &[u32]) -> Result<f64> {
        self.check_labels(labels)?;
        Ok(self.cost_unchecked(labels))
    }

    pub(crate) fn cost_unchecked(&self, labels: &[u32]) -> f64 {
        let unary: f64 = labels.iter().enumerate().map(|(i, &l)| self.unary(i, l)).sum();
        let cut = self.edges.iter().filter(|&&(i, j)| labels[i] != labels[j]).count();
        unary + self.potts_weight * cut as f64
    }

    /// Per-pixel argmin of the unary costs, smallest class on ties.
    pub fn unary_argmin(&self) -> Vec<u32> {
        self.unary
            .chunks_exact(self.classes)
            .map(|row| {
                let mut best = 0;
                for (k, &u) in row.iter().enumerate() {
                    if u < row[best] {
                        best = k;
                    }
                }
                best as u32 + 1
            })
            .collect()
    }
}

/// Energy model for a probability map on an h×w grid with 4-neighbourhoods.
pub fn build_energy(probmap: &ProbMap, height: usize, width: usize, smoothness: f64) -> Result<EnergyModel> {
    build_energy_with(probmap, height, width, smoothness, Neighborhood::Four)
}

pub fn build_energy_with(
    probmap: &ProbMap,
    height: usize,
    width: usize,
    smoothness: f64,
    neighborhood: Neighborhood,
) -> Result<EnergyModel> {
    if probmap.rows() != height * width {
        return Err(Error::shape(format!(
            "probability map has {} rows, grid is {height}×{width}",
            probmap.rows()
        )));
    }
    EnergyModel::from_scores(height, width, probmap.classes(), probmap.probs(), smoothness, neighborhood)
}

/// The smoothness objective to be maximized, evaluated literally: summed log
/// probabilities of the chosen labels plus `smoothness` times +1 for every
/// agreeing and -1 for every disagreeing ordered neighbour pair.
pub fn objective(labeling: &LabelMap, probmap: &ProbMap, smoothness: f64) -> Result<f64> {
    objective_with(labeling, probmap, smoothness, Neighborhood::Four)
}

pub fn objective_with(
    labeling: &LabelMap,
    probmap: &ProbMap,
    smoothness: f64,
    neighborhood: Neighborhood,
) -> Result<f64> {
    let (h, w) = (labeling.height(), labeling.width());
    if probmap.rows() != h * w {
        return Err(Error::shape(format!(
            "probability map has {} rows, labeling has {} pixels",
            probmap.rows(),
            h * w
        )));
    }
    let labels = labeling.labels();
    let k = probmap.classes();
    if let Some(i) = labels.iter().position(|&l| l == 0 || l as usize > k) {
        return Err(Error::invalid(format!("pixel {i} is unlabeled or outside 1..={k}")));
    }
    let mut total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| probmap.row(i)[l as usize - 1].max(LOG_FLOOR).ln())
        .sum();
    let edges = neighborhood.edges(h, w);
    for &(i, j) in &edges {
        // each unordered pair appears twice in the ordered double sum
        let delta = if labels[i] == labels[j] { 1.0 } else { -1.0 };
        total += 2.0 * smoothness * delta;
    }
    Ok(total)
}

/// Number of ordered neighbour pairs, the constant linking cost and objective.
pub fn ordered_pairs(height: usize, width: usize, neighborhood: Neighborhood) -> usize {
    2 * neighborhood.edges(height, width).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pixel() -> ProbMap {
        ProbMap::new(2, 2, vec![0.9, 0.1, 0.6, 0.4]).unwrap()
    }

    #[test]
    fn objective_hand_values() {
        let p = two_pixel();
        let same = LabelMap::new(1, 2, 2, vec![1, 1]).unwrap();
        let diff = LabelMap::new(1, 2, 2, vec![1, 2]).unwrap();
        let a = objective(&same, &p, 20.0).unwrap();
        let b = objective(&diff, &p, 20.0).unwrap();
        assert!((a - (0.9f64.ln() + 0.6f64.ln() + 40.0)).abs() < 1e-12);
        assert!((a - 39.384).abs() < 1e-3, "{a}");
        assert!((b - -41.022).abs() < 1e-3, "{b}");
    }

    #[test]
    fn cost_matches_negated_objective() {
        let p = two_pixel();
        let model = build_energy(&p, 1, 2, 20.0).unwrap();
        assert_eq!(model.edges(), &[(0, 1)]);
        assert_eq!(model.potts_weight(), 80.0);
        let pairs = ordered_pairs(1, 2, Neighborhood::Four) as f64;
        for labels in [[1, 1], [1, 2], [2, 1], [2, 2]] {
            let map = LabelMap::new(1, 2, 2, labels.to_vec()).unwrap();
            let c = model.cost(&labels).unwrap();
            let o = objective(&map, &p, 20.0).unwrap();
            assert!((c - 20.0 * pairs + o).abs() < 1e-9, "{labels:?}: {c} {o}");
        }
    }

    #[test]
    fn zero_probability_is_clamped() {
        let p = ProbMap::new(1, 2, vec![1.0, 0.0]).unwrap();
        let m = build_energy(&p, 1, 1, 1.0).unwrap();
        assert!((m.unary(0, 2) - 23.025850929940457).abs() < 1e-9);
    }

    #[test]
    fn edge_counts() {
        assert_eq!(Neighborhood::Four.edges(3, 4).len(), 3 * 3 + 2 * 4);
        assert_eq!(Neighborhood::Eight.edges(3, 4).len(), 17 + 2 * 2 * 3);
        assert!(Neighborhood::Four.edges(1, 1).is_empty());
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = two_pixel();
        assert!(build_energy(&p, 1, 2, -1.0).is_err());
        assert!(build_energy(&p, 2, 2, 1.0).is_err());
        let m = build_energy(&p, 1, 2, 1.0).unwrap();
        assert!(m.cost(&[0, 1]).is_err());
        assert!(m.cost(&[3, 1]).is_err());
        let unlabeled = LabelMap::new(1, 2, 2, vec![0, 1]).unwrap();
        assert!(objective(&unlabeled, &p, 1.0).is_err());
    }
}
