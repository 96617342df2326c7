//! Potts label smoothing: energy model, max-flow and α-expansion.

mod energy;
mod exhaustive;
mod expansion;
mod maxflow;

pub use energy::{
    build_energy, build_energy_with, objective, objective_with, ordered_pairs, EnergyModel, Neighborhood, LOG_FLOOR,
};
pub use exhaustive::{exhaustive_map, MAX_LABELINGS};
pub use expansion::{
    alpha_expansion, alpha_expansion_traced, expansion_move, CONVERGENCE_TOL, DEFAULT_MAX_SWEEPS,
};
pub use maxflow::{max_flow_min_cut, Arc, FlowNetwork, MinCut};

use crate::data::{LabelMap, ProbMap};
use crate::error::Result;

/// Smooths a probability map: α-expansion started from the per-pixel argmax.
pub fn smooth_labels(
    probmap: &ProbMap,
    height: usize,
    width: usize,
    smoothness: f64,
    neighborhood: Neighborhood,
    max_sweeps: usize,
) -> Result<LabelMap> {
    let model = build_energy_with(probmap, height, width, smoothness, neighborhood)?;
    let init = probmap.argmax_map(height, width)?;
    alpha_expansion(&model, &init, max_sweeps)
}
