use crate::data::LabelMap;
use crate::error::{Error, Result};

use super::energy::EnergyModel;
use super::maxflow::{max_flow_min_cut, FlowNetwork};

/// Sweeps stop once a full pass lowers the cost by no more than this.
pub const CONVERGENCE_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_SWEEPS: usize = 5;

fn check_alpha(model: &EnergyModel, alpha: u32) -> Result<()> {
    if alpha == 0 || alpha as usize > model.classes() {
        return Err(Error::invalid(format!(
            "expansion label {alpha} outside 1..={}",
            model.classes()
        )));
    }
    Ok(())
}

fn check_map(model: &EnergyModel, labeling: &LabelMap) -> Result<()> {
    if labeling.height() != model.height() || labeling.width() != model.width() {
        return Err(Error::shape(format!(
            "labeling is {}×{}, model is {}×{}",
            labeling.height(),
            labeling.width(),
            model.height(),
            model.width()
        )));
    }
    model.check_labels(labeling.labels())
}

/// Binary variable per pixel: source side (1) switches to `alpha`, sink side
/// (0) keeps the current label. Returns the optimal move.
fn expand(model: &EnergyModel, labels: &[u32], alpha: u32) -> Result<Vec<u32>> {
    let n = model.pixels();
    let (s, t) = (n, n + 1);
    let lambda = model.potts_weight();
    let mut delta: Vec<f64> = (0..n)
        .map(|i| model.unary(i, alpha) - model.unary(i, labels[i]))
        .collect();
    let mut net = FlowNetwork::new(n + 2, s, t)?;
    let potts = |a: u32, b: u32| if a != b { lambda } else { 0.0 };
    for &(i, j) in model.edges() {
        let (ci, cj) = (labels[i], labels[j]);
        let keep_keep = potts(ci, cj);
        let keep_switch = potts(ci, alpha);
        let switch_keep = potts(alpha, cj);
        // E = A + (C - A) x_i + (0 - C) x_j + (B + C - A)(1 - x_i) x_j
        delta[i] += switch_keep - keep_keep;
        delta[j] -= switch_keep;
        let coupling = keep_switch + switch_keep - keep_keep;
        if coupling > 0.0 {
            net.add_arc(j, i, coupling)?;
        }
    }
    for (i, &d) in delta.iter().enumerate() {
        if d > 0.0 {
            net.add_arc(i, t, d)?;
        } else if d < 0.0 {
            net.add_arc(s, i, -d)?;
        }
    }
    let cut = max_flow_min_cut(&net)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &l)| if cut.source_side[i] { alpha } else { l })
        .collect())
}

/// Best labeling reachable by letting any subset of pixels switch to `alpha`.
pub fn expansion_move(model: &EnergyModel, labeling: &LabelMap, alpha: u32) -> Result<LabelMap> {
    check_alpha(model, alpha)?;
    check_map(model, labeling)?;
    let current = labeling.labels();
    let proposal = expand(model, current, alpha)?;
    let labels = if model.cost_unchecked(&proposal) <= model.cost_unchecked(current) {
        proposal
    } else {
        current.to_vec()
    };
    LabelMap::new(model.height(), model.width(), model.classes(), labels)
}

/// Cycles expansion moves over α = 1..=K until a sweep stops helping.
pub fn alpha_expansion(model: &EnergyModel, init: &LabelMap, max_sweeps: usize) -> Result<LabelMap> {
    alpha_expansion_traced(model, init, max_sweeps).map(|(map, _)| map)
}

/// Like [`alpha_expansion`], also returning the cost after each move
/// (the first entry is the initial cost).
pub fn alpha_expansion_traced(
    model: &EnergyModel,
    init: &LabelMap,
    max_sweeps: usize,
) -> Result<(LabelMap, Vec<f64>)> {
    check_map(model, init)?;
    let mut labels = init.labels().to_vec();
    let mut cost = model.cost_unchecked(&labels);
    let mut trace = vec![cost];
    for sweep in 0..max_sweeps {
        let start = cost;
        for alpha in 1..=model.classes() as u32 {
            let proposal = expand(model, &labels, alpha)?;
            let proposed = model.cost_unchecked(&proposal);
            if proposed <= cost {
                labels = proposal;
                cost = proposed;
            }
            trace.push(cost);
        }
        log::debug!("expansion sweep {}: cost {start:.6} -> {cost:.6}", sweep + 1);
        if start - cost <= CONVERGENCE_TOL {
            break;
        }
    }
    let map = LabelMap::new(model.height(), model.width(), model.classes(), labels)?;
    Ok((map, trace))
}
