//! Subtraction of the flat accidental-coincidence floor.

use crate::montecarlo::binning::CountsTable;
use crate::montecarlo::config::Experiment;

/// Removes a polarization-white floor holding `fraction` of each (setting, bin)
/// group, spread evenly over the group's outcome cells, and floors the result
/// at zero. Estimators renormalize within groups, so the remaining counts act
/// as corrected probabilities.
pub fn background_correct(
    counts: &CountsTable,
    fraction: f64,
    experiment: &Experiment,
) -> CountsTable {
    if fraction <= 0.0 {
        return counts.clone();
    }
    let totals = counts.group_totals();
    let cells = experiment.outcome_cells() as f64;
    counts.map(|key, n| {
        let floor = fraction * totals[&key.group()] / cells;
        (n - floor).max(0.0)
    })
}
