//! Nonparametric bootstrap over counts tables.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::montecarlo::binning::CountsTable;

/// A multinomial redraw of every (setting, bin) group with its observed total
/// (rounded to an integer) and observed cell frequencies.
pub fn resample(counts: &CountsTable, rng: &mut ChaCha8Rng) -> CountsTable {
    let totals = counts.group_totals();
    let mut remaining_n: std::collections::BTreeMap<_, u64> = totals
        .iter()
        .map(|(g, &t)| (*g, t.round() as u64))
        .collect();
    let mut remaining_w = totals;
    counts.map(|key, w| {
        let g = key.group();
        let n = remaining_n[&g];
        let total_w = remaining_w[&g];
        let draw = if n == 0 || total_w <= 0.0 {
            0
        } else if total_w - w <= 1e-12 * total_w {
            n
        } else {
            let p = (w / total_w).clamp(0.0, 1.0);
            Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0)
        };
        *remaining_n.get_mut(&g).expect("group") -= draw;
        *remaining_w.get_mut(&g).expect("group") -= w;
        draw as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub resamples: usize,
    pub mean: Vec<f64>,
    /// Sample standard deviation over resamples.
    pub std: Vec<f64>,
}

/// Spread of `metrics` over `resamples` redraws of `counts`. Resample `k`
/// uses stream `k` of the seeded generator, so results do not depend on
/// scheduling. Resamples on which `metrics` fails are dropped.
pub fn bootstrap<F>(
    counts: &CountsTable,
    resamples: usize,
    seed: u64,
    metrics: F,
) -> Result<BootstrapSummary>
where
    F: Fn(&CountsTable) -> Result<Vec<f64>> + Sync,
{
    let draws: Vec<Vec<f64>> = (0..resamples)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            metrics(&resample(counts, &mut rng)).ok()
        })
        .collect();
    let width = draws.first().map_or(0, Vec::len);
    let n = draws.len() as f64;
    let mut mean = vec![0.0; width];
    let mut std = vec![0.0; width];
    for d in &draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v / n;
        }
    }
    if draws.len() > 1 {
        for d in &draws {
            for ((s, v), m) in std.iter_mut().zip(d).zip(&mean) {
                *s += (v - m) * (v - m) / (n - 1.0);
            }
        }
        std.iter_mut().for_each(|s| *s = s.sqrt());
    }
    Ok(BootstrapSummary {
        resamples: draws.len(),
        mean,
        std,
    })
}
