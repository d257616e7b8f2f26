//! Herald/partner coincidence gating and the sideband estimate of the accidental floor.

use super::config::RunConfig;
use super::events::EventRecord;
use super::sim::Coincidence;

/// Fraction of a one-sided exponential wavepacket with decay time `tau_s` that
/// falls within a gate of half-width `halfwidth_s` centred on zero delay.
pub fn gate_acceptance(halfwidth_s: f64, tau_s: f64) -> f64 {
    if tau_s <= 0.0 {
        return 1.0;
    }
    1.0 - (-halfwidth_s / tau_s).exp()
}

/// Events whose herald/partner delay satisfies `|delay| ≤ halfwidth_s`.
pub fn coincidence_gate(coincidences: &[Coincidence], halfwidth_s: f64) -> Vec<EventRecord> {
    coincidences
        .iter()
        .filter(|c| c.delay_s.abs() <= halfwidth_s)
        .map(|c| c.event)
        .collect()
}

/// Accidental fraction inside the gate, estimated from the flat floor of
/// candidates with `|delay|` beyond four gate half-widths. `None` if nothing
/// passes the gate.
pub fn estimate_accidental_fraction(coincidences: &[Coincidence], cfg: &RunConfig) -> Option<f64> {
    let h = cfg.gate_halfwidth_s;
    let inner = cfg.sideband_inner_s();
    let (mut gated, mut sideband) = (0u64, 0u64);
    for c in coincidences {
        let d = c.delay_s.abs();
        if d <= h {
            gated += 1;
        } else if d > inner && d <= cfg.coincidence_window_s {
            sideband += 1;
        }
    }
    if gated == 0 {
        return None;
    }
    let floor_in_gate = sideband as f64 * (2.0 * h) / cfg.sideband_width_s();
    Some((floor_in_gate / gated as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_of_the_published_gate() {
        let a = gate_acceptance(84e-9, 1.0 / (std::f64::consts::TAU * 12.29e6));
        assert!((a - 0.99848).abs() < 1e-5, "{a}");
        assert_eq!(gate_acceptance(0.0, 1e-8), 0.0);
    }
}
