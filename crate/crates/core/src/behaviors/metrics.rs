//! Evacuation metrics from a recorded run.

use serde::Serialize;

/// State recorded after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Mass inside the domain.
    pub mass: f64,
    /// Largest cell density at this time.
    pub rho_max: f64,
    /// Mass introduced so far (initial plus injected).
    pub introduced: f64,
    /// Cumulative mass through each exit.
    pub exit_mass: Vec<f64>,
}

/// Time series of a run, one sample per step including the initial state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub samples: Vec<Sample>,
    /// Time after which no more mass is injected.
    pub inflow_end: f64,
    /// Time at which the run gives up.
    pub t_abort: f64,
}

impl History {
    /// Same history with times, densities and masses multiplied by the given scales.
    pub fn scaled(&self, time: f64, density: f64, mass: f64) -> History {
        History {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    t: s.t * time,
                    mass: s.mass * mass,
                    rho_max: s.rho_max * density,
                    introduced: s.introduced * mass,
                    exit_mass: s.exit_mass.iter().map(|m| m * mass).collect(),
                })
                .collect(),
            inflow_end: self.inflow_end * time,
            t_abort: self.t_abort * time,
        }
    }

    /// Index of the first sample at which the crowd counts as evacuated: inflow
    /// is over and at most `eps` of the introduced mass remains.
    pub fn evacuation_index(&self, eps: f64) -> Option<usize> {
        self.samples
            .iter()
            .position(|s| s.t >= self.inflow_end && s.mass <= eps * s.introduced)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Evacuation time; the abort time when the crowd never left.
    pub t_evac: f64,
    /// Peak density up to evacuation.
    pub rho_max: f64,
    /// Pedestrians through each exit up to evacuation.
    pub exit_counts: Vec<f64>,
    pub used_exits: usize,
    /// `(t, N_P(t))` for every step.
    pub mass_history: Vec<(f64, f64)>,
    /// Total mass introduced (initial plus injected).
    pub total_mass: f64,
    pub aborted: bool,
    pub steps: usize,
}

/// Reduces a history to metrics. The evacuation time is the first sample time
/// at which the remaining mass is at most `eps_evac` of the introduced mass,
/// and an exit is used when it took at least `used_exit_frac` of it.
pub fn compute_metrics(h: &History, eps_evac: f64, used_exit_frac: f64) -> Metrics {
    let last = h.samples.len().saturating_sub(1);
    let (end, aborted) = match h.evacuation_index(eps_evac) {
        Some(n) => (n, false),
        None => (last, true),
    };
    let upto = &h.samples[..=end];
    let at = &h.samples[end];
    let total = at.introduced;
    Metrics {
        t_evac: if aborted { h.t_abort } else { at.t },
        rho_max: upto.iter().map(|s| s.rho_max).fold(0.0, f64::max),
        exit_counts: at.exit_mass.clone(),
        used_exits: at
            .exit_mass
            .iter()
            .filter(|&&m| m > 0.0 && m >= used_exit_frac * total)
            .count(),
        mass_history: h.samples.iter().map(|s| (s.t, s.mass)).collect(),
        total_mass: total,
        aborted,
        steps: last,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(masses: &[f64], dt: f64, exits: impl Fn(usize) -> Vec<f64>) -> History {
        History {
            samples: masses
                .iter()
                .enumerate()
                .map(|(n, &m)| Sample {
                    t: n as f64 * dt,
                    mass: m,
                    rho_max: 1.0 + n as f64,
                    introduced: 100.0,
                    exit_mass: exits(n),
                })
                .collect(),
            inflow_end: 0.0,
            t_abort: 1e3,
        }
    }

    #[test]
    fn threshold_crossing_time() {
        let masses: Vec<f64> = (0..300)
            .map(|n| if n < 173 { 100.0 - 0.5 * n as f64 } else { 0.5 })
            .collect();
        let h = history(&masses, 0.25, |_| vec![0.0]);
        let m = compute_metrics(&h, 0.01, 0.01);
        assert!(!m.aborted);
        assert_eq!(m.t_evac, 43.25);
        assert_eq!(m.rho_max, 174.0);
        assert_eq!(m.steps, 299);
    }

    #[test]
    fn single_exit_usage() {
        let h = history(&[100.0, 50.0, 0.0], 1.0, |n| {
            vec![50.0 * n as f64, 0.0, 0.0]
        });
        let m = compute_metrics(&h, 0.01, 0.01);
        assert_eq!(m.exit_counts, vec![100.0, 0.0, 0.0]);
        assert_eq!(m.used_exits, 1);
        assert_eq!(m.t_evac, 2.0);
    }

    #[test]
    fn inflow_delays_the_check() {
        let mut h = history(&[0.0, 0.0, 0.0, 0.0], 1.0, |_| vec![0.0]);
        h.inflow_end = 2.5;
        assert_eq!(compute_metrics(&h, 0.01, 0.01).t_evac, 3.0);
    }

    #[test]
    fn never_evacuated_is_aborted() {
        let h = history(&[100.0, 90.0], 1.0, |_| vec![10.0]);
        let m = compute_metrics(&h, 0.01, 0.01);
        assert!(m.aborted);
        assert_eq!(m.t_evac, 1e3);
    }

    #[test]
    fn empty_crowd_evacuates_at_once() {
        let mut h = history(&[0.0], 1.0, |_| vec![0.0]);
        h.samples[0].introduced = 0.0;
        let m = compute_metrics(&h, 0.01, 0.01);
        assert_eq!(m.t_evac, 0.0);
        assert_eq!(m.used_exits, 0);
    }
}
