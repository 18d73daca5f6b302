//! Shared fixtures for the benchmarks.

use crowdctl_core::scenario::{DensityBlock, Exit, Segment, Units};
use crowdctl_core::{CharacteristicScales, Rect, Scenario, Side};

/// Square room of side 50 m on an `n x n` grid with two exits on the right
/// wall, one fixed obstacle and a block of pedestrians.
pub fn bench_room(n: usize) -> Scenario {
    let exit = |id: &str, from: f64| Exit {
        id: id.into(),
        segment: Segment {
            side: Side::Right,
            from,
            to: from + 3.0,
        },
    };
    Scenario {
        width: 50.0,
        height: 50.0,
        nx: n,
        ny: n,
        exits: vec![exit("e1", 40.0), exit("e2", 10.0)],
        entrances: vec![],
        obstacles: vec![Rect::new(30.0, 20.0, 7.5, 17.0)],
        rho0: vec![DensityBlock {
            rect: Rect::new(5.0, 20.0, 10.0, 10.0),
            density: 0.8,
        }],
        alpha_deg: 170.0,
        sensory_radius: 1.5,
        repulsion: 0.16,
        scales: CharacteristicScales::UNIT,
        units: Units::Physical,
    }
}
