//! Conservative first-order transport of the density.
//!
//! Every face between two walkable cells carries the donor-cell flux
//! `rho_upwind * u_face * dt / h`, with `u_face` the mean of the two adjacent
//! cell velocities. Wall and obstacle faces carry nothing. Exit faces let mass
//! leave at the cell's own outward velocity and credit it to the exit.

use crate::error::{Error, Result};
use crate::field::{DensityField, VelocityField};
use crate::scenario::{CellClass, CellGrid, Entrance, Face};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportConfig {
    /// Courant number.
    pub cfl: f64,
    /// Largest time step, in units of the grid spacing.
    pub dt_max_cells: f64,
    /// Density above which entrance cells stop receiving inflow.
    pub rho_cap: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            cfl: 0.45,
            dt_max_cells: 0.5,
            rho_cap: 4.0,
        }
    }
}

impl TransportConfig {
    pub fn dt_max(&self, h: f64) -> f64 {
        self.dt_max_cells * h
    }
}

/// Mass that has left through each exit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExitLedger {
    per_exit: Vec<f64>,
}

impl ExitLedger {
    pub fn new(n_exits: usize) -> Self {
        Self {
            per_exit: vec![0.0; n_exits],
        }
    }

    pub fn per_exit(&self) -> &[f64] {
        &self.per_exit
    }

    pub fn total(&self) -> f64 {
        self.per_exit.iter().sum()
    }

    pub fn credit(&mut self, exit: usize, mass: f64) {
        self.per_exit[exit] += mass;
    }
}

/// Removes every outward normal component at wall and obstacle faces.
/// Exit faces are left open and obstacle cells get zero velocity.
pub fn project_velocity(v: &VelocityField, g: &CellGrid) -> VelocityField {
    let mut out = v.clone();
    for (idx, val) in out.as_mut_slice().iter_mut().enumerate() {
        if !g.class_at(idx).is_walkable() {
            *val = [0.0, 0.0];
            continue;
        }
        let walls = g.walls(idx);
        if walls & Face::East.bit() != 0 && val[0] > 0.0 {
            val[0] = 0.0;
        }
        if walls & Face::West.bit() != 0 && val[0] < 0.0 {
            val[0] = 0.0;
        }
        if walls & Face::North.bit() != 0 && val[1] > 0.0 {
            val[1] = 0.0;
        }
        if walls & Face::South.bit() != 0 && val[1] < 0.0 {
            val[1] = 0.0;
        }
    }
    out
}

/// Stable time step `cfl h / max(|v_x| + |v_y|)`, never above `dt_max`.
pub fn cfl_dt(v: &VelocityField, h: f64, cfl: f64, dt_max: f64) -> f64 {
    let m = v.max_l1_speed();
    if m > 0.0 {
        (cfl * h / m).min(dt_max)
    } else {
        dt_max
    }
}

/// Advances `rho` by one step of length `dt`, crediting exit outflow to `ledger`.
pub fn step_density(
    rho: &DensityField,
    v: &VelocityField,
    dt: f64,
    g: &CellGrid,
    ledger: &mut ExitLedger,
) -> Result<DensityField> {
    let (nx, ny, h) = (g.nx(), g.ny(), g.spacing());
    let c = dt / h;
    let r = rho.as_slice();
    let vel = v.as_slice();
    let mut out = rho.clone();
    let next = out.as_mut_slice();
    for j in 0..ny {
        for i in 0..nx {
            let idx = j * nx + i;
            let class = g.class_at(idx);
            if !class.is_walkable() {
                continue;
            }
            let walls = g.walls(idx);
            if i + 1 < nx && walls & Face::East.bit() == 0 {
                let e = idx + 1;
                let u = 0.5 * (vel[idx][0] + vel[e][0]);
                let f = c * u * if u > 0.0 { r[idx] } else { r[e] };
                next[idx] -= f;
                next[e] += f;
            }
            if j + 1 < ny && walls & Face::North.bit() == 0 {
                let n = idx + nx;
                let u = 0.5 * (vel[idx][1] + vel[n][1]);
                let f = c * u * if u > 0.0 { r[idx] } else { r[n] };
                next[idx] -= f;
                next[n] += f;
            }
            if let CellClass::Exit(k) = class {
                let faces = g.exit_faces(idx);
                for face in Face::ALL {
                    if faces & face.bit() == 0 {
                        continue;
                    }
                    let nrm = face.normal();
                    let un = vel[idx][0] * nrm[0] + vel[idx][1] * nrm[1];
                    if un > 0.0 {
                        let out_rho = c * un * r[idx];
                        next[idx] -= out_rho;
                        ledger.credit(k, out_rho * h * h);
                    }
                }
            }
        }
    }
    if let Some((idx, &value)) = next.iter().enumerate().find(|(_, x)| **x < 0.0) {
        let (i, j) = g.coords(idx);
        return Err(Error::NegativeDensity { i, j, value });
    }
    Ok(out)
}

/// Adds the inflow of every active entrance over `[t, t + dt)`, spread
/// uniformly over its cells and capped at `rho_cap` per cell. Returns the mass
/// actually injected.
pub fn inject_inflow(
    rho: &mut DensityField,
    g: &CellGrid,
    entrances: &[Entrance],
    t: f64,
    dt: f64,
    rho_cap: f64,
) -> f64 {
    let h2 = g.spacing() * g.spacing();
    let mut injected = 0.0;
    for (k, e) in entrances.iter().enumerate() {
        if e.rate <= 0.0 || t >= e.duration {
            continue;
        }
        let span = dt.min(e.duration - t);
        let cells: Vec<usize> = g.entrance_cells(k).collect();
        if cells.is_empty() {
            continue;
        }
        let add = e.rate * span / (cells.len() as f64 * h2);
        let data = rho.as_mut_slice();
        for idx in cells {
            let d = add.min(rho_cap - data[idx]).max(0.0);
            data[idx] += d;
            injected += d * h2;
        }
    }
    injected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{
        classify_cells, CharacteristicScales, Exit, Rect, Scenario, Segment, Side, Units,
    };
    use proptest::prelude::*;

    fn base(n: usize, width: f64) -> Scenario {
        Scenario {
            width,
            height: width,
            nx: n,
            ny: n,
            exits: vec![],
            entrances: vec![],
            obstacles: vec![],
            rho0: vec![],
            alpha_deg: 170.0,
            sensory_radius: 1.0,
            repulsion: 0.0,
            scales: CharacteristicScales::UNIT,
            units: Units::Physical,
        }
    }

    fn with_right_exit(mut s: Scenario) -> Scenario {
        s.exits.push(Exit {
            id: "e".into(),
            segment: Segment {
                side: Side::Right,
                from: 0.0,
                to: s.height,
            },
        });
        s
    }

    #[test]
    fn projection_examples() {
        let g = classify_cells(&base(10, 5.0), None);
        let edge = g.idx(9, 5);
        let mut v = VelocityField::zeros(10, 10);
        v.as_mut_slice()[edge] = [1.0, 0.0];
        assert_eq!(project_velocity(&v, &g).as_slice()[edge], [0.0, 0.0]);
        v.as_mut_slice()[edge] = [0.0, 1.0];
        assert_eq!(project_velocity(&v, &g).as_slice()[edge], [0.0, 1.0]);
        let mid = g.idx(5, 5);
        v.as_mut_slice()[mid] = [0.3, -0.7];
        assert_eq!(project_velocity(&v, &g).as_slice()[mid], [0.3, -0.7]);
        // Corner: both outward components go.
        let corner = g.idx(0, 0);
        v.as_mut_slice()[corner] = [-0.5, -0.5];
        assert_eq!(project_velocity(&v, &g).as_slice()[corner], [0.0, 0.0]);
    }

    #[test]
    fn exit_faces_are_not_projected() {
        let g = classify_cells(&with_right_exit(base(10, 5.0)), None);
        let v = VelocityField::uniform(10, 10, [1.0, 0.0]);
        let p = project_velocity(&v, &g);
        assert_eq!(p.get(9, 3), [1.0, 0.0]);
    }

    #[test]
    fn cfl_examples() {
        assert_eq!(cfl_dt(&VelocityField::zeros(4, 4), 0.5, 0.45, 0.25), 0.25);
        let mut v = VelocityField::zeros(4, 4);
        v.set(1, 1, [1.5, -0.5]);
        assert!((cfl_dt(&v, 0.5, 0.45, 0.25) - 0.1125).abs() < 1e-15);
        let mut v2 = v.clone();
        v2.scale(2.0);
        assert!((cfl_dt(&v2, 0.5, 0.45, 0.25) - 0.05625).abs() < 1e-15);
    }

    #[test]
    fn zero_velocity_leaves_density_unchanged() {
        let g = classify_cells(&base(10, 5.0), None);
        let rho = DensityField::from_vec(10, 10, 0.5, (0..100).map(|k| k as f64 * 0.01).collect());
        let mut ledger = ExitLedger::new(0);
        let out = step_density(&rho, &VelocityField::zeros(10, 10), 0.1, &g, &mut ledger).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn uniform_drift_moves_block() {
        let n = 60;
        let g = classify_cells(&base(n, 30.0), None);
        let h = g.spacing();
        let mut rho = DensityField::zeros(n, n, h);
        for j in 25..35 {
            for i in 10..20 {
                rho.set(i, j, 1.0);
            }
        }
        let v = VelocityField::uniform(n, n, [1.0, 0.0]);
        let dt = cfl_dt(&v, h, 0.45, 0.5 * h);
        let m0 = rho.mass();
        let cx = |r: &DensityField| {
            let mut s = 0.0;
            for j in 0..n {
                for i in 0..n {
                    s += r.get(i, j) * g.center(i, j)[0];
                }
            }
            s * h * h / r.mass()
        };
        let x0 = cx(&rho);
        let mut ledger = ExitLedger::new(0);
        for _ in 0..10 {
            rho = step_density(&rho, &v, dt, &g, &mut ledger).unwrap();
        }
        assert!(((rho.mass() - m0) / m0).abs() <= 1e-12);
        assert!((cx(&rho) - x0 - 10.0 * dt).abs() < h);
    }

    #[test]
    fn exit_flux_is_credited() {
        let g = classify_cells(&with_right_exit(base(10, 5.0)), None);
        let h = g.spacing();
        let mut rho = DensityField::zeros(10, 10, h);
        for j in 0..10 {
            rho.set(9, j, 0.5 + 0.1 * j as f64);
        }
        let v = VelocityField::uniform(10, 10, [1.0, 0.0]);
        let dt = 0.1;
        let mut ledger = ExitLedger::new(1);
        let out = step_density(&rho, &v, dt, &g, &mut ledger).unwrap();
        let expected: f64 = (0..10).map(|j| rho.get(9, j) * 1.0 * dt * h).sum();
        assert!((ledger.total() - expected).abs() < 1e-15);
        assert!((rho.mass() - out.mass() - expected).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_upwind_reduction() {
        let n = 20;
        let g = classify_cells(&base(n, 10.0), None);
        let h = g.spacing();
        let c = 0.7;
        let dt = 0.2;
        let rho = DensityField::from_vec(
            n,
            n,
            h,
            (0..n * n)
                .map(|k| ((k % n) as f64 * 0.37).sin().abs())
                .collect(),
        );
        let mut ledger = ExitLedger::new(0);
        let out = step_density(
            &rho,
            &VelocityField::uniform(n, n, [c, 0.0]),
            dt,
            &g,
            &mut ledger,
        )
        .unwrap();
        let nu = c * dt / h;
        for j in 0..n {
            for i in 1..n - 1 {
                let classic = rho.get(i, j) - nu * (rho.get(i, j) - rho.get(i - 1, j));
                assert!((out.get(i, j) - classic).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn overly_large_step_is_reported() {
        let g = classify_cells(&base(10, 5.0), None);
        let mut rho = DensityField::zeros(10, 10, 0.5);
        rho.set(4, 4, 1.0);
        let v = VelocityField::uniform(10, 10, [1.0, 1.0]);
        let mut ledger = ExitLedger::new(0);
        let err = step_density(&rho, &v, 2.0, &g, &mut ledger).unwrap_err();
        assert!(
            matches!(err, Error::NegativeDensity { i: 4, j: 4, .. }),
            "{err}"
        );
    }

    fn entrance_scenario() -> Scenario {
        let mut s = base(20, 10.0);
        s.entrances.push(Entrance {
            id: "in".into(),
            segment: Segment {
                side: Side::Left,
                from: 4.0,
                to: 6.0,
            },
            rate: 3.5,
            duration: 25.0,
        });
        s
    }

    #[test]
    fn inflow_is_spread_uniformly() {
        let s = entrance_scenario();
        let g = classify_cells(&s, None);
        assert_eq!(g.entrance_cells(0).count(), 4);
        let mut rho = DensityField::zeros(20, 20, 0.5);
        let m = inject_inflow(&mut rho, &g, &s.entrances, 0.0, 0.1, 4.0);
        for idx in g.entrance_cells(0) {
            assert!((rho.as_slice()[idx] - 0.35).abs() < 1e-15);
        }
        assert!((m - 0.35).abs() < 1e-15);
    }

    #[test]
    fn inflow_stops_after_duration_and_respects_rate_and_cap() {
        let mut s = entrance_scenario();
        let g = classify_cells(&s, None);
        let mut rho = DensityField::zeros(20, 20, 0.5);
        assert_eq!(
            inject_inflow(&mut rho, &g, &s.entrances, 25.0, 0.1, 4.0),
            0.0
        );
        // Partial last step.
        let m = inject_inflow(&mut rho, &g, &s.entrances, 24.95, 0.1, 4.0);
        assert!((m - 3.5 * 0.05).abs() < 1e-12);
        s.entrances[0].rate = 0.0;
        let before = rho.clone();
        inject_inflow(&mut rho, &g, &s.entrances, 1.0, 0.1, 4.0);
        assert_eq!(rho, before);
        s.entrances[0].rate = 1000.0;
        inject_inflow(&mut rho, &g, &s.entrances, 1.0, 1.0, 4.0);
        assert!(rho.max() <= 4.0);
    }

    fn swirl(n: usize, seed: f64) -> VelocityField {
        let data = (0..n * n)
            .map(|k| {
                let (i, j) = ((k % n) as f64, (k / n) as f64);
                [
                    (0.3 * i + seed).sin() + 0.5 * (0.2 * j).cos(),
                    (0.25 * j - seed).cos() - 0.4 * (0.1 * i).sin(),
                ]
            })
            .collect();
        VelocityField::from_vec(n, n, data)
    }

    #[test]
    fn closed_room_conserves_mass_over_1000_steps() {
        let n = 30;
        let mut s = base(n, 15.0);
        s.obstacles.push(Rect::new(5.0, 5.0, 2.0, 4.0));
        let g = classify_cells(&s, None);
        let h = g.spacing();
        let mut rho = DensityField::zeros(n, n, h);
        for j in 2..8 {
            for i in 2..8 {
                rho.set(i, j, 2.0);
            }
        }
        let m0 = rho.mass();
        let v = project_velocity(&swirl(n, 0.3), &g);
        let dt = cfl_dt(&v, h, 0.45, 0.5 * h);
        let mut ledger = ExitLedger::new(0);
        for _ in 0..1000 {
            rho = step_density(&rho, &v, dt, &g, &mut ledger).unwrap();
        }
        assert!(((rho.mass() - m0) / m0).abs() <= 1e-12);
        for idx in 0..g.len() {
            if !g.class_at(idx).is_walkable() {
                assert_eq!(rho.as_slice()[idx], 0.0);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn global_balance_and_positivity(seed in -3.0f64..3.0, steps in 1usize..120, rate in 0.0f64..5.0) {
            let n = 16;
            let mut s = with_right_exit(base(n, 8.0));
            s.exits[0].segment = Segment { side: Side::Right, from: 3.0, to: 5.0 };
            s.entrances.push(Entrance {
                id: "in".into(),
                segment: Segment { side: Side::Bottom, from: 1.0, to: 2.0 },
                rate,
                duration: 3.0,
            });
            s.obstacles.push(Rect::new(4.0, 4.0, 1.0, 1.0));
            let g = classify_cells(&s, None);
            let h = g.spacing();
            let mut rho = DensityField::zeros(n, n, h);
            for j in 8..12 {
                for i in 2..6 {
                    rho.set(i, j, 1.0 + 0.1 * (i + j) as f64);
                }
            }
            let m0 = rho.mass();
            let v = project_velocity(&swirl(n, seed), &g);
            let dt = cfl_dt(&v, h, 0.45, 0.5 * h);
            let mut ledger = ExitLedger::new(1);
            let mut injected = 0.0;
            let mut t = 0.0;
            for _ in 0..steps {
                rho = step_density(&rho, &v, dt, &g, &mut ledger).unwrap();
                injected += inject_inflow(&mut rho, &g, &s.entrances, t, dt, 4.0);
                t += dt;
                prop_assert!(rho.min() >= 0.0);
                let lhs = m0 + injected;
                let rhs = rho.mass() + ledger.total();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs);
            }
        }
    }
}
