//! TOML scenario documents.
//!
//! ```toml
//! [domain]
//! width = 50.0
//! height = 50.0
//! nx = 100
//! ny = 100
//!
//! [scales]
//! L = 1.0
//! V = 1.0
//! rho = 1.0
//!
//! [params]
//! alpha_deg = 170.0
//! R = 1.5
//! F = 8.0            # m^2/s; or F_nd for the value in characteristic units
//!
//! [[exits]]
//! id = "e1"
//! side = "top"
//! from = 20.0
//! to = 22.0
//!
//! [[entrances]]
//! id = "in"
//! side = "left"
//! from = 10.0
//! to = 14.0
//! rate = 3.5
//! duration = 25.0
//!
//! [[obstacles]]      # lower-left corner and sides, m
//! x = 20.0
//! y = 10.0
//! w = 7.5
//! h = 17.0
//!
//! [[rho0]]           # lower-left corner and sides, m; density in ped/m^2
//! x = 5.0
//! y = 5.0
//! w = 10.0
//! h = 4.0
//! density = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    CharacteristicScales, DensityBlock, Entrance, Exit, Rect, Scenario, Segment, Side, Units,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub domain: DomainSection,
    #[serde(default)]
    pub scales: ScalesSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub exits: Vec<ExitEntry>,
    #[serde(default)]
    pub entrances: Vec<EntranceEntry>,
    #[serde(default)]
    pub obstacles: Vec<Rect>,
    #[serde(default)]
    pub rho0: Vec<DensityEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesSection {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "V")]
    pub speed: f64,
    pub rho: f64,
}

impl Default for ScalesSection {
    fn default() -> Self {
        Self {
            length: 1.0,
            speed: 1.0,
            rho: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub alpha_deg: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    /// Repulsion strength in m^2/s.
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub repulsion: Option<f64>,
    /// Repulsion strength already expressed in characteristic units,
    /// converted on load through `F = F_nd * V / (rho * L)`.
    #[serde(rename = "F_nd", default, skip_serializing_if = "Option::is_none")]
    pub repulsion_nd: Option<f64>,
}

impl ParamsSection {
    fn physical_repulsion(&self, scales: &ScalesSection) -> Result<f64> {
        match (self.repulsion, self.repulsion_nd) {
            (Some(f), None) => Ok(f),
            (None, Some(f)) => Ok(f * scales.speed / (scales.rho * scales.length)),
            _ => Err(Error::invalid(
                "params.F",
                "exactly one of F and F_nd must be given",
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitEntry {
    pub id: String,
    pub side: Side,
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntranceEntry {
    pub id: String,
    pub side: Side,
    pub from: f64,
    pub to: f64,
    pub rate: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityEntry {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub density: f64,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let repulsion = self.params.physical_repulsion(&self.scales)?;
        let s = Scenario {
            width: self.domain.width,
            height: self.domain.height,
            nx: self.domain.nx,
            ny: self.domain.ny,
            exits: self
                .exits
                .into_iter()
                .map(|e| Exit {
                    id: e.id,
                    segment: Segment {
                        side: e.side,
                        from: e.from,
                        to: e.to,
                    },
                })
                .collect(),
            entrances: self
                .entrances
                .into_iter()
                .map(|e| Entrance {
                    id: e.id,
                    segment: Segment {
                        side: e.side,
                        from: e.from,
                        to: e.to,
                    },
                    rate: e.rate,
                    duration: e.duration,
                })
                .collect(),
            obstacles: self.obstacles,
            rho0: self
                .rho0
                .into_iter()
                .map(|d| DensityBlock {
                    rect: Rect::new(d.x, d.y, d.w, d.h),
                    density: d.density,
                })
                .collect(),
            alpha_deg: self.params.alpha_deg,
            sensory_radius: self.params.radius,
            repulsion,
            scales: CharacteristicScales {
                length: self.scales.length,
                speed: self.scales.speed,
                density: self.scales.rho,
            },
            units: Units::Physical,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_scenario()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EMPTY_ROOM: &str = r#"
        [domain]
        width = 10.0
        height = 10.0
        nx = 20
        ny = 20

        [params]
        alpha_deg = 170.0
        R = 1.5
        F = 8.0

        [[exits]]
        id = "e1"
        side = "right"
        from = 4.0
        to = 6.0
    "#;

    #[test]
    fn parses_empty_room() {
        let s = parse_scenario(EMPTY_ROOM).unwrap();
        assert_eq!(s.nx, 20);
        assert_eq!(s.exits[0].segment.side, Side::Right);
        assert!(s.rho0.is_empty());
        assert_eq!(s.scales, CharacteristicScales::UNIT);
    }

    #[test]
    fn reports_field_of_invariant_violation() {
        let text = format!("{EMPTY_ROOM}\n[[obstacles]]\nx = 9.0\ny = 1.0\nw = 3.0\nh = 1.0\n");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref field, .. } if field == "obstacles[0]"));
        assert!(err.to_string().contains("obstacle outside domain"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_syntax() {
        assert!(matches!(
            parse_scenario("[domain]\nwidth = ").unwrap_err(),
            Error::Parse(_)
        ));
        let text = EMPTY_ROOM.replace("alpha_deg", "alpha");
        assert!(matches!(
            parse_scenario(&text).unwrap_err(),
            Error::Parse(_)
        ));
    }

    #[test]
    fn dimensionless_repulsion_is_converted() {
        let text = EMPTY_ROOM.replace("F = 8.0", "F_nd = 8.0").replace(
            "[params]",
            "[scales]\nL = 50.0\nV = 1.0\nrho = 1.0\n\n[params]",
        );
        let s = parse_scenario(&text).unwrap();
        assert!((s.repulsion - 0.16).abs() < 1e-15);
        assert!((s.nondimensionalize().repulsion - 8.0).abs() < 1e-12);
    }

    #[test]
    fn repulsion_must_be_given_once() {
        let both = EMPTY_ROOM.replace("F = 8.0", "F = 8.0\nF_nd = 1.0");
        let neither = EMPTY_ROOM.replace("F = 8.0", "");
        for text in [both, neither] {
            let err = parse_scenario(&text).unwrap_err();
            assert!(matches!(err, Error::Invalid { ref field, .. } if field == "params.F"));
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_scenario("/definitely/not/here.toml").unwrap_err(),
            Error::Io { .. }
        ));
    }
}
