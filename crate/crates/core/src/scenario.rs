//! Scenario files: a network plus initial condition, run controls and gauges.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::BoundaryCondition;
use crate::geometry::{self, FaceGeometry};
use crate::junction::{self, JunctionModel, JunctionState};
use crate::network::{build_network, LinkConfig, Network, NetworkConfig, NetworkError, NodeConfig};
use crate::scheme::{FlowState, Integrator, LinkState, SchemeParams, Solver};
use crate::simulation::{Gauge, GaugeSite, Schedule};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("scenario: {0}")]
    Invalid(String),
}

impl ScenarioError {
    /// Parse and validation problems with the input, as opposed to I/O failures.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, ScenarioError::Io(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub nodes: Vec<NodeConfig>,
    pub links: Vec<LinkConfig>,
    pub cross_sections: BTreeMap<String, Vec<[f64; 2]>>,
    #[serde(default)]
    pub boundary_conditions: BTreeMap<String, BoundaryCondition>,
    pub scenario: ScenarioConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub end_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_fixed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_still: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction_model: Option<JunctionModel>,
    pub initial: InitialCondition,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gauges: Vec<GaugeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_tol: Option<f64>,
}

/// Initial water surface (and velocity) field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Horizontal surface at rest.
    LakeAtRest { level: f64 },
    /// Two horizontal surfaces at rest separated at `x_dam`.
    DamBreak {
        x_dam: f64,
        level_upstream: f64,
        level_downstream: f64,
    },
    /// `w = base + amplitude·cos(π(x − center)/half_width)` with uniform velocity.
    Cosine {
        base: f64,
        amplitude: f64,
        center: f64,
        half_width: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// Horizontal surface `level` at rest, overridden on intervals.
    Piecewise {
        level: f64,
        #[serde(default)]
        pieces: Vec<Piece>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub from: f64,
    pub to: f64,
    pub level: f64,
    /// Restrict to one link; all links when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction: Option<String>,
}

impl ScenarioFile {
    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            nodes: self.nodes.clone(),
            links: self.links.clone(),
            cross_sections: self.cross_sections.clone(),
            boundary_conditions: self.boundary_conditions.clone(),
        }
    }

    pub fn from_parts(net: NetworkConfig, scenario: ScenarioConfig) -> Self {
        Self {
            nodes: net.nodes,
            links: net.links,
            cross_sections: net.cross_sections,
            boundary_conditions: net.boundary_conditions,
            scenario,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, end_time: f64, initial: InitialCondition) -> Self {
        Self {
            name: name.into(),
            end_time,
            cfl: None,
            dt_max: None,
            dt_fixed: None,
            gravity: None,
            epsilon: None,
            q_still: None,
            integrator: None,
            junction_model: None,
            initial,
            gauges: Vec::new(),
            snapshots: Vec::new(),
            output_interval: None,
            steady_tol: None,
        }
    }

    pub fn params(&self) -> SchemeParams {
        let d = SchemeParams::default();
        SchemeParams {
            gravity: self.gravity.unwrap_or(d.gravity),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            q_still: self.q_still.unwrap_or(d.q_still),
            cfl: self.cfl.unwrap_or(d.cfl),
            dt_max: self.dt_max.unwrap_or(d.dt_max),
            integrator: self.integrator.unwrap_or(d.integrator),
            junction_model: self.junction_model.unwrap_or(d.junction_model),
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            end_time: self.end_time,
            fixed_dt: self.dt_fixed,
            output_interval: self.output_interval,
            snapshots: self.snapshots.clone(),
            steady_tol: self.steady_tol,
            max_steps: None,
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return bad("end_time must be finite and non-negative");
        }
        for (v, name) in [
            (self.cfl, "cfl"),
            (self.dt_max, "dt_max"),
            (self.dt_fixed, "dt_fixed"),
            (self.gravity, "gravity"),
            (self.epsilon, "epsilon"),
            (self.output_interval, "output_interval"),
            (self.steady_tol, "steady_tol"),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(ScenarioError::Invalid(format!("{name} must be positive")));
                }
            }
        }
        if self.q_still.is_some_and(|q| !(q >= 0.0)) {
            return bad("q_still must be non-negative");
        }
        if let InitialCondition::Cosine { half_width, .. } = self.initial {
            if !(half_width > 0.0) {
                return bad("cosine half_width must be positive");
            }
        }
        Ok(())
    }
}

/// A scenario ready to run.
pub struct Prepared {
    pub file: ScenarioFile,
    pub network: Arc<Network>,
    pub params: SchemeParams,
    pub schedule: Schedule,
    pub gauges: Vec<Gauge>,
    pub initial: FlowState,
}

impl Prepared {
    pub fn solver(&self) -> Solver {
        Solver::new(Arc::clone(&self.network), self.params.clone())
    }
}

pub fn prepare(file: ScenarioFile) -> Result<Prepared, ScenarioError> {
    file.scenario.validate()?;
    let network = Arc::new(build_network(&file.network_config())?);
    let gauges = file
        .scenario
        .gauges
        .iter()
        .map(|g| resolve_gauge(&network, g))
        .collect::<Result<Vec<_>, _>>()?;
    let initial = initial_state(&network, &file.scenario.initial)?;
    Ok(Prepared {
        params: file.scenario.params(),
        schedule: file.scenario.schedule(),
        network,
        gauges,
        initial,
        file,
    })
}

fn resolve_gauge(net: &Network, g: &GaugeConfig) -> Result<Gauge, ScenarioError> {
    let site = match (&g.link, g.x, &g.junction) {
        (Some(link), Some(x), None) => {
            let li = net
                .link_index(link)
                .ok_or_else(|| ScenarioError::Invalid(format!("gauge '{}': unknown link '{link}'", g.name)))?;
            let cell = net.links[li].locate(x).ok_or_else(|| {
                ScenarioError::Invalid(format!("gauge '{}': x={x} lies outside link '{link}'", g.name))
            })?;
            GaugeSite::Cell { link: li, cell, x }
        }
        (None, None, Some(j)) => GaugeSite::Junction {
            junction: net
                .junction_index(j)
                .ok_or_else(|| ScenarioError::Invalid(format!("gauge '{}': unknown junction '{j}'", g.name)))?,
        },
        _ => {
            return Err(ScenarioError::Invalid(format!(
                "gauge '{}': give either link and x, or junction",
                g.name
            )))
        }
    };
    Ok(Gauge {
        name: g.name.clone(),
        site,
    })
}

/// Water volume in `[x1, x2]` of a cell below the horizontal level `w`.
fn level_volume(l: &FaceGeometry, r: &FaceGeometry, x1: f64, x2: f64, w: f64) -> f64 {
    if x2 <= x1 {
        0.0
    } else {
        geometry::volume(l, r, x1, x2, w, w)
    }
}

/// Horizontal level at `x` on link `link` for interval-wise conditions.
fn level_at(ic: &InitialCondition, link: &str, x: f64) -> f64 {
    match ic {
        InitialCondition::LakeAtRest { level } => *level,
        InitialCondition::DamBreak {
            x_dam,
            level_upstream,
            level_downstream,
        } => {
            if x < *x_dam {
                *level_upstream
            } else {
                *level_downstream
            }
        }
        InitialCondition::Piecewise { level, pieces } => pieces
            .iter()
            .rev()
            .find(|p| x >= p.from && x < p.to && p.link.as_deref().is_none_or(|l| l == link))
            .map_or(*level, |p| p.level),
        InitialCondition::Cosine { .. } => unreachable!("cosine is not piecewise horizontal"),
    }
}

fn breakpoints(ic: &InitialCondition, link: &str) -> Vec<f64> {
    match ic {
        InitialCondition::DamBreak { x_dam, .. } => vec![*x_dam],
        InitialCondition::Piecewise { pieces, .. } => pieces
            .iter()
            .filter(|p| p.link.as_deref().is_none_or(|l| l == link))
            .flat_map(|p| [p.from, p.to])
            .collect(),
        _ => Vec::new(),
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Cell averages for an initial condition.
pub fn initial_state(net: &Network, ic: &InitialCondition) -> Result<FlowState, ScenarioError> {
    let mut state = FlowState::dry(net);
    for (li, link) in net.links.iter().enumerate() {
        let ls: &mut LinkState = &mut state.links[li];
        let cuts = breakpoints(ic, &link.id);
        for (j, c) in link.cells().enumerate() {
            let (area, q) = match ic {
                InitialCondition::Cosine {
                    base,
                    amplitude,
                    center,
                    half_width,
                    velocity,
                } => {
                    let mut a = 0.0;
                    for (xi, wgt) in GAUSS5 {
                        let theta = 0.5 * (1.0 + xi);
                        let x = c.left.x + theta * c.dx;
                        let bed = c.left.bed + theta * (c.right.bed - c.left.bed);
                        let w = base + amplitude * (std::f64::consts::PI * (x - center) / half_width).cos();
                        let h = (w - bed).max(0.0);
                        a += 0.5 * wgt * ((1.0 - theta) * c.left.section.area(h) + theta * c.right.section.area(h));
                    }
                    (a, velocity * a)
                }
                _ => {
                    let mut xs = vec![c.left.x];
                    xs.extend(cuts.iter().copied().filter(|&x| x > c.left.x && x < c.right.x));
                    xs.push(c.right.x);
                    xs.sort_by(f64::total_cmp);
                    let v: f64 = xs
                        .windows(2)
                        .map(|p| {
                            let w = level_at(ic, &link.id, 0.5 * (p[0] + p[1]));
                            level_volume(c.left, c.right, p[0], p[1], w)
                        })
                        .sum();
                    (v / c.dx, 0.0)
                }
            };
            ls.area[j] = area;
            ls.discharge[j] = q;
        }
    }
    for (k, j) in net.junctions.iter().enumerate() {
        let level = match ic {
            InitialCondition::Cosine { .. } => {
                // Match the adjacent terminal cells.
                let s = &j.stubs[0];
                let link = &net.links[s.link];
                let cell = if junction::terminal_face_index(net, s) == 0 { 0 } else { link.cell_count() - 1 };
                let a = state.links[s.link].area[cell];
                let c = link.cell(cell);
                let shape = crate::reconstruction::CellShape::new(c.left, c.right);
                shape.mean.depth_for_area(a).unwrap_or(0.0) + 0.5 * (c.left.bed + c.right.bed)
            }
            _ => level_at(ic, &net.links[j.stubs[0].link].id, j.stubs[0].face.x),
        };
        state.junctions[k] = JunctionState {
            level: level.max(junction::min_bed(net, j)),
            discharge: 0.0,
        };
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(initial: &str) -> String {
        format!(
            r#"{{
              "cross_sections": {{"r": [[0,1],[1,1]]}},
              "boundary_conditions": {{"wall": {{"kind": "wall"}}}},
              "nodes": [
                {{"kind": "boundary", "id": "a", "condition": "wall"}},
                {{"kind": "boundary", "id": "b", "condition": "wall"}}
              ],
              "links": [{{"id": "L", "from": "a", "to": "b",
                "uniform": {{"cells": 4, "length": 1, "bed_upstream": 0, "bed_downstream": 1, "cross_section": "r"}}}}],
              "scenario": {{"name": "t", "end_time": 0, "initial": {initial},
                "gauges": [{{"name": "g", "link": "L", "x": 0.3}}]}}
            }}"#
        )
    }

    #[test]
    fn lake_at_rest_cell_averages_are_exact() {
        let p = prepare(ScenarioFile::from_json(&file(r#"{"kind": "lake_at_rest", "level": 0.5}"#)).unwrap()).unwrap();
        let a = &p.initial.links[0].area;
        // bed 0..1 in four cells, surface 0.5
        assert!((a[0] - 0.375).abs() < 1e-15);
        assert!((a[1] - 0.125).abs() < 1e-15);
        assert_eq!(a[2], 0.0);
        assert_eq!(p.gauges[0].site, GaugeSite::Cell { link: 0, cell: 1, x: 0.3 });
    }

    #[test]
    fn dam_break_splits_cells() {
        let p = prepare(
            ScenarioFile::from_json(&file(
                r#"{"kind": "dam_break", "x_dam": 0.125, "level_upstream": 1.0, "level_downstream": 0.0}"#,
            ))
            .unwrap(),
        )
        .unwrap();
        let a = p.initial.links[0].area[0];
        // left half of cell 0 below level 1 over bed 0..0.125
        let expect = (0.125 - 0.5 * 0.125 * 0.125) / 0.25;
        assert!((a - expect).abs() < 1e-14);
    }

    #[test]
    fn errors_carry_field_paths() {
        let e = ScenarioFile::from_json(&file(r#"{"kind": "lake_at_rest", "levl": 0.5}"#)).unwrap_err();
        match e {
            ScenarioError::Parse { path, .. } => assert!(path.starts_with("scenario.initial"), "{path}"),
            other => panic!("{other}"),
        }
        let e = ScenarioFile::from_json(&file(r#"{"kind": "lake_at_rest", "level": 0.5}"#).replace("\"x\": 0.3", "\"x\": 3"))
            .unwrap();
        assert!(matches!(prepare(e), Err(ScenarioError::Invalid(_))));
    }
}
