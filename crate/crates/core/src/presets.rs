//! Built-in test scenarios, generated programmatically.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::boundary::{BoundaryCondition, BuiltinHydrograph, Hydrograph, SinePulse};
use crate::junction::JunctionModel;
use crate::network::{LinkConfig, ManningConfig, NetworkConfig, NodeConfig, UniformLink};
use crate::scenario::{GaugeConfig, InitialCondition, Piece, ScenarioConfig, ScenarioFile};
use crate::scheme::Integrator;

pub const NAMES: &[&str] = &[
    "smooth_accuracy",
    "perturbation",
    "spline_lake_at_rest",
    "subcritical_steady",
    "transcritical_shock",
    "triangular_dam_break_wet",
    "triangular_dam_break_dry",
    "rectangular_dam_break_dry",
    "drain",
    "junction_dam_break",
    "straight_dam_break",
    "loop_subcritical",
    "loop_supercritical",
    "dry_network",
    "network_lake_at_rest",
];

/// Natural cubic spline through `knots` (strictly increasing x).
#[derive(Clone, Debug)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(knots: &[(f64, f64)]) -> Self {
        let n = knots.len();
        let x: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let y: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the interior second derivatives.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            for i in (0..k).rev() {
                let next = if i + 1 < k { upper[i] * sol[i + 1] } else { 0.0 };
                sol[i] = (rhs[i] - next) / diag[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        Self { x, y, m }
    }

    /// Value at `t`, clamped to the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let t = t.clamp(self.x[0], self.x[n - 1]);
        let i = (self.x.partition_point(|&v| v <= t)).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Bed of the perturbation test: rescaled spline with flat shelves.
pub fn perturbation_bed(x: f64) -> f64 {
    let s = NaturalSpline::new(&[
        (0.0, 0.3),
        (0.05, 0.3),
        (0.1, 0.2),
        (0.15, 0.5),
        (0.3, 0.4),
        (0.4, 0.6),
        (0.75, 0.6),
    ]);
    if x <= 0.0693 {
        0.12
    } else if x >= 0.7386 {
        0.8
    } else if x <= 0.53 {
        0.5 * s.eval(x)
    } else {
        1.3 * s.eval(x)
    }
}

/// Bed of the subcritical steady test: spline on [0.2, 0.7], zero elsewhere.
pub fn subcritical_bed(x: f64) -> f64 {
    if !(0.2..=0.7).contains(&x) {
        return 0.0;
    }
    NaturalSpline::new(&[(0.2, 0.0), (0.3, 0.6), (0.4, 0.4), (0.5, 0.5), (0.6, 0.2), (0.7, 0.0)]).eval(x)
}

/// Bottom width of the contracting-expanding channel `(1 + ¾cos πx)`.
pub fn cosine_channel_width(x: f64) -> f64 {
    1.0 + 0.75 * (PI * x).cos()
}

/// Section of the cosine channel: width decreasing linearly to 5% at depth 1.9.
pub fn cosine_channel_section(x: f64) -> Vec<[f64; 2]> {
    let w = cosine_channel_width(x);
    vec![[0.0, w], [1.9, 0.05 * w]]
}

pub fn shock_bed(x: f64) -> f64 {
    if (0.5..=0.9).contains(&x) {
        0.5 + 0.5 * (PI * (x - 0.7) / 0.2).cos()
    } else {
        0.0
    }
}

/// Coefficient of `√y` in the shock-test width.
pub fn shock_sqrt_coefficient(x: f64) -> f64 {
    if (0.5..=0.9).contains(&x) {
        0.375 - 0.125 * (PI * (x - 0.7) / 0.2).cos()
    } else {
        0.5
    }
}

/// Piecewise-linear sampling of `½ + c√y` on depths up to 4.
pub fn shock_section(x: f64) -> Vec<[f64; 2]> {
    let c = shock_sqrt_coefficient(x);
    let k = 24;
    (0..=k)
        .map(|i| {
            let y = 4.0 * (i as f64 / k as f64).powi(2);
            [y, 0.5 + c * y.sqrt()]
        })
        .collect()
}

pub fn drain_width(x: f64) -> f64 {
    if (0.25..=0.75).contains(&x) {
        0.8 + 3.2 * (x - 0.5) * (x - 0.5)
    } else {
        1.0
    }
}

pub fn drain_bed(x: f64) -> f64 {
    if (x - 0.5).abs() < 0.1 {
        0.25 * (1.0 + (PI * (x - 0.5) / 0.1).cos())
    } else {
        0.0
    }
}

#[derive(Default)]
struct Builder {
    net: NetworkConfig,
}

impl Builder {
    fn section(&mut self, name: &str, points: Vec<[f64; 2]>) -> &mut Self {
        self.net.cross_sections.insert(name.into(), points);
        self
    }

    fn condition(&mut self, name: &str, c: BoundaryCondition) -> &mut Self {
        self.net.boundary_conditions.insert(name.into(), c);
        self
    }

    fn boundary(&mut self, id: &str, condition: &str) -> &mut Self {
        self.net.nodes.push(NodeConfig::Boundary {
            id: id.into(),
            condition: condition.into(),
        });
        self
    }

    fn junction(&mut self, id: &str) -> &mut Self {
        self.net.nodes.push(NodeConfig::Junction {
            id: id.into(),
            stubs: Vec::new(),
            lateral_inflow: None,
            junction_model: None,
        });
        self
    }

    #[allow(clippy::too_many_arguments)]
    fn uniform(
        &mut self,
        id: &str,
        from: &str,
        to: &str,
        cells: usize,
        x0: f64,
        length: f64,
        beds: (f64, f64),
        section: &str,
        n: f64,
    ) -> &mut Self {
        self.net.links.push(LinkConfig {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            manning_n: ManningConfig::Uniform(n),
            faces: None,
            uniform: Some(UniformLink {
                cells,
                x0,
                length,
                bed_upstream: beds.0,
                bed_downstream: beds.1,
                cross_section: section.into(),
            }),
        });
        self
    }

    /// Link on `[0, 1]` whose faces each get their own section.
    fn varying(
        &mut self,
        id: &str,
        from: &str,
        to: &str,
        cells: usize,
        bed: impl Fn(f64) -> f64,
        section: impl Fn(f64) -> Vec<[f64; 2]>,
    ) -> &mut Self {
        let mut faces = Vec::with_capacity(cells + 1);
        for i in 0..=cells {
            let x = i as f64 / cells as f64;
            let name = format!("{id}_{i:05}");
            self.net.cross_sections.insert(name.clone(), section(x));
            faces.push((x, bed(x), name));
        }
        self.net.links.push(LinkConfig {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            manning_n: ManningConfig::Uniform(0.0),
            faces: Some(faces),
            uniform: None,
        });
        self
    }

    fn finish(&mut self, scenario: ScenarioConfig) -> ScenarioFile {
        ScenarioFile::from_parts(std::mem::take(&mut self.net), scenario)
    }
}

fn wall() -> BoundaryCondition {
    BoundaryCondition::Wall { source: None }
}

fn gauge(name: &str, link: &str, x: f64) -> GaugeConfig {
    GaugeConfig {
        name: name.into(),
        link: Some(link.into()),
        x: Some(x),
        junction: None,
    }
}

fn junction_gauge(name: &str) -> GaugeConfig {
    GaugeConfig {
        name: name.into(),
        link: None,
        x: None,
        junction: Some(name.into()),
    }
}

fn pulses(list: &[(f64, f64, f64)]) -> Hydrograph {
    Hydrograph::Builtin(BuiltinHydrograph::SinePulses {
        pulses: list.iter().map(|&(a, s, d)| SinePulse::new(a, s, d)).collect(),
    })
}

/// Default cell count of a preset.
pub fn default_cells(name: &str) -> Option<usize> {
    Some(match name {
        "smooth_accuracy" => 160,
        "perturbation" | "spline_lake_at_rest" | "subcritical_steady" | "transcritical_shock" | "drain" => 200,
        "triangular_dam_break_wet" => 400,
        "triangular_dam_break_dry" | "rectangular_dam_break_dry" => 1000,
        "junction_dam_break" | "straight_dam_break" | "loop_subcritical" | "loop_supercritical" => 340,
        "dry_network" | "network_lake_at_rest" => 650,
        _ => return None,
    })
}

/// Build a named preset. `cells` overrides the resolution of single-link presets.
pub fn build(name: &str, cells: Option<usize>) -> Result<ScenarioFile, String> {
    let n = cells.or_else(|| default_cells(name)).ok_or_else(|| format!("unknown preset '{name}'"))?;
    if n == 0 {
        return Err("cell count must be positive".into());
    }
    let mut b = Builder::default();
    let file = match name {
        "smooth_accuracy" => {
            b.section("trapezoid", vec![[0.0, 1.0], [10.0, 4.0]])
                .condition("out", BoundaryCondition::Outflow)
                .boundary("left", "out")
                .boundary("right", "out")
                .uniform("channel", "left", "right", n, 0.0, 1.0, (0.0, 0.0), "trapezoid", 0.0);
            let mut s = ScenarioConfig::new(
                name,
                0.05,
                InitialCondition::Cosine {
                    base: 1.6,
                    amplitude: 0.1,
                    center: 0.4,
                    half_width: 0.2,
                    velocity: 1.0,
                },
            );
            s.integrator = Some(Integrator::Ssp2);
            s.dt_fixed = Some(1e-5);
            s.snapshots = vec![0.01, 0.03, 0.05];
            b.finish(s)
        }
        "perturbation" | "spline_lake_at_rest" => {
            let end = if name == "perturbation" {
                BoundaryCondition::Outflow
            } else {
                BoundaryCondition::Wall { source: None }
            };
            b.condition("end", end)
                .boundary("left", "end")
                .boundary("right", "end")
                .varying("channel", "left", "right", n, perturbation_bed, cosine_channel_section);
            let initial = if name == "perturbation" {
                InitialCondition::Piecewise {
                    level: 0.8,
                    pieces: vec![Piece {
                        from: 0.1,
                        to: 0.15,
                        level: 1.1,
                        link: None,
                    }],
                }
            } else {
                InitialCondition::LakeAtRest { level: 0.8 }
            };
            let mut s = ScenarioConfig::new(name, 0.5, initial);
            s.snapshots = vec![0.05, 0.1, 0.2, 0.3, 0.5];
            b.finish(s)
        }
        "subcritical_steady" => {
            b.condition("inflow", BoundaryCondition::Discharge {
                discharge: Hydrograph::Constant(0.3343),
            })
            .condition("outlet", BoundaryCondition::Surface {
                level: Hydrograph::Constant(0.8),
            })
            .boundary("left", "inflow")
            .boundary("right", "outlet")
            .varying("channel", "left", "right", n, subcritical_bed, cosine_channel_section);
            let mut s = ScenarioConfig::new(name, 60.0, InitialCondition::LakeAtRest { level: 0.8 });
            s.steady_tol = Some(1e-4);
            s.output_interval = Some(0.5);
            b.finish(s)
        }
        "transcritical_shock" => {
            b.condition("inflow", BoundaryCondition::Discharge {
                discharge: Hydrograph::Constant(2.5561),
            })
            .condition("outlet", BoundaryCondition::Surface {
                level: Hydrograph::Constant(1.9968),
            })
            .boundary("left", "inflow")
            .boundary("right", "outlet")
            .varying("channel", "left", "right", n, shock_bed, shock_section);
            let mut s = ScenarioConfig::new(name, 60.0, InitialCondition::LakeAtRest { level: 1.9968 });
            s.steady_tol = Some(1e-4);
            s.output_interval = Some(0.5);
            b.finish(s)
        }
        "triangular_dam_break_wet" | "triangular_dam_break_dry" | "rectangular_dam_break_dry" => {
            let section = if name.starts_with("rect") {
                vec![[0.0, 1.0], [2.0, 1.0]]
            } else {
                vec![[0.0, 0.0], [2.0, 4.0]]
            };
            b.section("channel", section)
                .condition("wall", wall())
                .boundary("left", "wall")
                .boundary("right", "wall")
                .uniform("channel", "left", "right", n, 0.0, 1000.0, (0.0, 0.0), "channel", 0.0);
            let wet = name.ends_with("wet");
            let initial = InitialCondition::DamBreak {
                x_dam: 500.0,
                level_upstream: 1.0,
                level_downstream: if wet { 0.1 } else { 0.0 },
            };
            let end = if wet {
                80.0
            } else if name.starts_with("rect") {
                20.0
            } else {
                45.0
            };
            let mut s = ScenarioConfig::new(name, end, initial);
            s.snapshots = vec![end];
            if name.starts_with("rect") {
                s.epsilon = Some(1e-8);
            }
            b.finish(s)
        }
        "drain" => {
            b.condition("wall", wall())
                .condition("out", BoundaryCondition::Outflow)
                .boundary("left", "wall")
                .boundary("right", "out")
                .varying("channel", "left", "right", n, drain_bed, |x| {
                    vec![[0.0, drain_width(x)], [2.0, drain_width(x)]]
                });
            let mut s = ScenarioConfig::new(name, 10.0, InitialCondition::LakeAtRest { level: 0.8 });
            s.snapshots = vec![0.5, 1.0, 2.0, 5.0, 10.0];
            b.finish(s)
        }
        "straight_dam_break" => {
            b.section("rect3", vec![[0.0, 3.0], [2.0, 3.0]])
                .condition("wall", wall())
                .boundary("left", "wall")
                .boundary("right", "wall")
                .uniform("channel", "left", "right", n, 0.0, 34.0, (0.0, 0.0), "rect3", 0.0);
            let mut s = dam_break_config(name, 18.0, 15.0, 0.5, 0.1);
            s.gauges = vec![gauge("G1", "channel", 19.4), gauge("G2", "channel", 20.9)];
            b.finish(s)
        }
        "junction_dam_break" => {
            let dx = 34.0 / n as f64;
            let n1 = ((20.0 - dx) / dx).round() as usize;
            let x1 = n1 as f64 * dx;
            let n2 = n - n1 - 1;
            b.section("rect3", vec![[0.0, 3.0], [2.0, 3.0]])
                .condition("wall", wall())
                .boundary("left", "wall")
                .junction("J")
                .boundary("right", "wall")
                .uniform("upper", "left", "J", n1, 0.0, x1, (0.0, 0.0), "rect3", 0.0)
                .uniform("lower", "J", "right", n2, x1 + dx, 34.0 - x1 - dx, (0.0, 0.0), "rect3", 0.0);
            let mut s = dam_break_config(name, 18.0, 15.0, 0.5, 0.1);
            s.junction_model = Some(JunctionModel::Cuj1);
            s.gauges = vec![gauge("G1", "upper", 19.4), gauge("G2", "lower", 20.9)];
            b.finish(s)
        }
        "loop_subcritical" | "loop_supercritical" => {
            let dx = 34.0 / n as f64;
            let cells = |len: f64| (len / dx).round().max(1.0) as usize;
            let m1_end = 5.0 - dx;
            let m2_start = 13.0;
            let branch = (m2_start - dx) - 5.0;
            b.section("w3", vec![[0.0, 3.0], [2.0, 3.0]])
                .section("w2", vec![[0.0, 2.0], [2.0, 2.0]])
                .section("w1", vec![[0.0, 1.0], [2.0, 1.0]])
                .condition("wall", wall())
                .boundary("left", "wall")
                .junction("J1")
                .junction("J2")
                .boundary("right", "wall")
                .uniform("M1", "left", "J1", cells(m1_end + 15.0), -15.0, m1_end + 15.0, (0.0, 0.0), "w3", 0.0)
                .uniform("B", "J1", "J2", cells(branch), 5.0, branch, (0.0, 0.0), "w2", 0.0)
                .uniform("C", "J1", "J2", cells(branch), 5.0, branch, (0.0, 0.0), "w1", 0.0)
                .uniform("M2", "J2", "right", cells(19.0 - m2_start), m2_start, 19.0 - m2_start, (0.0, 0.0), "w3", 0.0);
            let up = if name == "loop_subcritical" { 0.5 } else { 1.0 };
            let mut s = dam_break_config(name, 20.0, 0.0, up, 0.1);
            s.junction_model = Some(if name == "loop_subcritical" {
                JunctionModel::Cuj1
            } else {
                JunctionModel::Cuj2
            });
            let mid = 5.0 + 0.5 * branch;
            s.gauges = vec![
                gauge("G1", "M1", 3.0),
                gauge("G2", "B", mid),
                gauge("G3", "C", mid),
                gauge("G4", "M2", 16.0),
            ];
            b.finish(s)
        }
        "dry_network" | "network_lake_at_rest" => {
            let scale = n as f64 / 650.0;
            let cells = |len: f64| ((len / 0.2) * scale).round().max(1.0) as usize;
            b.section("w01", vec![[0.0, 0.1], [1.0, 0.1]])
                .section("w02", vec![[0.0, 0.2], [1.0, 0.2]]);
            if name == "dry_network" {
                b.condition("A", BoundaryCondition::Wall {
                    source: Some(pulses(&[(0.002, 1.0, 60.0)])),
                })
                .condition("E", BoundaryCondition::Wall {
                    source: Some(pulses(&[(0.0015, 1.0, 30.0), (0.01, 150.0, 60.0)])),
                })
                .condition("H", BoundaryCondition::Wall {
                    source: Some(pulses(&[(0.0015, 50.0, 80.0)])),
                })
                .condition("D", BoundaryCondition::Outflow);
            } else {
                b.condition("A", wall()).condition("E", wall()).condition("H", wall()).condition("D", wall());
            }
            b.boundary("A", "A")
                .boundary("E", "E")
                .boundary("H", "H")
                .boundary("D", "D")
                .junction("B")
                .junction("C")
                .junction("F")
                .junction("G");
            let table: [(&str, f64, &str, f64, f64); 9] = [
                ("AB", 10.0, "w01", 0.25, 0.20),
                ("BC", 20.0, "w01", 0.20, 0.10),
                ("CD", 10.0, "w01", 0.10, 0.0),
                ("EF", 20.0, "w02", 0.35, 0.20),
                ("FB", 15.0, "w02", 0.25, 0.20),
                ("FC", 15.0, "w02", 0.30, 0.10),
                ("HG", 10.0, "w02", 0.35, 0.30),
                ("GB", 10.0, "w02", 0.30, 0.20),
                ("GC", 20.0, "w02", 0.30, 0.10),
            ];
            for (id, len, sec, up, down) in table {
                let (from, to) = (&id[0..1], &id[1..2]);
                b.uniform(id, from, to, cells(len), 0.0, len, (up, down), sec, 0.01);
            }
            let mut s = if name == "dry_network" {
                ScenarioConfig::new(name, 600.0, InitialCondition::LakeAtRest { level: -1.0 })
            } else {
                ScenarioConfig::new(name, 20.0, InitialCondition::LakeAtRest { level: 0.27 })
            };
            s.cfl = Some(0.9);
            s.epsilon = Some(1e-20);
            s.junction_model = Some(JunctionModel::Cuj2);
            s.output_interval = Some(0.5);
            s.gauges = ["B", "C", "F", "G"].iter().map(|j| junction_gauge(j)).collect();
            b.finish(s)
        }
        _ => return Err(format!("unknown preset '{name}'")),
    };
    Ok(file)
}

fn dam_break_config(name: &str, end: f64, x_dam: f64, up: f64, down: f64) -> ScenarioConfig {
    let mut s = ScenarioConfig::new(
        name,
        end,
        InitialCondition::DamBreak {
            x_dam,
            level_upstream: up,
            level_downstream: down,
        },
    );
    s.dt_max = Some(0.01);
    s.output_interval = Some(0.05);
    s.snapshots = vec![5.0, end];
    s
}

/// All presets at their default resolution, keyed by name.
pub fn all() -> BTreeMap<&'static str, ScenarioFile> {
    NAMES.iter().map(|&n| (n, build(n, None).expect("preset builds"))).collect()
}
