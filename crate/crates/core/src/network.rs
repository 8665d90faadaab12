//! Channel network: links of ordered cells joined at junction and boundary nodes.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{BoundaryCondition, Hydrograph};
use crate::geometry::{CrossSection, FaceGeometry, GeometryError};
use crate::junction::JunctionModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("duplicate {kind} id '{id}'")]
    DuplicateId { kind: &'static str, id: String },
    #[error("link '{link}': {end} node '{node}' does not exist")]
    DanglingLinkEnd { link: String, end: &'static str, node: String },
    #[error("link '{link}' has no cells")]
    EmptyLink { link: String },
    #[error("link '{link}': face {index} does not increase in x")]
    NonMonotoneFaces { link: String, index: usize },
    #[error("link '{link}': unknown cross-section '{name}'")]
    UnknownCrossSection { link: String, name: String },
    #[error("link '{link}': {reason}")]
    InvalidLink { link: String, reason: String },
    #[error(transparent)]
    CrossSection(#[from] GeometryError),
    #[error("boundary node '{node}' must attach exactly one link end, found {count}")]
    BoundaryArity { node: String, count: usize },
    #[error("boundary node '{node}': unknown boundary condition '{condition}'")]
    UnknownCondition { node: String, condition: String },
    #[error("boundary condition '{id}': {reason}")]
    InvalidCondition { id: String, reason: String },
    #[error("junction '{node}' must join at least 2 link ends, found {count}")]
    JunctionArity { node: String, count: usize },
    #[error("junction '{node}': stub for link '{link}': {reason}")]
    InvalidStub { node: String, link: String, reason: String },
}

/// Serialized network description.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub nodes: Vec<NodeConfig>,
    pub links: Vec<LinkConfig>,
    pub cross_sections: BTreeMap<String, Vec<[f64; 2]>>,
    #[serde(default)]
    pub boundary_conditions: BTreeMap<String, BoundaryCondition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeConfig {
    Junction {
        id: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        stubs: Vec<StubConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lateral_inflow: Option<Hydrograph>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        junction_model: Option<JunctionModel>,
    },
    Boundary {
        id: String,
        condition: String,
    },
}

impl NodeConfig {
    pub fn id(&self) -> &str {
        match self {
            NodeConfig::Junction { id, .. } | NodeConfig::Boundary { id, .. } => id,
        }
    }
}

/// Junction control-volume segment next to one link end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubConfig {
    pub link: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_section: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub manning_n: ManningConfig,
    /// Cell faces as `(x, bed, cross_section)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faces: Option<Vec<(f64, f64, String)>>,
    /// Prismatic link with a linear bed, as an alternative to `faces`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<UniformLink>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManningConfig {
    Uniform(f64),
    PerCell(Vec<f64>),
}

impl Default for ManningConfig {
    fn default() -> Self {
        ManningConfig::Uniform(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformLink {
    pub cells: usize,
    #[serde(default)]
    pub x0: f64,
    pub length: f64,
    pub bed_upstream: f64,
    pub bed_downstream: f64,
    pub cross_section: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkEnd {
    Upstream,
    Downstream,
}

/// What a link end is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attachment {
    Junction { junction: usize, stub: usize },
    Boundary { boundary: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// `n + 1` faces bounding `n` cells.
    pub faces: Vec<FaceGeometry>,
    pub manning: Vec<f64>,
    pub upstream: Attachment,
    pub downstream: Attachment,
}

/// Borrowed view of one cell.
#[derive(Clone, Copy, Debug)]
pub struct Cell<'a> {
    pub left: &'a FaceGeometry,
    pub right: &'a FaceGeometry,
    pub dx: f64,
    pub manning_n: f64,
}

impl Cell<'_> {
    pub fn center(&self) -> f64 {
        0.5 * (self.left.x + self.right.x)
    }
}

impl Link {
    pub fn cell_count(&self) -> usize {
        self.faces.len() - 1
    }

    pub fn cell(&self, j: usize) -> Cell<'_> {
        Cell {
            left: &self.faces[j],
            right: &self.faces[j + 1],
            dx: self.faces[j + 1].x - self.faces[j].x,
            manning_n: self.manning[j],
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell<'_>> {
        (0..self.cell_count()).map(move |j| self.cell(j))
    }

    pub fn attachment(&self, end: LinkEnd) -> Attachment {
        match end {
            LinkEnd::Upstream => self.upstream,
            LinkEnd::Downstream => self.downstream,
        }
    }

    /// Index of the cell containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let n = self.cell_count();
        if x < self.faces[0].x || x > self.faces[n].x {
            return None;
        }
        Some(self.faces.partition_point(|f| f.x <= x).saturating_sub(1).min(n - 1))
    }

    pub fn length(&self) -> f64 {
        self.faces[self.cell_count()].x - self.faces[0].x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StubRole {
    /// Link flows into the junction (its downstream end is attached).
    Inflow,
    /// Link flows out of the junction (its upstream end is attached).
    Outflow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stub {
    pub link: usize,
    pub role: StubRole,
    /// Face at the junction end of the stub.
    pub face: FaceGeometry,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Junction {
    pub node: usize,
    pub id: String,
    pub stubs: Vec<Stub>,
    pub lateral_inflow: Option<Hydrograph>,
    pub model: Option<JunctionModel>,
}

impl Junction {
    pub fn total_stub_length(&self) -> f64 {
        self.stubs.iter().map(|s| s.length).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Boundary {
    pub node: usize,
    pub id: String,
    pub link: usize,
    pub end: LinkEnd,
    pub condition_id: String,
    pub condition: BoundaryCondition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Junction(usize),
    Boundary(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub links: Vec<Link>,
    pub nodes: Vec<Node>,
    pub junctions: Vec<Junction>,
    pub boundaries: Vec<Boundary>,
    sections: BTreeMap<String, Arc<CrossSection>>,
}

impl Network {
    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn junction_index(&self, id: &str) -> Option<usize> {
        self.junctions.iter().position(|j| j.id == id)
    }

    pub fn cell_count(&self) -> usize {
        self.links.iter().map(Link::cell_count).sum()
    }

    pub fn sections(&self) -> &BTreeMap<String, Arc<CrossSection>> {
        &self.sections
    }

    /// Whether every link can be reached from some boundary node.
    pub fn reachable_from_boundaries(&self) -> bool {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for l in &self.links {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = self.boundaries.iter().map(|b| b.node).collect();
        for &n in &queue {
            seen[n] = true;
        }
        while let Some(n) = queue.pop_front() {
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        self.links.iter().all(|l| seen[l.from] && seen[l.to])
    }

    /// Serializable description; faces and stubs are written out explicitly.
    pub fn to_config(&self) -> NetworkConfig {
        let cross_sections = self
            .sections
            .iter()
            .map(|(k, s)| (k.clone(), s.points().iter().map(|&(h, w)| [h, w]).collect()))
            .collect();
        let links = self
            .links
            .iter()
            .map(|l| LinkConfig {
                id: l.id.clone(),
                from: self.nodes[l.from].id.clone(),
                to: self.nodes[l.to].id.clone(),
                manning_n: if l.manning.iter().all(|&n| n == l.manning[0]) {
                    ManningConfig::Uniform(l.manning[0])
                } else {
                    ManningConfig::PerCell(l.manning.clone())
                },
                faces: Some(
                    l.faces
                        .iter()
                        .map(|f| (f.x, f.bed, f.section.name().to_string()))
                        .collect(),
                ),
                uniform: None,
            })
            .collect();
        let mut boundary_conditions = BTreeMap::new();
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::Junction(k) => {
                    let j = &self.junctions[k];
                    NodeConfig::Junction {
                        id: j.id.clone(),
                        stubs: j
                            .stubs
                            .iter()
                            .map(|s| StubConfig {
                                link: self.links[s.link].id.clone(),
                                length: Some(s.length),
                                bed: Some(s.face.bed),
                                cross_section: Some(s.face.section.name().to_string()),
                            })
                            .collect(),
                        lateral_inflow: j.lateral_inflow.clone(),
                        junction_model: j.model,
                    }
                }
                NodeKind::Boundary(k) => {
                    let b = &self.boundaries[k];
                    boundary_conditions.insert(b.condition_id.clone(), b.condition.clone());
                    NodeConfig::Boundary {
                        id: b.id.clone(),
                        condition: b.condition_id.clone(),
                    }
                }
            })
            .collect();
        NetworkConfig {
            nodes,
            links,
            cross_sections,
            boundary_conditions,
        }
    }
}

/// Fill in every junction stub that the configuration leaves implicit: length
/// half the adjacent cell, junction-end face equal to the adjacent terminal face.
pub fn junction_stub_defaults(config: &NetworkConfig) -> Result<NetworkConfig, NetworkError> {
    let mut out = config.clone();
    let link_faces: HashMap<&str, (Vec<(f64, f64, String)>, &str, &str)> = config
        .links
        .iter()
        .map(|l| Ok((l.id.as_str(), (link_faces(l)?, l.from.as_str(), l.to.as_str()))))
        .collect::<Result<_, NetworkError>>()?;
    for node in &mut out.nodes {
        let NodeConfig::Junction { id, stubs, .. } = node else { continue };
        let mut attached: Vec<&str> = Vec::new();
        for l in &config.links {
            if l.to == *id {
                attached.push(&l.id);
            }
            if l.from == *id && l.to != *id {
                attached.push(&l.id);
            }
        }
        for link in attached {
            let (faces, from, to) = &link_faces[link];
            if faces.len() < 2 {
                continue;
            }
            // A link joined to the junction at its downstream end sees the
            // stub after its last face.
            let terminal = if *to == id.as_str() {
                let n = faces.len();
                (&faces[n - 1], faces[n - 1].0 - faces[n - 2].0)
            } else {
                debug_assert_eq!(*from, id.as_str());
                (&faces[0], faces[1].0 - faces[0].0)
            };
            let entry = match stubs.iter_mut().find(|s| s.link == link) {
                Some(s) => s,
                None => {
                    stubs.push(StubConfig {
                        link: link.to_string(),
                        length: None,
                        bed: None,
                        cross_section: None,
                    });
                    stubs.last_mut().unwrap()
                }
            };
            entry.length.get_or_insert(0.5 * terminal.1);
            entry.bed.get_or_insert(terminal.0 .1);
            entry.cross_section.get_or_insert_with(|| terminal.0 .2.clone());
        }
    }
    Ok(out)
}

fn link_faces(l: &LinkConfig) -> Result<Vec<(f64, f64, String)>, NetworkError> {
    match (&l.faces, &l.uniform) {
        (Some(f), None) => Ok(f.clone()),
        (None, Some(u)) => {
            if u.cells == 0 {
                return Err(NetworkError::EmptyLink { link: l.id.clone() });
            }
            if !(u.length > 0.0) {
                return Err(NetworkError::InvalidLink {
                    link: l.id.clone(),
                    reason: format!("uniform length must be positive, got {}", u.length),
                });
            }
            let n = u.cells as f64;
            Ok((0..=u.cells)
                .map(|i| {
                    let t = i as f64 / n;
                    (
                        u.x0 + u.length * t,
                        u.bed_upstream + (u.bed_downstream - u.bed_upstream) * t,
                        u.cross_section.clone(),
                    )
                })
                .collect())
        }
        _ => Err(NetworkError::InvalidLink {
            link: l.id.clone(),
            reason: "exactly one of 'faces' or 'uniform' is required".into(),
        }),
    }
}

/// Validate a configuration and build the immutable network.
pub fn build_network(config: &NetworkConfig) -> Result<Network, NetworkError> {
    let config = junction_stub_defaults(config)?;
    let mut sections = BTreeMap::new();
    for (name, pts) in &config.cross_sections {
        let pts: Vec<(f64, f64)> = pts.iter().map(|p| (p[0], p[1])).collect();
        sections.insert(name.clone(), Arc::new(CrossSection::new(name.clone(), &pts)?));
    }
    for (id, bc) in &config.boundary_conditions {
        bc.validate().map_err(|reason| NetworkError::InvalidCondition {
            id: id.clone(),
            reason,
        })?;
    }

    let mut node_ids = HashMap::new();
    for (k, n) in config.nodes.iter().enumerate() {
        if node_ids.insert(n.id().to_string(), k).is_some() {
            return Err(NetworkError::DuplicateId {
                kind: "node",
                id: n.id().to_string(),
            });
        }
    }
    let mut link_ids = HashSet::new();
    let mut links = Vec::with_capacity(config.links.len());
    for l in &config.links {
        if !link_ids.insert(l.id.clone()) {
            return Err(NetworkError::DuplicateId {
                kind: "link",
                id: l.id.clone(),
            });
        }
        let from = *node_ids.get(&l.from).ok_or_else(|| NetworkError::DanglingLinkEnd {
            link: l.id.clone(),
            end: "upstream",
            node: l.from.clone(),
        })?;
        let to = *node_ids.get(&l.to).ok_or_else(|| NetworkError::DanglingLinkEnd {
            link: l.id.clone(),
            end: "downstream",
            node: l.to.clone(),
        })?;
        let raw = link_faces(l)?;
        if raw.len() < 2 {
            return Err(NetworkError::EmptyLink { link: l.id.clone() });
        }
        let mut faces = Vec::with_capacity(raw.len());
        for (i, (x, bed, name)) in raw.iter().enumerate() {
            let section = sections.get(name).ok_or_else(|| NetworkError::UnknownCrossSection {
                link: l.id.clone(),
                name: name.clone(),
            })?;
            if !x.is_finite() || !bed.is_finite() {
                return Err(NetworkError::InvalidLink {
                    link: l.id.clone(),
                    reason: format!("face {i} is not finite"),
                });
            }
            if i > 0 && *x <= raw[i - 1].0 {
                return Err(NetworkError::NonMonotoneFaces {
                    link: l.id.clone(),
                    index: i,
                });
            }
            faces.push(FaceGeometry::new(*x, *bed, Arc::clone(section)));
        }
        let n = faces.len() - 1;
        let manning = match &l.manning_n {
            ManningConfig::Uniform(v) => vec![*v; n],
            ManningConfig::PerCell(v) if v.len() == n => v.clone(),
            ManningConfig::PerCell(v) => {
                return Err(NetworkError::InvalidLink {
                    link: l.id.clone(),
                    reason: format!("{} Manning values for {n} cells", v.len()),
                })
            }
        };
        if let Some(bad) = manning.iter().find(|v| !(**v >= 0.0)) {
            return Err(NetworkError::InvalidLink {
                link: l.id.clone(),
                reason: format!("Manning coefficient {bad} is negative"),
            });
        }
        links.push(Link {
            id: l.id.clone(),
            from,
            to,
            faces,
            manning,
            upstream: Attachment::Boundary { boundary: usize::MAX },
            downstream: Attachment::Boundary { boundary: usize::MAX },
        });
    }

    let mut nodes = Vec::with_capacity(config.nodes.len());
    let mut junctions = Vec::new();
    let mut boundaries = Vec::new();
    for (k, node) in config.nodes.iter().enumerate() {
        let ends: Vec<(usize, LinkEnd)> = links
            .iter()
            .enumerate()
            .flat_map(|(li, l)| {
                let mut v = Vec::new();
                if l.to == k {
                    v.push((li, LinkEnd::Downstream));
                }
                if l.from == k {
                    v.push((li, LinkEnd::Upstream));
                }
                v
            })
            .collect();
        match node {
            NodeConfig::Boundary { id, condition } => {
                if ends.len() != 1 {
                    return Err(NetworkError::BoundaryArity {
                        node: id.clone(),
                        count: ends.len(),
                    });
                }
                let bc = config.boundary_conditions.get(condition).ok_or_else(|| {
                    NetworkError::UnknownCondition {
                        node: id.clone(),
                        condition: condition.clone(),
                    }
                })?;
                let (link, end) = ends[0];
                let b = boundaries.len();
                let att = Attachment::Boundary { boundary: b };
                match end {
                    LinkEnd::Upstream => links[link].upstream = att,
                    LinkEnd::Downstream => links[link].downstream = att,
                }
                boundaries.push(Boundary {
                    node: k,
                    id: id.clone(),
                    link,
                    end,
                    condition_id: condition.clone(),
                    condition: bc.clone(),
                });
                nodes.push(Node {
                    id: id.clone(),
                    kind: NodeKind::Boundary(b),
                });
            }
            NodeConfig::Junction {
                id,
                stubs,
                lateral_inflow,
                junction_model,
            } => {
                if ends.len() < 2 {
                    return Err(NetworkError::JunctionArity {
                        node: id.clone(),
                        count: ends.len(),
                    });
                }
                let jk = junctions.len();
                let mut jstubs = Vec::with_capacity(ends.len());
                for &(li, end) in &ends {
                    let link = &links[li];
                    let cfg = stubs.iter().find(|s| s.link == link.id).ok_or_else(|| {
                        NetworkError::InvalidStub {
                            node: id.clone(),
                            link: link.id.clone(),
                            reason: "missing stub".into(),
                        }
                    })?;
                    let bad = |reason: String| NetworkError::InvalidStub {
                        node: id.clone(),
                        link: link.id.clone(),
                        reason,
                    };
                    let length = cfg.length.unwrap_or(0.0);
                    if !(length > 0.0) || !length.is_finite() {
                        return Err(bad(format!("length must be positive, got {length}")));
                    }
                    let name = cfg.cross_section.clone().unwrap_or_default();
                    let section = sections
                        .get(&name)
                        .ok_or_else(|| bad(format!("unknown cross-section '{name}'")))?;
                    let bed = cfg.bed.unwrap_or(0.0);
                    let (role, x) = match end {
                        LinkEnd::Downstream => (StubRole::Inflow, link.faces[link.cell_count()].x + length),
                        LinkEnd::Upstream => (StubRole::Outflow, link.faces[0].x - length),
                    };
                    let att = Attachment::Junction {
                        junction: jk,
                        stub: jstubs.len(),
                    };
                    match end {
                        LinkEnd::Upstream => links[li].upstream = att,
                        LinkEnd::Downstream => links[li].downstream = att,
                    }
                    jstubs.push(Stub {
                        link: li,
                        role,
                        face: FaceGeometry::new(x, bed, Arc::clone(section)),
                        length,
                    });
                }
                if let Some(extra) = stubs
                    .iter()
                    .find(|s| ends.iter().all(|&(li, _)| links[li].id != s.link))
                {
                    return Err(NetworkError::InvalidStub {
                        node: id.clone(),
                        link: extra.link.clone(),
                        reason: "link is not attached to this junction".into(),
                    });
                }
                junctions.push(Junction {
                    node: k,
                    id: id.clone(),
                    stubs: jstubs,
                    lateral_inflow: lateral_inflow.clone(),
                    model: *junction_model,
                });
                nodes.push(Node {
                    id: id.clone(),
                    kind: NodeKind::Junction(jk),
                });
            }
        }
    }
    Ok(Network {
        links,
        nodes,
        junctions,
        boundaries,
        sections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cell() -> NetworkConfig {
        serde_json::from_str(
            r#"{
              "cross_sections": {"r": [[0,1],[1,1]]},
              "boundary_conditions": {"wall": {"kind": "wall"}},
              "nodes": [
                {"kind": "boundary", "id": "a", "condition": "wall"},
                {"kind": "boundary", "id": "b", "condition": "wall"}
              ],
              "links": [{"id": "L", "from": "a", "to": "b", "manning_n": 0.01,
                         "faces": [[0,0,"r"],[1,0,"r"],[2,0,"r"]]}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn single_link_is_valid() {
        let net = build_network(&two_cell()).unwrap();
        assert_eq!(net.links[0].cell_count(), 2);
        assert_eq!(net.boundaries.len(), 2);
        assert!(net.reachable_from_boundaries());
        assert_eq!(net.links[0].locate(1.5), Some(1));
        assert_eq!(net.links[0].locate(2.0), Some(1));
        assert_eq!(net.links[0].locate(2.5), None);
    }

    #[test]
    fn missing_node_names_the_link() {
        let mut c = two_cell();
        c.links[0].to = "zz".into();
        let e = build_network(&c).unwrap_err();
        assert!(matches!(&e, NetworkError::DanglingLinkEnd { link, .. } if link == "L"));
        assert!(e.to_string().contains("'L'"));
    }

    #[test]
    fn distinct_errors() {
        let mut c = two_cell();
        c.links[0].faces = Some(vec![(0.0, 0.0, "r".into())]);
        assert!(matches!(build_network(&c), Err(NetworkError::EmptyLink { .. })));
        let mut c = two_cell();
        c.cross_sections.insert("bad".into(), vec![[0.0, 1.0], [0.0, 2.0]]);
        assert!(matches!(build_network(&c), Err(NetworkError::CrossSection(_))));
        let mut c = two_cell();
        c.links.push(c.links[0].clone());
        assert!(matches!(build_network(&c), Err(NetworkError::DuplicateId { kind: "link", .. })));
        let mut c = two_cell();
        c.links[0].faces = Some(vec![(0.0, 0.0, "r".into()), (0.0, 0.0, "r".into())]);
        assert!(matches!(build_network(&c), Err(NetworkError::NonMonotoneFaces { .. })));
    }

    #[test]
    fn stub_defaults_and_round_trip() {
        let c: NetworkConfig = serde_json::from_str(
            r#"{
              "cross_sections": {"r": [[0,1],[1,1]]},
              "boundary_conditions": {"wall": {"kind": "wall"}},
              "nodes": [
                {"kind": "boundary", "id": "a", "condition": "wall"},
                {"kind": "junction", "id": "j", "stubs": [{"link": "L2", "length": 0.3}]},
                {"kind": "boundary", "id": "b", "condition": "wall"}
              ],
              "links": [
                {"id": "L1", "from": "a", "to": "j", "faces": [[0,0.5,"r"],[0.2,0.4,"r"]]},
                {"id": "L2", "from": "j", "to": "b", "uniform": {"cells": 4, "x0": 1, "length": 1,
                  "bed_upstream": 0.2, "bed_downstream": 0.1, "cross_section": "r"}}
              ]
            }"#,
        )
        .unwrap();
        let net = build_network(&c).unwrap();
        let j = &net.junctions[0];
        let s1 = j.stubs.iter().find(|s| s.link == 0).unwrap();
        assert!((s1.length - 0.1).abs() < 1e-15);
        assert_eq!(s1.role, StubRole::Inflow);
        assert_eq!(s1.face.bed, 0.4);
        let s2 = j.stubs.iter().find(|s| s.link == 1).unwrap();
        assert_eq!(s2.length, 0.3);
        assert_eq!(s2.role, StubRole::Outflow);
        assert_eq!(s2.face.bed, 0.2);
        let text = serde_json::to_string(&net.to_config()).unwrap();
        let again = build_network(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(net, again);
    }
}
