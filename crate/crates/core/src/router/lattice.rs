use serde::{Deserialize, Serialize};

use super::{Route, RouterError};
use crate::geo::{self, LatLon};
use crate::performance::Leg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airport {
    pub code: String,
    pub lat: f64,
    pub lon: f64,
}

impl Airport {
    pub fn new(code: impl Into<String>, lat: f64, lon: f64) -> Self {
        Self { code: code.into(), lat, lon }
    }

    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

/// Corridor discretisation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeSpec {
    /// Number of cross-sections between origin and destination.
    pub n_layers: usize,
    /// Lateral positions per cross-section; odd so the great circle is included.
    pub n_offsets: usize,
    /// Largest lateral displacement, degrees of arc.
    pub max_offset_deg: f64,
    /// Largest change of offset index between consecutive layers; `None` links
    /// every pair.
    pub lateral_reach: Option<usize>,
    /// Aircraft level indices available for cruise.
    pub levels: Vec<usize>,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self { n_layers: 8, n_offsets: 7, max_offset_deg: 3.0, lateral_reach: Some(1), levels: vec![0, 1, 2, 3, 4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    /// 0 for the origin, `n_layers + 1` for the destination.
    pub layer: usize,
    pub offset: usize,
}

impl Waypoint {
    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub leg: Leg,
    /// Where the leg samples the weather.
    pub midpoint: LatLon,
}

/// Layered waypoint corridor between two airports with a set of cruise levels.
///
/// Waypoints are stored in topological order: origin first, then layer by
/// layer, destination last. Ids are deterministic: the airport codes and
/// `L{layer}O{offset}` (two digits each) for the corridor points.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    waypoints: Vec<Waypoint>,
    levels: Vec<usize>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
}

pub fn build_lattice(origin: &Airport, destination: &Airport, spec: &LatticeSpec) -> Result<Lattice, RouterError> {
    if origin.code == destination.code {
        return Err(RouterError::InvalidLattice("origin and destination must differ".into()));
    }
    if spec.n_layers == 0 {
        return Err(RouterError::InvalidLattice("n_layers must be >= 1".into()));
    }
    if spec.n_offsets == 0 || spec.n_offsets.is_multiple_of(2) {
        return Err(RouterError::InvalidLattice("n_offsets must be odd and >= 1".into()));
    }
    if !(spec.max_offset_deg >= 0.0 && spec.max_offset_deg.is_finite()) {
        return Err(RouterError::InvalidLattice("max_offset_deg must be finite and >= 0".into()));
    }
    if spec.levels.is_empty() || spec.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RouterError::InvalidLattice("levels must be non-empty and strictly increasing".into()));
    }
    let (a, b) = (origin.position(), destination.position());
    let angle = geo::central_angle(a, b);
    if angle < 1e-6 {
        return Err(RouterError::DegenerateGeometry("origin and destination coincide".into()));
    }
    if std::f64::consts::PI - angle < 1e-6 {
        return Err(RouterError::DegenerateGeometry("origin and destination are antipodal".into()));
    }

    let mut waypoints = vec![Waypoint { id: origin.code.clone(), lat: a.lat, lon: a.lon, layer: 0, offset: 0 }];
    for layer in 1..=spec.n_layers {
        let p = geo::intermediate(a, b, layer as f64 / (spec.n_layers + 1) as f64);
        let course = geo::initial_course_deg(p, b);
        for offset in 0..spec.n_offsets {
            // offset 0 is furthest right of track, the middle one is on the great circle
            let lateral = if spec.n_offsets == 1 {
                0.0
            } else {
                spec.max_offset_deg * (2.0 * offset as f64 / (spec.n_offsets - 1) as f64 - 1.0)
            };
            let pos = if lateral == 0.0 {
                p
            } else if lateral > 0.0 {
                geo::destination(p, course - 90.0, lateral)
            } else {
                geo::destination(p, course + 90.0, -lateral)
            };
            waypoints.push(Waypoint { id: format!("L{layer:02}O{offset:02}"), lat: pos.lat, lon: pos.lon, layer, offset });
        }
    }
    waypoints.push(Waypoint { id: destination.code.clone(), lat: b.lat, lon: b.lon, layer: spec.n_layers + 1, offset: 0 });

    let reach = spec.lateral_reach.unwrap_or(usize::MAX);
    let layer_nodes = |layer: usize| -> std::ops::Range<usize> {
        if layer == 0 {
            0..1
        } else if layer > spec.n_layers {
            let last = waypoints.len() - 1;
            last..last + 1
        } else {
            let start = 1 + (layer - 1) * spec.n_offsets;
            start..start + spec.n_offsets
        }
    };
    let mut edges = Vec::new();
    for layer in 0..=spec.n_layers {
        for from in layer_nodes(layer) {
            for to in layer_nodes(layer + 1) {
                let interior = layer >= 1 && layer < spec.n_layers;
                if interior && waypoints[from].offset.abs_diff(waypoints[to].offset) > reach {
                    continue;
                }
                edges.push(make_edge(&waypoints, from, to));
            }
        }
    }
    Lattice::from_parts(waypoints, spec.levels.clone(), edges)
}

fn make_edge(waypoints: &[Waypoint], from: usize, to: usize) -> Edge {
    let (p, q) = (waypoints[from].position(), waypoints[to].position());
    let midpoint = geo::intermediate(p, q, 0.5);
    Edge {
        from,
        to,
        leg: Leg { length_m: geo::distance_m(p, q), course_deg: geo::initial_course_deg(midpoint, q) },
        midpoint,
    }
}

impl Lattice {
    /// Assembles a lattice from explicit parts, checking the corridor
    /// invariants: edges advance in waypoint order, every waypoint lies on
    /// some origin-to-destination path.
    pub fn from_parts(waypoints: Vec<Waypoint>, levels: Vec<usize>, edges: Vec<Edge>) -> Result<Self, RouterError> {
        let n = waypoints.len();
        if n < 2 {
            return Err(RouterError::InvalidLattice("need origin and destination".into()));
        }
        if levels.is_empty() {
            return Err(RouterError::InvalidLattice("no cruise levels".into()));
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut has_in = vec![false; n];
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n || e.to >= n || e.to <= e.from {
                return Err(RouterError::InvalidLattice(format!("edge {}->{} does not advance", e.from, e.to)));
            }
            if !(e.leg.length_m > 0.0) {
                return Err(RouterError::InvalidLattice(format!("edge {}->{} has zero length", e.from, e.to)));
            }
            out_edges[e.from].push(i);
            has_in[e.to] = true;
        }
        let mut reach = vec![false; n];
        reach[0] = true;
        for i in 0..n {
            if reach[i] {
                for &e in &out_edges[i] {
                    reach[edges[e].to] = true;
                }
            }
        }
        let mut coreach = vec![false; n];
        coreach[n - 1] = true;
        for i in (0..n).rev() {
            if out_edges[i].iter().any(|&e| coreach[edges[e].to]) {
                coreach[i] = true;
            }
        }
        if let Some(bad) = (0..n).find(|&i| !(reach[i] && coreach[i])) {
            return Err(RouterError::InvalidLattice(format!("waypoint {} is not on any origin-destination path", waypoints[bad].id)));
        }
        let mut ids: Vec<&str> = waypoints.iter().map(|w| w.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(RouterError::InvalidLattice("duplicate waypoint ids".into()));
        }
        Ok(Self { waypoints, levels, edges, out_edges })
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn origin(&self) -> usize {
        0
    }

    pub fn destination(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn find_edge(&self, from: usize, to: usize) -> Option<usize> {
        self.out_edges[from].iter().copied().find(|&e| self.edges[e].to == to)
    }

    pub fn waypoint_index(&self, id: &str) -> Option<usize> {
        self.waypoints.iter().position(|w| w.id == id)
    }

    /// Edge indices along `route`, or `UnknownRoute` if it is not a lattice path.
    pub fn route_edges(&self, route: &Route) -> Result<Vec<usize>, RouterError> {
        let unknown = || RouterError::UnknownRoute(route.route_key.clone());
        let nodes = route
            .waypoint_ids
            .iter()
            .map(|id| self.waypoint_index(id).ok_or_else(unknown))
            .collect::<Result<Vec<_>, _>>()?;
        if nodes.first() != Some(&self.origin()) || nodes.last() != Some(&self.destination()) {
            return Err(unknown());
        }
        nodes.windows(2).map(|w| self.find_edge(w[0], w[1]).ok_or_else(unknown)).collect()
    }

    pub fn route_from_nodes(&self, nodes: &[usize]) -> Route {
        Route::new(nodes.iter().map(|&i| self.waypoints[i].id.clone()).collect())
    }

    /// Latitude/longitude of each waypoint on the route.
    pub fn polyline(&self, route: &Route) -> Result<Vec<[f64; 2]>, RouterError> {
        route
            .waypoint_ids
            .iter()
            .map(|id| {
                self.waypoint_index(id)
                    .map(|i| [self.waypoints[i].lat, self.waypoints[i].lon])
                    .ok_or_else(|| RouterError::UnknownRoute(route.route_key.clone()))
            })
            .collect()
    }

    /// Every origin-to-destination node sequence, depth first.
    pub fn all_paths(&self) -> Vec<Vec<usize>> {
        fn walk(l: &Lattice, node: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            stack.push(node);
            if node == l.destination() {
                out.push(stack.clone());
            } else {
                for &e in l.out_edges(node) {
                    walk(l, l.edges[e].to, stack, out);
                }
            }
            stack.pop();
        }
        let mut out = Vec::new();
        walk(self, self.origin(), &mut Vec::new(), &mut out);
        out
    }
}
