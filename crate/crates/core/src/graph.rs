//! Per-edge Gillespie simulation on an arbitrary finite graph.
//!
//! Every red-white edge fires at rate `lambda`, every red-blue edge at rate
//! 1 and every red vertex converts at rate `alpha`. The active edges of each
//! kind and the red vertices are kept in [`IndexedSet`]s and updated in
//! O(degree) per event, so a uniform member of any class can be drawn in
//! O(1).

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use rand::RngCore;

use crate::chain::{initial_state, EventKind, FixationResult, InitMode, Jump, Params, PopulationState, Trajectory};
use crate::error::{Error, Result};
use crate::indexed_set::IndexedSet;
use crate::rng::{exponential, uniform_open01};
use crate::scalar::Real;

/// Undirected simple connected graph.
#[derive(Clone, Debug)]
pub struct Graph {
    /// `(neighbour, edge id)` pairs for every vertex.
    adjacency: Vec<Vec<(u32, u32)>>,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    /// Builds a graph from undirected edges. Duplicate edges (in either
    /// orientation) are merged; self-loops, out-of-range endpoints and
    /// disconnected graphs are rejected.
    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if vertex_count < 2 {
            return Err(Error::InvalidGraph("need at least two vertices".into()));
        }
        if vertex_count >= u32::MAX as usize {
            return Err(Error::InvalidGraph("too many vertices".into()));
        }
        let mut unique = BTreeSet::new();
        for (u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {vertex_count} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            unique.insert((u.min(v) as u32, u.max(v) as u32));
        }
        let edges: Vec<(u32, u32)> = unique.into_iter().collect();
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adjacency[u as usize].push((v, id as u32));
            adjacency[v as usize].push((u, id as u32));
        }
        let graph = Self { adjacency, edges };
        graph.check_symmetric()?;
        graph.check_connected()?;
        Ok(graph)
    }

    /// Parses an edge list: one `u v` pair of 0-based indices per line.
    /// Blank lines and lines starting with `#` are ignored. The vertex count
    /// is one more than the largest index.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_index = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::InvalidGraph(format!("line {}: expected `u v`, got `{line}`", lineno + 1));
            let mut fields = line.split_whitespace();
            let u: usize = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let v: usize = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if fields.next().is_some() {
                return Err(bad());
            }
            max_index = max_index.max(u).max(v);
            edges.push((u, v));
        }
        if edges.is_empty() {
            return Err(Error::InvalidGraph("edge list is empty".into()));
        }
        Self::from_edges(max_index + 1, edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(u, v)| format!("{u} {v}\n")).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(u, _)| u as usize)
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        let (u, v) = self.edges[id];
        (u as usize, v as usize)
    }

    fn check_symmetric(&self) -> Result<()> {
        for (v, nbrs) in self.adjacency.iter().enumerate() {
            for &(u, id) in nbrs {
                let back = self.adjacency[u as usize].iter().any(|&(x, e)| x as usize == v && e == id);
                if !back {
                    return Err(Error::InvalidGraph(format!("asymmetric adjacency at ({v}, {u})")));
                }
            }
        }
        Ok(())
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.vertex_count()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    reached += 1;
                    queue.push_back(u);
                }
            }
        }
        if reached != self.vertex_count() {
            return Err(Error::InvalidGraph(format!(
                "graph is disconnected: {reached} of {} vertices reachable from 0",
                self.vertex_count()
            )));
        }
        Ok(())
    }
}

/// The complete graph `K_m`.
pub fn complete_graph(m: usize) -> Result<Graph> {
    if m < 2 {
        return Err(Error::InvalidGraph(format!("K_m needs m >= 2, got {m}")));
    }
    let edges = (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v)));
    Graph::from_edges(m, edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexColor {
    White,
    Red,
    Blue,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EdgeClass {
    RedWhite,
    RedBlue,
}

fn classify(a: VertexColor, b: VertexColor) -> Option<EdgeClass> {
    use VertexColor::*;
    match (a, b) {
        (Red, White) | (White, Red) => Some(EdgeClass::RedWhite),
        (Red, Blue) | (Blue, Red) => Some(EdgeClass::RedBlue),
        _ => None,
    }
}

/// Vertex colors plus the active-rate bookkeeping.
#[derive(Clone, Debug)]
pub struct GraphState {
    colors: Vec<VertexColor>,
    red_white: IndexedSet,
    red_blue: IndexedSet,
    red: IndexedSet,
    blue_count: usize,
}

impl GraphState {
    /// Vertex 0 starts red; in Kortchemski mode vertex 1 starts blue.
    pub fn new(graph: &Graph, init_mode: InitMode) -> Self {
        let mut state = Self {
            colors: vec![VertexColor::White; graph.vertex_count()],
            red_white: IndexedSet::new(graph.edge_count()),
            red_blue: IndexedSet::new(graph.edge_count()),
            red: IndexedSet::new(graph.vertex_count()),
            blue_count: 0,
        };
        state.recolor(graph, 0, VertexColor::Red);
        if init_mode == InitMode::Kortchemski {
            state.recolor(graph, 1, VertexColor::Blue);
        }
        state
    }

    /// Builds a state from an explicit coloring.
    pub fn from_colors(graph: &Graph, colors: &[VertexColor]) -> Result<Self> {
        if colors.len() != graph.vertex_count() {
            return Err(Error::InvalidInput("coloring length does not match graph".into()));
        }
        let mut state = Self {
            colors: vec![VertexColor::White; graph.vertex_count()],
            red_white: IndexedSet::new(graph.edge_count()),
            red_blue: IndexedSet::new(graph.edge_count()),
            red: IndexedSet::new(graph.vertex_count()),
            blue_count: 0,
        };
        for (v, &c) in colors.iter().enumerate() {
            if c != VertexColor::White {
                state.recolor(graph, v, c);
            }
        }
        Ok(state)
    }

    pub fn colors(&self) -> &[VertexColor] {
        &self.colors
    }

    pub fn red_white_edges(&self) -> usize {
        self.red_white.len()
    }

    pub fn red_blue_edges(&self) -> usize {
        self.red_blue.len()
    }

    pub fn red_vertices(&self) -> usize {
        self.red.len()
    }

    pub fn population(&self) -> PopulationState {
        let r = self.red.len() as u64;
        let b = self.blue_count as u64;
        PopulationState::new(r, b, self.colors.len() as u64 - r - b)
    }

    fn set_for(&mut self, class: EdgeClass) -> &mut IndexedSet {
        match class {
            EdgeClass::RedWhite => &mut self.red_white,
            EdgeClass::RedBlue => &mut self.red_blue,
        }
    }

    fn recolor(&mut self, graph: &Graph, v: usize, color: VertexColor) {
        let old = self.colors[v];
        debug_assert!(old != VertexColor::Blue, "blue is absorbing");
        for &(u, id) in &graph.adjacency[v] {
            let other = self.colors[u as usize];
            let before = classify(old, other);
            let after = classify(color, other);
            if before != after {
                if let Some(class) = before {
                    self.set_for(class).remove(id as usize);
                }
                if let Some(class) = after {
                    self.set_for(class).insert(id as usize);
                }
            }
        }
        match (old, color) {
            (VertexColor::Red, _) => {
                self.red.remove(v);
            }
            (_, VertexColor::Red) => {
                self.red.insert(v);
            }
            _ => {}
        }
        if color == VertexColor::Blue {
            self.blue_count += 1;
        }
        self.colors[v] = color;
    }

    /// Recounts every class from scratch and compares with the bookkeeping.
    pub fn bookkeeping_consistent(&self, graph: &Graph) -> bool {
        let mut rw = 0;
        let mut rb = 0;
        for (id, &(u, v)) in graph.edges.iter().enumerate() {
            let class = classify(self.colors[u as usize], self.colors[v as usize]);
            if self.red_white.contains(id) != (class == Some(EdgeClass::RedWhite))
                || self.red_blue.contains(id) != (class == Some(EdgeClass::RedBlue))
            {
                return false;
            }
            match class {
                Some(EdgeClass::RedWhite) => rw += 1,
                Some(EdgeClass::RedBlue) => rb += 1,
                None => {}
            }
        }
        let reds = self.colors.iter().filter(|&&c| c == VertexColor::Red).count();
        let blues = self.colors.iter().filter(|&&c| c == VertexColor::Blue).count();
        rw == self.red_white.len()
            && rb == self.red_blue.len()
            && reds == self.red.len()
            && blues == self.blue_count
            && self.red.iter().all(|v| self.colors[v] == VertexColor::Red)
    }
}

/// One Gillespie event. The class is chosen proportionally to
/// `lambda * #RW`, `#RB` and `alpha * #R`; the edge or vertex inside the
/// class uniformly.
pub fn graph_step<T: Real, R: RngCore + ?Sized>(
    state: &mut GraphState,
    graph: &Graph,
    params: &Params<T>,
    rng: &mut R,
) -> Result<(EventKind, T)> {
    if state.red.is_empty() {
        return Err(Error::NoTransition);
    }
    let grow = *params.lambda() * T::from_count(state.red_white.len() as u64);
    let chase = T::from_count(state.red_blue.len() as u64);
    let convert = *params.alpha() * T::from_count(state.red.len() as u64);
    let total = grow + chase + convert;
    if !(total > T::zero()) {
        return Err(Error::InvalidInput("total event rate is zero".into()));
    }
    let u = T::lit(uniform_open01(rng)) * total;
    let event = if u < grow {
        let (a, b) = graph.edge(state.red_white.sample(rng).expect("positive rate"));
        let white = if state.colors[a] == VertexColor::White { a } else { b };
        state.recolor(graph, white, VertexColor::Red);
        EventKind::Grow
    } else if u < grow + chase {
        let (a, b) = graph.edge(state.red_blue.sample(rng).expect("positive rate"));
        let red = if state.colors[a] == VertexColor::Red { a } else { b };
        state.recolor(graph, red, VertexColor::Blue);
        EventKind::Chase
    } else {
        let red = state.red.sample(rng).expect("red vertex present");
        state.recolor(graph, red, VertexColor::Blue);
        EventKind::Convert
    };
    debug_assert!(state.bookkeeping_consistent(graph));
    Ok((event, exponential(rng, total)))
}

fn simulate_graph<T, R, F>(graph: &Graph, params: &Params<T>, rng: &mut R, mut on_jump: F) -> Result<FixationResult<T>>
where
    T: Real,
    R: RngCore + ?Sized,
    F: FnMut(T, PopulationState, EventKind),
{
    if graph.vertex_count() as u64 != params.total_vertices() {
        return Err(Error::InvalidParams(format!(
            "graph has {} vertices but the parameters need {}",
            graph.vertex_count(),
            params.total_vertices()
        )));
    }
    let mut state = GraphState::new(graph, params.init_mode());
    let mut time = T::zero();
    let mut jumps = 0u64;
    let mut conversions = 0u64;
    while state.red_vertices() > 0 {
        let (event, holding) = graph_step(&mut state, graph, params, rng)?;
        time = time + holding;
        jumps += 1;
        if event == EventKind::Convert {
            conversions += 1;
        }
        on_jump(time, state.population(), event);
    }
    debug_assert!(jumps <= 2 * graph.vertex_count() as u64);
    let pop = state.population();
    Ok(FixationResult {
        white_survivors: pop.w,
        blue_total: pop.b,
        conversions,
        fixation_time: time,
        jump_count: jumps,
    })
}

/// Runs the per-edge dynamics until no red vertex remains. The graph must
/// have exactly `params.total_vertices()` vertices.
pub fn run_graph_to_fixation<T: Real, R: RngCore + ?Sized>(
    graph: &Graph,
    params: &Params<T>,
    rng: &mut R,
) -> Result<FixationResult<T>> {
    simulate_graph(graph, params, rng, |_, _, _| {})
}

/// Population counts after every event of a graph realization.
pub fn record_graph_trajectory<T: Real, R: RngCore + ?Sized>(
    graph: &Graph,
    params: &Params<T>,
    rng: &mut R,
) -> Result<Trajectory<T>> {
    let mut jumps = Vec::new();
    simulate_graph(graph, params, rng, |time, state, event| jumps.push(Jump { time, state, event }))?;
    Ok(Trajectory { initial: initial_state(params), jumps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use VertexColor::*;

    #[test]
    fn complete_graph_shapes() {
        let k2 = complete_graph(2).unwrap();
        assert_eq!(k2.edge_count(), 1);
        let k5 = complete_graph(5).unwrap();
        assert_eq!(k5.edge_count(), 10);
        assert!((0..5).all(|v| k5.degree(v) == 4));
        let k101 = complete_graph(101).unwrap();
        assert!((0..101).all(|v| k101.degree(v) == 100));
        assert!(complete_graph(1).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list("# path\n0 1\n1 2\n\n2 1\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(Graph::parse_edge_list(&g.to_edge_list()).unwrap().edge_count(), 2);
        assert!(Graph::parse_edge_list("0 0\n").is_err());
        assert!(Graph::parse_edge_list("0 1\n2 3\n").is_err());
        assert!(Graph::parse_edge_list("0 x\n").is_err());
        assert!(Graph::parse_edge_list("0 1 2\n").is_err());
        assert!(Graph::parse_edge_list("").is_err());
    }

    #[test]
    fn complete_graph_rates_match_population_counts() {
        let g = complete_graph(12).unwrap();
        let mut colors = vec![White; 12];
        colors[..3].fill(Red);
        colors[3..7].fill(Blue);
        let s = GraphState::from_colors(&g, &colors).unwrap();
        assert!(s.bookkeeping_consistent(&g));
        assert_eq!(s.population(), PopulationState::new(3, 4, 5));
        assert_eq!(s.red_white_edges(), 3 * 5);
        assert_eq!(s.red_blue_edges(), 3 * 4);
        assert_eq!(s.red_vertices(), 3);
    }

    #[test]
    fn surrounded_red_is_chased() {
        let g = complete_graph(4).unwrap();
        let p = Params::kortchemski(2, 1.0, 0.0).unwrap();
        let mut rng = StreamRng::new(1);
        for _ in 0..50 {
            let mut s = GraphState::from_colors(&g, &[Red, Blue, Blue, Blue]).unwrap();
            let (event, _) = graph_step(&mut s, &g, &p, &mut rng).unwrap();
            assert_eq!(event, EventKind::Chase);
        }
    }

    #[test]
    fn isolated_red_converts() {
        // Star centre 0 red, leaves red: no red-white or red-blue edges.
        let g = Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let p = Params::standard(2, 1.0, 0.5).unwrap();
        let mut rng = StreamRng::new(2);
        for _ in 0..50 {
            let mut s = GraphState::from_colors(&g, &[Red, Red, Red]).unwrap();
            let (event, _) = graph_step(&mut s, &g, &p, &mut rng).unwrap();
            assert_eq!(event, EventKind::Convert);
        }
    }

    #[test]
    fn no_red_means_no_transition() {
        let g = complete_graph(3).unwrap();
        let p = Params::standard(2, 1.0, 1.0).unwrap();
        let mut s = GraphState::from_colors(&g, &[Blue, White, White]).unwrap();
        let res = graph_step(&mut s, &g, &p, &mut StreamRng::new(0));
        assert!(matches!(res, Err(Error::NoTransition)));
    }

    #[test]
    fn path_with_huge_alpha_keeps_whites() {
        let g = Graph::parse_edge_list("0 1\n1 2\n").unwrap();
        let p = Params::standard(2, 1.0, 1e9).unwrap();
        let mut rng = StreamRng::new(3);
        let kept = (0..1000)
            .filter(|_| run_graph_to_fixation(&g, &p, &mut rng).unwrap().white_survivors == 2)
            .count();
        assert!(kept >= 999);
    }

    #[test]
    fn two_vertex_extinction_half() {
        let g = complete_graph(2).unwrap();
        let p = Params::standard(1, 1.0, 1.0).unwrap();
        let mut rng = StreamRng::new(4);
        let trials = 100_000;
        let ext = (0..trials)
            .filter(|_| run_graph_to_fixation(&g, &p, &mut rng).unwrap().white_survivors == 0)
            .count();
        let phat = ext as f64 / trials as f64;
        assert!((phat - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt());
    }

    #[test]
    fn blue_is_monotone_and_bounds_hold() {
        let g = Graph::parse_edge_list("0 1\n1 2\n2 3\n3 0\n1 3\n3 4\n").unwrap();
        let p = Params::standard(4, 1.5, 0.3).unwrap();
        let mut rng = StreamRng::new(5);
        for _ in 0..200 {
            let mut s = GraphState::new(&g, InitMode::Standard);
            let mut jumps = 0;
            while s.red_vertices() > 0 {
                let before = s.colors().to_vec();
                graph_step(&mut s, &g, &p, &mut rng).unwrap();
                assert!(s.bookkeeping_consistent(&g));
                for (a, b) in before.iter().zip(s.colors()) {
                    if *a == Blue {
                        assert_eq!(*b, Blue);
                    }
                }
                jumps += 1;
            }
            assert!(jumps <= 2 * g.vertex_count());
        }
    }

    #[test]
    fn vertex_count_must_match_params() {
        let g = complete_graph(5).unwrap();
        let p = Params::standard(5, 1.0, 1.0).unwrap();
        assert!(run_graph_to_fixation(&g, &p, &mut StreamRng::new(0)).is_err());
        let k = Params::kortchemski(3, 1.0, 0.0).unwrap();
        assert!(run_graph_to_fixation(&g, &k, &mut StreamRng::new(0)).is_ok());
    }

    #[test]
    fn graph_trajectory_on_complete_graph() {
        let g = complete_graph(31).unwrap();
        let p = Params::standard(30, 1.0, 2.0).unwrap();
        for seed in 0..50 {
            let t = record_graph_trajectory(&g, &p, &mut StreamRng::new(seed)).unwrap();
            t.validate().unwrap();
            assert_eq!(t.result(), run_graph_to_fixation(&g, &p, &mut StreamRng::new(seed)).unwrap());
        }
    }
}
