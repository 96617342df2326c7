//! Max-flow / min-cut on small directed networks (Dinic's algorithm: BFS
//! levels, then blocking flows of shortest augmenting paths). Arcs are
//! scanned in insertion order, so results are deterministic.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

/// A directed network with a distinguished source and sink.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    nodes: usize,
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Result<Self> {
        if source >= nodes || sink >= nodes {
            return Err(Error::invalid(format!(
                "terminals ({source}, {sink}) outside {nodes} nodes"
            )));
        }
        if source == sink {
            return Err(Error::invalid("source and sink must differ"));
        }
        Ok(Self {
            nodes,
            source,
            sink,
            arcs: Vec::new(),
        })
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) -> Result<()> {
        if from >= self.nodes || to >= self.nodes {
            return Err(Error::invalid(format!("arc {from}->{to} outside {} nodes", self.nodes)));
        }
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(Error::invalid(format!(
                "arc {from}->{to} has invalid capacity {capacity}"
            )));
        }
        self.arcs.push(Arc { from, to, capacity });
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Total capacity of arcs leaving the `in_source` side.
    pub fn cut_capacity(&self, in_source: &[bool]) -> f64 {
        self.arcs
            .iter()
            .filter(|a| in_source[a.from] && !in_source[a.to])
            .map(|a| a.capacity)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub flow_value: f64,
    /// `true` for nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

struct Residual {
    head: Vec<usize>,
    next: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl Residual {
    fn build(net: &FlowNetwork) -> Self {
        let m = net.arcs.len() * 2;
        let mut r = Residual {
            head: vec![NONE; net.nodes],
            next: Vec::with_capacity(m),
            to: Vec::with_capacity(m),
            cap: Vec::with_capacity(m),
        };
        for a in &net.arcs {
            r.push(a.from, a.to, a.capacity);
            r.push(a.to, a.from, 0.0);
        }
        // per-node lists were built by prepending; restore insertion order
        for v in 0..net.nodes {
            let mut list = Vec::new();
            let mut e = r.head[v];
            while e != NONE {
                list.push(e);
                e = r.next[e];
            }
            let mut prev = NONE;
            for &e in &list {
                r.next[e] = prev;
                prev = e;
            }
            r.head[v] = prev;
        }
        r
    }

    fn push(&mut self, from: usize, to: usize, cap: f64) {
        self.to.push(to);
        self.cap.push(cap);
        self.next.push(self.head[from]);
        self.head[from] = self.to.len() - 1;
    }
}

/// Maximum s-t flow and the minimum cut formed by the residual-reachable set.
pub fn max_flow_min_cut(net: &FlowNetwork) -> Result<MinCut> {
    if let Some(a) = net.arcs.iter().find(|a| !(a.capacity.is_finite() && a.capacity >= 0.0)) {
        return Err(Error::invalid(format!("arc {}->{} has invalid capacity {}", a.from, a.to, a.capacity)));
    }
    let mut g = Residual::build(net);
    let n = net.nodes;
    let (s, t) = (net.source, net.sink);
    let mut level = vec![usize::MAX; n];
    let mut iter = vec![NONE; n];
    let mut flow = 0.0;
    let mut queue = VecDeque::with_capacity(n);

    loop {
        level.iter_mut().for_each(|l| *l = usize::MAX);
        level[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let mut e = g.head[u];
            while e != NONE {
                let v = g.to[e];
                if g.cap[e] > 0.0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
                e = g.next[e];
            }
        }
        if level[t] == usize::MAX {
            break;
        }
        iter.copy_from_slice(&g.head);
        loop {
            let pushed = augment(&mut g, &level, &mut iter, s, t);
            if pushed <= 0.0 {
                break;
            }
            flow += pushed;
        }
    }

    // after the last BFS, `level` marks exactly the residual-reachable nodes
    let source_side = level.iter().map(|&l| l != usize::MAX).collect();
    Ok(MinCut {
        flow_value: flow,
        source_side,
    })
}

/// One augmenting path along strictly increasing levels, found with an
/// explicit stack. Returns the bottleneck pushed, or 0 when blocked.
fn augment(g: &mut Residual, level: &[usize], iter: &mut [usize], s: usize, t: usize) -> f64 {
    let mut path: Vec<usize> = Vec::new();
    let mut u = s;
    loop {
        if u == t {
            let bottleneck = path.iter().map(|&e| g.cap[e]).fold(f64::INFINITY, f64::min);
            for &e in &path {
                g.cap[e] -= bottleneck;
                g.cap[e ^ 1] += bottleneck;
            }
            return bottleneck;
        }
        let mut advanced = false;
        while iter[u] != NONE {
            let e = iter[u];
            let v = g.to[e];
            if g.cap[e] > 0.0 && level[v] == level[u] + 1 {
                path.push(e);
                u = v;
                advanced = true;
                break;
            }
            iter[u] = g.next[e];
        }
        if !advanced {
            // dead end: retreat and skip the arc that led here
            match path.pop() {
                None => return 0.0,
                Some(e) => {
                    u = g.to[e ^ 1];
                    iter[u] = g.next[iter[u]];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(n: usize, arcs: &[(usize, usize, f64)]) -> FlowNetwork {
        let mut g = FlowNetwork::new(n, 0, n - 1).unwrap();
        for &(a, b, c) in arcs {
            g.add_arc(a, b, c).unwrap();
        }
        g
    }

    #[test]
    fn diamond() {
        // s=0, a=1, b=2, t=3
        let g = net(4, &[(0, 1, 3.0), (0, 2, 2.0), (1, 3, 2.0), (2, 3, 3.0), (1, 2, 1.0)]);
        let cut = max_flow_min_cut(&g).unwrap();
        assert_eq!(cut.flow_value, 5.0);
        assert_eq!(g.cut_capacity(&cut.source_side), 5.0);
    }

    #[test]
    fn single_arc_and_disconnected() {
        let g = net(2, &[(0, 1, 7.0)]);
        assert_eq!(max_flow_min_cut(&g).unwrap().flow_value, 7.0);

        let g = net(4, &[(0, 1, 4.0), (1, 2, 2.0)]);
        let cut = max_flow_min_cut(&g).unwrap();
        assert_eq!(cut.flow_value, 0.0);
        assert_eq!(cut.source_side, vec![true, true, true, false]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut g = FlowNetwork::new(3, 0, 2).unwrap();
        assert!(g.add_arc(0, 1, -1.0).is_err());
        assert!(g.add_arc(0, 1, f64::NAN).is_err());
        assert!(g.add_arc(0, 5, 1.0).is_err());
        assert!(FlowNetwork::new(3, 1, 1).is_err());
    }

    #[test]
    fn parallel_and_antiparallel_arcs() {
        let g = net(3, &[(0, 1, 2.0), (0, 1, 3.0), (1, 0, 9.0), (1, 2, 4.0)]);
        let cut = max_flow_min_cut(&g).unwrap();
        assert_eq!(cut.flow_value, 4.0);
        assert_eq!(g.cut_capacity(&cut.source_side), 4.0);
    }
}
