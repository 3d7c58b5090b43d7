use std::collections::VecDeque;

use ndarray::Array2;

#[derive(Clone, Copy, Debug)]
struct Edge {
    to: usize,
    cap: u64,
    cost: i64,
    rev: usize,
}

struct Network {
    adj: Vec<Vec<Edge>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network {
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u64, cost: i64) -> (usize, usize) {
        let fwd = self.adj[from].len();
        let bwd = self.adj[to].len() + usize::from(from == to);
        self.adj[from].push(Edge {
            to,
            cap,
            cost,
            rev: bwd,
        });
        self.adj[to].push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
            rev: fwd,
        });
        (from, fwd)
    }

    /// Shortest path from `source` by residual cost (SPFA; residual arcs may
    /// carry negative cost). Returns the predecessor arc of every node.
    fn shortest_path(&self, source: usize) -> Vec<Option<(usize, usize)>> {
        let n = self.adj.len();
        let mut dist = vec![i64::MAX; n];
        let mut queued = vec![false; n];
        let mut pred = vec![None; n];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        queued[source] = true;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for (k, e) in self.adj[u].iter().enumerate() {
                if e.cap == 0 {
                    continue;
                }
                let candidate = dist[u] + e.cost;
                if candidate < dist[e.to] {
                    dist[e.to] = candidate;
                    pred[e.to] = Some((u, k));
                    if !queued[e.to] {
                        queued[e.to] = true;
                        queue.push_back(e.to);
                    }
                }
            }
        }
        pred
    }
}

/// Exact min-cost transportation with integer supplies, demands and costs,
/// by successive shortest augmenting paths.
///
/// `supply` and `demand` must have equal totals; `cost` is
/// `supply.len() × demand.len()`. Returns the optimal integer flow.
pub fn solve_transport(supply: &[u64], demand: &[u64], cost: &Array2<i64>) -> Array2<u64> {
    let (m, n) = (supply.len(), demand.len());
    assert_eq!(cost.dim(), (m, n), "cost shape must match supply × demand");
    assert_eq!(
        supply.iter().sum::<u64>(),
        demand.iter().sum::<u64>(),
        "supply and demand totals differ"
    );
    let source = m + n;
    let sink = m + n + 1;
    let mut net = Network::new(m + n + 2);
    for (i, &s) in supply.iter().enumerate() {
        net.add_edge(source, i, s, 0);
    }
    for (j, &d) in demand.iter().enumerate() {
        net.add_edge(m + j, sink, d, 0);
    }
    let mut arcs = Array2::from_elem((m, n), (0usize, 0usize));
    for i in 0..m {
        for j in 0..n {
            let cap = supply[i].min(demand[j]);
            arcs[[i, j]] = net.add_edge(i, m + j, cap, cost[[i, j]]);
        }
    }

    loop {
        let pred = net.shortest_path(source);
        if pred[sink].is_none() {
            break;
        }
        let mut bottleneck = u64::MAX;
        let mut v = sink;
        while let Some((u, k)) = pred[v] {
            bottleneck = bottleneck.min(net.adj[u][k].cap);
            v = u;
        }
        let mut v = sink;
        while let Some((u, k)) = pred[v] {
            let rev = net.adj[u][k].rev;
            net.adj[u][k].cap -= bottleneck;
            net.adj[v][rev].cap += bottleneck;
            v = u;
        }
    }

    let mut flow = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            let (u, k) = arcs[[i, j]];
            let e = net.adj[u][k];
            let reverse = net.adj[e.to][e.rev];
            flow[[i, j]] = reverse.cap;
        }
    }
    flow
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn total_cost(flow: &Array2<u64>, cost: &Array2<i64>) -> i64 {
        flow.iter()
            .zip(cost.iter())
            .map(|(&f, &c)| f as i64 * c)
            .sum()
    }

    #[test]
    fn identity_is_free() {
        let cost = arr2(&[[0, 5, 5], [5, 0, 5], [5, 5, 0]]);
        let flow = solve_transport(&[1, 1, 1], &[1, 1, 1], &cost);
        assert_eq!(flow, arr2(&[[1, 0, 0], [0, 1, 0], [0, 0, 1]]));
    }

    #[test]
    fn needs_rerouting() {
        // Greedy would send row 0 to column 0; the optimum crosses.
        let cost = arr2(&[[1, 2], [1, 100]]);
        let flow = solve_transport(&[1, 1], &[1, 1], &cost);
        assert_eq!(total_cost(&flow, &cost), 3);
        assert_eq!(flow, arr2(&[[0, 1], [1, 0]]));
    }

    #[test]
    fn marginals_hold_for_unbalanced_shapes() {
        let cost = arr2(&[[4, 1, 3], [2, 0, 5]]);
        let supply = [5, 7];
        let demand = [3, 4, 5];
        let flow = solve_transport(&supply, &demand, &cost);
        for (i, s) in supply.iter().enumerate() {
            assert_eq!(flow.row(i).sum(), *s);
        }
        for (j, d) in demand.iter().enumerate() {
            assert_eq!(flow.column(j).sum(), *d);
        }
        // Brute force over the two free variables of this 2×3 problem.
        let mut best = i64::MAX;
        for a in 0..=3u64 {
            for b in 0..=4u64 {
                if a + b > 5 {
                    continue;
                }
                let c = 5 - a - b;
                let row1 = [3 - a, 4 - b, 5 - c];
                let f = arr2(&[[a, b, c], row1]);
                best = best.min(total_cost(&f, &cost));
            }
        }
        assert_eq!(total_cost(&flow, &cost), best);
    }
}
