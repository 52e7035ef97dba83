//! Minimum-cost spanning arborescence (Chu–Liu/Edmonds).

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Arc {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Minimum arborescence of `n` nodes hanging from `root`, with every arc
/// pointing away from the root. Returns indices into `arcs`, or `None` when
/// some node cannot be reached.
pub(crate) fn min_arborescence(n: usize, root: usize, arcs: &[Arc]) -> Option<Vec<usize>> {
    const NONE: usize = usize::MAX;
    let mut best = vec![NONE; n];
    for (k, a) in arcs.iter().enumerate() {
        if a.to == root || a.from == a.to {
            continue;
        }
        if best[a.to] == NONE || a.weight < arcs[best[a.to]].weight {
            best[a.to] = k;
        }
    }
    if (0..n).any(|v| v != root && best[v] == NONE) {
        return None;
    }

    let mut cycle = vec![NONE; n];
    let mut mark = vec![NONE; n];
    let mut cycles = 0;
    for v in 0..n {
        let mut u = v;
        while u != root && cycle[u] == NONE && mark[u] != v {
            mark[u] = v;
            u = arcs[best[u]].from;
        }
        if u != root && cycle[u] == NONE && mark[u] == v {
            let mut x = u;
            loop {
                cycle[x] = cycles;
                x = arcs[best[x]].from;
                if x == u {
                    break;
                }
            }
            cycles += 1;
        }
    }
    if cycles == 0 {
        return Some((0..n).filter(|&v| v != root).map(|v| best[v]).collect());
    }

    // contract every cycle into one node
    let mut id = vec![0; n];
    let mut next = cycles;
    for v in 0..n {
        if cycle[v] == NONE {
            id[v] = next;
            next += 1;
        } else {
            id[v] = cycle[v];
        }
    }
    let mut origin = Vec::new();
    let mut reduced = Vec::new();
    for (k, a) in arcs.iter().enumerate() {
        let (f, t) = (id[a.from], id[a.to]);
        if f == t {
            continue;
        }
        let weight = if cycle[a.to] != NONE { a.weight - arcs[best[a.to]].weight } else { a.weight };
        reduced.push(Arc { from: f, to: t, weight });
        origin.push(k);
    }
    let chosen = min_arborescence(next, id[root], &reduced)?;

    let mut entered = vec![NONE; n];
    let mut out: Vec<usize> = Vec::with_capacity(n - 1);
    for k in chosen.into_iter().map(|r| origin[r]) {
        if cycle[arcs[k].to] != NONE {
            entered[arcs[k].to] = k;
        }
        out.push(k);
    }
    for v in 0..n {
        if cycle[v] != NONE && entered[v] == NONE {
            out.push(best[v]);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive oracle: every node other than the root picks one incoming
    /// arc; keep the cheapest choice that forms a tree.
    fn brute_force(n: usize, root: usize, arcs: &[Arc]) -> Option<f64> {
        let incoming: Vec<Vec<usize>> =
            (0..n).map(|v| (0..arcs.len()).filter(|&k| arcs[k].to == v && arcs[k].from != v).collect()).collect();
        let nodes: Vec<usize> = (0..n).filter(|&v| v != root).collect();
        let mut pick = vec![0usize; nodes.len()];
        let mut best: Option<f64> = None;
        if nodes.iter().any(|&v| incoming[v].is_empty()) {
            return None;
        }
        loop {
            let mut parent = vec![usize::MAX; n];
            let mut cost = 0.0;
            for (p, &v) in nodes.iter().enumerate() {
                let a = arcs[incoming[v][pick[p]]];
                parent[v] = a.from;
                cost += a.weight;
            }
            let tree = nodes.iter().all(|&v| {
                let mut u = v;
                for _ in 0..n {
                    if u == root {
                        return true;
                    }
                    u = parent[u];
                }
                false
            });
            if tree && best.is_none_or(|b| cost < b) {
                best = Some(cost);
            }
            let mut p = 0;
            loop {
                if p == nodes.len() {
                    return best;
                }
                pick[p] += 1;
                if pick[p] < incoming[nodes[p]].len() {
                    break;
                }
                pick[p] = 0;
                p += 1;
            }
        }
    }

    fn check_tree(n: usize, root: usize, arcs: &[Arc], chosen: &[usize]) -> f64 {
        assert_eq!(chosen.len(), n - 1);
        let mut parent = vec![usize::MAX; n];
        for &k in chosen {
            assert_eq!(parent[arcs[k].to], usize::MAX, "two parents");
            parent[arcs[k].to] = arcs[k].from;
        }
        for v in 0..n {
            let mut u = v;
            let mut steps = 0;
            while u != root {
                u = parent[u];
                steps += 1;
                assert!(steps <= n, "cycle");
            }
        }
        chosen.iter().map(|&k| arcs[k].weight).sum()
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(2..=6);
            let mut arcs = Vec::new();
            for f in 0..n {
                for t in 0..n {
                    if f != t && rng.random::<f64>() < 0.6 {
                        arcs.push(Arc { from: f, to: t, weight: rng.random_range(0..5) as f64 });
                    }
                }
            }
            let root = rng.random_range(0..n);
            let fast = min_arborescence(n, root, &arcs);
            let slow = brute_force(n, root, &arcs);
            match (fast, slow) {
                (Some(ch), Some(b)) => assert!((check_tree(n, root, &arcs, &ch) - b).abs() < 1e-12),
                (None, None) => {}
                other => panic!("disagree: {other:?}"),
            }
        }
    }

    #[test]
    fn two_nodes() {
        let arcs = [Arc { from: 0, to: 1, weight: 3.0 }, Arc { from: 1, to: 0, weight: 1.0 }];
        assert_eq!(min_arborescence(2, 0, &arcs), Some(vec![0]));
        assert_eq!(min_arborescence(2, 1, &arcs), Some(vec![1]));
        assert_eq!(min_arborescence(2, 0, &arcs[1..]), None);
    }
}
