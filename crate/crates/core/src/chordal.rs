//! Chordality testing and junction trees via maximum cardinality search.

use crate::graph::Graph;

/// Clique/separator sequence of a decomposable graph.
///
/// `cliques` satisfies the running intersection property in the listed order;
/// `separators[k]` is the intersection of `cliques[k]` with the union of the
/// earlier cliques (empty for the first clique and for each new component).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionTree {
    /// Perfect elimination ordering (reverse of the search visit order).
    pub elimination_order: Vec<usize>,
    pub cliques: Vec<Vec<usize>>,
    pub separators: Vec<Vec<usize>>,
}

/// Visit order of a maximum cardinality search, together with the set of
/// already-visited neighbours of each vertex at its visit time.
fn maximum_cardinality_search(g: &Graph) -> (Vec<usize>, Vec<Vec<usize>>) {
    let p = g.p();
    let mut weight = vec![0usize; p];
    let mut visited = vec![false; p];
    let mut order = Vec::with_capacity(p);
    let mut earlier = Vec::with_capacity(p);
    for _ in 0..p {
        let v = (0..p)
            .filter(|&v| !visited[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited vertex remains");
        visited[v] = true;
        let mut m = Vec::with_capacity(weight[v]);
        for u in g.neighbor_iter(v) {
            if visited[u] {
                if u != v {
                    m.push(u);
                }
            } else {
                weight[u] += 1;
            }
        }
        order.push(v);
        earlier.push(m);
    }
    (order, earlier)
}

/// `Some(junction tree)` iff `g` is chordal.
pub fn junction_tree(g: &Graph) -> Option<JunctionTree> {
    let p = g.p();
    let (order, earlier) = maximum_cardinality_search(g);
    let mut position = vec![0usize; p];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }

    // Tarjan-Yannakakis fill-in check: the latest visited member of each
    // earlier-neighbour set must be adjacent to all the others.
    for m in &earlier {
        if let Some(&u) = m.iter().max_by_key(|&&x| position[x]) {
            if m.iter().any(|&x| x != u && !g.has_edge(x, u)) {
                return None;
            }
        }
    }

    let mut cliques: Vec<Vec<usize>> = Vec::new();
    let mut separators: Vec<Vec<usize>> = Vec::new();
    let mut prev_card: Option<usize> = None;
    for (k, &v) in order.iter().enumerate() {
        let card = earlier[k].len();
        match prev_card {
            Some(prev) if card > prev => {
                cliques.last_mut().expect("a clique is open").push(v);
            }
            _ => {
                let mut c = earlier[k].clone();
                c.push(v);
                c.sort_unstable();
                let mut s = earlier[k].clone();
                s.sort_unstable();
                cliques.push(c);
                separators.push(s);
            }
        }
        prev_card = Some(card);
    }
    for c in &mut cliques {
        c.sort_unstable();
    }

    let mut elimination_order = order;
    elimination_order.reverse();
    Some(JunctionTree { elimination_order, cliques, separators })
}

/// True iff every cycle of length at least four has a chord.
pub fn is_decomposable(g: &Graph) -> bool {
    junction_tree(g).is_some()
}
