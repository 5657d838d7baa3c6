use std::collections::VecDeque;

use crate::assembly::SparseMatrix;

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `new index i -> old index perm[i]`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.iter() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    // components in order of their minimum-degree vertex
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (degree[v], v));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(seed, &adj, &degree);
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Level structure from `root`: (eccentricity, vertices of the last level).
fn levels(root: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut dist = std::collections::HashMap::new();
    dist.insert(root, 0usize);
    let mut queue = VecDeque::from([root]);
    let mut ecc = 0;
    let mut last = vec![root];
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for &w in &adj[v] {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                e.insert(d + 1);
                if d + 1 > ecc {
                    ecc = d + 1;
                    last.clear();
                }
                if d + 1 == ecc {
                    last.push(w);
                }
                queue.push_back(w);
            }
        }
    }
    (ecc, last)
}

/// George-Liu search for a vertex of (near) maximal eccentricity.
fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let (mut ecc, mut last) = levels(root, adj);
    loop {
        let cand = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        let (e, l) = levels(cand, adj);
        if e <= ecc {
            return root;
        }
        root = cand;
        ecc = e;
        last = l;
    }
}

/// Half bandwidth `max |i - j|` over nonzeros after applying `perm`.
pub fn bandwidth(a: &SparseMatrix, perm: &[usize]) -> usize {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    a.iter()
        .map(|(i, j, _)| inv[i].abs_diff(inv[j]))
        .max()
        .unwrap_or(0)
}
