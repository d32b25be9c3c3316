//! Interaction topology.
//!
//! `adjacency[i][j] = 1` means oscillator `j` directly influences oscillator
//! `i`, so the neighbor set of `i` is the set of *sources* feeding into it.
//! Influence flows along the edge `j -> i`. Vertices are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 0/1 adjacency with cached neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDigraph", into = "RawDigraph")]
pub struct Digraph {
    n: usize,
    adjacency: Vec<u8>,
    // neighbors[i] = { j : adjacency[i][j] = 1 }
    neighbors: Vec<Vec<usize>>,
    // successors[j] = { i : adjacency[i][j] = 1 }
    successors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawDigraph {
    n: usize,
    adjacency: Vec<i64>,
}

impl TryFrom<RawDigraph> for Digraph {
    type Error = Error;

    fn try_from(raw: RawDigraph) -> Result<Self> {
        Digraph::from_row_major(raw.n, &raw.adjacency)
    }
}

impl From<Digraph> for RawDigraph {
    fn from(g: Digraph) -> Self {
        RawDigraph {
            n: g.n,
            adjacency: g.adjacency.iter().map(|&x| x as i64).collect(),
        }
    }
}

impl Digraph {
    /// Builds a digraph from a row-major `n * n` list of 0/1 entries.
    ///
    /// Rejects entries other than 0 or 1 and any self loop.
    pub fn from_row_major(n: usize, entries: &[i64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "digraph needs at least one vertex".into(),
            ));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                what: "adjacency entries (n*n)",
                expected: n * n,
                got: entries.len(),
            });
        }
        let mut adjacency = Vec::with_capacity(n * n);
        for (k, &e) in entries.iter().enumerate() {
            let (i, j) = (k / n, k % n);
            match e {
                0 => adjacency.push(0),
                1 if i == j => {
                    return Err(Error::InvalidArgument(format!(
                        "self loop at vertex {i}: adjacency[{i}][{i}] must be 0"
                    )))
                }
                1 => adjacency.push(1),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "adjacency[{i}][{j}] = {other}, entries must be 0 or 1"
                    )))
                }
            }
        }

        let mut neighbors = vec![Vec::new(); n];
        let mut successors = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if adjacency[i * n + j] == 1 {
                    neighbors[i].push(j);
                    successors[j].push(i);
                }
            }
        }
        Ok(Self {
            n,
            adjacency,
            neighbors,
            successors,
        })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "adjacency row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_major(n, &flat)
    }

    /// Directed ring where vertex `i` listens to vertex `i - 1 (mod n)`.
    ///
    /// For `n = 3` this is `1 -> 2 -> 3 -> 1` in 1-based labels.
    pub fn directed_ring(n: usize) -> Result<Self> {
        let mut flat = vec![0; n * n];
        if n > 1 {
            for i in 0..n {
                flat[i * n + (i + n - 1) % n] = 1;
            }
        }
        Self::from_row_major(n, &flat)
    }

    /// Returns the digraph with every edge also present in reverse.
    pub fn symmetrized(&self) -> Self {
        let n = self.n;
        let mut flat = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                if self.adjacency[i * n + j] == 1 || self.adjacency[j * n + i] == 1 {
                    flat[i * n + j] = 1;
                }
            }
        }
        Self::from_row_major(n, &flat).expect("symmetrization preserves invariants")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, target: usize, source: usize) -> bool {
        self.adjacency[target * self.n + source] == 1
    }

    pub fn row_major(&self) -> Vec<i64> {
        self.adjacency.iter().map(|&x| x as i64).collect()
    }

    /// Vertices that directly influence `i`.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.check_index(i)?;
        Ok(&self.neighbors[i])
    }

    /// Unchecked neighbor access for hot loops; `i` must be `< n`.
    #[inline]
    pub(crate) fn neighbors_of(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// True iff a directed influence path `i -> ... -> j` exists.
    /// Every vertex reaches itself through the empty path.
    pub fn is_reachable(&self, i: usize, j: usize) -> Result<bool> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Ok(true);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![i];
        seen[i] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.successors[v] {
                if w == j {
                    return Ok(true);
                }
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        Ok(false)
    }

    /// Strongly connected components (Tarjan, iterative), each sorted ascending.
    /// Components come out in reverse topological order of the condensation.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        const UNVISITED: usize = usize::MAX;
        let n = self.n;
        let mut index = vec![UNVISITED; n];
        let mut lowlink = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut components = Vec::new();
        let mut next_index = 0usize;
        // (vertex, position in its successor list)
        let mut call: Vec<(usize, usize)> = Vec::new();

        for root in 0..n {
            if index[root] != UNVISITED {
                continue;
            }
            call.push((root, 0));
            index[root] = next_index;
            lowlink[root] = next_index;
            next_index += 1;
            stack.push(root);
            on_stack[root] = true;

            while let Some(&mut (v, ref mut pos)) = call.last_mut() {
                if let Some(&w) = self.successors[v].get(*pos) {
                    *pos += 1;
                    if index[w] == UNVISITED {
                        index[w] = next_index;
                        lowlink[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        lowlink[v] = lowlink[v].min(index[w]);
                    }
                    continue;
                }

                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
            }
        }
        components
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected_components().len() == 1
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, n: self.n })
        }
    }
}
