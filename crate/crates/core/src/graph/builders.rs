use crate::scalar::Scalar;

use super::GraphBuilder;

/// Cycle `C_n` with unit weights.
pub fn cycle<T: Scalar>(n: usize) -> GraphBuilder<T> {
    let mut b = GraphBuilder::new(format!("cycle-{n}"), n);
    for i in 0..n {
        b.add_edge(i, (i + 1) % n, T::one());
    }
    b
}

/// Path `P_n` on vertices `0..n`.
pub fn path<T: Scalar>(n: usize) -> GraphBuilder<T> {
    let mut b = GraphBuilder::new(format!("path-{n}"), n);
    for i in 1..n {
        b.add_edge(i - 1, i, T::one());
    }
    b
}

/// Rectangular grid, vertex `(i, j)` at index `i * cols + j`.
pub fn grid<T: Scalar>(rows: usize, cols: usize) -> GraphBuilder<T> {
    let mut b = GraphBuilder::new(format!("grid-{rows}x{cols}"), rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let v = i * cols + j;
            if j + 1 < cols {
                b.add_edge(v, v + 1, T::one());
            }
            if i + 1 < rows {
                b.add_edge(v, v + cols, T::one());
            }
        }
    }
    b
}

/// Ball of radius `radius` in the `d`-regular tree, numbered breadth-first
/// from the root `0`.
pub fn regular_tree<T: Scalar>(d: usize, radius: usize) -> GraphBuilder<T> {
    let mut edges = Vec::new();
    let mut layer = vec![0usize];
    let mut next_id = 1;
    for depth in 0..radius {
        let children = if depth == 0 { d } else { d - 1 };
        let mut next = Vec::with_capacity(layer.len() * children);
        for &v in &layer {
            for _ in 0..children {
                edges.push((v, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        layer = next;
    }
    let mut b = GraphBuilder::new(format!("tree-{d}-r{radius}"), next_id);
    for (u, v) in edges {
        b.add_edge(u, v, T::one());
    }
    b
}

/// One vertex carrying `loops` self-loops; the base of free-group covers.
pub fn bouquet<T: Scalar>(loops: usize) -> GraphBuilder<T> {
    let mut b = GraphBuilder::new(format!("bouquet-{loops}"), 1).voltage_base();
    for _ in 0..loops {
        b.add_edge(0, 0, T::one());
    }
    b
}

pub fn explicit<T: Scalar>(name: impl Into<String>, n: usize, edges: &[(usize, usize, T)]) -> GraphBuilder<T> {
    let mut b = GraphBuilder::new(name, n);
    for &(u, v, w) in edges {
        b.add_edge(u, v, w);
    }
    b
}
