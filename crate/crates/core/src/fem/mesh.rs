use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Role of a mesh node in the ODE system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dof {
    Interior(usize),
    Boundary(usize),
}

/// Uniform mesh of `(-1,1)²` with `2^ℓ × 2^ℓ` square elements.
///
/// Nodes are numbered row by row (`x₁` fastest). Interior unknowns follow the
/// same order; boundary nodes are numbered in the same sweep.
#[derive(Clone, Debug)]
pub struct SpatialMesh {
    level: u32,
    per_side: usize,
    dofs: Vec<Dof>,
    n_interior: usize,
    n_boundary: usize,
}

impl SpatialMesh {
    pub fn new(level: u32) -> Result<Self> {
        if !(1..=10).contains(&level) {
            return Err(invalid("grid parameter must be between 1 and 10"));
        }
        let per_side = 1usize << level;
        let n = per_side + 1;
        let mut dofs = Vec::with_capacity(n * n);
        let (mut ni, mut nb) = (0, 0);
        for j in 0..n {
            for i in 0..n {
                if i == 0 || j == 0 || i == per_side || j == per_side {
                    dofs.push(Dof::Boundary(nb));
                    nb += 1;
                } else {
                    dofs.push(Dof::Interior(ni));
                    ni += 1;
                }
            }
        }
        Ok(Self { level, per_side, dofs, n_interior: ni, n_boundary: nb })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Elements per side.
    pub fn elements_per_side(&self) -> usize {
        self.per_side
    }

    pub fn num_elements(&self) -> usize {
        self.per_side * self.per_side
    }

    /// Element side length `h = 2 / 2^ℓ`.
    pub fn h(&self) -> f64 {
        2.0 / self.per_side as f64
    }

    pub fn num_nodes(&self) -> usize {
        self.dofs.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.per_side + 1) + i
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let n = self.per_side + 1;
        let (i, j) = (node % n, node / n);
        [-1.0 + i as f64 * self.h(), -1.0 + j as f64 * self.h()]
    }

    pub fn dof(&self, node: usize) -> Dof {
        self.dofs[node]
    }

    /// Global node numbers of element `(ei, ej)`, counter-clockwise from the
    /// lower-left corner.
    pub fn element_nodes(&self, ei: usize, ej: usize) -> [usize; 4] {
        [
            self.node_index(ei, ej),
            self.node_index(ei + 1, ej),
            self.node_index(ei + 1, ej + 1),
            self.node_index(ei, ej + 1),
        ]
    }

    /// Centre of element `(ei, ej)`.
    pub fn element_centre(&self, ei: usize, ej: usize) -> [f64; 2] {
        let h = self.h();
        [-1.0 + (ei as f64 + 0.5) * h, -1.0 + (ej as f64 + 0.5) * h]
    }

    /// Coordinates of the interior nodes, in unknown order.
    pub fn interior_coords(&self) -> Vec<[f64; 2]> {
        (0..self.num_nodes())
            .filter(|&k| matches!(self.dofs[k], Dof::Interior(_)))
            .map(|k| self.node_coords(k))
            .collect()
    }

    /// Coordinates of the boundary nodes, in boundary order.
    pub fn boundary_coords(&self) -> Vec<[f64; 2]> {
        (0..self.num_nodes())
            .filter(|&k| matches!(self.dofs[k], Dof::Boundary(_)))
            .map(|k| self.node_coords(k))
            .collect()
    }
}
