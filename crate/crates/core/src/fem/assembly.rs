use alloc::sync::Arc;
use alloc::vec::Vec;

use super::mesh::{Dof, SpatialMesh};
use super::wind::WindModel;
use crate::error::{invalid, Error, Result};
use crate::linalg::Csr;

const CORNER_XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const CORNER_ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

fn gauss2() -> ([f64; 2], [f64; 2]) {
    let g = 1.0 / libm::sqrt(3.0);
    ([-g, g], [1.0, 1.0])
}

fn gauss3() -> ([f64; 3], [f64; 3]) {
    let g = libm::sqrt(0.6);
    ([-g, 0.0, g], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
}

/// Bilinear shape functions and reference derivatives at `(ξ, η)`.
fn shape(xi: f64, eta: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let (mut n, mut dxi, mut deta) = ([0.0; 4], [0.0; 4], [0.0; 4]);
    for a in 0..4 {
        let (xa, ea) = (CORNER_XI[a], CORNER_ETA[a]);
        n[a] = 0.25 * (1.0 + xa * xi) * (1.0 + ea * eta);
        dxi[a] = 0.25 * xa * (1.0 + ea * eta);
        deta[a] = 0.25 * ea * (1.0 + xa * xi);
    }
    (n, dxi, deta)
}

/// 1D quadratic Lagrange basis on `{-1, 0, 1}` and derivatives.
fn quad_basis(s: f64) -> ([f64; 3], [f64; 3]) {
    ([0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)], [s - 0.5, -2.0 * s, s + 0.5])
}

/// Parameter-independent finite-element data of the double-glazing problem:
/// the mass and diffusion matrices, the affine pieces of the advection
/// matrix and the boundary blocks.
#[derive(Clone, Debug)]
pub struct FemModel {
    mesh: SpatialMesh,
    wind: WindModel,
    epsilon: f64,
    tau: f64,
    mass: Csr,
    stiffness: Csr,
    /// `adv[0]` is the mean advection matrix, `adv[1 + i]` multiplies `y_i`.
    adv: Vec<Csr>,
    mass_b: Csr,
    stiffness_b: Csr,
    adv_b: Vec<Csr>,
    profile: Vec<f64>,
    /// `−Q_∂ g` with `g` the wall profile.
    rate_load: Vec<f64>,
    /// `−(εK_∂ + W_∂,k) g` per affine component.
    level_load: Vec<Vec<f64>>,
}

impl FemModel {
    pub fn new(mesh: SpatialMesh, wind: WindModel, epsilon: f64, tau: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(invalid("epsilon must be positive"));
        }
        if !(tau > 0.0) {
            return Err(invalid("hot wall rate must be positive"));
        }
        let ncomp = wind.dim() + 1;
        let per = mesh.elements_per_side();
        let h = mesh.h();

        // Stream-function components on the lattice of Q2 nodes.
        let nq = 2 * per + 1;
        let mut stream = alloc::vec![0.0; nq * nq * ncomp];
        for j in 0..nq {
            for i in 0..nq {
                let x = [-1.0 + i as f64 * h / 2.0, -1.0 + j as f64 * h / 2.0];
                let k = (j * nq + i) * ncomp;
                wind.stream_components(x, &mut stream[k..k + ncomp]);
            }
        }

        let (g2, w2) = gauss2();
        let (g3, w3) = gauss3();
        let jac = h * h / 4.0;
        let mut mass_e = [[0.0; 4]; 4];
        let mut stiff_e = [[0.0; 4]; 4];
        for (xi, wx) in g2.iter().zip(&w2) {
            for (eta, we) in g2.iter().zip(&w2) {
                let (n, dxi, deta) = shape(*xi, *eta);
                for a in 0..4 {
                    for b in 0..4 {
                        mass_e[a][b] += wx * we * jac * n[a] * n[b];
                        // (2/h)² · jac = 1
                        stiff_e[a][b] += wx * we * (dxi[a] * dxi[b] + deta[a] * deta[b]);
                    }
                }
            }
        }

        let mut t_mass = Vec::new();
        let mut t_stiff = Vec::new();
        let mut t_adv: Vec<Vec<(usize, usize, f64)>> = alloc::vec![Vec::new(); ncomp];
        let mut tb_mass = Vec::new();
        let mut tb_stiff = Vec::new();
        let mut tb_adv: Vec<Vec<(usize, usize, f64)>> = alloc::vec![Vec::new(); ncomp];
        let mut adv_e = alloc::vec![[[0.0; 4]; 4]; ncomp];
        for ej in 0..per {
            for ei in 0..per {
                for m in adv_e.iter_mut() {
                    *m = [[0.0; 4]; 4];
                }
                for (xi, wx) in g3.iter().zip(&w3) {
                    for (eta, we) in g3.iter().zip(&w3) {
                        let (n, dxi, deta) = shape(*xi, *eta);
                        let (lx, dlx) = quad_basis(*xi);
                        let (ly, dly) = quad_basis(*eta);
                        for (c, m) in adv_e.iter_mut().enumerate() {
                            // w = (2/h)(∂_η ψ, −∂_ξ ψ)
                            let (mut pxi, mut peta) = (0.0, 0.0);
                            for q in 0..3 {
                                for p in 0..3 {
                                    let s = stream[((2 * ej + q) * nq + 2 * ei + p) * ncomp + c];
                                    pxi += s * dlx[p] * ly[q];
                                    peta += s * lx[p] * dly[q];
                                }
                            }
                            // w·∇N_b · jac = (2/h)² jac (ψ_η ∂_ξ N_b − ψ_ξ ∂_η N_b)
                            for a in 0..4 {
                                for b in 0..4 {
                                    m[a][b] += wx * we * n[a] * (peta * dxi[b] - pxi * deta[b]);
                                }
                            }
                        }
                    }
                }
                let nodes = mesh.element_nodes(ei, ej);
                for a in 0..4 {
                    let Dof::Interior(r) = mesh.dof(nodes[a]) else { continue };
                    for b in 0..4 {
                        match mesh.dof(nodes[b]) {
                            Dof::Interior(c) => {
                                t_mass.push((r, c, mass_e[a][b]));
                                t_stiff.push((r, c, stiff_e[a][b]));
                                for (t, m) in t_adv.iter_mut().zip(&adv_e) {
                                    t.push((r, c, m[a][b]));
                                }
                            }
                            Dof::Boundary(c) => {
                                tb_mass.push((r, c, mass_e[a][b]));
                                tb_stiff.push((r, c, stiff_e[a][b]));
                                for (t, m) in tb_adv.iter_mut().zip(&adv_e) {
                                    t.push((r, c, m[a][b]));
                                }
                            }
                        }
                    }
                }
            }
        }
        let (ni, nb) = (mesh.n_interior(), mesh.n_boundary());
        let mass = Csr::from_triplets(ni, ni, &t_mass);
        let stiffness = Csr::from_triplets(ni, ni, &t_stiff);
        let adv: Vec<Csr> = t_adv.iter().map(|t| Csr::from_triplets(ni, ni, t)).collect();
        let mass_b = Csr::from_triplets(ni, nb, &tb_mass);
        let stiffness_b = Csr::from_triplets(ni, nb, &tb_stiff);
        let adv_b: Vec<Csr> = tb_adv.iter().map(|t| Csr::from_triplets(ni, nb, t)).collect();

        let profile: Vec<f64> = mesh
            .boundary_coords()
            .iter()
            .map(|x| if x[0] == 1.0 { 1.0 - x[1] * x[1] * x[1] * x[1] } else { 0.0 })
            .collect();
        let mut rate_load = alloc::vec![0.0; ni];
        mass_b.mul_vec_add(-1.0, &profile, &mut rate_load);
        let level_load = adv_b
            .iter()
            .enumerate()
            .map(|(k, wb)| {
                let mut v = alloc::vec![0.0; ni];
                wb.mul_vec_add(-1.0, &profile, &mut v);
                if k == 0 {
                    stiffness_b.mul_vec_add(-epsilon, &profile, &mut v);
                }
                v
            })
            .collect();
        Ok(Self {
            mesh,
            wind,
            epsilon,
            tau,
            mass,
            stiffness,
            adv,
            mass_b,
            stiffness_b,
            adv_b,
            profile,
            rate_load,
            level_load,
        })
    }

    pub fn mesh(&self) -> &SpatialMesh {
        &self.mesh
    }

    pub fn wind(&self) -> &WindModel {
        &self.wind
    }

    pub fn param_dim(&self) -> usize {
        self.wind.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mass(&self) -> &Csr {
        &self.mass
    }

    pub fn stiffness(&self) -> &Csr {
        &self.stiffness
    }

    pub fn mass_boundary(&self) -> &Csr {
        &self.mass_b
    }

    pub fn stiffness_boundary(&self) -> &Csr {
        &self.stiffness_b
    }

    /// Wall profile `(1 − x₂⁴)` on `x₁ = 1`, zero elsewhere, per boundary node.
    pub fn wall_profile(&self) -> &[f64] {
        &self.profile
    }

    /// Time factor `1 − e^{−t/τ}` of the boundary data and its derivative.
    pub fn wall_factor(&self, t: f64) -> (f64, f64) {
        (-libm::expm1(-t / self.tau), libm::exp(-t / self.tau) / self.tau)
    }

    /// Boundary values `u_∂(t)`.
    pub fn boundary_values(&self, t: f64) -> Vec<f64> {
        let g = self.wall_factor(t).0;
        self.profile.iter().map(|p| p * g).collect()
    }

    fn check_param(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.param_dim() {
            return Err(Error::DimensionMismatch { expected: self.param_dim(), found: y.len() });
        }
        if y.iter().any(|v| !(v.abs() <= 1.0)) {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    fn affine(&self, parts: &[Csr], y: &[f64]) -> Csr {
        let mut w = parts[0].clone();
        for (p, yi) in parts[1..].iter().zip(y) {
            if *yi != 0.0 {
                w.add_scaled(*yi, p);
            }
        }
        w
    }

    /// Advection matrix `W(y)`.
    pub fn advection(&self, y: &[f64]) -> Result<Csr> {
        self.check_param(y)?;
        Ok(self.affine(&self.adv, y))
    }

    /// Boundary advection block `W_∂(y)`.
    pub fn advection_boundary(&self, y: &[f64]) -> Result<Csr> {
        self.check_param(y)?;
        Ok(self.affine(&self.adv_b, y))
    }

    /// The semi-discrete system at parameter `y`.
    pub fn system(self: &Arc<Self>, y: &[f64]) -> Result<SemiDiscreteSystem> {
        let w = self.advection(y)?;
        let operator = Csr::combine(self.epsilon, &self.stiffness, 1.0, &w);
        let mut level_load = self.level_load[0].clone();
        for (l, yi) in self.level_load[1..].iter().zip(y) {
            for (a, b) in level_load.iter_mut().zip(l) {
                *a += yi * b;
            }
        }
        Ok(SemiDiscreteSystem { model: Arc::clone(self), y: y.to_vec(), operator, level_load })
    }

    /// `∫ f φ_i` for every interior basis function, 3×3 Gauss per element.
    pub fn load_vector(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mesh = &self.mesh;
        let h = mesh.h();
        let (g3, w3) = gauss3();
        let mut out = alloc::vec![0.0; mesh.n_interior()];
        for ej in 0..mesh.elements_per_side() {
            for ei in 0..mesh.elements_per_side() {
                let c = mesh.element_centre(ei, ej);
                let nodes = mesh.element_nodes(ei, ej);
                for (xi, wx) in g3.iter().zip(&w3) {
                    for (eta, we) in g3.iter().zip(&w3) {
                        let (n, _, _) = shape(*xi, *eta);
                        let fx = f([c[0] + 0.5 * h * xi, c[1] + 0.5 * h * eta]);
                        for a in 0..4 {
                            if let Dof::Interior(r) = mesh.dof(nodes[a]) {
                                out[r] += wx * we * h * h / 4.0 * fx * n[a];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Values of `f` at the interior nodes.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.mesh.interior_coords().into_iter().map(f).collect()
    }
}

/// `M u̇ + A(y) u = f(t, y)` at one parameter value, with `M = Q` and
/// `A = εK + W(y)`.
#[derive(Clone, Debug)]
pub struct SemiDiscreteSystem {
    model: Arc<FemModel>,
    y: Vec<f64>,
    operator: Csr,
    level_load: Vec<f64>,
}

impl SemiDiscreteSystem {
    pub fn model(&self) -> &FemModel {
        &self.model
    }

    pub fn param(&self) -> &[f64] {
        &self.y
    }

    pub fn mass(&self) -> &Csr {
        &self.model.mass
    }

    /// `εK + W(y)`.
    pub fn operator(&self) -> &Csr {
        &self.operator
    }

    /// `f(t) = −Q_∂ u̇_∂ − (εK_∂ + W_∂(y)) u_∂`.
    pub fn forcing(&self, t: f64, out: &mut [f64]) {
        let (g, dg) = self.model.wall_factor(t);
        for ((o, r), l) in out.iter_mut().zip(&self.model.rate_load).zip(&self.level_load) {
            *o = dg * r + g * l;
        }
    }
}
