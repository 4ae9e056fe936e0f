use super::{GridSpec, SolverError};
use crate::geometry::{Geometry, Vec2};
use crate::kernel::MemoryKernel;

/// Face of the 5-point stencil. `q` is `None` for a Dirichlet neighbour.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Face {
    pub p: usize,
    pub q: Option<usize>,
    pub coef: f64,
}

/// Node grid over the bounding box of the outer curve with piecewise coefficients.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub nx: usize,
    pub ny: usize,
    pub origin: Vec2,
    pub hx: f64,
    pub hy: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub ns: usize,
    pub ds: f64,
    pub sample_every: usize,
    /// Grid index of every active node.
    pub(crate) nodes: Vec<usize>,
    /// Active index of every grid node.
    pub(crate) index: Vec<Option<usize>>,
    /// Node wave speed squared.
    pub(crate) c: Vec<f64>,
    pub(crate) b: Vec<f64>,
    pub(crate) in_inclusion: Vec<bool>,
    pub(crate) c_faces: Vec<Face>,
    /// Active index of every node carrying history.
    pub(crate) patch: Vec<usize>,
    /// Faces of the damping form, in patch indexing.
    pub(crate) b_faces: Vec<Face>,
}

impl Discretization {
    pub fn new(
        geom: &Geometry,
        kernel: &MemoryKernel,
        grid: &GridSpec,
    ) -> Result<Self, SolverError> {
        let (nx, ny) = (grid.nx, grid.ny);
        if nx < 4 || ny < 4 {
            return Err(SolverError::InvalidGrid(format!("need at least 4 cells, got {nx}x{ny}")));
        }
        if !(grid.t_end > 0.0) {
            return Err(SolverError::InvalidGrid(format!("t_end must be positive, got {}", grid.t_end)));
        }
        let (lo, hi) = geom.outer().bbox();
        let hx = (hi.x - lo.x) / nx as f64;
        let hy = (hi.y - lo.y) / ny as f64;
        let kmax = geom.k1().max(geom.k2());
        let dt_max = grid.cfl_safety * hx.min(hy) / kmax.sqrt();
        let dt_req = grid.dt.unwrap_or(dt_max * 0.999);
        if !(dt_req > 0.0) || dt_req > dt_max * (1.0 + 1e-12) {
            return Err(SolverError::CflViolation { dt: dt_req, limit: dt_max });
        }
        let n_steps = (grid.t_end / dt_req - 1e-9).ceil().max(1.0) as usize;
        let dt = grid.t_end / n_steps as f64;

        let tau_max = kernel.c_bound();
        let s_max = grid.s_max.unwrap_or(10.0 * tau_max);
        if s_max < 10.0 * tau_max * (1.0 - 1e-12) {
            return Err(SolverError::HistoryTooShort { s_max, required: 10.0 * tau_max });
        }
        let ns = grid.ns.unwrap_or(((s_max / dt) * (1.0 + 1e-12)).floor() as usize);
        let ds = s_max / ns.max(1) as f64;
        if ns == 0 || ds < dt * (1.0 - 1e-12) {
            return Err(SolverError::HistoryCfl { ds, dt });
        }
        let sample_every = match grid.samples {
            Some(0) | None => (n_steps / 400).max(1),
            Some(m) => (n_steps / m).max(1),
        };

        let k0 = kernel.k0();
        let (k1, k2) = (geom.k1(), geom.k2());
        let diam = geom.diameter();
        let node = |i: usize, j: usize| lo + Vec2::new(i as f64 * hx, j as f64 * hy);
        let n_all = (nx + 1) * (ny + 1);
        let mut index = vec![None; n_all];
        let mut nodes = Vec::new();
        let mut c_all = vec![0.0; n_all];
        let mut b_all = vec![0.0; n_all];
        let mut incl_all = vec![false; n_all];
        for j in 0..=ny {
            for i in 0..=nx {
                let g = j * (nx + 1) + i;
                let x = node(i, j);
                let inside = geom.inner().signed_distance(x) <= 1e-12 * diam;
                let b = geom.b(x);
                incl_all[g] = inside;
                b_all[g] = if inside { 0.0 } else { b };
                c_all[g] = if inside { k2 } else { k1 * (1.0 - k0 * b) };
                if i > 0 && j > 0 && i < nx && j < ny && geom.outer().signed_distance(x) < -1e-9 * diam {
                    index[g] = Some(nodes.len());
                    nodes.push(g);
                }
            }
        }
        let wx = hy / hx;
        let wy = hx / hy;
        let mut c_faces = Vec::new();
        let mut b_pairs = Vec::new();
        for (p, &g) in nodes.iter().enumerate() {
            // Each active-active face once (towards +x, +y); Dirichlet faces from the active side.
            let nbrs = [
                (g + 1, wx, true),
                (g + nx + 1, wy, true),
                (g - 1, wx, false),
                (g - nx - 1, wy, false),
            ];
            for (h, w, forward) in nbrs {
                let q = index[h];
                if q.is_some() && !forward {
                    continue;
                }
                let (ca, cb) = (c_all[g], c_all[h]);
                c_faces.push(Face {
                    p,
                    q,
                    coef: w * 2.0 * ca * cb / (ca + cb),
                });
                let bf = 0.5 * (b_all[g] + b_all[h]);
                if bf > 0.0 {
                    if incl_all[g] || incl_all[h] {
                        return Err(SolverError::InterfaceDamping);
                    }
                    b_pairs.push((p, q, w * bf));
                }
            }
        }
        let mut patch_index = vec![None; nodes.len()];
        let mut patch = Vec::new();
        let mut add = |p: usize, patch: &mut Vec<usize>| {
            if patch_index[p].is_none() {
                patch_index[p] = Some(patch.len());
                patch.push(p);
            }
        };
        for &(p, q, _) in &b_pairs {
            add(p, &mut patch);
            if let Some(q) = q {
                add(q, &mut patch);
            }
        }
        let b_faces = b_pairs
            .into_iter()
            .map(|(p, q, coef)| Face {
                p: patch_index[p].expect("in patch"),
                q: q.map(|q| patch_index[q].expect("in patch")),
                coef,
            })
            .collect();
        let pick = |v: &[f64]| nodes.iter().map(|&g| v[g]).collect::<Vec<_>>();
        let c = pick(&c_all);
        let b = pick(&b_all);
        let in_inclusion = nodes.iter().map(|&g| incl_all[g]).collect();
        Ok(Self {
            nx,
            ny,
            origin: lo,
            hx,
            hy,
            dt,
            n_steps,
            ns,
            ds,
            sample_every,
            nodes,
            index,
            c,
            b,
            in_inclusion,
            c_faces,
            patch,
            b_faces,
        })
    }

    pub fn n_active(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_patch(&self) -> usize {
        self.patch.len()
    }

    /// Quadrature weight of one node.
    pub fn mass(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn s_max(&self) -> f64 {
        self.ds * self.ns as f64
    }

    pub fn position(&self, active: usize) -> Vec2 {
        let g = self.nodes[active];
        let (i, j) = (g % (self.nx + 1), g / (self.nx + 1));
        self.origin + Vec2::new(i as f64 * self.hx, j as f64 * self.hy)
    }

    pub fn positions(&self) -> Vec<Vec2> {
        (0..self.n_active()).map(|p| self.position(p)).collect()
    }

    pub fn patch_nodes(&self) -> &[usize] {
        &self.patch
    }

    /// Node values of the squared wave speed.
    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn in_inclusion(&self) -> &[bool] {
        &self.in_inclusion
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b
    }

    /// Active index of grid node `(i, j)`.
    pub fn active_index(&self, i: usize, j: usize) -> Option<usize> {
        self.index.get(j * (self.nx + 1) + i).copied().flatten()
    }

    /// Scatters active values onto the full `(nx + 1) x (ny + 1)` grid, row-major in `y`.
    pub fn to_grid(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; (self.nx + 1) * (self.ny + 1)];
        for (p, &g) in self.nodes.iter().enumerate() {
            out[g] = values[p];
        }
        out
    }

    /// `out = A w` for the stiffness form with the given faces.
    pub(crate) fn apply(faces: &[Face], w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for f in faces {
            match f.q {
                Some(q) => {
                    let d = f.coef * (w[f.p] - w[q]);
                    out[f.p] += d;
                    out[q] -= d;
                }
                None => out[f.p] += f.coef * w[f.p],
            }
        }
    }

    /// `w^T A w`.
    pub(crate) fn form(faces: &[Face], w: &[f64]) -> f64 {
        faces
            .iter()
            .map(|f| {
                let d = w[f.p] - f.q.map_or(0.0, |q| w[q]);
                f.coef * d * d
            })
            .sum()
    }

    /// `A_c w`, the stiffness of the elastic part.
    pub fn stiffness(&self, w: &[f64], out: &mut [f64]) {
        Self::apply(&self.c_faces, w, out)
    }

    pub fn elastic_form(&self, w: &[f64]) -> f64 {
        Self::form(&self.c_faces, w)
    }

    /// `sum b |grad f|^2` over the patch, `f` given on patch nodes.
    pub fn damping_form(&self, f: &[f64]) -> f64 {
        Self::form(&self.b_faces, f)
    }
}
