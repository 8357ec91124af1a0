//! Uniform cell-centered radial mesh on the disk B_R in two dimensions,
//! with polar quadrature, discrete norms, and face gradients shared by the
//! solver and the diagnostics.
//!
//! Cells are annuli bounded by the face radii `i*dr`; cell centers sit at
//! `(i + 1/2)*dr`, so no degree of freedom lies on the coordinate
//! singularity at r = 0. The r = 0 and r = R faces carry zero flux.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform radial mesh over (0, R) with `n` annular cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    r_outer: f64,
    n: usize,
    dr: f64,
}

impl RadialMesh {
    pub fn new(r_outer: f64, n: usize) -> Result<Self> {
        if !(r_outer > 0.0) || n == 0 {
            return Err(Error::Config(format!(
                "mesh requires R > 0 and N >= 1 (got R = {r_outer}, N = {n})"
            )));
        }
        Ok(Self {
            r_outer,
            n,
            dr: r_outer / n as f64,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        self.dr
    }

    #[inline]
    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    /// Center radius of cell `i`.
    #[inline]
    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr
    }

    /// Radius of face `i` for `i` in `0..=n` (face 0 is the origin, face n
    /// the outer boundary).
    #[inline]
    pub fn face_radius(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    /// Annulus area of cell `i`: pi (r_{i+1}^2 - r_i^2) with face radii.
    #[inline]
    pub fn cell_volume(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.dr * self.dr * (2 * i + 1) as f64
    }

    /// Quadrature weight of interior face `i` (`1..n`): 2 pi r_i dr.
    #[inline]
    pub fn face_weight(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.face_radius(i) * self.dr
    }

    pub fn total_volume(&self) -> f64 {
        std::f64::consts::PI * self.r_outer * self.r_outer
    }

    pub fn same_as(&self, other: &RadialMesh) -> bool {
        self.n == other.n && self.r_outer == other.r_outer
    }

    /// Coefficient arrays of the radial finite-volume Laplacian with
    /// zero-flux boundaries:
    ///
    /// ```text
    /// (Lap f)_i = a_out_i (f_{i+1} - f_i) - a_in_i (f_i - f_{i-1})
    /// ```
    ///
    /// with `a_out_i = 2 pi r_{i+1} / (w_i dr)` (zero at the outer face) and
    /// `a_in_i = 2 pi r_i / (w_i dr)` (zero at the origin face).
    pub fn laplacian_coeffs(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut a_in = vec![0.0; n];
        let mut a_out = vec![0.0; n];
        for i in 0..n {
            let w = self.cell_volume(i);
            if i + 1 < n {
                a_out[i] = 2.0 * std::f64::consts::PI * self.face_radius(i + 1) / (w * self.dr);
            }
            if i > 0 {
                a_in[i] = 2.0 * std::f64::consts::PI * self.face_radius(i) / (w * self.dr);
            }
        }
        (a_in, a_out)
    }
}

/// Cell-averaged scalar field on a [`RadialMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    mesh: RadialMesh,
    values: Vec<f64>,
}

/// Discrete L1, L2 and max norms with the polar measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl RadialField {
    pub fn constant(mesh: RadialMesh, c: f64) -> Self {
        Self {
            mesh,
            values: vec![c; mesh.n()],
        }
    }

    /// Sample `f` at cell centers.
    pub fn from_fn(mesh: RadialMesh, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..mesh.n()).map(|i| f(mesh.cell_center(i))).collect();
        Self { mesh, values }
    }

    pub fn from_values(mesh: RadialMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n() {
            return Err(Error::MeshMismatch(format!(
                "field has {} values for a mesh with {} cells",
                values.len(),
                mesh.n()
            )));
        }
        Ok(Self { mesh, values })
    }

    #[inline]
    pub fn mesh(&self) -> &RadialMesh {
        &self.mesh
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Exchange the backing storage with a scratch vector of equal length.
    pub fn swap_values(&mut self, scratch: &mut Vec<f64>) {
        assert_eq!(scratch.len(), self.values.len(), "field length mismatch");
        std::mem::swap(&mut self.values, scratch);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// First non-finite cell index, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    /// Integral over the disk: sum of cell volume times cell average.
    pub fn integrate(&self) -> f64 {
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            acc += self.mesh.cell_volume(i) * v;
        }
        acc
    }

    pub fn norms(&self) -> Norms {
        let mut l1 = 0.0;
        let mut l2sq = 0.0;
        let mut linf: f64 = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let w = self.mesh.cell_volume(i);
            l1 += w * v.abs();
            l2sq += w * v * v;
            linf = linf.max(v.abs());
        }
        Norms {
            l1,
            l2: l2sq.sqrt(),
            linf,
        }
    }

    /// Centered differences at faces (length n+1). The r = 0 face is zero
    /// by radial symmetry, the r = R face is zero by the no-flux boundary.
    pub fn grad_faces(&self) -> Vec<f64> {
        let n = self.mesh.n();
        let dr = self.mesh.dr();
        let mut g = vec![0.0; n + 1];
        for i in 1..n {
            g[i] = (self.values[i] - self.values[i - 1]) / dr;
        }
        g
    }

    /// Squared seminorm of the face gradient: sum over interior faces of
    /// the face weight times the squared centered difference.
    pub fn grad_sq_integral(&self) -> f64 {
        let n = self.mesh.n();
        let dr = self.mesh.dr();
        let mut acc = 0.0;
        for i in 1..n {
            let g = (self.values[i] - self.values[i - 1]) / dr;
            acc += self.mesh.face_weight(i) * g * g;
        }
        acc
    }

    /// W^{1,2} norm: (||f||_2^2 + sum of weighted face-gradient squares)^{1/2}.
    pub fn w12_norm(&self) -> f64 {
        let l2 = self.norms().l2;
        (l2 * l2 + self.grad_sq_integral()).sqrt()
    }

    /// Radial finite-volume Laplacian with zero-flux boundaries.
    pub fn laplacian(&self) -> Vec<f64> {
        let (a_in, a_out) = self.mesh.laplacian_coeffs();
        let v = &self.values;
        let n = self.mesh.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let outward = if i + 1 < n {
                a_out[i] * (v[i + 1] - v[i])
            } else {
                0.0
            };
            let inward = if i > 0 { a_in[i] * (v[i] - v[i - 1]) } else { 0.0 };
            out[i] = outward - inward;
        }
        out
    }
}
