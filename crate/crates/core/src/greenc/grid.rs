//! Grid approximation of μ_n = d^−n δ^−n (f^n)^*ω ∧ (f^−n)^*ω on a box in
//! ℂ² ⊂ ℙ², from finite-difference complex Hessians of the potentials
//! u⁺ = d^−n log‖F^n(z, w, 1)‖ and u⁻ = δ^−n log‖G^n(z, w, 1)‖.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{norm2, sup_norm, ComplexMap, ComplexPair};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Default cap on cells (resolution⁴).
pub const DEFAULT_MAX_CELLS: usize = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Sup norm, matching the height normalization; the potentials have
    /// kinks that finite differences resolve poorly.
    Sup,
    /// Euclidean norm: the Fubini–Study form, smooth potentials.
    #[default]
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub norm: NormKind,
    pub max_cells: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            norm: NormKind::Euclidean,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    pub n: usize,
    /// Bounds for (Re z, Im z, Re w, Im w).
    pub bounds: [[f64; 2]; 4],
    pub resolution: usize,
    pub norm: NormKind,
    /// Row-major over the four axes, Re z slowest.
    #[serde(skip)]
    pub cell_masses: Vec<f64>,
    pub total_mass: f64,
    /// Mass removed by clamping negative cells, as a fraction of the
    /// positive mass.
    pub clamped_fraction: f64,
    pub clamped_cells: usize,
    /// Cells whose stencil touched a node on (or numerically near) a locus.
    pub masked_cells: usize,
}

/// The Fubini–Study volume density of ω∧ω on ℂ²: (2/π²)(1 + |z|² + |w|²)^−3.
pub fn fs_volume_density(z: Complex64, w: Complex64) -> f64 {
    2.0 / (PI * PI) * (1.0 + z.norm_sqr() + w.norm_sqr()).powi(-3)
}

fn potential(f: &ComplexMap, n: usize, z: Complex64, w: Complex64, norm: NormKind) -> f64 {
    let measure = |v: &[Complex64]| match norm {
        NormKind::Sup => sup_norm(v),
        NormKind::Euclidean => norm2(v),
    };
    let d = f.degree() as f64;
    let mut p = vec![z, w, Complex64::new(1.0, 0.0)];
    let mut acc = measure(&p).ln();
    let mut scale = 1.0;
    for _ in 0..n {
        let q = f.eval(&p);
        let np = measure(&p);
        let nq = measure(&q);
        if !(nq >= super::NEAR_ZERO * np.powi(f.degree() as i32)) || !nq.is_finite() {
            return f64::NAN;
        }
        // log‖F^{m+1}‖ − d·log‖F^m‖ after renormalizing p to norm 1
        scale /= d;
        acc += scale * (nq.ln() - d * np.ln());
        p = q.into_iter().map(|c| c / nq).collect();
    }
    acc
}

/// Complex Hessian entries (u_{11̄}, u_{22̄}, u_{12̄}) at node (i, j, k, l)
/// from centered differences; axes are (Re z, Im z, Re w, Im w).
fn complex_hessian(u: &[f64], stride: [usize; 4], idx: usize, h: f64) -> Option<(f64, f64, Complex64)> {
    let at = |off: isize| u[(idx as isize + off) as usize];
    let c = at(0);
    let s = stride.map(|x| x as isize);
    let pure = |a: usize| (at(s[a]) - 2.0 * c + at(-s[a])) / (h * h);
    let mixed =
        |a: usize, b: usize| (at(s[a] + s[b]) - at(s[a] - s[b]) - at(-s[a] + s[b]) + at(-s[a] - s[b])) / (4.0 * h * h);
    let (xx1, yy1, xx2, yy2) = (pure(0), pure(1), pure(2), pure(3));
    let (x1x2, y1y2, x1y2, y1x2) = (mixed(0, 2), mixed(1, 3), mixed(0, 3), mixed(1, 2));
    let h11 = 0.25 * (xx1 + yy1);
    let h22 = 0.25 * (xx2 + yy2);
    let h12 = Complex64::new(0.25 * (x1x2 + y1y2), 0.25 * (x1y2 - y1x2));
    if h11.is_finite() && h22.is_finite() && h12.re.is_finite() && h12.im.is_finite() {
        Some((h11, h22, h12))
    } else {
        None
    }
}

/// Grid estimate of μ_n for a pair on ℙ².
pub fn mu_grid_k2(
    pair: &ComplexPair,
    n: usize,
    bounds: [[f64; 2]; 4],
    resolution: usize,
    opts: &GridOptions,
) -> Result<GridMeasure> {
    if pair.k() != 2 {
        return Err(Error::WrongDimension(format!("grid measure needs k = 2, got {}", pair.k())));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    let cells = resolution.checked_pow(4).filter(|&c| c <= opts.max_cells).ok_or_else(|| {
        Error::ResourceLimit(format!("{resolution}^4 cells exceeds the cap of {}", opts.max_cells))
    })?;
    let widths: Vec<f64> = bounds.iter().map(|b| b[1] - b[0]).collect();
    if widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument("box bounds must be increasing".into()));
    }
    if widths.iter().any(|w| (w - widths[0]).abs() > 1e-12 * widths[0].abs()) {
        return Err(Error::InvalidArgument("box must be a cube (equal side lengths)".into()));
    }
    let h = widths[0] / resolution as f64;
    // cell-centred nodes with one ghost layer on each side
    let m = resolution + 2;
    let stride = [m * m * m, m * m, m, 1];
    let coord = |axis: usize, i: usize| bounds[axis][0] + (i as f64 - 0.5) * h;
    let fill = |f: &ComplexMap| -> Vec<f64> {
        (0..m)
            .into_par_iter()
            .flat_map_iter(|i0| {
                let mut slab = Vec::with_capacity(m * m * m);
                for i1 in 0..m {
                    for i2 in 0..m {
                        for i3 in 0..m {
                            let z = Complex64::new(coord(0, i0), coord(1, i1));
                            let w = Complex64::new(coord(2, i2), coord(3, i3));
                            slab.push(potential(f, n, z, w, opts.norm));
                        }
                    }
                }
                slab
            })
            .collect()
    };
    let u_plus = fill(&pair.forward);
    let u_minus = fill(&pair.backward);
    let r = resolution;
    let vol = h.powi(4);
    let k = 4.0 / (PI * PI);
    let slabs: Vec<(Vec<f64>, f64, usize, usize)> = (0..r)
        .into_par_iter()
        .map(|c0| {
            let mut masses = Vec::with_capacity(r * r * r);
            let mut clamped = Vec::new();
            let (mut nclamped, mut nmasked) = (0, 0);
            for c1 in 0..r {
                for c2 in 0..r {
                    for c3 in 0..r {
                        let idx = (c0 + 1) * stride[0] + (c1 + 1) * stride[1] + (c2 + 1) * stride[2] + c3 + 1;
                        let mass = match (
                            complex_hessian(&u_plus, stride, idx, h),
                            complex_hessian(&u_minus, stride, idx, h),
                        ) {
                            (Some((p11, p22, p12)), Some((m11, m22, m12))) => {
                                k * (p11 * m22 + p22 * m11 - 2.0 * (p12 * m12.conj()).re) * vol
                            }
                            _ => {
                                nmasked += 1;
                                0.0
                            }
                        };
                        if mass < 0.0 {
                            nclamped += 1;
                            clamped.push(-mass);
                            masses.push(0.0);
                        } else {
                            masses.push(mass);
                        }
                    }
                }
            }
            (masses, compensated_sum(clamped), nclamped, nmasked)
        })
        .collect();
    let mut cell_masses = Vec::with_capacity(cells);
    let mut clamped_mass = Vec::with_capacity(r);
    let (mut clamped_cells, mut masked_cells) = (0, 0);
    for (masses, cm, nc, nm) in slabs {
        cell_masses.extend(masses);
        clamped_mass.push(cm);
        clamped_cells += nc;
        masked_cells += nm;
    }
    let total_mass = compensated_sum(cell_masses.iter().copied());
    let clamped = compensated_sum(clamped_mass);
    Ok(GridMeasure {
        n,
        bounds,
        resolution,
        norm: opts.norm,
        cell_masses,
        total_mass,
        clamped_fraction: if total_mass > 0.0 { clamped / total_mass } else { 0.0 },
        clamped_cells,
        masked_cells,
    })
}

impl GridMeasure {
    fn cell_width(&self) -> f64 {
        (self.bounds[0][1] - self.bounds[0][0]) / self.resolution as f64
    }

    /// Flat little-endian f64 array, row-major over the four axes.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.cell_masses.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Restore cell masses saved by `to_le_bytes` into a measure read from
    /// its JSON sidecar.
    pub fn with_cells_from_le_bytes(mut self, bytes: &[u8]) -> Result<Self> {
        let expect = self.resolution.pow(4) * 8;
        if bytes.len() != expect {
            return Err(Error::InvalidArgument(format!(
                "grid data has {} bytes, expected {expect}",
                bytes.len()
            )));
        }
        self.cell_masses = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(self)
    }

    /// Marginal on the (Re z, Re w) plane at cell centres.
    pub fn marginal_csv(&self) -> String {
        let r = self.resolution;
        let h = self.cell_width();
        let mut grid = vec![0.0; r * r];
        for c0 in 0..r {
            for c1 in 0..r {
                for c2 in 0..r {
                    let base = ((c0 * r + c1) * r + c2) * r;
                    grid[c0 * r + c2] += compensated_sum(self.cell_masses[base..base + r].iter().copied());
                }
            }
        }
        let mut out = String::from("re_z,re_w,mass\n");
        for c0 in 0..r {
            for c2 in 0..r {
                let x = self.bounds[0][0] + (c0 as f64 + 0.5) * h;
                let y = self.bounds[2][0] + (c2 as f64 + 0.5) * h;
                let _ = writeln!(out, "{x},{y},{:e}", grid[c0 * r + c2]);
            }
        }
        out
    }

    /// Cell index containing an affine point, if inside the box.
    pub fn cell_of(&self, z: Complex64, w: Complex64) -> Option<usize> {
        let h = self.cell_width();
        let mut idx = 0;
        for (axis, v) in [z.re, z.im, w.re, w.im].into_iter().enumerate() {
            let t = ((v - self.bounds[axis][0]) / h).floor();
            if !(t >= 0.0 && t < self.resolution as f64) {
                return None;
            }
            idx = idx * self.resolution + t as usize;
        }
        Some(idx)
    }

    /// Centre of a cell as (z, w).
    pub fn cell_centre(&self, idx: usize) -> (Complex64, Complex64) {
        let r = self.resolution;
        let h = self.cell_width();
        let mut c = [0.0; 4];
        let mut rest = idx;
        for axis in (0..4).rev() {
            c[axis] = self.bounds[axis][0] + ((rest % r) as f64 + 0.5) * h;
            rest /= r;
        }
        (Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3]))
    }
}
