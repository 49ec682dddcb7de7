//! Field containers: maps from the torus into a base chart, momentum fields,
//! and space-time states on the cylinder.
//!
//! A torus map stores its periodic part on the grid together with a
//! periodicity tag. Three identifications are supported:
//!
//! * fully periodic values,
//! * flat winding — on the flat chart the map is `W·(x,y)` plus a periodic
//!   part, with an integer winding matrix `W`,
//! * a Möbius twist (n = 1 ball chart) — crossing the x-period composes with
//!   the disk automorphism γ_ρ(z) = (z+ρ)/(1+ρz).
//!
//! Derivatives respect the identification: spectral where the data is
//! genuinely periodic, second-order finite differences with automorphism
//! ghosts across a twisted seam.

use crate::chart::BaseChart;
use crate::grid::TorusGrid;
use crate::{C64, Vec64};
use std::f64::consts::TAU;

/// How a torus map closes up across the periods.
#[derive(Debug, Clone, PartialEq)]
pub enum Periodicity {
    /// Values are honestly periodic.
    Periodic,
    /// Flat chart: value = W·(x,y) + periodic part; `winding[c] = [Wcx, Wcy]`
    /// for each real component c.
    FlatWinding { winding: Vec<[i64; 2]> },
    /// n = 1 ball chart: q(x+2π, y) = γ_ρ(q(x, y)); y stays periodic.
    MoebiusTwist { rho: f64 },
}

/// Disk automorphism γ_ρ(z) = (z+ρ)/(1+ρz) with real ρ ∈ (−1,1).
pub fn mobius(rho: f64, z: C64) -> C64 {
    (z + rho) / (1.0 + rho * z)
}

/// Inverse automorphism γ_ρ⁻¹ = γ_{−ρ}.
pub fn mobius_inverse(rho: f64, z: C64) -> C64 {
    mobius(-rho, z)
}

/// Derivative γ_ρ'(z) = (1−ρ²)/(1+ρz)².
pub fn mobius_derivative(rho: f64, z: C64) -> C64 {
    let d = 1.0 + rho * z;
    (1.0 - rho * rho) / (d * d)
}

/// A discretized map 𝕋² → chart.
#[derive(Debug, Clone)]
pub struct TorusMap {
    pub chart: BaseChart,
    pub periodicity: Periodicity,
    pub grid: TorusGrid,
    /// Periodic parts of the 2n real components, each of length nx·ny.
    pub comps: Vec<Vec<f64>>,
}

impl TorusMap {
    pub fn zeros(chart: BaseChart, grid: TorusGrid, periodicity: Periodicity) -> Self {
        let comps = vec![vec![0.0; grid.len()]; chart.dim()];
        if let Periodicity::MoebiusTwist { .. } = periodicity {
            assert_eq!(chart.n(), 1, "Möbius twist is a one-dimensional identification");
            assert!(chart.is_curved(), "Möbius twist lives on the ball chart");
        }
        if let Periodicity::FlatWinding { winding } = &periodicity {
            assert_eq!(winding.len(), chart.dim());
            assert!(!chart.is_curved(), "winding lives on the flat chart");
        }
        TorusMap {
            chart,
            periodicity,
            grid,
            comps,
        }
    }

    /// Fills from a pointwise function of (x, y) giving full values; the
    /// winding part is subtracted before storing.
    pub fn from_fn(
        chart: BaseChart,
        grid: TorusGrid,
        periodicity: Periodicity,
        f: impl Fn(f64, f64) -> Vec64,
    ) -> Self {
        let mut map = TorusMap::zeros(chart, grid, periodicity);
        for iy in 0..map.grid.ny {
            for ix in 0..map.grid.nx {
                let v = f(map.grid.x(ix), map.grid.y(iy));
                let idx = map.grid.idx(ix, iy);
                for c in 0..map.chart.dim() {
                    let lin = map.winding_part(c, map.grid.x(ix), map.grid.y(iy));
                    map.comps[c][idx] = v[c] - lin;
                }
            }
        }
        map
    }

    fn winding_part(&self, c: usize, x: f64, y: f64) -> f64 {
        match &self.periodicity {
            Periodicity::FlatWinding { winding } => {
                winding[c][0] as f64 * x + winding[c][1] as f64 * y
            }
            _ => 0.0,
        }
    }

    /// Full value at a node (periodic part plus winding contribution).
    pub fn value(&self, ix: usize, iy: usize) -> Vec64 {
        let idx = self.grid.idx(ix, iy);
        Vec64::from_fn(self.chart.dim(), |c, _| {
            self.comps[c][idx] + self.winding_part(c, self.grid.x(ix), self.grid.y(iy))
        })
    }

    fn twisted_neighbors(&self, rho: f64, ix: usize, iy: usize) -> (C64, C64) {
        let nx = self.grid.nx;
        let at = |i: usize| {
            let idx = self.grid.idx(i, iy);
            C64::new(self.comps[0][idx], self.comps[1][idx])
        };
        let left = if ix == 0 {
            mobius_inverse(rho, at(nx - 1))
        } else {
            at(ix - 1)
        };
        let right = if ix == nx - 1 {
            mobius(rho, at(0))
        } else {
            at(ix + 1)
        };
        (left, right)
    }

    /// ∂/∂x of every component: spectral plus winding constant, or twisted
    /// central differences across the seam.
    pub fn derivative_x(&self) -> Vec<Vec<f64>> {
        match &self.periodicity {
            Periodicity::Periodic => self.comps.iter().map(|c| self.grid.dx(c)).collect(),
            Periodicity::FlatWinding { winding } => self
                .comps
                .iter()
                .enumerate()
                .map(|(c, f)| {
                    let mut d = self.grid.dx(f);
                    for v in &mut d {
                        *v += winding[c][0] as f64;
                    }
                    d
                })
                .collect(),
            Periodicity::MoebiusTwist { rho } => {
                let h = TAU / self.grid.nx as f64;
                let mut out = vec![vec![0.0; self.grid.len()]; 2];
                for iy in 0..self.grid.ny {
                    for ix in 0..self.grid.nx {
                        let (l, r) = self.twisted_neighbors(*rho, ix, iy);
                        let d = (r - l) / (2.0 * h);
                        let idx = self.grid.idx(ix, iy);
                        out[0][idx] = d.re;
                        out[1][idx] = d.im;
                    }
                }
                out
            }
        }
    }

    /// ∂/∂y of every component (always spectral; y is a true period).
    pub fn derivative_y(&self) -> Vec<Vec<f64>> {
        match &self.periodicity {
            Periodicity::FlatWinding { winding } => self
                .comps
                .iter()
                .enumerate()
                .map(|(c, f)| {
                    let mut d = self.grid.dy(f);
                    for v in &mut d {
                        *v += winding[c][1] as f64;
                    }
                    d
                })
                .collect(),
            _ => self.comps.iter().map(|c| self.grid.dy(c)).collect(),
        }
    }

    /// ∂²/∂x² of every component.
    pub fn second_x(&self) -> Vec<Vec<f64>> {
        match &self.periodicity {
            Periodicity::MoebiusTwist { rho } => {
                let h = TAU / self.grid.nx as f64;
                let mut out = vec![vec![0.0; self.grid.len()]; 2];
                for iy in 0..self.grid.ny {
                    for ix in 0..self.grid.nx {
                        let idx = self.grid.idx(ix, iy);
                        let c = C64::new(self.comps[0][idx], self.comps[1][idx]);
                        let (l, r) = self.twisted_neighbors(*rho, ix, iy);
                        let d = (l - 2.0 * c + r) / (h * h);
                        out[0][idx] = d.re;
                        out[1][idx] = d.im;
                    }
                }
                out
            }
            _ => self.comps.iter().map(|c| self.grid.dxx(c)).collect(),
        }
    }

    /// ∂²/∂y² of every component.
    pub fn second_y(&self) -> Vec<Vec<f64>> {
        self.comps.iter().map(|c| self.grid.dyy(c)).collect()
    }

    /// Largest |q| over nodes (chart-exit monitoring on the ball).
    pub fn max_radius(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                worst = worst.max(self.value(ix, iy).norm());
            }
        }
        worst
    }
}

/// A momentum (covector) field over the same grid as a torus map. Stored
/// plainly; any twisted-seam transport is applied by the consumer, since the
/// transformation rule P ↦ P/γ' depends on the paired base map.
#[derive(Debug, Clone)]
pub struct MomentumMap {
    pub grid: TorusGrid,
    pub comps: Vec<Vec<f64>>,
}

impl MomentumMap {
    pub fn zeros(dim: usize, grid: TorusGrid) -> Self {
        MomentumMap {
            comps: vec![vec![0.0; grid.len()]; dim],
            grid,
        }
    }

    pub fn value(&self, ix: usize, iy: usize) -> Vec64 {
        let idx = self.grid.idx(ix, iy);
        Vec64::from_fn(self.comps.len(), |c, _| self.comps[c][idx])
    }
}

/// Space-time state Z = (q,p) on the cylinder, stored as one flat vector with
/// the component index innermost: entry c + 4n·(ix + nx·(iy + ny·js)).
#[derive(Debug, Clone)]
pub struct CylinderState {
    pub n: usize,
    pub ns: usize,
    pub nx: usize,
    pub ny: usize,
    pub data: Vec64,
}

impl CylinderState {
    pub fn zeros(n: usize, ns: usize, nx: usize, ny: usize) -> Self {
        CylinderState {
            n,
            ns,
            nx,
            ny,
            data: Vec64::zeros(4 * n * ns * nx * ny),
        }
    }

    /// Number of real components per node (4n).
    pub fn comps(&self) -> usize {
        4 * self.n
    }

    /// Flat offset of the node block (js, ix, iy).
    pub fn node_offset(&self, js: usize, ix: usize, iy: usize) -> usize {
        self.comps() * (ix + self.nx * (iy + self.ny * js))
    }

    /// The (q,p) block at a node.
    pub fn node(&self, js: usize, ix: usize, iy: usize) -> Vec64 {
        self.data
            .rows(self.node_offset(js, ix, iy), self.comps())
            .into_owned()
    }

    pub fn set_node(&mut self, js: usize, ix: usize, iy: usize, z: &Vec64) {
        let off = self.node_offset(js, ix, iy);
        self.data.rows_mut(off, self.comps()).copy_from(z);
    }

    /// Gathers one component over a fixed s-slice into grid layout.
    pub fn slice_component(&self, c: usize, js: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.ny];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out[ix + self.nx * iy] = self.data[self.node_offset(js, ix, iy) + c];
            }
        }
        out
    }

    /// Scatters one component of a fixed s-slice back from grid layout.
    pub fn set_slice_component(&mut self, c: usize, js: usize, vals: &[f64]) {
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let off = self.node_offset(js, ix, iy) + c;
                self.data[off] = vals[ix + self.nx * iy];
            }
        }
    }

    /// Splits a node block into (q, p).
    pub fn split(z: &Vec64) -> (Vec64, Vec64) {
        let d = z.len() / 2;
        (z.rows(0, d).into_owned(), z.rows(d, d).into_owned())
    }
}
