//! Discretization grids: the spectral 2-torus and the finite-difference
//! cylinder axis.
//!
//! The torus is [0,2π)² with uniform nodes and integer wavenumbers; first
//! derivatives are spectral with the Nyquist mode zeroed (so they remain
//! skew-adjoint on even grids), second derivatives keep the full symbol.
//! The cylinder axis [−S, S] uses second-order centered differences with
//! one-sided three-point closures at the ends and trapezoid quadrature.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Uniform spectral grid on 𝕋² = [0,2π)².
#[derive(Clone)]
pub struct TorusGrid {
    pub nx: usize,
    pub ny: usize,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TorusGrid({}×{})", self.nx, self.ny)
    }
}

/// Integer wavenumber of bin `i` on an `n`-point grid.
pub fn wavenumber(i: usize, n: usize) -> f64 {
    if 2 * i <= n {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Wavenumber as used by first derivatives: the fold of [`wavenumber`]
/// with the unpaired Nyquist mode mapped to zero, so d/dx stays skew.
pub fn d1_wavenumber(i: usize, n: usize) -> f64 {
    if n % 2 == 0 && 2 * i == n {
        0.0
    } else {
        wavenumber(i, n)
    }
}

impl TorusGrid {
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx >= 2 && ny >= 2, "torus grid needs at least 2 points per axis");
        let mut planner = FftPlanner::new();
        TorusGrid {
            nx,
            ny,
            fft_x: planner.plan_fft_forward(nx),
            ifft_x: planner.plan_fft_inverse(nx),
            fft_y: planner.plan_fft_forward(ny),
            ifft_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, ix: usize) -> f64 {
        TAU * ix as f64 / self.nx as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        TAU * iy as f64 / self.ny as f64
    }

    /// Row-major node index with x contiguous.
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix + self.nx * iy
    }

    fn derivative_rows(
        &self,
        f: &[f64],
        order: u32,
        along_x: bool,
    ) -> Vec<f64> {
        assert_eq!(f.len(), self.len());
        let (n, fft, ifft) = if along_x {
            (self.nx, &self.fft_x, &self.ifft_x)
        } else {
            (self.ny, &self.fft_y, &self.ifft_y)
        };
        let mut out = vec![0.0; f.len()];
        let mut buf: Vec<Complex64> = vec![Complex64::ZERO; n];
        let lines = if along_x { self.ny } else { self.nx };
        for line in 0..lines {
            for i in 0..n {
                let idx = if along_x {
                    self.idx(i, line)
                } else {
                    self.idx(line, i)
                };
                buf[i] = Complex64::new(f[idx], 0.0);
            }
            fft.process(&mut buf);
            for (i, b) in buf.iter_mut().enumerate() {
                let k = wavenumber(i, n);
                let sym = match order {
                    1 => Complex64::new(0.0, d1_wavenumber(i, n)),
                    2 => Complex64::new(-k * k, 0.0),
                    _ => unreachable!(),
                };
                *b *= sym;
            }
            ifft.process(&mut buf);
            let scale = 1.0 / n as f64;
            for i in 0..n {
                let idx = if along_x {
                    self.idx(i, line)
                } else {
                    self.idx(line, i)
                };
                out[idx] = buf[i].re * scale;
            }
        }
        out
    }

    /// Spectral ∂/∂x of a scalar field.
    pub fn dx(&self, f: &[f64]) -> Vec<f64> {
        self.derivative_rows(f, 1, true)
    }

    /// Spectral ∂/∂y of a scalar field.
    pub fn dy(&self, f: &[f64]) -> Vec<f64> {
        self.derivative_rows(f, 1, false)
    }

    /// Spectral ∂²/∂x².
    pub fn dxx(&self, f: &[f64]) -> Vec<f64> {
        self.derivative_rows(f, 2, true)
    }

    /// Spectral ∂²/∂y².
    pub fn dyy(&self, f: &[f64]) -> Vec<f64> {
        self.derivative_rows(f, 2, false)
    }

    /// Spectral Laplacian ∂²ₓ + ∂²_y.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut out = self.dxx(f);
        for (o, v) in out.iter_mut().zip(self.dyy(f)) {
            *o += v;
        }
        out
    }

    /// Normalized mean ⨍ f = (1/4π²)∫f dxdy (node average).
    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / f.len() as f64
    }

    /// Raw integral ∫f dxdy over the full torus.
    pub fn integral(&self, f: &[f64]) -> f64 {
        self.mean(f) * TAU * TAU
    }

    /// L² norm with the raw measure.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
        self.integral(&sq).max(0.0).sqrt()
    }

    /// In-place unnormalized forward 2D FFT on row-major complex data.
    pub fn fft2_complex(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        let mut buf: Vec<Complex64> = vec![Complex64::ZERO; self.ny];
        for iy in 0..self.ny {
            let row = &mut data[iy * self.nx..(iy + 1) * self.nx];
            self.fft_x.process(row);
        }
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                buf[iy] = data[self.idx(ix, iy)];
            }
            self.fft_y.process(&mut buf[..self.ny]);
            for iy in 0..self.ny {
                data[self.idx(ix, iy)] = buf[iy];
            }
        }
    }

    /// In-place unnormalized inverse 2D FFT; the caller divides by nx·ny.
    pub fn ifft2_complex(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        let mut buf: Vec<Complex64> = vec![Complex64::ZERO; self.ny];
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                buf[iy] = data[self.idx(ix, iy)];
            }
            self.ifft_y.process(&mut buf[..self.ny]);
            for iy in 0..self.ny {
                data[self.idx(ix, iy)] = buf[iy];
            }
        }
        for iy in 0..self.ny {
            let row = &mut data[iy * self.nx..(iy + 1) * self.nx];
            self.ifft_x.process(row);
        }
    }

    /// Forward complex 2D FFT of a real field, unnormalized.
    pub fn fft2(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2_complex(&mut data);
        data
    }

    /// Inverse of [`Self::fft2`], returning the real part (with 1/(nx·ny)).
    pub fn ifft2(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut data = spec.to_vec();
        self.ifft2_complex(&mut data);
        let scale = 1.0 / self.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }
}

/// Finite cylinder [−S, S] × 𝕋² with a second-order axis discretization.
#[derive(Clone, Debug)]
pub struct CylinderGrid {
    /// Half-length S.
    pub s_half: f64,
    /// Number of axis nodes including both endpoints.
    pub ns: usize,
    pub torus: TorusGrid,
}

impl CylinderGrid {
    pub fn new(s_half: f64, ns: usize, nx: usize, ny: usize) -> Self {
        assert!(ns >= 5, "cylinder axis needs at least 5 nodes");
        assert!(s_half > 0.0);
        CylinderGrid {
            s_half,
            ns,
            torus: TorusGrid::new(nx, ny),
        }
    }

    /// Axis spacing.
    pub fn ds(&self) -> f64 {
        2.0 * self.s_half / (self.ns - 1) as f64
    }

    /// Axis coordinate of node j.
    pub fn s(&self, j: usize) -> f64 {
        -self.s_half + j as f64 * self.ds()
    }

    /// Total number of spatial nodes ns·nx·ny.
    pub fn len(&self) -> usize {
        self.ns * self.torus.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Second-order d/ds of a per-node line: centered inside, one-sided
    /// three-point stencils at the two ends.
    pub fn d_s_line(&self, line: &[f64]) -> Vec<f64> {
        assert_eq!(line.len(), self.ns);
        let ds = self.ds();
        let m = self.ns;
        let mut out = vec![0.0; m];
        out[0] = (-3.0 * line[0] + 4.0 * line[1] - line[2]) / (2.0 * ds);
        for j in 1..m - 1 {
            out[j] = (line[j + 1] - line[j - 1]) / (2.0 * ds);
        }
        out[m - 1] = (3.0 * line[m - 1] - 4.0 * line[m - 2] + line[m - 3]) / (2.0 * ds);
        out
    }

    /// Trapezoid weights along the axis.
    pub fn s_weights(&self) -> Vec<f64> {
        let ds = self.ds();
        let mut w = vec![ds; self.ns];
        w[0] = 0.5 * ds;
        w[self.ns - 1] = 0.5 * ds;
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wavenumbers_fold_correctly() {
        let ks: Vec<f64> = (0..8).map(|i| wavenumber(i, 8)).collect();
        assert_eq!(ks, vec![0.0, 1.0, 2.0, 3.0, 4.0, -3.0, -2.0, -1.0]);
        let ks: Vec<f64> = (0..5).map(|i| wavenumber(i, 5)).collect();
        assert_eq!(ks, vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }

    #[test]
    fn spectral_derivatives_are_exact_on_trig_polynomials() {
        let g = TorusGrid::new(16, 12);
        let mut f = vec![0.0; g.len()];
        let mut dfx = vec![0.0; g.len()];
        let mut dfy = vec![0.0; g.len()];
        let mut lap = vec![0.0; g.len()];
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let (x, y) = (g.x(ix), g.y(iy));
                let i = g.idx(ix, iy);
                f[i] = (3.0 * x).sin() * (2.0 * y).cos() + 0.5 * (x - 2.0 * y).cos();
                dfx[i] = 3.0 * (3.0 * x).cos() * (2.0 * y).cos() - 0.5 * (x - 2.0 * y).sin();
                dfy[i] = -2.0 * (3.0 * x).sin() * (2.0 * y).sin() + (x - 2.0 * y).sin();
                lap[i] = -13.0 * (3.0 * x).sin() * (2.0 * y).cos() - 2.5 * (x - 2.0 * y).cos();
            }
        }
        let gx = g.dx(&f);
        let gy = g.dy(&f);
        let gl = g.laplacian(&f);
        for i in 0..g.len() {
            assert_relative_eq!(gx[i], dfx[i], epsilon = 1e-11);
            assert_relative_eq!(gy[i], dfy[i], epsilon = 1e-11);
            assert_relative_eq!(gl[i], lap[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn nyquist_mode_is_dropped_in_first_derivatives() {
        let g = TorusGrid::new(8, 8);
        // cos(4x) lives exactly on the Nyquist bin of an 8-point grid.
        let mut f = vec![0.0; g.len()];
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                f[g.idx(ix, iy)] = (4.0 * g.x(ix)).cos();
            }
        }
        let gx = g.dx(&f);
        for v in gx {
            assert!(v.abs() < 1e-12);
        }
        // …but kept in the second derivative: d²/dx² cos(4x) = −16 cos(4x).
        let gxx = g.dxx(&f);
        for i in 0..g.len() {
            assert_relative_eq!(gxx[i], -16.0 * f[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn mean_and_integral() {
        let g = TorusGrid::new(8, 8);
        let ones = vec![1.0; g.len()];
        assert_relative_eq!(g.mean(&ones), 1.0);
        assert_relative_eq!(g.integral(&ones), TAU * TAU, max_relative = 1e-14);
        let mut cosx = vec![0.0; g.len()];
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                cosx[g.idx(ix, iy)] = g.x(ix).cos();
            }
        }
        assert!(g.mean(&cosx).abs() < 1e-14);
    }

    #[test]
    fn fft_round_trip() {
        let g = TorusGrid::new(12, 10);
        let f: Vec<f64> = (0..g.len()).map(|i| ((i * 37 % 97) as f64).sin()).collect();
        let back = g.ifft2(&g.fft2(&f));
        for (a, b) in f.iter().zip(&back) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn axis_derivative_is_exact_on_quadratics() {
        let c = CylinderGrid::new(3.0, 31, 4, 4);
        let line: Vec<f64> = (0..c.ns).map(|j| { let s = c.s(j); 2.0 * s * s - s + 1.0 }).collect();
        let d = c.d_s_line(&line);
        for j in 0..c.ns {
            assert_relative_eq!(d[j], 4.0 * c.s(j) - 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn trapezoid_weights_integrate_linears_exactly() {
        let c = CylinderGrid::new(2.0, 21, 4, 4);
        let w = c.s_weights();
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 4.0, max_relative = 1e-14);
        let integral: f64 = (0..c.ns).map(|j| w[j] * (3.0 * c.s(j) + 1.0)).sum();
        assert_relative_eq!(integral, 4.0, max_relative = 1e-13);
    }
}
