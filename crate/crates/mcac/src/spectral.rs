//! Fourier differentiation on uniform periodic grids and the cosine-basis
//! Poisson-type solve used by the Neumann phase-field stepper.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Spectral derivative machinery for one periodic grid size.
pub struct PeriodicSpectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl PeriodicSpectral {
    /// Grid of `n` uniform nodes on [0, 2*pi).
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        PeriodicSpectral {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn to_modes(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn from_modes(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Signed wavenumber of mode index k for period 2*pi.
    fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n;
        if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            // Nyquist mode: derivative contribution is taken as zero.
            0.0
        } else {
            k as f64 - n as f64
        }
    }

    /// First derivative d/d(theta).
    pub fn deriv(&self, values: &[f64]) -> Vec<f64> {
        let mut modes = self.to_modes(values);
        for (k, m) in modes.iter_mut().enumerate() {
            let w = self.wavenumber(k);
            *m *= Complex::new(0.0, w);
        }
        self.from_modes(modes)
    }

    /// Second derivative d^2/d(theta)^2. The Nyquist mode keeps its exact
    /// multiplier -(n/2)^2 (it is real for real input).
    pub fn deriv2(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut modes = self.to_modes(values);
        for (k, m) in modes.iter_mut().enumerate() {
            let w = if 2 * k < n {
                k as f64
            } else if 2 * k == n {
                (n / 2) as f64
            } else {
                n as f64 - k as f64
            };
            *m *= -w * w;
        }
        self.from_modes(modes)
    }

    /// Solve (1 - s * d^2/dtheta^2) x = rhs: modes divided by (1 + s k^2).
    pub fn solve_identity_minus_deriv2(&self, rhs: &[f64], s: f64) -> Vec<f64> {
        let n = self.n;
        let mut modes = self.to_modes(rhs);
        for (k, m) in modes.iter_mut().enumerate() {
            let w = if 2 * k < n {
                k as f64
            } else if 2 * k == n {
                (n / 2) as f64
            } else {
                n as f64 - k as f64
            };
            *m /= 1.0 + s * w * w;
        }
        self.from_modes(modes)
    }

    /// Antiderivative F(theta) = integral from 0 to theta of `values`,
    /// including the linear-in-theta part from the mean. F(0) = 0.
    pub fn cumulative(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut modes = self.to_modes(values);
        let mean = modes[0].re / n as f64;
        modes[0] = Complex::new(0.0, 0.0);
        for k in 1..n {
            let w = self.wavenumber(k);
            if w == 0.0 {
                modes[k] = Complex::new(0.0, 0.0);
            } else {
                modes[k] /= Complex::new(0.0, w);
            }
        }
        let osc = self.from_modes(modes);
        let osc0 = osc[0];
        let dtheta = 2.0 * std::f64::consts::PI / n as f64;
        (0..n)
            .map(|j| mean * (j as f64 * dtheta) + osc[j] - osc0)
            .collect()
    }
}

/// 2-D cosine-basis solver for (I - s*Laplacian) u = b on an N x N
/// cell-centered grid with mirror (homogeneous Neumann) boundaries.
///
/// The DCT-II basis vectors cos(pi*k*(2j+1)/(2n)) are exact eigenvectors of
/// the mirrored five-point Laplacian, so the solve is exact in that basis.
pub struct NeumannSolver {
    n: usize,
    /// 1-D symbol of the second difference: -4/dx^2 * sin^2(pi k / 2n).
    lam: Vec<f64>,
    fft2n: Arc<dyn Fft<f64>>,
    ifft2n: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl NeumannSolver {
    pub fn new(n: usize, dx: f64) -> Self {
        let mut planner = FftPlanner::new();
        let lam = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
                -4.0 / (dx * dx) * s * s
            })
            .collect();
        NeumannSolver {
            n,
            lam,
            fft2n: planner.plan_fft_forward(2 * n),
            ifft2n: planner.plan_fft_inverse(2 * n),
            scratch: vec![Complex::new(0.0, 0.0); 2 * n],
        }
    }

    /// DCT-II along one row in place (unnormalized: C_k = sum_j x_j cos(...)).
    fn dct2_row(&mut self, row: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            self.scratch[j] = Complex::new(row[j], 0.0);
            self.scratch[2 * n - 1 - j] = Complex::new(row[j], 0.0);
        }
        self.fft2n.process(&mut self.scratch);
        for k in 0..n {
            let ang = -std::f64::consts::PI * k as f64 / (2.0 * n as f64);
            let tw = Complex::new(ang.cos(), ang.sin());
            row[k] = 0.5 * (tw * self.scratch[k]).re;
        }
    }

    /// Inverse of `dct2_row` (DCT-III with matching normalization).
    fn dct3_row(&mut self, row: &mut [f64]) {
        let n = self.n;
        // Rebuild the spectrum Y[k] = 2 exp(i pi k / 2n) C_k of the
        // symmetric extension and invert the 2n FFT.
        self.scratch[0] = Complex::new(2.0 * row[0], 0.0);
        self.scratch[n] = Complex::new(0.0, 0.0);
        for k in 1..n {
            let ang = std::f64::consts::PI * k as f64 / (2.0 * n as f64);
            let tw = Complex::new(ang.cos(), ang.sin());
            let y = tw * Complex::new(2.0 * row[k], 0.0);
            self.scratch[k] = y;
            self.scratch[2 * n - k] = y.conj();
        }
        self.ifft2n.process(&mut self.scratch);
        let scale = 1.0 / (2.0 * n as f64);
        for j in 0..n {
            row[j] = self.scratch[j].re * scale;
        }
    }

    fn transform_2d(&mut self, u: &mut [f64], forward: bool) {
        let n = self.n;
        let mut tmp = vec![0.0; n];
        // Rows.
        for i in 0..n {
            let row = &mut u[i * n..(i + 1) * n];
            if forward {
                self.dct2_row(row);
            } else {
                self.dct3_row(row);
            }
        }
        // Columns.
        for j in 0..n {
            for i in 0..n {
                tmp[i] = u[i * n + j];
            }
            if forward {
                self.dct2_row(&mut tmp);
            } else {
                self.dct3_row(&mut tmp);
            }
            for i in 0..n {
                u[i * n + j] = tmp[i];
            }
        }
    }

    /// Solve (I - s*Laplacian) u = b in place. `s >= 0`.
    pub fn solve_identity_minus(&mut self, b: &mut [f64], s: f64) {
        let n = self.n;
        assert_eq!(b.len(), n * n);
        self.transform_2d(b, true);
        for i in 0..n {
            for j in 0..n {
                let denom = 1.0 - s * (self.lam[i] + self.lam[j]);
                b[i * n + j] /= denom;
            }
        }
        self.transform_2d(b, false);
        // Undo the DCT-II/DCT-III normalization mismatch: the round trip
        // multiplies mode k by n/2 (k>0) or n (k=0) per dimension; the
        // dct3_row above already accounts for it, so nothing further here.
    }
}
