use rayon::prelude::*;

/// Smoothed isotropic total variation `Σ √(‖∇x‖² + ε²)` with forward
/// differences and Neumann boundary (zero difference past the last voxel).
#[derive(Clone, Copy, Debug)]
pub struct SmoothTv {
    pub dims: [usize; 3],
    pub epsilon: f64,
}

const CHUNK: usize = 4096;

impl SmoothTv {
    #[inline]
    fn diffs(&self, x: &[f64], v: usize) -> [f64; 3] {
        let [nx, ny, nz] = self.dims;
        let i = v % nx;
        let j = (v / nx) % ny;
        let k = v / (nx * ny);
        let gx = if i + 1 < nx { x[v + 1] - x[v] } else { 0.0 };
        let gy = if j + 1 < ny { x[v + nx] - x[v] } else { 0.0 };
        let gz = if k + 1 < nz { x[v + nx * ny] - x[v] } else { 0.0 };
        [gx, gy, gz]
    }

    #[inline]
    fn norm(&self, g: [f64; 3]) -> f64 {
        (g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + self.epsilon * self.epsilon).sqrt()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        // fixed chunks summed in order, independent of the thread count
        let partial: Vec<f64> = (0..x.len())
            .into_par_iter()
            .step_by(CHUNK)
            .map(|s| (s..(s + CHUNK).min(x.len())).map(|v| self.norm(self.diffs(x, v))).sum())
            .collect();
        partial.into_iter().sum()
    }

    /// Gradient of [`SmoothTv::value`].
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let [nx, ny, _] = self.dims;
        let n = x.len();
        // normalised differences p = ∇x / |∇x|_ε
        let p: Vec<[f64; 3]> = (0..n)
            .into_par_iter()
            .map(|v| {
                let g = self.diffs(x, v);
                let s = self.norm(g);
                [g[0] / s, g[1] / s, g[2] / s]
            })
            .collect();
        // gradient = −div p
        (0..n)
            .into_par_iter()
            .map(|v| {
                let i = v % nx;
                let j = (v / nx) % ny;
                let k = v / (nx * ny);
                let mut out = -(p[v][0] + p[v][1] + p[v][2]);
                if i > 0 {
                    out += p[v - 1][0];
                }
                if j > 0 {
                    out += p[v - nx][1];
                }
                if k > 0 {
                    out += p[v - nx * ny][2];
                }
                out
            })
            .collect()
    }
}
