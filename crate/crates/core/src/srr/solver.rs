use std::io::Write;
use std::path::Path;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::acquisition::SimulatedStack;
use crate::error::{Error, Result};
use crate::srr::{ForwardOperator, SmoothTv};
use crate::volume::IntensityVolume;

/// Reconstruction settings. `lambda` and `epsilon` default to fractions of
/// the observed dynamic range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iterations: usize,
    /// Relative objective change below which iteration stops.
    pub tolerance: f64,
    /// Isotropic spacing of the reconstruction grid.
    pub hr_spacing_mm: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: None,
            epsilon: None,
            max_iterations: 200,
            tolerance: 1e-6,
            hr_spacing_mm: 0.8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("solver: {m}")));
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return bad("lambda must be non-negative");
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad("epsilon must be positive");
            }
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(self.hr_spacing_mm > 0.0 && self.hr_spacing_mm.is_finite()) {
            return bad("HR spacing must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub volume: IntensityVolume,
    /// Entry 0 is the initial estimate.
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub lambda: f64,
    pub epsilon: f64,
}

impl Reconstruction {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.objective)
    }

    /// Writes the convergence log as `iteration,objective,step`.
    pub fn write_log(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        let mut put = || -> std::io::Result<()> {
            writeln!(w, "iteration,objective,step")?;
            for r in &self.trace {
                writeln!(w, "{},{:.12e},{:.6e}", r.iteration, r.objective, r.step)?;
            }
            w.flush()
        };
        put().map_err(|e| Error::io(path, e))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `½‖Ax − y‖² + λ·TVε(x)` with its gradient.
pub struct Objective<'a> {
    pub op: &'a ForwardOperator,
    pub y: &'a [f64],
    pub lambda: f64,
    pub tv: SmoothTv,
}

impl Objective<'_> {
    fn combine(&self, residual: &[f64], x: &[f64]) -> f64 {
        let data = 0.5 * dot(residual, residual);
        if self.lambda > 0.0 {
            data + self.lambda * self.tv.value(x)
        } else {
            data
        }
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.op.forward(x);
        for (ri, yi) in r.iter_mut().zip(self.y) {
            *ri -= yi;
        }
        r
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.combine(&self.residual(x), x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_from(&self.residual(x), x)
    }

    fn gradient_from(&self, residual: &[f64], x: &[f64]) -> Vec<f64> {
        let mut g = self.op.adjoint(residual);
        if self.lambda > 0.0 {
            for (gi, ti) in g.iter_mut().zip(self.tv.gradient(x)) {
                *gi += self.lambda * ti;
            }
        }
        g
    }
}

/// Dynamic range of the observed samples.
fn dynamic_range(y: &[f64], mask: &[bool]) -> f64 {
    let (lo, hi) = y
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)));
    if hi > lo {
        hi - lo
    } else {
        hi.abs().max(1.0)
    }
}

/// Normalised back-projection `Aᵀy ⊘ Aᵀ1`, zero where no sample reaches.
pub fn initial_estimate(op: &ForwardOperator, y: &[f64]) -> Vec<f64> {
    let ones: Vec<f64> = op.mask().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let num = op.adjoint(y);
    let den = op.adjoint(&ones);
    num.iter()
        .zip(&den)
        .map(|(&n, &d)| if d > 1e-12 { n / d } else { 0.0 })
        .collect()
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

/// Minimises `½‖Ax − y‖² + λ·TVε(x)` by gradient descent with
/// Barzilai-Borwein steps and Armijo backtracking; every accepted step
/// decreases the objective.
pub fn sr_reconstruct(
    op: &ForwardOperator,
    stacks: &[SimulatedStack],
    cfg: &SolverConfig,
) -> Result<Reconstruction> {
    cfg.validate()?;
    let y = op.observations(stacks)?;
    let range = dynamic_range(&y, op.mask());
    let lambda = cfg.lambda.unwrap_or(0.01 * range);
    let epsilon = cfg.epsilon.unwrap_or(1e-3 * range);
    let obj = Objective {
        op,
        y: &y,
        lambda,
        tv: SmoothTv {
            dims: op.hr_grid().dims(),
            epsilon,
        },
    };
    info!(
        "reconstructing {} voxels from {} samples, lambda {lambda:.4e}, epsilon {epsilon:.4e}",
        op.n_cols(),
        op.mask().iter().filter(|&&m| m).count()
    );

    let mut x = initial_estimate(op, &y);
    let mut r = obj.residual(&x);
    let mut f = obj.combine(&r, &x);
    let mut trace = vec![IterationRecord {
        iteration: 0,
        objective: f,
        step: 0.0,
    }];
    let diverged = |iteration: usize, trace: &[IterationRecord]| Error::Diverged {
        iteration,
        trace: trace.iter().map(|t| t.objective).collect(),
    };
    if !f.is_finite() {
        return Err(diverged(0, &trace));
    }
    let mut g = obj.gradient_from(&r, &x);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iterations {
        let gg = dot(&g, &g);
        if gg == 0.0 {
            converged = true;
            break;
        }
        let ag = op.forward(&g);
        // first step: exact minimiser of the data term along −g
        let mut alpha = match &prev {
            Some((s, dy)) => {
                let sy = dot(s, dy);
                if sy > 0.0 {
                    dot(s, s) / sy
                } else {
                    gg / dot(&ag, &ag).max(f64::MIN_POSITIVE)
                }
            }
            None => gg / dot(&ag, &ag).max(f64::MIN_POSITIVE),
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let xn: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
            let rn: Vec<f64> = r.iter().zip(&ag).map(|(ri, ai)| ri - alpha * ai).collect();
            let fn_ = obj.combine(&rn, &xn);
            if !fn_.is_finite() {
                return Err(diverged(it, &trace));
            }
            if fn_ <= f - ARMIJO * alpha * gg {
                accepted = Some((xn, rn, fn_));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, rn, fn_)) = accepted else {
            debug!("line search stalled at iteration {it}");
            converged = true;
            break;
        };
        let gn = obj.gradient_from(&rn, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        prev = Some((s, dy));
        let change = (f - fn_).abs() / f.abs().max(f64::MIN_POSITIVE);
        x = xn;
        r = rn;
        f = fn_;
        g = gn;
        iterations = it;
        trace.push(IterationRecord {
            iteration: it,
            objective: f,
            step: alpha,
        });
        debug!("iteration {it}: objective {f:.6e}, step {alpha:.3e}");
        if change < cfg.tolerance {
            converged = true;
            break;
        }
    }
    info!("stopped after {iterations} iterations, objective {f:.6e}");
    let data: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    Ok(Reconstruction {
        volume: IntensityVolume::new(op.hr_grid().clone(), data)?,
        trace,
        iterations,
        converged,
        lambda,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{
        sample_motion, simulate_stack, MotionLevel, MotionTrace, Orientation, SequenceParams,
        SliceProfile, StackGeometry,
    };
    use crate::srr::build_operator;
    use crate::volume::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_volume(g: &Grid, seed: u64) -> IntensityVolume {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        IntensityVolume::new(g.clone(), (0..g.len()).map(|_| r.random::<f32>()).collect()).unwrap()
    }

    fn small_problem(seed: u64) -> (ForwardOperator, Vec<SimulatedStack>) {
        let hr = Grid::centered([8; 3], [1.0; 3]).unwrap();
        let truth = random_volume(&hr, seed);
        let seq = SequenceParams {
            snr_db: Some(20.0),
            ..Default::default()
        };
        let stacks: Vec<_> = Orientation::ALL
            .into_iter()
            .map(|o| {
                let g = StackGeometry::covering(hr.world_bounds(), o, 1.1, 2.0, 2.0, 0.0).unwrap();
                let m = sample_motion(MotionLevel::Little, g.n_slices(), seed);
                simulate_stack(&truth, &g, &m, &seq, seed).unwrap()
            })
            .collect();
        (build_operator(&stacks, &hr).unwrap(), stacks)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..3 {
            let (op, stacks) = small_problem(seed);
            let y = op.observations(&stacks).unwrap();
            let obj = Objective {
                op: &op,
                y: &y,
                lambda: 0.05,
                tv: SmoothTv { dims: [8; 3], epsilon: 0.05 },
            };
            let mut r = ChaCha8Rng::seed_from_u64(seed + 10);
            let x: Vec<f64> = (0..op.n_cols()).map(|_| r.random::<f64>()).collect();
            let g = obj.gradient(&x);
            let h = 1e-5;
            for _ in 0..20 {
                let i = r.random_range(0..x.len());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-4 * fd.abs().max(g[i].abs()).max(1e-2), "{fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn objective_is_monotone() {
        let (op, stacks) = small_problem(4);
        let rec = sr_reconstruct(&op, &stacks, &SolverConfig { max_iterations: 50, ..Default::default() }).unwrap();
        for w in rec.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12);
        }
    }

    #[test]
    fn identity_system_recovers_stack() {
        let hr = Grid::centered([6, 6, 6], [1.0; 3]).unwrap();
        let truth = random_volume(&hr, 9);
        let g = StackGeometry {
            orientation: Orientation::Axial,
            slice_positions_mm: (0..6).map(|k| k as f64 - 2.5).collect(),
            inplane_dims: [6, 6],
            inplane_spacing_mm: [1.0; 2],
            slice_thickness_mm: 1.0,
            offset_mm: 0.0,
            center_mm: hr.center_world(),
            acquired: None,
        };
        let seq = SequenceParams {
            inplane_res_mm: 1.0,
            slice_thickness_mm: 1.0,
            profile: SliceProfile::Box,
            snr_db: None,
            ..Default::default()
        };
        let st = simulate_stack(&truth, &g, &MotionTrace::identity(6), &seq, 0).unwrap();
        let op = build_operator(std::slice::from_ref(&st), &hr).unwrap();
        let cfg = SolverConfig { lambda: Some(0.0), ..Default::default() };
        let rec = sr_reconstruct(&op, &[st.clone()], &cfg).unwrap();
        for (a, b) in rec.volume.data().iter().zip(st.image.data()) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-3));
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let (op, stacks) = small_problem(0);
        let cfg = SolverConfig { lambda: Some(-1.0), ..Default::default() };
        assert!(matches!(sr_reconstruct(&op, &stacks, &cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn log_has_one_line_per_record() {
        let (op, stacks) = small_problem(1);
        let rec = sr_reconstruct(&op, &stacks, &SolverConfig { max_iterations: 5, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        rec.write_log(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), rec.trace.len() + 1);
        assert!(text.starts_with("iteration,objective,step"));
    }
}
