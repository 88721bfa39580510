//! ADMM for robust graph construction.
//!
//! Solves
//!
//! ```text
//! min_{D,E,S,Z}  ||D||_* + alpha ||E||_1 + beta Tr(Z L Z^T) + gamma ||S||_F^2
//! s.t.           X = D + E,  Z = D,  S 1 = 1,  0 <= S <= 1
//! ```
//!
//! by cycling D (singular value thresholding), E (soft thresholding),
//! S (closed-form adaptive neighbors on the columns of Z), Z (a linear solve)
//! and the two multiplier updates. Two special cases share the loop:
//! [`Mode::Rpca`] drops the graph entirely and [`Mode::FixedGraph`] keeps a
//! precomputed Laplacian instead of learning one.

use log::{debug, warn};

use crate::graph::{self, laplacian, AffinityGraph, GraphLaplacian};
use crate::prox::{self, solve_spd, svt_with_spectrum};
use crate::{ensure_finite, Matrix, Result, RgcError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Learn the graph jointly with the decomposition.
    Rgc,
    /// Plain robust PCA; no graph is built.
    Rpca,
    /// Manifold-regularized robust PCA on a fixed graph.
    FixedGraph,
}

impl std::str::FromStr for Mode {
    type Err = RgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgc" => Ok(Mode::Rgc),
            "rpca" => Ok(Mode::Rpca),
            "fixed-graph" => Ok(Mode::FixedGraph),
            other => Err(RgcError::InvalidInput(format!(
                "unknown mode {other:?}, expected rgc, rpca or fixed-graph"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Rgc => "rgc",
            Mode::Rpca => "rpca",
            Mode::FixedGraph => "fixed-graph",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Weight of the sparse term. `None` means `1/sqrt(max(m, n))`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub k: usize,
    pub mu: f64,
    /// Multiplicative penalty growth per iteration; 1 keeps `mu` fixed.
    pub rho: f64,
    pub mu_max: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub mode: Mode,
    /// Required in [`Mode::FixedGraph`].
    pub fixed_graph: Option<AffinityGraph>,
    /// Carried for provenance; the iteration itself is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: None,
            beta: 0.0,
            k: 10,
            mu: 1.0,
            rho: 1.0,
            mu_max: 1e10,
            tol: 1e-6,
            max_iters: 300,
            mode: Mode::Rgc,
            fixed_graph: None,
            seed: 0,
        }
    }
}

pub fn default_alpha(m: usize, n: usize) -> f64 {
    1.0 / (m.max(n) as f64).sqrt()
}

impl SolverConfig {
    pub fn resolved_alpha(&self, m: usize, n: usize) -> f64 {
        self.alpha.unwrap_or_else(|| default_alpha(m, n))
    }

    fn validate(&self, m: usize, n: usize, external_laplacian: bool) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(RgcError::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("alpha", self.resolved_alpha(m, n))?;
        positive("mu", self.mu)?;
        positive("tol", self.tol)?;
        positive("mu_max", self.mu_max)?;
        if !self.rho.is_finite() || self.rho < 1.0 {
            return Err(RgcError::InvalidInput(format!(
                "rho must be >= 1, got {}",
                self.rho
            )));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(RgcError::InvalidInput(format!(
                "beta must be nonnegative, got {}",
                self.beta
            )));
        }
        if external_laplacian {
            return Ok(());
        }
        match (self.mode, &self.fixed_graph) {
            (Mode::FixedGraph, None) => {
                return Err(RgcError::InvalidInput(
                    "fixed-graph mode requires a graph".into(),
                ))
            }
            (Mode::FixedGraph, Some(g)) if g.n() != n => {
                return Err(RgcError::InvalidInput(format!(
                    "fixed graph has {} nodes but X has {n} samples",
                    g.n()
                )))
            }
            (Mode::Rgc, _) if self.k == 0 => {
                return Err(RgcError::InvalidInput("k must be at least 1".into()))
            }
            (Mode::Rgc, _) if n < 3 => {
                return Err(RgcError::InvalidInput(format!(
                    "graph learning needs at least 3 samples, got {n}"
                )))
            }
            _ => {}
        }
        Ok(())
    }
}

fn check_data(x: &Matrix) -> Result<()> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return Err(RgcError::InvalidInput(format!(
            "X is an empty {m}x{n} matrix"
        )));
    }
    ensure_finite(x, "X")
}

/// Iterates of one ADMM run.
#[derive(Debug, Clone, PartialEq)]
pub struct RgcState {
    pub d: Matrix,
    pub e: Matrix,
    /// `None` until the first graph update, and always in RPCA mode.
    pub s: Option<AffinityGraph>,
    pub z: Matrix,
    pub y1: Matrix,
    pub y2: Matrix,
    pub mu: f64,
    pub iter: usize,
    /// Averaged graph regularizer from the latest graph update.
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub iter: usize,
    /// Diagnostic value of the split objective with that iteration's gamma.
    pub objective: f64,
    /// `||D + E - X||_inf`
    pub res_x: f64,
    /// `||D - Z||_inf`
    pub res_z: f64,
    pub rank_d: usize,
    pub nnz_e: usize,
}

impl ConvergenceRecord {
    pub fn max_residual(&self) -> f64 {
        self.res_x.max(self.res_z)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub d: Matrix,
    pub e: Matrix,
    pub s: Option<AffinityGraph>,
    pub history: Vec<ConvergenceRecord>,
    pub converged: bool,
    pub alpha: f64,
    pub gamma: f64,
}

impl SolveOutcome {
    pub fn final_record(&self) -> Option<&ConvergenceRecord> {
        self.history.last()
    }
}

enum GraphTerm {
    None,
    Learned,
    Fixed(GraphLaplacian),
}

/// One configured problem instance.
pub struct Solver<'a> {
    x: &'a Matrix,
    cfg: &'a SolverConfig,
    alpha: f64,
    term: GraphTerm,
}

impl<'a> Solver<'a> {
    pub fn new(x: &'a Matrix, cfg: &'a SolverConfig) -> Result<Self> {
        check_data(x)?;
        cfg.validate(x.nrows(), x.ncols(), false)?;
        let term = match cfg.mode {
            Mode::Rgc => GraphTerm::Learned,
            Mode::Rpca => GraphTerm::None,
            Mode::FixedGraph => {
                GraphTerm::Fixed(laplacian(cfg.fixed_graph.as_ref().expect("validated")))
            }
        };
        Ok(Self::build(x, cfg, term))
    }

    /// Fixed-graph solve on an arbitrary precomputed Laplacian, which need
    /// not come from an adaptive-neighbor graph. `cfg.mode` is ignored.
    pub fn with_laplacian(x: &'a Matrix, cfg: &'a SolverConfig, l: GraphLaplacian) -> Result<Self> {
        check_data(x)?;
        cfg.validate(x.nrows(), x.ncols(), true)?;
        if l.n() != x.ncols() {
            return Err(RgcError::InvalidInput(format!(
                "Laplacian is {0}x{0} but X has {1} samples",
                l.n(),
                x.ncols()
            )));
        }
        Ok(Self::build(x, cfg, GraphTerm::Fixed(l)))
    }

    fn build(x: &'a Matrix, cfg: &'a SolverConfig, term: GraphTerm) -> Self {
        Solver {
            x,
            cfg,
            alpha: cfg.resolved_alpha(x.nrows(), x.ncols()),
            term,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `Z = X`, everything else zero.
    pub fn init(&self) -> RgcState {
        let (m, n) = self.x.shape();
        let zeros = Matrix::zeros(m, n);
        RgcState {
            d: zeros.clone(),
            e: zeros.clone(),
            s: match &self.term {
                GraphTerm::Fixed(_) => self.cfg.fixed_graph.clone(),
                _ => None,
            },
            z: self.x.clone(),
            y1: zeros.clone(),
            y2: zeros,
            mu: self.cfg.mu,
            iter: 0,
            gamma: 0.0,
        }
    }

    /// One full sweep: D, E, S, Z, multipliers.
    pub fn step(&self, state: &RgcState) -> Result<(RgcState, ConvergenceRecord)> {
        let x = self.x;
        let mu = state.mu;
        let beta = self.cfg.beta;
        let iter = state.iter + 1;
        let ctx = |what: &str| format!("iteration {iter}, {what}");

        // D: shrink H = (X + Z - E - (Y1 + Y2)/mu) / 2 by 1/(2 mu).
        let h = (x + &state.z - &state.e - (&state.y1 + &state.y2) / mu) * 0.5;
        let shrunk =
            svt_with_spectrum(&h, 1.0 / (2.0 * mu)).map_err(|e| e.with_context(&ctx("D-step")))?;
        let d = shrunk.matrix.clone();

        // E: soft threshold G = X - D - Y1/mu by alpha/mu.
        let g = x - &d - &state.y1 / mu;
        let e = prox::soft_threshold(&g, self.alpha / mu)?;

        // S on the columns of the current Z.
        let (s, gamma, lap) = match &self.term {
            GraphTerm::None => (None, 0.0, None),
            GraphTerm::Learned => {
                let (s, gamma) = graph::learn_graph(&state.z, self.cfg.k, beta)
                    .map_err(|e| e.with_context(&ctx("S-step")))?;
                let l = laplacian(&s);
                (Some(s), gamma, Some(l))
            }
            GraphTerm::Fixed(l) => (state.s.clone(), 0.0, Some(l.clone())),
        };

        // Z (mu I + 2 beta L) = mu D + Y2.
        let z = match &lap {
            Some(l) if beta != 0.0 && !l.is_zero() => {
                let n = l.n();
                let a = l.matrix() * (2.0 * beta) + Matrix::identity(n, n) * mu;
                let rhs = &d * mu + &state.y2;
                solve_spd(&a, &rhs).map_err(|e| e.with_context(&ctx("Z-step")))?
            }
            _ => &d + &state.y2 / mu,
        };

        let r_x = &d + &e - x;
        let r_z = &d - &z;
        let y1 = &state.y1 + &r_x * mu;
        let y2 = &state.y2 + &r_z * mu;

        let smooth = match &lap {
            Some(l) if beta != 0.0 => beta * l.smoothness(&z),
            _ => 0.0,
        };
        let graph_reg = s.as_ref().map_or(0.0, |s| gamma * s.frobenius_sq());
        let record = ConvergenceRecord {
            iter,
            objective: shrunk.nuclear_norm() + self.alpha * e.abs().sum() + smooth + graph_reg,
            res_x: r_x.amax(),
            res_z: r_z.amax(),
            rank_d: shrunk.rank(),
            nnz_e: e.iter().filter(|&&v| v != 0.0).count(),
        };
        debug!(
            "iter {iter}: obj {:.6e} res_x {:.3e} res_z {:.3e} rank {} nnz {}",
            record.objective, record.res_x, record.res_z, record.rank_d, record.nnz_e
        );

        let next = RgcState {
            d,
            e,
            s,
            z,
            y1,
            y2,
            mu: (mu * self.cfg.rho).min(self.cfg.mu_max.max(mu)),
            iter,
            gamma,
        };
        Ok((next, record))
    }

    /// Iterates until both primal residuals drop below `tol` or the
    /// iteration cap is reached. Hitting the cap is reported through
    /// [`SolveOutcome::converged`], not as an error.
    pub fn run(&self) -> Result<SolveOutcome> {
        let mut state = self.init();
        let mut history = Vec::with_capacity(self.cfg.max_iters.min(4096));
        let mut converged = false;
        while state.iter < self.cfg.max_iters {
            let (next, record) = self.step(&state)?;
            state = next;
            history.push(record);
            if record.max_residual() < self.cfg.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            let last = history.last();
            warn!(
                "no convergence after {} iterations (res_x {:e}, res_z {:e}, tol {:e})",
                state.iter,
                last.map_or(f64::NAN, |r| r.res_x),
                last.map_or(f64::NAN, |r| r.res_z),
                self.cfg.tol
            );
        }
        Ok(SolveOutcome {
            d: state.d,
            e: state.e,
            s: match self.term {
                GraphTerm::None => None,
                _ => state.s,
            },
            history,
            converged,
            alpha: self.alpha,
            gamma: state.gamma,
        })
    }
}

/// Initial state for `x` under `cfg`.
pub fn init(x: &Matrix, cfg: &SolverConfig) -> Result<RgcState> {
    Ok(Solver::new(x, cfg)?.init())
}

/// One ADMM sweep from `state`.
pub fn step(
    state: &RgcState,
    x: &Matrix,
    cfg: &SolverConfig,
) -> Result<(RgcState, ConvergenceRecord)> {
    Solver::new(x, cfg)?.step(state)
}

pub fn solve(x: &Matrix, cfg: &SolverConfig) -> Result<SolveOutcome> {
    Solver::new(x, cfg)?.run()
}

/// Manifold-regularized robust PCA on a caller-supplied Laplacian.
pub fn solve_with_laplacian(
    x: &Matrix,
    cfg: &SolverConfig,
    l: GraphLaplacian,
) -> Result<SolveOutcome> {
    Solver::with_laplacian(x, cfg, l)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::synthetic::{make_synthetic, SyntheticSpec};
    use nalgebra::dmatrix;

    fn instance() -> Matrix {
        make_synthetic(&SyntheticSpec {
            m: 50,
            n: 40,
            rank: 2,
            sparsity: 0.05,
            magnitude: 1.0,
            seed: 11,
        })
        .unwrap()
        .x
    }

    #[test]
    fn init_is_zero_and_deterministic() {
        let x = instance();
        let cfg = SolverConfig {
            beta: 0.1,
            ..Default::default()
        };
        let a = init(&x, &cfg).unwrap();
        assert_eq!(a.e.abs().sum(), 0.0);
        assert_eq!(a.y1.norm(), 0.0);
        assert_eq!(a.z, x);
        assert!(a.s.is_none());
        assert_eq!(a, init(&x, &cfg).unwrap());
    }

    #[test]
    fn init_rejects_non_finite() {
        let x = dmatrix![1.0, f64::NAN, 2.0; 0.0, 1.0, 3.0];
        assert!(matches!(
            init(&x, &SolverConfig::default()),
            Err(RgcError::InvalidInput(_))
        ));
    }

    #[test]
    fn zero_input_is_a_fixed_point() {
        let x = Matrix::zeros(6, 5);
        let cfg = SolverConfig {
            beta: 1.0,
            k: 2,
            ..Default::default()
        };
        let s0 = init(&x, &cfg).unwrap();
        let (s1, rec) = step(&s0, &x, &cfg).unwrap();
        assert_eq!(s1.d, x);
        assert_eq!(s1.e, x);
        assert_eq!(rec.max_residual(), 0.0);
    }

    #[test]
    fn rpca_z_step_and_multiplier_identity() {
        let x = instance();
        let cfg = SolverConfig {
            mode: Mode::Rpca,
            ..Default::default()
        };
        let solver = Solver::new(&x, &cfg).unwrap();
        let mut st = solver.init();
        for _ in 0..5 {
            let (next, _) = solver.step(&st).unwrap();
            assert_eq!(next.z, &next.d + &st.y2 / st.mu);
            let inc = &next.y1 - &st.y1;
            let expect = (&next.d + &next.e - &x) * st.mu;
            assert!((inc - expect).amax() < 1e-12);
            st = next;
        }
    }

    #[test]
    fn residual_decreases_early() {
        let x = instance();
        let cfg = SolverConfig {
            beta: 0.01,
            ..Default::default()
        };
        let solver = Solver::new(&x, &cfg).unwrap();
        let mut st = solver.init();
        let mut norms = Vec::new();
        for _ in 0..10 {
            st = solver.step(&st).unwrap().0;
            norms.push((&st.d + &st.e - &x).norm());
        }
        assert!(norms.last().unwrap() < norms.first().unwrap(), "{norms:?}");
    }

    #[test]
    fn clean_rank_one_goes_to_d() {
        let u = Matrix::from_fn(30, 1, |i, _| 1.0 + (i as f64 * 0.37).sin());
        let v = Matrix::from_fn(1, 20, |_, j| 0.5 + (j as f64 * 0.91).cos());
        let x = &u * &v;
        let cfg = SolverConfig {
            mode: Mode::Rpca,
            max_iters: 2000,
            tol: 1e-8,
            ..Default::default()
        };
        let out = solve(&x, &cfg).unwrap();
        assert!(out.converged);
        assert!(out.s.is_none());
        assert!((&out.d - &x).norm() / x.norm() < 1e-3);
        assert!(out.e.abs().sum() / x.abs().sum() < 1e-3);
    }

    #[test]
    fn fixed_graph_needs_graph() {
        let x = instance();
        let cfg = SolverConfig {
            mode: Mode::FixedGraph,
            ..Default::default()
        };
        assert!(solve(&x, &cfg).is_err());
    }

    #[test]
    fn non_convergence_is_not_an_error() {
        let x = instance();
        let cfg = SolverConfig {
            beta: 0.01,
            max_iters: 3,
            ..Default::default()
        };
        let out = solve(&x, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.history.len(), 3);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("fixed-graph".parse::<Mode>().unwrap(), Mode::FixedGraph);
        assert!("mrpca".parse::<Mode>().is_err());
        assert_eq!(Mode::Rpca.to_string(), "rpca");
    }
}
