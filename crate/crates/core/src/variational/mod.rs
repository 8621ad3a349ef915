//! Ground-state search on hybrid trees: McLachlan imaginary-time evolution
//! with finite-difference `A` and `C`, and the closed-form subspace solver.

mod subspace;

pub use subspace::{solve_subspace, SubspaceProblem, SUBSPACE_CUTOFF};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::MeasurementStrategy;
use crate::linalg::{cholesky_solve, symmetric_eigen, SymMatrix};
use crate::pauli::{decompose_for_layout, Hamiltonian, ProductObservable};
use crate::rng::SeededRng;
use crate::scalar::{Complex, Real};
use crate::tree::{ContractionOrder, HybridTree, PreparedTree, TreeEvalOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IteConfig {
    /// Finite-difference step in radians.
    pub delta: f64,
    pub dtau0: f64,
    pub step_grow: f64,
    pub step_shrink: f64,
    /// Upper bound on the imaginary-time step.
    pub dtau_max: f64,
    pub reg: f64,
    /// Relative eigenvalue cutoff of the least-squares solve; 0 selects a plain Cholesky solve.
    pub rcond: f64,
    pub max_iters: usize,
    pub conv_window: usize,
    pub conv_tol: f64,
    /// Step-size halvings tried before a step is given up.
    pub max_retries: usize,
    /// Largest energy increase an accepted step may carry.
    pub accept_tol: f64,
    /// Circuit angles start uniformly in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub seed: u64,
    /// Shots per measured Pauli group; 0 means exact evaluation.
    pub shots: usize,
    pub strategy: MeasurementStrategy,
}

impl Default for IteConfig {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            dtau0: 0.05,
            step_grow: 1.2,
            step_shrink: 0.5,
            dtau_max: 0.5,
            reg: 1e-6,
            rcond: 3e-6,
            max_iters: 2000,
            conv_window: 10,
            conv_tol: 1e-8,
            max_retries: 12,
            accept_tol: 1e-9,
            init_scale: 0.1,
            seed: 0,
            shots: 0,
            strategy: MeasurementStrategy::Direct,
        }
    }
}

impl IteConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::InvalidArgument(format!("ite.{field}: {msg}")));
        if !(self.delta > 0.0) {
            return bad("delta", "must be > 0");
        }
        if !(self.dtau0 > 0.0) {
            return bad("dtau0", "must be > 0");
        }
        if !(self.dtau_max >= self.dtau0) {
            return bad("dtau_max", "must be >= dtau0");
        }
        if !(self.reg >= 0.0) {
            return bad("reg", "must be >= 0");
        }
        if !(0.0..1.0).contains(&self.rcond) {
            return bad("rcond", "must lie in [0, 1)");
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return bad("step_shrink", "must lie in (0, 1)");
        }
        if !(self.step_grow >= 1.0) {
            return bad("step_grow", "must be >= 1");
        }
        if self.conv_window == 0 {
            return bad("conv_window", "must be >= 1");
        }
        if !(self.conv_tol >= 0.0) {
            return bad("conv_tol", "must be >= 0");
        }
        if !(self.accept_tol >= 0.0) {
            return bad("accept_tol", "must be >= 0");
        }
        if !(self.init_scale >= 0.0) {
            return bad("init_scale", "must be >= 0");
        }
        Ok(())
    }
}

/// One row of the trajectory CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub tau: f64,
    pub dtau: f64,
    pub energy: f64,
    pub accepted: bool,
}

pub const TRAJECTORY_HEADER: &str = "iteration,tau,dtau,energy,accepted";

pub fn write_trajectory_csv(points: &[TrajectoryPoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for p in points {
        writeln!(w, "{},{:e},{:e},{:.17e},{}", p.iteration, p.tau, p.dtau, p.energy, p.accepted)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct IteState<R> {
    pub params: Vec<R>,
    pub tau: R,
    pub dtau: R,
    pub energy: R,
    pub a: SymMatrix<R>,
    pub c: Vec<R>,
    pub iteration: usize,
    pub trajectory: Vec<TrajectoryPoint>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IteStatus {
    Converged,
    MaxIters,
    /// A step could not lower the energy at any tried step size.
    Stalled,
}

#[derive(Clone, Debug, Serialize)]
pub struct IteResult<R> {
    pub status: IteStatus,
    pub energy: R,
    pub params: Vec<R>,
    pub tau: R,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// A tree template and a Hamiltonian pre-decomposed over its layout.
pub struct IteProblem<R> {
    tree: PreparedTree<R>,
    terms: Vec<(R, ProductObservable)>,
    normalized: bool,
}

impl<R: Real> IteProblem<R> {
    pub fn new(tree: &HybridTree<R>, h: &Hamiltonian<R>) -> Result<Self> {
        if h.num_qubits() != tree.num_qubits() {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonian on {} qubits, tree holds {}",
                h.num_qubits(),
                tree.num_qubits()
            )));
        }
        let tree = PreparedTree::new(tree)?;
        let terms = decompose_for_layout(h, tree.layout())?;
        let normalized = tree.is_self_normalizing();
        Ok(Self { tree, terms, normalized })
    }

    pub fn num_params(&self) -> usize {
        self.tree.num_params()
    }

    pub fn prepare(&self, params: &[R]) -> Result<PreparedTree<R>> {
        self.tree.with_params(params)
    }

    pub fn energy(&self, t: &PreparedTree<R>, opts: &TreeEvalOptions) -> Result<R> {
        Ok(t.energy_terms(&self.terms, opts)?.energy)
    }

    /// Overlap of the normalized states.
    fn overlap(&self, a: &PreparedTree<R>, na: R, b: &PreparedTree<R>, nb: R) -> Result<Complex<R>> {
        let raw = a.overlap(b)?;
        Ok(if self.normalized { raw } else { raw / (na * nb).sqrt() })
    }

    fn norm(&self, t: &PreparedTree<R>) -> Result<R> {
        if self.normalized {
            Ok(R::one())
        } else {
            t.norm_sqr()
        }
    }

    /// Initial parameters: circuit angles uniform in `[-s, s]`, classical
    /// entries kept from the template.
    pub fn initial_params(&self, config: &IteConfig) -> Vec<R> {
        let mut rng = SeededRng::new(config.seed);
        self.tree
            .quantum_param_mask()
            .into_iter()
            .zip(self.tree.params())
            .map(|(q, p)| {
                if q {
                    R::lit(rng.uniform_in(-config.init_scale, config.init_scale))
                } else {
                    p
                }
            })
            .collect()
    }
}

fn eval_options(config: &IteConfig, iteration: usize, probe: usize) -> TreeEvalOptions {
    let seed = if config.shots == 0 {
        0
    } else {
        SeededRng::fork(config.seed ^ (iteration as u64).rotate_left(32), probe as u64).next_u64()
    };
    TreeEvalOptions {
        strategy: config.strategy,
        shots: config.shots,
        seed,
        order: ContractionOrder::BranchesFirst,
    }
}

fn shifted_all<R: Real>(t: &PreparedTree<R>, delta: R) -> Result<Vec<PreparedTree<R>>> {
    (0..t.num_params())
        .into_par_iter()
        .map(|i| t.with_param_shift(i, delta))
        .collect()
}

fn metric_from<R: Real>(
    problem: &IteProblem<R>,
    base: &PreparedTree<R>,
    shifted: &[PreparedTree<R>],
    delta: R,
) -> Result<SymMatrix<R>> {
    let p = shifted.len();
    let n0 = problem.norm(base)?;
    let norms = shifted.par_iter().map(|t| problem.norm(t)).collect::<Result<Vec<_>>>()?;
    let to_base = shifted
        .par_iter()
        .zip(&norms)
        .map(|(t, &n)| problem.overlap(base, n0, t, n).map(|z| z.re))
        .collect::<Result<Vec<_>>>()?;
    let self_base = problem.overlap(base, n0, base, n0)?.re;
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let ij = problem.overlap(&shifted[i], norms[i], &shifted[j], norms[j])?.re;
            Ok((ij - to_base[j] - to_base[i] + self_base) / (delta * delta))
        })
        .collect::<Result<Vec<R>>>()?;
    let mut a = SymMatrix::zeros(p);
    for (&(i, j), v) in pairs.iter().zip(values) {
        a.set(i, j, v);
        a.set(j, i, v);
    }
    Ok(a)
}

/// `A_ij = Re[⟨ψ(θ+δ_i)|ψ(θ+δ_j)⟩ − ⟨ψ(θ)|ψ(θ+δ_j)⟩ − ⟨ψ(θ+δ_i)|ψ(θ)⟩ + ⟨ψ(θ)|ψ(θ)⟩] / δ²`
/// over normalized states.
pub fn metric_a<R: Real>(problem: &IteProblem<R>, params: &[R], delta: R) -> Result<SymMatrix<R>> {
    if !(delta > R::zero()) {
        return Err(Error::InvalidArgument("delta must be > 0".into()));
    }
    let base = problem.prepare(params)?;
    let shifted = shifted_all(&base, delta)?;
    metric_from(problem, &base, &shifted, delta)
}

fn gradient_from<R: Real>(
    problem: &IteProblem<R>,
    e0: R,
    shifted: &[PreparedTree<R>],
    delta: R,
    config: &IteConfig,
    iteration: usize,
) -> Result<Vec<R>> {
    shifted
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let e = problem.energy(t, &eval_options(config, iteration, i + 1))?;
            Ok((e - e0) / delta * R::lit(0.5))
        })
        .collect()
}

/// `C_i = ½ (E(θ+δ_i) − E(θ)) / δ`. Returns `(E(θ), C)`.
pub fn gradient_c<R: Real>(problem: &IteProblem<R>, params: &[R], config: &IteConfig) -> Result<(R, Vec<R>)> {
    let delta = R::lit(config.delta);
    let base = problem.prepare(params)?;
    let e0 = problem.energy(&base, &eval_options(config, 0, 0))?;
    let shifted = shifted_all(&base, delta)?;
    Ok((e0, gradient_from(problem, e0, &shifted, delta, config, 0)?))
}

/// Assemble `A` and `C` at the state's parameters.
pub fn assemble<R: Real>(problem: &IteProblem<R>, state: &mut IteState<R>, config: &IteConfig) -> Result<()> {
    let delta = R::lit(config.delta);
    let base = problem.prepare(&state.params)?;
    let shifted = shifted_all(&base, delta)?;
    state.a = metric_from(problem, &base, &shifted, delta)?;
    state.c = gradient_from(problem, state.energy, &shifted, delta, config, state.iteration)?;
    Ok(())
}

/// Least-squares solve of `(A + reg·I) x = −C`. Eigen-directions of the
/// regularized matrix below `rcond · λ_max` are dropped; with `rcond = 0`
/// a Cholesky solve is used and a singular matrix is an error.
pub fn solve_velocity<R: Real>(a: &SymMatrix<R>, c: &[R], reg: R, rcond: R) -> Result<Vec<R>> {
    if c.iter().all(|x| *x == R::zero()) {
        return Ok(vec![R::zero(); c.len()]);
    }
    let rhs: Vec<R> = c.iter().map(|x| -*x).collect();
    if rcond == R::zero() {
        return cholesky_solve(a, reg, &rhs).ok_or_else(|| {
            Error::Singular(format!("A + {reg}·I is not positive definite ({} parameters)", c.len()))
        });
    }
    let n = a.dim;
    let (vals, vecs) = symmetric_eigen(a)?;
    let top = vals.last().copied().unwrap_or(R::zero()) + reg;
    if !(top > R::zero()) {
        return Err(Error::Singular("A + reg·I has no positive eigenvalue".into()));
    }
    let mut x = vec![R::zero(); n];
    for (k, &v) in vals.iter().enumerate() {
        let lam = v + reg;
        if lam <= rcond * top {
            continue;
        }
        let proj: R = (0..n).map(|r| vecs[r * n + k] * rhs[r]).sum();
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += vecs[r * n + k] * proj / lam;
        }
    }
    Ok(x)
}

pub struct StepOutcome<R> {
    pub state: IteState<R>,
    pub accepted: bool,
    pub retries: usize,
}

/// One adaptive McLachlan step from an assembled state. On exhaustion the
/// returned state keeps the old parameters (rejected proposals are logged).
pub fn ite_step<R: Real>(problem: &IteProblem<R>, state: &IteState<R>, config: &IteConfig) -> Result<StepOutcome<R>> {
    let velocity = solve_velocity(&state.a, &state.c, R::lit(config.reg), R::lit(config.rcond))?;
    let mut next = state.clone();
    next.iteration += 1;
    let mut dtau = state.dtau;
    for retry in 0..=config.max_retries {
        let proposal: Vec<R> = state.params.iter().zip(&velocity).map(|(p, v)| *p + *v * dtau).collect();
        let t = problem.prepare(&proposal)?;
        let e = problem.energy(&t, &eval_options(config, next.iteration, 0))?;
        let accepted = e.is_finite() && e <= state.energy + R::lit(config.accept_tol);
        next.trajectory.push(TrajectoryPoint {
            iteration: next.iteration,
            tau: (state.tau + if accepted { dtau } else { R::zero() }).to_f64_lossy(),
            dtau: dtau.to_f64_lossy(),
            energy: e.to_f64_lossy(),
            accepted,
        });
        if accepted {
            next.params = proposal;
            next.energy = e;
            next.tau = state.tau + dtau;
            next.dtau = (dtau * R::lit(config.step_grow)).min(R::lit(config.dtau_max));
            return Ok(StepOutcome {
                state: next,
                accepted: true,
                retries: retry,
            });
        }
        dtau *= R::lit(config.step_shrink);
    }
    next.dtau = state.dtau;
    Ok(StepOutcome {
        state: next,
        accepted: false,
        retries: config.max_retries,
    })
}

/// Start state at the given parameters (energy evaluated, `A` and `C` not yet assembled).
pub fn initial_state<R: Real>(problem: &IteProblem<R>, params: Vec<R>, config: &IteConfig) -> Result<IteState<R>> {
    let t = problem.prepare(&params)?;
    let energy = problem.energy(&t, &eval_options(config, 0, 0))?;
    Ok(IteState {
        params,
        tau: R::zero(),
        dtau: R::lit(config.dtau0),
        energy,
        a: SymMatrix::zeros(0),
        c: vec![],
        iteration: 0,
        trajectory: vec![TrajectoryPoint {
            iteration: 0,
            tau: 0.0,
            dtau: config.dtau0,
            energy: energy.to_f64_lossy(),
            accepted: true,
        }],
    })
}

/// Imaginary-time evolution from small random angles until the energy change
/// stays below `conv_tol` for `conv_window` accepted steps, or `max_iters`.
pub fn run_ite<R: Real>(tree: &HybridTree<R>, h: &Hamiltonian<R>, config: &IteConfig) -> Result<IteResult<R>> {
    config.validate()?;
    let problem = IteProblem::new(tree, h)?;
    let params = problem.initial_params(config);
    run_ite_from(&problem, params, config)
}

pub fn run_ite_from<R: Real>(problem: &IteProblem<R>, params: Vec<R>, config: &IteConfig) -> Result<IteResult<R>> {
    config.validate()?;
    let mut state = initial_state(problem, params, config)?;
    let mut quiet = 0usize;
    let mut accepted_steps = 0usize;
    let mut status = IteStatus::MaxIters;
    while state.iteration < config.max_iters {
        assemble(problem, &mut state, config)?;
        let out = ite_step(problem, &state, config)?;
        let before = state.energy;
        state = out.state;
        if !out.accepted {
            status = IteStatus::Stalled;
            break;
        }
        accepted_steps += 1;
        if (before - state.energy).abs() < R::lit(config.conv_tol) {
            quiet += 1;
            if quiet >= config.conv_window {
                status = IteStatus::Converged;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(IteResult {
        status,
        energy: state.energy,
        params: state.params,
        tau: state.tau,
        iterations: state.iteration,
        accepted_steps,
        trajectory: state.trajectory,
    })
}
