//! Augmented-Lagrangian refinement of stacked ensemble evidence.
//!
//! The co-association matrix `A` and the coherent-link mask `M` are stacked
//! into an `n x n x 2` tensor and refined by solving
//!
//! ```text
//! min  ||P||_*  +  lambda ||E||_F^2
//! s.t. P(:,:,1) = B,  B in [0,1], symmetric, B = 1 wherever M = 1
//!      P(:,:,2) + E = A
//!      P(:,:,2) = C,  C in [0,1], symmetric
//! ```
//!
//! with an inexact augmented-Lagrangian loop: a tensor nuclear-norm proximal
//! step for `P`, closed-form updates for `E`, `B`, `C`, gradient ascent on
//! the three multipliers, and a geometrically growing penalty `mu`. The loop
//! stops when the largest infinity-norm residual of the three constraints
//! drops below `tol`.
//!
//! Running past `max_iter` without reaching `tol` is not an error: the result
//! carries `converged = false` and the best iterate seen.

use ndarray::Array2;

use crate::ensemble::{MatrixKind, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::tensor::{tnn_prox_with_norm, Orientation, Tensor3};

/// Tuning knobs for [`solve`]. The defaults are the ones used throughout the
/// pipeline; only `lambda` commonly needs adjusting.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LtaConfig {
    /// Weight of the noise penalty `lambda ||E||_F^2`.
    pub lambda: f64,
    /// Initial penalty strength.
    pub mu0: f64,
    /// Penalty ceiling.
    pub mu_max: f64,
    /// Per-iteration penalty growth factor.
    pub rho: f64,
    /// Stopping threshold on the largest constraint residual.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Orientation of the nuclear-norm proximal step.
    pub orientation: Orientation,
    /// Record per-iteration residuals and objective in the result.
    pub trace_iterates: bool,
}

impl Default for LtaConfig {
    fn default() -> Self {
        Self {
            lambda: 0.002,
            mu0: 1e-4,
            mu_max: 1e8,
            rho: 1.1,
            tol: 1e-8,
            max_iter: 500,
            orientation: Orientation::Lateral,
            trace_iterates: false,
        }
    }
}

impl LtaConfig {
    /// Checks every knob for a usable value; [`solve`] calls this internally,
    /// front-ends can call it early to reject bad flags before doing work.
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, bool, String); 6] = [
            (
                "lambda",
                self.lambda.is_finite() && self.lambda >= 0.0,
                format!("must be finite and non-negative, got {}", self.lambda),
            ),
            (
                "mu0",
                self.mu0.is_finite() && self.mu0 > 0.0,
                format!("must be finite and positive, got {}", self.mu0),
            ),
            (
                "mu_max",
                self.mu_max >= self.mu0,
                format!("must be at least mu0, got {}", self.mu_max),
            ),
            (
                "rho",
                self.rho.is_finite() && self.rho >= 1.0,
                format!("must be at least 1, got {}", self.rho),
            ),
            (
                "tol",
                self.tol.is_finite() && self.tol > 0.0,
                format!("must be finite and positive, got {}", self.tol),
            ),
            (
                "max_iter",
                self.max_iter >= 1,
                format!("must be at least 1, got {}", self.max_iter),
            ),
        ];
        for (name, ok, reason) in checks {
            if !ok {
                return Err(Error::InvalidParameter { name, reason });
            }
        }
        Ok(())
    }
}

/// Infinity-norm residuals of the three constraints after an iteration.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    /// `||B - P(:,:,1)||_inf`
    pub link_gap: f64,
    /// `||C - P(:,:,2)||_inf`
    pub consensus_gap: f64,
    /// `||A - E - P(:,:,2)||_inf`
    pub fit_gap: f64,
}

impl Residuals {
    /// The largest of the three gaps; compared against `tol`.
    pub fn max(&self) -> f64 {
        self.link_gap.max(self.consensus_gap).max(self.fit_gap)
    }
}

/// One recorded iteration, kept when [`LtaConfig::trace_iterates`] is set.
#[derive(Debug, Clone, Copy)]
pub struct IterateTrace {
    /// 1-based iteration index.
    pub iteration: usize,
    /// Constraint residuals after the iteration.
    pub residuals: Residuals,
    /// Objective `||P||_* + lambda ||E||_F^2` at the iterate.
    pub objective: f64,
}

/// Outcome of the refinement.
#[derive(Debug, Clone)]
pub struct LtaResult {
    /// The refined slice `P(:,:,2)`, symmetrized and clipped to `[0, 1]`.
    pub refined: SimilarityMatrix,
    /// The completed-link slice `P(:,:,1)` at the returned iterate.
    pub completed_link: Array2<f64>,
    /// Iterations actually run.
    pub iterations: usize,
    /// Whether the residual dropped below `tol` within `max_iter`.
    pub converged: bool,
    /// Smallest maximal residual seen (the returned iterate's residual).
    pub final_residual: f64,
    /// Per-iteration objective `||P||_* + lambda ||E||_F^2`, with the
    /// nuclear norm taken in the Fourier domain the prox minimises.
    pub objective_trace: Vec<f64>,
    /// Per-iteration residuals and objective; empty unless
    /// [`LtaConfig::trace_iterates`] was set.
    pub iterate_trace: Vec<IterateTrace>,
}

/// The iteration, exposed step by step so callers can watch invariants.
#[derive(Debug)]
pub struct LtaSolver {
    a: Array2<f64>,
    mask: Array2<bool>,
    cfg: LtaConfig,
    p1: Array2<f64>,
    p2: Array2<f64>,
    e: Array2<f64>,
    b: Array2<f64>,
    c: Array2<f64>,
    l1: Array2<f64>,
    l2: Array2<f64>,
    l3: Array2<f64>,
    mu: f64,
    iterations: usize,
    objective_trace: Vec<f64>,
    iterate_trace: Vec<IterateTrace>,
    best_residual: f64,
    best_p1: Array2<f64>,
    best_p2: Array2<f64>,
}

impl LtaSolver {
    /// Validates the inputs and sets up the all-zero initial state.
    ///
    /// `links` must be a 0/1 matrix whose unit entries are a subset of the
    /// unit entries of `coassoc`: a pair the whole pool agrees on is by
    /// construction fully co-associated, so anything else is an input error.
    pub fn new(
        coassoc: &SimilarityMatrix,
        links: &SimilarityMatrix,
        cfg: LtaConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = coassoc.n();
        if links.n() != n {
            return Err(Error::DimensionMismatch {
                context: "link mask size",
                expected: n,
                actual: links.n(),
            });
        }
        let a = coassoc.values().clone();
        let mut mask = Array2::from_elem((n, n), false);
        for i in 0..n {
            for j in 0..n {
                let v = links.values()[[i, j]];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidParameter {
                        name: "links",
                        reason: format!("entry ({i},{j}) = {v} is neither 0 nor 1"),
                    });
                }
                if v == 1.0 {
                    if a[[i, j]] != 1.0 {
                        return Err(Error::UnsupportedLink {
                            row: i,
                            col: j,
                            value: a[[i, j]],
                        });
                    }
                    mask[[i, j]] = true;
                }
            }
        }
        let zero = || Array2::zeros((n, n));
        Ok(Self {
            a,
            mask,
            mu: cfg.mu0,
            cfg,
            p1: zero(),
            p2: zero(),
            e: zero(),
            b: zero(),
            c: zero(),
            l1: zero(),
            l2: zero(),
            l3: zero(),
            iterations: 0,
            objective_trace: Vec::new(),
            iterate_trace: Vec::new(),
            best_residual: f64::INFINITY,
            best_p1: zero(),
            best_p2: zero(),
        })
    }

    /// One full update cycle: `P`, `E`, `B`, `C`, multipliers, penalty.
    pub fn step(&mut self) -> Result<Residuals> {
        let mu = self.mu;

        let target = prox_target(
            &self.a, &self.b, &self.c, &self.e, &self.l1, &self.l2, &self.l3, mu,
        );
        let (p, nuclear) = tnn_prox_with_norm(&target, 1.0 / mu, self.cfg.orientation)?;
        self.p1 = p.frontal_slice(0);
        self.p2 = p.frontal_slice(1);

        self.e = error_update(&self.a, &self.p2, &self.l2, mu, self.cfg.lambda);
        self.b = link_completion_update(&self.p1, &self.l1, mu, &self.mask);
        self.c = consensus_update(&self.p2, &self.l3, mu);

        ndarray::Zip::from(&mut self.l1)
            .and(&self.p1)
            .and(&self.b)
            .for_each(|l, &p, &b| *l += mu * (p - b));
        ndarray::Zip::from(&mut self.l2)
            .and(&self.p2)
            .and(&self.e)
            .and(&self.a)
            .for_each(|l, &p, &e, &a| *l += mu * (p + e - a));
        ndarray::Zip::from(&mut self.l3)
            .and(&self.p2)
            .and(&self.c)
            .for_each(|l, &p, &c| *l += mu * (p - c));
        self.mu = (self.mu * self.cfg.rho).min(self.cfg.mu_max);

        let e_sq: f64 = self.e.iter().map(|v| v * v).sum();
        let objective = nuclear + self.cfg.lambda * e_sq;
        self.objective_trace.push(objective);
        self.iterations += 1;

        let residuals = self.residuals();
        if self.cfg.trace_iterates {
            self.iterate_trace.push(IterateTrace {
                iteration: self.iterations,
                residuals,
                objective,
            });
        }
        if residuals.max() < self.best_residual {
            self.best_residual = residuals.max();
            self.best_p1.assign(&self.p1);
            self.best_p2.assign(&self.p2);
        }
        Ok(residuals)
    }

    /// Residuals of the current iterate.
    pub fn residuals(&self) -> Residuals {
        let inf = |diff: f64, acc: f64| acc.max(diff.abs());
        let mut link_gap = 0.0;
        let mut consensus_gap = 0.0;
        let mut fit_gap = 0.0;
        for ((i, j), &a) in self.a.indexed_iter() {
            link_gap = inf(self.b[[i, j]] - self.p1[[i, j]], link_gap);
            consensus_gap = inf(self.c[[i, j]] - self.p2[[i, j]], consensus_gap);
            fit_gap = inf(a - self.e[[i, j]] - self.p2[[i, j]], fit_gap);
        }
        Residuals {
            link_gap,
            consensus_gap,
            fit_gap,
        }
    }

    /// Runs until the residual drops below `tol` or `max_iter` is reached.
    pub fn run(&mut self) -> Result<LtaResult> {
        let mut converged = false;
        while self.iterations < self.cfg.max_iter {
            let residuals = self.step()?;
            if residuals.max() < self.cfg.tol {
                converged = true;
                break;
            }
        }
        let refined = symmetrize_clip(&self.best_p2);
        Ok(LtaResult {
            refined: SimilarityMatrix::new(refined, MatrixKind::Refined)?,
            completed_link: self.best_p1.clone(),
            iterations: self.iterations,
            converged,
            final_residual: self.best_residual,
            objective_trace: self.objective_trace.clone(),
            iterate_trace: self.iterate_trace.clone(),
        })
    }

    /// Link-completion variable `B`.
    pub fn link_completion(&self) -> &Array2<f64> {
        &self.b
    }

    /// Consensus auxiliary variable `C`.
    pub fn consensus_aux(&self) -> &Array2<f64> {
        &self.c
    }

    /// Noise slice `E`.
    pub fn error_term(&self) -> &Array2<f64> {
        &self.e
    }

    /// Low-rank slices `(P(:,:,1), P(:,:,2))`.
    pub fn low_rank_slices(&self) -> (&Array2<f64>, &Array2<f64>) {
        (&self.p1, &self.p2)
    }

    /// Multipliers `(L1, L2, L3)` for the three constraints.
    pub fn multipliers(&self) -> (&Array2<f64>, &Array2<f64>, &Array2<f64>) {
        (&self.l1, &self.l2, &self.l3)
    }

    /// Current penalty strength.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Iterations run so far.
    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// Refines the stacked `(M, A)` evidence tensor; see the module docs.
pub fn solve(
    coassoc: &SimilarityMatrix,
    links: &SimilarityMatrix,
    cfg: LtaConfig,
) -> Result<LtaResult> {
    LtaSolver::new(coassoc, links, cfg)?.run()
}

/// Stacks the proximal-step target: the first slice pulls `P(:,:,1)` towards
/// the completed links, the second averages the two quadratic pulls on the
/// refined slice.
#[allow(clippy::too_many_arguments)]
fn prox_target(
    a: &Array2<f64>,
    b: &Array2<f64>,
    c: &Array2<f64>,
    e: &Array2<f64>,
    l1: &Array2<f64>,
    l2: &Array2<f64>,
    l3: &Array2<f64>,
    mu: f64,
) -> Tensor3 {
    let t1 = b - &(l1 / mu);
    let t2 = (a + c - e - &((l2 + l3) / mu)) * 0.5;
    Tensor3::from_frontal_slices(&[t1.view(), t2.view()])
        .expect("slices share the validated input shape")
}

/// Closed-form minimiser of `lambda ||E||^2 + mu/2 ||P2 + E - A + L2/mu||^2`.
fn error_update(
    a: &Array2<f64>,
    p2: &Array2<f64>,
    l2: &Array2<f64>,
    mu: f64,
    lambda: f64,
) -> Array2<f64> {
    let mut e = Array2::zeros(a.dim());
    ndarray::Zip::from(&mut e)
        .and(a)
        .and(p2)
        .and(l2)
        .for_each(|out, &a, &p, &l| {
            *out = (mu * (a - p) - l) / (2.0 * lambda + mu);
        });
    e
}

/// Projection of the multiplier-shifted `P(:,:,1)` onto the symmetric unit
/// box, with mask entries pinned at 1.
fn link_completion_update(
    p1: &Array2<f64>,
    l1: &Array2<f64>,
    mu: f64,
    mask: &Array2<bool>,
) -> Array2<f64> {
    let shifted = p1 + &(l1 / mu);
    let mut b = Array2::zeros(p1.dim());
    for ((i, j), out) in b.indexed_iter_mut() {
        if mask[[i, j]] {
            *out = 1.0;
        } else {
            let sym = 0.5 * (shifted[[i, j]] + shifted[[j, i]]);
            *out = sym.clamp(0.0, 1.0);
        }
    }
    b
}

/// Projection of the multiplier-shifted `P(:,:,2)` onto the symmetric unit
/// box.
fn consensus_update(p2: &Array2<f64>, l3: &Array2<f64>, mu: f64) -> Array2<f64> {
    let shifted = p2 + &(l3 / mu);
    let mut c = Array2::zeros(p2.dim());
    for ((i, j), out) in c.indexed_iter_mut() {
        let sym = 0.5 * (shifted[[i, j]] + shifted[[j, i]]);
        *out = sym.clamp(0.0, 1.0);
    }
    c
}

/// `(X + X^T) / 2`, clipped to the unit interval.
fn symmetrize_clip(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut out = Array2::zeros((n, n));
    for ((i, j), v) in out.indexed_iter_mut() {
        *v = (0.5 * (x[[i, j]] + x[[j, i]])).clamp(0.0, 1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{co_association, coherent_link, LabelMatrix};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn toy_inputs() -> (SimilarityMatrix, SimilarityMatrix) {
        let pool = LabelMatrix::from_columns(&[
            vec![1, 1, 1, 2, 2, 2],
            vec![1, 1, 1, 2, 2, 2],
            vec![1, 1, 2, 2, 2, 1],
        ])
        .unwrap();
        let a = co_association(&pool).unwrap();
        let m = coherent_link(&a).unwrap();
        (a, m)
    }

    #[test]
    fn error_update_matches_hand_value() {
        let a = array![[1.0, 0.5], [0.5, 1.0]];
        let p2 = array![[0.2, 0.1], [0.1, 0.2]];
        let l2 = array![[0.01, 0.0], [0.0, 0.01]];
        let e = error_update(&a, &p2, &l2, 0.5, 0.002);
        assert_abs_diff_eq!(e[[0, 0]], (0.5 * 0.8 - 0.01) / 0.504, epsilon = 1e-15);
        assert_abs_diff_eq!(e[[0, 1]], (0.5 * 0.4) / 0.504, epsilon = 1e-15);
    }

    #[test]
    fn link_completion_symmetrizes_clips_and_pins() {
        let p1 = array![[1.4, -0.3], [0.5, 0.2]];
        let l1 = array![[0.2, 0.4], [0.0, -0.2]];
        let mask = array![[true, false], [false, true]];
        let b = link_completion_update(&p1, &l1, 2.0, &mask);
        assert_eq!(b[[0, 0]], 1.0);
        assert_eq!(b[[1, 1]], 1.0);
        assert_abs_diff_eq!(b[[0, 1]], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(b[[1, 0]], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn consensus_update_projects_onto_symmetric_box() {
        let p2 = array![[1.6, 0.4], [-0.2, 0.3]];
        let l3 = Array2::zeros((2, 2));
        let c = consensus_update(&p2, &l3, 1.0);
        assert_eq!(c[[0, 0]], 1.0);
        assert_abs_diff_eq!(c[[0, 1]], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(c[[1, 0]], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(c[[1, 1]], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn prox_target_matches_entrywise_recomputation() {
        let a = array![[1.0, 0.6], [0.6, 1.0]];
        let b = array![[0.9, 0.2], [0.2, 0.9]];
        let c = array![[0.8, 0.3], [0.3, 0.8]];
        let e = array![[0.05, -0.1], [-0.1, 0.05]];
        let l1 = array![[0.4, -0.2], [-0.2, 0.4]];
        let l2 = array![[0.1, 0.2], [0.2, 0.1]];
        let l3 = array![[-0.3, 0.0], [0.0, -0.3]];
        let mu = 0.7;
        let t = prox_target(&a, &b, &c, &e, &l1, &l2, &l3, mu);
        for i in 0..2 {
            for j in 0..2 {
                let t1 = b[[i, j]] - l1[[i, j]] / mu;
                let t2 = 0.5 * (a[[i, j]] + c[[i, j]] - e[[i, j]] - (l2[[i, j]] + l3[[i, j]]) / mu);
                assert_abs_diff_eq!(t.frontal_slice(0)[[i, j]], t1, epsilon = 1e-15);
                assert_abs_diff_eq!(t.frontal_slice(1)[[i, j]], t2, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn first_iteration_from_zeros_matches_hand_values() {
        let (a, m) = toy_inputs();
        let cfg = LtaConfig::default();
        let (mu0, lambda) = (cfg.mu0, cfg.lambda);
        let mut solver = LtaSolver::new(&a, &m, cfg).unwrap();
        solver.step().unwrap();

        // The prox threshold 1/mu0 = 1e4 dwarfs the target, so P stays zero;
        // every other update then has a closed form in A and M alone.
        let (p1, p2) = solver.low_rank_slices();
        assert!(p1.iter().chain(p2.iter()).all(|v| v.abs() < 1e-12));

        let (l1, l2, l3) = solver.multipliers();
        for ((i, j), &av) in a.values().indexed_iter() {
            let mask = m.values()[[i, j]] == 1.0;
            let e = mu0 * av / (2.0 * lambda + mu0);
            let b = if mask { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(solver.error_term()[[i, j]], e, epsilon = 1e-15);
            assert_abs_diff_eq!(solver.link_completion()[[i, j]], b, epsilon = 1e-15);
            assert_abs_diff_eq!(solver.consensus_aux()[[i, j]], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(l1[[i, j]], -mu0 * b, epsilon = 1e-18);
            assert_abs_diff_eq!(l2[[i, j]], mu0 * (e - av), epsilon = 1e-18);
            assert_abs_diff_eq!(l3[[i, j]], 0.0, epsilon = 1e-18);
        }
        assert_abs_diff_eq!(solver.mu(), mu0 * 1.1, epsilon = 1e-18);
    }

    #[test]
    fn identity_inputs_keep_partition_structure() {
        let eye = Array2::from_shape_fn((3, 3), |(i, j)| f64::from(u8::from(i == j)));
        let a = SimilarityMatrix::new(eye.clone(), MatrixKind::CoAssociation { m: 3 }).unwrap();
        let m = SimilarityMatrix::new(eye, MatrixKind::CoherentLink).unwrap();

        let result = solve(&a, &m, LtaConfig::default()).unwrap();
        assert!(result.converged);
        let refined = result.refined.values();
        for ((i, j), &v) in refined.indexed_iter() {
            if i != j {
                assert!(v.abs() < 1e-9, "off-diagonal {v}");
            }
        }

        let cfg = LtaConfig {
            lambda: 2.0,
            ..LtaConfig::default()
        };
        let result = solve(&a, &m, cfg).unwrap();
        assert!(result.converged);
        let refined = result.refined.values();
        for ((i, j), &v) in refined.indexed_iter() {
            if i == j {
                assert!(v > 0.8, "diagonal {v}");
            } else {
                assert!(v.abs() < 1e-9, "off-diagonal {v}");
            }
        }
    }

    #[test]
    fn converged_objective_beats_the_trivial_feasible_point() {
        use crate::tensor::{fourier_nuclear_norm, Tensor3};
        let (a, m) = toy_inputs();
        for lambda in [0.002, 2.0] {
            let cfg = LtaConfig {
                lambda,
                ..LtaConfig::default()
            };
            let result = solve(&a, &m, cfg.clone()).unwrap();
            assert!(result.converged);

            // The comparison runs under the objective the proximal step
            // minimises: the Fourier-domain nuclear norm.
            let objective = |p1: &Array2<f64>, p2: &Array2<f64>, e: &Array2<f64>| {
                let p = Tensor3::from_frontal_slices(&[p1.view(), p2.view()]).unwrap();
                fourier_nuclear_norm(&p, cfg.orientation).unwrap()
                    + lambda * e.iter().map(|v| v * v).sum::<f64>()
            };
            let e_star = a.values() - result.refined.values();
            let reached = objective(&result.completed_link, result.refined.values(), &e_star);
            let trivial = objective(m.values(), a.values(), &Array2::zeros(a.values().dim()));
            assert!(
                reached <= trivial + 1e-9,
                "lambda {lambda}: objective {reached} vs trivial feasible {trivial}"
            );
        }
    }

    #[test]
    fn iterate_trace_is_recorded_when_enabled() {
        let (a, m) = toy_inputs();
        let cfg = LtaConfig {
            trace_iterates: true,
            max_iter: 7,
            ..LtaConfig::default()
        };
        let result = solve(&a, &m, cfg).unwrap();
        assert_eq!(result.iterate_trace.len(), result.iterations);
        for (idx, row) in result.iterate_trace.iter().enumerate() {
            assert_eq!(row.iteration, idx + 1);
            assert_eq!(row.objective, result.objective_trace[idx]);
            assert!(row.residuals.max().is_finite());
        }

        let silent = solve(&a, &m, LtaConfig::default()).unwrap();
        assert!(silent.iterate_trace.is_empty());
    }

    #[test]
    fn vanishing_threshold_returns_prox_target() {
        let (a, m) = toy_inputs();
        let cfg = LtaConfig {
            mu0: 1e12,
            mu_max: 1e12,
            ..LtaConfig::default()
        };
        let mut solver = LtaSolver::new(&a, &m, cfg).unwrap();
        solver.step().unwrap();
        let (p1, p2) = solver.low_rank_slices();
        // With an all-zero state the prox target is (0, A/2); a 1e-12
        // threshold leaves it essentially untouched.
        assert!(p1.iter().all(|v| v.abs() < 1e-9));
        let half_a = a.values() * 0.5;
        let max_dev = (p2 - &half_a)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(max_dev < 1e-9, "P(:,:,2) deviates from A/2 by {max_dev}");
    }

    #[test]
    fn mask_is_pinned_from_the_first_update_onwards() {
        let (a, m) = toy_inputs();
        let mut solver = LtaSolver::new(&a, &m, LtaConfig::default()).unwrap();
        for _ in 0..40 {
            solver.step().unwrap();
            for ((i, j), &linked) in solver.mask.indexed_iter() {
                if linked {
                    assert_eq!(solver.link_completion()[[i, j]], 1.0);
                }
            }
        }
    }

    #[test]
    fn toy_ensemble_converges_and_sharpens_blocks() {
        let (a, m) = toy_inputs();
        // The fidelity weight trades off against problem size: the default
        // suits hundreds of samples, while six samples need a stronger pull
        // towards the co-association evidence for the blocks to survive.
        let cfg = LtaConfig {
            lambda: 2.0,
            ..LtaConfig::default()
        };
        let result = solve(&a, &m, cfg).unwrap();
        assert!(result.converged, "residual {}", result.final_residual);
        assert!(result.final_residual < 1e-8);
        assert!(result.iterations <= 500);

        let refined = result.refined.values();
        let mut min_within = f64::INFINITY;
        let mut max_cross = f64::NEG_INFINITY;
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    continue;
                }
                let same_block = (i < 3) == (j < 3);
                if same_block {
                    min_within = min_within.min(refined[[i, j]]);
                } else {
                    max_cross = max_cross.max(refined[[i, j]]);
                }
            }
        }
        assert!(
            min_within > max_cross,
            "blocks not separated: within {min_within} vs cross {max_cross}"
        );
    }

    #[test]
    fn all_ones_mask_converges() {
        let ones = SimilarityMatrix::new(Array2::from_elem((4, 4), 1.0), MatrixKind::CoherentLink)
            .unwrap();
        let a = SimilarityMatrix::new(
            Array2::from_elem((4, 4), 1.0),
            MatrixKind::CoAssociation { m: 3 },
        )
        .unwrap();
        // The default configuration must converge on the degenerate input;
        // the fixed point keeps the refined slice constant.
        let result = solve(&a, &ones, LtaConfig::default()).unwrap();
        assert!(result.converged);
        let refined = result.refined.values();
        let spread = refined
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        assert!(
            spread.1 - spread.0 < 1e-9,
            "refined not constant: {spread:?}"
        );

        // A fidelity weight matched to the tiny problem recovers the
        // unanimous verdict.
        let cfg = LtaConfig {
            lambda: 2.0,
            ..LtaConfig::default()
        };
        let result = solve(&a, &ones, cfg).unwrap();
        assert!(result.converged);
        for v in result.refined.values() {
            assert!(*v > 0.9, "refined entry {v}");
        }
    }

    #[test]
    fn single_sample_problem_is_fine() {
        let a = SimilarityMatrix::new(array![[1.0]], MatrixKind::CoAssociation { m: 2 }).unwrap();
        let m = SimilarityMatrix::new(array![[1.0]], MatrixKind::CoherentLink).unwrap();
        let result = solve(&a, &m, LtaConfig::default()).unwrap();
        assert!(result.converged);
        let v = result.refined.values()[[0, 0]];
        assert!(v.is_finite() && (0.0..=1.0).contains(&v), "refined {v}");
    }

    #[test]
    fn loose_tolerance_stops_after_one_iteration() {
        let (a, m) = toy_inputs();
        let cfg = LtaConfig {
            tol: 1e10,
            ..LtaConfig::default()
        };
        let result = solve(&a, &m, cfg).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn exhausting_iterations_is_not_an_error() {
        let (a, m) = toy_inputs();
        let cfg = LtaConfig {
            max_iter: 3,
            ..LtaConfig::default()
        };
        let result = solve(&a, &m, cfg).unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations, 3);
        assert_eq!(result.objective_trace.len(), 3);
    }

    #[test]
    fn unsupported_link_is_rejected() {
        let a = SimilarityMatrix::new(
            array![[1.0, 0.5], [0.5, 1.0]],
            MatrixKind::CoAssociation { m: 2 },
        )
        .unwrap();
        let m = SimilarityMatrix::new(array![[1.0, 1.0], [1.0, 1.0]], MatrixKind::CoherentLink)
            .unwrap();
        let err = LtaSolver::new(&a, &m, LtaConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedLink { row: 0, col: 1, .. }));
    }

    #[test]
    fn solver_is_deterministic() {
        let (a, m) = toy_inputs();
        let r1 = solve(&a, &m, LtaConfig::default()).unwrap();
        let r2 = solve(&a, &m, LtaConfig::default()).unwrap();
        assert_eq!(r1.refined.values(), r2.refined.values());
        assert_eq!(r1.iterations, r2.iterations);
        assert_eq!(r1.objective_trace, r2.objective_trace);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (a, m) = toy_inputs();
        for cfg in [
            LtaConfig {
                mu0: 0.0,
                ..LtaConfig::default()
            },
            LtaConfig {
                rho: 0.5,
                ..LtaConfig::default()
            },
            LtaConfig {
                tol: -1.0,
                ..LtaConfig::default()
            },
            LtaConfig {
                max_iter: 0,
                ..LtaConfig::default()
            },
            LtaConfig {
                mu_max: 1e-9,
                ..LtaConfig::default()
            },
        ] {
            assert!(LtaSolver::new(&a, &m, cfg).is_err());
        }
    }
}
