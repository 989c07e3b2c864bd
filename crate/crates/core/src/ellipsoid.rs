//! Central-cut ellipsoid method over the dual of the marginal-form LP.
//!
//! The exponential constraint family is separated by a [`SubDualOracle`]. Every
//! set the oracle reports as violating is recorded; the LP restricted to those
//! sets (plus `∅`) is then solved directly to recover a primal solution.

use serde::{Deserialize, Serialize};

use crate::cost::{oracle_call, OracleConfig, SubDualOracle};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{row_slack, solve_aux_primal, DualPoint, LpSolution, ViolatedSets};
use crate::subset::Subset;

/// Trace of the shape matrix below which the optional early exit fires.
pub const EARLY_EXIT_TRACE: f64 = 1e-24;

/// Relative width below which a cut cannot move the center in double precision.
pub const RESOLUTION: f64 = 1e-13;

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// All `t_max` cut steps were taken.
    Budget,
    /// `trace(D)` fell below [`EARLY_EXIT_TRACE`] with early exit enabled.
    SmallTrace,
    /// The ellipsoid collapsed to floating-point resolution along a cut direction.
    Resolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidConfig {
    pub oracle: OracleConfig,
    /// Iteration budget; `None` uses [`default_t_max`].
    pub t_max: Option<u64>,
    /// Stop once `trace(D)` drops below [`EARLY_EXIT_TRACE`].
    pub early_exit: bool,
    /// Keep one [`TraceRecord`] per step.
    pub record_trace: bool,
}

impl Default for EllipsoidConfig {
    fn default() -> Self {
        EllipsoidConfig { oracle: OracleConfig::Exact, t_max: None, early_exit: false, record_trace: false }
    }
}

/// Which constraint produced a cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cut", rename_all = "kebab-case")]
pub enum CutKind {
    Objective,
    Row { i: usize, j: usize },
    Nonnegativity { i: usize, j: usize },
    AssortmentWithCost { j: usize, set: Subset },
    /// No cut: the center was feasible and became the incumbent.
    Incumbent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    #[serde(flatten)]
    pub cut: CutKind,
    pub obj: f64,
    pub incumbent_updated: bool,
}

/// A recorded violation of the exponential family, with the values at the time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssortmentCut {
    pub t: u64,
    pub j: usize,
    pub set: Subset,
    pub value: f64,
    pub beta: f64,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipsoidRun {
    pub violated: ViolatedSets,
    pub best: DualPoint,
    /// Incumbent objective, in the units of the instance the run was given.
    pub obj: f64,
    /// Cut steps taken.
    pub iterations: u64,
    pub t_max: u64,
    pub stop: StopReason,
    /// `(t, obj)` at every incumbent update.
    pub incumbent_history: Vec<(u64, f64)>,
    pub assortment_cuts: Vec<AssortmentCut>,
    pub trace: Vec<TraceRecord>,
    pub oracle_delta: Option<f64>,
}

/// Radius of the starting ball: `10 (m + nm) max(1, max 1/u)`.
pub fn initial_radius(inst: &Instance) -> f64 {
    let (n, m) = (inst.n() as f64, inst.m() as f64);
    let mut inv_u: f64 = 1.0;
    for i in 0..inst.n() {
        for &u in inst.customer_weights(i) {
            inv_u = inv_u.max(1.0 / u);
        }
    }
    10.0 * (m + n * m) * inv_u
}

/// `⌈50 N² ln(10 N ρ)⌉` with `N = 2nm + m`.
pub fn default_t_max(inst: &Instance) -> u64 {
    let dim = (2 * inst.n() * inst.m() + inst.m()) as f64;
    (50.0 * dim * dim * (10.0 * dim * initial_radius(inst)).ln()).ceil() as u64
}

/// The shape matrix kept in factored form `D = B Bᵀ`. The rank-one update is
/// applied to `B`, so `aᵀDa = |Bᵀa|²` cannot turn negative through rounding.
struct Shape {
    dim: usize,
    b: Vec<f64>,
}

impl Shape {
    fn new(dim: usize, radius: f64) -> Self {
        let mut b = vec![0.0; dim * dim];
        for k in 0..dim {
            b[k * dim + k] = radius;
        }
        Shape { dim, b }
    }

    fn trace(&self) -> f64 {
        self.b.iter().map(|x| x * x).sum()
    }

    /// Applies the central cut keeping `{y : aᵀy ≥ aᵀs}`. Returns false when the
    /// ellipsoid's width along `a` is below floating-point resolution.
    fn cut(&mut self, s: &mut [f64], a: &[(usize, f64)], t: u64) -> Result<bool> {
        let dim = self.dim;
        // p = Bᵀa
        let mut p = vec![0.0; dim];
        for &(l, al) in a {
            let row = &self.b[l * dim..(l + 1) * dim];
            for (pk, &bk) in p.iter_mut().zip(row) {
                *pk += al * bk;
            }
        }
        let q: f64 = p.iter().map(|x| x * x).sum();
        if !q.is_finite() {
            return Err(Error::EllipsoidBreakdown {
                iteration: t,
                quad_form: q,
                detail: format!("shape trace {:e}", self.trace()),
            });
        }
        let norm = q.sqrt();
        let a_norm = a.iter().map(|&(_, al)| al * al).sum::<f64>().sqrt();
        let s_scale = s.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        if norm <= RESOLUTION * a_norm * s_scale {
            return Ok(false);
        }
        for pk in p.iter_mut() {
            *pk /= norm;
        }
        // Da/√(aᵀDa) = B p̂
        let mut dir = vec![0.0; dim];
        for (k, dk) in dir.iter_mut().enumerate() {
            let row = &self.b[k * dim..(k + 1) * dim];
            *dk = row.iter().zip(&p).map(|(x, y)| x * y).sum();
        }
        let nf = dim as f64;
        for (sk, dk) in s.iter_mut().zip(&dir) {
            *sk += dk / (nf + 1.0);
        }
        // B ← √f · B (I − c p̂p̂ᵀ), with (2c − c²) = 2/(N+1)
        let root_f = nf / (nf * nf - 1.0).sqrt();
        let c = 1.0 - ((nf - 1.0) / (nf + 1.0)).sqrt();
        for k in 0..dim {
            let f = c * dir[k];
            let row = &mut self.b[k * dim..(k + 1) * dim];
            for (x, &pl) in row.iter_mut().zip(&p) {
                *x = root_f * (*x - f * pl);
            }
        }
        Ok(true)
    }
}

/// Runs the ellipsoid method on the dual of `inst`. Revenues must be normalized
/// so that every `R_j(C) ≤ 1`.
pub fn run_ellipsoid(inst: &Instance, cfg: &EllipsoidConfig) -> Result<EllipsoidRun> {
    let max_r = inst.max_revenue();
    if max_r > 1.0 + 1e-12 {
        return Err(Error::NotNormalized(max_r));
    }
    let (n, m) = (inst.n(), inst.m());
    let dim = 2 * n * m + m;
    let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(inst));
    if t_max == 0 {
        return Err(Error::InvalidArgument("t_max must be at least 1".into()));
    }
    let beta0 = n * m;
    let gamma0 = n * m + m;

    let mut s = vec![0.0; dim];
    let mut shape = Shape::new(dim, initial_radius(inst));
    let mut best = DualPoint::uniform_beta(n, m, 1.0);
    let mut obj = m as f64;
    let mut violated = ViolatedSets::new(m);
    let mut history = Vec::new();
    let mut cuts = Vec::new();
    let mut trace = Vec::new();
    let mut t = 0u64;
    let mut stop = StopReason::Budget;
    let objective_cut: Vec<(usize, f64)> = (0..n * m).chain(beta0..gamma0).map(|k| (k, -1.0)).collect();

    while t < t_max {
        if cfg.early_exit && shape.trace() < EARLY_EXIT_TRACE {
            stop = StopReason::SmallTrace;
            break;
        }
        let point = DualPoint::from_vec(n, m, &s);
        let found = 'find: {
            if point.objective() >= obj {
                break 'find Some((CutKind::Objective, objective_cut.clone()));
            }
            for i in 0..n {
                for j in 0..m {
                    if row_slack(inst, &point.alpha, &point.gamma, i, j) < 0.0 {
                        let mut a: Vec<(usize, f64)> = (0..m).map(|l| (i * m + l, 1.0)).collect();
                        a[j].1 += 1.0 / inst.u(i, j);
                        a.push((gamma0 + i * m + j, -1.0));
                        break 'find Some((CutKind::Row { i, j }, a));
                    }
                }
            }
            for i in 0..n {
                for j in 0..m {
                    if point.alpha[i][j] < 0.0 {
                        break 'find Some((CutKind::Nonnegativity { i, j }, vec![(i * m + j, 1.0)]));
                    }
                }
            }
            for j in 0..m {
                let answer = oracle_call(&cfg.oracle, inst, j, &point.gamma)?;
                if answer.value > point.beta[j] {
                    let mut a = vec![(beta0 + j, 1.0)];
                    a.extend(answer.set.iter().map(|i| (gamma0 + i * m + j, 1.0)));
                    cuts.push(AssortmentCut {
                        t,
                        j,
                        set: answer.set.clone(),
                        value: answer.value,
                        beta: point.beta[j],
                        gamma: (0..n).map(|i| point.gamma.get(i, j)).collect(),
                    });
                    violated.insert(j, answer.set.clone());
                    break 'find Some((CutKind::AssortmentWithCost { j, set: answer.set }, a));
                }
            }
            None
        };
        let Some((cut, a)) = found else {
            // Feasible center: new incumbent, then re-enter without counting a step.
            obj = point.objective();
            best = point;
            history.push((t, obj));
            if cfg.record_trace {
                trace.push(TraceRecord { t, cut: CutKind::Incumbent, obj, incumbent_updated: true });
            }
            continue;
        };
        if cfg.record_trace {
            trace.push(TraceRecord { t, cut, obj, incumbent_updated: false });
        }
        if !shape.cut(&mut s, &a, t)? {
            stop = StopReason::Resolution;
            break;
        }
        t += 1;
    }

    Ok(EllipsoidRun {
        violated,
        best,
        obj,
        iterations: t,
        t_max,
        stop,
        incumbent_history: history,
        assortment_cuts: cuts,
        trace,
        oracle_delta: cfg.oracle.delta(),
    })
}

/// Primal solution recovered from an ellipsoid run, plus the run itself.
#[derive(Debug, Clone)]
pub struct ApproxSolution {
    /// Feasible for the LP on the original (unnormalized) instance.
    pub solution: LpSolution,
    /// Run on the normalized instance.
    pub run: EllipsoidRun,
    /// Factor that converts normalized objectives back to original units.
    pub revenue_scale: f64,
}

impl ApproxSolution {
    /// Upper bound on the LP optimum certified by the incumbent, in original units.
    pub fn dual_bound(&self) -> f64 {
        self.run.obj * self.revenue_scale
    }
}

/// Normalizes `inst`, runs the ellipsoid, and solves the LP restricted to the
/// recorded sets.
pub fn solve_lp2_approx(inst: &Instance, cfg: &EllipsoidConfig) -> Result<ApproxSolution> {
    let normalized = inst.normalize_revenues();
    let revenue_scale = normalized.revenue_scale() / inst.revenue_scale();
    let run = run_ellipsoid(&normalized, cfg)?;
    let solution = solve_aux_primal(inst, &run.violated)?;
    Ok(ApproxSolution { solution, run, revenue_scale })
}
