//! Backend-neutral LP/MILP model building and solving.
//!
//! The market-clearing and reformulation modules build [`Model`]s through
//! [`ModelBuilder`] and never touch a concrete solver. Two backends are
//! provided behind [`Backend`]: HiGHS (LP + MILP, the default) and
//! Clarabel (interior-point LP), selected at runtime via [`SolverConfig`].
//!
//! Dual convention for LPs: with the model's objective sense taken as
//! maximize, the returned row dual `y` and reduced cost `z` satisfy the
//! stationarity identity `obj = A^T y + z` with `y >= 0` on `<=` rows,
//! `y <= 0` on `>=` rows, `y` free on equalities, `z >= 0` on variables at
//! their upper bound and `z <= 0` at their lower bound. This is exactly
//! the sign convention of the clearing problem's bracketed multipliers.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("model error: {0}")]
    Model(String),
    #[error("backend '{backend}' failure: {message}")]
    Backend { backend: &'static str, message: String },
    #[error("backend '{0}' does not support integer variables")]
    NoIntegerSupport(&'static str),
    #[error("unknown solver backend '{0}' (expected 'highs' or 'clarabel')")]
    UnknownBackend(String),
    #[error("kkt check failed: {0}")]
    KktCheck(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConId(pub usize);

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    pub obj: f64,
}

#[derive(Debug, Clone)]
pub struct ConDef {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub rel: Rel,
    pub rhs: f64,
}

/// A validated optimization model with deterministic variable and
/// constraint ordering (insertion order).
#[derive(Debug, Clone)]
pub struct Model {
    pub sense: Sense,
    pub vars: Vec<VarDef>,
    pub cons: Vec<ConDef>,
}

impl Model {
    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        let mut m: f64 = 0.0;
        for v in &self.vars {
            m = m.max(v.obj.abs());
        }
        for c in &self.cons {
            for &(_, a) in &c.terms {
                m = m.max(a.abs());
            }
            m = m.max(c.rhs.abs());
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct ModelBuilder {
    sense: Sense,
    vars: Vec<VarDef>,
    cons: Vec<ConDef>,
}

impl ModelBuilder {
    pub fn new(sense: Sense) -> Self {
        Self { sense, vars: Vec::new(), cons: Vec::new() }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lb: f64,
        ub: f64,
        obj: f64,
    ) -> Result<VarId, SolverError> {
        let name = name.into();
        if obj.is_nan() || lb.is_nan() || ub.is_nan() {
            return Err(SolverError::Model(format!("NaN in variable '{name}'")));
        }
        if lb > ub {
            return Err(SolverError::Model(format!(
                "variable '{name}' has lb {lb} > ub {ub}"
            )));
        }
        self.vars.push(VarDef { name, kind, lb, ub, obj });
        Ok(VarId(self.vars.len() - 1))
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        rel: Rel,
        rhs: f64,
    ) -> Result<ConId, SolverError> {
        let name = name.into();
        if rhs.is_nan() {
            return Err(SolverError::Model(format!("NaN rhs in constraint '{name}'")));
        }
        for &(v, a) in &terms {
            if v.0 >= self.vars.len() {
                return Err(SolverError::Model(format!(
                    "constraint '{name}' references unregistered variable #{}",
                    v.0
                )));
            }
            if !a.is_finite() {
                return Err(SolverError::Model(format!(
                    "non-finite coefficient in constraint '{name}'"
                )));
            }
        }
        self.cons.push(ConDef { name, terms, rel, rhs });
        Ok(ConId(self.cons.len() - 1))
    }

    pub fn set_objective_coefficient(&mut self, var: VarId, obj: f64) {
        self.vars[var.0].obj = obj;
    }

    pub fn build(self) -> Model {
        Model { sense: self.sense, vars: self.vars, cons: self.cons }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row duals in the convention documented at module level; present
    /// only when every variable is continuous.
    pub row_duals: Option<Vec<f64>>,
    /// Reduced costs, same availability as `row_duals`.
    pub reduced_costs: Option<Vec<f64>>,
    /// Configured relative gap bound for MIP solves.
    pub gap: Option<f64>,
    pub wall_time_s: f64,
}

impl SolveResult {
    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    pub fn dual(&self, c: ConId) -> f64 {
        self.row_duals.as_ref().expect("LP duals requested on a MIP result")[c.0]
    }

    pub fn reduced_cost(&self, v: VarId) -> f64 {
        self.reduced_costs.as_ref().expect("LP duals requested on a MIP result")[v.0]
    }
}

/// Runtime solver settings, exposed through configuration keys
/// `solver.backend`, `solver.mip_gap`, `solver.lp_tol`,
/// `solver.time_limit_s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: String,
    pub mip_gap: f64,
    pub lp_tol: f64,
    pub time_limit_s: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: "highs".into(),
            mip_gap: 1e-6,
            lp_tol: 1e-8,
            time_limit_s: None,
        }
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn supports_integer(&self) -> bool;
    fn solve_raw(&self, model: &Model, cfg: &SolverConfig) -> Result<SolveResult, SolverError>;
}

pub fn backend_from_config(cfg: &SolverConfig) -> Result<Box<dyn Backend>, SolverError> {
    match cfg.backend.as_str() {
        "highs" => Ok(Box::new(HighsBackend)),
        "clarabel" => Ok(Box::new(ClarabelBackend)),
        other => Err(SolverError::UnknownBackend(other.to_string())),
    }
}

/// Solves a model with the configured backend and, for LPs that come back
/// optimal, checks the KKT residuals against the documented tolerance.
pub fn optimize(model: &Model, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    let backend = backend_from_config(cfg)?;
    if model.is_mip() && !backend.supports_integer() {
        return Err(SolverError::NoIntegerSupport(backend.name()));
    }
    let result = backend.solve_raw(model, cfg)?;
    if !model.is_mip() && result.status == Status::Optimal {
        let res = kkt_residuals(model, &result);
        let tol = 1e-6 * (1.0 + model.max_abs_coefficient());
        if res.max() > tol {
            return Err(SolverError::KktCheck(format!(
                "residuals {res:?} exceed {tol:.3e} on backend {}",
                backend.name()
            )));
        }
    }
    Ok(result)
}

/// Primal, dual and complementarity residuals of an LP solution under the
/// module-level dual convention.
#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }
}

pub fn kkt_residuals(model: &Model, result: &SolveResult) -> KktResiduals {
    let x = &result.primal;
    let y = result.row_duals.as_ref().expect("LP duals required");
    let z = result.reduced_costs.as_ref().expect("LP duals required");
    // orient everything as a maximization
    let sgn = match model.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };

    let mut primal: f64 = 0.0;
    for (i, c) in model.cons.iter().enumerate() {
        let lhs: f64 = c.terms.iter().map(|&(v, a)| a * x[v.0]).sum();
        let slack = c.rhs - lhs;
        let viol = match c.rel {
            Rel::Le => (-slack).max(0.0),
            Rel::Ge => slack.max(0.0),
            Rel::Eq => slack.abs(),
        };
        primal = primal.max(viol);
        // dual sign and complementarity on rows
        let yi = sgn * y[i];
        match c.rel {
            Rel::Le => {
                primal = primal.max((-yi).max(0.0));
                primal = primal.max((yi * slack).abs());
            }
            Rel::Ge => {
                primal = primal.max(yi.max(0.0));
                primal = primal.max((yi * slack).abs());
            }
            Rel::Eq => {}
        }
    }
    for (j, v) in model.vars.iter().enumerate() {
        primal = primal.max((v.lb - x[j]).max(0.0));
        primal = primal.max((x[j] - v.ub).max(0.0));
    }

    // stationarity: obj - A^T y - z = 0
    let mut atyz = vec![0.0; model.vars.len()];
    for (i, c) in model.cons.iter().enumerate() {
        for &(v, a) in &c.terms {
            atyz[v.0] += a * y[i];
        }
    }
    let mut dual: f64 = 0.0;
    let mut comp: f64 = 0.0;
    for (j, v) in model.vars.iter().enumerate() {
        dual = dual.max((v.obj - atyz[j] - z[j]).abs());
        let zj = sgn * z[j];
        let up = zj.max(0.0);
        let lo = (-zj).max(0.0);
        if v.ub.is_infinite() {
            dual = dual.max(up);
        } else {
            comp = comp.max((up * (v.ub - x[j])).abs());
        }
        if v.lb.is_infinite() {
            dual = dual.max(lo);
        } else {
            comp = comp.max((lo * (x[j] - v.lb)).abs());
        }
    }
    KktResiduals { primal, dual, complementarity: comp }
}

// --- HiGHS backend -------------------------------------------------------

pub struct HighsBackend;

impl Backend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn supports_integer(&self) -> bool {
        true
    }

    fn solve_raw(&self, model: &Model, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
        use highs::{HighsModelStatus, RowProblem};

        let start = Instant::now();
        // Solve as minimization regardless of the model sense so the dual
        // sign normalization below is unambiguous.
        let flip = match model.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        let mut pb = RowProblem::default();
        let mut cols = Vec::with_capacity(model.vars.len());
        for v in &model.vars {
            let col = match v.kind {
                VarKind::Continuous => pb.add_column(flip * v.obj, v.lb..=v.ub),
                VarKind::Binary => pb.add_integer_column(flip * v.obj, v.lb..=v.ub),
            };
            cols.push(col);
        }
        for c in &model.cons {
            let terms: Vec<_> = c.terms.iter().map(|&(v, a)| (cols[v.0], a)).collect();
            match c.rel {
                Rel::Le => pb.add_row(..=c.rhs, &terms),
                Rel::Ge => pb.add_row(c.rhs.., &terms),
                Rel::Eq => pb.add_row(c.rhs..=c.rhs, &terms),
            };
        }

        let mut m = pb.optimise(highs::Sense::Minimise);
        m.set_option("output_flag", false);
        m.set_option("threads", 1);
        m.set_option("random_seed", 0);
        m.set_option("primal_feasibility_tolerance", cfg.lp_tol.max(1e-10));
        m.set_option("dual_feasibility_tolerance", cfg.lp_tol.max(1e-10));
        if model.is_mip() {
            m.set_option("mip_rel_gap", cfg.mip_gap);
            m.set_option("mip_feasibility_tolerance", 1e-9);
        }
        if let Some(limit) = cfg.time_limit_s {
            m.set_option("time_limit", limit);
        }

        let solved = m.solve();
        let status = match solved.status() {
            HighsModelStatus::Optimal => Status::Optimal,
            HighsModelStatus::Infeasible => Status::Infeasible,
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
                Status::Unbounded
            }
            HighsModelStatus::ReachedTimeLimit | HighsModelStatus::ReachedIterationLimit => {
                Status::Limit
            }
            other => {
                return Err(SolverError::Backend {
                    backend: "highs",
                    message: format!("unexpected status {other:?}"),
                })
            }
        };
        let wall_time_s = start.elapsed().as_secs_f64();
        if status == Status::Infeasible || status == Status::Unbounded {
            return Ok(SolveResult {
                status,
                objective: f64::NAN,
                primal: vec![f64::NAN; model.vars.len()],
                row_duals: None,
                reduced_costs: None,
                gap: None,
                wall_time_s,
            });
        }

        let solution = solved.get_solution();
        let primal: Vec<f64> = solution.columns().to_vec();
        let objective: f64 = model
            .vars
            .iter()
            .zip(&primal)
            .map(|(v, &x)| v.obj * x)
            .sum();
        let (row_duals, reduced_costs) = if model.is_mip() {
            (None, None)
        } else {
            // HiGHS min-convention duals satisfy c' = A^T y' + z'; with
            // c' = flip * c, negating maps back to the documented
            // maximize convention.
            let y: Vec<f64> = solution.dual_rows().iter().map(|&d| flip * d).collect();
            let z: Vec<f64> = solution.dual_columns().iter().map(|&d| flip * d).collect();
            if y.len() != model.cons.len() || z.len() != model.vars.len() {
                (None, None)
            } else {
                (Some(y), Some(z))
            }
        };
        Ok(SolveResult {
            status,
            objective,
            primal,
            row_duals,
            reduced_costs,
            gap: if model.is_mip() { Some(cfg.mip_gap) } else { None },
            wall_time_s,
        })
    }
}

// --- Clarabel backend ----------------------------------------------------

pub struct ClarabelBackend;

impl Backend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn supports_integer(&self) -> bool {
        false
    }

    fn solve_raw(&self, model: &Model, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
        use clarabel::algebra::CscMatrix;
        use clarabel::solver::{
            DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
        };

        if model.is_mip() {
            return Err(SolverError::NoIntegerSupport("clarabel"));
        }
        let start = Instant::now();
        let n = model.vars.len();
        let flip = match model.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        let q: Vec<f64> = model.vars.iter().map(|v| flip * v.obj).collect();

        // rows: equalities first (zero cone), then inequalities oriented as
        // a.x <= rhs, then finite bound rows (nonnegative cone)
        #[derive(Clone)]
        struct RowRef {
            terms: Vec<(usize, f64)>,
            rhs: f64,
        }
        let mut eq_rows: Vec<(usize, RowRef)> = Vec::new();
        let mut ineq_rows: Vec<(Option<usize>, RowRef, f64)> = Vec::new();
        for (i, c) in model.cons.iter().enumerate() {
            let terms: Vec<(usize, f64)> = c.terms.iter().map(|&(v, a)| (v.0, a)).collect();
            match c.rel {
                Rel::Eq => eq_rows.push((i, RowRef { terms, rhs: c.rhs })),
                Rel::Le => ineq_rows.push((Some(i), RowRef { terms, rhs: c.rhs }, 1.0)),
                Rel::Ge => {
                    let neg: Vec<(usize, f64)> =
                        terms.into_iter().map(|(j, a)| (j, -a)).collect();
                    ineq_rows.push((Some(i), RowRef { terms: neg, rhs: -c.rhs }, -1.0));
                }
            }
        }
        // bound rows: (var, +1) for ub, (var, -1) for lb
        let mut bound_rows: Vec<(usize, f64, f64)> = Vec::new(); // (var, sign, rhs)
        for (j, v) in model.vars.iter().enumerate() {
            if v.ub.is_finite() {
                bound_rows.push((j, 1.0, v.ub));
            }
            if v.lb.is_finite() {
                bound_rows.push((j, -1.0, -v.lb));
            }
        }

        let m_rows = eq_rows.len() + ineq_rows.len() + bound_rows.len();
        let mut b = Vec::with_capacity(m_rows);
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut row = 0usize;
        for (_, r) in &eq_rows {
            for &(j, a) in &r.terms {
                triplets.push((row, j, a));
            }
            b.push(r.rhs);
            row += 1;
        }
        for (_, r, _) in &ineq_rows {
            for &(j, a) in &r.terms {
                triplets.push((row, j, a));
            }
            b.push(r.rhs);
            row += 1;
        }
        for &(j, sign, rhs) in &bound_rows {
            triplets.push((row, j, sign));
            b.push(rhs);
            row += 1;
        }

        // CSC assembly
        let mut colptr = vec![0usize; n + 1];
        for &(_, j, _) in &triplets {
            colptr[j + 1] += 1;
        }
        for j in 0..n {
            colptr[j + 1] += colptr[j];
        }
        let nnz = triplets.len();
        let mut rowval = vec![0usize; nnz];
        let mut nzval = vec![0.0f64; nnz];
        let mut cursor = colptr.clone();
        let mut by_col = triplets;
        by_col.sort_by_key(|&(r, c, _)| (c, r));
        for (r, c, v) in by_col {
            let p = cursor[c];
            rowval[p] = r;
            nzval[p] = v;
            cursor[c] += 1;
        }
        let a_mat = CscMatrix::new(m_rows, n, colptr, rowval, nzval);
        let p_mat = CscMatrix::zeros((n, n));
        let cones = [
            SupportedConeT::ZeroConeT(eq_rows.len()),
            SupportedConeT::NonnegativeConeT(ineq_rows.len() + bound_rows.len()),
        ];
        let settings = DefaultSettings {
            verbose: false,
            tol_feas: cfg.lp_tol.max(1e-10),
            tol_gap_abs: cfg.lp_tol.max(1e-10),
            tol_gap_rel: cfg.lp_tol.max(1e-10),
            time_limit: cfg.time_limit_s.unwrap_or(f64::INFINITY),
            ..DefaultSettings::default()
        };
        let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings)
            .map_err(|e| SolverError::Backend {
                backend: "clarabel",
                message: format!("{e:?}"),
            })?;
        solver.solve();

        let status = match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => Status::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Status::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Status::Unbounded,
            SolverStatus::MaxIterations | SolverStatus::MaxTime => Status::Limit,
            other => {
                return Err(SolverError::Backend {
                    backend: "clarabel",
                    message: format!("unexpected status {other:?}"),
                })
            }
        };
        let wall_time_s = start.elapsed().as_secs_f64();
        if status != Status::Optimal {
            return Ok(SolveResult {
                status,
                objective: f64::NAN,
                primal: vec![f64::NAN; n],
                row_duals: None,
                reduced_costs: None,
                gap: None,
                wall_time_s,
            });
        }
        let primal = solver.solution.x.clone();
        let objective: f64 = model
            .vars
            .iter()
            .zip(&primal)
            .map(|(v, &x)| v.obj * x)
            .sum();
        // duals: q + A^T z = 0 with z >= 0 on the nonnegative cone, so for
        // the maximize orientation the structural-row dual is flip-free:
        // c = A^T z on <= rows directly (Ge rows were negated on entry).
        let z_all = &solver.solution.z;
        let mut y = vec![0.0; model.cons.len()];
        let mut row = 0usize;
        for (i, _) in &eq_rows {
            y[*i] = flip_dual(model.sense, z_all[row]);
            row += 1;
        }
        for (i, _, orient) in &ineq_rows {
            if let Some(i) = i {
                y[*i] = flip_dual(model.sense, orient * z_all[row]);
            }
            row += 1;
        }
        let mut rc = vec![0.0; n];
        for &(j, sign, _) in &bound_rows {
            rc[j] += flip_dual(model.sense, sign * z_all[row]);
            row += 1;
        }
        Ok(SolveResult {
            status,
            objective,
            primal,
            row_duals: Some(y),
            reduced_costs: Some(rc),
            gap: None,
            wall_time_s,
        })
    }
}

// Clarabel's dual z is stated for the minimization form; for a Maximize
// model the conversion min -c'x leaves z oriented so that c = A^T z + rc
// holds directly, while a Minimize model needs the global sign flip to
// land in the documented (maximize-oriented) convention.
fn flip_dual(sense: Sense, z: f64) -> f64 {
    match sense {
        Sense::Maximize => z,
        Sense::Minimize => -z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(backend: &str) -> SolverConfig {
        SolverConfig { backend: backend.into(), ..Default::default() }
    }

    #[test]
    fn bounded_max_with_binding_row() {
        for backend in ["highs", "clarabel"] {
            let mut b = ModelBuilder::new(Sense::Maximize);
            let x = b.add_var("x", VarKind::Continuous, 0.0, f64::INFINITY, 1.0).unwrap();
            let c = b.add_constraint("cap", vec![(x, 1.0)], Rel::Le, 3.0).unwrap();
            let model = b.build();
            let r = optimize(&model, &cfg(backend)).unwrap();
            assert_eq!(r.status, Status::Optimal, "{backend}");
            assert!((r.value(x) - 3.0).abs() < 1e-6, "{backend}: {}", r.value(x));
            assert!((r.dual(c) - 1.0).abs() < 1e-6, "{backend}: dual {}", r.dual(c));
        }
    }

    #[test]
    fn infeasible_model_is_reported() {
        for backend in ["highs", "clarabel"] {
            let mut b = ModelBuilder::new(Sense::Maximize);
            let x = b.add_var("x", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, 1.0)
                .unwrap();
            b.add_constraint("ge1", vec![(x, 1.0)], Rel::Ge, 1.0).unwrap();
            b.add_constraint("le0", vec![(x, 1.0)], Rel::Le, 0.0).unwrap();
            let r = optimize(&b.build(), &cfg(backend)).unwrap();
            assert_eq!(r.status, Status::Infeasible, "{backend}");
        }
    }

    #[test]
    fn unbounded_model_is_reported() {
        for backend in ["highs", "clarabel"] {
            let mut b = ModelBuilder::new(Sense::Maximize);
            b.add_var("x", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, 1.0)
                .unwrap();
            let r = optimize(&b.build(), &cfg(backend)).unwrap();
            assert_eq!(r.status, Status::Unbounded, "{backend}");
        }
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let mut b = ModelBuilder::new(Sense::Maximize);
        b.add_var("x", VarKind::Continuous, 0.0, 1.0, 1.0).unwrap();
        let err = b
            .add_constraint("bad", vec![(VarId(5), 1.0)], Rel::Le, 0.0)
            .unwrap_err();
        assert!(err.to_string().contains("unregistered"));
    }

    #[test]
    fn empty_objective_is_a_valid_feasibility_model() {
        let mut b = ModelBuilder::new(Sense::Maximize);
        let x = b.add_var("x", VarKind::Continuous, 0.0, 2.0, 0.0).unwrap();
        b.add_constraint("mid", vec![(x, 1.0)], Rel::Ge, 1.0).unwrap();
        let r = optimize(&b.build(), &cfg("highs")).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!(r.value(x) >= 1.0 - 1e-8);
    }

    #[test]
    fn resolve_is_reproducible() {
        let build = || {
            let mut b = ModelBuilder::new(Sense::Maximize);
            let x = b.add_var("x", VarKind::Continuous, 0.0, 4.0, 2.0).unwrap();
            let y = b.add_var("y", VarKind::Continuous, 0.0, 4.0, 3.0).unwrap();
            b.add_constraint("joint", vec![(x, 1.0), (y, 2.0)], Rel::Le, 6.0)
                .unwrap();
            b.build()
        };
        let a = optimize(&build(), &cfg("highs")).unwrap();
        let b = optimize(&build(), &cfg("highs")).unwrap();
        let rel = (a.objective - b.objective).abs() / (1.0 + a.objective.abs());
        assert!(rel <= 1e-9);
    }

    #[test]
    fn milp_on_clarabel_is_refused() {
        let mut b = ModelBuilder::new(Sense::Maximize);
        b.add_var("b", VarKind::Binary, 0.0, 1.0, 1.0).unwrap();
        let err = optimize(&b.build(), &cfg("clarabel")).unwrap_err();
        assert!(matches!(err, SolverError::NoIntegerSupport(_)));
    }

    #[test]
    fn small_milp_solves() {
        let mut b = ModelBuilder::new(Sense::Maximize);
        let x = b.add_var("x", VarKind::Binary, 0.0, 1.0, 5.0).unwrap();
        let y = b.add_var("y", VarKind::Binary, 0.0, 1.0, 4.0).unwrap();
        b.add_constraint("knap", vec![(x, 3.0), (y, 2.0)], Rel::Le, 3.0).unwrap();
        let r = optimize(&b.build(), &cfg("highs")).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective - 5.0).abs() < 1e-6);
        assert!(r.row_duals.is_none());
    }
}
