use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::market::{enumerate_sector, portfolio_value, PriceTrajectory, SectorBasis, StateSpace, StateVector};
use crate::operators::build_h;
use crate::perturbation::{
    c1_coefficient, c2_constant, c2_piecewise_m3, golden_rule_rate, p1_interval_sum, p1_transition,
    portfolio_distribution, portfolio_transition_probability, validity_indicator, DysonSeries, Order,
};
use crate::propagator::{energy_expectation, expectation_occupations, Propagator};
use crate::semiclassical::{
    delta_occupations, pair_weight, portfolio_evolution, sum_rule_residual, theta_integrals, SumRuleResidual,
};
use crate::BasisState;

use super::runspec::{Command, RunSpec, TimeGrid};
use super::IoError;

/// One table cell; reals are emitted with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // Negative zero prints as zero.
            Cell::Real(v) => write!(f, "{:.16e}", if *v == 0.0 { 0.0 } else { *v }),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

/// Named columns of cells; complex quantities occupy `_re`/`_im` column pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Values of one column as reals.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[i] {
                    Cell::Int(v) => v as f64,
                    Cell::Real(v) => v,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `lambda * max|h| * t` at the last grid time, for perturbative commands.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validity_indicator: Option<f64>,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct ResultRecord {
    pub command: serde_json::Value,
    /// SHA-256 of the canonical run document.
    pub inputs_digest: String,
    pub tables: Vec<Table>,
    pub diagnostics: Diagnostics,
    /// Wall time; reported on the console only, so emitted files stay reproducible.
    pub elapsed: Duration,
}

impl ResultRecord {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

struct Ctx<'a> {
    spec: &'a RunSpec,
    basis: Arc<SectorBasis>,
}

fn order_label(o: Order) -> String {
    match o {
        Order::First => "first".into(),
        Order::Second => "second".into(),
        Order::Dyson(n) => format!("dyson{n}"),
        Order::Exact => "exact".into(),
    }
}

fn state_columns(n: usize, l: usize) -> Vec<String> {
    let mut cols: Vec<String> = (0..n)
        .flat_map(|j| (0..l).map(move |a| format!("n_{}_{}", j + 1, a + 1)))
        .collect();
    cols.extend((0..n).map(|j| format!("k_{}", j + 1)));
    cols
}

fn state_cells(s: &BasisState) -> Vec<Cell> {
    let mut row: Vec<Cell> = s.share_rows().into_iter().flatten().map(Cell::from).collect();
    row.extend(s.cash_vec().iter().map(|&k| Cell::from(k)));
    row
}

fn grid_times(grid: &TimeGrid, trajectory: &PriceTrajectory) -> Vec<f64> {
    grid.points(trajectory.duration())
}

/// Dispatches a validated run.
pub fn run(spec: &RunSpec) -> Result<ResultRecord, IoError> {
    let started = std::time::Instant::now();
    let context = |e: Error| IoError::Runtime {
        context: format!("{} command", spec.command.kind()),
        source: e,
    };
    let basis = Arc::new(enumerate_sector(&spec.config, &spec.sector).map_err(context)?);
    let ctx = Ctx { spec, basis };
    let mut diagnostics = Diagnostics::default();
    let tables = match &spec.command {
        Command::Basis => basis_cmd(&ctx, &mut diagnostics),
        Command::Evolve { grid } => evolve_cmd(&ctx, grid),
        Command::Transition { target, orders, grid } => {
            transition_cmd(&ctx, target, orders, grid, false, &mut diagnostics)
        }
        Command::Compare { target, orders, grid } => transition_cmd(&ctx, target, orders, grid, true, &mut diagnostics),
        Command::Portfolio {
            trader,
            order,
            target,
            grid,
        } => portfolio_cmd(&ctx, *trader, *order, *target, grid, &mut diagnostics),
        Command::Semiclassical { trader, grid } => semiclassical_cmd(&ctx, *trader, grid, &mut diagnostics),
    }
    .map_err(context)?;

    let digest = Sha256::digest(spec.canonical_json().as_bytes());
    Ok(ResultRecord {
        command: spec.command_json(),
        inputs_digest: digest.iter().map(|b| format!("{b:02x}")).collect(),
        tables,
        diagnostics,
        elapsed: started.elapsed(),
    })
}

fn basis_cmd(ctx: &Ctx, diag: &mut Diagnostics) -> crate::Result<Vec<Table>> {
    let (cfg, traj) = (&ctx.spec.config, &ctx.spec.trajectory);
    let mut cols = vec!["index".to_string()];
    cols.extend(state_columns(cfg.n_traders, cfg.n_share_types));
    cols.push("energy".into());
    cols.extend((0..cfg.n_traders).map(|j| format!("portfolio_{}", j + 1)));
    let mut states = Table::new("states", cols);
    for (i, s) in ctx.basis.states().iter().enumerate() {
        let mut row = vec![Cell::from(i)];
        row.extend(state_cells(s));
        row.push(ctx.basis.energy(i).into());
        for j in 0..cfg.n_traders {
            row.push(portfolio_value(s, traj.row(0), j)?.into());
        }
        states.push(row);
    }

    let mut ham = Table::new(
        "hamiltonian",
        ["interval", "row", "col", "re", "im"].map(String::from).to_vec(),
    );
    for k in 0..traj.n_intervals() {
        for (r, c, v) in build_h(cfg, ctx.basis.as_ref(), traj, k)?.iter() {
            ham.push(vec![k.into(), r.into(), c.into(), v.re.into(), v.im.into()]);
        }
    }
    diag.values.insert("dimension".into(), ctx.basis.dim() as f64);
    diag.values.insert(
        "predicted_dimension".into(),
        ctx.spec.sector.dimension(cfg.n_traders) as f64,
    );
    Ok(vec![states, ham])
}

fn evolve_cmd(ctx: &Ctx, grid: &TimeGrid) -> crate::Result<Vec<Table>> {
    let (cfg, traj) = (&ctx.spec.config, &ctx.spec.trajectory);
    let prop = Propagator::new(cfg, Arc::clone(&ctx.basis), traj)?;
    let psi0 = StateVector::basis_state(Arc::clone(&ctx.basis), &ctx.spec.initial)?;
    let evo = prop.evolution(&psi0)?;

    let mut amps = Table::new(
        "amplitudes",
        ["t", "index", "re", "im", "probability"].map(String::from).to_vec(),
    );
    let mut occ_cols = vec!["t".to_string(), "trader".into()];
    occ_cols.extend((0..cfg.n_share_types).map(|a| format!("n_{}", a + 1)));
    occ_cols.push("k".into());
    let mut occ = Table::new("occupations", occ_cols);
    let mut summary = Table::new("summary", ["t", "norm", "energy"].map(String::from).to_vec());

    for t in grid_times(grid, traj) {
        let result = evo.at(t)?;
        for (i, a) in result.psi_t.amplitudes().iter().enumerate() {
            amps.push(vec![t.into(), i.into(), a.re.into(), a.im.into(), a.norm_sqr().into()]);
        }
        for j in 0..cfg.n_traders {
            let (n, k) = expectation_occupations(&result, j)?;
            let mut row = vec![t.into(), j.into()];
            row.extend(n.into_iter().map(Cell::from));
            row.push(k.into());
            occ.push(row);
        }
        let h = prop.hamiltonian(traj.interval_at(t)?);
        summary.push(vec![
            t.into(),
            result.psi_t.norm().into(),
            energy_expectation(h, &result.psi_t).into(),
        ]);
    }
    Ok(vec![amps, occ, summary])
}

fn transition_cmd(
    ctx: &Ctx,
    target: &BasisState,
    orders: &[Order],
    grid: &TimeGrid,
    compare: bool,
    diag: &mut Diagnostics,
) -> crate::Result<Vec<Table>> {
    let (cfg, traj, f0) = (&ctx.spec.config, &ctx.spec.trajectory, &ctx.spec.initial);
    let basis = &ctx.basis;
    let target_index = basis.require(target)?;
    let prop = Propagator::new(cfg, Arc::clone(basis), traj)?;
    let psi0 = StateVector::basis_state(Arc::clone(basis), f0)?;
    let evo = prop.evolution(&psi0)?;
    let max_dyson = orders.iter().filter_map(|o| match o {
        Order::Second | Order::Dyson(_) => o.truncation(),
        _ => None,
    });
    let series = match max_dyson.max() {
        Some(n) => Some(DysonSeries::new(cfg, basis, traj, f0, n)?),
        None => None,
    };

    let mut cols = vec!["t".to_string(), "p_exact".into()];
    for &o in orders.iter().filter(|&&o| o != Order::Exact) {
        cols.push(format!("p_{}", order_label(o)));
        if compare {
            cols.push(format!("relerr_{}", order_label(o)));
        }
    }
    let with_c1 = orders.contains(&Order::First);
    if with_c1 {
        cols.extend(["c1_re".to_string(), "c1_im".into()]);
    }
    if compare {
        cols.push("validity".into());
    }
    let mut table = Table::new(if compare { "compare" } else { "transition" }, cols);

    let times = grid_times(grid, traj);
    for &t in &times {
        let exact = evo.amplitudes_at(t)?[target_index].norm_sqr();
        let mut row = vec![t.into(), exact.into()];
        let coeffs = series.as_ref().map(|s| s.at(t)).transpose()?;
        for &o in orders.iter().filter(|&&o| o != Order::Exact) {
            let p = match o {
                Order::First => p1_transition(cfg, basis, traj, f0, target, t)?,
                _ => coeffs
                    .as_ref()
                    .expect("series built for finite orders")
                    .probability(target_index, o.truncation().expect("finite order")),
            };
            row.push(p.into());
            if compare {
                let err = (p - exact).abs();
                row.push(if exact > 0.0 { err / exact } else { err }.into());
            }
        }
        if with_c1 {
            let c1 = c1_coefficient(cfg, basis, traj, f0, target, t)?;
            row.extend([Cell::from(c1.re), Cell::from(c1.im)]);
        }
        if compare {
            row.push(validity_indicator(cfg, basis, traj, t)?.into());
        }
        table.push(row);
    }

    if let Some(&t_last) = times.last() {
        diag.validity_indicator = Some(validity_indicator(cfg, basis, traj, t_last)?);
    }
    if compare {
        diag.notes
            .push("relerr is |p - p_exact| / p_exact, or |p - p_exact| where p_exact = 0".into());
    }
    let gr = golden_rule_rate(cfg, basis, f0, target, traj.row(0))?;
    diag.values.insert("delta_e".into(), gr.delta_e);
    diag.values.insert("h_element".into(), gr.h);
    diag.values.insert("golden_rule_rate".into(), gr.rate);
    if target != f0 {
        diag.values
            .insert("p1_at_end".into(), p1_interval_sum(cfg, basis, traj, f0, target)?);
    }
    if orders.iter().any(|o| matches!(o, Order::Second | Order::Dyson(_))) {
        let closed = if traj.is_constant() {
            times
                .last()
                .map(|&t| Ok::<_, Error>((t, c2_constant(cfg, basis, f0, target, traj.row(0), t)?)))
                .transpose()?
        } else if traj.n_intervals() == 3 {
            Some((traj.duration(), c2_piecewise_m3(cfg, basis, traj, f0, target)?))
        } else {
            None
        };
        if let (Some((t, c2)), Some(series)) = (closed, series.as_ref()) {
            let dyson: Complex64 = series.at(t)?.coeffs[2][target_index];
            diag.values.insert("c2_time".into(), t);
            diag.values.insert("c2_closed_re".into(), c2.re);
            diag.values.insert("c2_closed_im".into(), c2.im);
            diag.values.insert("c2_dyson_re".into(), dyson.re);
            diag.values.insert("c2_dyson_im".into(), dyson.im);
        }
    }
    Ok(vec![table])
}

fn portfolio_cmd(
    ctx: &Ctx,
    trader: usize,
    order: Order,
    target: Option<u64>,
    grid: &TimeGrid,
    diag: &mut Diagnostics,
) -> crate::Result<Vec<Table>> {
    let (cfg, traj, f0) = (&ctx.spec.config, &ctx.spec.trajectory, &ctx.spec.initial);
    let mut table = Table::new("portfolio", ["t", "target", "probability"].map(String::from).to_vec());
    let times = grid_times(grid, traj);
    for &t in &times {
        match target {
            Some(v) => {
                let p = portfolio_transition_probability(cfg, &ctx.basis, traj, f0, trader, v, t, order)?;
                table.push(vec![t.into(), v.into(), p.into()]);
            }
            None => {
                for (v, p) in portfolio_distribution(cfg, &ctx.basis, traj, f0, trader, t, order)? {
                    table.push(vec![t.into(), v.into(), p.into()]);
                }
            }
        }
    }
    if order != Order::Exact {
        if let Some(&t) = times.last() {
            diag.validity_indicator = Some(validity_indicator(cfg, &ctx.basis, traj, t)?);
        }
    }
    Ok(vec![table])
}

fn semiclassical_cmd(ctx: &Ctx, trader: usize, grid: &TimeGrid, diag: &mut Diagnostics) -> crate::Result<Vec<Table>> {
    let (cfg, traj, f0) = (&ctx.spec.config, &ctx.spec.trajectory, &ctx.spec.initial);
    let l = cfg.n_share_types;
    let mut cols = vec!["t".to_string()];
    cols.extend((0..l).map(|a| format!("delta_n_{}", a + 1)));
    cols.extend(["delta_k", "portfolio", "sum_rule_left", "sum_rule_right"].map(String::from));
    let mut shifts = Table::new("semiclassical", cols);

    let mut weights = Table::new(
        "pair_weights",
        ["j", "share", "price", "m", "m_tilde"].map(String::from).to_vec(),
    );
    for j in (0..cfg.n_traders).filter(|&j| j != trader) {
        for a in 0..l {
            let price = traj.row(0)[a];
            let w = pair_weight(
                [f0.shares(j, a), f0.shares(trader, a)],
                [f0.cash(j), f0.cash(trader)],
                price,
            );
            weights.push(vec![j.into(), a.into(), price.into(), w.m.into(), w.m_tilde.into()]);
        }
    }

    let mut theta_cols = vec!["t".to_string(), "j".into(), "share".into(), "theta0".into()];
    for n in 1..=3 {
        theta_cols.extend([format!("theta{n}_re"), format!("theta{n}_im")]);
    }
    let mut thetas = Table::new("theta", theta_cols);

    for t in grid_times(grid, traj) {
        let shift = delta_occupations(cfg, f0, traj, trader, t)?;
        let (left, right) = match sum_rule_residual(cfg, f0, traj, trader, t)? {
            SumRuleResidual::Smooth { residual } => (residual, residual),
            SumRuleResidual::Jump { left, right } => (left, right),
        };
        let mut row = vec![t.into()];
        row.extend(shift.delta_n.iter().map(|&d| Cell::from(d)));
        row.extend::<[Cell; 4]>([
            shift.delta_k.into(),
            portfolio_evolution(cfg, f0, traj, trader, t)?.into(),
            left.into(),
            right.into(),
        ]);
        shifts.push(row);

        for j in (0..cfg.n_traders).filter(|&j| j != trader) {
            for a in 0..l {
                let th = theta_integrals(cfg, traj, j, trader, a, t)?;
                thetas.push(vec![
                    t.into(),
                    j.into(),
                    a.into(),
                    th.theta0.into(),
                    th.theta1.re.into(),
                    th.theta1.im.into(),
                    th.theta2.re.into(),
                    th.theta2.im.into(),
                    th.theta3.re.into(),
                    th.theta3.im.into(),
                ]);
            }
        }
    }
    diag.notes
        .push("pair weights use the prices of the first interval; theta rows are for pairs (j, trader)".into());
    Ok(vec![shifts, weights, thetas])
}
