use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::market::{validate_config, BasisState, MarketConfig, PriceTrajectory, SectorKey};
use crate::perturbation::Order;

use super::prices::load_price_csv;
use super::IoError;

/// Evenly spaced sample times, clamped to the trajectory window `[0, M h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn points(&self, duration: f64) -> Vec<f64> {
        let clamp = |t: f64| t.clamp(0.0, duration);
        if self.n_points == 1 {
            return vec![clamp(self.t_start)];
        }
        let span = self.t_end - self.t_start;
        (0..self.n_points)
            .map(|i| clamp(self.t_start + span * i as f64 / (self.n_points - 1) as f64))
            .collect()
    }
}

/// What a run computes.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Sector dimension, state listing and interval Hamiltonians.
    Basis,
    /// Exact amplitudes and expected holdings on a time grid.
    Evolve { grid: TimeGrid },
    /// `P_{F0 -> Ff}(t)` at the requested orders and exactly.
    Transition {
        target: BasisState,
        orders: Vec<Order>,
        grid: TimeGrid,
    },
    /// Portfolio-value distribution of one trader, or one target value.
    Portfolio {
        trader: usize,
        order: Order,
        target: Option<u64>,
        grid: TimeGrid,
    },
    /// Second-order shifts and portfolio of one trader under classical prices.
    Semiclassical { trader: usize, grid: TimeGrid },
    /// Perturbative orders against exact propagation with relative errors.
    Compare {
        target: BasisState,
        orders: Vec<Order>,
        grid: TimeGrid,
    },
}

impl Command {
    pub fn kind(&self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Evolve { .. } => "evolve",
            Command::Transition { .. } => "transition",
            Command::Portfolio { .. } => "portfolio",
            Command::Semiclassical { .. } => "semiclassical",
            Command::Compare { .. } => "compare",
        }
    }
}

/// A validated run: market, sector, initial configuration, prices and command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub config: MarketConfig,
    pub sector: SectorKey,
    pub initial: BasisState,
    pub trajectory: PriceTrajectory,
    pub command: Command,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    shares: Vec<Vec<u32>>,
    cash: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectorDoc {
    shares: Vec<u32>,
    cash: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDoc {
    h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prices: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prices_csv: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CommandDoc {
    Basis,
    Evolve {
        grid: TimeGrid,
    },
    Transition {
        #[serde(rename = "final")]
        target: StateDoc,
        orders: Vec<Order>,
        grid: TimeGrid,
    },
    Portfolio {
        trader: usize,
        order: Order,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<u64>,
        grid: TimeGrid,
    },
    Semiclassical {
        trader: usize,
        grid: TimeGrid,
    },
    Compare {
        #[serde(rename = "final")]
        target: StateDoc,
        orders: Vec<Order>,
        grid: TimeGrid,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSpecDoc {
    traders: usize,
    share_types: usize,
    lambda: f64,
    omega_share: Vec<Vec<f64>>,
    omega_cash: Vec<f64>,
    coupling: Vec<Vec<Vec<f64>>>,
    sector: SectorDoc,
    initial: StateDoc,
    trajectory: TrajectoryDoc,
    command: CommandDoc,
}

fn invalid(msg: impl Into<String>) -> IoError {
    IoError::Validation(msg.into())
}

impl StateDoc {
    fn into_state(self, what: &str, cfg: &MarketConfig) -> Result<BasisState, IoError> {
        let s = BasisState::new(self.shares, self.cash).map_err(|e| invalid(format!("{what}: {e}")))?;
        if s.n_traders() != cfg.n_traders || s.n_share_types() != cfg.n_share_types {
            return Err(invalid(format!(
                "{what} has N={}, L={} but the market has N={}, L={}",
                s.n_traders(),
                s.n_share_types(),
                cfg.n_traders,
                cfg.n_share_types
            )));
        }
        Ok(s)
    }

    fn from_state(s: &BasisState) -> Self {
        Self {
            shares: s.share_rows(),
            cash: s.cash_vec().to_vec(),
        }
    }
}

fn check_grid(grid: &TimeGrid) -> Result<(), IoError> {
    if grid.n_points == 0 {
        return Err(invalid("time grid needs at least one point"));
    }
    if !(grid.t_start.is_finite() && grid.t_end.is_finite()) || grid.t_start > grid.t_end {
        return Err(invalid(format!(
            "time grid [{}, {}] must be finite with t_start <= t_end",
            grid.t_start, grid.t_end
        )));
    }
    Ok(())
}

fn check_orders(orders: &[Order]) -> Result<(), IoError> {
    if orders.is_empty() {
        return Err(invalid("at least one order is required"));
    }
    if orders.contains(&Order::Dyson(0)) {
        return Err(invalid("Dyson order must be at least 1"));
    }
    Ok(())
}

fn check_trader(trader: usize, cfg: &MarketConfig) -> Result<(), IoError> {
    if trader >= cfg.n_traders {
        return Err(invalid(format!("trader {trader} out of range for N={}", cfg.n_traders)));
    }
    Ok(())
}

fn check_target(
    target: &BasisState,
    spec_sector: &SectorKey,
    initial: &BasisState,
    orders: &[Order],
) -> Result<(), IoError> {
    if &target.sector_key() != spec_sector {
        return Err(invalid(format!(
            "final state {target} lies outside the declared sector"
        )));
    }
    if target == initial && orders.contains(&Order::First) {
        return Err(invalid(
            "first-order transition probability is undefined when the final state equals the initial state",
        ));
    }
    Ok(())
}

impl RunSpecDoc {
    fn into_spec(self, base_dir: Option<&Path>) -> Result<RunSpec, IoError> {
        let config = validate_config(MarketConfig {
            n_traders: self.traders,
            n_share_types: self.share_types,
            omega_share: self.omega_share,
            omega_cash: self.omega_cash,
            coupling: self.coupling,
            lambda: self.lambda,
        })
        .map_err(|e| invalid(e.to_string()))?;

        if self.sector.shares.len() != config.n_share_types {
            return Err(invalid(format!(
                "sector lists {} share totals for L={}",
                self.sector.shares.len(),
                config.n_share_types
            )));
        }
        let sector = SectorKey::new(self.sector.shares, self.sector.cash);
        let initial = self.initial.into_state("initial state", &config)?;
        if initial.sector_key() != sector {
            return Err(invalid(format!(
                "initial state {initial} lies outside the declared sector"
            )));
        }

        let trajectory = match (self.trajectory.prices, self.trajectory.prices_csv) {
            (Some(rows), None) => {
                let mut converted = Vec::with_capacity(rows.len());
                for (k, row) in rows.into_iter().enumerate() {
                    let row = row
                        .into_iter()
                        .enumerate()
                        .map(|(a, p)| {
                            u32::try_from(p).map_err(|_| {
                                invalid(format!(
                                    "price P_{} = {p} in interval {k} must be a nonnegative integer",
                                    a + 1
                                ))
                            })
                        })
                        .collect::<Result<Vec<u32>, IoError>>()?;
                    converted.push(row);
                }
                PriceTrajectory::new(self.trajectory.h, converted).map_err(|e| invalid(e.to_string()))?
            }
            (None, Some(csv)) => {
                let path = base_dir.map_or_else(|| Path::new(&csv).to_path_buf(), |d| d.join(&csv));
                load_price_csv(&path, self.trajectory.h)?
            }
            _ => return Err(invalid("trajectory needs exactly one of `prices` and `prices_csv`")),
        };
        if trajectory.n_share_types() != config.n_share_types {
            return Err(invalid(format!(
                "trajectory has {} price columns for L={}",
                trajectory.n_share_types(),
                config.n_share_types
            )));
        }

        let command = match self.command {
            CommandDoc::Basis => Command::Basis,
            CommandDoc::Evolve { grid } => {
                check_grid(&grid)?;
                Command::Evolve { grid }
            }
            CommandDoc::Transition { target, orders, grid } => {
                let target = target.into_state("final state", &config)?;
                check_grid(&grid)?;
                check_orders(&orders)?;
                check_target(&target, &sector, &initial, &orders)?;
                Command::Transition { target, orders, grid }
            }
            CommandDoc::Compare { target, orders, grid } => {
                let target = target.into_state("final state", &config)?;
                check_grid(&grid)?;
                check_orders(&orders)?;
                check_target(&target, &sector, &initial, &orders)?;
                Command::Compare { target, orders, grid }
            }
            CommandDoc::Portfolio {
                trader,
                order,
                target,
                grid,
            } => {
                check_trader(trader, &config)?;
                check_grid(&grid)?;
                check_orders(&[order])?;
                Command::Portfolio {
                    trader,
                    order,
                    target,
                    grid,
                }
            }
            CommandDoc::Semiclassical { trader, grid } => {
                check_trader(trader, &config)?;
                check_grid(&grid)?;
                Command::Semiclassical { trader, grid }
            }
        };

        Ok(RunSpec {
            config,
            sector,
            initial,
            trajectory,
            command,
        })
    }
}

impl RunSpec {
    fn to_doc(&self) -> RunSpecDoc {
        let command = match &self.command {
            Command::Basis => CommandDoc::Basis,
            Command::Evolve { grid } => CommandDoc::Evolve { grid: *grid },
            Command::Transition { target, orders, grid } => CommandDoc::Transition {
                target: StateDoc::from_state(target),
                orders: orders.clone(),
                grid: *grid,
            },
            Command::Compare { target, orders, grid } => CommandDoc::Compare {
                target: StateDoc::from_state(target),
                orders: orders.clone(),
                grid: *grid,
            },
            Command::Portfolio {
                trader,
                order,
                target,
                grid,
            } => CommandDoc::Portfolio {
                trader: *trader,
                order: *order,
                target: *target,
                grid: *grid,
            },
            Command::Semiclassical { trader, grid } => CommandDoc::Semiclassical {
                trader: *trader,
                grid: *grid,
            },
        };
        RunSpecDoc {
            traders: self.config.n_traders,
            share_types: self.config.n_share_types,
            lambda: self.config.lambda,
            omega_share: self.config.omega_share.clone(),
            omega_cash: self.config.omega_cash.clone(),
            coupling: self.config.coupling.clone(),
            sector: SectorDoc {
                shares: self.sector.shares.clone(),
                cash: self.sector.cash,
            },
            initial: StateDoc::from_state(&self.initial),
            trajectory: TrajectoryDoc {
                h: self.trajectory.step(),
                prices: Some(
                    self.trajectory
                        .rows()
                        .iter()
                        .map(|r| r.iter().map(|&p| p as i64).collect())
                        .collect(),
                ),
                prices_csv: None,
            },
            command,
        }
    }

    /// Canonical JSON form with prices inlined; parsing it yields an equal spec.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("run spec serializes")
    }

    /// JSON echo of the command section.
    pub fn command_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.to_doc().command).expect("command serializes")
    }
}

/// Parses and validates a run document; `prices_csv` paths resolve against `base_dir`.
pub fn parse_run_spec(text: &str, base_dir: Option<&Path>) -> Result<RunSpec, IoError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: RunSpecDoc = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        IoError::Parse {
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        field: ".".into(),
        message: e.to_string(),
    })?;
    doc.into_spec(base_dir)
}

/// Reads and validates a run file.
pub fn load_run_spec(path: &Path) -> Result<RunSpec, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_run_spec(&text, path.parent())
}
