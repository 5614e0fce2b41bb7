//! `bell sweep`: one CSV row per grid point.
//!
//! Columns by kind:
//!   ladder     rungs,policy,pairs,divergence_bits,converged
//!   efficiency eta,divergence_bits,converged
//!   noise      noise,divergence_bits,converged
//!   dimension  d,divergence_bits,maxent_divergence_bits,schmidt,converged
//!
//! Floats carry 10 significant digits; `schmidt` is `;`-separated.

use bell_core::classical::{ladder_settings, LadderPolicy};
use bell_core::experiments::{prepare, Named, SchmidtChoice};
use bell_core::quantum::with_detection_efficiency;
use bell_core::strength::{ladder_experiment, optimize_schmidt, MAX_SWEEP_RUNGS};
use clap::{Args, ValueEnum};
use serde_json::{Map, Value};

use crate::{chsh, solve, Failure, Outcome, Tuning};

const MAX_SWEEP_DIMENSION: usize = 10;

#[derive(Clone, Copy, ValueEnum)]
pub enum Kind {
    Ladder,
    Efficiency,
    Noise,
    Dimension,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// First grid value (default per kind: ladder 1, efficiency 0.8, noise 0, dimension 2).
    #[arg(long)]
    from: Option<f64>,
    /// Last grid value (default: ladder 4, efficiency 1, noise 1, dimension 5).
    #[arg(long)]
    to: Option<f64>,
    /// Intervals of the continuous grids.
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    tuning: Tuning,
}

pub fn sig(x: f64) -> String {
    format!("{x:.9e}")
}

enum Cell {
    Int(usize),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => sig(*v),
            Cell::Text(v) => v.clone(),
            Cell::Bool(v) => v.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            // Round-trip through the CSV text so both formats agree.
            Cell::Float(v) => Value::from(sig(*v).parse::<f64>().expect("formatted float parses")),
            Cell::Text(v) => Value::from(v.clone()),
            Cell::Bool(v) => Value::from(*v),
        }
    }
}

fn grid(from: f64, to: f64, steps: usize, lo: f64, hi: f64) -> Outcome<Vec<f64>> {
    if !(from.is_finite() && to.is_finite()) || from > to || from < lo || to > hi || steps == 0 {
        return Err(Failure::Input(format!("invalid range {from}..{to} in {steps} steps (allowed {lo}..{hi})")));
    }
    Ok((0..=steps).map(|i| if i == steps { to } else { from + (to - from) * i as f64 / steps as f64 }).collect())
}

fn integer_range(from: f64, to: f64, lo: usize, hi: usize) -> Outcome<std::ops::RangeInclusive<usize>> {
    let ok = |x: f64| x.fract() == 0.0 && x >= lo as f64 && x <= hi as f64;
    if !ok(from) || !ok(to) || from > to {
        return Err(Failure::Input(format!("invalid range {from}..{to} (integers in {lo}..={hi})")));
    }
    Ok(from as usize..=to as usize)
}

pub fn run(args: &SweepArgs) -> Outcome<()> {
    let cfg = args.tuning.outer();
    let (header, rows): (Vec<&str>, Vec<Vec<Cell>>) = match args.kind {
        Kind::Ladder => {
            let mut rows = Vec::new();
            for k in integer_range(args.from.unwrap_or(1.0), args.to.unwrap_or(4.0), 1, MAX_SWEEP_RUNGS)? {
                for policy in [LadderPolicy::Surviving, LadderPolicy::All] {
                    let run = ladder_experiment(k, policy, &cfg)?;
                    let pairs = ladder_settings(k, policy)?.support().len();
                    rows.push(vec![
                        Cell::Int(k),
                        Cell::Text(match policy {
                            LadderPolicy::Surviving => "surviving".into(),
                            LadderPolicy::All => "all".into(),
                        }),
                        Cell::Int(pairs),
                        Cell::Float(run.result.divergence),
                        Cell::Bool(run.result.converged),
                    ]);
                }
            }
            (vec!["rungs", "policy", "pairs", "divergence_bits", "converged"], rows)
        }
        Kind::Efficiency => {
            let base = chsh()?;
            let mut rows = Vec::new();
            for eta in grid(args.from.unwrap_or(0.8), args.to.unwrap_or(1.0), args.steps, 0.0, 1.0)? {
                let r = solve(&with_detection_efficiency(&base, eta)?, &args.tuning)?;
                rows.push(vec![Cell::Float(eta), Cell::Float(r.divergence), Cell::Bool(r.converged)]);
            }
            (vec!["eta", "divergence_bits", "converged"], rows)
        }
        Kind::Noise => {
            let base = chsh()?;
            let mut rows = Vec::new();
            for w in grid(args.from.unwrap_or(0.0), args.to.unwrap_or(1.0), args.steps, 0.0, 1.0)? {
                let r = solve(&base.add_noise(w)?, &args.tuning)?;
                rows.push(vec![Cell::Float(w), Cell::Float(r.divergence), Cell::Bool(r.converged)]);
            }
            (vec!["noise", "divergence_bits", "converged"], rows)
        }
        Kind::Dimension => {
            let mut rows = Vec::new();
            for d in integer_range(args.from.unwrap_or(2.0), args.to.unwrap_or(5.0), 2, MAX_SWEEP_DIMENSION)? {
                let (state, best) = optimize_schmidt(d, &cfg)?;
                let maxent = prepare(&Named::Cglmp { d, schmidt: SchmidtChoice::MaximallyEntangled }, &cfg)?;
                let flat = solve(&maxent.law, &args.tuning)?;
                let c: Vec<String> = state.coefficients().iter().map(|&x| sig(x)).collect();
                rows.push(vec![
                    Cell::Int(d),
                    Cell::Float(best.divergence),
                    Cell::Float(flat.divergence),
                    Cell::Text(c.join(";")),
                    Cell::Bool(best.converged && flat.converged),
                ]);
            }
            (vec!["d", "divergence_bits", "maxent_divergence_bits", "schmidt", "converged"], rows)
        }
    };

    match args.format {
        Format::Csv => {
            println!("{}", header.join(","));
            for row in &rows {
                println!("{}", row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            }
        }
        Format::Json => {
            let table: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = header.iter().zip(row).map(|(h, c)| (h.to_string(), c.json())).collect();
                    Value::Object(obj)
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&table).expect("table serialises"));
        }
    }
    let unconverged = rows.iter().filter(|row| matches!(row.last(), Some(Cell::Bool(false)))).count();
    if unconverged > 0 {
        return Err(Failure::NotConverged(format!("{unconverged} grid point(s) hit the iteration cap")));
    }
    Ok(())
}
