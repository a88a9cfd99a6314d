use serde::Serialize;
use std::ops::{Add, AddAssign};

/// One bucket of charged work.
///
/// `function_queries` are classical evaluations of the objective,
/// `quantum_queries` are emulated applications of the quantum value oracle,
/// `time_cost` is the abstract time of matrix subroutines and
/// `gradient_evals` counts calls to a caller-supplied gradient callback.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Costs {
    pub function_queries: u64,
    pub quantum_queries: u64,
    pub matvecs: u64,
    pub time_cost: f64,
    pub gradient_evals: u64,
}

impl Add for Costs {
    type Output = Costs;

    fn add(mut self, rhs: Costs) -> Costs {
        self += rhs;
        self
    }
}

impl AddAssign for Costs {
    fn add_assign(&mut self, rhs: Costs) {
        self.function_queries += rhs.function_queries;
        self.quantum_queries += rhs.quantum_queries;
        self.matvecs += rhs.matvecs;
        self.time_cost += rhs.time_cost;
        self.gradient_evals += rhs.gradient_evals;
    }
}

/// Per-round cost accounting for a single run. Charges land in the open
/// round; `close_round` files it and starts a new one.
#[derive(Debug, Clone, Default)]
pub struct QueryLedger {
    rounds: Vec<Costs>,
    current: Costs,
    totals: Costs,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge_function(&mut self, n: u64) {
        self.current.function_queries += n;
        self.totals.function_queries += n;
    }

    pub fn charge_quantum(&mut self, n: u64) {
        self.current.quantum_queries += n;
        self.totals.quantum_queries += n;
    }

    pub fn charge_matvecs(&mut self, n: u64) {
        self.current.matvecs += n;
        self.totals.matvecs += n;
    }

    pub fn charge_time(&mut self, cost: f64) {
        debug_assert!(cost >= 0.0);
        self.current.time_cost += cost;
        self.totals.time_cost += cost;
    }

    pub fn charge_gradient(&mut self, n: u64) {
        self.current.gradient_evals += n;
        self.totals.gradient_evals += n;
    }

    pub fn charge(&mut self, c: Costs) {
        self.current += c;
        self.totals += c;
    }

    /// Files the open round and returns what it was charged.
    pub fn close_round(&mut self) -> Costs {
        let c = std::mem::take(&mut self.current);
        self.rounds.push(c);
        c
    }

    pub fn rounds(&self) -> &[Costs] {
        &self.rounds
    }

    /// Charges made since the last `close_round`.
    pub fn open_round(&self) -> Costs {
        self.current
    }

    pub fn totals(&self) -> Costs {
        self.totals
    }

    /// Checks that the running totals equal the sum of the per-round
    /// entries (counts exactly, time cost to relative 1e-12).
    pub fn is_consistent(&self) -> bool {
        let mut sum = self.current;
        for r in &self.rounds {
            sum += *r;
        }
        let t = self.totals;
        sum.function_queries == t.function_queries
            && sum.quantum_queries == t.quantum_queries
            && sum.matvecs == t.matvecs
            && sum.gradient_evals == t.gradient_evals
            && (sum.time_cost - t.time_cost).abs() <= 1e-12 * t.time_cost.abs().max(1.0)
    }
}
