//! Work budgets for the brute-force evaluators and annotation searches.

use core::fmt;

/// Default state-space cap for oracle evaluations.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// A decrementing work counter. Exhaustion is an explicit outcome,
/// distinct from "no" answers.
#[derive(Clone, Debug)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn spend(&mut self, amount: u64) -> Result<(), BudgetExceeded> {
        self.used = self.used.saturating_add(amount);
        if self.used > self.limit {
            Err(BudgetExceeded { limit: self.limit })
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_BUDGET)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetExceeded {
    pub limit: u64,
}

impl fmt::Display for BudgetExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "state-space budget of {} exceeded", self.limit)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BudgetExceeded {}
