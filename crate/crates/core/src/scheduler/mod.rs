//! Block planning and parallel execution.

mod execute;
mod plan;
mod report;

pub use execute::{execute, execute_plans, BlockOutcome, BlockStatus, ExecOptions};
pub use plan::{plan_archive, plan_blocks, Block, BlockPlan, PlanError};
pub use report::{compute_rate, summarize, BlockCounts, RateError, RunReport};
