//! Evaluation of generated tests: prompts, repair, assertion scoring,
//! function compile rate and branch coverage.

pub mod candidate;
pub mod coverage;
pub mod report;
pub mod scoring;
pub mod task;

pub use candidate::{load_completions, postprocess, repair, Candidate};
pub use coverage::{BranchCounts, CoverageBackend};
pub use report::{aggregate, evaluate, Baseline, EvalReport, TaskRow};
pub use scoring::{
    extract_assertions, score_assertions, score_function, AssertionScore, FunctionScore, ScoreOptions,
};
pub use task::{build_prompt, load_tasks, EvalTask};
