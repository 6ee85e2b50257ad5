pub mod analyze;
pub mod oracle_check;
pub mod reward_eval;
pub mod sweep;
pub mod train;
