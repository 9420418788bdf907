//! Command-line front end for the exact Segre / Kempf-Laksov machinery:
//! flag plumbing, JSON/LaTeX/text emission, and the command runners.

pub mod emit;
pub mod job;
pub mod run;
