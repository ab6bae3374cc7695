//! Lending-pool configurations and their transition rules.

mod error;
pub mod example;
mod rules;
mod state;
mod token;

pub use error::LpError;
pub use rules::{map_apply, Action, Trace};
pub use state::{Collateralization, LpParams, LpState, MintedEntry, Pool, StateBuilder, Wallet};
pub use token::{AgentId, MapOp, TokenClass, TokenId, TokenMap};
