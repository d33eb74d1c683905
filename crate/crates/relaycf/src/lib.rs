//! Achievable rates of compress-and-forward schemes on discrete memoryless
//! multiple-relay channels.
//!
//! A [`channel::ChannelSpec`] describes one instance: input laws, the channel
//! law, and per-relay compressions, either with explicit relay inputs (full
//! mode) or with noiseless capacity-limited relay links (digital mode). From
//! it [`pmf::JointPmf`] materializes the joint distribution, on top of which
//! sit the set functions driving decodability analysis and the achievable
//! rates of five relaying schemes, plus a seeded local-search optimizer over
//! the free distributions and a self-checking verification harness.

pub mod channel;
pub mod decodable;
pub mod lp;
pub mod optimizer;
pub mod pmf;
pub mod schemes;
pub mod setfuncs;
pub mod subsets;
pub mod tol;
pub mod verify;