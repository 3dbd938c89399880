#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data_io;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod longrun;
pub mod optim;
pub mod qmle;
pub mod asymptotics;
pub mod inference;
pub mod alt;
pub mod pipeline;
pub mod simulation;
pub mod forecasting;
pub mod cli;
