pub mod apoly;
pub mod error;
pub mod field;
pub mod local;
pub mod newton;
pub mod ring;
pub mod tau;
pub mod expr;
pub mod drinfeld;
pub mod strata;
pub mod canonical;
pub mod weights;
pub mod slopes;
pub mod kassaei;
pub mod cli;
pub mod selftest;
