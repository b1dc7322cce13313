// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ctc;
pub mod frontend;
pub mod lm;
pub mod cascade;
pub mod cli;
pub mod decode;
pub mod nnet;
pub mod sched;
pub mod synth;
