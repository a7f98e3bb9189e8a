//! Reference methods: extragradient (mirror-prox) and decoupled gradient
//! descent-ascent with local steps.

mod dgda;
mod eg;

pub use dgda::{dgda_run, DgdaParams, DgdaResult, DIVERGENCE_THRESHOLD};
pub use eg::{eg_run, EgParams, EgResult};
