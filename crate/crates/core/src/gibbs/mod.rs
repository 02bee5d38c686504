//! Slice-augmented Gibbs sampler for the diffusive stick-breaking mixture.

mod config;
mod run;
mod state;
mod updates;

pub use config::{GammaPrior, SamplerConfig};
pub use run::{
    chain_path, chain_rng, config_hash, gibbs_sweep, log_likelihood, read_archive, read_archive_path, run_chain,
    run_chains, write_archive, write_archive_path, Draw, PosteriorDraws, RunOptions, ARCHIVE_FORMAT, ARCHIVE_VERSION,
};
pub use state::{init_chain, initial_truncation, sample_prior_path, ChainState};
pub use updates::{
    d_log_masses, k_log_masses, ln_hyper_target, ln_stick_joint, observation_times, update_hyperparams,
    update_locations, update_membership, update_slice_and_truncation, update_stick_values, update_transition_latents,
    AdaptiveMh, MH_TARGET_ACCEPTANCE,
};
