//! Sweeps, chains, draw archives, checkpoints and telemetry.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::SamplerConfig;
use super::state::{init_chain, ChainState};
use super::updates::*;
use crate::data::TimeGridDataset;
use crate::error::{Error, Result};
use crate::measure::MeasureState;
use crate::mixture::{Kernel, KernelParam};

/// One Gibbs sweep in the fixed order: slice and truncation, transition
/// latents, sticks, locations, hyperparameters, memberships.
pub fn gibbs_sweep(
    state: &mut ChainState,
    data: &TimeGridDataset,
    cfg: &SamplerConfig,
    rng: &mut ChaCha8Rng,
    adapt: Option<u64>,
) -> Result<()> {
    update_slice_and_truncation(state, data, cfg, rng)?;
    update_transition_latents(state, data, cfg, rng)?;
    update_stick_values(state, data, cfg, rng)?;
    update_locations(state, data, cfg, rng)?;
    update_hyperparams(state, data, cfg, rng, adapt)?;
    update_membership(state, data, cfg, rng)?;
    Ok(())
}

/// `sum_obs ln sum_j w_j(t) K(y | x_j)` over the represented components.
pub fn log_likelihood(state: &ChainState, data: &TimeGridDataset) -> f64 {
    let mut total = 0.0;
    for (i, ys) in data.observations().iter().enumerate() {
        let w = state.measure.weights_at(i).weights;
        for &y in ys {
            let f: f64 = w.iter().zip(&state.measure.atoms).map(|(w, x)| w * x.density(y)).sum();
            total += f.ln();
        }
    }
    total
}

/// Independent stream `chain` of the generator seeded with `seed`.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// One stored posterior draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    /// Post-burn-in sweep number (1-based).
    pub sweep: usize,
    pub theta: Option<f64>,
    pub c: Option<f64>,
    pub m: usize,
    pub measure: MeasureState<KernelParam>,
}

impl Draw {
    fn from_state(sweep: usize, st: &ChainState) -> Self {
        Self { sweep, theta: st.theta, c: st.c, m: st.m, measure: st.measure.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub chain: usize,
    pub seed: u64,
    pub theta_acceptance: f64,
    pub c_acceptance: f64,
    pub draws: Vec<Draw>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Chain index: selects the generator stream and suffixes file names.
    pub chain: usize,
    pub checkpoint: Option<PathBuf>,
    /// Sweeps between checkpoint writes (0: only when stopping).
    pub checkpoint_every: usize,
    /// Continue from `checkpoint` if it exists.
    pub resume: bool,
    /// File receiving one key=value line per sweep.
    pub telemetry: Option<PathBuf>,
    /// Stop (after writing a checkpoint) once this many sweeps are done.
    pub stop_after: Option<usize>,
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config_hash: String,
    chain: usize,
    sweeps_done: usize,
    state: ChainState,
    rng: ChaCha8Rng,
    draws: Vec<Draw>,
}

/// SHA-256 of the configuration and data, hex encoded.
pub fn config_hash(cfg: &SamplerConfig, data: &TimeGridDataset) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(cfg).expect("serializable config"));
    h.update(serde_json::to_vec(data).expect("serializable data"));
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer(&mut w, ck)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let r = BufReader::new(File::open(path)?);
    let ck: Checkpoint =
        serde_json::from_reader(r).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    if ck.format != "ddpmix-checkpoint" || ck.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "{}: unsupported checkpoint {} v{}",
            path.display(),
            ck.format,
            ck.version
        )));
    }
    Ok(ck)
}

/// Runs `burn_in + iters` sweeps, keeping every `thin`-th post-burn-in state.
/// The hyperparameter step sizes adapt during burn-in only.
pub fn run_chain(data: &TimeGridDataset, cfg: &SamplerConfig, opts: &RunOptions) -> Result<PosteriorDraws> {
    cfg.validate()?;
    let hash = config_hash(cfg, data);
    let total = cfg.burn_in + cfg.iters;
    let resumed = match (&opts.checkpoint, opts.resume) {
        (Some(p), true) if p.exists() => {
            let ck = read_checkpoint(p)?;
            if ck.config_hash != hash || ck.chain != opts.chain {
                return Err(Error::Checkpoint(format!(
                    "{} was written for a different configuration, dataset or chain",
                    p.display()
                )));
            }
            Some(ck)
        }
        _ => None,
    };
    let (mut state, mut rng, mut done, mut draws) = match resumed {
        Some(ck) => (ck.state, ck.rng, ck.sweeps_done, ck.draws),
        None => {
            let mut rng = chain_rng(cfg.rng_seed, opts.chain);
            let st = init_chain(data, cfg, &mut rng)?;
            (st, rng, 0, Vec::with_capacity(cfg.n_draws()))
        }
    };
    let mut telemetry = match &opts.telemetry {
        Some(p) => {
            let f =
                std::fs::OpenOptions::new().create(true).append(done > 0).write(true).truncate(done == 0).open(p)?;
            Some(BufWriter::new(f))
        }
        None => None,
    };
    let save = |state: &ChainState, rng: &ChaCha8Rng, done: usize, draws: &[Draw]| -> Result<()> {
        if let Some(p) = &opts.checkpoint {
            write_checkpoint(
                p,
                &Checkpoint {
                    format: "ddpmix-checkpoint".into(),
                    version: CHECKPOINT_VERSION,
                    config_hash: hash.clone(),
                    chain: opts.chain,
                    sweeps_done: done,
                    state: state.clone(),
                    rng: rng.clone(),
                    draws: draws.to_vec(),
                },
            )?;
        }
        Ok(())
    };

    while done < total {
        if opts.stop_after == Some(done) {
            save(&state, &rng, done, &draws)?;
            break;
        }
        let adapt = (done < cfg.burn_in).then_some(done as u64);
        gibbs_sweep(&mut state, data, cfg, &mut rng, adapt)?;
        done += 1;
        if done > cfg.burn_in && (done - cfg.burn_in).is_multiple_of(cfg.thin) {
            draws.push(Draw::from_state(done - cfg.burn_in, &state));
        }
        if let Some(w) = telemetry.as_mut() {
            writeln!(
                w,
                "chain={} sweep={} phase={} m={} theta={} c={} acc_theta={:.4} acc_c={:.4} loglik={:.6}",
                opts.chain,
                done,
                if done <= cfg.burn_in { "burn" } else { "sample" },
                state.m,
                fmt_opt(state.theta),
                fmt_opt(state.c),
                state.theta_mh.acceptance_rate(),
                state.c_mh.acceptance_rate(),
                log_likelihood(&state, data),
            )?;
        }
        if opts.checkpoint_every > 0 && done % opts.checkpoint_every == 0 {
            save(&state, &rng, done, &draws)?;
        }
        if done % 1000 == 0 {
            log::info!(
                "chain {} sweep {done}/{total} m={} acc_theta={:.3} acc_c={:.3}",
                opts.chain,
                state.m,
                state.theta_mh.acceptance_rate(),
                state.c_mh.acceptance_rate()
            );
        }
    }
    if let Some(mut w) = telemetry {
        w.flush()?;
    }
    Ok(PosteriorDraws {
        chain: opts.chain,
        seed: cfg.rng_seed,
        theta_acceptance: state.theta_mh.acceptance_rate(),
        c_acceptance: state.c_mh.acceptance_rate(),
        draws,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "na".to_string(), |v| format!("{v:.6}"))
}

/// Path with `.chainK` inserted before the extension.
pub fn chain_path(base: &Path, chain: usize) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.chain{chain}.{}", ext.to_string_lossy()),
        None => format!("{stem}.chain{chain}"),
    };
    base.with_file_name(name)
}

/// Runs `n_chains` independent chains in parallel (stream `k` for chain `k`).
/// Checkpoint and telemetry paths in `base` get a per-chain suffix.
pub fn run_chains(
    data: &TimeGridDataset,
    cfg: &SamplerConfig,
    n_chains: usize,
    base: &RunOptions,
) -> Result<Vec<PosteriorDraws>> {
    if n_chains == 0 {
        return Err(Error::param("need at least one chain"));
    }
    (0..n_chains)
        .into_par_iter()
        .map(|k| {
            let opts = RunOptions {
                chain: k,
                checkpoint: base.checkpoint.as_deref().map(|p| chain_path(p, k)),
                telemetry: base.telemetry.as_deref().map(|p| chain_path(p, k)),
                ..base.clone()
            };
            run_chain(data, cfg, &opts)
        })
        .collect()
}

pub const ARCHIVE_FORMAT: &str = "ddpmix-draws";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ArchiveHeader {
    format: String,
    version: u32,
    times: Vec<f64>,
    chains: Vec<ChainHeader>,
}

#[derive(Serialize, Deserialize)]
struct ChainHeader {
    chain: usize,
    seed: u64,
    n_draws: usize,
    theta_acceptance: f64,
    c_acceptance: f64,
}

#[derive(Serialize, Deserialize)]
struct ArchiveLine {
    chain: usize,
    #[serde(flatten)]
    draw: Draw,
}

/// Writes chains as JSON lines: a header line, then one line per draw.
pub fn write_archive<W: Write>(mut w: W, chains: &[PosteriorDraws]) -> Result<()> {
    let times = chains.iter().flat_map(|c| c.draws.first()).map(|d| d.measure.times.clone()).next().unwrap_or_default();
    let header = ArchiveHeader {
        format: ARCHIVE_FORMAT.into(),
        version: ARCHIVE_VERSION,
        times,
        chains: chains
            .iter()
            .map(|c| ChainHeader {
                chain: c.chain,
                seed: c.seed,
                n_draws: c.draws.len(),
                theta_acceptance: c.theta_acceptance,
                c_acceptance: c.c_acceptance,
            })
            .collect(),
    };
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w)?;
    for c in chains {
        for d in &c.draws {
            // Times are in the header; drop them from each line.
            let mut d = d.clone();
            d.measure.times.clear();
            serde_json::to_writer(&mut w, &ArchiveLine { chain: c.chain, draw: d })?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_archive_path(path: &Path, chains: &[PosteriorDraws]) -> Result<()> {
    write_archive(BufWriter::new(File::create(path)?), chains)
}

pub fn read_archive<R: BufRead>(r: R) -> Result<Vec<PosteriorDraws>> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Data("empty draws archive".into()))??;
    let header: ArchiveHeader =
        serde_json::from_str(&first).map_err(|e| Error::Data(format!("bad archive header: {e}")))?;
    if header.format != ARCHIVE_FORMAT || header.version != ARCHIVE_VERSION {
        return Err(Error::Data(format!("unsupported archive {} v{}", header.format, header.version)));
    }
    let mut chains: Vec<PosteriorDraws> = header
        .chains
        .iter()
        .map(|c| PosteriorDraws {
            chain: c.chain,
            seed: c.seed,
            theta_acceptance: c.theta_acceptance,
            c_acceptance: c.c_acceptance,
            draws: Vec::with_capacity(c.n_draws),
        })
        .collect();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: ArchiveLine =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("archive line {}: {e}", n + 2)))?;
        rec.draw.measure.times = header.times.clone();
        let slot = chains
            .iter_mut()
            .find(|c| c.chain == rec.chain)
            .ok_or_else(|| Error::Data(format!("archive line {}: unknown chain {}", n + 2, rec.chain)))?;
        slot.draws.push(rec.draw);
    }
    for (c, h) in chains.iter().zip(&header.chains) {
        if c.draws.len() != h.n_draws {
            return Err(Error::Data(format!(
                "chain {} has {} draws, header says {}",
                c.chain,
                c.draws.len(),
                h.n_draws
            )));
        }
    }
    Ok(chains)
}

pub fn read_archive_path(path: &Path) -> Result<Vec<PosteriorDraws>> {
    let f = File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_archive(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::simulate_toy;

    fn small() -> (TimeGridDataset, SamplerConfig) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data = simulate_toy(8, 2, 2.0, &mut rng).unwrap();
        let cfg = SamplerConfig { iters: 20, burn_in: 10, thin: 2, rng_seed: 4, ..SamplerConfig::default() };
        (data, cfg)
    }

    #[test]
    fn schedule_yields_expected_draws() {
        let (data, cfg) = small();
        let out = run_chain(&data, &cfg, &RunOptions::default()).unwrap();
        assert_eq!(out.draws.len(), 10);
        assert_eq!(out.draws.last().unwrap().sweep, 20);
    }

    #[test]
    fn archive_round_trip() {
        let (data, cfg) = small();
        let chains = run_chains(&data, &cfg, 2, &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_archive(&mut buf, &chains).unwrap();
        let back = read_archive(buf.as_slice()).unwrap();
        assert_eq!(back, chains);
        assert_ne!(chains[0].draws, chains[1].draws);
    }

    #[test]
    fn chain_path_suffix() {
        assert_eq!(chain_path(Path::new("/x/ck.json"), 3), PathBuf::from("/x/ck.chain3.json"));
        assert_eq!(chain_path(Path::new("ck"), 0), PathBuf::from("ck.chain0"));
    }
}
