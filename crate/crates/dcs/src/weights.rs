//! Trained RNN weights, cached on disk by configuration hash.

use std::fs;
use std::path::{Path, PathBuf};

use dcs_core::channel::{gaussian_stream, tags, RngStream};
use dcs_core::rnn::{from_bytes, to_bytes, train_rnn, Seq2SeqModel};
use dcs_core::Signal;

use crate::config::{ExperimentConfig, MapKind};
use crate::{HarnessError, Result};

pub fn cache_path(cfg: &ExperimentConfig, out_dir: &Path) -> PathBuf {
    out_dir.join("cache").join(format!("rnn-{}.bin", cfg.rnn_hash()))
}

/// The training sequence: the clean Lorenz drive plus noise of power
/// `rnn.train_sigma2` from its own stream.
pub fn training_signal(cfg: &ExperimentConfig) -> Result<Signal> {
    let clean = cfg
        .map(MapKind::Lorenz)
        .trajectory(cfg.init(MapKind::Lorenz), cfg.signal.length, &cfg.rk4())?
        .x();
    let std = cfg.rnn.train_sigma2.sqrt();
    let noise = gaussian_stream(
        &RngStream::tagged(cfg.noise.seed, tags::RNN_TRAIN_NOISE, 0),
        clean.len(),
    );
    let values = clean.values.iter().zip(noise).map(|(x, n)| x + std * n).collect();
    Ok(clean.like(values))
}

pub struct Trained {
    pub model: Seq2SeqModel,
    /// Loss per iteration when the model was trained in this call.
    pub loss: Option<Vec<f64>>,
    pub path: PathBuf,
}

pub fn train(cfg: &ExperimentConfig) -> Result<(Seq2SeqModel, Vec<f64>)> {
    let mut model = Seq2SeqModel::new(&cfg.rnn_config())?;
    let loss = train_rnn(&mut model, &training_signal(cfg)?, &cfg.train_config())?;
    model.trained_sigma2 = cfg.rnn.train_sigma2;
    Ok((model, loss))
}

/// Loads the cached model, training and caching it first when absent or
/// when `retrain` is set.
pub fn load_or_train(cfg: &ExperimentConfig, out_dir: &Path, retrain: bool) -> Result<Trained> {
    let path = cache_path(cfg, out_dir);
    if !retrain {
        if let Ok(bytes) = fs::read(&path) {
            if let Ok(model) = from_bytes(&bytes) {
                return Ok(Trained {
                    model,
                    loss: None,
                    path,
                });
            }
        }
    }
    let (model, loss) = train(cfg)?;
    let io = |source| HarnessError::Io {
        path: path.clone(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(&path, to_bytes(&model)).map_err(io)?;
    Ok(Trained {
        model,
        loss: Some(loss),
        path,
    })
}
