//! Model files: the core tensor container with the run configuration as
//! its configuration echo.

use std::path::{Path, PathBuf};

use sigcat_core::model::{build_model, ModelParams};
use sigcat_core::tensor::Container;

use crate::config::RunConfig;
use crate::{Error, Result};

pub fn encode(model: &ModelParams, cfg: &RunConfig) -> Vec<u8> {
    let mut cfg = cfg.clone();
    cfg.model = model.config().clone();
    let tensors = model
        .named_tensors()
        .into_iter()
        .map(|(name, _, t)| (name, t.clone()))
        .collect();
    Container::new(cfg.to_json(), tensors).encode()
}

pub fn decode(bytes: &[u8]) -> sigcat_core::Result<(RunConfig, ModelParams)> {
    let c = Container::decode(bytes)?;
    let cfg = RunConfig::from_json(&c.config)
        .map_err(|e| sigcat_core::Error::Checkpoint(format!("embedded configuration: {e}")))?;
    let mut model = build_model(&cfg.model, 0)?;
    model.load_named(&c.tensors)?;
    Ok((cfg, model))
}

pub fn save(path: &Path, model: &ModelParams, cfg: &RunConfig) -> Result<()> {
    std::fs::write(path, encode(model, cfg)).map_err(Error::io(path))
}

pub fn load(path: &Path) -> Result<(RunConfig, ModelParams)> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    decode(&bytes).map_err(|e| Error::Checkpoint {
        path: path.into(),
        msg: e.to_string(),
    })
}

/// `model.ckpt` for a single model, `model-{k}.ckpt` for ensemble members.
pub fn member_file_name(k: usize, members: usize) -> String {
    if members == 1 {
        "model.ckpt".into()
    } else {
        format!("model-{k}.ckpt")
    }
}

/// Expands directories into their `.ckpt` files, sorted by name.
pub fn resolve_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(Error::io(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "ckpt"))
                .collect();
            if found.is_empty() {
                return Err(Error::Checkpoint {
                    path: p.clone(),
                    msg: "directory holds no .ckpt files".into(),
                });
            }
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}
