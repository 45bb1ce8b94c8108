//! Instance specs: `.sparse` Biq Mac files, `.json` instances written by
//! `gen`, and `bqp:<n>:<seed>[:<density>]` for generated data.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dnn_approx::problem::{build_ex_biq, generate_bqp, load_biq, load_instance, BiqData};
use dnn_approx::BestApproxInstance;

/// `(n, seed, density)` of a `bqp:` spec.
pub fn parse_generator(spec: &str) -> Result<Option<(usize, u64, f64)>> {
    let Some(rest) = spec.strip_prefix("bqp:") else {
        return Ok(None);
    };
    let parts: Vec<&str> = rest.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        bail!("generator spec must be bqp:<n>:<seed>[:<density>], got `{spec}`");
    }
    let n = parts[0].parse().with_context(|| format!("bad size in `{spec}`"))?;
    let seed = parts[1].parse().with_context(|| format!("bad seed in `{spec}`"))?;
    let density = match parts.get(2) {
        Some(d) => d.parse().with_context(|| format!("bad density in `{spec}`"))?,
        None => 0.1,
    };
    if n == 0 || !(0.0..=1.0).contains(&density) {
        bail!("generator spec `{spec}` out of range");
    }
    Ok(Some((n, seed, density)))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "instance".to_string(), |s| s.to_string_lossy().into_owned())
}

/// Biq Mac data for a `.sparse` path or a `bqp:` spec.
pub fn load_biq_spec(spec: &str) -> Result<(String, BiqData)> {
    if let Some((n, seed, density)) = parse_generator(spec)? {
        return Ok((format!("bqp{n}-{seed}"), generate_bqp(n, density, seed).to_biq()));
    }
    let path = Path::new(spec);
    let data = load_biq(path).with_context(|| format!("loading {spec}"))?;
    Ok((stem(path), data))
}

pub fn load_spec(spec: &str) -> Result<BestApproxInstance> {
    let is_json = Path::new(spec)
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        return load_instance(spec).with_context(|| format!("loading {spec}"));
    }
    let (name, data) = load_biq_spec(spec)?;
    build_ex_biq(&data, name).map_err(|e| anyhow!("building ex-BIQ from {spec}: {e}"))
}
