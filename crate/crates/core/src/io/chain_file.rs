use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::sampler::{Chain, ChainConfig, ChainMeta, Draw};

/// First line of every chain file.
pub const CHAIN_FORMAT: &str = "rlcm-chain 1";

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Plain-text header of `key=value` lines, one column-name line, one CSV
/// row per draw and an `end rows=<S>` trailer. Floats use Rust's shortest
/// round-trip formatting, so reading a file back is lossless.
pub fn write_chain<W: Write>(chain: &Chain, mut w: W) -> std::io::Result<()> {
    let m = &chain.meta;
    let s = &m.spec;
    let c = &m.config;
    writeln!(w, "{CHAIN_FORMAT}")?;
    writeln!(w, "version={}", m.version)?;
    writeln!(w, "k={}", s.k())?;
    writeln!(w, "l={}", s.l())?;
    writeln!(w, "categories={}", join(s.categories()))?;
    writeln!(w, "meas_order={}", s.meas_order())?;
    writeln!(w, "trans_order={}", s.trans_order())?;
    writeln!(w, "covariates={}", s.covariates())?;
    writeln!(w, "burn_in={}", c.burn_in)?;
    writeln!(w, "post_burn_in={}", c.post_burn_in)?;
    writeln!(w, "thin={}", c.thin)?;
    writeln!(w, "sigma_beta2={}", c.sigma_beta2)?;
    writeln!(w, "omega0={}", c.omega0)?;
    writeln!(w, "omega1={}", c.omega1)?;
    writeln!(w, "rate_a={}", c.rate_a)?;
    match c.v0 {
        Some(v) => writeln!(w, "v0={v}")?,
        None => writeln!(w, "v0=auto")?,
    }
    writeln!(w, "sigma_kappa2={}", c.sigma_kappa2)?;
    writeln!(w, "starts={}", c.starts)?;
    writeln!(w, "pilot_sweeps={}", c.pilot_sweeps)?;
    writeln!(w, "config_seed={}", c.seed)?;
    writeln!(w, "respondents={}", m.respondents)?;
    writeln!(w, "waves={}", m.waves)?;
    writeln!(w, "seed={}", m.seed)?;
    writeln!(w, "stream={}", m.stream)?;
    writeln!(w, "sweep_order={}", m.sweep_order)?;
    writeln!(w, "column_convention={}", m.column_convention)?;
    writeln!(w, "kappa_acceptance={}", join(&m.kappa_acceptance))?;
    writeln!(w, "columns={}", Draw::column_names(s, m.respondents).join(","))?;
    for d in &chain.draws {
        writeln!(w, "{}", join(&d.to_row(s)))?;
    }
    writeln!(w, "end rows={}", chain.draws.len())?;
    w.flush()
}

pub fn save_chain(chain: &Chain, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_chain(chain, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_chain(path: &Path) -> Result<Chain> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_chain(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Corrupt(msg.into())
}

fn parse<T: std::str::FromStr>(h: &HashMap<String, String>, key: &str) -> Result<T> {
    let raw = h.get(key).ok_or_else(|| corrupt(format!("missing header field `{key}`")))?;
    raw.parse()
        .map_err(|_| corrupt(format!("header field `{key}` has invalid value `{raw}`")))
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|v| v.parse().map_err(|_| corrupt(format!("bad {what} value `{v}`"))))
        .collect()
}

pub fn read_chain<R: BufRead>(r: R) -> Result<Chain> {
    let mut lines = r.lines();
    let mut next = || -> Result<Option<String>> {
        lines
            .next()
            .transpose()
            .map_err(|e| Error::io("<chain>", e))
    };
    let first = next()?.ok_or_else(|| corrupt("empty file"))?;
    if first != CHAIN_FORMAT {
        return match first.strip_prefix("rlcm-chain ") {
            Some(v) => Err(Error::VersionMismatch {
                found: v.to_string(),
                expected: CHAIN_FORMAT["rlcm-chain ".len()..].to_string(),
            }),
            None => Err(corrupt("not a chain file")),
        };
    }
    let mut header = HashMap::new();
    let columns = loop {
        let line = next()?.ok_or_else(|| corrupt("header ends before the column line"))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| corrupt(format!("malformed header line `{line}`")))?;
        if key == "columns" {
            break value.to_string();
        }
        header.insert(key.to_string(), value.to_string());
    };
    let spec = ModelSpec::new(
        parse(&header, "k")?,
        parse(&header, "l")?,
        parse_list(header.get("categories").map_or("", String::as_str), "category")?,
        parse(&header, "meas_order")?,
        parse(&header, "trans_order")?,
        parse(&header, "covariates")?,
    )?;
    let v0 = match header.get("v0").map(String::as_str) {
        Some("auto") => None,
        _ => Some(parse(&header, "v0")?),
    };
    let config = ChainConfig {
        burn_in: parse(&header, "burn_in")?,
        post_burn_in: parse(&header, "post_burn_in")?,
        thin: parse(&header, "thin")?,
        sigma_beta2: parse(&header, "sigma_beta2")?,
        omega0: parse(&header, "omega0")?,
        omega1: parse(&header, "omega1")?,
        rate_a: parse(&header, "rate_a")?,
        v0,
        sigma_kappa2: parse(&header, "sigma_kappa2")?,
        starts: parse(&header, "starts")?,
        pilot_sweeps: parse(&header, "pilot_sweeps")?,
        seed: parse(&header, "config_seed")?,
    };
    let respondents: usize = parse(&header, "respondents")?;
    let expected = Draw::column_names(&spec, respondents).join(",");
    if columns != expected {
        return Err(corrupt("column names do not match the recorded model"));
    }
    let meta = ChainMeta {
        version: parse(&header, "version")?,
        spec,
        config,
        respondents,
        waves: parse(&header, "waves")?,
        seed: parse(&header, "seed")?,
        stream: parse(&header, "stream")?,
        sweep_order: parse(&header, "sweep_order")?,
        column_convention: parse(&header, "column_convention")?,
        kappa_acceptance: parse_list(
            header.get("kappa_acceptance").map_or("", String::as_str),
            "acceptance",
        )?,
    };
    let mut draws = Vec::new();
    loop {
        let line = next()?.ok_or_else(|| corrupt(format!("file truncated after {} draws", draws.len())))?;
        if let Some(count) = line.strip_prefix("end rows=") {
            let count: usize = count.parse().map_err(|_| corrupt("bad trailer"))?;
            if count != draws.len() {
                return Err(corrupt(format!("trailer announces {count} draws, found {}", draws.len())));
            }
            break;
        }
        let row: Vec<f64> = parse_list(&line, "draw")?;
        draws.push(
            Draw::from_row(&row, &meta.spec, respondents)
                .map_err(|e| corrupt(format!("draw {}: {e}", draws.len() + 1)))?,
        );
    }
    if next()?.is_some() {
        return Err(corrupt("data after the trailer"));
    }
    Ok(Chain { meta, draws })
}
