use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use atomchip::format::{parse_layout, parse_schedule};
use atomchip::layout::ValidationError;
use atomchip::{Error, Layout, Multipliers, Schedule, Vec3};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// A parsed input file with the hash of its bytes.
pub struct Input<T> {
    pub value: T,
    pub sha256: String,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn load_layout(path: &Path) -> Result<Input<Layout>, Error> {
    let text = read(path)?;
    Ok(Input {
        value: parse_layout(&text)?,
        sha256: hash(&text),
    })
}

pub fn load_schedule(path: &Path) -> Result<Input<Schedule>, Error> {
    let text = read(path)?;
    Ok(Input {
        value: parse_schedule(&text)?,
        sha256: hash(&text),
    })
}

pub fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(ValidationError(msg.into()))
}

pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated numbers".to_string())
}

pub fn parse_counts(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated counts".to_string())
}

pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

pub fn parse_setting(s: &str) -> Result<(String, f64), String> {
    let (name, v) = s.split_once('=').ok_or("expected CHANNEL=VALUE")?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"))?;
    Ok((name.trim().to_string(), v))
}

/// µm triple to metres.
pub fn um3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2]) * 1e-6
}

pub fn multipliers(layout: &Layout, set: &[(String, f64)]) -> Result<Multipliers, Error> {
    let pairs: Vec<(&str, f64)> = set.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    Ok(layout.multipliers(&pairs)?)
}

/// Output directory that plot files and their metadata sidecar go to.
pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Output, Error> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), Error> {
        self.write(name, &pretty(v))
    }

    /// Writes `<command>.meta.json` listing the files written so far. The
    /// timestamp lives only here so that data files are reproducible.
    pub fn finish(mut self, command: &str, inputs: Value, seed: Option<u64>) -> Result<(), Error> {
        let meta = sidecar(command, inputs, seed, &self.written);
        let name = format!("{command}.meta.json");
        self.write_json(&name, &meta)
    }
}

pub fn sidecar(command: &str, inputs: Value, seed: Option<u64>, files: &[String]) -> Value {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": inputs,
        "seed": seed,
        "files": files,
        "arguments": std::env::args().skip(1).collect::<Vec<_>>(),
        "created_unix_s": created,
    })
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialise");
    s.push('\n');
    s
}
