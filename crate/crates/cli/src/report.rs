use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use serde_json::Value;

use crate::config::config_hash;
use crate::error::CliError;
use crate::output::{to_json, Provenance};

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// JSON artifacts, or directories holding them
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Write the merged report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Entry {
    file: String,
    kind: Value,
    config_hash: Value,
    config: Value,
    result: Value,
}

#[derive(Serialize)]
struct Report<'a> {
    kind: &'static str,
    provenance: &'a Provenance,
    artifacts: &'a [Entry],
}

fn collect(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::Io(format!("{}: {}", p.display(), e)))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn read(path: &Path) -> Result<Entry, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e)))?;
    let mut v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
    let obj = v
        .as_object_mut()
        .filter(|o| o.contains_key("kind") && o.contains_key("result"))
        .ok_or_else(|| CliError::Parse(format!("{}: not an acr artifact", path.display())))?;
    let hash = obj
        .get("provenance")
        .and_then(|p| p.get("config_hash"))
        .cloned()
        .unwrap_or(Value::Null);
    Ok(Entry {
        file: path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        kind: obj.remove("kind").unwrap_or(Value::Null),
        config_hash: hash,
        config: obj.remove("config").unwrap_or(Value::Null),
        result: obj.remove("result").unwrap_or(Value::Null),
    })
}

pub fn run(args: &ReportArgs) -> Result<(), CliError> {
    let files = collect(&args.inputs)?;
    let entries: Vec<Entry> = files
        .iter()
        .filter(|f| args.out.as_ref() != Some(*f))
        .map(|f| read(f))
        .collect::<Result<_, _>>()?;
    if entries.is_empty() {
        return Err(CliError::Parse("no JSON artifacts found".into()));
    }
    let hashes: Vec<&Value> = entries.iter().map(|e| &e.config_hash).collect();
    let prov = Provenance::new(config_hash(&hashes));
    let json = to_json(&Report {
        kind: "report",
        provenance: &prov,
        artifacts: &entries,
    });
    match &args.out {
        Some(p) => std::fs::write(p, &json).map_err(|e| CliError::Io(format!("{}: {}", p.display(), e)))?,
        None => print!("{}", json),
    }
    Ok(())
}
