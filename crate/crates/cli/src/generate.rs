use anyhow::{anyhow, bail, Context, Result};
use chrono::{NaiveDate, NaiveDateTime};
use shmbench::pipeline::{run_generation, GenerateOptions};
use shmbench::{Scenario, SubDataset};

use crate::{load_config, report, GenerateArgs};

fn parse_start(s: &str) -> Result<NaiveDateTime> {
    if let Ok(t) = NaiveDateTime::parse_from_str(&format!("{s}:00"), "%Y-%m-%dT%H:%M") {
        return Ok(t);
    }
    let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").with_context(|| format!("invalid start {s:?}"))?;
    Ok(d.and_hms_opt(0, 0, 0).unwrap())
}

fn window(scenario: &Scenario, args: &GenerateArgs) -> Result<Option<std::ops::Range<usize>>> {
    let Some(hours) = args.hours else {
        return Ok(None);
    };
    let first = match &args.start {
        Some(s) => {
            let t = parse_start(s)?;
            scenario.grid.index_of(t).ok_or_else(|| anyhow!("{t} is not on the time grid"))?
        }
        None => 0,
    };
    let end = first + hours;
    if hours == 0 || end > scenario.len() {
        bail!("window {first}..{end} does not fit the grid of {} hours", scenario.len());
    }
    Ok(Some(first..end))
}

/// Returns `false` when any sub-dataset misses its file-count contract.
pub fn run(args: &GenerateArgs, json: bool) -> Result<bool> {
    let config = load_config(args.config.as_ref(), args.seed)?;
    let scenario = Scenario::realize(config)?;
    let subdatasets = if args.subdatasets.is_empty() {
        SubDataset::ALL.to_vec()
    } else {
        let mut v = args.subdatasets.clone();
        v.sort();
        v.dedup();
        v
    };
    let opts = GenerateOptions {
        out_dir: args.out.clone(),
        subdatasets,
        window: window(&scenario, args)?,
        workers: args.workers,
    };
    let rep = run_generation(&scenario, &opts)?;
    let ok = rep.subdatasets.iter().all(|s| s.files == s.expected);
    let value = serde_json::json!({ "ok": ok, "out": args.out, "report": rep });
    report(json, &value, || {
        for s in &rep.subdatasets {
            println!(
                "{:<5} files {:>6} / {:<6} accepted {:>6} contaminated {:>5}{}",
                s.code.code(),
                s.files,
                s.expected,
                s.accepted,
                s.contaminated,
                if s.files == s.expected { "" } else { "  MISMATCH" }
            );
        }
        println!("manifest: {} files under {}", rep.manifest_files, args.out.display());
    });
    Ok(ok)
}
