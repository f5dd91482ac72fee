use anyhow::{Context, Result};
use shmbench::faults::FaultPolicy;
use shmbench::pipeline::contaminate_directory;

use crate::{report, ContaminateArgs};

fn load_policy(args: &ContaminateArgs) -> Result<FaultPolicy> {
    let policy = match &args.policy {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => FaultPolicy::sampled(),
    };
    policy.validate()?;
    Ok(policy)
}

/// Returns `false` when the contaminated share exceeds the policy bound.
pub fn run(args: &ContaminateArgs, json: bool) -> Result<bool> {
    let policy = load_policy(args)?;
    let labels = contaminate_directory(&args.corpus, &args.out, &policy, args.seed)?;
    let files = std::fs::read_dir(&args.out)?
        .filter_map(|e| e.ok())
        .filter(|e| shmbench::io::parse_file_name(&e.file_name().to_string_lossy()).is_some())
        .count();
    let share = if files == 0 { 0.0 } else { labels.len() as f64 / files as f64 };
    let ok = share <= policy.fraction;
    let value = serde_json::json!({
        "ok": ok,
        "files": files,
        "contaminated": labels.len(),
        "share": share,
        "bound": policy.fraction,
        "labels": args.out.join("faults.txt"),
    });
    report(json, &value, || {
        println!(
            "{files} records written, {} contaminated ({:.1} %, bound {:.1} %)",
            labels.len(),
            100.0 * share,
            100.0 * policy.fraction
        );
    });
    Ok(ok)
}
