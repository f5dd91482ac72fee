use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde_json::{json, Value};
use shmbench::dynamics::{welch_dominant_frequency, ExcitationParams};
use shmbench::io::{self, Manifest, Table};
use shmbench::pipeline::DEFLECTION_FILE;
use shmbench::{Scenario, ScenarioConfig, SubDataset};

use crate::{report, InspectArgs};

pub fn run(args: &InspectArgs, json: bool) -> Result<bool> {
    let path = &args.path;
    if path.is_dir() {
        corpus(path, json)
    } else {
        file(path, json)
    }
}

fn row_of(table: &Table, index: usize) -> Option<&[String]> {
    let c = table.column("index")?;
    table
        .rows
        .iter()
        .find(|r| r[c].parse::<usize>().ok() == Some(index))
        .map(Vec::as_slice)
}

fn field(table: &Table, row: &[String], name: &str) -> Option<String> {
    table.column(name).map(|c| row[c].clone())
}

/// Fault label of `index`, looked up next to the file and in the corpus
/// label directory.
fn fault_label(path: &Path, code: SubDataset, index: usize) -> Result<Value> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let candidates = [
        dir.join("faults.txt"),
        dir.join("..").join("labels").join(format!("faults_{}.txt", code.code())),
    ];
    for p in candidates.iter().filter(|p| p.exists()) {
        let t = io::read_table(p)?;
        if let Some(r) = row_of(&t, index) {
            return Ok(json!({
                "class": field(&t, r, "class"),
                "params": field(&t, r, "param_summary"),
                "t_start": field(&t, r, "t_start").and_then(|v| v.parse::<usize>().ok()),
                "t_end": field(&t, r, "t_end").and_then(|v| v.parse::<usize>().ok()),
            }));
        }
    }
    Ok(Value::Null)
}

fn analytical(path: &Path, code: SubDataset, index: usize) -> Result<(Option<f64>, Option<bool>)> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let p = dir.join("..").join("records").join(format!("records_{}.txt", code.code()));
    if !p.exists() {
        return Ok((None, None));
    }
    let t = io::read_table(&p)?;
    Ok(match row_of(&t, index) {
        Some(r) => (
            field(&t, r, "f_analytical_hz").and_then(|v| v.parse().ok()),
            field(&t, r, "accepted").and_then(|v| v.parse().ok()),
        ),
        None => (None, None),
    })
}

fn file(path: &Path, json: bool) -> Result<bool> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (index, code) = io::parse_file_name(&name).ok_or_else(|| anyhow!("{name:?} is not an acquisition file name"))?;
    let rec = io::read_acceleration(path)?;
    let nan_count = rec.samples.iter().filter(|v| v.is_nan()).count();
    let signal: Vec<f64> = rec
        .samples
        .iter()
        .map(|&v| if v.is_finite() { v as f64 } else { 0.0 })
        .collect();
    let params = ExcitationParams {
        fs: rec.fs,
        ..ExcitationParams::default()
    };
    let f_dom = welch_dominant_frequency(&signal, &params).ok();
    let (f_anal, accepted) = analytical(path, code, index)?;
    let rel_err = f_dom.zip(f_anal).map(|(e, a)| e / a - 1.0);
    let fault = fault_label(path, code, index)?;
    let index_ok = rec.index as usize == index;
    let ok = index_ok && !rec.samples.is_empty();

    let value = json!({
        "ok": ok,
        "path": path,
        "subdataset": code,
        "index": index,
        "stored_index": rec.index,
        "samples": rec.samples.len(),
        "fs_hz": rec.fs,
        "duration_s": rec.samples.len() as f64 / rec.fs,
        "units": "m/s^2",
        "nan_count": nan_count,
        "dominant_frequency_hz": f_dom,
        "analytical_frequency_hz": f_anal,
        "relative_error": rel_err,
        "accepted": accepted,
        "fault": fault,
    });
    report(json, &value, || {
        println!("{} ({} #{index})", path.display(), code.code());
        println!("  samples      {} @ {} Hz ({} s), m/s^2", rec.samples.len(), rec.fs, rec.samples.len() as f64 / rec.fs);
        println!("  missing      {nan_count}");
        match f_dom {
            Some(f) => println!("  dominant     {f:.4} Hz"),
            None => println!("  dominant     n/a"),
        }
        if let (Some(a), Some(e)) = (f_anal, rel_err) {
            println!("  analytical   {a:.4} Hz (error {:+.3} %)", 100.0 * e);
        }
        if let Some(acc) = accepted {
            println!("  accepted     {acc}");
        }
        if fault.is_null() {
            println!("  fault        none");
        } else {
            println!(
                "  fault        {} {} samples {}..{}",
                fault["class"].as_str().unwrap_or("?"),
                fault["params"].as_str().unwrap_or(""),
                fault["t_start"],
                fault["t_end"]
            );
        }
        if !index_ok {
            println!("  stored index {} does not match the file name", rec.index);
        }
    });
    Ok(ok)
}

#[derive(Debug, serde::Serialize)]
struct Count {
    files: usize,
    misnamed: usize,
    listed: Option<usize>,
    full_scale: Option<usize>,
}

fn corpus(root: &Path, json: bool) -> Result<bool> {
    let manifest = Manifest::read(root).with_context(|| format!("no readable manifest in {}", root.display()))?;
    let verified = manifest.verify(root);
    let scenario = match root.join("config.json") {
        p if p.exists() => Some(Scenario::realize(ScenarioConfig::load(&p)?)?),
        _ => None,
    };

    let mut counts = BTreeMap::new();
    for code in SubDataset::ALL {
        let dir = root.join(code.code());
        if !dir.is_dir() {
            continue;
        }
        let mut files = 0;
        let mut misnamed = 0;
        for e in std::fs::read_dir(&dir)? {
            let name = e?.file_name().to_string_lossy().into_owned();
            match io::parse_file_name(&name) {
                Some((_, c)) if c == code => files += 1,
                _ => misnamed += 1,
            }
        }
        let labels = root.join("labels").join(format!("labels_{}.txt", code.code()));
        let listed = labels.exists().then(|| io::read_table(&labels)).transpose()?.map(|t| t.rows.len());
        let full_scale = scenario.as_ref().map(|s| s.spec(code)).transpose()?.map(|s| s.expected_count);
        counts.insert(code.code(), Count {
            files,
            misnamed,
            listed,
            full_scale,
        });
    }
    let deflection_rows = match root.join(DEFLECTION_FILE) {
        p if p.exists() => Some(io::read_table(&p)?.rows.len()),
        _ => None,
    };
    let counts_ok = counts.values().all(|c| c.misnamed == 0 && c.listed == Some(c.files));
    let ok = verified.is_ok() && counts_ok;

    let value = json!({
        "ok": ok,
        "path": root,
        "manifest_files": manifest.files.len(),
        "manifest_error": verified.as_ref().err().map(|e| e.to_string()),
        "subdatasets": counts,
        "deflection_rows": deflection_rows,
    });
    report(json, &value, || {
        println!("{}", root.display());
        match &verified {
            Ok(()) => println!("  manifest     {} files verified", manifest.files.len()),
            Err(e) => println!("  manifest     FAILED: {e}"),
        }
        for (code, c) in &counts {
            let listed = c.listed.map_or("-".into(), |n| n.to_string());
            let full = c.full_scale.map_or("-".into(), |n| n.to_string());
            println!(
                "  {code:<5} files {:>6} labelled {listed:>6} full scale {full:>6}{}",
                c.files,
                if c.misnamed > 0 { format!("  {} misnamed", c.misnamed) } else { String::new() }
            );
        }
        if let Some(n) = deflection_rows {
            println!("  deflection   {n} hours");
        }
    });
    Ok(ok)
}
