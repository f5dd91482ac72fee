//! Parallel corpus generation and the text artifacts that accompany it.
//!
//! Output layout under the chosen directory:
//!
//! ```text
//! D1/acc00000-1.h5 ...        one directory per sub-dataset
//! labels/labels_D1.txt ...    per-acquisition damage state and fault tag
//! labels/faults_D4.txt ...    one row per contaminated acquisition
//! records/records_D1.txt ...  retry diagnostics of every acquisition
//! input/                      temperature, humidity, loads, k–m pairs
//! deflection_D1-5.txt         midspan deflection, one column per sub-dataset
//! manifest.json               SHA-256 of everything above
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::damage::DamageSeries;
use crate::dynamics::{AccelerationRecord, Generator};
use crate::error::{Error, Result};
use crate::faults::{self, FaultClass, FaultLabel};
use crate::io::{self, Manifest};
use crate::scenario::{Scenario, SubDataset, SubDatasetRun};
use crate::structure::SdofParams;

pub const DEFLECTION_FILE: &str = "deflection_D1-5.txt";

/// `(k, m)` for every hour of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KmMatrix {
    pub rows: Vec<SdofParams>,
}

pub fn build_km_matrix(scenario: &Scenario, damage: &DamageSeries) -> Result<KmMatrix> {
    let rows = (0..scenario.len())
        .map(|i| scenario.sdof(i, damage))
        .collect::<Result<_>>()?;
    Ok(KmMatrix { rows })
}

/// Retry diagnostics of one written acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub index: usize,
    pub attempts: u32,
    pub selected_attempt: u32,
    pub f_extracted: f64,
    pub f_analytical: f64,
    pub accepted: bool,
    pub sigma_human: f64,
    pub sigma_traffic: f64,
    pub fault: Option<FaultClass>,
}

impl RecordMeta {
    fn new(r: &AccelerationRecord, fault: Option<FaultClass>) -> Self {
        Self {
            index: r.index,
            attempts: r.attempts,
            selected_attempt: r.selected_attempt,
            f_extracted: r.f_extracted,
            f_analytical: r.f_analytical,
            accepted: r.accepted,
            sigma_human: r.sigma_human,
            sigma_traffic: r.sigma_traffic,
            fault,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub out_dir: PathBuf,
    pub subdatasets: Vec<SubDataset>,
    /// Restricts every sub-dataset to these grid indices.
    pub window: Option<std::ops::Range<usize>>,
    /// Overrides the configured worker count when set.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubDatasetReport {
    pub code: SubDataset,
    pub files: usize,
    pub expected: usize,
    pub accepted: usize,
    pub contaminated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub subdatasets: Vec<SubDatasetReport>,
    pub manifest_files: usize,
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))
}

/// The clean record of acquisition `index` under `damage`.
pub fn clean_record(scenario: &Scenario, generator: &Generator, km: &KmMatrix, index: usize) -> Result<AccelerationRecord> {
    let sdof = km.rows.get(index).ok_or(Error::IndexOutOfRange {
        index,
        len: km.rows.len(),
    })?;
    generator.acquire(sdof, scenario.config.master_seed, index)
}

/// Record as written: clean signal with its fault label applied, if any.
pub fn final_samples(scenario: &Scenario, record: &AccelerationRecord, label: Option<&FaultLabel>) -> Result<Vec<f64>> {
    let mut samples = record.samples.clone();
    if let Some(label) = label {
        faults::apply(&mut samples, label, scenario.config.excitation.fs, scenario.config.master_seed)?;
    }
    Ok(samples)
}

/// Generates, contaminates and writes one sub-dataset.
pub fn write_subdataset(
    scenario: &Scenario,
    run: &SubDatasetRun,
    window: Option<&std::ops::Range<usize>>,
    out_dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<Vec<RecordMeta>> {
    let code = run.spec.code;
    let dir = out_dir.join(code.code());
    fs::create_dir_all(&dir)?;
    let generator = Generator::new(scenario.config.excitation.clone())?;
    let km = build_km_matrix(scenario, &run.damage)?;
    let indices: Vec<usize> = run
        .acquisitions
        .iter()
        .copied()
        .filter(|i| window.is_none_or(|w| w.contains(i)))
        .collect();
    let fs_hz = scenario.config.excitation.fs;
    let done = AtomicUsize::new(0);
    let total = indices.len();

    let metas = pool.install(|| {
        indices
            .par_iter()
            .map(|&i| {
                let record = clean_record(scenario, &generator, &km, i)?;
                let label = run.faults.get(i);
                let samples = final_samples(scenario, &record, label)?;
                io::write_acceleration_atomic(&dir, &io::file_name(i, code), &samples, fs_hz, i)?;
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n.is_multiple_of(1000) || n == total {
                    log::info!("{code}: {n}/{total}");
                }
                Ok(RecordMeta::new(&record, label.map(|l| l.class())))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let _ = fs::remove_dir(dir.join(io::STAGING_DIR));

    write_labels(scenario, run, &indices, out_dir)?;
    write_records(code, &metas, out_dir)?;
    Ok(metas)
}

fn write_labels(scenario: &Scenario, run: &SubDatasetRun, indices: &[usize], out_dir: &Path) -> Result<()> {
    let code = run.spec.code;
    let labels = out_dir.join("labels");
    let rows = indices
        .iter()
        .map(|&i| {
            Ok(vec![
                i.to_string(),
                scenario.grid.timestamp(i)?.format("%Y-%m-%dT%H:%M").to_string(),
                run.damage.r_fast[i].to_string(),
                run.damage.d_slow[i].to_string(),
                run.faults.get(i).map_or("-".to_owned(), |l| l.class().to_string()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    io::write_table(
        &labels.join(format!("labels_{}.txt", code.code())),
        &["index", "timestamp", "r_fast", "d_slow_mm", "sfm"],
        rows,
    )?;
    if code.is_contaminated() {
        let in_window: std::collections::HashSet<usize> = indices.iter().copied().collect();
        write_fault_labels(
            &labels.join(format!("faults_{}.txt", code.code())),
            run.faults.labels.iter().filter(|l| in_window.contains(&l.index)),
        )?;
    }
    Ok(())
}

pub fn write_fault_labels<'a>(path: &Path, labels: impl IntoIterator<Item = &'a FaultLabel>) -> Result<()> {
    io::write_table(
        path,
        &["index", "class", "param_summary", "t_start", "t_end"],
        labels.into_iter().map(|l| {
            vec![
                l.index.to_string(),
                l.class().to_string(),
                l.params.summary(),
                l.t_start.to_string(),
                l.t_end.to_string(),
            ]
        }),
    )
}

fn write_records(code: SubDataset, metas: &[RecordMeta], out_dir: &Path) -> Result<()> {
    io::write_table(
        &out_dir.join("records").join(format!("records_{}.txt", code.code())),
        &[
            "index",
            "attempts",
            "selected_attempt",
            "f_extracted_hz",
            "f_analytical_hz",
            "accepted",
            "sigma_human",
            "sigma_traffic",
        ],
        metas.iter().map(|m| {
            vec![
                m.index.to_string(),
                m.attempts.to_string(),
                m.selected_attempt.to_string(),
                m.f_extracted.to_string(),
                m.f_analytical.to_string(),
                m.accepted.to_string(),
                m.sigma_human.to_string(),
                m.sigma_traffic.to_string(),
            ]
        }),
    )
}

/// Midspan deflection of every sub-dataset over the whole grid. Columns
/// follow [`SubDataset::ALL`]; the sampled sub-dataset repeats the
/// undamaged column.
pub fn deflection_matrix(scenario: &Scenario) -> Result<Vec<Vec<f64>>> {
    SubDataset::ALL
        .iter()
        .map(|&code| {
            let spec = scenario.spec(code.damage_source())?;
            let damage = scenario.damage(&spec)?;
            (0..scenario.len()).map(|i| scenario.deflection(i, &damage)).collect()
        })
        .collect()
}

pub fn write_deflections(path: &Path, columns: &[Vec<f64>]) -> Result<()> {
    let n = columns.first().map_or(0, Vec::len);
    if let Some(bad) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: bad.len(),
        });
    }
    let mut header = vec!["index"];
    header.extend(SubDataset::ALL.iter().map(|c| c.code()));
    io::write_table(
        path,
        &header,
        (0..n).map(|i| std::iter::once(i.to_string()).chain(columns.iter().map(move |c| c[i].to_string()))),
    )
}

/// Temperature, humidity, loads and the k–m pairs of every sub-dataset.
pub fn write_inputs(scenario: &Scenario, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let n = scenario.len();
    let stamp = |i: usize| scenario.grid.timestamp(i).map(|t| t.format("%Y-%m-%dT%H:%M").to_string());
    let temp_rows = (0..n)
        .map(|i| Ok(vec![i.to_string(), stamp(i)?, scenario.env.temperature[i].to_string()]))
        .collect::<Result<Vec<_>>>()?;
    io::write_table(&dir.join("temperature.txt"), &["index", "timestamp", "T_degC"], temp_rows)?;
    io::write_table(
        &dir.join("humidity.txt"),
        &["index", "RH_pct"],
        (0..n).map(|i| vec![i.to_string(), scenario.env.humidity[i].to_string()]),
    )?;
    let l = &scenario.loads;
    io::write_table(
        &dir.join("load.txt"),
        &["index", "p_Q_lt_kN_m", "p_Q_st_kN_m", "p_des_kN_m"],
        (0..n).map(|i| {
            vec![
                i.to_string(),
                l.p_q_lt[i].to_string(),
                l.p_q_st[i].to_string(),
                l.p_des[i].to_string(),
            ]
        }),
    )?;
    for code in SubDataset::ALL {
        if code == SubDataset::D4 {
            continue;
        }
        let spec = scenario.spec(code)?;
        let km = build_km_matrix(scenario, &scenario.damage(&spec)?)?;
        io::write_table(
            &dir.join(format!("km_{}.txt", code.code())),
            &["index", "k_N_m", "m_kg"],
            km.rows
                .iter()
                .enumerate()
                .map(|(i, r)| vec![i.to_string(), r.k.to_string(), r.m.to_string()]),
        )?;
    }
    Ok(())
}

/// Runs every requested sub-dataset and writes the shared artifacts and
/// the manifest.
pub fn run_generation(scenario: &Scenario, opts: &GenerateOptions) -> Result<GenerationReport> {
    let workers = opts.workers.unwrap_or(scenario.config.n_workers);
    let pool = thread_pool(workers)?;
    fs::create_dir_all(&opts.out_dir)?;
    fs::write(opts.out_dir.join("config.json"), scenario.config.to_json()?)?;
    write_inputs(scenario, &opts.out_dir.join("input"))?;
    write_deflections(&opts.out_dir.join(DEFLECTION_FILE), &deflection_matrix(scenario)?)?;

    let mut reports = Vec::new();
    for &code in &opts.subdatasets {
        let run = scenario.subdataset(code)?;
        let metas = write_subdataset(scenario, &run, opts.window.as_ref(), &opts.out_dir, &pool)?;
        let expected = match &opts.window {
            None => run.spec.expected_count,
            Some(w) => run.acquisitions.iter().filter(|i| w.contains(i)).count(),
        };
        reports.push(SubDatasetReport {
            code,
            files: metas.len(),
            expected,
            accepted: metas.iter().filter(|m| m.accepted).count(),
            contaminated: metas.iter().filter(|m| m.fault.is_some()).count(),
        });
        log::info!("{code}: {} files written", metas.len());
    }
    let manifest = Manifest::build(&opts.out_dir)?;
    manifest.write(&opts.out_dir)?;
    Ok(GenerationReport {
        subdatasets: reports,
        manifest_files: manifest.files.len(),
    })
}

/// Contaminates an existing directory of records. Acquisitions are drawn
/// per the policy's target count, then faults are planned and applied;
/// every drawn record is copied to `out_dir` and the labels are written
/// to `out_dir/faults.txt`.
pub fn contaminate_directory(
    corpus: &Path,
    out_dir: &Path,
    policy: &faults::FaultPolicy,
    master_seed: u64,
) -> Result<Vec<FaultLabel>> {
    let mut files: Vec<(usize, String)> = fs::read_dir(corpus)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            io::parse_file_name(&name).map(|(i, _)| (i, name))
        })
        .collect();
    if files.is_empty() {
        return Err(Error::Malformed {
            path: corpus.to_owned(),
            reason: "no acquisition files found".into(),
        });
    }
    files.sort();
    let positions: Vec<usize> = match policy.target_count {
        Some(t) => faults::sample_acquisitions(0..files.len(), t, master_seed),
        None => (0..files.len()).collect(),
    };
    let chosen: Vec<&(usize, String)> = positions.iter().map(|&p| &files[p]).collect();
    let indices: Vec<usize> = chosen.iter().map(|(i, _)| *i).collect();

    let first = io::read_acceleration(&corpus.join(&chosen[0].1))?;
    let plan = faults::plan_contamination(&indices, policy, first.samples.len(), first.fs, master_seed)?;

    fs::create_dir_all(out_dir)?;
    chosen.par_iter().try_for_each(|(i, name)| -> Result<()> {
        let rec = io::read_acceleration(&corpus.join(name))?;
        let mut samples: Vec<f64> = rec.samples.iter().map(|&v| v as f64).collect();
        if let Some(label) = plan.get(*i) {
            faults::apply(&mut samples, label, rec.fs, master_seed)?;
        }
        io::write_acceleration_atomic(out_dir, name, &samples, rec.fs, *i)?;
        Ok(())
    })?;
    let _ = fs::remove_dir(out_dir.join(io::STAGING_DIR));
    write_fault_labels(&out_dir.join("faults.txt"), &plan.labels)?;
    Ok(plan.labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;

    fn scenario() -> Scenario {
        Scenario::realize(ScenarioConfig::default()).unwrap()
    }

    #[test]
    fn km_matrix_contract() {
        let s = scenario();
        let d1 = s.subdataset(SubDataset::D1).unwrap();
        let d21 = s.subdataset(SubDataset::D21).unwrap();
        let d31 = s.subdataset(SubDataset::D31).unwrap();
        let a = build_km_matrix(&s, &d1.damage).unwrap();
        let b = build_km_matrix(&s, &d21.damage).unwrap();
        let c = build_km_matrix(&s, &d31.damage).unwrap();
        assert_eq!(a.rows.len(), 26280);
        assert!(a.rows.iter().all(|r| r.k > 0.0 && r.m > 0.0));
        for i in [13104, 20000, 26279] {
            assert!((b.rows[i].k / a.rows[i].k - 0.90).abs() < 1e-12);
        }
        assert_eq!(a.rows[..13104], c.rows[..13104]);
        assert_eq!(a.rows[..13104], b.rows[..13104]);
    }

    #[test]
    fn undamaged_reference_oscillator() {
        // 20 °C and the mean design load.
        let s = scenario();
        let e = crate::environment::youngs_modulus(20.0, &s.config.env).unwrap();
        let sdof = s.config.beam.sdof(e, 43.72, 0.0, 0.0).unwrap();
        assert!((sdof.f_n - 9.0).abs() < 0.15, "{}", sdof.f_n);
    }

    #[test]
    fn deflection_columns() {
        let s = scenario();
        let cols = deflection_matrix(&s).unwrap();
        assert_eq!(cols.len(), 9);
        assert!(cols.iter().all(|c| c.len() == 26280));
        assert_eq!(cols[0], cols[7]);
        let mean = cols[0].iter().sum::<f64>() / 26280.0;
        assert!((mean - 3.03).abs() / 3.03 < 0.05, "{mean}");
        // Damaged columns deflect more after the onset.
        assert!(cols[3][26279] > cols[0][26279]);
        assert_eq!(cols[3][..13104], cols[0][..13104]);
    }

    #[test]
    fn inputs_round_trip() {
        let s = scenario();
        let dir = tempfile::tempdir().unwrap();
        write_inputs(&s, dir.path()).unwrap();
        let p = dir.path().join("temperature.txt");
        let t = io::read_table(&p).unwrap();
        assert_eq!(t.rows.len(), 26280);
        assert_eq!(t.numeric("T_degC", &p).unwrap(), s.env.temperature);
        let p = dir.path().join("load.txt");
        assert_eq!(io::read_table(&p).unwrap().numeric("p_des_kN_m", &p).unwrap(), s.loads.p_des);
        let p = dir.path().join("km_D1.txt");
        let km = io::read_table(&p).unwrap();
        assert_eq!(km.header.len(), 3);
        let d1 = s.subdataset(SubDataset::D1).unwrap();
        let want: Vec<f64> = build_km_matrix(&s, &d1.damage).unwrap().rows.iter().map(|r| r.k).collect();
        assert_eq!(km.numeric("k_N_m", &p).unwrap(), want);
    }

    #[test]
    fn deflection_file_rejects_misaligned_columns() {
        let dir = tempfile::tempdir().unwrap();
        let cols = vec![vec![1.0; 3], vec![1.0; 2]];
        assert!(matches!(
            write_deflections(&dir.path().join("d.txt"), &cols),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
