//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::error::Error;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use regex::Regex;
use shmbench::damage::{corrosion_depth, CorrosionParams};
use shmbench::dynamics::{welch_dominant_frequency, Generator};
use shmbench::faults::{self, FaultClass};
use shmbench::io::{self, Manifest};
use shmbench::load::{self, LiveLoadParams, LoadProcess, DEAD_LOAD, DEAD_LOAD_NON_STRUCTURAL, DEAD_LOAD_STRUCTURAL};
use shmbench::pipeline::{build_km_matrix, clean_record, final_samples, run_generation, GenerateOptions, DEFLECTION_FILE};
use shmbench::structure::{midspan_deflection, plastic_decay_rate, support_moment, BeamModel, IpeSection, SdofParams};
use shmbench::{grid::TimeGrid, Scenario, ScenarioConfig, SubDataset};

type Outcome = Result<String, Box<dyn Error>>;
type Criterion = fn(&Context) -> Outcome;

macro_rules! require {
    ($cond:expr, $($fmt:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($fmt)+).into());
        }
    };
}

fn rel(x: f64, reference: f64) -> f64 {
    (x / reference - 1.0).abs()
}

/// Reference values of the design tables.
mod reference {
    pub const DELTA_G: f64 = 1.99;
    pub const DELTA_Q: f64 = 1.04;
    pub const M_R: f64 = 258.84;
    pub const M_A_ULS: f64 = 183.12;
    pub const R_PL: f64 = 0.2925;
    pub const Q_MEAN: f64 = 15.0;
    pub const EVENT_HOURS: usize = 120;
    pub const EVENTS_3Y: f64 = 15.0;
    pub const CORROSION_1Y_UM: f64 = 47.03;
    pub const FLANGE_LOSS_100Y: f64 = 0.35;
    /// 1.90 GB over 26280 files.
    pub const FILE_BYTES: f64 = 1.90e9 / 26280.0;
    pub const SAMPLES: usize = 18000;
}

const STATIC_TOL: f64 = 0.005;

/// Shared one-month corpus, generated once on first use.
struct Context {
    root: tempfile::TempDir,
    scenario: Scenario,
    window: std::ops::Range<usize>,
    month: OnceLock<Result<PathBuf, String>>,
}

impl Context {
    fn new() -> Self {
        let scenario = Scenario::realize(ScenarioConfig::default()).expect("default scenario");
        let start = scenario.onset;
        Self {
            root: tempfile::tempdir().expect("tempdir"),
            window: start..start + 31 * 24,
            scenario,
            month: OnceLock::new(),
        }
    }

    fn generate(&self, name: &str, window: std::ops::Range<usize>, workers: usize) -> Result<PathBuf, String> {
        let out = self.root.path().join(name);
        let opts = GenerateOptions {
            out_dir: out.clone(),
            subdatasets: SubDataset::ALL.to_vec(),
            window: Some(window),
            workers: Some(workers),
        };
        let report = run_generation(&self.scenario, &opts).map_err(|e| e.to_string())?;
        for s in &report.subdatasets {
            if s.files != s.expected {
                return Err(format!("{}: {} files, expected {}", s.code, s.files, s.expected));
            }
        }
        Ok(out)
    }

    fn month(&self) -> Result<&Path, Box<dyn Error>> {
        self.month
            .get_or_init(|| self.generate("month", self.window.clone(), 1))
            .as_deref()
            .map_err(|e| e.clone().into())
    }
}

fn static_limits(_: &Context) -> Outcome {
    let beam = BeamModel::default();
    let s = IpeSection::IPE400;
    let dg = midspan_deflection(DEAD_LOAD, beam.e0, s.catalog.i_xx, beam.length)?;
    let dq = midspan_deflection(reference::Q_MEAN, beam.e0, s.catalog.i_xx, beam.length)?;
    let m_r = s.catalog.w_el * beam.f_yd / 1e6;
    let m_r_geom = beam.resisting_moment(0.0)?;
    let p_uls = load::combine_uls(DEAD_LOAD_STRUCTURAL, DEAD_LOAD_NON_STRUCTURAL, reference::Q_MEAN);
    let m_a = support_moment(p_uls, beam.length);
    for (name, v, r) in [
        ("delta_G", dg, reference::DELTA_G),
        ("delta_Q", dq, reference::DELTA_Q),
        ("M_R", m_r, reference::M_R),
        ("M_R from geometry", m_r_geom, reference::M_R),
        ("M_A,ULS", m_a, reference::M_A_ULS),
    ] {
        require!(rel(v, r) <= STATIC_TOL, "{name} = {v:.4}, reference {r}");
    }
    Ok(format!(
        "delta_G {dg:.3} mm, delta_Q {dq:.3} mm, M_R {m_r:.2} ({m_r_geom:.2} from geometry), M_A {m_a:.2} kN·m"
    ))
}

fn plastic_decay(_: &Context) -> Outcome {
    let beam = BeamModel::default();
    let m_r = IpeSection::IPE400.catalog.w_el * beam.f_yd / 1e6;
    let m_a = support_moment(
        load::combine_uls(DEAD_LOAD_STRUCTURAL, DEAD_LOAD_NON_STRUCTURAL, reference::Q_MEAN),
        beam.length,
    );
    let limit = plastic_decay_rate(m_r, m_a)?;
    require!((limit.rate - reference::R_PL).abs() <= 0.001, "r_pl = {:.5}", limit.rate);
    let df = limit.frequency_variation().ok_or("limit exceeded")?;
    // Frequency ratio of an oscillator whose stiffness dropped by r.
    let f_ud = SdofParams::new(1.0e8, 3.0e4, 0.05).f_n;
    let f_pl = SdofParams::new(1.0e8 * limit.rate, 3.0e4, 0.05).f_n;
    require!(rel(df, f_pl / f_ud) < 1e-12, "sqrt law {df} vs {}", f_pl / f_ud);
    Ok(format!("r_pl {:.4}, df/f {df:.4}", limit.rate))
}

fn frequency_stiffness(_: &Context) -> Outcome {
    let beam = BeamModel::default();
    let generator = Generator::new(shmbench::dynamics::ExcitationParams::default())?;
    let intact = beam.sdof(beam.e0, DEAD_LOAD + reference::Q_MEAN, 0.0, 0.0)?;
    let damaged = beam.sdof(beam.e0, DEAD_LOAD + reference::Q_MEAN, 0.0, 0.10)?;
    let expected = 0.90f64.sqrt();
    let seeds = 50u64;
    let (mut sum_u, mut sum_d, mut worst) = (0.0, 0.0, 0.0f64);
    for seed in 0..seeds {
        let fu = generator.acquire(&intact, seed, 0)?.f_extracted;
        let fd = generator.acquire(&damaged, seed, 0)?.f_extracted;
        worst = worst.max(rel(fd, expected * fu));
        sum_u += fu;
        sum_d += fd;
    }
    let ratio = sum_d / sum_u;
    require!(rel(ratio, expected) <= 0.01, "ensemble ratio {ratio:.5} vs {expected:.5}");
    Ok(format!(
        "ensemble ratio {ratio:.5} vs {expected:.5} ({:.3} %), worst single seed {:.3} %",
        100.0 * rel(ratio, expected),
        100.0 * worst
    ))
}

fn retry_contract(ctx: &Context) -> Outcome {
    let s = &ctx.scenario;
    let run = s.subdataset(SubDataset::D1)?;
    let km = build_km_matrix(s, &run.damage)?;
    let generator = Generator::new(s.config.excitation.clone())?;
    let p = generator.params().clone();
    let (mut accepted, mut rejected) = (0, 0);
    for i in (0..1000).map(|k| k * 26) {
        let r = clean_record(s, &generator, &km, i)?;
        require!(r.attempts >= 1 && r.attempts <= p.max_attempts, "#{i}: {} attempts", r.attempts);
        if r.accepted {
            require!(r.relative_error() <= p.tolerance, "#{i}: accepted with error {}", r.relative_error());
            accepted += 1;
            continue;
        }
        rejected += 1;
        require!(r.attempts == p.max_attempts, "#{i}: rejected after {} attempts", r.attempts);
        let mut best = f64::INFINITY;
        for a in 0..p.max_attempts {
            let (x, _, _) = generator.simulate_attempt(&km.rows[i], s.config.master_seed, i, a)?;
            best = best.min(rel(welch_dominant_frequency(&x, &p)?, km.rows[i].f_n));
        }
        require!(r.relative_error() == best, "#{i}: kept {} but best was {best}", r.relative_error());
    }
    Ok(format!("{accepted} accepted, {rejected} rejected with minimal-error candidate"))
}

fn load_statistics(_: &Context) -> Outcome {
    let grid = TimeGrid::from_spec(&Default::default())?;
    let params = LiveLoadParams::default();
    let seeds = 200u64;
    let (mut mean_sum, mut events) = (0.0, 0usize);
    for seed in 0..seeds {
        let lp = LoadProcess::realize(&grid, &params, DEAD_LOAD, seed)?;
        mean_sum += (0..lp.len()).map(|i| lp.live(i)).sum::<f64>() / lp.len() as f64;
        let spikes = load::realize_intermittent(&grid, &params, seed)?;
        require!(
            spikes.events.iter().all(|e| e.hours == reference::EVENT_HOURS),
            "seed {seed}: event duration differs from {} h",
            reference::EVENT_HOURS
        );
        events += spikes.events.len();
    }
    let mean = mean_sum / seeds as f64;
    let count = events as f64 / seeds as f64;
    // Poisson mean: horizon over the mean inter-arrival time.
    let poisson = grid.len() as f64 / (params.inv_nu * 8760.0);
    require!(rel(poisson, reference::EVENTS_3Y) < 1e-12, "Poisson mean {poisson}");
    require!(rel(mean, reference::Q_MEAN) <= 0.02, "mean live load {mean:.3} kN/m");
    require!(rel(count, poisson) <= 0.05, "mean event count {count:.2} vs {poisson}");
    Ok(format!("mean p_Q {mean:.3} kN/m, {count:.2} events per 3 years, all 120 h"))
}

fn corrosion_anchor(ctx: &Context) -> Outcome {
    let params = CorrosionParams::default();
    let drivers = ctx.scenario.drivers;
    let d1 = corrosion_depth(1.0, &params, &drivers, 1.0)?;
    let d100 = corrosion_depth(100.0, &params, &drivers, 1.0)?;
    let loss = d100 / 1000.0 / IpeSection::IPE400.t_f;
    require!(rel(d1, reference::CORROSION_1Y_UM) <= 0.005, "1-year depth {d1:.3} µm");
    require!(rel(loss, reference::FLANGE_LOSS_100Y) <= 0.10, "100-year flange loss {loss:.3}");
    Ok(format!("{d1:.3} µm after 1 year, {:.1} % flange loss after 100 years", 100.0 * loss))
}

fn corpus_contracts(ctx: &Context) -> Outcome {
    let root = ctx.month()?;
    let name_re = Regex::new(r"^acc\d{5}-\d\d?\.h5$")?;
    let mut files = 0usize;
    let mut sizes = Vec::new();
    for code in SubDataset::ALL {
        for entry in fs::read_dir(root.join(code.code()))? {
            let path = entry?.path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            require!(name_re.is_match(&name), "bad file name {name}");
            let (index, c) = io::parse_file_name(&name).ok_or("unparsable name")?;
            require!(c == code, "{name} in {}", code.code());
            let file = hdf5::File::open(&path)?;
            require!(file.member_names()? == vec![io::DATASET_KEY.to_owned()], "{name}: members {:?}", file.member_names()?);
            let ds = file.dataset(io::DATASET_KEY)?;
            require!(ds.dtype()?.is::<f32>(), "{name}: not float32");
            let rec = io::read_acceleration(&path)?;
            require!(rec.samples.len() == reference::SAMPLES, "{name}: {} samples", rec.samples.len());
            require!(rec.index as usize == index, "{name}: stored index {}", rec.index);
            sizes.push(fs::metadata(&path)?.len() as f64);
            files += 1;
        }
    }
    let mean_size = sizes.iter().sum::<f64>() / sizes.len() as f64;
    require!(rel(mean_size, reference::FILE_BYTES) <= 0.05, "mean file size {mean_size:.0} B");

    let table = io::read_table(&root.join(DEFLECTION_FILE))?;
    let mut header = vec!["index".to_owned()];
    header.extend(SubDataset::ALL.iter().map(|c| c.code().to_owned()));
    require!(table.header == header, "deflection header {:?}", table.header);
    require!(table.rows.len() == ctx.scenario.len(), "{} deflection rows", table.rows.len());
    let p = root.join(DEFLECTION_FILE);
    require!(table.numeric("D4", &p)? == table.numeric("D1", &p)?, "D4 column differs from D1");
    Ok(format!("{files} files, mean size {:.1} kB, deflection matrix aligned", mean_size / 1000.0))
}

fn fault_algebra(ctx: &Context) -> Outcome {
    let s = &ctx.scenario;
    let fs_hz = s.config.excitation.fs;
    let root = ctx.month()?;
    let d1 = s.subdataset(SubDataset::D1)?;
    let km = build_km_matrix(s, &d1.damage)?;
    let generator = Generator::new(s.config.excitation.clone())?;
    let clean_of = |i: usize| clean_record(s, &generator, &km, i).map(|r| r.samples);

    // Identity of zero parameters.
    let a = clean_of(ctx.window.start)?;
    let mut b = a.clone();
    let n = a.len();
    faults::inject_drift(&mut b, 0.0, 0..n, fs_hz)?;
    faults::inject_bias(&mut b, 0.0, 0..n)?;
    faults::inject_spikes(&mut b, 0.0, &[0, n / 2, n - 1])?;
    faults::inject_gain(&mut b, 1.0, 0..n)?;
    faults::inject_noise(&mut b, 0.0, 0..n, &mut shmbench::seed::rng(0, shmbench::seed::Stream::FaultApply, 0, 0))?;
    faults::inject_missing(&mut b, n / 2..n / 2)?;
    faults::inject_cable_detachment(&mut b, 0.1, 1.0, 0.03, n / 2..n / 2, fs_hz)?;
    require!(a == b, "zero-parameter injection changed the record");

    // Locality and separability over every planned label in the window.
    let mut per_class = std::collections::BTreeMap::<FaultClass, usize>::new();
    for code in [SubDataset::D4, SubDataset::D5] {
        let run = s.subdataset(code)?;
        let bound = run.spec.fault_policy.as_ref().ok_or("no policy")?.fraction;
        let share = run.faults.len() as f64 / run.acquisitions.len() as f64;
        require!(share <= bound, "{code}: contaminated share {share:.3} > {bound}");
        let km_code = build_km_matrix(s, &run.damage)?;
        for label in run.faults.labels.iter().filter(|l| ctx.window.contains(&l.index)) {
            let clean = clean_record(s, &generator, &km_code, label.index)?.samples;
            let dirty = final_samples(s, &clean_record_stub(&clean, label.index), Some(label))?;
            let w = label.window();
            let outside_same = (0..n).filter(|k| !w.contains(k)).all(|k| dirty[k].to_bits() == clean[k].to_bits());
            require!(outside_same, "{code} #{}: {:?} changed samples outside its window", label.index, label.class());
            let ranges = &s.config.sampled_faults.ranges;
            require!(
                faults::separates(label.class(), &clean, &dirty, w, fs_hz, ranges),
                "{code} #{}: {:?} not separable",
                label.index,
                label.class()
            );
            *per_class.entry(label.class()).or_default() += 1;
        }
    }
    require!(per_class.len() == FaultClass::ALL.len(), "classes seen {:?}", per_class.keys());

    // Label-guided regeneration against the written corpus.
    let run = s.subdataset(SubDataset::D4)?;
    let labels = io::read_table(&root.join("labels").join("faults_D4.txt"))?;
    let in_window: Vec<_> = run.faults.labels.iter().filter(|l| ctx.window.contains(&l.index)).collect();
    require!(labels.rows.len() == in_window.len(), "{} label rows vs {} planned", labels.rows.len(), in_window.len());
    for (row, l) in labels.rows.iter().zip(&in_window) {
        let expect = [l.index.to_string(), l.class().tag().to_owned(), l.params.summary(), l.t_start.to_string(), l.t_end.to_string()];
        require!(row[..] == expect[..], "label row {row:?} vs plan {expect:?}");
    }
    let mut restored = 0;
    for &i in run.acquisitions.iter().filter(|i| ctx.window.contains(i)) {
        let d4 = io::read_acceleration(&root.join("D4").join(io::file_name(i, SubDataset::D4)))?;
        let d1 = io::read_acceleration(&root.join("D1").join(io::file_name(i, SubDataset::D1)))?;
        let clean = clean_of(i)?;
        let clean32: Vec<u32> = clean.iter().map(|&v| (v as f32).to_bits()).collect();
        require!(clean32 == d1.samples.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), "#{i}: regenerated clean record differs");
        let dirty = final_samples(s, &clean_record_stub(&clean, i), run.faults.get(i))?;
        let dirty32: Vec<u32> = dirty.iter().map(|&v| (v as f32).to_bits()).collect();
        require!(dirty32 == d4.samples.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), "#{i}: regenerated D4 record differs");
        restored += 1;
    }
    Ok(format!(
        "identity, locality and separability over {} labels; {restored} D4 records regenerated bit-exactly",
        per_class.values().sum::<usize>()
    ))
}

fn clean_record_stub(samples: &[f64], index: usize) -> shmbench::dynamics::AccelerationRecord {
    shmbench::dynamics::AccelerationRecord {
        index,
        samples: samples.to_vec(),
        attempts: 1,
        selected_attempt: 0,
        f_extracted: f64::NAN,
        f_analytical: f64::NAN,
        accepted: false,
        sigma_human: 0.0,
        sigma_traffic: 0.0,
    }
}

fn determinism(ctx: &Context) -> Outcome {
    let first = ctx.month()?;
    let second = ctx.generate("month-4", ctx.window.clone(), 4)?;
    let a = Manifest::read(first)?;
    let b = Manifest::read(&second)?;
    require!(a == b, "one-month manifests differ between 1 and 4 workers");
    a.verify(first)?;

    let mut runner = TestRunner::new(Config {
        cases: 3,
        failure_persistence: None,
        ..Config::default()
    });
    let n = ctx.scenario.len();
    let onset = ctx.scenario.onset;
    let strategy = (onset..n - 24, 1usize..=4, 1usize..=4);
    let case = std::sync::atomic::AtomicUsize::new(0);
    runner
        .run(&strategy, |(start, wa, wb)| {
            let case = case.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            let w = start..start + 12;
            let x = ctx.generate(&format!("p{case}a"), w.clone(), wa).map_err(TestCaseError::fail)?;
            let y = ctx.generate(&format!("p{case}b"), w, wb).map_err(TestCaseError::fail)?;
            let mx = Manifest::read(&x).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let my = Manifest::read(&y).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(mx, my);
            let _ = fs::remove_dir_all(&x);
            let _ = fs::remove_dir_all(&y);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{} files identical across worker counts; 3 random windows agree", a.files.len()))
}

fn main() -> ExitCode {
    let ctx = Context::new();
    let criteria: [(&str, Criterion); 9] = [
        ("static limit values", static_limits),
        ("plastic decay rate", plastic_decay),
        ("frequency-stiffness law", frequency_stiffness),
        ("retry contract", retry_contract),
        ("load process statistics", load_statistics),
        ("corrosion anchor", corrosion_anchor),
        ("corpus contracts", corpus_contracts),
        ("fault-injection algebra", fault_algebra),
        ("determinism", determinism),
    ];
    // Optional criterion numbers restrict the run.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        ran += 1;
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&ctx)))
            .unwrap_or_else(|p| Err(format!("panic: {:?}", p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))).into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {e}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
