use std::path::Path;

use anyhow::{anyhow, bail, Result};
use plotters::coord::Shift;
use plotters::prelude::*;
use serde_json::json;
use shmbench::dynamics::{colored_input, record_psd, Generator};
use shmbench::environment::youngs_modulus;
use shmbench::faults::{self, FaultPolicy};
use shmbench::pipeline::{build_km_matrix, clean_record, deflection_matrix};
use shmbench::seed::{self, Stream};
use shmbench::signal::{welch, Psd};
use shmbench::{io, Scenario, SubDataset};

use crate::{load_config, report, Figure, PlotArgs};

struct Series {
    name: String,
    y: Vec<f64>,
}

struct Panel<'a> {
    title: &'a str,
    x_label: &'a str,
    y_label: &'a str,
    x: Vec<f64>,
    series: Vec<Series>,
}

impl Panel<'_> {
    fn points(&self) -> usize {
        self.series.first().map_or(0, |s| s.y.len())
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn draw(area: &DrawingArea<SVGBackend<'_>, Shift>, panel: &Panel<'_>) -> Result<()> {
    let (x0, x1) = bounds(panel.x.iter().copied());
    let (y0, y1) = bounds(panel.series.iter().flat_map(|s| s.y.iter().copied()));
    let mut chart = ChartBuilder::on(area)
        .caption(panel.title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc(panel.x_label)
        .y_desc(panel.y_label)
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    for (k, s) in panel.series.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        // NaN samples split the line into segments.
        let mut segment = Vec::new();
        let mut labelled = false;
        for (&x, &y) in panel.x.iter().zip(&s.y) {
            if y.is_finite() {
                segment.push((x, y));
                continue;
            }
            if !segment.is_empty() {
                let ann = chart
                    .draw_series(LineSeries::new(std::mem::take(&mut segment), color))
                    .map_err(|e| anyhow!("{e}"))?;
                if !labelled {
                    ann.label(s.name.as_str())
                        .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
                    labelled = true;
                }
            }
        }
        if !segment.is_empty() || !labelled {
            let ann = chart
                .draw_series(LineSeries::new(segment, color))
                .map_err(|e| anyhow!("{e}"))?;
            if !labelled {
                ann.label(s.name.as_str())
                    .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
            }
        }
    }
    if panel.series.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
    }
    Ok(())
}

fn render(path: &Path, panels: &[Panel<'_>]) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if !ext.eq_ignore_ascii_case("svg") {
        bail!("unsupported figure format {ext:?}; only .svg is written");
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let height = 420 * panels.len() as u32;
    let root = SVGBackend::new(path, (1000, height)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
    for (area, panel) in root.split_evenly((panels.len(), 1)).iter().zip(panels) {
        draw(area, panel)?;
    }
    root.present().map_err(|e| anyhow!("{e}"))?;
    Ok(())
}

fn hours(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

fn psd_panel<'a>(title: &'a str, psds: Vec<(String, Psd)>, f_max: f64) -> Panel<'a> {
    let keep = psds[0].1.freqs.iter().take_while(|&&f| f <= f_max).count();
    Panel {
        title,
        x_label: "frequency [Hz]",
        y_label: "PSD [dB]",
        x: psds[0].1.freqs[..keep].to_vec(),
        series: psds
            .into_iter()
            .map(|(name, p)| Series {
                name,
                y: p.power[..keep].iter().map(|&v| 10.0 * v.max(1e-30).log10()).collect(),
            })
            .collect(),
    }
}

fn load(scenario: &Scenario) -> Vec<Panel<'static>> {
    let l = &scenario.loads;
    let live: Vec<f64> = (0..l.p_des.len()).map(|i| l.live(i)).collect();
    vec![Panel {
        title: "Live and design load",
        x_label: "hour",
        y_label: "load [kN/m]",
        x: hours(live.len()),
        series: vec![
            Series {
                name: "live".into(),
                y: live,
            },
            Series {
                name: "design".into(),
                y: l.p_des.clone(),
            },
        ],
    }]
}

fn modulus(scenario: &Scenario) -> Result<Vec<Panel<'static>>> {
    let t: Vec<f64> = (0..=140).map(|k| -20.0 + 0.5 * k as f64).collect();
    let e = t
        .iter()
        .map(|&t| youngs_modulus(t, &scenario.config.env).map(|e| e / 1e3))
        .collect::<shmbench::Result<Vec<_>>>()?;
    Ok(vec![Panel {
        title: "Young's modulus against temperature",
        x_label: "temperature [°C]",
        y_label: "E [GPa]",
        x: t,
        series: vec![Series { name: "E(T)".into(), y: e }],
    }])
}

fn spectrum(scenario: &Scenario, args: &PlotArgs) -> Result<Vec<Panel<'static>>> {
    let params = &scenario.config.excitation;
    let (name, signal, fs) = match &args.file {
        Some(p) => {
            let rec = io::read_acceleration(p)?;
            let x = rec.samples.iter().map(|&v| if v.is_finite() { v as f64 } else { 0.0 }).collect();
            (p.display().to_string(), x, rec.fs)
        }
        None => {
            let mut rng = seed::rng(scenario.config.master_seed, Stream::Excitation, args.index as u64, 0);
            let u = colored_input(params, &mut rng)?;
            (format!("input #{}", args.index), u.signal, params.fs)
        }
    };
    let psd = welch(&signal, fs, 4096.min(signal.len()))?;
    Ok(vec![psd_panel("Spectrum", vec![(name, psd)], 25.0)])
}

fn deflection(scenario: &Scenario) -> Result<Vec<Panel<'static>>> {
    let cols = deflection_matrix(scenario)?;
    Ok(vec![Panel {
        title: "Midspan deflection",
        x_label: "hour",
        y_label: "deflection [mm]",
        x: hours(cols[0].len()),
        series: SubDataset::ALL
            .iter()
            .zip(cols)
            .filter(|(c, _)| **c != SubDataset::D4)
            .map(|(c, y)| Series {
                name: c.code().into(),
                y,
            })
            .collect(),
    }])
}

fn fault(scenario: &Scenario, args: &PlotArgs) -> Result<Vec<Panel<'static>>> {
    let excitation = &scenario.config.excitation;
    let policy = FaultPolicy {
        classes: vec![args.class],
        fraction: 1.0,
        target_count: None,
        ..scenario.config.sampled_faults.clone()
    };
    let span = policy.run_length.1.max(1);
    let first = args.index.min(scenario.len().saturating_sub(span));
    let corpus: Vec<usize> = (first..first + span).collect();
    let plan = faults::plan_contamination(&corpus, &policy, excitation.n_samples(), excitation.fs, scenario.config.master_seed)?;
    let label = plan.labels.first().ok_or_else(|| anyhow!("policy produced no label"))?;

    let run = scenario.subdataset(SubDataset::D1)?;
    let km = build_km_matrix(scenario, &run.damage)?;
    let generator = Generator::new(excitation.clone())?;
    let clean = clean_record(scenario, &generator, &km, label.index)?.samples;
    let mut dirty = clean.clone();
    faults::apply(&mut dirty, label, excitation.fs, scenario.config.master_seed)?;

    let t: Vec<f64> = (0..clean.len()).map(|k| k as f64 / excitation.fs).collect();
    let zeroed: Vec<f64> = dirty.iter().map(|&v| if v.is_finite() { v } else { 0.0 }).collect();
    let psds = vec![
        ("clean".to_owned(), record_psd(&clean, excitation)?),
        (format!("fault {}", args.class.tag()), record_psd(&zeroed, excitation)?),
    ];
    Ok(vec![
        Panel {
            title: "Time domain",
            x_label: "time [s]",
            y_label: "acceleration [m/s²]",
            x: t,
            series: vec![
                Series {
                    name: "clean".into(),
                    y: clean,
                },
                Series {
                    name: format!("fault {}", args.class.tag()),
                    y: dirty,
                },
            ],
        },
        psd_panel("Frequency domain", psds, 25.0),
    ])
}

pub fn run(args: &PlotArgs, json: bool) -> Result<bool> {
    let ext_ok = args
        .out
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("svg"));
    if !ext_ok {
        bail!("unsupported figure format for {}; only .svg is written", args.out.display());
    }
    let config = load_config(args.config.as_ref(), args.seed)?;
    let scenario = Scenario::realize(config)?;
    let panels = match args.figure {
        Figure::Load => load(&scenario),
        Figure::Modulus => modulus(&scenario)?,
        Figure::Spectrum => spectrum(&scenario, args)?,
        Figure::Deflection => deflection(&scenario)?,
        Figure::Fault => fault(&scenario, args)?,
    };
    render(&args.out, &panels)?;
    let points: Vec<usize> = panels.iter().map(Panel::points).collect();
    let value = json!({ "written": args.out, "panels": panels.len(), "points": points });
    report(json, &value, || {
        println!("wrote {} ({} panel(s), {:?} points)", args.out.display(), panels.len(), points)
    });
    Ok(true)
}
