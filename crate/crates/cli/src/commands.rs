use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;
use tergmix::netseries::{labels_to_tsv, load_labels, load_series, to_long_tsv};
use tergmix::varem::FitDocument;
use tergmix::{fit as fit_series, instability_stats, rand_index, rse, ModelSpec, NetworkSeries, Params, Preset, SimConfig};

use crate::args::{
    parse_model, required, resolve, usage_error, FitArgs, InstabilityArgs, MetricsArgs, SelectArgs, SeriesArgs,
    SimulateArgs,
};
use crate::output::Outputs;

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(j) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn load(series: &SeriesArgs) -> Result<NetworkSeries> {
    let path = series.path();
    load_series(&path, series.format()?, series.load_options())
        .with_context(|| format!("loading series from {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn simulate(cli: SimulateArgs) -> Result<()> {
    let args = resolve(&cli, cli.config.as_deref())?;
    let seed = required(&args.seed, "--seed");
    let out = required(&args.out, "--out");
    let sim = match (&args.preset, &args.simulation) {
        (Some(_), Some(_)) => bail!("give either --preset or a `simulation` block in --config, not both"),
        (None, None) => usage_error("the following required argument was not provided: --preset"),
        (Some(name), None) => {
            let preset: Preset = name.parse()?;
            if let (Some(expected), Some(actual)) = (&args.model, preset.model()) {
                if expected.parse::<tergmix::ModelKind>()? != actual {
                    bail!("preset {} is a {} design, not {expected}", preset.name(), actual.name());
                }
            }
            preset.config(seed)
        }
        (None, Some(sim)) => sim.clone().with_seed(seed),
    };
    let (series, z) = sim.simulate()?;

    let mut outputs = Outputs::create(&out)?;
    outputs.write("series.tsv", to_long_tsv(&series))?;
    outputs.write("labels.tsv", labels_to_tsv(&z))?;
    if let SimConfig::Mixture(c) = &sim {
        outputs.write_json(
            "truth.json",
            &json!({ "model": c.model, "pi": c.pi, "theta": c.theta }),
        )?;
    }
    outputs.finish("simulate", json!({ "args": args, "simulation": sim }))
}

pub fn fit(cli: FitArgs) -> Result<()> {
    let args = resolve(&cli, cli.config.as_deref())?;
    let kind = parse_model(&args.estimation.model)?;
    let k = required(&args.k, "--k");
    let config = args.estimation.fit_config();
    let out = required(&args.out, "--out");
    set_jobs(args.estimation.jobs)?;
    let series = load(&args.series)?;
    let spec = ModelSpec::new(kind, k)?;
    let result = fit_series(&series, &spec, &config)?;
    if !result.converged {
        log::warn!("fit stopped at max_iter = {} before converging", config.max_iter);
    }

    let mut outputs = Outputs::create(&out)?;
    outputs.write_json("fit.json", &result.to_document())?;
    outputs.write("labels.tsv", labels_to_tsv(&result.labels))?;
    outputs.finish("fit", json!({ "args": args, "fit_config": config }))
}

pub fn select(cli: SelectArgs) -> Result<()> {
    let args = resolve(&cli, cli.config.as_deref())?;
    let kind = parse_model(&args.estimation.model)?;
    let config = args.estimation.fit_config();
    let (k_min, k_max) = (args.k_min.unwrap_or(1), args.k_max.unwrap_or(6));
    if k_min == 0 || k_min > k_max {
        bail!("need 1 <= --k-min <= --k-max, got {k_min}..{k_max}");
    }
    let out = required(&args.out, "--out");
    set_jobs(args.estimation.jobs)?;
    let series = load(&args.series)?;
    let selection = tergmix::select(&series, kind, k_min..=k_max, &config)?;

    let mut outputs = Outputs::create(&out)?;
    outputs.write_json("selection.json", &selection.report)?;
    outputs.write("selection.tsv", selection.report.to_tsv())?;
    for f in &selection.fits {
        outputs.write_json(&format!("fit_k{}.json", f.spec.k), &f.to_document())?;
    }
    let chosen = selection
        .fit_for(selection.report.chosen_k_clbic)
        .expect("chosen K was fitted");
    outputs.write("labels.tsv", labels_to_tsv(&chosen.labels))?;
    outputs.finish("select", json!({ "args": args, "fit_config": config }))
}

pub fn metrics(cli: MetricsArgs) -> Result<()> {
    let args = resolve(&cli, cli.config.as_deref())?;
    let truth = load_labels(&required(&args.truth, "--truth"))?;
    let out = required(&args.out, "--out");
    let fit: Option<FitDocument> = args.fit.as_deref().map(read_json).transpose()?;
    let estimate = match (&args.labels, &fit) {
        (Some(path), _) => load_labels(path)?,
        (None, Some(doc)) => doc.labels.iter().map(|&l| l - 1).collect(),
        (None, None) => usage_error("the following required argument was not provided: --labels or --fit"),
    };
    let ri = rand_index(&truth, &estimate)?;
    let rse_report = match (&fit, &args.truth_params) {
        (Some(doc), Some(path)) => {
            let params: Params = read_json(path)?;
            Some(rse(&doc.pi, &params.pi, &doc.theta, &params.theta)?)
        }
        (None, Some(_)) => bail!("--truth-params needs --fit for the estimates"),
        _ => None,
    };

    let mut outputs = Outputs::create(&out)?;
    outputs.write_json("metrics.json", &json!({ "rand_index": ri, "rse": rse_report }))?;
    outputs.finish("metrics", json!({ "args": args }))
}

pub fn instability(cli: InstabilityArgs) -> Result<()> {
    let args = resolve(&cli, cli.config.as_deref())?;
    let labels = load_labels(&required(&args.labels, "--labels"))?;
    let out = required(&args.out, "--out");
    let series = load(&args.series)?;
    let k = args
        .k
        .unwrap_or_else(|| labels.iter().copied().max().map_or(1, |m| m + 1));
    let report = instability_stats(&series, &labels, k)?;

    let mut outputs = Outputs::create(&out)?;
    outputs.write("instability.tsv", report.to_tsv())?;
    outputs.write_json("instability.json", &report)?;
    outputs.finish("instability", json!({ "args": args }))
}
