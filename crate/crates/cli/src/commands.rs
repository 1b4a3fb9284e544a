use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rmm_core::data::{self, LongColumns, ReadOptions, WideColumns};
use rmm_core::prediction::{self, DecisionMode};
use rmm_core::synthetic::{self, ScenarioSpec};
use rmm_core::{estimation, report, ErrorKind, FittedModel, RmmError, SetCode, TransactionDataset};

use crate::cli::{Cli, Command, FitArgs, PredictArgs, ReshapeArgs, SimulateArgs};

#[derive(Debug)]
pub struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<RmmError> for CliError {
    fn from(e: RmmError) -> Self {
        let code = match e.kind() {
            ErrorKind::Schema => 2,
            ErrorKind::Validation => 3,
            ErrorKind::Numeric => 4,
            ErrorKind::Io => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: 1,
        message: format!("{}: {e}", path.display()),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_error(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Reshape(args) => run_reshape(args),
        Command::Fit(args) => run_fit(args),
        Command::Predict(args) => run_predict(args),
        Command::Simulate(args) => run_simulate(args),
    }
}

fn run_reshape(args: ReshapeArgs) -> Result<(), CliError> {
    let opts = ReadOptions {
        delimiter: args.io.delimiter,
        dedup: args.dedup,
    };
    let source = open(&args.io.input)?;
    let wide_flags = [
        ("--alts-code", &args.alts_code),
        ("--choice-set", &args.choice_set),
        ("--choice-set-code", &args.choice_set_code),
    ];
    let raw = if wide_flags.iter().any(|(_, v)| v.is_some()) {
        if let Some((flag, _)) = wide_flags.iter().find(|(_, v)| v.is_none()) {
            return Err(CliError::usage(format!("wide input requires {flag}")));
        }
        let cols = WideColumns {
            idvar: args.idvar,
            resp: args.resp,
            alts: args.alts,
            asv: args.asv,
            alts_code: args.alts_code.unwrap_or_default(),
            choice_set: args.choice_set.unwrap_or_default(),
            choice_set_code: args.choice_set_code.unwrap_or_default(),
        };
        data::parse_wide(source, &cols, &opts)?
    } else {
        let cols = LongColumns {
            idvar: args.idvar,
            resp: args.resp,
            alts: args.alts,
            asv: args.asv,
        };
        data::parse_long(source, &cols, &opts)?
    };
    let dataset = data::reshape(&raw, args.min_obs as usize)?;
    let mut out = create(&args.io.output)?;
    dataset.save(&mut out)?;
    out.flush().map_err(|e| io_error(&args.io.output, e))?;
    print!("{}", report::reshape_summary(&dataset));
    Ok(())
}

fn run_fit(args: FitArgs) -> Result<(), CliError> {
    if !(args.prop > 0.0 && args.prop < 1.0) {
        return Err(CliError::usage(format!(
            "prop must be in (0,1), got {}",
            args.prop
        )));
    }
    let dataset = TransactionDataset::load(open(&args.io.input)?)?;
    let fit = estimation::fit(&dataset, args.prop)?;
    let model = FittedModel::new(&dataset, fit);
    let mut out = create(&args.io.output)?;
    model.save(&mut out)?;
    out.flush().map_err(|e| io_error(&args.io.output, e))?;
    print!("{}", report::fit_report(&model));
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<(), CliError> {
    let model = FittedModel::load(open(&args.model)?)?;
    let set = model.set(SetCode(args.set_code))?;
    let rows = prediction::read_offer_rows(
        open(&args.io.input)?,
        &model.asv_names,
        set,
        args.io.delimiter,
    )?;
    let mode = if args.sampled {
        DecisionMode::Sampled { seed: args.seed }
    } else {
        DecisionMode::Fixed
    };
    let result = prediction::predict(
        &model,
        &rows,
        SetCode(args.set_code),
        mode,
        args.no_purchase,
    )?;
    let mut out = create(&args.io.output)?;
    prediction::write_predictions(&result, args.io.delimiter, &mut out)?;
    out.flush().map_err(|e| io_error(&args.io.output, e))?;
    print!("{}", report::prediction_report(&result));
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut spec = ScenarioSpec::load(open(&args.config)?)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    fs::create_dir_all(&args.output).map_err(|e| io_error(&args.output, e))?;
    let path = |name: &str| args.output.join(name);

    let sim = synthetic::generate(&spec)?;
    let mut out = create(&path("arrivals.csv"))?;
    synthetic::write_arrivals(&spec, &sim.arrivals, args.delimiter, &mut out)?;
    out.flush()
        .map_err(|e| io_error(&path("arrivals.csv"), e))?;

    let mut out = create(&path("censored.csv"))?;
    data::write_long(
        &sim.censored,
        &synthetic::long_columns(&spec),
        args.delimiter,
        &mut out,
    )?;
    out.flush()
        .map_err(|e| io_error(&path("censored.csv"), e))?;

    let summary = serde_json::json!({
        "arrivals": sim.arrivals.len(),
        "purchases": sim.n_purchases(),
        "realized_share": sim.realized_share,
        "true_share": spec.true_share(),
        "gamma": sim.gamma,
        "seed": spec.seed,
    });
    write_json(&path("summary.json"), &summary)?;
    println!(
        "arrivals {}, purchases {}, realized share {:.4}, gamma {:.4}",
        sim.arrivals.len(),
        sim.n_purchases(),
        sim.realized_share,
        sim.gamma
    );

    if let Some(reps) = args.replications {
        let study = synthetic::recovery_study(&spec, reps)?;
        let mut out = create(&path("recovery.csv"))?;
        synthetic::write_recovery_table(&study, args.delimiter, &mut out)?;
        out.flush()
            .map_err(|e| io_error(&path("recovery.csv"), e))?;
        write_json(
            &path("recovery_summary.json"),
            &serde_json::to_value(&study.summary).map_err(RmmError::from)?,
        )?;
        let s = &study.summary;
        println!(
            "replications {} (failed {}), beta 3-SE coverage {:?}, mean |gamma error| {:.4}",
            s.replications, s.failures, s.beta_coverage, s.mean_abs_gamma_error
        );
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(RmmError::from)?;
    writeln!(out).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}
