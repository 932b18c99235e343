//! The `ci` command line.
//!
//! Exit codes: 0 on success, 1 when an input is invalid or an analysis
//! fails, 2 on a usage error. Diagnostics go to standard error; reports go
//! to standard output or, with `--out`, to files.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ciflow_core::analysis::default_required;
use ciflow_core::crowd::{word_scores, ScreeningRule};
use ciflow_core::diff::MatchConfig;
use ciflow_core::{ParameterKind, ScoreReport};
use serde::Serialize;

use crate::bundle::Bundle;
use crate::error::{Error, Result};
use crate::lexicon::{default_lexicon, load_lexicon};
use crate::output::load_document;
use crate::replay::{
    aggregate_all, aggregate_tables, readability_tables, replay, replay_report, screen_all,
    screening_table, span_tables, word_score_table, ReplayConfig,
};
use crate::report::{Format, Report};
use crate::reports;

#[derive(Parser, Debug)]
#[command(name = "ci", version, about = "Contextual-integrity annotation analyses for privacy policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Report formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    format: Vec<Format>,
    /// Directory for report files; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace existing report files.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct CrowdArgs {
    /// Experiment bundle directory.
    bundle: PathBuf,
    /// Screening F1 threshold.
    #[arg(long, default_value_t = 0.7)]
    screen_threshold: f64,
    /// Kinds to score, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "sender,recipient,attribute,tp")]
    kinds: Vec<ParameterKind>,
    /// Share of a gold span's words a predicted span must cover to match.
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a document (standoff `.json` or inline markup) or a bundle directory.
    Validate { path: PathBuf },
    /// Parameter frequency and unique counts.
    Stats {
        doc: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Flows missing required parameters.
    Incomplete {
        doc: PathBuf,
        /// Required kinds, comma separated.
        #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
        required: Option<Vec<ParameterKind>>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Flows with several instances of one kind.
    Bloat {
        doc: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Flows using vague terms.
    Vagueness {
        doc: PathBuf,
        /// Lexicon JSON file replacing the built-in one.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Match parameters across two versions of a policy.
    Diff {
        previous: PathBuf,
        updated: PathBuf,
        /// Similarity thresholds, e.g. `sender=70,attribute=65,recipient=70,tp=55`.
        #[arg(long, value_parser = parse_thresholds)]
        thresholds: Option<Thresholds>,
        /// Matched pairs this close above the threshold are listed for review.
        #[arg(long, default_value_t = 5)]
        review_band: u8,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Majority-vote labels of qualified annotators.
    Aggregate {
        #[command(flatten)]
        crowd: CrowdArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Word-based precision, recall and F1 against gold.
    ScoreWords {
        #[command(flatten)]
        crowd: CrowdArgs,
        /// Score every response instead of the majority vote.
        #[arg(long)]
        per_annotator: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Span-based instance counts and the error ledger.
    ScoreSpans {
        #[command(flatten)]
        crowd: CrowdArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Screening outcome per annotator.
    Screen {
        #[command(flatten)]
        crowd: CrowdArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Excerpt readability and its correlation with majority-vote F1.
    Readability {
        #[command(flatten)]
        crowd: CrowdArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// The whole crowd pipeline over a bundle.
    Replay {
        #[command(flatten)]
        crowd: CrowdArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone)]
struct Thresholds(Vec<(ParameterKind, u8)>);

fn parse_kind(s: &str) -> std::result::Result<ParameterKind, String> {
    s.trim().parse().map_err(|e: ciflow_core::model::UnknownKind| e.to_string())
}

fn parse_thresholds(s: &str) -> std::result::Result<Thresholds, String> {
    let mut out = Vec::new();
    for item in s.split(',').filter(|i| !i.trim().is_empty()) {
        let (kind, value) = item
            .split_once('=')
            .ok_or_else(|| format!("`{item}` is not kind=percent"))?;
        let kind = parse_kind(kind)?;
        let value: u8 = value
            .trim()
            .parse()
            .ok()
            .filter(|v| *v <= 100)
            .ok_or_else(|| format!("`{value}` is not a percentage 0-100"))?;
        out.push((kind, value));
    }
    Ok(Thresholds(out))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn emit(report: Report, output: &OutputArgs, stdout: &mut dyn Write) -> Result<()> {
    report.emit(&output.format, output.out.as_deref(), output.force, stdout)
}

fn crowd_setup(args: &CrowdArgs) -> Result<(Bundle, ReplayConfig)> {
    let rule = ScreeningRule::new(args.screen_threshold)?;
    if !(args.overlap > 0.0 && args.overlap <= 1.0) {
        return Err(Error::Invalid(format!("--overlap {} is outside (0, 1]", args.overlap)));
    }
    let mut kinds = args.kinds.clone();
    kinds.sort();
    kinds.dedup();
    let bundle = Bundle::read_dir(&args.bundle)?;
    Ok((
        bundle,
        ReplayConfig {
            rule,
            kinds,
            overlap: args.overlap,
        },
    ))
}

fn plural(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

fn validate(path: &Path, stdout: &mut dyn Write) -> Result<()> {
    let line = if path.is_dir() {
        let bundle = Bundle::read_dir(path)?;
        format!(
            "OK, {}, {}",
            plural(bundle.excerpts.len(), "excerpt"),
            plural(bundle.responses.len(), "response")
        )
    } else {
        let doc = load_document(path)?;
        format!("OK, {}", plural(doc.flows().len(), "flow"))
    };
    let _ = writeln!(stdout, "{line}");
    Ok(())
}

#[derive(Serialize)]
struct Aggregates<'a> {
    qualified: &'a [String],
    aggregates: &'a [ciflow_core::crowd::AggregatedAnnotation],
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Validate { path } => validate(&path, stdout),
        Command::Stats { doc, output } => emit(reports::stats(&load_document(&doc)?), &output, stdout),
        Command::Incomplete { doc, required, output } => {
            let required: BTreeSet<ParameterKind> = match required {
                Some(kinds) => kinds.into_iter().collect(),
                None => default_required(),
            };
            emit(reports::incomplete(&load_document(&doc)?, &required)?, &output, stdout)
        }
        Command::Bloat { doc, output } => emit(reports::bloat(&load_document(&doc)?), &output, stdout),
        Command::Vagueness { doc, lexicon, output } => {
            let lexicon = match lexicon {
                Some(path) => load_lexicon(&path)?,
                None => default_lexicon(),
            };
            emit(reports::vagueness(&load_document(&doc)?, &lexicon), &output, stdout)
        }
        Command::Diff {
            previous,
            updated,
            thresholds,
            review_band,
            output,
        } => {
            let invalid = |e: ciflow_core::diff::MatchConfigError| Error::Invalid(e.to_string());
            let mut config = MatchConfig::default().with_review_band(review_band).map_err(invalid)?;
            for (kind, value) in thresholds.map(|t| t.0).unwrap_or_default() {
                config = config.with_threshold(kind, value).map_err(invalid)?;
            }
            let previous = load_document(&previous)?;
            let updated = load_document(&updated)?;
            emit(reports::diff(&previous, &updated, &config), &output, stdout)
        }
        Command::Aggregate { crowd, output } => {
            let (bundle, config) = crowd_setup(&crowd)?;
            let screening = screen_all(&bundle, &config)?;
            let qualified: Vec<String> =
                screening.iter().filter(|r| r.passed).map(|r| r.annotator_id.clone()).collect();
            let aggregates = aggregate_all(&bundle, &qualified)?;
            let tables = aggregate_tables(&aggregates, &config.kinds);
            let value = Aggregates {
                qualified: &qualified,
                aggregates: &aggregates,
            };
            emit(Report::new("aggregate", &value, tables), &output, stdout)
        }
        Command::ScoreWords {
            crowd,
            per_annotator,
            output,
        } => {
            let (bundle, config) = crowd_setup(&crowd)?;
            let rows: Vec<(String, String, ScoreReport)> = if per_annotator {
                let mut rows = Vec::new();
                for r in &bundle.responses {
                    let excerpt = bundle.excerpt(r.excerpt_id()).expect("bundle responses reference excerpts");
                    if let Some(gold) = excerpt.gold() {
                        let scores = word_scores(r, gold, excerpt, &config.kinds)?;
                        rows.push((r.excerpt_id().into(), r.annotator_id().into(), scores));
                    }
                }
                rows
            } else {
                replay(&bundle, &config)?
                    .word_scores
                    .into_iter()
                    .map(|w| (w.excerpt_id, "majority".into(), w.scores))
                    .collect()
            };
            let table = word_score_table("word_scores", &rows);
            emit(Report::new("score-words", &rows, vec![table]), &output, stdout)
        }
        Command::ScoreSpans { crowd, output } => {
            let (bundle, config) = crowd_setup(&crowd)?;
            let report = replay(&bundle, &config)?;
            let tables = span_tables(&bundle, &report.span_scores);
            emit(Report::new("score-spans", &report.span_scores, tables), &output, stdout)
        }
        Command::Screen { crowd, output } => {
            let (bundle, config) = crowd_setup(&crowd)?;
            let rows = screen_all(&bundle, &config)?;
            let table = screening_table(&rows);
            emit(Report::new("screen", &rows, vec![table]), &output, stdout)
        }
        Command::Readability { crowd, output } => {
            let (bundle, config) = crowd_setup(&crowd)?;
            let report = replay(&bundle, &config)?;
            let tables = readability_tables(&report.excerpt_stats, report.correlations.as_deref());
            let value = (&report.excerpt_stats, &report.correlations);
            emit(Report::new("readability", &value, tables), &output, stdout)
        }
        Command::Replay { crowd, output } => {
            let (bundle, config) = crowd_setup(&crowd)?;
            let report = replay(&bundle, &config)?;
            emit(replay_report(&bundle, &report, &config.kinds), &output, stdout)
        }
    }
}
