//! Command-line front end. The `targetspan` binary is a thin wrapper around
//! [`main_with_args`]; everything here writes its primary output to the
//! given writer (or `--out`) and diagnostics to the error writer.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::agreement::{pairwise_agreement, Annotations};
use crate::analysis::{error_report, Prediction};
use crate::bio::{corpus_tag_metrics, decode_bio, encode_bio, read_conll, write_conll, ConllSample};
use crate::corpus::{
    load_annotated, load_jsonl, split, stats, write_records, AltAveraging, AnnotatedSample, SampleRecord, SplitRatios,
};
use crate::error::{Error, Result};
use crate::llm::{
    run_pool, Annotator, ChatTransport, HttpTransport, ModelConfig, OfflineTransport, PromptTemplate, ResponseCache,
};
use crate::metrics::{average, f1_m, Averaging, MatchMode};
use crate::pooling::{annotator_vs_pool, rank_pool, select_best, CandidateId, CandidatePool, RankedCandidates};
use crate::span::{merge_union, tokenize, SpanSet, TokenizedContent};

#[derive(Debug, Parser)]
#[command(name = "targetspan", version, about = "Target span annotation and evaluation toolkit")]
pub struct Cli {
    /// TOML file with one table per subcommand; its values sit under the flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for per-sample work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the whitespace tokenization of a text or of every JSONL record.
    Tokenize(TokenizeArgs),
    /// Partial-match F1_M of predicted spans against gold spans.
    Eval(EvalArgs),
    /// Entity-level precision/recall/F1 and token accuracy of BIO files.
    TagEval(TagEvalArgs),
    /// Convert between JSONL span records and CoNLL BIO files.
    Convert(ConvertArgs),
    /// Pairwise annotator agreement (DSC and LCS).
    Agree(AgreeArgs),
    /// Rank annotation systems in a pool file against gold annotations.
    PoolRank(PoolRankArgs),
    /// Pick the top system from a ranking or score table.
    PoolSelect(PoolSelectArgs),
    /// Annotate samples with chat-completion models and prompts.
    Annotate(AnnotateArgs),
    /// Targets per content (TPC) and average target length (ALT).
    Stats(StatsArgs),
    /// Seeded train/dev/test split of a JSONL file.
    Split(SplitArgs),
    /// Boundary and span-count error analysis of predictions.
    ErrorReport(ErrorReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Strict,
    Coverage,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => MatchMode::Strict,
            ModeArg::Coverage => MatchMode::Coverage,
        }
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["text", "input"]))]
pub struct TokenizeArgs {
    #[arg(long)]
    pub text: Option<String>,
    /// JSONL file; every record's text is tokenized.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Gold JSONL. Records sharing an id (several annotators) are unioned.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_enum, default_value = "strict")]
    pub mode: ModeArg,
    /// Pool PM scores over the corpus instead of averaging per sample.
    #[arg(long)]
    pub micro: bool,
    /// Append one row per sample.
    #[arg(long)]
    pub per_sample: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TagEvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Jsonl,
    Conll,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the input's extension.
    #[arg(long, value_enum)]
    pub from: Option<FileFormat>,
    #[arg(long, value_enum)]
    pub to: FileFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    /// Annotation files. The annotator is the record's `source`, or the file
    /// stem when `source` is empty.
    #[arg(required = true, num_args = 1..)]
    pub files: Vec<PathBuf>,
    /// Also score every annotator against the union of all annotators.
    #[arg(long)]
    pub vs_aggregate: bool,
    #[arg(long, value_enum, default_value = "strict")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PoolRankArgs {
    /// Gold annotation files; spans for the same id are unioned across files
    /// and sources.
    #[arg(long, required = true, num_args = 1..)]
    pub gold: Vec<PathBuf>,
    /// Candidate outputs; `source` is `system/prompt`.
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long, value_enum, default_value = "strict")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PoolSelectArgs {
    /// TSV with `system`, `prompt` and `f1_m` columns.
    #[arg(long)]
    pub ranking: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// JSONL samples; their spans are the gold for the pool.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value = "https://api.openai.com/v1")]
    pub endpoint: String,
    /// Model name; repeat for several models.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    /// JSON array of `{id, instruction[, format_suffix]}`; defaults to the
    /// two built-in prompts.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    #[arg(long, default_value = ".targetspan-cache")]
    pub cache_dir: PathBuf,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    pub api_key_env: String,
    /// Never touch the network; uncached triples fail.
    #[arg(long)]
    pub offline: bool,
    /// Pool JSONL output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Failure manifest (JSONL).
    #[arg(long)]
    pub failures: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AltArg {
    Pooled,
    PerSample,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "pooled")]
    pub alt: AltArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `train,dev,test`.
    #[arg(long, default_value = "0.8,0.1,0.1", value_parser = parse_ratios)]
    pub ratios: SplitRatios,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for train.jsonl, dev.jsonl and test.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Tsv,
    Text,
}

#[derive(Debug, Args)]
pub struct ErrorReportArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: ReportFormat,
    /// Free-text notes stored in the report.
    #[arg(long, default_value = "")]
    pub notes: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_ratios(s: &str) -> std::result::Result<SplitRatios, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [train, dev, test] => SplitRatios::new(train, dev, test).map_err(|e| e.to_string()),
        _ => Err("expected three comma-separated ratios".into()),
    }
}

/// Parse `args` (including the program name) and run. Returns the process
/// exit code: 0 success, 1 validation or I/O error, 2 usage error.
pub fn main_with_args<W: Write, E: Write>(args: Vec<OsString>, stdout: &mut W, stderr: &mut E) -> i32 {
    let args = match with_config_defaults(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let command = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let cli = match command.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let _ = writeln!(stderr, "resolved: {:?}", cli.command);
    match run(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

const SUBCOMMANDS: &[&str] = &[
    "tokenize",
    "eval",
    "tag-eval",
    "convert",
    "agree",
    "pool-rank",
    "pool-select",
    "annotate",
    "stats",
    "split",
    "error-report",
];

/// Splice `--key value` pairs from the config file's table for the chosen
/// subcommand right after the subcommand name, so explicit flags (which come
/// later) override them.
fn with_config_defaults(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<Option<&str>> = args.iter().map(|a| a.to_str()).collect();
    let mut config: Option<PathBuf> = None;
    for (i, a) in strs.iter().enumerate() {
        match a {
            Some("--config") => config = args.get(i + 1).map(PathBuf::from),
            Some(s) if s.starts_with("--config=") => config = Some(PathBuf::from(&s["--config=".len()..])),
            _ => {}
        }
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let Some(sub_at) = strs.iter().position(|a| a.is_some_and(|a| SUBCOMMANDS.contains(&a))) else {
        return Ok(args);
    };
    let sub = strs[sub_at].unwrap();
    let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let table: toml::Table = raw.parse().map_err(|e: toml::de::Error| Error::Parse {
        path: path.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    let Some(section) = table.get(sub) else {
        return Ok(args);
    };
    let section =
        section.as_table().ok_or_else(|| Error::input(format!("{}: [{sub}] must be a table", path.display())))?;

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in section {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                toml::Value::Float(f) => Ok(f.to_string()),
                other => Err(Error::input(format!("{}: unsupported value for {key}: {other}", path.display()))),
            }
        };
        match value {
            toml::Value::Boolean(true) => injected.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for item in items {
                    injected.push(flag.clone().into());
                    injected.push(scalar(item)?.into());
                }
            }
            v => {
                injected.push(flag.into());
                injected.push(scalar(v)?.into());
            }
        }
    }
    let mut out = args;
    out.splice(sub_at + 1..sub_at + 1, injected);
    Ok(out)
}

/// Execute a parsed command.
pub fn run<W: Write, E: Write>(cli: &Cli, stdout: &mut W, stderr: &mut E) -> Result<()> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build().map_err(|e| Error::input(e.to_string()))?;
    dispatch(&cli.command, &pool, stdout, stderr)
}

fn dispatch<W: Write, E: Write>(
    command: &Command,
    pool: &rayon::ThreadPool,
    stdout: &mut W,
    stderr: &mut E,
) -> Result<()> {
    match command {
        Command::Tokenize(a) => emit(a.out.as_deref(), stdout, |w| cmd_tokenize(a, w)),
        Command::Eval(a) => emit(a.out.as_deref(), stdout, |w| cmd_eval(a, pool, w)),
        Command::TagEval(a) => emit(a.out.as_deref(), stdout, |w| cmd_tag_eval(a, w, stderr)),
        Command::Convert(a) => emit(a.out.as_deref(), stdout, |w| cmd_convert(a, w, stderr)),
        Command::Agree(a) => emit(a.out.as_deref(), stdout, |w| cmd_agree(a, w)),
        Command::PoolRank(a) => emit(a.out.as_deref(), stdout, |w| cmd_pool_rank(a, pool, w)),
        Command::PoolSelect(a) => emit(a.out.as_deref(), stdout, |w| cmd_pool_select(a, w)),
        Command::Annotate(a) => emit(a.out.as_deref(), stdout, |w| cmd_annotate(a, w, stderr)),
        Command::Stats(a) => emit(a.out.as_deref(), stdout, |w| cmd_stats(a, w)),
        Command::Split(a) => cmd_split(a, stdout, stderr),
        Command::ErrorReport(a) => emit(a.out.as_deref(), stdout, |w| cmd_error_report(a, w)),
    }
}

/// Run `body` against `--out` when given, otherwise against stdout.
fn emit<W: Write>(out: Option<&Path>, stdout: &mut W, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        None => {
            body(stdout)?;
            stdout.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn cmd_tokenize(a: &TokenizeArgs, w: &mut dyn Write) -> Result<()> {
    let items: Vec<(String, TokenizedContent)> = match (&a.text, &a.input) {
        (Some(text), _) => vec![("-".to_string(), tokenize(text))],
        (None, Some(path)) => load_annotated(path)?.into_iter().map(|s| (s.id, s.content)).collect(),
        (None, None) => unreachable!("clap requires --text or --input"),
    };
    writeln!(w, "id\tindex\ttoken\tchar_start\tchar_end").map_err(io_out)?;
    for (id, content) in &items {
        for (i, t) in content.tokens().iter().enumerate() {
            writeln!(w, "{id}\t{i}\t{}\t{}\t{}", t.surface, t.char_start, t.char_end).map_err(io_out)?;
        }
    }
    Ok(())
}

/// Samples grouped by id; spans kept per source.
#[derive(Default)]
struct Grouped {
    contents: BTreeMap<String, TokenizedContent>,
    /// source → id → spans
    by_source: BTreeMap<String, BTreeMap<String, SpanSet>>,
}

impl Grouped {
    fn add(&mut self, sample: AnnotatedSample, source: String) -> Result<()> {
        match self.contents.get(&sample.id) {
            Some(c) if c.text() != sample.content.text() => {
                return Err(Error::validation(&sample.id, "text differs between records with this id"));
            }
            Some(_) => {}
            None => {
                self.contents.insert(sample.id.clone(), sample.content);
            }
        }
        let per_id = self.by_source.entry(source.clone()).or_default();
        if per_id.insert(sample.id.clone(), sample.spans).is_some() {
            return Err(Error::validation(&sample.id, format!("duplicate record for source {source:?}")));
        }
        Ok(())
    }

    /// Union over sources per id.
    fn union(&self) -> BTreeMap<String, SpanSet> {
        self.contents
            .keys()
            .map(|id| {
                let sets = self.by_source.values().filter_map(|m| m.get(id));
                (id.clone(), merge_union(sets))
            })
            .collect()
    }

    fn check_same_text(&self, other: &Grouped) -> Result<()> {
        for (id, c) in &other.contents {
            match self.contents.get(id) {
                None => return Err(Error::validation(id, "sample not present in gold")),
                Some(g) if g.text() != c.text() => return Err(Error::validation(id, "text differs from gold")),
                _ => {}
            }
        }
        Ok(())
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_grouped(paths: &[PathBuf], stem_fallback: bool) -> Result<Grouped> {
    let mut g = Grouped::default();
    for path in paths {
        for sample in load_annotated(path)? {
            let source =
                if sample.source.is_empty() && stem_fallback { file_stem(path) } else { sample.source.clone() };
            g.add(sample, source)?;
        }
    }
    Ok(g)
}

type ById = BTreeMap<String, SpanSet>;

/// Gold (unioned) and single-source predictions keyed by id.
fn gold_and_pred(gold: &Path, pred: &Path) -> Result<(Grouped, ById, ById)> {
    let g = load_grouped(&[gold.to_path_buf()], false)?;
    let p = load_grouped(&[pred.to_path_buf()], false)?;
    g.check_same_text(&p)?;
    if p.by_source.len() > 1 {
        return Err(Error::input(format!(
            "{}: predictions come from several sources; use pool-rank to compare systems",
            pred.display()
        )));
    }
    let preds = p.by_source.into_values().next().unwrap_or_default();
    if let Some(missing) = g.contents.keys().find(|id| !preds.contains_key(*id)) {
        return Err(Error::validation(missing, "no prediction for gold sample"));
    }
    let gold_spans = g.union();
    Ok((g, gold_spans, preds))
}

fn cmd_eval(a: &EvalArgs, pool: &rayon::ThreadPool, w: &mut dyn Write) -> Result<()> {
    let (_, gold, pred) = gold_and_pred(&a.gold, &a.pred)?;
    let mode: MatchMode = a.mode.into();
    let averaging = if a.micro { Averaging::Micro } else { Averaging::Macro };
    let pairs: Vec<(&String, &SpanSet, &SpanSet)> = gold.iter().map(|(id, g)| (id, g, &pred[id])).collect();
    let report = average(pairs.iter().map(|(_, g, p)| (*g, *p)), mode, averaging)?;

    let mut text = format!(
        "mode\t{mode}\naveraging\t{averaging}\nn_samples\t{}\nf1_m\t{:.6}\nrec_m\t{:.6}\nprec_m\t{:.6}\n",
        report.n_samples, report.f1_m, report.rec_m, report.prec_m
    );
    if a.per_sample {
        let rows: Vec<String> = pool.install(|| {
            pairs
                .par_iter()
                .map(|(id, g, p)| {
                    let r = f1_m(g, p, mode);
                    format!("{id}\t{:.6}\t{:.6}\t{:.6}\n", r.f1_m, r.rec_m, r.prec_m)
                })
                .collect()
        });
        text.push_str("\nid\tf1_m\trec_m\tprec_m\n");
        text.extend(rows);
    }
    w.write_all(text.as_bytes()).map_err(io_out)
}

fn load_conll(path: &Path) -> Result<Vec<ConllSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_conll(BufReader::new(file), &path.display().to_string())
}

fn cmd_tag_eval<E: Write>(a: &TagEvalArgs, w: &mut dyn Write, stderr: &mut E) -> Result<()> {
    let gold = load_conll(&a.gold)?;
    let pred = load_conll(&a.pred)?;
    if gold.len() != pred.len() {
        return Err(Error::input(format!("gold has {} samples, predictions have {}", gold.len(), pred.len())));
    }
    let mut repairs = 0;
    for (n, (g, p)) in gold.iter().zip(&pred).enumerate() {
        if g.tokens != p.tokens {
            return Err(Error::validation(
                g.meta("id").map_or_else(|| format!("#{}", n + 1), str::to_string),
                "predicted tokens differ from gold tokens",
            ));
        }
        repairs += decode_bio(&p.tags).repairs.len();
    }
    if repairs > 0 {
        let _ = writeln!(stderr, "note: {repairs} orphan I tags in predictions read as B");
    }
    let m = corpus_tag_metrics(pred.iter().map(|p| &p.tags).zip(gold.iter().map(|g| &g.tags)))?;
    write!(
        w,
        "n_samples\t{}\nf1\t{:.6}\nprecision\t{:.6}\nrecall\t{:.6}\naccuracy\t{:.6}\n",
        gold.len(),
        m.f1,
        m.precision,
        m.recall,
        m.accuracy
    )
    .map_err(io_out)
}

fn format_of(path: &Path) -> Option<FileFormat> {
    match path.extension()?.to_str()? {
        "jsonl" | "json" => Some(FileFormat::Jsonl),
        "conll" | "bio" | "tsv" => Some(FileFormat::Conll),
        _ => None,
    }
}

fn cmd_convert<E: Write>(a: &ConvertArgs, w: &mut dyn Write, stderr: &mut E) -> Result<()> {
    let from = a
        .from
        .or_else(|| format_of(&a.input))
        .ok_or_else(|| Error::input(format!("cannot infer the format of {}; pass --from", a.input.display())))?;
    match (from, a.to) {
        (FileFormat::Jsonl, FileFormat::Conll) => {
            let samples = load_annotated(&a.input)?;
            let conll = samples
                .iter()
                .map(|s| {
                    let mut meta = vec![("id".to_string(), s.id.clone())];
                    if !s.source.is_empty() {
                        meta.push(("source".to_string(), s.source.clone()));
                    }
                    Ok(ConllSample {
                        meta,
                        tokens: s.content.surfaces().map(str::to_string).collect(),
                        tags: encode_bio(s.content.len(), &s.spans)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_conll(w, &conll).map_err(io_out)
        }
        (FileFormat::Conll, FileFormat::Jsonl) => {
            let samples = load_conll(&a.input)?;
            let mut records = Vec::with_capacity(samples.len());
            for (n, s) in samples.iter().enumerate() {
                let id = s.meta("id").map_or_else(|| (n + 1).to_string(), str::to_string);
                let decoded = decode_bio(&s.tags);
                if !decoded.repairs.is_empty() {
                    let _ = writeln!(stderr, "note: sample {id}: {} orphan I tags read as B", decoded.repairs.len());
                }
                let content = tokenize(&s.tokens.join(" "));
                let mut rec = SampleRecord::from_tokens(id, &content, &decoded.spans);
                if let Some(src) = s.meta("source") {
                    rec.source = src.to_string();
                }
                records.push(rec);
            }
            write_records(w, &records).map_err(io_out)
        }
        (same, _) => {
            // same-format copy normalizes the file
            match same {
                FileFormat::Jsonl => write_records(w, &load_jsonl(&a.input)?).map_err(io_out),
                FileFormat::Conll => write_conll(w, &load_conll(&a.input)?).map_err(io_out),
            }
        }
    }
}

fn cmd_agree(a: &AgreeArgs, w: &mut dyn Write) -> Result<()> {
    let g = load_grouped(&a.files, true)?;
    let annotations: Annotations = g.by_source.clone();
    let reports = pairwise_agreement(&annotations, &g.contents)?;
    let mut text = String::from("annotator_a\tannotator_b\tdsc\tlcs\tn_samples\n");
    for r in &reports {
        text.push_str(&format!("{}\t{}\t{:.6}\t{:.6}\t{}\n", r.pair.0, r.pair.1, r.dsc, r.lcs, r.n_samples));
    }
    if a.vs_aggregate {
        let mode: MatchMode = a.mode.into();
        let scores = annotator_vs_pool(&annotations, mode)?;
        text.push_str("\nannotator\tf1_m\trec_m\tprec_m\tmode\n");
        for (name, r) in &scores {
            text.push_str(&format!("{name}\t{:.6}\t{:.6}\t{:.6}\t{mode}\n", r.f1_m, r.rec_m, r.prec_m));
        }
    }
    w.write_all(text.as_bytes()).map_err(io_out)
}

fn cmd_pool_rank(a: &PoolRankArgs, threads: &rayon::ThreadPool, w: &mut dyn Write) -> Result<()> {
    let gold = load_grouped(&a.gold, true)?;
    let candidates = load_grouped(std::slice::from_ref(&a.pool), false)?;
    gold.check_same_text(&candidates)?;
    let mut pool = CandidatePool::new(gold.union());
    for (label, outputs) in candidates.by_source {
        let id = CandidateId::from_label(&label).ok_or_else(|| {
            Error::input(format!("{}: source {label:?} is not of the form system/prompt", a.pool.display()))
        })?;
        pool.insert(id, outputs)?;
    }
    let ranked = threads.install(|| rank_pool(&pool, a.mode.into()))?;
    ranked.write_tsv(w).map_err(io_out)
}

fn cmd_pool_select(a: &PoolSelectArgs, w: &mut dyn Write) -> Result<()> {
    let file = File::open(&a.ranking).map_err(|e| Error::io(&a.ranking, e))?;
    let ranked = RankedCandidates::read_tsv(BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse { path: a.ranking.clone(), line, message },
        other => other,
    })?;
    let best = select_best(&ranked)?;
    let score = ranked.entries()[0].f1_m;
    write!(w, "system\tprompt\tf1_m\n{}\t{}\t{score:.6}\n", best.system, best.prompt).map_err(io_out)
}

fn cmd_annotate<E: Write>(a: &AnnotateArgs, w: &mut dyn Write, stderr: &mut E) -> Result<()> {
    let samples = load_jsonl(&a.samples)?;
    let prompts = match &a.prompts {
        Some(path) => {
            let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<Vec<PromptTemplate>>(&raw).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?
        }
        None => PromptTemplate::builtin(),
    };
    let timeout = Duration::try_from_secs_f64(a.timeout).map_err(|e| Error::input(format!("--timeout: {e}")))?;
    let configs: Vec<ModelConfig> = a
        .models
        .iter()
        .map(|m| ModelConfig {
            temperature: a.temperature,
            max_retries: a.max_retries,
            request_timeout: timeout,
            api_key_env: a.api_key_env.clone(),
            ..ModelConfig::new(&a.endpoint, m)
        })
        .collect();
    let cache = ResponseCache::open(&a.cache_dir).map_err(|e| Error::io(&a.cache_dir, e))?;
    if a.offline {
        annotate_with(Annotator::new(OfflineTransport, Some(cache)), a, &samples, &prompts, &configs, w, stderr)
    } else {
        annotate_with(Annotator::new(HttpTransport, Some(cache)), a, &samples, &prompts, &configs, w, stderr)
    }
}

fn annotate_with<T: ChatTransport, E: Write>(
    annotator: Annotator<T>,
    a: &AnnotateArgs,
    samples: &[SampleRecord],
    prompts: &[PromptTemplate],
    configs: &[ModelConfig],
    w: &mut dyn Write,
    stderr: &mut E,
) -> Result<()> {
    let run = run_pool(&annotator, samples, prompts, configs, a.concurrency)?;
    let _ = writeln!(
        stderr,
        "annotated {} triples ({} from cache), {} failed, {} unmatched extractions",
        run.attempted,
        run.cache_hits(),
        run.failures.len(),
        run.unmatched.len()
    );
    for id in run.failed_candidates() {
        let _ = writeln!(stderr, "candidate {id} left out of the pool");
    }
    if let Some(path) = &a.failures {
        let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for entry in &run.failures {
            serde_json::to_writer(&mut f, entry).map_err(|e| Error::io(path, e.into()))?;
            f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        f.flush().map_err(|e| Error::io(path, e))?;
    }
    write_records(w, &run.records()).map_err(io_out)
}

fn cmd_stats(a: &StatsArgs, w: &mut dyn Write) -> Result<()> {
    let mut samples = Vec::new();
    for path in &a.inputs {
        samples.extend(load_annotated(path)?);
    }
    let alt = match a.alt {
        AltArg::Pooled => AltAveraging::Pooled,
        AltArg::PerSample => AltAveraging::PerSample,
    };
    let s = stats(samples.iter().map(|s| &s.spans), alt)?;
    write!(
        w,
        "n_samples\t{}\nn_spans\t{}\ntpc\t{}\nalt\t{}\ntpc_mean\t{:.6}\ntpc_std\t{:.6}\nalt_mean\t{:.6}\nalt_std\t{:.6}\n",
        s.n_samples,
        s.n_spans,
        s.tpc_display(),
        s.alt_display(),
        s.tpc_mean,
        s.tpc_std,
        s.alt_mean,
        s.alt_std
    )
    .map_err(io_out)
}

fn cmd_split<W: Write, E: Write>(a: &SplitArgs, stdout: &mut W, stderr: &mut E) -> Result<()> {
    let records = load_jsonl(&a.input)?;
    let folds = split(records, a.ratios, a.seed);
    for warning in &folds.warnings {
        let _ = writeln!(stderr, "warning: {warning}");
    }
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    writeln!(stdout, "fold\tsize").map_err(io_out)?;
    for (name, fold) in [("train", &folds.train), ("dev", &folds.dev), ("test", &folds.test)] {
        let path = a.out_dir.join(format!("{name}.jsonl"));
        crate::corpus::write_jsonl(&path, fold)?;
        writeln!(stdout, "{name}\t{}", fold.len()).map_err(io_out)?;
    }
    Ok(())
}

fn cmd_error_report(a: &ErrorReportArgs, w: &mut dyn Write) -> Result<()> {
    let (g, gold, pred) = gold_and_pred(&a.gold, &a.pred)?;
    let samples: Vec<Prediction> = gold
        .iter()
        .map(|(id, spans)| Prediction { pred: &pred[id], gold: spans, n_tokens: g.contents[id].len() })
        .collect();
    let mut report = error_report(samples)?;
    report.notes = a.notes.clone();
    match a.format {
        ReportFormat::Tsv => report.write_tsv(w).map_err(io_out),
        ReportFormat::Text => write!(w, "{report}").map_err(io_out),
    }
}
