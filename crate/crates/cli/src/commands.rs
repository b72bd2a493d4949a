use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::json;
use ukcs::dce::{parse_score_line, Selector};
use ukcs::filter::{run_mono_pipeline, PipelineError};
use ukcs::inca::{self, VocabCounter};
use ukcs::langid::LangIdError;
use ukcs::par::map_ordered;
use ukcs::{
    decode_bytes, line_seed, run_pipeline, train_langid, CasingVocabulary, DceConfig, LangIdModel,
    LanguageDetector, MonoLang, PairFilter, RuleSet, ScoredPair, TranslitTable,
};

use crate::config::PipelineConfig;
use crate::io::{open_input, open_output, raw_lines, RawLine};
use crate::{
    Cli, CliError, Command, Common, DceArgs, FilterArgs, IncaTrainArgs, LangArg, LangidArgs,
    LangidTrainArgs, NoiseArgs, VocabArgs,
};

struct Ctx {
    common: Common,
    cfg: PipelineConfig,
    workers: usize,
    command: &'static str,
}

#[derive(Debug, Default, Serialize)]
struct StreamStats {
    lines: u64,
    faults: u64,
    dropped: u64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if cli.common.workers.is_some() {
        cfg.workers = cli.common.workers;
    }
    if cli.common.stats_out.is_some() {
        cfg.stats_out = cli.common.stats_out.clone();
    }
    let command = command_name(&cli.command);
    let mut ctx = Ctx {
        common: cli.common,
        cfg,
        workers: 1,
        command,
    };
    match cli.command {
        Command::Romanize(a) => {
            override_opt(&mut ctx.cfg.romanize.table, a.table.clone());
            ctx.finish_config()?;
            romanize(&ctx, false, &a)
        }
        Command::Deromanize(a) => {
            override_opt(&mut ctx.cfg.romanize.table, a.table.clone());
            ctx.finish_config()?;
            romanize(&ctx, true, &a)
        }
        Command::IncaTrain(a) => {
            if let Some(m) = a.min_count {
                ctx.cfg.inca.min_count = m;
            }
            ctx.finish_config()?;
            inca_train(&ctx, &a)
        }
        Command::IncaEncode(a) => {
            override_opt(&mut ctx.cfg.inca.vocab, a.vocab.clone());
            ctx.finish_config()?;
            inca_code(&ctx, false, &a)
        }
        Command::IncaDecode(a) => {
            override_opt(&mut ctx.cfg.inca.vocab, a.vocab.clone());
            ctx.finish_config()?;
            inca_code(&ctx, true, &a)
        }
        Command::Noise(a) => {
            let n = &mut ctx.cfg.noise;
            n.seed = a.seed.unwrap_or(n.seed);
            n.p_drop_initial_cap = a.p_drop_initial_cap.unwrap_or(n.p_drop_initial_cap);
            n.p_lowercase_all = a.p_lowercase_all.unwrap_or(n.p_lowercase_all);
            n.p_uppercase_span = a.p_uppercase_span.unwrap_or(n.p_uppercase_span);
            n.p_drop_final_punct = a.p_drop_final_punct.unwrap_or(n.p_drop_final_punct);
            n.p_add_punct = a.p_add_punct.unwrap_or(n.p_add_punct);
            ctx.finish_config()?;
            noise(&ctx, &a)
        }
        Command::FilterParallel(a) => {
            let f = &mut ctx.cfg.filter;
            f.langid &= !a.no_langid;
            f.length_ratio &= !a.no_length_ratio;
            f.rules &= !a.no_rules;
            override_opt(&mut ctx.cfg.langid.model, a.langid_model.clone());
            ctx.finish_config()?;
            filter_parallel(&ctx, &a)
        }
        Command::FilterMono(a) => {
            ctx.finish_config()?;
            filter_mono(&ctx, a.lang, &a)
        }
        Command::LangidTrain(a) => {
            if let Some(k) = a.profile_size {
                ctx.cfg.langid.profile_size = k;
            }
            ctx.finish_config()?;
            langid_train(&ctx, &a)
        }
        Command::Langid(a) => {
            override_opt(&mut ctx.cfg.langid.model, a.model.clone());
            ctx.finish_config()?;
            langid(&ctx, &a)
        }
        Command::DceSelect(a) => {
            ctx.finish_config()?;
            dce_select(&ctx, &a)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Romanize(_) => "romanize",
        Command::Deromanize(_) => "deromanize",
        Command::IncaTrain(_) => "inca-train",
        Command::IncaEncode(_) => "inca-encode",
        Command::IncaDecode(_) => "inca-decode",
        Command::Noise(_) => "noise",
        Command::FilterParallel(_) => "filter-parallel",
        Command::FilterMono(_) => "filter-mono",
        Command::LangidTrain(_) => "langid-train",
        Command::Langid(_) => "langid",
        Command::DceSelect(_) => "dce-select",
    }
}

fn override_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl Ctx {
    fn finish_config(&mut self) -> Result<(), CliError> {
        self.cfg.validate()?;
        self.workers = self.cfg.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });
        log::debug!("{} with {} worker(s)", self.command, self.workers);
        Ok(())
    }

    fn write_stats(&self, args: &impl Serialize, stats: &impl Serialize) -> Result<(), CliError> {
        let Some(path) = &self.cfg.stats_out else {
            return Ok(());
        };
        let doc = json!({
            "tool": "ukcs",
            "version": ukcs::VERSION,
            "command": self.command,
            "config": self.cfg,
            "args": args,
            "stats": stats,
        });
        let text = serde_json::to_string_pretty(&doc).expect("stats serialize");
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Maps every input line through `f` in order. `Ok(None)` drops the
    /// line, `Err` is a data fault handled per --strict / --lenient.
    fn stream<F>(&self, f: F) -> Result<StreamStats, CliError>
    where
        F: Fn(u64, &str) -> Result<Option<String>, String> + Sync,
    {
        let input = open_input(self.common.input.as_deref())?;
        let mut out = open_output(self.common.output.as_deref())?;
        let mut stats = StreamStats::default();
        map_ordered(
            raw_lines(input).map(|r| r.map_err(CliError::from)),
            self.workers,
            |i, raw: RawLine| {
                let res = match std::str::from_utf8(&raw.body) {
                    Ok(s) => f(i, s),
                    Err(e) => Err(format!("invalid UTF-8 at byte {}", e.valid_up_to())),
                };
                (i, raw, res)
            },
            |(i, raw, res)| {
                stats.lines += 1;
                match res {
                    Ok(Some(s)) => {
                        out.write_all(s.as_bytes())?;
                        out.write_all(raw.term.as_bytes())?;
                    }
                    Ok(None) => {}
                    Err(msg) => {
                        let msg = format!("line {}: {msg}", i + 1);
                        if !self.common.lenient {
                            return Err(CliError::Data(msg));
                        }
                        stats.faults += 1;
                        log::warn!("{msg}");
                        if self.common.drop_faulty {
                            stats.dropped += 1;
                        } else {
                            out.write_all(&raw.body)?;
                            out.write_all(raw.term.as_bytes())?;
                        }
                    }
                }
                Ok(())
            },
        )?;
        out.flush()?;
        if stats.faults > 0 {
            log::warn!("{} faulty line(s), {} dropped", stats.faults, stats.dropped);
        }
        Ok(stats)
    }
}

fn load_table(path: Option<&Path>) -> Result<TranslitTable, CliError> {
    match path {
        Some(p) => {
            TranslitTable::load(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
        None => Ok(ukcs::default_czech_table()),
    }
}

fn romanize(ctx: &Ctx, inverse: bool, args: &impl Serialize) -> Result<(), CliError> {
    let table = load_table(ctx.cfg.romanize.table.as_deref())?;
    let stats = if inverse {
        ctx.stream(|_, s| table.deromanize(s).map(Some).map_err(|e| e.to_string()))?
    } else {
        ctx.stream(|_, s| Ok(Some(table.romanize(s))))?
    };
    ctx.write_stats(args, &stats)
}

const TRAIN_BATCH: usize = 1 << 16;

fn inca_train(ctx: &Ctx, args: &IncaTrainArgs) -> Result<(), CliError> {
    let input = open_input(ctx.common.input.as_deref())?;
    let mut counter = VocabCounter::new();
    let mut stats = StreamStats::default();
    let mut batch: Vec<String> = Vec::with_capacity(TRAIN_BATCH);
    let flush = |batch: &mut Vec<String>, counter: &mut VocabCounter| {
        let chunk = batch.len().div_ceil(ctx.workers).max(1);
        let partials: Vec<VocabCounter> = std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .chunks(chunk)
                .map(|lines| {
                    s.spawn(move || {
                        let mut c = VocabCounter::new();
                        for l in lines {
                            c.add_line(l);
                        }
                        c
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("counting thread"))
                .collect()
        });
        for p in partials {
            counter.merge(p);
        }
        batch.clear();
    };
    for (i, raw) in raw_lines(input).enumerate() {
        let raw = raw?;
        stats.lines += 1;
        match String::from_utf8(raw.body) {
            Ok(s) => batch.push(s),
            Err(e) => {
                let msg = format!(
                    "line {}: invalid UTF-8 at byte {}",
                    i + 1,
                    e.utf8_error().valid_up_to()
                );
                if !ctx.common.lenient {
                    return Err(CliError::Data(msg));
                }
                log::warn!("{msg}");
                stats.faults += 1;
                stats.dropped += 1;
            }
        }
        if batch.len() == TRAIN_BATCH {
            flush(&mut batch, &mut counter);
        }
    }
    flush(&mut batch, &mut counter);
    let mut vocab = counter.finish(ctx.cfg.inca.min_count);
    vocab.source = Some(match (&args.source, &ctx.common.input) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => p.display().to_string(),
        (None, None) => "stdin".to_string(),
    });
    let mut out = open_output(ctx.common.output.as_deref())?;
    vocab.write_to(&mut out)?;
    out.flush()?;
    log::info!(
        "{} vocabulary entries from {} lines",
        vocab.len(),
        stats.lines
    );
    ctx.write_stats(
        args,
        &json!({"lines": stats.lines, "faults": stats.faults, "entries": vocab.len()}),
    )
}

fn load_vocab(path: Option<&Path>) -> Result<CasingVocabulary, CliError> {
    let p = path.ok_or_else(|| {
        CliError::Usage("a vocabulary is required (--vocab or inca.vocab)".into())
    })?;
    let f = File::open(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
    CasingVocabulary::read_from(BufReader::new(f))
        .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

fn inca_code(ctx: &Ctx, decode: bool, args: &VocabArgs) -> Result<(), CliError> {
    let vocab = load_vocab(ctx.cfg.inca.vocab.as_deref())?;
    let stats = if decode {
        ctx.stream(|_, s| inca::decode(s, &vocab).map(Some).map_err(|e| e.to_string()))?
    } else {
        ctx.stream(|_, s| Ok(Some(inca::encode(s, &vocab))))?
    };
    ctx.write_stats(args, &stats)
}

fn noise(ctx: &Ctx, args: &NoiseArgs) -> Result<(), CliError> {
    let cfg = ctx.cfg.noise;
    let counts: [AtomicU64; 5] = Default::default();
    let stats = ctx.stream(|i, s| {
        let (out, applied) = ukcs::noise::noise_line_traced(s, &cfg, line_seed(cfg.seed, i));
        let flags = [
            applied.lowercase_all,
            applied.drop_initial_cap,
            applied.uppercase_span,
            applied.drop_final_punct,
            applied.add_punct,
        ];
        for (c, hit) in counts.iter().zip(flags) {
            if hit {
                c.fetch_add(1, Ordering::Relaxed);
            }
        }
        Ok(Some(out))
    })?;
    let [lc, dic, us, dfp, ap] = counts.map(AtomicU64::into_inner);
    ctx.write_stats(
        args,
        &json!({
            "lines": stats.lines,
            "faults": stats.faults,
            "dropped": stats.dropped,
            "applied": {
                "lowercase_all": lc,
                "drop_initial_cap": dic,
                "uppercase_span": us,
                "drop_final_punct": dfp,
                "add_punct": ap,
            },
        }),
    )
}

fn load_model(path: &Path) -> Result<LangIdModel, CliError> {
    let f = File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    LangIdModel::read_from(BufReader::new(f))
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn pipeline_error(e: PipelineError) -> CliError {
    if e.source.kind() == std::io::ErrorKind::BrokenPipe {
        CliError::Io(e.source)
    } else {
        CliError::Data(e.to_string())
    }
}

fn log_filter_stats(stats: &ukcs::FilterStats) {
    log::info!(
        "kept {} of {} ({} cleaned)",
        stats.kept,
        stats.total,
        stats.cleaned
    );
    for (reason, n) in &stats.rejected {
        log::info!("rejected {reason}: {n}");
    }
}

fn filter_parallel(ctx: &Ctx, args: &FilterArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg.filter;
    let detector: Option<Arc<dyn LanguageDetector>> = match (&ctx.cfg.langid.model, cfg.langid) {
        (Some(p), true) => {
            let model = load_model(p)?;
            for lang in [&cfg.src_lang, &cfg.tgt_lang] {
                if !model.languages().any(|l| l == lang) {
                    return Err(CliError::Usage(format!(
                        "langid model has no language {lang:?}"
                    )));
                }
            }
            Some(Arc::new(model))
        }
        (None, true) => {
            log::warn!("no langid model given; language identification is skipped");
            None
        }
        (_, false) => None,
    };
    let mut rules = match &args.rules {
        Some(p) => RuleSet::load(Some(p), None),
        None => Ok(RuleSet::default_rules()),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(p) = &args.lexicon {
        rules.lexicon = RuleSet::load(None, Some(p))
            .map_err(|e| CliError::Usage(e.to_string()))?
            .lexicon;
    }
    let filter = PairFilter::new(cfg.clone(), detector, rules);
    let input = open_input(ctx.common.input.as_deref())?;
    let mut out = open_output(ctx.common.output.as_deref())?;
    let stats = run_pipeline(
        raw_lines(input).map(|r| r.map(|l| l.body)),
        &args.corpus_tag,
        &filter,
        ctx.workers,
        |rec| {
            out.write_all(rec.src.as_bytes())?;
            out.write_all(b"\t")?;
            out.write_all(rec.tgt.as_bytes())?;
            out.write_all(b"\n")
        },
    )
    .map_err(pipeline_error)?;
    out.flush()?;
    log_filter_stats(&stats);
    ctx.write_stats(args, &stats)
}

fn filter_mono(ctx: &Ctx, lang: LangArg, args: &impl Serialize) -> Result<(), CliError> {
    let lang = match lang {
        LangArg::Cs => MonoLang::Cs,
        LangArg::Uk => MonoLang::Uk,
    };
    let input = open_input(ctx.common.input.as_deref())?;
    let mut out = open_output(ctx.common.output.as_deref())?;
    let stats = run_mono_pipeline(
        raw_lines(input).map(|r| r.map(|l| l.body)),
        lang,
        &ctx.cfg.filter,
        ctx.workers,
        |line| {
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")
        },
    )
    .map_err(pipeline_error)?;
    out.flush()?;
    log_filter_stats(&stats);
    ctx.write_stats(args, &stats)
}

fn langid_train(ctx: &Ctx, args: &LangidTrainArgs) -> Result<(), CliError> {
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for spec in &args.langs {
        let Some((lang, path)) = spec.split_once('=') else {
            return Err(CliError::Usage(format!(
                "--lang expects LANG=FILE, got {spec:?}"
            )));
        };
        if lang.is_empty() || lang.contains(char::is_whitespace) || !seen.insert(lang.to_string()) {
            return Err(CliError::Usage(format!(
                "bad or repeated language code {lang:?}"
            )));
        }
        let reader = open_input(Some(Path::new(path)))?;
        let mut lines = Vec::new();
        for raw in raw_lines(reader) {
            if let Some(d) = decode_bytes(&raw?.body) {
                lines.push(d.line.into_string());
            }
        }
        log::info!("{lang}: {} training lines", lines.len());
        samples.push((lang.to_string(), lines));
    }
    let model = train_langid(samples, ctx.cfg.langid.profile_size).map_err(|e| match e {
        LangIdError::EmptySample(_) => CliError::Data(e.to_string()),
        e => CliError::Usage(e.to_string()),
    })?;
    let mut out = open_output(ctx.common.output.as_deref())?;
    model.write_to(&mut out)?;
    out.flush()?;
    ctx.write_stats(
        args,
        &json!({"languages": model.languages().collect::<Vec<_>>()}),
    )
}

fn langid(ctx: &Ctx, args: &LangidArgs) -> Result<(), CliError> {
    let path =
        ctx.cfg.langid.model.as_deref().ok_or_else(|| {
            CliError::Usage("a model is required (--model or langid.model)".into())
        })?;
    let model = load_model(path)?;
    if let Some(keep) = &args.keep {
        if !model.languages().any(|l| l == keep) {
            return Err(CliError::Usage(format!("model has no language {keep:?}")));
        }
    }
    let threshold = args.threshold.unwrap_or(ctx.cfg.filter.langid_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Usage("--threshold must be in [0, 1]".into()));
    }
    let counts: Mutex<BTreeMap<String, u64>> = Mutex::default();
    let stats = ctx.stream(|_, s| {
        let (lang, conf) = match model.detect(s) {
            Ok(d) => (d.language, d.confidence),
            Err(LangIdError::Indeterminate) => ("und".to_string(), 0.0),
            Err(e) => return Err(e.to_string()),
        };
        let out = match &args.keep {
            Some(keep) => (*keep == lang && conf >= threshold).then(|| s.to_string()),
            None => Some(format!("{lang}\t{conf:.3}\t{s}")),
        };
        *counts.lock().expect("counts lock").entry(lang).or_default() += 1;
        Ok(out)
    })?;
    let counts = counts.into_inner().expect("counts lock");
    ctx.write_stats(
        args,
        &json!({"lines": stats.lines, "faults": stats.faults, "languages": counts}),
    )
}

fn dce_select(ctx: &Ctx, args: &DceArgs) -> Result<(), CliError> {
    let cfg = match (args.top_n, args.ratio, args.authentic_count) {
        (Some(n), None, _) => DceConfig::TopN(n),
        (None, Some(ratio), Some(authentic_count)) => DceConfig::Ratio {
            ratio,
            authentic_count,
        },
        _ => {
            return Err(CliError::Usage(
                "give either --top-n N or --ratio R --authentic-count N".into(),
            ))
        }
    };
    let target = cfg.target().map_err(|e| CliError::Usage(e.to_string()))?;
    let scores = open_input(args.scores.as_deref().or(ctx.common.input.as_deref()))?;
    let mut selector = Selector::new(target);
    let mut ids: HashSet<String> = HashSet::new();
    let mut faults = 0u64;
    for (i, raw) in raw_lines(scores).enumerate() {
        let raw = raw?;
        let parsed = std::str::from_utf8(&raw.body)
            .map_err(|_| format!("line {}: invalid UTF-8", i + 1))
            .and_then(|s| parse_score_line(s, i + 1).map_err(|e| e.to_string()))
            .and_then(|rec| {
                if ids.insert(rec.id.clone()) {
                    Ok(rec)
                } else {
                    Err(format!("line {}: duplicate id {:?}", i + 1, rec.id))
                }
            });
        match parsed {
            Ok(rec) => selector.push(rec),
            Err(msg) if ctx.common.lenient => {
                log::warn!("{msg}");
                faults += 1;
                // keeps line indices aligned with --bitext
                selector.push(ScoredPair {
                    id: String::new(),
                    fwd_xent: f64::NAN,
                    bwd_xent: f64::NAN,
                });
            }
            Err(msg) => return Err(CliError::Data(msg)),
        }
    }
    let selection = selector.finish();
    if selection.short_by > 0 {
        log::warn!(
            "only {} valid records for {} requested",
            selection.requested as u64 - selection.short_by,
            selection.requested
        );
    }
    let mut out = open_output(ctx.common.output.as_deref())?;
    match &args.bitext {
        Some(p) => {
            let bitext = open_input(Some(p))?;
            let mut wanted = selection.kept.iter().map(|s| s.index).peekable();
            for (i, raw) in raw_lines(bitext).enumerate() {
                let Some(&next) = wanted.peek() else { break };
                let raw = raw?;
                if next == i as u64 {
                    out.write_all(&raw.body)?;
                    out.write_all(b"\n")?;
                    wanted.next();
                }
            }
            if let Some(missing) = wanted.next() {
                return Err(CliError::Data(format!(
                    "{} has no line {} (it is shorter than the score file)",
                    p.display(),
                    missing + 1
                )));
            }
        }
        None => {
            for id in selection.ids() {
                out.write_all(id.as_bytes())?;
                out.write_all(b"\n")?;
            }
        }
    }
    out.flush()?;
    log::info!(
        "selected {} of {} ({} invalid)",
        selection.kept.len(),
        selection.total,
        selection.invalid
    );
    ctx.write_stats(
        args,
        &json!({
            "total": selection.total,
            "invalid": selection.invalid,
            "faults": faults,
            "requested": selection.requested,
            "kept": selection.kept.len(),
            "short_by": selection.short_by,
        }),
    )
}
