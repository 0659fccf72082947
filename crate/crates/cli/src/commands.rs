use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use emocause::corpus::{build_vocab, generate_synthetic, load_corpus, oov_rate, write_corpus};
use emocause::dgl::InferenceMode;
use emocause::eval::{evaluate, run_ablation, AblationConfig, AblationSpec, Variant};
use emocause::model::encode_corpus;
use emocause::numerics::GradCheckConfig;
use emocause::training::{load_checkpoint, model_grad_check, save_checkpoint, train as fit};
use emocause::Error;
use serde::Serialize;

use crate::manifest::{load_settings, write_manifest};
use crate::settings::{AblateSettings, EvalSettings, GenerateSettings, GradcheckSettings, TrainSettings};
use crate::{AblateArgs, EvalArgs, GenerateArgs, GradcheckArgs, TrainCmdArgs};

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .with_context(|| format!("missing {flag} (give it as a flag or in the config file)"))
}

fn read_corpus(path: &Path, max_clauses: usize) -> Result<Vec<emocause::corpus::Document>> {
    let docs = load_corpus(path, max_clauses).with_context(|| format!("reading corpus {}", path.display()))?;
    ensure!(!docs.is_empty(), "{} contains no documents", path.display());
    Ok(docs)
}

fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item)?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let mut s: GenerateSettings = load_settings(args.config.as_deref(), "generate")?;
    if let Some(out) = args.out {
        s.out = Some(out);
    }
    let g = &mut s.generator;
    if let Some(d) = args.docs {
        g.documents = d as usize;
    }
    if let Some(v) = args.seed {
        g.seed = v;
    }
    let GenerateArgs {
        min_clauses,
        max_clauses,
        min_clause_len,
        max_clause_len,
        vocab_size,
        marker_count,
        content_signal,
        distractor_rate,
        emotion_distractor_rate,
        ..
    } = args;
    macro_rules! set {
        ($($f:ident),+) => { $(if let Some(v) = $f { g.$f = v; })+ };
    }
    set!(
        min_clauses,
        max_clauses,
        min_clause_len,
        max_clause_len,
        vocab_size,
        marker_count,
        content_signal,
        distractor_rate,
        emotion_distractor_rate
    );
    ensure!(s.generator.documents > 0, "document count must be at least 1");
    let out = required(&s.out, "--out")?;
    let docs = generate_synthetic(&s.generator)?;
    write_corpus(out, &docs)?;
    let manifest = write_manifest(out, "generate", &s)?;
    eprintln!("wrote {} documents to {} ({})", docs.len(), out.display(), manifest.display());
    Ok(ExitCode::SUCCESS)
}

pub fn train(args: TrainCmdArgs) -> Result<ExitCode> {
    let mut s: TrainSettings = load_settings(args.config.as_deref(), "train")?;
    if let Some(c) = args.corpus {
        s.corpus = Some(c);
    }
    if let Some(o) = args.out {
        s.out = Some(o);
    }
    if let Some(v) = args.variant {
        ensure!(
            v != Variant::DglUpperBound,
            "dgl-upper-bound is an inference mode; train pae-dgl and evaluate with --oracle-dgl"
        );
        s.train = v.train_config(&s.train);
    }
    args.model.apply(&mut s.model);
    args.train.apply(&mut s.train);
    s.train.validate()?;

    let corpus = required(&s.corpus, "--corpus")?;
    let out = required(&s.out, "--out")?;
    let docs = read_corpus(corpus, s.model.max_clauses)?;
    let vocab = build_vocab(&docs, s.model.min_count)?;
    let outcome = fit(&docs, &vocab, s.model.dims(vocab.len()), &s.train)?;
    for e in &outcome.log {
        eprintln!(
            "epoch {:>3}  total {:.6}  position {:.6}  cause {:.6}  l2 {:.6}",
            e.epoch + 1,
            e.mean.total,
            e.mean.position,
            e.mean.cause,
            e.mean.l2
        );
    }
    save_checkpoint(out, &outcome.model, &vocab)?;
    let mut log_path = out.as_os_str().to_owned();
    log_path.push(".loss.jsonl");
    write_json_lines(Path::new(&log_path), &outcome.log)?;
    write_manifest(out, "train", &s)?;
    eprintln!("wrote checkpoint {}", out.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EvalReport {
    documents: usize,
    mode: &'static str,
    proposed: usize,
    annotated: usize,
    correct: usize,
    precision: f64,
    recall: f64,
    f1: f64,
    /// Share of documents with 0, 1, 2 and 3+ predicted causes.
    predicted_cause_counts: [f64; 4],
}

pub fn eval(args: EvalArgs) -> Result<ExitCode> {
    let mut s: EvalSettings = load_settings(args.config.as_deref(), "eval")?;
    if let Some(c) = args.checkpoint {
        s.checkpoint = Some(c);
    }
    if let Some(c) = args.corpus {
        s.corpus = Some(c);
    }
    if let Some(o) = args.out {
        s.out = Some(o);
    }
    if let Some(r) = args.max_oov_rate {
        s.max_oov_rate = r;
    }
    s.oracle_dgl |= args.oracle_dgl;

    let ckpt_path = required(&s.checkpoint, "--checkpoint")?;
    let corpus = required(&s.corpus, "--corpus")?;
    let ckpt = load_checkpoint(ckpt_path).with_context(|| format!("loading {}", ckpt_path.display()))?;
    let dims = *ckpt.model.dims();
    let docs = read_corpus(corpus, dims.max_clauses)?;
    let oov = oov_rate(&docs, &ckpt.vocab);
    if oov > s.max_oov_rate {
        return Err(Error::Compatibility(format!(
            "{:.1}% of the tokens in {} are unknown to the checkpoint vocabulary (limit {:.1}%); \
             the corpus does not match the one the model was trained on",
            100.0 * oov,
            corpus.display(),
            100.0 * s.max_oov_rate
        ))
        .into());
    }
    let mode = if s.oracle_dgl { InferenceMode::Oracle } else { InferenceMode::Predicted };
    let encoded = encode_corpus(&docs, &ckpt.vocab, dims.clip);
    let result = evaluate(&ckpt.model, &encoded, mode)?;
    let m = result.metrics;
    let report = EvalReport {
        documents: docs.len(),
        mode: if s.oracle_dgl { "oracle" } else { "predicted" },
        proposed: m.proposed,
        annotated: m.annotated,
        correct: m.correct,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        predicted_cause_counts: result.histogram.shares,
    };
    let h = result.histogram.shares;
    println!("documents  {}", report.documents);
    println!("mode       {}", report.mode);
    println!("precision  {:.4}  ({} of {} proposed)", m.precision, m.correct, m.proposed);
    println!("recall     {:.4}  ({} of {} annotated)", m.recall, m.correct, m.annotated);
    println!("f1         {:.4}", m.f1);
    println!(
        "predicted causes per document  0: {:.4}  1: {:.4}  2: {:.4}  3+: {:.4}",
        h[0], h[1], h[2], h[3]
    );
    if let Some(out) = &s.out {
        fs::write(out, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", out.display()))?;
        write_manifest(out, "eval", &s)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn ablate(args: AblateArgs) -> Result<ExitCode> {
    let mut s: AblateSettings = load_settings(args.config.as_deref(), "ablate")?;
    if let Some(c) = args.corpus {
        s.corpus = Some(c);
    }
    if let Some(o) = args.out {
        s.out = Some(o);
    }
    if let Some(v) = args.variants {
        s.variants = v.iter().map(|v| v.name().to_string()).collect();
    }
    if let Some(r) = args.reps {
        s.repetitions = r;
    }
    if let Some(f) = args.train_fraction {
        s.train_fraction = f;
    }
    if args.no_timing {
        s.record_timing = false;
    }
    args.model.apply(&mut s.model);
    args.train.apply(&mut s.train);

    let variants = s
        .variants
        .iter()
        .map(|v| v.parse::<Variant>())
        .collect::<Result<Vec<_>, _>>()?;
    if variants.is_empty() {
        bail!("no variants given");
    }
    let corpus = required(&s.corpus, "--corpus")?;
    let out = required(&s.out, "--out")?;
    let docs = read_corpus(corpus, s.model.max_clauses)?;
    let specs: Vec<AblationSpec> = variants
        .iter()
        .map(|&variant| AblationSpec { variant, repetitions: s.repetitions, train_fraction: s.train_fraction })
        .collect();
    let cfg = AblationConfig {
        train: s.train.clone(),
        dims: s.model.dims(1),
        min_count: s.model.min_count,
        seed: s.train.seed,
        record_timing: s.record_timing,
    };
    let results = run_ablation(&docs, &specs, &cfg)?;
    fs::write(out, results.to_jsonl()?).with_context(|| format!("writing {}", out.display()))?;
    let table = results.to_table();
    let table_path = out.with_extension("txt");
    ensure!(table_path != out, "results path must not end in .txt");
    fs::write(&table_path, &table).with_context(|| format!("writing {}", table_path.display()))?;
    write_manifest(out, "ablate", &s)?;
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

pub fn gradcheck(args: GradcheckArgs) -> Result<ExitCode> {
    let mut s: GradcheckSettings = load_settings(args.config.as_deref(), "gradcheck")?;
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.tolerance {
        s.tolerance = v;
    }
    if let Some(v) = args.step {
        s.step = v;
    }
    if let Some(o) = args.out {
        s.out = Some(o);
    }
    let cfg = GradCheckConfig {
        step: s.step,
        tolerance: s.tolerance,
        floor: s.floor,
        max_entries: s.max_entries,
        seed: s.seed,
    };
    let report = model_grad_check(s.seed, &cfg)?;
    for t in &report.tensors {
        println!(
            "{:<26} {:>4}/{:<4} max rel err {:.3e}  {}",
            t.name,
            t.checked,
            t.total,
            t.max_relative_error,
            if t.passed { "ok" } else { "FAIL" }
        );
    }
    if let Some(out) = &s.out {
        fs::write(out, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", out.display()))?;
        write_manifest(out, "gradcheck", &s)?;
    }
    if report.passed() {
        eprintln!("all {} tensors within {:e}", report.tensors.len(), s.tolerance);
        Ok(ExitCode::SUCCESS)
    } else {
        for t in report.failures() {
            eprintln!(
                "gradient mismatch in `{}`: max relative error {:.3e} at entry {} (tolerance {:e})",
                t.name, t.max_relative_error, t.worst_index, s.tolerance
            );
        }
        Ok(ExitCode::FAILURE)
    }
}
