use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use authlink_core::blocking::{
    assemble_block, build_name_index, split_block, NameIndex, SplitAssignment, SplitRatios, SplitSet,
};
use authlink_core::classifier::{load_checkpoint, save_checkpoint, ModelParams};
use authlink_core::corpus::record::{parse_record_line, write_record};
use authlink_core::corpus::{
    default_filter, parse_dblp_stream, read_all_records, read_records, record_in_block, write_records,
    AtomicNameVariate, BibRecord, BlockStatsBuilder, CorpusCountsBuilder,
};
use authlink_core::embedding::{EmbeddingStore, Provenance, Providers};
use authlink_core::evaluation::{evaluate_block, EvalMode};
use authlink_core::inference::{resolve, variate_dir_name, DirRegistry, MemoryRegistry, ModelRegistry, MODEL_FILE};
use authlink_core::synthgen::{generate_corpus, synthetic_text_store, SynthSpec, TopicEmbedder};
use authlink_core::training::{train_block, write_history, TrainConfig};
use authlink_core::util::atomic_write;
use rayon::prelude::*;

use crate::{data, CliError, EmbeddingArgs, EvaluateArgs, ModeArg, PredictArgs, SynthArgs, TrainArgs};

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(data(path.display()))
}

fn load_records(path: &Path) -> Result<Vec<BibRecord>, CliError> {
    read_all_records(open(path)?).map_err(data(path.display()))
}

fn load_providers(args: &EmbeddingArgs) -> Result<Providers, CliError> {
    let mut text: Option<EmbeddingStore> = None;
    for path in &args.stores {
        let store = EmbeddingStore::load(path, Provenance::Contextual).map_err(data(path.display()))?;
        match &mut text {
            None => text = Some(store),
            Some(t) => t.extend(store).map_err(data(path.display()))?,
        }
    }
    let text = Arc::new(text.expect("clap requires at least one store"));
    Ok(match &args.name_embeddings {
        None => Providers::with_text(text),
        Some(path) => {
            let names = EmbeddingStore::load(path, Provenance::CharLevel).map_err(data(path.display()))?;
            Providers::new(Arc::new(names), text)
        }
    })
}

pub fn ingest(xml: &Path, output: &Path) -> Result<(), CliError> {
    let mut reader = parse_dblp_stream(open(xml)?, default_filter());
    let mut failure = None;
    let mut written = 0u64;
    let result = atomic_write(output, |w| {
        for record in reader.by_ref() {
            match record {
                Ok(r) => {
                    write_record(&mut *w, &r)?;
                    written += 1;
                }
                Err(e) => {
                    failure = Some(e);
                    return Err(io::Error::other("parse failed"));
                }
            }
        }
        Ok(())
    });
    if let Some(e) = failure {
        return Err(CliError::Data(format!("{}: {e}", xml.display())));
    }
    result.map_err(data(output.display()))?;
    println!("{written} records written, {} entries skipped", reader.skipped());
    Ok(())
}

pub fn stats(records: &Path, anv: Option<&str>) -> Result<(), CliError> {
    let anv = anv
        .map(AtomicNameVariate::from_variate_str)
        .transpose()
        .map_err(|e| CliError::Usage(format!("--anv: {e}")))?;
    let mut counts = CorpusCountsBuilder::default();
    let mut block = anv.as_ref().map(BlockStatsBuilder::new);
    for record in read_records(open(records)?) {
        let record = record.map_err(data(records.display()))?;
        counts.add(&record);
        if let (Some(b), Some(v)) = (&mut block, &anv) {
            if record_in_block(&record, v) {
                b.add(&record).map_err(data(v))?;
            }
        }
    }
    println!("{}", counts.finish());
    if let Some(b) = block {
        println!("{}", b.finish().map_err(data("block statistics"))?);
    }
    Ok(())
}

pub fn index(records: &Path, output: &Path) -> Result<(), CliError> {
    let records = load_records(records)?;
    let index = build_name_index(&records);
    index.save(output).map_err(data(output.display()))?;
    println!(
        "{} names, {} variates, {} authors",
        index.name_count(),
        index.variate_count(),
        index.author_count()
    );
    Ok(())
}

fn train_one(
    anv: &str,
    records: &[BibRecord],
    index: &NameIndex,
    providers: &Providers,
    config: &TrainConfig,
    root: &Path,
) -> Result<String, CliError> {
    let variate = AtomicNameVariate::from_variate_str(anv).map_err(|e| CliError::Usage(format!("--anv: {e}")))?;
    let block = assemble_block(&variate, records, index).map_err(data(anv))?;
    let split = split_block(&block, SplitRatios::default(), config.seed).map_err(data(anv))?;
    let trained = train_block(&block, &split, providers, config).map_err(data(anv))?;

    let dir = root.join(variate_dir_name(anv));
    std::fs::create_dir_all(&dir).map_err(data(dir.display()))?;
    split.save(&dir.join("split.tsv")).map_err(data(dir.display()))?;
    atomic_write(&dir.join("history.tsv"), |w| write_history(w, &trained.history)).map_err(data(dir.display()))?;
    save_checkpoint(&dir.join(MODEL_FILE), &trained.model).map_err(data(dir.display()))?;
    Ok(format!(
        "{anv}\t{} authors\t{} epochs\tbest epoch {}\tval accuracy {:.4}",
        block.class_count(),
        trained.history.len(),
        trained.best_epoch,
        trained.model.meta.val_accuracy
    ))
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let mut config = match &a.config {
        Some(p) => TrainConfig::load(p).map_err(data(p.display()))?,
        None => TrainConfig::default(),
    };
    config.seed = a.seed;
    let providers = load_providers(&a.embeddings)?;
    let records = load_records(&a.records)?;
    let index = NameIndex::load(&a.index).map_err(data(a.index.display()))?;
    let variates: Vec<String> = match (&a.anv, a.top_n) {
        (Some(v), _) => vec![v.clone()],
        (None, Some(k)) => index.top_variates(k).into_iter().map(|(v, _)| v).collect(),
        (None, None) => unreachable!("clap requires --anv or --top-n"),
    };
    if variates.is_empty() {
        return Err(CliError::Data("the index has no variate shared by two or more authors".into()));
    }
    std::fs::create_dir_all(&a.output).map_err(data(a.output.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("--workers: {e}")))?;
    let results: Vec<Result<String, CliError>> = pool.install(|| {
        variates
            .par_iter()
            .map(|v| train_one(v, &records, &index, &providers, &config, &a.output))
            .collect()
    });
    let mut first_error = None;
    for r in results {
        match r {
            Ok(line) => println!("{line}"),
            Err(e) => {
                eprintln!("error: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

pub fn predict(a: PredictArgs) -> Result<(), CliError> {
    let record = parse_record_line(&a.record)
        .map_err(data("--record"))?
        .validate()
        .map_err(data("--record"))?;
    let index = NameIndex::load(&a.index).map_err(data(a.index.display()))?;
    let providers = load_providers(&a.embeddings)?;
    let registry: Box<dyn ModelRegistry> = if a.model.is_dir() {
        Box::new(DirRegistry::new(&a.model))
    } else {
        let mut r = MemoryRegistry::default();
        r.insert(load_checkpoint(&a.model).map_err(data(a.model.display()))?);
        Box::new(r)
    };
    let resolution = resolve(&record, &a.target, &index, registry.as_ref(), &providers).map_err(data("predict"))?;
    println!("{resolution}");
    Ok(())
}

fn load_split(path: &Path) -> Result<SplitAssignment, CliError> {
    SplitAssignment::read_from(open(path)?).map_err(data(path.display()))
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let model: ModelParams = load_checkpoint(&a.model).map_err(data(a.model.display()))?;
    let providers = load_providers(&a.embeddings)?;
    let records = load_records(&a.records)?;
    let split = load_split(&a.split)?;
    let index = build_name_index(&records);
    let anv = AtomicNameVariate::from_variate_str(&model.meta.anv).map_err(data(a.model.display()))?;
    let block = assemble_block(&anv, &records, &index).map_err(data(&anv))?;
    let test = split.pairs_in(&block, SplitSet::Test);
    let mode = match a.mode {
        ModeArg::All => EvalMode::All,
        ModeArg::Anv => EvalMode::Anv,
    };
    let report = evaluate_block(&model, &block, &test, mode, &providers).map_err(data(&anv))?;
    if a.machine {
        print!("{}", report.to_machine_lines());
    } else {
        print!("{}", report.to_table());
    }
    io::stdout().flush().map_err(data("stdout"))
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut spec = SynthSpec::load(&a.spec).map_err(data(a.spec.display()))?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let corpus = generate_corpus(&spec).map_err(data(a.spec.display()))?;
    atomic_write(&a.output, |w| write_records(w, &corpus.records)).map_err(data(a.output.display()))?;
    if let Some(path) = &a.truth {
        atomic_write(path, |w| corpus.write_truth(w)).map_err(data(path.display()))?;
    }
    if let Some(path) = &a.embeddings_out {
        let store = synthetic_text_store(&corpus.records, &TopicEmbedder::new(a.dim, spec.seed));
        store.save(path).map_err(data(path.display()))?;
    }
    println!("{} records, {} target occurrences", corpus.records.len(), corpus.truth.len());
    Ok(())
}
