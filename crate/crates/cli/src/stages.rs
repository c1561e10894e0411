//! One function per subcommand. `pipeline` chains the same building blocks.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use iminfector::context;
use iminfector::corpus::{self, CascadeCorpus, EdgeList, NodeId};
use iminfector::diffusion::{DiffusionMatrix, SpreadBudget};
use iminfector::eval::{self, RankedBaseline};
use iminfector::model::{InfectorModel, ModelConfig, TrainReport};
use iminfector::seeder;
use iminfector::synth::{self, SynthConfig};

use crate::error::{reading, require_file, CliError, CliResult};
use crate::manifest::{stage_seed, EpochLoss, Params, RunManifest};
use crate::{
    BaselineArgs, EvaluateArgs, Method, ModelArgs, PipelineArgs, RankArgs, SeedArgs, SplitArgs,
    StatsArgs, SynthArgs, TrainArgs,
};

fn manifest_path(explicit: Option<PathBuf>, out: &Path) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::from(e).context(path.display()))
}

fn load_corpus(flag: &str, path: &Path) -> CliResult<CascadeCorpus> {
    require_file(flag, path)?;
    let file = File::open(path)?;
    reading(flag, path, corpus::parse_cascades(BufReader::new(file)))
}

fn load_edges(flag: &str, path: &Path) -> CliResult<EdgeList> {
    require_file(flag, path)?;
    let file = File::open(path)?;
    reading(flag, path, corpus::parse_edges(BufReader::new(file)))
}

fn save_corpus(corpus: &CascadeCorpus, path: &Path) -> CliResult<()> {
    Ok(corpus::write_cascades(corpus, create(path)?)?)
}

/// Seed rows, `rank TAB node_id TAB score`, in order.
fn write_seeds<'a>(rows: impl IntoIterator<Item = (&'a str, f64)>, path: &Path) -> CliResult<()> {
    let mut out = create(path)?;
    for (rank, (id, score)) in rows.into_iter().enumerate() {
        writeln!(out, "{}\t{id}\t{score}", rank + 1)?;
    }
    out.flush()?;
    Ok(())
}

fn read_seeds(flag: &str, path: &Path) -> CliResult<Vec<NodeId>> {
    require_file(flag, path)?;
    let bad = |line: usize, why: &str| {
        CliError::format(format!("{flag} {} line {line}: {why}", path.display()))
    };
    let mut seeds = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(i + 1, "expected rank, node id and score"));
        }
        if fields[0].parse::<usize>().is_err() || fields[2].parse::<f64>().is_err() {
            return Err(bad(i + 1, "rank or score is not a number"));
        }
        seeds.push(NodeId::new(fields[1]).map_err(|e| bad(i + 1, &e.to_string()))?);
    }
    Ok(seeds)
}

fn model_params(m: &ModelArgs, threads: usize) -> Params {
    Params {
        embed_dim: Some(m.embed_dim),
        learning_rate: Some(m.lr),
        epochs: Some(m.epochs),
        oversample: Some(m.oversample),
        rng_seed: Some(m.rng_seed),
        threads,
        ..Params::default()
    }
}

fn do_split(input: &CascadeCorpus, frac: f64) -> CliResult<(CascadeCorpus, CascadeCorpus)> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(CliError::usage(format!("--train-frac {frac} must lie strictly between 0 and 1")));
    }
    Ok(corpus::temporal_split(input, frac)?)
}

fn do_train(
    train: &CascadeCorpus,
    args: &ModelArgs,
    manifest: &mut RunManifest,
) -> CliResult<(InfectorModel, TrainReport)> {
    if !(args.oversample.is_finite() && args.oversample > 0.0) {
        return Err(CliError::usage(format!("--oversample {} must be positive", args.oversample)));
    }
    let config = ModelConfig {
        embed_dim: args.embed_dim,
        learning_rate: args.lr,
        epochs: args.epochs,
        rng_seed: stage_seed(args.rng_seed, "train"),
    };
    config.validate()?;
    if let Some(path) = &args.dump_pairs {
        let stream = context::build_epoch_stream(train, args.oversample, config.rng_seed, 0)?;
        context::write_pairs(train, &stream, create(path)?)?;
        manifest.output(path);
    }
    let (model, report) = iminfector::fit(train, &config, args.oversample)?;
    manifest.epoch_losses = report
        .epochs
        .iter()
        .map(|e| EpochLoss {
            epoch: e.epoch + 1,
            classify: e.mean_classify_loss,
            regress: e.mean_regress_loss,
        })
        .collect();
    Ok((model, report))
}

fn do_rank(model: &InfectorModel, percent: f64) -> CliResult<(DiffusionMatrix, SpreadBudget)> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(CliError::usage(format!("--prune-percent {percent} must lie in (0, 100]")));
    }
    let matrix = DiffusionMatrix::build(model, percent)?;
    let budgets = matrix.budgets()?;
    Ok((matrix, budgets))
}

fn do_seed(
    matrix: &DiffusionMatrix,
    budgets: &SpreadBudget,
    size: usize,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<Vec<NodeId>> {
    if size == 0 {
        return Err(CliError::usage("--size must be at least 1"));
    }
    let selection = seeder::select_seeds_celf(matrix, budgets, size)?;
    if let Some(asked) = selection.truncated_from {
        let note = format!("only {} of {asked} seeds could be selected", selection.seeds.len());
        eprintln!("iminfector: {note}");
        manifest.notes.push(note);
    }
    write_seeds(selection.seeds.iter().map(|s| (s.label.as_str(), s.omega)), out)?;
    manifest.output(out);
    selection
        .seeds
        .iter()
        .map(|s| NodeId::new(s.label.as_str()).map_err(|e| CliError::format(e.to_string())))
        .collect()
}

fn do_evaluate(seeds: &[NodeId], test: &CascadeCorpus, out: &Path) -> CliResult<usize> {
    let result = eval::dni(seeds, test);
    let mut w = create(out)?;
    writeln!(w, "rank\tnode_id\tadded\tdni")?;
    for (k, ((id, added), dni)) in result.per_seed.iter().zip(&result.cumulative).enumerate() {
        writeln!(w, "{}\t{id}\t{added}\t{dni}", k + 1)?;
    }
    w.flush()?;
    Ok(result.dni)
}

fn do_baseline(ranking: &RankedBaseline, size: usize, out: &Path) -> CliResult<Vec<NodeId>> {
    if size == 0 {
        return Err(CliError::usage("--size must be at least 1"));
    }
    let top = &ranking.ranking[..size.min(ranking.ranking.len())];
    write_seeds(top.iter().map(|(id, s)| (id.as_str(), *s)), out)?;
    Ok(top.iter().map(|(id, _)| id.clone()).collect())
}

pub fn split(a: &SplitArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let params = Params { train_frac: Some(a.train_frac), threads, ..Params::default() };
    let mut m = RunManifest::new("split", params);
    let input = load_corpus("--input", &a.input)?;
    m.input("--input", &a.input)?;
    let (train, test) = m.time("split", || do_split(&input, a.train_frac))?;
    save_corpus(&train, &a.out_train)?;
    save_corpus(&test, &a.out_test)?;
    m.output(&a.out_train);
    m.output(&a.out_test);
    println!("{} train / {} test cascades", train.len(), test.len());
    m.write(&manifest_path(manifest, &a.out_train))
}

pub fn stats(a: &StatsArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let mut m = RunManifest::new("stats", Params { threads, ..Params::default() });
    let train = load_corpus("--train", &a.train)?;
    let test = load_corpus("--test", &a.test)?;
    m.input("--train", &a.train)?;
    m.input("--test", &a.test)?;
    m.time("stats", || {
        Ok(corpus::write_stats(&corpus::initiator_stats(&train, &test), create(&a.out)?)?)
    })?;
    m.output(&a.out);
    m.write(&manifest_path(manifest, &a.out))
}

pub fn train(a: &TrainArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let mut m = RunManifest::new("train", model_params(&a.model, threads));
    let train = load_corpus("--cascades", &a.cascades)?;
    m.input("--cascades", &a.cascades)?;
    let (model, _) = {
        let mut inner = RunManifest::new("train", Params::default());
        let out = m.time("train", || do_train(&train, &a.model, &mut inner))?;
        m.epoch_losses = inner.epoch_losses;
        m.outputs.extend(inner.outputs);
        out
    };
    model.save(&a.out)?;
    m.output(&a.out);
    for e in &m.epoch_losses {
        println!("epoch {}\tL_t {:.6}\tL_c {:.6}", e.epoch, e.classify, e.regress);
    }
    m.write(&manifest_path(manifest, &a.out))
}

pub fn rank(a: &RankArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let params = Params { prune_percent: Some(a.prune_percent), threads, ..Params::default() };
    let mut m = RunManifest::new("rank", params);
    require_file("--model", &a.model)?;
    let model = reading("--model", &a.model, InfectorModel::load(&a.model))?;
    m.input("--model", &a.model)?;
    let (matrix, budgets) = m.time("rank", || do_rank(&model, a.prune_percent))?;
    matrix.save(&budgets, &a.out)?;
    m.output(&a.out);
    println!("{} of {} influencers kept", matrix.num_candidates(), model.num_influencers());
    m.write(&manifest_path(manifest, &a.out))
}

pub fn seed(a: &SeedArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let params = Params { size: Some(a.size), threads, ..Params::default() };
    let mut m = RunManifest::new("seed", params);
    require_file("--dmatrix", &a.dmatrix)?;
    let (matrix, budgets) = reading("--dmatrix", &a.dmatrix, DiffusionMatrix::load(&a.dmatrix))?;
    m.input("--dmatrix", &a.dmatrix)?;
    let mut notes = RunManifest::new("seed", Params::default());
    m.time("seed", || do_seed(&matrix, &budgets, a.size, &a.out, &mut notes))?;
    m.notes = notes.notes;
    m.outputs = notes.outputs;
    m.write(&manifest_path(manifest, &a.out))
}

pub fn evaluate(a: &EvaluateArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let mut m = RunManifest::new("evaluate", Params { threads, ..Params::default() });
    let seeds = read_seeds("--seeds", &a.seeds)?;
    let test = load_corpus("--test", &a.test)?;
    m.input("--seeds", &a.seeds)?;
    m.input("--test", &a.test)?;
    let dni = m.time("evaluate", || do_evaluate(&seeds, &test, &a.out))?;
    m.output(&a.out);
    println!("DNI {dni}");
    m.write(&manifest_path(manifest, &a.out))
}

pub fn baseline(a: &BaselineArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let params = Params {
        size: Some(a.size),
        method: Some(format!("{:?}", a.method).to_lowercase()),
        threads,
        ..Params::default()
    };
    let mut m = RunManifest::new("baseline", params);
    let ranking = match a.method {
        Method::Kcore => {
            let path = a.edges.as_deref().ok_or_else(|| CliError::usage("--edges is required for kcore"))?;
            let edges = load_edges("--edges", path)?;
            m.input("--edges", path)?;
            m.time("baseline", || Ok(eval::kcore_ranking(&edges)))?
        }
        Method::Avgsize => {
            let path = a.train.as_deref().ok_or_else(|| CliError::usage("--train is required for avgsize"))?;
            let train = load_corpus("--train", path)?;
            m.input("--train", path)?;
            m.time("baseline", || Ok(eval::avg_size_ranking(&train)))?
        }
    };
    do_baseline(&ranking, a.size, &a.out)?;
    m.output(&a.out);
    m.write(&manifest_path(manifest, &a.out))
}

pub fn synth(a: &SynthArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let params = Params { rng_seed: Some(a.rng_seed), threads, ..Params::default() };
    let mut m = RunManifest::new("synth", params);
    let config = SynthConfig {
        nodes: a.nodes,
        cascades: a.cascades,
        planted: a.planted,
        rng_seed: stage_seed(a.rng_seed, "synth"),
        ..SynthConfig::default()
    };
    let s = m.time("synth", || Ok(synth::generate(&config)?))?;
    save_corpus(&s.corpus, &a.out)?;
    m.output(&a.out);
    if let Some(path) = &a.edges_out {
        corpus::write_edges(&s.edges, create(path)?)?;
        m.output(path);
    }
    if let Some(path) = &a.planted_out {
        let mut w = create(path)?;
        for id in &s.planted {
            writeln!(w, "{id}")?;
        }
        w.flush()?;
        m.output(path);
    }
    m.write(&manifest_path(manifest, &a.out))
}

pub fn pipeline(a: &PipelineArgs, threads: usize, manifest: Option<PathBuf>) -> CliResult<()> {
    let mut params = model_params(&a.model, threads);
    params.train_frac = Some(a.train_frac);
    params.prune_percent = Some(a.prune_percent);
    params.size = Some(a.size);
    let mut m = RunManifest::new("pipeline", params);
    let input = load_corpus("--cascades", &a.cascades)?;
    m.input("--cascades", &a.cascades)?;
    let edges = match &a.edges {
        Some(path) => {
            let e = load_edges("--edges", path)?;
            m.input("--edges", path)?;
            Some(e)
        }
        None => None,
    };
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::from(e).context("--out-dir"))?;
    let path = |name: &str| a.out_dir.join(name);

    let (train, test) = m.time("split", || do_split(&input, a.train_frac))?;
    save_corpus(&train, &path("train.txt"))?;
    save_corpus(&test, &path("test.txt"))?;
    m.output(&path("train.txt"));
    m.output(&path("test.txt"));

    m.time("stats", || {
        let rows = corpus::initiator_stats(&train, &test);
        Ok(corpus::write_stats(&rows, create(&path("stats.tsv"))?)?)
    })?;
    m.output(&path("stats.tsv"));

    let mut inner = RunManifest::new("train", Params::default());
    let (model, _) = m.time("train", || do_train(&train, &a.model, &mut inner))?;
    m.epoch_losses = inner.epoch_losses;
    m.outputs.extend(inner.outputs);
    model.save(path("model.infv"))?;
    m.output(&path("model.infv"));

    let (matrix, budgets) = m.time("rank", || do_rank(&model, a.prune_percent))?;
    matrix.save(&budgets, path("dmatrix.bin"))?;
    m.output(&path("dmatrix.bin"));

    let mut notes = RunManifest::new("seed", Params::default());
    let seeds = m.time("seed", || do_seed(&matrix, &budgets, a.size, &path("seeds.txt"), &mut notes))?;
    m.notes = notes.notes;
    m.outputs.extend(notes.outputs);

    let dni = m.time("evaluate", || do_evaluate(&seeds, &test, &path("result.tsv")))?;
    m.output(&path("result.tsv"));
    println!("iminfector DNI {dni}");

    let mut baselines = vec![("avgsize", eval::avg_size_ranking(&train))];
    if let Some(edges) = &edges {
        baselines.push(("kcore", eval::kcore_ranking(edges)));
    }
    for (name, ranking) in baselines {
        let seeds_path = path(&format!("baseline-{name}.txt"));
        let result_path = path(&format!("baseline-{name}-result.tsv"));
        let dni = m.time(&format!("baseline-{name}"), || {
            let seeds = do_baseline(&ranking, a.size, &seeds_path)?;
            do_evaluate(&seeds, &test, &result_path)
        })?;
        m.output(&seeds_path);
        m.output(&result_path);
        println!("{name} DNI {dni}");
    }
    m.write(&manifest.unwrap_or_else(|| path("manifest.json")))
}
