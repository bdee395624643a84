use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use prominence_core::eval::{
    argmax_face, fixation_shares, inter_human_agreement, leave_one_human_out_training,
    saliency_vs_importance, select_description, selection_agreement, CvConfig, EvalDataset,
    EvalError, FixationData,
};
use prominence_core::features::{EnergyMode, ExtractOptions};
use prominence_core::ranking::{outcome_groups, EloConfig, OutcomeGroup};
use prominence_core::svr::{default_c_grid, score_individuals, SolverConfig};
use prominence_core::{elo_rank, RankingTable};

use crate::error::{AppError, Result};
use crate::formats::{features_tsv, parse_fixations, parse_sentences, ranking_tsv, ModelFile};
use crate::io::{read_text, write_atomic};
use crate::manifest::{load_corpus, LoadedCorpus};
use crate::pipeline::{cross_validate_parallel, extract_all, saliency_inputs, train_full, ExtractSettings};
use crate::report::ExperimentReport;
use crate::synthetic::{generate, write_world, SyntheticConfig};

#[derive(Debug, Parser)]
#[command(name = "prominence", version, about = "Rank people in photos by annotated importance")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Corpus manifest (JSON).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Comma-separated C values; defaults to 2^-6 ... 2^6 in steps of 4x.
    #[arg(long, global = true, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long, global = true, default_value_t = 0.5)]
    pub nu: f64,
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Skip image decoding; sharpness is zero-filled.
    #[arg(long, global = true)]
    pub no_pixels: bool,
    /// Ignore pose sidecar data.
    #[arg(long, global = true)]
    pub no_pose: bool,
    #[arg(long, global = true, value_enum, default_value_t = Energy::Squared)]
    pub energy: Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Energy {
    Squared,
    Magnitude,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write per-face features to features.tsv.
    Extract,
    /// Fit a model on every pair and write model.json.
    Train {
        /// Folds of the held-out split used to pick C.
        #[arg(long, default_value_t = 10)]
        folds: usize,
    },
    /// Cross-validate the model and baselines; writes report.tsv and report.json.
    Eval {
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Fixation points (image_id, x, y) for the saliency baseline.
        #[arg(long)]
        fixations: Option<PathBuf>,
        /// Also rerun the evaluation once per worker with that worker
        /// removed from the ground truth.
        #[arg(long)]
        leave_one_human_out: bool,
    },
    /// Elo rankings per image (and across images per person); writes ranking.tsv.
    Rank {
        /// One outcome per judgment instead of one per aggregated pair.
        #[arg(long)]
        per_judgment: bool,
    },
    /// Compare importance rankings with fixation rankings; writes saliency.tsv.
    SaliencyCompare {
        #[arg(long)]
        fixations: PathBuf,
    },
    /// Pick one sentence per image from the face scored most important;
    /// writes descriptions.tsv.
    Describe {
        /// Rows of image_id, face_id, sentence.
        #[arg(long)]
        sentences: PathBuf,
        /// Trained model; fitted on the corpus when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with known linear importance.
    Synth {
        #[arg(long, default_value_t = 100)]
        images: usize,
        #[arg(long, default_value_t = 10)]
        workers: usize,
    },
}

impl Global {
    fn loaded(&self) -> Result<LoadedCorpus> {
        let path = self
            .manifest
            .as_deref()
            .ok_or_else(|| AppError::Input("--manifest is required".into()))?;
        load_corpus(path)
    }

    fn extract_settings(&self) -> ExtractSettings {
        ExtractSettings {
            use_pixels: !self.no_pixels,
            options: ExtractOptions {
                energy: match self.energy {
                    Energy::Squared => EnergyMode::Squared,
                    Energy::Magnitude => EnergyMode::Magnitude,
                },
                use_pose: !self.no_pose,
            },
        }
    }

    fn cv_config(&self, folds: usize) -> Result<CvConfig> {
        let c_grid = self.c_grid.clone().unwrap_or_else(default_c_grid);
        if c_grid.is_empty() || c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(AppError::Input("--c-grid values must be positive".into()));
        }
        let solver = SolverConfig {
            c: c_grid[0],
            nu: self.nu,
            tolerance: self.tolerance,
            seed: self.seed,
            ..SolverConfig::default()
        };
        solver.validate()?;
        Ok(CvConfig {
            folds,
            seed: self.seed,
            c_grid,
            solver,
            ..CvConfig::default()
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_atomic(&path, contents.as_bytes())?;
        Ok(path)
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Extract => extract(g),
        Command::Train { folds } => train(g, *folds),
        Command::Eval {
            folds,
            fixations,
            leave_one_human_out,
        } => eval(g, *folds, fixations.as_deref(), *leave_one_human_out),
        Command::Rank { per_judgment } => rank(g, *per_judgment),
        Command::SaliencyCompare { fixations } => saliency_compare(g, fixations),
        Command::Describe { sentences, model } => describe(g, sentences, model.as_deref()),
        Command::Synth { images, workers } => synth(g, *images, *workers),
    }
}

fn extract(g: &Global) -> Result<()> {
    let loaded = g.loaded()?;
    let ex = extract_all(&loaded, &g.extract_settings())?;
    warn_all(&ex.warnings);
    g.write("features.tsv", &features_tsv(&loaded.corpus, &ex.features))?;
    println!(
        "faces={} images={} missing_pixels={} warnings={}",
        loaded.corpus.face_count(),
        loaded.corpus.images().len(),
        ex.missing_pixels,
        ex.warnings.len()
    );
    Ok(())
}

fn train(g: &Global, folds: usize) -> Result<()> {
    let loaded = g.loaded()?;
    let ex = extract_all(&loaded, &g.extract_settings())?;
    warn_all(&ex.warnings);
    let no_saliency = vec![None; ex.features.len()];
    let data = EvalDataset::new(&loaded.corpus, &ex.features, &no_saliency)?;
    let (model, c) = train_full(&data, &g.cv_config(folds)?)?;
    let path = g.write("model.json", &ModelFile::new(&model).to_json())?;
    println!(
        "pairs={} c={} converged={} -> {}",
        data.len(),
        c,
        model.diagnostics.converged,
        path.display()
    );
    Ok(())
}

fn load_fixations(loaded: &LoadedCorpus, path: &Path) -> Result<FixationData> {
    let rows = parse_fixations(&read_text(path)?, path)?;
    let fix = FixationData::from_rows(&loaded.corpus, rows)?;
    if fix.dropped() > 0 {
        eprintln!("warning: {} fixations outside their image were dropped", fix.dropped());
    }
    Ok(fix)
}

fn eval(g: &Global, folds: usize, fixations: Option<&Path>, loho: bool) -> Result<()> {
    let loaded = g.loaded()?;
    let cfg = g.cv_config(folds)?;
    let ex = extract_all(&loaded, &g.extract_settings())?;
    warn_all(&ex.warnings);
    let fix = fixations.map(|p| load_fixations(&loaded, p)).transpose()?;
    let (saliency, sal_warnings) = saliency_inputs(&loaded, fix.as_ref());
    warn_all(&sal_warnings);

    let data = EvalDataset::new(&loaded.corpus, &ex.features, &saliency)?;
    let eval = cross_validate_parallel(&data, &cfg)?;
    let inter_human = match inter_human_agreement(&loaded.corpus) {
        Ok(a) => Some(a),
        Err(EvalError::InsufficientJudgments(why)) => {
            eprintln!("warning: no inter-human agreement: {why}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let (leave_one_human_out, held_out_workers) = if loho {
        let runs = leave_one_human_out_training(&data, &cfg)?;
        (
            ExperimentReport::held_out_summary(&eval, &runs),
            runs.into_iter().map(|r| r.worker).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let report = ExperimentReport {
        images: loaded.corpus.images().len(),
        faces: loaded.corpus.face_count(),
        missing_pixel_images: ex.missing_pixels,
        eval,
        inter_human,
        leave_one_human_out,
        held_out_workers,
    };
    g.write("report.tsv", &report.to_tsv())?;
    g.write("report.json", &report.to_json())?;
    print!("{}", report.to_tsv());
    Ok(())
}

fn groups(loaded: &LoadedCorpus, per_judgment: bool) -> Result<BTreeMap<String, OutcomeGroup>> {
    let judged: Vec<_> = loaded
        .corpus
        .pairs()
        .iter()
        .filter(|p| !p.judgments.is_empty())
        .cloned()
        .collect();
    Ok(outcome_groups(&judged, per_judgment)?)
}

fn elo_config(g: &Global) -> EloConfig {
    EloConfig {
        seed: g.seed,
        ..EloConfig::default()
    }
}

fn rank(g: &Global, per_judgment: bool) -> Result<()> {
    let loaded = g.loaded()?;
    let cfg = elo_config(g);
    let tables = groups(&loaded, per_judgment)?
        .into_iter()
        .map(|(k, grp)| Ok((k, elo_rank(&grp.items, &grp.outcomes, &cfg)?)))
        .collect::<Result<BTreeMap<String, RankingTable>>>()?;
    let path = g.write("ranking.tsv", &ranking_tsv(&tables))?;
    println!("groups={} -> {}", tables.len(), path.display());
    Ok(())
}

fn saliency_compare(g: &Global, fixations: &Path) -> Result<()> {
    let loaded = g.loaded()?;
    let fix = load_fixations(&loaded, fixations)?;
    let shares = fixation_shares(&loaded.corpus, &fix);
    let cmp = saliency_vs_importance(&loaded.corpus, &shares, &elo_config(g))?;
    let mut out = String::from("image_id\ttau\tties\tfallback\n");
    for c in &cmp.images {
        let _ = writeln!(out, "{}\t{:.6}\t{}\t{}", c.image_id, c.tau, c.ties, c.fallback);
    }
    out.push_str("# confusion rows=saliency columns=importance\n");
    for row in &cmp.confusion {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "# {}", cells.join("\t"));
    }
    g.write("saliency.tsv", &out)?;
    println!(
        "images={} mean_tau={:.6} std_tau={:.6} top1={:.6} without_fixations={}",
        cmp.images.len(),
        cmp.mean_tau,
        cmp.std_tau,
        cmp.top1_agreement,
        cmp.images_without_fixations
    );
    Ok(())
}

fn describe(g: &Global, sentences: &Path, model: Option<&Path>) -> Result<()> {
    let loaded = g.loaded()?;
    let sentences = parse_sentences(&read_text(sentences)?, sentences)?;
    let ex = extract_all(&loaded, &g.extract_settings())?;
    warn_all(&ex.warnings);
    let model = match model {
        Some(p) => ModelFile::from_json(&read_text(p)?, p)?.model,
        None => {
            let none = vec![None; ex.features.len()];
            let data = EvalDataset::new(&loaded.corpus, &ex.features, &none)?;
            train_full(&data, &g.cv_config(10)?)?.0
        }
    };
    let oracle = groups(&loaded, false)?;
    let cfg = elo_config(g);
    let empty = BTreeMap::new();

    let mut out = String::from("image_id\tface_id\tsentence\n");
    let (mut picked, mut truth) = (Vec::new(), Vec::new());
    for (image, f) in loaded.corpus.images().iter().zip(&ex.features) {
        let faces = sentences.get(&image.image_id).unwrap_or(&empty);
        let scores = score_individuals(&model, &f.vectors)?;
        let sentence = select_description(image, faces, &scores)?;
        let best = argmax_face(image, &scores).expect("images have faces");
        let _ = writeln!(out, "{}\t{}\t{}", image.image_id, image.faces[best].face_id, sentence);
        if let Some(grp) = oracle.get(&image.image_id) {
            let table = elo_rank(&grp.items, &grp.outcomes, &cfg)?;
            if let Some(top) = image.face_index(&table.entries[0].item_id) {
                picked.push(best);
                truth.push(top);
            }
        }
    }
    g.write("descriptions.tsv", &out)?;
    match selection_agreement(&picked, &truth) {
        Ok(a) => println!("images={} agreement_with_annotations={a:.6}", picked.len()),
        Err(_) => println!("images={} agreement_with_annotations=NA", loaded.corpus.images().len()),
    }
    Ok(())
}

fn synth(g: &Global, images: usize, workers: usize) -> Result<()> {
    if images == 0 || workers == 0 {
        return Err(AppError::Input("--images and --workers must be positive".into()));
    }
    let cfg = SyntheticConfig {
        images,
        workers,
        seed: g.seed,
        ..SyntheticConfig::default()
    };
    let world = generate(&cfg)?;
    write_world(&g.out, &world)?;
    println!(
        "images={} faces={} pairs={} -> {}",
        world.corpus.images().len(),
        world.corpus.face_count(),
        world.corpus.pairs().len(),
        g.out.display()
    );
    Ok(())
}
