//! Command-line interface. Every subcommand wraps one library operation.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use facelight_core::dataset::{DatasetManifest, LabelCounts, DEFAULT_FACE_SIZE, DEFAULT_VAL_FRACTION};
use facelight_core::facegen::{generate_face, monk_tones, standard_tones, ToneSpec};
use facelight_core::illum::TrainConfig;
use facelight_core::relight::{pattern_grid, DEFAULT_PATTERN_COUNT};
use facelight_core::shade::{extract_product_color, Catalog, ProductShade, DEFAULT_RECOMMEND_THRESHOLD, REPORT_THRESHOLDS};
use serde::{Deserialize, Serialize};

use crate::api;
use crate::error::{Error, Result};
use crate::experiments::{
    manifest_threshold_report, manifest_variance, synthetic_variance, threshold_table, variance_table,
};
use crate::formats::{read_catalog, read_model, read_patterns, to_json_string, write_catalog, write_json, write_model, CatalogJson};
use crate::io::{read_image, read_mask, save_face, FaceMeta};
use crate::pipeline::{evaluate_manifest, synthesize, train_manifest, SynthOptions, MANIFEST_FILE, TRAIN_FILE, VAL_FILE};
use crate::service::{serve, AppState, DEFAULT_PORT};

#[derive(Debug, Parser)]
#[command(name = "facelight", version, about = "Face illumination assessment and foundation shade matching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one synthetic face asset (albedo, normals, masks).
    Facegen(FacegenArgs),
    /// Enumerate and label the lighting pattern grid.
    Patterns(PatternsArgs),
    /// Render a faces × tones × patterns corpus with manifests.
    Synth(SynthArgs),
    /// Train the illumination classifier on a manifest.
    Train(TrainArgs),
    /// Evaluate a model on a manifest.
    Eval(EvalArgs),
    /// Build a catalog CSV from product swatch images.
    ExtractCatalog(ExtractCatalogArgs),
    /// Rank catalog shades against the skin tone in a photo.
    Recommend(RecommendArgs),
    /// Skin-tone color difference to the best photo, by illumination group.
    ReportVariance(ReportVarianceArgs),
    /// Shades within distance thresholds of each illumination group.
    ReportThresholds(ReportThresholdsArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct JsonFlag {
    /// Print machine-readable JSON to stdout.
    #[arg(long)]
    pub json: bool,
}

/// `4` (standard), `6` (Monk-spanning) or comma-separated blend values.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneSet(pub Vec<ToneSpec>);

pub fn parse_tones(s: &str) -> std::result::Result<ToneSet, String> {
    match s.trim() {
        "4" => Ok(ToneSet(standard_tones())),
        "6" => Ok(ToneSet(monk_tones())),
        list => {
            let tones = list
                .split(',')
                .map(|v| {
                    let t: f64 = v.trim().parse().map_err(|_| format!("invalid tone value {v:?}"))?;
                    ToneSpec::from_t(t).map_err(|e| e.to_string())
                })
                .collect::<std::result::Result<Vec<_>, String>>()?;
            if tones.len() < 2 && !list.contains(',') && !list.contains('.') {
                return Err(format!("expected 4, 6 or a comma-separated list of blend values, got {list:?}"));
            }
            Ok(ToneSet(tones))
        }
    }
}

fn parse_threshold(v: &str) -> std::result::Result<f64, String> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|t| t.is_finite() && *t >= 0.0)
        .ok_or_else(|| format!("invalid threshold {v:?}"))
}

#[derive(Debug, Args)]
pub struct FacegenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Blend value in [0, 1] from dark to light.
    #[arg(long, default_value_t = 0.5)]
    pub tone: f64,
    #[arg(long, default_value_t = DEFAULT_FACE_SIZE)]
    pub size: u32,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct PatternsArgs {
    #[arg(long, default_value_t = DEFAULT_PATTERN_COUNT)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub faces: usize,
    /// 4, 6 or comma-separated blend values.
    #[arg(long, default_value = "4", value_parser = parse_tones)]
    pub tones: ToneSet,
    #[arg(long)]
    pub patterns: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_FACE_SIZE)]
    pub size: u32,
    #[arg(long, default_value_t = DEFAULT_VAL_FRACTION)]
    pub val_fraction: f64,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub lr: f64,
    /// Loss weight of Good samples; defaults to #Bad / #Good.
    #[arg(long)]
    pub good_weight: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct ExtractCatalogArgs {
    /// Directory of `<product_id>/<shade_id>.png` swatches.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Skin mask PNG; a centered circle is used when omitted.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub product_id: Option<String>,
    #[arg(long, default_value_t = DEFAULT_RECOMMEND_THRESHOLD)]
    pub threshold: f64,
    /// Include the illumination verdict from this model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct ReportVarianceArgs {
    /// Synthetic study: patterns to render each identity under.
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pub patterns: Option<PathBuf>,
    /// Identities for the synthetic study.
    #[arg(long, default_value = "6", value_parser = parse_tones)]
    pub tones: ToneSet,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_FACE_SIZE)]
    pub size: u32,
    /// Corpus study: group each (face, tone) of this manifest.
    #[arg(long, requires = "model")]
    pub manifest: Option<PathBuf>,
    /// Picks the best photo and the groups in the corpus study.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct ReportThresholdsArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Group photos by this model's verdict instead of the manifest labels.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = REPORT_THRESHOLDS, value_parser = parse_threshold)]
    pub thresholds: Vec<f64>,
    #[command(flatten)]
    pub json: JsonFlag,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "FACELIGHT_MODEL")]
    pub model: Option<PathBuf>,
    #[arg(long, env = "FACELIGHT_CATALOG")]
    pub catalog: Option<PathBuf>,
    #[arg(long, env = "FACELIGHT_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, env = "FACELIGHT_CORS_ORIGIN")]
    pub cors_origin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternsSummary {
    pub path: PathBuf,
    pub count: usize,
    pub good: usize,
    pub bad: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub out_dir: PathBuf,
    pub samples: usize,
    pub faces: usize,
    pub counts: BTreeMap<String, LabelCounts>,
    pub manifest: PathBuf,
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub model: PathBuf,
    pub samples: usize,
    pub good_class_weight: f64,
    pub epoch_losses: Vec<f64>,
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) {
    if json {
        print!("{}", to_json_string(value));
    } else {
        print!("{}", text());
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Facegen(a) => {
            let tone = ToneSpec::from_t(a.tone)?;
            let face = generate_face(a.seed, &tone, a.size)?;
            save_face(&a.out, &face)?;
            let meta = FaceMeta {
                seed: face.seed,
                size: face.size(),
                tone,
                center_x: face.center_x(),
            };
            emit(a.json.json, &meta, || format!("wrote face {} to {}\n", a.seed, a.out.display()));
        }
        Command::Patterns(a) => {
            let patterns = pattern_grid(a.count, a.seed);
            write_json(&a.out, &patterns)?;
            let good = patterns.iter().filter(|p| p.label.is_good()).count();
            let summary = PatternsSummary {
                path: a.out.clone(),
                count: patterns.len(),
                good,
                bad: patterns.len() - good,
            };
            emit(a.json.json, &summary, || {
                format!("wrote {} patterns ({} good, {} bad) to {}\n", summary.count, good, summary.bad, a.out.display())
            });
        }
        Command::Synth(a) => {
            let patterns = read_patterns(&a.patterns)?;
            let opts = SynthOptions {
                n_faces: a.faces,
                tones: a.tones.0,
                seed: a.seed,
                size: a.size,
                val_fraction: a.val_fraction,
            };
            let manifest = synthesize(&a.out, &patterns, &opts)?;
            let split_written = a.out.join(TRAIN_FILE).exists() && manifest.face_seeds().len() >= 5;
            let summary = SynthSummary {
                out_dir: a.out.clone(),
                samples: manifest.len(),
                faces: manifest.face_seeds().len(),
                counts: manifest.counts.clone(),
                manifest: a.out.join(MANIFEST_FILE),
                train: split_written.then(|| a.out.join(TRAIN_FILE)),
                val: split_written.then(|| a.out.join(VAL_FILE)),
            };
            emit(a.json.json, &summary, || synth_text(&summary, &manifest));
        }
        Command::Train(a) => {
            let config = TrainConfig {
                epochs: a.epochs,
                batch_size: a.batch,
                learning_rate: a.lr,
                good_class_weight: a.good_weight,
                seed: a.seed,
            };
            let outcome = train_manifest(&a.manifest, &config)?;
            write_model(&a.out, &outcome.model)?;
            let summary = TrainSummary {
                model: a.out.clone(),
                samples: crate::pipeline::read_manifest(&a.manifest)?.len(),
                good_class_weight: outcome.model.good_class_weight(),
                epoch_losses: outcome.epoch_losses,
            };
            emit(a.json.json, &summary, || {
                format!(
                    "trained on {} samples, final loss {:.4}; wrote {}\n",
                    summary.samples,
                    summary.epoch_losses.last().copied().unwrap_or(f64::NAN),
                    a.out.display()
                )
            });
        }
        Command::Eval(a) => {
            let model = read_model(&a.model)?;
            let report = evaluate_manifest(&model, &a.manifest)?;
            if let Some(out) = &a.out {
                write_json(out, &report)?;
            }
            emit(a.json.json, &report, || {
                let mut s = format!(
                    "accuracy {:.3}  sensitivity {:.3}  specificity {:.3}  (tp {} fp {} tn {} fn {})\n",
                    report.overall.accuracy,
                    report.overall.sensitivity,
                    report.overall.specificity,
                    report.overall.tp,
                    report.overall.fp,
                    report.overall.tn,
                    report.overall.fn_
                );
                for (tone, m) in &report.per_tone {
                    s.push_str(&format!("  {tone:<8} sensitivity {:.3}  specificity {:.3}\n", m.sensitivity, m.specificity));
                }
                if let Some(gap) = report.sensitivity_gap {
                    s.push_str(&format!("dark/light sensitivity gap {gap:.3}\n"));
                }
                s
            });
        }
        Command::ExtractCatalog(a) => {
            let catalog = extract_catalog(&a.images)?;
            write_catalog(&a.out, &catalog)?;
            emit(a.json.json, &CatalogJson::new(&catalog), || {
                format!("extracted {} shades into {}\n", catalog.len(), a.out.display())
            });
        }
        Command::Recommend(a) => {
            let resp = recommend_cli(&a)?;
            emit(a.json.json, &resp, || recommend_text(&resp));
        }
        Command::ReportVariance(a) => {
            let rows = match (&a.patterns, &a.manifest, &a.model) {
                (Some(p), _, _) => synthetic_variance(&a.tones.0, &read_patterns(p)?, a.seed, a.size)?,
                (None, Some(m), Some(model)) => manifest_variance(m, &read_model(model)?)?,
                _ => return Err(Error::Invalid("either --patterns or --manifest with --model is required".into())),
            };
            emit(a.json.json, &rows, || variance_table(&rows));
        }
        Command::ReportThresholds(a) => {
            let catalog = read_catalog(&a.catalog)?;
            let model = a.model.as_deref().map(read_model).transpose()?;
            let report = manifest_threshold_report(&catalog, &a.manifest, model.as_ref(), &a.thresholds)?;
            emit(a.json.json, &report, || threshold_table(&report));
        }
        Command::Serve(a) => {
            let model = a.model.as_deref().map(read_model).transpose()?;
            let catalog = a.catalog.as_deref().map(read_catalog).transpose()?;
            let addr = SocketAddr::new(a.host, a.port);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io(Path::new("tokio runtime"), e))?;
            eprintln!("listening on http://{addr}");
            runtime
                .block_on(serve(AppState::new(model, catalog), addr, a.cors_origin.as_deref()))
                .map_err(|e| Error::io(Path::new(&addr.to_string()), e))?;
        }
    }
    Ok(())
}

fn synth_text(summary: &SynthSummary, manifest: &DatasetManifest) -> String {
    let mut s = format!(
        "wrote {} images for {} faces to {}\n",
        summary.samples,
        summary.faces,
        summary.out_dir.display()
    );
    for (tone, c) in &manifest.counts {
        s.push_str(&format!("  {tone:<8} good {:>6}  bad {:>6}\n", c.good, c.bad));
    }
    s
}

/// Reads `<dir>/<product_id>/<shade_id>.png` swatches in sorted order.
pub fn extract_catalog(dir: &Path) -> Result<Catalog> {
    let sorted_entries = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = fs::read_dir(d)
            .map_err(|e| Error::io(d, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(d, err)))
            .collect::<Result<_>>()?;
        v.sort();
        Ok(v)
    };
    let mut shades = Vec::new();
    for product_dir in sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()) {
        let product_id = file_stem(&product_dir);
        for file in sorted_entries(&product_dir)? {
            if file.extension().and_then(|e| e.to_str()).map(|e| e.eq_ignore_ascii_case("png")) != Some(true) {
                continue;
            }
            let shade_id = file_stem(&file);
            let color = extract_product_color(&read_image(&file)?).map_err(|e| Error::format(&file, e.to_string()))?;
            shades.push(ProductShade::new(product_id.clone(), shade_id.clone(), format!("{product_id} {shade_id}"), color));
        }
    }
    Ok(Catalog::new(shades)?)
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn recommend_cli(a: &RecommendArgs) -> Result<api::RecommendResponse> {
    let catalog = read_catalog(&a.catalog)?;
    let model = a.model.as_deref().map(read_model).transpose()?;
    let img = read_image(&a.image)?;
    let mask = a.mask.as_deref().map(read_mask).transpose()?;
    let to_err = |e: api::ApiError| Error::Invalid(e.to_string());
    let mask = api::resolve_mask(&img, mask).map_err(to_err)?;
    api::recommend_response(&catalog, model.as_ref(), &img, &mask, a.product_id.as_deref(), a.threshold).map_err(to_err)
}

fn recommend_text(resp: &api::RecommendResponse) -> String {
    let t = &resp.estimated_skin_tone;
    let mut s = format!(
        "estimated skin tone rgb({}, {}, {})  L*a*b* ({:.2}, {:.2}, {:.2})\n",
        t.rgb.r, t.rgb.g, t.rgb.b, t.lab.l, t.lab.a, t.lab.b
    );
    if let Some(v) = &resp.verdict {
        s.push_str(&format!("illumination {} (p = {:.3})\n", v.label, v.probability));
    }
    for m in resp.matches.iter().filter(|m| m.within_threshold) {
        let band = if m.very_close {
            "very close"
        } else if m.similar {
            "similar"
        } else {
            ""
        };
        s.push_str(&format!("{:<12} {:<10} {:>7.3}  {band}\n", m.product_id, m.shade_id, m.distance));
    }
    if !resp.matches.iter().any(|m| m.within_threshold) {
        s.push_str(&format!("no shade within ΔE00 {}\n", resp.threshold));
    }
    s
}
