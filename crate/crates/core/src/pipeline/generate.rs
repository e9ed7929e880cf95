use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::record::{CotRef, CountPair, ManifestHeader, SampleRecord, MANIFEST_FORMAT};
use super::{AnnotationMode, PipelineError, RunConfig};
use crate::annotate::{
    build_annotation_prompt, request_cot, template_cot, AnnotateError, AnnotationEndpoint, CotRecord, RetryPolicy,
};
use crate::caption::{
    default_caption_table, load_caption_table, measure_region_differences, select_key_captions, CaptionError,
    CaptionTable,
};
use crate::compositor::{
    apply_augmentation, blend_forgery, sample_alpha, sample_perturbation, BlendSpec, Geometry, ImageBuffer,
    MagnitudeTable, PerturbationParams,
};
use crate::mask::{
    region_masks, sample_mask_transform, sample_region_combo, transform_mask, LandmarkSet81, MaskError,
    MaskTransformParams, RegionMask, SoftMask,
};
use crate::policy::GenerationPolicy;
use crate::region::{RegionCombo, RegionId};
use crate::reward::Label;
use crate::{par, rng};

pub const MANIFEST_NAME: &str = "manifest.jsonl";
pub const CAPTION_TABLE_NAME: &str = "caption_table.json";

/// Endpoint handle usable from worker threads.
pub type SharedEndpoint<'a> = &'a (dyn AnnotationEndpoint + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub manifest: PathBuf,
    pub requested: CountPair,
    pub produced: CountPair,
    pub skipped: Vec<String>,
}

/// One usable input: a copied portrait and its landmarks.
struct Input {
    image_rel: String,
    landmarks_rel: String,
    landmarks: LandmarkSet81,
}

enum Outcome {
    Produced(Box<SampleRecord>),
    Skipped(String, String),
}

/// Geometry of the geometric factors: face-box centre and longer side.
pub fn face_geometry(landmarks: &LandmarkSet81) -> Geometry {
    let (lo, hi) = landmarks.face_box();
    Geometry {
        anchor: [(lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0],
        extent: (hi.x - lo.x).max(hi.y - lo.y),
    }
}

/// Deterministic forgery from stored parameters: returns the quantized
/// forged image and the soft mask that weighted it.
pub fn render_forgery(
    real: &ImageBuffer,
    union: &RegionMask,
    mask_params: &MaskTransformParams,
    xi: &PerturbationParams,
    alpha: f64,
) -> Result<(ImageBuffer, SoftMask), PipelineError> {
    let soft = transform_mask(union, mask_params)?;
    let augmented = apply_augmentation(real, xi);
    let forged = blend_forgery(real, &augmented, &soft, BlendSpec::new(alpha)?)?;
    Ok((forged.quantized(), soft))
}

pub fn union_mask(masks: &BTreeMap<RegionId, RegionMask>, width: usize, height: usize) -> RegionMask {
    masks.values().fold(RegionMask::zeros(width, height), |u, m| u.union(m))
}

pub fn save_mask_png(mask: &SoftMask, path: &Path) -> Result<(), PipelineError> {
    let img = image::GrayImage::from_raw(mask.width() as u32, mask.height() as u32, mask.to_u8())
        .expect("buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| PipelineError::Io(std::io::Error::other(e)))
}

pub fn load_mask_png(path: &Path) -> Result<(usize, usize, Vec<u8>), PipelineError> {
    let img = image::open(path).map_err(|e| PipelineError::Io(std::io::Error::other(e)))?.to_luma8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw()))
}

fn discover_inputs(config: &RunConfig, out: &Path) -> Result<Vec<Input>, PipelineError> {
    let dir = &config.inputs.images;
    let mut pngs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| PipelineError::Config(format!("cannot read image dir {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    pngs.sort();
    fs::create_dir_all(out.join("real"))?;
    fs::create_dir_all(out.join("landmarks"))?;
    let mut inputs = Vec::new();
    for png in pngs {
        let stem = png.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let lm_path = config.inputs.landmarks.join(format!("{stem}.json"));
        if !lm_path.exists() {
            log::warn!("{}: no landmark file at {}; skipped", png.display(), lm_path.display());
            continue;
        }
        let landmarks = match LandmarkSet81::load(&lm_path) {
            Ok((lm, _)) => lm,
            Err(e) => {
                log::warn!("{}: {e}; skipped", lm_path.display());
                continue;
            }
        };
        match image::image_dimensions(&png) {
            Ok(dims) if dims == (landmarks.width(), landmarks.height()) => {}
            Ok(dims) => {
                log::warn!("{}: image is {dims:?} but landmarks say {}x{}; skipped", png.display(), landmarks.width(), landmarks.height());
                continue;
            }
            Err(e) => {
                log::warn!("{}: {e}; skipped", png.display());
                continue;
            }
        }
        let image_rel = format!("real/{stem}.png");
        let landmarks_rel = format!("landmarks/{stem}.json");
        fs::copy(&png, out.join(&image_rel))?;
        let file = landmarks.to_file(format!("../{image_rel}"));
        fs::write(out.join(&landmarks_rel), serde_json::to_string_pretty(&file)?)?;
        inputs.push(Input { image_rel, landmarks_rel, landmarks });
    }
    Ok(inputs)
}

pub fn load_table(config: &RunConfig) -> Result<CaptionTable, PipelineError> {
    match &config.generation.caption_table {
        None => Ok(default_caption_table().clone()),
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| PipelineError::Config(format!("caption table {}: {e}", p.display())))?;
            Ok(load_caption_table(f)?)
        }
    }
}

struct Job<'a> {
    config: &'a RunConfig,
    out: &'a Path,
    inputs: &'a [Input],
    policy: GenerationPolicy,
    magnitudes: MagnitudeTable,
    table: CaptionTable,
    endpoint: Option<SharedEndpoint<'a>>,
}

impl Job<'_> {
    fn run(&self, index: usize) -> Result<Outcome, PipelineError> {
        let cfg = self.config;
        let id = format!("s{index:06}");
        let seed = cfg.seed.wrapping_add(index as u64);
        let mut rng = rng::stream(cfg.seed, index as u64);
        let input = &self.inputs[index % self.inputs.len()];
        let mut record =
            SampleRecord::real(id.clone(), index as u64, input.image_rel.clone(), input.landmarks_rel.clone(), seed);
        let plain = cfg.mix.plain_fraction.is_some_and(|f| {
            let mut mix = rng::stream(cfg.seed, index as u64);
            mix.set_stream(1);
            mix.random::<f64>() < f
        });

        let cot = if index < cfg.counts.real {
            template_cot(&Default::default(), Label::Real)
        } else {
            match self.forge(&mut rng, input, &mut record)? {
                Some(reason) => return Ok(Outcome::Skipped(id, reason)),
                None if plain => template_cot(&record.captions, Label::Fake),
                None => match self.annotate(&record)? {
                    Ok(c) => c,
                    Err(reason) => return Ok(Outcome::Skipped(id, reason)),
                },
            }
        };
        if !plain {
            let path = format!("cot/{id}.txt");
            fs::write(self.out.join(&path), &cot.text)?;
            record.cot = Some(CotRef { path, source: cot.source, attempts: cot.attempts });
        }
        Ok(Outcome::Produced(Box::new(record)))
    }

    /// Fills the forgery fields of `record`. Returns a skip reason when no
    /// draw produced a caption-worthy difference.
    fn forge(
        &self,
        rng: &mut rng::SampleRng,
        input: &Input,
        record: &mut SampleRecord,
    ) -> Result<Option<String>, PipelineError> {
        let lm = &input.landmarks;
        let real = ImageBuffer::load_png(&self.out.join(&input.image_rel))?;
        let combo: RegionCombo = sample_region_combo(rng, &self.policy)?;
        let masks = match region_masks(lm, &combo) {
            Ok(m) => m,
            Err(MaskError::DegenerateRegion(r)) => return Ok(Some(format!("region {r} is degenerate"))),
            Err(e) => return Err(e.into()),
        };
        let union = union_mask(&masks, real.width(), real.height());
        let geometry = face_geometry(lm);
        let draws = 1 + self.config.generation.max_resamples;
        for draw in 1..=draws {
            let mask_params = sample_mask_transform(rng, &self.policy, geometry.extent);
            let alpha = sample_alpha(rng, &self.policy)?.alpha;
            let xi = sample_perturbation(rng, &self.policy, &self.magnitudes)?.with_geometry(geometry);
            let (forged, soft) = match render_forgery(&real, &union, &mask_params, &xi, alpha) {
                Ok(r) => r,
                Err(PipelineError::Mask(MaskError::EmptyMask)) => continue,
                Err(e) => return Err(e),
            };
            let stats = measure_region_differences(&real, &forged, &masks)?;
            let captions = match select_key_captions(&stats, &combo, &self.table, Some(&xi), rng) {
                Ok(c) => c,
                Err(CaptionError::SubThresholdSample) => {
                    log::debug!("{}: draw {draw} below every threshold", record.id);
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let forged_rel = format!("forged/{}.png", record.id);
            let mask_rel = format!("masks/{}.png", record.id);
            forged.save_png(&self.out.join(&forged_rel))?;
            save_mask_png(&soft, &self.out.join(&mask_rel))?;
            record.label = Label::Fake;
            record.forged_image_path = Some(forged_rel);
            record.mask_path = Some(mask_rel);
            record.combo = Some(combo);
            record.xi = Some(xi);
            record.mask_transform = Some(mask_params);
            record.alpha = Some(alpha);
            record.draws = Some(draw);
            record.diff_stats = Some(stats);
            record.captions = captions;
            return Ok(None);
        }
        Ok(Some(format!("sub-threshold after {draws} draws")))
    }

    fn annotate(&self, record: &SampleRecord) -> Result<Result<CotRecord, String>, PipelineError> {
        let endpoint = match (self.config.annotation.mode, self.endpoint) {
            (AnnotationMode::Template, _) => return Ok(Ok(template_cot(&record.captions, Label::Fake))),
            (AnnotationMode::Endpoint, Some(e)) => e,
            (AnnotationMode::Endpoint, None) => {
                return Err(PipelineError::Config("endpoint annotation requested without an endpoint".into()))
            }
        };
        let prompt = build_annotation_prompt(record, &record.captions)?;
        let policy = RetryPolicy { max_attempts: self.config.annotation.max_attempts };
        match request_cot(&prompt, endpoint, policy) {
            Ok(c) => Ok(Ok(c)),
            Err(e @ (AnnotateError::ValidationExhausted { .. } | AnnotateError::EndpointUnavailable(_))) => {
                if self.config.annotation.fallback_to_template {
                    log::warn!("{}: {e}; using template annotation", record.id);
                    Ok(Ok(template_cot(&record.captions, Label::Fake)))
                } else {
                    log::warn!("{}: {e}; skipped", record.id);
                    Ok(Err(e.to_string()))
                }
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Generates the dataset described by `config`. Endpoint mode builds an
/// HTTP endpoint from the `ANNOTATE_*` environment variables.
pub fn generate_dataset(config: &RunConfig) -> Result<GenerateSummary, PipelineError> {
    match config.annotation.mode {
        AnnotationMode::Template => generate_dataset_with(config, None),
        #[cfg(feature = "http-endpoint")]
        AnnotationMode::Endpoint => {
            use crate::annotate::{HttpEndpoint, HttpEndpointConfig};
            let timeout = std::time::Duration::from_secs(config.annotation.timeout_secs);
            let ep = HttpEndpoint::new(HttpEndpointConfig::from_env(config.output_dir.clone(), timeout)?)?;
            generate_dataset_with(config, Some(&ep))
        }
        #[cfg(not(feature = "http-endpoint"))]
        AnnotationMode::Endpoint => Err(PipelineError::Config(
            "endpoint annotation needs the `http-endpoint` feature".into(),
        )),
    }
}

pub fn generate_dataset_with(
    config: &RunConfig,
    endpoint: Option<SharedEndpoint<'_>>,
) -> Result<GenerateSummary, PipelineError> {
    config.validate()?;
    let out = config.output_dir.as_path();
    fs::create_dir_all(out)?;
    for sub in ["forged", "masks", "cot"] {
        fs::create_dir_all(out.join(sub))?;
    }
    let table = load_table(config)?;
    fs::write(out.join(CAPTION_TABLE_NAME), table.to_json())?;
    let total = config.counts.total();
    let inputs = if total > 0 { discover_inputs(config, out)? } else { Vec::new() };
    if total > 0 && inputs.is_empty() {
        return Err(PipelineError::Config(format!(
            "no usable input images in {} with landmarks in {}",
            config.inputs.images.display(),
            config.inputs.landmarks.display()
        )));
    }
    let job = Job {
        config,
        out,
        inputs: &inputs,
        policy: config.policy()?,
        magnitudes: config.magnitudes()?,
        table,
        endpoint,
    };
    let outcomes = par::with_workers(config.generation.workers, || par::map_indices(total, |i| job.run(i)));

    let mut rows = Vec::with_capacity(total);
    let mut produced = CountPair::default();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome? {
            Outcome::Produced(r) => {
                match r.label {
                    Label::Real => produced.real += 1,
                    Label::Fake => produced.fake += 1,
                }
                rows.push(serde_json::to_string(&r)?);
            }
            Outcome::Skipped(id, reason) => {
                log::warn!("{id}: skipped ({reason})");
                skipped.push(id);
            }
        }
    }
    let requested = CountPair { real: config.counts.real, fake: config.counts.fake };
    let header = ManifestHeader {
        manifest_format: MANIFEST_FORMAT,
        created: chrono::Utc::now().to_rfc3339(),
        generator_version: crate::GENERATOR_VERSION.to_string(),
        seed: config.seed,
        requested,
        produced,
        skipped: skipped.clone(),
        caption_table_version: job.table.version.clone(),
        caption_table: CAPTION_TABLE_NAME.to_string(),
    };
    let mut text = serde_json::to_string(&header)?;
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    let manifest = out.join(MANIFEST_NAME);
    fs::write(&manifest, text)?;
    Ok(GenerateSummary { manifest, requested, produced, skipped })
}
