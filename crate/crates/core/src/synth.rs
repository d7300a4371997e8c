//! Synthetic viseme tracks with controlled coarticulation.
//!
//! A track is a sequence of viseme targets, each a named vertex shape with
//! an onset time. Around each change of target the two shapes are mixed by
//! a raised-cosine ramp of half-width `blend_halfwidth` seconds; elsewhere
//! the active shape is held. Uniform jitter is then added with a seeded
//! ChaCha8 generator, so a spec and seed always produce the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::coarticulation::{motion_energies, WindowSpec};
use crate::error::{Error, Result};
use crate::io::{self, KvFile};
use crate::mesh::{MeshSequence, Vec3, VertexRegionMask};

/// Generator used by [`inject_jitter`], recorded in annotation files and
/// manifests.
pub const JITTER_RNG: &str = "chacha8-rand0.8-uniform-inclusive";

/// Label given to frames inside a blend between two different shapes.
pub const TRANSITION: &str = "transition";

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub name: String,
    pub vertices: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisemeTarget {
    /// Onset in seconds.
    pub time: f64,
    pub shape: String,
}

/// Everything needed to generate one track.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub label: String,
    pub num_vertices: usize,
    pub num_frames: usize,
    pub fps: f64,
    pub viseme_targets: Vec<VisemeTarget>,
    pub shape_bank: Vec<Shape>,
    /// Seconds of overlap on each side of a target change.
    pub blend_halfwidth: f64,
    pub jitter_amplitude: f64,
    pub seed: u64,
}

/// Per-frame labels for a generated track.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentAnnotation {
    /// Active shape name, or [`TRANSITION`].
    pub labels: Vec<String>,
    /// Frames whose clean-track motion energy exceeds the median.
    pub high_motion: Vec<bool>,
}

impl SegmentAnnotation {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn transition_frames(&self) -> Vec<usize> {
        self.frames_where(|l| l == TRANSITION)
    }

    pub fn hold_frames(&self) -> Vec<usize> {
        self.frames_where(|l| l != TRANSITION)
    }

    fn frames_where(&self, pred: impl Fn(&str) -> bool) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| pred(l))
            .map(|(t, _)| t)
            .collect()
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !valid_name(&self.label) {
            return bad(format!(
                "label {:?} must be nonempty [A-Za-z0-9_-]",
                self.label
            ));
        }
        if self.num_vertices == 0 {
            return bad("num_vertices must be at least 1".into());
        }
        if self.num_frames == 0 {
            return bad("num_frames must be at least 1".into());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if !(self.blend_halfwidth.is_finite() && self.blend_halfwidth >= 0.0) {
            return bad(format!(
                "blend_halfwidth must be >= 0, got {}",
                self.blend_halfwidth
            ));
        }
        if !(self.jitter_amplitude.is_finite() && self.jitter_amplitude >= 0.0) {
            return bad(format!(
                "jitter_amplitude must be >= 0, got {}",
                self.jitter_amplitude
            ));
        }
        if self.viseme_targets.is_empty() {
            return bad("at least one viseme target is required".into());
        }
        for pair in self.viseme_targets.windows(2) {
            if pair[1].time.partial_cmp(&pair[0].time) != Some(std::cmp::Ordering::Greater) {
                return bad(format!(
                    "target times must be strictly increasing ({} then {})",
                    pair[0].time, pair[1].time
                ));
            }
        }
        if self.viseme_targets.iter().any(|t| !t.time.is_finite()) {
            return bad("target times must be finite".into());
        }
        for (i, shape) in self.shape_bank.iter().enumerate() {
            if !valid_name(&shape.name) {
                return bad(format!(
                    "shape name {:?} must be nonempty [A-Za-z0-9_-]",
                    shape.name
                ));
            }
            if self.shape_bank[..i].iter().any(|s| s.name == shape.name) {
                return bad(format!("duplicate shape {:?}", shape.name));
            }
            if shape.vertices.len() != self.num_vertices {
                return bad(format!(
                    "shape {:?} has {} vertices, expected {}",
                    shape.name,
                    shape.vertices.len(),
                    self.num_vertices
                ));
            }
            if shape.vertices.iter().flatten().any(|c| !c.is_finite()) {
                return bad(format!(
                    "shape {:?} has a non-finite coordinate",
                    shape.name
                ));
            }
        }
        for target in &self.viseme_targets {
            if self.shape(&target.shape).is_none() {
                return bad(format!("target shape {:?} not in shape bank", target.shape));
            }
        }
        Ok(())
    }

    pub fn shape(&self, name: &str) -> Option<&Shape> {
        self.shape_bank.iter().find(|s| s.name == name)
    }

    /// Canonical `key = value` form. Reals use the shortest representation
    /// that parses back to the same bits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "label = {}", self.label).unwrap();
        writeln!(out, "num_vertices = {}", self.num_vertices).unwrap();
        writeln!(out, "num_frames = {}", self.num_frames).unwrap();
        writeln!(out, "fps = {:?}", self.fps).unwrap();
        writeln!(out, "blend_halfwidth = {:?}", self.blend_halfwidth).unwrap();
        writeln!(out, "jitter_amplitude = {:?}", self.jitter_amplitude).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        for shape in &self.shape_bank {
            write!(out, "shape = {}", shape.name).unwrap();
            for c in shape.vertices.iter().flatten() {
                write!(out, " {c:?}").unwrap();
            }
            out.push('\n');
        }
        for target in &self.viseme_targets {
            writeln!(out, "target = {:?} {}", target.time, target.shape).unwrap();
        }
        out
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.reject_unknown(&[
            "label",
            "num_vertices",
            "num_frames",
            "fps",
            "blend_halfwidth",
            "jitter_amplitude",
            "seed",
            "shape",
            "target",
        ])?;
        let num_vertices: usize = kv.required("num_vertices")?;
        let mut shape_bank = Vec::new();
        for entry in kv.all("shape") {
            let mut tokens = entry.value.split_whitespace();
            let name = tokens.next().unwrap_or_default().to_string();
            let coords: Vec<f64> = tokens
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format(&kv.origin, format!("line {}: {e}", entry.line)))?;
            if !coords.len().is_multiple_of(3) {
                return Err(Error::format(
                    &kv.origin,
                    format!(
                        "line {}: shape coordinates must come in xyz triples",
                        entry.line
                    ),
                ));
            }
            let vertices = coords.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            shape_bank.push(Shape { name, vertices });
        }
        let mut viseme_targets = Vec::new();
        for entry in kv.all("target") {
            let (time, shape) = entry.value.split_once(char::is_whitespace).ok_or_else(|| {
                Error::format(
                    &kv.origin,
                    format!("line {}: expected `target = <time> <shape>`", entry.line),
                )
            })?;
            let time = time
                .parse::<f64>()
                .map_err(|e| Error::format(&kv.origin, format!("line {}: {e}", entry.line)))?;
            viseme_targets.push(VisemeTarget {
                time,
                shape: shape.trim().to_string(),
            });
        }
        let spec = SynthSpec {
            label: kv.optional("label")?.unwrap_or_else(|| "track".to_string()),
            num_vertices,
            num_frames: kv.required("num_frames")?,
            fps: kv.required("fps")?,
            viseme_targets,
            shape_bank,
            blend_halfwidth: kv.optional("blend_halfwidth")?.unwrap_or(0.0),
            jitter_amplitude: kv.optional("jitter_amplitude")?.unwrap_or(0.0),
            seed: kv.optional("seed")?.unwrap_or(0),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    /// SHA-256 of [`SynthSpec::to_text`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn raised_cosine(x: f64) -> f64 {
    0.5 * (1.0 - (std::f64::consts::PI * x).cos())
}

/// Blend of shape indices for one instant: `(from, to, alpha)` meaning
/// `(1 − alpha)·from + alpha·to`.
fn blend_at(spec: &SynthSpec, tau: f64) -> (usize, usize, f64) {
    let targets = &spec.viseme_targets;
    let active = targets.iter().rposition(|t| t.time <= tau).unwrap_or(0);
    let h = spec.blend_halfwidth;
    if h > 0.0 {
        // Boundary i sits at the onset of target i + 1.
        let nearest = (0..targets.len() - 1).min_by(|&a, &b| {
            let da = (tau - targets[a + 1].time).abs();
            let db = (tau - targets[b + 1].time).abs();
            da.total_cmp(&db)
        });
        if let Some(i) = nearest {
            let b = targets[i + 1].time;
            if (tau - b).abs() < h {
                return (i, i + 1, raised_cosine((tau - b + h) / (2.0 * h)));
            }
        }
    }
    (active, active, 0.0)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn high_motion_flags(clean: &MeshSequence) -> Result<Vec<bool>> {
    if clean.num_frames() < 2 {
        return Ok(vec![false; clean.num_frames()]);
    }
    let energy = motion_energies(clean, &WindowSpec::default())?;
    let m = median(&energy);
    Ok(energy.iter().map(|e| *e > m).collect())
}

/// Generates the clean track (before jitter) and its annotation.
pub fn gen_clean_track(spec: &SynthSpec) -> Result<(MeshSequence, SegmentAnnotation)> {
    spec.validate()?;
    let shape_of = |i: usize| {
        spec.shape(&spec.viseme_targets[i].shape)
            .expect("validated")
    };
    let v = spec.num_vertices;
    let mut data = Vec::with_capacity(spec.num_frames * v);
    let mut labels = Vec::with_capacity(spec.num_frames);
    let mut prev_shape: Option<&str> = None;
    for f in 0..spec.num_frames {
        let tau = f as f64 / spec.fps;
        let (from, to, alpha) = blend_at(spec, tau);
        let (a, b) = (shape_of(from), shape_of(to));
        for (p, q) in a.vertices.iter().zip(&b.vertices) {
            data.push(std::array::from_fn(|c| (1.0 - alpha) * p[c] + alpha * q[c]));
        }
        let blending = a.name != b.name && alpha > 0.0 && alpha < 1.0;
        // Without a blend the change happens in one step; the first frame of
        // the new shape is the transition frame.
        let stepped = alpha == 0.0 && prev_shape.is_some_and(|s| s != a.name);
        labels.push(if blending || stepped {
            TRANSITION.to_string()
        } else {
            a.name.clone()
        });
        prev_shape = Some(if alpha >= 0.5 { &b.name } else { &a.name });
    }
    let clean =
        MeshSequence::from_flat(spec.num_frames, v, data, spec.fps)?.with_label(spec.label.clone());
    let high_motion = high_motion_flags(&clean)?;
    Ok((
        clean,
        SegmentAnnotation {
            labels,
            high_motion,
        },
    ))
}

/// Generates a jittered track and its annotation.
pub fn gen_viseme_track(spec: &SynthSpec) -> Result<(MeshSequence, SegmentAnnotation)> {
    let (clean, ann) = gen_clean_track(spec)?;
    Ok((
        inject_jitter(&clean, spec.jitter_amplitude, spec.seed)?,
        ann,
    ))
}

/// Adds independent uniform noise in `[−amplitude, amplitude]` to every
/// coordinate, drawn in frame, vertex, xyz order from ChaCha8 seeded with
/// `seed`.
pub fn inject_jitter(seq: &MeshSequence, amplitude: f64, seed: u64) -> Result<MeshSequence> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "jitter amplitude must be >= 0, got {amplitude}"
        )));
    }
    if amplitude == 0.0 {
        return Ok(seq.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    seq.map_points(|_, _, p| std::array::from_fn(|c| p[c] + rng.gen_range(-amplitude..=amplitude)))
}

/// One record of a corpus manifest. Paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub sequence: PathBuf,
    pub annotation: PathBuf,
    pub spec: PathBuf,
    pub seed: u64,
    pub spec_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.txt";

impl CorpusManifest {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# coartic corpus v1 rng={JITTER_RNG}\n# sequence annotation spec seed spec_sha256\n"
        );
        for e in &self.entries {
            writeln!(
                out,
                "{} {} {} {} {}",
                e.sequence.display(),
                e.annotation.display(),
                e.spec.display(),
                e.seed,
                e.spec_hash
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [sequence, annotation, spec, seed, hash] = fields[..] else {
                return Err(Error::format(
                    origin,
                    format!("line {}: expected 5 fields", n + 1),
                ));
            };
            let seed = seed
                .parse()
                .map_err(|e| Error::format(origin, format!("line {}: bad seed: {e}", n + 1)))?;
            entries.push(ManifestEntry {
                sequence: sequence.into(),
                annotation: annotation.into(),
                spec: spec.into(),
                seed,
                spec_hash: hash.to_string(),
            });
        }
        Ok(CorpusManifest { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Writes every track, its annotation and spec into `dir`, plus
/// `manifest.txt`.
pub fn make_corpus(specs: &[SynthSpec], dir: impl AsRef<Path>) -> Result<CorpusManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = CorpusManifest::default();
    for (i, spec) in specs.iter().enumerate() {
        let (seq, ann) = gen_viseme_track(spec)?;
        let stem = format!("{i:03}_{}", spec.label);
        let entry = ManifestEntry {
            sequence: format!("{stem}.msq").into(),
            annotation: format!("{stem}.ann").into(),
            spec: format!("{stem}.spec").into(),
            seed: spec.seed,
            spec_hash: spec.hash(),
        };
        io::write_msq(&seq, dir.join(&entry.sequence))?;
        io::write_annotation(&ann, dir.join(&entry.annotation))?;
        let spec_path = dir.join(&entry.spec);
        std::fs::write(&spec_path, spec.to_text()).map_err(|e| Error::io(&spec_path, e))?;
        manifest.entries.push(entry);
    }
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Rebuilds a corpus into `out_dir` from the specs a manifest points to,
/// checking each spec against its recorded hash and seed.
pub fn regenerate_corpus(
    manifest_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
) -> Result<CorpusManifest> {
    let manifest_path = manifest_path.as_ref();
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let manifest = CorpusManifest::read(manifest_path)?;
    let specs = manifest
        .entries
        .iter()
        .map(|e| {
            let spec = SynthSpec::read(base.join(&e.spec))?;
            if spec.hash() != e.spec_hash || spec.seed != e.seed {
                return Err(Error::format(
                    base.join(&e.spec),
                    "spec does not match the hash or seed recorded in the manifest",
                ));
            }
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    make_corpus(&specs, out_dir)
}

/// Parameters of the reference corpus: sharp viseme changes concentrated on
/// a lip region, with small jitter.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardCorpus {
    pub num_tracks: usize,
    pub num_frames: usize,
    pub num_vertices: usize,
    pub num_lip_vertices: usize,
    pub num_shapes: usize,
    pub fps: f64,
    /// Mean seconds between target onsets.
    pub segment_seconds: f64,
    pub blend_halfwidth: f64,
    pub jitter_amplitude: f64,
    /// Per-coordinate spread of lip vertices across shapes.
    pub lip_amplitude: f64,
    /// Per-coordinate spread of the remaining vertices across shapes.
    pub face_amplitude: f64,
    pub seed: u64,
}

impl Default for StandardCorpus {
    fn default() -> Self {
        StandardCorpus {
            num_tracks: 10,
            num_frames: 120,
            num_vertices: 60,
            num_lip_vertices: 20,
            num_shapes: 6,
            fps: 30.0,
            segment_seconds: 0.3,
            blend_halfwidth: 0.07,
            jitter_amplitude: 0.01,
            lip_amplitude: 0.6,
            face_amplitude: 0.03,
            seed: 2024,
        }
    }
}

impl StandardCorpus {
    /// Lip region: the first `num_lip_vertices` vertices.
    pub fn lips(&self) -> Result<VertexRegionMask> {
        VertexRegionMask::new((0..self.num_lip_vertices).collect(), "lips")
    }

    pub fn specs(&self) -> Result<Vec<SynthSpec>> {
        if self.num_lip_vertices == 0 || self.num_lip_vertices > self.num_vertices {
            return Err(Error::InvalidSpec(
                "lip region must be a nonempty prefix of the vertices".into(),
            ));
        }
        if self.num_shapes < 2 {
            return Err(Error::InvalidSpec("need at least two shapes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let base: Vec<Vec3> = (0..self.num_vertices)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
            .collect();
        let shape_bank: Vec<Shape> = (0..self.num_shapes)
            .map(|s| {
                let vertices = base
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let amp = if i < self.num_lip_vertices {
                            self.lip_amplitude
                        } else {
                            self.face_amplitude
                        };
                        std::array::from_fn(|c| p[c] + rng.gen_range(-amp..=amp))
                    })
                    .collect();
                Shape {
                    name: format!("V{s}"),
                    vertices,
                }
            })
            .collect();
        let duration = self.num_frames as f64 / self.fps;
        (0..self.num_tracks)
            .map(|k| {
                let mut targets = Vec::new();
                let mut time = 0.0;
                let mut prev = usize::MAX;
                while time < duration {
                    let mut s = rng.gen_range(0..self.num_shapes);
                    if s == prev {
                        s = (s + 1) % self.num_shapes;
                    }
                    targets.push(VisemeTarget {
                        time,
                        shape: shape_bank[s].name.clone(),
                    });
                    prev = s;
                    time += self.segment_seconds * rng.gen_range(0.75..1.25);
                }
                let spec = SynthSpec {
                    label: format!("track{k:02}"),
                    num_vertices: self.num_vertices,
                    num_frames: self.num_frames,
                    fps: self.fps,
                    viseme_targets: targets,
                    shape_bank: shape_bank.clone(),
                    blend_halfwidth: self.blend_halfwidth,
                    jitter_amplitude: self.jitter_amplitude,
                    seed: self.seed.wrapping_add(1 + k as u64),
                };
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }
}
