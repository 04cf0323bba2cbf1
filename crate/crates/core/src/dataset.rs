//! Synthetic posture data: (pitch, roll) tilt vectors scattered around a
//! fixed mean per class, plus CSV persistence and stratified splitting.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Posture {
    Stand,
    Sit,
    Lie,
}

impl Posture {
    pub const ALL: [Posture; 3] = [Posture::Stand, Posture::Sit, Posture::Lie];

    pub fn as_str(self) -> &'static str {
        match self {
            Posture::Stand => "stand",
            Posture::Sit => "sit",
            Posture::Lie => "lie",
        }
    }
}

impl fmt::Display for Posture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Posture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Posture::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown posture label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostureSample {
    pub pitch: f64,
    pub roll: f64,
    pub label: Posture,
}

impl PostureSample {
    pub fn new(pitch: f64, roll: f64, label: Posture) -> Self {
        Self { pitch, roll, label }
    }

    pub fn features(&self) -> [f64; 2] {
        [self.pitch, self.roll]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<PostureSample>,
}

impl Dataset {
    pub fn new(samples: Vec<PostureSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Classes that occur, in [`Posture::ALL`] order.
    pub fn classes(&self) -> Vec<Posture> {
        Posture::ALL
            .into_iter()
            .filter(|p| self.samples.iter().any(|s| s.label == *p))
            .collect()
    }

    pub fn count(&self, label: Posture) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassMeans {
    pub stand: [f64; 2],
    pub sit: [f64; 2],
    pub lie: [f64; 2],
}

impl Default for ClassMeans {
    fn default() -> Self {
        Self {
            stand: [0.0, 0.0],
            sit: [0.0, 0.25],
            lie: [0.5, 0.0],
        }
    }
}

impl ClassMeans {
    pub fn get(&self, label: Posture) -> [f64; 2] {
        match label {
            Posture::Stand => self.stand,
            Posture::Sit => self.sit,
            Posture::Lie => self.lie,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub n_per_class: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub class_means: ClassMeans,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_per_class: 300,
            noise_sigma: 0.04,
            seed: 42,
            class_means: ClassMeans::default(),
        }
    }
}

/// Draws `n_per_class` samples per class, class by class, each axis the
/// class mean plus independent `N(0, sigma^2)` noise. The stream is ChaCha8
/// seeded with `seed`; normals come from `rand_distr`'s ziggurat sampler.
/// Samples are not clamped.
pub fn generate(cfg: &DatasetConfig) -> Result<Dataset> {
    if cfg.n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be positive".into()));
    }
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| {
        Error::InvalidArgument(format!("noise_sigma {}: {e}", cfg.noise_sigma))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(3 * cfg.n_per_class);
    for label in Posture::ALL {
        let [pitch, roll] = cfg.class_means.get(label);
        for _ in 0..cfg.n_per_class {
            let dp = noise.sample(&mut rng);
            let dr = noise.sample(&mut rng);
            samples.push(PostureSample::new(pitch + dp, roll + dr, label));
        }
    }
    Ok(Dataset::new(samples))
}

const HEADER: [&str; 3] = ["pitch", "roll", "label"];

pub fn write_csv_to(dataset: &Dataset, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for s in &dataset.samples {
        w.write_record([s.pitch.to_string(), s.roll.to_string(), s.label.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dataset, file)
}

pub fn read_csv_from(input: impl Read, origin: impl Into<PathBuf>) -> Result<Dataset> {
    let origin = origin.into();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.clone(),
        line,
        message,
    };
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = r.records();
    match records.next() {
        Some(Ok(h)) if h.iter().eq(HEADER) => {}
        Some(Ok(h)) => {
            return Err(parse_err(1, format!("expected header pitch,roll,label, got {:?}", h.iter().collect::<Vec<_>>())))
        }
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "missing header".into())),
    }
    let mut samples = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, got {}", rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            let v: f64 = rec[i]
                .trim()
                .parse()
                .map_err(|e| parse_err(line, format!("{} {:?}: {e}", HEADER[i], &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("{} is not finite", HEADER[i])))
            }
        };
        let label = rec[2]
            .trim()
            .parse()
            .map_err(|e: Error| parse_err(line, e.to_string()))?;
        samples.push(PostureSample::new(num(0)?, num(1)?, label));
    }
    Ok(Dataset::new(samples))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, path)
}

/// Seeded stratified split. Each class is shuffled independently and
/// `round(train_fraction * n_class)` of its samples go to the training side.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in Posture::ALL {
        let mut class: Vec<PostureSample> =
            dataset.samples.iter().filter(|s| s.label == label).copied().collect();
        class.shuffle(&mut rng);
        let n_train = (train_fraction * class.len() as f64).round() as usize;
        test.extend(class.split_off(n_train));
        train.extend(class);
    }
    Ok((Dataset::new(train), Dataset::new(test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_noise_reproduces_means() {
        let cfg = DatasetConfig {
            n_per_class: 1,
            noise_sigma: 0.0,
            ..DatasetConfig::default()
        };
        let d = generate(&cfg).unwrap();
        assert_eq!(
            d.samples,
            vec![
                PostureSample::new(0.0, 0.0, Posture::Stand),
                PostureSample::new(0.0, 0.25, Posture::Sit),
                PostureSample::new(0.5, 0.0, Posture::Lie),
            ]
        );
    }

    #[test]
    fn large_sample_statistics() {
        let cfg = DatasetConfig {
            n_per_class: 10_000,
            seed: 7,
            ..DatasetConfig::default()
        };
        let d = generate(&cfg).unwrap();
        for label in Posture::ALL {
            let mean = cfg.class_means.get(label);
            for (axis, &want) in mean.iter().enumerate() {
                let xs: Vec<f64> = d
                    .samples
                    .iter()
                    .filter(|s| s.label == label)
                    .map(|s| s.features()[axis])
                    .collect();
                let n = xs.len() as f64;
                let m = xs.iter().sum::<f64>() / n;
                let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                assert!((m - want).abs() < 0.002, "{label} axis {axis}: mean {m}");
                assert!((sd - 0.04).abs() < 0.002, "{label} axis {axis}: sd {sd}");
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = DatasetConfig::default();
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = DatasetConfig { seed: 43, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let mut buf = Vec::new();
        write_csv_to(&Dataset::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "pitch,roll,label\n");
        assert!(read_csv_from(&buf[..], "mem").unwrap().is_empty());
    }

    #[test]
    fn parses_a_row() {
        let d = read_csv_from("pitch,roll,label\n0.5,0.0,lie\n".as_bytes(), "mem").unwrap();
        assert_eq!(d.samples, vec![PostureSample::new(0.5, 0.0, Posture::Lie)]);
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = "pitch,roll,label\n0.1,0.2,sit\n0.3,abc,sit\n";
        match read_csv_from(text.as_bytes(), "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "pitch,roll,label\n0.1,0.2,sit\n0.1,0.2,fly\n";
        assert!(matches!(read_csv_from(text.as_bytes(), "mem"), Err(Error::Parse { line: 3, .. })));
        let text = "pitch,roll,label\n0.1,0.2\n";
        assert!(matches!(read_csv_from(text.as_bytes(), "mem"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_csv_from("x,y,z\n".as_bytes(), "mem"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn stratified_split_sizes() {
        let d = generate(&DatasetConfig::default()).unwrap();
        let (train, test) = split(&d, 0.8, 1).unwrap();
        assert_eq!((train.len(), test.len()), (720, 180));
        for p in Posture::ALL {
            assert_eq!((train.count(p), test.count(p)), (240, 60));
        }
        assert_eq!(split(&d, 0.8, 1).unwrap(), (train.clone(), test.clone()));
        let key = |s: &PostureSample| (s.pitch.to_bits(), s.roll.to_bits(), s.label);
        let mut joined: Vec<_> = train.samples.iter().chain(&test.samples).map(key).collect();
        let mut original: Vec<_> = d.samples.iter().map(key).collect();
        joined.sort();
        original.sort();
        assert_eq!(joined, original);
        assert!(split(&d, 1.0, 1).is_err());
        assert!(split(&d, 0.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(seed in any::<u64>(), n in 1..20usize, sigma in 0.0..1.0f64) {
            let d = generate(&DatasetConfig { n_per_class: n, noise_sigma: sigma, seed, ..Default::default() }).unwrap();
            let mut buf = Vec::new();
            write_csv_to(&d, &mut buf).unwrap();
            prop_assert_eq!(read_csv_from(&buf[..], "mem").unwrap(), d);
        }

        #[test]
        fn split_stays_within_one_sample_of_proportion(n in 1..60usize, frac in 0.05..0.95f64, seed in any::<u64>()) {
            let d = generate(&DatasetConfig { n_per_class: n, seed, ..Default::default() }).unwrap();
            let (train, test) = split(&d, frac, seed).unwrap();
            for p in Posture::ALL {
                prop_assert_eq!(train.count(p) + test.count(p), n);
                prop_assert!((train.count(p) as f64 - frac * n as f64).abs() <= 1.0);
            }
        }
    }
}
