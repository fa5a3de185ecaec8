//! On-disk datasets of preprocessed network inputs with their labels.
//!
//! Layout of a set directory:
//! - `manifest`: JSON [`DatasetManifest`]
//! - `data.f32`: per item, `vector_len` input samples then 12 label values
//!   (six mean absorptions, six mean scatterings), little-endian `f32`
//! - `rooms/rooms.jsonl`: the room of item `i` on line `i`

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, INPUT_LEN, INPUT_RATE};
use crate::error::{Error, Result};
use crate::nn::{Examples, LABEL_DIM};
use crate::sampler::{sample_room, SamplingStrategy};
use crate::sim::{self, SimConfig};
use crate::types::{full_label, AbsorptionLabel, RoomSpec, N_BANDS};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest";
pub const DATA_FILE: &str = "data.f32";
pub const ROOMS_FILE: &str = "rooms/rooms.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    /// Free-form description of how rooms were drawn, e.g. `rb` or `cube_like`.
    pub strategy: String,
    pub sim_config: SimConfig,
    /// `None` for noiseless inputs.
    pub snr_db: Option<f64>,
    pub count: usize,
    pub sample_rate: f64,
    pub vector_len: usize,
    pub label_schema: Vec<String>,
    pub rooms: String,
    /// FNV-1a 64 of `data.f32`, hex.
    pub fingerprint: String,
}

pub fn label_schema() -> Vec<String> {
    let mut v: Vec<String> = crate::BAND_CENTERS.iter().map(|f| format!("alpha_{f}")).collect();
    v.extend(crate::BAND_CENTERS.iter().map(|f| format!("scattering_{f}")));
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub input: Vec<f32>,
    pub label: AbsorptionLabel,
    pub room: RoomSpec,
}

fn label_values(label: &AbsorptionLabel) -> [f32; LABEL_DIM] {
    let mut out = [f32::NAN; LABEL_DIM];
    for b in 0..N_BANDS {
        out[b] = label.alpha_bar.0[b] as f32;
        if let Some(s) = &label.s_bar {
            out[N_BANDS + b] = s.0[b] as f32;
        }
    }
    out
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

/// Header fields of a set that are known before its items.
#[derive(Debug, Clone)]
pub struct DatasetMeta {
    pub name: String,
    pub seed: u64,
    pub strategy: String,
    pub sim_config: SimConfig,
    pub snr_db: Option<f64>,
}

/// Writes all items and the manifest, syncing every file before returning.
pub fn write_dataset<I>(dir: &Path, meta: &DatasetMeta, items: I) -> Result<DatasetManifest>
where
    I: IntoIterator<Item = Result<Item>>,
{
    fs::create_dir_all(dir.join("rooms")).map_err(|e| Error::io(dir, e))?;
    let data_path = dir.join(DATA_FILE);
    let rooms_path = dir.join(ROOMS_FILE);
    let mut data = BufWriter::new(File::create(&data_path).map_err(|e| Error::io(&data_path, e))?);
    let mut rooms = BufWriter::new(File::create(&rooms_path).map_err(|e| Error::io(&rooms_path, e))?);
    let mut hash = Fnv::new();
    let mut count = 0usize;
    let mut vector_len = None;
    let mut offset = 0u64;
    for item in items {
        let item = item?;
        let len = *vector_len.get_or_insert(item.input.len());
        if item.input.len() != len {
            return Err(Error::Shape(format!(
                "item {count} has {} samples, earlier items have {len}",
                item.input.len()
            )));
        }
        let mut record = Vec::with_capacity((len + LABEL_DIM) * 4);
        for v in item.input.iter().chain(label_values(&item.label).iter()) {
            record.extend_from_slice(&v.to_le_bytes());
        }
        hash.update(&record);
        data.write_all(&record).map_err(|e| Error::Corrupt {
            path: data_path.clone(),
            offset,
            reason: e.to_string(),
        })?;
        offset += record.len() as u64;
        let line = serde_json::to_string(&item.room).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(rooms, "{line}").map_err(|e| Error::io(&rooms_path, e))?;
        count += 1;
    }
    for (w, path) in [(data, &data_path), (rooms, &rooms_path)] {
        let f = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        f.sync_all().map_err(|e| Error::io(path, e))?;
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        name: meta.name.clone(),
        seed: meta.seed,
        strategy: meta.strategy.clone(),
        sim_config: meta.sim_config.clone(),
        snr_db: meta.snr_db,
        count,
        sample_rate: INPUT_RATE,
        vector_len: vector_len.unwrap_or(INPUT_LEN),
        label_schema: label_schema(),
        rooms: ROOMS_FILE.to_string(),
        fingerprint: format!("{:016x}", hash.0),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    let mut f = File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&manifest_path, e))?;
    f.sync_all().map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

/// An opened set; items are read by offset on demand.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Corrupt {
            path: path.clone(),
            offset: 0,
            reason: e.to_string(),
        })?;
        let data_path = dir.join(DATA_FILE);
        let size = fs::metadata(&data_path).map_err(|e| Error::io(&data_path, e))?.len();
        let expected = (manifest.count * (manifest.vector_len + LABEL_DIM) * 4) as u64;
        if size != expected {
            return Err(Error::Corrupt {
                path: data_path,
                offset: size.min(expected),
                reason: format!("expected {expected} bytes for {} items, found {size}", manifest.count),
            });
        }
        Ok(Dataset {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn len(&self) -> usize {
        self.manifest.count
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.count == 0
    }

    fn record_bytes(&self) -> usize {
        (self.manifest.vector_len + LABEL_DIM) * 4
    }

    /// Input vector and 12 label values of item `i`.
    pub fn read_item(&self, i: usize) -> Result<(Vec<f32>, Vec<f32>)> {
        if i >= self.len() {
            return Err(Error::InvalidInput(format!("item {i} out of range 0..{}", self.len())));
        }
        let path = self.dir.join(DATA_FILE);
        let offset = (i * self.record_bytes()) as u64;
        let mut f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut buf = vec![0u8; self.record_bytes()];
        f.seek(SeekFrom::Start(offset))
            .and_then(|_| f.read_exact(&mut buf))
            .map_err(|e| Error::Corrupt {
                path: path.clone(),
                offset,
                reason: e.to_string(),
            })?;
        let mut values = decode(&buf);
        let labels = values.split_off(self.manifest.vector_len);
        Ok((values, labels))
    }

    pub fn load_examples(&self) -> Result<Examples> {
        let path = self.dir.join(DATA_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let (len, rec) = (self.manifest.vector_len, self.manifest.vector_len + LABEL_DIM);
        let mut inputs = Vec::with_capacity(self.len() * len);
        let mut labels = Vec::with_capacity(self.len() * LABEL_DIM);
        for record in bytes.chunks_exact(rec * 4) {
            let v = decode(record);
            inputs.extend_from_slice(&v[..len]);
            labels.extend_from_slice(&v[len..]);
        }
        Ok(Examples {
            input_dim: len,
            inputs,
            labels,
        })
    }

    pub fn rooms(&self) -> Result<Vec<RoomSpec>> {
        let path = self.dir.join(&self.manifest.rooms);
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let rooms = BufReader::new(f)
            .lines()
            .map(|l| RoomSpec::from_json(&l.map_err(|e| Error::io(&path, e))?))
            .collect::<Result<Vec<_>>>()?;
        if rooms.len() != self.len() {
            return Err(Error::Corrupt {
                path,
                offset: 0,
                reason: format!("{} rooms for {} items", rooms.len(), self.len()),
            });
        }
        Ok(rooms)
    }
}

fn decode(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect()
}

/// Shuffled item order for one epoch, fixed by `(seed, epoch)`.
pub fn epoch_permutation(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Item indices grouped into batches; the last batch may be short.
pub fn batches(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be at least 1".into()));
    }
    Ok(epoch_permutation(n, seed, epoch)
        .chunks(batch_size)
        .map(<[usize]>::to_vec)
        .collect())
}

/// Independent generator for one purpose of one item.
pub fn item_rng(seed: u64, index: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(index as u64);
    rng
}

const ROOM_RNG: u64 = 1;
const SIM_RNG: u64 = 2;
const NOISE_RNG: u64 = 3;

/// Simulates `room` and turns it into a network input with its full label.
pub fn encode_room(
    room: &RoomSpec,
    sim_config: &SimConfig,
    snr_db: Option<f64>,
    seed: u64,
    index: usize,
) -> Result<Item> {
    use rand::Rng;
    let sim_seed: u64 = item_rng(seed, index, SIM_RNG).gen();
    let rir = sim::simulate(room, sim_config, sim_seed)?;
    let mut noise = item_rng(seed, index, NOISE_RNG);
    let x = dsp::preprocess(&rir, snr_db.unwrap_or(f64::INFINITY), &mut noise)?;
    Ok(Item {
        input: x.into_iter().map(|v| v as f32).collect(),
        label: full_label(room),
        room: room.clone(),
    })
}

/// Items computed in parallel blocks and yielded in index order, so the
/// output does not depend on the thread count.
fn encoded<'a>(
    rooms: impl Fn(usize) -> Result<RoomSpec> + Sync + 'a,
    count: usize,
    sim_config: &'a SimConfig,
    snr_db: Option<f64>,
    seed: u64,
    progress: &'a (dyn Fn(usize) + Sync),
) -> impl Iterator<Item = Result<Item>> + 'a {
    const BLOCK: usize = 64;
    (0..count.div_ceil(BLOCK)).flat_map(move |b| {
        let range = b * BLOCK..((b + 1) * BLOCK).min(count);
        let block: Vec<Result<Item>> = range
            .clone()
            .into_par_iter()
            .map(|i| encode_room(&rooms(i)?, sim_config, snr_db, seed, i))
            .collect();
        progress(range.end);
        block
    })
}

/// Draws `count` rooms with `strategy` and writes the encoded set to `dir`.
pub fn generate(
    dir: &Path,
    meta: &DatasetMeta,
    strategy: &SamplingStrategy,
    count: usize,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<DatasetManifest> {
    let seed = meta.seed;
    let rooms = move |i: usize| sample_room(&mut item_rng(seed, i, ROOM_RNG), strategy);
    write_dataset(
        dir,
        meta,
        encoded(rooms, count, &meta.sim_config, meta.snr_db, seed, progress),
    )
}

/// Encodes the given rooms and writes them to `dir`.
pub fn generate_from_rooms(
    dir: &Path,
    meta: &DatasetMeta,
    rooms: &[RoomSpec],
    progress: &(dyn Fn(usize) + Sync),
) -> Result<DatasetManifest> {
    let get = |i: usize| Ok(rooms[i].clone());
    write_dataset(
        dir,
        meta,
        encoded(get, rooms.len(), &meta.sim_config, meta.snr_db, meta.seed, progress),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{mean_absorption, BandProfile, RoomGeometry};

    fn room(a: f64) -> RoomSpec {
        RoomSpec::uniform(
            RoomGeometry::new(4.0, 5.0, 3.0).unwrap(),
            BandProfile::flat(a),
            BandProfile::flat(0.3),
            [1.0, 1.0, 1.5],
            [3.0, 3.5, 1.2],
        )
        .unwrap()
    }

    fn meta() -> DatasetMeta {
        DatasetMeta {
            name: "t".into(),
            seed: 4,
            strategy: "test".into(),
            sim_config: SimConfig::fast(),
            snr_db: Some(30.0),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let items: Vec<Item> = (0..5)
            .map(|i| Item {
                input: (0..10).map(|k| (i * 10 + k) as f32 * 0.1 - 1.7).collect(),
                label: full_label(&room(0.1 + 0.1 * i as f64)),
                room: room(0.1 + 0.1 * i as f64),
            })
            .collect();
        let m = write_dataset(dir.path(), &meta(), items.iter().cloned().map(Ok)).unwrap();
        assert_eq!(m.count, 5);
        assert_eq!(m.vector_len, 10);
        let ds = Dataset::open(dir.path()).unwrap();
        assert_eq!(ds.manifest, m);
        let ex = ds.load_examples().unwrap();
        assert_eq!(ex.len(), 5);
        for (i, item) in items.iter().enumerate() {
            let (x, l) = ds.read_item(i).unwrap();
            assert_eq!(x, item.input);
            assert_eq!(ex.input(i), &item.input[..]);
            assert_eq!(&l[..], &label_values(&item.label)[..]);
            assert_eq!(ex.label(i), &l[..]);
        }
        assert_eq!(ds.rooms().unwrap(), items.iter().map(|i| i.room.clone()).collect::<Vec<_>>());
        assert!(ds.read_item(5).is_err());
    }

    #[test]
    fn truncated_blob_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let items = (0..3).map(|_| {
            Ok(Item {
                input: vec![0.5; 4],
                label: mean_absorption(&room(0.2)),
                room: room(0.2),
            })
        });
        write_dataset(dir.path(), &meta(), items).unwrap();
        let data = dir.path().join(DATA_FILE);
        let bytes = fs::read(&data).unwrap();
        fs::write(&data, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(Dataset::open(dir.path()), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn mixed_lengths_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let items = [4usize, 5].map(|n| {
            Ok(Item {
                input: vec![0.0; n],
                label: mean_absorption(&room(0.2)),
                room: room(0.2),
            })
        });
        assert!(matches!(write_dataset(dir.path(), &meta(), items), Err(Error::Shape(_))));
    }

    #[test]
    fn batch_order() {
        let b = batches(5000, 1000, 7, 3).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b, batches(5000, 1000, 7, 3).unwrap());
        assert_ne!(b, batches(5000, 1000, 7, 4).unwrap());
        let mut all: Vec<usize> = b.concat();
        all.sort_unstable();
        assert_eq!(all, (0..5000).collect::<Vec<_>>());
        let short = batches(2050, 1000, 1, 1).unwrap();
        assert_eq!(short.iter().map(Vec::len).collect::<Vec<_>>(), vec![1000, 1000, 50]);
        assert!(batches(10, 0, 1, 1).is_err());
    }

    #[test]
    fn generated_sets_are_reproducible() {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let mut m = meta();
        m.sim_config.n_rays = 500;
        let s = SamplingStrategy::rb();
        let a = generate(d1.path(), &m, &s, 3, &|_| {}).unwrap();
        let b = generate(d2.path(), &m, &s, 3, &|_| {}).unwrap();
        assert_eq!(a.fingerprint, b.fingerprint);
        assert_eq!(a.vector_len, INPUT_LEN);
        let ex = Dataset::open(d1.path()).unwrap().load_examples().unwrap();
        let peak = ex.input(0).iter().fold(0.0f32, |m, v| m.max(v.abs()));
        assert_eq!(peak, 1.0);
        let rooms = Dataset::open(d1.path()).unwrap().rooms().unwrap();
        for (i, r) in rooms.iter().enumerate() {
            let l = ex.label(i);
            assert!((l[0] as f64 - mean_absorption(r).alpha_bar.0[0]).abs() < 1e-6);
        }
    }
}
