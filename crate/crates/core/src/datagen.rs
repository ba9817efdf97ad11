//! Reproducible semi-synthetic datasets and their on-disk format.
//!
//! A dataset is a product catalog, transport capacities and a demand matrix of
//! `horizon × products` normalized order quantities, split into a training
//! window followed by a test window.
//!
//! # File format (version 1)
//!
//! Plain text, three sections. Lines starting with `#` are comments.
//!
//! ```text
//! [header]
//! format = shelfwise-dataset
//! version = 1
//! prng = chacha8
//! seed = 7
//! products = 2
//! horizon = 1396
//! train_len = 900
//! v_max = 1.25
//! c_max = 0.93
//! [catalog]
//! product,max_shelf,volume,weight,spoilage_rate,critical_level
//! 0,120,3.5,2.25,0.07,0.04
//! ...
//! [demand]
//! t,p0,p1
//! 0,0.012,0.031
//! ...
//! ```
//!
//! Header keys appear in exactly that order. Catalog `volume` and `weight`
//! are per normalized unit (one full shelf). Floats are written in Rust's
//! shortest round-trip form so `load(save(d)) == d` bit for bit.
//!
//! Sampling ranges used by [`generate`] with the default spec: shelf size
//! 20..=200 items, item volume log-uniform in 0.002..0.1, weight per unit
//! volume log-uniform in 0.5..2 (a full shelf has volume
//! `item_volume × max_shelf`), spoilage rate log-uniform in 0.02..0.25,
//! critical level uniform in 0.02..0.10, base demand log-uniform in `[min_rate, max_rate]`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::env::{Product, ProductCatalog};
use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "shelfwise-dataset";
pub const FORMAT_VERSION: u32 = 1;
pub const PRNG_NAME: &str = "chacha8";

/// Periods in one weekly cycle: seven days of four replenishment slots.
pub const SEASON_PERIOD: usize = 28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub products: usize,
    pub horizon: usize,
    pub train_len: usize,
    pub seed: u64,
    /// Capacity as a fraction of the mean demanded volume/weight.
    pub tightness: f64,
    /// Range of per-product mean demand (normalized units per period).
    pub min_rate: f64,
    pub max_rate: f64,
    /// Range of shelf sizes in items.
    pub min_shelf: u32,
    pub max_shelf: u32,
    /// Log-uniform range of the volume of one item.
    pub min_item_volume: f64,
    pub max_item_volume: f64,
    /// Log-uniform range of weight per unit volume.
    pub min_density: f64,
    pub max_density: f64,
    /// Log-uniform range of the per-period spoilage rate.
    pub min_spoilage: f64,
    pub max_spoilage: f64,
    /// Uniform range of the critical level.
    pub min_critical: f64,
    pub max_critical: f64,
    /// Range of weekly seasonality amplitude.
    pub min_season_amplitude: f64,
    pub max_season_amplitude: f64,
    /// Sigma of the multiplicative log-normal noise.
    pub noise_sigma: f64,
    pub spike_prob: f64,
    /// Demand during a spike is this many times the regular demand.
    pub spike_factor: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            products: 100,
            horizon: 1396,
            train_len: 900,
            seed: 0,
            tightness: 0.9,
            min_rate: 0.02,
            max_rate: 0.3,
            min_shelf: 20,
            max_shelf: 200,
            min_item_volume: 0.002,
            max_item_volume: 0.1,
            min_density: 0.5,
            max_density: 2.0,
            min_spoilage: 0.02,
            max_spoilage: 0.25,
            min_critical: 0.02,
            max_critical: 0.10,
            min_season_amplitude: 0.1,
            max_season_amplitude: 0.4,
            noise_sigma: 0.3,
            spike_prob: 0.02,
            spike_factor: 3.0,
        }
    }
}

impl DatasetSpec {
    pub fn test_len(&self) -> usize {
        self.horizon.saturating_sub(self.train_len)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.products == 0 {
            return fail("product count must be positive".into());
        }
        if self.horizon == 0 || self.train_len > self.horizon {
            return fail(format!(
                "train_len {} must not exceed horizon {}",
                self.train_len, self.horizon
            ));
        }
        if !(self.tightness > 0.0 && self.tightness < 1.0) {
            return fail(format!("tightness must lie in (0,1), got {}", self.tightness));
        }
        if !(self.min_rate > 0.0 && self.min_rate <= self.max_rate && self.max_rate <= 1.0) {
            return fail(format!("bad demand rate range [{}, {}]", self.min_rate, self.max_rate));
        }
        if self.min_shelf == 0 || self.min_shelf > self.max_shelf {
            return fail(format!("bad shelf range [{}, {}]", self.min_shelf, self.max_shelf));
        }
        let positive_range = |lo: f64, hi: f64| lo > 0.0 && lo <= hi && hi.is_finite();
        if !positive_range(self.min_item_volume, self.max_item_volume) {
            return fail("item volume range must be positive and ordered".into());
        }
        if !positive_range(self.min_density, self.max_density) {
            return fail("density range must be positive and ordered".into());
        }
        if !(self.min_spoilage > 0.0 && self.min_spoilage <= self.max_spoilage && self.max_spoilage <= 1.0) {
            return fail("spoilage range must satisfy 0 < min <= max <= 1".into());
        }
        if !(self.min_critical > 0.0 && self.min_critical <= self.max_critical && self.max_critical < 1.0) {
            return fail("critical range must satisfy 0 < min <= max < 1".into());
        }
        if !(0.0..1.0).contains(&self.min_season_amplitude)
            || !(self.min_season_amplitude..1.0).contains(&self.max_season_amplitude)
        {
            return fail("seasonality amplitudes must satisfy 0 <= min <= max < 1".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail("noise sigma must be finite and non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.spike_prob) || self.spike_factor < 1.0 {
            return fail("spike probability must be in [0,1] and factor >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub seed: u64,
    pub products: usize,
    pub horizon: usize,
    pub train_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub catalog: ProductCatalog,
    /// `horizon` rows of `products` normalized demands.
    pub demand: Vec<Vec<f64>>,
}

/// Half-open range of periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Dataset {
    pub fn num_products(&self) -> usize {
        self.header.products
    }

    pub fn train_window(&self) -> Window {
        Window::new(0, self.header.train_len)
    }

    pub fn test_window(&self) -> Window {
        Window::new(self.header.train_len, self.header.horizon)
    }

    pub fn rows(&self, window: Window) -> &[Vec<f64>] {
        &self.demand[window.start..window.end]
    }

    /// Keeps the first `periods` rows; the split is moved if needed.
    pub fn truncated(&self, periods: usize) -> Self {
        let periods = periods.min(self.header.horizon);
        let mut d = self.clone();
        d.demand.truncate(periods);
        d.header.horizon = periods;
        d.header.train_len = d.header.train_len.min(periods);
        d
    }

    pub fn validate(&self) -> Result<()> {
        self.catalog.validate()?;
        let h = &self.header;
        if self.catalog.len() != h.products {
            return Err(Error::DimensionMismatch {
                context: "catalog rows",
                expected: h.products,
                actual: self.catalog.len(),
            });
        }
        if self.demand.len() != h.horizon {
            return Err(Error::DimensionMismatch {
                context: "demand rows",
                expected: h.horizon,
                actual: self.demand.len(),
            });
        }
        if h.train_len > h.horizon {
            return Err(Error::InvalidSpec("train_len exceeds horizon".into()));
        }
        for (t, row) in self.demand.iter().enumerate() {
            if row.len() != h.products {
                return Err(Error::DimensionMismatch {
                    context: "demand columns",
                    expected: h.products,
                    actual: row.len(),
                });
            }
            if let Some(w) = row.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                return Err(Error::InvalidSpec(format!("negative or non-finite demand {w} at t={t}")));
            }
        }
        Ok(())
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        (rng.random_range(lo.ln()..hi.ln())).exp()
    }
}

struct DemandProfile {
    rate: f64,
    amplitude: f64,
    phase: f64,
}

/// Draws a dataset from `spec`. Pure function of the spec.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = spec.products;

    let mut products = Vec::with_capacity(p);
    let mut profiles = Vec::with_capacity(p);
    for _ in 0..p {
        let max_shelf = f64::from(rng.random_range(spec.min_shelf..=spec.max_shelf));
        let item_volume = log_uniform(&mut rng, spec.min_item_volume, spec.max_item_volume);
        let density = log_uniform(&mut rng, spec.min_density, spec.max_density);
        products.push(Product {
            max_shelf,
            volume: item_volume * max_shelf,
            weight: item_volume * density * max_shelf,
            spoilage_rate: log_uniform(&mut rng, spec.min_spoilage, spec.max_spoilage),
            critical_level: rng.random_range(spec.min_critical..=spec.max_critical),
        });
        profiles.push(DemandProfile {
            rate: log_uniform(&mut rng, spec.min_rate, spec.max_rate),
            amplitude: rng.random_range(spec.min_season_amplitude..=spec.max_season_amplitude),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        });
    }

    // Unit-mean noise: E[exp(N(-σ²/2, σ))] = 1.
    let sigma = spec.noise_sigma;
    let noise = LogNormal::new(-0.5 * sigma * sigma, sigma)
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    // Spikes inflate the mean by this factor; divide it back out.
    let spike_mean = 1.0 + spec.spike_prob * (spec.spike_factor - 1.0);

    let mut demand = Vec::with_capacity(spec.horizon);
    for t in 0..spec.horizon {
        let angle = std::f64::consts::TAU * (t % SEASON_PERIOD) as f64 / SEASON_PERIOD as f64;
        let row = profiles
            .iter()
            .map(|prof| {
                let season = 1.0 + prof.amplitude * (angle + prof.phase).sin();
                let base = prof.rate / spike_mean * season * noise.sample(&mut rng);
                let spike = if rng.random::<f64>() < spec.spike_prob {
                    (spec.spike_factor - 1.0) * base
                } else {
                    0.0
                };
                (base + spike).clamp(0.0, 1.0)
            })
            .collect();
        demand.push(row);
    }

    let mean_load = |coef: &dyn Fn(&Product) -> f64| {
        demand
            .iter()
            .map(|row: &Vec<f64>| row.iter().zip(&products).map(|(w, p)| coef(p) * w).sum::<f64>())
            .sum::<f64>()
            / spec.horizon as f64
    };
    let v_max = spec.tightness * mean_load(&|p| p.volume);
    let c_max = spec.tightness * mean_load(&|p| p.weight);

    let dataset = Dataset {
        header: DatasetHeader {
            version: FORMAT_VERSION,
            seed: spec.seed,
            products: p,
            horizon: spec.horizon,
            train_len: spec.train_len,
        },
        catalog: ProductCatalog::new(products, v_max, c_max)?,
        demand,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Uniform `[0,1]` starting inventories for one `(seed, episode)` pair. The
/// same pair yields the same draw for every algorithm.
pub fn initial_inventories(products: usize, seed: u64, episode: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    (0..products).map(|_| rng.random::<f64>()).collect()
}

/// Stream id reserved for evaluation episodes.
pub const EVAL_EPISODE: u64 = 1 << 40;

pub fn to_text(d: &Dataset) -> String {
    let h = &d.header;
    let mut s = String::new();
    let _ = writeln!(s, "[header]");
    let _ = writeln!(s, "format = {FORMAT_NAME}");
    let _ = writeln!(s, "version = {}", h.version);
    let _ = writeln!(s, "prng = {PRNG_NAME}");
    let _ = writeln!(s, "seed = {}", h.seed);
    let _ = writeln!(s, "products = {}", h.products);
    let _ = writeln!(s, "horizon = {}", h.horizon);
    let _ = writeln!(s, "train_len = {}", h.train_len);
    let _ = writeln!(s, "v_max = {:?}", d.catalog.v_max());
    let _ = writeln!(s, "c_max = {:?}", d.catalog.c_max());
    let _ = writeln!(s, "[catalog]");
    let _ = writeln!(s, "product,max_shelf,volume,weight,spoilage_rate,critical_level");
    for (i, p) in d.catalog.products().iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{:?},{:?},{:?},{:?},{:?}",
            p.max_shelf, p.volume, p.weight, p.spoilage_rate, p.critical_level
        );
    }
    let _ = writeln!(s, "[demand]");
    s.push('t');
    for i in 0..h.products {
        let _ = write!(s, ",p{i}");
    }
    s.push('\n');
    for (t, row) in d.demand.iter().enumerate() {
        let _ = write!(s, "{t}");
        for w in row {
            let _ = write!(s, ",{w:?}");
        }
        s.push('\n');
    }
    s
}

pub fn save(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_text(d)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn next(&mut self, section: &'static str) -> Result<&'a str> {
        for (n, line) in self.inner.by_ref() {
            self.last = n + 1;
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Ok(line);
            }
        }
        Err(Error::Parse {
            section,
            line: self.last + 1,
            message: "unexpected end of file".into(),
        })
    }

    fn err(&self, section: &'static str, message: impl Into<String>) -> Error {
        Error::Parse {
            section,
            line: self.last,
            message: message.into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines, section: &'static str, field: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| lines.err(section, format!("cannot parse {field} from `{s}`")))
}

pub fn from_text(text: &str) -> Result<Dataset> {
    const HEADER: &str = "header";
    const CATALOG: &str = "catalog";
    const DEMAND: &str = "demand";
    let mut lines = Lines::new(text);

    if lines.next(HEADER)? != "[header]" {
        return Err(lines.err(HEADER, "expected `[header]`"));
    }
    let mut field = |key: &'static str| -> Result<String> {
        let line = lines.next(HEADER)?;
        match line.split_once('=') {
            Some((k, v)) if k.trim() == key => Ok(v.trim().to_string()),
            _ => Err(lines.err(HEADER, format!("expected `{key} = ...`, found `{line}`"))),
        }
    };
    let format = field("format")?;
    let version = field("version")?;
    let prng = field("prng")?;
    let seed = field("seed")?;
    let products = field("products")?;
    let horizon = field("horizon")?;
    let train_len = field("train_len")?;
    let v_max = field("v_max")?;
    let c_max = field("c_max")?;
    if format != FORMAT_NAME {
        return Err(lines.err(HEADER, format!("unknown format `{format}`")));
    }
    if prng != PRNG_NAME {
        return Err(lines.err(HEADER, format!("unsupported prng `{prng}`")));
    }
    let version: u32 = parse_num(&lines, HEADER, "version", &version)?;
    if version != FORMAT_VERSION {
        return Err(lines.err(HEADER, format!("unsupported version {version}")));
    }
    let header = DatasetHeader {
        version,
        seed: parse_num(&lines, HEADER, "seed", &seed)?,
        products: parse_num(&lines, HEADER, "products", &products)?,
        horizon: parse_num(&lines, HEADER, "horizon", &horizon)?,
        train_len: parse_num(&lines, HEADER, "train_len", &train_len)?,
    };
    let v_max: f64 = parse_num(&lines, HEADER, "v_max", &v_max)?;
    let c_max: f64 = parse_num(&lines, HEADER, "c_max", &c_max)?;

    if lines.next(CATALOG)? != "[catalog]" {
        return Err(lines.err(CATALOG, "expected `[catalog]`"));
    }
    lines.next(CATALOG)?; // column names
    let mut products = Vec::with_capacity(header.products);
    for i in 0..header.products {
        let line = lines.next(CATALOG)?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(lines.err(CATALOG, format!("expected 6 columns, found {}", cols.len())));
        }
        let idx: usize = parse_num(&lines, CATALOG, "product", cols[0])?;
        if idx != i {
            return Err(lines.err(CATALOG, format!("expected product {i}, found {idx}")));
        }
        products.push(Product {
            max_shelf: parse_num(&lines, CATALOG, "max_shelf", cols[1])?,
            volume: parse_num(&lines, CATALOG, "volume", cols[2])?,
            weight: parse_num(&lines, CATALOG, "weight", cols[3])?,
            spoilage_rate: parse_num(&lines, CATALOG, "spoilage_rate", cols[4])?,
            critical_level: parse_num(&lines, CATALOG, "critical_level", cols[5])?,
        });
    }

    if lines.next(DEMAND)? != "[demand]" {
        return Err(lines.err(DEMAND, "expected `[demand]`"));
    }
    lines.next(DEMAND)?;
    let mut demand = Vec::with_capacity(header.horizon);
    for t in 0..header.horizon {
        let line = lines.next(DEMAND)?;
        let mut cols = line.split(',');
        let idx: usize = parse_num(&lines, DEMAND, "t", cols.next().unwrap_or(""))?;
        if idx != t {
            return Err(lines.err(DEMAND, format!("expected period {t}, found {idx}")));
        }
        let row = cols
            .map(|c| parse_num(&lines, DEMAND, "demand", c))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.products {
            return Err(lines.err(
                DEMAND,
                format!("expected {} demand columns, found {}", header.products, row.len()),
            ));
        }
        demand.push(row);
    }

    let dataset = Dataset {
        header,
        catalog: ProductCatalog::new(products, v_max, c_max)?,
        demand,
    };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> DatasetSpec {
        DatasetSpec {
            products: 5,
            horizon: 60,
            train_len: 40,
            seed,
            ..DatasetSpec::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = to_text(&generate(&small_spec(3)).unwrap());
        let b = to_text(&generate(&small_spec(3)).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, to_text(&generate(&small_spec(4)).unwrap()));
    }

    #[test]
    fn capacities_bind_on_mean_demand() {
        let d = generate(&DatasetSpec {
            products: 20,
            horizon: 300,
            train_len: 200,
            seed: 1,
            ..DatasetSpec::default()
        })
        .unwrap();
        let mean: Vec<f64> = (0..20)
            .map(|i| d.demand.iter().map(|r| r[i]).sum::<f64>() / 300.0)
            .collect();
        let vol: f64 = d.catalog.volumes().zip(&mean).map(|(v, w)| v * w).sum();
        let wt: f64 = d.catalog.weights().zip(&mean).map(|(c, w)| c * w).sum();
        assert!(vol > d.catalog.v_max());
        assert!(wt > d.catalog.c_max());
    }

    #[test]
    fn paper_sized_matrix_shape() {
        let d = generate(&DatasetSpec {
            seed: 9,
            ..DatasetSpec::default()
        })
        .unwrap();
        assert_eq!(d.demand.len(), 1396);
        assert!(d.demand.iter().all(|r| r.len() == 100));
        assert_eq!(d.train_window().len(), 900);
        assert_eq!(d.test_window().len(), 496);
    }

    #[test]
    fn bad_specs_are_rejected() {
        for spec in [
            DatasetSpec { products: 0, ..small_spec(0) },
            DatasetSpec { tightness: 1.0, ..small_spec(0) },
            DatasetSpec { tightness: 0.0, ..small_spec(0) },
            DatasetSpec { train_len: 61, ..small_spec(0) },
        ] {
            assert!(matches!(generate(&spec), Err(Error::InvalidSpec(_))));
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let d = generate(&small_spec(11)).unwrap();
        assert_eq!(from_text(&to_text(&d)).unwrap(), d);
    }

    #[test]
    fn truncated_file_names_section() {
        let text = to_text(&generate(&small_spec(2)).unwrap());
        let cut = &text[..text.find("[demand]").unwrap() + 30];
        match from_text(cut) {
            Err(Error::Parse { section, .. }) => assert_eq!(section, "demand"),
            other => panic!("expected parse error, got {other:?}"),
        }
        let cut = &text[..text.find("[catalog]").unwrap() + 80];
        assert!(matches!(from_text(cut), Err(Error::Parse { section: "catalog", .. })));
    }

    #[test]
    fn zero_spoilage_is_an_invariant_violation() {
        let text = to_text(&generate(&small_spec(2)).unwrap());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let row = lines.iter().position(|l| l.starts_with("0,") && !l.contains("p0")).unwrap();
        let mut cols: Vec<&str> = lines[row].split(',').collect();
        cols[4] = "0";
        lines[row] = cols.join(",");
        assert!(matches!(from_text(&lines.join("\n")), Err(Error::InvalidCatalog(_))));
    }

    #[test]
    fn initial_inventories_are_reproducible() {
        let a = initial_inventories(50, 7, 3);
        assert_eq!(a, initial_inventories(50, 7, 3));
        assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
        assert_ne!(a, initial_inventories(50, 8, 3));
        assert_ne!(a, initial_inventories(50, 7, 4));
    }
}
