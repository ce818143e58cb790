//! File formats: hashed CSV/JSON outputs and the ambient and price readers.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::{NaiveDate, NaiveDateTime};
use lottery_mfe::actions::PERIODS;
use lottery_mfe::thermal::AmbientSeries;
use serde::Serialize;

/// Output directory plus the config hash stamped on every file.
pub struct Output {
    dir: PathBuf,
    hash: String,
}

impl Output {
    pub fn create(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), hash })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// CSV writer whose first line is `# config_sha256=<hex>`.
    pub fn csv(&self, name: &str, header: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
        let path = self.path(name);
        let mut f = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(f, "# config_sha256={}", self.hash)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        Ok(w)
    }

    /// Pretty JSON with a top-level `config_hash` key.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        let obj = v.as_object_mut().ok_or_else(|| anyhow!("{name}: output must be a JSON object"))?;
        obj.insert("config_hash".into(), self.hash.clone().into());
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Shortest round-trip text of a float, with grid noise below 1e-9 removed.
pub fn num(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(f))
}

fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    const FORMATS: [&str; 3] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"];
    let s = s.trim_end_matches('Z');
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .ok_or_else(|| anyhow!("bad timestamp `{s}`"))
}

/// Reads `timestamp,celsius` rows; timestamps are local ISO-8601 and must be
/// evenly spaced.
pub fn read_ambient(path: &Path) -> Result<(AmbientSeries, NaiveDate)> {
    let mut rdr = reader(path)?;
    check_header(&mut rdr, &["timestamp", "celsius"], path)?;
    let mut samples = Vec::new();
    let mut first_day = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let ts = parse_timestamp(&rec[0]).with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let c: f64 = rec[1].parse().with_context(|| format!("{}: row {}: bad celsius", path.display(), i + 1))?;
        first_day.get_or_insert(ts.date());
        samples.push((ts.and_utc().timestamp(), c));
    }
    let day0 = first_day.ok_or_else(|| anyhow!("{}: no samples", path.display()))?;
    // shift the clock so day 0 starts at midnight of the first date
    let origin = day0.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
    for s in &mut samples {
        s.0 -= origin;
    }
    let series = AmbientSeries::from_samples(&samples).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok((series, day0))
}

/// Reads `date,period_index,usd_per_mwh` rows into one price row per date.
pub fn read_prices(path: &Path) -> Result<BTreeMap<NaiveDate, [f64; PERIODS]>> {
    let mut rdr = reader(path)?;
    check_header(&mut rdr, &["date", "period_index", "usd_per_mwh"], path)?;
    let mut seen: BTreeMap<NaiveDate, [Option<f64>; PERIODS]> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.with_context(|| format!("{}: row {row}", path.display()))?;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .with_context(|| format!("{}: row {row}: bad date", path.display()))?;
        let j: usize = rec[1].parse().with_context(|| format!("{}: row {row}: bad period_index", path.display()))?;
        if j >= PERIODS {
            bail!("{}: row {row}: period_index {j} outside 0..{PERIODS}", path.display());
        }
        let p: f64 = rec[2].parse().with_context(|| format!("{}: row {row}: bad price", path.display()))?;
        seen.entry(date).or_insert([None; PERIODS])[j] = Some(p);
    }
    let mut out = BTreeMap::new();
    for (d, row) in seen {
        let mut full = [0.0; PERIODS];
        for (j, p) in row.iter().enumerate() {
            full[j] = p.ok_or_else(|| anyhow!("{}: {d} has no price for period {j}", path.display()))?;
        }
        out.insert(d, full);
    }
    if out.is_empty() {
        bail!("{}: no prices", path.display());
    }
    Ok(out)
}

/// Price rows for `days` consecutive dates from `start`; a date without
/// prices takes the most recent earlier one.
pub fn align_prices(
    prices: &BTreeMap<NaiveDate, [f64; PERIODS]>,
    start: NaiveDate,
    days: usize,
) -> Result<Vec<[f64; PERIODS]>> {
    (0..days)
        .map(|k| {
            let d = start + chrono::Days::new(k as u64);
            prices
                .range(..=d)
                .next_back()
                .map(|(_, p)| *p)
                .ok_or_else(|| anyhow!("no prices on or before {d}"))
        })
        .collect()
}

fn check_header(rdr: &mut csv::Reader<File>, want: &[&str], path: &Path) -> Result<()> {
    let h = rdr.headers()?;
    let got: Vec<&str> = h.iter().collect();
    if got != want {
        bail!("{}: expected header `{}`, found `{}`", path.display(), want.join(","), got.join(","));
    }
    Ok(())
}
