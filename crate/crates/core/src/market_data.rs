//! Daily price bars and the prediction targets derived from them.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const STOCK_CSV_HEADER: [&str; 7] = [
    "date",
    "open",
    "high",
    "low",
    "close",
    "adj_close",
    "volume",
];

pub(crate) const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: u64,
}

impl DailyBar {
    pub fn validate(&self) -> Result<()> {
        let prices = [self.open, self.high, self.low, self.close, self.adj_close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::invalid(format!(
                "{}: prices must be finite and positive",
                self.date
            )));
        }
        if self.low > self.open.min(self.close) || self.high < self.open.max(self.close) {
            return Err(Error::invalid(format!(
                "{}: bar range [{}, {}] does not cover open/close",
                self.date, self.low, self.high
            )));
        }
        Ok(())
    }
}

/// A validated, date-ordered price history for one stock.
#[derive(Debug, Clone, PartialEq)]
pub struct StockSeries {
    stock_id: String,
    bars: Vec<DailyBar>,
}

impl StockSeries {
    /// Sorts `bars` by date and checks every bar plus date uniqueness.
    pub fn new(stock_id: impl Into<String>, mut bars: Vec<DailyBar>) -> Result<Self> {
        for bar in &bars {
            bar.validate()?;
        }
        bars.sort_by_key(|b| b.date);
        if let Some(pair) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::invalid(format!("duplicate date {}", pair[0].date)));
        }
        Ok(StockSeries {
            stock_id: stock_id.into(),
            bars,
        })
    }

    pub fn stock_id(&self) -> &str {
        &self.stock_id
    }

    pub fn bars(&self) -> &[DailyBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn adj_close(&self) -> impl Iterator<Item = f64> + '_ {
        self.bars.iter().map(|b| b.adj_close)
    }

    /// Sum of traded volume over the whole series.
    pub fn total_volume(&self) -> u64 {
        self.bars.iter().map(|b| b.volume).sum()
    }

    /// +1 when day `t` closed strictly above day `t - 1`, otherwise -1.
    pub fn tendency_label(&self, t: usize) -> Result<i8> {
        if t == 0 || t >= self.bars.len() {
            return Err(Error::Index {
                index: t,
                len: self.bars.len(),
            });
        }
        Ok(if self.bars[t].adj_close > self.bars[t - 1].adj_close {
            1
        } else {
            -1
        })
    }

    pub fn from_reader<R: Read>(reader: R, name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::parse(name, 1, e.to_string()))?
            .clone();
        if header.iter().map(str::trim).ne(STOCK_CSV_HEADER) {
            return Err(Error::parse(
                name,
                1,
                format!("expected header `{}`", STOCK_CSV_HEADER.join(",")),
            ));
        }
        let mut bars = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::parse(name, line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| record.get(i).unwrap_or("").trim();
            let price = |i: usize| -> Result<f64> {
                field(i).parse::<f64>().map_err(|_| {
                    Error::parse(
                        name,
                        line,
                        format!("bad {} `{}`", STOCK_CSV_HEADER[i], field(i)),
                    )
                })
            };
            let date = NaiveDate::parse_from_str(field(0), DATE_FORMAT)
                .map_err(|_| Error::parse(name, line, format!("bad date `{}`", field(0))))?;
            let bar = DailyBar {
                date,
                open: price(1)?,
                high: price(2)?,
                low: price(3)?,
                close: price(4)?,
                adj_close: price(5)?,
                volume: field(6)
                    .parse()
                    .map_err(|_| Error::parse(name, line, format!("bad volume `{}`", field(6))))?,
            };
            bar.validate()
                .map_err(|e| Error::invalid(format!("{name}:{line}: {e}")))?;
            bars.push(bar);
        }
        StockSeries::new(name.to_string(), bars).map_err(|e| Error::invalid(format!("{name}: {e}")))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::invalid(format!("writing stock csv: {e}"));
        wtr.write_record(STOCK_CSV_HEADER).map_err(to_err)?;
        for b in &self.bars {
            wtr.write_record([
                b.date.format(DATE_FORMAT).to_string(),
                b.open.to_string(),
                b.high.to_string(),
                b.low.to_string(),
                b.close.to_string(),
                b.adj_close.to_string(),
                b.volume.to_string(),
            ])
            .map_err(to_err)?;
        }
        wtr.flush()
            .map_err(|e| Error::invalid(format!("writing stock csv: {e}")))
    }
}

/// Loads a stock CSV. The stock id is taken from the file stem.
pub fn load_stock_series(path: impl AsRef<Path>) -> Result<StockSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut series =
        StockSeries::from_reader(std::io::BufReader::new(file), &path.display().to_string())?;
    series.stock_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(series)
}

pub fn save_stock_series(series: &StockSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    series.write_csv(std::io::BufWriter::new(file))
}
