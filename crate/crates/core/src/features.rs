//! Per-day input vectors: X news nodes followed by Y lagged adjusted closes.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::market_data::{StockSeries, DATE_FORMAT};
use crate::textpipe::DailySourceSignal;

pub const DEFAULT_SOURCES: usize = 20;
pub const DEFAULT_LAG: usize = 10;
pub const MAX_LAG: usize = 20;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub num_sources: usize,
    pub lag: usize,
    /// Number of trading days of news summed into each news node.
    pub news_window: usize,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        FeatureLayout {
            num_sources: DEFAULT_SOURCES,
            lag: DEFAULT_LAG,
            news_window: 1,
        }
    }
}

impl FeatureLayout {
    pub fn new(num_sources: usize, lag: usize) -> Result<Self> {
        FeatureLayout {
            num_sources,
            lag,
            news_window: 1,
        }
        .validated()
    }

    pub fn with_news_window(self, news_window: usize) -> Result<Self> {
        FeatureLayout {
            news_window,
            ..self
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if self.num_sources == 0 {
            return Err(Error::invalid("at least one news source node is required"));
        }
        if !(1..=MAX_LAG).contains(&self.lag) {
            return Err(Error::invalid(format!(
                "lag {} outside [1, {MAX_LAG}]",
                self.lag
            )));
        }
        if self.news_window == 0 {
            return Err(Error::invalid("news window must be at least one day"));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// The prediction day.
    pub date: NaiveDate,
    pub x: Vec<f64>,
    pub label_class: i8,
    pub label_price: f64,
    pub has_news: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub layout: FeatureLayout,
    /// Leading news columns in each row; 0 for a stock-only view.
    pub news_nodes: usize,
    pub expanded: bool,
    pub rows: Vec<FeatureVector>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.news_nodes + self.layout.lag
    }

    /// Same rows with the news columns dropped.
    pub fn without_news(&self) -> Dataset {
        Dataset {
            layout: self.layout,
            news_nodes: 0,
            expanded: self.expanded,
            rows: self
                .rows
                .iter()
                .map(|r| FeatureVector {
                    x: r.x[self.news_nodes..].to_vec(),
                    ..r.clone()
                })
                .collect(),
        }
    }

    /// The rows at `indices`, in the order given.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            ..self.header_clone()
        }
    }

    fn header_clone(&self) -> Dataset {
        Dataset {
            layout: self.layout,
            news_nodes: self.news_nodes,
            expanded: self.expanded,
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        let io = |e| Error::io("<dataset>", e);
        writeln!(
            w,
            "# newsvm dataset v1 sources={} lag={} window={} news_nodes={} expanded={}",
            self.layout.num_sources,
            self.layout.lag,
            self.layout.news_window,
            self.news_nodes,
            self.expanded
        )
        .map_err(io)?;
        let mut header = vec!["date".to_string(), "has_news".to_string()];
        header.extend((1..=self.dim()).map(|k| format!("f{k}")));
        header.push("label_class".into());
        header.push("label_price".into());
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for r in &self.rows {
            let mut fields = vec![
                r.date.format(DATE_FORMAT).to_string(),
                u8::from(r.has_news).to_string(),
            ];
            fields.extend(r.x.iter().map(f64::to_string));
            fields.push(r.label_class.to_string());
            fields.push(r.label_price.to_string());
            writeln!(w, "{}", fields.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv<R: BufRead>(reader: R, name: &str) -> Result<Dataset> {
        let mut lines = reader.lines().enumerate();
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((i, Err(e))) => Err(Error::parse(name, i + 1, e.to_string())),
                None => Err(Error::parse(name, 0, format!("missing {what}"))),
            }
        };
        let (_, meta) = next_line("schema line")?;
        let meta = meta
            .strip_prefix("# newsvm dataset v1")
            .ok_or_else(|| Error::parse(name, 1, "expected `# newsvm dataset v1` schema line"))?;
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for part in meta.split_whitespace() {
            if let Some((k, v)) = part.split_once('=') {
                kv.insert(k, v);
            }
        }
        let num = |k: &str| -> Result<usize> {
            kv.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(name, 1, format!("missing or bad `{k}`")))
        };
        let layout =
            FeatureLayout::new(num("sources")?, num("lag")?)?.with_news_window(num("window")?)?;
        let news_nodes = num("news_nodes")?;
        let expanded = match kv.get("expanded") {
            Some(&"true") => true,
            Some(&"false") => false,
            _ => return Err(Error::parse(name, 1, "missing or bad `expanded`")),
        };
        let mut ds = Dataset {
            layout,
            news_nodes,
            expanded,
            rows: Vec::new(),
        };
        let dim = ds.dim();
        let (_, header) = next_line("header")?;
        if header.split(',').count() != dim + 4 {
            return Err(Error::parse(
                name,
                2,
                format!("expected {} columns", dim + 4),
            ));
        }
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(name, line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 4 {
                return Err(Error::parse(
                    name,
                    line_no,
                    format!("expected {} columns", dim + 4),
                ));
            }
            let bad = |what: &str| Error::parse(name, line_no, format!("bad {what}"));
            let date =
                NaiveDate::parse_from_str(fields[0], DATE_FORMAT).map_err(|_| bad("date"))?;
            let has_news = match fields[1] {
                "1" => true,
                "0" => false,
                _ => return Err(bad("has_news")),
            };
            let x = fields[2..2 + dim]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad("feature")))
                .collect::<Result<Vec<_>>>()?;
            let label_class: i8 = fields[2 + dim].parse().map_err(|_| bad("label_class"))?;
            let label_price: f64 = fields[3 + dim].parse().map_err(|_| bad("label_price"))?;
            ds.rows.push(FeatureVector {
                date,
                x,
                label_class,
                label_price,
                has_news,
            });
        }
        Ok(ds)
    }
}

/// Both views of one stock's featurized history.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    /// Every eligible day; no-news days carry zero news nodes.
    pub expanded: Dataset,
    /// Only days with news.
    pub standard: Dataset,
}

impl Assembled {
    pub fn view(&self, expanded: bool) -> &Dataset {
        if expanded {
            &self.expanded
        } else {
            &self.standard
        }
    }
}

/// Builds one row per day `t` for `t` in `lag + 1 .. len`.
///
/// Row `t` reads the news signal of days `t - window .. t - 1` and the
/// adjusted closes of days `t - lag .. t - 1`; its labels come from day `t`.
pub fn assemble(
    series: &StockSeries,
    signals: &BTreeMap<NaiveDate, DailySourceSignal>,
    layout: FeatureLayout,
) -> Result<Assembled> {
    let bars = series.bars();
    if bars.len() < layout.lag + 1 {
        return Err(Error::invalid(format!(
            "{}: {} bars is too short for lag {}",
            series.stock_id(),
            bars.len(),
            layout.lag
        )));
    }
    let x_len = layout.num_sources;
    let mut rows = Vec::with_capacity(bars.len().saturating_sub(layout.lag + 1));
    for t in (layout.lag + 1)..bars.len() {
        let mut x = vec![0.0; x_len + layout.lag];
        let mut has_news = false;
        for back in 1..=layout.news_window.min(t) {
            if let Some(sig) = signals.get(&bars[t - back].date) {
                if sig.values.len() != x_len {
                    return Err(Error::Dimension {
                        expected: x_len,
                        actual: sig.values.len(),
                    });
                }
                has_news |= sig.has_news();
                for (node, v) in x[..x_len].iter_mut().zip(&sig.values) {
                    *node += v;
                }
            }
        }
        for k in 1..=layout.lag {
            x[x_len + k - 1] = bars[t - k].adj_close;
        }
        rows.push(FeatureVector {
            date: bars[t].date,
            x,
            label_class: series.tendency_label(t)?,
            label_price: bars[t].adj_close,
            has_news,
        });
    }
    let standard_rows = rows.iter().filter(|r| r.has_news).cloned().collect();
    Ok(Assembled {
        expanded: Dataset {
            layout,
            news_nodes: x_len,
            expanded: true,
            rows,
        },
        standard: Dataset {
            layout,
            news_nodes: x_len,
            expanded: false,
            rows: standard_rows,
        },
    })
}

/// Z-score statistics fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1.0 for constant columns.
    pub std: Vec<f64>,
    /// Columns that were constant in training and always scale to 0.
    pub constant: Vec<bool>,
    pub target_mean: f64,
    pub target_std: f64,
}

fn column_stats(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, bool) {
    let n = values.clone().count() as f64;
    let mut first = None;
    let mut all_equal = true;
    let mut sum = 0.0;
    for v in values.clone() {
        match first {
            None => first = Some(v),
            Some(f) => all_equal &= f == v,
        }
        sum += v;
    }
    let mean = sum / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let constant = all_equal || std <= 1e-12 * mean.abs().max(1.0);
    if constant {
        (first.unwrap_or(mean), 1.0, true)
    } else {
        (mean, std, false)
    }
}

impl ScalingParams {
    pub fn fit(rows: &[FeatureVector]) -> Result<ScalingParams> {
        if rows.len() < 2 {
            return Err(Error::invalid("scaling needs at least two training rows"));
        }
        let dim = rows[0].x.len();
        if let Some(r) = rows.iter().find(|r| r.x.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: r.x.len(),
            });
        }
        let mut params = ScalingParams {
            mean: Vec::with_capacity(dim),
            std: Vec::with_capacity(dim),
            constant: Vec::with_capacity(dim),
            target_mean: 0.0,
            target_std: 1.0,
        };
        for k in 0..dim {
            let (mean, std, constant) = column_stats(rows.iter().map(|r| r.x[k]));
            if constant {
                log::warn!(
                    "feature f{} is constant in the training rows; it will scale to 0",
                    k + 1
                );
            }
            params.mean.push(mean);
            params.std.push(std);
            params.constant.push(constant);
        }
        let (tm, ts, _) = column_stats(rows.iter().map(|r| r.label_price));
        params.target_mean = tm;
        params.target_std = ts;
        Ok(params)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn scale(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(k, v)| {
                if self.constant[k] {
                    0.0
                } else {
                    (v - self.mean[k]) / self.std[k]
                }
            })
            .collect())
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn unscale_target(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }
}

/// Rows scaled with fitted statistics, ready for training or evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRows {
    pub x: Vec<Vec<f64>>,
    pub class: Vec<f64>,
    /// Standardized regression target.
    pub target: Vec<f64>,
}

pub fn fit_scaler(rows: &[FeatureVector]) -> Result<ScalingParams> {
    ScalingParams::fit(rows)
}

pub fn apply_scaler(params: &ScalingParams, rows: &[FeatureVector]) -> Result<ScaledRows> {
    let mut out = ScaledRows {
        x: Vec::with_capacity(rows.len()),
        class: Vec::with_capacity(rows.len()),
        target: Vec::with_capacity(rows.len()),
    };
    for r in rows {
        out.x.push(params.scale(&r.x)?);
        out.class.push(f64::from(r.label_class));
        out.target.push(params.scale_target(r.label_price));
    }
    Ok(out)
}

/// Number of test rows for a split: `floor(n * (1 - fraction))`, at least one.
pub fn test_size(n: usize, train_fraction: f64) -> Result<usize> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n_test = ((n as f64) * (1.0 - train_fraction) + 1e-9).floor() as usize;
    let n_test = n_test.max(1);
    if n_test >= n {
        return Err(Error::invalid(format!(
            "a {train_fraction} split of {n} rows leaves the training side empty"
        )));
    }
    Ok(n_test)
}

/// Seeded partition of `0..n` into (train, test) positions, each ascending.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_test = test_size(n, train_fraction)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Seeded random train/test split. Rows are put in date order first, so the
/// partition depends only on the set of dates and the seed.
pub fn split_random(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if dataset.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    let mut sorted = dataset.clone();
    sorted.rows.sort_by_key(|r| r.date);
    let (train, test) = split_indices(sorted.len(), train_fraction, seed)?;
    Ok((sorted.select(&train), sorted.select(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::DailyBar;
    use proptest::prelude::*;

    fn date(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + chrono::Days::new(i as u64)
    }

    fn series(prices: &[f64]) -> StockSeries {
        let bars = prices
            .iter()
            .enumerate()
            .map(|(i, &p)| DailyBar {
                date: date(i),
                open: p,
                high: p,
                low: p,
                close: p,
                adj_close: p,
                volume: 1,
            })
            .collect();
        StockSeries::new("S", bars).unwrap()
    }

    fn signals(n: usize, x: usize, silent: &[usize]) -> BTreeMap<NaiveDate, DailySourceSignal> {
        (0..n)
            .filter(|i| !silent.contains(i))
            .map(|i| {
                let d = date(i);
                let sig = DailySourceSignal {
                    date: d,
                    values: (0..x).map(|j| (i * 10 + j) as f64 / 100.0).collect(),
                    coverage: vec![1; x],
                };
                (d, sig)
            })
            .collect()
    }

    fn row(v: f64) -> FeatureVector {
        FeatureVector {
            date: date(0),
            x: vec![v],
            label_class: 1,
            label_price: v,
            has_news: true,
        }
    }

    #[test]
    fn boundary_lengths() {
        let layout = FeatureLayout::new(2, 3).unwrap();
        let s = series(&[1.0, 2.0, 3.0, 4.0]);
        let a = assemble(&s, &signals(4, 2, &[]), layout).unwrap();
        assert!(a.expanded.is_empty());
        assert!(assemble(&series(&[1.0, 2.0, 3.0]), &signals(3, 2, &[]), layout).is_err());
    }

    #[test]
    fn enumerates_valid_days() {
        let layout = FeatureLayout::new(2, 3).unwrap();
        let prices = [1.0, 2.0, 3.0, 4.0, 5.0, 4.5];
        let a = assemble(&series(&prices), &signals(6, 2, &[]), layout).unwrap();
        // valid t: 4 and 5
        assert_eq!(a.expanded.len(), 2);
        assert_eq!(
            a.standard,
            Dataset {
                expanded: false,
                ..a.expanded.clone()
            }
        );
        let r = &a.expanded.rows[0];
        assert_eq!(r.date, date(4));
        assert_eq!(r.x, vec![0.3, 0.31, 4.0, 3.0, 2.0]);
        assert_eq!(r.label_class, 1);
        assert_eq!(r.label_price, 5.0);
        assert_eq!(a.expanded.rows[1].label_class, -1);
        assert!(a
            .expanded
            .rows
            .iter()
            .all(|r| r.x.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn no_news_day_expansion() {
        let layout = FeatureLayout::new(2, 1).unwrap();
        let prices = [1.0, 2.0, 3.0, 4.0, 5.0];
        // day 2 silent: the row for t = 3 has no news
        let a = assemble(&series(&prices), &signals(5, 2, &[2]), layout).unwrap();
        assert_eq!(a.expanded.len(), 3);
        let silent = a.expanded.rows.iter().find(|r| r.date == date(3)).unwrap();
        assert!(!silent.has_news);
        assert_eq!(&silent.x[..2], &[0.0, 0.0]);
        assert_eq!(a.standard.len(), 2);
        assert!(a.standard.rows.iter().all(|r| r.date != date(3)));
    }

    #[test]
    fn news_window_sums_prior_days() {
        let layout = FeatureLayout::new(1, 1)
            .unwrap()
            .with_news_window(2)
            .unwrap();
        let a = assemble(&series(&[1.0, 2.0, 3.0, 4.0]), &signals(4, 1, &[]), layout).unwrap();
        // t = 2 sums days 1 and 0
        assert_eq!(a.expanded.rows[0].x[0], 0.1 + 0.0);
        assert!((a.expanded.rows[1].x[0] - (0.2 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn stock_only_view() {
        let layout = FeatureLayout::new(2, 2).unwrap();
        let a = assemble(&series(&[1.0, 2.0, 3.0, 4.0]), &signals(4, 2, &[]), layout).unwrap();
        let s = a.expanded.without_news();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.rows[0].x, vec![3.0, 2.0]);
    }

    #[test]
    fn scaler_hand_values() {
        let rows: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&v| row(v)).collect();
        let p = fit_scaler(&rows).unwrap();
        assert_eq!(p.mean[0], 2.0);
        assert!((p.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((p.std[0] - 0.8165).abs() < 1e-4);
        let z = apply_scaler(&p, &rows).unwrap();
        let expected = [-1.2247, 0.0, 1.2247];
        for (got, want) in z.x.iter().zip(expected) {
            assert!((got[0] - want).abs() < 1e-4);
        }
    }

    #[test]
    fn scaler_constant_column() {
        let rows: Vec<_> = [5.0, 5.0, 5.0].iter().map(|&v| row(v)).collect();
        let p = fit_scaler(&rows).unwrap();
        assert!(p.constant[0]);
        assert!(p.std.iter().all(|s| *s > 0.0));
        let z = apply_scaler(&p, &rows).unwrap();
        assert!(z.x.iter().all(|r| r[0] == 0.0));
        assert_eq!(p.scale(&[7.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn scaler_needs_two_rows() {
        assert!(fit_scaler(&[row(1.0)]).is_err());
    }

    #[test]
    fn split_is_deterministic() {
        let ds = Dataset {
            layout: FeatureLayout::new(1, 1).unwrap(),
            news_nodes: 1,
            expanded: false,
            rows: (0..10)
                .map(|i| FeatureVector {
                    date: date(i),
                    ..row(i as f64)
                })
                .collect(),
        };
        let (a_train, a_test) = split_random(&ds, 0.8, 7).unwrap();
        let (b_train, b_test) = split_random(&ds, 0.8, 7).unwrap();
        assert_eq!((a_train.len(), a_test.len()), (8, 2));
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);

        let (train, test) = split_random(&ds, 0.99, 7).unwrap();
        assert_eq!((train.len(), test.len()), (9, 1));
        assert!(split_random(&ds, 0.0, 1).is_err());
        assert!(split_random(&ds, 1.0, 1).is_err());
        let one = ds.select(&[0]);
        assert!(split_random(&one, 0.5, 1).is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let layout = FeatureLayout::new(2, 2).unwrap();
        let a = assemble(
            &series(&[1.0, 2.5, 3.1, 4.0, 3.3]),
            &signals(5, 2, &[1]),
            layout,
        )
        .unwrap();
        let mut buf = Vec::new();
        a.expanded.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "date,has_news,f1,f2,f3,f4,label_class,label_price"
        );
        assert_eq!(
            Dataset::read_csv(buf.as_slice(), "mem").unwrap(),
            a.expanded
        );
    }

    proptest! {
        #[test]
        fn scaled_columns_are_standard(cols in proptest::collection::vec(
            proptest::collection::vec(-1e3f64..1e3, 3), 2..30)) {
            let rows: Vec<_> = cols.iter().map(|x| FeatureVector { x: x.clone(), ..row(x[0]) }).collect();
            let p = fit_scaler(&rows).unwrap();
            let z = apply_scaler(&p, &rows).unwrap();
            let n = rows.len() as f64;
            for k in 0..3 {
                if p.constant[k] { continue; }
                let mean = z.x.iter().map(|r| r[k]).sum::<f64>() / n;
                let var = z.x.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
            }
            // a second pass over standardized data is the identity
            let std_rows: Vec<_> = z.x.iter().map(|x| FeatureVector { x: x.clone(), ..row(0.0) }).collect();
            let p2 = fit_scaler(&std_rows).unwrap();
            let z2 = apply_scaler(&p2, &std_rows).unwrap();
            for (a, b) in z.x.iter().zip(&z2.x) {
                for k in 0..3 {
                    if !p.constant[k] { prop_assert!((a[k] - b[k]).abs() < 1e-12); }
                }
            }
        }

        #[test]
        fn split_depends_only_on_dates(n in 2usize..40, seed in any::<u64>(), perm_seed in any::<u64>()) {
            let ds = Dataset {
                layout: FeatureLayout::new(1, 1).unwrap(),
                news_nodes: 1,
                expanded: false,
                rows: (0..n).map(|i| FeatureVector { date: date(i), ..row(i as f64) }).collect(),
            };
            let mut shuffled = ds.clone();
            shuffled.rows.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
            let (a, at) = split_random(&ds, 0.8, seed).unwrap();
            let (b, bt) = split_random(&shuffled, 0.8, seed).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(at, bt);
        }

        #[test]
        fn views_agree_and_never_look_ahead(
            prices in proptest::collection::vec(1.0f64..50.0, 4..30),
            lag in 1usize..4,
            silent in proptest::collection::vec(0usize..30, 0..8),
        ) {
            prop_assume!(prices.len() > lag + 1);
            let layout = FeatureLayout::new(2, lag).unwrap();
            let s = series(&prices);
            let a = assemble(&s, &signals(prices.len(), 2, &silent), layout).unwrap();
            prop_assert!(a.expanded.len() >= a.standard.len());
            let with_news: Vec<_> = a.expanded.rows.iter().filter(|r| r.has_news).cloned().collect();
            prop_assert_eq!(&with_news, &a.standard.rows);
            for r in &a.expanded.rows {
                let t = s.bars().iter().position(|b| b.date == r.date).unwrap();
                for k in 1..=lag {
                    // lag k holds the close of day t - k, never day t or later
                    prop_assert_eq!(r.x[2 + k - 1], prices[t - k]);
                }
                let news_day = t - 1;
                let expected_news = !silent.contains(&news_day);
                prop_assert_eq!(r.has_news, expected_news);
                if expected_news {
                    prop_assert_eq!(r.x[0], (news_day * 10) as f64 / 100.0);
                }
            }
        }
    }
}
