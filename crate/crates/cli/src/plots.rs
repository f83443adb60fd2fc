//! Static PNG renderings of search and lag-study reports.

use std::path::Path;

use anyhow::{Context, Result};
use image::{Rgb, RgbImage};
use newsvm::search::metric_value;
use newsvm::studies::LagStudy;
use newsvm::{Mode, SearchResult};

const CELL: u32 = 14;
const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([40, 40, 40]);
const NEWS: Rgb<u8> = Rgb([31, 119, 180]);
const STOCK: Rgb<u8> = Rgb([214, 39, 40]);
const BEST: Rgb<u8> = Rgb([255, 255, 255]);

/// Blue (low) to yellow (high).
fn ramp(t: f64) -> Rgb<u8> {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    Rgb([lerp(48.0, 253.0), lerp(18.0, 231.0), lerp(130.0, 37.0)])
}

fn save(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path)
        .with_context(|| format!("writing {}", path.display()))
}

/// One cell per `(C, gamma)` pair: C grows downwards, gamma to the right,
/// brighter is better. The selected cell is outlined.
pub fn search_heatmap(result: &SearchResult, path: &Path) -> Result<()> {
    let mut cs: Vec<f64> = result.cells.iter().map(|c| c.c).collect();
    let mut gs: Vec<f64> = result.cells.iter().map(|c| c.g).collect();
    for v in [&mut cs, &mut gs] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let score = |v: f64| if result.mode == Mode::Svr { -v } else { v };
    let values: Vec<f64> = result
        .cells
        .iter()
        .map(|c| score(metric_value(result.mode, c)))
        .filter(|v| v.is_finite())
        .collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut img = RgbImage::from_pixel(gs.len() as u32 * CELL, cs.len() as u32 * CELL, BACKGROUND);
    for cell in &result.cells {
        let row = cs.iter().position(|&c| c == cell.c).unwrap_or(0) as u32;
        let col = gs.iter().position(|&g| g == cell.g).unwrap_or(0) as u32;
        let v = score(metric_value(result.mode, cell));
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        let color = if cell.converged { ramp(t) } else { AXIS };
        let best = result.best == Some((cell.c, cell.g));
        for dy in 0..CELL {
            for dx in 0..CELL {
                let edge = dx == 0 || dy == 0 || dx == CELL - 1 || dy == CELL - 1;
                let px = if best && edge { BEST } else { color };
                img.put_pixel(col * CELL + dx, row * CELL + dy, px);
            }
        }
    }
    save(&img, path)
}

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Metric against lag for one stock and mode: accuracy for classification,
/// SCC for regression, on a fixed [0, 1] vertical axis. Blue is with news,
/// red is stock-only.
pub fn lag_plot(study: &LagStudy, stock_id: &str, mode: Mode, path: &Path) -> Result<()> {
    let (w, h, pad) = (480i64, 320i64, 30i64);
    let mut img = RgbImage::from_pixel(w as u32, h as u32, BACKGROUND);
    line(&mut img, (pad, h - pad), (w - pad, h - pad), AXIS);
    line(&mut img, (pad, pad), (pad, h - pad), AXIS);
    let lags: Vec<usize> = {
        let mut v: Vec<usize> = study.cells.iter().map(|c| c.lag).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let max_lag = lags.last().copied().unwrap_or(1).max(2) as f64;
    let to_px = |lag: usize, v: f64| {
        let x = pad + ((lag as f64 - 1.0) / (max_lag - 1.0) * (w - 2 * pad) as f64).round() as i64;
        let y = h - pad - (v.clamp(0.0, 1.0) * (h - 2 * pad) as f64).round() as i64;
        (x, y)
    };
    for (news, color) in [(true, NEWS), (false, STOCK)] {
        let points: Vec<(i64, i64)> = lags
            .iter()
            .filter_map(|&lag| {
                let m = study.cell(stock_id, lag, news, mode)?.metrics?;
                let v = match mode {
                    Mode::Svc => m.acc?,
                    Mode::Svr => m.scc,
                };
                Some(to_px(lag, v))
            })
            .collect();
        for pair in points.windows(2) {
            line(&mut img, pair[0], pair[1], color);
        }
        for &(x, y) in &points {
            for d in -2..=2 {
                line(&mut img, (x - 2, y + d), (x + 2, y + d), color);
            }
        }
    }
    save(&img, path)
}
