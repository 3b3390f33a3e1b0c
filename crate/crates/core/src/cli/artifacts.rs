//! On-disk artifacts: report tables, coefficient listings, support maps and
//! heightmaps.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{eval_surface, MultilevelBasis};
use crate::error::{Error, Result};
use crate::experiments::{l0_per_level, MetricGrid};
use crate::solver::{CoefBlocks, FitReport};

/// Stroke colors of the support map, one per level.
pub const LEVEL_COLORS: [&str; 8] = [
    "red", "green", "blue", "black", "orange", "purple", "teal", "brown",
];

fn sci(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.4e}")
    }
}

/// One parsed line of a report table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub method: String,
    pub l0: Vec<usize>,
    pub error: f64,
    pub rms: Option<f64>,
    pub iterations: usize,
    pub time_sec: f64,
}

impl From<&FitReport> for TableRow {
    fn from(r: &FitReport) -> Self {
        Self {
            method: r.method.clone(),
            l0: r.l0.clone(),
            error: r.error,
            rms: r.rms,
            iterations: r.iterations,
            time_sec: r.wall_time_seconds,
        }
    }
}

/// CSV text with header `method,l0_1..l0_J,error,rms,iterations,time_sec`;
/// reals in scientific notation with five significant digits.
pub fn format_table(rows: &[FitReport]) -> Result<String> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidParameter("a table needs at least one row".into()))?;
    let levels = first.l0.len();
    let mut out = String::from("method");
    for j in 1..=levels {
        write!(out, ",l0_{j}").unwrap();
    }
    out += ",error,rms,iterations,time_sec\n";
    for r in rows {
        if r.l0.len() != levels {
            return Err(Error::DimensionMismatch {
                context: "table row levels",
                expected: levels,
                actual: r.l0.len(),
            });
        }
        if r.method.contains([',', '\n']) {
            return Err(Error::InvalidParameter(format!(
                "method name '{}' is not CSV-safe",
                r.method
            )));
        }
        out += &r.method;
        for c in &r.l0 {
            write!(out, ",{c}").unwrap();
        }
        writeln!(
            out,
            ",{},{},{},{}",
            sci(r.error),
            sci(r.rms.unwrap_or(f64::NAN)),
            r.iterations,
            sci(r.wall_time_seconds)
        )
        .unwrap();
    }
    Ok(out)
}

pub fn emit_table(rows: &[FitReport], path: &Path) -> Result<()> {
    std::fs::write(path, format_table(rows)?)?;
    Ok(())
}

pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty table".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let levels = cols.len().checked_sub(5).filter(|_| {
        cols.first() == Some(&"method")
            && cols[cols.len() - 4..] == ["error", "rms", "iterations", "time_sec"]
    });
    let levels = levels.ok_or(Error::Parse {
        line: 1,
        message: format!("unexpected header '{header}'"),
    })?;

    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| Error::Parse {
            line: i + 1,
            message: m.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != levels + 5 {
            return Err(err("wrong number of fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        let l0 = f[1..=levels]
            .iter()
            .map(|s| s.parse::<usize>().map_err(|_| err("bad l0 count")))
            .collect::<Result<Vec<_>>>()?;
        let rms = num(f[levels + 2])?;
        rows.push(TableRow {
            method: f[0].to_string(),
            l0,
            error: num(f[levels + 1])?,
            rms: (!rms.is_nan()).then_some(rms),
            iterations: f[levels + 3]
                .parse()
                .map_err(|_| err("bad iteration count"))?,
            time_sec: num(f[levels + 4])?,
        });
    }
    Ok(rows)
}

/// Nonzero coefficients, one `level kx ky value` line each (levels counted
/// from 1, values round-trip exactly).
pub fn format_coefficients(coefs: &CoefBlocks<f64>, basis: &MultilevelBasis<f64>) -> String {
    let mut out = String::new();
    let d = basis.domain();
    writeln!(
        out,
        "# levels {} base_intervals {}",
        basis.num_levels(),
        basis.base_intervals()
    )
    .unwrap();
    writeln!(
        out,
        "# domain {:?} {:?} {:?} {:?}",
        d.x_min, d.x_max, d.y_min, d.y_max
    )
    .unwrap();
    out += "# level kx ky value\n";
    for (j, (grid, block)) in basis.levels().iter().zip(coefs.blocks()).enumerate() {
        for (c, &v) in block.iter().enumerate() {
            if v != 0.0 {
                let (kx, ky) = grid.index_of(c);
                writeln!(out, "{} {kx} {ky} {v:e}", j + 1).unwrap();
            }
        }
    }
    out
}

pub fn parse_coefficients(text: &str, basis: &MultilevelBasis<f64>) -> Result<CoefBlocks<f64>> {
    let mut coefs = basis.zero_coefs();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(h, _)| h).trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::Parse {
            line: i + 1,
            message: m,
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let level: usize = f[0].parse().map_err(|_| err("bad level".into()))?;
        let kx: i64 = f[1].parse().map_err(|_| err("bad index".into()))?;
        let ky: i64 = f[2].parse().map_err(|_| err("bad index".into()))?;
        let v: f64 = f[3].parse().map_err(|_| err("bad value".into()))?;
        let grid = level
            .checked_sub(1)
            .and_then(|j| basis.levels().get(j))
            .ok_or_else(|| err(format!("level {level} out of range")))?;
        let c = grid
            .column((kx, ky))
            .ok_or_else(|| err(format!("index ({kx}, {ky}) outside level {level}")))?;
        coefs.block_mut(level - 1)[c] = v;
    }
    Ok(coefs)
}

const PLOT_MARGIN: f64 = 40.0;
const PLOT_SIZE: f64 = 520.0;
const LEGEND_WIDTH: f64 = 180.0;

/// SVG drawing one `<rect>` per nonzero coefficient at its support box
/// (clipped to the domain), stroked in its level's color. The frame and the
/// legend use other elements, so rectangles correspond one-to-one to
/// nonzero coefficients.
pub fn support_map_svg(coefs: &CoefBlocks<f64>, basis: &MultilevelBasis<f64>) -> Result<String> {
    let levels = basis.num_levels();
    if levels > LEVEL_COLORS.len() {
        return Err(Error::InvalidParameter(format!(
            "support maps distinguish at most {} levels",
            LEVEL_COLORS.len()
        )));
    }
    if coefs.level_dims() != basis.level_dims() {
        return Err(Error::InvalidParameter(
            "coefficients do not match the basis".into(),
        ));
    }
    let d = basis.domain();
    let px = |x: f64| PLOT_MARGIN + (x - d.x_min) / d.width() * PLOT_SIZE;
    let py = |y: f64| PLOT_MARGIN + (d.y_max - y) / d.height() * PLOT_SIZE;
    let width = 2.0 * PLOT_MARGIN + PLOT_SIZE + LEGEND_WIDTH;
    let height = 2.0 * PLOT_MARGIN + PLOT_SIZE;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    for (j, (grid, block)) in basis.levels().iter().zip(coefs.blocks()).enumerate() {
        writeln!(
            s,
            r#"<g id="level-{}" stroke="{}" fill="none" stroke-width="1">"#,
            j + 1,
            LEVEL_COLORS[j]
        )
        .unwrap();
        for (c, &v) in block.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let k = grid.index_of(c);
            let [x0, x1, y0, y1] = grid.support_box(k);
            let (x0, x1) = (x0.max(d.x_min), x1.min(d.x_max));
            let (y0, y1) = (y0.max(d.y_min), y1.min(d.y_max));
            writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" stroke="{}" data-k="{},{}"/>"#,
                px(x0),
                py(y1),
                px(x1) - px(x0),
                py(y0) - py(y1),
                LEVEL_COLORS[j],
                k.0,
                k.1
            )
            .unwrap();
        }
        s += "</g>\n";
    }
    let (l, r, t, b) = (px(d.x_min), px(d.x_max), py(d.y_max), py(d.y_min));
    writeln!(
        s,
        r#"<path d="M{l:.3} {t:.3} H{r:.3} V{b:.3} H{l:.3} Z" stroke="gray" fill="none" stroke-width="1.5"/>"#
    )
    .unwrap();
    let l0 = l0_per_level(coefs);
    let lx = PLOT_MARGIN * 1.5 + PLOT_SIZE;
    for (j, count) in l0.iter().enumerate() {
        let y = PLOT_MARGIN + 12.0 + 24.0 * j as f64;
        writeln!(
            s,
            r#"<line x1="{lx:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="{}" stroke-width="3"/>"#,
            lx + 24.0,
            LEVEL_COLORS[j]
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="14">level {} ({count})</text>"#,
            lx + 32.0,
            y + 5.0,
            j + 1
        )
        .unwrap();
    }
    s += "</svg>\n";
    Ok(s)
}

pub fn emit_support_map(
    coefs: &CoefBlocks<f64>,
    basis: &MultilevelBasis<f64>,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, support_map_svg(coefs, basis)?)?;
    Ok(())
}

/// Value range mapped onto the gray levels of a heightmap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightmapRange {
    pub min: f64,
    pub max: f64,
    pub width: usize,
    pub height: usize,
}

/// Binary PGM of the surface on the metric grid, min/max normalized to
/// 0..=255. The top row is the largest `y`.
pub fn heightmap_pgm(
    coefs: &CoefBlocks<f64>,
    basis: &MultilevelBasis<f64>,
    grid: MetricGrid,
) -> (Vec<u8>, HeightmapRange) {
    let d = basis.domain();
    let xs = grid.xs(d);
    let ys = grid.ys(d);
    let values: Vec<f64> = ys
        .iter()
        .rev()
        .flat_map(|&y| xs.iter().map(move |&x| [x, y]))
        .map(|p| eval_surface(basis, coefs, p))
        .collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut out = format!("P5\n{} {}\n255\n", grid.m, grid.n).into_bytes();
    out.extend(values.iter().map(|&v| {
        if span > 0.0 {
            (255.0 * (v - min) / span).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    let range = HeightmapRange {
        min,
        max,
        width: grid.m,
        height: grid.n,
    };
    (out, range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Domain;

    fn basis(levels: usize) -> MultilevelBasis<f64> {
        MultilevelBasis::new(Domain::unit_square(), 3, levels).unwrap()
    }

    fn report(l0: Vec<usize>) -> FitReport {
        FitReport {
            method: "mlasso".into(),
            l0,
            error: 9.6203123e-3,
            rms: Some(1.2841e-2),
            iterations: 46521,
            wall_time_seconds: 3.0712,
            objective: 0.36,
            converged: true,
        }
    }

    #[test]
    fn table_layout_and_round_trip() {
        let mut lsq = report(vec![25, 64, 195]);
        lsq.method = "lsq".into();
        lsq.rms = None;
        let text = format_table(&[report(vec![18, 46, 188]), lsq]).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,l0_1,l0_2,l0_3,error,rms,iterations,time_sec"
        );
        assert_eq!(
            lines.next().unwrap(),
            "mlasso,18,46,188,9.6203e-3,1.2841e-2,46521,3.0712e0"
        );
        assert_eq!(
            lines.next().unwrap(),
            "lsq,25,64,195,9.6203e-3,nan,46521,3.0712e0"
        );
        let rows = parse_table(&text).unwrap();
        assert_eq!(rows[0].l0, vec![18, 46, 188]);
        assert_eq!(rows[0].error, 9.6203e-3);
        assert_eq!(rows[1].rms, None);
        assert_eq!(rows[1].iterations, 46521);
    }

    #[test]
    fn table_rejects_mixed_levels_and_empty() {
        assert!(format_table(&[]).is_err());
        assert!(format_table(&[report(vec![1, 2]), report(vec![1, 2, 3])]).is_err());
        assert!(parse_table("method,error\n").is_err());
    }

    #[test]
    fn coefficients_round_trip() {
        let b = basis(2);
        let mut c = b.zero_coefs();
        c.block_mut(0)[3] = 0.125;
        c.block_mut(1)[17] = -1.0 / 3.0;
        let text = format_coefficients(&c, &b);
        assert_eq!(parse_coefficients(&text, &b).unwrap(), c);
        assert!(parse_coefficients("3 0 0 1.0\n", &b).is_err());
        assert!(parse_coefficients("1 9 0 1.0\n", &b).is_err());
    }

    #[test]
    fn empty_support_map_has_frame_and_legend_only() {
        let b = basis(3);
        let svg = support_map_svg(&b.zero_coefs(), &b).unwrap();
        assert_eq!(svg.matches("<rect").count(), 0);
        assert_eq!(svg.matches("<path").count(), 1);
        assert_eq!(svg.matches("<text").count(), 3);
    }

    #[test]
    fn single_coefficient_rectangle_is_clipped() {
        let b = basis(1);
        let grid = &b.levels()[0];
        let mut c = b.zero_coefs();
        c.block_mut(0)[grid.column((1, 0)).unwrap()] = 1.0;
        let svg = support_map_svg(&c, &b).unwrap();
        // h = 2/3; support [−1/3, 5/3] × [−1, 1] is clipped to [−1/3, 1] × [−1, 1].
        let px_per_unit = PLOT_SIZE / 2.0;
        assert!(
            svg.contains("width=\"346.667\" height=\"520.000\""),
            "{svg}"
        );
        let mut c = b.zero_coefs();
        c.block_mut(0)[grid.column((-2, -2)).unwrap()] = 1.0;
        let svg = support_map_svg(&c, &b).unwrap();
        // support [−7/3, −1/3]² clipped to [−1, −1/3]²
        let side = px_per_unit * 2.0 / 3.0;
        assert!(
            svg.contains(&format!("width=\"{side:.3}\" height=\"{side:.3}\"")),
            "{svg}"
        );
        assert_eq!(svg.matches("<rect").count(), 1);
    }

    #[test]
    fn heightmap_header_and_range() {
        let b = basis(1);
        let mut c = b.zero_coefs();
        c.values_mut().iter_mut().for_each(|v| *v = 2.0);
        let (bytes, range) = heightmap_pgm(&c, &b, MetricGrid::default());
        assert!(bytes.starts_with(b"P5\n50 50\n255\n"));
        assert_eq!(bytes.len(), 13 + 2500);
        assert!((range.min - 2.0).abs() < 1e-12 && (range.max - 2.0).abs() < 1e-12);

        let mut c = b.zero_coefs();
        c.block_mut(0)[12] = 1.0;
        let (bytes, range) = heightmap_pgm(&c, &b, MetricGrid::default());
        assert_eq!(range.min, 0.0);
        assert!(range.max > 0.0);
        assert!(bytes[13..].contains(&255) && bytes[13..].contains(&0));
    }
}
