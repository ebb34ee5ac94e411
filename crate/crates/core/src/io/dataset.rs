use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Dataset, MISSING};

/// Token for a missing response.
pub const NA: &str = "NA";

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => parse_err(
            path,
            line,
            format!("ragged row: {len} fields where the header has {expected_len}"),
        ),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

struct Table {
    /// (line, n, t, cells) with 0-based n and t.
    rows: Vec<(usize, usize, usize, Vec<String>)>,
    width: usize,
}

fn read_table(path: &Path, prefix: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < 2 || &header[0] != "n" || &header[1] != "t" {
        return Err(parse_err(path, 1, "header must start with `n,t`"));
    }
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("{prefix}_{}", i + 1) {
            return Err(parse_err(
                path,
                1,
                format!("column {} should be `{prefix}_{}`, found `{name}`", i + 3, i + 1),
            ));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let index = |i: usize, what: &str| -> Result<usize> {
            rec[i]
                .parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .map(|v| v - 1)
                .ok_or_else(|| parse_err(path, line, format!("{what} must be a positive integer, found `{}`", &rec[i])))
        };
        let n = index(0, "respondent index")?;
        let t = index(1, "time index")?;
        rows.push((line, n, t, rec.iter().skip(2).map(str::to_owned).collect()));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    Ok(Table {
        rows,
        width: header.len() - 2,
    })
}

/// Places rows on the (n, t) grid, rejecting duplicates and gaps.
fn grid(path: &Path, table: &Table) -> Result<(usize, usize, Vec<usize>)> {
    let n = table.rows.iter().map(|r| r.1).max().unwrap() + 1;
    let t = table.rows.iter().map(|r| r.2).max().unwrap() + 1;
    let mut slot = vec![usize::MAX; n * t];
    for (i, (line, rn, rt, _)) in table.rows.iter().enumerate() {
        let s = &mut slot[rn * t + rt];
        if *s != usize::MAX {
            return Err(parse_err(path, *line, format!("duplicate row for respondent {}, time {}", rn + 1, rt + 1)));
        }
        *s = i;
    }
    if let Some(gap) = slot.iter().position(|&s| s == usize::MAX) {
        return Err(parse_err(
            path,
            0,
            format!("no row for respondent {}, time {}", gap / t + 1, gap % t + 1),
        ));
    }
    Ok((n, t, slot))
}

/// Reads a long-format response file and an optional covariate file.
///
/// Responses are 0-based categories; `categories[j]` bounds item j. A row
/// is either fully observed or `NA` in every item.
pub fn load_dataset(y_path: &Path, x_path: Option<&Path>, categories: &[usize]) -> Result<Dataset> {
    let yt = read_table(y_path, "y")?;
    if yt.width != categories.len() {
        return Err(parse_err(
            y_path,
            1,
            format!("{} item columns but the schema lists {}", yt.width, categories.len()),
        ));
    }
    let (n, t, slot) = grid(y_path, &yt)?;
    let jj = yt.width;
    let mut y = vec![0u16; n * t * jj];
    for (r, &i) in slot.iter().enumerate() {
        let (line, _, _, cells) = &yt.rows[i];
        let na = cells.iter().filter(|c| c.as_str() == NA).count();
        if na != 0 && na != jj {
            return Err(parse_err(y_path, *line, "row mixes NA and observed responses"));
        }
        for (j, c) in cells.iter().enumerate() {
            y[r * jj + j] = if c == NA {
                MISSING
            } else {
                match c.parse::<u16>() {
                    Ok(v) if (v as usize) < categories[j] => v,
                    _ => {
                        return Err(parse_err(
                            y_path,
                            *line,
                            format!("item {}: `{c}` is not a category in 0..{}", j + 1, categories[j]),
                        ))
                    }
                }
            };
        }
    }
    let (d, x) = match x_path {
        None => (0, Vec::new()),
        Some(xp) => {
            let xt = read_table(xp, "x")?;
            let (xn, xtm, xslot) = grid(xp, &xt)?;
            if (xn, xtm) != (n, t) {
                return Err(parse_err(
                    xp,
                    0,
                    format!("covariates cover {xn}×{xtm} rows, responses {n}×{t}"),
                ));
            }
            let d = xt.width;
            let mut x = vec![0.0; n * t * d];
            for (r, &i) in xslot.iter().enumerate() {
                let (line, _, _, cells) = &xt.rows[i];
                for (k, c) in cells.iter().enumerate() {
                    x[r * d + k] = c
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(xp, *line, format!("covariate {}: `{c}` is not a finite number", k + 1)))?;
                }
            }
            (d, x)
        }
    };
    Dataset::new(n, t, categories.to_vec(), d, y, x)
}

/// Writes the response table and, when the dataset has covariates, the
/// covariate table.
pub fn save_dataset(data: &Dataset, y_path: &Path, x_path: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(y_path).map_err(|e| csv_err(y_path, e))?;
    let mut header = vec!["n".to_string(), "t".to_string()];
    header.extend((1..=data.j()).map(|j| format!("y_{j}")));
    w.write_record(&header).map_err(|e| csv_err(y_path, e))?;
    for n in 0..data.n() {
        for t in 0..data.t() {
            let mut rec = vec![(n + 1).to_string(), (t + 1).to_string()];
            rec.extend(data.y_row(n, t).iter().map(|&v| {
                if v == MISSING {
                    NA.to_string()
                } else {
                    v.to_string()
                }
            }));
            w.write_record(&rec).map_err(|e| csv_err(y_path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(y_path, e))?;
    if let Some(xp) = x_path {
        let mut w = csv::Writer::from_path(xp).map_err(|e| csv_err(xp, e))?;
        let mut header = vec!["n".to_string(), "t".to_string()];
        header.extend((1..=data.d()).map(|d| format!("x_{d}")));
        w.write_record(&header).map_err(|e| csv_err(xp, e))?;
        for n in 0..data.n() {
            for t in 0..data.t() {
                let mut rec = vec![(n + 1).to_string(), (t + 1).to_string()];
                rec.extend(data.x_row(n, t).iter().map(|v| v.to_string()));
                w.write_record(&rec).map_err(|e| csv_err(xp, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(xp, e))?;
    }
    Ok(())
}
