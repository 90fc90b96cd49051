//! Slot matrices as dense 0/1 CSV, tensors as `.btt` triple lists, and model
//! directories combining both.
//!
//! A `.btt` file is a header line `btt 1 <O> <F> <T>` followed by one
//! whitespace-separated zero-based `o f t` triple per 1-cell. Triples may come
//! in any order and repeat; files are written sorted in storage order with LF
//! line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::batch::TuckerModel;
use crate::error::{Error, Result};
use crate::tensor::{BoolMatrix, BoolTensor3, Dims};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    }
}

/// Parses a dense 0/1 CSV. A first line with any non-numeric field is taken
/// as a header and skipped.
pub fn parse_slot_csv(text: &str) -> Result<BoolMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<bool>> = Vec::new();
    let mut width = None;
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(n + 1, |p| p.line() as usize);
        if n == 0 && record.iter().any(|f| f.parse::<i64>().is_err()) {
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                line,
                msg: format!(
                    "row {} has {} fields, expected {w}",
                    rows.len(),
                    record.len()
                ),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, f)| match f {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(Error::Parse {
                    line,
                    msg: format!("row {}, col {col}: {f:?} is not 0 or 1", rows.len()),
                }),
            })
            .collect::<Result<Vec<bool>>>()?;
        rows.push(row);
    }
    let cols = width.unwrap_or(0);
    Ok(BoolMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn slot_csv_string(m: &BoolMatrix) -> String {
    let mut out = String::with_capacity(m.rows() * (2 * m.cols() + 1));
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push(if m.get(i, j) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

pub fn load_slot_csv(path: impl AsRef<Path>) -> Result<BoolMatrix> {
    let path = path.as_ref();
    parse_slot_csv(&read(path)?).map_err(|e| in_file(path, e))
}

pub fn save_slot_csv(m: &BoolMatrix, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &slot_csv_string(m))
}

/// Every `*.csv` file in `dir`, sorted by file name.
pub fn slot_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_slot_dir(dir: impl AsRef<Path>) -> Result<Vec<BoolMatrix>> {
    slot_files(dir)?.iter().map(load_slot_csv).collect()
}

pub fn parse_btt(text: &str) -> Result<BoolTensor3> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));
    let (_, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or(Error::Parse {
            line: 1,
            msg: "missing btt header".into(),
        })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse {
        line: 1,
        msg: format!("expected `btt 1 <O> <F> <T>`, found {header:?}"),
    };
    if fields.len() != 5 || fields[0] != "btt" || fields[1] != "1" {
        return Err(bad_header());
    }
    let dim = |s: &str| s.parse::<usize>().map_err(|_| bad_header());
    let dims = Dims::new(dim(fields[2])?, dim(fields[3])?, dim(fields[4])?);
    let mut x = BoolTensor3::try_zeros(dims)?;
    for (line, l) in lines {
        if l.is_empty() {
            continue;
        }
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line,
                msg: format!("expected `o f t` indices, found {l:?}"),
            })?;
        match idx[..] {
            [o, f, t] if o < dims.o && f < dims.f && t < dims.t => x.set(o, f, t, true),
            [_, _, _] => {
                return Err(Error::Parse {
                    line,
                    msg: format!("index {l:?} out of range for {dims}"),
                })
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 3 indices, found {}", idx.len()),
                })
            }
        }
    }
    Ok(x)
}

pub fn btt_string(x: &BoolTensor3) -> String {
    let Dims { o, f, t } = x.dims();
    let mut out = format!("btt 1 {o} {f} {t}\n");
    for (i, j, k) in x.iter_ones() {
        writeln!(out, "{i} {j} {k}").expect("writing to a String");
    }
    out
}

pub fn load_tensor_btt(path: impl AsRef<Path>) -> Result<BoolTensor3> {
    let path = path.as_ref();
    parse_btt(&read(path)?).map_err(|e| in_file(path, e))
}

pub fn save_tensor_btt(x: &BoolTensor3, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &btt_string(x))
}

/// Real matrix as CSV; values use the shortest decimal form that reads back exactly.
pub fn real_csv_string(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn save_real_csv(m: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &real_csv_string(m))
}

/// Writes `core.btt`, `A.csv`, `B.csv` and `C.csv` into `dir`, creating it.
pub fn save_model(model: &TuckerModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_tensor_btt(&model.core, dir.join("core.btt"))?;
    save_slot_csv(&model.a, dir.join("A.csv"))?;
    save_slot_csv(&model.b, dir.join("B.csv"))?;
    save_slot_csv(&model.c, dir.join("C.csv"))
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<TuckerModel> {
    let dir = dir.as_ref();
    let core = load_tensor_btt(dir.join("core.btt"))?;
    let a = load_slot_csv(dir.join("A.csv"))?;
    let b = load_slot_csv(dir.join("B.csv"))?;
    let c = load_slot_csv(dir.join("C.csv"))?;
    TuckerModel::new(core, a, b, c).map_err(|e| Error::Data(format!("{}: {e}", dir.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeededRng, Stream};
    use proptest::prelude::*;

    #[test]
    fn slot_csv_examples() {
        assert_eq!(
            parse_slot_csv("1,0\n0,1\n").unwrap(),
            BoolMatrix::from_rows(&[[1, 0], [0, 1]])
        );
        assert_eq!(
            parse_slot_csv("f0,f1\r\n1,1\r\n0,1\r\n").unwrap(),
            BoolMatrix::from_rows(&[[1, 1], [0, 1]])
        );
        assert_eq!(parse_slot_csv("").unwrap().shape(), (0, 0));
    }

    #[test]
    fn slot_csv_rejections() {
        match parse_slot_csv("1,0\n0,2\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("row 1, col 1"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_slot_csv("1,0\n1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn btt_examples() {
        let x = parse_btt("btt 1 2 3 4\n").unwrap();
        assert_eq!(x, BoolTensor3::zeros(Dims::new(2, 3, 4)));
        let once = parse_btt("btt 1 2 2 2\n1 0 1\n").unwrap();
        let twice = parse_btt("btt 1 2 2 2\r\n1 0 1\r\n1 0 1\r\n").unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.count_ones(), 1);
        assert!(matches!(
            parse_btt("btt 1 2 2 2\n2 0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_btt("btt 2 2 2 2\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_btt("btt 1 2 2\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_btt("btt 1 2 2 2\n0 0\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_btt(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = BoolMatrix::from_rows(&[[1, 0, 1], [0, 0, 1]]);
        let p = dir.path().join("s.csv");
        save_slot_csv(&m, &p).unwrap();
        assert_eq!(load_slot_csv(&p).unwrap(), m);
        let missing = load_slot_csv(dir.path().join("nope.csv"));
        assert!(matches!(missing, Err(Error::Io { .. })));
        fs::write(&p, "1,0\n1,x\n").unwrap();
        match load_slot_csv(&p) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("s.csv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn real_csv_reads_back_exactly() {
        let m = ndarray::arr2(&[[0.1, -1.0 / 3.0], [2.5e-17, 0.0]]);
        let text = real_csv_string(&m);
        let back: Vec<f64> = text
            .lines()
            .flat_map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()))
            .collect();
        assert_eq!(back, m.iter().copied().collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn seeded_round_trips(seed in 0u64..10_000, o in 1usize..9, f in 1usize..9, t in 1usize..6) {
            let mut rng = SeededRng::new(seed, Stream::Noise);
            let x = BoolTensor3::from_fn(Dims::new(o, f, t), |_, _, _| rng.bernoulli(0.3));
            prop_assert_eq!(parse_btt(&btt_string(&x)).unwrap(), x.clone());
            let m = x.slice(0);
            let text = slot_csv_string(&m);
            prop_assert_eq!(parse_slot_csv(&text).unwrap(), m.clone());
            prop_assert_eq!(slot_csv_string(&parse_slot_csv(&text).unwrap()), text);
        }
    }
}
