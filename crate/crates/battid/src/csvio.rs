//! CSV records and tables.
//!
//! Every file written here starts with a `# battid <version> config-sha256=<hex>`
//! comment line; readers skip `#` lines. Floats are written in Rust's
//! shortest round-trip form, so reloading is bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use battid_core::signals::{self, SampledRecord};
use battid_core::Error as CoreError;

use crate::error::{Error, Result};

/// Relative tolerance on the spacing of timestamps.
pub const UNIFORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resample {
    /// Non-uniform timestamps are an error.
    Reject,
    /// Resample to this interval, or to the median step when `None`.
    To(Option<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub time: String,
    pub current: String,
    pub voltage: String,
    /// Read when the file has this column.
    pub soc: Option<String>,
    pub negate_current: bool,
    pub resample: Resample,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time: "time_s".into(),
            current: "current_a".into(),
            voltage: "voltage_v".into(),
            soc: Some("soc".into()),
            negate_current: false,
            resample: Resample::Reject,
        }
    }
}

pub fn header_line(config_hash: &str) -> String {
    format!("# battid {} config-sha256={config_hash}", env!("CARGO_PKG_VERSION"))
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<SampledRecord> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, path)
}

/// Parses a record; `path` only labels errors.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema, path: &Path) -> Result<SampledRecord> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let headers = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let column = |name: &str| {
        find(name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let (ci_t, ci_i, ci_v) = (
        column(&schema.time)?,
        column(&schema.current)?,
        column(&schema.voltage)?,
    );
    let ci_z = schema.soc.as_deref().and_then(find);

    let (mut t, mut i, mut v, mut z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let get = |c: usize, name: &str| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.parse::<f64>()
                .map_err(|_| parse_err(format!("data row {}: column '{name}': '{s}' is not a number", row + 1)))
        };
        t.push(get(ci_t, &schema.time)?);
        i.push(get(ci_i, &schema.current)?);
        v.push(get(ci_v, &schema.voltage)?);
        if let Some(c) = ci_z {
            z.push(get(c, schema.soc.as_deref().unwrap_or(""))?);
        }
    }
    if t.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    if schema.negate_current {
        i.iter_mut().for_each(|x| *x = -*x);
    }
    let wrap = |source: CoreError| Error::Record {
        path: path.to_path_buf(),
        source,
    };
    signals::check_increasing(&t).map_err(wrap)?;
    let rec = match signals::uniform_interval(&t, UNIFORM_TOL) {
        Ok(ts) => {
            let rec = SampledRecord::new(round_digits(ts, UNIFORM_TOL), t[0], i, v).map_err(wrap)?;
            if ci_z.is_some() {
                rec.with_soc(z).map_err(wrap)?
            } else {
                rec
            }
        }
        Err(CoreError::NonUniformSampling { index }) => match schema.resample {
            Resample::Reject => return Err(wrap(CoreError::NonUniformSampling { index })),
            Resample::To(ts) => {
                let ts = ts.unwrap_or_else(|| median_step(&t));
                let rec = signals::resample_uniform(&t, &i, &v, ts).map_err(wrap)?;
                if ci_z.is_some() {
                    // Same linear interpolation as voltage.
                    let zs = signals::resample_uniform(&t, &i, &z, ts).map_err(wrap)?;
                    rec.with_soc(zs.voltage().to_vec()).map_err(wrap)?
                } else {
                    rec
                }
            }
        },
        Err(e) => return Err(wrap(e)),
    };
    Ok(rec)
}

/// The interval estimate `(t_n - t_0) / n` is off by a few ulps; snap it to
/// 15 significant digits when that stays within tolerance so written records
/// reload exactly.
fn round_digits(ts: f64, tol: f64) -> f64 {
    let r: f64 = format!("{ts:.14e}").parse().unwrap_or(ts);
    if (r - ts).abs() <= tol * ts {
        r
    } else {
        ts
    }
}

fn median_step(t: &[f64]) -> f64 {
    let mut d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Writes `path` through a temporary file in the same directory, then
/// renames it into place.
pub fn atomic_write(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    // Temporary files are created owner-only; outputs should not be.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Header comment, one header row, then one line per row.
pub fn write_table<I>(path: &Path, header: &str, names: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    write_text_table(
        path,
        header,
        names,
        rows.into_iter().map(|r| r.iter().map(f64::to_string).collect()),
    )
}

/// [`write_table`] for pre-formatted cells.
pub fn write_text_table<I>(path: &Path, header: &str, names: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    atomic_write(path, |w| {
        writeln!(w, "{header}")?;
        writeln!(w, "{}", names.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

/// Writes time, current, voltage and (when present) SOC under the schema's
/// column names.
pub fn write_record(path: &Path, rec: &SampledRecord, schema: &CsvSchema, header: &str) -> Result<()> {
    let soc_name = schema.soc.as_deref().unwrap_or("soc");
    let mut names = vec![schema.time.as_str(), schema.current.as_str(), schema.voltage.as_str()];
    if rec.soc().is_some() {
        names.push(soc_name);
    }
    let sign = if schema.negate_current { -1.0 } else { 1.0 };
    let rows = (0..rec.len()).map(|j| {
        let mut row = vec![rec.time(j), sign * rec.current()[j], rec.voltage()[j]];
        if let Some(z) = rec.soc() {
            row.push(z[j]);
        }
        row
    });
    write_table(path, header, &names, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SampledRecord> {
        read_csv(text.as_bytes(), &CsvSchema::default(), Path::new("mem.csv"))
    }

    #[test]
    fn three_rows() {
        let r = parse("time_s,current_a,voltage_v\n0,0,3.6\n1,1,3.5\n2,0,3.6\n").unwrap();
        assert_eq!((r.ts(), r.len()), (1.0, 3));
        assert_eq!(r.current(), &[0.0, 1.0, 0.0]);
        assert!(r.soc().is_none());
    }

    #[test]
    fn comments_and_soc() {
        let r = parse("# battid 0.1.0 config-sha256=00\ntime_s,current_a,voltage_v,soc\n0,1,3.6,0.5\n1,1,3.5,0.6\n")
            .unwrap();
        assert_eq!(r.soc().unwrap(), &[0.5, 0.6]);
    }

    #[test]
    fn non_uniform_is_rejected_unless_resampling() {
        let text = "time_s,current_a,voltage_v\n0,0,3.6\n1,1,3.5\n2.5,0,3.6\n";
        assert!(matches!(
            parse(text),
            Err(Error::Record {
                source: CoreError::NonUniformSampling { .. },
                ..
            })
        ));
        let schema = CsvSchema {
            resample: Resample::To(Some(0.5)),
            ..CsvSchema::default()
        };
        let r = read_csv(text.as_bytes(), &schema, Path::new("m")).unwrap();
        assert_eq!((r.ts(), r.len()), (0.5, 6));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse("time_s,current_a\n0,1\n1,1\n"),
            Err(Error::MissingColumn { .. })
        ));
        assert!(matches!(
            parse("time_s,current_a,voltage_v\n"),
            Err(Error::EmptyFile { .. })
        ));
        assert!(matches!(
            parse("time_s,current_a,voltage_v\n0,x,3\n1,1,3\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse("time_s,current_a,voltage_v\n0,1,3\n0,1,3\n"),
            Err(Error::Record {
                source: CoreError::NonMonotonicTime { .. },
                ..
            })
        ));
    }

    #[test]
    fn negated_current() {
        let schema = CsvSchema {
            negate_current: true,
            ..CsvSchema::default()
        };
        let r = read_csv(
            "time_s,current_a,voltage_v\n0,2,3\n1,-1,3\n".as_bytes(),
            &schema,
            Path::new("m"),
        )
        .unwrap();
        assert_eq!(r.current(), &[-2.0, 1.0]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/t.csv");
        write_table(&p, "# h", &["a", "b"], vec![vec![1.0, 2.5]]).unwrap();
        write_table(&p, "# h", &["a"], vec![vec![3.0]]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "# h\na\n3\n");
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }
}
