use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};
use serde_json::Value;

use crate::config::TableFormat;
use crate::failure::Failure;

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats carry seventeen significant digits.
struct CanonicalFormatter(PrettyFormatter<'static>);

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_canonical_json(value: &impl Serialize) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, CanonicalFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializable report");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::config(
        "output.directory",
        format!("cannot write {}: {e}", path.display()),
    )
}

/// Writes the files of one run; remembers their names for the manifest.
pub struct RunDirectory {
    dir: PathBuf,
    format: TableFormat,
    pub written: Vec<String>,
    _lock: LockFile,
}

impl RunDirectory {
    pub fn open(dir: &Path, format: TableFormat) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        Ok(RunDirectory {
            dir: dir.to_path_buf(),
            format,
            written: vec![],
            _lock: LockFile::acquire(dir)?,
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_failure(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        self.write_bytes(name, to_canonical_json(value).as_bytes())
    }

    /// Writes `stem.csv` (header plus rows) or `stem.json` (one array per
    /// column), depending on the configured table format.
    pub fn write_table(&mut self, stem: &str, columns: &[(&str, &[f64])]) -> Result<(), Failure> {
        let rows = columns.first().map_or(0, |c| c.1.len());
        match self.format {
            TableFormat::Csv => {
                let mut w = csv::Writer::from_writer(vec![]);
                let io = |e: csv::Error| io_failure(Path::new(stem), e);
                w.write_record(columns.iter().map(|c| c.0)).map_err(io)?;
                for i in 0..rows {
                    w.write_record(columns.iter().map(|c| fmt_f64(c.1[i])))
                        .map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| io_failure(Path::new(stem), e))?;
                self.write_bytes(&format!("{stem}.csv"), &bytes)
            }
            TableFormat::Json => {
                let map: serde_json::Map<String, Value> = columns
                    .iter()
                    .map(|(name, data)| {
                        (
                            (*name).to_string(),
                            serde_json::to_value(data).expect("floats"),
                        )
                    })
                    .collect();
                self.write_json(&format!("{stem}.json"), &Value::Object(map))
            }
        }
    }
}

/// Exclusive ownership of a run directory, released on drop.
struct LockFile {
    path: PathBuf,
    _file: File,
}

impl LockFile {
    const NAME: &'static str = ".hybridqm.lock";

    fn acquire(dir: &Path) -> Result<Self, Failure> {
        let path = dir.join(Self::NAME);
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    Failure::config(
                        "output.directory",
                        format!(
                            "{} is locked by another run (remove {} if stale)",
                            dir.display(),
                            path.display()
                        ),
                    )
                } else {
                    io_failure(&path, e)
                }
            })?;
        let _ = writeln!(file, "{}", std::process::id());
        Ok(LockFile { path, _file: file })
    }
}

impl Drop for LockFile {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn json_floats_are_canonical() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            n: usize,
            v: Vec<f64>,
            missing: Option<f64>,
        }
        let s = to_canonical_json(&R {
            a: 0.1,
            n: 3,
            v: vec![2.0],
            missing: None,
        });
        assert!(s.contains("\"a\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        assert!(!s.contains("NaN"));
        assert!(s.contains("2.0000000000000000e0"));
        assert!(s.contains("\"missing\": null"));
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let first = RunDirectory::open(dir.path(), TableFormat::Csv).unwrap();
        assert!(matches!(
            RunDirectory::open(dir.path(), TableFormat::Csv),
            Err(Failure::Config { .. })
        ));
        drop(first);
        assert!(RunDirectory::open(dir.path(), TableFormat::Csv).is_ok());
    }

    #[test]
    fn csv_table() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDirectory::open(dir.path(), TableFormat::Csv).unwrap();
        run.write_table("t", &[("a", &[1.0, 2.0]), ("b", &[0.5, 0.25])])
            .unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(
            text,
            "a,b\n1.0000000000000000e0,5.0000000000000000e-1\n2.0000000000000000e0,2.5000000000000000e-1\n"
        );
    }
}
