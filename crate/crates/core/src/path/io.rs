//! CSV persistence for paths (`position,value`).

use super::SamplePath;
use crate::error::{Error, Result};
use std::path::Path;

pub fn read_path_csv(file: &Path) -> Result<SamplePath> {
    let mut rdr = csv::Reader::from_path(file).map_err(|e| Error::Io(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "position" || &headers[1] != "value" {
        return Err(Error::Parse(format!(
            "{}: expected header `position,value`",
            file.display()
        )));
    }
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for (i, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
        let (x, w) = rec.map_err(|e| Error::Parse(format!("{} row {}: {e}", file.display(), i + 1)))?;
        xs.push(x);
        ws.push(w);
    }
    SamplePath::new(xs, ws)
}

pub fn path_csv_string(path: &SamplePath) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["position", "value"]).map_err(|e| Error::Io(e.to_string()))?;
    for (x, w) in path.knots() {
        wtr.serialize((x, w)).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_path_csv(file: &Path, path: &SamplePath) -> Result<()> {
    crate::io::write_atomic(file, path_csv_string(path)?.as_bytes())
}
