//! CSV comparison modulo clock-dependent columns.

use std::collections::BTreeMap;
use std::path::Path;

use gnimc::bench::TIMING_COLUMNS;

/// Every CSV under `dir`, keyed by relative path, with timing columns removed.
pub fn stripped_csvs(dir: &Path) -> BTreeMap<String, Vec<Vec<String>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let mut reader = csv::Reader::from_path(&path).unwrap();
            let headers = reader.headers().unwrap().clone();
            let keep: Vec<usize> = (0..headers.len())
                .filter(|&i| !TIMING_COLUMNS.contains(&&headers[i]))
                .collect();
            let mut rows = vec![keep.iter().map(|&i| headers[i].to_string()).collect()];
            for rec in reader.records() {
                let rec = rec.unwrap();
                rows.push(keep.iter().map(|&i| rec[i].to_string()).collect());
            }
            let key = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            out.insert(key, rows);
        }
    }
    out
}
