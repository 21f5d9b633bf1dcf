//! Diagnostic CSV dumps.
//!
//! * `hash_w{window}.csv`: `location,distance,kept` for every scanning
//!   location of a grain.
//! * `confidence_level{t}.csv`: `rank,confidence,correct,side` for the
//!   training instances entering level `t`, where `side` is `high` or `low`.

use std::fmt::Write;

use hwforest_core::cascade::{CascadeFit, RankedEntry};
use hwforest_core::scanning::GrainModel;

pub fn hash_locations(g: &GrainModel) -> String {
    let mut s = String::from("location,distance,kept\n");
    let kept = &g.retained_locations;
    let mut rows: Vec<(usize, f64)> =
        g.threshold.order.iter().copied().zip(g.threshold.sorted.iter().copied()).collect();
    rows.sort_by_key(|r| r.0);
    for (loc, d) in rows {
        let _ = writeln!(s, "{loc},{d},{}", u8::from(kept.binary_search(&loc).is_ok()));
    }
    s
}

pub fn confidence_ranking(entries: &[RankedEntry]) -> String {
    let mut s = String::from("rank,confidence,correct,side\n");
    for (r, e) in entries.iter().enumerate() {
        let side = if e.high { "high" } else { "low" };
        let _ = writeln!(s, "{},{},{},{side}", r + 1, e.confidence, u8::from(e.correct));
    }
    s
}

/// Every dump for a fit, as `(file name, contents)`.
pub fn all(fit: &CascadeFit) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for g in fit.model.scan.iter().flat_map(|s| &s.grains) {
        files.push((format!("hash_w{}.csv", g.config.window), hash_locations(g).into_bytes()));
    }
    for (t, entries) in fit.rankings.iter().enumerate() {
        files.push((format!("confidence_level{}.csv", t + 1), confidence_ranking(entries).into_bytes()));
    }
    files
}
