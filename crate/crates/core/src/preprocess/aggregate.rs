use std::collections::BTreeMap;

use super::ProvenanceStep;
use crate::domain::{CrackFamily, CrackObservation, ExtentKind, SegmentRecord, Severity};
use crate::error::{Error, Result};
use crate::ingest::Corpus;

const LENGTH_EPS: f64 = 1e-9;

/// Merge consecutive same-route records into windows of `target_length` miles.
///
/// IRI is the plain mean; rutting, faulting, crack width and depth are
/// length-weighted means (absent cracks count as zero); crack extents in feet
/// are summed and extents in percent are length-weighted means. A change of
/// surface type or functional class, a route change or a gap between records
/// ends the current window; windows shorter than `target_length` are dropped
/// and noted in the provenance step.
pub fn aggregate(corpus: &Corpus, target_length: f64) -> Result<Corpus> {
    if !(target_length.is_finite() && target_length > 0.0) {
        return Err(Error::Domain(format!(
            "aggregation length must be positive, got {target_length}"
        )));
    }
    let group = match corpus.records.first() {
        None => 1,
        Some(first) => {
            let len = first.length;
            if let Some(r) = corpus
                .records
                .iter()
                .find(|r| (r.length - len).abs() > LENGTH_EPS * len.max(1.0))
            {
                return Err(Error::Domain(format!(
                    "aggregation needs uniform record lengths; found {} and {}",
                    len, r.length
                )));
            }
            let ratio = target_length / len;
            let group = ratio.round();
            if group < 1.0 || (group * len - target_length).abs() > LENGTH_EPS * target_length.max(1.0) {
                return Err(Error::Domain(format!(
                    "aggregation length {target_length} is not a positive integer multiple of the record length {len}"
                )));
            }
            group as usize
        }
    };

    let mut out = Vec::with_capacity(corpus.len() / group + 1);
    let mut notes = Vec::new();
    let mut dropped_records = 0usize;
    let mut split_windows = 0usize;
    let mut window: Vec<&SegmentRecord> = Vec::with_capacity(group);

    let mut drop_partial = |window: &mut Vec<&SegmentRecord>, reason: &str, notes: &mut Vec<String>| {
        if let Some(first) = window.first() {
            notes.push(format!(
                "dropped partial window {}@{} ({} of {} records): {}",
                first.route_id,
                first.start_milepost,
                window.len(),
                group,
                reason
            ));
            dropped_records += window.len();
            window.clear();
        }
    };

    for r in &corpus.records {
        if let Some(&last) = window.last() {
            let reason = if last.route_id != r.route_id {
                Some("route ends")
            } else if (r.start_milepost - last.end_milepost()).abs() > LENGTH_EPS * r.start_milepost.abs().max(1.0)
            {
                Some("gap between records")
            } else if last.surface_type != r.surface_type || last.functional_class != r.functional_class {
                split_windows += 1;
                Some("surface type or functional class changes")
            } else {
                None
            };
            if let Some(reason) = reason {
                drop_partial(&mut window, reason, &mut notes);
            }
        }
        window.push(r);
        if window.len() == group {
            out.push(merge(&window, target_length)?);
            window.clear();
        }
    }
    drop_partial(&mut window, "trailing window", &mut notes);

    let mut step = ProvenanceStep::new("aggregate", corpus.len(), out.len())
        .param("target_length", target_length)
        .param("records_per_window", group)
        .param("dropped_records", dropped_records)
        .param("split_windows", split_windows);
    step.notes = notes;
    let mut result = corpus.with_records(out);
    result.provenance.push(step);
    Ok(result)
}

fn merge(window: &[&SegmentRecord], target_length: f64) -> Result<SegmentRecord> {
    let first = window[0];
    let total_len: f64 = window.iter().map(|r| r.length).sum();
    let weighted = |f: &dyn Fn(&SegmentRecord) -> f64| -> f64 {
        window.iter().map(|r| r.length * f(r)).sum::<f64>() / total_len
    };
    let iri = window.iter().map(|r| r.iri).sum::<f64>() / window.len() as f64;
    let rut = weighted(&|r| r.rut_depth);
    let faulting = weighted(&|r| r.faulting);

    // (extent accumulator, width·len, depth·len)
    let mut acc: BTreeMap<(CrackFamily, Severity), (f64, f64, f64)> = BTreeMap::new();
    for r in window {
        for c in &r.cracks {
            let e = acc.entry(c.key()).or_insert((0.0, 0.0, 0.0));
            e.0 += match c.family.extent_kind() {
                ExtentKind::Feet => c.extent,
                ExtentKind::Percent => r.length * c.extent,
            };
            e.1 += r.length * c.width;
            e.2 += r.length * c.depth;
        }
    }
    let cracks = acc
        .into_iter()
        .map(|((family, severity), (extent, width, depth))| {
            let extent = match family.extent_kind() {
                ExtentKind::Feet => extent,
                ExtentKind::Percent => extent / total_len,
            };
            CrackObservation::new(family, severity, extent, width / total_len, depth / total_len)
        })
        .collect();

    SegmentRecord::new(
        first.route_id.clone(),
        first.start_milepost,
        target_length,
        first.surface_type,
        first.functional_class,
        iri,
        rut,
        faulting,
        cracks,
    )
}
