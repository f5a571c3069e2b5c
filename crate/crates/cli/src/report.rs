//! CSV reports: receptive-field table, training log, correlation study.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use auralis_core::analysis::{CorrelationRow, RfEntry};
use auralis_core::nn::EpochStats;

pub fn rf_table_csv(entries: &[RfEntry]) -> String {
    let mut out =
        String::from("layer,pixels,width_ms,height_hz,table_width_ms,table_height_hz\n");
    for e in entries {
        writeln!(
            out,
            "{},{},{:.3},{:.3},{},{}",
            e.layer, e.pixels, e.width_ms, e.height_hz, e.table_width_ms, e.table_height_hz
        )
        .unwrap();
    }
    out
}

pub fn training_log_csv(stats: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for s in stats {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.epoch, s.train_loss, s.train_acc, s.val_loss, s.val_acc
        )
        .unwrap();
    }
    out
}

pub fn correlation_csv(rows: &[CorrelationRow]) -> String {
    let mut out = String::from("attribute,layer,mean,std,n_pairs,n_skipped\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.attribute.name(),
            r.layer,
            r.mean,
            r.std,
            r.n_pairs,
            r.n_skipped
        )
        .unwrap();
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
