//! CSV artifact formats shared between the library and the command line.
//!
//! Every file is plain comma-separated text with one header row and one
//! record per line. Floats are printed with `Display`, whose shortest
//! round-trip form parses back to the identical bit pattern, so writing
//! and re-reading a file preserves values exactly. Fields are never
//! quoted: identifiers must not contain commas or newlines.

pub mod config;
pub mod svg;

use std::fmt::Write as _;
use std::path::Path;

use crate::baselines::Partition;
use crate::dataset::TrajectoryDataset;
use crate::error::{Error, Result};
use crate::evaluation::{CoherenceReport, MembershipMatrix};
use crate::math::Matrix;

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn parse_err(path: &Path, row: usize, col: usize, message: impl Into<String>) -> Error {
    Error::ParseError {
        path: path.display().to_string(),
        row,
        col,
        message: message.into(),
    }
}

/// Lines paired with their 1-based row number, `\r\n` tolerated.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
}

fn parse_float(field: &str, path: &Path, row: usize, col: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, row, col, format!("expected a number, got `{field}`")))
}

/// Write a wide table `subject_id,{prefix}0,...,{prefix}{w-1}`.
fn write_wide(path: &Path, prefix: &str, ids: &[String], rows: &[Vec<f64>]) -> Result<()> {
    if ids.len() != rows.len() {
        return Err(Error::SizeMismatch { a: ids.len(), b: rows.len() });
    }
    let width = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut out = String::from("subject_id");
    for j in 0..width {
        write!(out, ",{prefix}{j}").unwrap();
    }
    out.push('\n');
    for (id, row) in ids.iter().zip(rows) {
        if row.len() != width {
            return Err(Error::RaggedRows { subject_id: id.clone(), expected: width, got: row.len() });
        }
        out.push_str(id);
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Read a wide table written by [`write_wide`]. The header fixes the width;
/// every data row must match it exactly.
fn load_wide(path: &Path, prefix: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_text(path)?;
    let mut lines = numbered_lines(&text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, 1, "missing header row"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.first().map(|f| f.trim()) != Some("subject_id") {
        return Err(parse_err(path, 1, 1, "header must start with `subject_id`"));
    }
    let width = fields.len() - 1;
    for (j, field) in fields[1..].iter().enumerate() {
        let expected = format!("{prefix}{j}");
        if field.trim() != expected {
            return Err(parse_err(path, 1, j + 2, format!("expected column `{expected}`, got `{field}`")));
        }
    }

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (row_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let id = fields[0].to_string();
        if fields.len() != width + 1 {
            return Err(Error::RaggedRows { subject_id: id, expected: width, got: fields.len() - 1 });
        }
        let mut values = Vec::with_capacity(width);
        for (j, field) in fields[1..].iter().enumerate() {
            values.push(parse_float(field, path, row_no, j + 2)?);
        }
        ids.push(id);
        rows.push(values);
    }
    Ok((ids, rows))
}

/// Write `subject_id,t0,...,t{T-1}` with one row per subject.
pub fn write_trajectories(path: &Path, dataset: &TrajectoryDataset) -> Result<()> {
    write_wide(path, "t", dataset.subject_ids(), dataset.values())
}

/// Load a trajectory CSV. The result carries no labels; see [`load_labels`].
pub fn load_trajectories(path: &Path) -> Result<TrajectoryDataset> {
    let (ids, rows) = load_wide(path, "t")?;
    TrajectoryDataset::new(ids, rows, None)
}

/// Write `subject_id,label` rows.
pub fn write_labels(path: &Path, ids: &[String], labels: &[String]) -> Result<()> {
    if ids.len() != labels.len() {
        return Err(Error::SizeMismatch { a: ids.len(), b: labels.len() });
    }
    let mut out = String::from("subject_id,label\n");
    for (id, label) in ids.iter().zip(labels) {
        writeln!(out, "{id},{label}").unwrap();
    }
    write_text(path, &out)
}

/// Load `subject_id,label` pairs in file order.
pub fn load_labels(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_text(path)?;
    let mut lines = numbered_lines(&text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, 1, "missing header row"))?;
    if header.trim() != "subject_id,label" {
        return Err(parse_err(path, 1, 1, "header must be `subject_id,label`"));
    }
    let mut pairs = Vec::new();
    for (row_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, row_no, 1, "expected `subject_id,label`"))?;
        pairs.push((id.to_string(), label.to_string()));
    }
    Ok(pairs)
}

/// Write `subject_id,e0,...,e{d-1}`, one embedded point per subject.
pub fn write_embedding(path: &Path, ids: &[String], points: &[Vec<f64>]) -> Result<()> {
    write_wide(path, "e", ids, points)
}

/// Load an embedding CSV as ids plus points, file order preserved.
pub fn load_embedding(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let (ids, rows) = load_wide(path, "e")?;
    check_table(&ids, &rows)?;
    Ok((ids, rows))
}

/// Finite values and unique ids, for tables loaded outside a dataset.
fn check_table(ids: &[String], rows: &[Vec<f64>]) -> Result<()> {
    for (id, row) in ids.iter().zip(rows) {
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { subject_id: id.clone(), col });
        }
    }
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Write `subject_id,cluster` rows, clusters as 0-based indices.
pub fn write_partition(path: &Path, ids: &[String], partition: &Partition) -> Result<()> {
    if ids.len() != partition.len() {
        return Err(Error::SizeMismatch { a: ids.len(), b: partition.len() });
    }
    let mut out = String::from("subject_id,cluster\n");
    for (id, cluster) in ids.iter().zip(&partition.assignments) {
        writeln!(out, "{id},{cluster}").unwrap();
    }
    write_text(path, &out)
}

/// Load a partition CSV; k is the largest index seen plus one.
pub fn load_partition(path: &Path) -> Result<(Vec<String>, Partition)> {
    let text = read_text(path)?;
    let mut lines = numbered_lines(&text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, 1, "missing header row"))?;
    if header.trim() != "subject_id,cluster" {
        return Err(parse_err(path, 1, 1, "header must be `subject_id,cluster`"));
    }
    let mut ids = Vec::new();
    let mut assignments = Vec::new();
    for (row_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (id, cluster) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, row_no, 1, "expected `subject_id,cluster`"))?;
        let cluster: usize = cluster.trim().parse().map_err(|_| {
            parse_err(path, row_no, 2, format!("expected a cluster index, got `{cluster}`"))
        })?;
        ids.push(id.to_string());
        assignments.push(cluster);
    }
    let mut seen = std::collections::HashSet::new();
    for id in &ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let k = assignments.iter().max().map(|m| m + 1).unwrap_or(0);
    Ok((ids, Partition::from_assignments(assignments, k)?))
}

/// Write `subject_id,p0,...,p{k-1}` posterior membership rows.
pub fn write_membership(path: &Path, ids: &[String], membership: &MembershipMatrix) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..membership.probs.rows())
        .map(|i| membership.probs.row(i).to_vec())
        .collect();
    write_wide(path, "p", ids, &rows)
}

/// Load a membership CSV under the given method name. Cluster labels are
/// the column indices; row sums are re-validated after parsing.
pub fn load_membership(path: &Path, method: &str) -> Result<(Vec<String>, MembershipMatrix)> {
    let (ids, rows) = load_wide(path, "p")?;
    check_table(&ids, &rows)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = rows[0].len();
    let probs = Matrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let labels = (0..k).map(|c| c.to_string()).collect();
    let membership = MembershipMatrix::new(method, probs, labels)?;
    Ok((ids, membership))
}

/// Write `epoch,loss` rows, epochs numbered from 1.
pub fn write_loss_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (epoch, loss) in history.iter().enumerate() {
        writeln!(out, "{},{loss}", epoch + 1).unwrap();
    }
    write_text(path, &out)
}

/// Write `k,ch` rows of a Calinski-Harabasz sweep.
pub fn write_ch_scores(path: &Path, scores: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("k,ch\n");
    for (k, ch) in scores {
        writeln!(out, "{k},{ch}").unwrap();
    }
    write_text(path, &out)
}

/// Load `k,ch` rows written by [`write_ch_scores`].
pub fn load_ch_scores(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = read_text(path)?;
    let mut lines = numbered_lines(&text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, 1, "missing header row"))?;
    if header.trim() != "k,ch" {
        return Err(parse_err(path, 1, 1, "header must be `k,ch`"));
    }
    let mut scores = Vec::new();
    for (row_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (k, ch) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, row_no, 1, "expected `k,ch`"))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| parse_err(path, row_no, 1, format!("expected an integer k, got `{k}`")))?;
        let ch = parse_float(ch, path, row_no, 2)?;
        scores.push((k, ch));
    }
    Ok(scores)
}

/// Write the full membership correlation matrix with labeled rows and
/// columns: header `label,<col>,...`, one row per column label.
pub fn write_coherence_matrix(path: &Path, report: &CoherenceReport) -> Result<()> {
    let mut out = String::from("label");
    for label in &report.column_labels {
        write!(out, ",{label}").unwrap();
    }
    out.push('\n');
    for (i, label) in report.column_labels.iter().enumerate() {
        out.push_str(label);
        for j in 0..report.column_labels.len() {
            write!(out, ",{}", report.matrix.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Write the greedy-matched cluster pairs and their correlations.
pub fn write_matched_pairs(path: &Path, report: &CoherenceReport) -> Result<()> {
    let mut out = String::from("method_a,cluster_a,method_b,cluster_b,correlation\n");
    for pair in &report.matched {
        writeln!(
            out,
            "{},{},{},{},{}",
            pair.method_a, pair.cluster_a, pair.method_b, pair.cluster_b, pair.correlation
        )
        .unwrap();
    }
    write_text(path, &out)
}
