//! Equal error rate and DET operating points.
//!
//! Higher scores mean "more genuine". At threshold `t`, a genuine trial
//! with score `< t` is falsely rejected and a spoof trial with score `>= t`
//! is falsely accepted.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::protocol::{Label, ProtocolEntry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub eer: f64,
    pub threshold: f64,
    pub n_genuine: usize,
    pub n_spoof: usize,
}

impl EvalResult {
    /// `EER=<percent> threshold=<value>`.
    pub fn report(&self) -> String {
        format!(
            "EER={:.4} threshold={:.6}",
            self.eer * 100.0,
            self.threshold
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

/// Operating points at: the lowest score, each midpoint between adjacent
/// distinct scores, and one above the highest score. FAR is nonincreasing
/// and FRR nondecreasing along the list.
pub fn operating_points(trials: &[(f64, Label)]) -> Result<Vec<OperatingPoint>> {
    let n_gen = trials.iter().filter(|t| t.1 == Label::Genuine).count();
    let n_spf = trials.len() - n_gen;
    if n_gen == 0 || n_spf == 0 {
        return Err(Error::Invalid(format!(
            "need both classes (genuine={n_gen}, spoof={n_spf})"
        )));
    }
    if trials.iter().any(|t| !t.0.is_finite()) {
        return Err(Error::Invalid("scores must be finite".into()));
    }
    let mut sorted: Vec<(f64, Label)> = trials.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // distinct score levels with per-level class counts
    let mut levels: Vec<(f64, usize, usize)> = Vec::new();
    for &(s, l) in &sorted {
        match levels.last_mut() {
            Some(last) if last.0 == s => {}
            _ => levels.push((s, 0, 0)),
        }
        let last = levels.last_mut().unwrap();
        match l {
            Label::Genuine => last.1 += 1,
            Label::Spoof => last.2 += 1,
        }
    }

    let mut points = Vec::with_capacity(levels.len() + 1);
    let (mut gen_below, mut spf_below) = (0usize, 0usize);
    let point = |t: f64, gb: usize, sb: usize| OperatingPoint {
        threshold: t,
        far: (n_spf - sb) as f64 / n_spf as f64,
        frr: gb as f64 / n_gen as f64,
    };
    points.push(point(levels[0].0, 0, 0));
    for w in 0..levels.len() {
        gen_below += levels[w].1;
        spf_below += levels[w].2;
        let t = match levels.get(w + 1) {
            Some(next) => 0.5 * (levels[w].0 + next.0),
            None => levels[w].0 + 1.0,
        };
        points.push(point(t, gen_below, spf_below));
    }
    Ok(points)
}

/// `(FAR, FRR)` pairs ordered by increasing threshold.
pub fn det_points(trials: &[(f64, Label)]) -> Result<Vec<(f64, f64)>> {
    Ok(operating_points(trials)?
        .into_iter()
        .map(|p| (p.far, p.frr))
        .collect())
}

/// EER by linear interpolation between the two operating points that
/// bracket the FAR = FRR crossing.
pub fn compute_eer(trials: &[(f64, Label)]) -> Result<EvalResult> {
    let pts = operating_points(trials)?;
    let n_genuine = trials.iter().filter(|t| t.1 == Label::Genuine).count();
    let n_spoof = trials.len() - n_genuine;
    // the last point has FRR = 1, FAR = 0, so a crossing always exists
    let k = pts
        .iter()
        .position(|p| p.frr >= p.far)
        .expect("last operating point has FRR >= FAR");
    let (eer, threshold) = if k == 0 {
        (pts[0].far, pts[0].threshold)
    } else {
        let (a, b) = (&pts[k - 1], &pts[k]);
        let da = a.frr - a.far;
        let db = b.frr - b.far;
        let alpha = da / (da - db);
        (
            a.frr + alpha * (b.frr - a.frr),
            a.threshold + alpha * (b.threshold - a.threshold),
        )
    };
    if eer > 0.5 {
        warn!("EER {eer:.4} above 0.5: scores look anti-correlated with labels");
    }
    Ok(EvalResult {
        eer,
        threshold,
        n_genuine,
        n_spoof,
    })
}

/// Parses `utterance_id score` lines.
pub fn parse_scores(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let mut toks = line.split_whitespace();
        let (Some(id), Some(score), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(err("expected `utterance_id score`".into()));
        };
        let score: f64 = score
            .parse()
            .map_err(|_| err(format!("bad score `{score}`")))?;
        if !score.is_finite() {
            return Err(err(format!("non-finite score `{score}`")));
        }
        out.push((id.to_string(), score));
    }
    Ok(out)
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    let text = String::from_utf8(fsutil::read_all(path)?)
        .map_err(|_| Error::Format(format!("{}: score file is not UTF-8", path.display())))?;
    parse_scores(&text)
}

pub fn render_scores(scores: &[(String, f64)]) -> String {
    let mut s = String::new();
    for (id, v) in scores {
        let _ = writeln!(s, "{id} {v:.6}");
    }
    s
}

/// Labels each score through the protocol; ids missing from the protocol
/// are an error.
pub fn join_with_protocol(
    scores: &[(String, f64)],
    protocol: &[ProtocolEntry],
) -> Result<Vec<(f64, Label)>> {
    let labels: HashMap<&str, Label> = protocol
        .iter()
        .map(|e| (e.utterance_id.as_str(), e.label))
        .collect();
    scores
        .iter()
        .map(|(id, s)| {
            labels
                .get(id.as_str())
                .map(|&l| (*s, l))
                .ok_or_else(|| Error::Invalid(format!("utterance `{id}` not in protocol")))
        })
        .collect()
}
