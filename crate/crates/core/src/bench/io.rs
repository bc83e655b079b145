//! Text formats for correspondence sets and estimation results.
//!
//! Correspondence files start with the header line `hsolo-corr v1` and then
//! hold one match per line:
//!
//! ```text
//! u1,v1,s1,theta1,u2,v2,s2,theta2[,inlier]
//! ```
//!
//! where the optional ninth field is a `0`/`1` ground-truth flag. Point-only
//! files (`hsolo-points v1`) carry `u1,v1,u2,v2[,inlier]`; they lack detector
//! byproducts and can only feed the plain RANSAC path. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{AffineFeature, Correspondence, Point2};
use crate::hsolo::HsoloConfig;
use crate::robust::{EstimationResult, RansacConfig};

pub const CORR_HEADER: &str = "hsolo-corr v1";
pub const POINTS_HEADER: &str = "hsolo-points v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty input: missing header line")]
    MissingHeader,
    #[error("unsupported format header {found:?} (expected {CORR_HEADER:?} or {POINTS_HEADER:?})")]
    Version { found: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    pub correspondences: Vec<Correspondence>,
    /// Ground-truth flags, present only when every line carried one.
    pub inlier_mask: Option<Vec<bool>>,
    /// `false` for point-only input, where scales and angles are placeholders.
    pub has_byproducts: bool,
}

impl CorrespondenceSet {
    pub fn true_inlier_count(&self) -> Option<usize> {
        self.inlier_mask
            .as_ref()
            .map(|m| m.iter().filter(|x| **x).count())
    }
}

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        message: message.into(),
    }
}

pub fn parse_correspondences(text: &str) -> Result<CorrespondenceSet, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or(FormatError::MissingHeader)?;
    let (width, has_byproducts) = match header {
        CORR_HEADER => (8, true),
        POINTS_HEADER => (4, false),
        other => {
            return Err(FormatError::Version {
                found: other.to_string(),
            })
        }
    };

    let mut correspondences = Vec::new();
    let mut flags = Vec::new();
    for (no, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width && fields.len() != width + 1 {
            return Err(malformed(
                no,
                format!("expected {width} or {} fields, found {}", width + 1, fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(width);
        for (k, f) in fields[..width].iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| malformed(no, format!("field {} is not a number: {f:?}", k + 1)))?;
            values.push(v);
        }
        let feature = |u: f64, v: f64, s: f64, t: f64| {
            AffineFeature::new(Point2::new(u, v), s, t).map_err(|e| malformed(no, e.to_string()))
        };
        let c = if has_byproducts {
            Correspondence::new(
                feature(values[0], values[1], values[2], values[3])?,
                feature(values[4], values[5], values[6], values[7])?,
            )
        } else {
            Correspondence::new(
                feature(values[0], values[1], 1.0, 0.0)?,
                feature(values[2], values[3], 1.0, 0.0)?,
            )
        };
        correspondences.push(c);
        flags.push(match fields.get(width) {
            None => None,
            Some(&"0") => Some(false),
            Some(&"1") => Some(true),
            Some(other) => {
                return Err(malformed(no, format!("inlier flag must be 0 or 1, found {other:?}")))
            }
        });
    }
    let inlier_mask = if !flags.is_empty() && flags.iter().all(Option::is_some) {
        Some(flags.into_iter().map(Option::unwrap).collect())
    } else if flags.iter().any(Option::is_some) {
        return Err(malformed(0, "inlier flag must be given on every line or on none"));
    } else {
        None
    };
    Ok(CorrespondenceSet {
        correspondences,
        inlier_mask,
        has_byproducts,
    })
}

pub fn load_correspondences(path: impl AsRef<Path>) -> Result<CorrespondenceSet, FormatError> {
    parse_correspondences(&fs::read_to_string(path)?)
}

/// Serializes with shortest round-trip float formatting, so loading the
/// output reproduces every value bit for bit.
pub fn format_correspondences(cs: &[Correspondence], inlier_mask: Option<&[bool]>) -> String {
    let mut out = String::with_capacity(64 * (cs.len() + 1));
    out.push_str(CORR_HEADER);
    out.push('\n');
    for (i, c) in cs.iter().enumerate() {
        let (a, b) = (c.a, c.b);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            a.p().u,
            a.p().v,
            a.scale(),
            a.angle(),
            b.p().u,
            b.p().v,
            b.scale(),
            b.angle()
        );
        if let Some(mask) = inlier_mask {
            let _ = write!(out, ",{}", u8::from(mask[i]));
        }
        out.push('\n');
    }
    out
}

pub fn save_correspondences(
    path: impl AsRef<Path>,
    cs: &[Correspondence],
    inlier_mask: Option<&[bool]>,
) -> Result<(), FormatError> {
    fs::write(path, format_correspondences(cs, inlier_mask))?;
    Ok(())
}

/// Estimator settings echoed into a result document.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodConfig {
    Hsolo(HsoloConfig),
    Ransac(RansacConfig),
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    model: [f64; 9],
    inliers: &'a [usize],
    support: usize,
    iterations: u64,
    elapsed_s: Option<f64>,
    config: MethodConfig,
}

/// JSON result document with a fixed key order. `elapsed_s` is `null` unless
/// `with_timing` is set, which keeps repeated runs byte-identical.
pub fn format_result(result: &EstimationResult, config: MethodConfig, with_timing: bool) -> String {
    let doc = ResultDocument {
        model: *result.model.entries(),
        inliers: &result.inlier_indices,
        support: result.support,
        iterations: result.iterations_run,
        elapsed_s: with_timing.then_some(result.elapsed),
        config,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("result document serializes");
    s.push('\n');
    s
}

pub fn save_result(
    path: impl AsRef<Path>,
    result: &EstimationResult,
    config: MethodConfig,
    with_timing: bool,
) -> Result<(), FormatError> {
    fs::write(path, format_result(result, config, with_timing))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Homography;
    use proptest::prelude::*;

    #[test]
    fn bad_field_count_names_the_line() {
        let text = "hsolo-corr v1\n1,2,1,0,3,4,1,0\n1,2,3\n";
        match parse_correspondences(text) {
            Err(FormatError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_header() {
        assert!(matches!(
            parse_correspondences("hsolo-corr v2\n"),
            Err(FormatError::Version { .. })
        ));
        assert!(matches!(parse_correspondences(""), Err(FormatError::MissingHeader)));
    }

    #[test]
    fn rejects_bad_values() {
        let bad_scale = "hsolo-corr v1\n1,2,0,0,3,4,1,0\n";
        assert!(matches!(
            parse_correspondences(bad_scale),
            Err(FormatError::Malformed { line: 2, .. })
        ));
        let bad_flag = "hsolo-corr v1\n1,2,1,0,3,4,1,0,2\n";
        assert!(matches!(
            parse_correspondences(bad_flag),
            Err(FormatError::Malformed { line: 2, .. })
        ));
        let bad_num = "hsolo-corr v1\n\n# note\n1,x,1,0,3,4,1,0\n";
        assert!(matches!(
            parse_correspondences(bad_num),
            Err(FormatError::Malformed { line: 4, .. })
        ));
    }

    #[test]
    fn point_only_files() {
        let set = parse_correspondences("hsolo-points v1\n1,2,3,4,1\n5,6,7,8,0\n").unwrap();
        assert!(!set.has_byproducts);
        assert_eq!(set.inlier_mask, Some(vec![true, false]));
        assert_eq!(set.correspondences[1].b.p(), Point2::new(7.0, 8.0));
    }

    #[test]
    fn result_document_key_order() {
        let r = EstimationResult {
            model: Homography::translation(1.0, 2.0),
            inlier_indices: vec![0, 3],
            support: 2,
            iterations_run: 7,
            k_final: 7,
            elapsed: 0.25,
            inner_iterations: 0,
            refinement: None,
        };
        let doc = format_result(&r, MethodConfig::Ransac(RansacConfig::default()), false);
        let keys = ["\"model\"", "\"inliers\"", "\"support\"", "\"iterations\"", "\"elapsed_s\": null", "\"config\"", "\"method\": \"ransac\""];
        let pos: Vec<usize> = keys.iter().map(|k| doc.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{doc}");
        let timed = format_result(&r, MethodConfig::Ransac(RansacConfig::default()), true);
        assert!(timed.contains("\"elapsed_s\": 0.25"));
    }

    fn correspondence() -> impl Strategy<Value = Correspondence> {
        (
            prop::array::uniform2(-1e4f64..1e4),
            prop::array::uniform2(-1e4f64..1e4),
            prop::array::uniform2(1e-3f64..1e3),
            prop::array::uniform2(-3.0f64..3.0),
        )
            .prop_map(|(a, b, s, t)| {
                Correspondence::new(
                    AffineFeature::new(Point2::new(a[0], a[1]), s[0], t[0]).unwrap(),
                    AffineFeature::new(Point2::new(b[0], b[1]), s[1], t[1]).unwrap(),
                )
            })
    }

    proptest! {
        #[test]
        fn save_load_round_trip(
            cs in prop::collection::vec(correspondence(), 1..20),
            flags in prop::collection::vec(any::<bool>(), 20),
            with_mask in any::<bool>(),
        ) {
            let mask = with_mask.then(|| flags[..cs.len()].to_vec());
            let text = format_correspondences(&cs, mask.as_deref());
            let back = parse_correspondences(&text).unwrap();
            prop_assert_eq!(back.correspondences, cs);
            prop_assert_eq!(back.inlier_mask, mask);
        }
    }
}
