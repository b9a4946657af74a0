//! Trajectory and face-emotion CSV streams.
//!
//! Trajectory rows are `time,id,x,y` (seconds, meters). Face rows are
//! `time,id,h,a,s` with an optional trailing `confidence` column. Both files
//! start with a header row.

use std::collections::BTreeMap;
use std::path::Path;

use crate::domain::{EmotionVector, PedestrianId};
use crate::error::{Error, Result};
use crate::estimation::ObservationWindow;
use crate::geometry::Vec2;

/// Fraction of malformed rows above which a stream is rejected.
pub const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceSample {
    pub emotion: EmotionVector,
    /// Tracking confidence carried by the stream, when the column is present.
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianStream {
    pub window: ObservationWindow,
    /// Face sample matched to each trajectory sample, if any.
    pub faces: Vec<Option<FaceSample>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Streams {
    /// Sampling interval used for face matching.
    pub dt: f64,
    pub pedestrians: BTreeMap<PedestrianId, PedestrianStream>,
    pub malformed_rows: usize,
    /// Face rows without a trajectory sample within `dt/2`.
    pub unmatched_faces: usize,
}

struct Parsed<T> {
    rows: Vec<(f64, PedestrianId, T)>,
    malformed: usize,
}

fn read_rows<T>(
    path: &Path,
    what: &str,
    parse: impl Fn(&csv::StringRecord) -> Option<(f64, String, T)>,
) -> Result<Parsed<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Stream(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut malformed = 0;
    let mut total = 0;
    for (line, record) in reader.records().enumerate() {
        total += 1;
        match record.ok().as_ref().and_then(&parse) {
            Some((t, id, v)) => rows.push((t, PedestrianId::new(id), v)),
            None => {
                malformed += 1;
                log::warn!("{}: skipping malformed {what} row {}", path.display(), line + 2);
            }
        }
    }
    if total > 0 && malformed as f64 > MAX_MALFORMED_FRACTION * total as f64 {
        return Err(Error::Stream(format!(
            "{}: {malformed} of {total} {what} rows malformed (limit {:.0}%)",
            path.display(),
            MAX_MALFORMED_FRACTION * 100.0
        )));
    }
    Ok(Parsed { rows, malformed })
}

fn number(r: &csv::StringRecord, i: usize) -> Option<f64> {
    r.get(i)?.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn trajectory_row(r: &csv::StringRecord) -> Option<(f64, String, Vec2)> {
    if r.len() != 4 || r[1].is_empty() {
        return None;
    }
    Some((number(r, 0)?, r[1].to_string(), Vec2::new(number(r, 2)?, number(r, 3)?)))
}

fn face_row(r: &csv::StringRecord) -> Option<(f64, String, FaceSample)> {
    if !(r.len() == 5 || r.len() == 6) || r[1].is_empty() {
        return None;
    }
    let e = [number(r, 2)?, number(r, 3)?, number(r, 4)?];
    if e.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return None;
    }
    let confidence = if r.len() == 6 {
        let a = number(r, 5)?;
        if !(0.0..=1.0).contains(&a) {
            return None;
        }
        Some(a)
    } else {
        None
    };
    Some((
        number(r, 0)?,
        r[1].to_string(),
        FaceSample {
            emotion: EmotionVector::from_array(e).ok()?,
            confidence,
        },
    ))
}

/// Groups rows per id, rejecting any id whose timestamps do not strictly increase.
fn group<T>(rows: Vec<(f64, PedestrianId, T)>, what: &str) -> Result<BTreeMap<PedestrianId, Vec<(f64, T)>>> {
    let mut out: BTreeMap<PedestrianId, Vec<(f64, T)>> = BTreeMap::new();
    for (t, id, v) in rows {
        let entry = out.entry(id.clone()).or_default();
        if let Some(&(last, _)) = entry.last() {
            if t <= last {
                return Err(Error::Stream(format!(
                    "{what} stream: timestamps for pedestrian {id} out of order ({t} after {last})"
                )));
            }
        }
        entry.push((t, v));
    }
    Ok(out)
}

/// Median positive time step across all pedestrians.
fn infer_dt(tracks: &BTreeMap<PedestrianId, Vec<(f64, Vec2)>>) -> Option<f64> {
    let mut steps: Vec<f64> = tracks
        .values()
        .flat_map(|t| t.windows(2).map(|w| w[1].0 - w[0].0))
        .collect();
    if steps.is_empty() {
        return None;
    }
    steps.sort_by(f64::total_cmp);
    Some(steps[steps.len() / 2])
}

/// Reads the trajectory stream and, optionally, the face stream. Each face
/// row attaches to the nearest trajectory sample of the same pedestrian
/// within `dt/2`; `dt` is inferred from the trajectory when not given.
pub fn ingest_streams(trajectories: impl AsRef<Path>, faces: Option<&Path>, dt: Option<f64>) -> Result<Streams> {
    let traj = read_rows(trajectories.as_ref(), "trajectory", trajectory_row)?;
    let mut malformed_rows = traj.malformed;
    let tracks = group(traj.rows, "trajectory")?;
    let dt = match dt.or_else(|| infer_dt(&tracks)) {
        Some(dt) if dt > 0.0 => dt,
        _ => return Err(Error::Stream("cannot determine the sampling interval".into())),
    };

    let mut face_tracks = BTreeMap::new();
    if let Some(path) = faces {
        let parsed = read_rows(path, "face", face_row)?;
        malformed_rows += parsed.malformed;
        face_tracks = group(parsed.rows, "face")?;
    }

    let mut pedestrians = BTreeMap::new();
    let mut unmatched_faces = 0;
    for (id, samples) in tracks {
        let mut matched: Vec<Option<(f64, FaceSample)>> = vec![None; samples.len()];
        for (t, face) in face_tracks.remove(&id).unwrap_or_default() {
            let nearest = samples
                .iter()
                .enumerate()
                .map(|(i, (ts, _))| (i, (ts - t).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match nearest {
                Some((i, gap)) if gap <= dt / 2.0 + 1e-9 => {
                    if matched[i].is_none_or(|(g, _)| gap < g) {
                        matched[i] = Some((gap, face));
                    }
                }
                _ => unmatched_faces += 1,
            }
        }
        if samples.len() < 2 {
            log::warn!("pedestrian {id}: fewer than 2 trajectory samples, skipped");
            continue;
        }
        let window = ObservationWindow::new(id.clone(), samples)?;
        let faces = matched.into_iter().map(|m| m.map(|(_, f)| f)).collect();
        pedestrians.insert(id, PedestrianStream { window, faces });
    }
    unmatched_faces += face_tracks.values().map(Vec::len).sum::<usize>();

    Ok(Streams {
        dt,
        pedestrians,
        malformed_rows,
        unmatched_faces,
    })
}
