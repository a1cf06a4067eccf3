//! External satellite ephemeris: CSV reading, writing and interpolation.
//!
//! Columns are `time,px,py,pz,vx,vy,vz` with an optional `ax,ay,az`
//! acceleration triple, in s, km, km/s and km/s².

use std::io::{Read, Write};
use std::path::Path;

use crate::dynamics::{truth_orbit_state, OrbitElements, SatState};
use crate::error::{Error, Result};
use crate::geo::{EarthModel, Vec3};
use crate::link::time_grid;

const BASE_COLUMNS: [&str; 7] = ["time", "px", "py", "pz", "vx", "vy", "vz"];
const ACC_COLUMNS: [&str; 3] = ["ax", "ay", "az"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EphemerisRecord {
    pub time: f64,
    pub pos: Vec3,
    pub vel: Vec3,
    pub acc: Option<Vec3>,
}

impl EphemerisRecord {
    pub fn state(&self) -> SatState {
        SatState {
            pos: self.pos,
            vel: self.vel,
        }
    }
}

/// Validated, time-ordered records with linear interpolation between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Ephemeris {
    records: Vec<EphemerisRecord>,
}

impl Ephemeris {
    /// Checks strictly increasing time and positions above the surface.
    pub fn new(records: Vec<EphemerisRecord>, earth: &EarthModel) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::domain("ephemeris holds no records"));
        }
        for (i, r) in records.iter().enumerate() {
            check_record(r, i, records.get(i.wrapping_sub(1)), earth).map_err(Error::Domain)?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[EphemerisRecord] {
        &self.records
    }

    pub fn start(&self) -> f64 {
        self.records[0].time
    }

    pub fn end(&self) -> f64 {
        self.records[self.records.len() - 1].time
    }

    /// Position and velocity at `t`, linearly interpolated between samples.
    pub fn interpolate(&self, t: f64) -> Result<SatState> {
        if !(self.start()..=self.end()).contains(&t) {
            return Err(Error::domain(format!(
                "t = {t} outside ephemeris span [{}, {}]",
                self.start(),
                self.end()
            )));
        }
        let i = self.records.partition_point(|r| r.time <= t);
        if i == self.records.len() {
            return Ok(self.records[i - 1].state());
        }
        let (a, b) = (&self.records[i - 1], &self.records[i]);
        let w = (t - a.time) / (b.time - a.time);
        Ok(SatState {
            pos: a.pos + (b.pos - a.pos) * w,
            vel: a.vel + (b.vel - a.vel) * w,
        })
    }
}

fn check_record(
    r: &EphemerisRecord,
    index: usize,
    prev: Option<&EphemerisRecord>,
    earth: &EarthModel,
) -> std::result::Result<(), String> {
    let finite = r.time.is_finite()
        && r.pos.iter().chain(r.vel.iter()).all(|v| v.is_finite())
        && r.acc.is_none_or(|a| a.iter().all(|v| v.is_finite()));
    if !finite {
        return Err(format!("record {} has non-finite values", index + 1));
    }
    if let Some(p) = prev {
        if !(r.time > p.time) {
            return Err(format!(
                "time {} does not increase (previous {})",
                r.time, p.time
            ));
        }
    }
    if !(r.pos.norm() > earth.radius()) {
        return Err(format!(
            "position norm {} km is not above the surface ({} km)",
            r.pos.norm(),
            earth.radius()
        ));
    }
    Ok(())
}

/// Reads and validates an ephemeris CSV file.
pub fn load_ephemeris(path: impl AsRef<Path>, earth: &EarthModel) -> Result<Vec<EphemerisRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ephemeris(file, path, earth)
}

/// Reads ephemeris CSV from any reader; `path` only labels errors.
pub fn read_ephemeris<R: Read>(
    reader: R,
    path: impl AsRef<Path>,
    earth: &EarthModel,
) -> Result<Vec<EphemerisRecord>> {
    let path = path.as_ref();
    let err = |row: usize, msg: String| Error::Ephemeris {
        path: path.to_path_buf(),
        row,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| err(0, format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect();
    let with_acc = match header.len() {
        7 => false,
        10 => true,
        n => return Err(err(0, format!("expected 7 or 10 columns, found {n}"))),
    };
    let expected = BASE_COLUMNS
        .iter()
        .chain(if with_acc { &ACC_COLUMNS[..] } else { &[] });
    for (got, want) in header.iter().zip(expected) {
        if got != want {
            return Err(err(
                0,
                format!("header column '{got}' where '{want}' was expected"),
            ));
        }
    }

    let mut records: Vec<EphemerisRecord> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| err(row_no, e.to_string()))?;
        if row.len() != header.len() {
            return Err(err(
                row_no,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let mut v = [0.0; 10];
        for (j, field) in row.iter().enumerate() {
            v[j] = field.parse().map_err(|_| {
                err(
                    row_no,
                    format!("column '{}': cannot parse '{field}'", header[j]),
                )
            })?;
        }
        let rec = EphemerisRecord {
            time: v[0],
            pos: Vec3::new(v[1], v[2], v[3]),
            vel: Vec3::new(v[4], v[5], v[6]),
            acc: with_acc.then(|| Vec3::new(v[7], v[8], v[9])),
        };
        check_record(&rec, i, records.last(), earth).map_err(|m| err(row_no, m))?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(err(0, "no data rows".into()));
    }
    Ok(records)
}

/// Writes records in the format [`read_ephemeris`] accepts. Numbers use the
/// shortest representation that reads back to the same `f64`.
pub fn write_ephemeris<W: Write>(writer: W, records: &[EphemerisRecord]) -> Result<()> {
    let with_acc = records.first().is_some_and(|r| r.acc.is_some());
    if records.iter().any(|r| r.acc.is_some() != with_acc) {
        return Err(Error::domain(
            "either all records or none carry acceleration",
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if with_acc {
        header.extend(ACC_COLUMNS);
    }
    let csv_err = |e: csv::Error| Error::domain(format!("writing ephemeris: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.time];
        row.extend(r.pos.iter().chain(r.vel.iter()));
        if let Some(a) = r.acc {
            row.extend(a.iter());
        }
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::domain(format!("writing ephemeris: {e}")))?;
    Ok(())
}

pub fn save_ephemeris(path: impl AsRef<Path>, records: &[EphemerisRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ephemeris(std::io::BufWriter::new(file), records)
}

/// Samples the circular truth orbit on `[t0, t1]` with step `dt`, including
/// the two-body acceleration.
pub fn sample_orbit(
    orbit: &OrbitElements,
    earth: &EarthModel,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<EphemerisRecord>> {
    orbit.validate()?;
    if !(t1 > t0 && dt > 0.0) {
        return Err(Error::domain("sampling needs t1 > t0 and dt > 0"));
    }
    time_grid(t0, t1, dt)
        .into_iter()
        .map(|t| {
            let s = truth_orbit_state(orbit, t, earth)?;
            Ok(EphemerisRecord {
                time: t,
                pos: s.pos,
                vel: s.vel,
                acc: Some(crate::dynamics::gravitational_acceleration(&s.pos, earth)?),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn earth() -> EarthModel {
        EarthModel::default()
    }

    fn parse(text: &str) -> Result<Vec<EphemerisRecord>> {
        read_ephemeris(text.as_bytes(), "test.csv", &earth())
    }

    #[test]
    fn three_rows() {
        let recs = parse(
            "time,px,py,pz,vx,vy,vz\n\
             0,6746,0,0,0,7.6,0\n\
             1,6746,7.6,0,-0.0086,7.6,0\n\
             2,6745.99,15.2,0,-0.017,7.6,0\n",
        )
        .unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].pos, Vec3::new(6746.0, 7.6, 0.0));
        assert!(recs[0].acc.is_none());
    }

    #[test]
    fn acceleration_columns() {
        let recs =
            parse("time,px,py,pz,vx,vy,vz,ax,ay,az\n0,6746,0,0,0,7.6,0,-0.0088,0,0\n").unwrap();
        assert_eq!(recs[0].acc, Some(Vec3::new(-0.0088, 0.0, 0.0)));
    }

    #[test]
    fn errors_carry_row_numbers() {
        let decreasing = parse(
            "time,px,py,pz,vx,vy,vz\n0,6746,0,0,0,7.6,0\n2,6746,0,0,0,7.6,0\n1,6746,0,0,0,7.6,0\n",
        );
        match decreasing {
            Err(Error::Ephemeris { row: 3, msg, .. }) => assert!(msg.contains("does not increase")),
            other => panic!("{other:?}"),
        }
        let below = parse("time,px,py,pz,vx,vy,vz\n0,6000,0,0,0,7.6,0\n");
        assert!(matches!(below, Err(Error::Ephemeris { row: 1, .. })));
        let malformed = parse("time,px,py,pz,vx,vy,vz\n0,6746,0,0,0,7.6,0\n1,6746,abc,0,0,7.6,0\n");
        match malformed {
            Err(Error::Ephemeris { row: 2, msg, .. }) => assert!(msg.contains("py")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("time,px,py\n0,1,2\n"),
            Err(Error::Ephemeris { row: 0, .. })
        ));
        assert!(matches!(
            parse("time,px,py,pz,vx,vy,vz\n"),
            Err(Error::Ephemeris { row: 0, .. })
        ));
    }

    #[test]
    fn round_trip_reproduces_orbit() {
        let orbit = OrbitElements {
            altitude: 375.0,
            inclination: 55f64.to_radians(),
            raan: -0.87,
            phase: 0.7,
        };
        let recs = sample_orbit(&orbit, &earth(), 0.0, 600.0, 0.5).unwrap();
        let mut buf = Vec::new();
        write_ephemeris(&mut buf, &recs).unwrap();
        let back = read_ephemeris(buf.as_slice(), "mem", &earth()).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in back.iter().zip(&recs) {
            assert!((a.pos - b.pos).norm() < 1e-9);
            assert!((a.vel - b.vel).norm() < 1e-12);
            assert_eq!(a.time, b.time);
        }
    }

    #[test]
    fn interpolation() {
        let recs = vec![
            EphemerisRecord {
                time: 0.0,
                pos: Vec3::new(7000.0, 0.0, 0.0),
                vel: Vec3::new(0.0, 7.0, 0.0),
                acc: None,
            },
            EphemerisRecord {
                time: 2.0,
                pos: Vec3::new(7000.0, 14.0, 2.0),
                vel: Vec3::new(-0.1, 7.0, 0.0),
                acc: None,
            },
        ];
        let eph = Ephemeris::new(recs, &earth()).unwrap();
        let s = eph.interpolate(0.5).unwrap();
        assert_eq!(s.pos, Vec3::new(7000.0, 3.5, 0.5));
        assert_eq!(s.vel, Vec3::new(-0.025, 7.0, 0.0));
        assert_eq!(
            eph.interpolate(2.0).unwrap().pos,
            Vec3::new(7000.0, 14.0, 2.0)
        );
        assert!(eph.interpolate(2.1).is_err());
    }

    #[test]
    fn interpolated_orbit_close_to_truth() {
        let orbit = OrbitElements {
            altitude: 375.0,
            inclination: 1.0,
            raan: 0.0,
            phase: 0.0,
        };
        let eph = Ephemeris::new(
            sample_orbit(&orbit, &earth(), 0.0, 100.0, 1.0).unwrap(),
            &earth(),
        )
        .unwrap();
        // Chord error of a circular arc: r (1 - cos(n dt / 2)) ≈ a dt² / 8.
        let t = 37.5;
        let exact = truth_orbit_state(&orbit, t, &earth()).unwrap();
        let err = (eph.interpolate(t).unwrap().pos - exact.pos).norm();
        assert!(err < 8.8e-3 / 8.0 * 1.01, "{err}");
    }
}
