//! Binary field snapshots shared by every solver stage, plus CSV export.
//!
//! Layout: an 8-byte magic `CRPSFLD\0`, a little-endian u32 version, a u32
//! record kind (torus map / momentum covector field / cylinder state), the
//! chart and periodicity headers, grid dimensions (with the half-length S
//! for cylinders), and the raw node data as little-endian 64-bit floats in
//! the same order the in-memory containers use. Floats round-trip
//! bit-exactly; readers validate every header field before touching data.

use crate::chart::BaseChart;
use crate::field::{CylinderState, MomentumMap, Periodicity, TorusMap};
use crate::grid::{CylinderGrid, TorusGrid};
use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"CRPSFLD\0";
const VERSION: u32 = 1;

const KIND_TORUS: u32 = 0;
const KIND_MOMENTUM: u32 = 1;
const KIND_CYLINDER: u32 = 2;

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.at + len > self.bytes.len() {
            return Err(Error::Snapshot(format!(
                "truncated snapshot: wanted {} bytes at offset {}, have {}",
                len,
                self.at,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.at..self.at + len];
        self.at += len;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> Result<()> {
        if self.at != self.bytes.len() {
            return Err(Error::Snapshot(format!(
                "{} trailing bytes after the data section",
                self.bytes.len() - self.at
            )));
        }
        Ok(())
    }
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_i64(buf: &mut Vec<u8>, v: i64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn chart_tag(chart: &BaseChart) -> (u32, u32) {
    match *chart {
        BaseChart::FlatTorus { n } => (0, n as u32),
        BaseChart::ComplexHyperbolic { n } => (1, n as u32),
    }
}

fn chart_from_tag(tag: u32, n: u32) -> Result<BaseChart> {
    match tag {
        0 => Ok(BaseChart::FlatTorus { n: n as usize }),
        1 => Ok(BaseChart::ComplexHyperbolic { n: n as usize }),
        other => Err(Error::Snapshot(format!("unknown chart tag {other}"))),
    }
}

fn write_periodicity(buf: &mut Vec<u8>, p: &Periodicity) {
    match p {
        Periodicity::Periodic => push_u32(buf, 0),
        Periodicity::FlatWinding { winding } => {
            push_u32(buf, 1);
            push_u32(buf, winding.len() as u32);
            for w in winding {
                push_i64(buf, w[0]);
                push_i64(buf, w[1]);
            }
        }
        Periodicity::MoebiusTwist { rho } => {
            push_u32(buf, 2);
            push_f64(buf, *rho);
        }
    }
}

fn read_periodicity(c: &mut Cursor) -> Result<Periodicity> {
    match c.u32()? {
        0 => Ok(Periodicity::Periodic),
        1 => {
            let len = c.u32()? as usize;
            let mut winding = Vec::with_capacity(len);
            for _ in 0..len {
                winding.push([c.i64()?, c.i64()?]);
            }
            Ok(Periodicity::FlatWinding { winding })
        }
        2 => Ok(Periodicity::MoebiusTwist { rho: c.f64()? }),
        other => Err(Error::Snapshot(format!("unknown periodicity tag {other}"))),
    }
}

fn header(kind: u32) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    push_u32(&mut buf, VERSION);
    push_u32(&mut buf, kind);
    buf
}

fn open(bytes: &[u8], want_kind: u32) -> Result<Cursor<'_>> {
    let mut c = Cursor { bytes, at: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported snapshot version {version} (expected {VERSION})"
        )));
    }
    let kind = c.u32()?;
    if kind != want_kind {
        return Err(Error::Snapshot(format!(
            "record kind {kind} does not match the requested reader ({want_kind})"
        )));
    }
    Ok(c)
}

/// Serializes a base map (periodic parts + winding header).
pub fn torus_map_bytes(map: &TorusMap) -> Vec<u8> {
    let mut buf = header(KIND_TORUS);
    let (tag, n) = chart_tag(&map.chart);
    push_u32(&mut buf, tag);
    push_u32(&mut buf, n);
    write_periodicity(&mut buf, &map.periodicity);
    push_u32(&mut buf, map.grid.nx as u32);
    push_u32(&mut buf, map.grid.ny as u32);
    push_u32(&mut buf, map.comps.len() as u32);
    for comp in &map.comps {
        for &v in comp {
            push_f64(&mut buf, v);
        }
    }
    buf
}

pub fn torus_map_from_bytes(bytes: &[u8]) -> Result<TorusMap> {
    let mut c = open(bytes, KIND_TORUS)?;
    let chart = chart_from_tag(c.u32()?, c.u32()?)?;
    let periodicity = read_periodicity(&mut c)?;
    let nx = c.u32()? as usize;
    let ny = c.u32()? as usize;
    let comps_len = c.u32()? as usize;
    if comps_len != chart.dim() {
        return Err(Error::Snapshot(format!(
            "component count {comps_len} does not match chart dimension {}",
            chart.dim()
        )));
    }
    let mut comps = Vec::with_capacity(comps_len);
    for _ in 0..comps_len {
        let mut comp = Vec::with_capacity(nx * ny);
        for _ in 0..nx * ny {
            comp.push(c.f64()?);
        }
        comps.push(comp);
    }
    c.done()?;
    let mut map = TorusMap::zeros(chart, TorusGrid::new(nx, ny), periodicity);
    map.comps = comps;
    Ok(map)
}

/// Serializes a momentum covector field over the torus.
pub fn momentum_bytes(mom: &MomentumMap) -> Vec<u8> {
    let mut buf = header(KIND_MOMENTUM);
    push_u32(&mut buf, mom.grid.nx as u32);
    push_u32(&mut buf, mom.grid.ny as u32);
    push_u32(&mut buf, mom.comps.len() as u32);
    for comp in &mom.comps {
        for &v in comp {
            push_f64(&mut buf, v);
        }
    }
    buf
}

pub fn momentum_from_bytes(bytes: &[u8]) -> Result<MomentumMap> {
    let mut c = open(bytes, KIND_MOMENTUM)?;
    let nx = c.u32()? as usize;
    let ny = c.u32()? as usize;
    let comps_len = c.u32()? as usize;
    let mut mom = MomentumMap::zeros(comps_len, TorusGrid::new(nx, ny));
    for comp in mom.comps.iter_mut() {
        for v in comp.iter_mut() {
            *v = c.f64()?;
        }
    }
    c.done()?;
    Ok(mom)
}

/// Serializes a full cylinder phase-space state together with the chart,
/// slice periodicity, and the s-half-length needed to rebuild the grid.
pub fn cylinder_bytes(
    chart: &BaseChart,
    periodicity: &Periodicity,
    s_half: f64,
    state: &CylinderState,
) -> Vec<u8> {
    let mut buf = header(KIND_CYLINDER);
    let (tag, n) = chart_tag(chart);
    push_u32(&mut buf, tag);
    push_u32(&mut buf, n);
    write_periodicity(&mut buf, periodicity);
    push_u32(&mut buf, state.ns as u32);
    push_u32(&mut buf, state.nx as u32);
    push_u32(&mut buf, state.ny as u32);
    push_f64(&mut buf, s_half);
    for &v in state.data.iter() {
        push_f64(&mut buf, v);
    }
    buf
}

pub struct CylinderSnapshot {
    pub chart: BaseChart,
    pub periodicity: Periodicity,
    pub grid: CylinderGrid,
    pub state: CylinderState,
}

pub fn cylinder_from_bytes(bytes: &[u8]) -> Result<CylinderSnapshot> {
    let mut c = open(bytes, KIND_CYLINDER)?;
    let chart = chart_from_tag(c.u32()?, c.u32()?)?;
    let periodicity = read_periodicity(&mut c)?;
    let ns = c.u32()? as usize;
    let nx = c.u32()? as usize;
    let ny = c.u32()? as usize;
    let s_half = c.f64()?;
    if !(s_half > 0.0) {
        return Err(Error::Snapshot(format!("invalid s_half {s_half}")));
    }
    let mut state = CylinderState::zeros(chart.n(), ns, nx, ny);
    for i in 0..state.data.len() {
        state.data[i] = c.f64()?;
    }
    c.done()?;
    Ok(CylinderSnapshot {
        chart,
        periodicity,
        grid: CylinderGrid::new(s_half, ns, nx, ny),
        state,
    })
}

pub fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let mut f = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes)?;
    Ok(bytes)
}

/// CSV of a base map: x, y, then every component's full value (winding
/// included). Shortest-round-trip float formatting keeps output
/// deterministic.
pub fn torus_map_csv(map: &TorusMap) -> String {
    let mut out = String::from("x,y");
    for c in 0..map.comps.len() {
        out.push_str(&format!(",q{c}"));
    }
    out.push('\n');
    for iy in 0..map.grid.ny {
        for ix in 0..map.grid.nx {
            let v = map.value(ix, iy);
            out.push_str(&format!("{},{}", map.grid.x(ix), map.grid.y(iy)));
            for c in 0..v.len() {
                out.push_str(&format!(",{}", v[c]));
            }
            out.push('\n');
        }
    }
    out
}

/// CSV of a cylinder state: s, x, y, then the interleaved phase components.
pub fn cylinder_csv(grid: &CylinderGrid, state: &CylinderState) -> String {
    let comps = state.comps();
    let mut out = String::from("s,x,y");
    let d = comps / 2;
    for c in 0..d {
        out.push_str(&format!(",q{c}"));
    }
    for c in 0..d {
        out.push_str(&format!(",p{c}"));
    }
    out.push('\n');
    for js in 0..state.ns {
        for iy in 0..state.ny {
            for ix in 0..state.nx {
                let off = state.node_offset(js, ix, iy);
                out.push_str(&format!(
                    "{},{},{}",
                    grid.s(js),
                    grid.torus.x(ix),
                    grid.torus.y(iy)
                ));
                for c in 0..comps {
                    out.push_str(&format!(",{}", state.data[off + c]));
                }
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec64;

    #[test]
    fn torus_map_round_trips_bit_exactly() {
        let mut map = TorusMap::zeros(
            BaseChart::FlatTorus { n: 1 },
            TorusGrid::new(4, 3),
            Periodicity::FlatWinding {
                winding: vec![[1, 0], [0, -2]],
            },
        );
        // Awkward values: subnormal, negative zero, shortest-repr stress.
        map.comps[0][0] = 1.0 / 3.0;
        map.comps[0][5] = -0.0;
        map.comps[1][2] = f64::MIN_POSITIVE / 2.0;
        map.comps[1][7] = -1.234567890123456e-300;
        let bytes = torus_map_bytes(&map);
        let back = torus_map_from_bytes(&bytes).unwrap();
        assert_eq!(back.periodicity, map.periodicity);
        assert_eq!(back.grid.nx, 4);
        for c in 0..2 {
            for i in 0..12 {
                assert_eq!(
                    back.comps[c][i].to_bits(),
                    map.comps[c][i].to_bits(),
                    "bit mismatch at comp {c} node {i}"
                );
            }
        }
    }

    #[test]
    fn cylinder_round_trips_bit_exactly() {
        let chart = BaseChart::ComplexHyperbolic { n: 1 };
        let mut state = CylinderState::zeros(1, 5, 4, 2);
        for (i, v) in state.data.iter_mut().enumerate() {
            *v = (i as f64 * 0.7).sin() * 1e-3;
        }
        let bytes = cylinder_bytes(&chart, &Periodicity::MoebiusTwist { rho: 0.25 }, 6.0, &state);
        let snap = cylinder_from_bytes(&bytes).unwrap();
        assert_eq!(snap.chart, chart);
        assert_eq!(snap.periodicity, Periodicity::MoebiusTwist { rho: 0.25 });
        assert_eq!(snap.grid.ns, 5);
        assert_eq!(snap.grid.s_half, 6.0);
        for i in 0..state.data.len() {
            assert_eq!(snap.state.data[i].to_bits(), state.data[i].to_bits());
        }
    }

    #[test]
    fn momentum_round_trips() {
        let mut mom = MomentumMap::zeros(2, TorusGrid::new(3, 3));
        mom.comps[1][4] = -7.5e-9;
        let back = momentum_from_bytes(&momentum_bytes(&mom)).unwrap();
        assert_eq!(back.comps, mom.comps);
    }

    #[test]
    fn corrupted_headers_are_rejected() {
        let map = TorusMap::zeros(
            BaseChart::FlatTorus { n: 1 },
            TorusGrid::new(2, 2),
            Periodicity::Periodic,
        );
        let good = torus_map_bytes(&map);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(torus_map_from_bytes(&bad_magic).is_err());

        let mut bad_version = good.clone();
        bad_version[8] = 99;
        assert!(torus_map_from_bytes(&bad_version).is_err());

        let truncated = &good[..good.len() - 3];
        assert!(torus_map_from_bytes(truncated).is_err());

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(torus_map_from_bytes(&trailing).is_err());

        // A cylinder reader must refuse a torus record.
        assert!(cylinder_from_bytes(&good).is_err());
    }

    #[test]
    fn csv_headers_match_component_counts() {
        let map = TorusMap::from_fn(
            BaseChart::FlatTorus { n: 1 },
            TorusGrid::new(2, 2),
            Periodicity::Periodic,
            |x, y| Vec64::from_vec(vec![x.cos(), y.sin()]),
        );
        let csv = torus_map_csv(&map);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x,y,q0,q1");
        assert_eq!(csv.lines().count(), 1 + 4);

        let grid = CylinderGrid::new(2.0, 5, 2, 2);
        let state = CylinderState::zeros(1, 5, 2, 2);
        let csv = cylinder_csv(&grid, &state);
        assert_eq!(csv.lines().next().unwrap(), "s,x,y,q0,q1,p0,p1");
        assert_eq!(csv.lines().count(), 1 + 20);
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Round trip is lossless for every bit pattern, NaN payloads and
        // subnormals included.
        #[test]
        fn torus_round_trip_preserves_all_bit_patterns(
            bits in proptest::collection::vec(proptest::num::u64::ANY, 24),
        ) {
            let mut map = TorusMap::zeros(
                BaseChart::FlatTorus { n: 1 },
                TorusGrid::new(4, 3),
                Periodicity::Periodic,
            );
            for (k, b) in bits.iter().enumerate() {
                map.comps[k / 12][k % 12] = f64::from_bits(*b);
            }
            let back = torus_map_from_bytes(&torus_map_bytes(&map)).unwrap();
            for c in 0..2 {
                for i in 0..12 {
                    prop_assert_eq!(back.comps[c][i].to_bits(), map.comps[c][i].to_bits());
                }
            }
        }
    }
}
