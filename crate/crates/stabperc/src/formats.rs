//! On-disk formats: center lists, binary snapshots and sweep tables.

use std::fmt::Write as _;
use std::path::Path;

use stabperc_core::allocation::{Allocation, Grid};
use stabperc_core::lattice::Mask;
use stabperc_core::majorant::{PaintedMask, RField};
use stabperc_core::percolation::SweepResult;
use stabperc_core::pointprocess::{CenterSet, Region, Topology};
use stabperc_core::rng::RNG_ID;
use stabperc_core::ENGINE_VERSION;

use crate::error::{Error, Result};

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Writes `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn join_f64(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(sep)
}

/// Header `d lambda seed topology sides...`, then one center per line with
/// 17 significant digits per coordinate.
pub fn centers_to_text(centers: &CenterSet) -> String {
    let region = centers.region();
    let mut s = format!(
        "{} {} {} {} {}\n",
        centers.dim(),
        centers.intensity(),
        centers.seed(),
        region.topology().name(),
        join_f64(region.sides(), " ")
    );
    for p in centers.iter() {
        let line: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn centers_from_text(text: &str, path: &Path) -> Result<CenterSet> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| format_err(path, "empty center file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || format_err(path, "line 1: expected 'd lambda seed topology sides...'");
    if fields.len() < 4 {
        return Err(bad_header());
    }
    let d: usize = fields[0].parse().map_err(|_| bad_header())?;
    let lambda: f64 = fields[1].parse().map_err(|_| bad_header())?;
    let seed: u64 = fields[2].parse().map_err(|_| bad_header())?;
    let topology = Topology::parse(fields[3]).ok_or_else(bad_header)?;
    let sides: Vec<f64> = fields[4..]
        .iter()
        .map(|s| s.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad_header())?;
    if sides.len() != d {
        return Err(format_err(path, format!("line 1: {d} sides expected, got {}", sides.len())));
    }
    let region = Region::new(&sides, topology)?;
    let mut coords = Vec::new();
    for (k, line) in lines {
        let before = coords.len();
        for tok in line.split_whitespace() {
            let x: f64 = tok
                .parse()
                .map_err(|_| format_err(path, format!("line {}: bad coordinate '{tok}'", k + 1)))?;
            coords.push(x);
        }
        if coords.len() - before != d {
            return Err(format_err(path, format!("line {}: expected {d} coordinates", k + 1)));
        }
    }
    CenterSet::new(region, coords, lambda, seed).map_err(|e| format_err(path, e.to_string()))
}

pub fn read_centers(path: &Path) -> Result<CenterSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    centers_from_text(&text, path)
}

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"STABSNP1";

#[derive(Debug, Clone, PartialEq)]
pub enum SectionData {
    I32(Vec<i32>),
    U64(Vec<u64>),
    F64(Vec<f64>),
    Bits(Vec<bool>),
}

impl SectionData {
    fn tag(&self) -> u8 {
        match self {
            SectionData::I32(_) => 0,
            SectionData::U64(_) => 1,
            SectionData::F64(_) => 2,
            SectionData::Bits(_) => 3,
        }
    }

    fn len(&self) -> usize {
        match self {
            SectionData::I32(v) => v.len(),
            SectionData::U64(v) => v.len(),
            SectionData::F64(v) => v.len(),
            SectionData::Bits(v) => v.len(),
        }
    }
}

/// Binary container: a text header of `key=value` lines followed by named,
/// typed little-endian arrays.
///
/// ```text
/// magic "STABSNP1" | u32 header bytes | header | u32 sections
/// per section: u16 name bytes | name | u8 type | u64 count | payload
/// ```
/// Types are 0 = i32, 1 = u64, 2 = f64, 3 = bitset packed LSB first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    pub header: Vec<(String, String)>,
    pub sections: Vec<(String, SectionData)>,
}

impl Snapshot {
    pub fn new(kind: &str) -> Snapshot {
        let mut s = Snapshot::default();
        s.set("kind", kind);
        s.set("engine", ENGINE_VERSION);
        s.set("rng", RNG_ID);
        s
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn add(&mut self, name: &str, data: SectionData) {
        self.sections.push((name.to_string(), data));
    }

    pub fn section(&self, name: &str) -> Option<&SectionData> {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(header, "{k}={v}");
        }
        let mut out = Vec::new();
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&(self.sections.len() as u32).to_le_bytes());
        for (name, data) in &self.sections {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(data.tag());
            out.extend_from_slice(&(data.len() as u64).to_le_bytes());
            match data {
                SectionData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                SectionData::U64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                SectionData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                SectionData::Bits(v) => {
                    let mut packed = vec![0u8; v.len().div_ceil(8)];
                    for (k, _) in v.iter().enumerate().filter(|(_, &b)| b) {
                        packed[k / 8] |= 1 << (k % 8);
                    }
                    out.extend_from_slice(&packed);
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Snapshot> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(8)? != SNAPSHOT_MAGIC {
            return Err(format_err(path, "not a snapshot file"));
        }
        let hlen = r.u32()? as usize;
        let header = std::str::from_utf8(r.take(hlen)?).map_err(|_| format_err(path, "header is not UTF-8"))?;
        let mut snap = Snapshot::default();
        for line in header.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format_err(path, format!("bad header line '{line}'")))?;
            snap.set(k, v);
        }
        let count = r.u32()?;
        for _ in 0..count {
            let nlen = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
            let name = std::str::from_utf8(r.take(nlen)?)
                .map_err(|_| format_err(path, "section name is not UTF-8"))?
                .to_string();
            let tag = r.take(1)?[0];
            let n = r.u64()? as usize;
            let data = match tag {
                0 => SectionData::I32(r.take(n.checked_mul(4).ok_or_else(|| r.truncated())?)?.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect()),
                1 => SectionData::U64(r.take(n.checked_mul(8).ok_or_else(|| r.truncated())?)?.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect()),
                2 => SectionData::F64(r.take(n.checked_mul(8).ok_or_else(|| r.truncated())?)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()),
                3 => {
                    let packed = r.take(n.div_ceil(8))?;
                    SectionData::Bits((0..n).map(|k| packed[k / 8] >> (k % 8) & 1 == 1).collect())
                }
                _ => return Err(format_err(path, format!("unknown section type {tag}"))),
            };
            snap.add(&name, data);
        }
        if r.pos != bytes.len() {
            return Err(format_err(path, "trailing bytes after last section"));
        }
        Ok(snap)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Snapshot> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Snapshot::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn truncated(&self) -> Error {
        format_err(self.path, "truncated snapshot")
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.truncated());
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn set_region(snap: &mut Snapshot, region: &Region) {
    snap.set("dim", region.dim());
    snap.set("topology", region.topology().name());
    snap.set("sides", join_f64(region.sides(), ","));
}

/// Snapshot of an allocation together with the centers it was built from.
pub fn allocation_snapshot(alloc: &Allocation, centers: &CenterSet) -> Snapshot {
    let grid = alloc.grid();
    let mut snap = Snapshot::new("allocation");
    set_region(&mut snap, grid.region());
    snap.set("h", grid.h());
    snap.set("cells", join_f64(&grid.cells_per_axis().iter().map(|&n| n as f64).collect::<Vec<_>>(), ","));
    snap.set("alpha", alloc.alpha());
    snap.set("quota", alloc.quota());
    snap.set("lambda", centers.intensity());
    snap.set("seed", centers.seed());
    snap.set("centers", centers.len());
    snap.add("owner", SectionData::I32(alloc.owners().to_vec()));
    snap.add("disputed", SectionData::Bits(alloc.disputed_flags().to_vec()));
    snap.add("center_claimed", SectionData::U64(alloc.claimed_counts().to_vec()));
    snap.add(
        "center_sated",
        SectionData::Bits((0..alloc.num_centers()).map(|c| alloc.is_sated(c)).collect()),
    );
    snap.add("center_coords", SectionData::F64(centers.coords().to_vec()));
    snap
}

fn header<T: std::str::FromStr>(snap: &Snapshot, key: &str, path: &Path) -> Result<T> {
    snap.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err(path, format!("missing or invalid header '{key}'")))
}

fn header_list(snap: &Snapshot, key: &str, path: &Path) -> Result<Vec<f64>> {
    let raw = snap
        .get(key)
        .ok_or_else(|| format_err(path, format!("missing header '{key}'")))?;
    raw.split(',')
        .map(|v| v.parse().map_err(|_| format_err(path, format!("invalid header '{key}'"))))
        .collect()
}

pub fn snapshot_region(snap: &Snapshot, path: &Path) -> Result<Region> {
    let topology = snap
        .get("topology")
        .and_then(Topology::parse)
        .ok_or_else(|| format_err(path, "missing topology"))?;
    Ok(Region::new(&header_list(snap, "sides", path)?, topology)?)
}

/// Rebuilds the allocation and centers stored by [`allocation_snapshot`].
pub fn allocation_from_snapshot(snap: &Snapshot, path: &Path) -> Result<(Allocation, CenterSet)> {
    if snap.get("kind") != Some("allocation") {
        return Err(format_err(path, "not an allocation snapshot"));
    }
    let region = snapshot_region(snap, path)?;
    let grid = Grid::new(&region, header(snap, "h", path)?)?;
    let centers = match snap.section("center_coords") {
        Some(SectionData::F64(v)) => CenterSet::new(
            region,
            v.clone(),
            header(snap, "lambda", path)?,
            header(snap, "seed", path)?,
        )?,
        _ => return Err(format_err(path, "missing center_coords")),
    };
    let owner = match snap.section("owner") {
        Some(SectionData::I32(v)) => v.clone(),
        _ => return Err(format_err(path, "missing owner")),
    };
    let disputed = match snap.section("disputed") {
        Some(SectionData::Bits(v)) => v.clone(),
        _ => return Err(format_err(path, "missing disputed")),
    };
    let alloc = Allocation::from_parts(
        grid,
        centers.len(),
        owner,
        disputed,
        header(snap, "quota", path)?,
        header(snap, "alpha", path)?,
    )?;
    Ok((alloc, centers))
}

pub fn rfield_snapshot(field: &RField) -> Snapshot {
    let mut snap = Snapshot::new("rfield");
    lattice_header(&mut snap, field.lattice());
    snap.add("r", SectionData::F64(field.values().to_vec()));
    snap
}

pub fn painted_snapshot(painted: &PaintedMask) -> Snapshot {
    let mut snap = Snapshot::new("painted");
    lattice_header(&mut snap, painted.lattice());
    snap.add("mask", SectionData::Bits(painted.mask().cells().to_vec()));
    snap
}

fn lattice_header(snap: &mut Snapshot, lattice: &stabperc_core::majorant::CubeLattice) {
    let lo: Vec<String> = lattice.lo().iter().map(|x| x.to_string()).collect();
    let dims: Vec<String> = lattice.shape().dims().iter().map(|x| x.to_string()).collect();
    snap.set("dim", lattice.dim());
    snap.set("lo", lo.join(","));
    snap.set("dims", dims.join(","));
    snap.set("wrap", lattice.wraps());
}

/// Cell mask on a grid, e.g. a claimed set or a Boolean model.
pub fn mask_snapshot(mask: &Mask, grid: &Grid, label: &str) -> Snapshot {
    let mut snap = Snapshot::new("mask");
    snap.set("label", label);
    set_region(&mut snap, grid.region());
    snap.set("h", grid.h());
    snap.add("mask", SectionData::Bits(mask.cells().to_vec()));
    snap
}

pub fn mask_from_snapshot(snap: &Snapshot, path: &Path) -> Result<(Mask, Grid)> {
    let region = snapshot_region(snap, path)?;
    let grid = Grid::new(&region, header(snap, "h", path)?)?;
    let cells = match snap.section("mask") {
        Some(SectionData::Bits(v)) if v.len() == grid.num_cells() => v.clone(),
        _ => return Err(format_err(path, "missing or mis-sized mask")),
    };
    Ok((Mask::from_cells(grid.shape().clone(), region.is_torus(), cells), grid))
}

/// `alpha,p_hat,ci_lo,ci_hi,replicas,crossings` rows.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut s = String::from("alpha,p_hat,ci_lo,ci_hi,replicas,crossings\n");
    for p in &result.points {
        let c = &p.crossing;
        let _ = writeln!(s, "{},{},{},{},{},{}", p.alpha, c.estimate, c.ci_lo, c.ci_hi, c.trials, c.successes);
    }
    s
}

/// Threshold summary as `key: value` lines inside braces.
pub fn threshold_block(result: &SweepResult) -> String {
    let mut s = String::from("{\n");
    let _ = writeln!(s, "  lambda: {}", result.lambda);
    let _ = writeln!(s, "  h: {}", result.h);
    let _ = writeln!(s, "  window: {}", join_f64(&result.sides, "x"));
    let _ = writeln!(s, "  adjacency: {}", result.adjacency.name());
    let _ = writeln!(s, "  replicas: {}", result.replicas);
    let _ = writeln!(s, "  seed: {}", result.seed);
    match &result.threshold {
        Some(t) => {
            let _ = writeln!(s, "  alpha_p: {}", t.alpha);
            let _ = writeln!(s, "  ci_lo: {}", t.ci_lo);
            let _ = writeln!(s, "  ci_hi: {}", t.ci_hi);
            let _ = writeln!(s, "  method: {}", t.method.name());
        }
        None => {
            let _ = writeln!(s, "  alpha_p: none");
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use stabperc_core::allocation::compute_allocation;
    use stabperc_core::pointprocess::sample_poisson;

    #[test]
    fn centers_round_trip_exactly() {
        let region = Region::new(&[7.5, 3.0], Topology::Box).unwrap();
        let c = sample_poisson(&region, 2.3, 77).unwrap();
        let text = centers_to_text(&c);
        assert!(text.starts_with("2 2.3 77 box 7.5 3\n"));
        let back = centers_from_text(&text, Path::new("x")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bad_center_lines() {
        let p = Path::new("c.txt");
        assert!(centers_from_text("", p).is_err());
        assert!(centers_from_text("2 1 0 torus 4\n", p).is_err());
        let err = centers_from_text("2 1 0 torus 4 4\n1.0\n", p).unwrap_err();
        assert_eq!(err.to_string(), "c.txt: line 2: expected 2 coordinates");
        assert!(centers_from_text("2 1 0 torus 4 4\n1.0 9.0\n", p).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let region = Region::cube(2, 4.0, Topology::Torus).unwrap();
        let grid = Grid::new(&region, 0.25).unwrap();
        let centers = CenterSet::from_points(region, &[[1.125, 2.0], [3.125, 2.0], [0.3, 0.4]]).unwrap();
        let alloc = compute_allocation(&centers, &grid, 4.0).unwrap();
        assert!(alloc.num_disputed() > 0);
        let snap = allocation_snapshot(&alloc, &centers);
        let bytes = snap.to_bytes();
        let again = Snapshot::from_bytes(&bytes, Path::new("s")).unwrap();
        assert_eq!(again, snap);
        let (a2, c2) = allocation_from_snapshot(&again, Path::new("s")).unwrap();
        assert_eq!(a2.owners(), alloc.owners());
        assert_eq!(a2.disputed_flags(), alloc.disputed_flags());
        assert_eq!(c2.coords(), centers.coords());
        assert!(Snapshot::from_bytes(&bytes[..bytes.len() - 1], Path::new("s")).is_err());
        assert!(Snapshot::from_bytes(b"nonsense", Path::new("s")).is_err());
    }
}
