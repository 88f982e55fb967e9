//! On-disk cache of level quotients.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     4 bytes  "ARBQ"
//! version   u32
//! automaton 32 bytes content hash
//! degree    u32
//! level     u32
//! order     u64
//! order x { word_len u32, word_len x u32 symbol (state << 1 | inverse), leaves x u32 image }
//! trailer   32 bytes sha256 of everything above
//! ```
//!
//! Any mismatch or corruption is treated as a miss. Writes go to a temporary file that is then
//! renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexSet;
use sha2::{Digest, Sha256};

use super::LevelQuotient;
use crate::wreath::{Automaton, LevelPerm, Symbol};

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "ARBOR_CACHE_DIR";
const MAGIC: &[u8; 4] = b"ARBQ";

#[derive(Clone, Debug)]
pub struct QuotientCache {
    dir: PathBuf,
}

impl QuotientCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        QuotientCache { dir: dir.into() }
    }

    /// The cache named by the `ARBOR_CACHE_DIR` environment variable, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(QuotientCache::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, aut: &Automaton, level: usize) -> PathBuf {
        self.dir
            .join(format!("{}-L{level}.arbq", aut.content_hash_hex()))
    }

    pub fn load(&self, aut: &Automaton, level: usize) -> Option<LevelQuotient> {
        let bytes = fs::read(self.path(aut, level)).ok()?;
        decode(&bytes, aut, level)
    }

    pub fn store(&self, aut: &Automaton, q: &LevelQuotient) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let target = self.path(aut, q.level());
        let mut tmp = tempfile_in(&self.dir)?;
        tmp.1.write_all(&encode(aut, q))?;
        tmp.1.sync_all()?;
        drop(tmp.1);
        fs::rename(&tmp.0, &target).inspect_err(|_| {
            let _ = fs::remove_file(&tmp.0);
        })
    }
}

fn tempfile_in(dir: &Path) -> io::Result<(PathBuf, fs::File)> {
    let pid = std::process::id();
    for attempt in 0..1000u32 {
        let path = dir.join(format!(".tmp-{pid}-{attempt}"));
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => return Ok((path, f)),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    Err(io::Error::new(io::ErrorKind::AlreadyExists, "no free temporary name"))
}

pub(crate) fn encode(aut: &Automaton, q: &LevelQuotient) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&aut.content_hash());
    out.extend_from_slice(&(q.degree() as u32).to_le_bytes());
    out.extend_from_slice(&(q.level() as u32).to_le_bytes());
    out.extend_from_slice(&(q.order() as u64).to_le_bytes());
    for i in 0..q.order() {
        let w = q.witness(i);
        out.extend_from_slice(&(w.len() as u32).to_le_bytes());
        for s in w {
            out.extend_from_slice(&(s.state << 1 | s.inverse as u32).to_le_bytes());
        }
        for &x in q.table(i) {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

pub(crate) fn decode(bytes: &[u8], aut: &Automaton, level: usize) -> Option<LevelQuotient> {
    let body_len = bytes.len().checked_sub(32)?;
    let (body, trailer) = bytes.split_at(body_len);
    if Sha256::digest(body).as_slice() != trailer {
        return None;
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != MAGIC || r.u32()? != CACHE_VERSION || r.take(32)? != &aut.content_hash()[..] {
        return None;
    }
    let degree = r.u32()? as usize;
    if degree != aut.degree() || r.u32()? as usize != level {
        return None;
    }
    let order = usize::try_from(r.u64()?).ok()?;
    let leaves = degree.checked_pow(level as u32)?;
    let mut tables = IndexSet::new();
    let mut witnesses = Vec::new();
    for _ in 0..order {
        let len = r.u32()? as usize;
        let mut word = Vec::with_capacity(len.min(1 << 16));
        for _ in 0..len {
            let s = r.u32()?;
            if (s >> 1) as usize >= aut.num_states() {
                return None;
            }
            word.push(Symbol::new((s >> 1) as usize, s & 1 == 1));
        }
        let mut table = Vec::with_capacity(leaves.min(1 << 24));
        for _ in 0..leaves {
            let x = r.u32()?;
            if x as usize >= leaves {
                return None;
            }
            table.push(x);
        }
        if !LevelPerm::from_images(degree, level, table.clone()).is_tree_automorphism() {
            return None;
        }
        if !tables.insert(table.into_boxed_slice()) {
            return None;
        }
        witnesses.push(word);
    }
    if r.pos != body.len() || order == 0 {
        return None;
    }
    Some(LevelQuotient::from_parts(degree, level, tables, witnesses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::{level_quotient, QuotientTower};
    use crate::text::parse_automaton;
    use crate::Budgets;

    const GRIGORCHUK: &str = "alphabet 2\na = (0 1) (1, 1)\nb = e (a, c)\nc = e (a, d)\nd = e (1, b)";

    #[test]
    fn round_trip() {
        let aut = parse_automaton(GRIGORCHUK).unwrap();
        let q = level_quotient(&aut, 3, &Budgets::default()).unwrap();
        let bytes = encode(&aut, &q);
        let back = decode(&bytes, &aut, 3).unwrap();
        assert_eq!(back.order(), q.order());
        for i in 0..q.order() {
            assert_eq!(back.table(i), q.table(i));
            assert_eq!(back.witness(i), q.witness(i));
        }
    }

    #[test]
    fn corruption_is_a_miss() {
        let aut = parse_automaton(GRIGORCHUK).unwrap();
        let q = level_quotient(&aut, 2, &Budgets::default()).unwrap();
        let bytes = encode(&aut, &q);
        for pos in [0, 5, 40, bytes.len() / 2, bytes.len() - 1] {
            let mut bad = bytes.clone();
            bad[pos] ^= 1;
            assert!(decode(&bad, &aut, 2).is_none(), "flip at {pos}");
        }
        assert!(decode(&bytes[..bytes.len() - 3], &aut, 2).is_none());
        assert!(decode(&bytes, &aut, 3).is_none());
        let other = parse_automaton("alphabet 2\na = (0 1) (1, a)").unwrap();
        assert!(decode(&bytes, &other, 2).is_none());
    }

    #[test]
    fn tower_uses_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let aut = parse_automaton(GRIGORCHUK).unwrap();
        let cache = QuotientCache::new(dir.path());
        let tower = QuotientTower::new(&aut, Budgets::default()).with_cache(Some(cache.clone()));
        let q = tower.level(3).unwrap();
        let path = cache.path(&aut, 3);
        assert!(path.exists());
        let loaded = cache.load(&aut, 3).unwrap();
        assert_eq!(loaded.order(), q.order());

        // a corrupted file is recomputed and rewritten
        fs::write(&path, b"garbage").unwrap();
        let tower = QuotientTower::new(&aut, Budgets::default()).with_cache(Some(cache.clone()));
        assert_eq!(tower.level(3).unwrap().order(), q.order());
        assert!(cache.load(&aut, 3).is_some());
    }
}
