use super::{Dictionary, InitScheme, Provenance};
use crate::{CMat, CVec, Error, Result, C64};

/// Training signals for dictionary learning: a general set `Y` and three sets
/// that are strongly sparse in angle, delay and Doppler respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCorpus {
    pub general: CMat,
    pub angle: CMat,
    pub delay: CMat,
    pub doppler: CMat,
}

impl TrainingCorpus {
    fn sets(&self) -> [&CMat; 4] {
        [&self.angle, &self.delay, &self.doppler, &self.general]
    }

    /// Signal dimension shared by all non-empty sets.
    pub fn rows(&self) -> Result<usize> {
        let n = self
            .sets()
            .iter()
            .find(|m| m.ncols() > 0)
            .map(|m| m.nrows())
            .unwrap_or(self.general.nrows());
        for m in self.sets() {
            if m.ncols() > 0 && m.nrows() != n {
                return Err(Error::DimensionMismatch { context: "training corpus rows", expected: n, got: m.nrows() });
            }
        }
        Ok(n)
    }
}

/// Two normalised columns closer than this count as duplicates.
const DUPLICATE: f64 = 1.0 - 1e-8;

struct Picker<'a> {
    sets: [&'a CMat; 4],
    cursor: [usize; 4],
    atoms: Vec<CVec>,
}

impl Picker<'_> {
    /// Takes the next usable column of `set`; false once the set is exhausted.
    fn take(&mut self, set: usize) -> bool {
        let m = self.sets[set];
        while self.cursor[set] < m.ncols() {
            let c = m.column(self.cursor[set]);
            self.cursor[set] += 1;
            let nrm = c.norm();
            if nrm == 0.0 {
                continue;
            }
            let cand: CVec = c / C64::new(nrm, 0.0);
            if self.atoms.iter().any(|a| a.dotc(&cand).norm() > DUPLICATE) {
                continue;
            }
            self.atoms.push(cand);
            return true;
        }
        false
    }
}

/// Initial dictionary `D⁰` from the domain-sparse sets.
///
/// `k` atoms are split into thirds — angle, delay, Doppler — with the
/// remainder of `k / 3` going to the angle set first, then the delay set.
/// Columns are taken in order, skipping zero columns and duplicates of
/// already selected atoms, and normalised. A set that runs short leaves its
/// shortfall to the other two (taken round-robin); if the three sets together
/// hold fewer than `k` usable columns the rest comes from the general set.
pub fn multidomain_init(corpus: &TrainingCorpus, k: usize) -> Result<Dictionary> {
    let n = corpus.rows()?;
    if k < n {
        return Err(Error::InvalidInput(format!("k = {k} atoms is below the signal dimension {n}")));
    }
    let base = k / 3;
    let rem = k % 3;
    let quota = [base + usize::from(rem > 0), base + usize::from(rem > 1), base];
    let mut p = Picker { sets: corpus.sets(), cursor: [0; 4], atoms: Vec::with_capacity(k) };
    for (set, &q) in quota.iter().enumerate() {
        for _ in 0..q {
            if !p.take(set) {
                break;
            }
        }
    }
    let mut exhausted = [false; 3];
    while p.atoms.len() < k && !exhausted.iter().all(|&e| e) {
        for set in 0..3 {
            if p.atoms.len() < k && !exhausted[set] && !p.take(set) {
                exhausted[set] = true;
            }
        }
    }
    while p.atoms.len() < k {
        if !p.take(3) {
            return Err(Error::InvalidInput(format!(
                "only {} usable training columns for {k} atoms",
                p.atoms.len()
            )));
        }
    }
    let atoms = CMat::from_columns(&p.atoms);
    Dictionary::new(
        atoms,
        Provenance { init: InitScheme::MultiDomain, iterations: 0, target_sparsity: 0, training_set: String::new() },
    )
}
