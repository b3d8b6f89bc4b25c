use std::io::Write;

use rayon::prelude::*;

use super::witnesses::WitnessSequences;
use crate::distribution::{classify, DistributionConfig, PairVerdict};
use crate::error::{invalid, Result};
use crate::frac::{self, Frac};
use crate::index_seq::{merge_density_one, upper_density, IndexSequence, MergeConfig, MergePlan};
use crate::systems::OrbitPair;

/// Density of one merged member inside Q.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberAudit {
    pub label: String,
    pub running_sup: Frac,
    pub value_at_horizon: Frac,
}

#[derive(Clone, Debug)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    pub verdict: PairVerdict,
}

/// Q together with everything needed to audit it.
#[derive(Clone, Debug)]
pub struct SequenceReport {
    pub q: IndexSequence,
    pub plan: MergePlan,
    pub members: Vec<MemberAudit>,
    pub pairs: Vec<PairReport>,
}

impl SequenceReport {
    /// Pairs that miss the distributional δ-verdict at this horizon.
    pub fn failures(&self) -> Vec<(usize, usize)> {
        self.pairs
            .iter()
            .filter(|p| !p.verdict.distributional_delta)
            .map(|p| (p.i, p.j))
            .collect()
    }

    pub fn horizon(&self) -> usize {
        self.q.len().unwrap_or(0)
    }

    /// One verdict row per pair, then the member audit, then per-threshold
    /// lower/upper estimates so failures can be traced.
    pub fn write_csv(&self, mut w: impl Write, header: &[String]) -> Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        writeln!(w, "{}", PairVerdict::CSV_HEADER)?;
        for p in &self.pairs {
            writeln!(w, "{}", p.verdict.csv_row(&format!("{}-{}", p.i, p.j)))?;
        }
        writeln!(w)?;
        writeln!(w, "member,running_sup,value_at_horizon")?;
        for m in &self.members {
            writeln!(
                w,
                "{},{},{}",
                m.label,
                frac::display(&m.running_sup),
                frac::display(&m.value_at_horizon)
            )?;
        }
        writeln!(w)?;
        writeln!(w, "pair,kind,t,estimate,estimate_float")?;
        for p in &self.pairs {
            for (kind, rows) in [("upper", &p.verdict.upper), ("lower", &p.verdict.lower)] {
                for (t, v) in rows.iter() {
                    writeln!(w, "{}-{},{kind},{t},{},{}", p.i, p.j, frac::display(v), frac::to_f64(v))?;
                }
            }
        }
        Ok(())
    }
}

/// Merges `members` into Q, audits their densities and classifies every pair along Q.
pub(crate) fn merge_and_classify<P: OrbitPair>(
    members: Vec<(String, IndexSequence)>,
    pairs: &[(usize, usize, P, f64)],
    horizon: usize,
    merge: &MergeConfig,
    config: &DistributionConfig,
) -> Result<SequenceReport> {
    let (labels, family): (Vec<String>, Vec<IndexSequence>) = members.into_iter().unzip();
    let merged = merge_density_one(&family, horizon, merge)?;
    let q = merged.sequence;
    let mut cfg = config.clone();
    cfg.horizon = horizon;
    let audits: Vec<MemberAudit> = labels
        .into_par_iter()
        .zip(family.par_iter())
        .map(|(label, s)| {
            let est = upper_density(s, &q, horizon, cfg.checkpoint_stride)?;
            Ok(MemberAudit {
                label,
                running_sup: est.running_sup,
                value_at_horizon: est.value_at_horizon,
            })
        })
        .collect::<Result<_>>()?;
    let reports: Vec<PairReport> = pairs
        .par_iter()
        .map(|(i, j, pair, delta)| {
            Ok(PairReport {
                i: *i,
                j: *j,
                verdict: classify(pair, &q, *delta, &cfg)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SequenceReport {
        q,
        plan: merged.plan,
        members: audits,
        pairs: reports,
    })
}

/// Merges every proximal and distal witness sequence (in the order
/// P₀₁, S₀₁, P₀₂, S₀₂, ...) into one Q and classifies each pair along it.
///
/// Pairs without a matching witness entry are not classified; witness
/// entries without a matching pair still contribute to Q.
pub fn chaotic_set_to_sequence<P: OrbitPair + Clone>(
    witnesses: &WitnessSequences,
    pairs: &[(usize, usize, P)],
    horizon: usize,
    merge: &MergeConfig,
    config: &DistributionConfig,
) -> Result<SequenceReport> {
    if witnesses.pairs.is_empty() {
        return invalid("witness set is empty");
    }
    let mut members = Vec::with_capacity(2 * witnesses.pairs.len());
    for w in &witnesses.pairs {
        members.push((format!("P{}-{}", w.i, w.j), IndexSequence::from_terms(w.proximal.clone())?));
        members.push((format!("S{}-{}", w.i, w.j), IndexSequence::from_terms(w.distal.clone())?));
    }
    let classified: Vec<(usize, usize, P, f64)> = pairs
        .iter()
        .filter_map(|(i, j, p)| witnesses.get(*i, *j).map(|w| (*i, *j, p.clone(), w.delta)))
        .collect();
    merge_and_classify(members, &classified, horizon, merge, config)
}
