//! The bitplane coding procedure shared by encoder and decoder.
//!
//! Per bitplane: each subband in coding order runs its quad-tree pass, where
//! every newly found significant pixel seeds a cluster that is grown by
//! dilation before the quad-tree resumes; then the refinement pass.

use std::collections::{BTreeMap, VecDeque};

use super::channel::BitChannel;
use super::group::{self, GroupChannel, Outcome, Strategy, VlOrder};
use super::state::{BlockSet, CoderState, Status};
use crate::bitio::{Model, Truncated};
use crate::transform::{Orientation, Subband, WaveletPyramid};
use crate::weights::{context_unchecked, significance_degree, ContextMode, Weights, CONTEXT_LEN};

/// 8-connected dilation template in raster order.
pub const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    #[default]
    Off,
    /// Record the state digest before every coded bit.
    Digest,
    /// Also keep a full state snapshot before every coded bit.
    Full,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub mode: TraceMode,
    pub digests: Vec<u64>,
    pub snapshots: Vec<CoderState>,
    /// State after each completed bitplane (recorded unless tracing is off).
    pub plane_ends: Vec<CoderState>,
}

/// Per-plane bookkeeping used to audit coverage.
#[derive(Debug, Clone, Default)]
pub struct Audit {
    pub planes_checked: usize,
    pub violations: Vec<String>,
    /// Groups coded per strategy: [control dilation, VL group test].
    pub strategy_counts: [u64; 2],
    /// Groups with exactly one significant member, and how often that member
    /// was ranked first by significance degree.
    pub single_groups: u64,
    pub single_ranked_first: u64,
    /// Sum over single-significant groups of 1/N (expected hits at random).
    pub single_chance: f64,
    /// Seeds found by the quad-tree, as (plane, band, flat index).
    pub seeds: Vec<(i32, usize, usize)>,
    /// Detail-band groups per plane, counted as `[N][M]`.
    pub groups: BTreeMap<i32, [[u64; 9]; 9]>,
    resolved: Vec<u8>,
}

pub(crate) struct Coder<'a, C: BitChannel> {
    pub chan: C,
    pub state: CoderState,
    truth: Option<&'a [f64]>,
    alphas: [[f64; CONTEXT_LEN]; 3],
    bands: Vec<Subband>,
    pub trace: Trace,
    pub audit: Option<Audit>,
}

impl<'a, C: BitChannel> Coder<'a, C> {
    pub fn new(chan: C, geometry: &WaveletPyramid, truth: Option<&'a [f64]>, weights: &Weights) -> Self {
        let state = CoderState::new(geometry);
        let bands = state.recon.subbands();
        Coder {
            chan,
            state,
            truth,
            alphas: [0, 1, 2].map(|k| weights.sets[k].alphas()),
            bands,
            trace: Trace::default(),
            audit: None,
        }
    }

    pub fn enable_audit(&mut self) {
        self.audit = Some(Audit {
            resolved: vec![0; self.state.status.len()],
            ..Audit::default()
        });
    }

    pub fn run(&mut self, n_max: i32) -> Result<(), Truncated> {
        for n in (0..=n_max).rev() {
            self.state.begin_plane(n);
            if let Some(a) = &mut self.audit {
                a.resolved.fill(0);
            }
            for b in 0..self.bands.len() {
                self.band_pass(b)?;
            }
            self.refinement_pass()?;
            self.audit_plane();
            if self.trace.mode != TraceMode::Off {
                self.trace.plane_ends.push(self.state.clone());
            }
        }
        Ok(())
    }

    fn code(&mut self, model: Model, truth: Option<bool>) -> Result<bool, Truncated> {
        match self.trace.mode {
            TraceMode::Off => {}
            TraceMode::Digest => self.trace.digests.push(self.state.digest()),
            TraceMode::Full => {
                self.trace.digests.push(self.state.digest());
                self.trace.snapshots.push(self.state.clone());
            }
        }
        self.chan.code(model, &|| truth.expect("encoder supplies every decision"))
    }

    fn resolve_insignificant(&mut self, idx: usize) {
        if let Some(a) = &mut self.audit {
            a.resolved[idx] += 1;
        }
        self.state.mark_insignificant(idx);
    }

    fn resolve_significant(&mut self, idx: usize, negative: bool) {
        if let Some(a) = &mut self.audit {
            a.resolved[idx] += 1;
        }
        self.state.mark_significant(idx, negative);
    }

    fn band_pass(&mut self, b: usize) -> Result<(), Truncated> {
        let mut pending = std::mem::take(&mut self.state.lis[b]);
        // smallest sets first; stable, so ties keep list order
        pending.sort_by_key(BlockSet::area);
        let mut fresh = Vec::with_capacity(pending.len());
        let mut result = Ok(());
        let mut it = pending.into_iter();
        for set in it.by_ref() {
            if let Err(e) = self.process_set(b, set, &mut fresh) {
                result = Err(e);
                break;
            }
        }
        fresh.extend(it);
        self.state.set_lis(b, fresh);
        result
    }

    fn process_set(&mut self, b: usize, set: BlockSet, fresh: &mut Vec<BlockSet>) -> Result<(), Truncated> {
        let sb = self.bands[b];
        let geo = &self.state.recon;
        let mut untested = false;
        let mut unfinished = false;
        for i in set.row..set.row + set.rows {
            for j in set.col..set.col + set.cols {
                match self.state.status[geo.index(&sb, i, j)] {
                    Status::Untested => untested = true,
                    Status::Insignificant => unfinished = true,
                    Status::Significant => {}
                }
            }
        }
        if !untested {
            // nothing left to test here this plane; no bits needed
            if unfinished {
                fresh.push(set);
            }
            return Ok(());
        }
        let thr = self.state.threshold();
        let truth = self.truth.map(|c| {
            let geo = &self.state.recon;
            (set.row..set.row + set.rows).any(|i| {
                (set.col..set.col + set.cols).any(|j| {
                    let k = geo.index(&sb, i, j);
                    self.state.status[k] == Status::Untested && c[k].abs() >= thr
                })
            })
        });
        if !self.code(Model::Significance, truth)? {
            for i in set.row..set.row + set.rows {
                for j in set.col..set.col + set.cols {
                    let k = self.state.recon.index(&sb, i, j);
                    if self.state.status[k] == Status::Untested {
                        self.resolve_insignificant(k);
                    }
                }
            }
            fresh.push(set);
            return Ok(());
        }
        if set.is_pixel() {
            let idx = self.state.recon.index(&sb, set.row, set.col);
            let negative = self.code(Model::Sign, self.truth.map(|c| c[idx] < 0.0))?;
            self.resolve_significant(idx, negative);
            if let Some(a) = &mut self.audit {
                a.seeds.push((self.state.plane, b, idx));
            }
            return self.grow_cluster(b, set.row, set.col);
        }
        for q in set.quadrants() {
            self.process_set(b, q, fresh)?;
        }
        Ok(())
    }

    fn untested_neighbours(&self, sb: &Subband, i: usize, j: usize) -> Vec<(usize, usize, usize)> {
        NEIGHBOURS
            .iter()
            .filter_map(|&(di, dj)| {
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if !sb.contains(ni, nj) {
                    return None;
                }
                let (ni, nj) = (ni as usize, nj as usize);
                let k = self.state.recon.index(sb, ni, nj);
                (self.state.status[k] == Status::Untested).then_some((ni, nj, k))
            })
            .collect()
    }

    fn grow_cluster(&mut self, b: usize, i: usize, j: usize) -> Result<(), Truncated> {
        let sb = self.bands[b];
        let mut queue = VecDeque::from([(i, j)]);
        while let Some((i, j)) = queue.pop_front() {
            let members = self.untested_neighbours(&sb, i, j);
            if members.is_empty() {
                continue;
            }
            if sb.orientation == Orientation::LL {
                self.simple_dilation(&members, &mut queue)?;
            } else {
                self.weighted_dilation(&sb, &members, &mut queue)?;
            }
        }
        Ok(())
    }

    /// One bit per member in template order; used in LL.
    fn simple_dilation(
        &mut self,
        members: &[(usize, usize, usize)],
        queue: &mut VecDeque<(usize, usize)>,
    ) -> Result<(), Truncated> {
        let thr = self.state.threshold();
        for &(i, j, k) in members {
            if self.code(Model::Significance, self.truth.map(|c| c[k].abs() >= thr))? {
                let negative = self.code(Model::Sign, self.truth.map(|c| c[k] < 0.0))?;
                self.resolve_significant(k, negative);
                queue.push_back((i, j));
            } else {
                self.resolve_insignificant(k);
            }
        }
        Ok(())
    }

    fn degrees(&self, sb: &Subband, members: &[(usize, usize, usize)]) -> Vec<f64> {
        let alphas = &self.alphas[sb.orientation.detail_index().expect("detail band")];
        let status = &self.state.status;
        let sig = |f: usize| status[f] == Status::Significant;
        members
            .iter()
            .map(|&(i, j, _)| {
                let ctx = context_unchecked(&self.state.recon, sb, i, j, ContextMode::Significance(&sig));
                significance_degree(alphas, &ctx)
            })
            .collect()
    }

    fn weighted_dilation(
        &mut self,
        sb: &Subband,
        members: &[(usize, usize, usize)],
        queue: &mut VecDeque<(usize, usize)>,
    ) -> Result<(), Truncated> {
        let n = members.len();
        let w = self.degrees(sb, members);
        let mut desc: Vec<usize> = (0..n).collect();
        desc.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
        let thr = self.state.threshold();
        let truth = self.truth;
        let truth_of = |order: &[usize]| -> Option<Vec<bool>> {
            truth.map(|c| order.iter().map(|&m| c[members[m].2].abs() >= thr).collect())
        };
        let strategy = group::select_strategy(&self.state.stats[n], n);
        if let Some(a) = &mut self.audit {
            a.strategy_counts[usize::from(strategy == Strategy::VlGroupTest)] += 1;
            if let Some(t) = truth_of(&desc) {
                let m = t.iter().filter(|&&s| s).count();
                a.groups.entry(self.state.plane).or_insert([[0; 9]; 9])[n][m] += 1;
                if m == 1 {
                    a.single_groups += 1;
                    a.single_chance += 1.0 / n as f64;
                    a.single_ranked_first += u64::from(t[0]);
                }
            }
        }

        let mut out = Vec::with_capacity(n);
        let (order, result) = match strategy {
            Strategy::ControlDilation => {
                let truth = truth_of(&desc);
                let r = group::control_dilation(&mut self.group_io(members, &desc), n, truth.as_deref(), &mut out);
                (desc, r)
            }
            Strategy::VlGroupTest => {
                let m = self
                    .truth
                    .map(|c| members.iter().filter(|&&(_, _, k)| c[k].abs() >= thr).count());
                match group::vl_prefix(&mut self.group_io(members, &desc), m) {
                    Err(e) => (desc, Err(e)),
                    Ok(vl) => {
                        let order = if vl == Some(VlOrder::Ascending) {
                            let mut asc: Vec<usize> = (0..n).collect();
                            asc.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
                            asc
                        } else {
                            desc
                        };
                        let truth = truth_of(&order);
                        let r = group::vl_members(&mut self.group_io(members, &order), n, vl, truth.as_deref(), &mut out);
                        (order, r)
                    }
                }
            }
        };
        for Outcome { k, significant, negative } in out {
            let (i, j, idx) = members[order[k]];
            if significant {
                self.resolve_significant(idx, negative);
                queue.push_back((i, j));
            } else {
                self.resolve_insignificant(idx);
            }
        }
        let obs = result?;
        self.state.record_group(n, obs.zero, obs.one);
        Ok(())
    }

    fn group_io<'c>(&'c mut self, members: &'c [(usize, usize, usize)], order: &'c [usize]) -> GroupIo<'c, 'a, C> {
        GroupIo {
            coder: self,
            members,
            order,
        }
    }

    fn refinement_pass(&mut self) -> Result<(), Truncated> {
        let n = self.state.plane;
        let thr = self.state.threshold();
        for pos in 0..self.state.lsp.len() {
            let idx = self.state.lsp[pos] as usize;
            if i32::from(self.state.sig_plane[idx]) <= n {
                continue;
            }
            let truth = self.truth.map(|c| ((c[idx].abs() / thr).floor() as u64) & 1 == 1);
            let bit = self.code(Model::Refinement, truth)?;
            self.state.refine(idx, bit);
        }
        Ok(())
    }

    fn audit_plane(&mut self) {
        let Some(audit) = &mut self.audit else {
            return;
        };
        audit.planes_checked += 1;
        let n = self.state.plane;
        let thr = self.state.threshold();
        for (idx, &count) in audit.resolved.iter().enumerate() {
            let status = self.state.status[idx];
            let sig_plane = i32::from(self.state.sig_plane[idx]);
            let ok = match status {
                Status::Untested => false,
                Status::Insignificant => count == 1,
                Status::Significant if sig_plane == n => count == 1,
                Status::Significant => count == 0,
            };
            if !ok {
                audit
                    .violations
                    .push(format!("plane {n}: coefficient {idx} status {status:?} resolved {count} times"));
            }
            if let Some(c) = self.truth {
                let mag = c[idx].abs();
                let sound = match status {
                    Status::Insignificant => mag < thr,
                    Status::Significant if sig_plane == n => mag >= thr && mag < 2.0 * thr,
                    _ => true,
                };
                if !sound {
                    audit
                        .violations
                        .push(format!("plane {n}: coefficient {idx} ({mag}) coded {status:?} wrongly"));
                }
            }
        }
    }
}

struct GroupIo<'c, 'a, C: BitChannel> {
    coder: &'c mut Coder<'a, C>,
    members: &'c [(usize, usize, usize)],
    order: &'c [usize],
}

impl<C: BitChannel> GroupChannel for GroupIo<'_, '_, C> {
    fn decide(&mut self, truth: &dyn Fn() -> bool) -> Result<bool, Truncated> {
        let t = self.coder.truth.is_some().then(truth);
        self.coder.code(Model::Significance, t)
    }

    fn sign(&mut self, k: usize) -> Result<bool, Truncated> {
        let idx = self.members[self.order[k]].2;
        let t = self.coder.truth.map(|c| c[idx] < 0.0);
        self.coder.code(Model::Sign, t)
    }
}
