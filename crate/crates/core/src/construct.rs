//! From a non-degenerate permutation to a concrete IET with a finite
//! certificate of k-alphabet mixing.

use serde::{Deserialize, Serialize};

use crate::coding::{allowed_blocks, substitute_symbolic, Word, DEFAULT_EXPANSION_BUDGET};
use crate::error::{Error, Result};
use crate::iet::{check_keane, induce_path, induce_step, iet_from_cone, ExactIet, KeaneReport};
use crate::matrix::IntegerMatrix;
use crate::mixing::{alphabet_mixing_check, coverage_certificate, CoverageCertificate, IetLanguage, MixingReport, MixingStatus};
use crate::number::ExactNumber;
use crate::paths::{build_named_path, make_proxy_coprime_after, CoprimalityCertificate, PathKind, DEFAULT_CAP};
use crate::perm::{is_degenerate, is_irreducible, Permutation, ProxyKind};
use crate::rauzy::{path_product, RauzyPath};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructOptions {
    /// Exponent of the first-kind path when smaller than `5g`.
    pub scale_p: u64,
    pub keane_horizon: usize,
    pub mixing_horizon: usize,
    pub length_budget: usize,
    pub seed: ExactNumber,
    pub cap: u64,
    /// Deepest prefix tried when waiting for every k-block to show up in
    /// every return block.
    pub max_prefix: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            scale_p: 3,
            keane_horizon: 10_000,
            mixing_horizon: 500,
            length_budget: 50_000,
            seed: "-1/2+1/2*sqrt5".parse().expect("static seed"),
            cap: DEFAULT_CAP,
            max_prefix: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub input_perm: Permutation,
    pub k: usize,
    pub path: RauzyPath,
    /// Depth of the prefix after which every return block holds every
    /// allowed k-block of the starting IET.
    pub prefix_len: usize,
    /// Path length when the coprime stage ends.
    pub coprime_len: usize,
    pub proxy: Permutation,
    pub proxy_kind: ProxyKind,
    pub coprime_cert: CoprimalityCertificate,
    /// Column sums before the first-kind path.
    pub block_lengths: Vec<u64>,
    pub g: u64,
    pub scale_p: u64,
    /// `true` when `scale_p = 5g`, i.e. the covering argument applies as is.
    pub full_scale: bool,
    pub matrix: IntegerMatrix,
    pub iet: ExactIet,
    pub keane: KeaneReport,
    pub mixing: MixingReport,
    pub coverage: Option<CoverageCertificate>,
}

impl ConstructionReport {
    pub fn succeeded(&self) -> bool {
        self.keane.passed && self.mixing.status == MixingStatus::Verified
    }
}

fn contains_all(block: &[u8], needles: &[Word]) -> bool {
    needles.iter().all(|u| block.windows(u.len()).any(|w| w == u.as_slice()))
}

/// Shortest realized prefix whose return blocks all contain every allowed
/// `k`-block of `t`.
fn covering_prefix(t: &ExactIet, k: usize, max_prefix: usize) -> Result<RauzyPath> {
    let needles: Vec<Word> = allowed_blocks(t, k)?.into_iter().collect();
    let d = t.d();
    let singles: Vec<Word> = (1..=d as u8).map(|a| vec![a]).collect();
    let mut cur = t.clone();
    let mut moves = Vec::new();
    for _ in 0..=max_prefix {
        let exprs = substitute_symbolic(t.perm(), &moves)?;
        let blocks: Vec<Word> = exprs.iter().map(|e| e.expand(&singles, DEFAULT_EXPANSION_BUDGET)).collect::<Result<_>>()?;
        if blocks.iter().all(|b| contains_all(b, &needles)) {
            return Ok(RauzyPath::new(t.perm().clone(), moves));
        }
        let (mv, next, _) = induce_step(&cur)?;
        moves.push(mv);
        cur = next;
    }
    Err(Error::ConstructionFailed(format!("no prefix up to depth {max_prefix} carries every {k}-block in each return block")))
}

/// Runs the whole pipeline and reports, whether or not mixing verified.
pub fn run_construction(pi: &Permutation, k: usize, opts: &ConstructOptions) -> Result<ConstructionReport> {
    let d = pi.d();
    if d < 4 || k == 0 {
        return Err(Error::BadParams("need d ≥ 4 and k ≥ 1".into()));
    }
    if !is_irreducible(pi) {
        return Err(Error::ReducibleInput(pi.to_string()));
    }
    if let Some(wit) = is_degenerate(pi) {
        return Err(Error::BadInput(format!("{pi} is degenerate (bullet {}, j = {})", wit.bullet, wit.j)));
    }
    let start = iet_from_cone(pi, &IntegerMatrix::identity(d), &opts.seed)?;
    let mut path = covering_prefix(&start, k, opts.max_prefix)?;
    let prefix_len = path.len();
    let (after_prefix, prefix_matrix) = path_product(&path)?;

    let pc = make_proxy_coprime_after(&after_prefix, &prefix_matrix, opts.cap)?;
    path.moves.extend(pc.path.moves.iter().copied());
    let coprime_len = path.len();
    let block_lengths = pc.matrix.column_sums();
    let (b2, b1) = (block_lengths[d - 3], block_lengths[d - 2]);
    let g = 2 * b2 * b1;
    let five_g = 5 * g;
    let p = five_g.min(opts.scale_p.max(1));

    let kind = if pc.kind == ProxyKind::QuasiProxy4321 { PathKind::TildeM1Quasi } else { PathKind::TildeM1Proxy };
    let first = build_named_path(kind, [p, p], d, Some(&pc.proxy))?;
    if first.start != pc.end {
        return Err(Error::ConstructionFailed("first-kind path does not start where the coprime stage ends".into()));
    }
    path.moves.extend(first.moves.iter().copied());
    let matrix = pc.matrix.checked_mul(&first.matrix)?;

    let iet = iet_from_cone(pi, &matrix, &opts.seed)?;
    let replay = induce_path(&iet, path.len())?;
    if replay.moves != path.moves || replay.matrix != matrix {
        return Err(Error::ConstructionFailed("induction of the constructed IET does not follow its path".into()));
    }
    let keane = check_keane(&iet, opts.keane_horizon)?;
    let mixing = alphabet_mixing_check(&IetLanguage { iet: &iet }, k, opts.mixing_horizon, opts.length_budget)?;
    let coverage = if p == five_g { Some(coverage_certificate(&block_lengths, g, None)?) } else { None };
    Ok(ConstructionReport {
        input_perm: pi.clone(),
        k,
        path,
        prefix_len,
        coprime_len,
        proxy: pc.proxy,
        proxy_kind: pc.kind,
        coprime_cert: pc.certificate,
        block_lengths,
        g,
        scale_p: p,
        full_scale: p == five_g,
        matrix,
        iet,
        keane,
        mixing,
        coverage,
    })
}

/// [`run_construction`], failing loudly unless Keane and mixing both pass.
pub fn construct_mixing_iet(pi: &Permutation, k: usize, opts: &ConstructOptions) -> Result<ConstructionReport> {
    let r = run_construction(pi, k, opts)?;
    if !r.keane.passed {
        return Err(Error::ConstructionFailed(format!("Keane check failed: {:?}", r.keane.witness)));
    }
    if r.mixing.status != MixingStatus::Verified {
        let shown: Vec<String> =
            r.mixing.failing_pairs.iter().take(5).map(|f| format!("{:?}…{:?} missing {}", f.u, f.v, f.missing)).collect();
        return Err(Error::ConstructionFailed(format!("mixing not verified; {}", shown.join("; "))));
    }
    Ok(r)
}
