//! Acceptance gate: one PASS/FAIL line per criterion on stderr.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ietlab::billiard::{suspension_data, transversal_iet, LTable};
use ietlab::coding::{hat_blocks, return_blocks, HatKind, Word};
use ietlab::construct::{run_construction, ConstructOptions};
use ietlab::iet::{evaluate, iet_from_cone, induce_path, mat_vec};
use ietlab::mixing::{alphabet_mixing_check, coin_representation, gap_constant, MixingStatus, SubstitutionLanguage};
use ietlab::paths::{
    build_named_path, convention_report, make_cd_prime, make_columns_coprime, make_proxy_coprime, mstar_word,
    printed_mstar, printed_tilde_m1, printed_tilde_m2, resolve_convention, tilde_m1_word, tilde_m2_word, Convention,
    Label, PathKind,
};
use ietlab::perm::{all_permutations, is_degenerate, is_irreducible, ProxyKind};
use ietlab::rauzy::{enumerate_class, find_path, step};
use ietlab::{Error, ExactIet, ExactNumber, IntegerMatrix, Move, Permutation};

/// Criteria whose literal statement cannot hold; the suite requires them to
/// keep failing so a change in behavior is noticed.
const KNOWN_FAILURES: &[(usize, &str)] = &[(
    3,
    "the closed form for M*(s,l) has 0 at (d,1) where every realizing path product has 1",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn perm(s: &str) -> Permutation {
    s.parse().unwrap()
}

fn euclid(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn trial_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| n % k != 0)
}

/// Product of single-step matrices along `moves`, one step at a time.
fn walk(start: &Permutation, moves: &[Move]) -> (Permutation, IntegerMatrix) {
    let mut p = start.clone();
    let mut m = IntegerMatrix::identity(p.d());
    for &mv in moves {
        let (q, s) = step(&p, mv).unwrap();
        m = m.checked_mul(&s).unwrap();
        p = q;
    }
    (p, m)
}

fn random_irreducible(rng: &mut ChaCha8Rng, d: usize) -> Permutation {
    loop {
        let mut img: Vec<usize> = (1..=d).collect();
        for i in (1..d).rev() {
            img.swap(i, rng.gen_range(0..=i));
        }
        let p = Permutation::new(img).unwrap();
        if is_irreducible(&p) {
            return p;
        }
    }
}

fn golden(rng: &mut ChaCha8Rng) -> ExactNumber {
    let phi: ExactNumber = "-1/2+1/2*sqrt5".parse().unwrap();
    &ExactNumber::from_int(rng.gen_range(1..80)) + &phi.mul_int(rng.gen_range(1..80))
}

fn random_moves(rng: &mut ChaCha8Rng, max: usize) -> Vec<Move> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| if rng.gen() { Move::A } else { Move::B }).collect()
}

// ---------------------------------------------------------------- 1

fn criterion_1() -> Outcome {
    // Expected Rauzy diagram of 4321 in display notation; labels a/b and digit
    // strings are read through the resolved convention.
    let display_edges = [
        ("2413", 'b', "2431"),
        ("2413", 'a', "2413"),
        ("2431", 'a', "3241"),
        ("2431", 'b', "2413"),
        ("4321", 'b', "4132"),
        ("4321", 'a', "2431"),
        ("4132", 'b', "4213"),
        ("4132", 'a', "3142"),
        ("3142", 'a', "4132"),
        ("3142", 'b', "3142"),
        ("3241", 'a', "4321"),
        ("3241", 'b', "3241"),
        ("4213", 'b', "4321"),
        ("4213", 'a', "4213"),
    ];
    let c = resolve_convention().unwrap();
    let g = enumerate_class(&perm("4321")).unwrap();
    let expected_vertices: BTreeSet<Permutation> = display_edges.iter().map(|(f, _, _)| c.read(&perm(f))).collect();
    let got_vertices: BTreeSet<Permutation> = g.vertices.iter().cloned().collect();
    let expected_edges: BTreeSet<(Permutation, Move, Permutation)> = display_edges
        .iter()
        .map(|&(f, l, t)| (c.read(&perm(f)), c.letter(if l == 'a' { Label::A } else { Label::B }), c.read(&perm(t))))
        .collect();
    let got_edges: BTreeSet<(Permutation, Move, Permutation)> =
        g.edges.iter().map(|e| (e.from.clone(), e.mv, e.to.clone())).collect();
    let mut out_deg: BTreeMap<&Permutation, usize> = BTreeMap::new();
    for e in &g.edges {
        *out_deg.entry(&e.from).or_default() += 1;
    }
    let degrees_ok = g.vertices.iter().all(|v| out_deg.get(v) == Some(&2));
    // Reachability by plain breadth-first search in both directions.
    let reach = |forward: bool| {
        let mut seen = BTreeSet::from([g.vertices[0].clone()]);
        let mut frontier = vec![g.vertices[0].clone()];
        while let Some(v) = frontier.pop() {
            for e in &g.edges {
                let (a, b) = if forward { (&e.from, &e.to) } else { (&e.to, &e.from) };
                if a == &v && seen.insert(b.clone()) {
                    frontier.push(b.clone());
                }
            }
        }
        seen.len() == g.vertices.len()
    };
    let connected = reach(true) && reach(false);
    let pass = got_vertices.len() == 7 && got_vertices == expected_vertices && got_edges == expected_edges && degrees_ok && connected;
    outcome(pass, format!("{} vertices, edges match the expected diagram: {}, out-degree 2: {degrees_ok}, strongly connected: {connected}", g.vertices.len(), got_edges == expected_edges))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut checked, mut resampled, mut bad) = (0, 0, Vec::new());
    while checked < 200 {
        let d = 4 + checked % 3;
        let p = random_irreducible(&mut rng, d);
        let t = ExactIet::normalized(p, (0..d).map(|_| golden(&mut rng)).collect()).unwrap();
        let n = rng.gen_range(1..=30);
        let r = match induce_path(&t, n) {
            Err(Error::DegenerateCoincidence { .. }) => {
                resampled += 1;
                continue;
            }
            r => r.unwrap(),
        };
        checked += 1;
        let back = mat_vec(&r.matrix, r.iet.lengths());
        let scale = &t.lengths()[0] / &back[0];
        let rescaled = scale.is_positive() && t.lengths().iter().zip(&back).all(|(a, b)| a == &(&scale * b));
        let (end, m) = walk(t.perm(), &r.moves);
        let replay = &end == r.iet.perm() && m == r.matrix;
        // The induced map is the first return of T to [0, scale).
        let mut first_return = true;
        for u in [ExactNumber::from_ratio(1, 7), ExactNumber::from_ratio(5, 11), ExactNumber::from_ratio(9, 10)] {
            let x = &scale * &u;
            let mut y = evaluate(&t, &x).unwrap();
            while y >= scale {
                y = evaluate(&t, &y).unwrap();
            }
            first_return &= y == &scale * &evaluate(&r.iet, &u).unwrap();
        }
        if !(rescaled && replay && first_return) {
            bad.push(format!("{} after {n}: rescale {rescaled} replay {replay} return {first_return}", t.perm()));
        }
    }
    outcome(bad.is_empty(), format!("200 IETs, {resampled} resampled on exact coincidence; failures: {bad:?}"))
}

// ---------------------------------------------------------------- 3

/// The M1 and M2 words in display form, over the letters `a`, `b`.
fn keane_words(m: u64, n: u64) -> (Vec<(Label, u64)>, Vec<(Label, u64)>) {
    use Label::{A, B};
    let first = vec![(A, n), (B, 1), (A, 1), (B, 1), (A, m), (B, 1)];
    let second = vec![(A, 1), (B, m), (A, 1), (B, 3 * n + 2), (A, 1)];
    (first, second)
}

fn m1_display(m: u64, n: u64) -> IntegerMatrix {
    IntegerMatrix::from_rows(vec![vec![1, 1, 0, 0], vec![0, 0, m + 1, m], vec![n + 1, n, n + 1, n + 1], vec![1, 1, 1, 1]]).unwrap()
}

fn m2_display(m: u64, n: u64) -> IntegerMatrix {
    IntegerMatrix::from_rows(vec![vec![1, 1, 1, 1], vec![n + 1, n + 1, n, n + 1], vec![m, m + 1, 0, 0], vec![0, 0, 1, 1]]).unwrap()
}

fn criterion_3() -> Outcome {
    let conforms = |c: &Convention| {
        (0..=4).all(|m| {
            (0..=4).all(|n| {
                let (w1, w2) = keane_words(m, n);
                let (e1, p1) = walk(&c.read(&perm("4213")), &c.translate(&w1));
                let (e2, p2) = walk(&c.read(&perm("2431")), &c.translate(&w2));
                e1 == c.read(&perm("2431")) && p1 == m1_display(m, n) && e2 == c.read(&perm("4213")) && p2 == m2_display(m, n)
            })
        })
    };
    let winners: Vec<Convention> = Convention::ALL.iter().copied().filter(|c| conforms(c)).collect();
    let unique = winners.len() == 1 && convention_report().chosen == winners.first().copied();
    let Some(&c) = winners.first() else {
        return outcome(false, "no convention reproduces M1/M2");
    };

    let mut tilde_checked = 0;
    let mut tilde_bad = Vec::new();
    for d in [5, 6] {
        for sigma in all_permutations(d) {
            let pk = ietlab::perm::proxy_kind(&sigma);
            if pk == ProxyKind::None {
                continue;
            }
            let s2431 = step(&sigma, c.letter(Label::A)).unwrap().0;
            for m in 0..=4 {
                for n in 0..=4 {
                    let (s4213, m2) = walk(&s2431, &c.translate(&tilde_m2_word(pk, d, m, n)));
                    let (end1, m1) = walk(&s4213, &c.translate(&tilde_m1_word(d, m, n)));
                    tilde_checked += 2;
                    if m2 != printed_tilde_m2(pk, d, m, n) {
                        tilde_bad.push(format!("tilde M2 {sigma} ({m},{n})"));
                    }
                    if m1 != printed_tilde_m1(pk, d, m, n) || end1 != s2431 {
                        tilde_bad.push(format!("tilde M1 {sigma} ({m},{n})"));
                    }
                }
            }
        }
    }

    let (mut mstar_checked, mut corner_only, mut elsewhere) = (0, 0, 0);
    for d in [4, 5] {
        for sigma in all_permutations(d).into_iter().filter(|p| p.is_standard() && is_irreducible(p)) {
            let sinv = c.print(&sigma).inverse();
            for s in 1..=3 {
                for l in 1..d {
                    let (end, got) = walk(&sigma, &c.translate(&mstar_word(d, s, l, sinv.at(l))));
                    let printed = printed_mstar(&sinv, s, l);
                    mstar_checked += 1;
                    let diff: Vec<(usize, usize)> =
                        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|&(i, j)| got.get(i, j) != printed.get(i, j)).collect();
                    if end != sigma || diff.iter().any(|&(i, j)| (i, j) != (d - 1, 0)) {
                        elsewhere += 1;
                    } else if !diff.is_empty() {
                        corner_only += 1;
                    }
                }
            }
        }
    }
    let pass = unique && tilde_bad.is_empty() && corner_only == 0 && elsewhere == 0;
    outcome(
        pass,
        format!(
            "conventions reproducing M1/M2: {} (chosen {:?}); tilde: {tilde_checked} products, {} mismatches; \
             M*: {mstar_checked} cases, {corner_only} differ from the closed form only at (d,1), {elsewhere} elsewhere",
            winners.len(),
            c,
            tilde_bad.len()
        ),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let (mut cases, mut bad) = (0u64, Vec::new());
    for c2 in 3..=10u64 {
        for c3 in 2..c2 {
            if euclid(c2, c3) != 1 {
                continue;
            }
            let g = 2 * c2 * c3;
            for m in g..=5 * g * (c2 + c3) - g {
                cases += 1;
                let oracle = (0..=5 * g).any(|a| a * c2 <= m && (m - a * c2) % c3 == 0 && (m - a * c2) / c3 <= 5 * g);
                let ok = match coin_representation(c2, c3, g, m) {
                    Ok((a, b)) => a * c2 + b * c3 == m && a <= 5 * g && b <= 5 * g,
                    Err(_) => false,
                };
                if !(ok && oracle) {
                    bad.push((c2, c3, m, ok, oracle));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{cases} targets; failures: {:?}", &bad[..bad.len().min(5)]))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = 0;
    for i in 0..1000 {
        let p = random_irreducible(&mut rng, 4 + i % 3);
        let (_, m) = walk(&p, &random_moves(&mut rng, 50));
        if m.column_sums().into_iter().fold(0, euclid) != 1 {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("1000 products, {bad} with column-sum gcd ≠ 1"))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut coprime_bad = Vec::new();
    let mut n = 0;
    while n < 100 {
        let c: [u64; 4] = std::array::from_fn(|_| rng.gen_range(1..1000));
        if c.iter().copied().fold(0, euclid) != 1 {
            continue;
        }
        n += 1;
        let ok = make_columns_coprime(c, 1_000_000).is_ok_and(|cert| {
            // The sums are those of c·M2(a, b) in columns 2 and 3.
            let m2 = build_named_path(PathKind::M2, [cert.chosen_a, cert.chosen_b], 4, None).unwrap().matrix;
            let sums: Vec<u64> = (0..4).map(|j| (0..4).map(|i| c[i] * m2.get(i, j)).sum()).collect();
            sums[1] == cert.col2_sum && sums[2] == cert.col3_sum && euclid(sums[1], sums[2]) == 1
        });
        if !ok {
            coprime_bad.push(c);
        }
    }

    let mut prime_bad = Vec::new();
    for i in 0..20 {
        let d = 4 + i % 2;
        let sigma = Permutation::reversal(d);
        let mut moves = random_moves(&mut rng, 25);
        let (end, _) = walk(&sigma, &moves);
        moves.extend(find_path(&end, |q| q == &sigma).unwrap().moves);
        let (back, current) = walk(&sigma, &moves);
        assert_eq!(back, sigma);
        let ok = make_cd_prime(&current, &sigma, 1_000_000).is_ok_and(|r| {
            let (e, m) = walk(&sigma, &r.extension.moves);
            let full = current.checked_mul(&m).unwrap();
            let c = full.column_sums();
            let q = c[d - 1];
            let mut prev = current.column_sums()[d - 1];
            let mut descending = true;
            for (k, s) in r.steps.iter().enumerate() {
                descending &= s.descent < prev || (k == 0 && prev == 1 && s.descent == 1);
                prev = s.descent;
            }
            e == sigma && full == r.matrix && trial_prime(q) && c[..d - 1].iter().all(|x| x % q != 0) && descending
        });
        if !ok {
            prime_bad.push(moves.len());
        }
    }
    let pass = coprime_bad.is_empty() && prime_bad.is_empty();
    outcome(pass, format!("coprime failures {coprime_bad:?}; C_d prime failures {prime_bad:?}"))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let seed: ExactNumber = "-1/2+1/2*sqrt5".parse().unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for (start, d) in [("4321", 4), ("25431", 5)] {
        for p in [2u64, 3] {
            let pi = perm(start);
            let pc = make_proxy_coprime(&pi, 1_000_000).unwrap();
            let kind = if pc.kind == ProxyKind::QuasiProxy4321 { PathKind::TildeM1Quasi } else { PathKind::TildeM1Proxy };
            let first = build_named_path(kind, [p, p], d, Some(&pc.proxy)).unwrap();
            let mut path = pc.path.clone();
            path.moves.extend(first.moves.iter().copied());
            let total = pc.matrix.checked_mul(&first.matrix).unwrap();
            let t = iet_from_cone(&pi, &total, &seed).unwrap();
            let before = return_blocks(&t, pc.path.len()).unwrap();
            let after = return_blocks(&t, path.len()).unwrap();
            let hk = match (d, pc.kind) {
                (4, _) => HatKind::FourLetter,
                (_, ProxyKind::QuasiProxy4321) => HatKind::Quasi,
                _ => HatKind::Proxy,
            };
            let hat = hat_blocks(hk, d, p, p).unwrap();
            let expanded: Vec<Word> = hat.rows.iter().map(|r| r.expand(&before.blocks, 1 << 24).unwrap()).collect();
            let blocks_ok = expanded == after.blocks;

            // Sizes after the coprime stage (second-kind path) and after the
            // first-kind path, on the four designated letters.
            let off = d - 4;
            let b = before.lengths();
            let h = after.lengths();
            let l35 = b[off + 1] >= b[off] && 2 * b[off + 2] >= b[off + 3];
            let l36 = if d == 4 { (0..d).all(|i| h[2] >= h[i]) } else { true };
            let gap = gap_constant(&hat, &b).unwrap();
            pass &= blocks_ok && l35 && l36 && gap.within;
            notes.push(format!(
                "{start} p={p}: blocks {blocks_ok}, size order {l35}, longest third block {l36}, gap {}≤{}",
                gap.empirical_max_gap, gap.c
            ));
        }
    }
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------- 8

/// Forward and backward orbit codings by direct evaluation, from 0 and
/// from every discontinuity.
fn oracle_words(t: &ExactIet, reach: usize) -> Vec<Word> {
    let inv = t.inverse();
    let code = |x: &ExactNumber| t.interval_of(x).unwrap() as u8;
    let forward = |x: &ExactNumber, n: usize| {
        let mut w = Vec::with_capacity(n);
        let mut y = x.clone();
        for _ in 0..n {
            w.push(code(&y));
            y = evaluate(t, &y).unwrap();
        }
        w
    };
    let mut out = vec![forward(&ExactNumber::zero(), reach + 1)];
    for delta in t.discontinuities() {
        let mut back = Vec::with_capacity(reach);
        let mut y = delta.clone();
        for _ in 0..reach {
            y = evaluate(&inv, &y).unwrap();
            back.push(code(&y));
        }
        back.reverse();
        back.extend(forward(&delta, reach + 1));
        out.push(back);
    }
    out
}

fn oracle_keane(t: &ExactIet, horizon: usize) -> bool {
    let mut seen = HashSet::new();
    for delta in t.discontinuities() {
        let mut y = delta;
        for _ in 0..=horizon {
            if !seen.insert(y.clone()) {
                return false;
            }
            y = evaluate(t, &y).unwrap();
        }
    }
    true
}

/// Lengths in `lo..=hi` missing a bridge for some ordered pair of blocks.
fn oracle_missing(words: &[Word], k: usize, lo: usize, hi: usize) -> Vec<usize> {
    let blocks: BTreeSet<Word> = words.iter().flat_map(|w| w.windows(k).map(|x| x.to_vec())).collect();
    let blocks: Vec<Word> = blocks.into_iter().collect();
    let mut missing = BTreeSet::new();
    for u in &blocks {
        for v in &blocks {
            let mut need: BTreeSet<usize> = (lo..=hi).collect();
            for w in words {
                for i in 0..w.len().saturating_sub(k - 1) {
                    if &w[i..i + k] != u.as_slice() {
                        continue;
                    }
                    need.retain(|&n| !(i + n <= w.len() && &w[i + n - k..i + n] == v.as_slice()));
                    if need.is_empty() {
                        break;
                    }
                }
            }
            missing.extend(need);
        }
    }
    missing.into_iter().collect()
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (start, k) in [("4321", 2), ("25431", 1)] {
        let opts = ConstructOptions { scale_p: 3, keane_horizon: 10_000, mixing_horizon: 500, length_budget: 50_000, ..Default::default() };
        let t0 = Instant::now();
        let r = match run_construction(&perm(start), k, &opts) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                notes.push(format!("{start}: {e}"));
                continue;
            }
        };
        let elapsed = t0.elapsed();
        let verified = r.keane.passed && r.mixing.status == MixingStatus::Verified;
        let mut ok = verified && elapsed < Duration::from_secs(300);
        let mut note = format!("{start} k={k}: Keane {} mixing {:?} N={:?} in {elapsed:.1?}", r.keane.passed, r.mixing.status, r.mixing.n);
        if let Some(n) = r.mixing.n {
            let words = oracle_words(&r.iet, n + 500 + 1);
            let gaps = oracle_missing(&words, k, n, n + 500);
            let before = if n > 2 * k { oracle_missing(&words, k, n - 1, n - 1) } else { vec![n - 1] };
            let keane = oracle_keane(&r.iet, 10_000);
            ok &= gaps.is_empty() && !before.is_empty() && keane;
            note += &format!(", oracle: [N,N+500] gaps {}, N-1 missing {}, Keane {keane}", gaps.len(), !before.is_empty());
        }
        pass &= ok;
        notes.push(note);
    }
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let r = alphabet_mixing_check(&SubstitutionLanguage::fibonacci(), 1, 50, 300).unwrap();
    let mut w = String::from("1");
    while w.len() < 4000 {
        w = w.chars().map(|c| if c == '1' { "12" } else { "1" }).collect();
    }
    let word: Word = w.bytes().map(|b| b - b'0').collect();
    let missing = oracle_missing(&[word.clone()], 1, 2, 300);
    let mut longest = 0;
    let mut run = 0;
    for n in 2..=300 {
        run = if missing.contains(&n) { 0 } else { run + 1 };
        longest = longest.max(run);
    }
    let diagnostics_true = !r.failing_pairs.is_empty()
        && r.failing_pairs.iter().all(|f| {
            !word.windows(f.missing).any(|x| x[0] == f.u[0] && x[f.missing - 1] == f.v[0])
        });
    let pass = r.status == MixingStatus::NotVerified && diagnostics_true && longest <= 50;
    outcome(pass, format!("{:?}, {} failing pairs confirmed absent in the word, longest complete run {longest}", r.status, r.failing_pairs.len()))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut n = 0;
    let mut bad = Vec::new();
    while n < 50 {
        let q = |rng: &mut ChaCha8Rng| &golden(rng) / &ExactNumber::from_int(rng.gen_range(10..60));
        let tb = LTable { a: q(&mut rng), b: q(&mut rng), s: q(&mut rng), t: q(&mut rng), cot_theta: q(&mut rng) };
        let c = &tb.cot_theta;
        let l = [&tb.a - &(&(&tb.s + &tb.t) * c), &tb.t * c, tb.b.clone(), &tb.s * c];
        if l.iter().any(|x| !x.is_positive()) {
            continue;
        }
        n += 1;
        let total = &tb.a + &tb.b;
        let iet = transversal_iet(&tb).unwrap();
        let sum_ok = l.iter().cloned().sum::<ExactNumber>() == total
            && iet.lengths().iter().zip(&l).all(|(x, y)| &(x * &total) == y);
        let h = suspension_data(&tb).unwrap();
        let exact_ok = &h.scaled[2] * c == l[3] && [0, 1, 3].iter().all(|&i| &h.scaled[i] * c == &l[1] + &l[3]);
        let cf = c.to_f64();
        let cos = cf / (1.0 + cf * cf).sqrt();
        let tol = 1e-12 * (1.0 + total.to_f64());
        let real_ok = (h.heights[2] * cos - l[3].to_f64()).abs() < tol
            && [0, 1, 3].iter().all(|&i| (h.heights[i] * cos - (l[1].to_f64() + l[3].to_f64())).abs() < tol)
            && h.heights[2] < h.heights[0];
        let round_trip = LTable::from_lengths(&l, c.clone()).is_ok_and(|back| back == tb);
        if !(sum_ok && exact_ok && real_ok && round_trip) {
            bad.push(format!("{tb:?}: sum {sum_ok} exact {exact_ok} real {real_ok} trip {round_trip}"));
        }
    }
    outcome(bad.is_empty(), format!("50 tables; failures {bad:?}"))
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Outcome {
    let mut classes = 0;
    let mut bad = Vec::new();
    for d in [4, 5] {
        let mut done: BTreeSet<Permutation> = BTreeSet::new();
        for p in all_permutations(d) {
            if !is_irreducible(&p) || is_degenerate(&p).is_some() || done.contains(&p) {
                continue;
            }
            let g = enumerate_class(&p).unwrap();
            done.extend(g.vertices.iter().cloned());
            classes += 1;
            let has = g.vertices.iter().any(|v| {
                let tail = v.at(d - 2) == d - 1 && v.at(d - 1) == d - 2 && v.at(d) == 1;
                tail && (v.at(d - 3) == d || v.at(1) == d)
            });
            if !has {
                bad.push(p.to_string());
            }
        }
    }
    outcome(bad.is_empty(), format!("{classes} non-degenerate classes; without a (quasi-)proxy: {bad:?}"))
}

/// Written to stderr directly so the lines survive output capture.
fn report(line: String) {
    use std::io::Write;
    writeln!(std::io::stderr(), "{line}").unwrap();
}

#[test]
fn acceptance() {
    let criteria: [(usize, fn() -> Outcome); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let limits = [1, 30, 10, 60, 10, 60, 120, 600, 5, 5, 120];
    let mut unexpected = Vec::new();
    for ((i, f), limit) in criteria.into_iter().zip(limits) {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let pass = o.pass && in_time;
        report(format!("criterion {i:>2}: {} ({elapsed:.2?}, limit {limit}s) {}", if pass { "PASS" } else { "FAIL" }, o.detail));
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == i);
        if let Some((_, why)) = known {
            report(format!("              known failure: {why}"));
        }
        if pass == known.is_some() {
            unexpected.push(i);
        }
    }
    assert!(unexpected.is_empty(), "criteria with an unexpected outcome: {unexpected:?}");
}
