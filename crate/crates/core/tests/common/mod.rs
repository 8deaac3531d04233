//! Brute-force oracles and randomized checks shared by the integration tests
//! and the acceptance harness. Each `check_*` returns a one-line summary on
//! success and a description of the first counterexample on failure.

#![allow(dead_code)]

use qldpc::channel::{self, DepolarizingParams, PauliKind, RngStream};
use qldpc::code::{gb_construct, load_alist, new_css, write_alist, CirculantSpec, CodeError, CssCode};
use qldpc::gf2::{self, BitVec, SparseBitMatrix};
use qldpc::mp::{Algorithm, DecoderConfig, MpDecoder, Schedule};
use qldpc::osd::Osd0Decoder;
use qldpc::si::{self, SiConfig, SiDecoder, SiResult};
use qldpc::sim::{self, ExperimentSpec, PostProcessing};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn steane_h() -> SparseBitMatrix {
    SparseBitMatrix::from_dense_rows(&[
        [1u8, 0, 1, 0, 1, 0, 1],
        [0, 1, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ])
    .unwrap()
}

pub fn steane() -> CssCode {
    let mut c = new_css(steane_h(), steane_h()).unwrap();
    c.name = "steane".into();
    c
}

/// Stand-in [[126,12]] generalized bicycle code used when the external GB
/// family is not available.
pub fn gb126_standin() -> CssCode {
    let mut c = gb_construct(&CirculantSpec {
        size: 63,
        a_support: vec![0, 1, 3, 7, 26],
        b_support: vec![0, 5, 17, 33, 53],
    })
    .unwrap();
    c.name = "gb126-standin".into();
    c
}

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

// ---------------------------------------------------------------------------
// Random instances

/// Dense random matrix with each entry set with probability `density`.
pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> SparseBitMatrix {
    let supports = (0..rows)
        .map(|_| (0..cols).filter(|_| rng.gen::<f64>() < density).collect())
        .collect();
    SparseBitMatrix::new(rows, cols, supports).unwrap()
}

/// Matrix with `col_weight` distinct random rows per column.
pub fn random_ldpc(rng: &mut impl Rng, rows: usize, cols: usize, col_weight: usize) -> SparseBitMatrix {
    let mut supports = vec![Vec::new(); rows];
    for c in 0..cols {
        for r in index::sample(rng, rows, col_weight) {
            supports[r].push(c);
        }
    }
    SparseBitMatrix::new(rows, cols, supports).unwrap()
}

pub fn random_bits(rng: &mut impl Rng, n: usize, p: f64) -> BitVec {
    BitVec::from_bools(&(0..n).map(|_| rng.gen::<f64>() < p).collect::<Vec<_>>())
}

pub fn random_gb_spec(rng: &mut impl Rng, max_size: usize) -> CirculantSpec {
    let size = rng.gen_range(1..=max_size);
    let pick = |rng: &mut ChaCha8Rng| {
        let w = rng.gen_range(1..=size.min(5));
        let mut v: Vec<usize> = index::sample(rng, size, w).into_vec();
        v.sort_unstable();
        v
    };
    let mut local = ChaCha8Rng::seed_from_u64(rng.gen());
    CirculantSpec {
        size,
        a_support: pick(&mut local),
        b_support: pick(&mut local),
    }
}

/// Small CSS codes for post-processing tests: Steane and random GB codes.
pub fn random_small_code(rng: &mut impl Rng) -> CssCode {
    if rng.gen_bool(0.2) {
        return steane();
    }
    loop {
        let size = rng.gen_range(5..=15);
        let mut local = ChaCha8Rng::seed_from_u64(rng.gen());
        let mut pick = || {
            let mut v: Vec<usize> = index::sample(&mut local, size, 3).into_vec();
            v.sort_unstable();
            v
        };
        let spec = CirculantSpec {
            size,
            a_support: pick(),
            b_support: pick(),
        };
        let code = gb_construct(&spec).unwrap();
        if code.k() > 0 {
            return code;
        }
    }
}

/// Random forest Tanner graph: every check joins one existing bit and 1-3 new
/// bits, so all checks have degree >= 2 and the graph has no cycles.
pub fn random_tree(rng: &mut impl Rng, max_bits: usize) -> SparseBitMatrix {
    let mut n = 1;
    let mut rows: Vec<Vec<usize>> = Vec::new();
    while n < max_bits {
        let fresh = rng.gen_range(1..=3).min(max_bits - n);
        let mut row = vec![rng.gen_range(0..n)];
        row.extend(n..n + fresh);
        n += fresh;
        rows.push(row);
        if rng.gen_bool(0.15) {
            break;
        }
    }
    SparseBitMatrix::new(rows.len(), n, rows).unwrap()
}

// ---------------------------------------------------------------------------
// Brute-force oracles

pub fn row_mask(m: &SparseBitMatrix, r: usize) -> u64 {
    m.row(r).iter().fold(0, |acc, &c| acc | 1 << c)
}

pub fn vec_mask(v: &BitVec) -> u64 {
    v.iter_ones().fold(0, |acc, c| acc | 1 << c)
}

pub fn mask_vec(mask: u64, n: usize) -> BitVec {
    BitVec::from_bools(&(0..n).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
}

/// All 2^rows combinations of the rows of `m` (columns < 64).
pub fn row_span(m: &SparseBitMatrix) -> Vec<u64> {
    let rows: Vec<u64> = (0..m.rows()).map(|r| row_mask(m, r)).collect();
    let mut span: Vec<u64> = (0u64..1 << rows.len())
        .map(|sel| (0..rows.len()).filter(|i| sel >> i & 1 == 1).fold(0, |a, i| a ^ rows[i]))
        .collect();
    span.sort_unstable();
    span.dedup();
    span
}

pub fn bf_rank(m: &SparseBitMatrix) -> usize {
    row_span(m).len().trailing_zeros() as usize
}

pub fn bf_mat_vec(m: &SparseBitMatrix, x: u64) -> u64 {
    (0..m.rows()).fold(0, |acc, r| acc | (((row_mask(m, r) & x).count_ones() as u64) & 1) << r)
}

/// Every `x` with `m x = b`, by enumeration over all 2^cols vectors.
pub fn bf_solutions(m: &SparseBitMatrix, b: u64) -> Vec<u64> {
    (0u64..1 << m.cols()).filter(|&x| bf_mat_vec(m, x) == b).collect()
}

pub fn bf_in_row_space(m: &SparseBitMatrix, v: u64) -> bool {
    row_span(m).binary_search(&v).is_ok()
}

/// Exact bitwise posterior LLRs `ln P(e_i = 0 | s) / P(e_i = 1 | s)` when
/// bit `i` is flipped independently with probability `eps[i]`.
pub fn bf_posteriors(h: &SparseBitMatrix, s: u64, eps: &[f64]) -> Vec<f64> {
    let n = h.cols();
    let mut p0 = vec![0.0; n];
    let mut p1 = vec![0.0; n];
    for x in bf_solutions(h, s) {
        let w: f64 = (0..n)
            .map(|i| if x >> i & 1 == 1 { eps[i] } else { 1.0 - eps[i] })
            .product();
        for i in 0..n {
            if x >> i & 1 == 1 {
                p1[i] += w;
            } else {
                p0[i] += w;
            }
        }
    }
    (0..n).map(|i| (p0[i] / p1[i]).ln()).collect()
}

/// Minimum-cost solution of `h x = s` with cost `Σ_{x_i = 1} cost_i`, or
/// `None` when the minimum is not unique.
pub fn bf_unique_ml(h: &SparseBitMatrix, s: u64, cost: &[f64]) -> Option<u64> {
    let mut best: Vec<(f64, u64)> = bf_solutions(h, s)
        .into_iter()
        .map(|x| ((0..h.cols()).filter(|i| x >> i & 1 == 1).map(|i| cost[i]).sum(), x))
        .collect();
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    match best.as_slice() {
        [only] => Some(only.1),
        [a, b, ..] if b.0 - a.0 > 1e-9 => Some(a.1),
        _ => None,
    }
}

/// Minimum-weight decoder: lowest-weight error with syndrome `s`, ties broken
/// by the smallest integer encoding.
pub fn bf_min_weight(h: &SparseBitMatrix, s: u64) -> u64 {
    bf_solutions(h, s)
        .into_iter()
        .min_by_key(|&x| (x.count_ones(), x))
        .expect("syndrome is reachable")
}

// ---------------------------------------------------------------------------
// Criterion 1: property suite

pub fn check_gf2_oracles(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..cases {
        let rows = rng.gen_range(1..=12);
        let cols = rng.gen_range(1..=12);
        let m_arg0 = rng.gen_range(0.1..0.7);
        let m = random_matrix(&mut rng, rows, cols, m_arg0);
        if gf2::rank(&m) != bf_rank(&m) {
            return Err(format!("case {case}: rank {} vs enumeration {}", gf2::rank(&m), bf_rank(&m)));
        }
        if gf2::rank(&m.transpose()) != bf_rank(&m) {
            return Err(format!("case {case}: rank of transpose differs"));
        }
        let b = random_bits(&mut rng, rows, 0.5);
        let solvable = !bf_solutions(&m, vec_mask(&b)).is_empty();
        match gf2::solve(&m, &b).unwrap() {
            Some(x) if m.mat_vec(&x).unwrap() != b => return Err(format!("case {case}: solve returned a non-solution")),
            Some(_) if !solvable => return Err(format!("case {case}: solve found a solution to an inconsistent system")),
            None if solvable => return Err(format!("case {case}: solve missed a solution")),
            _ => {}
        }
        let v = random_bits(&mut rng, cols, 0.5);
        let in_span = gf2::in_row_space(&m, &v).unwrap();
        if in_span != bf_in_row_space(&m, vec_mask(&v)) {
            return Err(format!("case {case}: in_row_space disagrees with enumeration"));
        }
        let span = row_span(&m);
        let member = mask_vec(span[rng.gen_range(0..span.len())], cols);
        if !gf2::in_row_space(&m, &member).unwrap() {
            return Err(format!("case {case}: row-space element rejected"));
        }
    }
    Ok(format!("{cases} random matrices up to 12x12 agree with enumeration"))
}

pub fn check_alist_roundtrip(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..cases {
        let rows = rng.gen_range(1..=40);
        let cols = rng.gen_range(1..=60);
        let m_arg0 = rng.gen_range(0.0..0.3);
        let m = random_matrix(&mut rng, rows, cols, m_arg0);
        let text = write_alist(&m);
        match load_alist(&text) {
            Ok(back) if back == m => {}
            Ok(_) => return Err(format!("case {case}: round trip changed the matrix")),
            Err(e) => return Err(format!("case {case}: {e}")),
        }
    }
    Ok(format!("{cases} random matrices survive write/load"))
}

pub fn check_css_rejection(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let (mut rejected, mut accepted) = (0, 0);
    for case in 0..cases {
        let n = rng.gen_range(2..=16);
        let hx_arg0 = rng.gen_range(1..=6);
        let hx = random_matrix(&mut rng, hx_arg0, n, 0.4);
        let hz_arg0 = rng.gen_range(1..=6);
        let hz = random_matrix(&mut rng, hz_arg0, n, 0.4);
        let orthogonal = (0..hx.rows()).all(|a| (0..hz.rows()).all(|b| (row_mask(&hx, a) & row_mask(&hz, b)).count_ones().is_multiple_of(2)));
        match (new_css(hx, hz), orthogonal) {
            (Ok(_), true) => accepted += 1,
            (Err(CodeError::NotOrthogonal { .. }), false) => rejected += 1,
            (r, o) => return Err(format!("case {case}: orthogonal={o} but construction gave {:?}", r.map(|c| c.k()))),
        }
    }
    Ok(format!("{rejected} non-orthogonal pairs rejected, {accepted} orthogonal pairs accepted"))
}

pub fn check_gb_orthogonality(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..cases {
        let spec = random_gb_spec(&mut rng, 64);
        let code = gb_construct(&spec).map_err(|e| format!("case {case}: {spec:?}: {e}"))?;
        let prod = code.hx().mul_transpose(code.hz()).unwrap();
        if prod.nnz() != 0 {
            return Err(format!("case {case}: {spec:?} gives H_X H_Z^T != 0"));
        }
        if code.n() != 2 * spec.size {
            return Err(format!("case {case}: wrong length"));
        }
    }
    Ok(format!("{cases} random circulant specs (size <= 64) give orthogonal checks"))
}

pub fn check_osd(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..cases {
        let rows = rng.gen_range(1..=24);
        let cols = rng.gen_range(1..=40);
        let h_arg0 = rng.gen_range(0.05..0.4);
        let h = random_matrix(&mut rng, rows, cols, h_arg0);
        let e_arg0 = rng.gen_range(0.0..0.5);
        let e = random_bits(&mut rng, cols, e_arg0);
        let s = h.mat_vec(&e).unwrap();
        let hard = random_bits(&mut rng, cols, 0.3);
        let soft: Vec<f64> = (0..cols).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let dec = Osd0Decoder::new(&h);
        let (est, sel) = dec
            .decode_with_selection(&s, &hard, &soft)
            .map_err(|err| format!("case {case}: {err}"))?;
        if h.mat_vec(&est).unwrap() != s {
            return Err(format!("case {case}: OSD-0 output violates the syndrome"));
        }
        if sel.basis_cols.len() != gf2::rank(&h) {
            return Err(format!("case {case}: basis size differs from rank"));
        }
        if gf2::rank(&h.submatrix(&(0..rows).collect::<Vec<_>>(), &sel.basis_cols)) != sel.basis_cols.len() {
            return Err(format!("case {case}: basis columns are dependent"));
        }
        if let Some(&c) = sel.complement_cols.iter().find(|&&c| est.get(c) != hard.get(c)) {
            return Err(format!("case {case}: off-basis column {c} changed"));
        }
    }
    Ok(format!("{cases} random instances: syndrome valid, off-basis bits kept"))
}

pub fn check_si_validity(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let (mut invoked, mut rescued) = (0, 0);
    let mut code = steane();
    let mut decoders: Vec<SiDecoder> = Vec::new();
    let configs = [
        (Algorithm::SumProduct, Schedule::Flooding),
        (Algorithm::MinSum, Schedule::Serial),
        (Algorithm::NormalizedMinSum { alpha: 0.75 }, Schedule::Flooding),
    ];
    for case in 0..cases {
        if case % 500 == 0 {
            code = random_small_code(&mut rng);
            decoders = configs
                .iter()
                .map(|(alg, sched)| {
                    let mp = DecoderConfig::new(*alg, sched.clone(), rng.gen_range(1..=6));
                    SiDecoder::new(&code, mp, SiConfig::count(rng.gen_range(1..=4))).unwrap()
                })
                .collect();
        }
        let which = case % configs.len();
        let eps = rng.gen_range(0.02..0.25);
        let e = random_bits(&mut rng, code.n(), eps);
        let s = code.hz().mat_vec(&e).unwrap();
        let priors = channel::a_priori_llrs(code.n(), eps, configs[which].0).unwrap();
        let out = decoders[which].decode(&s, &priors).map_err(|err| format!("case {case}: {err}"))?;
        if !out.initial.converged {
            invoked += 1;
        }
        if let SiResult::Success(est) = &out.result {
            if code.hz().mat_vec(est).unwrap() != s {
                return Err(format!("case {case}: SI success with wrong syndrome on {}", code.name));
            }
            if !out.initial.converged {
                rescued += 1;
            }
        }
    }
    if invoked == 0 {
        return Err("post-processing never ran".into());
    }
    Ok(format!("{cases} decodes, SI ran {invoked} times and succeeded {rescued} times, all syndrome-valid"))
}

pub fn check_delta_bound(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut code = steane();
    for case in 0..cases {
        if case % 200 == 0 {
            code = random_small_code(&mut rng);
        }
        let n = code.n();
        let e_arg0 = rng.gen_range(0.0..0.5);
        let e = random_bits(&mut rng, n, e_arg0);
        let soft: Vec<f64> = (0..n).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let hard = qldpc::mp::hard_decision(&soft);
        let row = rng.gen_range(0..code.m_x());
        let r_x = code.hx().row_vec(row);
        let delta = si::delta_metric(&e, &r_x, &hard, &soft);
        let gamma = si::check_reliability(row, &soft, code.hx()).unwrap();
        if delta.abs() > gamma + 1e-9 {
            return Err(format!("case {case}: |delta| = {} exceeds check reliability {gamma}", delta.abs()));
        }
        let mut e2 = e.clone();
        e2 ^= &r_x;
        let signed: f64 = e.iter_ones().map(|i| soft[i]).sum::<f64>() - e2.iter_ones().map(|i| soft[i]).sum::<f64>();
        if (signed - delta).abs() > 1e-9 {
            return Err(format!("case {case}: signed-sum form {signed} differs from {delta}"));
        }
    }
    Ok(format!("{cases} cases satisfy |delta| <= check reliability and match the signed-sum form"))
}

pub fn check_degeneracy_invariance(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut code = steane();
    for case in 0..cases {
        if case % 50 == 0 {
            code = random_small_code(&mut rng);
        }
        let n = code.n();
        let e = random_bits(&mut rng, n, 0.2);
        let hat = if rng.gen_bool(0.5) { e.clone() } else { random_bits(&mut rng, n, 0.2) };
        let mut g = BitVec::zeros(n);
        for r in 0..code.m_x() {
            if rng.gen_bool(0.5) {
                g ^= &code.hx().row_vec(r);
            }
        }
        let base = sim::is_success(&code, &e, &hat);
        let mut shifted = hat.clone();
        shifted ^= &g;
        let mut e_shifted = e.clone();
        e_shifted ^= &g;
        if sim::is_success(&code, &e, &shifted) != base || sim::is_success(&code, &e_shifted, &hat) != base {
            return Err(format!("case {case}: adding a stabilizer changed the verdict"));
        }
        if hat == e && !base {
            return Err(format!("case {case}: exact estimate judged a failure"));
        }
        if n <= 16 {
            let mut residual = e.clone();
            residual ^= &hat;
            if bf_in_row_space(code.hx(), vec_mask(&residual)) != base {
                return Err(format!("case {case}: verdict disagrees with row-space enumeration"));
            }
        }
    }
    Ok(format!("{cases} cases invariant under stabilizer shifts"))
}

// ---------------------------------------------------------------------------
// Criterion 2: tree exactness

pub fn check_tree_sp(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let h_arg0 = rng.gen_range(3..=12);
        let h = random_tree(&mut rng, h_arg0);
        let n = h.cols();
        let eps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..0.45)).collect();
        let priors: Vec<f64> = eps.iter().map(|p| ((1.0 - p) / p).ln()).collect();
        let e = BitVec::from_bools(&eps.iter().map(|&p| rng.gen::<f64>() < p).collect::<Vec<_>>());
        let s = h.mat_vec(&e).unwrap();
        let exact = bf_posteriors(&h, vec_mask(&s), &eps);
        let cfg = DecoderConfig::new(Algorithm::SumProduct, Schedule::Flooding, 2 * n);
        let out = MpDecoder::new(&h, cfg).unwrap().decode_fixed(&s, &priors, 2 * n).unwrap();
        for i in 0..n {
            let diff = (out.soft[i] - exact[i]).abs();
            worst = worst.max(diff);
            if diff > 1e-9 {
                return Err(format!("case {case}: bit {i} soft {} vs posterior {}", out.soft[i], exact[i]));
            }
        }
    }
    Ok(format!("{cases} acyclic graphs, max |SP - posterior| = {worst:.2e}"))
}

pub fn check_tree_ms(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut compared = 0;
    for case in 0..cases {
        let h_arg0 = rng.gen_range(3..=12);
        let h = random_tree(&mut rng, h_arg0);
        let n = h.cols();
        let priors: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
        let e = random_bits(&mut rng, n, 0.3);
        let s = h.mat_vec(&e).unwrap();
        let Some(ml) = bf_unique_ml(&h, vec_mask(&s), &priors) else {
            continue;
        };
        compared += 1;
        let cfg = DecoderConfig::new(Algorithm::MinSum, Schedule::Flooding, 2 * n);
        let out = MpDecoder::new(&h, cfg).unwrap().decode_fixed(&s, &priors, 2 * n).unwrap();
        if vec_mask(&out.hard) != ml {
            return Err(format!("case {case}: MS gives {} but ML is {}", out.hard, mask_vec(ml, n)));
        }
    }
    Ok(format!("{compared} acyclic instances with a unique ML solution match MS"))
}

// ---------------------------------------------------------------------------
// Criterion 3: schedule equivalence

fn compare_serial_layered(h: &SparseBitMatrix, syndromes: usize, rng: &mut ChaCha8Rng, label: &str) -> Check {
    let singletons: Vec<Vec<usize>> = (0..h.rows()).map(|r| vec![r]).collect();
    for alg in [
        Algorithm::SumProduct,
        Algorithm::MinSum,
        Algorithm::NormalizedMinSum { alpha: 0.625 },
    ] {
        let serial = MpDecoder::new(h, DecoderConfig::new(alg, Schedule::Serial, 12)).unwrap();
        let layered = MpDecoder::new(h, DecoderConfig::new(alg, Schedule::Layered(singletons.clone()), 12)).unwrap();
        for case in 0..syndromes {
            let eps = rng.gen_range(0.01..0.3);
            let e = random_bits(rng, h.cols(), eps);
            let s = h.mat_vec(&e).unwrap();
            let priors = match alg {
                Algorithm::SumProduct => vec![((1.0 - eps) / eps).ln(); h.cols()],
                _ => vec![1.0; h.cols()],
            };
            let a = serial.decode(&s, &priors).unwrap();
            let b = layered.decode(&s, &priors).unwrap();
            let same_bits = a.soft.iter().zip(b.soft.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
            if !same_bits || a.hard != b.hard || a.converged != b.converged || a.iterations != b.iterations {
                return Err(format!("{label}, {}: syndrome {case} decodes differently", alg.tag()));
            }
        }
    }
    Ok(format!("{label}: {syndromes} syndromes x 3 algorithms bit-exact"))
}

pub fn check_schedule_equivalence(syndromes: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let a = compare_serial_layered(&steane_h(), syndromes, &mut rng, "Steane")?;
    let h = random_ldpc(&mut rng, 20, 40, 3);
    let b = compare_serial_layered(&h, syndromes, &mut rng, "random 20x40")?;
    Ok(format!("{a}; {b}"))
}

// ---------------------------------------------------------------------------
// Criterion 4: Steane sanity

/// Weight-1 errors that SP and MS, flooding and serial, fail to recover
/// exactly within 8 iterations.
pub fn steane_weight_one_misses(eps: f64) -> Vec<String> {
    let h = steane_h();
    let mut misses = Vec::new();
    for alg in [Algorithm::SumProduct, Algorithm::MinSum] {
        for sched in [Schedule::Flooding, Schedule::Serial] {
            let label = format!("{}/{}", alg.tag(), sched.tag());
            let dec = MpDecoder::new(&h, DecoderConfig::new(alg, sched, 8)).unwrap();
            let priors = channel::a_priori_llrs(7, eps, alg).unwrap();
            for bit in 0..7 {
                let e = BitVec::from_indices(7, &[bit]);
                let out = dec.decode(&h.mat_vec(&e).unwrap(), &priors).unwrap();
                if !out.converged || out.hard != e {
                    misses.push(format!(
                        "{label} bit {bit} -> {} ({}, {} it)",
                        out.hard,
                        if out.converged { "converged" } else { "not converged" },
                        out.iterations
                    ));
                }
            }
        }
    }
    misses
}

/// Logical error rate of plain message passing on Steane at flip probability
/// `eps`, next to the minimum-weight decoder on the same samples.
pub struct SteaneLer {
    pub label: String,
    pub ler: f64,
    pub oracle_ler: f64,
}

pub fn steane_ler(eps: f64, trials: u64, seed: u64) -> Vec<SteaneLer> {
    let code = steane();
    let h = steane_h();
    let errors: Vec<BitVec> = (0..trials)
        .map(|t| channel::sample_x_error(7, eps, &mut RngStream::new(seed, t).rng()))
        .collect();
    let oracle_errors = errors
        .iter()
        .filter(|e| {
            let hat = mask_vec(bf_min_weight(&h, vec_mask(&h.mat_vec(e).unwrap())), 7);
            !sim::is_success(&code, e, &hat)
        })
        .count();
    let oracle_ler = oracle_errors as f64 / trials as f64;
    let mut out = Vec::new();
    for alg in [Algorithm::SumProduct, Algorithm::MinSum] {
        for sched in [Schedule::Flooding, Schedule::Serial] {
            let dec = MpDecoder::new(&h, DecoderConfig::new(alg, sched.clone(), 8)).unwrap();
            let priors = channel::a_priori_llrs(7, eps, alg).unwrap();
            let fails = errors
                .iter()
                .filter(|e| {
                    let d = dec.decode(&h.mat_vec(e).unwrap(), &priors).unwrap();
                    !d.converged || !sim::is_success(&code, e, &d.hard)
                })
                .count();
            out.push(SteaneLer {
                label: format!("{}/{}", alg.tag(), sched.tag()),
                ler: fails as f64 / trials as f64,
                oracle_ler,
            });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Criterion 9: determinism

pub fn determinism_spec(post: PostProcessing, trials: u64) -> ExperimentSpec {
    ExperimentSpec {
        code: String::new(),
        p: vec![0.02, 0.06, 0.1],
        decoder: DecoderConfig::new(Algorithm::NormalizedMinSum { alpha: 0.9 }, Schedule::Serial, 20),
        post,
        trials,
        seed: 2024,
        stop_after_errors: Some(40),
    }
}

pub fn check_determinism(code: &CssCode, post: PostProcessing, trials: u64, threads: &[usize]) -> Check {
    let spec = determinism_spec(post, trials);
    let mut reference: Option<String> = None;
    for &t in threads {
        let csv = sim::with_threads(t, || sim::run_experiment_on(code, &spec))
            .map_err(|e| e.to_string())?
            .map_err(|e| e.to_string())?
            .to_csv();
        match &reference {
            None => reference = Some(csv),
            Some(r) if *r != csv => return Err(format!("{}: CSV differs between thread counts", code.name)),
            Some(_) => {}
        }
    }
    Ok(format!("{} with {}: identical CSV for {:?} workers", code.name, post.tag(), threads))
}

pub fn eps_of(p: f64) -> f64 {
    channel::marginal_flip_prob(&DepolarizingParams::uniform(p).unwrap(), PauliKind::X)
}
