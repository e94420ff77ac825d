//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`)
//! and enforcing its runtime budget.

use std::process::Command;
use std::time::Instant;

use num::rational::BigRational;
use num::{One, Zero};

use graphspace::dyadic::{DyadicValue, Tail};
use graphspace::expectations::{
    change_of_variables, mc_expect, norm1_moments, normx_expect, psi_k_expect, psi_k_series,
    Statistic, TransferFn,
};
use graphspace::graph::{atoms_at_depth, BallKind, CylinderSet, GraphRepr};
use graphspace::harmonic::{gram_check, walsh_table, wht_forward, wht_integer, wht_inverse, FiniteSupportMeasure};
use graphspace::measures::{
    ball_measure_haar, cylinder_measure, parse_rational, ProbabilityAssignment,
};
use graphspace::metrics::{
    heart2_exact, heart2_inv, norm1_atom, product_atom, MultWeightSequence, PreimageBranch,
    WeightSequence,
};
use graphspace::rng::draw;

fn report(criterion: u32, name: &str, started: Instant, budget_secs: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("[acceptance] criterion {criterion} ({name}): PASS ({elapsed:.2}s)");
    assert!(
        elapsed < budget_secs,
        "criterion {criterion} exceeded its {budget_secs}s budget: {elapsed:.2}s"
    );
}

/// Per-atom product-measure masses at a given depth, indexed by edge mask.
fn atom_masses(p: &ProbabilityAssignment, depth: u32) -> Vec<BigRational> {
    let n = 1usize << depth;
    let mut masses = vec![BigRational::one(); n];
    // absent-edge base mass
    for k in 1..=depth as u64 {
        let q = BigRational::one() - p.p(k);
        masses[0] *= q;
    }
    for mask in 1..n {
        let low = mask & (mask - 1);
        let bit = (mask ^ low).trailing_zeros() as u64 + 1;
        let pk = p.p(bit);
        let qk = BigRational::one() - &pk;
        if qk.is_zero() {
            // recompute from scratch for degenerate entries
            let mut m = BigRational::one();
            for k in 1..=depth as u64 {
                let pk = p.p(k);
                m *= if mask >> (k - 1) & 1 == 1 {
                    pk
                } else {
                    BigRational::one() - pk
                };
            }
            masses[mask] = m;
        } else {
            masses[mask] = &masses[low] * pk / qk;
        }
    }
    masses
}

#[test]
fn criterion_01_cylinder_measure_exactness() {
    let started = Instant::now();
    let depth = 12u32;
    let ps: Vec<ProbabilityAssignment> = ["1/2", "3/10", "9/10"]
        .iter()
        .map(|s| ProbabilityAssignment::constant(parse_rational(s).unwrap()).unwrap())
        .collect();
    let tables: Vec<Vec<BigRational>> = ps.iter().map(|p| atom_masses(p, depth)).collect();
    for trial in 0..1000u64 {
        let mut forbidden = Vec::new();
        let mut required = Vec::new();
        let word = draw(0xC1, trial, 0);
        for k in 1..=12u64 {
            match word >> (2 * (k - 1)) & 3 {
                1 => forbidden.push(k),
                2 => required.push(k),
                _ => {}
            }
        }
        let f_mask: usize = forbidden.iter().map(|&k| 1usize << (k - 1)).sum();
        let r_mask: usize = required.iter().map(|&k| 1usize << (k - 1)).sum();
        let cyl = CylinderSet::new(forbidden, required).unwrap();
        for (p, table) in ps.iter().zip(&tables) {
            let exact = cylinder_measure(&cyl, p);
            let mut brute = BigRational::zero();
            for mask in 0..(1usize << depth) {
                if mask & f_mask == 0 && mask & r_mask == r_mask {
                    brute += &table[mask];
                }
            }
            assert_eq!(exact, brute, "trial {trial}");
        }
    }
    report(1, "cylinder measure exactness", started, 10.0);
}

#[test]
fn criterion_02_ball_measure_is_radius() {
    let started = Instant::now();
    for trial in 0..1000u64 {
        // random dyadic radius with <= 20 bits, nonzero
        let bits_word = draw(0xB2, trial, 0);
        let nbits = (draw(0xB2, trial, 1) % 20 + 1) as usize;
        let mut bits: Vec<bool> = (0..nbits).map(|i| bits_word >> i & 1 == 1).collect();
        if bits.iter().all(|&b| !b) {
            bits[nbits - 1] = true;
        }
        let radius = DyadicValue::new(bits, Tail::Zeros);
        // random center
        let center_word = draw(0xB2, trial, 2);
        let center = GraphRepr::finite((1..=24u64).filter(|k| center_word >> (k - 1) & 1 == 1));
        for kind in [BallKind::Open, BallKind::Closed] {
            let m = ball_measure_haar(&center, &radius, kind).unwrap();
            assert_eq!(m, radius.to_rational(), "trial {trial}");
        }
    }
    report(2, "ball measure equals radius", started, 5.0);
}

#[test]
fn criterion_03_psi_k_expectation() {
    let started = Instant::now();
    for &(k, p_str, p) in &[
        (1u32, "3/10", 0.3f64),
        (1, "1/2", 0.5),
        (1, "4/5", 0.8),
        (2, "3/10", 0.3),
        (2, "1/2", 0.5),
        (2, "4/5", 0.8),
        (3, "3/10", 0.3),
        (3, "1/2", 0.5),
        (3, "4/5", 0.8),
    ] {
        let assignment =
            ProbabilityAssignment::constant(parse_rational(p_str).unwrap()).unwrap();
        let closed = psi_k_expect(k, p).unwrap();
        assert!((psi_k_series(k, p, 4000) - closed).abs() < 1e-6);
        for seed in 1..=5u64 {
            let est = mc_expect(
                |atom| Statistic::PsiK { k }.eval(atom),
                &assignment,
                64,
                seed,
                200_000,
            )
            .unwrap();
            assert!(
                est.agrees_4sigma(closed),
                "k={k} p={p} seed={seed}: mean {} se {}",
                est.mean,
                est.std_error
            );
        }
    }
    report(3, "psi_k expectation k/p", started, 60.0);
}

#[test]
fn criterion_04_change_of_variables() {
    let started = Instant::now();
    let cases = [
        TransferFn::Identity,
        TransferFn::Square,
        TransferFn::Indicator { lo: 0.2, hi: 0.7 },
        TransferFn::NegFloorLog2,
    ];
    for (i, f) in cases.iter().enumerate() {
        let r = change_of_variables(f, 64, 40 + i as u64, 200_000).unwrap();
        assert!(
            r.graph_side.agrees_4sigma(r.interval_side),
            "{f:?}: graph {} vs interval {} (se {})",
            r.graph_side.mean,
            r.interval_side,
            r.graph_side.std_error
        );
        if matches!(f, TransferFn::NegFloorLog2) {
            assert!((r.interval_side - 2.0).abs() < 1e-12);
            assert!(r.graph_side.agrees_4sigma(2.0));
        }
    }
    // dyadic-breakpoint indicator: exact cylinder path, zero tolerance
    let exact = change_of_variables(
        &TransferFn::Indicator { lo: 0.25, hi: 0.75 },
        64,
        44,
        50_000,
    )
    .unwrap();
    assert_eq!(exact.exact_equal, Some(true));
    report(4, "change of variables", started, 60.0);
}

#[test]
fn criterion_05_walsh_orthonormality_parseval() {
    let started = Instant::now();
    // depth 8: the integer transform of each character row yields all 256
    // inner products against every character at once — exactly n*delta.
    let depth = 8u32;
    let n = 1usize << depth;
    let table = walsh_table(depth).unwrap();
    for e in 0..n {
        let row: Vec<i64> = table[e].iter().map(|&v| v as i64).collect();
        let spec = wht_integer(&row, depth).unwrap();
        for (idx, &c) in spec.iter().enumerate() {
            assert_eq!(c, if idx == e { n as i64 } else { 0 });
        }
    }
    // roundtrip and Parseval on 20 random depth-10 functions
    let d10 = 10u32;
    let m = 1usize << d10;
    for trial in 0..20u64 {
        let values: Vec<f64> = (0..m as u64)
            .map(|i| (draw(0x55 + trial, i, 0) as f64 / u64::MAX as f64) * 2.0 - 1.0)
            .collect();
        let spec = wht_forward(&values, d10).unwrap();
        let back = wht_inverse(&spec).unwrap();
        let max_err = values
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1e-12, "roundtrip error {max_err}");
        let lhs: f64 = values.iter().map(|v| v * v).sum::<f64>() / m as f64;
        let rhs: f64 = spec.coeffs.iter().map(|c| c * c).sum();
        assert!((lhs - rhs).abs() <= 1e-12, "parseval {lhs} vs {rhs}");
    }
    report(5, "Walsh orthonormality and Parseval", started, 30.0);
}

fn random_graph(seed: u64, trial: u64, salt: u64, max_index: u64) -> GraphRepr {
    let word = draw(seed, trial, salt);
    GraphRepr::finite((1..=max_index).filter(|k| word >> (k - 1) & 1 == 1))
}

#[test]
fn criterion_06_bochner_positive_definiteness() {
    let started = Instant::now();
    for trial in 0..100u64 {
        // random finite-support measure: 2-6 distinct graphs, weights
        // normalized from positive draws
        let size = (draw(0x60, trial, 0) % 5 + 2) as usize;
        let mut support = Vec::new();
        let mut salt = 1u64;
        while support.len() < size {
            let g = random_graph(0x61, trial, salt, 10);
            salt += 1;
            if !support.contains(&g) {
                support.push(g);
            }
        }
        // dyadic weights k_i / 2^20 with sum_i k_i = 2^20: every addend is
        // a multiple of 2^-20, so the f64 sum (and f(0)) is exactly 1
        let scale = 1u64 << 20;
        let raw: Vec<u64> = (0..size as u64)
            .map(|i| draw(0x62, trial, i) % 1000 + 1)
            .collect();
        let total: u64 = raw.iter().sum();
        let mut ks: Vec<u64> = raw.iter().map(|&r| r * scale / total).collect();
        let assigned: u64 = ks.iter().sum();
        ks[0] += scale - assigned;
        let weights: Vec<f64> = ks.iter().map(|&k| k as f64 / scale as f64).collect();
        let mu = FiniteSupportMeasure::new(support, weights).unwrap();
        let f = mu.synthesize();
        assert_eq!(f.eval(&GraphRepr::zero()), 1.0, "f(0) must be exactly 1");
        let points: Vec<GraphRepr> = (0..50u64)
            .map(|j| random_graph(0x63, trial, j, 12))
            .collect();
        for g in &points {
            assert!(f.eval(g).abs() <= 1.0 + 1e-12);
        }
        let rep = gram_check(&f, &points, 1e-9);
        assert!(rep.psd, "trial {trial}: min eigenvalue {}", rep.min_eigenvalue);
    }
    report(6, "Bochner positive definiteness", started, 60.0);
}

/// Atom-set of a cylinder at a given depth (indices above the cylinder's
/// range are unconstrained).
fn cyl_atoms(cyl: &CylinderSet, depth: u32) -> Vec<u64> {
    atoms_at_depth(depth)
        .unwrap()
        .enumerate()
        .filter(|(_, a)| a.satisfies(cyl))
        .map(|(i, _)| i as u64)
        .collect()
}

/// Generic (measure-one) atom membership in a dyadic ball: agreement with
/// the center on the first `m` coordinates where the radius is `2^-m`.
/// A closed radius-zero ball pins every coordinate, so no truncated atom
/// is generically inside.
fn ball_atoms(ball: &graphspace::graph::Ball, depth: u32) -> Vec<u64> {
    if ball.radius.is_zero() {
        return Vec::new();
    }
    let m = if ball.radius.is_one() {
        0u64
    } else {
        // canonical dyadic 2^-m: single set bit in last position
        let bits = ball.radius.bits();
        assert!(bits.iter().filter(|&&b| b).count() == 1 && *bits.last().unwrap());
        bits.len() as u64
    };
    assert!(m <= depth as u64, "ball radius finer than atom depth");
    (0..(1u64 << depth))
        .filter(|mask| {
            (1..=m).all(|k| (mask >> (k - 1) & 1 == 1) == ball.center.contains_edge(k))
        })
        .collect()
}

#[test]
fn criterion_07_cylinder_algebra() {
    let started = Instant::now();
    let depth = 8u32;
    for trial in 0..500u64 {
        let mut cyls = Vec::new();
        for which in 0..2u64 {
            let word = draw(0x70, trial, which);
            let mut forbidden = Vec::new();
            let mut required = Vec::new();
            for k in 1..=8u64 {
                match word >> (2 * (k - 1)) & 3 {
                    1 => forbidden.push(k),
                    2 => required.push(k),
                    _ => {}
                }
            }
            cyls.push(CylinderSet::new(forbidden, required).unwrap());
        }
        let (a, b) = (&cyls[0], &cyls[1]);
        let atoms_a = cyl_atoms(a, depth);
        let atoms_b = cyl_atoms(b, depth);

        // intersection
        let both: Vec<u64> = atoms_a
            .iter()
            .copied()
            .filter(|m| atoms_b.contains(m))
            .collect();
        match a.intersect(b) {
            Some(c) => assert_eq!(cyl_atoms(&c, depth), both, "trial {trial} intersect"),
            None => assert!(both.is_empty(), "trial {trial} empty intersect"),
        }

        // translation
        let g = random_graph(0x71, trial, 0, 8);
        let g_mask: u64 = g.support().iter().map(|&k| 1u64 << (k - 1)).sum();
        let mut translated: Vec<u64> = atoms_a.iter().map(|m| m ^ g_mask).collect();
        translated.sort_unstable();
        assert_eq!(cyl_atoms(&a.translate(&g), depth), translated, "trial {trial} translate");

        // graph form: E(I0,I1) = E(I0 u I1, 0) + I1
        let (base, shift) = a.to_graph_form();
        let shift_mask: u64 = shift.support().iter().map(|&k| 1u64 << (k - 1)).sum();
        let mut shifted: Vec<u64> = cyl_atoms(&base, depth).iter().map(|m| m ^ shift_mask).collect();
        shifted.sort_unstable();
        assert_eq!(shifted, atoms_a, "trial {trial} graph form");

        // ball decomposition, both kinds; closed balls have radius
        // 2^-(n+1) so the oracle runs one level deeper
        for kind in [BallKind::Open, BallKind::Closed] {
            let check_depth = depth + 1;
            let deep_atoms = cyl_atoms(a, check_depth);
            let mut union: Vec<u64> = a
                .to_balls(kind)
                .unwrap()
                .iter()
                .flat_map(|b| ball_atoms(b, check_depth))
                .collect();
            union.sort_unstable();
            union.dedup();
            assert_eq!(union, deep_atoms, "trial {trial} balls {kind:?}");
        }
    }
    report(7, "cylinder algebra vs atom semantics", started, 10.0);
}

#[test]
fn criterion_08_norm_moments() {
    let started = Instant::now();
    let phi = WeightSequence::geometric(2.0).unwrap();
    for &(p_str, p) in &[("3/10", 0.3f64), ("1/2", 0.5)] {
        let assignment =
            ProbabilityAssignment::constant(parse_rational(p_str).unwrap()).unwrap();
        let target_mean = p; // p * total(geometric 2) = p * 1
        let target_var = p * (1.0 - p) / 3.0;
        let moments = norm1_moments(&phi, &assignment);
        assert!((moments.mean - target_mean).abs() < 1e-12);
        assert!((moments.variance - target_var).abs() < 1e-12);
        let est = mc_expect(
            |atom| Some(norm1_atom(atom, &phi)),
            &assignment,
            64,
            81,
            200_000,
        )
        .unwrap();
        assert!(est.agrees_4sigma(target_mean), "mean p={p}");
        let var_est = mc_expect(
            |atom| {
                let x = norm1_atom(atom, &phi) - target_mean;
                Some(x * x)
            },
            &assignment,
            64,
            82,
            200_000,
        )
        .unwrap();
        assert!(var_est.agrees_4sigma(target_var), "variance p={p}");

        // multiplicative product formula for phi(n) = 1 + 2^-n
        let mphi = MultWeightSequence::one_plus_geometric(2.0, 1.0).unwrap();
        let closed = normx_expect(&mphi, p).value + 1.0;
        let prod_est = mc_expect(
            |atom| Some(product_atom(atom, &mphi)),
            &assignment,
            64,
            83,
            200_000,
        )
        .unwrap();
        assert!(
            prod_est.agrees_4sigma(closed),
            "product p={p}: {} vs {closed} (se {})",
            prod_est.mean,
            prod_est.std_error
        );
    }
    report(8, "norm moments", started, 60.0);
}

#[test]
fn criterion_09_dyadic_collision() {
    let started = Instant::now();
    for trial in 0..500u64 {
        let mut g = random_graph(0x90, trial, 0, 40);
        if g.is_zero() {
            g = GraphRepr::finite([1 + trial % 40]);
        }
        let dual = g.dual().expect("finite nonempty graph has a co-finite partner");
        let value = heart2_exact(&g);
        let dual_value = heart2_exact(&dual);
        assert_eq!(value.to_rational(), dual_value.to_rational(), "trial {trial}");
        // branch roundtrips
        assert_eq!(heart2_inv(&value, PreimageBranch::Finite).unwrap(), g);
        assert_eq!(heart2_inv(&value, PreimageBranch::CoFinite).unwrap(), dual);
        assert_eq!(heart2_inv(&dual_value, PreimageBranch::Finite).unwrap(), g);
        assert_eq!(heart2_inv(&dual_value, PreimageBranch::CoFinite).unwrap(), dual);
    }
    report(9, "dyadic collision and branches", started, 5.0);
}

fn run_pipeline(threads: &str, dir: &std::path::Path) -> (Vec<u8>, Vec<u8>) {
    let exe = env!("CARGO_BIN_EXE_graphspace");
    let batch = dir.join(format!("batch-{threads}.bin"));
    let mut stdout = Vec::new();
    let out = Command::new(exe)
        .args([
            "sample", "--p", "1/2", "--depth", "16", "--count", "2000",
            "--seed", "7", "--out", batch.to_str().unwrap(),
        ])
        .env("GRAPHSPACE_THREADS", threads)
        .output()
        .unwrap();
    assert!(out.status.success());
    // strip the --out path (differs per worker setting) before comparing
    let summary = String::from_utf8(out.stdout).unwrap();
    stdout.extend(summary.replace(batch.to_str().unwrap(), "BATCH").into_bytes());
    for args in [
        vec!["expect", "--stat", "psi_k", "--k", "2", "--p", "1/2",
             "--count", "50000", "--seed", "3"],
        vec!["transfer", "--f", "identity", "--count", "50000", "--seed", "5"],
    ] {
        let out = Command::new(exe)
            .args(&args)
            .env("GRAPHSPACE_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        stdout.extend(out.stdout);
    }
    (stdout, std::fs::read(batch).unwrap())
}

#[test]
fn criterion_10_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (out_1a, batch_1a) = run_pipeline("1", dir.path());
    let (out_1b, batch_1b) = run_pipeline("1", dir.path());
    let (out_8a, batch_8a) = run_pipeline("8", dir.path());
    assert_eq!(out_1a, out_1b, "two runs must be bit-identical");
    assert_eq!(batch_1a, batch_1b);
    assert_eq!(out_1a, out_8a, "thread count must not change results");
    assert_eq!(batch_1a, batch_8a);
    report(10, "seeded pipeline determinism", started, 30.0);
}
