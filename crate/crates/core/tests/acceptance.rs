//! End-to-end acceptance criteria. Runs every criterion, prints one
//! PASS/FAIL line each and exits non-zero if any failed.

use std::process::ExitCode;
use std::time::Instant;

use avm_core::abm::{self, SamplingMode, SimConfig, SimState};
use avm_core::experiments::locate_pc_ode;
use avm_core::genfunc::{
    coefficients_from_torus, critical_p, solve_factors, steady_gamma, transform_identity_check, FactorMethod,
    GeneratingPolynomial,
};
use avm_core::graph::stream_rng;
use avm_core::moment_ode::{self, integrate, rhs};
use avm_core::{AklGrid, AnalyticSolution, GenFuncPoint, OdeConfig, OdeMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::log_q_by_characteristics;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn a1_fragmentation_threshold() -> Verdict {
    let base = OdeConfig::new(0.0, OdeMode::PdeMatched, 300.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for kappa in [2.0, 4.0, 6.0] {
        let analytic = critical_p(kappa);
        match locate_pc_ode(&base, kappa) {
            Ok(search) => {
                let mut ok = search.pc.is_some_and(|pc| (pc - analytic).abs() <= 0.05);
                if kappa == 4.0 {
                    ok &= search.coarse.0 <= 0.6 && 0.6 <= search.coarse.1;
                }
                pass &= ok;
                parts.push(format!(
                    "κ={kappa}: pc_ode {} vs {analytic:.4} (coarse bracket [{:.2}, {:.2}], {} probes)",
                    search.pc.map_or("none".into(), |pc| format!("{pc:.4}")),
                    search.coarse.0,
                    search.coarse.1,
                    search.evaluations
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("κ={kappa}: {e}"));
            }
        }
    }
    verdict(pass, parts.join("; "))
}

fn a2_steady_density() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut flagged = Vec::new();
    for p in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let star = steady_gamma(4.0, p).unwrap();
        let run = |mode| integrate(&OdeConfig { sample_interval: 10.0, ..OdeConfig::new(p, mode, 300.0) }, 4.0);
        match (run(OdeMode::PdeMatched), run(OdeMode::Full)) {
            (Ok(matched), Ok(full)) => {
                let (dm, df) = (rel(matched.final_gamma(), star), rel(full.final_gamma(), star));
                pass &= dm <= 0.02 && df <= 0.10;
                if df > 0.02 && df <= 0.10 {
                    flagged.push(format!("{p}"));
                }
                parts.push(format!("p={p}: matched {:.2e}, full {:.2}%", dm, 100.0 * df));
            }
            (a, b) => {
                pass = false;
                parts.push(format!("p={p}: {:?} / {:?}", a.err(), b.err()));
            }
        }
    }
    parts.push(format!("full mode flagged (2-10%) at p = [{}]", flagged.join(", ")));
    verdict(pass, parts.join("; "))
}

fn a3_transform_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_identity: f64 = 0.0;
    let mut worst_round_trip: f64 = 0.0;
    for _ in 0..100 {
        let k_max = 20;
        let g = AklGrid::from_fn(k_max, |k, l| if k < k_max && l < k_max { rng.random_range(0.0..1.0) } else { 0.0 });
        let pt = GenFuncPoint::new(rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), 0.0);
        worst_identity = worst_identity.max(transform_identity_check(&g, pt));
        let back = coefficients_from_torus(&GeneratingPolynomial::new(&g).torus_values(), k_max);
        worst_round_trip = worst_round_trip.max(back.max_abs_diff(&g));
    }
    verdict(
        worst_identity <= 1e-12 && worst_round_trip <= 1e-12,
        format!("max identity residual {worst_identity:.2e}, max round-trip error {worst_round_trip:.2e}"),
    )
}

fn a4_characteristics_solve_pde() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_residual: f64 = 0.0;
    let mut worst_char: f64 = 0.0;
    for p in [0.1, 0.3, 0.5] {
        let s = AnalyticSolution::with_steady_factors(4.0, p).unwrap();
        for _ in 0..100 {
            let pt = GenFuncPoint::new(rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), rng.random_range(0.0..10.0));
            worst_residual = worst_residual.max(s.pde_residual(pt));
        }
        for &(x, y, t) in &[(0.9, 0.8, 2.0), (0.5, 1.0, 10.0), (0.7, 0.6, 5.0)] {
            let oracle = log_q_by_characteristics(4.0, p, s.factors, x, y, t).exp();
            worst_char = worst_char.max((s.eval_q(GenFuncPoint::new(x, y, t)) - oracle).abs());
        }
    }
    verdict(
        worst_residual <= 1e-9 && worst_char <= 1e-8,
        format!("max PDE residual {worst_residual:.2e}, max |Q - characteristics| {worst_char:.2e}"),
    )
}

fn a5_self_consistency() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.1, 0.3, 0.5] {
        let closed = steady_gamma(4.0, p).unwrap();
        match solve_factors(4.0, p, FactorMethod::FixedPoint) {
            Ok(fixed) => {
                let gap = (fixed.factors.gamma - closed).abs();
                let r = AnalyticSolution::with_steady_factors(4.0, p).unwrap().closure_ratios(1e3);
                let spread = (r.alpha - r.beta).abs().max((r.beta - r.gamma).abs()).max((r.alpha - r.gamma).abs());
                pass &= gap <= 1e-8 && spread <= 1e-6;
                parts.push(format!("p={p}: fixed-point gap {gap:.2e} ({} it), ratio spread {spread:.2e}", fixed.iterations));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("p={p}: {e}"));
            }
        }
    }
    verdict(pass, parts.join("; "))
}

fn a6_conservation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_mass, mut worst_degree): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        // a density grid of unit mass with the top two rows and columns empty
        let k_max = 12;
        let mut g = AklGrid::from_fn(k_max, |k, l| if k + 1 < k_max && l + 1 < k_max { rng.random_range(0.0..1.0) } else { 0.0 });
        g.scale(1.0 / g.mass());
        let p = rng.random_range(0.0..=1.0);
        for mode in [OdeMode::Full, OdeMode::PdeMatched] {
            let d = rhs(&g, p, mode).derivative;
            worst_mass = worst_mass.max(d.mass().abs());
            let degree: f64 = d.cells().map(|(k, l, v)| (k + l) as f64 * v).sum();
            worst_degree = worst_degree.max(degree.abs());
        }
    }

    let mut state = SimState::initialize(10_000, 4.0, 6).unwrap();
    let edges = state.edge_count();
    let mut rng_abm = stream_rng(6, 2);
    let mut edges_constant = true;
    for _ in 0..1_000_000 {
        state.step(0.5, SamplingMode::Uniform, &mut rng_abm);
        edges_constant &= state.edge_count() == edges && state.graph().edge_count() == edges;
    }
    let audited = state.audit();

    let mut worst_norm: f64 = 0.0;
    for p in [0.0, 0.1, 0.3, 0.5, 0.8] {
        let s = AnalyticSolution::with_steady_factors(4.0, p).unwrap();
        for t in [0.0, 0.5, 2.0, 10.0, 40.0] {
            let pt = GenFuncPoint::new(1.0, 1.0, t);
            worst_norm = worst_norm.max((s.eval_q(pt) - 1.0).abs()).max((s.eval_q_literal(pt) - 1.0).abs());
        }
    }
    verdict(
        worst_mass <= 1e-12 && worst_degree <= 1e-12 && edges_constant && audited && worst_norm <= 1e-12,
        format!(
            "Σrhs {worst_mass:.2e}, Σ(k+l)rhs {worst_degree:.2e}, edges constant over 1e6 events: {edges_constant}, audit: {audited}, |Q(1,1,t)-1| {worst_norm:.2e}"
        ),
    )
}

fn a7_abm_behaviour() -> Verdict {
    let high = SimConfig { sample_interval: 10.0, ..SimConfig::new(10_000, 4.0, 0.9, 200.0, 7) };
    let low = SimConfig { sample_interval: 10.0, ..SimConfig::new(10_000, 4.0, 0.2, 100.0, 7) };
    let (high, low) = match (abm::run_ensemble(&high, 20), abm::run_ensemble(&low, 20)) {
        (Ok(h), Ok(l)) => (h, l),
        (h, l) => return verdict(false, format!("{:?} / {:?}", h.err(), l.err())),
    };
    let fragmented = high
        .iter()
        .filter(|r| r.state.gamma() == 0.0 && r.state.detect_fragmentation().all_consensus())
        .count();
    let min_low = low
        .iter()
        .map(|r| r.series.value_at_or_before(100.0).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    verdict(
        fragmented == 20 && min_low > 0.3,
        format!("p=0.9: {fragmented}/20 fragmented into consensus components by t=200; p=0.2: min γ(100) = {min_low:.4}"),
    )
}

fn a8_integrator_order() -> Verdict {
    let gamma_at_one = |dt: f64, mode| {
        let cfg = OdeConfig { dt, sample_interval: 1.0, ..OdeConfig::new(0.3, mode, 1.0) };
        moment_ode::integrate(&cfg, 4.0).map(|r| r.final_gamma())
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in [OdeMode::Full, OdeMode::PdeMatched] {
        match (gamma_at_one(0.001, mode), gamma_at_one(0.01, mode), gamma_at_one(0.02, mode)) {
            (Ok(reference), Ok(fine), Ok(coarse)) => {
                let ratio = (coarse - reference).abs() / (fine - reference).abs();
                pass &= ratio >= 12.0;
                parts.push(format!("{}: error ratio {ratio:.2}", mode.as_str()));
            }
            _ => {
                pass = false;
                parts.push(format!("{}: integration failed", mode.as_str()));
            }
        }
    }
    verdict(pass, parts.join("; "))
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("A1", "fragmentation threshold", a1_fragmentation_threshold),
        ("A2", "steady active-link density", a2_steady_density),
        ("A3", "transform layer exactness", a3_transform_exactness),
        ("A4", "characteristics solve the PDE", a4_characteristics_solve_pde),
        ("A5", "self-consistency", a5_self_consistency),
        ("A6", "conservation", a6_conservation),
        ("A7", "ABM behaviour", a7_abm_behaviour),
        ("A8", "integrator order", a8_integrator_order),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{id} {status} {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
