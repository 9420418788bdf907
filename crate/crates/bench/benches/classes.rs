use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cobord_core::coeff::{make_theory, TheoryKind, TheorySpec};
use cobord_core::fgl::build_fgl;
use cobord_core::kl::{kl_closed, validate_partition, EvalMode, GrassmannContext};
use cobord_core::segre::{segre_closed, segre_residue_oracle, useries_cap, Bundle};
use cobord_core::series::VarAlphabet;

fn theory(kind: TheoryKind, t: u32) -> TheorySpec {
    make_theory(kind, t).expect("valid truncation")
}

fn generic_bundle(t: &TheorySpec, rank: usize) -> Bundle {
    let names: Vec<String> = (1..=rank).map(|i| format!("x{i}")).collect();
    let mut vars: Vec<(&str, i64)> = names.iter().map(|n| (n.as_str(), 1)).collect();
    vars.push(("u", -1));
    let al = VarAlphabet::new(&vars);
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Bundle::from_root_vars(t, &al, useries_cap(t), &refs).expect("generic bundle")
}

fn bench_segre_closed(c: &mut Criterion) {
    let mut group = c.benchmark_group("segre_closed");
    for (label, kind) in [
        ("additive", TheoryKind::Additive),
        ("multiplicative", TheoryKind::Multiplicative),
        ("universal", TheoryKind::UniversalRational),
    ] {
        let t = theory(kind, 4);
        let law = build_fgl(&t).expect("law");
        let bundle = generic_bundle(&t, 2);
        group.bench_with_input(BenchmarkId::new("rank2_T4", label), &(), |b, _| {
            b.iter(|| segre_closed(&law, &bundle, "u").expect("segre series"))
        });
    }
    group.finish();
}

fn bench_segre_oracle(c: &mut Criterion) {
    let t = theory(TheoryKind::Multiplicative, 4);
    let law = build_fgl(&t).expect("law");
    let bundle = generic_bundle(&t, 2);
    c.bench_function("segre_residue_oracle/rank2_m-1_pad1", |b| {
        b.iter(|| segre_residue_oracle(&law, &bundle, -1, 1).expect("oracle"))
    });
}

fn bench_kl_closed(c: &mut Criterion) {
    let mut group = c.benchmark_group("kl_closed");
    for (label, kind) in [
        ("additive", TheoryKind::Additive),
        ("multiplicative", TheoryKind::Multiplicative),
    ] {
        let t = theory(kind, 6);
        let ctx = GrassmannContext::new(&t, 2, 4, EvalMode::Expression).expect("context");
        let lam = validate_partition(&[2, 1], 2, 4).expect("partition");
        group.bench_with_input(BenchmarkId::new("gr24_lambda21", label), &(), |b, _| {
            b.iter(|| kl_closed(&lam, &ctx).expect("class"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_segre_closed, bench_segre_oracle, bench_kl_closed);
criterion_main!(benches);
