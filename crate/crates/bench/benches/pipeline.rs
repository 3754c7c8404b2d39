use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sessionize::ingest::{emit_schedule, read_schedule_text};
use sessionize::metrics::homogeneity_completeness;
use sessionize::similarity::{build_tfidf, kmeans, TextFields};
use sessionize::{Instance, Schedule, Session};
use sessionize_bench::corpus;

fn tfidf(c: &mut Criterion) {
    let mut group = c.benchmark_group("tfidf");
    for n in [50, 200] {
        let (papers, _) = corpus(1, n);
        group.bench_with_input(BenchmarkId::new("title_abstract", n), &papers, |b, papers| {
            b.iter(|| build_tfidf(black_box(papers), TextFields::TitleAbstract).unwrap())
        });
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("kmeans");
    for n in [50, 200] {
        let (papers, truth) = corpus(2, n);
        let model = build_tfidf(&papers, TextFields::TitleAbstract).unwrap();
        group.bench_with_input(BenchmarkId::new("k5", n), &model, |b, model| {
            b.iter(|| kmeans(black_box(model), 5, 0).unwrap())
        });
        let predicted = kmeans(&model, 5, 0).unwrap();
        group.bench_with_input(BenchmarkId::new("scores", n), &predicted, |b, predicted| {
            b.iter(|| homogeneity_completeness(black_box(&truth), black_box(predicted)).unwrap())
        });
    }
    group.finish();
}

fn wire_format(c: &mut Criterion) {
    let (papers, _) = corpus(3, 120);
    let sessions = (0..12).map(|j| Session::new(format!("S{j}"), "S", 150)).collect();
    let inst = Instance::new(papers, sessions).unwrap();
    let positions: Vec<usize> = (0..inst.paper_count()).map(|i| i % 12).collect();
    let text = emit_schedule(&inst, &Schedule::from_positions(&inst, &positions)).unwrap().text;
    c.bench_function("wire/parse_and_resolve/120", |b| {
        b.iter(|| read_schedule_text(black_box(&text), &inst).unwrap())
    });
}

criterion_group!(benches, tfidf, clustering, wire_format);
criterion_main!(benches);
