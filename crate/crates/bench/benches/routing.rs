use criterion::{black_box, criterion_group, criterion_main, Criterion};
use gsc_core::fixtures::{detour, detour_snapshot, SnapshotBuilder};
use gsc_core::routing::route_with;
use gsc_core::{Application, CaseType, CompressionProfile, Method, NodeId, Objective, SnapshotGraph};

/// `side × side` torus of satellites, every fifth one AI-capable, with a
/// terminal attached at opposite corners.
fn torus(side: u32) -> SnapshotGraph {
    let id = |r: u32, c: u32| (r % side) * side + c % side;
    let mut b = SnapshotBuilder::new(1);
    for s in 0..side * side {
        b = if s % 5 == 0 {
            b.ai(s, &format!("S{s}"), &[0], &[0], 2)
        } else {
            b.satellite(s, &format!("S{s}"))
        };
    }
    let (u, v) = (side * side, side * side + 1);
    b = b.terminal(u, "U").terminal(v, "V");
    for r in 0..side {
        for c in 0..side {
            b = b
                .link(id(r, c), id(r, c + 1), 300.0, 5.0 + ((r + c) % 3) as f64)
                .link(id(r, c), id(r + 1, c), 300.0, 5.0 + ((r * c) % 4) as f64);
        }
    }
    b.link(u, id(0, 0), 300.0, 5.0)
        .link(v, id(side / 2, side / 2), 300.0, 5.0)
        .build()
}

fn app(case: CaseType, src: u32, dst: u32) -> Application {
    Application {
        id: 0,
        case,
        src: NodeId(src),
        dst: NodeId(dst),
        rate_mbps: 20.0,
        kb: 0,
        ratio: Some(0.25),
    }
}

fn bench_routing(c: &mut Criterion) {
    let profile = CompressionProfile::uniform(1, 0.25);
    let small = detour_snapshot();
    let a = app(CaseType::ReceiverDecodes, detour::U1, detour::U2);
    c.bench_function("route detour case 3", |b| {
        b.iter(|| {
            route_with(
                black_box(&a),
                &small,
                &profile,
                Method::Gsc,
                Objective::DelayFirst,
            )
        })
    });

    let side = 20;
    let grid = torus(side);
    for case in CaseType::ALL {
        let a = app(case, side * side, side * side + 1);
        c.bench_function(&format!("route 20x20 torus case {case}"), |b| {
            b.iter(|| route_with(black_box(&a), &grid, &profile, Method::Gsc, Objective::DelayFirst))
        });
    }
    let a = app(CaseType::BothEnds, side * side, side * side + 1);
    c.bench_function("route 20x20 torus traditional", |b| {
        b.iter(|| {
            route_with(
                black_box(&a),
                &grid,
                &profile,
                Method::Traditional,
                Objective::DelayFirst,
            )
        })
    });
}

criterion_group!(benches, bench_routing);
criterion_main!(benches);
