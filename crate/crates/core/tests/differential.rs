use anyk::analysis::Algorithm;
use anyk::oracle::{check_instance, dump_instance, random_instance, random_spec, InstanceConfig, Shape, SpecKind};

fn sweep(shape: Shape, seeds: std::ops::Range<u64>) {
    for seed in seeds {
        let atoms = 1 + (seed % 5) as usize;
        let tuples = 10 + (seed * 37 % 120) as usize;
        let cfg = InstanceConfig::new(shape, atoms, tuples, seed);
        let (q, db) = random_instance(&cfg);
        for (i, kind) in SpecKind::ALL.into_iter().enumerate() {
            let Some(spec) = random_spec(&q, kind, seed * 10 + i as u64) else { continue };
            match check_instance(&q, &db, &spec) {
                Ok(report) => {
                    if kind == SpecKind::LexTrio {
                        assert_eq!(report.algorithm, Algorithm::LexViaSum);
                    }
                }
                Err(e) => panic!("{shape} seed {seed} {kind}: {e}\n{}", dump_instance(&q, &db, &spec)),
            }
        }
    }
}

#[test]
fn paths_agree_with_oracle() {
    sweep(Shape::Path, 0..60);
}

#[test]
fn stars_agree_with_oracle() {
    sweep(Shape::Star, 100..160);
}

#[test]
fn trees_agree_with_oracle() {
    sweep(Shape::Tree, 200..260);
}
