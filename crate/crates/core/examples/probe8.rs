use hinf_explicit::artifacts;
use hinf_explicit::config::Config;
use hinf_explicit::sampling::face_points;
use rand::SeedableRng;

fn main() {
    let cfg = Config::default();
    let (_, _, stages) = artifacts::load_synthesis(std::path::Path::new("/tmp/run/out2")).unwrap();
    for s in &stages {
        for (f, name) in [(&s.value, "V"), (&s.max_value, "J")] {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
            for (i, j, face) in f.adjacent_pairs(&cfg).unwrap() {
                let mut worst: f64 = 0.0;
                let mut at = None;
                for x in face_points(&face, &mut rng, 20, &cfg.tol).unwrap() {
                    let vi = f.pieces[i].value(&x);
                    let vj = f.pieces[j].value(&x);
                    let rel = (vi - vj).abs() / (1.0 + vi.abs().max(vj.abs()));
                    if rel > worst { worst = rel; at = Some((x.clone(), vi, vj)); }
                }
                if worst > 1e-6 {
                    let (x, vi, vj) = at.unwrap();
                    println!("stage {} {name}: pair ({i},{j}) violation {worst:.3e} at {:?} vi {vi:.6} vj {vj:.6}", s.stage, x.as_slice());
                }
            }
        }
        // overlap status
        for (f, name) in [(&s.value, "V"), (&s.max_value, "J")] {
            let od = f.partition.check_disjoint(&cfg.tol).unwrap();
            println!("stage {} {name}: {} cells, {} overlaps", s.stage, f.num_pieces(), od.len());
        }
    }
}
