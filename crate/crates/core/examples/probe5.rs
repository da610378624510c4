use hinf_explicit::artifacts;
use hinf_explicit::config::Config;

fn main() {
    let cfg = Config::default();
    let (_, _, stages) = artifacts::load_synthesis(std::path::Path::new("/tmp/run/out")).unwrap();
    let s2 = &stages[1];
    let cells = &s2.value.partition.cells;
    println!("{} cells", cells.len());
    for i in 0..cells.len() {
        for j in i+1..cells.len() {
            let inter = cells[i].intersect(&cells[j], &cfg.tol).unwrap();
            if inter.is_empty() { continue; }
            let (c, r) = inter.chebyshev();
            if r >= cfg.tol.interior {
                println!("OVERLAP regions {i},{j}: radius {r:.3e} at {:?}", c.as_slice());
                // law and value mismatch inside the overlap
                let li = s2.min_regions[i].law.apply(&c);
                let lj = s2.min_regions[j].law.apply(&c);
                let vi = s2.min_regions[i].value.value(&c);
                let vj = s2.min_regions[j].value.value(&c);
                println!("  law diff {:.3e}  value diff {:.3e}", (li-lj).amax(), (vi-vj).abs());
                println!("  active i: {:?} cells {:?}", s2.min_regions[i].active_sets, s2.min_regions[i].cells);
                println!("  active j: {:?} cells {:?}", s2.min_regions[j].active_sets, s2.min_regions[j].cells);
            }
        }
    }
}
