use hinf_explicit::artifacts;
use hinf_explicit::config::Config;

fn main() {
    let cfg = Config::default();
    let (_, _, stages) = artifacts::load_synthesis(std::path::Path::new("/tmp/run/out")).unwrap();
    let s2 = &stages[1];
    let j = &s2.max_value;
    let cells = &j.partition.cells;
    for i in 0..cells.len() {
        for k in i+1..cells.len() {
            let inter = cells[i].intersect(&cells[k], &cfg.tol).unwrap();
            if inter.is_empty() { continue; }
            let (c, r) = inter.chebyshev();
            let vi = j.pieces[i].value(&c);
            let vk = j.pieces[k].value(&c);
            println!("J cells {i},{k}: intersection radius {r:.3e}, piece gap at center {:.3e}", (vi-vk).abs());
            if r > 1e-9 {
                // measure thickness along the facet normal: find the antiparallel row pair
                println!("  rows i:");
                for rr in 0..cells[i].num_rows() {
                    println!("    {:?} | {:.9}", cells[i].row_matrix().row(rr).transpose().as_slice().iter().map(|v|(v*1e9).round()/1e9).collect::<Vec<_>>(), cells[i].offsets()[rr]);
                }
                println!("  rows k:");
                for rr in 0..cells[k].num_rows() {
                    println!("    {:?} | {:.9}", cells[k].row_matrix().row(rr).transpose().as_slice().iter().map(|v|(v*1e9).round()/1e9).collect::<Vec<_>>(), cells[k].offsets()[rr]);
                }
            }
        }
    }
    // disturbance law gains per region
    for (idx, r) in s2.max_regions.iter().enumerate() {
        println!("max region {idx}: cells {:?} active {:?} law K max {:.4} k {:?}", r.cells, r.active_sets, r.law.gain.amax(), r.law.offset.as_slice().iter().map(|v|(v*1e4).round()/1e4).collect::<Vec<_>>());
    }
}
