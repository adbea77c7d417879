//! Build the three source/target configurations and walk the subdivision of
//! a shared-surface pair.

use kernel_rank::geometry::{box_probability, classify, make_domain_pair, subdivide, InteractionKind, TreeRegion};

fn main() -> kernel_rank::Result<()> {
    for kind in [InteractionKind::FarField, InteractionKind::SharedSurface(0), InteractionKind::SharedSurface(1)] {
        let (x, y) = make_domain_pair(2, kind, 1.0)?;
        println!("{:<8} target {x}  source {y}  classified as {}", kind.label(), classify(&x, &y)?.label());
    }

    let (x, y) = make_domain_pair(2, InteractionKind::SharedSurface(1), 1.0)?;
    let tree = subdivide(&y, &x, 1024)?;
    println!("\n2-D edge pair, n = 1024: kappa = {}", tree.kappa());
    for (k, cells) in tree.levels().iter().enumerate() {
        let q = box_probability(&tree, TreeRegion::Level(k + 1))?;
        println!("  level {:>2}: {:>3} far-field cells of probability {q:.3e}", k + 1, cells.len());
    }
    let q = box_probability(&tree, TreeRegion::Terminal)?;
    println!("  terminal: {} cells, total probability {q:.3e}", tree.terminal_cells().len());
    Ok(())
}
