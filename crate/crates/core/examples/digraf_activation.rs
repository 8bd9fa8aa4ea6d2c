//! The activation on a two-graph batch: each graph gets its own theta row,
//! values outside [-r, r] pass through.

use digraf::activation::Digraf;
use digraf::nn::{GraphIndex, Tensor};

fn main() -> digraf::Result<()> {
    let unit = Digraf::new(2.0, 4)?;
    let h = Tensor::from_rows(&[
        vec![-3.0, -1.0, 0.0],
        vec![0.5, 1.5, 2.5],
        vec![-1.0, 0.0, 1.0],
    ])?;
    // Rows 0 and 1 belong to graph 0, row 2 to graph 1.
    let index = GraphIndex::new(vec![0, 0, 1], 2)?;
    let theta = Tensor::from_rows(&[vec![0.9, -0.4, 0.2], vec![-0.7, 0.0, 0.7]])?;
    let (out, _) = unit.forward(&h, &theta, &index, false)?;
    for r in 0..h.rows() {
        println!("graph {}: {:?} -> {:.4?}", index.index()[r], h.row(r), out.row(r));
    }
    Ok(())
}
