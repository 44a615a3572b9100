//! A key crossing two trusted satellites, one-time-padded hop by hop.
//!
//! ```bash
//! cargo run --example relay_chain
//! ```

use qkdplan::net_model::{relay_chain_demo, BitString, LinkSpec, Node, NodeKind, QkdGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let key: BitString = "1011001110001011".parse()?;
    let path = ["A", "L1", "L2", "B"];
    let link_keys: Vec<BitString> = ["0110101001011100", "1100011010110001", "0001111101010110"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;

    let trace = relay_chain_demo(&key, &path, &link_keys)?;
    println!("key        {key}");
    for (hop, cipher) in path.windows(2).zip(&trace.transmitted) {
        println!("{:>3} -> {:<3} {cipher}", hop[0], hop[1]);
    }
    println!("recovered  {}", trace.recovered);
    println!("spent {} link-key bits", trace.consumed_bits);

    // the same spend, seen from the pools
    let g = QkdGraph::new(
        vec![
            Node::new("A", NodeKind::Gs),
            Node::new("L1", NodeKind::Leo),
            Node::new("L2", NodeKind::Leo),
            Node::new("B", NodeKind::Gs),
        ],
        vec![
            LinkSpec::new("A", "L1", 1.0),
            LinkSpec::new("L1", "L2", 0.5),
            LinkSpec::new("L2", "B", 1.0),
        ],
    )?
    .accumulate_pools(40.0)?;
    println!("\npools after 40 s: {:?}", g.pools());
    let mut after = g.clone();
    for hop in path.windows(2) {
        after = after.consume(hop[0], hop[1], key.len() as u64)?;
    }
    println!("after relaying:   {:?}", after.pools());
    if let Err(e) = after.consume("L1", "L2", key.len() as u64) {
        println!("second key: {e}");
    }
    Ok(())
}
