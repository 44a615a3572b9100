use proptest::prelude::*;
use qkdplan::net_model::{relay_chain_demo, BitString, LinkSpec, NetError, Node, NodeKind, QkdGraph};

fn chain(rates: &[f64]) -> QkdGraph {
    let mut nodes = vec![Node::new("A", NodeKind::Gs)];
    for i in 0..rates.len() - 1 {
        nodes.push(Node::new(format!("S{i}"), NodeKind::Leo));
    }
    nodes.push(Node::new("B", NodeKind::Gs));
    let links = rates
        .iter()
        .enumerate()
        .map(|(i, &r)| LinkSpec::new(nodes[i].id.clone(), nodes[i + 1].id.clone(), r))
        .collect();
    QkdGraph::new(nodes, links).unwrap()
}

#[derive(Debug, Clone)]
enum Op {
    Accumulate(f64),
    Consume(usize, u64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0.0..5.0f64).prop_map(Op::Accumulate),
        (0usize..4, 0u64..40).prop_map(|(l, b)| Op::Consume(l, b)),
    ]
}

proptest! {
    #[test]
    fn relay_recovers_the_key(
        bits in proptest::collection::vec(any::<bool>(), 1..64),
        hops in 1usize..6,
        seed in any::<u64>(),
    ) {
        let key = BitString(bits.clone());
        // xorshift stream for the hop keys
        let mut state = seed | 1;
        let link_keys: Vec<BitString> = (0..hops)
            .map(|_| {
                BitString(
                    (0..bits.len())
                        .map(|_| {
                            state ^= state << 13;
                            state ^= state >> 7;
                            state ^= state << 17;
                            state & 1 == 1
                        })
                        .collect(),
                )
            })
            .collect();
        let path: Vec<String> = (0..=hops).map(|i| format!("N{i}")).collect();
        let trace = relay_chain_demo(&key, &path, &link_keys).unwrap();
        prop_assert_eq!(&trace.recovered, &key);
        prop_assert_eq!(trace.transmitted.len(), hops);
        prop_assert_eq!(trace.consumed_bits, bits.len() * hops);
        for (cipher, k) in trace.transmitted.iter().zip(&link_keys) {
            prop_assert_eq!(&cipher.xor(k).unwrap(), &key);
        }
    }

    #[test]
    fn accumulation_is_linear_up_to_flooring(
        rates in proptest::collection::vec(0.0..2000.0f64, 2..5),
        t1 in 0.0..120.0f64,
        t2 in 0.0..120.0f64,
    ) {
        let g = chain(&rates);
        let stepwise = g.accumulate_pools(t1).unwrap().accumulate_pools(t2).unwrap();
        let once = g.accumulate_pools(t1 + t2).unwrap();
        for (a, b) in stepwise.pools().iter().zip(once.pools()) {
            // at most one bit lost per flooring call
            prop_assert!(*a <= b && b - a <= 2, "{a} vs {b}");
        }
        prop_assert!((stepwise.elapsed_seconds - once.elapsed_seconds).abs() < 1e-9);
    }

    #[test]
    fn pools_stay_non_negative(ops in proptest::collection::vec(op(), 0..40)) {
        let mut g = chain(&[3.0, 7.5, 1.25, 10.0]);
        for op in ops {
            match op {
                Op::Accumulate(t) => g = g.accumulate_pools(t).unwrap(),
                Op::Consume(link, bits) => {
                    let (a, b) = g.link_label(link);
                    let before = g.pools()[link];
                    match g.consume(&a, &b, bits) {
                        Ok(next) => {
                            prop_assert_eq!(next.pools()[link], before - bits);
                            g = next;
                        }
                        Err(NetError::InsufficientKeys { available, .. }) => {
                            prop_assert!(bits > before);
                            prop_assert_eq!(available, before);
                        }
                        Err(e) => prop_assert!(false, "unexpected {e}"),
                    }
                }
            }
        }
    }
}

#[test]
fn bitstrings_parse_and_print() {
    let k: BitString = "1011001".parse().unwrap();
    assert_eq!(k.to_string(), "1011001");
    assert!("10x1".parse::<BitString>().is_err());
}
