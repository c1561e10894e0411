use std::collections::{HashMap, HashSet};

use iminfector::context::{self, TrainingPair};
use iminfector::corpus::{self, parse_cascades_str, write_cascades};
use iminfector::diffusion::{budgets_from_norms, DiffusionMatrix};
use iminfector::eval::{core_numbers, dni};
use iminfector::model::{InfectorModel, ModelConfig};
use iminfector::seeder::{select_seeds_celf, sigma, Uninfected};
use iminfector::{fit, CascadeCorpus, ContextPair, EdgeList, NodeId, SizePair};
use proptest::prelude::*;

/// Cascade lines over a small id pool, so nodes recur across cascades.
fn corpus_text(max_cascades: usize) -> impl Strategy<Value = String> {
    let line = (0..12usize, 0..500u64, prop::collection::vec((0..12usize, 0..60u64), 1..7));
    prop::collection::vec(line, 1..=max_cascades).prop_map(|lines| {
        let mut text = String::new();
        for (init, start, events) in lines {
            let mut evs: Vec<String> = events
                .into_iter()
                .filter(|&(v, _)| v != init)
                .map(|(v, d)| format!("v{v}:{}", start + d))
                .collect();
            if evs.is_empty() {
                evs.push(format!("v{}:{}", (init + 1) % 12, start + 1));
            }
            text.push_str(&format!("v{init}:{start}\t{}\n", evs.join(" ")));
        }
        text
    })
}

fn random_model() -> impl Strategy<Value = InfectorModel> {
    (1..5usize, 1..5usize, 2..8usize).prop_flat_map(|(e, i, n)| {
        let values = prop::collection::vec(-1.0..1.0f64, e * i + e * n + n + 1);
        values.prop_map(move |v| {
            let (source, rest) = v.split_at(i * e);
            let (target, rest) = rest.split_at(e * n);
            let (bias, rest) = rest.split_at(n);
            InfectorModel::from_parts(e, i, n, source.to_vec(), target.to_vec(), bias.to_vec(), rest[0])
                .unwrap()
        })
    })
}

fn debug_sorted(c: &CascadeCorpus) -> Vec<String> {
    let mut v: Vec<String> = c.cascades().iter().map(|c| format!("{c:?}")).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_is_identity(text in corpus_text(8)) {
        let parsed = parse_cascades_str(&text).unwrap();
        let mut out = Vec::new();
        write_cascades(&parsed, &mut out).unwrap();
        let again = parse_cascades_str(std::str::from_utf8(&out).unwrap()).unwrap();
        prop_assert_eq!(&again, &parsed);
        prop_assert_eq!(again.node_ids(), parsed.node_ids());
    }

    #[test]
    fn every_node_is_accounted_for(text in corpus_text(8)) {
        let c = parse_cascades_str(&text).unwrap();
        let slots: usize = c.cascades().iter().map(|c| 1 + c.len()).sum();
        prop_assert!(slots >= c.num_nodes());
    }

    #[test]
    fn split_partitions_the_corpus(text in corpus_text(10), frac in 0.05..0.95f64) {
        let c = parse_cascades_str(&text).unwrap();
        match corpus::temporal_split(&c, frac) {
            Ok((train, test)) => {
                prop_assert_eq!(train.len() + test.len(), c.len());
                let last_train = train.cascades().iter().map(|c| c.start_time()).max().unwrap();
                let first_test = test.cascades().iter().map(|c| c.start_time()).min().unwrap();
                prop_assert!(last_train <= first_test);
                let mut joined = debug_sorted(&train);
                joined.extend(debug_sorted(&test));
                joined.sort();
                prop_assert_eq!(joined, debug_sorted(&c));
            }
            Err(iminfector::Error::DegenerateSplit { train, .. }) => {
                prop_assert!(train == 0 || train == c.len());
                prop_assert_eq!(train, ((frac * c.len() as f64) - 1e-9).ceil() as usize);
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn faster_reposts_are_likelier(text in corpus_text(6)) {
        let c = parse_cascades_str(&text).unwrap();
        for cascade in c.cascades() {
            let p = context::sampling_distribution(cascade).unwrap();
            let delays: Vec<u64> = cascade.delays().map(|d| d.max(1)).collect();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..p.len() {
                for j in 0..p.len() {
                    if delays[i] < delays[j] {
                        prop_assert!(p[i] > p[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn stream_counts_per_cascade(text in corpus_text(8), seed in any::<u64>()) {
        let c = parse_cascades_str(&text).unwrap();
        let stream = context::build_training_stream(&c, 1.2, seed).unwrap();
        let mut idx = 0;
        for cascade in c.indexed() {
            let draws = context::context_draws(cascade.nodes.len(), 1.2);
            prop_assert_eq!(draws, (1.2 * cascade.nodes.len() as f64 - 1e-9).ceil() as usize);
            for pair in &stream[idx..idx + draws] {
                match pair {
                    TrainingPair::Context(p) => {
                        prop_assert_eq!(p.influencer, cascade.influencer);
                        prop_assert!(cascade.nodes.contains(&p.context));
                    }
                    TrainingPair::Size(_) => prop_assert!(false, "size pair inside context run"),
                }
            }
            prop_assert!(matches!(stream[idx + draws], TrainingPair::Size(p) if p.influencer == cascade.influencer));
            idx += draws + 1;
        }
        prop_assert_eq!(idx, stream.len());
    }

    #[test]
    fn softmax_rows_are_distributions(m in random_model()) {
        for u in 0..m.num_influencers() {
            let row = m.forward_classify(u);
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn update_footprints(m in random_model(), u in 0..5usize, v in 0..8usize, y in 0.0..1.0f64) {
        let u = u % m.num_influencers();
        let v = v % m.num_nodes();
        let e = m.embed_dim();

        let mut r = m.clone();
        r.step_regress(SizePair { influencer: u, size_target: y }, 0.1).unwrap();
        prop_assert_eq!(r.target(), m.target());
        prop_assert_eq!(r.target_bias(), m.target_bias());
        prop_assert_eq!(r.constant(), m.constant());
        let shifts: Vec<f64> = (0..e).map(|k| r.source_row(u)[k] - m.source_row(u)[k]).collect();
        let g = -0.1 * m.regress_scalar(SizePair { influencer: u, size_target: y });
        for (k, s) in shifts.iter().enumerate() {
            prop_assert_eq!(r.source_row(u)[k], m.source_row(u)[k] + g);
            prop_assert!((s - shifts[0]).abs() <= 1e-15);
        }
        for w in (0..m.num_influencers()).filter(|&w| w != u) {
            prop_assert_eq!(r.source_row(w), m.source_row(w));
        }

        let mut c = m.clone();
        c.step_classify(ContextPair { influencer: u, context: v }, 0.1).unwrap();
        prop_assert_eq!(c.size_bias().to_bits(), m.size_bias().to_bits());
        prop_assert_eq!(c.constant(), m.constant());
        for w in (0..m.num_influencers()).filter(|&w| w != u) {
            prop_assert_eq!(c.source_row(w), m.source_row(w));
        }
    }

    #[test]
    fn pruning_sets_are_nested(m in random_model(), p1 in 1.0..100.0f64, p2 in 1.0..100.0f64) {
        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        let small = DiffusionMatrix::build(&m, lo).unwrap();
        let large = DiffusionMatrix::build(&m, hi).unwrap();
        prop_assert!(small.candidates().len() <= large.candidates().len());
        prop_assert_eq!(small.candidates(), &large.candidates()[..small.candidates().len()]);
        for (k, &u) in large.candidates().iter().enumerate() {
            let direct = m.forward_classify(u);
            prop_assert_eq!(large.row(k), &direct[..]);
        }
    }

    #[test]
    fn budgets_are_scale_free(
        norms in prop::collection::vec(0.0..10.0f64, 1..20),
        nodes in 1..200usize,
        scale in 1e-3..1e3f64,
    ) {
        prop_assume!(norms.iter().sum::<f64>() > 0.0);
        let scaled: Vec<f64> = norms.iter().map(|x| x * scale).collect();
        let a = budgets_from_norms(&norms, nodes).unwrap();
        let b = budgets_from_norms(&scaled, nodes).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.lambda.iter().all(|&l| (1..=nodes).contains(&l)));
    }

    #[test]
    fn spreads_shrink_with_the_free_set(
        row in prop::collection::vec(0.0..1.0f64, 1..30),
        lambda in 1..30usize,
        keep in prop::collection::vec(any::<bool>(), 30),
        drop in prop::collection::vec(any::<bool>(), 30),
    ) {
        let n = row.len();
        let earlier = Uninfected::from_nodes(n, (0..n).filter(|&v| keep[v]));
        let later = Uninfected::from_nodes(n, (0..n).filter(|&v| keep[v] && drop[v]));
        let a = sigma(&row, lambda, &earlier);
        let b = sigma(&row, lambda, &later);
        prop_assert!(a.omega >= 0.0);
        prop_assert!(b.omega <= a.omega);
        prop_assert!(a.influence.iter().all(|&v| earlier.contains(v)));
    }

    #[test]
    fn greedy_marginals_fall_and_claims_are_disjoint(
        rows in prop::collection::vec(prop::collection::vec(0.01..1.0f64, 12), 1..10),
        norms in prop::collection::vec(0.1..5.0f64, 10),
    ) {
        let k = rows.len();
        let labels = (0..k).map(|i| format!("s{i}")).collect();
        let m = DiffusionMatrix::from_rows(labels, norms[..k].to_vec(), rows).unwrap();
        let b = m.budgets().unwrap();
        let sel = select_seeds_celf(&m, &b, k).unwrap();
        for w in sel.seeds.windows(2) {
            prop_assert!(w[1].omega <= w[0].omega);
        }
        let mut claimed = HashSet::new();
        for s in &sel.seeds {
            prop_assert!(s.omega >= 0.0);
            for &v in &s.influence {
                prop_assert!(claimed.insert(v));
            }
        }
    }

    #[test]
    fn dni_grows_with_the_prefix(text in corpus_text(10), picks in prop::collection::vec(0..14usize, 0..8)) {
        let test = parse_cascades_str(&text).unwrap();
        let seeds: Vec<NodeId> = picks.iter().map(|p| NodeId::new(format!("v{p}")).unwrap()).collect();
        let r = dni(&seeds, &test);
        for w in r.cumulative.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for k in 0..seeds.len() {
            prop_assert_eq!(dni(&seeds[..=k], &test).dni, r.cumulative[k]);
        }
        prop_assert!(r.dni <= test.num_nodes());
    }

    #[test]
    fn removing_a_node_never_raises_core_numbers(
        pairs in prop::collection::vec((0..10usize, 0..10usize), 1..40),
        victim in 0..10usize,
    ) {
        let id = |v: usize| NodeId::new(format!("g{v}")).unwrap();
        let full = EdgeList::new(pairs.iter().map(|&(a, b)| (id(a), id(b))));
        let cut = EdgeList::new(
            pairs.iter().filter(|&&(a, b)| a != victim && b != victim).map(|&(a, b)| (id(a), id(b))),
        );
        let before: HashMap<NodeId, usize> = core_numbers(&full).into_iter().collect();
        for (v, k) in core_numbers(&cut) {
            prop_assert!(k <= before[&v]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn training_is_bitwise_deterministic(text in corpus_text(12), seed in any::<u64>()) {
        let c = parse_cascades_str(&text).unwrap();
        let config = ModelConfig { embed_dim: 6, epochs: 2, rng_seed: seed, ..ModelConfig::default() };
        let (a, ra) = fit(&c, &config, 1.2).unwrap();
        let (b, rb) = fit(&c, &config, 1.2).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_to(&mut ba).unwrap();
        b.write_to(&mut bb).unwrap();
        prop_assert_eq!(ba, bb);
        prop_assert_eq!(ra.classify_losses(), rb.classify_losses());
    }
}
