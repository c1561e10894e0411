use iminfector::context::build_epoch_stream;
use iminfector::corpus::parse_cascades_str;
use iminfector::model::ModelConfig;
use iminfector::synth::{generate, SynthConfig};
use iminfector::{fit, TrainingPair};

#[test]
fn three_planted_sources_loss_falls_every_epoch() {
    for seed in 0..10 {
        let s = generate(&SynthConfig { planted: 3, rng_seed: seed, ..SynthConfig::default() }).unwrap();
        let config = ModelConfig { rng_seed: seed, ..ModelConfig::default() };
        let (model, report) = fit(&s.corpus, &config, 1.2).unwrap();
        let lt = report.classify_losses();
        assert_eq!(lt.len(), 5);
        assert!(lt.windows(2).all(|w| w[1] < w[0]), "seed {seed}: {lt:?}");
        assert_eq!(model.num_influencers(), s.corpus.num_influencers());
    }
}

#[test]
fn length_four_cascade_touches_its_row_six_times() {
    let corpus = parse_cascades_str("a:0\tb:1 c:2 d:3 e:4\nb:0\tc:5\n").unwrap();
    let a = corpus.influencer_index(&"a".parse().unwrap()).unwrap();
    for epoch in 0..3 {
        let stream = build_epoch_stream(&corpus, 1.2, 9, epoch).unwrap();
        let mine: Vec<_> = stream.iter().filter(|p| p.influencer() == a).collect();
        let contexts = mine.iter().filter(|p| matches!(p, TrainingPair::Context(_))).count();
        assert_eq!((contexts, mine.len() - contexts), (5, 1));
    }
}
