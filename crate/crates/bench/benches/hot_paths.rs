use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use formulab::agent::{compute_gae, ppo_update, sample_action, Adam, ForwardCache, PpoWorkspace, RolloutBuffer};
use formulab::plant::{step, PlantParams, PlantState};
use formulab::{ActorCritic, FormulationConfig, PitchEnv, PpoConfig};

fn plant_step(c: &mut Criterion) {
    let p = PlantParams::default();
    let s = PlantState {
        theta: 0.3,
        theta_dot: -0.2,
        steps: 0,
    };
    c.bench_function("plant_step", |b| b.iter(|| step(black_box(&s), black_box(12.0), &p).unwrap()));
}

fn env_step(c: &mut Criterion) {
    let mut env = PitchEnv::new(PlantParams::default(), FormulationConfig::new_setting(), 0).unwrap();
    env.reset();
    let mut k = 0u32;
    c.bench_function("env_step_new_setting", |b| {
        b.iter(|| {
            k = k.wrapping_add(1);
            let a = if k.is_multiple_of(2) { 0.05 } else { -0.05 };
            if env.step(black_box(a)).unwrap().done {
                env.reset();
            }
        })
    });
}

fn gae(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 2048;
    let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..0.0)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..0.0)).collect();
    let d: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.002)).collect();
    c.bench_function("gae_2048", |b| {
        b.iter(|| compute_gae(black_box(&r), black_box(&v), black_box(&d), -10.0, 0.99, 0.95))
    });
}

fn ppo(c: &mut Criterion) {
    let cfg = PpoConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = ActorCritic::init(3, &cfg.hidden, cfg.log_std_init, &mut rng);
    let mut env = PitchEnv::new(PlantParams::default(), FormulationConfig::new_setting(), 1).unwrap();
    let mut buffer = RolloutBuffer::new(cfg.n_steps);
    let mut cache = ForwardCache::default();
    let mut obs = env.reset();
    while !buffer.is_full() {
        let out = model.forward_obs(&obs, &mut cache);
        let (a, lp) = sample_action(out.mean, out.log_std, &mut rng);
        let s = env.step(a).unwrap();
        buffer.push(&obs, a, s.reward, out.value, lp, s.done);
        obs = if s.done { env.reset() } else { s.observation };
    }
    buffer.compute_returns_and_advantages(0.0, cfg.gamma, cfg.gae_lambda);

    let mut group = c.benchmark_group("ppo");
    group.sample_size(10);
    group.bench_function("update_2048x10_epochs", |b| {
        b.iter_batched(
            || (model.clone(), Adam::new(model.num_params(), cfg.learning_rate), ChaCha8Rng::seed_from_u64(2)),
            |(mut m, mut adam, mut r)| {
                ppo_update(&mut m, &mut adam, &buffer, &cfg, &mut PpoWorkspace::default(), &mut r).unwrap()
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, plant_step, env_step, gae, ppo);
criterion_main!(benches);
