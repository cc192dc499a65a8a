//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run a subset with `cargo test --test acceptance -- 3 5`.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenforge_core::actions::{
    self, check_world, has_clearance, light_ahead, list_actions, validate, ActionParams,
    ConstraintRule, EnvAction, Slot,
};
use scenforge_core::baselines::{run_greedy, run_random};
use scenforge_core::dqn::driving::{run_policy, DrivingTask};
use scenforge_core::dqn::memory::{ReplayMemory, Transition};
use scenforge_core::dqn::network::{gradient_check, Mlp};
use scenforge_core::dqn::toy::{chain_config, value_iteration, ChainMdp};
use scenforge_core::dqn::{run_training, Agent, EpsilonSchedule, TrainConfig, TrainingLog};
use scenforge_core::env::{DrivingEnv, EnvConfig, Termination};
use scenforge_core::geometry::Vec2;
use scenforge_core::metrics::{ttc_pair, Body, TTC_HORIZON_S};
use scenforge_core::reward::{dto_reward, jerk_reward, ttc_reward};
use scenforge_core::scenario::analysis::{classify_realism, scm, Defect};
use scenforge_core::scenario::log::{replay, ExecutionLog};
use scenforge_core::scenario::scene::*;
use scenforge_core::scenario::similarity::{scenario_similarity, Fraction};
use scenforge_core::stats::{a12, magnitude, mann_whitney_u, spearman_rho, Magnitude};
use scenforge_core::world::{Motion, NpcBehavior, NpcType, PedestrianBehavior, VehicleColor};
use scenforge_core::{AutopilotParams, Entity, LightColor, Operation, RewardConfig, RewardKind, RouteId, WeatherPreset, WorldState};
use std::f64::consts::{E, LN_10, LN_2};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1: rewards

fn rewards() -> Outcome {
    let cfg = RewardConfig::default();
    let floor = 3.0 * LN_10; // -ln(1e-3)
    let cap = 10f64.exp() - 1.0;
    let ttc = |v: Option<f64>| ttc_reward(&[v], &cfg);
    let dto = |v: f64| dto_reward(&[v], &cfg);
    let jerk = |v: f64| jerk_reward(&[v], &cfg);
    let points: Vec<(&str, f64, f64)> = vec![
        ("ttc at threshold", ttc(Some(7.0)), 0.0),
        ("ttc half threshold", ttc(Some(3.5)), LN_2),
        ("ttc quarter threshold", ttc(Some(1.75)), 2.0 * LN_2),
        ("ttc tenth threshold", ttc(Some(0.7)), LN_10),
        ("ttc just above threshold", ttc(Some(7.0 + 1e-9)), -1.0),
        ("ttc far", ttc(Some(20.0)), -1.0),
        ("ttc no conflict", ttc(None), -1.0),
        ("ttc zero floored", ttc(Some(0.0)), floor),
        ("ttc at floor", ttc(Some(0.007)), floor),
        ("ttc buffer minimum", ttc_reward(&[Some(5.0), None, Some(3.5)], &cfg), LN_2),
        ("ttc empty buffer", ttc_reward(&[], &cfg), -1.0),
        ("ttc all none", ttc_reward(&[None, None], &cfg), -1.0),
        ("dto at threshold", dto(10.0), 0.0),
        ("dto half threshold", dto(5.0), LN_2),
        ("dto quarter threshold", dto(2.5), 2.0 * LN_2),
        ("dto tenth threshold", dto(1.0), LN_10),
        ("dto just above threshold", dto(10.0 + 1e-9), -1.0),
        ("dto contact floored", dto(0.0), floor),
        ("dto buffer minimum", dto_reward(&[20.0, 5.0, 8.0], &cfg), LN_2),
        ("dto empty buffer", dto_reward(&[], &cfg), -1.0),
        ("jerk at threshold", jerk(5.0), E - 1.0),
        ("jerk just below threshold", jerk(5.0 - 1e-9), -1.0),
        ("jerk zero", jerk(0.0), -1.0),
        ("jerk double threshold", jerk(10.0), E * E - 1.0),
        ("jerk 1.5 threshold", jerk(7.5), 1.5f64.exp() - 1.0),
        ("jerk at cap", jerk(50.0), cap),
        ("jerk beyond cap", jerk(80.0), cap),
        ("jerk buffer maximum", jerk_reward(&[1.0, 10.0, 3.0], &cfg), E * E - 1.0),
        ("jerk empty buffer", jerk_reward(&[], &cfg), -1.0),
        ("jerk three thresholds", jerk(15.0), 3f64.exp() - 1.0),
    ];
    for (name, got, want) in &points {
        ensure((got - want).abs() <= 1e-9, || format!("{name}: got {got}, want {want}"))?;
    }
    Ok(format!("{} points", points.len()))
}

// ---------------------------------------------------------------- 2: constraints

fn base_world() -> WorldState {
    WorldState::new(
        Arc::new(RouteId::R1.load()),
        Arc::new(WeatherPreset::SunnyDay.trace()),
        AutopilotParams::default(),
        3,
        10.0,
    )
}

fn custom(params: ActionParams) -> EnvAction {
    EnvAction { id: usize::MAX, params }
}

fn spawn_ahead(npc_type: NpcType, distance: f64) -> EnvAction {
    custom(ActionParams::SpawnNpc {
        npc_type,
        behavior: NpcBehavior::CurrentLaneDriving,
        slot: Slot::AheadSame,
        distance,
    })
}

fn light_world(color: LightColor, elapsed: f64) -> WorldState {
    let mut w = base_world();
    let idx = light_ahead(&w).expect("route has a light ahead of the start");
    w.lights[idx].color = color;
    w.lights[idx].active_duration_s = color.duration_s();
    w.lights[idx].elapsed_s = elapsed;
    w
}

fn ego_at(s: f64) -> WorldState {
    let mut w = base_world();
    let route = w.route.clone();
    w.ego_mut().s = s;
    w.ego_mut().refresh(&route);
    w
}

fn constraints() -> Outcome {
    let with_npc = {
        let mut w = base_world();
        let (s, d) = (w.ego().s + 27.0, w.ego().d);
        let id = w.alloc_id();
        w.insert(Entity::npc(
            id,
            NpcType::Sedan,
            NpcBehavior::CurrentLaneDriving,
            VehicleColor::ALL[0],
            s,
            d,
            Motion::Along,
            0.0,
            0.0,
        ));
        w
    };
    let phase = |target| custom(ActionParams::SetLightPhase { target });
    let damage = custom(ActionParams::SetRoadDamage { level: 0.75 });
    let red = LightColor::Red.duration_s();
    let table: Vec<(&str, WorldState, EnvAction, Option<ConstraintRule>)> = vec![
        ("sedan 7.9 m from ego", base_world(), spawn_ahead(NpcType::Sedan, 7.9), Some(ConstraintRule::SafeDistance)),
        ("sedan 8.0 m from ego", base_world(), spawn_ahead(NpcType::Sedan, 8.0), None),
        ("box truck 9.0 m from ego", base_world(), spawn_ahead(NpcType::BoxTruck, 9.0), Some(ConstraintRule::SafeDistance)),
        ("box truck 10.0 m from ego", base_world(), spawn_ahead(NpcType::BoxTruck, 10.0), None),
        ("sedan 7 m from another vehicle", with_npc, spawn_ahead(NpcType::Sedan, 20.0), Some(ConstraintRule::SafeDistance)),
        ("cone 7.9 m from ego", base_world(), custom(ActionParams::PlaceCone { distance: 7.9 }), Some(ConstraintRule::SafeDistance)),
        ("sedan overlapping the ego", base_world(), spawn_ahead(NpcType::Sedan, 3.0), Some(ConstraintRule::Overlap)),
        ("red forced to yellow", light_world(LightColor::Red, red - 1.0), phase(LightColor::Yellow), Some(ConstraintRule::LightOrder)),
        ("red to green at the phase end", light_world(LightColor::Red, red - 2.0), phase(LightColor::Green), None),
        ("red to green mid-phase", light_world(LightColor::Red, 1.0), phase(LightColor::Green), Some(ConstraintRule::LightOrder)),
        ("damage under the ego", ego_at(20.0), damage, Some(ConstraintRule::RoadOccupied)),
        ("damage ahead of the ego", ego_at(60.0), damage, None),
    ];
    for (name, w, a, want) in &table {
        let got = validate(w, a).err().map(|v| v.rule);
        ensure(got == *want, || format!("{name}: got {got:?}, want {want:?}"))?;
        let mut applied = w.clone();
        let ok = actions::apply(&mut applied, a).is_ok();
        ensure(ok == want.is_none(), || format!("{name}: apply disagrees with validate"))?;
    }

    // Fuzz: random reachable worlds, random registry actions.
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0a5);
    let registry = list_actions();
    let (mut pairs, mut accepted, mut episodes) = (0usize, 0usize, 0u64);
    const PAIRS: usize = 100_000;
    const PER_WORLD: usize = 20;
    while pairs < PAIRS {
        let cfg = EnvConfig {
            route: RouteId::ALL[episodes as usize % 4],
            preset: WeatherPreset::ALL[(episodes / 4) as usize % 4],
            seed: 10_000 + episodes,
            ..EnvConfig::default()
        };
        episodes += 1;
        let mut env = DrivingEnv::new(cfg).map_err(|e| e.to_string())?;
        while !env.is_done() && pairs < PAIRS {
            let world = env.world();
            if check_world(world).is_ok() {
                for _ in 0..PER_WORLD {
                    let a = &registry[rng.random_range(0..registry.len())];
                    pairs += 1;
                    let verdict = validate(world, a);
                    let mut next = world.clone();
                    let applied = actions::apply(&mut next, a);
                    ensure(verdict.is_ok() == applied.is_ok(), || {
                        format!("validate/apply disagree on action {} at t={}", a.id, world.sim_time_s)
                    })?;
                    let Ok(record) = applied else { continue };
                    accepted += 1;
                    check_world(&next).map_err(|v| format!("action {} left {v}", a.id))?;
                    if let Some(rec) = record {
                        let e = next.entity(rec.entity_id).ok_or("spawned entity missing")?;
                        ensure(has_clearance(&next, e) && rec.overlap == 0.0, || {
                            format!("action {} spawned without clearance", a.id)
                        })?;
                    }
                }
            }
            env.step(rng.random_range(0..registry.len())).map_err(|e| e.to_string())?;
        }
    }
    Ok(format!("{} table cases, {pairs} fuzz pairs ({accepted} accepted) over {episodes} episodes", table.len()))
}

// ---------------------------------------------------------------- 3: TTC

/// Closest approach found by stepping both bodies forward in 1 ms increments.
fn ttc_brute(ego: &Body, other: &Body) -> (Option<f64>, f64, usize) {
    const STEP: f64 = 1e-3;
    let n = (TTC_HORIZON_S / STEP).round() as usize;
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for k in 0..=n {
        let t = k as f64 * STEP;
        let a = ego.position + ego.velocity * t;
        let b = other.position + other.velocity * t;
        let d = (b - a).norm();
        if d < best {
            best = d;
            best_k = k;
        }
    }
    let reach = ego.half_width + other.half_width;
    let interior = best_k > 0 && best_k < n;
    ((interior && best <= reach).then_some(best_k as f64 * STEP), best - reach, best_k.min(n - best_k))
}

fn random_body(rng: &mut ChaCha8Rng, position: Vec2, velocity: Vec2) -> Body {
    Body {
        position,
        velocity,
        heading: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        half_length: rng.random_range(0.2..3.0),
        half_width: rng.random_range(0.2..1.3),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, r: f64) -> Vec2 {
    Vec2::new(rng.random_range(-r..r), rng.random_range(-r..r))
}

fn ttc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x77c);
    let (mut cases, mut conflicts, mut worst) = (0, 0, 0.0f64);
    while cases < 200 {
        let ego_p = random_vec(&mut rng, 50.0);
        let ego_v = random_vec(&mut rng, 15.0);
        // Half the cases head for a shared point, the rest are unconstrained.
        let (p, v) = if cases % 2 == 0 {
            let tc = rng.random_range(0.5..28.0);
            let meet = ego_p + ego_v * tc + random_vec(&mut rng, 2.0);
            let v = random_vec(&mut rng, 15.0);
            (meet - v * tc, v)
        } else {
            (random_vec(&mut rng, 60.0), random_vec(&mut rng, 15.0))
        };
        let ego = random_body(&mut rng, ego_p, ego_v);
        let other = random_body(&mut rng, p, v);
        let (want, margin, edge) = ttc_brute(&ego, &other);
        // Grazing passes and approaches at the horizon ends are ill-posed at 1 ms resolution.
        if margin.abs() < 1e-3 || edge < 3 {
            continue;
        }
        cases += 1;
        let got = ttc_pair(&ego, &other);
        match (got, want) {
            (Some(g), Some(w)) => {
                conflicts += 1;
                worst = worst.max((g - w).abs());
                ensure((g - w).abs() <= 0.05, || format!("case {cases}: {g} vs {w}"))?;
            }
            (None, None) => {}
            _ => return Err(format!("case {cases}: conflict disagreement {got:?} vs {want:?}")),
        }
    }
    Ok(format!("{cases} cases, {conflicts} conflicts, worst gap {worst:.4} s"))
}

// ---------------------------------------------------------------- 4: similarity

fn pick<T: Named>(rng: &mut ChaCha8Rng) -> T {
    T::ALL[rng.random_range(0..T::ALL.len())]
}

fn random_scene(rng: &mut ChaCha8Rng) -> Scene {
    let n = |rng: &mut ChaCha8Rng| rng.random_range(0..=2usize);
    let npcs = (0..n(rng))
        .map(|_| NpcObs {
            volume: pick(rng),
            operation: pick(rng),
            speed: pick(rng),
            distance: pick(rng),
        })
        .collect();
    let pedestrians = (0..n(rng))
        .map(|_| PedestrianObs {
            volume: pick(rng),
            operation: pick(rng),
            distance: pick(rng),
        })
        .collect();
    let statics = (0..n(rng))
        .map(|_| StaticObs {
            volume: pick(rng),
            distance: pick(rng),
        })
        .collect();
    let mut s = Scene {
        operation: pick(rng),
        speed: pick(rng),
        rain: pick(rng),
        fog: pick(rng),
        wetness: pick(rng),
        time_of_day: pick(rng),
        npcs,
        pedestrians,
        statics,
        traffic_light: pick(rng),
        sidewalk: pick(rng),
    };
    s.normalize();
    s
}

fn npc_same(a: &NpcObs, b: &NpcObs) -> i64 {
    [a.volume == b.volume, a.operation == b.operation, a.speed == b.speed, a.distance == b.distance]
        .iter()
        .filter(|x| **x)
        .count() as i64
}

fn ped_same(a: &PedestrianObs, b: &PedestrianObs) -> i64 {
    [a.volume == b.volume, a.operation == b.operation, a.distance == b.distance]
        .iter()
        .filter(|x| **x)
        .count() as i64
}

fn static_same(a: &StaticObs, b: &StaticObs) -> i64 {
    [a.volume == b.volume, a.distance == b.distance].iter().filter(|x| **x).count() as i64
}

/// Obstacle list score: enumerates every assignment of the smaller list's
/// items (the second list on equal counts) to the other list's items.
fn list_reference<T: PartialEq>(a: &[T], b: &[T], same: fn(&T, &T) -> i64, fields: i64) -> Fraction {
    if a == b {
        return Fraction::from_integer(1);
    }
    let total = (a.len() + b.len()) as i64;
    if total == 0 {
        return Fraction::from_integer(0);
    }
    let (outer, inner) = if b.len() <= a.len() { (b, a) } else { (a, b) };
    if inner.is_empty() || outer.is_empty() {
        return Fraction::from_integer(0);
    }
    let mut best = Fraction::from_integer(0);
    let combos = inner.len().pow(outer.len() as u32);
    for code in 0..combos {
        let mut c = code;
        let mut sum = Fraction::from_integer(0);
        for o in outer {
            sum += Fraction::new(same(o, &inner[c % inner.len()]), fields);
            c /= inner.len();
        }
        best = best.max(sum);
    }
    best / Fraction::from_integer(total)
}

fn scene_reference(a: &Scene, b: &Scene) -> Fraction {
    let flags = [
        a.operation == b.operation,
        a.speed == b.speed,
        a.rain == b.rain,
        a.fog == b.fog,
        a.wetness == b.wetness,
        a.time_of_day == b.time_of_day,
        a.traffic_light == b.traffic_light,
        a.sidewalk == b.sidewalk,
    ];
    let plain = flags.iter().filter(|x| **x).count() as i64;
    let sum = Fraction::from_integer(plain)
        + list_reference(&a.npcs, &b.npcs, npc_same, 4)
        + list_reference(&a.pedestrians, &b.pedestrians, ped_same, 3)
        + list_reference(&a.statics, &b.statics, static_same, 2);
    sum / Fraction::from_integer(11)
}

/// Every alignment: `a` shifted right or left by every offset, averaged over the full length.
fn scenario_reference(a: &[Scene], b: &[Scene]) -> Fraction {
    let n = a.len() as i64;
    let mut best = Fraction::from_integer(0);
    for (x, y) in [(a, b), (b, a)] {
        for offset in 0..x.len() {
            let sum = (0..x.len() - offset)
                .map(|i| scene_reference(&x[i], &y[i + offset]))
                .fold(Fraction::from_integer(0), |acc, v| acc + v);
            best = best.max(sum / Fraction::from_integer(n));
        }
    }
    best
}

fn similarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51a);
    for k in 0..50 {
        let a: Vec<Scene> = (0..6).map(|_| random_scene(&mut rng)).collect();
        let b: Vec<Scene> = (0..6).map(|_| random_scene(&mut rng)).collect();
        let got = scenario_similarity(&a, &b).map_err(|e| e.to_string())?;
        let want = scenario_reference(&a, &b);
        ensure(got == want, || format!("pair {k}: {got} vs {want}"))?;
        let own = scenario_similarity(&a, &a).map_err(|e| e.to_string())?;
        ensure(own == Ratio::from_integer(1), || format!("pair {k}: self similarity {own}"))?;
    }
    let x = Scene {
        operation: Operation::Cruise,
        speed: SpeedBucket::Slow,
        rain: LevelBucket::None,
        fog: LevelBucket::None,
        wetness: LevelBucket::None,
        time_of_day: TimeOfDay::Morning,
        npcs: vec![NpcObs {
            volume: NpcVolume::Small,
            operation: NpcBehavior::Stop,
            speed: SpeedBucket::Zero,
            distance: DistanceBucket::Near,
        }],
        pedestrians: vec![],
        statics: vec![StaticObs {
            volume: StaticVolume::Small,
            distance: DistanceBucket::VeryNear,
        }],
        traffic_light: LightState::None,
        sidewalk: SidewalkState::None,
    };
    let y = Scene {
        operation: Operation::Stop,
        speed: SpeedBucket::Fast,
        rain: LevelBucket::Heavy,
        fog: LevelBucket::Light,
        wetness: LevelBucket::Moderate,
        time_of_day: TimeOfDay::Night,
        npcs: vec![NpcObs {
            volume: NpcVolume::Large,
            operation: NpcBehavior::SwitchLane,
            speed: SpeedBucket::Fast,
            distance: DistanceBucket::VeryFar,
        }],
        pedestrians: vec![PedestrianObs {
            volume: PedestrianVolume::Small,
            operation: PedestrianBehavior::CrossRoad,
            distance: DistanceBucket::Far,
        }],
        statics: vec![StaticObs {
            volume: StaticVolume::Large,
            distance: DistanceBucket::Far,
        }],
        traffic_light: LightState::Red,
        sidewalk: SidewalkState::SlowDown,
    };
    let distinct = scenario_similarity(&vec![x; 6], &vec![y; 6]).map_err(|e| e.to_string())?;
    ensure(distinct == Ratio::from_integer(0), || format!("all-distinct similarity {distinct}"))?;
    Ok("50 random pairs exact, self = 1, all-distinct = 0".into())
}

// ---------------------------------------------------------------- 5: statistics

/// Doubled midrank of each value: 2·#less + #equal + 1.
fn midranks_reference(v: &[f64]) -> Vec<i128> {
    v.iter()
        .map(|a| {
            let less = v.iter().filter(|b| *b < a).count() as i128;
            let equal = v.iter().filter(|b| *b == a).count() as i128;
            2 * less + equal + 1
        })
        .collect()
}

/// Two-sided exact p by listing every choice of the first sample's positions.
fn exact_p_reference(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks_reference(&pooled);
    let (n, total) = (x.len(), pooled.len());
    let centre = (n * (total + 1)) as i128;
    let observed: i128 = ranks[..n].iter().sum();
    let (mut extreme, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let s: i128 = (0..total).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        all += 1;
        if (s - centre).abs() >= (observed - centre).abs() {
            extreme += 1;
        }
    }
    extreme as f64 / all as f64
}

/// Pearson correlation of midranks from pairwise products of differences.
fn rho_reference(x: &[f64], y: &[f64]) -> Option<f64> {
    let (rx, ry) = (midranks_reference(x), midranks_reference(y));
    let (mut num, mut dx, mut dy) = (0i128, 0i128, 0i128);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (a, b) = (rx[i] - rx[j], ry[i] - ry[j]);
            num += a * b;
            dx += a * a;
            dy += b * b;
        }
    }
    (dx != 0 && dy != 0).then(|| (num as f64 / ((dx as f64) * (dy as f64)).sqrt()).clamp(-1.0, 1.0))
}

fn statistics() -> Outcome {
    let table = [
        (0.5, Magnitude::Negligible),
        (0.4441, Magnitude::Negligible),
        (0.5559, Magnitude::Negligible),
        (0.556, Magnitude::Small),
        (0.444, Magnitude::Small),
        (0.6379, Magnitude::Small),
        (0.3621, Magnitude::Small),
        (0.638, Magnitude::Medium),
        (0.362, Magnitude::Medium),
        (0.7139, Magnitude::Medium),
        (0.2861, Magnitude::Medium),
        (0.714, Magnitude::Large),
        (0.286, Magnitude::Large),
        (1.0, Magnitude::Large),
        (0.0, Magnitude::Large),
    ];
    for (v, want) in table {
        let got = magnitude(v).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("magnitude({v}) = {got}, want {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x57a7);
    let mut worst_p = 0.0f64;
    let mut samples = 0;
    while samples < 100 {
        let n = rng.random_range(1..=8usize);
        let m = rng.random_range(1..=8usize);
        // A small value range makes ties common.
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(0..6) as f64).collect();
        samples += 1;
        let (mut gt, mut eq) = (0u64, 0u64);
        for a in &x {
            for b in &y {
                gt += u64::from(a > b);
                eq += u64::from(a == b);
            }
        }
        let want = Ratio::new(2 * gt + eq, 2 * (n * m) as u64);
        let got = a12(&x, &y).map_err(|e| e.to_string())?;
        ensure(got == *want.numer() as f64 / *want.denom() as f64, || format!("A12 {got} vs {want}"))?;
        let mw = mann_whitney_u(&x, &y).map_err(|e| e.to_string())?;
        let p_ref = exact_p_reference(&x, &y);
        let p = mw.p_exact.ok_or("exact p unavailable on a small sample")?;
        worst_p = worst_p.max((p - p_ref).abs());
        ensure((p - p_ref).abs() <= 1e-9, || format!("exact p {p} vs {p_ref} for {x:?} {y:?}"))?;
        if n.min(m) < 8 {
            ensure(mw.p == p, || "small samples must report the exact p".into())?;
        }
        if n >= 3 {
            let y2: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            if let Some(want) = rho_reference(&x, &y2) {
                let (got, _) = spearman_rho(&x, &y2).map_err(|e| e.to_string())?;
                ensure(got == want, || format!("rho {got} vs {want} for {x:?} {y2:?}"))?;
            }
        }
    }
    Ok(format!("{} magnitude boundaries, {samples} samples, worst p gap {worst_p:.1e}", table.len()))
}

// ---------------------------------------------------------------- 6: DQN machinery

/// Smallest hidden pre-activation magnitude over `inputs`, from the flat
/// layout (per layer: row-major weights, then biases).
fn nearest_kink(net: &Mlp, inputs: &[Vec<f64>]) -> f64 {
    let mut nearest = f64::INFINITY;
    for x in inputs {
        let mut act = x.clone();
        let mut at = 0;
        for (l, w) in net.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &net.params[at + o * n_in..at + (o + 1) * n_in];
                    net.params[at + n_in * n_out + o] + row.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            at += n_in * n_out + n_out;
            if l + 2 < net.sizes.len() {
                nearest = z.iter().fold(nearest, |m, v| m.min(v.abs()));
            }
            act = z.iter().map(|v| v.max(0.0)).collect();
        }
    }
    nearest
}

fn dqn_machinery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd9);
    let (mut worst, mut checked, mut redrawn) = (0.0f64, 0, 0);
    while checked < 100 {
        let depth = rng.random_range(1..=3usize);
        let mut sizes = vec![rng.random_range(2..=6usize)];
        for _ in 0..depth {
            sizes.push(rng.random_range(2..=8usize));
        }
        let outputs = rng.random_range(2..=5usize);
        sizes.push(outputs);
        let mut net = Mlp::new(&sizes, &mut rng);
        for p in &mut net.params {
            *p = rng.random_range(-1.0..1.0);
        }
        let inputs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        // ReLU is not differentiable at zero; finite differences straddling a kink are meaningless.
        if nearest_kink(&net, &inputs) < 1e-4 {
            redrawn += 1;
            continue;
        }
        checked += 1;
        let batch: Vec<(&[f64], usize, f64)> = inputs
            .iter()
            .map(|x| (x.as_slice(), rng.random_range(0..outputs), rng.random_range(-2.0..2.0)))
            .collect();
        let err = gradient_check(&net, &batch, 1e-6);
        worst = worst.max(err);
        ensure(err < 1e-4, || format!("gradient relative error {err:e} for {sizes:?}"))?;
    }

    let eps = EpsilonSchedule::default();
    for (observed, want) in [(0, 1.0), (10_000, 0.2), (25_000, 0.2)] {
        ensure(eps.at(observed) == want, || format!("epsilon({observed}) = {}", eps.at(observed)))?;
    }

    let mut memory = ReplayMemory::new(7);
    let item = |i: usize| Transition {
        s: vec![i as f64],
        a: i,
        r: 0.0,
        s_next: vec![],
        terminal: false,
    };
    for i in 0..7 + 12 {
        memory.push(item(i));
    }
    let kept: Vec<usize> = memory.in_order().map(|t| t.a).collect();
    ensure(kept == (12..19).collect::<Vec<_>>(), || format!("replay memory holds {kept:?}"))?;

    let oracle = value_iteration(0.9, 1e-12);
    let mut env = ChainMdp::new(20);
    let mut log = TrainingLog::default();
    let agent = run_training(&mut env, &chain_config(11), &mut log).map_err(|e| e.to_string())?;
    let mut gap = 0.0f64;
    for (s, row) in oracle.iter().enumerate() {
        let q = agent.net.q_values(&ChainMdp::one_hot(s));
        let best = |v: &[f64]| usize::from(v[1] > v[0]);
        ensure(best(&q) == best(row), || format!("chain state {s}: greedy {q:?}, optimal {row:?}"))?;
        for a in 0..2 {
            gap = gap.max((q[a] - row[a]).abs());
        }
    }
    ensure(gap < 0.05, || format!("chain Q gap {gap}"))?;
    Ok(format!("{checked} nets ({redrawn} redrawn near a kink), worst gradient error {worst:.1e}, chain Q gap {gap:.1e}"))
}

// ---------------------------------------------------------------- 7: replay

fn short(seed: u64) -> EnvConfig {
    EnvConfig {
        seed,
        max_decisions: 30,
        ..EnvConfig::default()
    }
}

fn replays_cleanly(log: &ExecutionLog) -> Result<(), String> {
    let parsed = ExecutionLog::parse(&log.to_text()).map_err(|e| e.to_string())?;
    let report = replay(&parsed).map_err(|e| e.to_string())?;
    ensure(report.divergences.is_empty() && report.steps_checked == log.steps.len(), || {
        format!("replay diverged: {report}")
    })
}

fn briefly_trained(seed: u64) -> Result<Agent, String> {
    let cfg = TrainConfig {
        total_states: 300,
        memory_capacity: 200,
        seed,
        ..TrainConfig::default()
    };
    let mut task = DrivingTask::new(short(0)).map_err(|e| e.to_string())?;
    run_training(&mut task, &cfg, &mut TrainingLog::default()).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let mut checked = 0;
    for seed in 0..3 {
        let rs = run_random(&short(seed)).map_err(|e| e.to_string())?;
        replays_cleanly(&rs)?;
        checked += rs.steps.len();
    }
    let agent = briefly_trained(2)?;
    for seed in 0..3 {
        let log = run_policy(&short(seed), &agent.net.mlp, 0.05).map_err(|e| e.to_string())?;
        replays_cleanly(&log)?;
        checked += log.steps.len();
    }
    // Greedy runs until at least 50 committed steps were checked.
    let (mut gs_steps, mut trials, mut seed) = (0, 0, 0);
    while gs_steps < 50 {
        let cfg = EnvConfig {
            seed,
            max_decisions: 50,
            ..EnvConfig::default()
        };
        seed += 1;
        let log = run_greedy(&cfg).map_err(|e| e.to_string())?;
        replays_cleanly(&log)?;
        let mut before = DrivingEnv::new(cfg).map_err(|e| e.to_string())?.world().world_hash();
        for (i, st) in log.steps.iter().enumerate() {
            for t in log.trials.iter().filter(|t| t.step == i) {
                trials += 1;
                ensure(t.restored_hash == before, || format!("greedy step {i}: rollback changed the world"))?;
            }
            before = st.world_hash;
        }
        gs_steps += log.steps.len();
        checked += log.steps.len();
    }
    Ok(format!("{checked} replayed decisions, {gs_steps} greedy steps with {trials} rollbacks"))
}

// ---------------------------------------------------------------- 8: learning effect

const EVAL_RUNS: u64 = 20;
const EVAL_SEED0: u64 = 1000;
/// TTC recorded for a run without any conflict.
const NO_CONFLICT_TTC: f64 = 30.0;

fn learning_effect() -> Outcome {
    let base = EnvConfig::default();
    ensure(base.route == RouteId::R1 && base.preset == WeatherPreset::RainyDay && base.reward_kind == RewardKind::Ttc, || {
        "default environment is not R1 / rainy day / TTC".into()
    })?;
    let cfg = TrainConfig {
        total_states: usize::MAX,
        max_episodes: Some(TRAIN_EPISODES),
        seed: TRAIN_SEED,
        ..TrainConfig::default()
    };
    let mut task = DrivingTask::new(base.clone()).map_err(|e| e.to_string())?;
    let mut log = TrainingLog::default();
    let agent = run_training(&mut task, &cfg, &mut log).map_err(|e| e.to_string())?;
    ensure(log.episodes.len() >= 300, || format!("only {} episodes trained", log.episodes.len()))?;
    let collided = |l: &ExecutionLog| f64::from(u8::from(l.end == Some(Termination::Collision)));
    let ttc = |l: &ExecutionLog| scm(l, RewardKind::Ttc).unwrap_or(NO_CONFLICT_TTC);
    let (mut dqn_c, mut dqn_t, mut rs_c, mut rs_t) = (vec![], vec![], vec![], vec![]);
    for k in 0..EVAL_RUNS {
        let cfg = base.with_seed(EVAL_SEED0 + k);
        let d = run_policy(&cfg, &agent.net.mlp, agent.cfg.epsilon.eval).map_err(|e| e.to_string())?;
        let r = run_random(&cfg).map_err(|e| e.to_string())?;
        dqn_c.push(collided(&d));
        dqn_t.push(ttc(&d));
        rs_c.push(collided(&r));
        rs_t.push(ttc(&r));
    }
    let c = scenforge_core::stats::compare(&dqn_c, &rs_c).map_err(|e| e.to_string())?;
    let t = scenforge_core::stats::compare(&dqn_t, &rs_t).map_err(|e| e.to_string())?;
    let detail = format!(
        "{} episodes; collisions {}/{} vs {}/{}: A12 {:.3} p {:.4}; TTC A12 {:.3} p {:.4}",
        log.episodes.len(),
        dqn_c.iter().sum::<f64>(),
        EVAL_RUNS,
        rs_c.iter().sum::<f64>(),
        EVAL_RUNS,
        c.a12,
        c.p_value,
        t.a12,
        t.p_value
    );
    if c.a12 >= 0.6 && c.p_value < 0.05 && t.a12 <= 0.4 && t.p_value < 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const TRAIN_EPISODES: usize = 1000;
const TRAIN_SEED: u64 = 1;

// ---------------------------------------------------------------- 9: realism

fn realism() -> Outcome {
    let mut logs = Vec::new();
    for seed in 0..8 {
        logs.push(run_random(&EnvConfig::default().with_seed(seed)).map_err(|e| e.to_string())?);
    }
    logs.push(run_greedy(&short(3)).map_err(|e| e.to_string())?);
    let agent = briefly_trained(4)?;
    for seed in 0..4 {
        let cfg = EnvConfig::default().with_seed(100 + seed);
        logs.push(run_policy(&cfg, &agent.net.mlp, 0.05).map_err(|e| e.to_string())?);
    }
    let mut scenarios = 0;
    for (i, log) in logs.iter().enumerate() {
        let r = classify_realism(log);
        ensure(r.ucs == 0 && r.uns == 0 && r.defects.is_empty(), || {
            format!("run {i}: {} unrealistic scenarios, defects {:?}", r.ucs + r.uns, r.defects)
        })?;
        scenarios += r.scenarios();
    }

    // One injected defect per copy of a clean run.
    let clean = logs
        .iter()
        .find(|l| l.samples.len() >= 24 && l.steps.iter().any(|s| s.spawn.is_some()))
        .ok_or("no clean run with spawns and four scenarios")?;
    let mid = clean.samples.len() / 2;
    let spawn_step = clean.steps.iter().position(|s| s.spawn.is_some()).expect("checked above");
    let mut injected = Vec::new();
    let mut utc = clean.clone();
    for s in &mut utc.samples[mid..] {
        s.env.mapped_ts += 3600.0;
    }
    injected.push((Defect::Utc, utc));
    let mut uwc = clean.clone();
    for s in &mut uwc.samples[mid..] {
        s.env.rain += 0.3;
    }
    injected.push((Defect::Uwc, uwc));
    let mut vsd = clean.clone();
    if let Some((_, rec)) = &mut vsd.steps[spawn_step].spawn {
        rec.min_distance = rec.required - 1.0;
    }
    injected.push((Defect::Vsd, vsd));
    let mut oa = clean.clone();
    if let Some((_, rec)) = &mut oa.steps[spawn_step].spawn {
        rec.overlap = 0.5;
    }
    injected.push((Defect::Oa, oa));
    for (kind, log) in &injected {
        let r = classify_realism(log);
        for other in Defect::ALL {
            let want = usize::from(other == *kind);
            ensure(r.defect_count(other) == want, || {
                format!("{kind} injection: {other} fired {} times", r.defect_count(other))
            })?;
        }
        ensure(r.ucs + r.uns == 1, || format!("{kind} injection: {} unrealistic scenarios", r.ucs + r.uns))?;
    }
    Ok(format!("{} runs, {scenarios} scenarios all realistic; 4 injected defects each detected once", logs.len()))
}

// ---------------------------------------------------------------- driver

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("reward formulas", rewards),
        ("constraint validator", constraints),
        ("TTC oracle", ttc_oracle),
        ("scenario similarity", similarity),
        ("statistics", statistics),
        ("DQN machinery", dqn_machinery),
        ("determinism and replay", determinism),
        ("directional learning effect", learning_effect),
        ("realism closure", realism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n} {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
