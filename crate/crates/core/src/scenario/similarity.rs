//! Scenario similarity with exact rational arithmetic.

use super::scene::{Named, Obstacle, Scene};
use crate::error::{Error, Result};
use num_rational::Ratio;

pub type Fraction = Ratio<i64>;

/// Share of tuple fields with identical values.
pub fn count_identical_values<T: Obstacle>(a: &T, b: &T) -> Fraction {
    let fa = a.fields();
    let fb = b.fields();
    let same = fa.iter().zip(&fb).filter(|(x, y)| x == y).count();
    Fraction::new(same as i64, fa.len() as i64)
}

/// Iterates the smaller list (list `b` on equal counts) and, for each
/// element, takes the best match in the other list. The sum is divided by
/// the combined obstacle count.
pub fn obstacle_similarity<T: Obstacle>(a: &[T], b: &[T]) -> Fraction {
    let (na, nb) = (a.len(), b.len());
    if na + nb == 0 {
        return Fraction::from_integer(0);
    }
    let (outer, inner) = if nb <= na { (b, a) } else { (a, b) };
    let mut total = Fraction::from_integer(0);
    for o in outer {
        let mut best = Fraction::from_integer(0);
        for i in inner {
            best = best.max(count_identical_values(o, i));
        }
        total += best;
    }
    total / Fraction::from_integer((na + nb) as i64)
}

fn eq_score<T: PartialEq>(a: &T, b: &T) -> Fraction {
    Fraction::from_integer(i64::from(a == b))
}

fn list_score<T: Obstacle>(a: &[T], b: &[T]) -> Fraction {
    if a == b {
        Fraction::from_integer(1)
    } else {
        obstacle_similarity(a, b)
    }
}

pub fn scene_similarity(a: &Scene, b: &Scene) -> Fraction {
    let sum = eq_score(&a.operation.name(), &b.operation.name())
        + eq_score(&a.speed, &b.speed)
        + eq_score(&a.rain, &b.rain)
        + eq_score(&a.fog, &b.fog)
        + eq_score(&a.wetness, &b.wetness)
        + eq_score(&a.time_of_day, &b.time_of_day)
        + list_score(&a.npcs, &b.npcs)
        + list_score(&a.pedestrians, &b.pedestrians)
        + list_score(&a.statics, &b.statics)
        + eq_score(&a.traffic_light, &b.traffic_light)
        + eq_score(&a.sidewalk, &b.sidewalk);
    sum / Fraction::from_integer(Scene::PROPERTY_COUNT as i64)
}

/// Best average alignment over every shift in both directions.
pub fn scenario_similarity(a: &[Scene], b: &[Scene]) -> Result<Fraction> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Scenario(format!(
            "scenario lengths differ or are empty: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let denom = Fraction::from_integer(n as i64);
    let mut best = Fraction::from_integer(0);
    for interval in 0..n {
        let mut ab = Fraction::from_integer(0);
        let mut ba = Fraction::from_integer(0);
        for i in 0..n - interval {
            ab += scene_similarity(&a[i], &b[i + interval]);
            ba += scene_similarity(&b[i], &a[i + interval]);
        }
        best = best.max(ab / denom).max(ba / denom);
    }
    Ok(best)
}

pub fn to_f64(r: Fraction) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
