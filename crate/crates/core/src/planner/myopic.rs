use super::{most_visited, ActionStats, PlanError, PlannerDecision, WorldInterface};
use crate::acquisition::{action_reward, RewardFn};
use crate::gp::GpBelief;
use crate::world::Pose;

/// Greedy one-step choice: the feasible action with the largest summed reward; ties go to the lowest index.
pub fn plan_myopic<W: WorldInterface + ?Sized, R: RewardFn + ?Sized>(
    belief: &GpBelief,
    pose: &Pose,
    world: &W,
    reward: &R,
) -> Result<PlannerDecision, PlanError> {
    let actions = world.feasible_actions(pose);
    if actions.is_empty() {
        return Err(PlanError::Trapped);
    }
    let time = world.sample_time(0);
    let root_stats = actions
        .iter()
        .map(|a| {
            Ok(ActionStats {
                action_id: a.id,
                visits: 1,
                value: action_reward(belief, a, time, reward)?,
            })
        })
        .collect::<Result<Vec<_>, PlanError>>()?;
    let best = most_visited(&root_stats);
    Ok(PlannerDecision {
        action: actions[best].clone(),
        root_stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{ucb_from_moments, PointFn, Ucb};
    use crate::gp::{Kernel, Posterior};
    use crate::planner::{FixedActions, MapWorld};
    use crate::world::{ActionPrimitive, ObstacleMap, PrimitiveKind, PrimitiveSet, Rect};

    #[test]
    fn single_action_and_constant_reward() {
        let b = GpBelief::new(Kernel::squared_exponential(1.0, 1.0), 0.1, 2).unwrap();
        let one = ActionPrimitive::new(0, PrimitiveKind::Stay, Pose::new(2.0, 2.0, 0.0), 0.0, 0.5);
        let d = plan_myopic(&b, &Pose::new(2.0, 2.0, 0.0), &FixedActions(vec![one.clone()]), &Ucb { beta: 1.0 }).unwrap();
        assert_eq!(d.action, one);

        let map = ObstacleMap::empty(Rect::new(0.0, 0.0, 10.0, 10.0));
        let set = PrimitiveSet::dubins_default(1.5, 0.5);
        let constant = PointFn(|_: &[f64], _: Posterior| 2.5);
        let d = plan_myopic(&b, &Pose::new(5.0, 5.0, 0.0), &MapWorld::new(&map, &set), &constant).unwrap();
        assert_eq!(d.action.id, 0);
    }

    #[test]
    fn matches_exhaustive_ucb() {
        // one high-mean lobe north-east of the vehicle
        let b = GpBelief::new(Kernel::squared_exponential(1.0, 4.0), 0.05, 2)
            .unwrap()
            .condition(&[[6.2, 6.0], [6.5, 6.4], [3.0, 3.0]], &[3.0, 2.8, -0.5])
            .unwrap();
        let map = ObstacleMap::empty(Rect::new(0.0, 0.0, 10.0, 10.0));
        let set = PrimitiveSet::dubins_default(1.5, 0.5);
        let pose = Pose::new(5.0, 5.0, 0.7);
        let ucb = Ucb { beta: 2.0 };
        let d = plan_myopic(&b, &pose, &MapWorld::new(&map, &set), &ucb).unwrap();
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for a in set.generate(&pose) {
            let s: f64 = a
                .samples()
                .iter()
                .map(|x| {
                    let p = b.posterior_at(x).unwrap();
                    ucb_from_moments(p.mean, p.variance, 2.0)
                })
                .sum();
            if s > best.0 {
                best = (s, a.id);
            }
        }
        assert_eq!(d.action.id, best.1);
    }
}
