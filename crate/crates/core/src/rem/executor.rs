use crate::geometry::Pose2;
use crate::msgbus::{topics, Bus, BusError, ChatMessage, Message, PathMsg};
use crate::nlu::{Intent, IntentKind};
use crate::planner::{
    follow, goal_reached, inflate, plan_cells, rotate, FollowConfig, GoalPose, DEFAULT_INFLATION_RADIUS,
    GOAL_TOLERANCE_POS, GOAL_TOLERANCE_YAW,
};
use crate::world_sim::{Cell, OccupancyGrid};

use super::config::{resolve_goal, LocationRegistry, MotionPatternTable, PatternStep};
use super::status::{Branch, ExecEvent, ExecPhase, NavState, NavStatus};
use super::twist::{Twist, TwistLimits};

/// Slack when comparing elapsed time against step boundaries.
const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecConfig {
    pub limits: TwistLimits,
    pub follow: FollowConfig,
    pub tol_pos: f64,
    pub tol_yaw: f64,
    /// Seconds before an active goal times out.
    pub nav_timeout: f64,
    pub inflation_radius: f64,
    /// How far to look for a free cell when the robot sits inside the
    /// inflated margin.
    pub snap_radius: f64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            limits: TwistLimits::default(),
            follow: FollowConfig::default(),
            tol_pos: GOAL_TOLERANCE_POS,
            tol_yaw: GOAL_TOLERANCE_YAW,
            nav_timeout: 120.0,
            inflation_radius: DEFAULT_INFLATION_RADIUS,
            snap_radius: 1.0,
        }
    }
}

/// Which branch ran and, if the command could not be carried out, why.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOutcome {
    pub branch: Branch,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
enum Activity {
    Pattern {
        name: String,
        steps: Vec<PatternStep>,
        interaction: Option<u64>,
        started: f64,
    },
    Goal {
        label: String,
        goal: GoalPose,
        path: Vec<(f64, f64)>,
        interaction: Option<u64>,
        started: f64,
    },
}

impl Activity {
    fn interaction(&self) -> Option<u64> {
        match self {
            Activity::Pattern { interaction, .. } | Activity::Goal { interaction, .. } => *interaction,
        }
    }

    fn branch(&self) -> Branch {
        match self {
            Activity::Pattern { .. } => Branch::MotionPattern,
            Activity::Goal { .. } => Branch::NavGoal,
        }
    }
}

/// Four-way intent dispatcher and the sole publisher on `cmd_vel`. Runs
/// at most one goal or pattern at a time; new actions preempt old ones.
pub struct Executor {
    cfg: ExecConfig,
    registry: LocationRegistry,
    patterns: MotionPatternTable,
    map: Option<OccupancyGrid>,
    active: Option<Activity>,
    last_twist: Option<Twist>,
}

impl Executor {
    pub fn new(cfg: ExecConfig, registry: LocationRegistry, patterns: MotionPatternTable) -> Self {
        Self {
            cfg,
            registry,
            patterns,
            map: None,
            active: None,
            last_twist: None,
        }
    }

    /// Plan on `grid` inflated by the configured radius. Without a map,
    /// goals are approached in a straight line.
    pub fn with_map(mut self, grid: &OccupancyGrid) -> Self {
        self.map = Some(inflate(grid, self.cfg.inflation_radius));
        self
    }

    pub fn config(&self) -> &ExecConfig {
        &self.cfg
    }

    pub fn registry(&self) -> &LocationRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut LocationRegistry {
        &mut self.registry
    }

    pub fn inflated_map(&self) -> Option<&OccupancyGrid> {
        self.map.as_ref()
    }

    pub fn is_idle(&self) -> bool {
        self.active.is_none()
    }

    pub fn last_twist(&self) -> Option<Twist> {
        self.last_twist
    }

    pub fn activity(&self) -> String {
        match &self.active {
            None => "idle".into(),
            Some(Activity::Pattern { name, .. }) => format!("executing pattern {}", name.replace('_', " ")),
            Some(Activity::Goal { label, .. }) => format!("navigating to {}", label.replace('_', " ")),
        }
    }

    fn twist(&mut self, bus: &Bus, t: Twist) -> Result<(), BusError> {
        let t = t.clamped(&self.cfg.limits);
        bus.publish(topics::CMD_VEL, t)?;
        self.last_twist = Some(t);
        Ok(())
    }

    fn event(
        &self,
        bus: &Bus,
        interaction: Option<u64>,
        phase: ExecPhase,
        branch: Branch,
        now: f64,
        detail: Option<String>,
    ) -> Result<(), BusError> {
        bus.publish(
            topics::EXEC_EVENTS,
            Message::ExecEvent(ExecEvent {
                interaction,
                phase,
                branch,
                stamp: now,
                detail,
            }),
        )?;
        Ok(())
    }

    fn nav_status(
        &self,
        bus: &Bus,
        state: NavState,
        label: &str,
        error: Option<f64>,
        interaction: Option<u64>,
        now: f64,
    ) -> Result<(), BusError> {
        bus.publish(
            topics::NAV_STATUS,
            Message::NavStatus(NavStatus {
                state,
                goal_label: label.to_string(),
                final_pose_error: error,
                interaction,
                stamp: now,
            }),
        )?;
        Ok(())
    }

    fn feedback(&self, bus: &Bus, text: String) -> Result<(), BusError> {
        bus.publish(topics::CHAT_OUT, ChatMessage::new(text))?;
        Ok(())
    }

    /// End the active action, if any, without publishing a Twist.
    fn cancel(&mut self, now: f64, pose: Option<Pose2>, bus: &Bus, reason: &str) -> Result<bool, BusError> {
        let Some(act) = self.active.take() else {
            return Ok(false);
        };
        if let Activity::Goal {
            label,
            goal,
            interaction,
            ..
        } = &act
        {
            let err = pose.map(|p| goal.position_error(&p));
            self.nav_status(bus, NavState::Aborted, label, err, *interaction, now)?;
        }
        self.event(
            bus,
            act.interaction(),
            ExecPhase::Ended,
            act.branch(),
            now,
            Some(reason.into()),
        )?;
        Ok(true)
    }

    /// Cancel everything and publish one zero Twist.
    pub fn stop(&mut self, now: f64, bus: &Bus) -> Result<(), BusError> {
        self.cancel(now, None, bus, "stopped")?;
        self.twist(bus, Twist::zero())
    }

    fn stop_for(&mut self, interaction: Option<u64>, now: f64, pose: Pose2, bus: &Bus) -> Result<(), BusError> {
        self.cancel(now, Some(pose), bus, "stopped")?;
        self.event(
            bus,
            interaction,
            ExecPhase::Started,
            Branch::Stop,
            now,
            Some("stopping".into()),
        )?;
        self.twist(bus, Twist::zero())?;
        self.event(
            bus,
            interaction,
            ExecPhase::Ended,
            Branch::Stop,
            now,
            Some("stopped".into()),
        )
    }

    /// Preemption starts with a zero Twist.
    fn preempt(&mut self, now: f64, pose: Pose2, bus: &Bus) -> Result<(), BusError> {
        if self.cancel(now, Some(pose), bus, "preempted")? {
            self.twist(bus, Twist::zero())?;
        }
        Ok(())
    }

    pub fn dispatch(
        &mut self,
        intent: &Intent,
        interaction: Option<u64>,
        now: f64,
        pose: Pose2,
        bus: &Bus,
    ) -> Result<DispatchOutcome, BusError> {
        let ok = |branch| DispatchOutcome { branch, error: None };
        match &intent.kind {
            IntentKind::Query { .. } => Ok(ok(Branch::Query)),
            IntentKind::Stop | IntentKind::Unknown => {
                self.stop_for(interaction, now, pose, bus)?;
                Ok(ok(Branch::Stop))
            }
            IntentKind::MotionPattern { pattern } => {
                let Some(p) = self.patterns.get(pattern).cloned() else {
                    let msg = format!("Unknown motion pattern '{pattern}'.");
                    return self.refuse(Branch::MotionPattern, msg, interaction, now, pose, bus);
                };
                self.preempt(now, pose, bus)?;
                self.event(
                    bus,
                    interaction,
                    ExecPhase::Started,
                    Branch::MotionPattern,
                    now,
                    Some(format!("executing pattern {}", p.name.replace('_', " "))),
                )?;
                self.active = Some(Activity::Pattern {
                    name: p.name,
                    steps: p.steps,
                    interaction,
                    started: now,
                });
                self.tick(now, pose, bus)?;
                Ok(ok(Branch::MotionPattern))
            }
            IntentKind::NavGoal { destination, .. } => {
                let goal = match resolve_goal(destination, &self.registry) {
                    Ok(g) => g,
                    Err(e) => {
                        let msg = format!("Cannot navigate: {e}.");
                        return self.refuse(Branch::NavGoal, msg, interaction, now, pose, bus);
                    }
                };
                self.start_goal(destination, goal, interaction, now, pose, bus)
            }
        }
    }

    fn refuse(
        &mut self,
        branch: Branch,
        msg: String,
        interaction: Option<u64>,
        now: f64,
        pose: Pose2,
        bus: &Bus,
    ) -> Result<DispatchOutcome, BusError> {
        self.stop_for(interaction, now, pose, bus)?;
        self.feedback(bus, msg.clone())?;
        Ok(DispatchOutcome {
            branch,
            error: Some(msg),
        })
    }

    fn start_goal(
        &mut self,
        label: &str,
        goal: GoalPose,
        interaction: Option<u64>,
        now: f64,
        pose: Pose2,
        bus: &Bus,
    ) -> Result<DispatchOutcome, BusError> {
        self.preempt(now, pose, bus)?;
        let detail = format!("navigating to {}", label.replace('_', " "));
        self.event(bus, interaction, ExecPhase::Started, Branch::NavGoal, now, Some(detail))?;
        self.nav_status(bus, NavState::Active, label, None, interaction, now)?;
        let path = match self.route(pose, goal) {
            Ok(p) => p,
            Err(reason) => {
                let err = goal.position_error(&pose);
                self.nav_status(bus, NavState::Aborted, label, Some(err), interaction, now)?;
                self.twist(bus, Twist::zero())?;
                self.event(
                    bus,
                    interaction,
                    ExecPhase::Ended,
                    Branch::NavGoal,
                    now,
                    Some("aborted".into()),
                )?;
                let msg = format!("Cannot reach {}: {reason}.", label.replace('_', " "));
                self.feedback(bus, msg.clone())?;
                return Ok(DispatchOutcome {
                    branch: Branch::NavGoal,
                    error: Some(msg),
                });
            }
        };
        bus.publish(
            topics::NAV_PATH,
            Message::Path(PathMsg {
                goal_label: label.to_string(),
                waypoints: path.iter().map(|p| [p.0, p.1]).collect(),
            }),
        )?;
        self.active = Some(Activity::Goal {
            label: label.to_string(),
            goal,
            path,
            interaction,
            started: now,
        });
        self.tick(now, pose, bus)?;
        Ok(DispatchOutcome {
            branch: Branch::NavGoal,
            error: None,
        })
    }

    /// Waypoints from the current pose to the goal; the last one is the
    /// exact goal position.
    fn route(&self, pose: Pose2, goal: GoalPose) -> Result<Vec<(f64, f64)>, String> {
        let Some(map) = &self.map else {
            return Ok(vec![(pose.x, pose.y), (goal.x, goal.y)]);
        };
        let start = nearest_free(map, pose.x, pose.y, self.cfg.snap_radius)
            .ok_or_else(|| "the robot is not near any free cell".to_string())?;
        let target =
            nearest_free(map, goal.x, goal.y, self.cfg.tol_pos).ok_or_else(|| "the goal is blocked".to_string())?;
        let path = plan_cells(map, start, target).ok_or_else(|| "no path found".to_string())?;
        let mut waypoints = path.waypoints;
        *waypoints.last_mut().expect("paths are non-empty") = (goal.x, goal.y);
        Ok(waypoints)
    }

    /// Advance the active action by one control step.
    pub fn tick(&mut self, now: f64, pose: Pose2, bus: &Bus) -> Result<(), BusError> {
        let Some(act) = self.active.clone() else {
            return Ok(());
        };
        match act {
            Activity::Pattern {
                steps,
                interaction,
                started,
                ..
            } => {
                let elapsed = now - started;
                let mut end = 0.0;
                let step = steps.iter().find(|s| {
                    end += s.duration;
                    elapsed + TIME_EPS < end
                });
                match step {
                    Some(s) => self.twist(bus, s.twist()),
                    None => {
                        self.active = None;
                        self.twist(bus, Twist::zero())?;
                        let d = Some("completed".into());
                        self.event(bus, interaction, ExecPhase::Ended, Branch::MotionPattern, now, d)
                    }
                }
            }
            Activity::Goal {
                label,
                goal,
                path,
                interaction,
                started,
            } => {
                let err = goal.position_error(&pose);
                let terminal = if goal_reached(&pose, &goal, self.cfg.tol_pos, self.cfg.tol_yaw) {
                    Some(NavState::Succeeded)
                } else if now - started > self.cfg.nav_timeout + TIME_EPS {
                    Some(NavState::TimedOut)
                } else {
                    None
                };
                if let Some(state) = terminal {
                    self.active = None;
                    self.twist(bus, Twist::zero())?;
                    self.nav_status(bus, state, &label, Some(err), interaction, now)?;
                    let detail = if state == NavState::Succeeded {
                        "succeeded"
                    } else {
                        "timed_out"
                    };
                    self.event(
                        bus,
                        interaction,
                        ExecPhase::Ended,
                        Branch::NavGoal,
                        now,
                        Some(detail.into()),
                    )?;
                    if state == NavState::TimedOut {
                        self.feedback(
                            bus,
                            format!(
                                "Gave up on {} after {:.0} s.",
                                label.replace('_', " "),
                                self.cfg.nav_timeout
                            ),
                        )?;
                    }
                    return Ok(());
                }
                let cmd = if err <= self.cfg.tol_pos {
                    rotate(goal.yaw_error(&pose), &self.cfg.follow)
                } else {
                    follow(&path, &pose, &self.cfg.follow)
                };
                self.twist(bus, cmd)
            }
        }
    }
}

/// Closest free cell to (x, y) whose center lies within `radius`.
pub fn nearest_free(grid: &OccupancyGrid, x: f64, y: f64, radius: f64) -> Option<Cell> {
    if let Some(c) = grid.world_to_cell(x, y) {
        if !grid.is_occupied(c) {
            return Some(c);
        }
    }
    let (cx, cy) = grid.world_to_cell_signed(x, y);
    let reach = (radius / grid.resolution()).ceil() as i64 + 1;
    let mut best: Option<(f64, Cell)> = None;
    for iy in cy - reach..=cy + reach {
        for ix in cx - reach..=cx + reach {
            let Some(c) = grid.cell_checked(ix, iy) else { continue };
            if grid.is_occupied(c) {
                continue;
            }
            let (px, py) = grid.cell_center(c);
            let d = (px - x).hypot(py - y);
            if d <= radius && best.is_none_or(|b| d < b.0) {
                best = Some((d, c));
            }
        }
    }
    best.map(|b| b.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msgbus::{FakeClock, Subscription};
    use crate::rem::Location;
    use crate::world_sim::WorldModel;
    use std::sync::Arc;

    fn executor() -> Executor {
        let mut reg = LocationRegistry::default();
        reg.insert(Location::from_yaw("near", 5.0, 5.0, 0.0));
        reg.insert(Location::from_yaw("far", 8.0, 5.0, 0.0));
        let patterns = MotionPatternTable::parse(crate::assets::PATTERNS, &TwistLimits::default()).unwrap();
        Executor::new(ExecConfig::default(), reg, patterns)
    }

    fn twists(sub: &Subscription) -> Vec<Twist> {
        sub.drain()
            .iter()
            .filter_map(|e| e.payload.as_twist().copied())
            .collect()
    }

    #[test]
    fn forward_pattern_emits_forty_then_zero() {
        let clock = FakeClock::new(0.0);
        let bus = Bus::with_clock(Arc::new(clock.clone()));
        let sub = bus.subscribe(topics::CMD_VEL).unwrap();
        let mut ex = executor();
        let pose = Pose2::default();
        ex.dispatch(&Intent::motion("forward", 1.0), Some(1), 0.0, pose, &bus)
            .unwrap();
        for k in 1..=45 {
            ex.tick(k as f64 * 0.05, pose, &bus).unwrap();
        }
        let t = twists(&sub);
        assert_eq!(t.iter().filter(|t| t.v_x() == 0.5).count(), 40);
        assert!(t[40].is_zero());
        assert_eq!(t.len(), 41);
        assert!(ex.is_idle());
    }

    #[test]
    fn stop_preempts_pattern() {
        let bus = Bus::new();
        let sub = bus.subscribe(topics::CMD_VEL).unwrap();
        let mut ex = executor();
        let pose = Pose2::default();
        ex.dispatch(&Intent::motion("forward", 1.0), Some(1), 0.0, pose, &bus)
            .unwrap();
        for k in 1..=10 {
            ex.tick(k as f64 * 0.05, pose, &bus).unwrap();
        }
        sub.drain();
        ex.dispatch(&Intent::stop(1.0), Some(2), 0.5, pose, &bus).unwrap();
        ex.tick(0.55, pose, &bus).unwrap();
        let t = twists(&sub);
        assert_eq!(t, vec![Twist::zero()]);
        ex.dispatch(&Intent::unknown(), Some(3), 0.6, pose, &bus).unwrap();
        assert_eq!(twists(&sub), vec![Twist::zero()]);
    }

    #[test]
    fn rotate_in_place_has_no_linear_motion() {
        let bus = Bus::new();
        let sub = bus.subscribe(topics::CMD_VEL).unwrap();
        let mut ex = executor();
        ex.dispatch(
            &Intent::motion("rotate_in_place", 1.0),
            None,
            0.0,
            Pose2::default(),
            &bus,
        )
        .unwrap();
        let t = twists(&sub);
        assert_eq!(t[0].v_x(), 0.0);
        assert_ne!(t[0].w_z(), 0.0);
    }

    #[test]
    fn unknown_destination_stops_with_feedback() {
        let bus = Bus::new();
        let out = bus.subscribe(topics::CHAT_OUT).unwrap();
        let vel = bus.subscribe(topics::CMD_VEL).unwrap();
        let mut ex = executor();
        let o = ex
            .dispatch(
                &Intent::nav("atlantis", false, 1.0),
                Some(1),
                0.0,
                Pose2::default(),
                &bus,
            )
            .unwrap();
        assert!(o.error.is_some());
        assert_eq!(twists(&vel), vec![Twist::zero()]);
        assert!(out
            .try_recv()
            .unwrap()
            .payload
            .as_chat()
            .unwrap()
            .text
            .contains("atlantis"));
    }

    #[test]
    fn goal_at_current_pose_succeeds_immediately() {
        let bus = Bus::new();
        let status = bus.subscribe(topics::NAV_STATUS).unwrap();
        let mut ex = executor();
        ex.dispatch(
            &Intent::nav("near", true, 1.0),
            Some(1),
            0.0,
            Pose2::new(5.0, 5.0, 0.0),
            &bus,
        )
        .unwrap();
        let last = status.drain().pop().unwrap();
        match &*last.payload {
            Message::NavStatus(ns) => {
                assert_eq!(ns.state, NavState::Succeeded);
                assert_eq!(ns.final_pose_error, Some(0.0));
            }
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn closed_room_aborts() {
        let rows: Vec<String> = (0..40)
            .map(|r| {
                (0..40)
                    .map(|c| {
                        if (r == 10 || r == 30) && (10..=30).contains(&c)
                            || (c == 10 || c == 30) && (10..=30).contains(&r)
                        {
                            '#'
                        } else {
                            '.'
                        }
                    })
                    .collect()
            })
            .collect();
        let grid = OccupancyGrid::from_rows(&rows, 0.25, (0.0, 0.0)).unwrap();
        let bus = Bus::new();
        let status = bus.subscribe(topics::NAV_STATUS).unwrap();
        let mut ex = executor().with_map(&grid);
        let o = ex
            .dispatch(
                &Intent::nav("near", true, 1.0),
                Some(1),
                0.0,
                Pose2::new(1.0, 1.0, 0.0),
                &bus,
            )
            .unwrap();
        assert!(o.error.is_some());
        let states: Vec<NavState> = status
            .drain()
            .iter()
            .filter_map(|e| match &*e.payload {
                Message::NavStatus(ns) => Some(ns.state),
                _ => None,
            })
            .collect();
        assert_eq!(states, vec![NavState::Active, NavState::Aborted]);
    }

    #[test]
    fn reaches_goal_in_open_world() {
        let grid = OccupancyGrid::new(60, 60, 0.2, (0.0, 0.0));
        let mut world = WorldModel::new("open", grid.clone(), Pose2::new(3.0, 5.0, 1.0));
        let bus = Bus::new();
        let status = bus.subscribe(topics::NAV_STATUS).unwrap();
        let mut ex = executor().with_map(&grid);
        ex.dispatch(&Intent::nav("far", true, 1.0), Some(1), 0.0, world.pose(), &bus)
            .unwrap();
        let mut t = 0.0;
        while !ex.is_idle() && t < 60.0 {
            world.step(&ex.last_twist().unwrap(), 0.05);
            t += 0.05;
            ex.tick(t, world.pose(), &bus).unwrap();
        }
        let last = status.drain().pop().unwrap();
        match &*last.payload {
            Message::NavStatus(ns) => {
                assert_eq!(ns.state, NavState::Succeeded);
                assert!(ns.final_pose_error.unwrap() <= 0.3);
            }
            m => panic!("{m:?}"),
        }
    }
}
